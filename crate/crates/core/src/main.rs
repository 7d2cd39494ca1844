fn main() {
    std::process::exit(ndkorn::cli::run(std::env::args_os()));
}
