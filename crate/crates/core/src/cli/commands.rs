//! The five campaigns. Each one walks domains x resolutions in config
//! order; seed loops run on the rayon pool and are collected in seed
//! order before rows are appended.

use std::sync::Arc;
use std::time::Instant;

use rayon::prelude::*;

use super::config::ExperimentConfig;
use super::report::{Cell, RunReport};
use super::CliError;
use crate::analysis::{
    compute_constants, dump_counterexample, harmonic_dimension, korn_check, main_lemma_chain_with, sample_tensor,
    ConstantsDetail, KornMode, KornReport, MIN_GAP_RATIO,
};
use crate::domain::{make_domain, BcMode, DomainKind, DomainMask};
use crate::error::Error;
use crate::field::{random_field, random_vector, FormField};
use crate::solvers::EigenOptions;

/// Korn bounds: the ratio may exceed `sqrt(2)` by `KORN_RATIO_SLACK`, the
/// relative identity residual may not exceed `KORN_IDENTITY_TOL`.
pub const KORN_RATIO_SLACK: f64 = 1e-10;
pub const KORN_IDENTITY_TOL: f64 = 1e-13;
/// Relative change between the two finest levels below which a constant
/// counts as converged.
pub const CONVERGENCE_FLAG: f64 = 0.05;

pub fn build_mask(cfg: &ExperimentConfig, kind: DomainKind, n: usize) -> Result<Arc<DomainMask>, CliError> {
    let h = 1.0 / (n - 1) as f64;
    Ok(Arc::new(make_domain(kind, &cfg.geometry, &vec![n; cfg.dim], h)?))
}

fn eigen_options(cfg: &ExperimentConfig) -> EigenOptions {
    EigenOptions { tol: cfg.eig_tol, ..EigenOptions::default() }
}

fn tag(kind: DomainKind, n: usize) -> String {
    format!("{}/{n}", kind.name())
}

fn note_constants(report: &mut RunReport, kind: DomainKind, n: usize, detail: &ConstantsDetail) {
    let t = tag(kind, n);
    let spectra = [
        ("c_p", Some(&detail.poincare)),
        ("c_m", Some(&detail.maxwell)),
        ("c_sharp", detail.sharp.as_ref().map(|s| &s.spectrum)),
    ];
    for (name, spec) in spectra {
        let Some(spec) = spec else { continue };
        if !spec.converged {
            report
                .numerical_failures
                .push(format!("{t}: {name} eigen solve not converged (residual {:e})", spec.residual));
        }
        if spec.kernel_dimension > 0 && !spec.reliable {
            report.warnings.push(format!("{t}: {name} kernel count unreliable (gap ratio {:e})", spec.gap_ratio));
        }
    }
}

pub fn cmd_constants(cfg: &ExperimentConfig) -> Result<RunReport, CliError> {
    let mut report = RunReport::new(
        "constants",
        cfg,
        &[
            "domain",
            "dim",
            "resolution",
            "h",
            "bc_mode",
            "c_p",
            "c_m",
            "c_hat",
            "harmonic_1",
            "gap_p",
            "gap_m",
            "converged",
        ],
    );
    let opts = eigen_options(cfg);
    for &kind in &cfg.domains {
        for &n in &cfg.resolutions {
            let start = Instant::now();
            let mask = build_mask(cfg, kind, n)?;
            let detail = compute_constants(&mask, cfg.bc_mode, &opts, false)?;
            note_constants(&mut report, kind, n, &detail);
            let r = &detail.record;
            report.push_row(vec![
                kind.name().into(),
                cfg.dim.into(),
                n.into(),
                r.h.into(),
                r.bc_mode.as_str().into(),
                r.c_p.into(),
                r.c_m.into(),
                r.c_hat.into(),
                r.harmonic_one_forms().into(),
                r.gap_p.into(),
                r.gap_m.into(),
                r.converged.into(),
            ]);
            report.constants.push(detail.record);
            report.timings.insert(tag(kind, n), start.elapsed().as_secs_f64());
        }
    }
    Ok(report)
}

const VERIFY_COLUMNS: [&str; 9] = ["domain", "dim", "resolution", "check", "family", "seed", "ratio", "passed", "dump"];

pub fn cmd_verify(cfg: &ExperimentConfig) -> Result<RunReport, CliError> {
    let mut report = RunReport::new("verify", cfg, &VERIFY_COLUMNS);
    let opts = eigen_options(cfg);
    for &kind in &cfg.domains {
        for &n in &cfg.resolutions {
            let start = Instant::now();
            let mask = build_mask(cfg, kind, n)?;
            let detail = compute_constants(&mask, cfg.bc_mode, &opts, cfg.sharp)?;
            note_constants(&mut report, kind, n, &detail);
            let record = detail.record.clone();
            if record.harmonic_one_forms() > 0 {
                return Err(Error::HarmonicFormsPresent(record.harmonic_one_forms()).into());
            }
            let base = |check: &str| -> Vec<Cell> { vec![kind.name().into(), cfg.dim.into(), n.into(), check.into()] };

            if let Some(sharp) = &detail.sharp {
                let ok = sharp.c_sharp <= record.c_hat + cfg.chain_tol;
                let mut row = base("sharp_le_c_hat");
                row.extend([Cell::Empty, Cell::Empty, (sharp.c_sharp / record.c_hat).into(), ok.into(), Cell::Empty]);
                report.push_row(row);
                report.record_check(ok);
                report.worst("sharp_over_c_hat", sharp.c_sharp / record.c_hat);

                if sharp.gradient_quotient.is_nan() {
                    report
                        .warnings
                        .push(format!("{}: no vertex deep enough for the gradient test field", tag(kind, n)));
                } else {
                    let ok = sharp.gradient_quotient <= 1.0 + cfg.chain_tol
                        && sharp.lambda_min <= sharp.gradient_quotient * (1.0 + cfg.chain_tol);
                    let mut row = base("gradient_quotient");
                    row.extend([Cell::Empty, Cell::Empty, sharp.gradient_quotient.into(), ok.into(), Cell::Empty]);
                    report.push_row(row);
                    report.record_check(ok);
                    report.worst("gradient_quotient", sharp.gradient_quotient);
                }
            }

            for &family in &cfg.families {
                let results: Vec<_> = cfg
                    .seeds
                    .par_iter()
                    .map(|&seed| -> Result<_, CliError> {
                        let t = sample_tensor(&mask, cfg.bc_mode, family, seed)?;
                        let r = main_lemma_chain_with(&t, &record, cfg.chain_tol, cfg.cg_tol)?;
                        let ok = r.passed && r.upper_bound_ok;
                        let dump = if ok {
                            None
                        } else {
                            std::fs::create_dir_all(&cfg.dump_dir).map_err(Error::from)?;
                            let name = format!("{}-{n}-{}-{seed}", kind.name(), family.name());
                            Some(dump_counterexample(&t, &r, &record, &cfg.dump_dir, &name)?.display().to_string())
                        };
                        Ok((seed, r, ok, dump))
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                for (seed, r, ok, dump) in results {
                    let mut row = base("chain");
                    row.extend([
                        family.name().into(),
                        seed.into(),
                        r.final_ratio.into(),
                        ok.into(),
                        dump.clone().into(),
                    ]);
                    report.push_row(row);
                    report.record_check(ok);
                    report.worst("chain_final", r.final_ratio);
                    for a in &r.assertions {
                        report.worst(&format!("chain_{}", a.id), a.ratio);
                    }
                    if r.zero_field {
                        report.warnings.push(format!(
                            "{}: {} seed {seed} sampled the zero field",
                            tag(kind, n),
                            family.name()
                        ));
                    }
                    if let Some(p) = dump {
                        report.counterexamples.push(p);
                    }
                }
            }
            report.constants.push(record);
            report.timings.insert(tag(kind, n), start.elapsed().as_secs_f64());
        }
    }
    Ok(report)
}

fn korn_fields(mask: &Arc<DomainMask>, seed: u64) -> crate::error::Result<Vec<FormField>> {
    let n = mask.dim() as u64;
    (0..n).map(|i| random_field(mask, 0, BcMode::FullDirichlet, seed.wrapping_mul(n).wrapping_add(i))).collect()
}

/// Adds a seed-dependent constant to every in-domain value of each row, so
/// the rows are constant (not zero) on the boundary.
fn lift_by_constants(mask: &Arc<DomainMask>, v: &[FormField], seed: u64) -> crate::error::Result<Vec<FormField>> {
    let shift = random_vector(v.len(), seed ^ 0xc0_57a7);
    v.iter().zip(shift).map(|(row, c)| FormField::from_fn(mask, 0, BcMode::None, |_, x| row.get(0, x) + c)).collect()
}

pub fn cmd_korn(cfg: &ExperimentConfig) -> Result<RunReport, CliError> {
    let mut report = RunReport::new(
        "korn",
        cfg,
        &[
            "domain",
            "dim",
            "resolution",
            "mode",
            "seed",
            "grad_norm",
            "sym_grad_norm",
            "div_norm",
            "ratio",
            "identity_residual",
            "passed",
        ],
    );
    let bound = 2f64.sqrt() + KORN_RATIO_SLACK;
    for &kind in &cfg.domains {
        for &n in &cfg.resolutions {
            let start = Instant::now();
            let mask = build_mask(cfg, kind, n)?;
            let connected = mask.boundary_components() == 1;
            if !connected {
                report.warnings.push(format!(
                    "{}: tangential variant skipped, boundary has {} components",
                    tag(kind, n),
                    mask.boundary_components()
                ));
            }
            let results: Vec<(u64, Vec<KornReport>)> = cfg
                .seeds
                .par_iter()
                .map(|&seed| -> Result<_, CliError> {
                    let v = korn_fields(&mask, seed)?;
                    let mut reps = vec![korn_check(&v, KornMode::Dirichlet)?];
                    if connected {
                        reps.push(korn_check(&lift_by_constants(&mask, &v, seed)?, KornMode::TangentialVariant)?);
                    }
                    Ok((seed, reps))
                })
                .collect::<Result<Vec<_>, _>>()?;
            for (seed, reps) in results {
                for r in reps {
                    let ok = r.ratio <= bound && r.identity_residual <= KORN_IDENTITY_TOL;
                    report.push_row(vec![
                        kind.name().into(),
                        cfg.dim.into(),
                        n.into(),
                        r.mode.name().into(),
                        seed.into(),
                        r.grad_norm.into(),
                        r.sym_grad_norm.into(),
                        r.div_norm.into(),
                        r.ratio.into(),
                        r.identity_residual.into(),
                        ok.into(),
                    ]);
                    report.record_check(ok);
                    report.worst(&format!("{}_ratio", r.mode.name()), r.ratio);
                    report.worst(&format!("{}_identity_residual", r.mode.name()), r.identity_residual);
                }
            }
            report.timings.insert(tag(kind, n), start.elapsed().as_secs_f64());
        }
    }
    Ok(report)
}

/// Harmonic Dirichlet forms on the tangential complex for every degree;
/// `bc_mode` from the config does not apply here.
pub fn cmd_betti(cfg: &ExperimentConfig) -> Result<RunReport, CliError> {
    let mut report = RunReport::new(
        "betti",
        cfg,
        &["domain", "dim", "resolution", "q", "harmonic_dim", "gap_ratio", "reliable", "boundary_components", "passed"],
    );
    let opts = eigen_options(cfg);
    for &kind in &cfg.domains {
        for &n in &cfg.resolutions {
            let start = Instant::now();
            let mask = build_mask(cfg, kind, n)?;
            let components = mask.boundary_components();
            for q in 0..=cfg.dim {
                let (count, spec) = harmonic_dimension(&mask, q, BcMode::Tangential, &opts)?;
                if !spec.converged {
                    report.numerical_failures.push(format!("{}: q={q} eigen solve not converged", tag(kind, n)));
                }
                if spec.gap_ratio < MIN_GAP_RATIO {
                    report.warnings.push(format!(
                        "{}: q={q} kernel count unreliable (gap ratio {:e})",
                        tag(kind, n),
                        spec.gap_ratio
                    ));
                }
                // no harmonic Dirichlet 1-forms exactly when the boundary is connected
                let check = (q == 1 && cfg.dim >= 2).then_some((count == 0) == (components == 1));
                if let Some(ok) = check {
                    report.record_check(ok);
                }
                report.push_row(vec![
                    kind.name().into(),
                    cfg.dim.into(),
                    n.into(),
                    q.into(),
                    count.into(),
                    spec.gap_ratio.into(),
                    spec.reliable.into(),
                    components.into(),
                    check.into(),
                ]);
            }
            report.timings.insert(tag(kind, n), start.elapsed().as_secs_f64());
        }
    }
    Ok(report)
}

/// Limit and order from the last three levels of a sequence whose mesh
/// widths shrink by a constant factor.
pub fn richardson(values: &[f64], h: &[f64]) -> Option<(f64, f64)> {
    let k = values.len();
    if k < 3 {
        return None;
    }
    let (a, b, c) = (values[k - 3], values[k - 2], values[k - 1]);
    let r = h[k - 2] / h[k - 1];
    let ratio = (a - b) / (b - c);
    if !ratio.is_finite() || ratio <= 1.0 || r <= 1.0 {
        return None;
    }
    let p = ratio.ln() / r.ln();
    Some((c + (c - b) / (r.powf(p) - 1.0), p))
}

pub fn cmd_convergence(cfg: &ExperimentConfig) -> Result<RunReport, CliError> {
    let mut report = RunReport::new(
        "convergence",
        cfg,
        &["domain", "dim", "quantity", "resolution", "h", "value", "rel_change", "order", "converged"],
    );
    let opts = eigen_options(cfg);
    for &kind in &cfg.domains {
        let mut levels = Vec::new();
        for &n in &cfg.resolutions {
            let start = Instant::now();
            let mask = build_mask(cfg, kind, n)?;
            let detail = compute_constants(&mask, cfg.bc_mode, &opts, cfg.sharp)?;
            note_constants(&mut report, kind, n, &detail);
            let r = &detail.record;
            if let Some(s) = r.c_sharp {
                if r.harmonic_one_forms() == 0 {
                    let ok = s <= r.c_hat + cfg.chain_tol;
                    report.record_check(ok);
                    report.worst("sharp_over_c_hat", s / r.c_hat);
                } else {
                    report.warnings.push(format!("{}: c_sharp not compared, harmonic 1-forms present", tag(kind, n)));
                }
            }
            levels.push(detail.record);
            report.timings.insert(tag(kind, n), start.elapsed().as_secs_f64());
        }
        let h: Vec<f64> = levels.iter().map(|r| r.h).collect();
        let mut quantities: Vec<(&str, Vec<f64>)> = vec![
            ("c_p", levels.iter().map(|r| r.c_p).collect()),
            ("c_m", levels.iter().map(|r| r.c_m).collect()),
            ("c_hat", levels.iter().map(|r| r.c_hat).collect()),
        ];
        if cfg.sharp {
            quantities.push(("c_sharp", levels.iter().map(|r| r.c_sharp.unwrap_or(f64::NAN)).collect()));
        }
        for (name, values) in quantities {
            let mut last_change = None;
            for (i, &v) in values.iter().enumerate() {
                let change = (i > 0).then(|| ((v - values[i - 1]) / v).abs());
                last_change = change;
                report.push_row(vec![
                    kind.name().into(),
                    cfg.dim.into(),
                    name.into(),
                    cfg.resolutions[i].into(),
                    h[i].into(),
                    v.into(),
                    change.into(),
                    Cell::Empty,
                    Cell::Empty,
                ]);
            }
            let converged = last_change.map(|c| c < CONVERGENCE_FLAG);
            if converged == Some(false) {
                report.warnings.push(format!("{}: {name} changed by more than 5% on the finest level", kind.name()));
            }
            let extrapolated = richardson(&values, &h);
            report.push_row(vec![
                kind.name().into(),
                cfg.dim.into(),
                name.into(),
                "limit".into(),
                Cell::Float(0.0),
                extrapolated.map(|e| e.0).into(),
                Cell::Empty,
                extrapolated.map(|e| e.1).into(),
                converged.into(),
            ]);
        }
        report.constants.extend(levels);
    }
    Ok(report)
}
