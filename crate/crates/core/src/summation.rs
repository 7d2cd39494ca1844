//! Reductions used by inner products and solvers.
//!
//! Both modes are reproducible for a fixed input: `Sequential` is a single
//! pass with eight interleaved accumulators combined in a fixed tree,
//! `Chunked` sums fixed-size blocks the same way in parallel and
//! combines the partial sums in block order, so its result does not depend
//! on the thread count either. The two modes differ in rounding.

use std::sync::atomic::{AtomicU8, Ordering};

use rayon::prelude::*;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Summation {
    Sequential,
    Chunked,
}

const CHUNK: usize = 4096;

static MODE: AtomicU8 = AtomicU8::new(0);

/// Selects the process-wide reduction mode. Meant to be called once at
/// start-up (the CLI flag `--deterministic-sum`).
pub fn set_summation(mode: Summation) {
    MODE.store(
        match mode {
            Summation::Sequential => 0,
            Summation::Chunked => 1,
        },
        Ordering::Relaxed,
    );
}

pub fn summation() -> Summation {
    match MODE.load(Ordering::Relaxed) {
        0 => Summation::Sequential,
        _ => Summation::Chunked,
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    match summation() {
        Summation::Chunked if a.len() > 2 * CHUNK => {
            let partial: Vec<f64> =
                a.par_chunks(CHUNK).zip(b.par_chunks(CHUNK)).map(|(x, y)| lanes_dot(x, y)).collect();
            partial.iter().sum()
        }
        _ => lanes_dot(a, b),
    }
}

const LANES: usize = 8;

fn lanes_dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0f64; LANES];
    let split = a.len() - a.len() % LANES;
    for (x, y) in a[..split].chunks_exact(LANES).zip(b[..split].chunks_exact(LANES)) {
        for l in 0..LANES {
            acc[l] += x[l] * y[l];
        }
    }
    let mut tail = 0.0;
    for (x, y) in a[split..].iter().zip(&b[split..]) {
        tail += x * y;
    }
    ((acc[0] + acc[4]) + (acc[2] + acc[6])) + ((acc[1] + acc[5]) + (acc[3] + acc[7])) + tail
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// `y += alpha * x`
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

pub fn scale(alpha: f64, x: &mut [f64]) {
    x.iter_mut().for_each(|v| *v *= alpha);
}
