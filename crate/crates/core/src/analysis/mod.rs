//! Decompositions, spectral constants and the estimate chain.

mod chain;
mod constants;
mod decompose;
mod korn;
mod operators;

pub use chain::{
    dump_counterexample, main_lemma_chain, main_lemma_chain_with, sample_tensor, Assertion, ChainReport, Family,
};
pub use constants::{
    c_hat, compute_constants, harmonic_dimension, poincare_q_constant, sharp_constant, spectrum, ConstantsDetail,
    ConstantsRecord, SharpResult, Spectrum, KERNEL_THRESHOLD, MIN_GAP_RATIO,
};
pub use decompose::{helmholtz_decompose_tensor, hodge_decompose, DecompositionResult, HodgeSplit};
pub use korn::{korn_check, KornMode, KornReport};
pub use operators::{HodgeOperator, PotentialOperator, SharpOperator};
