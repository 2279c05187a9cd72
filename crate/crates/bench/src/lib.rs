//! Shared fixtures for the benchmark suite.

use evt_core::models::{builtin, Builtin, BuiltinParams, SampleBatch, TailModel};

pub fn pareto(gamma: f64) -> TailModel {
    builtin(
        Builtin::Pareto,
        BuiltinParams {
            gamma,
            ..Default::default()
        },
    )
    .expect("builtin constructs")
}

pub fn sample(n: usize, seed: u64) -> SampleBatch {
    pareto(1.0).draw(n, seed).expect("draw succeeds")
}
