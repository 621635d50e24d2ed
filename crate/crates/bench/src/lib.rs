//! Shared workloads for the benchmarks.

use arthur_core::magic_test::{derive_params_with, Mode, ParamRequest, TestParams};
use arthur_core::{rng_from_seed, Gate};
use rand::Rng;

/// Uniform mix of H, S and CZ on `n >= 2` qubits.
pub fn random_gates(n: usize, count: usize, seed: u64) -> Vec<Gate> {
    let mut rng = rng_from_seed(seed);
    (0..count)
        .map(|_| match rng.random_range(0..3) {
            0 => Gate::H(rng.random_range(0..n)),
            1 => Gate::S(rng.random_range(0..n)),
            _ => {
                let a = rng.random_range(0..n);
                Gate::Cz(a, (a + rng.random_range(1..n)) % n)
            }
        })
        .collect()
}

/// Desk-relaxed parameters with an explicit sample count and padding.
pub fn desk_params(s: usize, r: u64, l: u128) -> TestParams {
    derive_params_with(&ParamRequest {
        r_override: Some(r),
        l_override: Some(l),
        ..ParamRequest::new(s, 0, 0.05, 0.1, Mode::DeskRelaxed)
    })
    .expect("valid desk parameters")
}
