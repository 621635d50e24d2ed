pub mod checks;
pub mod circuit;
pub mod dense;
pub mod error;
pub mod magic;
pub mod pauli;
pub mod protocol;
pub mod seed;
pub mod stats;
pub mod tableau;

pub use circuit::{run_circuit, CliffordCircuit, Gate, Instruction};
pub use dense::{DensityMatrix, StateVector};
pub use error::{Error, Result};
pub use magic::{
    count_magic_states, expand_t_gates, find_clifford_conversion, CompiledCircuit,
    UniversalCircuit, UniversalOp,
};
pub use magic_test::{
    derive_params, derive_params_with, honest_pass_prob_exact, run_test, significance_level,
    soundness_bound, threshold_f, MagicRegister, MerlinState, Mode, ParamRequest, TestOutcome,
    TestParams,
};
pub use pauli::{PauliString, Phase};
pub use protocol::{
    arthur_verify, build_toy_instance, completeness_soundness_gap, estimate_acceptance, MerlinStrategy,
    ProtocolResult, QMAInstance,
};
pub use seed::{derive_seed, rng_from_seed};
pub use stats::{binom_logcdf, inv_phi};
pub use tableau::{Measurement, Tableau};
