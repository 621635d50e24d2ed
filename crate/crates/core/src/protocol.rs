//! End-to-end Merlin–Arthur runs at toy scale: the magic state test followed
//! by the compiled verifier fed with the surviving qubits.
//!
//! Qubit layout of a dense run: witness `0..p`, verifier ancillas `p..n`,
//! magic inputs `n..n+s`, then (for entangled adversaries) the rest of the
//! adversary's block as an environment the verifier never touches.

use std::path::Path;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dense::{enumerate_branches, hermitian_eigen, run_ops, DensityMatrix, StateVector};
use crate::error::{Error, Result};
use crate::magic::{count_magic_states, expand_t_gates, CompiledCircuit, UniversalCircuit};
use crate::magic_test::{run_test, MagicRegister, MerlinState, TestParams};
use crate::seed::{derive_seed, rng_from_seed};

/// Two-sided 99% standard normal quantile.
pub const Z99: f64 = 2.575_829_303_548_900_4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QMAInstance {
    pub verifier: UniversalCircuit,
    pub p: usize,
    /// Classical bit read as the verdict.
    pub accept_cbit: usize,
    /// Value of `accept_cbit` that means accept.
    pub accept_value: bool,
    pub a: f64,
    pub b: f64,
    /// Largest acceptance probability over witnesses.
    pub a_star: f64,
    /// Smallest acceptance probability over witnesses.
    pub b_star: f64,
}

/// Everything in an instance except the circuit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InstanceMeta {
    pub p: usize,
    pub a: f64,
    pub b: f64,
    pub a_star: f64,
    pub b_star: f64,
    pub accept_cbit: usize,
    pub accept_value: bool,
}

impl QMAInstance {
    /// Builds an instance whose claimed `a` and `b` are the exact optimum and
    /// minimum acceptance over witnesses.
    pub fn new(verifier: UniversalCircuit, p: usize, accept_cbit: usize, accept_value: bool) -> Result<Self> {
        if p > verifier.num_qubits() {
            return Err(Error::ParamMismatch(format!(
                "{p} witness qubits in a {}-qubit verifier",
                verifier.num_qubits()
            )));
        }
        if accept_cbit >= verifier.num_cbits() {
            return Err(Error::CbitOutOfRange {
                index: accept_cbit,
                m: verifier.num_cbits(),
            });
        }
        let mut inst = QMAInstance {
            verifier,
            p,
            accept_cbit,
            accept_value,
            a: 0.0,
            b: 0.0,
            a_star: 0.0,
            b_star: 0.0,
        };
        let (vals, _) = hermitian_eigen(&inst.acceptance_operator()?);
        inst.a_star = vals.max().clamp(0.0, 1.0);
        inst.b_star = vals.min().clamp(0.0, 1.0);
        inst.a = inst.a_star;
        inst.b = inst.b_star;
        Ok(inst)
    }

    pub fn ancillas(&self) -> usize {
        self.verifier.num_qubits() - self.p
    }

    pub fn meta(&self) -> InstanceMeta {
        InstanceMeta {
            p: self.p,
            a: self.a,
            b: self.b,
            a_star: self.a_star,
            b_star: self.b_star,
            accept_cbit: self.accept_cbit,
            accept_value: self.accept_value,
        }
    }

    /// Acceptance probability of the source circuit on witness `w`.
    pub fn acceptance(&self, w: &StateVector) -> Result<f64> {
        if w.num_qubits() != self.p {
            return Err(Error::ParamMismatch(format!("witness has {} qubits, expected {}", w.num_qubits(), self.p)));
        }
        let input = w.tensor(&StateVector::zero(self.ancillas())?)?;
        let branches = enumerate_branches(self.verifier.ops(), input, self.verifier.num_cbits())?;
        Ok(branches
            .iter()
            .filter(|b| b.bits[self.accept_cbit] == self.accept_value)
            .map(|b| b.prob)
            .sum())
    }

    /// The operator `M` with acceptance `<w|M|w>`, recovered by polarization.
    pub fn acceptance_operator(&self) -> Result<DMatrix<Complex64>> {
        let d = 1usize << self.p;
        let r = std::f64::consts::FRAC_1_SQRT_2;
        let ket = |pairs: &[(usize, Complex64)]| {
            let mut amps = vec![Complex64::new(0.0, 0.0); d];
            for &(i, c) in pairs {
                amps[i] = c;
            }
            StateVector::from_amplitudes(amps)
        };
        let one = Complex64::new(1.0, 0.0);
        let mut m = DMatrix::zeros(d, d);
        let diag: Vec<f64> = (0..d)
            .map(|i| self.acceptance(&ket(&[(i, one)])?))
            .collect::<Result<_>>()?;
        for i in 0..d {
            m[(i, i)] = Complex64::new(diag[i], 0.0);
            for j in i + 1..d {
                let avg = 0.5 * (diag[i] + diag[j]);
                let re = self.acceptance(&ket(&[(i, one * r), (j, one * r)])?)? - avg;
                let im = avg - self.acceptance(&ket(&[(i, one * r), (j, Complex64::new(0.0, r))])?)?;
                m[(i, j)] = Complex64::new(re, im);
                m[(j, i)] = Complex64::new(re, -im);
            }
        }
        Ok(m)
    }

    fn extreme_witness(&self, best: bool) -> Result<StateVector> {
        let (vals, vecs) = hermitian_eigen(&self.acceptance_operator()?);
        let k = if best { vals.imax() } else { vals.imin() };
        StateVector::normalized(vecs.column(k).iter().copied().collect())
    }

    /// A witness attaining `a_star`.
    pub fn optimal_witness(&self) -> Result<StateVector> {
        self.extreme_witness(true)
    }

    /// A witness attaining `b_star`.
    pub fn worst_witness(&self) -> Result<StateVector> {
        self.extreme_witness(false)
    }

    /// Writes `<base>.circ` and `<base>.json`.
    pub fn save(&self, base: &Path) -> Result<()> {
        let io = |e: std::io::Error| Error::InvalidState(format!("{}: {e}", base.display()));
        std::fs::write(base.with_extension("circ"), self.verifier.to_string()).map_err(io)?;
        let meta = serde_json::to_string_pretty(&self.meta())?;
        std::fs::write(base.with_extension("json"), meta).map_err(io)?;
        Ok(())
    }

    pub fn load(circuit: &Path, sidecar: &Path) -> Result<Self> {
        let read = |p: &Path| std::fs::read_to_string(p).map_err(|e| Error::InvalidState(format!("{}: {e}", p.display())));
        let verifier: UniversalCircuit = read(circuit)?.parse()?;
        let meta: InstanceMeta = serde_json::from_str(&read(sidecar)?)?;
        Self::from_parts(verifier, meta)
    }

    pub fn from_parts(verifier: UniversalCircuit, meta: InstanceMeta) -> Result<Self> {
        if meta.p > verifier.num_qubits() || meta.accept_cbit >= verifier.num_cbits() {
            return Err(Error::ParamMismatch("sidecar does not fit the circuit".into()));
        }
        for (name, v) in [("a", meta.a), ("b", meta.b), ("a_star", meta.a_star), ("b_star", meta.b_star)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::Domain {
                    name,
                    value: v,
                    reason: "must lie in [0, 1]",
                });
            }
        }
        Ok(QMAInstance {
            verifier,
            p: meta.p,
            accept_cbit: meta.accept_cbit,
            accept_value: meta.accept_value,
            a: meta.a,
            b: meta.b,
            a_star: meta.a_star,
            b_star: meta.b_star,
        })
    }
}

/// One witness qubit: `T`, then `H`, measure Z, accept on outcome 0.
pub fn build_toy_instance() -> QMAInstance {
    let verifier: UniversalCircuit = "qubits 1\ncbits 1\nT 0\nH 0\nMZ 0 -> c0\n"
        .parse()
        .expect("static circuit");
    QMAInstance::new(verifier, 1, 0, false).expect("static instance")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum MerlinStrategy {
    /// `|H>` on every test position plus the given witness.
    HonestWitness(StateVector),
    Adversarial(MerlinState),
}

impl MerlinStrategy {
    pub fn message(&self) -> MerlinState {
        match self {
            MerlinStrategy::HonestWitness(w) => MerlinState::honest(w.clone()),
            MerlinStrategy::Adversarial(m) => m.clone(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProtocolResult {
    pub test_passed: bool,
    pub accepted: bool,
    pub seed: u64,
    pub x: u64,
    pub z: u64,
}

fn sample_pure<R: Rng + ?Sized>(rho: &DensityMatrix, rng: &mut R) -> Result<StateVector> {
    let (vals, vecs) = hermitian_eigen(rho.matrix());
    let u: f64 = rng.random();
    let mut acc = 0.0;
    let mut pick = vals.imax();
    for (k, &v) in vals.iter().enumerate() {
        acc += v.max(0.0);
        if u < acc {
            pick = k;
            break;
        }
    }
    StateVector::normalized(vecs.column(pick).iter().copied().collect())
}

fn check_sizes(inst: &QMAInstance, compiled: &CompiledCircuit, tp: &TestParams, extra: usize) -> Result<()> {
    if compiled.s != tp.s {
        return Err(Error::ParamMismatch(format!(
            "verifier consumes {} magic states, parameters have s = {}",
            compiled.s, tp.s
        )));
    }
    if inst.p != tp.p {
        return Err(Error::ParamMismatch(format!("instance p = {}, parameters p = {}", inst.p, tp.p)));
    }
    let total = compiled.clifford.num_qubits() + extra;
    if total > StateVector::MAX_QUBITS {
        return Err(Error::TooLarge(format!(
            "{total} qubits needed for dense execution (limit {})",
            StateVector::MAX_QUBITS
        )));
    }
    Ok(())
}

/// Runs the compiled verifier on `witness ⊗ |0..0> ⊗ magic` and reports
/// whether it accepts.
fn run_compiled<R: Rng + ?Sized>(
    inst: &QMAInstance,
    compiled: &CompiledCircuit,
    witness: &StateVector,
    magic: StateVector,
    rng: &mut R,
) -> Result<bool> {
    let state = witness
        .tensor(&StateVector::zero(inst.ancillas())?)?
        .tensor(&magic)?;
    let run = run_ops(&compiled.ops(), state, compiled.clifford.num_cbits(), rng)?;
    Ok(run.bits[inst.accept_cbit] == inst.accept_value)
}

fn verify_compiled(
    inst: &QMAInstance,
    compiled: &CompiledCircuit,
    message: &MerlinState,
    tp: &TestParams,
    seed: u64,
) -> Result<ProtocolResult> {
    let extra = match &message.register {
        MagicRegister::SmallEntangled { block, .. } => block.num_qubits(),
        _ => 0,
    };
    check_sizes(inst, compiled, tp, extra)?;
    let mut rng = rng_from_seed(seed);
    let outcome = run_test(message, tp, &mut rng)?;
    let mut result = ProtocolResult {
        test_passed: outcome.passed,
        accepted: false,
        seed,
        x: outcome.x,
        z: outcome.z,
    };
    if !outcome.passed {
        return Ok(result);
    }
    let mut magic = StateVector::zero(0)?;
    // Survivor j that is slot i of the entangled block.
    let mut from_block = Vec::new();
    for (j, pos) in outcome.sigma_indices.iter().enumerate() {
        let q = match &message.register {
            MagicRegister::Honest => StateVector::magic_ket(),
            MagicRegister::IidSingleQubit(rho) => sample_pure(rho, &mut rng)?,
            MagicRegister::SmallEntangled { slots, filler, .. } => match slots.iter().position(|s| s == pos) {
                Some(i) => {
                    from_block.push((j, i));
                    StateVector::zero(1)?
                }
                None => sample_pure(filler, &mut rng)?,
            },
        };
        magic = magic.tensor(&q)?;
    }
    if let Some(post) = outcome.block_post {
        magic = magic.tensor(&post)?;
        let s = compiled.s;
        let mut order: Vec<usize> = (0..s + post.num_qubits()).collect();
        for &(j, i) in &from_block {
            order.swap(j, s + i);
        }
        magic = magic.permute(&order)?;
    }
    result.accepted = run_compiled(inst, compiled, &message.witness, magic, &mut rng)?;
    Ok(result)
}

/// One protocol run: magic state test, then the verifier on the survivors.
pub fn arthur_verify(inst: &QMAInstance, strat: &MerlinStrategy, tp: &TestParams, seed: u64) -> Result<ProtocolResult> {
    let compiled = expand_t_gates(&inst.verifier);
    verify_compiled(inst, &compiled, &strat.message(), tp, seed)
}

pub fn run_protocol_trials(
    inst: &QMAInstance,
    strat: &MerlinStrategy,
    tp: &TestParams,
    trials: u64,
    seed: u64,
) -> Result<Vec<ProtocolResult>> {
    let compiled = expand_t_gates(&inst.verifier);
    let message = strat.message();
    (0..trials)
        .into_par_iter()
        .map(|i| verify_compiled(inst, &compiled, &message, tp, derive_seed(seed, i)))
        .collect()
}

/// Compiled verifier fed exact `|H>` states, skipping the test.
pub fn bypass_verify(inst: &QMAInstance, witness: &StateVector, seed: u64) -> Result<bool> {
    let compiled = expand_t_gates(&inst.verifier);
    bypass_compiled(inst, &compiled, witness, seed)
}

fn bypass_compiled(inst: &QMAInstance, compiled: &CompiledCircuit, witness: &StateVector, seed: u64) -> Result<bool> {
    let mut magic = StateVector::zero(0)?;
    for _ in 0..compiled.s {
        magic = magic.tensor(&StateVector::magic_ket())?;
    }
    run_compiled(inst, compiled, witness, magic, &mut rng_from_seed(seed))
}

/// Monte Carlo estimate with a Wilson interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub trials: u64,
    pub successes: u64,
    pub p_hat: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub half_width: f64,
}

pub fn wilson(successes: u64, trials: u64, z: f64) -> Estimate {
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let spread = z / denom * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
    // The interval reaches 0 (or 1) exactly when p does.
    let ci_low = if successes == 0 { 0.0 } else { (center - spread).max(0.0) };
    let ci_high = if successes == trials { 1.0 } else { (center + spread).min(1.0) };
    Estimate {
        trials,
        successes,
        p_hat: p,
        ci_low,
        ci_high,
        half_width: 0.5 * (ci_high - ci_low),
    }
}

pub fn estimate_acceptance(
    inst: &QMAInstance,
    strat: &MerlinStrategy,
    tp: &TestParams,
    trials: u64,
    seed: u64,
) -> Result<Estimate> {
    if trials == 0 {
        return Err(Error::Domain {
            name: "trials",
            value: 0.0,
            reason: "must be at least 1",
        });
    }
    let runs = run_protocol_trials(inst, strat, tp, trials, seed)?;
    Ok(wilson(runs.iter().filter(|r| r.accepted).count() as u64, trials, Z99))
}

pub fn estimate_bypass(inst: &QMAInstance, witness: &StateVector, trials: u64, seed: u64) -> Result<Estimate> {
    if trials == 0 {
        return Err(Error::Domain {
            name: "trials",
            value: 0.0,
            reason: "must be at least 1",
        });
    }
    let compiled = expand_t_gates(&inst.verifier);
    let accepted = (0..trials)
        .into_par_iter()
        .map(|i| bypass_compiled(inst, &compiled, witness, derive_seed(seed, i)))
        .collect::<Result<Vec<bool>>>()?;
    Ok(wilson(accepted.iter().filter(|&&a| a).count() as u64, trials, Z99))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Gap {
    pub a_prime: f64,
    pub b_prime: f64,
    pub gap: f64,
}

/// `a' = 9a/10`, `b' = 9b/10 + 9/100 + 1/10`, `gap = a' - b'`, each formed
/// as a single quotient by 100 so decimal inputs round once.
pub fn completeness_soundness_gap(a: f64, b: f64) -> Result<Gap> {
    for (name, v) in [("a", a), ("b", b)] {
        if !(0.0..=1.0).contains(&v) {
            return Err(Error::Domain {
                name,
                value: v,
                reason: "must lie in [0, 1]",
            });
        }
    }
    Ok(Gap {
        a_prime: 90.0 * a / 100.0,
        b_prime: (90.0 * b + 19.0) / 100.0,
        gap: (90.0 * a - 90.0 * b - 19.0) / 100.0,
    })
}

/// Expected honest acceptance `a_star` times the exact honest pass probability.
pub fn honest_product(inst: &QMAInstance, tp: &TestParams) -> f64 {
    inst.a_star * crate::magic_test::honest_pass_prob_exact(tp)
}

/// Verifies `count_magic_states(verifier) = s` for the given parameters.
pub fn magic_count_matches(inst: &QMAInstance, tp: &TestParams) -> bool {
    count_magic_states(&inst.verifier) == tp.s
}
