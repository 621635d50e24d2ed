//! Randomized self-checks exposed through the command-line runner.

use nalgebra::DMatrix;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::circuit::{CliffordCircuit, Gate, Instruction};
use crate::dense::{enumerate_branches, lemma2_maximizer, DensityMatrix, StateVector, C64};
use crate::error::Result;
use crate::magic::{expand_t_gates, UniversalCircuit, UniversalOp};
use crate::seed::rng_from_seed;

pub const LEMMA2_DIMS: [(usize, usize); 3] = [(2, 2), (2, 4), (4, 4)];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Lemma2Report {
    pub instances: usize,
    pub sampled_instances: usize,
    pub samples_per_instance: usize,
    /// Largest `|F(|x><x| ⊗ rho'', rho)^2 - <x|Tr_2 rho|x>|`.
    pub max_violation: f64,
    /// Largest amount by which a sampled `rho'` beats the maximum.
    pub max_sampled_excess: f64,
}

fn product_with_pure(x: &StateVector, rest: &DensityMatrix) -> Result<DensityMatrix> {
    let px = x.to_density();
    let mat = px.matrix().kronecker(rest.matrix());
    DensityMatrix::new(vec![x.dim(), rest.dim()], mat)
}

/// Random bipartite states over [`LEMMA2_DIMS`]; the first
/// `sampled_instances` also get `samples` random competitors `rho'`.
pub fn lemma2_check(instances: usize, sampled_instances: usize, samples: usize, seed: u64) -> Result<Lemma2Report> {
    let mut rng = rng_from_seed(seed);
    let mut max_violation = 0.0f64;
    let mut max_excess = f64::NEG_INFINITY;
    for i in 0..instances {
        let (d1, d2) = LEMMA2_DIMS[i % LEMMA2_DIMS.len()];
        let rho = DensityMatrix::random(vec![d1, d2], &mut rng)?;
        let x = StateVector::random(d1.trailing_zeros() as usize, &mut rng)?;
        let (best, weight) = lemma2_maximizer(&rho, &x)?;
        let f = product_with_pure(&x, &best)?.fidelity(&rho)?;
        max_violation = max_violation.max((f * f - weight).abs());
        if i < sampled_instances {
            for k in 0..samples {
                let other = if k % 2 == 0 {
                    DensityMatrix::random(vec![d2], &mut rng)?
                } else {
                    StateVector::random(d2.trailing_zeros() as usize, &mut rng)?.to_density()
                };
                let f = product_with_pure(&x, &other)?.fidelity(&rho)?;
                max_excess = max_excess.max(f * f - weight);
            }
        }
    }
    Ok(Lemma2Report {
        instances,
        sampled_instances: sampled_instances.min(instances),
        samples_per_instance: samples,
        max_violation,
        max_sampled_excess: if max_excess.is_finite() { max_excess } else { 0.0 },
    })
}

/// Random unitary Clifford+T circuit with exactly `t_count` T gates.
pub fn random_universal_circuit<R: Rng + ?Sized>(n: usize, depth: usize, t_count: usize, rng: &mut R) -> UniversalCircuit {
    let mut c = UniversalCircuit::new(n, 0);
    let mut t_slots: Vec<usize> = (0..t_count).map(|_| rng.random_range(0..=depth)).collect();
    t_slots.sort_unstable();
    let mut next_t = 0;
    for step in 0..=depth {
        while next_t < t_slots.len() && t_slots[next_t] == step {
            c.t(rng.random_range(0..n)).expect("in range");
            next_t += 1;
        }
        if step == depth {
            break;
        }
        let g = match rng.random_range(0..3) {
            0 => Gate::H(rng.random_range(0..n)),
            1 => Gate::S(rng.random_range(0..n)),
            _ if n >= 2 => {
                let a = rng.random_range(0..n);
                let b = (a + rng.random_range(1..n)) % n;
                Gate::Cz(a, b)
            }
            _ => Gate::H(0),
        };
        c.gate(g).expect("in range");
    }
    c
}

/// Single-qubit states whose projectors span all 2x2 matrices.
pub fn tomographic_kets() -> Vec<StateVector> {
    let r = std::f64::consts::FRAC_1_SQRT_2;
    vec![
        StateVector::zero(1).expect("one qubit"),
        StateVector::basis(1, 1).expect("one qubit"),
        StateVector::plus(),
        StateVector::from_amplitudes(vec![C64::new(r, 0.0), C64::new(0.0, r)]).expect("unit norm"),
    ]
}

/// Output state of the compiled circuit on `input ⊗ |H>^s`, averaged over
/// measurement branches and reduced to the data qubits.
pub fn compiled_channel_output(c: &UniversalCircuit, input: &StateVector) -> Result<DensityMatrix> {
    let compiled = expand_t_gates(c);
    let mut full = input.clone();
    for _ in 0..compiled.s {
        full = full.tensor(&StateVector::magic_ket())?;
    }
    let branches = enumerate_branches(&compiled.ops(), full, compiled.clifford.num_cbits())?;
    let keep: Vec<usize> = (0..c.num_qubits()).collect();
    let d = input.dim();
    let mut acc = DMatrix::<C64>::zeros(d, d);
    for b in branches {
        let reduced = b.state.to_density().partial_trace(&keep)?;
        acc += reduced.matrix() * C64::new(b.prob, 0.0);
    }
    DensityMatrix::new(vec![2; c.num_qubits()], acc)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EquivReport {
    pub circuits: usize,
    pub inputs_per_circuit: usize,
    pub max_trace_distance: f64,
}

/// Compares compiled and source channels on all product inputs built from
/// [`tomographic_kets`].
pub fn equiv_check(circuits: usize, n: usize, max_t: usize, seed: u64) -> Result<EquivReport> {
    let mut rng = rng_from_seed(seed);
    let kets = tomographic_kets();
    let inputs = kets.len().pow(n as u32);
    let mut worst = 0.0f64;
    for _ in 0..circuits {
        let t = rng.random_range(1..=max_t.max(1));
        let depth = rng.random_range(4..=20);
        let c = random_universal_circuit(n, depth, t, &mut rng);
        for idx in 0..inputs {
            let mut input = StateVector::zero(0)?;
            let mut rest = idx;
            for _ in 0..n {
                input = input.tensor(&kets[rest % kets.len()])?;
                rest /= kets.len();
            }
            let direct = enumerate_branches(c.ops(), input.clone(), 0)?;
            let expected = direct[0].state.to_density();
            let got = compiled_channel_output(&c, &input)?;
            worst = worst.max(got.trace_distance(&expected)?);
        }
    }
    Ok(EquivReport {
        circuits,
        inputs_per_circuit: inputs,
        max_trace_distance: worst,
    })
}

/// Random Clifford circuit with mid-circuit measurements, feedback and XOR.
pub fn random_clifford_circuit<R: Rng + ?Sized>(n: usize, m: usize, depth: usize, rng: &mut R) -> CliffordCircuit {
    let mut c = CliffordCircuit::new(n, m);
    let gate = |rng: &mut R| match rng.random_range(0..3) {
        0 => Gate::H(rng.random_range(0..n)),
        1 => Gate::S(rng.random_range(0..n)),
        _ if n >= 2 => {
            let a = rng.random_range(0..n);
            Gate::Cz(a, (a + rng.random_range(1..n)) % n)
        }
        _ => Gate::S(0),
    };
    for _ in 0..depth {
        let instr = match rng.random_range(0..10) {
            0..=5 => Instruction::Gate(gate(rng)),
            6 | 7 => Instruction::MeasureZ {
                qubit: rng.random_range(0..n),
                cbit: rng.random_range(0..m),
            },
            8 => Instruction::Conditioned {
                cbit: rng.random_range(0..m),
                gate: gate(rng),
            },
            _ => Instruction::Xor {
                a: rng.random_range(0..m),
                b: rng.random_range(0..m),
                out: rng.random_range(0..m),
            },
        };
        c.push(instr).expect("in range");
    }
    c
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TableauDenseReport {
    pub circuits: usize,
    pub branches: usize,
    pub deterministic_mismatches: usize,
    pub max_prob_error: f64,
}

/// Drives the tableau along every dense measurement branch and compares
/// determinism flags, outcomes and branch probabilities.
pub fn tableau_dense_check(circuits: usize, max_n: usize, max_depth: usize, seed: u64) -> Result<TableauDenseReport> {
    let mut rng = rng_from_seed(seed);
    let mut report = TableauDenseReport {
        circuits,
        branches: 0,
        deterministic_mismatches: 0,
        max_prob_error: 0.0,
    };
    for _ in 0..circuits {
        let n = rng.random_range(1..=max_n);
        let m = rng.random_range(1..=4);
        let depth = rng.random_range(1..=max_depth);
        let c = random_clifford_circuit(n, m, depth, &mut rng);
        let ops: Vec<UniversalOp> = c.instructions().iter().map(|&i| UniversalOp::Clifford(i)).collect();
        let branches = enumerate_branches(&ops, StateVector::zero(n)?, m)?;
        for b in &branches {
            report.branches += 1;
            let run = c.run_with(|k| b.outcomes[k])?;
            let mut prob = 1.0;
            for (meas, &want) in run.measurements.iter().zip(&b.outcomes) {
                if meas.outcome != want {
                    report.deterministic_mismatches += 1;
                }
                if !meas.deterministic {
                    prob *= 0.5;
                }
            }
            if run.bits != b.bits {
                report.deterministic_mismatches += 1;
            }
            report.max_prob_error = report.max_prob_error.max((prob - b.prob).abs());
        }
    }
    Ok(report)
}
