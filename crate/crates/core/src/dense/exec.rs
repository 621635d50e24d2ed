//! Dense execution of Clifford+T instruction lists with measurement feedback.

use rand::Rng;

use super::StateVector;
use crate::circuit::Instruction;
use crate::error::{Error, Result};
use crate::magic::UniversalOp;

#[derive(Debug, Clone)]
pub struct DenseRun {
    pub state: StateVector,
    pub bits: Vec<bool>,
}

/// One measurement history with its probability and post-measurement state.
#[derive(Debug, Clone)]
pub struct Branch {
    pub prob: f64,
    pub state: StateVector,
    pub bits: Vec<bool>,
    /// Outcomes of the executed `MeasureZ` instructions, in order.
    pub outcomes: Vec<bool>,
}

fn check_cbits(op: &UniversalOp, m: usize, n: usize) -> Result<()> {
    match op {
        UniversalOp::Clifford(i) => i.validate(n, m),
        UniversalOp::T(q) if *q >= n => Err(Error::QubitOutOfRange { index: *q, n }),
        UniversalOp::T(_) => Ok(()),
    }
}

fn apply_unitary_op(state: &mut StateVector, bits: &mut [bool], op: &UniversalOp) -> Result<()> {
    match op {
        UniversalOp::T(q) => state.t(*q),
        UniversalOp::Clifford(Instruction::Gate(g)) => state.apply_gate(g),
        UniversalOp::Clifford(Instruction::Xor { a, b, out }) => {
            bits[*out] = bits[*a] ^ bits[*b];
            Ok(())
        }
        UniversalOp::Clifford(Instruction::Conditioned { cbit, gate }) => {
            if bits[*cbit] {
                state.apply_gate(gate)?;
            }
            Ok(())
        }
        UniversalOp::Clifford(Instruction::MeasureZ { .. }) => unreachable!("handled by caller"),
    }
}

/// Samples one run of `ops` on `state` with an `m`-bit classical register.
/// Qubits of `state` beyond those referenced by `ops` are left untouched.
pub fn run_ops<R: Rng + ?Sized>(
    ops: &[UniversalOp],
    mut state: StateVector,
    m: usize,
    rng: &mut R,
) -> Result<DenseRun> {
    let n = state.num_qubits();
    let mut bits = vec![false; m];
    for op in ops {
        check_cbits(op, m, n)?;
        if let UniversalOp::Clifford(Instruction::MeasureZ { qubit, cbit }) = op {
            let (outcome, next, _) = state.measure_z(*qubit, rng)?;
            state = next;
            bits[*cbit] = outcome;
        } else {
            apply_unitary_op(&mut state, &mut bits, op)?;
        }
    }
    Ok(DenseRun { state, bits })
}

/// Every measurement history of `ops` with non-negligible probability.
pub fn enumerate_branches(ops: &[UniversalOp], state: StateVector, m: usize) -> Result<Vec<Branch>> {
    let n = state.num_qubits();
    let mut live = vec![Branch {
        prob: 1.0,
        state,
        bits: vec![false; m],
        outcomes: Vec::new(),
    }];
    for op in ops {
        check_cbits(op, m, n)?;
        if let UniversalOp::Clifford(Instruction::MeasureZ { qubit, cbit }) = op {
            let mut next = Vec::with_capacity(live.len() * 2);
            for b in live {
                let split = b.state.branch_z(*qubit)?;
                for (outcome, p, s) in [(false, split.p0, split.s0), (true, split.p1, split.s1)] {
                    if let Some(s) = s {
                        let mut bits = b.bits.clone();
                        bits[*cbit] = outcome;
                        let mut outcomes = b.outcomes.clone();
                        outcomes.push(outcome);
                        next.push(Branch {
                            prob: b.prob * p,
                            state: s,
                            bits,
                            outcomes,
                        });
                    }
                }
            }
            live = next;
        } else {
            for b in &mut live {
                apply_unitary_op(&mut b.state, &mut b.bits, op)?;
            }
        }
    }
    Ok(live)
}
