//! Compilation of Clifford+T circuits into Clifford-only circuits that
//! consume `|H>` magic states through state injection.
//!
//! Each `T q` becomes: rotate the next unused magic qubit `a` from `|H>` to
//! `|A> = T|+>` with a fixed single-qubit Clifford, apply CNOT `q -> a`
//! (as `H a; CZ q a; H a`), measure `a` in Z into a fresh classical bit and
//! apply `S q` if that bit is 1.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use nalgebra::Matrix2;
use serde::{Deserialize, Serialize};

use crate::circuit::{parse_text, CliffordCircuit, Gate, Instruction, Line};
use crate::dense::{StateVector, C64};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum UniversalOp {
    Clifford(Instruction),
    T(usize),
}

impl fmt::Display for UniversalOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            UniversalOp::Clifford(i) => write!(f, "{i}"),
            UniversalOp::T(q) => write!(f, "T {q}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UniversalCircuit {
    n: usize,
    m: usize,
    ops: Vec<UniversalOp>,
}

impl UniversalCircuit {
    pub fn new(n: usize, m: usize) -> Self {
        UniversalCircuit { n, m, ops: Vec::new() }
    }

    pub fn num_qubits(&self) -> usize {
        self.n
    }

    pub fn num_cbits(&self) -> usize {
        self.m
    }

    pub fn ops(&self) -> &[UniversalOp] {
        &self.ops
    }

    pub fn push(&mut self, op: UniversalOp) -> Result<()> {
        match op {
            UniversalOp::Clifford(i) => i.validate(self.n, self.m)?,
            UniversalOp::T(q) if q >= self.n => {
                return Err(Error::QubitOutOfRange { index: q, n: self.n })
            }
            UniversalOp::T(_) => {}
        }
        self.ops.push(op);
        Ok(())
    }

    pub fn gate(&mut self, g: Gate) -> Result<()> {
        self.push(UniversalOp::Clifford(Instruction::Gate(g)))
    }

    pub fn t(&mut self, q: usize) -> Result<()> {
        self.push(UniversalOp::T(q))
    }

    pub fn measure(&mut self, qubit: usize, cbit: usize) -> Result<()> {
        self.push(UniversalOp::Clifford(Instruction::MeasureZ { qubit, cbit }))
    }
}

impl From<&CliffordCircuit> for UniversalCircuit {
    fn from(c: &CliffordCircuit) -> Self {
        UniversalCircuit {
            n: c.num_qubits(),
            m: c.num_cbits(),
            ops: c.instructions().iter().map(|&i| UniversalOp::Clifford(i)).collect(),
        }
    }
}

impl fmt::Display for UniversalCircuit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "qubits {}", self.n)?;
        writeln!(f, "cbits {}", self.m)?;
        for op in &self.ops {
            writeln!(f, "{op}")?;
        }
        Ok(())
    }
}

impl FromStr for UniversalCircuit {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parsed = parse_text(s)?;
        let mut c = UniversalCircuit::new(parsed.n, parsed.m);
        for (line, l) in parsed.lines {
            let op = match l {
                Line::Instr(i) => UniversalOp::Clifford(i),
                Line::T(q) => UniversalOp::T(q),
            };
            c.push(op).map_err(|e| Error::Parse {
                line,
                msg: e.to_string(),
            })?;
        }
        Ok(c)
    }
}

/// Clifford-only circuit plus the qubits that must be fed `|H>`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CompiledCircuit {
    pub clifford: CliffordCircuit,
    /// Magic qubits in consumption order.
    pub magic_inputs: Vec<usize>,
    /// Number of consumed magic states.
    pub s: usize,
}

impl CompiledCircuit {
    /// Qubits that are not magic inputs.
    pub fn data_qubits(&self) -> usize {
        self.clifford.num_qubits() - self.s
    }

    pub fn ops(&self) -> Vec<UniversalOp> {
        self.clifford
            .instructions()
            .iter()
            .map(|&i| UniversalOp::Clifford(i))
            .collect()
    }
}

impl fmt::Display for CompiledCircuit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "# magic")?;
        for q in &self.magic_inputs {
            write!(f, " {q}")?;
        }
        writeln!(f)?;
        write!(f, "{}", self.clifford)
    }
}

impl FromStr for CompiledCircuit {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parsed = parse_text(s)?;
        let mut magic_inputs = None;
        for (line, c) in &parsed.comments {
            let mut toks = c.split_whitespace();
            if toks.next() == Some("magic") {
                let qs = toks
                    .map(|t| {
                        t.parse::<usize>().map_err(|_| Error::Parse {
                            line: *line,
                            msg: format!("bad magic qubit {t:?}"),
                        })
                    })
                    .collect::<Result<Vec<_>>>()?;
                magic_inputs = Some(qs);
            }
        }
        let magic_inputs = magic_inputs.ok_or(Error::Parse {
            line: 0,
            msg: "missing `# magic` header".into(),
        })?;
        let clifford: CliffordCircuit = s.parse()?;
        for &q in &magic_inputs {
            if q >= clifford.num_qubits() {
                return Err(Error::QubitOutOfRange {
                    index: q,
                    n: clifford.num_qubits(),
                });
            }
        }
        Ok(CompiledCircuit {
            s: magic_inputs.len(),
            clifford,
            magic_inputs,
        })
    }
}

/// Letters of single-qubit Clifford words, applied left to right in time.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Letter {
    H,
    S,
}

impl Letter {
    pub fn on(self, q: usize) -> Gate {
        match self {
            Letter::H => Gate::H(q),
            Letter::S => Gate::S(q),
        }
    }

    fn matrix(self) -> Matrix2<C64> {
        let r = std::f64::consts::FRAC_1_SQRT_2;
        match self {
            Letter::H => Matrix2::new(
                C64::new(r, 0.0),
                C64::new(r, 0.0),
                C64::new(r, 0.0),
                C64::new(-r, 0.0),
            ),
            Letter::S => Matrix2::new(
                C64::new(1.0, 0.0),
                C64::new(0.0, 0.0),
                C64::new(0.0, 0.0),
                C64::new(0.0, 1.0),
            ),
        }
    }
}

pub fn word_unitary(word: &[Letter]) -> Matrix2<C64> {
    word.iter().fold(Matrix2::identity(), |acc, l| l.matrix() * acc)
}

/// Key identifying a 2x2 unitary up to global phase.
fn phase_free_key(u: &Matrix2<C64>) -> [i64; 8] {
    let pivot = u
        .iter()
        .copied()
        .max_by(|a, b| a.norm().total_cmp(&b.norm()))
        .expect("non-empty");
    let phase = pivot.conj() / pivot.norm();
    let mut key = [0i64; 8];
    for (k, z) in u.iter().enumerate() {
        let w = z * phase;
        key[2 * k] = (w.re * 1e8).round() as i64;
        key[2 * k + 1] = (w.im * 1e8).round() as i64;
    }
    key
}

/// Shortest `{H, S}` word for each of the 24 single-qubit Clifford classes
/// (unitaries modulo global phase), in breadth-first order.
pub fn single_qubit_clifford_classes() -> Vec<Vec<Letter>> {
    let mut seen: HashMap<[i64; 8], ()> = HashMap::new();
    let mut classes = Vec::new();
    let mut frontier: Vec<Vec<Letter>> = vec![Vec::new()];
    seen.insert(phase_free_key(&Matrix2::identity()), ());
    classes.push(Vec::new());
    while !frontier.is_empty() && classes.len() < 24 {
        let mut next = Vec::new();
        for w in &frontier {
            for l in [Letter::H, Letter::S] {
                let mut v = w.clone();
                v.push(l);
                let key = phase_free_key(&word_unitary(&v));
                if seen.insert(key, ()).is_none() {
                    classes.push(v.clone());
                    next.push(v);
                }
            }
        }
        frontier = next;
    }
    classes
}

/// `|<A|U|H>|` for the word's unitary `U`.
pub fn conversion_overlap(word: &[Letter]) -> f64 {
    let u = word_unitary(word);
    let h = StateVector::magic_ket();
    let a = StateVector::a_state();
    let (h, a) = (h.amplitudes(), a.amplitudes());
    let uh = [u[(0, 0)] * h[0] + u[(0, 1)] * h[1], u[(1, 0)] * h[0] + u[(1, 1)] * h[1]];
    (a[0].conj() * uh[0] + a[1].conj() * uh[1]).norm()
}

/// A single-qubit Clifford word mapping `|H>` to `|A>` up to phase; the
/// first valid class in breadth-first order.
pub fn find_clifford_conversion() -> Vec<Letter> {
    single_qubit_clifford_classes()
        .into_iter()
        .find(|w| (conversion_overlap(w) - 1.0).abs() < 1e-10)
        .expect("a Clifford maps |H> to |A>")
}

pub fn count_magic_states(c: &UniversalCircuit) -> usize {
    c.ops.iter().filter(|op| matches!(op, UniversalOp::T(_))).count()
}

/// Replaces every `T` by the injection gadget. Magic qubits are appended
/// after the data qubits and consumed in order; each gadget appends one
/// classical bit.
pub fn expand_t_gates(c: &UniversalCircuit) -> CompiledCircuit {
    let s = count_magic_states(c);
    let (n, m) = (c.n, c.m);
    let conversion = find_clifford_conversion();
    let mut out = Vec::with_capacity(c.ops.len() + s * (conversion.len() + 6));
    let mut k = 0;
    for op in &c.ops {
        match *op {
            UniversalOp::Clifford(i) => out.push(i),
            UniversalOp::T(q) => {
                let a = n + k;
                let bit = m + k;
                for l in &conversion {
                    out.push(Instruction::Gate(l.on(a)));
                }
                out.push(Instruction::Gate(Gate::H(a)));
                out.push(Instruction::Gate(Gate::Cz(q, a)));
                out.push(Instruction::Gate(Gate::H(a)));
                out.push(Instruction::MeasureZ { qubit: a, cbit: bit });
                out.push(Instruction::Conditioned {
                    cbit: bit,
                    gate: Gate::S(q),
                });
                k += 1;
            }
        }
    }
    let clifford = CliffordCircuit::from_instructions(n + s, m + s, out)
        .expect("gadget indices are in range by construction");
    CompiledCircuit {
        clifford,
        magic_inputs: (n..n + s).collect(),
        s,
    }
}
