//! Clifford circuits with Z measurements, classical XOR and classically
//! conditioned gates, plus their line-oriented text form:
//!
//! ```text
//! qubits 3
//! cbits 2
//! H 0
//! CZ 0 1
//! MZ 1 -> c0
//! XOR c0 c1 -> c1
//! IF c0 : S 2
//! ```

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tableau::{Measurement, Tableau};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Gate {
    H(usize),
    S(usize),
    Cz(usize, usize),
}

impl Gate {
    pub fn qubits(&self) -> Vec<usize> {
        match *self {
            Gate::H(q) | Gate::S(q) => vec![q],
            Gate::Cz(a, b) => vec![a, b],
        }
    }

    pub(crate) fn validate(&self, n: usize) -> Result<()> {
        for q in self.qubits() {
            if q >= n {
                return Err(Error::QubitOutOfRange { index: q, n });
            }
        }
        if let Gate::Cz(a, b) = *self {
            if a == b {
                return Err(Error::DuplicateQubit(a));
            }
        }
        Ok(())
    }
}

impl fmt::Display for Gate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Gate::H(q) => write!(f, "H {q}"),
            Gate::S(q) => write!(f, "S {q}"),
            Gate::Cz(a, b) => write!(f, "CZ {a} {b}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Instruction {
    Gate(Gate),
    MeasureZ { qubit: usize, cbit: usize },
    Xor { a: usize, b: usize, out: usize },
    Conditioned { cbit: usize, gate: Gate },
}

impl Instruction {
    pub fn validate(&self, n: usize, m: usize) -> Result<()> {
        let cbit = |c: usize| {
            if c < m {
                Ok(())
            } else {
                Err(Error::CbitOutOfRange { index: c, m })
            }
        };
        match *self {
            Instruction::Gate(g) => g.validate(n),
            Instruction::MeasureZ { qubit, cbit: c } => {
                if qubit >= n {
                    return Err(Error::QubitOutOfRange { index: qubit, n });
                }
                cbit(c)
            }
            Instruction::Xor { a, b, out } => {
                cbit(a)?;
                cbit(b)?;
                cbit(out)
            }
            Instruction::Conditioned { cbit: c, gate } => {
                cbit(c)?;
                gate.validate(n)
            }
        }
    }
}

impl fmt::Display for Instruction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Instruction::Gate(g) => write!(f, "{g}"),
            Instruction::MeasureZ { qubit, cbit } => write!(f, "MZ {qubit} -> c{cbit}"),
            Instruction::Xor { a, b, out } => write!(f, "XOR c{a} c{b} -> c{out}"),
            Instruction::Conditioned { cbit, gate } => write!(f, "IF c{cbit} : {gate}"),
        }
    }
}

/// One parsed body line: either an instruction or a `T q` gate (only legal
/// in universal source circuits).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Line {
    Instr(Instruction),
    T(usize),
}

fn parse_usize(tok: &str, line: usize) -> Result<usize> {
    tok.parse().map_err(|_| Error::Parse {
        line,
        msg: format!("expected a non-negative integer, got {tok:?}"),
    })
}

fn parse_cbit(tok: &str, line: usize) -> Result<usize> {
    match tok.strip_prefix('c') {
        Some(rest) => parse_usize(rest, line),
        None => Err(Error::Parse {
            line,
            msg: format!("expected a classical bit like c3, got {tok:?}"),
        }),
    }
}

fn parse_gate(toks: &[&str], line: usize) -> Result<Gate> {
    let bad = || Error::Parse {
        line,
        msg: format!("malformed gate {:?}", toks.join(" ")),
    };
    match toks {
        ["H", q] => Ok(Gate::H(parse_usize(q, line)?)),
        ["S", q] => Ok(Gate::S(parse_usize(q, line)?)),
        ["CZ", a, b] => Ok(Gate::Cz(parse_usize(a, line)?, parse_usize(b, line)?)),
        _ => Err(bad()),
    }
}

pub(crate) fn parse_line(text: &str, line: usize) -> Result<Line> {
    let toks: Vec<&str> = text.split_whitespace().collect();
    let bad = || Error::Parse {
        line,
        msg: format!("unrecognized instruction {text:?}"),
    };
    match toks.as_slice() {
        ["T", q] => Ok(Line::T(parse_usize(q, line)?)),
        ["MZ", q, "->", c] => Ok(Line::Instr(Instruction::MeasureZ {
            qubit: parse_usize(q, line)?,
            cbit: parse_cbit(c, line)?,
        })),
        ["XOR", a, b, "->", c] => Ok(Line::Instr(Instruction::Xor {
            a: parse_cbit(a, line)?,
            b: parse_cbit(b, line)?,
            out: parse_cbit(c, line)?,
        })),
        ["IF", c, ":", rest @ ..] => Ok(Line::Instr(Instruction::Conditioned {
            cbit: parse_cbit(c, line)?,
            gate: parse_gate(rest, line)?,
        })),
        [first, ..] if matches!(*first, "H" | "S" | "CZ") => {
            Ok(Line::Instr(Instruction::Gate(parse_gate(&toks, line)?)))
        }
        _ => Err(bad()),
    }
}

/// Parsed header and body of a circuit file. Comment lines (`#`) are
/// returned separately so callers can interpret directives in them.
pub(crate) struct ParsedText {
    pub n: usize,
    pub m: usize,
    pub lines: Vec<(usize, Line)>,
    pub comments: Vec<(usize, String)>,
}

pub(crate) fn parse_text(text: &str) -> Result<ParsedText> {
    let mut n = None;
    let mut m = None;
    let mut lines = Vec::new();
    let mut comments = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let lineno = idx + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() {
            continue;
        }
        if let Some(c) = trimmed.strip_prefix('#') {
            comments.push((lineno, c.trim().to_string()));
            continue;
        }
        let toks: Vec<&str> = trimmed.split_whitespace().collect();
        match toks.as_slice() {
            ["qubits", v] if n.is_none() && lines.is_empty() => n = Some(parse_usize(v, lineno)?),
            ["cbits", v] if m.is_none() && lines.is_empty() => m = Some(parse_usize(v, lineno)?),
            _ => {
                if n.is_none() || m.is_none() {
                    return Err(Error::Parse {
                        line: lineno,
                        msg: "header `qubits N` / `cbits M` must come first".into(),
                    });
                }
                lines.push((lineno, parse_line(trimmed, lineno)?));
            }
        }
    }
    match (n, m) {
        (Some(n), Some(m)) => Ok(ParsedText {
            n,
            m,
            lines,
            comments,
        }),
        _ => Err(Error::Parse {
            line: 0,
            msg: "missing `qubits N` / `cbits M` header".into(),
        }),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CliffordCircuit {
    n: usize,
    m: usize,
    instructions: Vec<Instruction>,
}

/// Result of executing a circuit on the tableau engine.
#[derive(Debug, Clone)]
pub struct Run {
    pub tableau: Tableau,
    pub bits: Vec<bool>,
    /// One entry per executed `MeasureZ`, in order.
    pub measurements: Vec<Measurement>,
}

impl CliffordCircuit {
    pub fn new(n: usize, m: usize) -> Self {
        CliffordCircuit {
            n,
            m,
            instructions: Vec::new(),
        }
    }

    pub fn from_instructions(n: usize, m: usize, instructions: Vec<Instruction>) -> Result<Self> {
        for i in &instructions {
            i.validate(n, m)?;
        }
        Ok(CliffordCircuit { n, m, instructions })
    }

    pub fn num_qubits(&self) -> usize {
        self.n
    }

    pub fn num_cbits(&self) -> usize {
        self.m
    }

    pub fn instructions(&self) -> &[Instruction] {
        &self.instructions
    }

    pub fn push(&mut self, instr: Instruction) -> Result<()> {
        instr.validate(self.n, self.m)?;
        self.instructions.push(instr);
        Ok(())
    }

    pub fn gate(&mut self, g: Gate) -> Result<()> {
        self.push(Instruction::Gate(g))
    }

    /// Runs the circuit from `|0>^n` with an all-zero classical register.
    pub fn run<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<Run> {
        self.run_with(|_| rng.random::<bool>())
    }

    /// Like [`run`](Self::run), but random measurement outcomes come from
    /// `pick`, called with the index of the measurement among all executed
    /// `MeasureZ` instructions.
    pub fn run_with(&self, mut pick: impl FnMut(usize) -> bool) -> Result<Run> {
        let mut t = Tableau::new(self.n);
        let mut bits = vec![false; self.m];
        let mut measurements = Vec::new();
        for instr in &self.instructions {
            match *instr {
                Instruction::Gate(g) => t.apply_gate(&g)?,
                Instruction::MeasureZ { qubit, cbit } => {
                    let k = measurements.len();
                    let meas = t.measure_z_with(qubit, || pick(k))?;
                    bits[cbit] = meas.outcome;
                    measurements.push(meas);
                }
                Instruction::Xor { a, b, out } => bits[out] = bits[a] ^ bits[b],
                Instruction::Conditioned { cbit, gate } => {
                    if bits[cbit] {
                        t.apply_gate(&gate)?;
                    }
                }
            }
        }
        Ok(Run {
            tableau: t,
            bits,
            measurements,
        })
    }
}

/// Executes `c` from `|0>^n`: returns the final tableau and classical register.
pub fn run_circuit<R: Rng + ?Sized>(c: &CliffordCircuit, rng: &mut R) -> Result<(Tableau, Vec<bool>)> {
    let run = c.run(rng)?;
    Ok((run.tableau, run.bits))
}

impl fmt::Display for CliffordCircuit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "qubits {}", self.n)?;
        writeln!(f, "cbits {}", self.m)?;
        for i in &self.instructions {
            writeln!(f, "{i}")?;
        }
        Ok(())
    }
}

impl FromStr for CliffordCircuit {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parsed = parse_text(s)?;
        let mut c = CliffordCircuit::new(parsed.n, parsed.m);
        for (line, l) in parsed.lines {
            match l {
                Line::Instr(i) => c.push(i).map_err(|e| Error::Parse {
                    line,
                    msg: e.to_string(),
                })?,
                Line::T(_) => {
                    return Err(Error::Parse {
                        line,
                        msg: "T is not a Clifford gate".into(),
                    })
                }
            }
        }
        Ok(c)
    }
}
