//! Bit-packed Pauli strings with a phase in {+1, +i, -1, -i}.
//!
//! Qubit `q` is encoded by the pair `(x_q, z_q)`: `(0,0) = I`, `(1,0) = X`,
//! `(0,1) = Z`, `(1,1) = Y`. The Hermitian `Y` is used directly, so a string
//! with phase `+1` and only `I/X/Y/Z` letters is a Hermitian operator.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

pub(crate) const WORD_BITS: usize = 64;

pub(crate) fn words_for(bits: usize) -> usize {
    bits.div_ceil(WORD_BITS)
}

/// Power of `i` multiplying a Pauli string.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct Phase(u8);

impl Phase {
    pub const PLUS_ONE: Phase = Phase(0);
    pub const PLUS_I: Phase = Phase(1);
    pub const MINUS_ONE: Phase = Phase(2);
    pub const MINUS_I: Phase = Phase(3);

    pub fn from_exponent(k: i64) -> Phase {
        Phase(k.rem_euclid(4) as u8)
    }

    /// Exponent `k` in `i^k`.
    pub fn exponent(self) -> u8 {
        self.0
    }

    pub fn is_real(self) -> bool {
        self.0 % 2 == 0
    }

    pub fn is_negative(self) -> bool {
        self.0 == 2 || self.0 == 3
    }

    pub fn mul(self, other: Phase) -> Phase {
        Phase((self.0 + other.0) % 4)
    }
}

/// Exponent of `i` picked up by `P1 * P2` summed over packed words, given as
/// the signed count `#(+i) - #(-i)`.
pub(crate) fn product_phase_word(x1: u64, z1: u64, x2: u64, z2: u64) -> i64 {
    let y = x1 & z1;
    let xo = x1 & !z1;
    let zo = !x1 & z1;
    let plus = (y & z2 & !x2) | (xo & z2 & x2) | (zo & x2 & !z2);
    let minus = (y & x2 & !z2) | (xo & z2 & !x2) | (zo & x2 & z2);
    plus.count_ones() as i64 - minus.count_ones() as i64
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PauliString {
    n: usize,
    x: Vec<u64>,
    z: Vec<u64>,
    phase: Phase,
}

impl PauliString {
    pub fn identity(n: usize) -> Self {
        let w = words_for(n);
        PauliString {
            n,
            x: vec![0; w],
            z: vec![0; w],
            phase: Phase::PLUS_ONE,
        }
    }

    /// Single-qubit `X` on qubit `q` of an `n`-qubit register.
    pub fn single_x(n: usize, q: usize) -> Self {
        let mut p = Self::identity(n);
        p.set(q, true, false);
        p
    }

    pub fn single_z(n: usize, q: usize) -> Self {
        let mut p = Self::identity(n);
        p.set(q, false, true);
        p
    }

    pub fn num_qubits(&self) -> usize {
        self.n
    }

    pub fn phase(&self) -> Phase {
        self.phase
    }

    pub fn set_phase(&mut self, phase: Phase) {
        self.phase = phase;
    }

    pub fn x_bit(&self, q: usize) -> bool {
        self.x[q / WORD_BITS] >> (q % WORD_BITS) & 1 == 1
    }

    pub fn z_bit(&self, q: usize) -> bool {
        self.z[q / WORD_BITS] >> (q % WORD_BITS) & 1 == 1
    }

    pub fn set(&mut self, q: usize, x: bool, z: bool) {
        let (w, b) = (q / WORD_BITS, q % WORD_BITS);
        self.x[w] = (self.x[w] & !(1 << b)) | ((x as u64) << b);
        self.z[w] = (self.z[w] & !(1 << b)) | ((z as u64) << b);
    }

    pub fn x_words(&self) -> &[u64] {
        &self.x
    }

    pub fn z_words(&self) -> &[u64] {
        &self.z
    }

    /// Letter on qubit `q`: one of `I`, `X`, `Y`, `Z`.
    pub fn letter(&self, q: usize) -> char {
        match (self.x_bit(q), self.z_bit(q)) {
            (false, false) => 'I',
            (true, false) => 'X',
            (true, true) => 'Y',
            (false, true) => 'Z',
        }
    }

    pub fn weight(&self) -> usize {
        self.x
            .iter()
            .zip(&self.z)
            .map(|(x, z)| (x | z).count_ones() as usize)
            .sum()
    }

    pub fn commutes_with(&self, other: &PauliString) -> bool {
        assert_eq!(self.n, other.n, "Pauli strings of different length");
        let mut parity = 0u32;
        for w in 0..self.x.len() {
            parity ^= ((self.x[w] & other.z[w]) ^ (self.z[w] & other.x[w])).count_ones() & 1;
        }
        parity == 0
    }

    /// Operator product `self * other`.
    pub fn mul(&self, other: &PauliString) -> PauliString {
        assert_eq!(self.n, other.n, "Pauli strings of different length");
        let mut k = self.phase.exponent() as i64 + other.phase.exponent() as i64;
        let mut x = Vec::with_capacity(self.x.len());
        let mut z = Vec::with_capacity(self.z.len());
        for w in 0..self.x.len() {
            k += product_phase_word(self.x[w], self.z[w], other.x[w], other.z[w]);
            x.push(self.x[w] ^ other.x[w]);
            z.push(self.z[w] ^ other.z[w]);
        }
        PauliString {
            n: self.n,
            x,
            z,
            phase: Phase::from_exponent(k),
        }
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let prefix = match self.phase.exponent() {
            0 => "+",
            1 => "+i",
            2 => "-",
            _ => "-i",
        };
        f.write_str(prefix)?;
        for q in 0..self.n {
            write!(f, "{}", self.letter(q))?;
        }
        Ok(())
    }
}

impl FromStr for PauliString {
    type Err = Error;

    /// Parses strings such as `+XIZ`, `-iYY` or `ZZ` (implicit `+`).
    fn from_str(s: &str) -> Result<Self> {
        let (phase, body) = if let Some(rest) = s.strip_prefix("+i") {
            (Phase::PLUS_I, rest)
        } else if let Some(rest) = s.strip_prefix("-i") {
            (Phase::MINUS_I, rest)
        } else if let Some(rest) = s.strip_prefix('+') {
            (Phase::PLUS_ONE, rest)
        } else if let Some(rest) = s.strip_prefix('-') {
            (Phase::MINUS_ONE, rest)
        } else {
            (Phase::PLUS_ONE, s)
        };
        let mut p = PauliString::identity(body.len());
        p.phase = phase;
        for (q, c) in body.chars().enumerate() {
            let (x, z) = match c {
                'I' | '_' => (false, false),
                'X' => (true, false),
                'Y' => (true, true),
                'Z' => (false, true),
                other => {
                    return Err(Error::Parse {
                        line: 0,
                        msg: format!("bad Pauli letter {other:?}"),
                    })
                }
            };
            p.set(q, x, z);
        }
        Ok(p)
    }
}
