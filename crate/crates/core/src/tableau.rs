//! Destabilizer/stabilizer tableau for `n`-qubit stabilizer states.
//!
//! Storage is column-major: for each qubit there is one packed bit column
//! over the `2n` generator rows for the `x` part and one for the `z` part.
//! Rows `0..n` are destabilizers and rows `n..2n` are stabilizers. Gates touch
//! two columns, so H, S and CZ cost `O(n / 32)` word operations. A random
//! measurement multiplies many rows by the pivot row at once; the phase of
//! every row is tracked with a bit-sliced mod-4 counter.

use rand::Rng;

use crate::circuit::Gate;
use crate::error::{Error, Result};
use crate::pauli::{words_for, Phase, PauliString, WORD_BITS};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Measurement {
    /// `true` for the `-1` eigenvalue (classical bit 1).
    pub outcome: bool,
    pub deterministic: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Tableau {
    n: usize,
    /// Words per column (covers `2n` rows).
    rw: usize,
    xs: Vec<u64>,
    zs: Vec<u64>,
    signs: Vec<u64>,
}

#[inline]
fn get_bit(words: &[u64], i: usize) -> bool {
    words[i / WORD_BITS] >> (i % WORD_BITS) & 1 == 1
}

#[inline]
fn put_bit(words: &mut [u64], i: usize, v: bool) {
    let (w, b) = (i / WORD_BITS, i % WORD_BITS);
    words[w] = (words[w] & !(1 << b)) | ((v as u64) << b);
}

impl Tableau {
    /// The state `|0>^n`.
    pub fn new(n: usize) -> Self {
        let rw = words_for(2 * n);
        let mut t = Tableau {
            n,
            rw,
            xs: vec![0; n * rw],
            zs: vec![0; n * rw],
            signs: vec![0; rw],
        };
        for q in 0..n {
            put_bit(t.col_x_mut(q), q, true);
            put_bit(t.col_z_mut(q), n + q, true);
        }
        t
    }

    pub fn num_qubits(&self) -> usize {
        self.n
    }

    fn col_x(&self, q: usize) -> &[u64] {
        &self.xs[q * self.rw..(q + 1) * self.rw]
    }

    fn col_z(&self, q: usize) -> &[u64] {
        &self.zs[q * self.rw..(q + 1) * self.rw]
    }

    fn col_x_mut(&mut self, q: usize) -> &mut [u64] {
        &mut self.xs[q * self.rw..(q + 1) * self.rw]
    }

    fn col_z_mut(&mut self, q: usize) -> &mut [u64] {
        &mut self.zs[q * self.rw..(q + 1) * self.rw]
    }

    fn check(&self, q: usize) -> Result<()> {
        if q < self.n {
            Ok(())
        } else {
            Err(Error::QubitOutOfRange { index: q, n: self.n })
        }
    }

    pub fn h(&mut self, q: usize) -> Result<()> {
        self.check(q)?;
        let off = q * self.rw;
        for w in 0..self.rw {
            let (x, z) = (self.xs[off + w], self.zs[off + w]);
            self.signs[w] ^= x & z;
            self.xs[off + w] = z;
            self.zs[off + w] = x;
        }
        Ok(())
    }

    pub fn s(&mut self, q: usize) -> Result<()> {
        self.check(q)?;
        let off = q * self.rw;
        for w in 0..self.rw {
            let (x, z) = (self.xs[off + w], self.zs[off + w]);
            self.signs[w] ^= x & z;
            self.zs[off + w] = z ^ x;
        }
        Ok(())
    }

    pub fn cz(&mut self, a: usize, b: usize) -> Result<()> {
        self.check(a)?;
        self.check(b)?;
        if a == b {
            return Err(Error::DuplicateQubit(a));
        }
        let (oa, ob) = (a * self.rw, b * self.rw);
        for w in 0..self.rw {
            let (xa, xb) = (self.xs[oa + w], self.xs[ob + w]);
            let (za, zb) = (self.zs[oa + w], self.zs[ob + w]);
            self.signs[w] ^= xa & xb & (za ^ zb);
            self.zs[oa + w] = za ^ xb;
            self.zs[ob + w] = zb ^ xa;
        }
        Ok(())
    }

    pub fn apply_gate(&mut self, gate: &Gate) -> Result<()> {
        match *gate {
            Gate::H(q) => self.h(q),
            Gate::S(q) => self.s(q),
            Gate::Cz(a, b) => self.cz(a, b),
        }
    }

    /// Outcome of a Z measurement on `q` if it is determined by the state.
    pub fn peek_z(&self, q: usize) -> Result<Option<bool>> {
        self.check(q)?;
        if self.stabilizer_pivot(q).is_some() {
            return Ok(None);
        }
        Ok(Some(self.deterministic_outcome(q)))
    }

    pub fn measure_z<R: Rng + ?Sized>(&mut self, q: usize, rng: &mut R) -> Result<Measurement> {
        self.measure_z_with(q, || rng.random::<bool>())
    }

    /// Z measurement where `pick` supplies the outcome if it is random.
    /// `pick` is not called for deterministic measurements.
    pub fn measure_z_with(&mut self, q: usize, pick: impl FnOnce() -> bool) -> Result<Measurement> {
        self.check(q)?;
        match self.stabilizer_pivot(q) {
            Some(p) => {
                let outcome = pick();
                self.collapse(q, p, outcome);
                Ok(Measurement {
                    outcome,
                    deterministic: false,
                })
            }
            None => Ok(Measurement {
                outcome: self.deterministic_outcome(q),
                deterministic: true,
            }),
        }
    }

    /// First stabilizer row anticommuting with `Z_q`.
    fn stabilizer_pivot(&self, q: usize) -> Option<usize> {
        let col = self.col_x(q);
        let (n, rw) = (self.n, self.rw);
        let first = n / WORD_BITS;
        for (w, &word) in col.iter().enumerate().take(rw).skip(first) {
            let mut bits = word;
            if w == first {
                bits &= !0u64 << (n % WORD_BITS);
            }
            if bits != 0 {
                let row = w * WORD_BITS + bits.trailing_zeros() as usize;
                if row < 2 * n {
                    return Some(row);
                }
            }
        }
        None
    }

    fn collapse(&mut self, q: usize, p: usize, outcome: bool) {
        let (n, rw) = (self.n, self.rw);
        // Rows to multiply by row p: every row with x_q set except p and its
        // paired destabilizer, which is overwritten below.
        let mut mask: Vec<u64> = self.col_x(q).to_vec();
        put_bit(&mut mask, p, false);
        put_bit(&mut mask, p - n, false);

        let mut c0 = vec![0u64; rw];
        let mut c1 = vec![0u64; rw];
        for j in 0..n {
            let xp = get_bit(self.col_x(j), p);
            let zp = get_bit(self.col_z(j), p);
            if !xp && !zp {
                continue;
            }
            let off = j * rw;
            for w in 0..rw {
                let m = mask[w];
                if m == 0 {
                    continue;
                }
                let x2 = self.xs[off + w];
                let z2 = self.zs[off + w];
                let (plus, minus) = match (xp, zp) {
                    (true, true) => (z2 & !x2, x2 & !z2),
                    (true, false) => (z2 & x2, z2 & !x2),
                    _ => (x2 & !z2, x2 & z2),
                };
                let plus = plus & m;
                let minus = minus & m;
                // +1 on plus rows, +3 on minus rows, mod 4.
                let inc = plus | minus;
                let carry = c0[w] & inc;
                c0[w] ^= inc;
                c1[w] ^= carry ^ minus;
                if xp {
                    self.xs[off + w] = x2 ^ m;
                }
                if zp {
                    self.zs[off + w] = z2 ^ m;
                }
            }
        }
        debug_assert!(
            c0.iter().zip(&mask).all(|(c, m)| c & m == 0),
            "row product with odd power of i"
        );
        let rp = if get_bit(&self.signs, p) { !0u64 } else { 0 };
        for w in 0..rw {
            self.signs[w] ^= mask[w] & (c1[w] ^ rp);
        }

        // Destabilizer p-n takes the old stabilizer; stabilizer p becomes ±Z_q.
        let d = p - n;
        for j in 0..n {
            let xb = get_bit(self.col_x(j), p);
            let zb = get_bit(self.col_z(j), p);
            put_bit(self.col_x_mut(j), d, xb);
            put_bit(self.col_z_mut(j), d, zb);
            put_bit(self.col_x_mut(j), p, false);
            put_bit(self.col_z_mut(j), p, false);
        }
        let sp = get_bit(&self.signs, p);
        put_bit(&mut self.signs, d, sp);
        put_bit(self.col_z_mut(q), p, true);
        put_bit(&mut self.signs, p, outcome);
    }

    fn deterministic_outcome(&self, q: usize) -> bool {
        let n = self.n;
        let mut acc = PauliString::identity(n);
        for i in 0..n {
            if get_bit(self.col_x(q), i) {
                acc = acc.mul(&self.row(n + i));
            }
        }
        debug_assert!(acc.phase().is_real());
        acc.phase().is_negative()
    }

    /// Generator row `i` (`0..n` destabilizers, `n..2n` stabilizers).
    pub fn row(&self, i: usize) -> PauliString {
        let mut p = PauliString::identity(self.n);
        for j in 0..self.n {
            p.set(j, get_bit(self.col_x(j), i), get_bit(self.col_z(j), i));
        }
        if get_bit(&self.signs, i) {
            p.set_phase(Phase::MINUS_ONE);
        }
        p
    }

    pub fn stabilizers(&self) -> Vec<PauliString> {
        (self.n..2 * self.n).map(|i| self.row(i)).collect()
    }

    pub fn destabilizers(&self) -> Vec<PauliString> {
        (0..self.n).map(|i| self.row(i)).collect()
    }

    /// Checks the commutation structure: stabilizers commute pairwise,
    /// destabilizer `i` anticommutes only with stabilizer `i`, and
    /// destabilizers commute pairwise. This pairing implies full rank.
    pub fn audit(&self) -> std::result::Result<(), String> {
        let n = self.n;
        let rows: Vec<PauliString> = (0..2 * n).map(|i| self.row(i)).collect();
        for i in 0..2 * n {
            for j in (i + 1)..2 * n {
                let expect_anti = j == i + n;
                let anti = !rows[i].commutes_with(&rows[j]);
                if anti != expect_anti {
                    return Err(format!(
                        "rows {i} and {j}: expected {}, got {}",
                        if expect_anti { "anticommuting" } else { "commuting" },
                        if anti { "anticommuting" } else { "commuting" }
                    ));
                }
            }
        }
        Ok(())
    }
}
