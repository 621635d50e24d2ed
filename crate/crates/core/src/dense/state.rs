use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_4, FRAC_PI_8};

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::{DensityMatrix, C64, NORM_TOL};
use crate::circuit::Gate;
use crate::error::{Error, Result};

/// Pure state on `n <= 20` qubits. Qubit 0 is the most significant bit of
/// the basis index, so `a.tensor(&b)` puts `a`'s qubits first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<[f64; 2]>", into = "Vec<[f64; 2]>")]
pub struct StateVector {
    n: usize,
    amps: Vec<C64>,
}

/// Both outcomes of a Z measurement. A branch state is `None` when its
/// probability is below `1e-15`.
#[derive(Debug, Clone)]
pub struct ZBranches {
    pub p0: f64,
    pub s0: Option<StateVector>,
    pub p1: f64,
    pub s1: Option<StateVector>,
}

const BRANCH_EPS: f64 = 1e-15;

impl StateVector {
    pub const MAX_QUBITS: usize = 20;

    pub fn zero(n: usize) -> Result<Self> {
        Self::basis(n, 0)
    }

    pub fn basis(n: usize, index: usize) -> Result<Self> {
        if n > Self::MAX_QUBITS {
            return Err(Error::TooLarge(format!(
                "{n} qubits exceeds the dense limit of {}",
                Self::MAX_QUBITS
            )));
        }
        if index >= 1 << n {
            return Err(Error::InvalidState(format!("basis index {index} for {n} qubits")));
        }
        let mut amps = vec![C64::new(0.0, 0.0); 1 << n];
        amps[index] = C64::new(1.0, 0.0);
        Ok(StateVector { n, amps })
    }

    /// Wraps amplitudes that must already be normalized to within `1e-10`.
    pub fn from_amplitudes(amps: Vec<C64>) -> Result<Self> {
        let s = Self::from_unnormalized_raw(amps)?;
        let norm = s.norm_sqr();
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(Error::InvalidState(format!("squared norm {norm} != 1")));
        }
        Ok(s)
    }

    /// Rescales `amps` to unit norm.
    pub fn normalized(amps: Vec<C64>) -> Result<Self> {
        let mut s = Self::from_unnormalized_raw(amps)?;
        let norm = s.norm_sqr().sqrt();
        if norm < 1e-300 {
            return Err(Error::InvalidState("zero vector".into()));
        }
        s.amps.iter_mut().for_each(|a| *a /= norm);
        Ok(s)
    }

    fn from_unnormalized_raw(amps: Vec<C64>) -> Result<Self> {
        let len = amps.len();
        if len == 0 || !len.is_power_of_two() {
            return Err(Error::InvalidState(format!("length {len} is not a power of two")));
        }
        let n = len.trailing_zeros() as usize;
        if n > Self::MAX_QUBITS {
            return Err(Error::TooLarge(format!("{n} qubits")));
        }
        Ok(StateVector { n, amps })
    }

    /// `|H> = sin(pi/8)|0> - cos(pi/8)|1>`, with `<X> = <Z> = -1/sqrt(2)`.
    pub fn magic_ket() -> Self {
        StateVector {
            n: 1,
            amps: vec![
                C64::new(FRAC_PI_8.sin(), 0.0),
                C64::new(-FRAC_PI_8.cos(), 0.0),
            ],
        }
    }

    /// `|A> = (|0> + e^{i pi/4}|1>)/sqrt(2) = T|+>`.
    pub fn a_state() -> Self {
        StateVector {
            n: 1,
            amps: vec![
                C64::new(FRAC_1_SQRT_2, 0.0),
                C64::from_polar(FRAC_1_SQRT_2, FRAC_PI_4),
            ],
        }
    }

    pub fn plus() -> Self {
        StateVector {
            n: 1,
            amps: vec![C64::new(FRAC_1_SQRT_2, 0.0); 2],
        }
    }

    pub fn minus() -> Self {
        StateVector {
            n: 1,
            amps: vec![C64::new(FRAC_1_SQRT_2, 0.0), C64::new(-FRAC_1_SQRT_2, 0.0)],
        }
    }

    /// Haar-random pure state.
    pub fn random<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<Self> {
        let amps = (0..1usize << n)
            .map(|_| C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
            .collect();
        Self::normalized(amps)
    }

    pub fn num_qubits(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &StateVector) -> Result<C64> {
        if self.n != other.n {
            return Err(Error::DimensionMismatch(format!("{} vs {} qubits", self.n, other.n)));
        }
        Ok(self
            .amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| a.conj() * b)
            .sum())
    }

    pub fn tensor(&self, other: &StateVector) -> Result<StateVector> {
        let n = self.n + other.n;
        if n > Self::MAX_QUBITS {
            return Err(Error::TooLarge(format!("{n} qubits")));
        }
        let mut amps = Vec::with_capacity(1 << n);
        for a in &self.amps {
            for b in &other.amps {
                amps.push(a * b);
            }
        }
        Ok(StateVector { n, amps })
    }

    #[inline]
    fn shift(&self, q: usize) -> usize {
        self.n - 1 - q
    }

    fn check(&self, q: usize) -> Result<()> {
        if q < self.n {
            Ok(())
        } else {
            Err(Error::QubitOutOfRange { index: q, n: self.n })
        }
    }

    /// Applies `u` to `targets`; `targets[0]` is the most significant qubit
    /// of `u`'s basis ordering.
    pub fn apply_unitary(&mut self, u: &DMatrix<C64>, targets: &[usize]) -> Result<()> {
        let k = targets.len();
        if u.nrows() != 1 << k || u.ncols() != 1 << k {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} matrix on {k} qubits",
                u.nrows(),
                u.ncols()
            )));
        }
        for (i, &q) in targets.iter().enumerate() {
            self.check(q)?;
            if targets[..i].contains(&q) {
                return Err(Error::DuplicateQubit(q));
            }
        }
        let dev = (u.adjoint() * u - DMatrix::<C64>::identity(1 << k, 1 << k))
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max);
        if dev > NORM_TOL {
            return Err(Error::NonUnitary(dev));
        }
        let masks: Vec<usize> = targets.iter().map(|&q| 1 << self.shift(q)).collect();
        let all: usize = masks.iter().sum();
        let sub = 1 << k;
        let mut idx = vec![0usize; sub];
        let mut buf = vec![C64::new(0.0, 0.0); sub];
        for base in 0..self.amps.len() {
            if base & all != 0 {
                continue;
            }
            for (local, slot) in idx.iter_mut().enumerate() {
                let mut i = base;
                for (t, m) in masks.iter().enumerate() {
                    if local >> (k - 1 - t) & 1 == 1 {
                        i |= m;
                    }
                }
                *slot = i;
            }
            for r in 0..sub {
                buf[r] = (0..sub).map(|c| u[(r, c)] * self.amps[idx[c]]).sum();
            }
            for r in 0..sub {
                self.amps[idx[r]] = buf[r];
            }
        }
        Ok(())
    }

    pub fn h(&mut self, q: usize) -> Result<()> {
        self.check(q)?;
        let m = 1 << self.shift(q);
        for i in 0..self.amps.len() {
            if i & m == 0 {
                let (a, b) = (self.amps[i], self.amps[i | m]);
                self.amps[i] = (a + b) * FRAC_1_SQRT_2;
                self.amps[i | m] = (a - b) * FRAC_1_SQRT_2;
            }
        }
        Ok(())
    }

    fn phase_on_one(&mut self, q: usize, phase: C64) -> Result<()> {
        self.check(q)?;
        let m = 1 << self.shift(q);
        for (i, a) in self.amps.iter_mut().enumerate() {
            if i & m != 0 {
                *a *= phase;
            }
        }
        Ok(())
    }

    pub fn s(&mut self, q: usize) -> Result<()> {
        self.phase_on_one(q, C64::new(0.0, 1.0))
    }

    pub fn t(&mut self, q: usize) -> Result<()> {
        self.phase_on_one(q, Complex64::from_polar(1.0, FRAC_PI_4))
    }

    pub fn cz(&mut self, a: usize, b: usize) -> Result<()> {
        self.check(a)?;
        self.check(b)?;
        if a == b {
            return Err(Error::DuplicateQubit(a));
        }
        let m = (1 << self.shift(a)) | (1 << self.shift(b));
        for (i, amp) in self.amps.iter_mut().enumerate() {
            if i & m == m {
                *amp = -*amp;
            }
        }
        Ok(())
    }

    pub fn apply_gate(&mut self, g: &Gate) -> Result<()> {
        match *g {
            Gate::H(q) => self.h(q),
            Gate::S(q) => self.s(q),
            Gate::Cz(a, b) => self.cz(a, b),
        }
    }

    /// Probability of the Z outcome 0 (eigenvalue +1) on qubit `q`.
    pub fn prob_zero(&self, q: usize) -> Result<f64> {
        self.check(q)?;
        let m = 1 << self.shift(q);
        Ok(self
            .amps
            .iter()
            .enumerate()
            .filter(|(i, _)| i & m == 0)
            .map(|(_, a)| a.norm_sqr())
            .sum())
    }

    fn project(&self, q: usize, outcome: bool, prob: f64) -> StateVector {
        let m = 1 << self.shift(q);
        let scale = 1.0 / prob.sqrt();
        let amps = self
            .amps
            .iter()
            .enumerate()
            .map(|(i, a)| {
                if (i & m != 0) == outcome {
                    a * scale
                } else {
                    C64::new(0.0, 0.0)
                }
            })
            .collect();
        StateVector { n: self.n, amps }
    }

    pub fn branch_z(&self, q: usize) -> Result<ZBranches> {
        let p0 = self.prob_zero(q)?.clamp(0.0, 1.0);
        let p1 = (1.0 - p0).max(0.0);
        Ok(ZBranches {
            p0,
            s0: (p0 > BRANCH_EPS).then(|| self.project(q, false, p0)),
            p1,
            s1: (p1 > BRANCH_EPS).then(|| self.project(q, true, p1)),
        })
    }

    /// Born-rule Z measurement: `(outcome, collapsed state, probability)`.
    pub fn measure_z<R: Rng + ?Sized>(&self, q: usize, rng: &mut R) -> Result<(bool, StateVector, f64)> {
        let b = self.branch_z(q)?;
        let u: f64 = rng.random();
        match (b.s0, b.s1) {
            (Some(s0), Some(s1)) => {
                if u < b.p0 {
                    Ok((false, s0, b.p0))
                } else {
                    Ok((true, s1, b.p1))
                }
            }
            (Some(s0), None) => Ok((false, s0, b.p0)),
            (None, Some(s1)) => Ok((true, s1, b.p1)),
            (None, None) => unreachable!("branch probabilities sum to one"),
        }
    }

    /// Moves qubit `order[k]` of `self` to position `k`.
    pub fn permute(&self, order: &[usize]) -> Result<StateVector> {
        let n = self.n;
        let mut seen = vec![false; n];
        if order.len() != n {
            return Err(Error::DimensionMismatch(format!("permutation of length {}", order.len())));
        }
        for &q in order {
            self.check(q)?;
            if std::mem::replace(&mut seen[q], true) {
                return Err(Error::DuplicateQubit(q));
            }
        }
        let mut amps = vec![C64::new(0.0, 0.0); self.amps.len()];
        for (old, a) in self.amps.iter().enumerate() {
            let mut new = 0usize;
            for (k, &q) in order.iter().enumerate() {
                if old >> (n - 1 - q) & 1 == 1 {
                    new |= 1 << (n - 1 - k);
                }
            }
            amps[new] = *a;
        }
        Ok(StateVector { n, amps })
    }

    pub fn to_density(&self) -> DensityMatrix {
        DensityMatrix::from_pure(self)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("plain arrays serialize")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

impl TryFrom<Vec<[f64; 2]>> for StateVector {
    type Error = Error;

    fn try_from(v: Vec<[f64; 2]>) -> Result<Self> {
        Self::from_amplitudes(v.into_iter().map(|[re, im]| C64::new(re, im)).collect())
    }
}

impl From<StateVector> for Vec<[f64; 2]> {
    fn from(s: StateVector) -> Self {
        s.amps.iter().map(|a| [a.re, a.im]).collect()
    }
}
