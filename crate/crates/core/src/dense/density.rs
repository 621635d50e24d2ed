use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::{StateVector, C64, NORM_TOL};
use crate::error::{Error, Result};

/// Largest matrix dimension accepted for density matrices.
pub const MAX_DENSITY_DIM: usize = 256;

/// Eigenvalues in `[-PSD_TOL, 0)` are treated as zero; anything more
/// negative is rejected.
const PSD_TOL: f64 = 1e-9;

/// Eigenvalues at or below this are dropped from square-root factors.
/// Keeping them would turn `1e-16` noise into `1e-8` after the square root.
const EIG_DROP: f64 = 1e-13;

/// Mixed state on an ordered list of subsystems with dimensions `dims`.
/// The matrix uses Kronecker ordering: subsystem 0 is the most significant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "DensityJson", into = "DensityJson")]
pub struct DensityMatrix {
    dims: Vec<usize>,
    mat: DMatrix<C64>,
}

#[derive(Serialize, Deserialize)]
struct DensityJson {
    dims: Vec<usize>,
    /// Row-major `[re, im]` pairs.
    entries: Vec<[f64; 2]>,
}

impl TryFrom<DensityJson> for DensityMatrix {
    type Error = Error;

    fn try_from(j: DensityJson) -> Result<Self> {
        let d: usize = j.dims.iter().product();
        if j.entries.len() != d * d {
            return Err(Error::DimensionMismatch(format!(
                "{} entries for dimension {d}",
                j.entries.len()
            )));
        }
        let mat = DMatrix::from_row_iterator(d, d, j.entries.iter().map(|&[re, im]| C64::new(re, im)));
        DensityMatrix::new(j.dims, mat)
    }
}

impl From<DensityMatrix> for DensityJson {
    fn from(r: DensityMatrix) -> Self {
        let d = r.dim();
        let mut entries = Vec::with_capacity(d * d);
        for i in 0..d {
            for j in 0..d {
                let z = r.mat[(i, j)];
                entries.push([z.re, z.im]);
            }
        }
        DensityJson { dims: r.dims, entries }
    }
}

/// Eigen-decomposition of a Hermitian matrix (symmetrized first).
pub fn hermitian_eigen(m: &DMatrix<C64>) -> (DVector<f64>, DMatrix<C64>) {
    let h = (m + m.adjoint()) * C64::new(0.5, 0.0);
    let eig = SymmetricEigen::new(h);
    (eig.eigenvalues, eig.eigenvectors)
}

/// `sqrt(rho) = W W^dagger` restricted to the numerically non-zero spectrum:
/// returns `W = V_k diag(sqrt(lambda_k))`.
fn sqrt_factor(m: &DMatrix<C64>) -> DMatrix<C64> {
    let (vals, vecs) = hermitian_eigen(m);
    let keep: Vec<usize> = (0..vals.len()).filter(|&i| vals[i] > EIG_DROP).collect();
    let mut w = DMatrix::<C64>::zeros(m.nrows(), keep.len());
    for (c, &i) in keep.iter().enumerate() {
        let s = vals[i].sqrt();
        for r in 0..m.nrows() {
            w[(r, c)] = vecs[(r, i)] * s;
        }
    }
    w
}

impl DensityMatrix {
    /// Validates Hermiticity, unit trace and positivity (all to `1e-10`,
    /// positivity to `-1e-9`).
    pub fn new(dims: Vec<usize>, mat: DMatrix<C64>) -> Result<Self> {
        let r = Self::new_unchecked(dims, mat)?;
        r.validate()?;
        Ok(r)
    }

    /// Checks only shapes.
    pub fn new_unchecked(dims: Vec<usize>, mat: DMatrix<C64>) -> Result<Self> {
        if dims.is_empty() || dims.contains(&0) {
            return Err(Error::DimensionMismatch(format!("bad subsystem dims {dims:?}")));
        }
        let d: usize = dims.iter().product();
        if d > MAX_DENSITY_DIM {
            return Err(Error::TooLarge(format!(
                "density matrix dimension {d} exceeds {MAX_DENSITY_DIM}"
            )));
        }
        if mat.nrows() != d || mat.ncols() != d {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} matrix for dims {dims:?}",
                mat.nrows(),
                mat.ncols()
            )));
        }
        Ok(DensityMatrix { dims, mat })
    }

    pub fn validate(&self) -> Result<()> {
        let herm = (&self.mat - self.mat.adjoint())
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max);
        if herm > NORM_TOL {
            return Err(Error::InvalidState(format!("not Hermitian (deviation {herm:.3e})")));
        }
        let tr = self.mat.trace();
        if (tr.re - 1.0).abs() > NORM_TOL || tr.im.abs() > NORM_TOL {
            return Err(Error::InvalidState(format!("trace {tr} != 1")));
        }
        let (vals, _) = hermitian_eigen(&self.mat);
        let min = vals.iter().copied().fold(f64::INFINITY, f64::min);
        if min < -PSD_TOL {
            return Err(Error::InvalidState(format!("negative eigenvalue {min:.3e}")));
        }
        Ok(())
    }

    pub fn from_pure(s: &StateVector) -> Self {
        let v = DVector::from_column_slice(s.amplitudes());
        DensityMatrix {
            dims: vec![2; s.num_qubits()],
            mat: &v * v.adjoint(),
        }
    }

    /// Single-qubit state `(I + x X + y Y + z Z) / 2`.
    pub fn from_bloch(x: f64, y: f64, z: f64) -> Result<Self> {
        if x * x + y * y + z * z > 1.0 + NORM_TOL {
            return Err(Error::InvalidState(format!("Bloch vector ({x}, {y}, {z}) outside the ball")));
        }
        let mat = DMatrix::from_row_slice(
            2,
            2,
            &[
                C64::new((1.0 + z) / 2.0, 0.0),
                C64::new(x / 2.0, -y / 2.0),
                C64::new(x / 2.0, y / 2.0),
                C64::new((1.0 - z) / 2.0, 0.0),
            ],
        );
        Ok(DensityMatrix { dims: vec![2], mat })
    }

    pub fn maximally_mixed(dims: Vec<usize>) -> Result<Self> {
        let d: usize = dims.iter().product();
        Self::new(dims, DMatrix::identity(d, d) / C64::new(d as f64, 0.0))
    }

    /// Random full-rank state from a complex Ginibre matrix.
    pub fn random<R: Rng + ?Sized>(dims: Vec<usize>, rng: &mut R) -> Result<Self> {
        let d: usize = dims.iter().product();
        let g = DMatrix::from_fn(d, d, |_, _| {
            C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
        });
        let m = &g * g.adjoint();
        let tr = m.trace();
        Self::new_unchecked(dims, m / tr)
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.mat
    }

    pub fn trace(&self) -> C64 {
        self.mat.trace()
    }

    /// Bloch vector of a single-qubit state.
    pub fn bloch(&self) -> Option<[f64; 3]> {
        (self.dim() == 2).then(|| {
            let m = &self.mat;
            [2.0 * m[(1, 0)].re, 2.0 * m[(1, 0)].im, (m[(0, 0)] - m[(1, 1)]).re]
        })
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        hermitian_eigen(&self.mat).0.iter().copied().collect()
    }

    pub fn tensor(&self, other: &DensityMatrix) -> Result<DensityMatrix> {
        let mut dims = self.dims.clone();
        dims.extend_from_slice(&other.dims);
        Self::new_unchecked(dims, self.mat.kronecker(&other.mat))
    }

    /// `Tr(op * rho)`.
    pub fn expectation(&self, op: &DMatrix<C64>) -> Result<C64> {
        if op.nrows() != self.dim() || op.ncols() != self.dim() {
            return Err(Error::DimensionMismatch("operator size".into()));
        }
        Ok((op * &self.mat).trace())
    }

    /// Reduced state on the subsystems in `keep` (kept in their original order).
    pub fn partial_trace(&self, keep: &[usize]) -> Result<DensityMatrix> {
        if keep.is_empty() {
            return Err(Error::EmptyKeep);
        }
        let k = self.dims.len();
        let mut kept = vec![false; k];
        for &s in keep {
            if s >= k {
                return Err(Error::DimensionMismatch(format!("subsystem {s} of {k}")));
            }
            kept[s] = true;
        }
        let out_dims: Vec<usize> = (0..k).filter(|&s| kept[s]).map(|s| self.dims[s]).collect();
        let out_d: usize = out_dims.iter().product();
        let d = self.dim();

        // Split every full index into (kept index, traced index).
        let split: Vec<(usize, usize)> = (0..d)
            .map(|mut idx| {
                let mut digits = vec![0usize; k];
                for s in (0..k).rev() {
                    digits[s] = idx % self.dims[s];
                    idx /= self.dims[s];
                }
                let (mut a, mut b) = (0usize, 0usize);
                for s in 0..k {
                    if kept[s] {
                        a = a * self.dims[s] + digits[s];
                    } else {
                        b = b * self.dims[s] + digits[s];
                    }
                }
                (a, b)
            })
            .collect();

        let mut out = DMatrix::<C64>::zeros(out_d, out_d);
        for i in 0..d {
            for j in 0..d {
                if split[i].1 == split[j].1 {
                    out[(split[i].0, split[j].0)] += self.mat[(i, j)];
                }
            }
        }
        Self::new_unchecked(out_dims, out)
    }

    fn check_same(&self, other: &DensityMatrix) -> Result<()> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch(format!(
                "dimension {} vs {}",
                self.dim(),
                other.dim()
            )));
        }
        Ok(())
    }

    /// `F(a, b) = Tr|sqrt(a) sqrt(b)|`, computed as the nuclear norm of
    /// `W_a^dagger W_b` with `sqrt(x) = W_x W_x^dagger` factors.
    pub fn fidelity(&self, other: &DensityMatrix) -> Result<f64> {
        self.check_same(other)?;
        let wa = sqrt_factor(&self.mat);
        let wb = sqrt_factor(&other.mat);
        if wa.ncols() == 0 || wb.ncols() == 0 {
            return Ok(0.0);
        }
        let m = wa.adjoint() * wb;
        let sv = m.singular_values();
        Ok(sv.iter().sum::<f64>().clamp(0.0, 1.0))
    }

    /// `1/2 ||a - b||_1` from the eigenvalues of `a - b`.
    pub fn trace_distance(&self, other: &DensityMatrix) -> Result<f64> {
        self.check_same(other)?;
        let (vals, _) = hermitian_eigen(&(&self.mat - &other.mat));
        Ok((0.5 * vals.iter().map(|v| v.abs()).sum::<f64>()).clamp(0.0, 1.0))
    }
}

/// For `rho` on `H1 ⊗ H2` and a pure `|x>` on `H1`, returns the state
/// `rho'' = <x|rho|x> / <x|Tr_2 rho|x>` on `H2` together with the weight
/// `<x|Tr_2 rho|x> = F(|x><x|, Tr_2 rho)^2`. `rho''` maximizes
/// `F(|x><x| ⊗ rho', rho)^2` over states `rho'`, and the maximum equals the
/// returned weight.
pub fn lemma2_maximizer(rho: &DensityMatrix, x: &StateVector) -> Result<(DensityMatrix, f64)> {
    if rho.dims.len() != 2 {
        return Err(Error::DimensionMismatch(format!(
            "expected a bipartite state, got dims {:?}",
            rho.dims
        )));
    }
    let (d1, d2) = (rho.dims[0], rho.dims[1]);
    if x.dim() != d1 {
        return Err(Error::DimensionMismatch(format!(
            "|x> has dimension {}, first subsystem {d1}",
            x.dim()
        )));
    }
    let xa = x.amplitudes();
    let mut cond = DMatrix::<C64>::zeros(d2, d2);
    for j in 0..d2 {
        for jp in 0..d2 {
            let mut acc = C64::new(0.0, 0.0);
            for i in 0..d1 {
                for ip in 0..d1 {
                    acc += xa[i].conj() * rho.mat[(i * d2 + j, ip * d2 + jp)] * xa[ip];
                }
            }
            cond[(j, jp)] = acc;
        }
    }
    let weight = cond.trace().re;
    if weight <= 1e-12 {
        return Err(Error::VanishingWeight(weight));
    }
    let rho2 = DensityMatrix::new_unchecked(vec![d2], cond / C64::new(weight, 0.0))?;
    Ok((rho2, weight))
}
