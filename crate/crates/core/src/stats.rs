//! Gaussian upper-tail quantiles and binomial lower-tail probabilities.

use crate::error::{Error, Result};

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

/// Upper Gaussian tail `Phi(x) = P(N(0,1) >= x)`.
pub fn phi_upper(x: f64) -> f64 {
    0.5 * libm::erfc(x / std::f64::consts::SQRT_2)
}

/// Inverse of the upper tail: the `x` with `Phi(x) = tail`.
pub fn inv_phi(tail: f64) -> Result<f64> {
    if !(tail > 0.0 && tail < 1.0) {
        return Err(Error::Domain {
            name: "tail",
            value: tail,
            reason: "must lie in (0, 1)",
        });
    }
    let (mut lo, mut hi) = (-40.0f64, 40.0f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid == lo || mid == hi {
            break;
        }
        if phi_upper(mid) > tail {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// `ln(n!) - ln(sqrt(2 pi n) (n/e)^n)`.
fn stirlerr(n: f64) -> f64 {
    const S0: f64 = 1.0 / 12.0;
    const S1: f64 = 1.0 / 360.0;
    const S2: f64 = 1.0 / 1260.0;
    const S3: f64 = 1.0 / 1680.0;
    const S4: f64 = 1.0 / 1188.0;
    if n <= 15.0 {
        return libm::lgamma(n + 1.0) - (n + 0.5) * n.ln() + n - LN_SQRT_2PI;
    }
    let nn = n * n;
    if n > 500.0 {
        (S0 - S1 / nn) / n
    } else if n > 80.0 {
        (S0 - (S1 - S2 / nn) / nn) / n
    } else if n > 35.0 {
        (S0 - (S1 - (S2 - S3 / nn) / nn) / nn) / n
    } else {
        (S0 - (S1 - (S2 - (S3 - S4 / nn) / nn) / nn) / nn) / n
    }
}

/// Deviance term `x ln(x/np) + np - x`.
fn bd0(x: f64, np: f64) -> f64 {
    if (x - np).abs() < 0.1 * (x + np) {
        let mut v = (x - np) / (x + np);
        let mut s = (x - np) * v;
        let mut ej = 2.0 * x * v;
        v *= v;
        for j in 1..1000 {
            ej *= v;
            let s1 = s + ej / (2 * j + 1) as f64;
            if s1 == s {
                return s1;
            }
            s = s1;
        }
        s
    } else {
        x * (x / np).ln() + np - x
    }
}

/// `ln P(X = k)` for `X ~ Binomial(r, p)`, by the saddle-point expansion.
pub fn binom_logpmf(r: u64, p: f64, k: u64) -> f64 {
    let q = 1.0 - p;
    let n = r as f64;
    if k == 0 {
        return n * (-p).ln_1p();
    }
    if k == r {
        return n * p.ln();
    }
    let x = k as f64;
    let lc = stirlerr(n) - stirlerr(x) - stirlerr(n - x) - bd0(x, n * p) - bd0(n - x, n * q);
    let lf = (2.0 * std::f64::consts::PI).ln() + x.ln() + (-x / n).ln_1p();
    lc - 0.5 * lf
}

fn check_binom(r: u64, p: f64, k: u64) -> Result<()> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::Domain {
            name: "prob",
            value: p,
            reason: "must lie in (0, 1)",
        });
    }
    if k > r {
        return Err(Error::Domain {
            name: "k",
            value: k as f64,
            reason: "must not exceed r",
        });
    }
    Ok(())
}

const TAIL_EPS: f64 = 1e-18;

/// Sum of `P(X = j) / P(X = k)` for `j <= k`, assuming `k <= r p`.
fn lower_ratio_sum(r: u64, p: f64, k: u64) -> f64 {
    let odds = (1.0 - p) / p;
    let (mut t, mut sum) = (1.0f64, 1.0f64);
    let mut j = k;
    while j > 0 {
        t *= j as f64 / (r - j + 1) as f64 * odds;
        sum += t;
        if t < TAIL_EPS * sum {
            break;
        }
        j -= 1;
    }
    sum
}

/// Sum of `P(X = j) / P(X = k)` for `j >= k`, assuming `k >= r p`.
fn upper_ratio_sum(r: u64, p: f64, k: u64) -> f64 {
    let odds = p / (1.0 - p);
    let (mut t, mut sum) = (1.0f64, 1.0f64);
    let mut j = k;
    while j < r {
        t *= (r - j) as f64 / (j + 1) as f64 * odds;
        sum += t;
        if t < TAIL_EPS * sum {
            break;
        }
        j += 1;
    }
    sum
}

/// Natural log of `P(X <= k)` for `X ~ Binomial(r, prob)`.
pub fn binom_logcdf(r: u64, prob: f64, k: u64) -> Result<f64> {
    check_binom(r, prob, k)?;
    Ok(logcdf_unchecked(r, prob, k))
}

fn logcdf_unchecked(r: u64, p: f64, k: u64) -> f64 {
    if k == r {
        return 0.0;
    }
    if (k as f64) <= r as f64 * p {
        binom_logpmf(r, p, k) + lower_ratio_sum(r, p, k).ln()
    } else {
        let upper = (binom_logpmf(r, p, k + 1) + upper_ratio_sum(r, p, k + 1).ln()).exp();
        (-upper).ln_1p()
    }
}

/// `ln(e^a - e^b)` for `a > b`.
fn log_sub(a: f64, b: f64) -> f64 {
    a + (-(b - a).exp()).ln_1p()
}

/// `ln(e^a + e^b)`.
fn log_add(a: f64, b: f64) -> f64 {
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

/// Gaussian guess for the largest `F` with `P(X <= F) <= delta1`.
pub fn clt_threshold(delta1: f64, prob: f64, r: u64) -> Result<f64> {
    let n = r as f64;
    Ok(n * prob - (n * prob * (1.0 - prob)).sqrt() * inv_phi(delta1)?)
}

/// Largest `F` in `[0, r]` with `P(X <= F) <= delta1` for
/// `X ~ Binomial(r, prob)`, or `-1` when even `P(X = 0)` exceeds `delta1`.
pub fn threshold_for_prob(delta1: f64, prob: f64, r: u64) -> Result<i64> {
    if !(delta1 > 0.0) {
        return Err(Error::Domain {
            name: "delta1",
            value: delta1,
            reason: "must be positive",
        });
    }
    check_binom(r, prob, 0)?;
    if delta1 >= 1.0 {
        return Ok(r as i64);
    }
    let target = delta1.ln();
    if logcdf_unchecked(r, prob, 0) > target {
        return Ok(-1);
    }
    let guess = clt_threshold(delta1, prob, r)?.floor();
    let mut f = guess.clamp(0.0, (r - 1) as f64) as u64;
    let mut lc = logcdf_unchecked(r, prob, f);
    // Walk from the Gaussian guess one point mass at a time.
    while lc > target && f > 0 {
        lc = log_sub(lc, binom_logpmf(r, prob, f));
        f -= 1;
        if !lc.is_finite() {
            lc = logcdf_unchecked(r, prob, f);
        }
    }
    while f < r {
        let next = log_add(lc, binom_logpmf(r, prob, f + 1));
        if next > target {
            break;
        }
        lc = next;
        f += 1;
    }
    if verify(delta1, prob, r, f) {
        return Ok(f as i64);
    }
    Ok(bisect(target, prob, r) as i64)
}

fn verify(delta1: f64, prob: f64, r: u64, f: u64) -> bool {
    let target = delta1.ln();
    logcdf_unchecked(r, prob, f) <= target && (f == r || logcdf_unchecked(r, prob, f + 1) > target)
}

/// Binary search on direct evaluations; requires `logcdf(0) <= target`.
fn bisect(target: f64, prob: f64, r: u64) -> u64 {
    let (mut lo, mut hi) = (0u64, r);
    while lo < hi {
        let mid = lo + (hi - lo).div_ceil(2);
        if logcdf_unchecked(r, prob, mid) <= target {
            lo = mid;
        } else {
            hi = mid - 1;
        }
    }
    lo
}
