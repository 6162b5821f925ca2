//! The asymptotic log-determinant functional V(A, beta) and its fixed-point
//! parameter eta, over sample-based distributions of the nonnegative scalar
//! random variable A.
//!
//! eta in (0, 1] solves beta = (1 - eta) / (1 - E{1 / (1 + eta A)}) and
//!
//!   V(A, beta) = beta E{log2(1 + eta A)} - log2(eta) + (eta - 1) log2(e).
//!
//! Expectations are plain sample means. The solver is bisection on the root
//! form g(eta) = beta (1 - E{1/(1 + eta A)}) - (1 - eta), which has g < 0 near
//! zero and g(1) >= 0; a single sign change on (0, 1] held in every tested
//! case and is assumed.

use crate::error::{Error, Result};

/// Default residual tolerance for the fixed-point solve.
pub const DEFAULT_TOLERANCE: f64 = 1e-10;
/// Bisection iteration cap.
pub const MAX_ITERATIONS: usize = 200;
/// Lower edge of the bisection bracket.
const ETA_FLOOR: f64 = 1e-12;

/// Sample-based representation of a nonnegative scalar random variable.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalDistribution {
    samples: Vec<f64>,
}

impl EmpiricalDistribution {
    pub fn new(samples: Vec<f64>) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::config("empirical distribution needs at least one sample"));
        }
        if samples.iter().any(|&x| !(x >= 0.0) || !x.is_finite()) {
            return Err(Error::config("samples must be finite and nonnegative"));
        }
        Ok(EmpiricalDistribution { samples })
    }

    /// Degenerate distribution concentrated at `value`.
    pub fn point_mass(value: f64) -> Result<Self> {
        EmpiricalDistribution::new(vec![value])
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    fn all_zero(&self) -> bool {
        self.samples.iter().all(|&x| x == 0.0)
    }
}

/// Fixed point plus the evaluated functional.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MpResult {
    /// Solution of the fixed-point equation, in (0, 1].
    pub eta: f64,
    /// V(A, beta) in bits, nonnegative.
    pub value_bits: f64,
    /// |g(eta)| at termination.
    pub residual: f64,
}

#[inline]
fn fixed_point_defect(samples: &[f64], beta: f64, eta: f64) -> f64 {
    let mut acc = 0.0;
    for &a in samples {
        acc += 1.0 / (1.0 + eta * a);
    }
    let mean = acc / samples.len() as f64;
    beta * (1.0 - mean) - (1.0 - eta)
}

/// Solve the fixed-point equation for eta. All-zero samples return eta = 1
/// exactly (the degenerate zero-channel limit).
pub fn solve_eta(dist: &EmpiricalDistribution, beta: f64, tolerance: f64) -> Result<f64> {
    if !(beta > 0.0) || !beta.is_finite() {
        return Err(Error::config("beta must be positive and finite"));
    }
    if !(tolerance > 0.0) {
        return Err(Error::config("tolerance must be positive"));
    }
    if dist.all_zero() {
        return Ok(1.0);
    }
    let samples = dist.samples();
    let mut lo = ETA_FLOOR;
    let mut hi = 1.0;
    // g(lo) < 0 because E{1/(1+eta A)} -> 1 as eta -> 0; g(hi) >= 0 by
    // construction of the fixed point. Verify the bracket before iterating.
    if fixed_point_defect(samples, beta, lo) >= 0.0 {
        return Ok(lo);
    }
    for _ in 0..MAX_ITERATIONS {
        let mid = 0.5 * (lo + hi);
        let g_mid = fixed_point_defect(samples, beta, mid);
        if g_mid.abs() <= tolerance {
            return Ok(mid);
        }
        if g_mid < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mid = 0.5 * (lo + hi);
    let g_mid = fixed_point_defect(samples, beta, mid);
    if g_mid.abs() <= tolerance {
        Ok(mid)
    } else {
        Err(Error::numerical(format!(
            "eta bisection did not reach tolerance {tolerance}: bracket [{lo}, {hi}], \
             residual {g_mid}"
        )))
    }
}

/// Evaluate V(A, beta) in bits.
pub fn mp_value(dist: &EmpiricalDistribution, beta: f64, tolerance: f64) -> Result<MpResult> {
    if dist.all_zero() {
        return Ok(MpResult { eta: 1.0, value_bits: 0.0, residual: 0.0 });
    }
    let eta = solve_eta(dist, beta, tolerance)?;
    let samples = dist.samples();
    let mut acc = 0.0;
    for &a in samples {
        acc += (1.0 + eta * a).log2();
    }
    let mean_log = acc / samples.len() as f64;
    let value = beta * mean_log - eta.log2() + (eta - 1.0) * std::f64::consts::LOG2_E;
    Ok(MpResult {
        eta,
        value_bits: value.max(0.0),
        residual: fixed_point_defect(samples, beta, eta).abs(),
    })
}

/// Delta-method standard error of the sample estimate of V(A, beta).
///
/// V is stationary in eta at the fixed point, so to first order only the
/// sample-mean term contributes: se = beta * std(log2(1 + eta A)) / sqrt(n).
pub fn mp_value_std_error(dist: &EmpiricalDistribution, beta: f64, eta: f64) -> f64 {
    let n = dist.len() as f64;
    let mut mean = 0.0;
    for &a in dist.samples() {
        mean += (1.0 + eta * a).log2();
    }
    mean /= n;
    let mut var = 0.0;
    for &a in dist.samples() {
        let d = (1.0 + eta * a).log2() - mean;
        var += d * d;
    }
    if n > 1.0 {
        var /= n - 1.0;
    }
    beta * (var / n).sqrt()
}
