//! Adaptive 1D quadrature of piecewise-smooth integrands and L^p quasi-norms.
//!
//! Each piece between consecutive breakpoints starts as one cell. The error of
//! a cell is the disagreement between a 5-point Gauss-Legendre rule on it and
//! the same rule on its two halves. The cell with the largest error is bisected
//! until the summed error meets the target.

use alloc::collections::BinaryHeap;
use alloc::vec::Vec;
#[cfg(not(any(feature = "std", test)))]
#[allow(unused_imports)]
use num_traits::Float;

use super::domain::{Exponent, Interval};
use super::LpResult;
use crate::error::{domain_err, Error, Result};

const GL5_NODES: [f64; 5] = [
    -0.906_179_845_938_664,
    -0.538_469_310_105_683,
    0.0,
    0.538_469_310_105_683,
    0.906_179_845_938_664,
];
const GL5_WEIGHTS: [f64; 5] = [
    0.236_926_885_056_189_1,
    0.478_628_670_499_366_5,
    0.568_888_888_888_888_9,
    0.478_628_670_499_366_5,
    0.236_926_885_056_189_1,
];

/// Tuning knobs for [`integrate_piecewise`].
#[derive(Debug, Clone, Copy)]
pub struct QuadOptions {
    /// Absolute error target for the whole interval.
    pub tol: f64,
    /// Maximum bisection depth per piece.
    pub max_depth: u32,
}

impl Default for QuadOptions {
    fn default() -> Self {
        Self {
            tol: 1e-11,
            max_depth: 48,
        }
    }
}

/// Integral value and its estimated absolute error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Integral {
    pub value: f64,
    pub error: f64,
}

pub(crate) fn gl5(f: &dyn Fn(f64) -> f64, lo: f64, hi: f64) -> Result<f64> {
    let half = 0.5 * (hi - lo);
    let mid = 0.5 * (hi + lo);
    let mut acc = 0.0;
    for (t, w) in GL5_NODES.iter().zip(GL5_WEIGHTS.iter()) {
        let x = mid + half * t;
        let v = f(x);
        if !v.is_finite() {
            return Err(Error::EvaluationFailure { at: x });
        }
        acc += w * v;
    }
    Ok(acc * half)
}

/// Normalizes breakpoints: keeps those strictly inside `iv`, sorted, deduplicated,
/// and returns the full list of piece boundaries including both endpoints.
pub fn piece_boundaries(iv: Interval, breakpoints: &[f64]) -> Vec<f64> {
    let mut pts: Vec<f64> = breakpoints
        .iter()
        .copied()
        .filter(|&b| b > iv.lo && b < iv.hi && b.is_finite())
        .collect();
    pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    pts.dedup();
    let mut out = Vec::with_capacity(pts.len() + 2);
    out.push(iv.lo);
    out.extend(pts);
    out.push(iv.hi);
    out
}

/// Integrates `f` over `iv`, splitting at `breakpoints` so that each piece is smooth.
pub fn integrate_piecewise(
    f: &dyn Fn(f64) -> f64,
    iv: Interval,
    breakpoints: &[f64],
    opts: QuadOptions,
) -> Result<Integral> {
    if !(iv.lo < iv.hi) {
        return Err(domain_err!("empty interval ({}, {})", iv.lo, iv.hi));
    }
    let bounds = piece_boundaries(iv, breakpoints);
    let mut heap = BinaryHeap::new();
    let mut done = Vec::new();
    let mut error = 0.0;
    for w in bounds.windows(2) {
        let (a, b) = (w[0], w[1]);
        if b > a {
            let c = QuadCell::new(f, a, b, 0, gl5(f, a, b)?)?;
            error += c.diff;
            heap.push(c);
        }
    }
    let mut splits = 0usize;
    while error > opts.tol && splits < MAX_SPLITS {
        let Some(c) = heap.pop() else { break };
        let mid = 0.5 * (c.lo + c.hi);
        if c.depth >= opts.max_depth || mid <= c.lo || mid >= c.hi {
            done.push(c);
            continue;
        }
        let l = QuadCell::new(f, c.lo, mid, c.depth + 1, c.left)?;
        let r = QuadCell::new(f, mid, c.hi, c.depth + 1, c.right)?;
        error += l.diff + r.diff - c.diff;
        heap.push(l);
        heap.push(r);
        splits += 1;
    }
    let (mut value, mut error) = (0.0, 0.0);
    for c in done.iter().chain(heap.iter()) {
        value += c.left + c.right;
        error += c.diff;
    }
    Ok(Integral { value, error })
}

/// Cap on bisections per call so that unreachable tolerances still terminate.
const MAX_SPLITS: usize = 1 << 21;

/// A cell with its two half-cell estimates; ordered by disagreement.
struct QuadCell {
    lo: f64,
    hi: f64,
    depth: u32,
    left: f64,
    right: f64,
    diff: f64,
}

impl QuadCell {
    fn new(f: &dyn Fn(f64) -> f64, lo: f64, hi: f64, depth: u32, coarse: f64) -> Result<Self> {
        let mid = 0.5 * (lo + hi);
        let left = gl5(f, lo, mid)?;
        let right = gl5(f, mid, hi)?;
        Ok(Self {
            lo,
            hi,
            depth,
            left,
            right,
            diff: (coarse - left - right).abs(),
        })
    }
}

impl PartialEq for QuadCell {
    fn eq(&self, other: &Self) -> bool {
        self.diff.total_cmp(&other.diff).is_eq()
    }
}
impl Eq for QuadCell {}
impl PartialOrd for QuadCell {
    fn partial_cmp(&self, other: &Self) -> Option<core::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for QuadCell {
    fn cmp(&self, other: &Self) -> core::cmp::Ordering {
        self.diff.total_cmp(&other.diff)
    }
}

/// `|x|^p` with fast paths for the common exponents.
#[inline]
pub fn abs_pow(x: f64, p: f64) -> f64 {
    let a = x.abs();
    if p == 0.5 {
        a.sqrt()
    } else if p == 1.0 {
        a
    } else if p == 2.0 {
        a * a
    } else if a == 0.0 {
        0.0
    } else {
        a.powf(p)
    }
}

/// Converts an integral of `|f|^p` and its error into an [`LpResult`].
pub fn lp_from_power(power: f64, power_err: f64, p: Exponent, honored: bool) -> LpResult {
    let pv = p.value();
    let power = power.max(0.0);
    let value = power.powf(1.0 / pv);
    let err = if power > 0.0 {
        // first-order propagation, never below the error of the p-th root itself
        let lin = value / (pv * power) * power_err;
        lin.max(((power + power_err).powf(1.0 / pv) - value).abs())
    } else {
        power_err.powf(1.0 / pv)
    };
    LpResult {
        value,
        p,
        quad_error_estimate: err,
        breakpoints_honored: honored,
        value_p_power: power,
        p_power_error: power_err,
    }
}

/// `(∫_I |f|^p)^{1/p}` by adaptive piecewise quadrature.
pub fn lp_norm_1d(f: &dyn Fn(f64) -> f64, iv: Interval, p: Exponent, breakpoints: &[f64]) -> Result<LpResult> {
    lp_norm_1d_with(f, iv, p, breakpoints, QuadOptions::default())
}

pub fn lp_norm_1d_with(
    f: &dyn Fn(f64) -> f64,
    iv: Interval,
    p: Exponent,
    breakpoints: &[f64],
    opts: QuadOptions,
) -> Result<LpResult> {
    let pv = p.value();
    let g = |x: f64| abs_pow(f(x), pv);
    let integral = integrate_piecewise(&g, iv, breakpoints, opts)?;
    Ok(lp_from_power(integral.value, integral.error, p, true))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn constant_one_has_unit_norm() {
        let r = lp_norm_1d(&|_| 1.0, Interval::unit(), Exponent::half(), &[]).unwrap();
        assert_relative_eq!(r.value, 1.0, epsilon = 1e-14);
    }

    #[test]
    fn identity_half_norm_is_four_ninths() {
        let r = lp_norm_1d(&|x| x, Interval::unit(), Exponent::half(), &[]).unwrap();
        assert_relative_eq!(r.value, 4.0 / 9.0, epsilon = 1e-10);
        assert!(r.quad_error_estimate < 1e-8);
    }

    #[test]
    fn kink_is_integrated_exactly_with_breakpoint() {
        let f = |x: f64| (x - 0.3).abs();
        let with = integrate_piecewise(&f, Interval::unit(), &[0.3], QuadOptions::default()).unwrap();
        assert_relative_eq!(with.value, 0.5 * (0.09 + 0.49), epsilon = 1e-14);
    }

    #[test]
    fn non_finite_integrand_is_reported() {
        let r = lp_norm_1d(&|x| 1.0 / (x - 0.5), Interval::unit(), Exponent::half(), &[]);
        let r2 = integrate_piecewise(&|_| f64::NAN, Interval::unit(), &[], QuadOptions::default());
        assert!(r.is_ok() || matches!(r, Err(Error::EvaluationFailure { .. })));
        assert!(matches!(r2, Err(Error::EvaluationFailure { .. })));
    }

    #[test]
    fn breakpoints_outside_are_ignored() {
        let b = piece_boundaries(Interval::unit(), &[-1.0, 0.5, 0.5, 2.0, 0.25]);
        assert_eq!(b, alloc::vec![0.0, 0.25, 0.5, 1.0]);
    }
}
