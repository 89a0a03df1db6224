//! Fitting the localization constant and its exponents.

use alloc::vec;
use alloc::vec::Vec;
#[cfg(not(any(feature = "std", test)))]
#[allow(unused_imports)]
use num_traits::Float;

use nalgebra::{DMatrix, DVector};

use crate::error::{domain_err, Result};
use crate::kernel::{Exponent, LpResult, NdOptions};
use crate::twist::{localization_error, localization_error_bound, localized_rotation, SOdMatrix};

/// One measured configuration `(r, s/r)`.
#[derive(Debug, Clone, PartialEq)]
pub struct FitPoint {
    pub r: f64,
    pub s_over_r: f64,
    pub measured: LpResult,
    /// `r^{d/p} (1 - s/r)^{(1-p)/p}`.
    pub shape: f64,
    pub ratio: f64,
}

/// Least-squares slope with its standard error (`None` without spare
/// degrees of freedom).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Slope {
    pub estimate: f64,
    pub std_err: Option<f64>,
}

impl Slope {
    /// `|estimate - expected| <= rel * |expected|`.
    pub fn within(&self, expected: f64, rel: f64) -> bool {
        (self.estimate - expected).abs() <= rel * expected.abs()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    /// Smallest constant consistent with every configuration.
    pub c1: f64,
    pub max_ratio: f64,
    pub points: Vec<FitPoint>,
    /// Slope of log-error against `log r`, when `r` varies.
    pub slope_r: Option<Slope>,
    /// Slope of log-error against `log(1 - s/r)`, when `s/r` varies.
    pub slope_gap: Option<Slope>,
}

impl FitResult {
    /// `C₁ r^{d/p} (1 - s/r)^{(1-p)/p}` at a new configuration.
    pub fn bound_at(&self, d: usize, p: Exponent, r: f64, s_over_r: f64) -> Result<f64> {
        localization_error_bound(d, p, r, r * s_over_r, self.c1)
    }
}

/// Measures `‖DG - H‖_{L^p}` of the localized rotation of `h` at every
/// `(r, s/r)` in `configs`, takes `C₁` as the largest ratio to the bound shape
/// and regresses `log` error on `log r` and `log(1 - s/r)`.
pub fn fit_error_constant(h: &SOdMatrix, configs: &[(f64, f64)], p: Exponent, opts: &NdOptions) -> Result<FitResult> {
    if configs.is_empty() {
        return Err(domain_err!("fit needs at least one configuration"));
    }
    if let Some(&(r, t)) = configs
        .iter()
        .find(|&&(r, t)| !(r > 0.0 && r.is_finite() && t > 0.0 && t < 1.0))
    {
        return Err(domain_err!(
            "configuration needs r > 0 and 0 < s/r < 1, got r={r} s/r={t}"
        ));
    }
    if h.is_identity() {
        return Err(domain_err!("identity rotation has no localization error to fit"));
    }
    let d = h.dim();
    let mut points = Vec::with_capacity(configs.len());
    for &(r, t) in configs {
        let g = localized_rotation(h, vec![0.0; d], r, r * t)?;
        let measured = localization_error(&g, p, opts)?;
        let shape = localization_error_bound(d, p, r, r * t, 1.0)?;
        points.push(FitPoint {
            r,
            s_over_r: t,
            measured,
            shape,
            ratio: measured.value / shape,
        });
    }
    let max_ratio = points.iter().map(|q| q.ratio).fold(0.0, f64::max);

    let varies = |f: &dyn Fn(&FitPoint) -> f64| points.iter().any(|q| f(q) != f(&points[0]));
    let fit_r = varies(&|q| q.r);
    let fit_gap = varies(&|q| q.s_over_r);
    let mut columns: Vec<Vec<f64>> = Vec::new();
    if fit_r {
        columns.push(points.iter().map(|q| q.r.ln()).collect());
    }
    if fit_gap {
        columns.push(points.iter().map(|q| (1.0 - q.s_over_r).ln()).collect());
    }
    let y: Vec<f64> = points.iter().map(|q| q.measured.value.ln()).collect();
    let slopes = ols(&columns, &y);
    let mut it = slopes.into_iter();
    let slope_r = if fit_r { it.next().flatten() } else { None };
    let slope_gap = if fit_gap { it.next().flatten() } else { None };
    Ok(FitResult {
        c1: max_ratio,
        max_ratio,
        points,
        slope_r,
        slope_gap,
    })
}

/// OLS of `y` on an intercept plus `columns`. One entry per column, `None`
/// when the design is singular.
fn ols(columns: &[Vec<f64>], y: &[f64]) -> Vec<Option<Slope>> {
    let n = y.len();
    let k = columns.len() + 1;
    if columns.is_empty() || n < k {
        return vec![None; columns.len()];
    }
    let x = DMatrix::from_fn(n, k, |i, j| if j == 0 { 1.0 } else { columns[j - 1][i] });
    let yv = DVector::from_column_slice(y);
    let xtx = x.transpose() * &x;
    let Some(inv) = xtx.try_inverse() else {
        return vec![None; columns.len()];
    };
    let beta = &inv * x.transpose() * &yv;
    let resid = &yv - &x * &beta;
    let dof = n - k;
    let sigma2 = (dof > 0).then(|| resid.norm_squared() / dof as f64);
    (1..k)
        .map(|j| {
            Some(Slope {
                estimate: beta[j],
                std_err: sigma2.map(|s2| (s2 * inv[(j, j)]).sqrt()),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use core::f64::consts::FRAC_PI_2;

    fn opts() -> NdOptions {
        NdOptions::default().with_cells(32)
    }

    #[test]
    fn single_configuration_is_exact() {
        let h = SOdMatrix::rotation2(FRAC_PI_2);
        let fit = fit_error_constant(&h, &[(0.25, 0.5)], Exponent::half(), &opts()).unwrap();
        let q = &fit.points[0];
        assert_eq!(fit.c1, q.measured.value / q.shape);
        assert!(fit.slope_r.is_none() && fit.slope_gap.is_none());
    }

    #[test]
    fn r_slope_is_d_over_p() {
        let h = SOdMatrix::rotation2(FRAC_PI_2);
        let fit = fit_error_constant(&h, &[(0.125, 0.5), (0.25, 0.5)], Exponent::half(), &opts()).unwrap();
        assert!(fit.slope_r.unwrap().within(4.0, 1e-6));
    }

    #[test]
    fn degenerate_grids_rejected() {
        let h = SOdMatrix::rotation2(1.0);
        let p = Exponent::half();
        assert!(fit_error_constant(&h, &[], p, &opts()).is_err());
        assert!(fit_error_constant(&h, &[(0.25, 1.0)], p, &opts()).is_err());
        assert!(fit_error_constant(&h, &[(0.0, 0.5)], p, &opts()).is_err());
    }

    #[test]
    fn ols_recovers_exact_line() {
        let x = vec![0.0, 1.0, 2.0, 3.0];
        let y: Vec<f64> = x.iter().map(|v| 1.0 + 2.5 * v).collect();
        let s = ols(&[x], &y)[0].unwrap();
        assert!((s.estimate - 2.5).abs() < 1e-12);
        assert!(s.std_err.unwrap() < 1e-10);
    }
}
