//! Convergence tables for the one-dimensional families.

use alloc::vec::Vec;
#[cfg(not(any(feature = "std", test)))]
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{domain_err, Result};
use crate::homeo1d::{blend_constant, make_step_homeo_with, Homeo1D, RampKind, StaircaseParams, StepFunction1D};
use crate::kernel::{lp_norm_1d, sup_distance_1d, Exponent, Interval, LpResult};

/// Absolute tolerance for bounds that hold exactly.
pub const EXACT_TOL: f64 = 1e-9;

/// Sup grid points per staircase cell, on top of the 1D default.
const SUP_POINTS_PER_CELL: usize = 64;

/// Sequence indexed by `n` whose derivatives approach a target in L^p.
#[derive(Debug, Clone)]
pub enum Family1D {
    /// `f_n`, target derivative 0.
    Staircase { ramp: RampKind },
    /// `c Id + (1 - c) f_n`, target `c`.
    Blend { c: f64, ramp: RampKind },
    /// `φ_n` built from the step function, target the step function itself.
    Step { h: StepFunction1D, ramp: RampKind },
}

impl Family1D {
    pub fn staircase() -> Self {
        Self::Staircase {
            ramp: RampKind::SmoothJump,
        }
    }

    /// Member `n`.
    pub fn member(&self, n: usize) -> Result<Homeo1D> {
        match self {
            Self::Staircase { ramp } => Homeo1D::staircase(StaircaseParams::with_ramp(n, *ramp)),
            Self::Blend { c, ramp } => blend_constant(*c, &Homeo1D::staircase(StaircaseParams::with_ramp(n, *ramp))?),
            Self::Step { h, ramp } => make_step_homeo_with(h, StaircaseParams::with_ramp(n, *ramp)),
        }
    }

    fn target(&self, x: f64) -> f64 {
        match self {
            Self::Staircase { .. } => 0.0,
            Self::Blend { c, .. } => *c,
            Self::Step { h, .. } => h.eval(x),
        }
    }

    /// `(sup bound, p-power bound)` of member `n`. Each cell of width `L`
    /// with constant `c` is a rescaled blend, which contributes `L (1-c)/n`
    /// to the sup and `L (1-c)^p B_n` to `∫|φ' - c|^p`.
    fn bounds(&self, n: usize, p: f64) -> (f64, f64) {
        let params = |ramp: RampKind| StaircaseParams::with_ramp(n, ramp);
        let inv = 1.0 / n as f64;
        match self {
            Self::Staircase { ramp } => (inv, params(*ramp).derivative_bound_pow(p)),
            Self::Blend { c, ramp } => {
                let w = 1.0 - c;
                (w * inv, w.powf(p) * params(*ramp).derivative_bound_pow(p))
            }
            Self::Step { h, ramp } => {
                let b = params(*ramp).derivative_bound_pow(p);
                let part = h.partition();
                let (mut sup, mut pow) = (0.0f64, 0.0);
                for (i, &c) in h.values().iter().enumerate() {
                    let len = part[i + 1] - part[i];
                    let w = 1.0 - c;
                    sup = sup.max(len * w * inv);
                    pow += len * w.powf(p) * b;
                }
                (sup, pow)
            }
        }
    }

    fn extra_breakpoints(&self) -> &[f64] {
        match self {
            Self::Step { h, .. } => h.partition(),
            _ => &[],
        }
    }

    fn domain(&self) -> Interval {
        match self {
            Self::Step { h, .. } => h.domain(),
            _ => Interval::unit(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TableRow {
    pub index: usize,
    pub sup_dist: f64,
    pub sup_bound: f64,
    /// `‖φ_n' - target‖_p`.
    pub lp_err: LpResult,
    /// Bound on `‖φ_n' - target‖_p^p`.
    pub lp_pow_bound: f64,
    /// `2 ×` the quadrature error of the p-th power.
    pub tolerance: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceTable {
    pub p: Exponent,
    pub rows: Vec<TableRow>,
}

impl ConvergenceTable {
    pub fn all_pass(&self) -> bool {
        self.rows.iter().all(|r| r.pass)
    }

    /// `lp_err` strictly decreases down the table.
    pub fn strictly_decreasing(&self) -> bool {
        self.rows.windows(2).all(|w| w[1].lp_err.value < w[0].lp_err.value)
    }
}

/// One row per index: grid sup-distance to the identity and the L^p distance
/// of the derivative to the family's target, each against its bound.
pub fn convergence_table_1d(family: &Family1D, p: Exponent, indices: &[usize]) -> Result<ConvergenceTable> {
    if indices.windows(2).any(|w| w[0] >= w[1]) {
        return Err(domain_err!("indices must be strictly increasing"));
    }
    if indices.first() == Some(&0) {
        return Err(domain_err!("indices start at 1"));
    }
    let iv = family.domain();
    let mut rows = Vec::with_capacity(indices.len());
    for &n in indices {
        let f = family.member(n)?;
        let res = (SUP_POINTS_PER_CELL * n).max(crate::kernel::sup::DEFAULT_RESOLUTION_1D);
        let sup = sup_distance_1d(&|x| f.eval(x), &|x| x, iv, res, None)?;
        let mut bps: Vec<f64> = f.breakpoints().to_vec();
        bps.extend_from_slice(family.extra_breakpoints());
        bps.sort_by(f64::total_cmp);
        bps.dedup();
        let lp = lp_norm_1d(&|x| f.deriv(x) - family.target(x), iv, p, &bps)?;
        let (sup_bound, lp_pow_bound) = family.bounds(n, p.value());
        let tolerance = 2.0 * lp.p_power_error;
        let pass = sup.value <= sup_bound + EXACT_TOL && lp.value_p_power <= lp_pow_bound + tolerance;
        rows.push(TableRow {
            index: n,
            sup_dist: sup.value,
            sup_bound,
            lp_err: lp,
            lp_pow_bound,
            tolerance,
            pass,
        });
    }
    Ok(ConvergenceTable { p, rows })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn staircase_rows_pass() {
        let t = convergence_table_1d(&Family1D::staircase(), Exponent::half(), &[4, 16, 64]).unwrap();
        assert!(t.all_pass());
        assert!(t.strictly_decreasing());
        // n=16: 2 sqrt(1/16 * 15/16)
        let b = t.rows[1].lp_pow_bound;
        assert!((b - 2.0 * (15.0f64 / 256.0).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn unit_blend_is_exact() {
        let fam = Family1D::Blend {
            c: 1.0,
            ramp: RampKind::SmoothJump,
        };
        let t = convergence_table_1d(&fam, Exponent::half(), &[3, 9]).unwrap();
        for r in &t.rows {
            assert_eq!(r.sup_dist, 0.0);
            assert_eq!(r.lp_err.value, 0.0);
        }
    }

    #[test]
    fn step_family_decreases() {
        let h = StepFunction1D::new(alloc::vec![0.0, 0.4, 0.6, 1.0], alloc::vec![0.25, 0.5, 1.0 / 6.0]).unwrap();
        let fam = Family1D::Step {
            h,
            ramp: RampKind::SmoothJump,
        };
        let t = convergence_table_1d(&fam, Exponent::half(), &[5, 20, 80]).unwrap();
        assert!(t.all_pass());
        assert!(t.strictly_decreasing());
    }

    #[test]
    fn rejects_unsorted_indices() {
        assert!(convergence_table_1d(&Family1D::staircase(), Exponent::half(), &[4, 4]).is_err());
    }
}
