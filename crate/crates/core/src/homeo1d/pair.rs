//! Feasibility of a pair `(f, F)` and the approximation pipeline realizing it.

use alloc::sync::Arc;
use alloc::vec::Vec;
#[cfg(not(any(feature = "std", test)))]
#[allow(unused_imports)]
use num_traits::Float;

use super::homeo::{Homeo1D, ScalarFn};
use super::step::{make_step_homeo, transfer_compose, StepFunction1D};
use crate::error::{domain_err, Error, Result};
use crate::kernel::quad1d::{integrate_piecewise, QuadOptions};
use crate::kernel::{lp_norm_1d, sup_distance_1d, Exponent, LpResult};

/// Ratios within this distance of `[0, 1]` count as feasible.
pub const FEASIBILITY_TOL: f64 = 1e-12;
/// Step values within this distance of `[0, 1]` are clamped.
pub const CLAMP_TOL: f64 = 1e-9;

/// A homeomorphism `f` and a candidate limit derivative `F`.
#[derive(Clone)]
pub struct PairCandidate1D {
    pub f: Homeo1D,
    pub target: ScalarFn,
    /// Points where `F` may jump.
    pub target_breakpoints: Vec<f64>,
    pub p: Exponent,
    /// Integrability exponent of `f'` and `(f^{-1})'`, must exceed 1.
    pub r: Exponent,
}

impl PairCandidate1D {
    pub fn new(f: Homeo1D, target: ScalarFn, target_breakpoints: Vec<f64>, p: Exponent, r: Exponent) -> Result<Self> {
        if r.value() <= 1.0 {
            return Err(domain_err!("need r > 1, got {}", r.value()));
        }
        Ok(Self {
            f,
            target,
            target_breakpoints,
            p,
            r,
        })
    }

    /// `(f, f')`, always feasible.
    pub fn derivative_pair(f: Homeo1D, p: Exponent) -> Self {
        let g = f.clone();
        Self {
            target: Arc::new(move |x| g.deriv(x)),
            target_breakpoints: f.breakpoints().to_vec(),
            f,
            p,
            r: Exponent::new(2.0).unwrap(),
        }
    }
}

/// Outcome of [`feasible_pair`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Feasibility {
    pub feasible: bool,
    /// First sample where `F/f'` leaves `[0, 1]`.
    pub witness: Option<f64>,
    pub min_ratio: f64,
    pub max_ratio: f64,
    /// Sampled Riemann sums of `|f'|^r` and `|f'|^{1-r}` were finite.
    pub lr_finite: bool,
}

/// `0 <= F/f' <= 1` at `samples` cell midpoints.
pub fn feasible_pair(cand: &PairCandidate1D, samples: usize) -> Result<Feasibility> {
    let iv = cand.f.domain();
    let samples = samples.max(1);
    let r = cand.r.value();
    let step = iv.length() / samples as f64;
    let mut out = Feasibility {
        feasible: true,
        witness: None,
        min_ratio: f64::INFINITY,
        max_ratio: f64::NEG_INFINITY,
        lr_finite: true,
    };
    let (mut sum_fwd, mut sum_inv) = (0.0, 0.0);
    for i in 0..samples {
        let x = iv.lo + (i as f64 + 0.5) * step;
        let d = cand.f.deriv(x);
        if !(d != 0.0) {
            return Err(Error::Degenerate(alloc::format!("f' = 0 at x = {x}")));
        }
        let ratio = (cand.target)(x) / d;
        if !ratio.is_finite() {
            return Err(Error::EvaluationFailure { at: x });
        }
        out.min_ratio = out.min_ratio.min(ratio);
        out.max_ratio = out.max_ratio.max(ratio);
        if !(-FEASIBILITY_TOL..=1.0 + FEASIBILITY_TOL).contains(&ratio) && out.feasible {
            out.feasible = false;
            out.witness = Some(x);
        }
        sum_fwd += d.abs().powf(r) * step;
        sum_inv += d.abs().powf(1.0 - r) * step;
    }
    out.lr_finite = sum_fwd.is_finite() && sum_inv.is_finite();
    Ok(out)
}

/// Iteration limits for [`approximate_pair`].
#[derive(Debug, Clone, Copy)]
pub struct ApproxBudget {
    pub start_n: usize,
    pub max_n: usize,
    pub max_step_level: u32,
    pub sup_resolution: usize,
}

impl Default for ApproxBudget {
    fn default() -> Self {
        Self {
            start_n: 4,
            max_n: 4096,
            max_step_level: 14,
            sup_resolution: 4096,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ApproxReport {
    pub n: usize,
    pub step_cells: usize,
    /// `‖T - T_k‖_1` of the step approximation.
    pub step_l1_error: f64,
    pub sup_distance: f64,
    pub lp_error: LpResult,
    pub converged: bool,
}

/// Builds `h` close to `f` uniformly with `h'` close to `F` in L^p.
///
/// The target `T = (F ∘ f^{-1}) (f^{-1})'` is replaced by dyadic cell averages,
/// realized by a step homeomorphism `φ_n`, and transported back as `φ_n ∘ f`.
pub fn approximate_pair(cand: &PairCandidate1D, eps: f64, budget: ApproxBudget) -> Result<(Homeo1D, ApproxReport)> {
    if !(eps > 0.0) {
        return Err(domain_err!("tolerance must be positive"));
    }
    let feas = feasible_pair(cand, budget.sup_resolution)?;
    if !feas.feasible {
        let w = feas.witness.unwrap_or(cand.f.domain().lo);
        return Err(Error::Infeasible {
            reason: alloc::format!("F/f' = {} leaves [0, 1]", (cand.target)(w) / cand.f.deriv(w)),
            witness: w,
        });
    }
    let f = &cand.f;
    let iv = f.domain();
    let target = cand.target.clone();
    let t = |y: f64| {
        let x = f.inverse(y);
        target(x) / f.deriv(x)
    };
    let mut t_bps: Vec<f64> = f.breakpoints().iter().map(|&x| f.eval(x)).collect();
    t_bps.extend(cand.target_breakpoints.iter().map(|&x| f.eval(x)));

    let (step, step_l1_error) = step_approximation(&t, iv, &t_bps, eps / 4.0, budget.max_step_level)?;
    let finv = f.inverted();
    let p = cand.p;
    let mut n = budget.start_n.max(1);
    let mut best: Option<(Homeo1D, ApproxReport)> = None;
    loop {
        let phi = make_step_homeo(&step, n)?;
        let h = transfer_compose(&phi, &finv)?;
        let sup = sup_distance_1d(&|x| h.eval(x), &|x| f.eval(x), iv, budget.sup_resolution, None)?;
        let mut bps = h.breakpoints().to_vec();
        bps.extend_from_slice(&cand.target_breakpoints);
        let lp = lp_norm_1d(&|x| h.deriv(x) - target(x), iv, p, &bps)?;
        let converged = sup.value <= eps && lp.value <= eps;
        let report = ApproxReport {
            n,
            step_cells: step.cells(),
            step_l1_error,
            sup_distance: sup.value,
            lp_error: lp,
            converged,
        };
        if converged {
            return Ok((h, report));
        }
        let better = best
            .as_ref()
            .map_or(true, |(_, b)| report.lp_error.value < b.lp_error.value);
        if better {
            best = Some((h, report));
        }
        if n * 2 > budget.max_n {
            return Ok(best.unwrap());
        }
        n *= 2;
    }
}

/// Dyadic cell averages of `t`, refined until `‖t - step‖_1 <= target`.
/// Averages in `[-CLAMP_TOL, 1 + CLAMP_TOL]` are clamped to `[0, 1]`.
pub fn step_approximation(
    t: &dyn Fn(f64) -> f64,
    iv: crate::kernel::Interval,
    breakpoints: &[f64],
    target: f64,
    max_level: u32,
) -> Result<(StepFunction1D, f64)> {
    let opts = QuadOptions {
        tol: 1e-12,
        max_depth: 40,
    };
    let mut level = 0u32;
    loop {
        let cells = 1usize << level;
        let len = iv.length() / cells as f64;
        let mut partition = Vec::with_capacity(cells + 1);
        let mut values = Vec::with_capacity(cells);
        let mut l1 = 0.0;
        for i in 0..cells {
            let lo = iv.lo + i as f64 * len;
            let hi = if i + 1 == cells { iv.hi } else { lo + len };
            partition.push(lo);
            let cell = crate::kernel::Interval { lo, hi };
            let mean = integrate_piecewise(t, cell, breakpoints, opts)?.value / (hi - lo);
            if !(-CLAMP_TOL..=1.0 + CLAMP_TOL).contains(&mean) {
                return Err(Error::Infeasible {
                    reason: alloc::format!("cell average {mean} leaves [0, 1]"),
                    witness: 0.5 * (lo + hi),
                });
            }
            let c = mean.clamp(0.0, 1.0);
            values.push(c);
            l1 += integrate_piecewise(&|y| (t(y) - c).abs(), cell, breakpoints, opts)?.value;
        }
        partition.push(iv.hi);
        if l1 <= target || level >= max_level {
            return Ok((StepFunction1D::new(partition, values)?, l1));
        }
        level += 1;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::Interval;
    use crate::map::Smoothness;

    fn square() -> Homeo1D {
        Homeo1D::from_fns(
            Interval::unit(),
            Arc::new(|x| x * x),
            Arc::new(|x| 2.0 * x),
            Some(Arc::new(|y: f64| y.sqrt())),
            Vec::new(),
            Smoothness::CInf,
        )
        .unwrap()
    }

    #[test]
    fn identity_with_unit_target_is_immediate() {
        let id = Homeo1D::identity(Interval::unit());
        let cand = PairCandidate1D::new(
            id,
            Arc::new(|_| 1.0),
            Vec::new(),
            Exponent::half(),
            Exponent::new(2.0).unwrap(),
        )
        .unwrap();
        let (h, rep) = approximate_pair(&cand, 0.05, ApproxBudget::default()).unwrap();
        assert!(rep.converged);
        assert_eq!(rep.sup_distance, 0.0);
        assert_eq!(rep.lp_error.value, 0.0);
        assert_eq!(h.eval(0.3), 0.3);
    }

    #[test]
    fn constant_two_is_infeasible() {
        let cand = PairCandidate1D::new(
            Homeo1D::identity(Interval::unit()),
            Arc::new(|_| 2.0),
            Vec::new(),
            Exponent::half(),
            Exponent::new(2.0).unwrap(),
        )
        .unwrap();
        let fe = feasible_pair(&cand, 100).unwrap();
        assert!(!fe.feasible);
        assert!(fe.witness.is_some());
        assert!(matches!(
            approximate_pair(&cand, 0.05, ApproxBudget::default()),
            Err(Error::Infeasible { .. })
        ));
    }

    #[test]
    fn derivative_pair_is_feasible() {
        let cand = PairCandidate1D::derivative_pair(square(), Exponent::half());
        let fe = feasible_pair(&cand, 1000).unwrap();
        assert!(fe.feasible);
        assert!((fe.max_ratio - 1.0).abs() < 1e-15 && (fe.min_ratio - 1.0).abs() < 1e-15);
    }

    #[test]
    fn square_with_identity_target() {
        let cand = PairCandidate1D::new(
            square(),
            Arc::new(|x| x),
            Vec::new(),
            Exponent::half(),
            Exponent::new(1.5).unwrap(),
        )
        .unwrap();
        let (_, rep) = approximate_pair(&cand, 0.05, ApproxBudget::default()).unwrap();
        assert!(rep.converged, "{rep:?}");
        assert!(rep.step_l1_error < 1e-9);
    }
}
