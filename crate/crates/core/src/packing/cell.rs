//! Localized rotations pasted into a ball packing of one cell.

use alloc::vec;
use alloc::vec::Vec;
#[cfg(not(any(feature = "std", test)))]
#[allow(unused_imports)]
use num_traits::Float;
use rand::Rng;

use super::ball::{vitali_pack_with, BallPacking, PackOptions};
use super::index::BallIndex;
use crate::error::{domain_err, Error, Result};
use crate::kernel::{lp_norm_nd, sup_distance, AxisBox, BoxDomain, Exponent, Hint, LpResult, NdOptions};
use crate::map::{IdentityMap, Smoothness, VectorMap, VolumePreservingDiffeo};
use crate::rng::seeded;
use crate::twist::{fit_c1, localized_rotation, LocalizedRotation, SOdMatrix};
use crate::verify::census_at;

/// Ratios `s/r` at which `C₁` is fitted by default.
pub const C1_FIT_RATIOS: [f64; 4] = [0.5, 0.75, 0.9, 0.99];
/// Largest shell fraction `η = 1 - s/r`.
pub const MAX_ETA: f64 = 0.5;
/// Below this the shells are too thin to resolve and the budget is declared infeasible.
pub const MIN_ETA: f64 = 1e-6;
/// Determinant tolerance for accepted outputs.
pub const DET_TOL: f64 = 1e-9;

/// Disjoint localized rotations; the identity off their balls.
#[derive(Debug, Clone)]
pub struct PastedRotations {
    d: usize,
    maps: Vec<LocalizedRotation>,
    index: BallIndex,
}

impl PastedRotations {
    pub fn new(d: usize, maps: Vec<LocalizedRotation>) -> Result<Self> {
        if let Some(m) = maps.iter().find(|m| m.dim() != d) {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: m.dim(),
            });
        }
        let mut lo = vec![0.0; d];
        let mut hi = vec![1.0; d];
        if !maps.is_empty() {
            lo.iter_mut().for_each(|v| *v = f64::INFINITY);
            hi.iter_mut().for_each(|v| *v = f64::NEG_INFINITY);
        }
        let mut rmin = f64::INFINITY;
        for m in &maps {
            let r = m.outer_radius();
            rmin = rmin.min(r);
            for k in 0..d {
                lo[k] = lo[k].min(m.center()[k] - r);
                hi[k] = hi[k].max(m.center()[k] + r);
            }
        }
        let bounds = AxisBox::from_bounds(&lo, &hi)?;
        let target = if maps.is_empty() {
            bounds.max_side()
        } else {
            // about one bucket per ball
            let per = (maps.len() as f64).powf(1.0 / d as f64).ceil().max(1.0);
            (bounds.max_side() / per).max(rmin)
        };
        let per_axis = BallIndex::per_axis_for(&bounds, target, 1 << (20 / d));
        let mut index = BallIndex::new(&bounds, per_axis);
        for (i, m) in maps.iter().enumerate() {
            index.insert(i as u32, m.center(), m.outer_radius());
        }
        Ok(Self { d, maps, index })
    }

    pub fn identity(d: usize) -> Self {
        Self::new(d, Vec::new()).expect("empty pasting")
    }

    pub fn maps(&self) -> &[LocalizedRotation] {
        &self.maps
    }

    pub fn len(&self) -> usize {
        self.maps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.maps.is_empty()
    }

    /// One annulus hint per ball.
    pub fn hints(&self) -> Vec<Hint> {
        self.maps.iter().map(LocalizedRotation::hint).collect()
    }

    /// Largest ball diameter.
    pub fn max_diameter(&self) -> f64 {
        self.maps.iter().map(|m| 2.0 * m.outer_radius()).fold(0.0, f64::max)
    }

    fn find(&self, x: &[f64]) -> Option<&LocalizedRotation> {
        for &id in self.index.bucket_at(x) {
            let m = &self.maps[id as usize];
            let r = m.outer_radius();
            let n2: f64 = x.iter().zip(m.center()).map(|(a, b)| (a - b) * (a - b)).sum();
            if n2 < r * r {
                return Some(m);
            }
        }
        None
    }
}

impl VectorMap for PastedRotations {
    fn dim(&self) -> usize {
        self.d
    }
    fn eval_into(&self, x: &[f64], out: &mut [f64]) {
        match self.find(x) {
            Some(m) => m.eval_into(x, out),
            None => out.copy_from_slice(x),
        }
    }
    fn jacobian_into(&self, x: &[f64], jac: &mut [f64]) {
        match self.find(x) {
            Some(m) => m.jacobian_into(x, jac),
            None => crate::map::identity_into(self.d, jac),
        }
    }
}

impl VolumePreservingDiffeo for PastedRotations {
    fn inverse_into(&self, y: &[f64], out: &mut [f64]) {
        // each localized rotation maps its ball onto itself
        match self.find(y) {
            Some(m) => m.inverse_into(y, out),
            None => out.copy_from_slice(y),
        }
    }
    fn smoothness(&self) -> Smoothness {
        Smoothness::CInf
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ApproximantReport {
    /// Grid `‖f - Id‖_∞`.
    pub sup_distance_to_target: f64,
    /// `max_k 2 r_k`.
    pub sup_bound: f64,
    /// `‖Df - H‖_p`.
    pub lp_derivative_error: LpResult,
    /// `∫|Df - H|^p` budget the construction was sized for.
    pub lp_budget_p_power: f64,
    pub det_check_pass: bool,
    pub det_max_dev: f64,
    pub delta: f64,
    pub residual: f64,
    pub c1: f64,
    pub eta: f64,
    /// `(r_k, s_k)`.
    pub radii: Vec<(f64, f64)>,
    pub level: Option<u32>,
}

impl ApproximantReport {
    pub fn n_balls(&self) -> usize {
        self.radii.len()
    }
}

/// Error budget for one cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellBudget {
    /// Diameter cap for the balls, hence for `‖f - Id‖_∞`.
    pub max_diameter: f64,
    /// Allowance for `Σ_k ∫_{D_k} |DG_k - H|^p`.
    pub ball_budget: f64,
    /// Residual measure target.
    pub delta: f64,
}

impl CellBudget {
    /// `ε`-diameter balls with half of `ε^p` for the ball terms.
    pub fn from_eps(eps: f64, delta: f64, p: Exponent) -> Self {
        Self {
            max_diameter: eps,
            ball_budget: 0.5 * eps.powf(p.value()),
            delta,
        }
    }
}

#[derive(Debug, Clone)]
pub struct CellOptions {
    pub pack: PackOptions,
    /// Use this constant instead of fitting one.
    pub c1: Option<f64>,
    pub c1_ratios: Vec<f64>,
    pub c1_quad: NdOptions,
    /// Measure sup distance, L^p error and determinants after construction.
    pub verify: bool,
    pub verify_quad: NdOptions,
    pub sup_resolution: usize,
    pub det_points: usize,
    pub seed: u64,
}

impl Default for CellOptions {
    fn default() -> Self {
        Self {
            pack: PackOptions::default().with_resolution(512),
            c1: None,
            c1_ratios: C1_FIT_RATIOS.to_vec(),
            c1_quad: NdOptions::default().with_cells(32),
            verify: true,
            verify_quad: NdOptions::default(),
            sup_resolution: 512,
            det_points: 2000,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct CellDiffeo {
    pub map: PastedRotations,
    pub packing: BallPacking,
    pub report: ApproximantReport,
}

/// `ε`-diameter packing of the cell with the localized rotation towards
/// `h` pasted into every ball. Half of `ε^p` goes to the balls, and `δ`
/// bounds the residual where `f = Id`.
pub fn build_cell_diffeo(cell: &BoxDomain, h: &SOdMatrix, eps: f64, delta: f64, p: Exponent) -> Result<CellDiffeo> {
    build_cell_diffeo_with(cell, h, CellBudget::from_eps(eps, delta, p), p, &CellOptions::default())
}

pub fn build_cell_diffeo_with(
    cell: &BoxDomain,
    h: &SOdMatrix,
    budget: CellBudget,
    p: Exponent,
    opts: &CellOptions,
) -> Result<CellDiffeo> {
    let d = cell.dim();
    if h.dim() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: h.dim(),
        });
    }
    if !p.is_subunit() {
        return Err(domain_err!("cell construction needs p < 1"));
    }
    if !(budget.ball_budget > 0.0 && budget.delta > 0.0 && budget.max_diameter > 0.0) {
        return Err(domain_err!("cell budget entries must be positive"));
    }
    if h.is_identity() {
        let map = PastedRotations::identity(d);
        let report = ApproximantReport {
            sup_distance_to_target: 0.0,
            sup_bound: 0.0,
            lp_derivative_error: LpResult::zero(p),
            lp_budget_p_power: 0.0,
            det_check_pass: true,
            det_max_dev: 0.0,
            delta: budget.delta,
            residual: 0.0,
            c1: 0.0,
            eta: 0.0,
            radii: Vec::new(),
            level: None,
        };
        let packing = BallPacking {
            balls: Vec::new(),
            residual_measure_estimate: 0.0,
            resolution: 0,
            resolution_error: 0.0,
            analytic_residual: 0.0,
            max_diameter: budget.max_diameter,
            delta: budget.delta,
        };
        return Ok(CellDiffeo { map, packing, report });
    }
    let side = cell.boxes().iter().map(AxisBox::min_side).fold(f64::INFINITY, f64::min);
    let packing = vitali_pack_with(cell, budget.max_diameter.min(side), budget.delta, &opts.pack)?;
    let c1 = match opts.c1 {
        Some(c) => c,
        None => fit_c1(h, p, &opts.c1_ratios, &opts.c1_quad)?.c1,
    };
    let pv = p.value();
    let sum_rd: f64 = packing.balls.iter().map(|b| b.radius.powi(d as i32)).sum();
    let eta = if sum_rd == 0.0 {
        MAX_ETA
    } else {
        (budget.ball_budget / (c1.powf(pv) * sum_rd))
            .powf(1.0 / (1.0 - pv))
            .min(MAX_ETA)
    };
    if eta < MIN_ETA {
        return Err(Error::Parameter(alloc::format!(
            "shell fraction {eta:e} too thin for C1 = {c1:.3}; increase epsilon or delta"
        )));
    }
    let maps = packing
        .balls
        .iter()
        .map(|b| localized_rotation(h, b.center.clone(), b.radius, b.radius * (1.0 - eta)))
        .collect::<Result<Vec<_>>>()?;
    let radii = maps.iter().map(|m| (m.outer_radius(), m.inner_radius())).collect();
    let map = PastedRotations::new(d, maps)?;
    let max_abs = h.max_abs_entry();
    let residual = packing.residual_measure_estimate + packing.resolution_error;
    let lp_budget = c1.powf(pv) * sum_rd * eta.powf(1.0 - pv) + residual * (1.0 + max_abs).powf(pv);
    let mut report = ApproximantReport {
        sup_distance_to_target: f64::NAN,
        sup_bound: map.max_diameter(),
        lp_derivative_error: LpResult::zero(p),
        lp_budget_p_power: lp_budget,
        det_check_pass: false,
        det_max_dev: f64::NAN,
        delta: budget.delta,
        residual: packing.residual_measure_estimate,
        c1,
        eta,
        radii,
        level: None,
    };
    if opts.verify {
        let hm = h.row_major();
        let target = |_: &[f64], out: &mut [f64]| out.copy_from_slice(&hm);
        let v = verify_pasting(&map, cell, &target, p, opts)?;
        report.sup_distance_to_target = v.0;
        report.lp_derivative_error = v.1;
        report.det_max_dev = v.2;
        report.det_check_pass = v.2 <= DET_TOL;
    }
    Ok(CellDiffeo { map, packing, report })
}

/// Grid sup distance to the identity, `‖Df - H‖_p` and the determinant census.
pub(crate) fn verify_pasting(
    map: &PastedRotations,
    dom: &BoxDomain,
    target: &(dyn Fn(&[f64], &mut [f64]) + Sync),
    p: Exponent,
    opts: &CellOptions,
) -> Result<(f64, LpResult, f64)> {
    let d = map.dim();
    let sup = sup_distance(map, &IdentityMap { d }, dom, opts.sup_resolution, None)?;
    let mut q = opts.verify_quad.clone();
    q.hints.extend(map.hints());
    let g = |x: &[f64], out: &mut [f64]| {
        let mut t = [0.0; crate::map::MAX_DIM * crate::map::MAX_DIM];
        map.jacobian_into(x, out);
        target(x, &mut t[..d * d]);
        for (v, w) in out.iter_mut().zip(&t[..d * d]) {
            *v -= w;
        }
    };
    let lp = lp_norm_nd(&g, d * d, dom, p, &q)?;
    let pts = census_points(map, dom, opts.det_points, opts.seed);
    let census = census_at(map, &pts);
    Ok((sup.value, lp, census.max_det_dev))
}

/// Uniform points of the domain plus points on the transition shells.
pub(crate) fn census_points(map: &PastedRotations, dom: &BoxDomain, n: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = seeded(seed);
    let d = map.dim();
    let bb = dom.bounding_box();
    let mut pts: Vec<Vec<f64>> = Vec::with_capacity(2 * n);
    while pts.len() < n {
        let x: Vec<f64> = bb.axes.iter().map(|iv| rng.random_range(iv.lo..iv.hi)).collect();
        if dom.contains(&x) {
            pts.push(x);
        }
    }
    let m = map.len();
    if m > 0 {
        for i in 0..n {
            let g = &map.maps()[(i * 7919) % m];
            let mut dir: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..1.0)).collect();
            let norm = dir.iter().map(|v| v * v).sum::<f64>().sqrt().max(1e-300);
            let rad = rng.random_range(g.inner_radius()..g.outer_radius());
            dir.iter_mut()
                .zip(g.center())
                .for_each(|(v, c)| *v = c + *v / norm * rad);
            pts.push(dir);
        }
    }
    pts
}

#[cfg(test)]
mod tests {
    use super::*;
    use core::f64::consts::FRAC_PI_2;

    #[test]
    fn identity_cell_gives_identity() {
        let c = build_cell_diffeo(
            &BoxDomain::unit_cube(2),
            &SOdMatrix::identity(2),
            0.1,
            0.02,
            Exponent::half(),
        )
        .unwrap();
        assert!(c.map.is_empty());
        assert_eq!(c.report.lp_derivative_error.value, 0.0);
        assert_eq!(c.map.eval(&[0.3, 0.4]), vec![0.3, 0.4]);
    }

    #[test]
    fn quarter_turn_cell() {
        let p = Exponent::half();
        let opts = CellOptions {
            verify_quad: NdOptions::default().with_cells(256),
            ..CellOptions::default()
        };
        let budget = CellBudget::from_eps(0.1, 0.02, p);
        let c = build_cell_diffeo_with(
            &BoxDomain::unit_cube(2),
            &SOdMatrix::rotation2(FRAC_PI_2),
            budget,
            p,
            &opts,
        )
        .unwrap();
        let r = &c.report;
        assert!(r.det_check_pass, "det dev {}", r.det_max_dev);
        assert!(r.sup_distance_to_target <= r.sup_bound + 1e-12);
        assert!(r.sup_bound <= 0.1 + 1e-12);
        let eps_p = 0.1f64.sqrt();
        assert!(
            r.lp_derivative_error.value_p_power <= eps_p + 2.0 * r.lp_derivative_error.p_power_error,
            "{} > {eps_p}",
            r.lp_derivative_error.value_p_power
        );
        assert!(r.lp_derivative_error.value_p_power <= r.lp_budget_p_power * 1.05);
        // continuity across every outer radius
        for m in c.map.maps().iter().take(20) {
            let a = m.center();
            let r = m.outer_radius();
            for t in [1.0 - 1e-9, 1.0 + 1e-9] {
                let x = [a[0] + r * t, a[1]];
                let y = c.map.eval(&x);
                assert!((y[0] - x[0]).abs() + (y[1] - x[1]).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn pasted_inverse_round_trips() {
        let p = Exponent::half();
        let opts = CellOptions {
            verify: false,
            c1: Some(15.0),
            ..CellOptions::default()
        };
        let c = build_cell_diffeo_with(
            &BoxDomain::unit_cube(2),
            &SOdMatrix::rotation2(2.0),
            CellBudget::from_eps(0.2, 0.05, p),
            p,
            &opts,
        )
        .unwrap();
        for x in census_points(&c.map, &BoxDomain::unit_cube(2), 200, 3) {
            let back = c.map.inverse(&c.map.eval(&x));
            assert!((back[0] - x[0]).abs() + (back[1] - x[1]).abs() < 1e-12);
        }
    }
}
