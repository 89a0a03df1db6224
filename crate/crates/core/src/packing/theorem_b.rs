//! Level-by-level volume-preserving approximants of an SO(d)-valued field.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;
#[cfg(not(any(feature = "std", test)))]
#[allow(unused_imports)]
use num_traits::Float;

use super::ball::PackOptions;
use super::cell::{
    build_cell_diffeo_with, verify_pasting, ApproximantReport, CellBudget, CellOptions, PastedRotations, C1_FIT_RATIOS,
    DET_TOL,
};
use super::field::{dyadic_rotation_sample, RotationField};
use crate::error::{domain_err, Result};
use crate::kernel::{BoxDomain, Exponent, LpResult, NdOptions};
use crate::twist::fit_c1;

#[derive(Debug, Clone)]
pub struct TheoremBOptions {
    /// Quadrature cells per axis and sup-distance grid.
    pub grid: usize,
    /// Residual-certificate resolution per cell axis.
    pub pack_resolution: usize,
    pub det_points: usize,
    pub seed: u64,
    pub c1_ratios: Vec<f64>,
    pub c1_quad: NdOptions,
}

impl Default for TheoremBOptions {
    fn default() -> Self {
        Self {
            grid: 512,
            pack_resolution: 256,
            det_points: 4000,
            seed: 0,
            c1_ratios: C1_FIT_RATIOS.to_vec(),
            c1_quad: NdOptions::default().with_cells(32),
        }
    }
}

#[derive(Debug, Clone)]
pub struct LevelReport {
    pub level: u32,
    /// `ε_n = 1/n`.
    pub eps: f64,
    pub n_cells: usize,
    pub n_balls: usize,
    pub sup_dist: f64,
    /// `‖Df_n - H‖_p`.
    pub lp_err: LpResult,
    /// `‖Df_n - H_n‖_p`.
    pub lp_err_step: LpResult,
    /// `‖H_n - H‖_1`.
    pub hn_l1: LpResult,
    /// `1/n^p + λ(Ω)^{1-p} ‖H_n - H‖_1^p`.
    pub bound: f64,
    /// Quadrature allowance added to the bound.
    pub tolerance: f64,
    pub inequality_holds: bool,
    pub det_max_dev: f64,
    pub report: ApproximantReport,
}

/// For each level `n`: sample `H` on `2^n` dyadic cells, build the pasted
/// approximant of each cell with `ε_n = 1/n`, and check the combined bound.
pub fn theorem_b_sequence(
    h: &RotationField,
    p: Exponent,
    levels: &[u32],
    opts: &TheoremBOptions,
) -> Result<Vec<(PastedRotations, LevelReport)>> {
    if !p.is_subunit() {
        return Err(domain_err!("the sequence needs p < 1"));
    }
    if levels.contains(&0) {
        return Err(domain_err!("levels must be positive"));
    }
    let dom = h.domain();
    let d = h.dim();
    let pv = p.value();
    let lambda = dom.measure(opts.grid);
    let quad = NdOptions::default().with_cells(opts.grid);
    let mut c1_cache: BTreeMap<Vec<u64>, f64> = BTreeMap::new();
    let mut out = Vec::with_capacity(levels.len());
    for &n in levels {
        let eps = 1.0 / n as f64;
        let sample = dyadic_rotation_sample(h, n, &quad)?;
        let mut maps = Vec::new();
        let mut radii = Vec::new();
        let mut residual = 0.0;
        let (mut c1_max, mut eta_min) = (0.0f64, f64::INFINITY);
        for (i, (cell, hi)) in sample.cells.iter().zip(&sample.values).enumerate() {
            if hi.is_identity() {
                continue;
            }
            let cell_dom = BoxDomain::single(cell.clone());
            let lam_i = cell_dom.measure(opts.pack_resolution);
            if lam_i == 0.0 {
                continue;
            }
            let share = 0.5 * eps.powf(pv) * lam_i / lambda;
            let budget = CellBudget {
                max_diameter: eps,
                ball_budget: share,
                delta: share / (1.0 + hi.max_abs_entry()),
            };
            let key: Vec<u64> = hi.row_major().iter().map(|v| v.to_bits()).collect();
            let c1 = match c1_cache.get(&key) {
                Some(&c) => c,
                None => {
                    let c = fit_c1(hi, p, &opts.c1_ratios, &opts.c1_quad)?.c1;
                    c1_cache.insert(key, c);
                    c
                }
            };
            let copts = CellOptions {
                pack: PackOptions::default().with_resolution(opts.pack_resolution),
                c1: Some(c1),
                verify: false,
                seed: opts.seed.wrapping_add(i as u64),
                ..CellOptions::default()
            };
            let built = build_cell_diffeo_with(&cell_dom, hi, budget, p, &copts)?;
            residual += built.report.residual;
            c1_max = c1_max.max(c1);
            eta_min = eta_min.min(built.report.eta);
            radii.extend(built.report.radii.iter().copied());
            maps.extend(built.map.maps().iter().cloned());
        }
        let f = PastedRotations::new(d, maps)?;
        let vopts = CellOptions {
            verify_quad: NdOptions::default()
                .with_cells(opts.grid)
                .with_hints(sample.face_hints()),
            sup_resolution: opts.grid,
            det_points: opts.det_points,
            seed: opts.seed,
            ..CellOptions::default()
        };
        let target = |x: &[f64], o: &mut [f64]| h.eval_into(x, o);
        let (sup, lp_err, det_dev) = verify_pasting(&f, dom, &target, p, &vopts)?;
        let step = &sample.field;
        let step_target = |x: &[f64], o: &mut [f64]| step.eval_into(x, o);
        let (_, lp_step, _) = verify_pasting(
            &f,
            dom,
            &step_target,
            p,
            &CellOptions {
                det_points: 0,
                sup_resolution: 1,
                ..vopts.clone()
            },
        )?;
        let l1 = sample.l1_error;
        let lam_factor = lambda.powf(1.0 - pv);
        let bound = eps.powf(pv) + lam_factor * l1.value.powf(pv);
        let l1_slack = lam_factor * ((l1.value + l1.quad_error_estimate).powf(pv) - l1.value.powf(pv));
        let tolerance = 2.0 * (lp_err.p_power_error + l1_slack);
        let holds = lp_err.value_p_power <= bound + tolerance;
        let report = ApproximantReport {
            sup_distance_to_target: sup,
            sup_bound: f.max_diameter(),
            lp_derivative_error: lp_err,
            lp_budget_p_power: eps.powf(pv),
            det_check_pass: det_dev <= DET_TOL,
            det_max_dev: det_dev,
            delta: 0.5 * eps.powf(pv),
            residual,
            c1: c1_max,
            eta: if eta_min.is_finite() { eta_min } else { 0.0 },
            radii,
            level: Some(n),
        };
        let row = LevelReport {
            level: n,
            eps,
            n_cells: sample.cells.len(),
            n_balls: f.len(),
            sup_dist: sup,
            lp_err,
            lp_err_step: lp_step,
            hn_l1: l1,
            bound,
            tolerance,
            inequality_holds: holds,
            det_max_dev: det_dev,
            report,
        };
        out.push((f, row));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::twist::SOdMatrix;

    #[test]
    fn identity_field_gives_identity_maps() {
        let h = RotationField::constant(BoxDomain::unit_cube(2), &SOdMatrix::identity(2)).unwrap();
        let opts = TheoremBOptions {
            grid: 64,
            ..TheoremBOptions::default()
        };
        let seq = theorem_b_sequence(&h, Exponent::half(), &[1, 2], &opts).unwrap();
        for (f, row) in &seq {
            assert!(f.is_empty());
            assert_eq!(row.sup_dist, 0.0);
            assert_eq!(row.lp_err.value, 0.0);
            assert!(row.inequality_holds);
        }
    }

    #[test]
    fn rotating_field_coarse_levels() {
        let h = RotationField::planar(BoxDomain::unit_cube(2), |x| core::f64::consts::PI * x[0]).unwrap();
        let opts = TheoremBOptions {
            grid: 128,
            pack_resolution: 128,
            det_points: 500,
            ..TheoremBOptions::default()
        };
        let seq = theorem_b_sequence(&h, Exponent::half(), &[2, 3], &opts).unwrap();
        for (_, row) in &seq {
            assert!(row.det_max_dev <= 1e-9);
            assert!(row.sup_dist <= row.eps + 1e-12);
            assert!(row.inequality_holds, "{} > {}", row.lp_err.value_p_power, row.bound);
        }
    }
}
