//! Transfer of an approximating sequence through a volume-preserving map:
//! `g_n = f_n ∘ f` approximates `(H ∘ f) Df`.

use alloc::vec;
use alloc::vec::Vec;
#[cfg(not(any(feature = "std", test)))]
#[allow(unused_imports)]
use num_traits::Float;

use super::field::RotationField;
use crate::error::{domain_err, Error, Result};
use crate::kernel::{lp_entries_nd, lp_norm_nd, sup_distance, BoxDomain, Exponent, LpResult, NdOptions};
use crate::map::{det_row_major, Composition, IdentityMap, VectorMap, VolumePreservingDiffeo, MAX_DIM};
use crate::rng::seeded;
use rand::Rng;

#[derive(Debug, Clone)]
pub struct TransferOptions {
    /// Quadrature cells and sup grid per axis.
    pub grid: usize,
    /// Points for the `|det Df| = 1` spot check.
    pub det_points: usize,
    pub seed: u64,
}

impl Default for TransferOptions {
    fn default() -> Self {
        Self {
            grid: 256,
            det_points: 500,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransferRow {
    pub index: usize,
    /// Grid `‖g_n - f‖_∞`.
    pub sup_g_minus_f: f64,
    /// Grid `‖f_n - Id‖_∞`.
    pub sup_fn_minus_id: f64,
    /// `‖Dg_n - (H∘f) Df‖_p`.
    pub lp_error: LpResult,
    /// `max_ij Σ_k ‖(Df_n - H)_ik ∘ f‖_q^p ‖(Df)_kj‖_r^p`.
    pub holder_bound: f64,
    pub bound_holds: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransferReport {
    pub p: Exponent,
    /// `None` for `r = ∞`.
    pub r: Option<f64>,
    pub q: f64,
    pub f_det_max_dev: f64,
    pub rows: Vec<TransferRow>,
}

/// `g_n = f_n ∘ f` for every element of the sequence, with the sup-distance
/// identity and the Hölder bound on `‖Dg_n - (H∘f) Df‖_p` checked.
pub fn transfer_by_homeo<'a, F, G>(
    f: &'a F,
    fs: &'a [G],
    h: &RotationField,
    p: Exponent,
    r: Option<f64>,
    opts: &TransferOptions,
) -> Result<(Vec<Composition<&'a G, &'a F>>, TransferReport)>
where
    F: VolumePreservingDiffeo,
    G: VectorMap,
{
    let pv = p.value();
    if !p.is_subunit() {
        return Err(domain_err!("transfer needs p < 1"));
    }
    let q = match r {
        None => pv,
        Some(r) => {
            if !(r > pv / (1.0 - pv)) {
                return Err(Error::Hypothesis(alloc::format!(
                    "Jacobian exponent r = {r} must exceed p/(1-p) = {}",
                    pv / (1.0 - pv)
                )));
            }
            r * pv / (r - pv)
        }
    };
    let dom = h.domain();
    let d = dom.dim();
    if f.dim() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: f.dim(),
        });
    }
    let f_det = det_spot_check(f, dom, opts.det_points, opts.seed);
    if f_det > 1e-9 {
        return Err(Error::Hypothesis(alloc::format!(
            "|det Df| deviates from 1 by {f_det:e}"
        )));
    }
    let quad = NdOptions::default().with_cells(opts.grid);
    // ‖(Df)_kj‖_r^p
    let df_norms: Vec<f64> = match r {
        None => sup_entries(f, dom, opts.grid),
        Some(r) => {
            let g = |x: &[f64], out: &mut [f64]| f.jacobian_into(x, out);
            lp_entries_nd(&g, d * d, dom, Exponent::new(r)?, &quad)?
                .iter()
                .map(|e| e.value + e.quad_error_estimate)
                .collect()
        }
    };
    let qe = Exponent::new(q)?;
    let mut rows = Vec::with_capacity(fs.len());
    let mut maps = Vec::with_capacity(fs.len());
    for (idx, fn_) in fs.iter().enumerate() {
        let g = Composition { outer: fn_, inner: f };
        let sup_g = sup_distance(&g, f, dom, opts.grid, None)?.value;
        let sup_fn = sup_distance(fn_, &IdentityMap { d }, dom, opts.grid, None)?.value;
        // (Df_n - H) ∘ f
        let a = |x: &[f64], out: &mut [f64]| {
            let mut y = [0.0; MAX_DIM];
            let mut hm = [0.0; MAX_DIM * MAX_DIM];
            f.eval_into(x, &mut y[..d]);
            fn_.jacobian_into(&y[..d], out);
            h.eval_into(&y[..d], &mut hm[..d * d]);
            for (v, w) in out.iter_mut().zip(&hm[..d * d]) {
                *v -= w;
            }
        };
        let diff = |x: &[f64], out: &mut [f64]| {
            let mut am = [0.0; MAX_DIM * MAX_DIM];
            let mut jf = [0.0; MAX_DIM * MAX_DIM];
            a(x, &mut am[..d * d]);
            f.jacobian_into(x, &mut jf[..d * d]);
            crate::map::matmul_into(d, &am[..d * d], &jf[..d * d], out);
        };
        let lp = lp_norm_nd(&diff, d * d, dom, p, &quad)?;
        let a_norms: Vec<f64> = lp_entries_nd(&a, d * d, dom, qe, &quad)?
            .iter()
            .map(|e| e.value + e.quad_error_estimate)
            .collect();
        let mut bound = 0.0f64;
        for i in 0..d {
            for j in 0..d {
                let b: f64 = (0..d)
                    .map(|k| a_norms[i * d + k].powf(pv) * df_norms[k * d + j].powf(pv))
                    .sum();
                bound = bound.max(b);
            }
        }
        let holds = lp.value_p_power - 2.0 * lp.p_power_error <= bound;
        rows.push(TransferRow {
            index: idx,
            sup_g_minus_f: sup_g,
            sup_fn_minus_id: sup_fn,
            lp_error: lp,
            holder_bound: bound,
            bound_holds: holds,
        });
        maps.push(g);
    }
    Ok((
        maps,
        TransferReport {
            p,
            r,
            q,
            f_det_max_dev: f_det,
            rows,
        },
    ))
}

fn det_spot_check(f: &dyn VectorMap, dom: &BoxDomain, n: usize, seed: u64) -> f64 {
    let d = dom.dim();
    let bb = dom.bounding_box();
    let mut rng = seeded(seed);
    let mut jac = vec![0.0; d * d];
    let mut worst = 0.0f64;
    let mut taken = 0;
    while taken < n {
        let x: Vec<f64> = bb.axes.iter().map(|iv| rng.random_range(iv.lo..iv.hi)).collect();
        if !dom.contains(&x) {
            continue;
        }
        taken += 1;
        f.jacobian_into(&x, &mut jac);
        worst = worst.max((det_row_major(d, &jac).abs() - 1.0).abs());
    }
    worst
}

/// Entrywise max of `|Df|` over the midpoint grid.
fn sup_entries(f: &dyn VectorMap, dom: &BoxDomain, grid: usize) -> Vec<f64> {
    let d = dom.dim();
    let mut out = vec![0.0f64; d * d];
    let mut jac = vec![0.0; d * d];
    let mut x = vec![0.0; d];
    for b in dom.boxes() {
        crate::kernel::domain::for_each_grid_point(b, grid, &mut x, |pt| {
            if dom.is_masked() && !dom.contains(pt) {
                return;
            }
            f.jacobian_into(pt, &mut jac);
            for (o, v) in out.iter_mut().zip(&jac) {
                *o = o.max(v.abs());
            }
        });
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::map::RigidRotation;
    use crate::packing::cell::{build_cell_diffeo_with, CellBudget, CellOptions};
    use crate::twist::SOdMatrix;

    fn sequence() -> (RotationField, Vec<crate::packing::PastedRotations>) {
        let h = SOdMatrix::rotation2(1.0);
        let field = RotationField::constant(BoxDomain::unit_cube(2), &h).unwrap();
        let p = Exponent::half();
        let opts = CellOptions {
            verify: false,
            c1: Some(15.0),
            ..CellOptions::default()
        };
        let fs = [0.5, 0.25]
            .iter()
            .map(|&eps| {
                build_cell_diffeo_with(
                    &BoxDomain::unit_cube(2),
                    &h,
                    CellBudget::from_eps(eps, 0.05, p),
                    p,
                    &opts,
                )
                .unwrap()
                .map
            })
            .collect();
        (field, fs)
    }

    #[test]
    fn rejects_low_jacobian_integrability() {
        let (h, fs) = sequence();
        let id = IdentityMap { d: 2 };
        let r = transfer_by_homeo(&id, &fs, &h, Exponent::half(), Some(1.0), &TransferOptions::default());
        assert!(matches!(r, Err(Error::Hypothesis(_))));
    }

    #[test]
    fn identity_transfer_reduces_to_input() {
        let (h, fs) = sequence();
        let id = IdentityMap { d: 2 };
        let opts = TransferOptions {
            grid: 128,
            ..TransferOptions::default()
        };
        let (_, rep) = transfer_by_homeo(&id, &fs, &h, Exponent::half(), None, &opts).unwrap();
        for row in &rep.rows {
            assert_eq!(row.sup_g_minus_f, row.sup_fn_minus_id);
            assert!(row.bound_holds);
        }
    }

    #[test]
    fn rigid_rotation_about_center() {
        // f maps the unit square onto itself: quarter turn about its center
        let (h, fs) = sequence();
        let q = SOdMatrix::rotation2(core::f64::consts::FRAC_PI_2);
        let f = RigidRotation::new(vec![0.5, 0.5], q.matrix());
        let opts = TransferOptions {
            grid: 128,
            ..TransferOptions::default()
        };
        let (maps, rep) = transfer_by_homeo(&f, &fs, &h, Exponent::half(), Some(4.0), &opts).unwrap();
        assert_eq!(maps.len(), 2);
        for row in &rep.rows {
            assert!(row.bound_holds, "{:?}", row);
            assert!((row.sup_g_minus_f - row.sup_fn_minus_id).abs() < 1e-12);
        }
    }
}
