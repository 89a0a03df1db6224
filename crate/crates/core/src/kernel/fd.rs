//! Finite-difference Jacobians, used as an oracle for analytic ones.

use alloc::vec;
use alloc::vec::Vec;
use nalgebra::DMatrix;
#[cfg(not(any(feature = "std", test)))]
#[allow(unused_imports)]
use num_traits::Float;

use super::quadnd::Hint;
use crate::map::VectorMap;

/// A finite-difference Jacobian, row-major.
#[derive(Debug, Clone)]
pub struct FdJacobian {
    pub d: usize,
    pub entries: Vec<f64>,
    /// Some column was computed with one-sided differences because the
    /// central stencil crossed a hint surface.
    pub one_sided: bool,
}

impl FdJacobian {
    pub fn matrix(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.d, self.d, &self.entries)
    }

    pub fn max_abs_diff(&self, other: &[f64]) -> f64 {
        self.entries
            .iter()
            .zip(other)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

fn crosses(a: &[f64], b: &[f64], surfaces: &[Hint]) -> bool {
    surfaces.iter().any(|s| match s {
        Hint::Plane { axis, at } => (a[*axis] - at) * (b[*axis] - at) <= 0.0,
        Hint::Annulus { center, inner, outer } => {
            let ra = dist(a, center);
            let rb = dist(b, center);
            let (lo, hi) = (ra.min(rb), ra.max(rb));
            (lo <= *outer && *outer <= hi) || (*inner > 0.0 && lo <= *inner && *inner <= hi)
        }
    })
}

fn dist(a: &[f64], c: &[f64]) -> f64 {
    a.iter().zip(c).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Central-difference Jacobian of `f` at `x` with step `h`. Columns whose
/// stencil would straddle one of `surfaces` switch to a second-order
/// one-sided stencil on the side that stays clear.
pub fn fd_jacobian(f: &dyn VectorMap, x: &[f64], h: f64, surfaces: &[Hint]) -> FdJacobian {
    let d = f.dim();
    let mut entries = vec![0.0; d * d];
    let mut one_sided = false;
    let mut xp = x.to_vec();
    let mut fa = vec![0.0; d];
    let mut fb = vec![0.0; d];
    let mut fc = vec![0.0; d];
    for k in 0..d {
        let mut lo = x.to_vec();
        let mut hi = x.to_vec();
        lo[k] -= h;
        hi[k] += h;
        if !crosses(&lo, &hi, surfaces) {
            xp[k] = x[k] + h;
            f.eval_into(&xp, &mut fa);
            xp[k] = x[k] - h;
            f.eval_into(&xp, &mut fb);
            for i in 0..d {
                entries[i * d + k] = (fa[i] - fb[i]) / (2.0 * h);
            }
        } else {
            one_sided = true;
            let mut far = x.to_vec();
            far[k] += 2.0 * h;
            let s = if !crosses(x, &far, surfaces) { 1.0 } else { -1.0 };
            xp[k] = x[k];
            f.eval_into(&xp, &mut fa);
            xp[k] = x[k] + s * h;
            f.eval_into(&xp, &mut fb);
            xp[k] = x[k] + 2.0 * s * h;
            f.eval_into(&xp, &mut fc);
            for i in 0..d {
                entries[i * d + k] = s * (-3.0 * fa[i] + 4.0 * fb[i] - fc[i]) / (2.0 * h);
            }
        }
        xp[k] = x[k];
    }
    FdJacobian { d, entries, one_sided }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::map::{IdentityMap, RigidRotation};

    #[test]
    fn identity_jacobian_is_exact() {
        let j = fd_jacobian(&IdentityMap { d: 3 }, &[0.1, 0.2, 0.3], 1e-3, &[]);
        assert!(j.max_abs_diff(&[1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0]) < 1e-12);
        assert!(!j.one_sided);
    }

    #[test]
    fn rotation_jacobian_reproduced() {
        let (c, s) = (0.3f64.cos(), 0.3f64.sin());
        let m = DMatrix::from_row_slice(2, 2, &[c, -s, s, c]);
        let rot = RigidRotation::new(vec![0.0, 0.0], &m);
        let j = fd_jacobian(&rot, &[0.4, -0.2], 1e-3, &[]);
        assert!(j.max_abs_diff(&[c, -s, s, c]) < 1e-12);
    }

    #[test]
    fn stencil_near_plane_is_flagged() {
        let j = fd_jacobian(
            &IdentityMap { d: 2 },
            &[0.5 + 1e-6, 0.2],
            1e-4,
            &[Hint::Plane { axis: 0, at: 0.5 }],
        );
        assert!(j.one_sided);
        assert!(j.max_abs_diff(&[1.0, 0.0, 0.0, 1.0]) < 1e-10);
    }
}
