//! Rotations localized to a ball: `H` inside `B(a, s)`, the identity outside
//! `B(a, r)`, a twist in between.

use alloc::vec;
use alloc::vec::Vec;
#[cfg(not(any(feature = "std", test)))]
#[allow(unused_imports)]
use num_traits::Float;

use super::sod::{sod_block_decompose, SOdMatrix};
use super::twist_map::{twist_eval, twist_jacobian, PlaneProfile};
use crate::error::{domain_err, Error, Result};
use crate::kernel::{lp_norm_nd, AxisBox, BoxDomain, Exponent, Hint, LpResult, NdOptions};
use crate::map::{Smoothness, VectorMap, VolumePreservingDiffeo};

/// Largest accepted `max |Q B Q^T - H|` from the block decomposition.
pub const DECOMPOSITION_TOL: f64 = 1e-8;

/// `G(x) = a + Q F^h(Q^T (x - a))` with `h_j(t) = θ_j J((t - s²)/(r² - s²))`.
#[derive(Debug, Clone)]
pub struct LocalizedRotation {
    d: usize,
    center: Vec<f64>,
    r: f64,
    s: f64,
    /// Row-major `Q`.
    q: Vec<f64>,
    /// Row-major `H`.
    h: Vec<f64>,
    planes: Vec<PlaneProfile>,
    inverse_planes: Vec<PlaneProfile>,
}

pub fn localized_rotation(h: &SOdMatrix, center: Vec<f64>, r: f64, s: f64) -> Result<LocalizedRotation> {
    let d = h.dim();
    if center.len() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: center.len(),
        });
    }
    if !(s > 0.0 && s < r && r.is_finite()) {
        return Err(domain_err!("localization radii need 0 < s < r, got s={s} r={r}"));
    }
    let dec = sod_block_decompose(h);
    if dec.residual > DECOMPOSITION_TOL {
        return Err(Error::Degenerate(alloc::format!(
            "block decomposition residual {:e}",
            dec.residual
        )));
    }
    let (s2, r2) = (s * s, r * r);
    let planes: Vec<PlaneProfile> = dec
        .signed_angles()
        .into_iter()
        .map(|theta| PlaneProfile::Localized { theta, s2, r2 })
        .collect();
    let inverse_planes = planes.iter().map(PlaneProfile::negated).collect();
    let mut q = Vec::with_capacity(d * d);
    for i in 0..d {
        for j in 0..d {
            q.push(dec.q[(i, j)]);
        }
    }
    Ok(LocalizedRotation {
        d,
        center,
        r,
        s,
        q,
        h: h.row_major(),
        planes,
        inverse_planes,
    })
}

impl LocalizedRotation {
    pub fn center(&self) -> &[f64] {
        &self.center
    }
    pub fn outer_radius(&self) -> f64 {
        self.r
    }
    pub fn inner_radius(&self) -> f64 {
        self.s
    }
    /// Row-major target rotation.
    pub fn target(&self) -> &[f64] {
        &self.h
    }

    /// Quadrature hint for the transition shell.
    pub fn hint(&self) -> Hint {
        Hint::Annulus {
            center: self.center.clone(),
            inner: self.s,
            outer: self.r,
        }
    }

    fn offset(&self, x: &[f64], y: &mut [f64]) -> f64 {
        let mut n2 = 0.0;
        for k in 0..self.d {
            y[k] = x[k] - self.center[k];
            n2 += y[k] * y[k];
        }
        n2
    }

    fn qt_apply(&self, y: &[f64], z: &mut [f64]) {
        let d = self.d;
        for j in 0..d {
            z[j] = (0..d).map(|i| self.q[i * d + j] * y[i]).sum();
        }
    }

    fn apply(m: &[f64], d: usize, y: &[f64], out: &mut [f64]) {
        for i in 0..d {
            out[i] = (0..d).map(|k| m[i * d + k] * y[k]).sum();
        }
    }

    fn eval_with(&self, planes: &[PlaneProfile], x: &[f64], out: &mut [f64], inverse: bool) {
        let d = self.d;
        let mut y = [0.0; crate::map::MAX_DIM];
        let mut z = [0.0; crate::map::MAX_DIM];
        let n2 = self.offset(x, &mut y[..d]);
        if n2 >= self.r * self.r {
            out.copy_from_slice(x);
            return;
        }
        if n2 <= self.s * self.s {
            if inverse {
                for i in 0..d {
                    out[i] = (0..d).map(|k| self.h[k * d + i] * y[k]).sum();
                }
            } else {
                Self::apply(&self.h, d, &y[..d], out);
            }
        } else {
            self.qt_apply(&y[..d], &mut z[..d]);
            twist_eval(planes, &z[..d], &mut y[..d]);
            Self::apply(&self.q, d, &y[..d], out);
        }
        for k in 0..d {
            out[k] += self.center[k];
        }
    }
}

impl VectorMap for LocalizedRotation {
    fn dim(&self) -> usize {
        self.d
    }

    fn eval_into(&self, x: &[f64], out: &mut [f64]) {
        self.eval_with(&self.planes, x, out, false);
    }

    fn jacobian_into(&self, x: &[f64], jac: &mut [f64]) {
        let d = self.d;
        let mut y = [0.0; crate::map::MAX_DIM];
        let mut z = [0.0; crate::map::MAX_DIM];
        let n2 = self.offset(x, &mut y[..d]);
        if n2 >= self.r * self.r {
            crate::map::identity_into(d, jac);
            return;
        }
        if n2 <= self.s * self.s {
            jac.copy_from_slice(&self.h);
            return;
        }
        self.qt_apply(&y[..d], &mut z[..d]);
        let mut jf = [0.0; crate::map::MAX_DIM * crate::map::MAX_DIM];
        twist_jacobian(&self.planes, &z[..d], &mut jf[..d * d]);
        // Q J_F Q^T
        let mut tmp = [0.0; crate::map::MAX_DIM * crate::map::MAX_DIM];
        crate::map::matmul_into(d, &self.q, &jf[..d * d], &mut tmp[..d * d]);
        for i in 0..d {
            for j in 0..d {
                jac[i * d + j] = (0..d).map(|k| tmp[i * d + k] * self.q[j * d + k]).sum();
            }
        }
    }
}

impl VolumePreservingDiffeo for LocalizedRotation {
    fn inverse_into(&self, y: &[f64], out: &mut [f64]) {
        self.eval_with(&self.inverse_planes, y, out, true);
    }
    fn smoothness(&self) -> Smoothness {
        Smoothness::CInf
    }
}

/// `C₁ r^{d/p} (1 - s/r)^{(1-p)/p}`.
pub fn localization_error_bound(d: usize, p: Exponent, r: f64, s: f64, c1: f64) -> Result<f64> {
    if !p.is_subunit() {
        return Err(domain_err!("localization bound needs p < 1"));
    }
    if !(s > 0.0 && s < r) {
        return Err(domain_err!("localization bound needs 0 < s < r"));
    }
    if !(c1 > 0.0 && c1.is_finite()) {
        return Err(domain_err!("constant must be positive, got {c1}"));
    }
    let p = p.value();
    Ok(c1 * r.powf(d as f64 / p) * (1.0 - s / r).powf((1.0 - p) / p))
}

/// `‖DG - H‖_{L^p(B(a, r))}`, max over entries.
pub fn localization_error(g: &LocalizedRotation, p: Exponent, opts: &NdOptions) -> Result<LpResult> {
    let d = g.d;
    let lo: Vec<f64> = g.center.iter().map(|c| c - g.r).collect();
    let hi: Vec<f64> = g.center.iter().map(|c| c + g.r).collect();
    let dom = BoxDomain::single(AxisBox::from_bounds(&lo, &hi)?);
    let mut o = opts.clone();
    o.hints.push(g.hint());
    let r2 = g.r * g.r;
    let integrand = |x: &[f64], out: &mut [f64]| {
        let n2: f64 = x.iter().zip(&g.center).map(|(a, b)| (a - b) * (a - b)).sum();
        if n2 >= r2 {
            out.iter_mut().for_each(|v| *v = 0.0);
            return;
        }
        g.jacobian_into(x, out);
        for (v, h) in out.iter_mut().zip(&g.h) {
            *v -= h;
        }
    };
    lp_norm_nd(&integrand, d * d, &dom, p, &o)
}

/// Ratios `measured / (r^{d/p} (1 - s/r)^{(1-p)/p})` at `r = 1`.
#[derive(Debug, Clone)]
pub struct C1Fit {
    pub c1: f64,
    /// `(s/r, ratio)`.
    pub ratios: Vec<(f64, f64)>,
}

/// Smallest constant valid at each ratio `s/r` in `ratios` (max of the
/// measured ratios). The quantity is scale invariant in `r`.
pub fn fit_c1(h: &SOdMatrix, p: Exponent, ratios: &[f64], opts: &NdOptions) -> Result<C1Fit> {
    if ratios.is_empty() {
        return Err(domain_err!("need at least one ratio s/r"));
    }
    let d = h.dim();
    let mut out = Vec::with_capacity(ratios.len());
    for &t in ratios {
        let g = localized_rotation(h, vec![0.0; d], 1.0, t)?;
        let m = localization_error(&g, p, opts)?;
        let b = localization_error_bound(d, p, 1.0, t, 1.0)?;
        out.push((t, m.value / b));
    }
    let c1 = out.iter().map(|r| r.1).fold(0.0, f64::max);
    Ok(C1Fit { c1, ratios: out })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::fd_jacobian;
    use crate::map::det_row_major;
    use crate::rng::seeded;
    use crate::twist::random_sod;
    use approx::assert_relative_eq;

    #[test]
    fn regions_behave() {
        let h = SOdMatrix::rotation2(core::f64::consts::FRAC_PI_2);
        let g = localized_rotation(&h, vec![0.5, 0.5], 0.25, 0.1).unwrap();
        assert_eq!(g.eval(&[0.9, 0.9]), vec![0.9, 0.9]);
        let y = g.eval(&[0.55, 0.5]);
        assert_relative_eq!(y[0], 0.5, epsilon = 1e-15);
        assert_relative_eq!(y[1], 0.55, epsilon = 1e-15);
        // continuous across both radii
        for &rad in &[0.1, 0.25] {
            let a = g.eval(&[0.5 + rad - 1e-9, 0.5]);
            let b = g.eval(&[0.5 + rad + 1e-9, 0.5]);
            assert!((a[0] - b[0]).abs() + (a[1] - b[1]).abs() < 1e-7);
        }
    }

    #[test]
    fn shell_jacobian_and_inverse() {
        let mut rng = seeded(3);
        for d in 2..=4 {
            let h = random_sod(d, &mut rng);
            let c = vec![0.1; d];
            let g = localized_rotation(&h, c, 1.0, 0.5).unwrap();
            let x: Vec<f64> = (0..d)
                .map(|k| 0.1 + 0.7 / (d as f64).sqrt() * if k % 2 == 0 { 1.0 } else { -1.0 })
                .collect();
            let mut jac = vec![0.0; d * d];
            g.jacobian_into(&x, &mut jac);
            let fd = fd_jacobian(&g, &x, 1e-5, &[]);
            assert!(fd.max_abs_diff(&jac) < 1e-6);
            assert_relative_eq!(det_row_major(d, &jac), 1.0, epsilon = 1e-10);
            let back = g.inverse(&g.eval(&x));
            for k in 0..d {
                assert_relative_eq!(back[k], x[k], epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn bound_rejects_bad_input() {
        let p = Exponent::half();
        assert!(localization_error_bound(2, p, 1.0, 1.0, 1.0).is_err());
        assert!(localization_error_bound(2, Exponent::new(1.0).unwrap(), 1.0, 0.5, 1.0).is_err());
        assert_relative_eq!(
            localization_error_bound(2, p, 0.5, 0.25, 2.0).unwrap(),
            2.0 * 0.5f64.powi(4) * 0.5
        );
    }

    #[test]
    fn error_scales_like_r_to_the_d_over_p() {
        let h = SOdMatrix::rotation2(core::f64::consts::FRAC_PI_2);
        let p = Exponent::half();
        let opts = NdOptions::default().with_cells(32);
        let e1 = localization_error(&localized_rotation(&h, vec![0.0, 0.0], 1.0, 0.5).unwrap(), p, &opts).unwrap();
        let e2 = localization_error(&localized_rotation(&h, vec![0.3, 0.3], 0.5, 0.25).unwrap(), p, &opts).unwrap();
        assert_relative_eq!(e2.value / e1.value, 0.5f64.powi(4), max_relative = 1e-6);
    }
}
