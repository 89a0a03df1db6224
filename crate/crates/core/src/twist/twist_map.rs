//! Twist maps rotating each coordinate plane by an angle depending on `|x|^2`.

use alloc::sync::Arc;
use alloc::vec::Vec;
use core::fmt;
#[cfg(not(any(feature = "std", test)))]
#[allow(unused_imports)]
use num_traits::Float;

use super::jump::jump_eval;
use crate::error::{domain_err, Result};
use crate::map::{Smoothness, VectorMap, VolumePreservingDiffeo};

/// Angle profile `h(t)` of one rotation plane, `t = |x|^2`.
#[derive(Clone)]
pub enum PlaneProfile {
    Constant(f64),
    /// `θ J((t - s²)/(r² - s²))`: θ for `t <= s²`, zero for `t >= r²`.
    Localized {
        theta: f64,
        s2: f64,
        r2: f64,
    },
    /// `Σ c_k t^k`.
    Polynomial(Vec<f64>),
    /// Arbitrary `t -> (h(t), h'(t))`.
    Custom(Arc<dyn Fn(f64) -> (f64, f64) + Send + Sync>),
}

impl fmt::Debug for PlaneProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Constant(t) => write!(f, "Constant({t})"),
            Self::Localized { theta, s2, r2 } => {
                write!(f, "Localized {{ theta: {theta}, s2: {s2}, r2: {r2} }}")
            }
            Self::Polynomial(c) => write!(f, "Polynomial({c:?})"),
            Self::Custom(_) => write!(f, "Custom(..)"),
        }
    }
}

impl PlaneProfile {
    /// `(h(t), h'(t))`.
    pub fn eval(&self, t: f64) -> (f64, f64) {
        match self {
            Self::Constant(c) => (*c, 0.0),
            Self::Localized { theta, s2, r2 } => {
                let w = r2 - s2;
                let (j, dj) = jump_eval((t - s2) / w);
                (theta * j, theta * dj / w)
            }
            Self::Polynomial(c) => {
                let (mut v, mut dv) = (0.0, 0.0);
                for &ck in c.iter().rev() {
                    dv = dv * t + v;
                    v = v * t + ck;
                }
                (v, dv)
            }
            Self::Custom(f) => f(t),
        }
    }

    pub fn negated(&self) -> Self {
        match self {
            Self::Constant(c) => Self::Constant(-c),
            Self::Localized { theta, s2, r2 } => Self::Localized {
                theta: -theta,
                s2: *s2,
                r2: *r2,
            },
            Self::Polynomial(c) => Self::Polynomial(c.iter().map(|v| -v).collect()),
            Self::Custom(f) => {
                let f = f.clone();
                Self::Custom(Arc::new(move |t| {
                    let (v, dv) = f(t);
                    (-v, -dv)
                }))
            }
        }
    }
}

/// One profile per rotation plane; plane `j` acts on coordinates `2j, 2j+1`.
#[derive(Debug, Clone)]
pub struct TwistProfile {
    pub planes: Vec<PlaneProfile>,
}

impl TwistProfile {
    pub fn new(planes: Vec<PlaneProfile>) -> Self {
        Self { planes }
    }

    pub fn zero(m: usize) -> Self {
        Self {
            planes: (0..m).map(|_| PlaneProfile::Constant(0.0)).collect(),
        }
    }

    pub fn negated(&self) -> Self {
        Self {
            planes: self.planes.iter().map(PlaneProfile::negated).collect(),
        }
    }
}

/// `F^h`: rotates plane `j` by `α_j(x) = h_j(|x|^2)`. Preserves `|x|` and volume.
#[derive(Debug, Clone)]
pub struct TwistMap {
    d: usize,
    profile: TwistProfile,
}

pub fn twist_map(profile: TwistProfile, d: usize) -> Result<TwistMap> {
    if 2 * profile.planes.len() > d {
        return Err(domain_err!(
            "{} rotation planes do not fit in dimension {d}",
            profile.planes.len()
        ));
    }
    Ok(TwistMap { d, profile })
}

impl TwistMap {
    pub fn profile(&self) -> &TwistProfile {
        &self.profile
    }

    /// `F^{-h}`.
    pub fn inverse_map(&self) -> TwistMap {
        TwistMap {
            d: self.d,
            profile: self.profile.negated(),
        }
    }
}

pub(crate) fn twist_eval(planes: &[PlaneProfile], x: &[f64], out: &mut [f64]) {
    let t: f64 = x.iter().map(|v| v * v).sum();
    out.copy_from_slice(x);
    for (j, h) in planes.iter().enumerate() {
        let (alpha, _) = h.eval(t);
        let (s, c) = alpha.sin_cos();
        let (u, v) = (x[2 * j], x[2 * j + 1]);
        out[2 * j] = u * c - v * s;
        out[2 * j + 1] = u * s + v * c;
    }
}

/// Jacobian `A + B`: `A` is the frozen-angle rotation, `B` comes from
/// differentiating the angle, `∂α/∂x_k = 2 h'(t) x_k`.
pub(crate) fn twist_jacobian(planes: &[PlaneProfile], x: &[f64], jac: &mut [f64]) {
    let d = x.len();
    let t: f64 = x.iter().map(|v| v * v).sum();
    crate::map::identity_into(d, jac);
    for (j, h) in planes.iter().enumerate() {
        let (alpha, dh) = h.eval(t);
        let (s, c) = alpha.sin_cos();
        let (i0, i1) = (2 * j, 2 * j + 1);
        let (u, v) = (x[i0], x[i1]);
        let v0 = 2.0 * dh * (-u * s - v * c);
        let v1 = 2.0 * dh * (u * c - v * s);
        for k in 0..d {
            jac[i0 * d + k] = v0 * x[k];
            jac[i1 * d + k] = v1 * x[k];
        }
        jac[i0 * d + i0] += c;
        jac[i0 * d + i1] -= s;
        jac[i1 * d + i0] += s;
        jac[i1 * d + i1] += c;
    }
}

impl VectorMap for TwistMap {
    fn dim(&self) -> usize {
        self.d
    }
    fn eval_into(&self, x: &[f64], out: &mut [f64]) {
        twist_eval(&self.profile.planes, x, out);
    }
    fn jacobian_into(&self, x: &[f64], jac: &mut [f64]) {
        twist_jacobian(&self.profile.planes, x, jac);
    }
}

impl VolumePreservingDiffeo for TwistMap {
    fn inverse_into(&self, y: &[f64], out: &mut [f64]) {
        // |F(x)| = |x|, so the angle at y equals the angle at x
        let t: f64 = y.iter().map(|v| v * v).sum();
        out.copy_from_slice(y);
        for (j, h) in self.profile.planes.iter().enumerate() {
            let (alpha, _) = h.eval(t);
            let (s, c) = alpha.sin_cos();
            let (u, v) = (y[2 * j], y[2 * j + 1]);
            out[2 * j] = u * c + v * s;
            out[2 * j + 1] = -u * s + v * c;
        }
    }
    fn smoothness(&self) -> Smoothness {
        Smoothness::CInf
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::fd_jacobian;
    use crate::map::det_row_major;
    use approx::assert_relative_eq;

    #[test]
    fn zero_profile_is_identity() {
        let f = twist_map(TwistProfile::zero(1), 3).unwrap();
        let x = [0.3, -0.2, 0.7];
        assert_eq!(f.eval(&x), x.to_vec());
        let j = f.jacobian(&x);
        assert_eq!(j, nalgebra::DMatrix::identity(3, 3));
    }

    #[test]
    fn constant_profile_is_rigid_rotation() {
        let th = 0.9;
        let f = twist_map(TwistProfile::new(alloc::vec![PlaneProfile::Constant(th)]), 2).unwrap();
        let y = f.eval(&[1.0, 0.0]);
        assert_relative_eq!(y[0], th.cos(), epsilon = 1e-15);
        assert_relative_eq!(y[1], th.sin(), epsilon = 1e-15);
    }

    #[test]
    fn too_many_planes_rejected() {
        assert!(twist_map(TwistProfile::zero(2), 3).is_err());
    }

    #[test]
    fn jacobian_matches_fd_and_has_unit_det() {
        let prof = TwistProfile::new(alloc::vec![
            PlaneProfile::Polynomial(alloc::vec![0.1, 1.3, -0.7]),
            PlaneProfile::Polynomial(alloc::vec![-0.4, 0.2, 0.9]),
        ]);
        let f = twist_map(prof, 5).unwrap();
        let x = [0.3, -0.5, 0.2, 0.6, -0.1];
        let mut jac = [0.0; 25];
        f.jacobian_into(&x, &mut jac);
        let fd = fd_jacobian(&f, &x, 1e-5, &[]);
        assert!(fd.max_abs_diff(&jac) < 1e-8);
        assert_relative_eq!(det_row_major(5, &jac), 1.0, epsilon = 1e-12);
        let back = f.inverse(&f.eval(&x));
        for k in 0..5 {
            assert_relative_eq!(back[k], x[k], epsilon = 1e-14);
        }
    }
}
