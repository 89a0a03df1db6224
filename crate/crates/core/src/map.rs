//! Vector-valued maps on regions of R^d with analytic Jacobians.

use alloc::vec;
use alloc::vec::Vec;
use nalgebra::DMatrix;

/// Largest dimension handled by the allocation-free evaluation paths.
pub const MAX_DIM: usize = 16;

/// Regularity class of a constructed map.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Smoothness {
    /// Continuously differentiable everywhere.
    C1,
    /// Continuous, with continuous derivative off a finite set where one-sided
    /// derivatives exist.
    C1Plus,
    /// Smooth on every piece between breakpoints.
    CInfPerPiece,
    /// Smooth everywhere.
    CInf,
}

/// A map R^d -> R^d with an analytic Jacobian.
///
/// Jacobians are written row-major: `jac[i * d + k] = dF_i / dx_k`.
pub trait VectorMap: Send + Sync {
    fn dim(&self) -> usize;

    fn eval_into(&self, x: &[f64], out: &mut [f64]);

    fn jacobian_into(&self, x: &[f64], jac: &mut [f64]);

    fn eval(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        self.eval_into(x, &mut out);
        out
    }

    fn jacobian(&self, x: &[f64]) -> DMatrix<f64> {
        let d = self.dim();
        let mut jac = vec![0.0; d * d];
        self.jacobian_into(x, &mut jac);
        DMatrix::from_row_slice(d, d, &jac)
    }
}

/// A volume- and orientation-preserving diffeomorphism with a computable inverse.
pub trait VolumePreservingDiffeo: VectorMap {
    fn inverse_into(&self, y: &[f64], out: &mut [f64]);

    fn smoothness(&self) -> Smoothness;

    fn inverse(&self, y: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        self.inverse_into(y, &mut out);
        out
    }
}

impl<T: VectorMap + ?Sized> VectorMap for &T {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn eval_into(&self, x: &[f64], out: &mut [f64]) {
        (**self).eval_into(x, out)
    }
    fn jacobian_into(&self, x: &[f64], jac: &mut [f64]) {
        (**self).jacobian_into(x, jac)
    }
}

impl<T: VectorMap + ?Sized> VectorMap for alloc::boxed::Box<T> {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn eval_into(&self, x: &[f64], out: &mut [f64]) {
        (**self).eval_into(x, out)
    }
    fn jacobian_into(&self, x: &[f64], jac: &mut [f64]) {
        (**self).jacobian_into(x, jac)
    }
}

/// The identity map of R^d.
#[derive(Debug, Clone, Copy)]
pub struct IdentityMap {
    pub d: usize,
}

impl VectorMap for IdentityMap {
    fn dim(&self) -> usize {
        self.d
    }
    fn eval_into(&self, x: &[f64], out: &mut [f64]) {
        out.copy_from_slice(x);
    }
    fn jacobian_into(&self, _x: &[f64], jac: &mut [f64]) {
        identity_into(self.d, jac);
    }
}

impl VolumePreservingDiffeo for IdentityMap {
    fn inverse_into(&self, y: &[f64], out: &mut [f64]) {
        out.copy_from_slice(y);
    }
    fn smoothness(&self) -> Smoothness {
        Smoothness::CInf
    }
}

/// `x -> center + M (x - center)` for an orthogonal `M` with det +1.
#[derive(Debug, Clone)]
pub struct RigidRotation {
    center: Vec<f64>,
    m: Vec<f64>,
}

impl RigidRotation {
    pub fn new(center: Vec<f64>, m: &DMatrix<f64>) -> Self {
        let d = center.len();
        assert_eq!(m.nrows(), d);
        let mut rows = Vec::with_capacity(d * d);
        for i in 0..d {
            for k in 0..d {
                rows.push(m[(i, k)]);
            }
        }
        Self { center, m: rows }
    }
}

impl VectorMap for RigidRotation {
    fn dim(&self) -> usize {
        self.center.len()
    }
    fn eval_into(&self, x: &[f64], out: &mut [f64]) {
        let d = self.dim();
        for i in 0..d {
            let mut acc = 0.0;
            for k in 0..d {
                acc += self.m[i * d + k] * (x[k] - self.center[k]);
            }
            out[i] = self.center[i] + acc;
        }
    }
    fn jacobian_into(&self, _x: &[f64], jac: &mut [f64]) {
        jac.copy_from_slice(&self.m);
    }
}

impl VolumePreservingDiffeo for RigidRotation {
    fn inverse_into(&self, y: &[f64], out: &mut [f64]) {
        let d = self.dim();
        for i in 0..d {
            let mut acc = 0.0;
            for k in 0..d {
                acc += self.m[k * d + i] * (y[k] - self.center[k]);
            }
            out[i] = self.center[i] + acc;
        }
    }
    fn smoothness(&self) -> Smoothness {
        Smoothness::CInf
    }
}

/// `outer ∘ inner`.
pub struct Composition<A, B> {
    pub outer: A,
    pub inner: B,
}

impl<A: VectorMap, B: VectorMap> VectorMap for Composition<A, B> {
    fn dim(&self) -> usize {
        self.inner.dim()
    }
    fn eval_into(&self, x: &[f64], out: &mut [f64]) {
        let d = self.dim();
        let mut mid = [0.0; MAX_DIM];
        self.inner.eval_into(x, &mut mid[..d]);
        self.outer.eval_into(&mid[..d], out);
    }
    fn jacobian_into(&self, x: &[f64], jac: &mut [f64]) {
        let d = self.dim();
        let mut mid = [0.0; MAX_DIM];
        self.inner.eval_into(x, &mut mid[..d]);
        let mut ja = [0.0; MAX_DIM * MAX_DIM];
        let mut jb = [0.0; MAX_DIM * MAX_DIM];
        self.outer.jacobian_into(&mid[..d], &mut ja[..d * d]);
        self.inner.jacobian_into(x, &mut jb[..d * d]);
        matmul_into(d, &ja[..d * d], &jb[..d * d], jac);
    }
}

impl<A: VolumePreservingDiffeo, B: VolumePreservingDiffeo> VolumePreservingDiffeo for Composition<A, B> {
    fn inverse_into(&self, y: &[f64], out: &mut [f64]) {
        let d = self.dim();
        let mut mid = [0.0; MAX_DIM];
        self.outer.inverse_into(y, &mut mid[..d]);
        self.inner.inverse_into(&mid[..d], out);
    }
    fn smoothness(&self) -> Smoothness {
        weaker(self.outer.smoothness(), self.inner.smoothness())
    }
}

fn rank(s: Smoothness) -> u8 {
    match s {
        Smoothness::C1Plus => 0,
        Smoothness::CInfPerPiece => 1,
        Smoothness::C1 => 2,
        Smoothness::CInf => 3,
    }
}

pub(crate) fn weaker(a: Smoothness, b: Smoothness) -> Smoothness {
    if rank(a) <= rank(b) {
        a
    } else {
        b
    }
}

pub(crate) fn identity_into(d: usize, jac: &mut [f64]) {
    for (idx, v) in jac.iter_mut().enumerate().take(d * d) {
        *v = if idx / d == idx % d { 1.0 } else { 0.0 };
    }
}

/// Row-major `out = a * b` for `d x d` matrices.
pub(crate) fn matmul_into(d: usize, a: &[f64], b: &[f64], out: &mut [f64]) {
    for i in 0..d {
        for j in 0..d {
            let mut acc = 0.0;
            for k in 0..d {
                acc += a[i * d + k] * b[k * d + j];
            }
            out[i * d + j] = acc;
        }
    }
}

/// Determinant of a row-major `d x d` matrix by LU with partial pivoting.
pub fn det_row_major(d: usize, m: &[f64]) -> f64 {
    DMatrix::from_row_slice(d, d, &m[..d * d]).lu().determinant()
}
