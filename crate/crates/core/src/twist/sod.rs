//! Rotation matrices and their decomposition into planar rotation blocks.

use alloc::vec;
use alloc::vec::Vec;
use nalgebra::{DMatrix, DVector};
#[cfg(not(any(feature = "std", test)))]
#[allow(unused_imports)]
use num_traits::Float;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{domain_err, Result};

/// Orthogonality and determinant tolerance.
pub const SOD_TOL: f64 = 1e-10;
/// Eigenvalues of the symmetric part closer than this are treated as one cluster.
const CLUSTER_GAP: f64 = 1e-7;
/// Planes whose sine falls below this are treated as fixed or as half turns.
const SIN_FLOOR: f64 = 1e-9;

/// A validated element of SO(d).
#[derive(Debug, Clone, PartialEq)]
pub struct SOdMatrix(DMatrix<f64>);

impl SOdMatrix {
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        let d = m.nrows();
        if d == 0 || m.ncols() != d {
            return Err(domain_err!("rotation must be a nonempty square matrix"));
        }
        let dev = (m.transpose() * &m - DMatrix::identity(d, d)).amax();
        if dev > SOD_TOL {
            return Err(domain_err!("matrix is not orthogonal (deviation {dev:e})"));
        }
        let det = m.clone().lu().determinant();
        if (det - 1.0).abs() > SOD_TOL {
            return Err(domain_err!("rotation must have det +1, got {det}"));
        }
        Ok(Self(m))
    }

    pub fn from_row_slice(d: usize, rows: &[f64]) -> Result<Self> {
        if rows.len() != d * d {
            return Err(crate::Error::DimensionMismatch {
                expected: d * d,
                got: rows.len(),
            });
        }
        Self::new(DMatrix::from_row_slice(d, d, rows))
    }

    pub fn identity(d: usize) -> Self {
        Self(DMatrix::identity(d, d))
    }

    /// `[[cos θ, -sin θ], [sin θ, cos θ]]`.
    pub fn rotation2(theta: f64) -> Self {
        let (s, c) = theta.sin_cos();
        Self(DMatrix::from_row_slice(2, 2, &[c, -s, s, c]))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.0
    }

    pub fn transpose(&self) -> Self {
        Self(self.0.transpose())
    }

    pub fn row_major(&self) -> Vec<f64> {
        let d = self.dim();
        let mut out = Vec::with_capacity(d * d);
        for i in 0..d {
            for j in 0..d {
                out.push(self.0[(i, j)]);
            }
        }
        out
    }

    /// Largest absolute entry.
    pub fn max_abs_entry(&self) -> f64 {
        self.0.amax()
    }

    pub fn is_identity(&self) -> bool {
        self.0 == DMatrix::identity(self.dim(), self.dim())
    }
}

/// Haar-distributed rotation: QR of a Gaussian matrix with sign correction.
pub fn random_sod<R: Rng + ?Sized>(d: usize, rng: &mut R) -> SOdMatrix {
    let g = DMatrix::from_fn(d, d, |_, _| rng.sample::<f64, _>(StandardNormal));
    let qr = g.qr();
    let r = qr.r();
    let mut q = qr.q();
    for j in 0..d {
        if r[(j, j)] < 0.0 {
            for i in 0..d {
                q[(i, j)] = -q[(i, j)];
            }
        }
    }
    if q.clone().lu().determinant() < 0.0 {
        for i in 0..d {
            q[(i, 0)] = -q[(i, 0)];
        }
    }
    SOdMatrix(q)
}

/// `H = Q blockdiag(R(θ_1), …, R(θ_m), I) Q^T`.
#[derive(Debug, Clone)]
pub struct BlockDecomposition {
    pub q: DMatrix<f64>,
    /// Angles in `[0, 2π)`.
    pub angles: Vec<f64>,
    pub identity_size: usize,
    /// `max |Q B Q^T - H|`.
    pub residual: f64,
}

impl BlockDecomposition {
    pub fn block_matrix(&self) -> DMatrix<f64> {
        let d = self.q.nrows();
        let mut b = DMatrix::identity(d, d);
        for (j, &th) in self.angles.iter().enumerate() {
            let (s, c) = th.sin_cos();
            b[(2 * j, 2 * j)] = c;
            b[(2 * j, 2 * j + 1)] = -s;
            b[(2 * j + 1, 2 * j)] = s;
            b[(2 * j + 1, 2 * j + 1)] = c;
        }
        b
    }

    pub fn reconstruct(&self) -> DMatrix<f64> {
        &self.q * self.block_matrix() * self.q.transpose()
    }

    /// Angles mapped to `(-π, π]`, the shortest rotation in each plane.
    pub fn signed_angles(&self) -> Vec<f64> {
        use core::f64::consts::PI;
        self.angles
            .iter()
            .map(|&t| if t > PI { t - 2.0 * PI } else { t })
            .collect()
    }
}

/// Splits `H` into planar rotations.
///
/// The symmetric part `S = (H + H^T)/2` commutes with `H`, so each eigenspace
/// of `S` (eigenvalue `cos θ`) is `H`-invariant. Inside a cluster the skew part
/// `K` acts as `sin θ` times a complex structure: pick a unit `v`, pair it with
/// `w = Kv/|Kv|`, read `θ = atan2(w·Hv, v·Hv)`, deflate and repeat.
pub fn sod_block_decompose(h: &SOdMatrix) -> BlockDecomposition {
    let d = h.dim();
    let hm = h.matrix();
    if d == 2 {
        let th = wrap_angle(hm[(1, 0)].atan2(hm[(0, 0)]));
        let mut out = BlockDecomposition {
            q: DMatrix::identity(2, 2),
            angles: vec![th],
            identity_size: 0,
            residual: 0.0,
        };
        out.residual = (out.reconstruct() - hm).amax();
        return out;
    }
    let s = (hm + hm.transpose()) * 0.5;
    let k = (hm - hm.transpose()) * 0.5;
    let eig = s.symmetric_eigen();
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].partial_cmp(&eig.eigenvalues[b]).unwrap());

    let mut planes: Vec<(DVector<f64>, DVector<f64>, f64)> = Vec::new();
    let mut fixed: Vec<DVector<f64>> = Vec::new();
    let mut half_turn: Vec<DVector<f64>> = Vec::new();

    let mut start = 0;
    while start < d {
        let mut end = start + 1;
        while end < d && eig.eigenvalues[order[end]] - eig.eigenvalues[order[end - 1]] < CLUSTER_GAP {
            end += 1;
        }
        let cos_mean = order[start..end].iter().map(|&i| eig.eigenvalues[i]).sum::<f64>() / (end - start) as f64;
        let mut basis: Vec<DVector<f64>> = order[start..end]
            .iter()
            .map(|&i| eig.eigenvectors.column(i).into_owned())
            .collect();
        while let Some(v) = next_unit(&mut basis) {
            let kv = &k * &v;
            let nk = kv.norm();
            if nk > SIN_FLOOR {
                let w = kv / nk;
                let hv = hm * &v;
                let th = w.dot(&hv).atan2(v.dot(&hv));
                deflate(&mut basis, &w);
                planes.push((v, w, th));
            } else if cos_mean > 0.0 {
                fixed.push(v);
            } else {
                half_turn.push(v);
            }
        }
        start = end;
    }
    // -1 eigenvectors come in pairs since det H = +1; an odd leftover is
    // numerical noise and is kept as a fixed direction
    while half_turn.len() >= 2 {
        let w = half_turn.pop().unwrap();
        let v = half_turn.pop().unwrap();
        planes.push((v, w, core::f64::consts::PI));
    }
    fixed.append(&mut half_turn);

    let mut q = DMatrix::zeros(d, d);
    let mut angles = Vec::with_capacity(planes.len());
    for (j, (v, w, th)) in planes.iter().enumerate() {
        q.set_column(2 * j, v);
        q.set_column(2 * j + 1, w);
        angles.push(wrap_angle(*th));
    }
    let off = 2 * planes.len();
    for (j, v) in fixed.iter().enumerate() {
        q.set_column(off + j, v);
    }
    let mut out = BlockDecomposition {
        q,
        angles,
        identity_size: fixed.len(),
        residual: 0.0,
    };
    out.residual = (out.reconstruct() - hm).amax();
    out
}

/// Maps an angle into `[0, 2π)`.
fn wrap_angle(t: f64) -> f64 {
    let tau = 2.0 * core::f64::consts::PI;
    let r = t % tau;
    let r = if r < 0.0 { r + tau } else { r };
    if r >= tau {
        0.0
    } else {
        r
    }
}

/// Pops the next basis vector, orthonormalized against nothing further
/// (callers deflate explicitly).
fn next_unit(basis: &mut Vec<DVector<f64>>) -> Option<DVector<f64>> {
    while let Some(v) = basis.pop() {
        let n = v.norm();
        if n > 1e-6 {
            let v = v / n;
            deflate(basis, &v);
            return Some(v);
        }
    }
    None
}

/// Removes the `u` component from each vector of `basis` and drops the ones
/// that become negligible. Re-orthonormalizes what is left.
fn deflate(basis: &mut Vec<DVector<f64>>, u: &DVector<f64>) {
    for b in basis.iter_mut() {
        let c = b.dot(u);
        *b -= u * c;
    }
    basis.retain(|b| b.norm() > 1e-6);
    let mut ortho: Vec<DVector<f64>> = Vec::with_capacity(basis.len());
    for b in basis.drain(..) {
        let mut b = b;
        for o in &ortho {
            let c = b.dot(o);
            b -= o * c;
        }
        let n = b.norm();
        if n > 1e-6 {
            ortho.push(b / n);
        }
    }
    *basis = ortho;
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;
    use approx::assert_relative_eq;

    #[test]
    fn rejects_non_rotations() {
        assert!(SOdMatrix::new(DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0])).is_err());
        assert!(SOdMatrix::new(DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 0.5])).is_err());
    }

    #[test]
    fn planar_angle_recovered() {
        for &th in &[0.0, 0.3, 2.0, 3.5, 6.0] {
            let dec = sod_block_decompose(&SOdMatrix::rotation2(th));
            assert_relative_eq!(dec.angles[0], th, epsilon = 1e-12);
            assert_eq!(dec.q, DMatrix::identity(2, 2));
        }
    }

    #[test]
    fn identity_has_no_planes() {
        for d in 2..6 {
            let dec = sod_block_decompose(&SOdMatrix::identity(d));
            assert!(dec.angles.iter().all(|&a| a == 0.0));
            assert!(dec.residual < 1e-14);
        }
    }

    #[test]
    fn half_turns_are_paired() {
        let m = DMatrix::from_diagonal(&DVector::from_vec(vec![-1.0, -1.0, 1.0]));
        let dec = sod_block_decompose(&SOdMatrix::new(m).unwrap());
        assert_eq!(dec.angles.len(), 1);
        assert_relative_eq!(dec.angles[0], core::f64::consts::PI, epsilon = 1e-12);
        assert!(dec.residual < 1e-12);
    }

    #[test]
    fn random_rotations_reconstruct() {
        let mut rng = seeded(7);
        for d in 3..=6 {
            for _ in 0..20 {
                let h = random_sod(d, &mut rng);
                SOdMatrix::new(h.matrix().clone()).unwrap();
                let dec = sod_block_decompose(&h);
                assert!(dec.residual < 1e-10, "d={d} residual={}", dec.residual);
                assert_eq!(2 * dec.angles.len() + dec.identity_size, d);
            }
        }
    }
}
