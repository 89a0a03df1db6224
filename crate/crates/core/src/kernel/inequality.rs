//! Numerical audit of the quasi-triangle and embedding inequalities for p < 1.

#[cfg(not(any(feature = "std", test)))]
#[allow(unused_imports)]
use num_traits::Float;

use alloc::vec::Vec;
use rand::Rng;

use super::domain::{Exponent, Interval};
use super::quad1d::lp_norm_1d;
use crate::error::{domain_err, Result};

/// Both sides of each inequality with slack and the tolerance it is judged against.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InequalityReport {
    /// `‖f+g‖_p^p`
    pub subadd_lhs: f64,
    /// `‖f‖_p^p + ‖g‖_p^p`
    pub subadd_rhs: f64,
    pub subadd_slack: f64,
    pub subadd_tol: f64,
    /// `‖f‖_p`
    pub embed_lhs: f64,
    /// `λ^{(q-p)/(pq)} ‖f‖_q`
    pub embed_rhs: f64,
    pub embed_slack: f64,
    pub embed_tol: f64,
}

impl InequalityReport {
    pub fn holds(&self) -> bool {
        self.subadd_slack >= -self.subadd_tol && self.embed_slack >= -self.embed_tol
    }
}

/// Evaluates `‖f+g‖_p^p ≤ ‖f‖_p^p + ‖g‖_p^p` and `‖f‖_p ≤ λ^{(q-p)/(pq)}‖f‖_q`
/// on `iv` by quadrature. Tolerances are twice the summed quadrature estimates.
pub fn check_quasinorm_inequalities(
    f: &dyn Fn(f64) -> f64,
    g: &dyn Fn(f64) -> f64,
    iv: Interval,
    breakpoints: &[f64],
    p: Exponent,
    q: Exponent,
) -> Result<InequalityReport> {
    if q.value() <= p.value() {
        return Err(domain_err!("need p < q, got p={} q={}", p.value(), q.value()));
    }
    if !p.is_subunit() {
        return Err(domain_err!("need 0 < p < 1, got {}", p.value()));
    }
    let sum = |x: f64| f(x) + g(x);
    let nf = lp_norm_1d(f, iv, p, breakpoints)?;
    let ng = lp_norm_1d(g, iv, p, breakpoints)?;
    let nfg = lp_norm_1d(&sum, iv, p, breakpoints)?;
    let nfq = lp_norm_1d(f, iv, q, breakpoints)?;

    let subadd_lhs = nfg.value_p_power;
    let subadd_rhs = nf.value_p_power + ng.value_p_power;
    let subadd_tol = 2.0 * (nfg.p_power_error + nf.p_power_error + ng.p_power_error) + 1e-14;

    let (pv, qv) = (p.value(), q.value());
    let scale = iv.length().powf((qv - pv) / (pv * qv));
    let embed_rhs = scale * nfq.value;
    let embed_tol = 2.0 * (nf.quad_error_estimate + scale * nfq.quad_error_estimate) + 1e-14;

    Ok(InequalityReport {
        subadd_lhs,
        subadd_rhs,
        subadd_slack: subadd_rhs - subadd_lhs,
        subadd_tol,
        embed_lhs: nf.value,
        embed_rhs,
        embed_slack: embed_rhs - nf.value,
        embed_tol,
    })
}

/// Polynomial pieces on a partition; each piece is expanded around its left
/// endpoint. Jumps at the breakpoints are allowed.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewisePoly {
    partition: Vec<f64>,
    coeffs: Vec<Vec<f64>>,
}

impl PiecewisePoly {
    pub fn new(partition: Vec<f64>, coeffs: Vec<Vec<f64>>) -> Result<Self> {
        if partition.len() < 2 || coeffs.len() + 1 != partition.len() {
            return Err(domain_err!("need N+1 partition points for N pieces"));
        }
        if partition.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(domain_err!("partition must be strictly increasing"));
        }
        Ok(Self { partition, coeffs })
    }

    /// `pieces` pieces of degree `degree` on `iv`, breakpoints uniform,
    /// coefficients uniform in `[-2, 2]`.
    pub fn random<R: Rng + ?Sized>(iv: Interval, pieces: usize, degree: usize, rng: &mut R) -> Self {
        let pieces = pieces.max(1);
        let mut cuts: Vec<f64> = (1..pieces).map(|_| rng.random_range(iv.lo..iv.hi)).collect();
        cuts.sort_by(f64::total_cmp);
        cuts.dedup();
        let mut partition = Vec::with_capacity(cuts.len() + 2);
        partition.push(iv.lo);
        partition.extend(cuts.into_iter().filter(|&c| c > iv.lo && c < iv.hi));
        partition.push(iv.hi);
        let coeffs = (0..partition.len() - 1)
            .map(|_| (0..=degree).map(|_| rng.random_range(-2.0..2.0)).collect())
            .collect();
        Self { partition, coeffs }
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.partition
    }

    pub fn eval(&self, x: f64) -> f64 {
        let n = self.coeffs.len();
        let i = self.partition[1..n].partition_point(|&a| a <= x);
        let t = x - self.partition[i];
        self.coeffs[i].iter().rev().fold(0.0, |acc, &c| acc * t + c)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn constants_give_known_slack() {
        let p = Exponent::half();
        let q = Exponent::new(1.0).unwrap();
        let r = check_quasinorm_inequalities(&|_| 1.0, &|_| 1.0, Interval::unit(), &[], p, q).unwrap();
        assert_relative_eq!(r.subadd_slack, 2.0 - 2f64.sqrt(), epsilon = 1e-12);
        assert_relative_eq!(r.embed_slack, 0.0, epsilon = 1e-12);
        assert!(r.holds());
    }

    #[test]
    fn complementary_ramps_hold() {
        let p = Exponent::half();
        let q = Exponent::new(2.0).unwrap();
        let r = check_quasinorm_inequalities(&|x| x, &|x| 1.0 - x, Interval::unit(), &[], p, q).unwrap();
        assert!(r.holds());
        assert!(r.subadd_slack > 0.0 && r.embed_slack > 0.0);
    }

    #[test]
    fn piecewise_poly_evaluates_locally() {
        let f = PiecewisePoly::new(
            alloc::vec![0.0, 0.5, 1.0],
            alloc::vec![alloc::vec![1.0], alloc::vec![0.0, 2.0]],
        )
        .unwrap();
        assert_eq!(f.eval(0.25), 1.0);
        assert_eq!(f.eval(0.75), 0.5);
        assert_eq!(f.eval(1.0), 1.0);
    }

    #[test]
    fn q_not_above_p_is_rejected() {
        let p = Exponent::half();
        assert!(check_quasinorm_inequalities(&|x| x, &|x| x, Interval::unit(), &[], p, p).is_err());
    }
}
