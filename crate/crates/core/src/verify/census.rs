//! Determinant census and Monte-Carlo measure check.

use alloc::vec;
use alloc::vec::Vec;
#[cfg(not(any(feature = "std", test)))]
#[allow(unused_imports)]
use num_traits::Float;
use rand::Rng;

use crate::kernel::AxisBox;
use crate::map::{det_row_major, VectorMap, MAX_DIM};
use crate::rng::seeded;

#[derive(Debug, Clone, PartialEq)]
pub struct CensusReport {
    pub n_points: usize,
    pub max_det_dev: f64,
    pub worst_point: Vec<f64>,
    /// `|det Df - 1|` at each sampled point, in sampling order.
    pub deviations: Vec<f64>,
    pub measure: Option<MeasureCheck>,
}

/// `λ(B)` and `λ(F^{-1}(B))` estimated from one sample cloud.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasureCheck {
    pub target: AxisBox,
    pub before: f64,
    pub after: f64,
    /// Binomial standard error of either estimate.
    pub std_err: f64,
}

impl CensusReport {
    pub fn passes(&self, tol: f64) -> bool {
        self.max_det_dev <= tol
    }

    /// Share of sampled points with `|det - 1| > threshold`.
    pub fn fraction_above(&self, threshold: f64) -> f64 {
        if self.deviations.is_empty() {
            return 0.0;
        }
        self.deviations.iter().filter(|&&v| v > threshold).count() as f64 / self.deviations.len() as f64
    }
}

/// `max |det DF - 1|` over `n_points` seeded uniform points of `region`, plus a
/// hit-count comparison of `λ(B)` and `λ(F^{-1}(B))` for a random sub-box `B`.
pub fn volume_census(f: &dyn VectorMap, region: &AxisBox, n_points: usize, seed: u64) -> CensusReport {
    let mut rng = seeded(seed);
    let d = region.dim();
    let pts: Vec<Vec<f64>> = (0..n_points)
        .map(|_| region.axes.iter().map(|iv| rng.random_range(iv.lo..iv.hi)).collect())
        .collect();
    let mut report = census_at(f, &pts);
    if n_points > 0 {
        let axes = region
            .axes
            .iter()
            .map(|iv| {
                let w = iv.length() * rng.random_range(0.3..0.6);
                let lo = rng.random_range(iv.lo..iv.hi - w);
                crate::kernel::Interval { lo, hi: lo + w }
            })
            .collect();
        let target = AxisBox { axes };
        let mut y = vec![0.0; d];
        let (mut inb, mut ina) = (0usize, 0usize);
        for x in &pts {
            if target.contains(x) {
                inb += 1;
            }
            f.eval_into(x, &mut y);
            if target.contains(&y) {
                ina += 1;
            }
        }
        let vol = region.volume();
        let n = n_points as f64;
        let q = target.volume() / vol;
        report.measure = Some(MeasureCheck {
            target,
            before: vol * inb as f64 / n,
            after: vol * ina as f64 / n,
            std_err: vol * (q * (1.0 - q) / n).sqrt(),
        });
    }
    report
}

/// Determinant census at the given points.
pub fn census_at(f: &dyn VectorMap, pts: &[Vec<f64>]) -> CensusReport {
    let d = f.dim();
    let mut jac = [0.0; MAX_DIM * MAX_DIM];
    let mut deviations = Vec::with_capacity(pts.len());
    let mut worst = 0.0f64;
    let mut worst_point = Vec::new();
    for x in pts {
        f.jacobian_into(x, &mut jac[..d * d]);
        let dev = (det_row_major(d, &jac[..d * d]) - 1.0).abs();
        let dev = if dev.is_nan() { f64::INFINITY } else { dev };
        if dev > worst || worst_point.is_empty() {
            worst = worst.max(dev);
            worst_point = x.clone();
        }
        deviations.push(dev);
    }
    CensusReport {
        n_points: pts.len(),
        max_det_dev: worst,
        worst_point,
        deviations,
        measure: None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::map::IdentityMap;

    #[test]
    fn identity_has_zero_deviation() {
        let r = volume_census(&IdentityMap { d: 3 }, &AxisBox::unit_cube(3), 500, 1);
        assert_eq!(r.max_det_dev, 0.0);
        let m = r.measure.unwrap();
        assert_eq!(m.before, m.after);
    }

    #[test]
    fn fraction_counts() {
        let r = CensusReport {
            n_points: 4,
            max_det_dev: 1.0,
            worst_point: vec![],
            deviations: vec![0.0, 0.6, 0.7, 0.1],
            measure: None,
        };
        assert_eq!(r.fraction_above(0.5), 0.5);
    }
}
