//! Constant blends, step-derivative homeomorphisms and transfer by composition.

use alloc::vec::Vec;

use super::homeo::{Homeo1D, StaircaseParams};
use crate::error::{domain_err, Error, Result};
use crate::kernel::Interval;

/// Samples for the strict-monotonicity check in [`transfer_compose`].
const MONOTONE_SAMPLES: usize = 4096;

/// `c Id + (1 - c) f`.
pub fn blend_constant(c: f64, f: &Homeo1D) -> Result<Homeo1D> {
    if !(0.0..=1.0).contains(&c) {
        return Err(domain_err!("blend constant must lie in [0, 1], got {c}"));
    }
    f.check_endpoints()?;
    if c == 1.0 {
        return Ok(Homeo1D::identity(f.domain()));
    }
    if c == 0.0 {
        return Ok(f.clone());
    }
    Ok(Homeo1D::blend_raw(c, f.clone()))
}

/// Piecewise-constant function on a partition.
#[derive(Debug, Clone, PartialEq)]
pub struct StepFunction1D {
    partition: Vec<f64>,
    values: Vec<f64>,
}

impl StepFunction1D {
    pub fn new(partition: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if partition.len() < 2 || values.len() + 1 != partition.len() {
            return Err(domain_err!(
                "step function needs N+1 partition points for N values, got {} and {}",
                partition.len(),
                values.len()
            ));
        }
        if partition.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(domain_err!("partition must be strictly increasing"));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(domain_err!("step values must be finite"));
        }
        Ok(Self { partition, values })
    }

    pub fn constant(iv: Interval, c: f64) -> Result<Self> {
        Self::new(alloc::vec![iv.lo, iv.hi], alloc::vec![c])
    }

    pub fn partition(&self) -> &[f64] {
        &self.partition
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn domain(&self) -> Interval {
        Interval {
            lo: self.partition[0],
            hi: *self.partition.last().unwrap(),
        }
    }

    pub fn cells(&self) -> usize {
        self.values.len()
    }

    /// Value on `[a_{i-1}, a_i)`, with the last cell closed.
    pub fn eval(&self, x: f64) -> f64 {
        let n = self.values.len();
        let i = self.partition[1..n].partition_point(|&a| a <= x);
        self.values[i]
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.partition[1..self.partition.len() - 1]
    }

    /// First cell whose value lies outside `[0, 1]`, as `(index, value)`.
    pub fn first_infeasible(&self) -> Option<(usize, f64)> {
        self.values
            .iter()
            .enumerate()
            .find(|(_, &v)| !(0.0..=1.0).contains(&v))
            .map(|(i, &v)| (i, v))
    }
}

/// The homeomorphism `φ_n` whose derivative approaches `H` in L^p: on each
/// cell it is the rescaled blend `c_i Id + (1 - c_i) f_n`.
pub fn make_step_homeo(h: &StepFunction1D, n: usize) -> Result<Homeo1D> {
    make_step_homeo_with(h, StaircaseParams::new(n))
}

pub fn make_step_homeo_with(h: &StepFunction1D, params: StaircaseParams) -> Result<Homeo1D> {
    if let Some((i, v)) = h.first_infeasible() {
        let part = h.partition();
        return Err(Error::Infeasible {
            reason: alloc::format!("step value {v} outside [0, 1] on cell {i}"),
            witness: 0.5 * (part[i] + part[i + 1]),
        });
    }
    let stair = Homeo1D::staircase(params)?;
    let unit = Interval::unit();
    let pieces = h
        .values()
        .iter()
        .map(|&c| {
            if c == 1.0 {
                Ok(Homeo1D::identity(unit))
            } else {
                blend_constant(c, &stair)
            }
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Homeo1D::cells_raw(h.partition().to_vec(), pieces))
}

/// `g ∘ φ^{-1}`.
pub fn transfer_compose(g: &Homeo1D, phi: &Homeo1D) -> Result<Homeo1D> {
    if phi.is_identity() {
        return Ok(g.clone());
    }
    phi.check_strictly_increasing(MONOTONE_SAMPLES)?;
    Homeo1D::compose(g, &phi.inverted())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn three_cell_step() -> StepFunction1D {
        StepFunction1D::new(alloc::vec![0.0, 0.4, 0.6, 1.0], alloc::vec![0.25, 0.5, 1.0 / 6.0]).unwrap()
    }

    #[test]
    fn blend_extremes() {
        let f = Homeo1D::staircase(StaircaseParams::new(4)).unwrap();
        assert!(blend_constant(1.0, &f).unwrap().is_identity());
        let h = blend_constant(0.0, &f).unwrap();
        assert_eq!(h.eval(0.3), f.eval(0.3));
        assert!(blend_constant(1.5, &f).is_err());
    }

    #[test]
    fn step_homeo_fixes_partition() {
        let phi = make_step_homeo(&three_cell_step(), 5).unwrap();
        for &a in &[0.0, 0.4, 0.6, 1.0] {
            assert_relative_eq!(phi.eval(a), a, epsilon = 1e-15);
        }
        phi.check_strictly_increasing(10_000).unwrap();
    }

    #[test]
    fn unit_step_gives_identity() {
        let h = StepFunction1D::constant(Interval::unit(), 1.0).unwrap();
        let phi = make_step_homeo(&h, 7).unwrap();
        for i in 0..=100 {
            let x = i as f64 / 100.0;
            assert_relative_eq!(phi.eval(x), x, epsilon = 1e-15);
            assert_eq!(phi.deriv(x), 1.0);
        }
    }

    #[test]
    fn infeasible_value_is_refused() {
        let h = StepFunction1D::new(alloc::vec![0.0, 0.5, 1.0], alloc::vec![0.5, 2.0]).unwrap();
        assert!(matches!(make_step_homeo(&h, 3), Err(Error::Infeasible { .. })));
    }

    #[test]
    fn transfer_of_self_is_identity() {
        let f = Homeo1D::staircase(StaircaseParams::new(6)).unwrap();
        let t = transfer_compose(&f, &f).unwrap();
        for i in 0..=200 {
            let y = i as f64 / 200.0;
            assert_relative_eq!(t.eval(y), y, epsilon = 1e-12);
        }
        let id = transfer_compose(&f, &Homeo1D::identity(Interval::unit())).unwrap();
        assert_eq!(id.eval(0.37), f.eval(0.37));
    }
}
