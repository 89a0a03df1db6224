//! Coordinatewise staircase on the unit cube.

use super::homeo::{Homeo1D, StaircaseParams};
use crate::error::{domain_err, Result};
use crate::map::VectorMap;

/// `F_n(x) = (f_n(x_1), ..., f_n(x_d))`. Converges to the identity uniformly
/// while `det DF_n` collapses to zero almost everywhere.
#[derive(Debug, Clone)]
pub struct TensorStaircase {
    f: Homeo1D,
    d: usize,
}

pub fn tensor_staircase(params: StaircaseParams, d: usize) -> Result<TensorStaircase> {
    if d < 2 {
        return Err(domain_err!("tensor staircase needs d >= 2, got {d}"));
    }
    Ok(TensorStaircase {
        f: Homeo1D::staircase(params)?,
        d,
    })
}

impl TensorStaircase {
    pub fn factor(&self) -> &Homeo1D {
        &self.f
    }
}

impl VectorMap for TensorStaircase {
    fn dim(&self) -> usize {
        self.d
    }
    fn eval_into(&self, x: &[f64], out: &mut [f64]) {
        for (o, &v) in out.iter_mut().zip(x) {
            *o = self.f.eval(v);
        }
    }
    fn jacobian_into(&self, x: &[f64], jac: &mut [f64]) {
        let d = self.d;
        jac[..d * d].fill(0.0);
        for i in 0..d {
            jac[i * d + i] = self.f.deriv(x[i]);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::homeo1d::RampKind;

    #[test]
    fn diagonal_values() {
        let t = tensor_staircase(StaircaseParams::with_ramp(3, RampKind::Polynomial), 2).unwrap();
        let f = t.factor().clone();
        for i in 0..=30 {
            let x = i as f64 / 30.0;
            assert_eq!(t.eval(&[x, x]), alloc::vec![f.eval(x), f.eval(x)]);
        }
        assert!(tensor_staircase(StaircaseParams::new(3), 1).is_err());
    }
}
