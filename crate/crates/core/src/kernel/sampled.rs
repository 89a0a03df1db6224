//! Tabulated map samples for export.

use alloc::vec;
use alloc::vec::Vec;

use super::domain::AxisBox;
use crate::error::{Error, Result};
use crate::map::VectorMap;

/// Points, values and optional row-major Jacobians of a map, flattened.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledMap {
    pub dim: usize,
    pub points: Vec<f64>,
    pub values: Vec<f64>,
    pub jacobians: Option<Vec<f64>>,
}

impl SampledMap {
    pub fn new(dim: usize, points: Vec<f64>, values: Vec<f64>, jacobians: Option<Vec<f64>>) -> Result<Self> {
        if dim == 0 || points.len() % dim != 0 {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: points.len(),
            });
        }
        if values.len() != points.len() {
            return Err(Error::DimensionMismatch {
                expected: points.len(),
                got: values.len(),
            });
        }
        if let Some(j) = &jacobians {
            if j.len() != points.len() * dim {
                return Err(Error::DimensionMismatch {
                    expected: points.len() * dim,
                    got: j.len(),
                });
            }
        }
        Ok(Self {
            dim,
            points,
            values,
            jacobians,
        })
    }

    pub fn len(&self) -> usize {
        self.points.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.points[i * self.dim..(i + 1) * self.dim]
    }

    pub fn value(&self, i: usize) -> &[f64] {
        &self.values[i * self.dim..(i + 1) * self.dim]
    }

    pub fn jacobian(&self, i: usize) -> Option<&[f64]> {
        let dd = self.dim * self.dim;
        self.jacobians.as_ref().map(|j| &j[i * dd..(i + 1) * dd])
    }

    /// Samples a scalar map `f` with derivative `df` at `n + 1` equispaced points.
    pub fn from_scalar(f: &dyn Fn(f64) -> f64, df: Option<&dyn Fn(f64) -> f64>, lo: f64, hi: f64, n: usize) -> Self {
        let n = n.max(1);
        let pts: Vec<f64> = (0..=n)
            .map(|i| {
                if i == n {
                    hi
                } else {
                    lo + (hi - lo) * i as f64 / n as f64
                }
            })
            .collect();
        let values = pts.iter().map(|&x| f(x)).collect();
        let jacobians = df.map(|d| pts.iter().map(|&x| d(x)).collect());
        Self {
            dim: 1,
            points: pts,
            values,
            jacobians,
        }
    }

    /// Samples `map` on the vertex grid of `b` with `n` intervals per axis.
    pub fn from_map(map: &dyn VectorMap, b: &AxisBox, n: usize, with_jacobian: bool) -> Self {
        let d = b.dim();
        let n = n.max(1);
        let per = n + 1;
        let count = per.pow(d as u32);
        let mut points = Vec::with_capacity(count * d);
        let mut values = vec![0.0; count * d];
        let mut jac = if with_jacobian {
            Some(vec![0.0; count * d * d])
        } else {
            None
        };
        let mut x = vec![0.0; d];
        for flat in 0..count {
            let mut rem = flat;
            for k in (0..d).rev() {
                let i = rem % per;
                rem /= per;
                let iv = b.axes[k];
                x[k] = if i == n {
                    iv.hi
                } else {
                    iv.lo + iv.length() * i as f64 / n as f64
                };
            }
            points.extend_from_slice(&x);
            map.eval_into(&x, &mut values[flat * d..(flat + 1) * d]);
            if let Some(j) = jac.as_mut() {
                map.jacobian_into(&x, &mut j[flat * d * d..(flat + 1) * d * d]);
            }
        }
        Self {
            dim: d,
            points,
            values,
            jacobians: jac,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::map::IdentityMap;

    #[test]
    fn counts_are_validated() {
        assert!(SampledMap::new(2, vec![0.0; 4], vec![0.0; 2], None).is_err());
        assert!(SampledMap::new(2, vec![0.0; 4], vec![0.0; 4], Some(vec![0.0; 7])).is_err());
        assert!(SampledMap::new(2, vec![0.0; 4], vec![0.0; 4], Some(vec![0.0; 8])).is_ok());
    }

    #[test]
    fn grid_sampling_of_identity() {
        let s = SampledMap::from_map(&IdentityMap { d: 2 }, &AxisBox::unit_cube(2), 4, true);
        assert_eq!(s.len(), 25);
        for i in 0..s.len() {
            assert_eq!(s.point(i), s.value(i));
            assert_eq!(s.jacobian(i).unwrap(), &[1.0, 0.0, 0.0, 1.0]);
        }
    }
}
