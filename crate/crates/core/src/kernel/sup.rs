//! Grid estimates of sup-norm distances between maps.

use alloc::vec;
#[cfg(not(any(feature = "std", test)))]
#[allow(unused_imports)]
use num_traits::Float;

use super::domain::{BoxDomain, Interval};
use crate::error::{domain_err, Error, Result};
use crate::map::VectorMap;

/// Grid sup-distance, optionally inflated to a certified bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SupDistance {
    /// Largest componentwise `|f - g|` seen on the grid.
    pub value: f64,
    /// Grid intervals per axis.
    pub resolution: usize,
    /// Where the max was attained (first coordinate).
    pub argmax: f64,
    /// `value + Lip(f - g) * (grid spacing / 2)` when a Lipschitz bound was supplied.
    pub certified: Option<f64>,
}

impl SupDistance {
    /// Certified bound when available, grid value otherwise.
    pub fn bound(&self) -> f64 {
        self.certified.unwrap_or(self.value)
    }
}

/// Default grid density for 1D checks.
pub const DEFAULT_RESOLUTION_1D: usize = 4096;
/// Default grid density per axis for 2D checks.
pub const DEFAULT_RESOLUTION_2D: usize = 512;

/// Sup of `|f - g|` over `resolution + 1` equispaced points of `iv`, endpoints included.
pub fn sup_distance_1d(
    f: &dyn Fn(f64) -> f64,
    g: &dyn Fn(f64) -> f64,
    iv: Interval,
    resolution: usize,
    lipschitz: Option<f64>,
) -> Result<SupDistance> {
    if resolution == 0 {
        return Err(domain_err!("resolution must be positive"));
    }
    let step = iv.length() / resolution as f64;
    let mut best = 0.0;
    let mut argmax = iv.lo;
    for i in 0..=resolution {
        let x = if i == resolution {
            iv.hi
        } else {
            iv.lo + i as f64 * step
        };
        let v = (f(x) - g(x)).abs();
        if !v.is_finite() {
            return Err(Error::EvaluationFailure { at: x });
        }
        if v > best {
            best = v;
            argmax = x;
        }
    }
    Ok(SupDistance {
        value: best,
        resolution,
        argmax,
        certified: lipschitz.map(|l| best + l * 0.5 * step),
    })
}

/// Sup of componentwise `|f - g|` over the vertex grid of each box.
pub fn sup_distance(
    f: &dyn VectorMap,
    g: &dyn VectorMap,
    dom: &BoxDomain,
    resolution: usize,
    lipschitz: Option<f64>,
) -> Result<SupDistance> {
    let d = dom.dim();
    if f.dim() != d || g.dim() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: if f.dim() != d { f.dim() } else { g.dim() },
        });
    }
    if resolution == 0 {
        return Err(domain_err!("resolution must be positive"));
    }
    let mut x = vec![0.0; d];
    let mut fx = vec![0.0; d];
    let mut gx = vec![0.0; d];
    let mut best = 0.0f64;
    let mut argmax = 0.0;
    let mut spacing = 0.0f64;
    let per = resolution + 1;
    for b in dom.boxes() {
        let step: alloc::vec::Vec<f64> = b.axes.iter().map(|iv| iv.length() / resolution as f64).collect();
        spacing = spacing.max(step.iter().map(|s| s * s).sum::<f64>().sqrt());
        for flat in 0..per.pow(d as u32) {
            let mut rem = flat;
            for k in (0..d).rev() {
                let i = rem % per;
                rem /= per;
                x[k] = if i == resolution {
                    b.axes[k].hi
                } else {
                    b.axes[k].lo + i as f64 * step[k]
                };
            }
            if dom.is_masked() && !dom.contains(&x) {
                continue;
            }
            f.eval_into(&x, &mut fx);
            g.eval_into(&x, &mut gx);
            for k in 0..d {
                let v = (fx[k] - gx[k]).abs();
                if !v.is_finite() {
                    return Err(Error::EvaluationFailure { at: x[0] });
                }
                if v > best {
                    best = v;
                    argmax = x[0];
                }
            }
        }
    }
    Ok(SupDistance {
        value: best,
        resolution,
        argmax,
        certified: lipschitz.map(|l| best + l * 0.5 * spacing),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::map::IdentityMap;

    #[test]
    fn identical_maps_have_zero_distance() {
        let r = sup_distance_1d(&|x| x * x, &|x| x * x, Interval::unit(), 100, None).unwrap();
        assert_eq!(r.value, 0.0);
        let id = IdentityMap { d: 2 };
        let r = sup_distance(&id, &id, &BoxDomain::unit_cube(2), 16, Some(1.0)).unwrap();
        assert_eq!(r.value, 0.0);
        assert!(r.certified.unwrap() > 0.0);
    }

    #[test]
    fn linear_gap_found_at_endpoint() {
        let r = sup_distance_1d(&|x| 2.0 * x, &|x| x, Interval::unit(), 10, None).unwrap();
        assert_eq!(r.value, 1.0);
        assert_eq!(r.argmax, 1.0);
    }
}
