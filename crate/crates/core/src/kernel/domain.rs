//! Exponents, intervals and box-union domains.

use alloc::sync::Arc;
use alloc::vec::Vec;
use core::fmt;
#[cfg(not(any(feature = "std", test)))]
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{domain_err, Error, Result};

/// An integrability exponent `p > 0`. Values below one give quasi-norms.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct Exponent(f64);

impl Exponent {
    pub fn new(p: f64) -> Result<Self> {
        if p.is_finite() && p > 0.0 {
            Ok(Self(p))
        } else {
            Err(domain_err!("exponent must be finite and positive, got {p}"))
        }
    }

    /// Shorthand for `p = 1/2`, the exponent used throughout the examples.
    pub fn half() -> Self {
        Self(0.5)
    }

    pub fn value(self) -> f64 {
        self.0
    }

    pub fn is_subunit(self) -> bool {
        self.0 < 1.0
    }
}

/// A bounded open interval `(lo, hi)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if lo.is_finite() && hi.is_finite() && lo < hi {
            Ok(Self { lo, hi })
        } else {
            Err(domain_err!("empty or unbounded interval ({lo}, {hi})"))
        }
    }

    pub fn unit() -> Self {
        Self { lo: 0.0, hi: 1.0 }
    }

    pub fn length(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }
}

/// An axis-aligned box, one interval per coordinate.
#[derive(Debug, Clone, PartialEq)]
pub struct AxisBox {
    pub axes: Vec<Interval>,
}

impl AxisBox {
    pub fn new(axes: Vec<Interval>) -> Result<Self> {
        if axes.is_empty() {
            return Err(domain_err!("a box needs at least one axis"));
        }
        Ok(Self { axes })
    }

    pub fn unit_cube(d: usize) -> Self {
        Self {
            axes: (0..d).map(|_| Interval::unit()).collect(),
        }
    }

    pub fn from_bounds(lo: &[f64], hi: &[f64]) -> Result<Self> {
        if lo.len() != hi.len() {
            return Err(Error::DimensionMismatch {
                expected: lo.len(),
                got: hi.len(),
            });
        }
        let axes = lo
            .iter()
            .zip(hi)
            .map(|(&a, &b)| Interval::new(a, b))
            .collect::<Result<Vec<_>>>()?;
        Self::new(axes)
    }

    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    pub fn volume(&self) -> f64 {
        self.axes.iter().map(Interval::length).product()
    }

    pub fn center(&self) -> Vec<f64> {
        self.axes.iter().map(Interval::midpoint).collect()
    }

    pub fn min_side(&self) -> f64 {
        self.axes.iter().map(Interval::length).fold(f64::INFINITY, f64::min)
    }

    pub fn max_side(&self) -> f64 {
        self.axes.iter().map(Interval::length).fold(0.0, f64::max)
    }

    /// Closed-box membership.
    pub fn contains(&self, x: &[f64]) -> bool {
        self.axes.iter().zip(x).all(|(iv, &v)| iv.contains(v))
    }

    /// Distance from an interior point to the box boundary (negative outside).
    pub fn boundary_distance(&self, x: &[f64]) -> f64 {
        self.axes
            .iter()
            .zip(x)
            .map(|(iv, &v)| (v - iv.lo).min(iv.hi - v))
            .fold(f64::INFINITY, f64::min)
    }

    /// Intersection with another box, if it has nonempty interior.
    pub fn intersect(&self, other: &AxisBox) -> Option<AxisBox> {
        let axes = self
            .axes
            .iter()
            .zip(&other.axes)
            .map(|(a, b)| {
                let lo = a.lo.max(b.lo);
                let hi = a.hi.min(b.hi);
                (lo < hi).then_some(Interval { lo, hi })
            })
            .collect::<Option<Vec<_>>>()?;
        Some(AxisBox { axes })
    }
}

/// Membership predicate narrowing a box union to a sub-region.
pub type Mask = Arc<dyn Fn(&[f64]) -> bool + Send + Sync>;

/// A bounded open set given as a union of interior-disjoint boxes, optionally
/// narrowed by a membership predicate.
#[derive(Clone)]
pub struct BoxDomain {
    boxes: Vec<AxisBox>,
    dim: usize,
    mask: Option<Mask>,
}

impl fmt::Debug for BoxDomain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("BoxDomain")
            .field("boxes", &self.boxes)
            .field("dim", &self.dim)
            .field("masked", &self.mask.is_some())
            .finish()
    }
}

impl BoxDomain {
    pub fn new(boxes: Vec<AxisBox>) -> Result<Self> {
        let dim = boxes
            .first()
            .map(AxisBox::dim)
            .ok_or_else(|| domain_err!("domain needs at least one box"))?;
        for b in &boxes {
            if b.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: b.dim(),
                });
            }
        }
        for (i, a) in boxes.iter().enumerate() {
            for b in &boxes[i + 1..] {
                if a.intersect(b).is_some() {
                    return Err(domain_err!("boxes of a domain must be interior-disjoint"));
                }
            }
        }
        Ok(Self { boxes, dim, mask: None })
    }

    pub fn unit_cube(d: usize) -> Self {
        Self {
            boxes: alloc::vec![AxisBox::unit_cube(d)],
            dim: d,
            mask: None,
        }
    }

    pub fn single(b: AxisBox) -> Self {
        let dim = b.dim();
        Self {
            boxes: alloc::vec![b],
            dim,
            mask: None,
        }
    }

    pub fn with_mask(mut self, mask: Mask) -> Self {
        self.mask = Some(mask);
        self
    }

    pub fn boxes(&self) -> &[AxisBox] {
        &self.boxes
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn mask(&self) -> Option<&Mask> {
        self.mask.as_ref()
    }

    pub fn is_masked(&self) -> bool {
        self.mask.is_some()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        self.boxes.iter().any(|b| b.contains(x)) && self.mask.as_ref().map_or(true, |m| m(x))
    }

    /// Lebesgue measure of the box union, ignoring any mask.
    pub fn box_measure(&self) -> f64 {
        self.boxes.iter().map(AxisBox::volume).sum()
    }

    /// Lebesgue measure. Exact for unmasked domains; masked domains are
    /// measured by midpoint counting with `resolution` cells per box axis.
    pub fn measure(&self, resolution: usize) -> f64 {
        match &self.mask {
            None => self.box_measure(),
            Some(mask) => {
                let mut total = 0.0;
                let mut x = alloc::vec![0.0; self.dim];
                for b in &self.boxes {
                    let cell = b.volume() / (resolution as f64).powi(self.dim as i32);
                    let mut hits = 0usize;
                    for_each_grid_point(b, resolution, &mut x, |p| {
                        if mask(p) {
                            hits += 1;
                        }
                    });
                    total += hits as f64 * cell;
                }
                total
            }
        }
    }

    /// Smallest axis-aligned box containing every box of the union.
    pub fn bounding_box(&self) -> AxisBox {
        let mut axes = self.boxes[0].axes.clone();
        for b in &self.boxes[1..] {
            for (acc, iv) in axes.iter_mut().zip(&b.axes) {
                acc.lo = acc.lo.min(iv.lo);
                acc.hi = acc.hi.max(iv.hi);
            }
        }
        AxisBox { axes }
    }
}

/// Visits the midpoints of a uniform `resolution^d` grid on `b`.
pub(crate) fn for_each_grid_point(b: &AxisBox, resolution: usize, scratch: &mut [f64], mut visit: impl FnMut(&[f64])) {
    let d = b.dim();
    let total = resolution.pow(d as u32);
    for flat in 0..total {
        let mut rem = flat;
        for (k, iv) in b.axes.iter().enumerate().rev() {
            let idx = rem % resolution;
            rem /= resolution;
            scratch[k] = iv.lo + (idx as f64 + 0.5) * iv.length() / resolution as f64;
        }
        let _ = d;
        visit(scratch);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponent_rejects_nonpositive() {
        assert!(Exponent::new(0.0).is_err());
        assert!(Exponent::new(-1.0).is_err());
        assert!(Exponent::new(f64::NAN).is_err());
        assert!(Exponent::new(0.5).unwrap().is_subunit());
        assert!(!Exponent::new(2.0).unwrap().is_subunit());
    }

    #[test]
    fn interval_requires_lo_below_hi() {
        assert!(Interval::new(1.0, 1.0).is_err());
        assert!(Interval::new(2.0, 1.0).is_err());
        assert_eq!(Interval::new(-1.0, 3.0).unwrap().length(), 4.0);
    }

    #[test]
    fn overlapping_boxes_are_rejected() {
        let a = AxisBox::from_bounds(&[0.0, 0.0], &[1.0, 1.0]).unwrap();
        let b = AxisBox::from_bounds(&[0.5, 0.5], &[1.5, 1.5]).unwrap();
        assert!(BoxDomain::new(alloc::vec![a.clone(), b]).is_err());
        let c = AxisBox::from_bounds(&[1.0, 0.0], &[2.0, 1.0]).unwrap();
        let dom = BoxDomain::new(alloc::vec![a, c]).unwrap();
        assert_eq!(dom.box_measure(), 2.0);
    }

    #[test]
    fn masked_measure_of_disc() {
        let dom = BoxDomain::unit_cube(2).with_mask(Arc::new(|x: &[f64]| {
            let (u, v) = (x[0] - 0.5, x[1] - 0.5);
            u * u + v * v < 0.25
        }));
        let m = dom.measure(1024);
        assert!((m - core::f64::consts::PI / 4.0).abs() < 1e-3);
    }
}
