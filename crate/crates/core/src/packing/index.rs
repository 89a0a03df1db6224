//! Uniform bucket grid over balls for nearest-boundary and containment queries.

use alloc::vec;
use alloc::vec::Vec;
#[cfg(not(any(feature = "std", test)))]
#[allow(unused_imports)]
use num_traits::Float;

use crate::kernel::AxisBox;

#[derive(Debug, Clone)]
pub(crate) struct BallIndex {
    d: usize,
    lo: Vec<f64>,
    cell: Vec<f64>,
    per_axis: usize,
    buckets: Vec<Vec<u32>>,
}

impl BallIndex {
    /// `per_axis` buckets along each axis of `bounds`.
    pub fn new(bounds: &AxisBox, per_axis: usize) -> Self {
        let d = bounds.dim();
        let per_axis = per_axis.max(1);
        let lo = bounds.axes.iter().map(|iv| iv.lo).collect();
        let cell = bounds
            .axes
            .iter()
            .map(|iv| (iv.length() / per_axis as f64).max(f64::MIN_POSITIVE))
            .collect();
        Self {
            d,
            lo,
            cell,
            per_axis,
            buckets: vec![Vec::new(); per_axis.pow(d as u32)],
        }
    }

    /// Bucket count per axis so that a cell is about `target` wide.
    pub fn per_axis_for(bounds: &AxisBox, target: f64, cap: usize) -> usize {
        let side = bounds.max_side();
        ((side / target).ceil() as usize).clamp(1, cap)
    }

    fn range(&self, k: usize, lo: f64, hi: f64) -> (usize, usize) {
        let a = ((lo - self.lo[k]) / self.cell[k]).floor();
        let b = ((hi - self.lo[k]) / self.cell[k]).floor();
        let top = (self.per_axis - 1) as f64;
        (a.clamp(0.0, top) as usize, b.clamp(0.0, top) as usize)
    }

    fn for_each_bucket(&self, lo: &[f64], hi: &[f64], mut f: impl FnMut(usize)) {
        let d = self.d;
        let mut ranges = [(0usize, 0usize); crate::map::MAX_DIM];
        for k in 0..d {
            ranges[k] = self.range(k, lo[k], hi[k]);
        }
        let mut idx = [0usize; crate::map::MAX_DIM];
        for k in 0..d {
            idx[k] = ranges[k].0;
        }
        loop {
            let mut flat = 0;
            for k in 0..d {
                flat = flat * self.per_axis + idx[k];
            }
            f(flat);
            let mut k = d;
            loop {
                if k == 0 {
                    return;
                }
                k -= 1;
                if idx[k] < ranges[k].1 {
                    idx[k] += 1;
                    break;
                }
                idx[k] = ranges[k].0;
            }
        }
    }

    pub fn insert(&mut self, id: u32, center: &[f64], radius: f64) {
        let d = self.d;
        let mut lo = [0.0; crate::map::MAX_DIM];
        let mut hi = [0.0; crate::map::MAX_DIM];
        for k in 0..d {
            lo[k] = center[k] - radius;
            hi[k] = center[k] + radius;
        }
        let mut hits = Vec::new();
        self.for_each_bucket(&lo[..d], &hi[..d], |b| hits.push(b));
        for b in hits {
            self.buckets[b].push(id);
        }
    }

    /// Calls `f` with every ball id whose bounding box may meet the cube of
    /// half-width `reach` around `x`. Ids can repeat.
    pub fn visit_near(&self, x: &[f64], reach: f64, mut f: impl FnMut(u32)) {
        let d = self.d;
        let mut lo = [0.0; crate::map::MAX_DIM];
        let mut hi = [0.0; crate::map::MAX_DIM];
        for k in 0..d {
            lo[k] = x[k] - reach;
            hi[k] = x[k] + reach;
        }
        self.for_each_bucket(&lo[..d], &hi[..d], |b| {
            for &id in &self.buckets[b] {
                f(id);
            }
        });
    }

    /// Ids stored in the bucket containing `x`.
    pub fn bucket_at(&self, x: &[f64]) -> &[u32] {
        let mut flat = 0;
        for k in 0..self.d {
            let (i, _) = self.range(k, x[k], x[k]);
            flat = flat * self.per_axis + i;
        }
        &self.buckets[flat]
    }
}
