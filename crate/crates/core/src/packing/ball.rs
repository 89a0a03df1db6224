//! Finite disjoint ball packings of box domains with a residual-measure certificate.

use alloc::collections::BinaryHeap;
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;
#[cfg(not(any(feature = "std", test)))]
#[allow(unused_imports)]
use num_traits::Float;

use super::index::BallIndex;
use crate::error::{domain_err, Error, Result};
use crate::kernel::{AxisBox, BoxDomain};

/// Gap kept between balls and between a ball and the boundary.
pub const PACKING_MARGIN: f64 = 1e-12;

/// Closed ball `D(a, ρ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Ball {
    pub center: Vec<f64>,
    pub radius: f64,
}

impl Ball {
    pub fn dim(&self) -> usize {
        self.center.len()
    }

    pub fn volume(&self) -> f64 {
        unit_ball_volume(self.dim()) * self.radius.powi(self.dim() as i32)
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        dist2(&self.center, x) <= self.radius * self.radius
    }

    /// Strictly positive gap between the two closed balls.
    pub fn disjoint_from(&self, other: &Ball) -> bool {
        let s = self.radius + other.radius;
        dist2(&self.center, &other.center) > s * s
    }
}

pub(crate) fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Volume of the unit ball in R^d.
pub fn unit_ball_volume(d: usize) -> f64 {
    let (mut v, start) = if d % 2 == 0 { (1.0, 2) } else { (2.0, 3) };
    let mut k = start;
    while k <= d {
        v *= 2.0 * core::f64::consts::PI / k as f64;
        k += 2;
    }
    v
}

#[derive(Debug, Clone)]
pub struct BallPacking {
    pub balls: Vec<Ball>,
    /// Midpoint-grid count of `λ(Ω \ ∪ balls)`.
    pub residual_measure_estimate: f64,
    /// Grid cells per box axis used for the estimate.
    pub resolution: usize,
    /// Measure of grid cells straddling a ball boundary; the true residual
    /// lies within this of the estimate.
    pub resolution_error: f64,
    /// `λ(Ω) - Σ λ(D_k)`.
    pub analytic_residual: f64,
    pub max_diameter: f64,
    pub delta: f64,
}

impl BallPacking {
    pub fn len(&self) -> usize {
        self.balls.len()
    }

    pub fn is_empty(&self) -> bool {
        self.balls.is_empty()
    }

    pub fn covered_measure(&self) -> f64 {
        self.balls.iter().map(Ball::volume).sum()
    }

    /// Exact pairwise disjointness: `|a_i - a_j| > r_i + r_j` for every pair.
    pub fn is_disjoint(&self) -> bool {
        pairwise_disjoint(&self.balls)
    }
}

/// Pairwise check through a bucket index; falls back to all pairs for tiny sets.
pub fn pairwise_disjoint(balls: &[Ball]) -> bool {
    if balls.len() < 64 {
        return balls
            .iter()
            .enumerate()
            .all(|(i, a)| balls[i + 1..].iter().all(|b| a.disjoint_from(b)));
    }
    let d = balls[0].dim();
    let mut lo = vec![f64::INFINITY; d];
    let mut hi = vec![f64::NEG_INFINITY; d];
    let mut rmax = 0.0f64;
    for b in balls {
        rmax = rmax.max(b.radius);
        for k in 0..d {
            lo[k] = lo[k].min(b.center[k] - b.radius);
            hi[k] = hi[k].max(b.center[k] + b.radius);
        }
    }
    let Ok(bounds) = AxisBox::from_bounds(&lo, &hi) else {
        return false;
    };
    let per = BallIndex::per_axis_for(&bounds, 2.0 * rmax, 1 << (20 / d.max(1)));
    let mut idx = BallIndex::new(&bounds, per);
    for (i, b) in balls.iter().enumerate() {
        idx.insert(i as u32, &b.center, b.radius);
    }
    balls.iter().enumerate().all(|(i, a)| {
        let mut ok = true;
        idx.visit_near(&a.center, a.radius, |j| {
            if j as usize != i && !a.disjoint_from(&balls[j as usize]) {
                ok = false;
            }
        });
        ok
    })
}

#[derive(Debug, Clone)]
pub struct PackOptions {
    /// Grid cells per box axis for the residual certificate. `None` picks
    /// about 4M cells per box.
    pub resolution: Option<usize>,
    pub max_balls: usize,
    /// Finest candidate level (candidates per axis `2^level`).
    pub max_level: u32,
}

impl Default for PackOptions {
    fn default() -> Self {
        Self {
            resolution: None,
            max_balls: 2_000_000,
            max_level: 11,
        }
    }
}

impl PackOptions {
    pub fn with_resolution(mut self, res: usize) -> Self {
        self.resolution = Some(res);
        self
    }

    fn resolution_for(&self, d: usize) -> usize {
        self.resolution
            .unwrap_or_else(|| ((4.0e6f64).powf(1.0 / d as f64).floor() as usize).max(8))
    }
}

/// Greedy Vitali packing: balls of diameter at most `eps` inside `dom` until
/// the uncovered measure is at most `delta`.
pub fn vitali_pack(dom: &BoxDomain, eps: f64, delta: f64) -> Result<BallPacking> {
    vitali_pack_with(dom, eps, delta, &PackOptions::default())
}

pub fn vitali_pack_with(dom: &BoxDomain, eps: f64, delta: f64, opts: &PackOptions) -> Result<BallPacking> {
    let (packing, reached) = vitali_pack_best_effort(dom, eps, delta, opts)?;
    if !reached {
        return Err(Error::Budget(alloc::format!(
            "residual {:.3e} > {delta:e} after {} balls",
            packing.residual_measure_estimate,
            packing.len()
        )));
    }
    Ok(packing)
}

/// Like [`vitali_pack_with`] but returns the best packing found together with
/// whether the residual target was met.
pub fn vitali_pack_best_effort(
    dom: &BoxDomain,
    eps: f64,
    delta: f64,
    opts: &PackOptions,
) -> Result<(BallPacking, bool)> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(domain_err!("maximal diameter must be positive, got {eps}"));
    }
    if !(delta > 0.0) {
        return Err(domain_err!("residual target must be positive, got {delta}"));
    }
    let d = dom.dim();
    if d > crate::map::MAX_DIM {
        return Err(domain_err!("dimension {d} exceeds {}", crate::map::MAX_DIM));
    }
    let res = opts.resolution_for(d);
    let measure = dom.measure(res);
    let mut packer = Packer::new(dom, eps, res);
    if measure <= delta {
        let p = packer.finish(measure, delta);
        return Ok((p, true));
    }
    let mut target = delta;
    for _ in 0..16 {
        let reached = packer.pack_until(measure - target, opts);
        let p = packer.certify(measure, delta);
        if p.residual_measure_estimate <= delta {
            return Ok((p, true));
        }
        if !reached {
            return Ok((p, false));
        }
        target -= (p.residual_measure_estimate - delta) + 0.05 * delta;
        if target <= 0.0 {
            return Ok((p, false));
        }
    }
    let p = packer.certify(measure, delta);
    let ok = p.residual_measure_estimate <= delta;
    Ok((p, ok))
}

#[derive(Clone, Copy)]
struct Cand {
    rho: f64,
    key: u128,
    idx: u32,
}

impl PartialEq for Cand {
    fn eq(&self, o: &Self) -> bool {
        self.cmp(o) == Ordering::Equal
    }
}
impl Eq for Cand {}
impl PartialOrd for Cand {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}
impl Ord for Cand {
    // largest radius first, then lexicographically smallest center
    fn cmp(&self, o: &Self) -> Ordering {
        self.rho
            .total_cmp(&o.rho)
            .then_with(|| o.key.cmp(&self.key))
            .then_with(|| o.idx.cmp(&self.idx))
    }
}

struct Packer<'a> {
    dom: &'a BoxDomain,
    d: usize,
    cap: f64,
    res: usize,
    bounds: AxisBox,
    index: BallIndex,
    balls: Vec<Ball>,
    covered: f64,
    centers: Vec<f64>,
    cand_box: Vec<u32>,
    heap: BinaryHeap<Cand>,
    level: u32,
    sphere: Vec<Vec<f64>>,
    moves: Vec<Vec<f64>>,
}

impl<'a> Packer<'a> {
    fn new(dom: &'a BoxDomain, eps: f64, res: usize) -> Self {
        let d = dom.dim();
        let cap = 0.5 * eps;
        let bounds = dom.bounding_box();
        let per = BallIndex::per_axis_for(&bounds, cap, 1 << (22 / d));
        let max_side = dom.boxes().iter().map(AxisBox::max_side).fold(0.0, f64::max);
        let mut level = 0;
        while max_side / (1u64 << level) as f64 > cap && level < 40 {
            level += 1;
        }
        let sphere = if dom.is_masked() { sphere_samples(d) } else { Vec::new() };
        let mut p = Self {
            dom,
            d,
            cap,
            res,
            index: BallIndex::new(&bounds, per),
            bounds,
            balls: Vec::new(),
            covered: 0.0,
            centers: Vec::new(),
            cand_box: Vec::new(),
            heap: BinaryHeap::new(),
            level,
            sphere,
            moves: climb_moves(d),
        };
        p.add_level();
        p
    }

    fn spacing(&self) -> f64 {
        let max_side = self.dom.boxes().iter().map(AxisBox::max_side).fold(0.0, f64::max);
        max_side / (1u64 << self.level) as f64
    }

    fn lex_key(&self, c: &[f64]) -> u128 {
        let bits = (128 / self.d).min(64) as u32;
        let scale = if bits >= 64 {
            u64::MAX as f64
        } else {
            ((1u64 << bits) - 1) as f64
        };
        let mut key: u128 = 0;
        for k in 0..self.d {
            let iv = self.bounds.axes[k];
            let t = ((c[k] - iv.lo) / iv.length()).clamp(0.0, 1.0);
            key = (key << bits) | (t * scale) as u64 as u128;
        }
        key
    }

    fn add_level(&mut self) {
        let d = self.d;
        let n = 1usize << self.level;
        let mut c = vec![0.0; d];
        for (bi, b) in self.dom.boxes().iter().enumerate() {
            let total = n.pow(d as u32);
            for flat in 0..total {
                let mut rem = flat;
                for k in (0..d).rev() {
                    let i = rem % n;
                    rem /= n;
                    let iv = b.axes[k];
                    c[k] = iv.lo + (i as f64 + 0.5) * iv.length() / n as f64;
                }
                let rho = self.radius_at(&c, bi);
                if rho > 0.0 {
                    let idx = self.cand_box.len() as u32;
                    self.centers.extend_from_slice(&c);
                    self.cand_box.push(bi as u32);
                    let key = self.lex_key(&c);
                    self.heap.push(Cand { rho, key, idx });
                }
            }
        }
    }

    /// Largest admissible radius at `c` inside box `bi`, capped at `eps/2`.
    fn radius_at(&self, c: &[f64], bi: usize) -> f64 {
        let b = &self.dom.boxes()[bi];
        let mut rho = self.cap.min(b.boundary_distance(c));
        let balls = &self.balls;
        self.index.visit_near(c, self.cap + PACKING_MARGIN, |id| {
            let k = &balls[id as usize];
            let gap = dist2(c, &k.center).sqrt() - k.radius;
            if gap < rho {
                rho = gap;
            }
        });
        rho -= PACKING_MARGIN;
        if rho <= 0.0 {
            return 0.0;
        }
        if let Some(mask) = self.dom.mask() {
            let mut x = vec![0.0; self.d];
            'shrink: for _ in 0..12 {
                if !mask(c) {
                    return 0.0;
                }
                for dir in &self.sphere {
                    for k in 0..self.d {
                        x[k] = c[k] + rho * dir[k];
                    }
                    if !mask(&x) {
                        rho *= 0.5;
                        continue 'shrink;
                    }
                }
                return rho;
            }
            return 0.0;
        }
        rho
    }

    /// Pattern search over finer dyadic offsets of `c` for a larger admissible radius.
    fn climb(&self, c: &mut [f64], bi: usize, mut rho: f64) -> f64 {
        let d = self.d;
        let mut step = 0.5 * self.spacing();
        let floor = self.spacing() / 64.0;
        let mut trial = vec![0.0; d];
        let mut iters = 0;
        while step >= floor && iters < 256 && rho < self.cap {
            iters += 1;
            let mut best: Option<(f64, Vec<f64>)> = None;
            for dir in &self.moves {
                for k in 0..d {
                    trial[k] = c[k] + dir[k] * step;
                }
                let r = self.radius_at(&trial, bi);
                if r > best.as_ref().map_or(rho, |b| b.0) {
                    best = Some((r, trial.clone()));
                }
            }
            match best {
                Some((r, x)) => {
                    rho = r;
                    c.copy_from_slice(&x);
                }
                None => step *= 0.5,
            }
        }
        rho
    }

    /// Places balls until `covered >= goal`. Returns false on budget exhaustion.
    fn pack_until(&mut self, goal: f64, opts: &PackOptions) -> bool {
        let vol = unit_ball_volume(self.d);
        while self.covered < goal {
            if self.balls.len() >= opts.max_balls {
                return false;
            }
            let Some(top) = self.heap.pop() else {
                if self.level >= opts.max_level {
                    return false;
                }
                self.level += 1;
                self.add_level();
                continue;
            };
            let i = top.idx as usize;
            let mut c: Vec<f64> = self.centers[i * self.d..(i + 1) * self.d].to_vec();
            let bi = self.cand_box[i] as usize;
            let fresh = self.radius_at(&c, bi);
            if fresh <= 0.0 {
                continue;
            }
            if fresh < top.rho {
                self.heap.push(Cand { rho: fresh, ..top });
                continue;
            }
            if fresh < self.spacing() {
                self.heap.push(top);
                if self.level >= opts.max_level {
                    return false;
                }
                self.level += 1;
                self.add_level();
                continue;
            }
            let rho = self.climb(&mut c, bi, fresh);
            let id = self.balls.len() as u32;
            self.index.insert(id, &c, rho);
            self.covered += vol * rho.powi(self.d as i32);
            self.balls.push(Ball { center: c, radius: rho });
        }
        true
    }

    fn certify(&self, measure: f64, delta: f64) -> BallPacking {
        let d = self.d;
        let mut uncovered = 0.0;
        let mut straddle = 0.0;
        let mut x = vec![0.0; d];
        for b in self.dom.boxes() {
            let cell_vol = b.volume() / (self.res as f64).powi(d as i32);
            let half_diag = 0.5
                * b.axes
                    .iter()
                    .map(|iv| (iv.length() / self.res as f64).powi(2))
                    .sum::<f64>()
                    .sqrt();
            let (mut u, mut s) = (0usize, 0usize);
            crate::kernel::domain::for_each_grid_point(b, self.res, &mut x, |p| {
                if self.dom.is_masked() && !self.dom.contains(p) {
                    return;
                }
                let mut inside = false;
                let mut near = false;
                self.index.visit_near(p, half_diag, |id| {
                    let k = &self.balls[id as usize];
                    let r = dist2(p, &k.center).sqrt();
                    if r <= k.radius {
                        inside = true;
                    }
                    if (r - k.radius).abs() < half_diag {
                        near = true;
                    }
                });
                if !inside {
                    u += 1;
                }
                if near {
                    s += 1;
                }
            });
            uncovered += u as f64 * cell_vol;
            straddle += s as f64 * cell_vol;
        }
        BallPacking {
            balls: self.balls.clone(),
            residual_measure_estimate: uncovered,
            resolution: self.res,
            resolution_error: straddle,
            analytic_residual: (measure - self.covered).max(0.0),
            max_diameter: 2.0 * self.cap,
            delta,
        }
    }

    fn finish(&self, measure: f64, delta: f64) -> BallPacking {
        BallPacking {
            balls: Vec::new(),
            residual_measure_estimate: measure,
            resolution: self.res,
            resolution_error: 0.0,
            analytic_residual: measure,
            max_diameter: 2.0 * self.cap,
            delta,
        }
    }
}

/// `{-1, 0, 1}^d` minus the origin for small `d`, the axis moves otherwise.
fn climb_moves(d: usize) -> Vec<Vec<f64>> {
    let mut out = Vec::new();
    if d <= 3 {
        for code in 0..3usize.pow(d as u32) {
            let mut rem = code;
            let v: Vec<f64> = (0..d)
                .map(|_| {
                    let t = rem % 3;
                    rem /= 3;
                    t as f64 - 1.0
                })
                .collect();
            if v.iter().any(|&x| x != 0.0) {
                out.push(v);
            }
        }
    } else {
        for k in 0..d {
            for sgn in [-1.0, 1.0] {
                let mut v = vec![0.0; d];
                v[k] = sgn;
                out.push(v);
            }
        }
    }
    out
}

/// Unit directions for boundary-sample containment checks against a mask.
fn sphere_samples(d: usize) -> Vec<Vec<f64>> {
    let mut out = Vec::new();
    if d == 2 {
        for m in 0..32 {
            let (s, c) = (m as f64 * core::f64::consts::PI / 16.0).sin_cos();
            out.push(vec![c, s]);
        }
        return out;
    }
    for k in 0..d {
        for sgn in [-1.0, 1.0] {
            let mut v = vec![0.0; d];
            v[k] = sgn;
            out.push(v);
        }
    }
    if d <= 6 {
        let norm = 1.0 / (d as f64).sqrt();
        for bits in 0..(1usize << d) {
            out.push((0..d).map(|k| if bits >> k & 1 == 1 { norm } else { -norm }).collect());
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn unit_ball_volumes() {
        assert_relative_eq!(unit_ball_volume(1), 2.0);
        assert_relative_eq!(unit_ball_volume(2), core::f64::consts::PI);
        assert_relative_eq!(unit_ball_volume(3), 4.0 / 3.0 * core::f64::consts::PI);
        assert_relative_eq!(unit_ball_volume(4), core::f64::consts::PI.powi(2) / 2.0);
    }

    #[test]
    fn vacuous_target_gives_empty_packing() {
        let p = vitali_pack(&BoxDomain::unit_cube(2), 0.1, 1.0).unwrap();
        assert!(p.is_empty());
    }

    #[test]
    fn coarse_square_packing() {
        let opts = PackOptions::default().with_resolution(256);
        let p = vitali_pack_with(&BoxDomain::unit_cube(2), 0.25, 0.1, &opts).unwrap();
        assert!(p.is_disjoint());
        assert!(p.residual_measure_estimate <= 0.1);
        assert!((p.residual_measure_estimate - p.analytic_residual).abs() <= p.resolution_error);
        for b in &p.balls {
            assert!(2.0 * b.radius <= 0.25);
            let bx = AxisBox::unit_cube(2);
            assert!(bx.boundary_distance(&b.center) > b.radius);
        }
    }

    #[test]
    fn two_components_stay_separate() {
        let a = AxisBox::unit_cube(2);
        let b = AxisBox::from_bounds(&[2.0, 0.0], &[3.0, 1.0]).unwrap();
        let dom = BoxDomain::new(alloc::vec![a.clone(), b.clone()]).unwrap();
        let opts = PackOptions::default().with_resolution(256);
        let p = vitali_pack_with(&dom, 0.3, 0.3, &opts).unwrap();
        assert!(p.residual_measure_estimate <= 0.3);
        for ball in &p.balls {
            let inside_a = a.boundary_distance(&ball.center) > ball.radius;
            let inside_b = b.boundary_distance(&ball.center) > ball.radius;
            assert!(inside_a ^ inside_b);
        }
    }

    #[test]
    fn masked_disk_domain() {
        let mask: crate::kernel::Mask =
            alloc::sync::Arc::new(|x: &[f64]| (x[0] - 0.5).powi(2) + (x[1] - 0.5).powi(2) < 0.16);
        let dom = BoxDomain::unit_cube(2).with_mask(mask);
        let opts = PackOptions::default().with_resolution(256);
        let p = vitali_pack_with(&dom, 0.2, 0.1, &opts).unwrap();
        for b in &p.balls {
            assert!(dist2(&b.center, &[0.5, 0.5]).sqrt() + b.radius <= 0.4 + 0.01 * b.radius);
        }
    }

    #[test]
    fn budget_error_reported() {
        let opts = PackOptions {
            resolution: Some(64),
            max_balls: 3,
            max_level: 11,
        };
        let r = vitali_pack_with(&BoxDomain::unit_cube(2), 0.1, 0.05, &opts);
        assert!(matches!(r, Err(Error::Budget(_))));
    }
}
