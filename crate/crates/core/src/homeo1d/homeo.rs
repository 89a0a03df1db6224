//! Piecewise-smooth increasing homeomorphisms of an interval.

use alloc::sync::Arc;
use alloc::vec::Vec;
use core::fmt;
#[cfg(not(any(feature = "std", test)))]
#[allow(unused_imports)]
use num_traits::Float;

use super::ramp::{RampKind, RampSpec};
use crate::error::{domain_err, Error, Result};
use crate::kernel::Interval;
use crate::map::{weaker, Smoothness, VectorMap, VolumePreservingDiffeo};

/// Default tolerance of numerical inversion.
pub const INVERSE_TOL: f64 = 1e-12;

/// Parameters of the periodic staircase on `(0, 1)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StaircaseParams {
    pub n: usize,
    pub a: f64,
    pub ramp: RampKind,
}

impl StaircaseParams {
    /// `a_n = 1/n^2` with the smooth ramp.
    pub fn new(n: usize) -> Self {
        Self::with_ramp(n, RampKind::SmoothJump)
    }

    /// `a_n = 1/n^2`, except `a_1 = 1/2` so the single-cell case stays valid.
    pub fn with_ramp(n: usize, ramp: RampKind) -> Self {
        let nf = n.max(1) as f64;
        Self {
            n,
            a: (1.0 / (nf * nf)).min(0.5 / nf),
            ramp,
        }
    }

    pub fn b(&self) -> f64 {
        1.0 / self.n as f64 - self.a
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(domain_err!("staircase needs n >= 1"));
        }
        let cell = 1.0 / self.n as f64;
        if !(self.a > 0.0 && self.a < cell) {
            return Err(domain_err!("need 0 < a_n < 1/n, got a_n={} n={}", self.a, self.n));
        }
        Ok(())
    }

    /// `(n a)^{1-p} (n b)^p + (n b)^{1-p} (n a)^p`.
    pub fn derivative_bound_pow(&self, p: f64) -> f64 {
        let na = self.n as f64 * self.a;
        let nb = self.n as f64 * self.b();
        na.powf(1.0 - p) * nb.powf(p) + nb.powf(1.0 - p) * na.powf(p)
    }
}

#[derive(Debug, Clone)]
pub(crate) struct Staircase {
    n: usize,
    a: f64,
    b: f64,
    ramp: RampSpec,
}

impl Staircase {
    /// Cell index `k` with `k/n <= x < (k+1)/n`, and the offset `x - k/n`.
    fn locate(&self, x: f64) -> (usize, f64) {
        let nf = self.n as f64;
        let mut k = (x * nf).floor().max(0.0) as usize;
        if k >= self.n {
            k = self.n - 1;
        }
        while k + 1 < self.n && (k + 1) as f64 / nf <= x {
            k += 1;
        }
        while k > 0 && k as f64 / nf > x {
            k -= 1;
        }
        (k, x - k as f64 / nf)
    }

    fn eval(&self, x: f64) -> f64 {
        if x >= 1.0 {
            return 1.0;
        }
        if x <= 0.0 {
            return 0.0;
        }
        let (k, u) = self.locate(x);
        let base = k as f64 / self.n as f64;
        if u <= self.a {
            base + self.ramp.eval(u)
        } else {
            let r = self.a / self.b;
            base + r * self.ramp.eval(r * (u - self.a)) + self.b
        }
    }

    fn deriv(&self, x: f64) -> f64 {
        let (_, u) = self.locate(x.clamp(0.0, 1.0));
        if u <= self.a {
            self.ramp.deriv(u)
        } else {
            let r = self.a / self.b;
            r * r * self.ramp.deriv(r * (u - self.a))
        }
    }

    fn inverse(&self, y: f64) -> f64 {
        if y >= 1.0 {
            return 1.0;
        }
        if y <= 0.0 {
            return 0.0;
        }
        let (k, v) = self.locate(y);
        let base = k as f64 / self.n as f64;
        if v <= self.b {
            base + self.ramp.inverse(v)
        } else {
            let r = self.a / self.b;
            base + self.a + self.ramp.inverse((v - self.b) / r) / r
        }
    }

    fn breakpoints(&self) -> Vec<f64> {
        let nf = self.n as f64;
        let mut out = Vec::with_capacity(2 * self.n);
        for k in 0..self.n {
            let base = k as f64 / nf;
            if k > 0 {
                out.push(base);
            }
            out.push(base + self.a);
        }
        out
    }
}

pub type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Clone)]
pub(crate) enum Kind {
    Identity,
    Staircase(Staircase),
    /// `c x + (1 - c) f(x)` on the same interval.
    Blend {
        c: f64,
        f: Homeo1D,
    },
    /// Rescaled unit-interval pieces glued along a partition.
    Cells {
        partition: Arc<Vec<f64>>,
        pieces: Arc<Vec<Homeo1D>>,
    },
    /// `outer ∘ inner`.
    Compose {
        outer: Homeo1D,
        inner: Homeo1D,
    },
    /// `f^{-1}`.
    Inverse(Homeo1D),
    Closure {
        f: ScalarFn,
        df: ScalarFn,
        inv: Option<ScalarFn>,
    },
}

/// A strictly increasing, piecewise-smooth homeomorphism of an interval
/// fixing both endpoints.
#[derive(Clone)]
pub struct Homeo1D {
    domain: Interval,
    kind: Arc<Kind>,
    breakpoints: Arc<Vec<f64>>,
    smoothness: Smoothness,
}

impl fmt::Debug for Homeo1D {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = match &*self.kind {
            Kind::Identity => "identity",
            Kind::Staircase(_) => "staircase",
            Kind::Blend { .. } => "blend",
            Kind::Cells { .. } => "cells",
            Kind::Compose { .. } => "compose",
            Kind::Inverse(_) => "inverse",
            Kind::Closure { .. } => "closure",
        };
        f.debug_struct("Homeo1D")
            .field("kind", &tag)
            .field("domain", &self.domain)
            .field("breakpoints", &self.breakpoints.len())
            .field("smoothness", &self.smoothness)
            .finish()
    }
}

impl Homeo1D {
    pub fn identity(domain: Interval) -> Self {
        Self {
            domain,
            kind: Arc::new(Kind::Identity),
            breakpoints: Arc::new(Vec::new()),
            smoothness: Smoothness::CInf,
        }
    }

    /// The staircase `f_n` on `(0, 1)`.
    pub fn staircase(params: StaircaseParams) -> Result<Self> {
        params.validate()?;
        let b = params.b();
        let ramp = RampSpec::new(params.ramp, params.a, b)?;
        let s = Staircase {
            n: params.n,
            a: params.a,
            b,
            ramp,
        };
        let breakpoints = s.breakpoints();
        let smoothness = match params.ramp {
            RampKind::Linear => Smoothness::C1Plus,
            RampKind::Polynomial => Smoothness::C1,
            RampKind::SmoothJump => Smoothness::CInfPerPiece,
        };
        Ok(Self {
            domain: Interval::unit(),
            kind: Arc::new(Kind::Staircase(s)),
            breakpoints: Arc::new(breakpoints),
            smoothness,
        })
    }

    /// A homeomorphism given by closures. `inv` may be omitted, in which case
    /// inversion is numerical.
    pub fn from_fns(
        domain: Interval,
        f: ScalarFn,
        df: ScalarFn,
        inv: Option<ScalarFn>,
        breakpoints: Vec<f64>,
        smoothness: Smoothness,
    ) -> Result<Self> {
        let h = Self {
            domain,
            kind: Arc::new(Kind::Closure { f, df, inv }),
            breakpoints: Arc::new(sorted_interior(domain, breakpoints)),
            smoothness,
        };
        h.check_endpoints()?;
        Ok(h)
    }

    pub(crate) fn blend_raw(c: f64, f: Homeo1D) -> Self {
        Self {
            domain: f.domain,
            breakpoints: f.breakpoints.clone(),
            smoothness: f.smoothness,
            kind: Arc::new(Kind::Blend { c, f }),
        }
    }

    pub(crate) fn cells_raw(partition: Vec<f64>, pieces: Vec<Homeo1D>) -> Self {
        let domain = Interval {
            lo: partition[0],
            hi: *partition.last().unwrap(),
        };
        let mut bps = Vec::new();
        for (i, piece) in pieces.iter().enumerate() {
            let (lo, hi) = (partition[i], partition[i + 1]);
            if i > 0 {
                bps.push(lo);
            }
            for &u in piece.breakpoints.iter() {
                bps.push(lo + (hi - lo) * u);
            }
        }
        let smoothness = if pieces.len() > 1 {
            Smoothness::C1Plus
        } else {
            pieces[0].smoothness
        };
        Self {
            domain,
            kind: Arc::new(Kind::Cells {
                partition: Arc::new(partition),
                pieces: Arc::new(pieces),
            }),
            breakpoints: Arc::new(bps),
            smoothness,
        }
    }

    /// `outer ∘ inner`; domains must coincide.
    pub fn compose(outer: &Homeo1D, inner: &Homeo1D) -> Result<Self> {
        if !same_interval(outer.domain, inner.domain) {
            return Err(domain_err!("composition needs matching domains"));
        }
        let mut bps: Vec<f64> = inner.breakpoints.to_vec();
        bps.extend(outer.breakpoints.iter().map(|&y| inner.inverse(y)));
        Ok(Self {
            domain: inner.domain,
            breakpoints: Arc::new(sorted_interior(inner.domain, bps)),
            smoothness: weaker(outer.smoothness, inner.smoothness),
            kind: Arc::new(Kind::Compose {
                outer: outer.clone(),
                inner: inner.clone(),
            }),
        })
    }

    /// `self^{-1}`.
    pub fn inverted(&self) -> Self {
        if let Kind::Inverse(f) = &*self.kind {
            return f.clone();
        }
        let bps = self.breakpoints.iter().map(|&x| self.eval(x)).collect();
        Self {
            domain: self.domain,
            breakpoints: Arc::new(sorted_interior(self.domain, bps)),
            smoothness: self.smoothness,
            kind: Arc::new(Kind::Inverse(self.clone())),
        }
    }

    pub fn domain(&self) -> Interval {
        self.domain
    }

    /// Sorted interior points where the derivative may fail to be smooth.
    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn smoothness(&self) -> Smoothness {
        self.smoothness
    }

    pub fn is_identity(&self) -> bool {
        matches!(&*self.kind, Kind::Identity)
    }

    pub fn eval(&self, x: f64) -> f64 {
        match &*self.kind {
            Kind::Identity => x,
            Kind::Staircase(s) => s.eval(x),
            Kind::Blend { c, f } => c * x + (1.0 - c) * f.eval(x),
            Kind::Cells { partition, pieces } => {
                let (i, lo, len) = cell_of(partition, x);
                lo + len * pieces[i].eval(((x - lo) / len).clamp(0.0, 1.0))
            }
            Kind::Compose { outer, inner } => outer.eval(inner.eval(x)),
            Kind::Inverse(f) => f.inverse(x),
            Kind::Closure { f, .. } => f(x),
        }
    }

    pub fn deriv(&self, x: f64) -> f64 {
        match &*self.kind {
            Kind::Identity => 1.0,
            Kind::Staircase(s) => s.deriv(x),
            Kind::Blend { c, f } => c + (1.0 - c) * f.deriv(x),
            Kind::Cells { partition, pieces } => {
                let (i, lo, len) = cell_of(partition, x);
                pieces[i].deriv(((x - lo) / len).clamp(0.0, 1.0))
            }
            Kind::Compose { outer, inner } => outer.deriv(inner.eval(x)) * inner.deriv(x),
            Kind::Inverse(f) => 1.0 / f.deriv(f.inverse(x)),
            Kind::Closure { df, .. } => df(x),
        }
    }

    pub fn inverse(&self, y: f64) -> f64 {
        match &*self.kind {
            Kind::Identity => y,
            Kind::Staircase(s) => s.inverse(y),
            Kind::Cells { partition, pieces } => {
                let (i, lo, len) = cell_of(partition, y);
                lo + len * pieces[i].inverse(((y - lo) / len).clamp(0.0, 1.0))
            }
            Kind::Compose { outer, inner } => inner.inverse(outer.inverse(y)),
            Kind::Inverse(f) => f.eval(y),
            Kind::Closure { inv: Some(inv), .. } => inv(y),
            Kind::Blend { .. } | Kind::Closure { inv: None, .. } => self.numeric_inverse(y),
        }
    }

    /// Bracketed Newton inversion: locate the smooth piece by binary search
    /// over breakpoint images, then safeguarded Newton inside it.
    fn numeric_inverse(&self, y: f64) -> f64 {
        let (dlo, dhi) = (self.domain.lo, self.domain.hi);
        if y <= dlo {
            return dlo;
        }
        if y >= dhi {
            return dhi;
        }
        let bps = &self.breakpoints;
        let (mut i, mut j) = (0usize, bps.len());
        while i < j {
            let m = (i + j) / 2;
            if self.eval(bps[m]) <= y {
                i = m + 1;
            } else {
                j = m;
            }
        }
        let mut lo = if i == 0 { dlo } else { bps[i - 1] };
        let mut hi = if i == bps.len() { dhi } else { bps[i] };
        let mut x = 0.5 * (lo + hi);
        for _ in 0..200 {
            let r = self.eval(x) - y;
            if r == 0.0 {
                return x;
            }
            if r > 0.0 {
                hi = x;
            } else {
                lo = x;
            }
            let d = self.deriv(x);
            let mut next = if d > 0.0 && d.is_finite() { x - r / d } else { lo - 1.0 };
            if !(next > lo && next < hi) {
                next = 0.5 * (lo + hi);
            }
            if (next - x).abs() <= 1e-16 * x.abs().max(1.0) || hi - lo <= 4.0 * f64::EPSILON * x.abs().max(1.0) {
                return next;
            }
            x = next;
        }
        x
    }

    /// Checks `f(lo) = lo` and `f(hi) = hi` to round-off.
    pub fn check_endpoints(&self) -> Result<()> {
        let tol = 1e-12 * self.domain.length().max(1.0);
        let (a, b) = (self.eval(self.domain.lo), self.eval(self.domain.hi));
        if (a - self.domain.lo).abs() > tol || (b - self.domain.hi).abs() > tol {
            return Err(domain_err!(
                "homeomorphism must fix the endpoints, got f(lo)={a}, f(hi)={b}"
            ));
        }
        Ok(())
    }

    /// Monotonicity on `samples + 1` equispaced points: values never decrease
    /// beyond round-off,
    /// increase strictly wherever `f' h` exceeds round-off, and every smooth
    /// piece has an image of positive length.
    pub fn check_strictly_increasing(&self, samples: usize) -> Result<()> {
        let iv = self.domain;
        let h = iv.length() / samples.max(1) as f64;
        let mut prev = self.eval(iv.lo);
        for i in 1..=samples {
            let x = if i == samples { iv.hi } else { iv.lo + h * i as f64 };
            let v = self.eval(x);
            let ulps = 8.0 * f64::EPSILON * v.abs().max(1.0);
            let resolvable = self.deriv(x - 0.5 * h) * h > ulps;
            if v < prev - ulps || (resolvable && !(v > prev)) {
                return Err(Error::Degenerate(alloc::format!(
                    "not strictly increasing near x = {x}"
                )));
            }
            prev = v;
        }
        let mut prev = self.eval(iv.lo);
        for &x in self.breakpoints.iter().chain(core::iter::once(&iv.hi)) {
            let v = self.eval(x);
            if !(v > prev) {
                return Err(Error::Degenerate(alloc::format!(
                    "smooth piece ending at x = {x} is mapped to a point"
                )));
            }
            prev = v;
        }
        Ok(())
    }
}

impl VectorMap for Homeo1D {
    fn dim(&self) -> usize {
        1
    }
    fn eval_into(&self, x: &[f64], out: &mut [f64]) {
        out[0] = self.eval(x[0]);
    }
    fn jacobian_into(&self, x: &[f64], jac: &mut [f64]) {
        jac[0] = self.deriv(x[0]);
    }
}

impl VolumePreservingDiffeo for Homeo1D {
    fn inverse_into(&self, y: &[f64], out: &mut [f64]) {
        out[0] = self.inverse(y[0]);
    }
    fn smoothness(&self) -> Smoothness {
        self.smoothness
    }
}

fn cell_of(partition: &[f64], x: f64) -> (usize, f64, f64) {
    let n = partition.len() - 1;
    let i = partition[1..n].partition_point(|&a| a <= x);
    let lo = partition[i];
    (i, lo, partition[i + 1] - lo)
}

fn same_interval(a: Interval, b: Interval) -> bool {
    (a.lo - b.lo).abs() <= 1e-14 && (a.hi - b.hi).abs() <= 1e-14
}

pub(crate) fn sorted_interior(iv: Interval, mut pts: Vec<f64>) -> Vec<f64> {
    pts.retain(|&x| x > iv.lo && x < iv.hi && x.is_finite());
    pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    pts.dedup();
    pts
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn staircase_fixes_grid_points_exactly() {
        for &n in &[1usize, 3, 7, 64] {
            let f = Homeo1D::staircase(StaircaseParams::new(n)).unwrap();
            for k in 0..=n {
                let x = k as f64 / n as f64;
                assert_eq!(f.eval(x), x, "n={n} k={k}");
            }
        }
    }

    #[test]
    fn n3_polynomial_staircase_values() {
        let p = StaircaseParams {
            n: 3,
            a: 1.0 / 9.0,
            ramp: RampKind::Polynomial,
        };
        let f = Homeo1D::staircase(p).unwrap();
        assert_relative_eq!(f.eval(1.0 / 9.0), 2.0 / 9.0, epsilon = 1e-15);
        assert_eq!(f.eval(1.0 / 3.0), 1.0 / 3.0);
        assert_eq!(f.smoothness(), Smoothness::C1);
    }

    #[test]
    fn staircase_inverse_round_trip() {
        let f = Homeo1D::staircase(StaircaseParams::new(16)).unwrap();
        for i in 0..=1000 {
            let y = i as f64 / 1000.0;
            assert_relative_eq!(f.eval(f.inverse(y)), y, epsilon = 1e-12);
        }
        let g = Homeo1D::staircase(StaircaseParams::with_ramp(16, RampKind::Linear)).unwrap();
        for i in 0..=1000 {
            let x = i as f64 / 1000.0;
            assert_relative_eq!(g.inverse(g.eval(x)), x, epsilon = 1e-12);
        }
    }

    #[test]
    fn numeric_inverse_of_blend() {
        let f = Homeo1D::staircase(StaircaseParams::new(8)).unwrap();
        let h = Homeo1D::blend_raw(0.25, f);
        for i in 0..=500 {
            let x = i as f64 / 500.0;
            assert_relative_eq!(h.inverse(h.eval(x)), x, epsilon = 1e-12);
        }
    }

    #[test]
    fn rejects_bad_params() {
        assert!(StaircaseParams {
            n: 0,
            a: 0.1,
            ramp: RampKind::Linear
        }
        .validate()
        .is_err());
        assert!(StaircaseParams {
            n: 2,
            a: 0.5,
            ramp: RampKind::Linear
        }
        .validate()
        .is_err());
    }
}
