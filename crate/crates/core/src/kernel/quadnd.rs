//! Tensor-product midpoint quadrature of matrix-valued integrands on box unions.
//!
//! Known discontinuity or fast-variation surfaces are passed as [`Hint`]s.
//! Grid cells crossed by a hint surface are subdivided. In two dimensions an
//! annulus hint is integrated in polar coordinates over its whole disk and the
//! grid skips every point inside the disk, so a thin shell costs a fixed number
//! of radial panels regardless of its thickness.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;
#[cfg(not(any(feature = "std", test)))]
#[allow(unused_imports)]
use num_traits::Float;

use super::domain::{AxisBox, BoxDomain, Exponent};
use super::quad1d::{abs_pow, lp_from_power};
use super::LpResult;
use crate::error::{domain_err, Error, Result};

const GL5_NODES: [f64; 5] = [
    -0.906_179_845_938_664,
    -0.538_469_310_105_683,
    0.0,
    0.538_469_310_105_683,
    0.906_179_845_938_664,
];
const GL5_WEIGHTS: [f64; 5] = [
    0.236_926_885_056_189_1,
    0.478_628_670_499_366_5,
    0.568_888_888_888_888_9,
    0.478_628_670_499_366_5,
    0.236_926_885_056_189_1,
];

/// Geometry where the integrand is non-smooth or varies quickly.
#[derive(Debug, Clone, PartialEq)]
pub enum Hint {
    /// Ball of radius `outer` around `center`; the integrand varies rapidly on
    /// the shell `inner <= |x - center| <= outer` and is smooth elsewhere.
    Annulus { center: Vec<f64>, inner: f64, outer: f64 },
    /// Hyperplane `x[axis] = at`.
    Plane { axis: usize, at: f64 },
}

/// Quadrature resolution settings for [`lp_norm_nd`].
#[derive(Debug, Clone)]
pub struct NdOptions {
    /// Midpoint cells per axis per box.
    pub cells_per_axis: usize,
    /// Subdivisions per axis for cells crossed by a hint surface.
    pub max_refine: usize,
    /// Radial Gauss panels on `[0, inner]` for polar disks.
    pub polar_core_panels: usize,
    /// Radial Gauss panels on `[inner, outer]` for polar disks.
    pub polar_shell_panels: usize,
    /// Uniform angular nodes for polar disks.
    pub polar_angles: usize,
    /// Also integrate at half resolution and report the difference as error.
    pub richardson: bool,
    pub hints: Vec<Hint>,
}

impl Default for NdOptions {
    fn default() -> Self {
        Self {
            cells_per_axis: 256,
            max_refine: 8,
            polar_core_panels: 4,
            polar_shell_panels: 16,
            polar_angles: 64,
            richardson: true,
            hints: Vec::new(),
        }
    }
}

impl NdOptions {
    pub fn with_cells(mut self, n: usize) -> Self {
        self.cells_per_axis = n;
        self
    }

    pub fn with_hints(mut self, hints: Vec<Hint>) -> Self {
        self.hints = hints;
        self
    }
}

/// Matrix-valued integrand: writes `entries` values at `x`.
pub type MatrixIntegrand<'a> = dyn Fn(&[f64], &mut [f64]) + Sync + 'a;

/// Max over entries of `(∫_Ω |g_ij|^p)^{1/p}`.
pub fn lp_norm_nd(
    g: &MatrixIntegrand<'_>,
    entries: usize,
    dom: &BoxDomain,
    p: Exponent,
    opts: &NdOptions,
) -> Result<LpResult> {
    let all = lp_entries_nd(g, entries, dom, p, opts)?;
    Ok(max_entry(&all))
}

/// Entry achieving the largest quasi-norm, error taken as the max over entries.
pub fn max_entry(all: &[LpResult]) -> LpResult {
    let mut best = all[0];
    let mut err = 0.0f64;
    let mut perr = 0.0f64;
    for r in all {
        err = err.max(r.quad_error_estimate);
        perr = perr.max(r.p_power_error);
        if r.value > best.value {
            best = *r;
        }
    }
    best.quad_error_estimate = err;
    best.p_power_error = perr;
    best
}

/// Per-entry quasi-norms, row-major.
pub fn lp_entries_nd(
    g: &MatrixIntegrand<'_>,
    entries: usize,
    dom: &BoxDomain,
    p: Exponent,
    opts: &NdOptions,
) -> Result<Vec<LpResult>> {
    let fine = power_integrals(g, entries, dom, p.value(), opts, 1)?;
    let coarse = if opts.richardson && opts.cells_per_axis >= 2 {
        Some(power_integrals(g, entries, dom, p.value(), opts, 2)?)
    } else {
        None
    };
    Ok((0..entries)
        .map(|e| {
            let err = coarse.as_ref().map_or(0.0, |c| (c[e] - fine[e]).abs());
            lp_from_power(fine[e], err, p, true)
        })
        .collect())
}

/// Per-entry `∫_Ω |g_ij|^p` at resolution divided by `coarsen`.
pub fn power_integrals(
    g: &MatrixIntegrand<'_>,
    entries: usize,
    dom: &BoxDomain,
    p: f64,
    opts: &NdOptions,
    coarsen: usize,
) -> Result<Vec<f64>> {
    let d = dom.dim();
    if entries == 0 {
        return Err(domain_err!("integrand must have at least one entry"));
    }
    for h in &opts.hints {
        match h {
            Hint::Annulus { center, inner, outer } => {
                if center.len() != d {
                    return Err(Error::DimensionMismatch {
                        expected: d,
                        got: center.len(),
                    });
                }
                if !(*inner >= 0.0 && inner < outer) {
                    return Err(domain_err!("annulus needs 0 <= inner < outer"));
                }
            }
            Hint::Plane { axis, .. } => {
                if *axis >= d {
                    return Err(Error::DimensionMismatch {
                        expected: d,
                        got: *axis + 1,
                    });
                }
            }
        }
    }
    let n = (opts.cells_per_axis / coarsen).max(1);
    let polar = d == 2;
    let index = HintIndex::build(dom, &opts.hints, n);
    let mut total = vec![0.0; entries];
    for b in dom.boxes() {
        let rows = grid_rows(g, entries, dom, b, p, n, opts, &index, polar)?;
        for row in rows {
            for (t, v) in total.iter_mut().zip(row) {
                *t += v;
            }
        }
    }
    if polar {
        let shell = (opts.polar_shell_panels / coarsen).max(1);
        let core = (opts.polar_core_panels / coarsen).max(1);
        let angles = (opts.polar_angles / coarsen).max(4);
        let disks: Vec<&Hint> = opts
            .hints
            .iter()
            .filter(|h| matches!(h, Hint::Annulus { .. }))
            .collect();
        let parts = map_collect(&disks, |h| polar_disk(g, entries, dom, p, h, core, shell, angles))?;
        for part in parts {
            for (t, v) in total.iter_mut().zip(part) {
                *t += v;
            }
        }
    }
    Ok(total)
}

#[cfg(feature = "parallel")]
fn map_collect<T: Sync, R: Send>(items: &[T], f: impl Fn(&T) -> Result<R> + Sync + Send) -> Result<Vec<R>> {
    use rayon::prelude::*;
    items.par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
fn map_collect<T, R>(items: &[T], f: impl Fn(&T) -> Result<R>) -> Result<Vec<R>> {
    items.iter().map(f).collect()
}

#[allow(clippy::too_many_arguments)]
fn polar_disk(
    g: &MatrixIntegrand<'_>,
    entries: usize,
    dom: &BoxDomain,
    p: f64,
    hint: &Hint,
    core_panels: usize,
    shell_panels: usize,
    angles: usize,
) -> Result<Vec<f64>> {
    let Hint::Annulus { center, inner, outer } = hint else {
        return Ok(vec![0.0; entries]);
    };
    let mut acc = vec![0.0; entries];
    let mut buf = vec![0.0; entries];
    let mut radial: Vec<(f64, f64)> = Vec::new();
    let mut push_panels = |lo: f64, hi: f64, k: usize| {
        let w = (hi - lo) / k as f64;
        for j in 0..k {
            let a = lo + j as f64 * w;
            for (t, wt) in GL5_NODES.iter().zip(GL5_WEIGHTS.iter()) {
                let rho = a + 0.5 * w * (1.0 + t);
                radial.push((rho, 0.5 * w * wt * rho));
            }
        }
    };
    if *inner > 0.0 {
        push_panels(0.0, *inner, core_panels);
    }
    push_panels(*inner, *outer, shell_panels);
    let dphi = 2.0 * PI / angles as f64;
    let trig: Vec<(f64, f64)> = (0..angles)
        .map(|m| {
            let phi = (m as f64 + 0.5) * dphi;
            (phi.cos(), phi.sin())
        })
        .collect();
    let mut x = [0.0; 2];
    let masked = dom.is_masked();
    for &(rho, wr) in &radial {
        for &(c, s) in &trig {
            x[0] = center[0] + rho * c;
            x[1] = center[1] + rho * s;
            if masked && !dom.contains(&x) {
                continue;
            }
            g(&x, &mut buf);
            accumulate(&mut acc, &buf, wr * dphi, p, &x)?;
        }
    }
    Ok(acc)
}

#[inline]
fn accumulate(acc: &mut [f64], buf: &[f64], w: f64, p: f64, x: &[f64]) -> Result<()> {
    for (a, &v) in acc.iter_mut().zip(buf) {
        if !v.is_finite() {
            return Err(Error::EvaluationFailure { at: x[0] });
        }
        *a += w * abs_pow(v, p);
    }
    Ok(())
}

/// Uniform bucket grid over the bounding box, listing annulus hints whose
/// padded bounding boxes overlap each bucket.
struct HintIndex<'h> {
    lo: Vec<f64>,
    width: Vec<f64>,
    per_axis: usize,
    buckets: Vec<Vec<&'h Hint>>,
    planes: Vec<&'h Hint>,
}

impl<'h> HintIndex<'h> {
    fn build(dom: &BoxDomain, hints: &'h [Hint], n: usize) -> Self {
        let bb = dom.bounding_box();
        let d = bb.dim();
        let per_axis: usize = match d {
            1 => 1024,
            2 => 64,
            3 => 16,
            _ => 4,
        };
        let lo: Vec<f64> = bb.axes.iter().map(|iv| iv.lo).collect();
        let width: Vec<f64> = bb.axes.iter().map(|iv| iv.length() / per_axis as f64).collect();
        let pad = bb.max_side() / n as f64 * (d as f64).sqrt();
        let mut buckets: Vec<Vec<&Hint>> = vec![Vec::new(); per_axis.pow(d as u32)];
        let mut planes = Vec::new();
        for h in hints {
            match h {
                Hint::Plane { .. } => planes.push(h),
                Hint::Annulus { center, outer, .. } => {
                    let mut lo_idx = vec![0usize; d];
                    let mut hi_idx = vec![0usize; d];
                    for k in 0..d {
                        let a = ((center[k] - outer - pad - lo[k]) / width[k]).floor();
                        let b = ((center[k] + outer + pad - lo[k]) / width[k]).floor();
                        lo_idx[k] = a.max(0.0).min((per_axis - 1) as f64) as usize;
                        hi_idx[k] = b.max(0.0).min((per_axis - 1) as f64) as usize;
                    }
                    odometer(&lo_idx, &hi_idx, |idx| {
                        let flat = idx.iter().fold(0, |acc, &i| acc * per_axis + i);
                        buckets[flat].push(h);
                    });
                }
            }
        }
        Self {
            lo,
            width,
            per_axis,
            buckets,
            planes,
        }
    }

    fn near(&self, x: &[f64]) -> &[&'h Hint] {
        let mut flat = 0;
        for k in 0..x.len() {
            let i = ((x[k] - self.lo[k]) / self.width[k]).floor();
            let i = i.max(0.0).min((self.per_axis - 1) as f64) as usize;
            flat = flat * self.per_axis + i;
        }
        &self.buckets[flat]
    }
}

/// Visits every multi-index between `lo` and `hi` inclusive, last axis fastest.
fn odometer(lo: &[usize], hi: &[usize], mut visit: impl FnMut(&[usize])) {
    let mut idx = lo.to_vec();
    loop {
        visit(&idx);
        let mut k = idx.len();
        loop {
            if k == 0 {
                return;
            }
            k -= 1;
            if idx[k] < hi[k] {
                idx[k] += 1;
                break;
            }
            idx[k] = lo[k];
        }
    }
}

enum CellKind {
    Plain,
    Skip,
    Refine(usize),
}

fn classify(x: &[f64], half: &[f64], index: &HintIndex<'_>, polar: bool, max_refine: usize) -> CellKind {
    let diag = half.iter().map(|h| h * h).sum::<f64>().sqrt();
    let mut refine = 0usize;
    for h in index.near(x) {
        if let Hint::Annulus { center, inner, outer } = h {
            let dist = x.iter().zip(center).map(|(a, c)| (a - c) * (a - c)).sum::<f64>().sqrt();
            if polar {
                if dist + diag < *outer {
                    return CellKind::Skip;
                }
                if (dist - outer).abs() < diag {
                    refine = max_refine;
                }
            } else if dist + diag > *inner && dist - diag < *outer {
                let cell = 2.0 * half.iter().fold(0.0f64, |m, &h| m.max(h));
                let want = (4.0 * cell / (outer - inner)).ceil() as usize;
                refine = refine.max(want.clamp(2, max_refine));
            }
        }
    }
    for h in &index.planes {
        if let Hint::Plane { axis, at } = h {
            if (x[*axis] - at).abs() < half[*axis] {
                refine = max_refine;
            }
        }
    }
    if refine > 1 {
        CellKind::Refine(refine)
    } else {
        CellKind::Plain
    }
}

fn inside_disk(x: &[f64], index: &HintIndex<'_>) -> bool {
    index.near(x).iter().any(|h| match h {
        Hint::Annulus { center, outer, .. } => {
            x.iter().zip(center).map(|(a, c)| (a - c) * (a - c)).sum::<f64>() < outer * outer
        }
        Hint::Plane { .. } => false,
    })
}

#[allow(clippy::too_many_arguments)]
fn grid_rows(
    g: &MatrixIntegrand<'_>,
    entries: usize,
    dom: &BoxDomain,
    b: &AxisBox,
    p: f64,
    n: usize,
    opts: &NdOptions,
    index: &HintIndex<'_>,
    polar: bool,
) -> Result<Vec<Vec<f64>>> {
    let rows: Vec<usize> = (0..n).collect();
    map_collect(&rows, |&i0| grid_row(g, entries, dom, b, p, n, opts, index, polar, i0))
}

#[allow(clippy::too_many_arguments)]
fn grid_row(
    g: &MatrixIntegrand<'_>,
    entries: usize,
    dom: &BoxDomain,
    b: &AxisBox,
    p: f64,
    n: usize,
    opts: &NdOptions,
    index: &HintIndex<'_>,
    polar: bool,
    i0: usize,
) -> Result<Vec<f64>> {
    let d = b.dim();
    let h: Vec<f64> = b.axes.iter().map(|iv| iv.length() / n as f64).collect();
    let half: Vec<f64> = h.iter().map(|v| 0.5 * v).collect();
    let vol: f64 = h.iter().product();
    let masked = dom.is_masked();
    let mut acc = vec![0.0; entries];
    let mut buf = vec![0.0; entries];
    let mut x = vec![0.0; d];
    let mut sub = vec![0.0; d];
    let inner_count = n.pow(d as u32 - 1);
    for flat in 0..inner_count {
        let mut rem = flat;
        for k in (1..d).rev() {
            let idx = rem % n;
            rem /= n;
            x[k] = b.axes[k].lo + (idx as f64 + 0.5) * h[k];
        }
        x[0] = b.axes[0].lo + (i0 as f64 + 0.5) * h[0];
        match classify(&x, &half, index, polar, opts.max_refine) {
            CellKind::Skip => {}
            CellKind::Plain => {
                if masked && !dom.contains(&x) {
                    continue;
                }
                if polar && inside_disk(&x, index) {
                    continue;
                }
                g(&x, &mut buf);
                accumulate(&mut acc, &buf, vol, p, &x)?;
            }
            CellKind::Refine(k) => {
                let subvol = vol / (k as f64).powi(d as i32);
                let total = k.pow(d as u32);
                for sflat in 0..total {
                    let mut r = sflat;
                    for j in (0..d).rev() {
                        let idx = r % k;
                        r /= k;
                        sub[j] = x[j] - half[j] + (idx as f64 + 0.5) * h[j] / k as f64;
                    }
                    if masked && !dom.contains(&sub) {
                        continue;
                    }
                    if polar && inside_disk(&sub, index) {
                        continue;
                    }
                    g(&sub, &mut buf);
                    accumulate(&mut acc, &buf, subvol, p, &sub)?;
                }
            }
        }
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn half() -> Exponent {
        Exponent::half()
    }

    #[test]
    fn identity_matrix_has_unit_norm() {
        let dom = BoxDomain::unit_cube(2);
        let g = |_: &[f64], out: &mut [f64]| {
            out.copy_from_slice(&[1.0, 0.0, 0.0, 1.0]);
        };
        let r = lp_norm_nd(&g, 4, &dom, half(), &NdOptions::default().with_cells(32)).unwrap();
        assert_relative_eq!(r.value, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn zero_integrand_is_zero() {
        let dom = BoxDomain::unit_cube(3);
        let g = |_: &[f64], out: &mut [f64]| out.fill(0.0);
        let r = lp_norm_nd(&g, 9, &dom, half(), &NdOptions::default().with_cells(8)).unwrap();
        assert_eq!(r.value, 0.0);
    }

    #[test]
    fn polar_disk_plus_grid_matches_smooth_integral() {
        // ∫_{(0,1)^2} (x+y) dx dy = 1, with p = 1 and an arbitrary disk hint.
        let dom = BoxDomain::unit_cube(2);
        let g = |x: &[f64], out: &mut [f64]| out[0] = x[0] + x[1];
        let opts = NdOptions::default().with_cells(128).with_hints(vec![Hint::Annulus {
            center: vec![0.4, 0.55],
            inner: 0.1,
            outer: 0.2,
        }]);
        let r = lp_norm_nd(&g, 1, &dom, Exponent::new(1.0).unwrap(), &opts).unwrap();
        assert!((r.value - 1.0).abs() < 2e-3, "{}", r.value);
    }

    #[test]
    fn shell_indicator_uses_polar_rule() {
        // indicator of a thin annulus has measure π(R²−s²)
        let dom = BoxDomain::unit_cube(2);
        let (c, s, rr) = ([0.5, 0.5], 0.2, 0.2001);
        let g = move |x: &[f64], out: &mut [f64]| {
            let r2 = (x[0] - c[0]).powi(2) + (x[1] - c[1]).powi(2);
            out[0] = if r2 >= s * s && r2 <= rr * rr { 1.0 } else { 0.0 };
        };
        let opts = NdOptions::default().with_cells(64).with_hints(vec![Hint::Annulus {
            center: c.to_vec(),
            inner: s,
            outer: rr,
        }]);
        let r = power_integrals(&g, 1, &dom, 1.0, &opts, 1).unwrap();
        let exact = PI * (rr * rr - s * s);
        assert_relative_eq!(r[0], exact, max_relative = 1e-9);
    }

    #[test]
    fn plane_hint_refines_jump() {
        let dom = BoxDomain::unit_cube(2);
        let g = |x: &[f64], out: &mut [f64]| out[0] = if x[0] < 0.3 { 1.0 } else { 0.0 };
        let opts = NdOptions::default()
            .with_cells(10)
            .with_hints(vec![Hint::Plane { axis: 0, at: 0.3 }]);
        let r = power_integrals(&g, 1, &dom, 1.0, &opts, 1).unwrap();
        assert!((r[0] - 0.3).abs() < 0.1 / 8.0 + 1e-12);
    }
}
