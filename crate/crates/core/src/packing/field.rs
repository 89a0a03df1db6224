//! SO(d)-valued fields on a domain and their dyadic piecewise-constant samples.

use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
#[cfg(not(any(feature = "std", test)))]
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{domain_err, Error, Result};
use crate::kernel::{lp_norm_nd, AxisBox, BoxDomain, Exponent, Hint, Interval, LpResult, NdOptions};
use crate::twist::SOdMatrix;

/// Writes the row-major matrix `H(x)`.
pub type FieldFn = Arc<dyn Fn(&[f64], &mut [f64]) + Send + Sync>;

#[derive(Clone)]
enum Kind {
    ClosedForm(FieldFn),
    /// Regular grid of `counts[k]` cells per axis on each domain box.
    Grid {
        counts: Vec<usize>,
        /// Row-major matrices, box by box, cells in row-major order.
        values: Vec<Vec<f64>>,
    },
    /// Arbitrary disjoint cells; points in no cell map to the identity.
    Table {
        cells: Vec<AxisBox>,
        values: Vec<Vec<f64>>,
    },
}

#[derive(Clone)]
pub struct RotationField {
    domain: BoxDomain,
    d: usize,
    kind: Kind,
}

impl fmt::Debug for RotationField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kind = match &self.kind {
            Kind::ClosedForm(_) => "closed-form",
            Kind::Grid { .. } => "dyadic",
            Kind::Table { .. } => "table",
        };
        f.debug_struct("RotationField")
            .field("d", &self.d)
            .field("kind", &kind)
            .finish()
    }
}

impl RotationField {
    /// Closed-form field, spot-checked for membership in SO(d) on a small grid per box.
    pub fn closed_form(domain: BoxDomain, f: FieldFn) -> Result<Self> {
        let d = domain.dim();
        let mut buf = vec![0.0; d * d];
        for b in domain.boxes() {
            let mut x = vec![0.0; d];
            let mut bad = None;
            crate::kernel::domain::for_each_grid_point(b, 3, &mut x, |p| {
                if bad.is_some() {
                    return;
                }
                f(p, &mut buf);
                if let Err(e) = SOdMatrix::from_row_slice(d, &buf) {
                    bad = Some(e);
                }
            });
            if let Some(e) = bad {
                return Err(e);
            }
        }
        Ok(Self {
            domain,
            d,
            kind: Kind::ClosedForm(f),
        })
    }

    /// `x ↦ R(angle(x))` on a planar domain.
    pub fn planar(domain: BoxDomain, angle: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> Result<Self> {
        if domain.dim() != 2 {
            return Err(domain_err!("planar fields need d = 2"));
        }
        Self::closed_form(
            domain,
            Arc::new(move |x, out| {
                let (s, c) = angle(x).sin_cos();
                out.copy_from_slice(&[c, -s, s, c]);
            }),
        )
    }

    pub fn constant(domain: BoxDomain, h: &SOdMatrix) -> Result<Self> {
        if h.dim() != domain.dim() {
            return Err(Error::DimensionMismatch {
                expected: domain.dim(),
                got: h.dim(),
            });
        }
        let v = h.row_major();
        Self::closed_form(domain, Arc::new(move |_, out| out.copy_from_slice(&v)))
    }

    /// Piecewise-constant field on explicit interior-disjoint cells.
    pub fn table(domain: BoxDomain, cells: Vec<AxisBox>, values: Vec<SOdMatrix>) -> Result<Self> {
        let d = domain.dim();
        if cells.len() != values.len() {
            return Err(domain_err!("{} cells but {} matrices", cells.len(), values.len()));
        }
        for (c, v) in cells.iter().zip(&values) {
            if c.dim() != d || v.dim() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    got: if c.dim() != d { c.dim() } else { v.dim() },
                });
            }
        }
        for (i, a) in cells.iter().enumerate() {
            if cells[i + 1..].iter().any(|b| a.intersect(b).is_some()) {
                return Err(domain_err!("table cells must be interior-disjoint"));
            }
        }
        Ok(Self {
            domain,
            d,
            kind: Kind::Table {
                cells,
                values: values.iter().map(SOdMatrix::row_major).collect(),
            },
        })
    }

    pub fn domain(&self) -> &BoxDomain {
        &self.domain
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn is_piecewise_constant(&self) -> bool {
        !matches!(self.kind, Kind::ClosedForm(_))
    }

    /// Row-major `H(x)`.
    pub fn eval_into(&self, x: &[f64], out: &mut [f64]) {
        match &self.kind {
            Kind::ClosedForm(f) => f(x, out),
            Kind::Grid { counts, values } => match self.grid_cell(counts, x) {
                Some(i) => out.copy_from_slice(&values[i]),
                None => crate::map::identity_into(self.d, out),
            },
            Kind::Table { cells, values } => match cells.iter().position(|c| c.contains(x)) {
                Some(i) => out.copy_from_slice(&values[i]),
                None => crate::map::identity_into(self.d, out),
            },
        }
    }

    pub fn eval(&self, x: &[f64]) -> Result<SOdMatrix> {
        let mut out = vec![0.0; self.d * self.d];
        self.eval_into(x, &mut out);
        SOdMatrix::from_row_slice(self.d, &out)
    }

    fn grid_cell(&self, counts: &[usize], x: &[f64]) -> Option<usize> {
        let per_box: usize = counts.iter().product();
        for (bi, b) in self.domain.boxes().iter().enumerate() {
            if !b.contains(x) {
                continue;
            }
            let mut flat = 0;
            for k in 0..self.d {
                let iv = b.axes[k];
                let i = (((x[k] - iv.lo) / iv.length() * counts[k] as f64) as usize).min(counts[k] - 1);
                flat = flat * counts[k] + i;
            }
            return Some(bi * per_box + flat);
        }
        None
    }
}

/// `H_n` together with its cells, sample points and `‖H_n - H‖_1`.
#[derive(Debug, Clone)]
pub struct DyadicSample {
    pub field: RotationField,
    pub level: u32,
    pub cells: Vec<AxisBox>,
    pub values: Vec<SOdMatrix>,
    /// `None` for cells with no sample point in the domain (left to the identity).
    pub points: Vec<Option<Vec<f64>>>,
    pub skipped: Vec<usize>,
    /// Max over entries of `‖(H_n - H)_ij‖_1`.
    pub l1_error: LpResult,
}

impl DyadicSample {
    /// Cell faces, for quadrature refinement.
    pub fn face_hints(&self) -> Vec<Hint> {
        let mut out: Vec<Hint> = Vec::new();
        for c in &self.cells {
            for (k, iv) in c.axes.iter().enumerate() {
                for at in [iv.lo, iv.hi] {
                    let h = Hint::Plane { axis: k, at };
                    if !out.contains(&h) {
                        out.push(h);
                    }
                }
            }
        }
        out
    }
}

/// Bisections per axis for `level` cyclic bisections.
pub fn splits_per_axis(level: u32, d: usize) -> Vec<usize> {
    (0..d)
        .map(|k| {
            let times = (level as usize + d - 1 - k) / d;
            1usize << times
        })
        .collect()
}

/// Partition each domain box into `2^level` cells by cyclic axis bisection
/// and sample `H` at one interior point of each cell.
pub fn dyadic_rotation_sample(h: &RotationField, level: u32, opts: &NdOptions) -> Result<DyadicSample> {
    let d = h.d;
    let dom = &h.domain;
    let counts = splits_per_axis(level, d);
    let per_box: usize = counts.iter().product();
    let mut cells = Vec::with_capacity(per_box * dom.boxes().len());
    let mut values = Vec::with_capacity(cells.capacity());
    let mut rows = Vec::with_capacity(cells.capacity());
    let mut points = Vec::with_capacity(cells.capacity());
    let mut skipped = Vec::new();
    let mut buf = vec![0.0; d * d];
    for b in dom.boxes() {
        for flat in 0..per_box {
            let mut rem = flat;
            let mut axes = vec![Interval { lo: 0.0, hi: 0.0 }; d];
            for k in (0..d).rev() {
                let i = rem % counts[k];
                rem /= counts[k];
                let iv = b.axes[k];
                let w = iv.length() / counts[k] as f64;
                axes[k] = Interval {
                    lo: iv.lo + i as f64 * w,
                    hi: if i + 1 == counts[k] {
                        iv.hi
                    } else {
                        iv.lo + (i + 1) as f64 * w
                    },
                };
            }
            let cell = AxisBox { axes };
            let pt = sample_point(dom, &cell);
            let m = match &pt {
                Some(x) => {
                    h.eval_into(x, &mut buf);
                    SOdMatrix::from_row_slice(d, &buf)?
                }
                None => {
                    skipped.push(cells.len());
                    SOdMatrix::identity(d)
                }
            };
            rows.push(m.row_major());
            values.push(m);
            points.push(pt);
            cells.push(cell);
        }
    }
    let field = RotationField {
        domain: dom.clone(),
        d,
        kind: Kind::Grid { counts, values: rows },
    };
    let mut sample = DyadicSample {
        field,
        level,
        cells,
        values,
        points,
        skipped,
        l1_error: LpResult::zero(Exponent::new(1.0)?),
    };
    {
        let mut o = opts.clone();
        o.hints.extend(sample.face_hints());
        let hn = &sample.field;
        let g = |x: &[f64], out: &mut [f64]| {
            let mut a = [0.0; crate::map::MAX_DIM * crate::map::MAX_DIM];
            hn.eval_into(x, out);
            h.eval_into(x, &mut a[..d * d]);
            for (v, w) in out.iter_mut().zip(&a[..d * d]) {
                *v -= w;
            }
        };
        sample.l1_error = lp_norm_nd(&g, d * d, dom, Exponent::new(1.0)?, &o)?;
    }
    Ok(sample)
}

/// Cell center if it lies in the domain, else the first grid midpoint that does.
fn sample_point(dom: &BoxDomain, cell: &AxisBox) -> Option<Vec<f64>> {
    let c = cell.center();
    if dom.contains(&c) {
        return Some(c);
    }
    let mut x = vec![0.0; cell.dim()];
    let mut res = 2;
    while res <= 64 {
        let mut found = None;
        crate::kernel::domain::for_each_grid_point(cell, res, &mut x, |p| {
            if found.is_none() && dom.contains(p) {
                found = Some(p.to_vec());
            }
        });
        if found.is_some() {
            return found;
        }
        res *= 2;
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use core::f64::consts::PI;

    fn opts() -> NdOptions {
        NdOptions::default().with_cells(128)
    }

    #[test]
    fn cyclic_splits() {
        assert_eq!(splits_per_axis(0, 2), vec![1, 1]);
        assert_eq!(splits_per_axis(1, 2), vec![2, 1]);
        assert_eq!(splits_per_axis(5, 2), vec![8, 4]);
        assert_eq!(splits_per_axis(4, 3), vec![4, 2, 2]);
    }

    #[test]
    fn constant_field_is_exact() {
        let h = SOdMatrix::rotation2(0.7);
        let f = RotationField::constant(BoxDomain::unit_cube(2), &h).unwrap();
        let s = dyadic_rotation_sample(&f, 3, &opts()).unwrap();
        assert_eq!(s.cells.len(), 8);
        assert!(s.l1_error.value < 1e-15);
        assert!(s.values.iter().all(|v| v == &h));
    }

    #[test]
    fn rotating_field_error_decreases() {
        let f = RotationField::planar(BoxDomain::unit_cube(2), |x| PI * x[0]).unwrap();
        let mut prev = f64::INFINITY;
        for n in [2, 4, 6] {
            let s = dyadic_rotation_sample(&f, n, &opts()).unwrap();
            let cols = splits_per_axis(n, 2)[0] as f64;
            // |R(a) - R(b)| entries are at most |a - b|, here π|x₁ - c| per cell
            let lip_bound = PI / (4.0 * cols);
            assert!(
                s.l1_error.value <= lip_bound + 1e-9,
                "{} > {lip_bound}",
                s.l1_error.value
            );
            assert!(s.l1_error.value < prev);
            prev = s.l1_error.value;
        }
    }

    #[test]
    fn checkerboard_aligned_is_exact() {
        let f = RotationField::planar(BoxDomain::unit_cube(2), |x| {
            let i = (x[0] * 2.0).floor().min(1.0) as i32 + (x[1] * 2.0).floor().min(1.0) as i32;
            if i % 2 == 0 {
                0.0
            } else {
                PI / 2.0
            }
        })
        .unwrap();
        let s = dyadic_rotation_sample(&f, 4, &opts()).unwrap();
        assert!(s.l1_error.value < 1e-12, "{}", s.l1_error.value);
        let m = s.field.eval(&[0.7, 0.2]).unwrap();
        assert_relative_eq!(m.matrix()[(1, 0)], 1.0, epsilon = 1e-15);
    }

    #[test]
    fn rejects_non_rotation_fields() {
        let bad = RotationField::closed_form(
            BoxDomain::unit_cube(2),
            Arc::new(|_, out: &mut [f64]| out.copy_from_slice(&[2.0, 0.0, 0.0, 0.5])),
        );
        assert!(bad.is_err());
    }
}
