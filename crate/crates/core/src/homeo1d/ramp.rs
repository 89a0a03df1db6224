//! Increasing ramps `g: [0, a] -> [0, b]` used inside staircase cells.

#[cfg(not(any(feature = "std", test)))]
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{domain_err, Result};
use crate::twist::jump::{jump_eval, jump_inverse};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RampKind {
    /// `g(x) = (b/a) x`.
    Linear,
    /// Cubic smoothstep with `g'(0) = g'(a) = 0`.
    Polynomial,
    /// `g(x) = b J(1 - x/a)`, flat to all orders at both ends.
    SmoothJump,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RampSpec {
    pub kind: RampKind,
    pub a: f64,
    pub b: f64,
}

impl RampSpec {
    pub fn new(kind: RampKind, a: f64, b: f64) -> Result<Self> {
        if !(a > 0.0 && a.is_finite()) || !(b > 0.0 && b.is_finite()) {
            return Err(domain_err!("ramp needs a > 0 and b > 0, got a={a} b={b}"));
        }
        Ok(Self { kind, a, b })
    }

    /// `g(x)`, clamped to `[0, b]` outside `[0, a]`.
    pub fn eval(&self, x: f64) -> f64 {
        let s = x / self.a;
        if s <= 0.0 {
            return 0.0;
        }
        if s >= 1.0 {
            return self.b;
        }
        match self.kind {
            RampKind::Linear => self.b * s,
            RampKind::Polynomial => self.b * s * s * (3.0 - 2.0 * s),
            RampKind::SmoothJump => self.b * jump_eval(1.0 - s).0,
        }
    }

    /// `g'(x)`, zero outside `[0, a]`.
    pub fn deriv(&self, x: f64) -> f64 {
        let s = x / self.a;
        let slope = self.b / self.a;
        if !(0.0..=1.0).contains(&s) {
            return 0.0;
        }
        match self.kind {
            RampKind::Linear => slope,
            RampKind::Polynomial => slope * 6.0 * s * (1.0 - s),
            RampKind::SmoothJump => -slope * jump_eval(1.0 - s).1,
        }
    }

    /// `g^{-1}(v)` for `v` in `[0, b]`.
    pub fn inverse(&self, v: f64) -> f64 {
        let w = v / self.b;
        if w <= 0.0 {
            return 0.0;
        }
        if w >= 1.0 {
            return self.a;
        }
        let s = match self.kind {
            RampKind::Linear => w,
            RampKind::Polynomial => {
                let guess = 0.5 - ((1.0 - 2.0 * w).asin() / 3.0).sin();
                polish_smoothstep(w, guess)
            }
            RampKind::SmoothJump => 1.0 - jump_inverse(w),
        };
        self.a * s
    }
}

/// Newton steps on `3s^2 - 2s^3 = w`, bracketed in `[0, 1]`.
fn polish_smoothstep(w: f64, guess: f64) -> f64 {
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    let mut s = guess.clamp(0.0, 1.0);
    if w < 1e-8 {
        s = (w / 3.0).sqrt();
    } else if w > 1.0 - 1e-8 {
        s = 1.0 - ((1.0 - w) / 3.0).sqrt();
    }
    for _ in 0..60 {
        let r = s * s * (3.0 - 2.0 * s) - w;
        if r > 0.0 {
            hi = s;
        } else {
            lo = s;
        }
        let d = 6.0 * s * (1.0 - s);
        let mut next = if d > 0.0 { s - r / d } else { 0.5 * (lo + hi) };
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        if (next - s).abs() <= 1e-17 * s.max(1e-300) || hi - lo <= 1e-17 {
            return next;
        }
        s = next;
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn polynomial_ramp_matches_closed_form() {
        let g = RampSpec::new(RampKind::Polynomial, 1.0 / 9.0, 2.0 / 9.0).unwrap();
        for i in 0..=20 {
            let x = i as f64 / 180.0;
            assert_relative_eq!(g.eval(x), 54.0 * x * x * (1.0 - 6.0 * x), epsilon = 1e-15);
        }
        assert_relative_eq!(g.eval(1.0 / 9.0), 2.0 / 9.0, epsilon = 1e-16);
        assert_eq!(g.deriv(0.0), 0.0);
        assert!(g.deriv(1.0 / 9.0).abs() < 1e-14);
    }

    #[test]
    fn smooth_ramp_is_symmetric() {
        let g = RampSpec::new(RampKind::SmoothJump, 0.3, 0.7).unwrap();
        assert_relative_eq!(g.eval(0.15), 0.35, epsilon = 1e-15);
        assert_eq!(g.deriv(0.0), 0.0);
        assert_eq!(g.deriv(0.3), 0.0);
    }

    #[test]
    fn inverses_round_trip() {
        for kind in [RampKind::Linear, RampKind::Polynomial, RampKind::SmoothJump] {
            let g = RampSpec::new(kind, 0.01, 0.09).unwrap();
            for i in 0..=100 {
                let v = 0.09 * i as f64 / 100.0;
                assert_relative_eq!(g.eval(g.inverse(v)), v, epsilon = 1e-15);
            }
        }
        let g = RampSpec::new(RampKind::Polynomial, 0.01, 0.09).unwrap();
        for i in 1..100 {
            let x = 0.01 * i as f64 / 100.0;
            assert_relative_eq!(g.inverse(g.eval(x)), x, epsilon = 1e-12);
        }
    }

    #[test]
    fn rejects_nonpositive_sizes() {
        assert!(RampSpec::new(RampKind::Linear, 0.0, 1.0).is_err());
        assert!(RampSpec::new(RampKind::Linear, 1.0, -1.0).is_err());
    }
}
