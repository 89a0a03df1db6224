//! The smooth jump function: 1 on (-inf, 0], 0 on [1, inf), strictly
//! decreasing in between, flat to all orders at both ends.

#[cfg(not(any(feature = "std", test)))]
#[allow(unused_imports)]
use num_traits::Float;

/// Distance from 0 and 1 below which the exact branch values are returned.
pub const BRANCH_CUTOFF: f64 = 1e-12;

/// `(J(t), J'(t))` with `J(t) = 1 / (1 + e^ψ)`, `ψ = 1/(1-t) - 1/t`.
pub fn jump_eval(t: f64) -> (f64, f64) {
    if t <= BRANCH_CUTOFF {
        return (1.0, 0.0);
    }
    if t >= 1.0 - BRANCH_CUTOFF {
        return (0.0, 0.0);
    }
    let s = 1.0 - t;
    let psi = 1.0 / s - 1.0 / t;
    let dpsi = 1.0 / (s * s) + 1.0 / (t * t);
    let j = if psi > 0.0 {
        let e = (-psi).exp();
        e / (1.0 + e)
    } else {
        1.0 / (1.0 + psi.exp())
    };
    let c = (0.5 * psi).cosh();
    let dj = if c.is_finite() { -dpsi / (4.0 * c * c) } else { 0.0 };
    (j, dj)
}

/// `J(t)` alone.
pub fn jump(t: f64) -> f64 {
    jump_eval(t).0
}

/// Solves `J(t) = w` for `w` in `[0, 1]`.
pub fn jump_inverse(w: f64) -> f64 {
    if w >= 1.0 {
        return 0.0;
    }
    if w <= 0.0 {
        return 1.0;
    }
    // J(1 - u) = w  <=>  1/u - 1/(1-u) = ln((1-w)/w)
    let l = ((1.0 - w) / w).ln();
    let u = 2.0 / ((l + 2.0) + (l * l + 4.0).sqrt());
    1.0 - u
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn branches_are_exact() {
        assert_eq!(jump_eval(-5.0), (1.0, 0.0));
        assert_eq!(jump_eval(0.0), (1.0, 0.0));
        assert_eq!(jump_eval(1.0), (0.0, 0.0));
        assert_eq!(jump_eval(7.0), (0.0, 0.0));
    }

    #[test]
    fn midpoint_value_and_slope() {
        let (j, dj) = jump_eval(0.5);
        assert_eq!(j, 0.5);
        assert_eq!(dj, -2.0);
    }

    #[test]
    fn matches_high_precision_values() {
        // references computed at 32 significant digits
        let (j, dj) = jump_eval(0.25);
        assert_relative_eq!(j, 0.935_030_830_871_335_9, max_relative = 1e-14);
        assert_relative_eq!(dj, -1.079_967_576_735_913, max_relative = 1e-13);
        let (j, dj) = jump_eval(0.1);
        assert_relative_eq!(j, 0.999_862_106_207_983_7, max_relative = 1e-14);
        assert_relative_eq!(dj, -0.013_957_693_506_311_037, max_relative = 1e-12);
    }

    #[test]
    fn symmetric_about_half() {
        for i in 1..100 {
            let t = i as f64 / 100.0;
            assert_relative_eq!(jump(t) + jump(1.0 - t), 1.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn inverse_round_trips() {
        // J is flat to all orders at the ends, so only moderate t invert accurately
        for &t in &[0.1, 0.2, 0.5, 0.77, 0.9] {
            assert_relative_eq!(jump_inverse(jump(t)), t, epsilon = 1e-12);
        }
    }
}
