//! Domains, quadrature, quasi-norms, sup distances and finite differences.

pub mod domain;
pub mod fd;
pub mod inequality;
pub mod quad1d;
pub mod quadnd;
pub mod sampled;
pub mod sup;

pub use domain::{AxisBox, BoxDomain, Exponent, Interval, Mask};
pub use fd::{fd_jacobian, FdJacobian};
pub use inequality::{check_quasinorm_inequalities, InequalityReport, PiecewisePoly};
pub use quad1d::{integrate_piecewise, lp_norm_1d, lp_norm_1d_with, Integral, QuadOptions};
pub use quadnd::{lp_entries_nd, lp_norm_nd, Hint, NdOptions};
pub use sampled::SampledMap;
pub use sup::{sup_distance, sup_distance_1d, SupDistance};

/// A quasi-norm value with its quadrature error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LpResult {
    /// `(∫|f|^p)^{1/p}`.
    pub value: f64,
    pub p: Exponent,
    /// Estimated absolute error of `value`.
    pub quad_error_estimate: f64,
    /// Every supplied breakpoint or hint surface was respected by the rule.
    pub breakpoints_honored: bool,
    /// `∫|f|^p`.
    pub value_p_power: f64,
    /// Estimated absolute error of `value_p_power`.
    pub p_power_error: f64,
}

impl LpResult {
    /// The exact zero result.
    pub fn zero(p: Exponent) -> Self {
        Self {
            value: 0.0,
            p,
            quad_error_estimate: 0.0,
            breakpoints_honored: true,
            value_p_power: 0.0,
            p_power_error: 0.0,
        }
    }
}
