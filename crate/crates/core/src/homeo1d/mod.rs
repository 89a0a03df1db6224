//! One-dimensional constructions: staircases, blends, step homeomorphisms,
//! transfer by composition and the pair approximation pipeline.

pub mod homeo;
pub mod pair;
pub mod ramp;
pub mod step;
pub mod tensor;

pub use homeo::{Homeo1D, ScalarFn, StaircaseParams, INVERSE_TOL};
pub use pair::{
    approximate_pair, feasible_pair, step_approximation, ApproxBudget, ApproxReport, Feasibility, PairCandidate1D,
};
pub use ramp::{RampKind, RampSpec};
pub use step::{blend_constant, make_step_homeo, make_step_homeo_with, transfer_compose, StepFunction1D};
pub use tensor::{tensor_staircase, TensorStaircase};

/// `make_ramp`: the ramp `g: [0, a] -> [0, b]` of the given kind.
pub fn make_ramp(kind: RampKind, a: f64, b: f64) -> crate::Result<RampSpec> {
    RampSpec::new(kind, a, b)
}

/// `make_staircase`: the periodic staircase `f_n` on `(0, 1)`.
pub fn make_staircase(params: StaircaseParams) -> crate::Result<Homeo1D> {
    Homeo1D::staircase(params)
}
