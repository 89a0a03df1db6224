//! JSON run specs. Every struct rejects unknown keys.

use std::f64::consts::{FRAC_PI_2, PI};
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use sobolev_homeo::homeo1d::RampKind;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CommandName {
    Staircase,
    Approx1d,
    Twist,
    Localize,
    Theoremb,
    Verify,
}

impl CommandName {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Staircase => "staircase",
            Self::Approx1d => "approx1d",
            Self::Twist => "twist",
            Self::Localize => "localize",
            Self::Theoremb => "theoremb",
            Self::Verify => "verify",
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSpec {
    pub command: CommandName,
    /// Command parameters; parsed against the command's own schema.
    #[serde(default)]
    pub params: serde_json::Value,
    #[serde(default)]
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub tolerances: Tolerances,
}

impl RunSpec {
    pub fn new(command: CommandName) -> Self {
        Self {
            command,
            params: serde_json::Value::Null,
            out: None,
            seed: None,
            tolerances: Tolerances::default(),
        }
    }

    /// The command parameters, defaults filled in for `null` or `{}`.
    pub fn parse_params<T: serde::de::DeserializeOwned + Default>(&self) -> Result<T, serde_json::Error> {
        if self.params.is_null() {
            return Ok(T::default());
        }
        serde_json::from_value(self.params.clone())
    }
}

/// Pass tolerances. Exact identities default to absolute values; quadrature
/// checks scale the reported error estimate by `quad_factor`.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    pub det: f64,
    pub norm: f64,
    pub jacobian_fd: f64,
    pub round_trip: f64,
    pub exact: f64,
    pub quad_factor: f64,
    /// Additive slack on the staircase p-power bound.
    pub bound_slack: f64,
    pub r_slope_rel: f64,
    pub gap_slope_rel: f64,
    pub sod_residual: f64,
    pub sod_angle: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            det: 1e-9,
            norm: 1e-12,
            jacobian_fd: 1e-5,
            round_trip: 1e-10,
            exact: sobolev_homeo::verify::EXACT_TOL,
            quad_factor: 2.0,
            bound_slack: 1e-6,
            r_slope_rel: 0.10,
            gap_slope_rel: 0.20,
            sod_residual: 1e-8,
            sod_angle: 1e-10,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Ramp {
    Linear,
    Polynomial,
    #[default]
    SmoothJump,
}

impl From<Ramp> for RampKind {
    fn from(r: Ramp) -> Self {
        match r {
            Ramp::Linear => RampKind::Linear,
            Ramp::Polynomial => RampKind::Polynomial,
            Ramp::SmoothJump => RampKind::SmoothJump,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum FamilySpec {
    Staircase,
    Blend { c: f64 },
    Step { partition: Vec<f64>, values: Vec<f64> },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StaircaseSpec {
    pub family: FamilySpec,
    pub ramp: Ramp,
    pub indices: Vec<usize>,
    pub p: f64,
    /// Sample intervals for the per-index sample files.
    pub samples: usize,
    /// Upper limit on `‖f_n' - target‖_p` at the last index.
    pub final_lp_max: Option<f64>,
}

impl Default for StaircaseSpec {
    fn default() -> Self {
        Self {
            family: FamilySpec::Staircase,
            ramp: Ramp::SmoothJump,
            indices: vec![4, 16, 64, 256],
            p: 0.5,
            samples: 1024,
            final_lp_max: Some(0.02),
        }
    }
}

/// Homeomorphism of `[0, 1]`.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum HomeoSpec {
    Identity,
    /// `x^exponent`.
    Power {
        exponent: f64,
    },
    Staircase {
        n: usize,
        #[serde(default)]
        ramp: Ramp,
    },
}

/// Real function on `[0, 1]`.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ScalarSpec {
    Constant {
        value: f64,
    },
    /// `coeff x^exponent`.
    Power {
        coeff: f64,
        exponent: f64,
    },
    /// `Σ c_k x^k`.
    Polynomial {
        coeffs: Vec<f64>,
    },
    Step {
        partition: Vec<f64>,
        values: Vec<f64>,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Approx1dSpec {
    pub f: HomeoSpec,
    pub target: ScalarSpec,
    pub p: f64,
    /// Integrability exponent of `f'` and `(f^{-1})'`.
    pub r: f64,
    pub epsilon: f64,
    pub sup_max: f64,
    pub lp_max: f64,
    pub max_n: usize,
    pub samples: usize,
}

impl Default for Approx1dSpec {
    fn default() -> Self {
        Self {
            f: HomeoSpec::Power { exponent: 2.0 },
            target: ScalarSpec::Power {
                coeff: 1.0,
                exponent: 1.0,
            },
            p: 0.5,
            r: 1.5,
            epsilon: 0.02,
            sup_max: 0.02,
            lp_max: 0.05,
            max_n: 4096,
            samples: 1024,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum PlaneSpec {
    Constant {
        theta: f64,
    },
    /// `Σ c_k t^k` with `t = |x|^2`.
    Polynomial {
        coeffs: Vec<f64>,
    },
    /// `θ` inside radius `s`, zero outside radius `r`.
    Localized {
        theta: f64,
        s: f64,
        r: f64,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TwistSpec {
    pub dims: Vec<usize>,
    /// Profiles for the first planes; `None` draws seeded quadratic profiles.
    pub planes: Option<Vec<PlaneSpec>>,
    pub points: usize,
    /// Points are drawn from `[-half_width, half_width]^d`.
    pub half_width: f64,
    pub fd_step: f64,
}

impl Default for TwistSpec {
    fn default() -> Self {
        Self {
            dims: vec![2, 3, 4],
            planes: None,
            points: 1000,
            half_width: 1.0,
            fd_step: 1e-5,
        }
    }
}

/// `(r, s/r)`.
pub type Config = (f64, f64);

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LocalizeSpec {
    /// Planar angle, used when `rotation` is absent.
    pub theta: f64,
    /// Row-major rows of `H ∈ SO(d)`.
    pub rotation: Option<Vec<Vec<f64>>>,
    pub p: f64,
    pub fit: Vec<Config>,
    pub check: Vec<Config>,
    pub r_slope: Vec<Config>,
    pub gap_slope: Vec<Config>,
    pub cells: usize,
}

impl Default for LocalizeSpec {
    fn default() -> Self {
        Self {
            theta: FRAC_PI_2,
            rotation: None,
            p: 0.5,
            fit: vec![(0.25, 0.5)],
            check: vec![(0.125, 0.75), (0.125, 0.9), (0.0625, 0.75), (0.0625, 0.9)],
            r_slope: vec![(0.125, 0.5), (0.25, 0.5)],
            gap_slope: vec![(0.25, 0.5), (0.25, 0.75), (0.25, 0.9)],
            cells: 32,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct BoxSpec {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum FieldSpec {
    /// Planar rotation by `offset + gradient · x` radians.
    ClosedForm { offset: f64, gradient: Vec<f64> },
    /// One rotation everywhere.
    Constant { rotation: Vec<Vec<f64>> },
    /// Piecewise constant on the given cells; identity elsewhere.
    Table {
        cells: Vec<BoxSpec>,
        values: Vec<Vec<Vec<f64>>>,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TheoremBSpec {
    pub domain: Vec<BoxSpec>,
    pub field: FieldSpec,
    pub p: f64,
    pub levels: Vec<u32>,
    /// Single-cell run with these budgets when `levels` is empty.
    pub epsilon: Option<f64>,
    pub delta: Option<f64>,
    pub grid: usize,
    pub pack_resolution: usize,
    pub det_points: usize,
    /// Write measured wall-clock time into the `runtime_ms` column.
    pub timing: bool,
}

impl Default for TheoremBSpec {
    fn default() -> Self {
        Self {
            domain: vec![BoxSpec {
                lo: vec![0.0, 0.0],
                hi: vec![1.0, 1.0],
            }],
            field: FieldSpec::ClosedForm {
                offset: 0.0,
                gradient: vec![PI, 0.0],
            },
            p: 0.5,
            levels: vec![2, 4, 6],
            epsilon: None,
            delta: None,
            grid: 512,
            pack_resolution: 256,
            det_points: 4000,
            timing: true,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VerifySpec {
    pub criteria: Vec<u32>,
    /// Record wall-clock times in the summary.
    pub timing: bool,
}

impl Default for VerifySpec {
    fn default() -> Self {
        Self {
            criteria: (1..=9).collect(),
            timing: true,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_keys_rejected() {
        let bad = r#"{"command":"twist","bogus":1}"#;
        assert!(serde_json::from_str::<RunSpec>(bad).is_err());
        let spec: RunSpec = serde_json::from_str(r#"{"command":"twist","params":{"points":3,"nope":1}}"#).unwrap();
        assert!(spec.parse_params::<TwistSpec>().is_err());
        let spec: RunSpec = serde_json::from_str(r#"{"command":"twist","tolerances":{"det":1e-6}}"#).unwrap();
        assert_eq!(spec.tolerances.det, 1e-6);
        assert_eq!(spec.tolerances.norm, 1e-12);
    }

    #[test]
    fn defaults_fill_in() {
        let spec: RunSpec = serde_json::from_str(r#"{"command":"theoremb","params":{"levels":[2]}}"#).unwrap();
        let p: TheoremBSpec = spec.parse_params().unwrap();
        assert_eq!(p.levels, vec![2]);
        assert_eq!(p.grid, 512);
        let spec = RunSpec::new(CommandName::Staircase);
        let s: StaircaseSpec = spec.parse_params().unwrap();
        assert_eq!(s.indices, vec![4, 16, 64, 256]);
    }

    #[test]
    fn tagged_variants_parse() {
        let f: FieldSpec = serde_json::from_str(r#"{"kind":"closed-form","offset":0.0,"gradient":[1.0,0.0]}"#).unwrap();
        assert!(matches!(f, FieldSpec::ClosedForm { .. }));
        let h: HomeoSpec = serde_json::from_str(r#"{"kind":"staircase","n":3}"#).unwrap();
        assert_eq!(
            h,
            HomeoSpec::Staircase {
                n: 3,
                ramp: Ramp::SmoothJump
            }
        );
    }
}
