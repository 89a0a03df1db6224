//! One function per subcommand. Each returns an [`Outcome`]; writing files is
//! left to the caller.

use std::sync::Arc;
use std::time::Instant;

use rand::Rng;
use sobolev_homeo::homeo1d::{
    approximate_pair, feasible_pair, ApproxBudget, Homeo1D, PairCandidate1D, ScalarFn, StaircaseParams, StepFunction1D,
};
use sobolev_homeo::kernel::{fd_jacobian, AxisBox, BoxDomain, Exponent, Interval, NdOptions};
use sobolev_homeo::map::{det_row_major, Smoothness, VectorMap};
use sobolev_homeo::packing::{build_cell_diffeo, theorem_b_sequence, RotationField, TheoremBOptions};
use sobolev_homeo::rng::seeded;
use sobolev_homeo::twist::{twist_map, PlaneProfile, SOdMatrix, TwistProfile};
use sobolev_homeo::verify::{convergence_table_1d, fit_error_constant, Family1D};

use crate::report::{Cell, Check, Outcome, Table};
use crate::spec::*;
use crate::suite;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("invalid run spec: {0}")]
    Spec(#[from] serde_json::Error),
    #[error(transparent)]
    Core(#[from] sobolev_homeo::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("{0}")]
    Usage(String),
}

pub type CliResult<T> = Result<T, CliError>;

/// Seed and tolerances shared by every command.
#[derive(Debug, Clone)]
pub struct Ctx {
    pub seed: u64,
    pub tol: Tolerances,
}

impl Ctx {
    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            tol: Tolerances::default(),
        }
    }
}

/// Dispatches on `spec.command`; `seed` overrides the spec's seed.
pub fn run(spec: &RunSpec, seed: Option<u64>) -> CliResult<Outcome> {
    let ctx = Ctx {
        seed: seed.or(spec.seed).unwrap_or(0),
        tol: spec.tolerances.clone(),
    };
    match spec.command {
        CommandName::Staircase => cmd_staircase(&spec.parse_params()?, &ctx),
        CommandName::Approx1d => cmd_approx1d(&spec.parse_params()?, &ctx),
        CommandName::Twist => cmd_twist(&spec.parse_params()?, &ctx),
        CommandName::Localize => cmd_localize(&spec.parse_params()?, &ctx),
        CommandName::Theoremb => cmd_theoremb(&spec.parse_params()?, &ctx),
        CommandName::Verify => cmd_verify(&spec.parse_params()?, &ctx),
    }
}

fn exponent(p: f64) -> CliResult<Exponent> {
    Ok(Exponent::new(p)?)
}

pub fn cmd_staircase(spec: &StaircaseSpec, ctx: &Ctx) -> CliResult<Outcome> {
    let ramp = spec.ramp.into();
    let family = match &spec.family {
        FamilySpec::Staircase => Family1D::Staircase { ramp },
        FamilySpec::Blend { c } => Family1D::Blend { c: *c, ramp },
        FamilySpec::Step { partition, values } => Family1D::Step {
            h: StepFunction1D::new(partition.clone(), values.clone())?,
            ramp,
        },
    };
    let p = exponent(spec.p)?;
    let table = convergence_table_1d(&family, p, &spec.indices)?;
    let mut out = Outcome::new("staircase", ctx.seed);
    let mut t = Table::new(
        "table",
        &[
            "index",
            "sup_dist",
            "sup_bound",
            "lp_err",
            "lp_err_pow",
            "lp_pow_bound",
            "quad_error",
            "pass",
        ],
    );
    for r in &table.rows {
        t.push(vec![
            r.index.into(),
            r.sup_dist.into(),
            r.sup_bound.into(),
            r.lp_err.value.into(),
            r.lp_err.value_p_power.into(),
            r.lp_pow_bound.into(),
            r.lp_err.p_power_error.into(),
            r.pass.into(),
        ]);
        out.checks.push(Check::at_most(
            format!("sup n={}", r.index),
            r.sup_dist,
            r.sup_bound + ctx.tol.exact,
        ));
        out.checks.push(Check::at_most(
            format!("lp_pow n={}", r.index),
            r.lp_err.value_p_power,
            r.lp_pow_bound + ctx.tol.bound_slack,
        ));
    }
    if let (Some(max), Some(last)) = (spec.final_lp_max, table.rows.last()) {
        out.checks
            .push(Check::at_most(format!("lp n={}", last.index), last.lp_err.value, max));
    }
    out.tables.push(t);
    for &n in &spec.indices {
        let f = family.member(n)?;
        let mut s = Table::new(format!("samples_n{n}"), &["x", "f", "df"]);
        let m = spec.samples.max(1);
        for i in 0..=m {
            let x = i as f64 / m as f64;
            s.push(vec![x.into(), f.eval(x).into(), f.deriv(x).into()]);
        }
        out.tables.push(s);
    }
    Ok(out)
}

fn build_homeo(h: &HomeoSpec) -> CliResult<Homeo1D> {
    let unit = Interval::unit();
    Ok(match *h {
        HomeoSpec::Identity => Homeo1D::identity(unit),
        HomeoSpec::Power { exponent: k } => {
            if k.is_nan() || k <= 0.0 {
                return Err(CliError::Usage(format!(
                    "power homeomorphism needs a positive exponent, got {k}"
                )));
            }
            Homeo1D::from_fns(
                unit,
                Arc::new(move |x: f64| x.powf(k)),
                Arc::new(move |x: f64| k * x.powf(k - 1.0)),
                Some(Arc::new(move |y: f64| y.powf(1.0 / k))),
                Vec::new(),
                Smoothness::CInfPerPiece,
            )?
        }
        HomeoSpec::Staircase { n, ramp } => Homeo1D::staircase(StaircaseParams::with_ramp(n, ramp.into()))?,
    })
}

fn build_scalar(s: &ScalarSpec) -> CliResult<(ScalarFn, Vec<f64>)> {
    Ok(match s.clone() {
        ScalarSpec::Constant { value } => (Arc::new(move |_| value), Vec::new()),
        ScalarSpec::Power { coeff, exponent } => (Arc::new(move |x: f64| coeff * x.powf(exponent)), Vec::new()),
        ScalarSpec::Polynomial { coeffs } => (
            Arc::new(move |x: f64| coeffs.iter().rev().fold(0.0, |acc, c| acc * x + c)),
            Vec::new(),
        ),
        ScalarSpec::Step { partition, values } => {
            let h = StepFunction1D::new(partition.clone(), values)?;
            (Arc::new(move |x| h.eval(x)), partition)
        }
    })
}

pub fn cmd_approx1d(spec: &Approx1dSpec, ctx: &Ctx) -> CliResult<Outcome> {
    let f = build_homeo(&spec.f)?;
    let (target, bps) = build_scalar(&spec.target)?;
    let cand = PairCandidate1D::new(f.clone(), target.clone(), bps, exponent(spec.p)?, exponent(spec.r)?)?;
    let budget = ApproxBudget {
        max_n: spec.max_n,
        ..ApproxBudget::default()
    };
    let mut out = Outcome::new("approx1d", ctx.seed);
    let feas = feasible_pair(&cand, budget.sup_resolution)?;
    let mut ft = Table::new(
        "feasibility",
        &["feasible", "min_ratio", "max_ratio", "witness", "lr_finite"],
    );
    ft.push(vec![
        feas.feasible.into(),
        feas.min_ratio.into(),
        feas.max_ratio.into(),
        feas.witness.map_or(Cell::S(String::new()), Cell::F),
        feas.lr_finite.into(),
    ]);
    out.tables.push(ft);
    if !feas.feasible {
        let w = feas.witness.unwrap_or(0.0);
        out.checks.push(Check::flag(
            "feasible",
            false,
            format!("F/f' = {} leaves [0, 1] at x = {w}", target(w) / f.deriv(w)),
        ));
        return Ok(out);
    }
    out.checks.push(Check::flag("feasible", true, ""));
    let (h, rep) = approximate_pair(&cand, spec.epsilon, budget)?;
    let mut rt = Table::new(
        "report",
        &[
            "n",
            "step_cells",
            "step_l1_error",
            "sup_dist",
            "lp_err",
            "quad_error",
            "converged",
        ],
    );
    rt.push(vec![
        rep.n.into(),
        rep.step_cells.into(),
        rep.step_l1_error.into(),
        rep.sup_distance.into(),
        rep.lp_error.value.into(),
        rep.lp_error.quad_error_estimate.into(),
        rep.converged.into(),
    ]);
    out.tables.push(rt);
    out.checks.push(Check::at_most("sup", rep.sup_distance, spec.sup_max));
    out.checks.push(Check::at_most("lp", rep.lp_error.value, spec.lp_max));
    let mut s = Table::new("samples", &["x", "h", "dh", "f", "target"]);
    let m = spec.samples.max(1);
    for i in 0..=m {
        let x = i as f64 / m as f64;
        s.push(vec![
            x.into(),
            h.eval(x).into(),
            h.deriv(x).into(),
            f.eval(x).into(),
            target(x).into(),
        ]);
    }
    out.tables.push(s);
    Ok(out)
}

fn plane_profile(p: &PlaneSpec) -> CliResult<PlaneProfile> {
    Ok(match *p {
        PlaneSpec::Constant { theta } => PlaneProfile::Constant(theta),
        PlaneSpec::Polynomial { ref coeffs } => PlaneProfile::Polynomial(coeffs.clone()),
        PlaneSpec::Localized { theta, s, r } => {
            if !(0.0 < s && s < r) {
                return Err(CliError::Usage(format!(
                    "localized profile needs 0 < s < r, got s={s} r={r}"
                )));
            }
            PlaneProfile::Localized {
                theta,
                s2: s * s,
                r2: r * r,
            }
        }
    })
}

pub fn cmd_twist(spec: &TwistSpec, ctx: &Ctx) -> CliResult<Outcome> {
    let mut out = Outcome::new("twist", ctx.seed);
    let mut t = Table::new(
        "census",
        &[
            "d",
            "points",
            "max_norm_dev",
            "max_det_dev",
            "max_fd_dev",
            "max_round_trip",
        ],
    );
    let mut rng = seeded(ctx.seed);
    for &d in &spec.dims {
        let planes = match &spec.planes {
            Some(ps) => ps.iter().map(plane_profile).collect::<CliResult<Vec<_>>>()?,
            None => (0..d / 2)
                .map(|_| PlaneProfile::Polynomial((0..3).map(|_| rng.random_range(-1.0..1.0)).collect()))
                .collect(),
        };
        let f = twist_map(TwistProfile::new(planes), d)?;
        let finv = f.inverse_map();
        let (mut norm_dev, mut det_dev, mut fd_dev, mut trip) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
        let mut jac = vec![0.0; d * d];
        for _ in 0..spec.points {
            let x: Vec<f64> = (0..d)
                .map(|_| rng.random_range(-spec.half_width..spec.half_width))
                .collect();
            let y = f.eval(&x);
            let nx = x.iter().map(|v| v * v).sum::<f64>().sqrt();
            let ny = y.iter().map(|v| v * v).sum::<f64>().sqrt();
            norm_dev = norm_dev.max((nx - ny).abs());
            f.jacobian_into(&x, &mut jac);
            det_dev = det_dev.max((det_row_major(d, &jac) - 1.0).abs());
            fd_dev = fd_dev.max(fd_jacobian(&f, &x, spec.fd_step, &[]).max_abs_diff(&jac));
            let back = finv.eval(&y);
            let err = back.iter().zip(&x).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
            trip = trip.max(err);
        }
        t.push(vec![
            d.into(),
            spec.points.into(),
            norm_dev.into(),
            det_dev.into(),
            fd_dev.into(),
            trip.into(),
        ]);
        out.checks
            .push(Check::at_most(format!("norm d={d}"), norm_dev, ctx.tol.norm));
        out.checks
            .push(Check::at_most(format!("det d={d}"), det_dev, ctx.tol.det));
        out.checks.push(Check::at_most(
            format!("jacobian_fd d={d}"),
            fd_dev,
            ctx.tol.jacobian_fd,
        ));
        out.checks
            .push(Check::at_most(format!("round_trip d={d}"), trip, ctx.tol.round_trip));
    }
    out.tables.push(t);
    Ok(out)
}

fn rotation_from_rows(rows: &[Vec<f64>]) -> CliResult<SOdMatrix> {
    let d = rows.len();
    if rows.iter().any(|r| r.len() != d) {
        return Err(CliError::Usage("rotation must be a square matrix".into()));
    }
    let flat: Vec<f64> = rows.iter().flatten().copied().collect();
    Ok(SOdMatrix::from_row_slice(d, &flat)?)
}

pub fn cmd_localize(spec: &LocalizeSpec, ctx: &Ctx) -> CliResult<Outcome> {
    let h = match &spec.rotation {
        Some(rows) => rotation_from_rows(rows)?,
        None => SOdMatrix::rotation2(spec.theta),
    };
    let d = h.dim();
    let p = exponent(spec.p)?;
    let pv = p.value();
    let opts = NdOptions::default().with_cells(spec.cells);
    let mut out = Outcome::new("localize", ctx.seed);
    let mut t = Table::new(
        "configs",
        &[
            "role",
            "r",
            "s_over_r",
            "measured",
            "quad_error",
            "shape",
            "ratio",
            "bound",
            "within",
        ],
    );
    let fit = fit_error_constant(&h, &spec.fit, p, &opts)?;
    let c1 = fit.c1;
    let rows = |role: &str, res: &sobolev_homeo::verify::FitResult, t: &mut Table, checks: &mut Vec<Check>| {
        for q in &res.points {
            let bound = c1 * q.shape;
            let within = q.measured.value <= bound;
            t.push(vec![
                role.into(),
                q.r.into(),
                q.s_over_r.into(),
                q.measured.value.into(),
                q.measured.quad_error_estimate.into(),
                q.shape.into(),
                q.ratio.into(),
                bound.into(),
                within.into(),
            ]);
            if role == "check" {
                checks.push(
                    Check::at_most(format!("bound r={} s/r={}", q.r, q.s_over_r), q.measured.value, bound)
                        .with_detail(format!("ratio {:.4} vs C1 {:.4}", q.ratio, c1)),
                );
            }
        }
    };
    rows("fit", &fit, &mut t, &mut out.checks);
    if !spec.check.is_empty() {
        let res = fit_error_constant(&h, &spec.check, p, &opts)?;
        rows("check", &res, &mut t, &mut out.checks);
    }
    let mut st = Table::new("slopes", &["kind", "estimate", "std_err", "expected", "rel_tol"]);
    let mut slope = |kind: &str, configs: &[Config], expected: f64, rel: f64, want_r: bool| -> CliResult<()> {
        if configs.is_empty() {
            return Ok(());
        }
        let res = fit_error_constant(&h, configs, p, &opts)?;
        rows(kind, &res, &mut t, &mut out.checks);
        let s = if want_r { res.slope_r } else { res.slope_gap };
        let Some(s) = s else {
            out.checks.push(Check::flag(
                format!("{kind} slope"),
                false,
                "configurations do not vary",
            ));
            return Ok(());
        };
        st.push(vec![
            kind.into(),
            s.estimate.into(),
            s.std_err.map_or(Cell::S(String::new()), Cell::F),
            expected.into(),
            rel.into(),
        ]);
        out.checks.push(
            Check::at_most(
                format!("{kind} slope"),
                (s.estimate - expected).abs(),
                rel * expected.abs(),
            )
            .with_detail(format!("estimate {:.4}, expected {expected}", s.estimate)),
        );
        Ok(())
    };
    slope("r", &spec.r_slope, d as f64 / pv, ctx.tol.r_slope_rel, true)?;
    slope("gap", &spec.gap_slope, (1.0 - pv) / pv, ctx.tol.gap_slope_rel, false)?;
    out.tables.push(t);
    out.tables.push(st);
    Ok(out)
}

fn axis_box(b: &BoxSpec) -> CliResult<AxisBox> {
    Ok(AxisBox::from_bounds(&b.lo, &b.hi)?)
}

fn build_field(dom: BoxDomain, f: &FieldSpec) -> CliResult<RotationField> {
    Ok(match f {
        FieldSpec::ClosedForm { offset, gradient } => {
            if dom.dim() != 2 || gradient.len() != 2 {
                return Err(CliError::Usage("closed-form angle fields are planar".into()));
            }
            let (a, g) = (*offset, gradient.clone());
            RotationField::planar(dom, move |x: &[f64]| a + g[0] * x[0] + g[1] * x[1])?
        }
        FieldSpec::Constant { rotation } => RotationField::constant(dom, &rotation_from_rows(rotation)?)?,
        FieldSpec::Table { cells, values } => {
            let cells = cells.iter().map(axis_box).collect::<CliResult<Vec<_>>>()?;
            let values = values
                .iter()
                .map(|r| rotation_from_rows(r))
                .collect::<CliResult<Vec<_>>>()?;
            RotationField::table(dom, cells, values)?
        }
    })
}

pub const LEVEL_HEADER: [&str; 6] = ["level", "sup_dist", "lp_err", "det_max_dev", "n_balls", "runtime_ms"];

pub fn cmd_theoremb(spec: &TheoremBSpec, ctx: &Ctx) -> CliResult<Outcome> {
    let boxes = spec.domain.iter().map(axis_box).collect::<CliResult<Vec<_>>>()?;
    let dom = BoxDomain::new(boxes)?;
    let field = build_field(dom.clone(), &spec.field)?;
    let p = exponent(spec.p)?;
    let mut out = Outcome::new("theoremb", ctx.seed);
    let mut levels = Table::new("levels", &LEVEL_HEADER);
    let ms = |t: Instant| if spec.timing { t.elapsed().as_millis() as u64 } else { 0 };

    if spec.levels.is_empty() {
        let (Some(eps), Some(delta)) = (spec.epsilon, spec.delta) else {
            return Err(CliError::Usage(
                "either levels or both epsilon and delta are required".into(),
            ));
        };
        let start = Instant::now();
        let h = field.eval(&dom.bounding_box().center())?;
        let built = build_cell_diffeo(&dom, &h, eps, delta, p)?;
        let r = &built.report;
        levels.push(vec![
            0u32.into(),
            r.sup_distance_to_target.into(),
            r.lp_derivative_error.value.into(),
            r.det_max_dev.into(),
            r.n_balls().into(),
            ms(start).into(),
        ]);
        out.checks.push(Check::at_most("det", r.det_max_dev, ctx.tol.det));
        out.checks.push(Check::at_most("sup", r.sup_distance_to_target, eps));
        out.checks.push(Check::at_most("residual", r.residual, delta));
        out.checks.push(Check::at_most(
            "lp_pow",
            r.lp_derivative_error.value_p_power,
            eps.powf(p.value()) + ctx.tol.quad_factor * r.lp_derivative_error.p_power_error,
        ));
        out.tables.push(levels);
        return Ok(out);
    }

    let mut detail = Table::new(
        "level_detail",
        &[
            "level",
            "eps",
            "n_cells",
            "hn_l1",
            "lp_err_step",
            "lp_err_pow",
            "bound",
            "tolerance",
            "residual",
            "c1",
            "eta",
            "inequality_holds",
        ],
    );
    let opts = TheoremBOptions {
        grid: spec.grid,
        pack_resolution: spec.pack_resolution,
        det_points: spec.det_points,
        seed: ctx.seed,
        ..TheoremBOptions::default()
    };
    let mut prev: Option<f64> = None;
    for &n in &spec.levels {
        let start = Instant::now();
        let res = theorem_b_sequence(&field, p, &[n], &opts)?;
        let (_, r) = &res[0];
        levels.push(vec![
            n.into(),
            r.sup_dist.into(),
            r.lp_err.value.into(),
            r.det_max_dev.into(),
            r.n_balls.into(),
            ms(start).into(),
        ]);
        detail.push(vec![
            n.into(),
            r.eps.into(),
            r.n_cells.into(),
            r.hn_l1.value.into(),
            r.lp_err_step.value.into(),
            r.lp_err.value_p_power.into(),
            r.bound.into(),
            r.tolerance.into(),
            r.report.residual.into(),
            r.report.c1.into(),
            r.report.eta.into(),
            r.inequality_holds.into(),
        ]);
        out.checks
            .push(Check::at_most(format!("det level={n}"), r.det_max_dev, ctx.tol.det));
        out.checks.push(Check::at_most(
            format!("sup level={n}"),
            r.sup_dist,
            r.eps + ctx.tol.exact,
        ));
        // the reported tolerance is twice the quadrature error
        let tol = 0.5 * ctx.tol.quad_factor * r.tolerance;
        out.checks.push(
            Check::at_most(format!("inequality level={n}"), r.lp_err.value_p_power, r.bound + tol)
                .with_detail(format!("bound {:.6e} + tolerance {:.3e}", r.bound, tol)),
        );
        if let Some(pv) = prev {
            out.checks.push(
                Check::at_most(format!("decrease level={n}"), r.lp_err.value, pv)
                    .with_detail("strictly below the previous level"),
            );
            if r.lp_err.value == pv {
                out.checks.last_mut().unwrap().pass = false;
            }
        }
        prev = Some(r.lp_err.value);
    }
    out.tables.push(levels);
    out.tables.push(detail);
    Ok(out)
}

pub fn cmd_verify(spec: &VerifySpec, ctx: &Ctx) -> CliResult<Outcome> {
    let mut out = Outcome::new("verify", ctx.seed);
    let mut t = Table::new(
        "criteria",
        &["id", "name", "pass", "runtime_ms", "limit_ms", "failed_checks"],
    );
    for &id in &spec.criteria {
        let r = suite::run_criterion(id, ctx)?;
        let failed: Vec<&str> = r.checks.iter().filter(|c| !c.pass).map(|c| c.name.as_str()).collect();
        t.push(vec![
            id.into(),
            r.name.into(),
            r.pass().into(),
            if spec.timing { r.runtime.as_millis() as u64 } else { 0 }.into(),
            r.limit
                .map_or(Cell::S(String::new()), |l| Cell::U(l.as_millis() as u64)),
            failed.join(";").into(),
        ]);
        for c in &r.checks {
            let mut c = c.clone();
            c.name = format!("{id}: {}", c.name);
            out.checks.push(c);
        }
        if let Some(limit) = r.limit {
            out.checks.push(Check::at_most(
                format!("{id}: runtime_s"),
                if spec.timing { r.runtime.as_secs_f64() } else { 0.0 },
                limit.as_secs_f64(),
            ));
        }
    }
    out.tables.push(t);
    Ok(out)
}
