//! The nine acceptance criteria as runnable checks.

use std::f64::consts::PI;
use std::time::{Duration, Instant};

use rand::Rng;
use sobolev_homeo::homeo1d::{tensor_staircase, StaircaseParams};
use sobolev_homeo::kernel::{check_quasinorm_inequalities, AxisBox, BoxDomain, Exponent, Interval, PiecewisePoly};
use sobolev_homeo::packing::{pairwise_disjoint, vitali_pack_with, Ball, PackOptions};
use sobolev_homeo::rng::seeded;
use sobolev_homeo::twist::{random_sod, sod_block_decompose, SOdMatrix};
use sobolev_homeo::verify::volume_census;

use crate::commands::{cmd_approx1d, cmd_localize, cmd_staircase, cmd_theoremb, cmd_twist, CliError, CliResult, Ctx};
use crate::report::Check;
use crate::spec::{Approx1dSpec, HomeoSpec, LocalizeSpec, ScalarSpec, StaircaseSpec, TheoremBSpec, TwistSpec};

#[derive(Debug, Clone)]
pub struct CriterionResult {
    pub id: u32,
    pub name: &'static str,
    pub checks: Vec<Check>,
    pub runtime: Duration,
    pub limit: Option<Duration>,
}

impl CriterionResult {
    pub fn checks_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn within_time(&self) -> bool {
        self.limit.map_or(true, |l| self.runtime < l)
    }

    pub fn pass(&self) -> bool {
        self.checks_pass() && self.within_time()
    }

    /// One line: `[PASS] 3 twist-map suite (0.41 s / 5 s)` plus failed checks.
    pub fn line(&self) -> String {
        let limit = self.limit.map_or(String::new(), |l| format!(" / {} s", l.as_secs()));
        let mut s = format!(
            "[{}] {} {} ({:.2} s{limit})",
            if self.pass() { "PASS" } else { "FAIL" },
            self.id,
            self.name,
            self.runtime.as_secs_f64(),
        );
        let failed: Vec<String> = self
            .checks
            .iter()
            .filter(|c| !c.pass)
            .map(|c| {
                format!("{}: {:.6e} > {:.6e} {}", c.name, c.value, c.limit, c.detail)
                    .trim_end()
                    .to_string()
            })
            .collect();
        if !failed.is_empty() {
            s.push_str(" | ");
            s.push_str(&failed.join(" | "));
        }
        if !self.within_time() {
            s.push_str(" | over time limit");
        }
        s
    }
}

pub const CRITERIA: [(u32, &str, Option<u64>); 9] = [
    (1, "staircase bounds", Some(10)),
    (2, "pair approximation pipeline", Some(30)),
    (3, "twist-map suite", Some(5)),
    (4, "localization bound", Some(60)),
    (5, "rotation-field desk run", Some(300)),
    (6, "packing", Some(30)),
    (7, "inequality audit", Some(10)),
    (8, "SO(d) decomposition", Some(2)),
    (9, "tensor staircase negative control", None),
];

pub fn run_criterion(id: u32, ctx: &Ctx) -> CliResult<CriterionResult> {
    let Some(&(_, name, limit)) = CRITERIA.iter().find(|c| c.0 == id) else {
        return Err(CliError::Usage(format!("unknown criterion {id}")));
    };
    let start = Instant::now();
    let checks = match id {
        1 => cmd_staircase(&StaircaseSpec::default(), ctx)?.checks,
        2 => pair_pipeline(ctx)?,
        3 => cmd_twist(&TwistSpec::default(), ctx)?.checks,
        4 => cmd_localize(&LocalizeSpec::default(), ctx)?.checks,
        5 => cmd_theoremb(&TheoremBSpec::default(), ctx)?.checks,
        6 => packing(ctx)?,
        7 => inequality_audit(ctx)?,
        8 => sod_suite(ctx),
        _ => negative_control(ctx)?,
    };
    Ok(CriterionResult {
        id,
        name,
        checks,
        runtime: start.elapsed(),
        limit: limit.map(Duration::from_secs),
    })
}

fn pair_pipeline(ctx: &Ctx) -> CliResult<Vec<Check>> {
    let mut checks = cmd_approx1d(&Approx1dSpec::default(), ctx)?.checks;
    let bad = Approx1dSpec {
        f: HomeoSpec::Identity,
        target: ScalarSpec::Constant { value: 2.0 },
        ..Approx1dSpec::default()
    };
    let out = cmd_approx1d(&bad, ctx)?;
    let rejected = out.checks.iter().find(|c| c.name == "feasible").filter(|c| !c.pass);
    let witness = out
        .table("feasibility")
        .and_then(|t| t.rows.first().map(|r| r[3].clone()))
        .is_some_and(|c| matches!(c, crate::report::Cell::F(_)));
    checks.push(Check::flag(
        "(Id, 2) rejected with witness",
        rejected.is_some() && witness,
        rejected.map_or(String::from("accepted"), |c| c.detail.clone()),
    ));
    Ok(checks)
}

/// Midpoint-grid count of the unit square not covered by `balls`, computed
/// by rasterizing each ball independently of the packer's own certificate.
fn uncovered_fraction(balls: &[Ball], res: usize) -> f64 {
    let mut covered = vec![false; res * res];
    let h = 1.0 / res as f64;
    for b in balls {
        let (cx, cy, r) = (b.center[0], b.center[1], b.radius);
        let i0 = (((cx - r) / h - 0.5).floor().max(0.0)) as usize;
        let i1 = ((((cx + r) / h - 0.5).ceil()) as usize).min(res - 1);
        let j0 = (((cy - r) / h - 0.5).floor().max(0.0)) as usize;
        let j1 = ((((cy + r) / h - 0.5).ceil()) as usize).min(res - 1);
        for i in i0..=i1 {
            let x = (i as f64 + 0.5) * h - cx;
            for j in j0..=j1 {
                let y = (j as f64 + 0.5) * h - cy;
                if x * x + y * y <= r * r {
                    covered[i * res + j] = true;
                }
            }
        }
    }
    covered.iter().filter(|&&c| !c).count() as f64 / (res * res) as f64
}

fn packing(_ctx: &Ctx) -> CliResult<Vec<Check>> {
    let (eps, delta, res) = (0.1, 0.05, 2048);
    let dom = BoxDomain::unit_cube(2);
    let pack = vitali_pack_with(&dom, eps, delta, &PackOptions::default().with_resolution(res))?;
    let inside = pack
        .balls
        .iter()
        .all(|b| b.center.iter().all(|&c| c - b.radius >= 0.0 && c + b.radius <= 1.0) && 2.0 * b.radius <= eps);
    let grid_residual = uncovered_fraction(&pack.balls, res);
    Ok(vec![
        Check::flag(
            "disjoint",
            pairwise_disjoint(&pack.balls),
            format!("{} balls", pack.len()),
        ),
        Check::flag("inside with diameter <= eps", inside, ""),
        Check::at_most("residual (2048^2 grid)", grid_residual, delta),
        Check::at_most("packer certificate", pack.residual_measure_estimate, delta),
    ])
}

fn inequality_audit(ctx: &Ctx) -> CliResult<Vec<Check>> {
    let iv = Interval::unit();
    let mut rng = seeded(ctx.seed ^ 0x1e9);
    let (mut failures, mut total) = (0usize, 0usize);
    let (mut min_sub, mut min_emb) = (f64::INFINITY, f64::INFINITY);
    for _ in 0..100 {
        let pieces = rng.random_range(1..=5);
        let deg = rng.random_range(0..=3);
        let f = PiecewisePoly::random(iv, pieces, deg, &mut rng);
        let g = PiecewisePoly::random(iv, pieces, deg, &mut rng);
        let mut bps = f.breakpoints().to_vec();
        bps.extend_from_slice(g.breakpoints());
        bps.sort_by(f64::total_cmp);
        bps.dedup();
        for p in [0.3, 0.5, 0.8] {
            for q in [1.0, 2.0] {
                let r = check_quasinorm_inequalities(
                    &|x| f.eval(x),
                    &|x| g.eval(x),
                    iv,
                    &bps,
                    Exponent::new(p)?,
                    Exponent::new(q)?,
                )?;
                total += 1;
                // the report's tolerances are twice the quadrature error
                let scale = ctx.tol.quad_factor / 2.0;
                min_sub = min_sub.min(r.subadd_slack);
                min_emb = min_emb.min(r.embed_slack);
                let ok = r.subadd_slack >= -scale * r.subadd_tol && r.embed_slack >= -scale * r.embed_tol;
                failures += usize::from(!ok);
            }
        }
    }
    Ok(vec![Check::at_most("violations", failures as f64, 0.0).with_detail(
        format!("{total} cases, min slack {min_sub:.3e} (subadditivity) {min_emb:.3e} (embedding)"),
    )])
}

fn sod_suite(ctx: &Ctx) -> Vec<Check> {
    let mut rng = seeded(ctx.seed ^ 0x50d);
    let mut checks = Vec::new();
    for d in [3, 4] {
        let worst = (0..100)
            .map(|_| sod_block_decompose(&random_sod(d, &mut rng)).residual)
            .fold(0.0, f64::max);
        checks.push(Check::at_most(format!("residual d={d}"), worst, ctx.tol.sod_residual));
    }
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let theta = rng.random_range(-PI..PI);
        let dec = sod_block_decompose(&SOdMatrix::rotation2(theta));
        let got = dec.signed_angles().first().copied().unwrap_or(0.0);
        worst = worst.max((got - theta).abs());
    }
    checks.push(Check::at_most("planar angle", worst, ctx.tol.sod_angle));
    checks
}

fn negative_control(ctx: &Ctx) -> CliResult<Vec<Check>> {
    let t = tensor_staircase(StaircaseParams::new(64), 2)?;
    let census = volume_census(&t, &AxisBox::unit_cube(2), 10_000, ctx.seed);
    let frac = census.fraction_above(0.5);
    Ok(vec![
        Check::flag(
            "census fails",
            !census.passes(ctx.tol.det),
            format!("max |det - 1| = {:.3e}", census.max_det_dev),
        ),
        // a share of at least one half must deviate by more than 0.5
        Check::at_most("1 - share with |det - 1| > 0.5", 1.0 - frac, 0.5),
    ])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uncovered_fraction_of_known_disk() {
        let b = Ball {
            center: vec![0.5, 0.5],
            radius: 0.5,
        };
        let u = uncovered_fraction(&[b], 512);
        assert!((u - (1.0 - PI / 4.0)).abs() < 1e-3);
        assert_eq!(uncovered_fraction(&[], 8), 1.0);
    }
}
