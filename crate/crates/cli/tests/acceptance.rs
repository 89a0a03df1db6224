//! Acceptance suite: one `[PASS]`/`[FAIL]` line per criterion, exiting
//! non-zero when any criterion fails. Numeric arguments select criteria.

use std::process::ExitCode;

use sobolev_homeo_cli::suite::{run_criterion, CRITERIA};
use sobolev_homeo_cli::Ctx;

fn main() -> ExitCode {
    // cargo forwards libtest flags such as --nocapture; only ids are meaningful here
    let picked: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let ids: Vec<u32> = CRITERIA
        .iter()
        .map(|c| c.0)
        .filter(|id| picked.is_empty() || picked.contains(id))
        .collect();
    let ctx = Ctx::new(0);
    let mut failed = Vec::new();
    for id in &ids {
        match run_criterion(*id, &ctx) {
            Ok(r) => {
                println!("{}", r.line());
                for c in &r.checks {
                    println!(
                        "    [{}] {} = {:.6e} (limit {:.6e}) {}",
                        if c.pass { "ok" } else { "x" },
                        c.name,
                        c.value,
                        c.limit,
                        c.detail
                    );
                }
                if !r.pass() {
                    failed.push(*id);
                }
            }
            Err(e) => {
                println!("[FAIL] {id} error: {e}");
                failed.push(*id);
            }
        }
    }
    println!(
        "\nacceptance: {} of {} criteria pass{}",
        ids.len() - failed.len(),
        ids.len(),
        if failed.is_empty() {
            String::new()
        } else {
            format!("; failing: {failed:?}")
        }
    );
    if failed.is_empty() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
