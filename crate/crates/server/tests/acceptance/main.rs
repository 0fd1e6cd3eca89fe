//! Acceptance criteria. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any fails.

mod engine_checks;
mod service_checks;
mod support;

use std::process::ExitCode;
use std::time::{Duration, Instant};

use tokio::runtime::Runtime;

pub type Outcome = Result<(), String>;

struct Criterion {
    name: &'static str,
    budget: Option<Duration>,
    check: fn(&Runtime) -> Outcome,
}

const fn criterion(name: &'static str, budget_secs: Option<u64>, check: fn(&Runtime) -> Outcome) -> Criterion {
    let budget = match budget_secs {
        Some(s) => Some(Duration::from_secs(s)),
        None => None,
    };
    Criterion { name, budget, check }
}

const CRITERIA: &[Criterion] = &[
    criterion("helpfulness_prior_display_and_monotonicity", Some(1), engine_checks::helpfulness),
    criterion("metric_replay_matches_stored_counters", Some(10), engine_checks::metric_replay),
    criterion("command_scope_isolation_under_over_editing", Some(10), engine_checks::scope_isolation),
    criterion("similar_commands_are_merged", None, engine_checks::dedup),
    criterion("manual_fraction_edit_infers_stem_command", None, engine_checks::manual_inference),
    criterion("shorter_stem_proposal_and_accept", None, engine_checks::shorter_proposal),
    criterion("diff_reconstructs_both_sides", Some(10), engine_checks::diff_oracle),
    criterion("shuffle_preserves_options_and_key", None, engine_checks::shuffle),
    criterion("undo_keeps_a_gapless_history", None, engine_checks::undo),
    criterion("exports_round_trip_and_are_self_contained", None, engine_checks::export),
    criterion("http_walkthrough_with_mock_provider", Some(30), service_checks::walkthrough),
    criterion("state_survives_process_kill", None, service_checks::crash_restart),
];

fn main() -> ExitCode {
    let only: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let rt = tokio::runtime::Builder::new_multi_thread().enable_all().build().expect("runtime");
    let mut failed = 0;
    for c in CRITERIA.iter().filter(|c| only.is_empty() || only.iter().any(|o| c.name.contains(o.as_str()))) {
        let start = Instant::now();
        let result = std::panic::catch_unwind(|| (c.check)(&rt)).unwrap_or_else(|p| {
            let msg = p.downcast_ref::<String>().cloned().or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()));
            Err(format!("panicked: {}", msg.unwrap_or_default()))
        });
        let elapsed = start.elapsed();
        let result = result.and_then(|()| match c.budget {
            Some(b) if elapsed > b => Err(format!("took {elapsed:.2?}, budget {b:?}")),
            _ => Ok(()),
        });
        match result {
            Ok(()) => println!("PASS {} ({elapsed:.2?})", c.name),
            Err(e) => {
                failed += 1;
                println!("FAIL {} ({elapsed:.2?}): {e}", c.name);
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    }
}
