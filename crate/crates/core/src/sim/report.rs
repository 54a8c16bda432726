//! CSV rendering for sweep results and mechanism traces, plus the JSON
//! manifest written beside every CSV file.
//!
//! All CSV is hand-rolled: every emitted field is numeric, boolean, or a
//! fixed identifier, so no quoting or escaping is ever required. Floats use
//! Rust's shortest round-trip formatting, making files byte-reproducible.
//! The manifest records the exact configuration that generated a file, so a
//! result on disk can always be regenerated.

use super::SweepResult;
use crate::fork::DisputeRecord;
use crate::sr::RoundResult;
use std::fmt::Write as _;
use std::io;
use std::path::{Path, PathBuf};

/// Header of the sweep CSV format.
pub const SWEEP_HEADER: &str = "scenario,n,s,R,F,theta,k,trials,attack_rate,\
success_rate,mean_payoff,stderr_payoff,mean_rounds,empirical_threshold";

/// Renders a sweep as CSV: one row per grid point, with the generating
/// parameters repeated per row and the sweep-level threshold (empty when
/// none was found) in the last column.
pub fn sweep_csv(result: &SweepResult) -> String {
    let mut out = String::new();
    out.push_str(SWEEP_HEADER);
    out.push('\n');
    let c = &result.config;
    let threshold = match result.threshold {
        Some(t) => t.to_string(),
        None => String::new(),
    };
    for p in &result.points {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            c.scenario,
            c.n,
            p.s,
            c.reward,
            c.fine,
            c.theta,
            c.scale,
            p.trials,
            p.attack_rate,
            p.success_rate,
            p.mean_payoff,
            p.stderr_payoff,
            p.mean_rounds,
            threshold
        )
        .expect("writing to a String cannot fail");
    }
    out
}

/// Renders a commit-round trace (e.g. [`crate::sr::ProcessResult::rounds`])
/// as CSV. The `committed` column is empty when both seats were excluded.
pub fn round_trace_csv(rounds: &[RoundResult]) -> String {
    let mut out = String::from("round,proposer,confirmer,matched,challenged,committed,fines_burned\n");
    for r in rounds {
        let committed = match r.committed {
            Some(m) => m.to_string(),
            None => String::new(),
        };
        writeln!(
            out,
            "{},{},{},{},{},{},{}",
            r.round, r.proposer, r.confirmer, r.matched, r.challenged, committed, r.fines_burned
        )
        .expect("writing to a String cannot fail");
    }
    out
}

/// Renders a fork-resolution dispute trace as CSV. The `asserter` column is
/// empty for disputes that never escalated.
pub fn fork_trace_csv(trace: &[DisputeRecord]) -> String {
    let mut out = String::from("item,type,disputed,asserter,resolution,fines_burned\n");
    for d in trace {
        let asserter = match d.asserter {
            Some(side) => side.to_string(),
            None => String::new(),
        };
        writeln!(
            out,
            "{},{},{},{},{},{}",
            d.item, d.kind, d.disputed, asserter, d.resolution, d.fines_burned
        )
        .expect("writing to a String cannot fail");
    }
    out
}

/// The JSON manifest for a sweep CSV: format tag, generator version, the
/// full generating configuration, and the located threshold. Deliberately
/// timestamp-free so regenerated results are byte-identical.
pub fn sweep_manifest(result: &SweepResult) -> serde_json::Value {
    serde_json::json!({
        "format": "sweep-csv/1",
        "generator": env!("CARGO_PKG_NAME"),
        "generator_version": env!("CARGO_PKG_VERSION"),
        "config": result.config,
        "points": result.points.len(),
        "empirical_threshold": result.threshold,
    })
}

/// Where the manifest for `csv_path` lives: same stem, extension
/// `manifest.json` (`out.csv` -> `out.manifest.json`).
pub fn manifest_path(csv_path: &Path) -> PathBuf {
    csv_path.with_extension("manifest.json")
}

/// Writes `csv` to `path` and its pretty-printed `manifest` beside it.
pub fn write_csv_with_manifest(
    path: &Path,
    csv: &str,
    manifest: &serde_json::Value,
) -> io::Result<()> {
    std::fs::write(path, csv)?;
    let mut rendered = serde_json::to_string_pretty(manifest)?;
    rendered.push('\n');
    std::fs::write(manifest_path(path), rendered)
}
