//! Post-hoc verification of a finished run directory: Eluder-sequence
//! audit of every recorded realizable run, elimination-threshold checks for
//! the true parameter, and accounting cross-checks against the CSV.

use std::fs;
use std::path::Path;

use anyhow::{Context, Result};
use delphi_core::delphi::HyperParams;
use delphi_core::exact;
use delphi_core::linalg::one_oplus_dot;
use delphi_core::report::RunRecord;

/// One line of the verification report.
#[derive(Debug, Clone)]
pub struct VerifyLine {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

/// Verify a run directory written by `delphi run`. Returns the per-record
/// report; the run passes if every line does.
pub fn verify_run_dir(dir: &Path) -> Result<Vec<VerifyLine>> {
    let params: HyperParams = serde_json::from_str(
        &fs::read_to_string(dir.join("params.json")).context("missing params.json")?,
    )
    .context("malformed params.json")?;
    let runs_csv =
        fs::read_to_string(dir.join("runs.csv")).context("missing runs.csv")?;
    let csv_oracle_calls: Vec<(String, u64)> = runs_csv
        .lines()
        .skip(1)
        .filter(|l| !l.is_empty())
        .map(|line| {
            let fields: Vec<&str> = line.split(',').collect();
            (
                format!("seed_{}_{}", fields[0], fields[1]),
                fields[2].parse().unwrap_or(u64::MAX),
            )
        })
        .collect();

    let mut lines = Vec::new();
    let records_dir = dir.join("records");
    let mut entries: Vec<_> = fs::read_dir(&records_dir)
        .context("missing records directory")?
        .collect::<std::io::Result<Vec<_>>>()?;
    entries.sort_by_key(|e| e.file_name());
    for entry in entries {
        let name = entry
            .file_name()
            .to_string_lossy()
            .trim_end_matches(".json")
            .to_string();
        let record: RunRecord = serde_json::from_str(&fs::read_to_string(entry.path())?)
            .with_context(|| format!("malformed record {name}"))?;

        // Constraint-count / oracle-call accounting.
        let breaks = record.stats.breaks.len();
        let constraints = record.constraints.len();
        lines.push(VerifyLine {
            name: format!("{name}: constraints-match-breaks"),
            passed: constraints == breaks,
            detail: format!("{constraints} constraints, {breaks} breaks"),
        });
        let queried = record
            .stats
            .breaks
            .iter()
            .filter(|b| b.oracle_action.is_some())
            .count() as u64;
        lines.push(VerifyLine {
            name: format!("{name}: oracle-counter"),
            passed: record.stats.oracle_calls == queried,
            detail: format!(
                "stats {} vs queried breaks {queried}",
                record.stats.oracle_calls
            ),
        });
        if let Some((_, csv_calls)) = csv_oracle_calls.iter().find(|(n, _)| *n == name) {
            lines.push(VerifyLine {
                name: format!("{name}: csv-cross-check"),
                passed: *csv_calls == record.stats.oracle_calls,
                detail: format!("csv {csv_calls} vs record {}", record.stats.oracle_calls),
            });
        }

        // Realizable runs: θ° retention and the Eluder audit.
        if let Some(theta_circ) = &record.theta_circ {
            let worst = record
                .constraints
                .iter()
                .map(|c| one_oplus_dot(&c.delta, theta_circ).abs() - c.tau)
                .fold(f64::NEG_INFINITY, f64::max);
            lines.push(VerifyLine {
                name: format!("{name}: theta-circ-retained"),
                passed: record.constraints.is_empty() || worst <= 1e-9,
                detail: format!("worst residual overshoot {worst:.3e}"),
            });
            let check = exact::check_delphi_eluder(&record, theta_circ, params.eps_bar_eval)?;
            lines.push(VerifyLine {
                name: format!("{name}: eluder-sequence"),
                passed: check.ok,
                detail: match check.first_violation {
                    None => "ok".into(),
                    Some(i) => format!("violated at constraint {i}"),
                },
            });
        }
    }
    Ok(lines)
}
