use std::fmt::Write as _;
use std::path::Path;

use handover_core::orchestrator::{from_jsonl, state_sequence, EventKind};
use handover_core::scenario::scenario_from_value;
use handover_core::tql::{abstract_state, score_trace, PropositionSet, QueryCatalog, Thresholds};

use crate::error::{read_text, CliError};
use crate::run::load_catalog;

/// Reads a trace in one of two forms.
///
/// Proposition lines: one step per line, names separated by commas or
/// whitespace, `-` for a step where nothing holds; blank lines and `#`
/// comments are skipped.
///
/// Event log: the JSONL output of `run`. Steps are the initial state from
/// the header followed by every TICK state, abstracted against the echoed
/// scenario's road.
pub fn load_trace(path: &Path) -> Result<Vec<PropositionSet>, CliError> {
    let text = read_text(path)?;
    if text.trim_start().starts_with('{') {
        return trace_from_log(path, &text);
    }
    let mut trace = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let names: Vec<&str> = content
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|n| !n.is_empty() && *n != "-")
            .collect();
        let set = PropositionSet::from_names(&names)
            .map_err(|n| CliError::input(path, format!("line {}: unknown proposition `{n}`", i + 1)))?;
        trace.push(set);
    }
    Ok(trace)
}

fn trace_from_log(path: &Path, text: &str) -> Result<Vec<PropositionSet>, CliError> {
    let log = from_jsonl(text).map_err(|e| CliError::input(path, e.to_string()))?;
    let header = log
        .first()
        .filter(|e| e.kind == EventKind::SessionStarted)
        .ok_or_else(|| CliError::input(path, "event log does not start with SESSION_STARTED"))?;
    let scenario = scenario_from_value(&header.payload["scenario"])
        .map_err(|e| CliError::input(path, format!("header scenario: {e}")))?;
    let params = scenario.params();
    let states = std::iter::once(scenario.initial).chain(state_sequence(&log).into_iter().map(|(s, _)| s));
    Ok(states.map(|s| abstract_state(&s, &scenario.road, &params)).collect())
}

pub fn report(catalog: &QueryCatalog, trace: &[PropositionSet]) -> String {
    let thresholds = Thresholds::default();
    let scored = score_trace(trace, catalog, &thresholds, 1.0);
    let width = catalog.entries().iter().map(|e| e.name.len()).max().unwrap_or(0).max(5);
    let mut out = String::new();
    writeln!(out, "{:<width$}  {:>3}  {:>6}  {:<7}  {:>4}", "query", "sev", "weight", "matched", "step").unwrap();
    for (e, m) in catalog.entries().iter().zip(&scored.matches) {
        let step_text = m.earliest_step.map_or("-".to_string(), |s| s.to_string());
        let matched = if m.matched { "yes" } else { "no" };
        writeln!(
            out,
            "{:<width$}  {:>3}  {:>6}  {:<7}  {:>4}",
            e.name, e.severity, e.weight, matched, step_text
        )
        .unwrap();
    }
    let level = format!("{:?}", scored.level).to_uppercase();
    writeln!(out, "steps {}  score {}  level {level}", trace.len(), scored.score).unwrap();
    out
}

pub fn cmd_check(catalog_path: &Path, trace_path: &Path) -> Result<u8, CliError> {
    let catalog = load_catalog(Some(catalog_path))?;
    let trace = load_trace(trace_path)?;
    if trace.is_empty() {
        return Err(CliError::input(trace_path, "trace is empty"));
    }
    print!("{}", report(&catalog, &trace));
    Ok(0)
}
