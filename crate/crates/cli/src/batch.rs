use std::path::{Path, PathBuf};

use clap::Args;
use handover_core::orchestrator::metrics;
use handover_core::tql::QueryCatalog;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{write_bytes, CliError, EXIT_BUDGET};
use crate::run::{load_catalog, load_scenario, simulate, Driver};

#[derive(Debug, Args)]
pub struct BatchArgs {
    pub dir: PathBuf,
    /// CSV destination; printed to stdout when omitted.
    #[arg(long)]
    pub report: Option<PathBuf>,
    #[arg(long)]
    pub catalog: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Driver::Scripted)]
    pub driver: Driver,
}

#[derive(Debug, Default, Serialize)]
pub struct Row {
    pub name: String,
    pub outcome: String,
    pub safe: usize,
    pub avoidable: usize,
    pub unavoidable: usize,
    pub notice_lead_time: Option<f64>,
    pub safe_stops: usize,
    pub words: usize,
    pub budget_exhausted: bool,
    pub error: String,
}

fn run_one(path: &Path, catalog: &QueryCatalog, driver: Driver) -> Row {
    let fallback = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let scenario = match load_scenario(path) {
        Ok(s) => s,
        Err(e) => {
            return Row {
                name: fallback,
                error: e.to_string(),
                ..Row::default()
            }
        }
    };
    let name = scenario.name.clone();
    match simulate(scenario, catalog.clone(), driver, None) {
        Ok(log) => {
            let m = metrics(&log);
            Row {
                name,
                outcome: m.outcome.unwrap_or_default(),
                safe: m.verdicts.safe,
                avoidable: m.verdicts.avoidable,
                unavoidable: m.verdicts.unavoidable,
                notice_lead_time: m.notice_lead_time,
                safe_stops: m.safe_stops,
                words: m.words_total,
                budget_exhausted: m.budget_exhausted,
                error: String::new(),
            }
        }
        Err(e) => Row {
            name,
            error: e,
            ..Row::default()
        },
    }
}

/// Runs every `*.json` scenario under `dir`; rows come back sorted by name.
pub fn run_dir(dir: &Path, catalog: &QueryCatalog, driver: Driver) -> Result<Vec<Row>, CliError> {
    let entries = std::fs::read_dir(dir).map_err(|source| CliError::Read {
        path: dir.to_path_buf(),
        source,
    })?;
    let paths: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file() && p.extension().is_some_and(|x| x == "json"))
        .collect();
    let mut rows: Vec<Row> = paths.par_iter().map(|p| run_one(p, catalog, driver)).collect();
    rows.sort_by(|a, b| a.name.cmp(&b.name));
    Ok(rows)
}

pub fn to_csv(rows: &[Row]) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    if rows.is_empty() {
        // serde writes the header with the first record only
        w.write_record([
            "name",
            "outcome",
            "safe",
            "avoidable",
            "unavoidable",
            "notice_lead_time",
            "safe_stops",
            "words",
            "budget_exhausted",
            "error",
        ])
        .expect("in-memory write");
    }
    for r in rows {
        w.serialize(r).expect("in-memory write");
    }
    w.into_inner().expect("in-memory write")
}

pub fn cmd_batch(args: &BatchArgs) -> Result<u8, CliError> {
    let catalog = load_catalog(args.catalog.as_deref())?;
    let rows = run_dir(&args.dir, &catalog, args.driver)?;
    let bytes = to_csv(&rows);
    match &args.report {
        Some(path) => write_bytes(path, &bytes)?,
        None => print!("{}", String::from_utf8_lossy(&bytes)),
    }
    let failed = rows.iter().filter(|r| !r.error.is_empty()).count();
    eprintln!("{} scenario(s), {failed} failed", rows.len());
    for r in rows.iter().filter(|r| !r.error.is_empty()) {
        eprintln!("  {}: {}", r.name, r.error);
    }
    if rows.iter().any(|r| r.budget_exhausted) {
        return Ok(EXIT_BUDGET);
    }
    Ok(0)
}
