use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use handover_core::orchestrator::{metrics, to_jsonl, Event, HandoverSession, MetricsReport, Responder, SessionConfig};
use handover_core::scenario::{parse_scenario, Scenario};
use handover_core::tql::QueryCatalog;

use crate::error::{read_text, write_bytes, CliError, EXIT_BUDGET};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Driver {
    /// Simulated driver drawing reactions from the reaction table.
    Scripted,
    /// Nobody answers alerts.
    None,
}

impl From<Driver> for Responder {
    fn from(d: Driver) -> Self {
        match d {
            Driver::Scripted => Responder::Scripted,
            Driver::None => Responder::None,
        }
    }
}

#[derive(Debug, Args)]
pub struct RunArgs {
    pub scenario: PathBuf,
    /// Overrides the scenario's seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Query catalog; the built-in one by default.
    #[arg(long)]
    pub catalog: Option<PathBuf>,
    /// Event log destination (JSON Lines).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Metrics destination; printed to stdout when omitted.
    #[arg(long)]
    pub metrics: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Driver::Scripted)]
    pub driver: Driver,
    /// Planner node budget per search.
    #[arg(long)]
    pub node_budget: Option<usize>,
}

pub fn load_scenario(path: &Path) -> Result<Scenario, CliError> {
    let bytes = std::fs::read(path).map_err(|source| CliError::Read {
        path: path.to_path_buf(),
        source,
    })?;
    parse_scenario(&bytes).map_err(|e| CliError::input(path, e.to_string()))
}

pub fn load_catalog(path: Option<&Path>) -> Result<QueryCatalog, CliError> {
    match path {
        None => Ok(QueryCatalog::default_catalog()),
        Some(p) => QueryCatalog::parse(&read_text(p)?).map_err(|e| CliError::input(p, e.to_string())),
    }
}

/// Runs `scenario` to the end and returns its event log.
pub fn simulate(
    scenario: Scenario,
    catalog: QueryCatalog,
    driver: Driver,
    node_budget: Option<usize>,
) -> Result<Vec<Event>, String> {
    let mut config = SessionConfig {
        catalog,
        responder: driver.into(),
        ..SessionConfig::default()
    };
    if let Some(n) = node_budget {
        config.planner.node_budget = n;
    }
    let mut session = HandoverSession::new(scenario, config);
    session.run_to_end().map_err(|e| e.to_string())?;
    Ok(session.log().to_vec())
}

fn summary(name: &str, m: &MetricsReport) -> String {
    format!(
        "{name}: {} after {} ticks, {} alert(s), {} escalation(s), {} replan(s)",
        m.outcome.as_deref().unwrap_or("unfinished"),
        m.ticks,
        m.alerts,
        m.escalations,
        m.handovers_avoided
    )
}

pub fn cmd_run(args: &RunArgs) -> Result<u8, CliError> {
    let mut scenario = load_scenario(&args.scenario)?;
    if let Some(seed) = args.seed {
        scenario.seed = seed;
    }
    let catalog = load_catalog(args.catalog.as_deref())?;
    let name = scenario.name.clone();
    let log = simulate(scenario, catalog, args.driver, args.node_budget).map_err(|e| CliError::input(&args.scenario, e))?;
    let report = metrics(&log);
    if let Some(out) = &args.out {
        write_bytes(out, to_jsonl(&log).as_bytes())?;
    }
    let mut json = serde_json::to_string_pretty(&report).expect("metrics serialize");
    json.push('\n');
    match &args.metrics {
        Some(path) => write_bytes(path, json.as_bytes())?,
        None => {
            // a closed stdout is not worth failing the run for
            let _ = std::io::stdout().write_all(json.as_bytes());
        }
    }
    eprintln!("{}", summary(&name, &report));
    if report.budget_exhausted {
        eprintln!("warning: the planner exhausted its node budget at least once");
        return Ok(EXIT_BUDGET);
    }
    Ok(0)
}
