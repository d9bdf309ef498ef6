//! Handover message generation: content planning, sentence planning and
//! template realization under an information-density budget.

pub mod facts;
pub mod templates;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use facts::{core_facts, derive_facts, salience, Fact, Predicate};
pub use templates::{TemplateError, TemplateTable};

use crate::driver::Modality;
use crate::tql::CriticalityReport;
use templates::fill;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Verbosity {
    Terse,
    Standard,
    Detailed,
}

impl Verbosity {
    pub const ALL: [Verbosity; 3] = [Verbosity::Terse, Verbosity::Standard, Verbosity::Detailed];

    pub fn as_str(self) -> &'static str {
        match self {
            Verbosity::Terse => "TERSE",
            Verbosity::Standard => "STANDARD",
            Verbosity::Detailed => "DETAILED",
        }
    }

    /// Load 1 gets the most detail, load 3 the least.
    pub fn for_load(load: u8) -> Self {
        match load {
            0 | 1 => Verbosity::Detailed,
            2 => Verbosity::Standard,
            _ => Verbosity::Terse,
        }
    }

    /// Most optional facts a message at this verbosity carries.
    pub fn optional_cap(self) -> usize {
        match self {
            Verbosity::Terse => 1,
            Verbosity::Standard => 3,
            Verbosity::Detailed => usize::MAX,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NlgError {
    #[error("no template for {predicate} at {verbosity:?}")]
    MissingTemplate { predicate: String, verbosity: Verbosity },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Message {
    pub text: String,
    pub facts_included: Vec<Fact>,
    /// Whitespace-separated tokens in `text`.
    pub word_count: usize,
    /// Seconds to deliver on `channel`.
    pub est_duration: f64,
    pub verbosity: Verbosity,
    pub channel: Modality,
    /// True when only the compact one-sentence core could be used.
    pub compact: bool,
    pub fits: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DensityConfig {
    /// Words per second.
    pub audio_rate: f64,
    pub visual_rate: f64,
    /// Fixed length of a tactile alert pattern, seconds.
    pub tactile_duration: f64,
    /// Share of the notice a message may take.
    pub fraction: f64,
}

impl Default for DensityConfig {
    fn default() -> Self {
        Self {
            audio_rate: 2.5,
            visual_rate: 4.0,
            tactile_duration: 1.0,
            fraction: 0.3,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NlgConfig {
    pub templates: TemplateTable,
    pub density: DensityConfig,
}

impl Default for NlgConfig {
    fn default() -> Self {
        Self {
            templates: TemplateTable::default_table(),
            density: DensityConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Budget {
    pub channel: Modality,
    /// Seconds of notice available.
    pub notice: f64,
    pub verbosity: Verbosity,
}

/// Verbosity used to predict whether a selection fits. Predicting at the
/// longest realization keeps the selection independent of the verbosity
/// actually used, so fact counts are monotone in load.
const REFERENCE_VERBOSITY: Verbosity = Verbosity::Detailed;

fn round_distance(d: f64) -> i64 {
    ((d / 50.0).round() * 50.0) as i64
}

fn round_time(t: f64) -> i64 {
    t.round() as i64
}

fn capitalize(s: &str) -> String {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) => c.to_uppercase().chain(chars).collect(),
        None => String::new(),
    }
}

fn template<'a>(table: &'a TemplateTable, key: &str, verbosity: Verbosity) -> Result<&'a str, NlgError> {
    table.sentence(key, verbosity).ok_or_else(|| NlgError::MissingTemplate {
        predicate: key.to_string(),
        verbosity,
    })
}

fn slots(f: &Fact) -> Vec<(&'static str, String)> {
    let mut out = vec![("time", round_time(f.time).to_string())];
    if let Some(d) = f.distance {
        out.push(("distance", round_distance(d).to_string()));
    }
    if let Some(l) = f.lane {
        out.push(("lane", (l + 1).to_string()));
    }
    if let Some(a) = &f.advice {
        out.push(("advice", a.clone()));
    }
    out
}

fn join_nouns(nouns: &[String]) -> String {
    match nouns {
        [] => String::new(),
        [one] => one.clone(),
        [init @ .., last] => format!("{} and {last}", init.join(", ")),
    }
}

/// Orders facts by time-to-event, aggregates hazards sharing a segment and
/// fills the templates.
pub fn realize(facts: &[Fact], verbosity: Verbosity, table: &TemplateTable) -> Result<Message, NlgError> {
    let mut ordered: Vec<&Fact> = facts.iter().collect();
    ordered.sort_by(|a, b| {
        a.time
            .total_cmp(&b.time)
            .then(a.predicate.rank().cmp(&b.predicate.rank()))
            .then(a.order.cmp(&b.order))
    });

    let mut sentences = Vec::new();
    let mut done = vec![false; ordered.len()];
    for i in 0..ordered.len() {
        if done[i] {
            continue;
        }
        done[i] = true;
        let f = ordered[i];
        if let (Predicate::Hazard(tag), Some(seg)) = (f.predicate, f.segment) {
            let mut group = vec![tag];
            for j in i + 1..ordered.len() {
                if let Predicate::Hazard(other) = ordered[j].predicate {
                    if ordered[j].segment == Some(seg) && !done[j] {
                        done[j] = true;
                        group.push(other);
                    }
                }
            }
            if group.len() > 1 {
                let nouns = group
                    .iter()
                    .map(|t| {
                        let key = format!("NOUN.{}", t.as_str());
                        table.get(&key).map(str::to_string).ok_or(NlgError::MissingTemplate {
                            predicate: key,
                            verbosity,
                        })
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                let mut s = slots(f);
                s.push(("hazards", join_nouns(&nouns)));
                sentences.push(capitalize(&fill(template(table, "HAZARDS", verbosity)?, &s)));
                continue;
            }
        }
        sentences.push(capitalize(&fill(template(table, &f.predicate.key(), verbosity)?, &slots(f))));
    }
    Ok(finish(sentences.join(" "), facts.to_vec(), verbosity, false))
}

/// The one-sentence fallback carrying both core facts.
pub fn realize_compact(time: f64, core: Vec<Fact>, table: &TemplateTable) -> Result<Message, NlgError> {
    let t = table.get("CORE.COMPACT").ok_or(NlgError::MissingTemplate {
        predicate: "CORE".into(),
        verbosity: Verbosity::Terse,
    })?;
    let text = fill(t, &[("time", round_time(time.max(0.0)).to_string())]);
    Ok(finish(text, core, Verbosity::Terse, true))
}

fn finish(text: String, facts: Vec<Fact>, verbosity: Verbosity, compact: bool) -> Message {
    let word_count = text.split_whitespace().count();
    let density = DensityConfig::default();
    Message {
        est_duration: word_count as f64 / density.audio_rate,
        text,
        facts_included: facts,
        word_count,
        verbosity,
        channel: Modality::Audio,
        compact,
        fits: true,
    }
}

/// Delivery time of `message` on `channel` and whether it stays within the
/// density share of `notice`.
pub fn estimate_density(message: &Message, channel: Modality, notice: f64, config: &DensityConfig) -> (f64, bool) {
    let words = message.word_count as f64;
    let est = match channel {
        Modality::Audio => words / config.audio_rate,
        Modality::Visual => words / config.visual_rate,
        Modality::Tactile if message.word_count == 0 => 0.0,
        Modality::Tactile => config.tactile_duration,
    };
    (est, est <= config.fraction * notice)
}

fn optional_order(a: &Fact, b: &Fact) -> std::cmp::Ordering {
    b.salience.total_cmp(&a.salience).then(a.order.cmp(&b.order))
}

/// Selects the core facts, then optional facts by salience (catalog order on
/// ties) while the message is predicted to fit, up to the verbosity's cap.
pub fn plan_content(
    report: &CriticalityReport,
    facts: &[Fact],
    budget: &Budget,
    config: &NlgConfig,
) -> Result<Vec<Fact>, NlgError> {
    let mut selected: Vec<Fact> = facts.iter().filter(|f| f.predicate.is_core()).cloned().collect();
    let mut optional: Vec<&Fact> = facts
        .iter()
        .filter(|f| !f.predicate.is_core())
        .filter(|f| match &f.source {
            Some(name) => report.matches.iter().any(|m| m.matched && &m.name == name),
            None => true,
        })
        .collect();
    optional.sort_by(|a, b| optional_order(a, b));

    let cap = budget.verbosity.optional_cap();
    for f in optional.into_iter().take(cap) {
        let mut candidate = selected.clone();
        candidate.push(f.clone());
        let predicted = realize(&candidate, REFERENCE_VERBOSITY, &config.templates)?;
        if !estimate_density(&predicted, budget.channel, budget.notice, &config.density).1 {
            break;
        }
        selected = candidate;
    }
    Ok(selected)
}

fn measured(mut m: Message, channel: Modality, notice: f64, config: &DensityConfig) -> Message {
    let (est, fits) = estimate_density(&m, channel, notice, config);
    m.channel = channel;
    m.est_duration = est;
    m.fits = fits;
    m
}

/// Full pipeline for one alert. Verbosity follows the driver's load; while
/// the message does not fit, the least salient optional fact is dropped.
/// If even the core is too long it is realized tersely, and failing that
/// as the compact one-sentence core. `fits` is false only when the notice
/// is too short for any message.
pub fn compose(
    report: &CriticalityReport,
    facts: &[Fact],
    channel: Modality,
    notice: f64,
    driver_load: u8,
    config: &NlgConfig,
) -> Result<Message, NlgError> {
    let verbosity = Verbosity::for_load(driver_load);
    let budget = Budget {
        channel,
        notice,
        verbosity,
    };
    let mut selected = plan_content(report, facts, &budget, config)?;
    loop {
        let msg = measured(
            realize(&selected, verbosity, &config.templates)?,
            channel,
            notice,
            &config.density,
        );
        if msg.fits {
            return Ok(msg);
        }
        let weakest = selected
            .iter()
            .enumerate()
            .filter(|(_, f)| !f.predicate.is_core())
            .max_by(|(_, a), (_, b)| optional_order(a, b))
            .map(|(i, _)| i);
        match weakest {
            Some(i) => {
                selected.remove(i);
            }
            None => break,
        }
    }
    let core: Vec<Fact> = selected;
    if verbosity != Verbosity::Terse {
        let terse = measured(realize(&core, Verbosity::Terse, &config.templates)?, channel, notice, &config.density);
        if terse.fits {
            return Ok(terse);
        }
    }
    let time = core
        .iter()
        .find(|f| f.predicate == Predicate::HandoverRequest)
        .map_or(0.0, |f| f.time);
    Ok(measured(
        realize_compact(time, core, &config.templates)?,
        channel,
        notice,
        &config.density,
    ))
}
