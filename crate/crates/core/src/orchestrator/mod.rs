//! The mixed-initiative control loop: monitoring, plan adoption, alerts,
//! escalation, transfer of control and the minimal-risk stop.

pub mod events;
pub mod metrics;
pub mod session;

pub use events::{from_jsonl, to_jsonl, Event, EventKind, LogError};
pub use metrics::{metrics, MetricsReport, VerdictCounts};
pub use session::{
    replay, state_sequence, HandoverSession, MachineState, Responder, SessionConfig, SessionError, SessionSnapshot,
    TimingPolicy,
};

use crate::driver::{DriverError, DriverProfile, Modality, ReactionTable};

/// Modalities ranked for `profile`: lowest mean reaction time first, then
/// higher preference score, then the fixed order TACTILE, AUDIO, VISUAL.
pub fn rank_modalities(profile: &DriverProfile, table: &ReactionTable) -> Result<Vec<Modality>, DriverError> {
    let mut ranked = Modality::ALL
        .iter()
        .map(|m| Ok((*m, table.get(*m, profile.load, profile.condition)?.mean_ms)))
        .collect::<Result<Vec<_>, DriverError>>()?;
    ranked.sort_by(|(ma, a), (mb, b)| {
        a.total_cmp(b)
            .then(table.preference(*mb).cmp(&table.preference(*ma)))
            .then(ma.cmp(mb))
    });
    Ok(ranked.into_iter().map(|(m, _)| m).collect())
}

/// Alert channels for an escalation level: the best modality at level 0,
/// the next best at level 1 and all three at level 2.
pub fn select_modality(profile: &DriverProfile, table: &ReactionTable, level: u8) -> Result<Vec<Modality>, DriverError> {
    let ranked = rank_modalities(profile, table)?;
    Ok(match level {
        0 => vec![ranked[0]],
        1 => vec![ranked[1]],
        _ => ranked,
    })
}
