//! Criticality assessment: concept abstraction of predicted states, bounded
//! temporal queries over the resulting trace, and severity-weighted scoring.

pub mod abstraction;
pub mod ast;
pub mod catalog;
pub mod eval;
pub mod parser;
pub mod score;

pub use abstraction::{abstract_state, Proposition, PropositionSet};
pub use ast::{Formula, Valuation};
pub use catalog::{CatalogEntry, CatalogError, QueryCatalog};
pub use eval::{earliest_match, eval, eval_by_progression, eval_final, label, progress, EvalError};
pub use parser::{parse_query, ParseError};
pub use score::{score_trace, CriticalityReport, Level, QueryMatch, Thresholds};
