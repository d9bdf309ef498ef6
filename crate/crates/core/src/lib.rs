//! Core of the handover stack: an abstract driving world, temporal
//! criticality queries, a foresight planner, message generation, a driver
//! model and the session orchestrator that ties them together.

pub mod road;
pub mod tql;
pub mod world;
pub mod driver;
pub mod scenario;
pub mod planner;
pub mod nlg;
pub mod orchestrator;
