//! Event-driven simulation of all three levels.

mod engine;
mod trace;

pub use engine::{elaborate, SimError, Simulator, Summary, DEFAULT_MAX_DELTA};
pub use trace::{write_vcd, SignalInfo, Trace, TraceRecord};
