//! SLA-aware service deployment workbench.
//!
//! SLA metrics are defined as regular attribute grammars over event traces
//! ([`dsl`]), evaluated incrementally as events arrive ([`trace`]), fed from
//! a deterministic discrete-event cloud simulation or replayed logs
//! ([`sim`]), statically sized before signing ([`negotiation`]) and kept in
//! bounds at runtime by a threshold autoscaler ([`autoscaler`]).

pub mod autoscaler;
pub mod dsl;
pub mod negotiation;
pub mod rat;
pub mod sim;
pub mod trace;

pub use rat::Rat;
