//! Finite-time distributed averaging on ring networks under a pairwise
//! communication constraint.
//!
//! Every agent on a ring holds one value and may talk to at most one
//! neighbor per round. With the right time-varying convex weights, an even
//! ring of `2n` agents reaches the exact average in `n` rounds (the ring
//! diameter, so this is as fast as information can travel). Odd rings are
//! handled by splitting each agent into two subagents joined by a free
//! internal link, which yields the exact average after `3n` communication
//! rounds for `2n + 1` agents.
//!
//! The crate provides the protocol math ([`protocol`]), the matching
//! schedules and edge colorings that keep rounds pairwise-compliant
//! ([`schedule`]), a deterministic synchronous simulator with trace
//! recording and invariant checkers ([`engine`]), comparison baselines
//! ([`baselines`]), and a mode-dispatching runner ([`runner`]). Arithmetic
//! is generic over [`numeric::Scalar`]: exact rationals for verification,
//! f64 for benchmarking.
//!
//! Everything is `no_std` (with `alloc`); IO, serialization, and the CLI
//! live in the companion `ringavg-cli` crate.

#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod baselines;
pub mod engine;
pub mod numeric;
pub mod protocol;
pub mod runner;
pub mod schedule;

pub use baselines::{default_horizon, run_constant_gossip, run_flooding, FloodState};
pub use engine::{
    check_conservation, check_window_invariant, mean_oracle, metrics_of,
    perturbation_sensitivity, run_even, run_odd, step, AlgorithmTag, EngineError, Metrics,
    RoundRecord, Totals, Trace, TraceMeta, Verbosity,
};
pub use numeric::{seeded_values, Mode, Scalar, Value, FLOAT_RELATIVE_TOLERANCE};
pub use protocol::{
    fold_from_virtual_ring, lift_to_virtual_ring, pairwise_update, weight, ProtocolError,
    RingSize, SubagentPair, WeightSchedule,
};
pub use runner::{simulate, Algorithm, AnyTrace, InitialValues, SimulationConfig};
pub use schedule::{
    coloring_for, even_round_matching, even_round_plan, odd_round_plan, three_coloring,
    two_coloring, verify_matching, ColorClass, ColorLabel, Coloring, ColoringChoice, Edge,
    Matching, PlanEntry, RoundPlan, ScheduleError, StepKind,
};
