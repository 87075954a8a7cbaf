//! Deterministic synchronous execution of the averaging algorithms, trace
//! recording, metrics, and trace-level invariant checkers.
//!
//! A step reads the whole pre-round state and writes the post-round state,
//! so simultaneity never depends on evaluation order; identical configs
//! produce bit-identical traces.

use alloc::vec::Vec;
use core::fmt;

use crate::numeric::{Mode, Scalar};
use crate::protocol::{
    fold_from_virtual_ring, lift_to_virtual_ring, pairwise_update, ProtocolError, RingSize,
    WeightSchedule,
};
use crate::schedule::{
    odd_round_plan, even_round_matching, verify_matching, ColorLabel, Coloring, Edge, Matching,
    ScheduleError, StepKind,
};

#[derive(Clone, Debug, PartialEq)]
pub enum EngineError {
    Protocol(ProtocolError),
    Schedule(ScheduleError),
    /// The algorithm requires the other parity of ring size.
    WrongParity { m: usize, expected: &'static str },
    /// Initial values must be one per agent.
    WrongValueCount { expected: usize, got: usize },
    EmptyValues,
    /// The matching refers to agents outside the state vector.
    InvalidMatching,
    /// The trace does not carry the per-iteration records a checker needs.
    InsufficientTrace(&'static str),
    /// Checker argument outside its defined scope.
    OutOfScope(&'static str),
    /// The check is undefined for this algorithm's traces.
    UnsupportedAlgorithm { algorithm: AlgorithmTag },
}

impl fmt::Display for EngineError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EngineError::Protocol(e) => write!(f, "{e}"),
            EngineError::Schedule(e) => write!(f, "{e}"),
            EngineError::WrongParity { m, expected } => {
                write!(f, "ring size {m} has the wrong parity, expected {expected}")
            }
            EngineError::WrongValueCount { expected, got } => {
                write!(f, "expected {expected} initial values, got {got}")
            }
            EngineError::EmptyValues => f.write_str("value list must be non-empty"),
            EngineError::InvalidMatching => f.write_str("matching is invalid for this state"),
            EngineError::InsufficientTrace(what) => {
                write!(f, "trace lacks required detail: {what}")
            }
            EngineError::OutOfScope(what) => write!(f, "argument out of scope: {what}"),
            EngineError::UnsupportedAlgorithm { algorithm } => {
                write!(f, "check not defined for {algorithm} traces")
            }
        }
    }
}

impl core::error::Error for EngineError {}

impl From<ProtocolError> for EngineError {
    fn from(e: ProtocolError) -> Self {
        EngineError::Protocol(e)
    }
}

impl From<ScheduleError> for EngineError {
    fn from(e: ScheduleError) -> Self {
        EngineError::Schedule(e)
    }
}

/// Which algorithm produced a trace.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum AlgorithmTag {
    /// Paired exchanges on an even ring, done after `m/2` iterations.
    Even,
    /// Lifted subagent construction on an odd ring.
    Odd,
    /// Flood-everything baseline (ignores the gossip constraint).
    Flooding,
    /// Gossip with the weight pinned to 1/2 every round.
    ConstantGossip,
}

impl fmt::Display for AlgorithmTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AlgorithmTag::Even => "even",
            AlgorithmTag::Odd => "odd",
            AlgorithmTag::Flooding => "flooding",
            AlgorithmTag::ConstantGossip => "constant-gossip",
        })
    }
}

/// How much of a run the trace keeps. Checkers that replay identities over
/// rounds need at least per-iteration detail.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Verbosity {
    FinalOnly,
    PerIteration,
    /// One record per color sub-round of the odd algorithm; identical to
    /// `PerIteration` for the others.
    PerSubRound,
}

impl fmt::Display for Verbosity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verbosity::FinalOnly => "final-only",
            Verbosity::PerIteration => "per-iteration",
            Verbosity::PerSubRound => "per-sub-round",
        })
    }
}

/// Configuration echo kept with every trace.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TraceMeta {
    pub m: usize,
    /// Half size the weight schedule ran with.
    pub weight_n: usize,
    pub mode: Mode,
    pub algorithm: AlgorithmTag,
    pub coloring: Option<crate::schedule::ColoringChoice>,
    pub verbosity: Verbosity,
    /// Round horizon of non-terminating baselines.
    pub horizon: Option<usize>,
}

/// State snapshot after one executed plan entry (or one merged iteration,
/// depending on verbosity).
#[derive(Clone, Debug, PartialEq)]
pub struct RoundRecord<S> {
    /// 1-based position in the recorded sequence.
    pub round: usize,
    /// Weight index `k` the entry ran under.
    pub iteration: usize,
    pub kind: StepKind,
    pub color: Option<ColorLabel>,
    /// Agent-level edges activated (all edges of the iteration when records
    /// are merged per iteration).
    pub edges: Vec<Edge>,
    /// Weight used.
    pub alpha: S,
    /// Post-round estimates: `m` values for even-ring runs, `2m` subagent
    /// values for odd-ring runs.
    pub estimates: Vec<S>,
    /// Messages sent by this record: two per activated edge.
    pub messages: usize,
    /// Communication rounds completed once this record is done.
    pub comm_round: usize,
}

/// Totals of a run, available at every verbosity.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Totals {
    pub iterations: usize,
    pub comm_rounds: usize,
    pub messages: usize,
    /// Peak number of values a single agent had to store.
    pub peak_agent_values: usize,
}

/// Full record of one deterministic run.
#[derive(Clone, Debug, PartialEq)]
pub struct Trace<S> {
    pub meta: TraceMeta,
    /// The `m` input values (pre-lift for odd rings).
    pub initial: Vec<S>,
    pub records: Vec<RoundRecord<S>>,
    /// Per-agent results: every algorithm ends with `m` values.
    pub final_estimates: Vec<S>,
    pub totals: Totals,
}

impl<S: Scalar> Trace<S> {
    /// Estimates after iteration `k` (0 = initial state), in the run's
    /// state space (`2m` subagent values for odd runs).
    pub fn estimates_after(&self, k: usize) -> Result<&[S], EngineError> {
        if k == 0 {
            if self.meta.algorithm == AlgorithmTag::Odd {
                return Err(EngineError::InsufficientTrace(
                    "initial lifted state is not recorded; use `initial`",
                ));
            }
            return Ok(&self.initial);
        }
        self.records
            .iter()
            .rev()
            .find(|r| r.iteration == k)
            .map(|r| r.estimates.as_slice())
            .ok_or(EngineError::InsufficientTrace("iteration not recorded"))
    }
}

/// Derived measurements of a trace.
#[derive(Clone, Debug, PartialEq)]
pub struct Metrics<S> {
    /// Per recorded round, the largest |estimate - mean|.
    pub max_error_per_round: Vec<S>,
    /// Communication rounds completed when all estimates first equal the
    /// mean (mode-appropriate equality); `None` if never within the run.
    pub rounds_to_exact: Option<usize>,
    pub total_messages: usize,
    pub peak_agent_values: usize,
}

/// The reference average: the target every agent must reach.
pub fn mean_oracle<S: Scalar>(values: &[S]) -> Result<S, EngineError> {
    if values.is_empty() {
        return Err(EngineError::EmptyValues);
    }
    let sum = values
        .iter()
        .cloned()
        .fold(S::zero(), |acc, v| acc + v);
    Ok(sum / S::from_int(values.len() as i64))
}

/// Applies one synchronous exchange round: every edge of the matching swaps
/// values read from the pre-round state. Agents outside the matching keep
/// their estimates.
pub fn step<S: Scalar>(state: &[S], matching: &Matching, alpha: &S) -> Result<Vec<S>, EngineError> {
    if !verify_matching(matching.edges(), state.len()) {
        return Err(EngineError::InvalidMatching);
    }
    let mut next = state.to_vec();
    for edge in matching.edges() {
        let (i, j) = edge.endpoints();
        let (xi, xj) = pairwise_update(&state[i - 1], &state[j - 1], alpha);
        next[i - 1] = xi;
        next[j - 1] = xj;
    }
    Ok(next)
}

fn ensure_len<S>(initial: &[S], m: usize) -> Result<(), EngineError> {
    if initial.len() != m {
        return Err(EngineError::WrongValueCount {
            expected: m,
            got: initial.len(),
        });
    }
    Ok(())
}

/// 0-based index pairs of a matching's edges.
fn matching_pairs(matching: &Matching) -> Vec<(usize, usize)> {
    matching
        .edges()
        .iter()
        .map(|edge| {
            let (i, j) = edge.endpoints();
            (i - 1, j - 1)
        })
        .collect()
}

/// Runs the even-ring algorithm: `n = m/2` iterations alternating the two
/// perfect matchings under the time-varying weights. In exact mode every
/// agent holds the mean bit-for-bit after iteration `n`.
pub fn run_even<S: Scalar>(
    ring: RingSize,
    initial: &[S],
    verbosity: Verbosity,
) -> Result<Trace<S>, EngineError> {
    let m = ring.get();
    if !ring.is_even() {
        return Err(EngineError::WrongParity { m, expected: "even" });
    }
    ensure_len(initial, m)?;
    let n = ring.half();
    let schedule = WeightSchedule::new(n)?;

    let mut state = S::run_state(initial);
    let mut records = Vec::new();
    let mut messages = 0;
    for k in 1..=n {
        let matching = even_round_matching(k, ring)?;
        let (alpha_num, alpha_den) = schedule.alpha_ratio(k)?;
        let group = [matching_pairs(&matching)];
        S::apply_iteration(&mut state, &group, alpha_num, alpha_den, false);
        let sent = 2 * matching.len();
        messages += sent;
        if verbosity != Verbosity::FinalOnly {
            records.push(RoundRecord {
                round: k,
                iteration: k,
                kind: StepKind::Real,
                color: Some(if k % 2 == 1 { ColorLabel::A } else { ColorLabel::B }),
                edges: matching.edges().to_vec(),
                alpha: schedule.alpha(k)?,
                estimates: S::snapshot(&state),
                messages: sent,
                comm_round: k,
            });
        }
    }

    Ok(Trace {
        meta: TraceMeta {
            m,
            weight_n: n,
            mode: S::mode(),
            algorithm: AlgorithmTag::Even,
            coloring: None,
            verbosity,
            horizon: None,
        },
        initial: initial.to_vec(),
        records,
        final_estimates: S::snapshot(&state),
        totals: Totals {
            iterations: n,
            comm_rounds: n,
            messages,
            peak_agent_values: 1,
        },
    })
}

/// Runs the odd-ring algorithm on `m = 2n + 1` agents: lifts every agent
/// into an (a, b) subagent pair, drives the `2m`-subagent virtual ring
/// through `m` weight iterations (real-link iterations serialized into one
/// sub-round per color class), and folds the pairs back after the final
/// virtual combine. Costs `3n` real communication rounds.
pub fn run_odd<S: Scalar>(
    ring: RingSize,
    initial: &[S],
    coloring: &Coloring,
    coloring_choice: Option<crate::schedule::ColoringChoice>,
    verbosity: Verbosity,
) -> Result<Trace<S>, EngineError> {
    let m = ring.get();
    if ring.is_even() {
        return Err(EngineError::WrongParity { m, expected: "odd" });
    }
    ensure_len(initial, m)?;
    let plan = odd_round_plan(ring, coloring)?;
    let schedule = WeightSchedule::new(plan.weight_n)?;

    let lifted = lift_to_virtual_ring(initial)?;
    let mut state = S::run_state(&lifted);
    let mut records = Vec::new();
    let mut messages = 0;
    let mut comm_round = 0;
    let mut recorded_rounds = 0;

    let mut entry_idx = 0;
    while entry_idx < plan.entries.len() {
        let entry = &plan.entries[entry_idx];
        let k = entry.iteration;
        let (alpha_num, alpha_den) = schedule.alpha_ratio(k)?;
        match entry.kind {
            StepKind::Skip | StepKind::Virtual => {
                if entry.kind == StepKind::Virtual {
                    // each agent combines its pair over the virtual link
                    let pairs = (0..m).map(|a| (2 * a, 2 * a + 1)).collect();
                    S::apply_iteration(&mut state, &[pairs], alpha_num, alpha_den, false);
                }
                if verbosity != Verbosity::FinalOnly {
                    recorded_rounds += 1;
                    records.push(RoundRecord {
                        round: recorded_rounds,
                        iteration: k,
                        kind: entry.kind,
                        color: None,
                        edges: Vec::new(),
                        alpha: schedule.alpha(k)?,
                        estimates: S::snapshot(&state),
                        messages: 0,
                        comm_round,
                    });
                }
                entry_idx += 1;
            }
            StepKind::Real => {
                // one weight iteration serialized into color sub-rounds, all
                // reading the state from before the iteration
                let mut subrounds = Vec::new();
                while entry_idx < plan.entries.len() && plan.entries[entry_idx].iteration == k {
                    subrounds.push(&plan.entries[entry_idx]);
                    entry_idx += 1;
                }
                let mut groups = Vec::with_capacity(subrounds.len());
                for sub in &subrounds {
                    let mut pairs = Vec::with_capacity(sub.matching.len());
                    for edge in sub.matching.edges() {
                        let (i, j) = edge.oriented(ring)?;
                        // the real link joins i's b side to post(i)'s a side
                        pairs.push((2 * i - 1, 2 * j - 2));
                    }
                    groups.push(pairs);
                }
                let group_states = S::apply_iteration(
                    &mut state,
                    &groups,
                    alpha_num,
                    alpha_den,
                    verbosity == Verbosity::PerSubRound,
                );
                match verbosity {
                    Verbosity::PerSubRound => {
                        for (sub, estimates) in subrounds.iter().zip(group_states) {
                            let sent = 2 * sub.matching.len();
                            messages += sent;
                            comm_round += 1;
                            recorded_rounds += 1;
                            records.push(RoundRecord {
                                round: recorded_rounds,
                                iteration: k,
                                kind: StepKind::Real,
                                color: sub.color,
                                edges: sub.matching.edges().to_vec(),
                                alpha: schedule.alpha(k)?,
                                estimates,
                                messages: sent,
                                comm_round,
                            });
                        }
                    }
                    Verbosity::PerIteration | Verbosity::FinalOnly => {
                        let mut iteration_edges: Vec<Edge> = subrounds
                            .iter()
                            .flat_map(|sub| sub.matching.edges().iter().copied())
                            .collect();
                        messages += 2 * iteration_edges.len();
                        comm_round += subrounds.len();
                        if verbosity == Verbosity::PerIteration {
                            iteration_edges.sort_unstable();
                            recorded_rounds += 1;
                            records.push(RoundRecord {
                                round: recorded_rounds,
                                iteration: k,
                                kind: StepKind::Real,
                                color: None,
                                messages: 2 * iteration_edges.len(),
                                edges: iteration_edges,
                                alpha: schedule.alpha(k)?,
                                estimates: S::snapshot(&state),
                                comm_round,
                            });
                        }
                    }
                }
            }
        }
    }

    let final_estimates = fold_from_virtual_ring(&S::snapshot(&state))?;

    Ok(Trace {
        meta: TraceMeta {
            m,
            weight_n: plan.weight_n,
            mode: S::mode(),
            algorithm: AlgorithmTag::Odd,
            coloring: coloring_choice,
            verbosity,
            horizon: None,
        },
        initial: initial.to_vec(),
        records,
        final_estimates,
        totals: Totals {
            iterations: plan.iterations,
            comm_rounds: plan.comm_rounds,
            messages,
            peak_agent_values: 2,
        },
    })
}

/// Sum of estimates stays constant across every recorded round (doubled in
/// the lifted odd state, where each input appears twice). Exact equality in
/// rational mode, relative tolerance in float mode.
pub fn check_conservation<S: Scalar>(trace: &Trace<S>) -> Result<bool, EngineError> {
    if trace.meta.algorithm == AlgorithmTag::Flooding {
        return Err(EngineError::UnsupportedAlgorithm {
            algorithm: AlgorithmTag::Flooding,
        });
    }
    let sum = |values: &[S]| values.iter().cloned().fold(S::zero(), |acc, v| acc + v);
    let target = sum(&trace.initial);
    let record_target = if trace.meta.algorithm == AlgorithmTag::Odd {
        target.clone() + target.clone()
    } else {
        target.clone()
    };
    for record in &trace.records {
        if !sum(&record.estimates).close_to(&record_target) {
            return Ok(false);
        }
    }
    Ok(sum(&trace.final_estimates).close_to(&target))
}

/// Checks the window identity on an even-ring trace: the final estimate of
/// agent `i` equals the uniform average of the `2s` agents centered on `i`
/// at iteration `n - s - 1`, plus the two window-boundary estimates weighted
/// `(n - s) / 2n`. Defined for agents with `i + n` even and `1 <= s <= n-1`;
/// indices wrap around the ring.
///
/// With `s = n - 1` the window covers the whole ring and the identity
/// reduces to "the final estimate is the average of the initial values".
pub fn check_window_invariant<S: Scalar>(
    trace: &Trace<S>,
    i: usize,
    s: usize,
) -> Result<bool, EngineError> {
    if trace.meta.algorithm != AlgorithmTag::Even {
        return Err(EngineError::UnsupportedAlgorithm {
            algorithm: trace.meta.algorithm,
        });
    }
    let m = trace.meta.m;
    let n = trace.meta.weight_n;
    let ring = RingSize::new(m)?;
    if i == 0 || i > m {
        return Err(EngineError::Protocol(ProtocolError::AgentOutOfRange { i, m }));
    }
    if (i + n) % 2 != 0 {
        return Err(EngineError::OutOfScope("agent must have i + n even"));
    }
    if s == 0 || s >= n {
        return Err(EngineError::OutOfScope("s must lie in 1..=n-1"));
    }

    let at = |k: usize| trace.estimates_after(k);
    let source = at(n - s - 1)?;
    let value = |j: i64| -> &S { &source[ring.wrap(j) - 1] };
    let i = i as i64;
    let s_i = s as i64;

    let mut window_sum = S::zero();
    for j in (i - s_i + 1)..=(i + s_i) {
        window_sum = window_sum + value(j).clone();
    }
    let two_n = 2 * n as u64;
    let rhs = S::from_ratio(1, two_n) * window_sum
        + S::from_ratio((n - s) as i64, two_n)
            * (value(i - s_i).clone() + value(i + s_i + 1).clone());

    let lhs = &at(n)?[(i as usize) - 1];
    Ok(lhs.close_to(&rhs))
}

/// Dual-run perturbation probe: re-runs the even algorithm with agent `j`'s
/// initial value shifted by `delta` and reports, per agent, the first
/// iteration whose estimate changed (`None` if it never does). Information
/// travels at most one hop per round, so the first affected round can never
/// be smaller than the ring distance from `j`.
pub fn perturbation_sensitivity<S: Scalar>(
    ring: RingSize,
    initial: &[S],
    j: usize,
    delta: &S,
) -> Result<Vec<(usize, Option<usize>)>, EngineError> {
    let m = ring.get();
    if !ring.is_even() {
        return Err(EngineError::WrongParity { m, expected: "even" });
    }
    ensure_len(initial, m)?;
    if j == 0 || j > m {
        return Err(EngineError::Protocol(ProtocolError::AgentOutOfRange { i: j, m }));
    }

    let base = run_even(ring, initial, Verbosity::PerIteration)?;
    let mut perturbed = initial.to_vec();
    perturbed[j - 1] = perturbed[j - 1].clone() + delta.clone();
    let probed = run_even(ring, &perturbed, Verbosity::PerIteration)?;

    let mut report = Vec::with_capacity(m);
    for agent in 1..=m {
        let mut first = None;
        for (b, p) in base.records.iter().zip(&probed.records) {
            let differs = if S::EXACT {
                b.estimates[agent - 1] != p.estimates[agent - 1]
            } else {
                !b.estimates[agent - 1].close_to(&p.estimates[agent - 1])
            };
            if differs {
                first = Some(b.iteration);
                break;
            }
        }
        report.push((agent, first));
    }
    Ok(report)
}

/// Computes error curve, rounds-to-exact, and resource totals of a trace.
pub fn metrics_of<S: Scalar>(trace: &Trace<S>) -> Result<Metrics<S>, EngineError> {
    let mean = mean_oracle(&trace.initial)?;
    let mut max_error_per_round = Vec::with_capacity(trace.records.len());
    // inputs already at consensus need zero rounds
    let mut rounds_to_exact = if trace.initial.iter().all(|v| v.close_to(&mean)) {
        Some(0)
    } else {
        None
    };
    for record in &trace.records {
        let mut worst = S::zero();
        let mut all_exact = true;
        for estimate in &record.estimates {
            let err = (estimate.clone() - mean.clone()).abs();
            if err > worst {
                worst = err;
            }
            if !estimate.close_to(&mean) {
                all_exact = false;
            }
        }
        if all_exact && rounds_to_exact.is_none() {
            rounds_to_exact = Some(record.comm_round);
        }
        max_error_per_round.push(worst);
    }
    if rounds_to_exact.is_none() && trace.final_estimates.iter().all(|e| e.close_to(&mean)) {
        // coarse traces still know whether the run ended exact
        rounds_to_exact = Some(trace.totals.comm_rounds);
    }
    Ok(Metrics {
        max_error_per_round,
        rounds_to_exact,
        total_messages: trace.totals.messages,
        peak_agent_values: trace.totals.peak_agent_values,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schedule::{coloring_for, ColoringChoice};
    use alloc::vec;
    use num_rational::BigRational;

    fn rat(num: i64, den: i64) -> BigRational {
        assert!(den > 0);
        BigRational::from_ratio(num, den as u64)
    }

    fn rats(values: &[(i64, i64)]) -> Vec<BigRational> {
        values.iter().map(|&(n, d)| rat(n, d)).collect()
    }

    fn ring(m: usize) -> RingSize {
        RingSize::new(m).unwrap()
    }

    #[test]
    fn mean_oracle_examples() {
        assert_eq!(
            mean_oracle(&rats(&[(0, 1), (1, 1), (2, 1), (3, 1)])).unwrap(),
            rat(3, 2)
        );
        assert_eq!(mean_oracle(&rats(&[(0, 1), (1, 1), (2, 1)])).unwrap(), rat(1, 1));
        assert_eq!(mean_oracle(&vec![rat(7, 3); 5]).unwrap(), rat(7, 3));
        assert_eq!(
            mean_oracle::<BigRational>(&[]),
            Err(EngineError::EmptyValues)
        );
    }

    #[test]
    fn step_applies_matching_from_snapshot() {
        let state = rats(&[(0, 1), (1, 1), (2, 1), (3, 1), (4, 1), (5, 1)]);
        let matching = even_round_matching(1, ring(6)).unwrap();
        let next = step(&state, &matching, &rat(1, 2)).unwrap();
        assert_eq!(next, rats(&[(1, 2), (1, 2), (5, 2), (5, 2), (9, 2), (9, 2)]));

        // a single active edge moves its endpoints to the midpoint and
        // leaves everyone else alone
        let single = Matching::new(vec![crate::schedule::Edge::new(1, 2).unwrap()], 6).unwrap();
        let next = step(&state, &single, &rat(1, 2)).unwrap();
        assert_eq!(next, rats(&[(1, 2), (1, 2), (2, 1), (3, 1), (4, 1), (5, 1)]));

        // empty matching and zero weight are both no-ops
        assert_eq!(step(&state, &Matching::empty(), &rat(1, 2)).unwrap(), state);
        assert_eq!(step(&state, &matching, &rat(0, 1)).unwrap(), state);
    }

    #[test]
    fn step_rejects_matchings_that_do_not_fit() {
        let state = rats(&[(0, 1), (1, 1), (2, 1), (3, 1)]);
        // built for an 8-ring, applied to 4 agents
        let matching = even_round_matching(2, ring(8)).unwrap();
        assert_eq!(
            step(&state, &matching, &rat(1, 2)),
            Err(EngineError::InvalidMatching)
        );
    }

    #[test]
    fn run_even_four_agents_frozen_trace() {
        let trace = run_even(
            ring(4),
            &rats(&[(0, 1), (1, 1), (2, 1), (3, 1)]),
            Verbosity::PerIteration,
        )
        .unwrap();
        assert_eq!(
            trace.records[0].estimates,
            rats(&[(1, 2), (1, 2), (5, 2), (5, 2)])
        );
        assert_eq!(
            trace.records[1].estimates,
            rats(&[(3, 2), (3, 2), (3, 2), (3, 2)])
        );
        assert_eq!(trace.final_estimates, vec![rat(3, 2); 4]);
        assert_eq!(trace.totals.comm_rounds, 2);
        assert_eq!(trace.totals.messages, 8);
        assert_eq!(trace.totals.peak_agent_values, 1);
    }

    #[test]
    fn run_even_reaches_the_mean_exactly() {
        let values = rats(&[(5, 3), (-7, 2), (11, 4), (0, 1), (9, 5), (-1, 3)]);
        let trace = run_even(ring(6), &values, Verbosity::PerIteration).unwrap();
        let mean = mean_oracle(&values).unwrap();
        assert_eq!(trace.final_estimates, vec![mean; 6]);
        assert_eq!(trace.totals.comm_rounds, 3);
        assert!(check_conservation(&trace).unwrap());
    }

    #[test]
    fn run_even_keeps_equal_inputs_fixed() {
        let values = vec![rat(4, 7); 8];
        let trace = run_even(ring(8), &values, Verbosity::PerIteration).unwrap();
        for record in &trace.records {
            assert_eq!(record.estimates, values);
        }
    }

    #[test]
    fn run_even_rejects_odd_rings_and_bad_lengths() {
        assert!(matches!(
            run_even(ring(5), &rats(&[(1, 1); 5]), Verbosity::FinalOnly),
            Err(EngineError::WrongParity { .. })
        ));
        assert!(matches!(
            run_even(ring(4), &rats(&[(1, 1); 3]), Verbosity::FinalOnly),
            Err(EngineError::WrongValueCount { .. })
        ));
    }

    #[test]
    fn run_odd_triangle_frozen_trace() {
        let coloring = coloring_for(ring(3), ColoringChoice::Canonical).unwrap();
        let trace = run_odd(
            ring(3),
            &rats(&[(0, 1), (1, 1), (2, 1)]),
            &coloring,
            Some(ColoringChoice::Canonical),
            Verbosity::PerIteration,
        )
        .unwrap();

        // k=1 skip leaves the lifted duplicates in place
        assert_eq!(
            trace.records[0].estimates,
            rats(&[(0, 1), (0, 1), (1, 1), (1, 1), (2, 1), (2, 1)])
        );
        // k=2 real exchange with weight 2/3
        assert_eq!(trace.records[1].alpha, rat(2, 3));
        assert_eq!(
            trace.records[1].estimates,
            rats(&[(4, 3), (2, 3), (1, 3), (5, 3), (4, 3), (2, 3)])
        );
        // k=3 virtual combine with weight 1/2 settles every pair on the mean
        assert_eq!(trace.records[2].alpha, rat(1, 2));
        assert_eq!(trace.records[2].estimates, vec![rat(1, 1); 6]);
        assert_eq!(trace.final_estimates, vec![rat(1, 1); 3]);
        assert_eq!(trace.totals.comm_rounds, 3);
        assert_eq!(trace.totals.peak_agent_values, 2);
        assert!(check_conservation(&trace).unwrap());
    }

    #[test]
    fn run_odd_keeps_equal_inputs_fixed() {
        let values = vec![rat(-9, 5); 7];
        let coloring = coloring_for(ring(7), ColoringChoice::Canonical).unwrap();
        let trace = run_odd(
            ring(7),
            &values,
            &coloring,
            None,
            Verbosity::PerIteration,
        )
        .unwrap();
        for record in &trace.records {
            assert_eq!(record.estimates, vec![rat(-9, 5); 14]);
        }
        assert_eq!(trace.final_estimates, values);
    }

    #[test]
    fn run_odd_matches_mean_for_generic_inputs() {
        let values = rats(&[(3, 7), (-11, 4), (5, 2), (1, 6), (-9, 8), (2, 3), (7, 5)]);
        let coloring = coloring_for(ring(7), ColoringChoice::Canonical).unwrap();
        let trace = run_odd(
            ring(7),
            &values,
            &coloring,
            Some(ColoringChoice::Canonical),
            Verbosity::PerSubRound,
        )
        .unwrap();
        let mean = mean_oracle(&values).unwrap();
        assert_eq!(trace.final_estimates, vec![mean; 7]);
        assert_eq!(trace.totals.comm_rounds, 9);
        assert!(check_conservation(&trace).unwrap());
    }

    #[test]
    fn run_odd_equals_even_run_on_lifted_ring() {
        // the lifted construction is exactly the even algorithm on the
        // 2m-subagent ring; sub-round serialization must not change states
        let values = rats(&[(1, 2), (-3, 4), (7, 3), (0, 1), (5, 6)]);
        let m = values.len();
        let coloring = coloring_for(ring(m), ColoringChoice::Canonical).unwrap();
        let odd = run_odd(
            ring(m),
            &values,
            &coloring,
            None,
            Verbosity::PerIteration,
        )
        .unwrap();

        let lifted = lift_to_virtual_ring(&values).unwrap();
        let even = run_even(ring(2 * m), &lifted, Verbosity::PerIteration).unwrap();

        for k in 2..=m {
            assert_eq!(
                odd.estimates_after(k).unwrap(),
                even.estimates_after(k).unwrap(),
                "iteration {k}"
            );
        }
        assert_eq!(
            odd.final_estimates,
            fold_from_virtual_ring(&even.final_estimates).unwrap()
        );
    }

    #[test]
    fn window_invariant_holds_on_even_traces() {
        let values = rats(&[(0, 1), (1, 1), (2, 1), (3, 1)]);
        let trace = run_even(ring(4), &values, Verbosity::PerIteration).unwrap();
        // n = 2: in-scope agents have i + 2 even, s = 1 only
        for i in [2, 4] {
            assert!(check_window_invariant(&trace, i, 1).unwrap());
        }
        assert!(matches!(
            check_window_invariant(&trace, 1, 1),
            Err(EngineError::OutOfScope(_))
        ));
        assert!(matches!(
            check_window_invariant(&trace, 2, 0),
            Err(EngineError::OutOfScope(_))
        ));
        assert!(matches!(
            check_window_invariant(&trace, 2, 2),
            Err(EngineError::OutOfScope(_))
        ));
    }

    #[test]
    fn window_invariant_all_scopes_m8() {
        let values = rats(&[(9, 2), (-1, 3), (4, 1), (0, 1), (7, 6), (-5, 4), (2, 9), (8, 7)]);
        let trace = run_even(ring(8), &values, Verbosity::PerIteration).unwrap();
        let n = 4;
        for i in 1..=8 {
            if (i + n) % 2 != 0 {
                continue;
            }
            for s in 1..n {
                assert!(
                    check_window_invariant(&trace, i, s).unwrap(),
                    "agent {i}, s {s}"
                );
            }
        }
    }

    #[test]
    fn window_invariant_detects_wrong_final_weight() {
        // a corrupted last-iteration weight must break the identity
        let values = rats(&[(0, 1), (1, 1), (2, 1), (3, 1), (4, 1), (5, 1), (6, 1), (7, 1)]);
        let r = ring(8);
        let n = 4;
        let schedule = WeightSchedule::new(n).unwrap();
        let mut state = values.clone();
        let mut records = Vec::new();
        for k in 1..=n {
            let matching = even_round_matching(k, r).unwrap();
            let alpha = if k == n { rat(1, 3) } else { schedule.alpha(k).unwrap() };
            state = step(&state, &matching, &alpha).unwrap();
            records.push(RoundRecord {
                round: k,
                iteration: k,
                kind: StepKind::Real,
                color: None,
                edges: matching.edges().to_vec(),
                alpha,
                estimates: state.clone(),
                messages: 8,
                comm_round: k,
            });
        }
        let trace = Trace {
            meta: TraceMeta {
                m: 8,
                weight_n: n,
                mode: Mode::Exact,
                algorithm: AlgorithmTag::Even,
                coloring: None,
                verbosity: Verbosity::PerIteration,
                horizon: None,
            },
            initial: values,
            records,
            final_estimates: state,
            totals: Totals {
                iterations: n,
                comm_rounds: n,
                messages: 32,
                peak_agent_values: 1,
            },
        };
        let mut any_failed = false;
        for i in [2, 4, 6, 8] {
            for s in 1..n {
                if !check_window_invariant(&trace, i, s).unwrap() {
                    any_failed = true;
                }
            }
        }
        assert!(any_failed);
    }

    #[test]
    fn perturbation_respects_ring_distance() {
        let r = ring(8);
        let values = rats(&[(3, 1), (1, 4), (-2, 5), (7, 2), (0, 1), (5, 3), (-8, 7), (9, 4)]);
        let j = 3;
        let report = perturbation_sensitivity(r, &values, j, &rat(1, 1)).unwrap();
        for &(agent, first) in &report {
            let distance = r.distance(agent, j).unwrap();
            let first = first.expect("perturbation reaches every agent by round n");
            assert!(first >= distance.max(1), "agent {agent}");
        }
        // the perturbed agent itself moves at its first activation
        assert_eq!(report[j - 1].1, Some(1));
        // an agent at distance 4 stays clean before round 4
        assert_eq!(report[6].1, Some(4));
    }

    #[test]
    fn zero_perturbation_changes_nothing() {
        let r = ring(6);
        let values = rats(&[(1, 1), (2, 1), (3, 1), (4, 1), (5, 1), (6, 1)]);
        let report = perturbation_sensitivity(r, &values, 2, &rat(0, 1)).unwrap();
        assert!(report.iter().all(|(_, first)| first.is_none()));
    }

    #[test]
    fn metrics_report_rounds_to_exact_and_memory() {
        let values = rats(&[(0, 1), (1, 1), (2, 1), (3, 1), (4, 1), (5, 1)]);
        let trace = run_even(ring(6), &values, Verbosity::PerIteration).unwrap();
        let metrics = metrics_of(&trace).unwrap();
        assert_eq!(metrics.rounds_to_exact, Some(3));
        assert_eq!(metrics.peak_agent_values, 1);
        assert_eq!(metrics.total_messages, 18);
        assert_eq!(metrics.max_error_per_round.last().unwrap(), &rat(0, 1));

        // all-equal inputs have zero error everywhere and need zero rounds
        let flat = vec![rat(2, 1); 6];
        let trace = run_even(ring(6), &flat, Verbosity::PerIteration).unwrap();
        let metrics = metrics_of(&trace).unwrap();
        assert!(metrics.max_error_per_round.iter().all(|e| e == &rat(0, 1)));
        assert_eq!(metrics.rounds_to_exact, Some(0));
    }

    #[test]
    fn final_only_traces_still_know_exactness() {
        let values = rats(&[(0, 1), (1, 1), (2, 1), (3, 1)]);
        let trace = run_even(ring(4), &values, Verbosity::FinalOnly).unwrap();
        assert!(trace.records.is_empty());
        let metrics = metrics_of(&trace).unwrap();
        assert_eq!(metrics.rounds_to_exact, Some(2));
        assert!(check_conservation(&trace).unwrap());
    }

    #[test]
    fn determinism_bit_identical_traces() {
        let values = rats(&[(1, 3), (2, 7), (-5, 2), (11, 6), (0, 1), (4, 9), (-7, 8)]);
        let coloring = coloring_for(ring(7), ColoringChoice::Canonical).unwrap();
        let a = run_odd(ring(7), &values, &coloring, None, Verbosity::PerSubRound).unwrap();
        let b = run_odd(ring(7), &values, &coloring, None, Verbosity::PerSubRound).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn pair_symmetry_at_the_last_even_round() {
        let values = rats(&[(3, 5), (-1, 2), (9, 7), (4, 3), (0, 1), (6, 5), (-2, 9), (1, 8)]);
        let trace = run_even(ring(8), &values, Verbosity::PerIteration).unwrap();
        let last = trace.records.last().unwrap();
        for edge in &last.edges {
            let (i, j) = edge.endpoints();
            assert_eq!(last.estimates[i - 1], last.estimates[j - 1]);
        }
    }
}
