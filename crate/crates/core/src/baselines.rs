//! Comparison baselines: flood-everything (fast but memory- and
//! message-hungry, and it ignores the pairwise constraint) and gossip with
//! the weight pinned to 1/2 (pairwise-compliant but exact only on special
//! ring sizes).

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use crate::engine::{
    mean_oracle, AlgorithmTag, EngineError, RoundRecord, Totals, Trace, TraceMeta,
    Verbosity,
};
use crate::numeric::Scalar;
use crate::protocol::RingSize;
use crate::schedule::{even_round_matching, ColorLabel, StepKind};

/// Per-agent collection state of the flooding baseline: every value learned
/// so far, keyed by its origin.
#[derive(Clone, Debug, PartialEq)]
pub struct FloodState<S> {
    pub collected: Vec<BTreeMap<usize, S>>,
}

impl<S: Scalar> FloodState<S> {
    fn new(initial: &[S]) -> Self {
        FloodState {
            collected: initial
                .iter()
                .enumerate()
                .map(|(idx, v)| {
                    let mut set = BTreeMap::new();
                    set.insert(idx + 1, v.clone());
                    set
                })
                .collect(),
        }
    }

    fn complete(&self, m: usize) -> bool {
        self.collected.iter().all(|set| set.len() == m)
    }
}

/// Flooding: each round every agent forwards its whole collection to both
/// neighbors (deliberately ignoring the pairwise constraint), until everyone
/// holds all `m` values and can average locally. Terminates after the ring
/// diameter; messages are counted as (origin, value) pairs transferred and
/// each agent ends up storing `m` values.
///
/// The per-round estimate reported for an agent is the mean of what it has
/// collected so far, so estimates converge to the true mean exactly when the
/// collections complete.
pub fn run_flooding<S: Scalar>(
    ring: RingSize,
    initial: &[S],
    verbosity: Verbosity,
) -> Result<Trace<S>, EngineError> {
    let m = ring.get();
    if initial.len() != m {
        return Err(EngineError::WrongValueCount {
            expected: m,
            got: initial.len(),
        });
    }

    let mut flood = FloodState::new(initial);
    let mut records = Vec::new();
    let mut rounds = 0;
    let mut messages = 0;
    let mut peak = 1;

    while !flood.complete(m) {
        rounds += 1;
        let snapshot = flood.clone();
        let mut sent = 0;
        for i in 1..=m {
            let payload = &snapshot.collected[i - 1];
            sent += 2 * payload.len();
            for neighbor in [ring.pre(i)?, ring.post(i)?] {
                for (origin, value) in payload {
                    flood.collected[neighbor - 1]
                        .entry(*origin)
                        .or_insert_with(|| value.clone());
                }
            }
        }
        messages += sent;
        peak = peak.max(flood.collected.iter().map(BTreeMap::len).max().unwrap_or(0));

        if verbosity != Verbosity::FinalOnly {
            let estimates = flood
                .collected
                .iter()
                .map(|set| {
                    let values: Vec<S> = set.values().cloned().collect();
                    mean_oracle(&values)
                })
                .collect::<Result<Vec<S>, _>>()?;
            records.push(RoundRecord {
                round: rounds,
                iteration: rounds,
                kind: StepKind::Real,
                color: None,
                edges: Vec::new(),
                alpha: S::zero(),
                estimates,
                messages: sent,
                comm_round: rounds,
            });
        }
    }

    let final_estimates = flood
        .collected
        .iter()
        .map(|set| {
            let values: Vec<S> = set.values().cloned().collect();
            mean_oracle(&values)
        })
        .collect::<Result<Vec<S>, _>>()?;

    Ok(Trace {
        meta: TraceMeta {
            m,
            weight_n: ring.half(),
            mode: S::mode(),
            algorithm: AlgorithmTag::Flooding,
            coloring: None,
            verbosity,
            horizon: None,
        },
        initial: initial.to_vec(),
        records,
        final_estimates,
        totals: Totals {
            iterations: rounds,
            comm_rounds: rounds,
            messages,
            peak_agent_values: peak,
        },
    })
}

/// Gossip on an even ring with the weight fixed at 1/2, using the same
/// alternating matchings as the finite-time algorithm so the two differ only
/// in their weights. Runs for `horizon` rounds and the trace shows whether
/// exact consensus was ever reached (generically it is not, unless the ring
/// size cooperates).
pub fn run_constant_gossip<S: Scalar>(
    ring: RingSize,
    initial: &[S],
    horizon: usize,
    verbosity: Verbosity,
) -> Result<Trace<S>, EngineError> {
    let m = ring.get();
    if !ring.is_even() {
        return Err(EngineError::WrongParity { m, expected: "even" });
    }
    if initial.len() != m {
        return Err(EngineError::WrongValueCount {
            expected: m,
            got: initial.len(),
        });
    }
    if horizon == 0 {
        return Err(EngineError::OutOfScope("horizon must be at least 1"));
    }

    let mut state = S::run_state(initial);
    let mut records = Vec::new();
    let mut messages = 0;
    for k in 1..=horizon {
        let matching = even_round_matching(k, ring)?;
        let pairs = matching
            .edges()
            .iter()
            .map(|edge| {
                let (i, j) = edge.endpoints();
                (i - 1, j - 1)
            })
            .collect();
        S::apply_iteration(&mut state, &[pairs], 1, 2, false);
        let sent = 2 * matching.len();
        messages += sent;
        if verbosity != Verbosity::FinalOnly {
            records.push(RoundRecord {
                round: k,
                iteration: k,
                kind: StepKind::Real,
                color: Some(if k % 2 == 1 { ColorLabel::A } else { ColorLabel::B }),
                edges: matching.edges().to_vec(),
                alpha: S::from_ratio(1, 2),
                estimates: S::snapshot(&state),
                messages: sent,
                comm_round: k,
            });
        }
    }

    Ok(Trace {
        meta: TraceMeta {
            m,
            weight_n: ring.half(),
            mode: S::mode(),
            algorithm: AlgorithmTag::ConstantGossip,
            coloring: None,
            verbosity,
            horizon: Some(horizon),
        },
        initial: initial.to_vec(),
        records,
        final_estimates: S::snapshot(&state),
        totals: Totals {
            iterations: horizon,
            comm_rounds: horizon,
            messages,
            peak_agent_values: 1,
        },
    })
}

/// Default horizon for baselines without a natural stopping point.
pub fn default_horizon(ring: RingSize) -> usize {
    10 * ring.get()
}
