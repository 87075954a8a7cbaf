//! Pure protocol mathematics: ring topology, the time-varying weight
//! schedule, the symmetric pairwise update, and the subagent lifting that
//! turns an odd ring into an even virtual ring of twice the size.
//!
//! Agent ids are 1-based everywhere, matching the usual presentation of ring
//! protocols; slices indexed by agents document the `-1` offset at the point
//! of use.

use alloc::vec::Vec;
use core::fmt;

use crate::numeric::{ModeMismatch, Scalar, Value};

/// Errors from the protocol primitives.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ProtocolError {
    /// Ring sizes of 1 or 2 have nothing to average over a cycle.
    RingTooSmall { m: usize },
    /// Agent id outside `1..=m`.
    AgentOutOfRange { i: usize, m: usize },
    /// The weight schedule is undefined for index 0.
    ZeroScheduleIndex,
    /// Lifting requires an odd ring, folding an even-length vector.
    ParityMismatch { len: usize, expected: &'static str },
    /// A subagent pair disagreed where the protocol guarantees agreement.
    PairDivergence { agent: usize },
    /// Values of different numeric modes met in one operation.
    ModeMismatch(ModeMismatch),
}

impl fmt::Display for ProtocolError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ProtocolError::RingTooSmall { m } => {
                write!(f, "ring size must be greater than 2, got {m}")
            }
            ProtocolError::AgentOutOfRange { i, m } => {
                write!(f, "agent id {i} out of range 1..={m}")
            }
            ProtocolError::ZeroScheduleIndex => {
                f.write_str("weight schedule is undefined for index 0")
            }
            ProtocolError::ParityMismatch { len, expected } => {
                write!(f, "expected {expected} length, got {len}")
            }
            ProtocolError::PairDivergence { agent } => {
                write!(f, "subagent pair of agent {agent} diverged at termination")
            }
            ProtocolError::ModeMismatch(e) => write!(f, "{e}"),
        }
    }
}

impl core::error::Error for ProtocolError {}

impl From<ModeMismatch> for ProtocolError {
    fn from(e: ModeMismatch) -> Self {
        ProtocolError::ModeMismatch(e)
    }
}

/// Number of agents on the ring. Only sizes above 2 are meaningful.
///
/// The parity of `m` selects the algorithm: even rings pair up directly,
/// odd rings run the lifted construction on `2m` subagents.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct RingSize(usize);

impl RingSize {
    pub fn new(m: usize) -> Result<Self, ProtocolError> {
        if m <= 2 {
            return Err(ProtocolError::RingTooSmall { m });
        }
        Ok(RingSize(m))
    }

    pub fn get(self) -> usize {
        self.0
    }

    pub fn is_even(self) -> bool {
        self.0 % 2 == 0
    }

    /// Floor half of the ring size: the iteration count `n` of the even
    /// algorithm (`m = 2n`) and the `n` in the odd case's `3n` communication
    /// rounds (`m = 2n + 1`).
    pub fn half(self) -> usize {
        self.0 / 2
    }

    /// Ring diameter: the maximum hop distance between two agents.
    pub fn diameter(self) -> usize {
        self.0 / 2
    }

    fn check(self, i: usize) -> Result<(), ProtocolError> {
        if i == 0 || i > self.0 {
            return Err(ProtocolError::AgentOutOfRange { i, m: self.0 });
        }
        Ok(())
    }

    /// Successor neighbor on the ring: `i + 1`, wrapping `m -> 1`.
    pub fn post(self, i: usize) -> Result<usize, ProtocolError> {
        self.check(i)?;
        Ok(if i == self.0 { 1 } else { i + 1 })
    }

    /// Predecessor neighbor on the ring: `i - 1`, wrapping `1 -> m`.
    pub fn pre(self, i: usize) -> Result<usize, ProtocolError> {
        self.check(i)?;
        Ok(if i == 1 { self.0 } else { i - 1 })
    }

    /// Hop distance between two agents along the shorter arc.
    pub fn distance(self, i: usize, j: usize) -> Result<usize, ProtocolError> {
        self.check(i)?;
        self.check(j)?;
        let d = i.abs_diff(j);
        Ok(d.min(self.0 - d))
    }

    /// Wraps an arbitrary signed index into `1..=m`.
    pub fn wrap(self, i: i64) -> usize {
        let m = self.0 as i64;
        (((i - 1).rem_euclid(m)) + 1) as usize
    }
}

impl fmt::Display for RingSize {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// The time-varying convex-combination weights driving the protocol on a
/// ring of `2n` agents:
///
/// * `alpha(k) = k / (k + 1)` for `1 <= k < n`,
/// * `alpha(n) = 1/2`,
/// * `alpha(k) = 0` for `k > n` (estimates freeze, the run can stop).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct WeightSchedule {
    n: usize,
}

impl WeightSchedule {
    pub fn new(n: usize) -> Result<Self, ProtocolError> {
        if n == 0 {
            return Err(ProtocolError::ZeroScheduleIndex);
        }
        Ok(WeightSchedule { n })
    }

    pub fn n(self) -> usize {
        self.n
    }

    /// Weight for iteration `k >= 1` as an integer ratio `(num, den)`.
    pub fn alpha_ratio(self, k: usize) -> Result<(u64, u64), ProtocolError> {
        if k == 0 {
            return Err(ProtocolError::ZeroScheduleIndex);
        }
        Ok(if k < self.n {
            (k as u64, k as u64 + 1)
        } else if k == self.n {
            (1, 2)
        } else {
            (0, 1)
        })
    }

    /// Weight for iteration `k >= 1`.
    pub fn alpha<S: Scalar>(self, k: usize) -> Result<S, ProtocolError> {
        let (num, den) = self.alpha_ratio(k)?;
        Ok(S::from_ratio(num as i64, den))
    }
}

/// Weight `alpha_k` of the schedule for half ring size `n`.
pub fn weight<S: Scalar>(k: usize, n: usize) -> Result<S, ProtocolError> {
    WeightSchedule::new(n)?.alpha(k)
}

/// The symmetric gossip exchange: both endpoints move toward each other by
/// the convex weight `alpha`, so their sum is conserved exactly.
///
/// Returns `((1 - alpha) * xi + alpha * xj, (1 - alpha) * xj + alpha * xi)`.
pub fn pairwise_update<S: Scalar>(xi: &S, xj: &S, alpha: &S) -> (S, S) {
    let keep = S::one() - alpha.clone();
    (
        keep.clone() * xi.clone() + alpha.clone() * xj.clone(),
        keep * xj.clone() + alpha.clone() * xi.clone(),
    )
}

/// Mode-checked variant of [`pairwise_update`] over dynamic [`Value`]s.
pub fn pairwise_update_checked(
    xi: &Value,
    xj: &Value,
    alpha: &Value,
) -> Result<(Value, Value), ProtocolError> {
    match (xi, xj, alpha) {
        (Value::Exact(a), Value::Exact(b), Value::Exact(w)) => {
            let (x, y) = pairwise_update(a, b, w);
            Ok((Value::Exact(x), Value::Exact(y)))
        }
        (Value::Float(a), Value::Float(b), Value::Float(w)) => {
            let (x, y) = pairwise_update(a, b, w);
            Ok((Value::Float(x), Value::Float(y)))
        }
        _ => {
            let left = xi.mode();
            let right = if xj.mode() != left { xj.mode() } else { alpha.mode() };
            Err(ModeMismatch { left, right }.into())
        }
    }
}

/// The two halves an odd-ring agent is split into. The `a` side talks to the
/// predecessor's `b` side over a real link; `a` and `b` are joined by the
/// agent-internal virtual link (a computation, not a message).
#[derive(Clone, Debug, PartialEq)]
pub struct SubagentPair<S> {
    pub a: S,
    pub b: S,
}

impl<S: Scalar> SubagentPair<S> {
    /// Initial pair: both sides start from the agent's value, so the virtual
    /// ring's average equals the original ring's average.
    pub fn lifted(x: &S) -> Self {
        SubagentPair {
            a: x.clone(),
            b: x.clone(),
        }
    }

    pub fn agrees(&self) -> bool {
        self.a == self.b
    }
}

/// Duplicates each of `m` (odd) agent values onto an even virtual ring of
/// `2m` subagents: position `2i - 1` holds agent `i`'s a-side, position `2i`
/// its b-side (1-based), both starting from `x_i`.
pub fn lift_to_virtual_ring<S: Scalar>(values: &[S]) -> Result<Vec<S>, ProtocolError> {
    let m = values.len();
    if m % 2 == 0 {
        return Err(ProtocolError::ParityMismatch {
            len: m,
            expected: "odd",
        });
    }
    if m <= 2 {
        return Err(ProtocolError::RingTooSmall { m });
    }
    let mut lifted = Vec::with_capacity(2 * m);
    for x in values {
        let pair = SubagentPair::lifted(x);
        lifted.push(pair.a);
        lifted.push(pair.b);
    }
    Ok(lifted)
}

/// Collapses a `2m`-subagent vector back to `m` per-agent values, taking the
/// a-side of each pair. In exact mode the two sides must agree at
/// termination; a mismatch signals a protocol violation.
pub fn fold_from_virtual_ring<S: Scalar>(values: &[S]) -> Result<Vec<S>, ProtocolError> {
    if values.len() % 2 != 0 {
        return Err(ProtocolError::ParityMismatch {
            len: values.len(),
            expected: "even",
        });
    }
    let mut folded = Vec::with_capacity(values.len() / 2);
    for (idx, pair) in values.chunks_exact(2).enumerate() {
        let pair = SubagentPair {
            a: pair[0].clone(),
            b: pair[1].clone(),
        };
        if S::EXACT && !pair.agrees() {
            return Err(ProtocolError::PairDivergence { agent: idx + 1 });
        }
        folded.push(pair.a);
    }
    Ok(folded)
}
