//! Gossip-compliant activation schedules for the ring.
//!
//! A communication round may activate any set of edges that share no vertex
//! (a matching). Even rings split their edges into two alternating perfect
//! matchings; odd rings need three color classes, and each lifted iteration
//! that touches real links is serialized into three sub-rounds, one per
//! class.

use alloc::vec::Vec;
use core::fmt;

use crate::protocol::{ProtocolError, RingSize};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ScheduleError {
    /// The operation requires the other parity of ring size.
    WrongParity { m: usize, expected: &'static str },
    /// Edge endpoints must be two distinct agents with ids >= 1.
    InvalidEdge { i: usize, j: usize },
    /// The edges do not form a vertex-disjoint set of ring edges.
    NotAMatching { m: usize },
    /// The classes are not a proper 3-coloring partition of the ring edges.
    InvalidColoring(&'static str),
    /// The named preset coloring is only defined for rings of 7 agents.
    PresetNeedsSeven { m: usize },
    Protocol(ProtocolError),
}

impl fmt::Display for ScheduleError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScheduleError::WrongParity { m, expected } => {
                write!(f, "ring size {m} has the wrong parity, expected {expected}")
            }
            ScheduleError::InvalidEdge { i, j } => write!(f, "invalid edge endpoints ({i}, {j})"),
            ScheduleError::NotAMatching { m } => {
                write!(f, "edge set is not a matching of ring edges on {m} agents")
            }
            ScheduleError::InvalidColoring(why) => write!(f, "invalid coloring: {why}"),
            ScheduleError::PresetNeedsSeven { m } => {
                write!(f, "preset coloring is defined for m=7 only, got m={m}")
            }
            ScheduleError::Protocol(e) => write!(f, "{e}"),
        }
    }
}

impl core::error::Error for ScheduleError {}

impl From<ProtocolError> for ScheduleError {
    fn from(e: ProtocolError) -> Self {
        ScheduleError::Protocol(e)
    }
}

/// An undirected pair of agent ids, stored lower-id first (the wrap edge
/// `(m, 1)` normalizes to `(1, m)`).
///
/// Construction does not pin the edge to a ring size; whether the pair is an
/// actual ring edge is checked against `m` by [`verify_matching`] and
/// [`Matching::new`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Edge {
    lo: usize,
    hi: usize,
}

impl Edge {
    pub fn new(i: usize, j: usize) -> Result<Self, ScheduleError> {
        if i == 0 || j == 0 || i == j {
            return Err(ScheduleError::InvalidEdge { i, j });
        }
        Ok(Edge {
            lo: i.min(j),
            hi: i.max(j),
        })
    }

    pub fn endpoints(self) -> (usize, usize) {
        (self.lo, self.hi)
    }

    /// True when the pair is adjacent on the ring of `m` agents.
    pub fn is_ring_edge(self, m: usize) -> bool {
        self.hi <= m && (self.hi == self.lo + 1 || (self.lo == 1 && self.hi == m && m > 2))
    }

    /// Orients the edge along the ring: returns `(i, j)` with `j = post(i)`.
    pub fn oriented(self, ring: RingSize) -> Result<(usize, usize), ScheduleError> {
        let m = ring.get();
        if !self.is_ring_edge(m) {
            return Err(ScheduleError::NotAMatching { m });
        }
        if self.lo == 1 && self.hi == m {
            Ok((m, 1))
        } else {
            Ok((self.lo, self.hi))
        }
    }
}

impl fmt::Display for Edge {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.lo, self.hi)
    }
}

/// True iff no vertex appears in two edges and every edge is a ring edge of
/// the `m`-agent cycle: the pairwise-communication constraint for one round.
pub fn verify_matching(edges: &[Edge], m: usize) -> bool {
    let mut seen = alloc::collections::BTreeSet::new();
    for e in edges {
        if !e.is_ring_edge(m) {
            return false;
        }
        let (i, j) = e.endpoints();
        if !seen.insert(i) || !seen.insert(j) {
            return false;
        }
    }
    true
}

/// A set of vertex-disjoint ring edges: the links one communication round
/// may activate simultaneously. Canonically sorted, so equal matchings
/// compare equal.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Matching {
    edges: Vec<Edge>,
}

impl Matching {
    pub fn new(mut edges: Vec<Edge>, m: usize) -> Result<Self, ScheduleError> {
        edges.sort_unstable();
        if !verify_matching(&edges, m) {
            return Err(ScheduleError::NotAMatching { m });
        }
        Ok(Matching { edges })
    }

    pub fn empty() -> Self {
        Matching { edges: Vec::new() }
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }
}

/// Label of a color class; classes double as sub-round order in the odd
/// case.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ColorLabel {
    A,
    B,
    C,
}

impl fmt::Display for ColorLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ColorLabel::A => "A",
            ColorLabel::B => "B",
            ColorLabel::C => "C",
        })
    }
}

/// One color class of an edge coloring: a labeled matching.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ColorClass {
    pub label: ColorLabel,
    pub matching: Matching,
}

/// Splits an even ring's edges into the two alternating perfect matchings:
/// class A holds `(i, i+1)` for odd `i`, class B the even-`i` edges plus the
/// wrap edge.
pub fn two_coloring(ring: RingSize) -> Result<(ColorClass, ColorClass), ScheduleError> {
    let m = ring.get();
    if !ring.is_even() {
        return Err(ScheduleError::WrongParity { m, expected: "even" });
    }
    let mut a = Vec::with_capacity(m / 2);
    let mut b = Vec::with_capacity(m / 2);
    for i in 1..m {
        let e = Edge::new(i, i + 1)?;
        if i % 2 == 1 {
            a.push(e);
        } else {
            b.push(e);
        }
    }
    b.push(Edge::new(m, 1)?);
    Ok((
        ColorClass {
            label: ColorLabel::A,
            matching: Matching::new(a, m)?,
        },
        ColorClass {
            label: ColorLabel::B,
            matching: Matching::new(b, m)?,
        },
    ))
}

/// An ordered proper 3-coloring of an odd ring's edges. The order of the
/// classes is the order their sub-rounds are activated in.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Coloring {
    classes: [ColorClass; 3],
    m: usize,
}

impl Coloring {
    /// Validates that the three matchings partition the ring's edge set.
    pub fn from_classes(classes: [ColorClass; 3], ring: RingSize) -> Result<Self, ScheduleError> {
        let m = ring.get();
        if ring.is_even() {
            return Err(ScheduleError::WrongParity { m, expected: "odd" });
        }
        let mut all: Vec<Edge> = classes
            .iter()
            .flat_map(|c| c.matching.edges().iter().copied())
            .collect();
        all.sort_unstable();
        let before = all.len();
        all.dedup();
        if before != all.len() {
            return Err(ScheduleError::InvalidColoring("classes overlap"));
        }
        if all.len() != m {
            return Err(ScheduleError::InvalidColoring("classes do not cover every ring edge"));
        }
        // matchings were validated by construction; covering all m ring
        // edges with disjoint matchings is exactly a proper coloring
        Ok(Coloring { classes, m })
    }

    pub fn classes(&self) -> &[ColorClass; 3] {
        &self.classes
    }

    pub fn ring_size(&self) -> usize {
        self.m
    }

    /// Same classes activated in a different sub-round order.
    pub fn reordered(&self, order: [usize; 3]) -> Result<Self, ScheduleError> {
        let mut sorted = order;
        sorted.sort_unstable();
        if sorted != [0, 1, 2] {
            return Err(ScheduleError::InvalidColoring("order must permute 0, 1, 2"));
        }
        Ok(Coloring {
            classes: [
                self.classes[order[0]].clone(),
                self.classes[order[1]].clone(),
                self.classes[order[2]].clone(),
            ],
            m: self.m,
        })
    }
}

/// Canonical proper 3-coloring of an odd ring: edges `(i, i+1)` alternate
/// A (odd `i`) / B (even `i`) and the wrap edge gets C. Class sizes are
/// `(n, n, 1)` for `m = 2n + 1`.
pub fn three_coloring(ring: RingSize) -> Result<(ColorClass, ColorClass, ColorClass), ScheduleError> {
    let m = ring.get();
    if ring.is_even() {
        return Err(ScheduleError::WrongParity { m, expected: "odd" });
    }
    let mut a = Vec::new();
    let mut b = Vec::new();
    for i in 1..m {
        let e = Edge::new(i, i + 1)?;
        if i % 2 == 1 {
            a.push(e);
        } else {
            b.push(e);
        }
    }
    let c = alloc::vec![Edge::new(m, 1)?];
    Ok((
        ColorClass {
            label: ColorLabel::A,
            matching: Matching::new(a, m)?,
        },
        ColorClass {
            label: ColorLabel::B,
            matching: Matching::new(b, m)?,
        },
        ColorClass {
            label: ColorLabel::C,
            matching: Matching::new(c, m)?,
        },
    ))
}

/// Preset colorings selectable from configuration.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ColoringChoice {
    /// [`three_coloring`], defined for every odd ring.
    Canonical,
    /// Alternate preset on the 7-agent ring, kept for order-independence
    /// cross-checks.
    Fig2a,
    /// Second alternate preset on the 7-agent ring.
    Fig2b,
}

impl fmt::Display for ColoringChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ColoringChoice::Canonical => "canonical",
            ColoringChoice::Fig2a => "fig2a",
            ColoringChoice::Fig2b => "fig2b",
        })
    }
}

fn preset_class(
    label: ColorLabel,
    pairs: &[(usize, usize)],
    m: usize,
) -> Result<ColorClass, ScheduleError> {
    let edges = pairs
        .iter()
        .map(|&(i, j)| Edge::new(i, j))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(ColorClass {
        label,
        matching: Matching::new(edges, m)?,
    })
}

/// Builds the coloring a configuration asked for.
pub fn coloring_for(ring: RingSize, choice: ColoringChoice) -> Result<Coloring, ScheduleError> {
    let m = ring.get();
    match choice {
        ColoringChoice::Canonical => {
            let (a, b, c) = three_coloring(ring)?;
            Coloring::from_classes([a, b, c], ring)
        }
        ColoringChoice::Fig2a | ColoringChoice::Fig2b => {
            if m != 7 {
                return Err(ScheduleError::PresetNeedsSeven { m });
            }
            let (a, b, c) = if choice == ColoringChoice::Fig2a {
                (
                    [(1, 2), (3, 4), (6, 7)].as_slice(),
                    [(2, 3), (5, 6), (7, 1)].as_slice(),
                    [(4, 5)].as_slice(),
                )
            } else {
                (
                    [(1, 2), (5, 6)].as_slice(),
                    [(2, 3), (4, 5), (6, 7)].as_slice(),
                    [(3, 4), (7, 1)].as_slice(),
                )
            };
            Coloring::from_classes(
                [
                    preset_class(ColorLabel::A, a, m)?,
                    preset_class(ColorLabel::B, b, m)?,
                    preset_class(ColorLabel::C, c, m)?,
                ],
                ring,
            )
        }
    }
}

/// Matching an even ring activates at iteration `k`: each agent `i` with
/// `i + k` even talks to its successor, which is class A for odd `k` and
/// class B for even `k`, alternating with period 2.
pub fn even_round_matching(k: usize, ring: RingSize) -> Result<Matching, ScheduleError> {
    let m = ring.get();
    if !ring.is_even() {
        return Err(ScheduleError::WrongParity { m, expected: "even" });
    }
    if k == 0 {
        return Err(ScheduleError::Protocol(ProtocolError::ZeroScheduleIndex));
    }
    let mut edges = Vec::with_capacity(m / 2);
    for i in 1..=m {
        if (i + k) % 2 == 0 {
            edges.push(Edge::new(i, ring.post(i)?)?);
        }
    }
    Matching::new(edges, m)
}

/// What a plan entry does: exchange over real links, combine subagent pairs
/// over virtual links, or nothing (the skipped first lifted iteration, where
/// both sides of every pair are still equal).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum StepKind {
    Real,
    Virtual,
    Skip,
}

impl fmt::Display for StepKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            StepKind::Real => "real",
            StepKind::Virtual => "virtual",
            StepKind::Skip => "skip",
        })
    }
}

/// One scheduled activation: `iteration` is the weight index `k` the entry
/// runs under; real entries carry the agent-level matching of one color
/// class.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PlanEntry {
    /// 1-based position in the plan.
    pub round: usize,
    /// Weight index `k`.
    pub iteration: usize,
    pub kind: StepKind,
    /// Color class of a real sub-round.
    pub color: Option<ColorLabel>,
    /// Agent-level edges activated by this entry (empty for virtual/skip).
    pub matching: Matching,
}

/// The full activation schedule of a run.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RoundPlan {
    pub m: usize,
    /// Half size the weight schedule runs with (`m/2` even, `m` for the
    /// lifted odd construction).
    pub weight_n: usize,
    pub entries: Vec<PlanEntry>,
    /// Number of weight-schedule iterations covered.
    pub iterations: usize,
    /// Number of communication rounds (entries that move messages).
    pub comm_rounds: usize,
}

impl RoundPlan {
    /// Distinct matchings activated by real entries.
    pub fn distinct_real_matchings(&self) -> Vec<&Matching> {
        let mut seen: Vec<&Matching> = Vec::new();
        for entry in &self.entries {
            if entry.kind == StepKind::Real && !seen.contains(&&entry.matching) {
                seen.push(&entry.matching);
            }
        }
        seen
    }
}

/// Plan for an even ring: `n = m/2` iterations, one real round each,
/// alternating the two color classes.
pub fn even_round_plan(ring: RingSize) -> Result<RoundPlan, ScheduleError> {
    let m = ring.get();
    if !ring.is_even() {
        return Err(ScheduleError::WrongParity { m, expected: "even" });
    }
    let n = ring.half();
    let mut entries = Vec::with_capacity(n);
    for k in 1..=n {
        entries.push(PlanEntry {
            round: k,
            iteration: k,
            kind: StepKind::Real,
            color: Some(if k % 2 == 1 { ColorLabel::A } else { ColorLabel::B }),
            matching: even_round_matching(k, ring)?,
        });
    }
    Ok(RoundPlan {
        m,
        weight_n: n,
        entries,
        iterations: n,
        comm_rounds: n,
    })
}

/// Plan for an odd ring of `m = 2n + 1` agents, driving the lifted ring of
/// `2m` subagents through weight iterations `k = 1..=m`:
///
/// * `k = 1` is emitted as an explicit no-op (both sides of every pair are
///   still equal and the weight is 1/2, so the combine would change
///   nothing);
/// * odd `k > 1` combine every agent's subagent pair over the virtual links
///   (zero communication);
/// * even `k` exchange over the real links, serialized into one sub-round
///   per color class, all under the same weight index `k`.
///
/// Real communication rounds total `3n`.
pub fn odd_round_plan(ring: RingSize, coloring: &Coloring) -> Result<RoundPlan, ScheduleError> {
    let m = ring.get();
    if ring.is_even() {
        return Err(ScheduleError::WrongParity { m, expected: "odd" });
    }
    if coloring.ring_size() != m {
        return Err(ScheduleError::InvalidColoring("coloring built for another ring size"));
    }
    let mut entries = Vec::new();
    let mut round = 0;
    let mut comm_rounds = 0;
    for k in 1..=m {
        if k == 1 {
            round += 1;
            entries.push(PlanEntry {
                round,
                iteration: k,
                kind: StepKind::Skip,
                color: None,
                matching: Matching::empty(),
            });
        } else if k % 2 == 1 {
            round += 1;
            entries.push(PlanEntry {
                round,
                iteration: k,
                kind: StepKind::Virtual,
                color: None,
                matching: Matching::empty(),
            });
        } else {
            for class in coloring.classes() {
                round += 1;
                comm_rounds += 1;
                entries.push(PlanEntry {
                    round,
                    iteration: k,
                    kind: StepKind::Real,
                    color: Some(class.label),
                    matching: class.matching.clone(),
                });
            }
        }
    }
    Ok(RoundPlan {
        m,
        weight_n: m,
        entries,
        iterations: m,
        comm_rounds,
    })
}
