//! Versioned file formats for traces and activation plans.
//!
//! JSON carries exact values as `["numerator", "denominator"]` string pairs
//! and floats as shortest round-trip decimal strings, so parsing an emitted
//! trace reproduces the in-memory trace exactly. CSV is a write-only compact
//! view: one row per recorded round with the per-agent values inline.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use serde::{Deserialize, Serialize};

use ringavg_core::{
    AlgorithmTag, AnyTrace, ColorLabel, ColoringChoice, Edge, Mode, RoundPlan, RoundRecord,
    Scalar, StepKind, Totals, Trace, TraceMeta, Value, Verbosity,
};

pub const TRACE_FORMAT: &str = "ringavg.trace";
pub const PLAN_FORMAT: &str = "ringavg.plan";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug)]
pub enum FormatError {
    Json(serde_json::Error),
    UnknownFormat { expected: &'static str, got: String },
    UnsupportedVersion(u32),
    BadField { field: &'static str, got: String },
    BadValue(String),
}

impl fmt::Display for FormatError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FormatError::Json(e) => write!(f, "json: {e}"),
            FormatError::UnknownFormat { expected, got } => {
                write!(f, "expected a {expected} document, got {got:?}")
            }
            FormatError::UnsupportedVersion(v) => write!(f, "unsupported format version {v}"),
            FormatError::BadField { field, got } => write!(f, "bad {field}: {got:?}"),
            FormatError::BadValue(s) => write!(f, "bad value: {s:?}"),
        }
    }
}

impl std::error::Error for FormatError {}

impl From<serde_json::Error> for FormatError {
    fn from(e: serde_json::Error) -> Self {
        FormatError::Json(e)
    }
}

/// Wire form of one scalar: exact values as a numerator/denominator string
/// pair, floats as a decimal string.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ValueRepr {
    Exact([String; 2]),
    Float(String),
}

pub fn encode_value(value: &Value) -> ValueRepr {
    match value {
        Value::Exact(r) => ValueRepr::Exact([r.numer().to_string(), r.denom().to_string()]),
        Value::Float(x) => ValueRepr::Float(x.to_string()),
    }
}

pub fn decode_value(repr: &ValueRepr) -> Result<Value, FormatError> {
    match repr {
        ValueRepr::Exact([num, den]) => {
            let num = BigInt::from_str(num)
                .map_err(|_| FormatError::BadValue(format!("{num}/{den}")))?;
            let den = BigInt::from_str(den)
                .map_err(|_| FormatError::BadValue(den.clone()))?;
            if den <= BigInt::from(0) {
                return Err(FormatError::BadValue(format!("denominator {den}")));
            }
            Ok(Value::Exact(BigRational::new(num, den)))
        }
        ValueRepr::Float(s) => {
            let x = s
                .parse::<f64>()
                .map_err(|_| FormatError::BadValue(s.clone()))?;
            Ok(Value::Float(x))
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RecordDoc {
    pub round: usize,
    pub k: usize,
    pub kind: String,
    pub color: Option<String>,
    pub edges: Vec<[usize; 2]>,
    pub alpha: ValueRepr,
    pub estimates: Vec<ValueRepr>,
    pub messages: usize,
    pub comm_round: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TotalsDoc {
    pub iterations: usize,
    pub comm_rounds: usize,
    pub messages: usize,
    pub peak_agent_values: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceDoc {
    pub format: String,
    pub version: u32,
    pub m: usize,
    pub weight_n: usize,
    pub mode: String,
    pub algorithm: String,
    pub coloring: Option<String>,
    pub verbosity: String,
    pub horizon: Option<usize>,
    pub initial: Vec<ValueRepr>,
    pub records: Vec<RecordDoc>,
    #[serde(rename = "final")]
    pub final_estimates: Vec<ValueRepr>,
    pub totals: TotalsDoc,
}

fn record_to_doc<S: Scalar>(record: &RoundRecord<S>) -> RecordDoc {
    RecordDoc {
        round: record.round,
        k: record.iteration,
        kind: record.kind.to_string(),
        color: record.color.map(|c| c.to_string()),
        edges: record
            .edges
            .iter()
            .map(|e| {
                let (i, j) = e.endpoints();
                [i, j]
            })
            .collect(),
        alpha: encode_value(&record.alpha.to_value()),
        estimates: record
            .estimates
            .iter()
            .map(|v| encode_value(&v.to_value()))
            .collect(),
        messages: record.messages,
        comm_round: record.comm_round,
    }
}

fn trace_to_doc_typed<S: Scalar>(trace: &Trace<S>) -> TraceDoc {
    TraceDoc {
        format: TRACE_FORMAT.to_string(),
        version: FORMAT_VERSION,
        m: trace.meta.m,
        weight_n: trace.meta.weight_n,
        mode: trace.meta.mode.to_string(),
        algorithm: trace.meta.algorithm.to_string(),
        coloring: trace.meta.coloring.map(|c| c.to_string()),
        verbosity: trace.meta.verbosity.to_string(),
        horizon: trace.meta.horizon,
        initial: trace
            .initial
            .iter()
            .map(|v| encode_value(&v.to_value()))
            .collect(),
        records: trace.records.iter().map(record_to_doc).collect(),
        final_estimates: trace
            .final_estimates
            .iter()
            .map(|v| encode_value(&v.to_value()))
            .collect(),
        totals: TotalsDoc {
            iterations: trace.totals.iterations,
            comm_rounds: trace.totals.comm_rounds,
            messages: trace.totals.messages,
            peak_agent_values: trace.totals.peak_agent_values,
        },
    }
}

pub fn trace_to_doc(trace: &AnyTrace) -> TraceDoc {
    match trace {
        AnyTrace::Exact(t) => trace_to_doc_typed(t),
        AnyTrace::Float(t) => trace_to_doc_typed(t),
    }
}

pub fn trace_to_json(trace: &AnyTrace) -> String {
    let mut json =
        serde_json::to_string_pretty(&trace_to_doc(trace)).expect("trace serialization");
    json.push('\n');
    json
}

fn parse_mode(s: &str) -> Result<Mode, FormatError> {
    match s {
        "exact" => Ok(Mode::Exact),
        "float" => Ok(Mode::Float),
        _ => Err(FormatError::BadField {
            field: "mode",
            got: s.to_string(),
        }),
    }
}

fn parse_algorithm(s: &str) -> Result<AlgorithmTag, FormatError> {
    match s {
        "even" => Ok(AlgorithmTag::Even),
        "odd" => Ok(AlgorithmTag::Odd),
        "flooding" => Ok(AlgorithmTag::Flooding),
        "constant-gossip" => Ok(AlgorithmTag::ConstantGossip),
        _ => Err(FormatError::BadField {
            field: "algorithm",
            got: s.to_string(),
        }),
    }
}

fn parse_coloring(s: &str) -> Result<ColoringChoice, FormatError> {
    match s {
        "canonical" => Ok(ColoringChoice::Canonical),
        "fig2a" => Ok(ColoringChoice::Fig2a),
        "fig2b" => Ok(ColoringChoice::Fig2b),
        _ => Err(FormatError::BadField {
            field: "coloring",
            got: s.to_string(),
        }),
    }
}

fn parse_verbosity(s: &str) -> Result<Verbosity, FormatError> {
    match s {
        "final-only" => Ok(Verbosity::FinalOnly),
        "per-iteration" => Ok(Verbosity::PerIteration),
        "per-sub-round" => Ok(Verbosity::PerSubRound),
        _ => Err(FormatError::BadField {
            field: "verbosity",
            got: s.to_string(),
        }),
    }
}

fn parse_kind(s: &str) -> Result<StepKind, FormatError> {
    match s {
        "real" => Ok(StepKind::Real),
        "virtual" => Ok(StepKind::Virtual),
        "skip" => Ok(StepKind::Skip),
        _ => Err(FormatError::BadField {
            field: "kind",
            got: s.to_string(),
        }),
    }
}

fn parse_color(s: &str) -> Result<ColorLabel, FormatError> {
    match s {
        "A" => Ok(ColorLabel::A),
        "B" => Ok(ColorLabel::B),
        "C" => Ok(ColorLabel::C),
        _ => Err(FormatError::BadField {
            field: "color",
            got: s.to_string(),
        }),
    }
}

fn decode_scalar<S: Scalar>(repr: &ValueRepr) -> Result<S, FormatError> {
    let value = decode_value(repr)?;
    S::from_value(&value).ok_or(FormatError::BadField {
        field: "value mode",
        got: value.mode().to_string(),
    })
}

fn decode_scalars<S: Scalar>(reprs: &[ValueRepr]) -> Result<Vec<S>, FormatError> {
    reprs.iter().map(decode_scalar).collect()
}

fn trace_from_doc_typed<S: Scalar>(doc: &TraceDoc) -> Result<Trace<S>, FormatError> {
    let meta = TraceMeta {
        m: doc.m,
        weight_n: doc.weight_n,
        mode: parse_mode(&doc.mode)?,
        algorithm: parse_algorithm(&doc.algorithm)?,
        coloring: doc.coloring.as_deref().map(parse_coloring).transpose()?,
        verbosity: parse_verbosity(&doc.verbosity)?,
        horizon: doc.horizon,
    };
    let mut records = Vec::with_capacity(doc.records.len());
    for record in &doc.records {
        let edges = record
            .edges
            .iter()
            .map(|&[i, j]| {
                Edge::new(i, j).map_err(|_| FormatError::BadField {
                    field: "edge",
                    got: format!("({i}, {j})"),
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        records.push(RoundRecord {
            round: record.round,
            iteration: record.k,
            kind: parse_kind(&record.kind)?,
            color: record.color.as_deref().map(parse_color).transpose()?,
            edges,
            alpha: decode_scalar(&record.alpha)?,
            estimates: decode_scalars(&record.estimates)?,
            messages: record.messages,
            comm_round: record.comm_round,
        });
    }
    Ok(Trace {
        meta,
        initial: decode_scalars(&doc.initial)?,
        records,
        final_estimates: decode_scalars(&doc.final_estimates)?,
        totals: Totals {
            iterations: doc.totals.iterations,
            comm_rounds: doc.totals.comm_rounds,
            messages: doc.totals.messages,
            peak_agent_values: doc.totals.peak_agent_values,
        },
    })
}

pub fn trace_from_doc(doc: &TraceDoc) -> Result<AnyTrace, FormatError> {
    if doc.format != TRACE_FORMAT {
        return Err(FormatError::UnknownFormat {
            expected: TRACE_FORMAT,
            got: doc.format.clone(),
        });
    }
    if doc.version != FORMAT_VERSION {
        return Err(FormatError::UnsupportedVersion(doc.version));
    }
    match parse_mode(&doc.mode)? {
        Mode::Exact => trace_from_doc_typed::<BigRational>(doc).map(AnyTrace::Exact),
        Mode::Float => trace_from_doc_typed::<f64>(doc).map(AnyTrace::Float),
    }
}

pub fn trace_from_json(json: &str) -> Result<AnyTrace, FormatError> {
    let doc: TraceDoc = serde_json::from_str(json)?;
    trace_from_doc(&doc)
}

/// Column labels for the per-agent value columns of a trace CSV.
fn value_columns(meta: &TraceMeta) -> Vec<String> {
    if meta.algorithm == AlgorithmTag::Odd {
        (1..=meta.m)
            .flat_map(|i| [format!("x{i}a"), format!("x{i}b")])
            .collect()
    } else {
        (1..=meta.m).map(|i| format!("x{i}")).collect()
    }
}

fn csv_rows<S: Scalar>(trace: &Trace<S>) -> String {
    let mut out = String::new();
    out.push_str("round,k,kind");
    for column in value_columns(&trace.meta) {
        out.push(',');
        out.push_str(&column);
    }
    out.push_str(",messages\n");
    for record in &trace.records {
        out.push_str(&format!("{},{},{}", record.round, record.iteration, record.kind));
        for estimate in &record.estimates {
            out.push_str(&format!(",{estimate}"));
        }
        out.push_str(&format!(",{}\n", record.messages));
    }
    out
}

/// Write-only compact CSV: one row per recorded round.
pub fn trace_to_csv(trace: &AnyTrace) -> String {
    match trace {
        AnyTrace::Exact(t) => csv_rows(t),
        AnyTrace::Float(t) => csv_rows(t),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlanEntryDoc {
    pub round: usize,
    pub k: usize,
    pub kind: String,
    pub color: Option<String>,
    pub edges: Vec<[usize; 2]>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlanDoc {
    pub format: String,
    pub version: u32,
    pub m: usize,
    pub weight_n: usize,
    pub entries: Vec<PlanEntryDoc>,
    pub iterations: usize,
    pub comm_rounds: usize,
}

pub fn plan_to_doc(plan: &RoundPlan) -> PlanDoc {
    PlanDoc {
        format: PLAN_FORMAT.to_string(),
        version: FORMAT_VERSION,
        m: plan.m,
        weight_n: plan.weight_n,
        entries: plan
            .entries
            .iter()
            .map(|entry| PlanEntryDoc {
                round: entry.round,
                k: entry.iteration,
                kind: entry.kind.to_string(),
                color: entry.color.map(|c| c.to_string()),
                edges: entry
                    .matching
                    .edges()
                    .iter()
                    .map(|e| {
                        let (i, j) = e.endpoints();
                        [i, j]
                    })
                    .collect(),
            })
            .collect(),
        iterations: plan.iterations,
        comm_rounds: plan.comm_rounds,
    }
}

pub fn plan_to_json(plan: &RoundPlan) -> String {
    let mut json = serde_json::to_string_pretty(&plan_to_doc(plan)).expect("plan serialization");
    json.push('\n');
    json
}

#[cfg(test)]
mod tests {
    use super::*;
    use ringavg_core::{simulate, InitialValues, SimulationConfig};

    #[test]
    fn value_reprs_round_trip() {
        for value in [
            Value::exact_ratio(-7, 3),
            Value::exact_int(0),
            Value::exact_ratio(1, 1_000_000),
            Value::Float(0.1 + 0.2),
            Value::Float(-0.0),
            Value::Float(1e300),
        ] {
            let repr = encode_value(&value);
            assert_eq!(decode_value(&repr).unwrap(), value);
        }
    }

    #[test]
    fn bad_values_are_rejected() {
        assert!(decode_value(&ValueRepr::Exact(["x".into(), "2".into()])).is_err());
        assert!(decode_value(&ValueRepr::Exact(["1".into(), "0".into()])).is_err());
        assert!(decode_value(&ValueRepr::Exact(["1".into(), "-2".into()])).is_err());
        assert!(decode_value(&ValueRepr::Float("abc".into())).is_err());
    }

    #[test]
    fn trace_json_round_trips_exact_and_float() {
        for mode in [Mode::Exact, Mode::Float] {
            for m in [6usize, 7] {
                let mut config =
                    SimulationConfig::new(m, InitialValues::Seeded { seed: 13 }, mode);
                config.verbosity = ringavg_core::Verbosity::PerSubRound;
                let trace = simulate(&config).unwrap();
                let json = trace_to_json(&trace);
                let back = trace_from_json(&json).unwrap();
                assert_eq!(back, trace, "m={m} mode={mode}");
            }
        }
    }

    #[test]
    fn version_and_format_are_enforced() {
        let config = SimulationConfig::new(4, InitialValues::Seeded { seed: 1 }, Mode::Exact);
        let trace = simulate(&config).unwrap();
        let mut doc = trace_to_doc(&trace);
        doc.version = 99;
        assert!(matches!(
            trace_from_doc(&doc),
            Err(FormatError::UnsupportedVersion(99))
        ));
        doc.version = FORMAT_VERSION;
        doc.format = "something.else".into();
        assert!(matches!(
            trace_from_doc(&doc),
            Err(FormatError::UnknownFormat { .. })
        ));
    }

    #[test]
    fn csv_has_one_row_per_record_and_subagent_columns_for_odd() {
        let mut config = SimulationConfig::new(5, InitialValues::Seeded { seed: 3 }, Mode::Exact);
        config.verbosity = ringavg_core::Verbosity::PerSubRound;
        let trace = simulate(&config).unwrap();
        let csv = trace_to_csv(&trace);
        let lines: Vec<&str> = csv.lines().collect();
        let AnyTrace::Exact(inner) = &trace else { panic!() };
        assert_eq!(lines.len(), inner.records.len() + 1);
        assert!(lines[0].starts_with("round,k,kind,x1a,x1b,"));
        assert!(lines[0].ends_with(",messages"));
        // every row has the same number of cells as the header
        let cells = lines[0].split(',').count();
        for line in &lines[1..] {
            assert_eq!(line.split(',').count(), cells);
        }
    }

    #[test]
    fn plan_docs_describe_the_schedule() {
        let ring = ringavg_core::RingSize::new(7).unwrap();
        let coloring =
            ringavg_core::coloring_for(ring, ColoringChoice::Canonical).unwrap();
        let plan = ringavg_core::odd_round_plan(ring, &coloring).unwrap();
        let doc = plan_to_doc(&plan);
        assert_eq!(doc.comm_rounds, 9);
        assert_eq!(doc.entries.len(), plan.entries.len());
        assert_eq!(doc.entries[0].kind, "skip");
        let json = plan_to_json(&plan);
        let parsed: PlanDoc = serde_json::from_str(&json).unwrap();
        assert_eq!(parsed, doc);
    }
}
