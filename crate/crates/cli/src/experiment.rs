//! Experiment descriptions: single runs, sweeps, and the checker selection.
//! A spec file is JSON in exactly this shape; the `run`/`check`/`compare`
//! flags build the same structures.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use clap::ValueEnum;
use num_bigint::BigInt;
use num_rational::BigRational;
use serde::{Deserialize, Serialize};

use ringavg_core::{Algorithm, ColoringChoice, InitialValues, Mode, SimulationConfig, Value, Verbosity};

#[derive(Debug)]
pub enum ExperimentError {
    BadValue { raw: String, why: &'static str },
    ValuesAndSeed,
    EmptySweep,
    BadSweep(&'static str),
}

impl fmt::Display for ExperimentError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExperimentError::BadValue { raw, why } => write!(f, "bad value {raw:?}: {why}"),
            ExperimentError::ValuesAndSeed => {
                f.write_str("give either explicit values or a seed, not both")
            }
            ExperimentError::EmptySweep => f.write_str("experiment expands to zero runs"),
            ExperimentError::BadSweep(why) => write!(f, "bad sweep: {why}"),
        }
    }
}

impl std::error::Error for ExperimentError {}

/// Numeric mode, as spelled on the command line and in spec files.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum ModeArg {
    Exact,
    Float,
}

impl From<ModeArg> for Mode {
    fn from(arg: ModeArg) -> Mode {
        match arg {
            ModeArg::Exact => Mode::Exact,
            ModeArg::Float => Mode::Float,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum AlgorithmArg {
    Auto,
    Even,
    Odd,
    Flooding,
    ConstantGossip,
}

impl From<AlgorithmArg> for Algorithm {
    fn from(arg: AlgorithmArg) -> Algorithm {
        match arg {
            AlgorithmArg::Auto => Algorithm::Auto,
            AlgorithmArg::Even => Algorithm::Even,
            AlgorithmArg::Odd => Algorithm::Odd,
            AlgorithmArg::Flooding => Algorithm::Flooding,
            AlgorithmArg::ConstantGossip => Algorithm::ConstantGossip,
        }
    }
}

impl fmt::Display for AlgorithmArg {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", Algorithm::from(*self))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum ColoringArg {
    Canonical,
    Fig2a,
    Fig2b,
}

impl From<ColoringArg> for ColoringChoice {
    fn from(arg: ColoringArg) -> ColoringChoice {
        match arg {
            ColoringArg::Canonical => ColoringChoice::Canonical,
            ColoringArg::Fig2a => ColoringChoice::Fig2a,
            ColoringArg::Fig2b => ColoringChoice::Fig2b,
        }
    }
}

/// Output file formats.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum FileFormat {
    Json,
    Csv,
}

/// Trace detail level, as spelled on the command line.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum VerbosityArg {
    FinalOnly,
    PerIteration,
    PerSubRound,
}

impl From<VerbosityArg> for Verbosity {
    fn from(arg: VerbosityArg) -> Verbosity {
        match arg {
            VerbosityArg::FinalOnly => Verbosity::FinalOnly,
            VerbosityArg::PerIteration => Verbosity::PerIteration,
            VerbosityArg::PerSubRound => Verbosity::PerSubRound,
        }
    }
}

/// Invariant suites `check` can run.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum CheckerKind {
    /// Sum of estimates constant at every recorded round.
    Conservation,
    /// Every activated matching is vertex-disjoint; plans use exactly 2
    /// (even) or 3 (odd) color classes.
    Matching,
    /// Final estimates equal weighted window aggregates of earlier rounds.
    WindowIdentity,
    /// No influence travels faster than one hop per round.
    Locality,
    /// Final estimates do not depend on the coloring or sub-round order.
    Coloring,
}

impl CheckerKind {
    pub const ALL: [CheckerKind; 5] = [
        CheckerKind::Conservation,
        CheckerKind::Matching,
        CheckerKind::WindowIdentity,
        CheckerKind::Locality,
        CheckerKind::Coloring,
    ];

    pub fn name(self) -> &'static str {
        match self {
            CheckerKind::Conservation => "conservation",
            CheckerKind::Matching => "matching",
            CheckerKind::WindowIdentity => "window-identity",
            CheckerKind::Locality => "locality",
            CheckerKind::Coloring => "coloring",
        }
    }
}

/// One simulation, as written in a spec file.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunSpec {
    pub m: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub values: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default = "default_mode")]
    pub mode: ModeArg,
    #[serde(default = "default_algorithm")]
    pub algorithm: AlgorithmArg,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coloring: Option<ColoringArg>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub horizon: Option<usize>,
}

fn default_mode() -> ModeArg {
    ModeArg::Exact
}

fn default_algorithm() -> AlgorithmArg {
    AlgorithmArg::Auto
}

/// A range of ring sizes crossed with seeds.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SweepSpec {
    pub m_from: usize,
    pub m_to: usize,
    #[serde(default = "default_step")]
    pub m_step: usize,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    #[serde(default = "default_mode")]
    pub mode: ModeArg,
    #[serde(default = "default_algorithm")]
    pub algorithm: AlgorithmArg,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub horizon: Option<usize>,
}

fn default_step() -> usize {
    1
}

fn default_seeds() -> Vec<u64> {
    vec![0]
}

/// A whole experiment: explicit runs plus sweeps, output options, and the
/// invariant suites to run afterwards.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct ExperimentSpec {
    #[serde(default)]
    pub configs: Vec<RunSpec>,
    #[serde(default)]
    pub sweeps: Vec<SweepSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out_dir: Option<PathBuf>,
    #[serde(default)]
    pub formats: Vec<FileFormat>,
    #[serde(default)]
    pub checkers: Vec<CheckerKind>,
}

/// Parses a value in the mode's wire syntax: `p/q` or a bare integer in
/// exact mode, a decimal in float mode.
pub fn parse_value(raw: &str, mode: Mode) -> Result<Value, ExperimentError> {
    let raw = raw.trim();
    match mode {
        Mode::Exact => {
            let (num, den) = match raw.split_once('/') {
                Some((num, den)) => (num, den),
                None => (raw, "1"),
            };
            let num = BigInt::from_str(num.trim()).map_err(|_| ExperimentError::BadValue {
                raw: raw.to_string(),
                why: "exact mode takes p/q or integer values",
            })?;
            let den = BigInt::from_str(den.trim()).map_err(|_| ExperimentError::BadValue {
                raw: raw.to_string(),
                why: "exact mode takes p/q or integer values",
            })?;
            if den <= BigInt::from(0) {
                return Err(ExperimentError::BadValue {
                    raw: raw.to_string(),
                    why: "denominator must be positive",
                });
            }
            Ok(Value::Exact(BigRational::new(num, den)))
        }
        Mode::Float => {
            if raw.contains('/') {
                return Err(ExperimentError::BadValue {
                    raw: raw.to_string(),
                    why: "float mode takes decimal values, not p/q",
                });
            }
            let x = raw.parse::<f64>().map_err(|_| ExperimentError::BadValue {
                raw: raw.to_string(),
                why: "not a decimal",
            })?;
            Ok(Value::Float(x))
        }
    }
}

/// A resolved run with a stable label used for file names and reports.
#[derive(Clone, Debug)]
pub struct LabeledConfig {
    pub label: String,
    pub config: SimulationConfig,
}

impl RunSpec {
    pub fn resolve(&self, verbosity: Verbosity) -> Result<LabeledConfig, ExperimentError> {
        let mode = Mode::from(self.mode);
        let (initial, source) = match (&self.values, self.seed) {
            (Some(_), Some(_)) => return Err(ExperimentError::ValuesAndSeed),
            (Some(values), None) => {
                let parsed = values
                    .iter()
                    .map(|raw| parse_value(raw, mode))
                    .collect::<Result<Vec<_>, _>>()?;
                (InitialValues::Explicit(parsed), "custom".to_string())
            }
            (None, seed) => {
                let seed = seed.unwrap_or(0);
                (InitialValues::Seeded { seed }, format!("seed{seed}"))
            }
        };
        let config = SimulationConfig {
            m: self.m,
            initial,
            mode,
            algorithm: Algorithm::from(self.algorithm),
            coloring: self.coloring.map(ColoringChoice::from),
            verbosity,
            horizon: self.horizon,
        };
        // name auto runs by the algorithm the parity selects
        let algorithm = match self.algorithm {
            AlgorithmArg::Auto if self.m % 2 == 0 => AlgorithmArg::Even,
            AlgorithmArg::Auto => AlgorithmArg::Odd,
            other => other,
        };
        let label = format!("m{}_{}_{}_{}", self.m, algorithm, mode, source);
        Ok(LabeledConfig { label, config })
    }
}

impl ExperimentSpec {
    /// Expands explicit runs and sweeps into the full run list.
    pub fn expand(&self, verbosity: Verbosity) -> Result<Vec<LabeledConfig>, ExperimentError> {
        let mut runs = Vec::new();
        for spec in &self.configs {
            runs.push(spec.resolve(verbosity)?);
        }
        for sweep in &self.sweeps {
            if sweep.m_step == 0 {
                return Err(ExperimentError::BadSweep("m_step must be nonzero"));
            }
            if sweep.m_to < sweep.m_from {
                return Err(ExperimentError::BadSweep("m_to must be at least m_from"));
            }
            if sweep.seeds.is_empty() {
                return Err(ExperimentError::BadSweep("seeds must be non-empty"));
            }
            let mut m = sweep.m_from;
            while m <= sweep.m_to {
                for &seed in &sweep.seeds {
                    runs.push(
                        RunSpec {
                            m,
                            values: None,
                            seed: Some(seed),
                            mode: sweep.mode,
                            algorithm: sweep.algorithm,
                            coloring: None,
                            horizon: sweep.horizon,
                        }
                        .resolve(verbosity)?,
                    );
                }
                m += sweep.m_step;
            }
        }
        if runs.is_empty() {
            return Err(ExperimentError::EmptySweep);
        }
        Ok(runs)
    }
}

/// The default sweep `check` runs when no spec is given: every even size in
/// 4..=64 and every odd size in 3..=63, three seeds each, exact mode.
pub fn default_check_spec() -> ExperimentSpec {
    ExperimentSpec {
        configs: Vec::new(),
        sweeps: vec![SweepSpec {
            m_from: 3,
            m_to: 64,
            m_step: 1,
            seeds: vec![1, 2, 3],
            mode: ModeArg::Exact,
            algorithm: AlgorithmArg::Auto,
            horizon: None,
        }],
        out_dir: None,
        formats: Vec::new(),
        checkers: CheckerKind::ALL.to_vec(),
    }
}
