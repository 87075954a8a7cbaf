//! Mode- and algorithm-dispatching front door: validates a dynamic
//! configuration once, then hands off to the statically typed runners.

use alloc::vec::Vec;
use core::fmt;

use num_rational::BigRational;

use crate::baselines::{default_horizon, run_constant_gossip, run_flooding};
use crate::engine::{run_even, run_odd, EngineError, Trace, Verbosity};
use crate::numeric::{seeded_values, uniform_mode, Mode, Scalar, Value};
use crate::protocol::RingSize;
use crate::schedule::{coloring_for, ColoringChoice};

/// Algorithm selection; `Auto` picks the finite-time algorithm matching the
/// ring's parity.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Algorithm {
    Auto,
    Even,
    Odd,
    Flooding,
    ConstantGossip,
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Algorithm::Auto => "auto",
            Algorithm::Even => "even",
            Algorithm::Odd => "odd",
            Algorithm::Flooding => "flooding",
            Algorithm::ConstantGossip => "constant-gossip",
        })
    }
}

/// Where a run's initial values come from.
#[derive(Clone, Debug, PartialEq)]
pub enum InitialValues {
    /// One value per agent, all in the configured mode.
    Explicit(Vec<Value>),
    /// Deterministic values from [`seeded_values`].
    Seeded { seed: u64 },
}

/// A complete description of one simulation.
#[derive(Clone, Debug, PartialEq)]
pub struct SimulationConfig {
    pub m: usize,
    pub initial: InitialValues,
    pub mode: Mode,
    pub algorithm: Algorithm,
    /// Coloring for odd rings; defaults to the canonical one.
    pub coloring: Option<ColoringChoice>,
    pub verbosity: Verbosity,
    /// Rounds to run non-terminating baselines for; defaults to `10 * m`.
    pub horizon: Option<usize>,
}

impl SimulationConfig {
    pub fn new(m: usize, initial: InitialValues, mode: Mode) -> Self {
        SimulationConfig {
            m,
            initial,
            mode,
            algorithm: Algorithm::Auto,
            coloring: None,
            verbosity: Verbosity::PerIteration,
            horizon: None,
        }
    }

    /// Materializes the initial values and checks count and mode.
    pub fn resolve_initial(&self) -> Result<Vec<Value>, EngineError> {
        let values = match &self.initial {
            InitialValues::Explicit(values) => values.clone(),
            InitialValues::Seeded { seed } => seeded_values(*seed, self.m, self.mode),
        };
        if values.len() != self.m {
            return Err(EngineError::WrongValueCount {
                expected: self.m,
                got: values.len(),
            });
        }
        match uniform_mode(&values).map_err(crate::protocol::ProtocolError::from)? {
            Some(mode) if mode != self.mode => Err(EngineError::Protocol(
                crate::numeric::ModeMismatch {
                    left: self.mode,
                    right: mode,
                }
                .into(),
            )),
            _ => Ok(values),
        }
    }

    /// The concrete algorithm this config runs, after `Auto` resolution and
    /// parity checks.
    pub fn resolve_algorithm(&self, ring: RingSize) -> Result<Algorithm, EngineError> {
        let m = ring.get();
        match self.algorithm {
            Algorithm::Auto => Ok(if ring.is_even() {
                Algorithm::Even
            } else {
                Algorithm::Odd
            }),
            Algorithm::Even if !ring.is_even() => {
                Err(EngineError::WrongParity { m, expected: "even" })
            }
            Algorithm::Odd if ring.is_even() => {
                Err(EngineError::WrongParity { m, expected: "odd" })
            }
            Algorithm::ConstantGossip if !ring.is_even() => {
                Err(EngineError::WrongParity { m, expected: "even" })
            }
            other => Ok(other),
        }
    }
}

/// A trace in whichever mode the configuration selected.
#[derive(Clone, Debug, PartialEq)]
pub enum AnyTrace {
    Exact(Trace<BigRational>),
    Float(Trace<f64>),
}

impl AnyTrace {
    pub fn mode(&self) -> Mode {
        match self {
            AnyTrace::Exact(_) => Mode::Exact,
            AnyTrace::Float(_) => Mode::Float,
        }
    }

    pub fn meta(&self) -> &crate::engine::TraceMeta {
        match self {
            AnyTrace::Exact(t) => &t.meta,
            AnyTrace::Float(t) => &t.meta,
        }
    }

    pub fn totals(&self) -> &crate::engine::Totals {
        match self {
            AnyTrace::Exact(t) => &t.totals,
            AnyTrace::Float(t) => &t.totals,
        }
    }

    pub fn final_values(&self) -> Vec<Value> {
        match self {
            AnyTrace::Exact(t) => t.final_estimates.iter().map(Scalar::to_value).collect(),
            AnyTrace::Float(t) => t.final_estimates.iter().map(Scalar::to_value).collect(),
        }
    }
}

fn run_typed<S: Scalar>(
    config: &SimulationConfig,
    ring: RingSize,
    initial: Vec<S>,
) -> Result<Trace<S>, EngineError> {
    match config.resolve_algorithm(ring)? {
        Algorithm::Even => run_even(ring, &initial, config.verbosity),
        Algorithm::Odd => {
            let choice = config.coloring.unwrap_or(ColoringChoice::Canonical);
            let coloring = coloring_for(ring, choice)?;
            run_odd(ring, &initial, &coloring, Some(choice), config.verbosity)
        }
        Algorithm::Flooding => run_flooding(ring, &initial, config.verbosity),
        Algorithm::ConstantGossip => {
            let horizon = config.horizon.unwrap_or_else(|| default_horizon(ring));
            run_constant_gossip(ring, &initial, horizon, config.verbosity)
        }
        Algorithm::Auto => unreachable!("resolve_algorithm never returns Auto"),
    }
}

/// Validates the configuration and runs it to a trace.
pub fn simulate(config: &SimulationConfig) -> Result<AnyTrace, EngineError> {
    let ring = RingSize::new(config.m)?;
    let values = config.resolve_initial()?;
    match config.mode {
        Mode::Exact => {
            let initial: Vec<BigRational> = values
                .iter()
                .map(|v| BigRational::from_value(v).expect("mode checked"))
                .collect();
            run_typed(config, ring, initial).map(AnyTrace::Exact)
        }
        Mode::Float => {
            let initial: Vec<f64> = values
                .iter()
                .map(|v| f64::from_value(v).expect("mode checked"))
                .collect();
            run_typed(config, ring, initial).map(AnyTrace::Float)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::AlgorithmTag;
    use alloc::vec;

    #[test]
    fn auto_selects_by_parity() {
        let even = SimulationConfig::new(8, InitialValues::Seeded { seed: 1 }, Mode::Exact);
        let AnyTrace::Exact(trace) = simulate(&even).unwrap() else {
            panic!("mode")
        };
        assert_eq!(trace.meta.algorithm, AlgorithmTag::Even);

        let odd = SimulationConfig::new(7, InitialValues::Seeded { seed: 1 }, Mode::Exact);
        let AnyTrace::Exact(trace) = simulate(&odd).unwrap() else {
            panic!("mode")
        };
        assert_eq!(trace.meta.algorithm, AlgorithmTag::Odd);
        assert_eq!(trace.meta.coloring, Some(ColoringChoice::Canonical));
    }

    #[test]
    fn ring_size_and_parity_errors_surface() {
        let config = SimulationConfig::new(2, InitialValues::Seeded { seed: 1 }, Mode::Exact);
        assert!(simulate(&config).is_err());

        let mut config = SimulationConfig::new(7, InitialValues::Seeded { seed: 1 }, Mode::Exact);
        config.algorithm = Algorithm::Even;
        assert!(matches!(
            simulate(&config),
            Err(EngineError::WrongParity { .. })
        ));
    }

    #[test]
    fn explicit_values_must_match_mode_and_count() {
        let mixed = vec![Value::exact_int(1), Value::Float(2.0), Value::exact_int(3)];
        let config = SimulationConfig::new(3, InitialValues::Explicit(mixed), Mode::Exact);
        assert!(simulate(&config).is_err());

        let short = vec![Value::exact_int(1); 3];
        let config = SimulationConfig::new(4, InitialValues::Explicit(short), Mode::Exact);
        assert!(matches!(
            simulate(&config),
            Err(EngineError::WrongValueCount { .. })
        ));

        let wrong_mode = vec![Value::Float(1.0); 4];
        let config = SimulationConfig::new(4, InitialValues::Explicit(wrong_mode), Mode::Exact);
        assert!(simulate(&config).is_err());
    }

    #[test]
    fn float_mode_runs_and_reports_float_values() {
        let config = SimulationConfig::new(6, InitialValues::Seeded { seed: 5 }, Mode::Float);
        let trace = simulate(&config).unwrap();
        assert_eq!(trace.mode(), Mode::Float);
        for value in trace.final_values() {
            assert_eq!(value.mode(), Mode::Float);
        }
    }

    #[test]
    fn baselines_are_reachable_through_the_config() {
        let mut config = SimulationConfig::new(6, InitialValues::Seeded { seed: 2 }, Mode::Exact);
        config.algorithm = Algorithm::Flooding;
        let trace = simulate(&config).unwrap();
        assert_eq!(trace.meta().algorithm, AlgorithmTag::Flooding);

        config.algorithm = Algorithm::ConstantGossip;
        let trace = simulate(&config).unwrap();
        assert_eq!(trace.meta().algorithm, AlgorithmTag::ConstantGossip);
        assert_eq!(trace.meta().horizon, Some(60));
    }
}
