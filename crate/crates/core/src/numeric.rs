//! Numeric modes and the scalar abstraction the simulator is generic over.
//!
//! Every simulation runs in exactly one of two modes: `Exact` (arbitrary
//! precision rationals, the verification mode: the protocol's weights are
//! all rational, so consensus can be checked with bit-exact equality) or
//! `Float` (f64, for benchmarking). A run never mixes modes; [`Value`] is the
//! dynamic boundary type that carries the mode tag, and [`Scalar`] is the
//! trait the algorithms are written against.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
use core::ops::{Add, Div, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

/// Relative tolerance used whenever floating-point estimates are compared
/// for "exactness". Ring sizes at desk scale keep rounding error orders of
/// magnitude below this.
pub const FLOAT_RELATIVE_TOLERANCE: f64 = 1e-12;

/// Numeric mode of a simulation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Mode {
    /// Arbitrary-precision rational arithmetic; equality checks are exact.
    Exact,
    /// f64 arithmetic; equality checks use [`FLOAT_RELATIVE_TOLERANCE`].
    Float,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Mode::Exact => f.write_str("exact"),
            Mode::Float => f.write_str("float"),
        }
    }
}

/// A scalar tagged with its numeric mode.
///
/// This is the type user-facing configuration carries; the engine converts a
/// uniform list of `Value`s into the concrete scalar type once, up front, so
/// mode mixing is rejected at the boundary instead of deep inside a run.
#[derive(Clone, Debug, PartialEq)]
pub enum Value {
    Exact(BigRational),
    Float(f64),
}

impl Value {
    pub fn mode(&self) -> Mode {
        match self {
            Value::Exact(_) => Mode::Exact,
            Value::Float(_) => Mode::Float,
        }
    }

    /// Exact integer value.
    pub fn exact_int(n: i64) -> Value {
        Value::Exact(BigRational::from_integer(BigInt::from(n)))
    }

    /// Exact ratio `num/den`. `den` must be nonzero.
    pub fn exact_ratio(num: i64, den: i64) -> Value {
        assert!(den != 0, "zero denominator");
        Value::Exact(BigRational::new(BigInt::from(num), BigInt::from(den)))
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Exact(r) => write!(f, "{r}"),
            Value::Float(x) => write!(f, "{x}"),
        }
    }
}

/// Error raised when values of different numeric modes meet.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ModeMismatch {
    pub left: Mode,
    pub right: Mode,
}

impl fmt::Display for ModeMismatch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "numeric mode mismatch: {} vs {}", self.left, self.right)
    }
}

impl core::error::Error for ModeMismatch {}

/// The scalar field a simulation runs over.
///
/// Implemented by [`BigRational`] (exact mode) and `f64` (float mode). All
/// algorithms, traces, and checkers are generic over this trait; nothing in
/// the engine ever mixes the two implementations.
///
/// Besides plain arithmetic, a scalar provides a [`Scalar::RunState`]: the
/// working representation of a whole state vector during a synchronous run.
/// Exact mode keeps all agents on one shared denominator there, so the hot
/// loop is pure integer arithmetic and canonical rationals are only built
/// when a round is recorded.
pub trait Scalar:
    Clone
    + PartialEq
    + PartialOrd
    + fmt::Debug
    + fmt::Display
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + Sized
{
    /// True when equality of two scalars is meaningful bit-for-bit.
    const EXACT: bool;

    /// Working state of a synchronous run over this scalar.
    type RunState: Clone + fmt::Debug;

    fn zero() -> Self;
    fn one() -> Self;

    /// The scalar `num/den`. `den` must be nonzero.
    fn from_ratio(num: i64, den: u64) -> Self;

    fn from_int(n: i64) -> Self {
        Self::from_ratio(n, 1)
    }

    fn abs(&self) -> Self;

    /// Mode-appropriate equality: `==` in exact mode, relative tolerance
    /// [`FLOAT_RELATIVE_TOLERANCE`] in float mode.
    fn close_to(&self, other: &Self) -> bool;

    fn mode() -> Mode {
        if Self::EXACT {
            Mode::Exact
        } else {
            Mode::Float
        }
    }

    fn to_value(&self) -> Value;

    /// Back-conversion from the dynamic boundary type; `None` on mode
    /// mismatch.
    fn from_value(value: &Value) -> Option<Self>;

    fn run_state(values: &[Self]) -> Self::RunState;

    /// Canonical per-element values of the working state.
    fn snapshot(state: &Self::RunState) -> Vec<Self>;

    /// Applies one weight iteration with `alpha = alpha_num / alpha_den`
    /// (`alpha_num <= alpha_den`, `alpha_den >= 1`). `groups` are the
    /// sub-rounds of the iteration, each a list of 0-based index pairs; all
    /// pairs together must touch each index at most once, and every
    /// exchange reads the iteration-start state. With `record_groups` set,
    /// returns the canonical state after each group (for per-sub-round
    /// traces); otherwise returns nothing.
    fn apply_iteration(
        state: &mut Self::RunState,
        groups: &[Vec<(usize, usize)>],
        alpha_num: u64,
        alpha_den: u64,
        record_groups: bool,
    ) -> Vec<Vec<Self>>;
}

/// Exact-mode run state: every element is `nums[i] / den`. One shared
/// denominator keeps the per-iteration updates in pure integer arithmetic;
/// the denominator grows by the weight's denominator each iteration and
/// untouched elements are rescaled to match, so the invariant survives
/// partial matchings.
#[derive(Clone, Debug)]
pub struct ScaledState {
    nums: Vec<BigInt>,
    den: BigInt,
}

impl Scalar for BigRational {
    const EXACT: bool = true;

    type RunState = ScaledState;

    fn zero() -> Self {
        Zero::zero()
    }

    fn one() -> Self {
        One::one()
    }

    fn from_ratio(num: i64, den: u64) -> Self {
        assert!(den != 0, "zero denominator");
        BigRational::new(BigInt::from(num), BigInt::from(den))
    }

    fn abs(&self) -> Self {
        Signed::abs(self)
    }

    fn close_to(&self, other: &Self) -> bool {
        self == other
    }

    fn to_value(&self) -> Value {
        Value::Exact(self.clone())
    }

    fn from_value(value: &Value) -> Option<Self> {
        match value {
            Value::Exact(r) => Some(r.clone()),
            Value::Float(_) => None,
        }
    }

    fn run_state(values: &[Self]) -> ScaledState {
        let den = values
            .iter()
            .fold(BigInt::from(1), |acc, v| acc.lcm(v.denom()));
        let nums = values
            .iter()
            .map(|v| v.numer() * (&den / v.denom()))
            .collect();
        ScaledState { nums, den }
    }

    fn snapshot(state: &ScaledState) -> Vec<Self> {
        state
            .nums
            .iter()
            .map(|num| BigRational::new(num.clone(), state.den.clone()))
            .collect()
    }

    fn apply_iteration(
        state: &mut ScaledState,
        groups: &[Vec<(usize, usize)>],
        alpha_num: u64,
        alpha_den: u64,
        record_groups: bool,
    ) -> Vec<Vec<Self>> {
        debug_assert!(alpha_den >= 1 && alpha_num <= alpha_den);
        if alpha_num == 0 && alpha_den == 1 && !record_groups {
            return Vec::new();
        }
        let take = BigInt::from(alpha_num);
        let scale = BigInt::from(alpha_den);
        let keep = &scale - &take;
        let start = state.nums.clone();
        let scaled_den = &state.den * &scale;
        let mut touched = alloc::vec![false; state.nums.len()];
        let mut recorded = Vec::new();
        for group in groups {
            for &(i, j) in group {
                debug_assert!(!touched[i] && !touched[j] && i != j);
                let a = &start[i];
                let b = &start[j];
                state.nums[i] = &keep * a + &take * b;
                state.nums[j] = &keep * b + &take * a;
                touched[i] = true;
                touched[j] = true;
            }
            if record_groups {
                // mid-iteration view: updated elements sit on the scaled
                // denominator, untouched ones still on the old one
                recorded.push(
                    state
                        .nums
                        .iter()
                        .zip(&touched)
                        .map(|(num, &hit)| {
                            let den = if hit { &scaled_den } else { &state.den };
                            BigRational::new(num.clone(), den.clone())
                        })
                        .collect(),
                );
            }
        }
        for (num, hit) in state.nums.iter_mut().zip(&touched) {
            if !hit {
                *num *= &scale;
            }
        }
        state.den = scaled_den;
        recorded
    }
}

impl Scalar for f64 {
    const EXACT: bool = false;

    type RunState = Vec<f64>;

    fn zero() -> Self {
        0.0
    }

    fn one() -> Self {
        1.0
    }

    fn from_ratio(num: i64, den: u64) -> Self {
        assert!(den != 0, "zero denominator");
        num as f64 / den as f64
    }

    fn abs(&self) -> Self {
        if *self < 0.0 {
            -self
        } else {
            *self
        }
    }

    fn close_to(&self, other: &Self) -> bool {
        let diff = Scalar::abs(&(self - other));
        let scale = f64::max(1.0, f64::max(Scalar::abs(self), Scalar::abs(other)));
        diff <= FLOAT_RELATIVE_TOLERANCE * scale
    }

    fn to_value(&self) -> Value {
        Value::Float(*self)
    }

    fn from_value(value: &Value) -> Option<Self> {
        match value {
            Value::Exact(_) => None,
            Value::Float(x) => Some(*x),
        }
    }

    fn run_state(values: &[Self]) -> Vec<f64> {
        values.to_vec()
    }

    fn snapshot(state: &Vec<f64>) -> Vec<Self> {
        state.clone()
    }

    fn apply_iteration(
        state: &mut Vec<f64>,
        groups: &[Vec<(usize, usize)>],
        alpha_num: u64,
        alpha_den: u64,
        record_groups: bool,
    ) -> Vec<Vec<Self>> {
        debug_assert!(alpha_den >= 1 && alpha_num <= alpha_den);
        let alpha = alpha_num as f64 / alpha_den as f64;
        let keep = 1.0 - alpha;
        let start = state.clone();
        let mut recorded = Vec::new();
        for group in groups {
            for &(i, j) in group {
                state[i] = keep * start[i] + alpha * start[j];
                state[j] = keep * start[j] + alpha * start[i];
            }
            if record_groups {
                recorded.push(state.clone());
            }
        }
        recorded
    }
}

/// Checks that all values share one mode and reports it.
pub fn uniform_mode(values: &[Value]) -> Result<Option<Mode>, ModeMismatch> {
    let mut mode = None;
    for v in values {
        match mode {
            None => mode = Some(v.mode()),
            Some(m) if m != v.mode() => {
                return Err(ModeMismatch {
                    left: m,
                    right: v.mode(),
                })
            }
            _ => {}
        }
    }
    Ok(mode)
}

/// SplitMix64 generator used for seeded initial values.
///
/// The algorithm is fixed so seeded sweeps are reproducible everywhere:
/// `state += 0x9E3779B97F4A7C15`, then the output is `state` scrambled by
/// two xor-shift-multiply rounds (`0xBF58476D1CE4E5B9`, `0x94D049BB133111EB`)
/// and a final `z ^ (z >> 31)`.
#[derive(Clone, Debug)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        SplitMix64 { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }
}

/// Deterministic seeded initial values.
///
/// For each agent, two SplitMix64 draws produce a numerator in
/// `[-1000, 1000]` and a denominator in `[1, 16]`; the value is their ratio.
/// Float mode evaluates the same ratio in f64, so both modes see comparable
/// inputs for a given seed.
pub fn seeded_values(seed: u64, m: usize, mode: Mode) -> Vec<Value> {
    let mut rng = SplitMix64::new(seed);
    (0..m)
        .map(|_| {
            let num = (rng.next_u64() % 2001) as i64 - 1000;
            let den = (rng.next_u64() % 16) as i64 + 1;
            match mode {
                Mode::Exact => Value::exact_ratio(num, den),
                Mode::Float => Value::Float(num as f64 / den as f64),
            }
        })
        .collect()
}

/// Renders a value in its wire form: `p/q` (or a bare integer) for exact
/// values, shortest round-trip decimal for floats.
pub fn value_to_string(value: &Value) -> String {
    use alloc::string::ToString;
    value.to_string()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn modes_are_tagged() {
        assert_eq!(Value::exact_int(3).mode(), Mode::Exact);
        assert_eq!(Value::Float(3.0).mode(), Mode::Float);
    }

    #[test]
    fn uniform_mode_rejects_mixing() {
        let ok = [Value::exact_int(1), Value::exact_ratio(1, 2)];
        assert_eq!(uniform_mode(&ok).unwrap(), Some(Mode::Exact));

        let bad = [Value::exact_int(1), Value::Float(0.5)];
        assert!(uniform_mode(&bad).is_err());
        assert_eq!(uniform_mode(&[]).unwrap(), None);
    }

    #[test]
    fn exact_ratio_reduces() {
        assert_eq!(Value::exact_ratio(2, 4), Value::exact_ratio(1, 2));
        assert_eq!(Value::exact_ratio(-2, 4), Value::exact_ratio(-1, 2));
    }

    #[test]
    fn rational_close_to_is_equality() {
        let a = BigRational::from_ratio(1, 3);
        let b = BigRational::from_ratio(2, 6);
        assert!(a.close_to(&b));
        assert!(!a.close_to(&BigRational::from_ratio(1, 4)));
    }

    #[test]
    fn float_close_to_uses_relative_tolerance() {
        let a = 1000.0f64;
        assert!(a.close_to(&(a + 1e-10)));
        assert!(!a.close_to(&(a + 1e-6)));
        assert!(0.0f64.close_to(&1e-13));
    }

    #[test]
    fn seeded_values_are_deterministic_and_bounded() {
        let a = seeded_values(42, 16, Mode::Exact);
        let b = seeded_values(42, 16, Mode::Exact);
        assert_eq!(a, b);
        assert_ne!(a, seeded_values(43, 16, Mode::Exact));

        for v in &a {
            let Value::Exact(r) = v else { panic!("mode") };
            assert!(Signed::abs(r) <= BigRational::from_int(1000));
        }
    }

    #[test]
    fn seeded_float_matches_exact_ratio() {
        use num_traits::ToPrimitive;

        let exact = seeded_values(7, 8, Mode::Exact);
        let float = seeded_values(7, 8, Mode::Float);
        for (e, f) in exact.iter().zip(&float) {
            let Value::Exact(r) = e else { panic!() };
            let Value::Float(x) = f else { panic!() };
            let as_float = r.numer().to_f64().unwrap() / r.denom().to_f64().unwrap();
            assert_eq!(*x, as_float);
        }
    }

    #[test]
    fn value_round_trips_through_scalar() {
        let v = Value::exact_ratio(-7, 3);
        let r = BigRational::from_value(&v).unwrap();
        assert_eq!(r.to_value(), v);
        assert!(f64::from_value(&v).is_none());

        let w = Value::Float(0.25);
        assert_eq!(f64::from_value(&w).unwrap().to_value(), w);
    }
}
