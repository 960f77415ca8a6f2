//! Commutative semirings used to annotate tuples.
//!
//! A semiring is a zero-sized marker type; its values live in the
//! associated `Elem` type. Every relation stores one non-zero `Elem` per
//! tuple, so a tuple annotated with zero is simply absent.

use std::fmt;
use std::hash::Hash;
use std::str::FromStr;

use serde::Serialize;
use thiserror::Error;

/// Arithmetic overflow inside a semiring operation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("{semiring} overflow in {op}")]
pub struct Overflow {
    pub semiring: &'static str,
    pub op: &'static str,
}

/// A commutative semiring `(D, ⊕, ⊗, 0, 1)`.
pub trait Semiring: Copy + Default + fmt::Debug + Send + Sync + 'static {
    type Elem: Copy + Eq + Hash + fmt::Debug + Send + Sync + 'static;

    const NAME: &'static str;
    const KIND: SemiringKind;

    fn zero() -> Self::Elem;
    fn one() -> Self::Elem;
    fn plus(a: Self::Elem, b: Self::Elem) -> Result<Self::Elem, Overflow>;
    fn times(a: Self::Elem, b: Self::Elem) -> Result<Self::Elem, Overflow>;

    fn is_zero(a: Self::Elem) -> bool {
        a == Self::zero()
    }

    /// Parses an annotation written in a data file.
    fn parse(text: &str) -> Result<Self::Elem, String>;

    /// Renders an annotation for a data file; `parse(format(a)) == a`.
    fn format(a: Self::Elem) -> String;
}

/// Runtime tag for the three built-in semirings.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SemiringKind {
    Boolean,
    Counting,
    Tropical,
}

impl SemiringKind {
    pub const ALL: [SemiringKind; 3] = [Self::Boolean, Self::Counting, Self::Tropical];

    pub fn name(self) -> &'static str {
        match self {
            Self::Boolean => "boolean",
            Self::Counting => "count",
            Self::Tropical => "tropical",
        }
    }
}

impl fmt::Display for SemiringKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SemiringKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "boolean" | "bool" => Ok(Self::Boolean),
            "count" | "counting" => Ok(Self::Counting),
            "tropical" | "minplus" => Ok(Self::Tropical),
            other => Err(format!("unknown semiring `{other}` (expected boolean, count or tropical)")),
        }
    }
}

/// `({false, true}, ∨, ∧, false, true)`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Boolean;

impl Semiring for Boolean {
    type Elem = bool;
    const NAME: &'static str = "boolean";
    const KIND: SemiringKind = SemiringKind::Boolean;

    fn zero() -> bool {
        false
    }
    fn one() -> bool {
        true
    }
    fn plus(a: bool, b: bool) -> Result<bool, Overflow> {
        Ok(a || b)
    }
    fn times(a: bool, b: bool) -> Result<bool, Overflow> {
        Ok(a && b)
    }
    fn parse(text: &str) -> Result<bool, String> {
        match text.trim() {
            "1" | "true" => Ok(true),
            "0" | "false" => Ok(false),
            other => Err(format!("`{other}` is not a boolean annotation")),
        }
    }
    fn format(a: bool) -> String {
        a.to_string()
    }
}

/// `(ℕ, +, ·, 0, 1)` on `u64`. Overflow is an error, never a wraparound.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Counting;

impl Semiring for Counting {
    type Elem = u64;
    const NAME: &'static str = "count";
    const KIND: SemiringKind = SemiringKind::Counting;

    fn zero() -> u64 {
        0
    }
    fn one() -> u64 {
        1
    }
    fn plus(a: u64, b: u64) -> Result<u64, Overflow> {
        a.checked_add(b).ok_or(Overflow { semiring: Self::NAME, op: "plus" })
    }
    fn times(a: u64, b: u64) -> Result<u64, Overflow> {
        a.checked_mul(b).ok_or(Overflow { semiring: Self::NAME, op: "times" })
    }
    fn parse(text: &str) -> Result<u64, String> {
        text.trim()
            .parse()
            .map_err(|_| format!("`{}` is not a non-negative integer", text.trim()))
    }
    fn format(a: u64) -> String {
        a.to_string()
    }
}

/// A tropical weight: a finite `i64` or the sentinel [`Weight::INF`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Weight(pub i64);

impl Weight {
    pub const INF: Weight = Weight(i64::MAX);

    pub fn is_finite(self) -> bool {
        self != Self::INF
    }
}

impl fmt::Display for Weight {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_finite() {
            write!(f, "{}", self.0)
        } else {
            f.write_str("inf")
        }
    }
}

/// `(ℤ ∪ {∞}, min, +, ∞, 0)`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Tropical;

impl Semiring for Tropical {
    type Elem = Weight;
    const NAME: &'static str = "tropical";
    const KIND: SemiringKind = SemiringKind::Tropical;

    fn zero() -> Weight {
        Weight::INF
    }
    fn one() -> Weight {
        Weight(0)
    }
    fn plus(a: Weight, b: Weight) -> Result<Weight, Overflow> {
        Ok(a.min(b))
    }
    fn times(a: Weight, b: Weight) -> Result<Weight, Overflow> {
        if !a.is_finite() || !b.is_finite() {
            return Ok(Weight::INF);
        }
        match a.0.checked_add(b.0) {
            Some(s) if s != i64::MAX && s != i64::MIN => Ok(Weight(s)),
            _ => Err(Overflow { semiring: Self::NAME, op: "times" }),
        }
    }
    fn parse(text: &str) -> Result<Weight, String> {
        let t = text.trim();
        if t == "inf" {
            return Ok(Weight::INF);
        }
        match t.parse::<i64>() {
            Ok(v) if v != i64::MAX => Ok(Weight(v)),
            _ => Err(format!("`{t}` is not an integer weight")),
        }
    }
    fn format(a: Weight) -> String {
        a.to_string()
    }
}
