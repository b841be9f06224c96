//! Extended real numbers for optimal values.
//!
//! Infeasible minimization problems have value `+∞` and unbounded ones
//! `−∞` (`inf ∅ = +∞`, `sup ∅ = −∞`). Arithmetic follows the usual
//! conventions; `∞ − ∞` is reported as an error instead of being produced.

use std::cmp::Ordering;
use std::fmt;

use serde::de::{self, Deserializer, Visitor};
use serde::{Deserialize, Serialize, Serializer};
use thiserror::Error;

use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ExtReal<T> {
    Finite(T),
    PlusInf,
    MinusInf,
}

#[derive(Debug, Error, Clone, Copy, PartialEq, Eq)]
#[error("indeterminate extended-real operation (∞ − ∞)")]
pub struct IndeterminateForm;

impl<T: Scalar> ExtReal<T> {
    /// Maps IEEE infinities onto the infinite variants. NaN maps to `None`.
    pub fn from_float(x: T) -> Option<Self> {
        if x.is_nan() {
            None
        } else if x == T::infinity() {
            Some(Self::PlusInf)
        } else if x == T::neg_infinity() {
            Some(Self::MinusInf)
        } else {
            Some(Self::Finite(x))
        }
    }

    pub fn is_finite(&self) -> bool {
        matches!(self, Self::Finite(_))
    }

    pub fn finite(&self) -> Option<T> {
        match *self {
            Self::Finite(x) => Some(x),
            _ => None,
        }
    }

    /// IEEE view: infinities become `±inf`.
    pub fn to_float(&self) -> T {
        match *self {
            Self::Finite(x) => x,
            Self::PlusInf => T::infinity(),
            Self::MinusInf => T::neg_infinity(),
        }
    }

    pub fn neg(self) -> Self {
        match self {
            Self::Finite(x) => Self::Finite(-x),
            Self::PlusInf => Self::MinusInf,
            Self::MinusInf => Self::PlusInf,
        }
    }

    pub fn checked_add(self, other: Self) -> Result<Self, IndeterminateForm> {
        use ExtReal::*;
        match (self, other) {
            (Finite(a), Finite(b)) => Ok(Finite(a + b)),
            (PlusInf, MinusInf) | (MinusInf, PlusInf) => Err(IndeterminateForm),
            (PlusInf, _) | (_, PlusInf) => Ok(PlusInf),
            (MinusInf, _) | (_, MinusInf) => Ok(MinusInf),
        }
    }

    pub fn checked_sub(self, other: Self) -> Result<Self, IndeterminateForm> {
        self.checked_add(other.neg())
    }

    /// `t · self` for a finite multiplier. `0 · ±∞` is taken as `0`, the
    /// convention that makes `v + 0·slope = v` for zero steps.
    pub fn scale(self, t: T) -> Self {
        match self {
            Self::Finite(x) => Self::Finite(t * x),
            _ if t == T::zero() => Self::Finite(T::zero()),
            _ if t > T::zero() => self,
            _ => self.neg(),
        }
    }

    /// `base + t · slope` with `t ≥ 0`, the shape of every increment bound.
    pub fn affine(base: Self, t: T, slope: Self) -> Result<Self, IndeterminateForm> {
        base.checked_add(slope.scale(t))
    }
}

impl<T: Scalar> PartialOrd for ExtReal<T> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        self.to_float().partial_cmp(&other.to_float())
    }
}

impl<T: Scalar> fmt::Display for ExtReal<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Finite(x) => write!(f, "{x}"),
            Self::PlusInf => f.write_str("+inf"),
            Self::MinusInf => f.write_str("-inf"),
        }
    }
}

impl<T: Scalar> From<T> for ExtReal<T> {
    fn from(x: T) -> Self {
        Self::from_float(x).unwrap_or(Self::Finite(x))
    }
}

/// Finite values serialize as JSON numbers, infinities as `"+inf"` / `"-inf"`.
impl<T: Scalar> Serialize for ExtReal<T> {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Self::Finite(x) => s.serialize_f64(x.to_f64_lossy()),
            Self::PlusInf => s.serialize_str("+inf"),
            Self::MinusInf => s.serialize_str("-inf"),
        }
    }
}

impl<'de, T: Scalar> Deserialize<'de> for ExtReal<T> {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        struct V<T>(std::marker::PhantomData<T>);
        impl<T: Scalar> Visitor<'_> for V<T> {
            type Value = ExtReal<T>;
            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("a number or one of \"+inf\", \"-inf\"")
            }
            fn visit_f64<E: de::Error>(self, v: f64) -> Result<Self::Value, E> {
                Ok(ExtReal::Finite(T::lit(v)))
            }
            fn visit_i64<E: de::Error>(self, v: i64) -> Result<Self::Value, E> {
                Ok(ExtReal::Finite(T::lit(v as f64)))
            }
            fn visit_u64<E: de::Error>(self, v: u64) -> Result<Self::Value, E> {
                Ok(ExtReal::Finite(T::lit(v as f64)))
            }
            fn visit_str<E: de::Error>(self, v: &str) -> Result<Self::Value, E> {
                match v {
                    "+inf" | "inf" => Ok(ExtReal::PlusInf),
                    "-inf" => Ok(ExtReal::MinusInf),
                    other => Err(E::invalid_value(de::Unexpected::Str(other), &self)),
                }
            }
        }
        d.deserialize_any(V(std::marker::PhantomData))
    }
}
