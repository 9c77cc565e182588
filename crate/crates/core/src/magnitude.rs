//! Positive magnitudes that may lie far below the f64 range.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

/// A positive number `v`, stored as `ln v` or, when that underflows, as `ln(-ln v)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Magnitude {
    Ln(f64),
    /// Only for `v < 1`.
    LnNegLn(f64),
}

impl Magnitude {
    pub fn from_value(v: f64) -> Self {
        Magnitude::Ln(v.ln())
    }

    /// Canonical form: `Ln` whenever `ln v` is a finite double.
    pub fn from_ln_neg_ln(x: f64) -> Self {
        if x < 700.0 {
            Magnitude::Ln(-x.exp())
        } else {
            Magnitude::LnNegLn(x)
        }
    }

    pub fn ln(&self) -> f64 {
        match *self {
            Magnitude::Ln(l) => l,
            Magnitude::LnNegLn(x) => -x.exp(),
        }
    }

    /// `ln(-ln v)`; NaN when `v >= 1`.
    pub fn ln_neg_ln(&self) -> f64 {
        match *self {
            Magnitude::Ln(l) => {
                if l < 0.0 {
                    (-l).ln()
                } else {
                    f64::NAN
                }
            }
            Magnitude::LnNegLn(x) => x,
        }
    }

    /// The plain value, possibly 0 after underflow.
    pub fn value(&self) -> f64 {
        self.ln().exp()
    }

    pub fn mul_scalar(&self, c: f64) -> Self {
        match *self {
            Magnitude::Ln(l) => Magnitude::Ln(l + c.ln()),
            // A finite factor is invisible at this scale unless it flips the sign of ln v.
            Magnitude::LnNegLn(x) => Magnitude::LnNegLn(x),
        }
    }

    pub fn cmp_value(&self, other: &Self) -> Ordering {
        let a = self.ln();
        let b = other.ln();
        if a.is_finite() && b.is_finite() {
            return a.partial_cmp(&b).unwrap_or(Ordering::Equal);
        }
        // Larger ln(-ln v) means smaller v.
        let x = self.ln_neg_ln();
        let y = other.ln_neg_ln();
        y.partial_cmp(&x).unwrap_or(Ordering::Equal)
    }

    pub fn lt(&self, other: &Self) -> bool {
        self.cmp_value(other) == Ordering::Less
    }
}
