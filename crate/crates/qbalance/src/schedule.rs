//! Step-size sequences.
//!
//! The balancing layer uses a dyadic step that halves each time the round
//! counter crosses a power of two, so every balance stays an exact integer
//! multiple of the current step. The consensus layer uses a conventional
//! diminishing, square-summable but non-summable step.

use crate::error::{Error, Result};

/// A dyadic step value `2^(-exponent)`, represented exactly by its exponent.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Gamma {
    exponent: u32,
}

impl Gamma {
    pub fn exponent(&self) -> u32 {
        self.exponent
    }

    pub fn value(&self) -> f64 {
        // Exact: powers of two up to 2^-1022 are representable.
        (0.5f64).powi(self.exponent as i32)
    }
}

/// The dyadic step at `round`: `2^(-n)` with `n = floor(log2(round + 1))`,
/// i.e. the value `2^(-n)` is held on the window `2^n - 1 <= k <= 2^(n+1) - 2`
/// of length `2^n`. The sequence starts 1, 1/2, 1/2, 1/4, 1/4, 1/4, 1/4, 1/8, ...
pub fn gamma(round: u64) -> Gamma {
    debug_assert!(round < u64::MAX, "round counter out of range");
    let exponent = 63 - (round + 1).leading_zeros();
    Gamma { exponent }
}

/// Consensus step-size family `a0 / (k + 1)^tau`.
///
/// `tau` in (1/2, 1] makes the sequence positive, non-increasing,
/// square-summable, and non-summable.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlphaSchedule {
    a0: f64,
    tau: f64,
}

impl AlphaSchedule {
    pub fn new(a0: f64, tau: f64) -> Result<Self> {
        if a0.is_nan() || a0 <= 0.0 || !a0.is_finite() {
            return Err(Error::AlphaScale(a0));
        }
        if tau.is_nan() || tau <= 0.5 || tau > 1.0 {
            return Err(Error::AlphaExponent(tau));
        }
        Ok(AlphaSchedule { a0, tau })
    }

    /// The default used by the experiments: `1 / (k + 1)`.
    pub fn harmonic() -> Self {
        AlphaSchedule { a0: 1.0, tau: 1.0 }
    }

    pub fn a0(&self) -> f64 {
        self.a0
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn value(&self, round: u64) -> f64 {
        let k1 = (round + 1) as f64;
        if self.tau == 1.0 {
            self.a0 / k1
        } else {
            self.a0 / k1.powf(self.tau)
        }
    }
}
