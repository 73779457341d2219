//! The Wood–White algebraic profile
//!
//! `φ(x) = n x_c^(n−1) x / ((n−1) x_c^n + x^n)`, which grows linearly from
//! zero, peaks at `(x_c, 1)` and decays like `x^(1−n)`. All derivatives are
//! closed form.

#[allow(unused_imports)] // inherent f64 methods shadow these when std is linked
use num_traits::Float;

use crate::error::ModelError;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WoodWhiteProfile {
    exponent: f64,
    peak: f64,
    // x_c^n
    peak_pow: f64,
    // n x_c^(n-1)
    numer: f64,
}

impl WoodWhiteProfile {
    /// Rejects `n ≤ 1` and `x_c ≤ 0` (and non-finite values).
    pub fn new(exponent: f64, peak: f64) -> Result<Self, ModelError> {
        if !(exponent.is_finite() && exponent > 1.0) {
            return Err(ModelError::Exponent(exponent));
        }
        if !(peak.is_finite() && peak > 0.0) {
            return Err(ModelError::PeakLocation(peak));
        }
        Ok(Self {
            exponent,
            peak,
            peak_pow: peak.powf(exponent),
            numer: exponent * peak.powf(exponent - 1.0),
        })
    }

    pub fn exponent(&self) -> f64 {
        self.exponent
    }

    pub fn peak(&self) -> f64 {
        self.peak
    }

    #[inline]
    fn denominator(&self, x_pow: f64) -> f64 {
        (self.exponent - 1.0) * self.peak_pow + x_pow
    }

    /// `φ(x)` for `x ≥ 0`.
    #[inline]
    pub fn value(&self, x: f64) -> f64 {
        self.numer * x / self.denominator(x.powf(self.exponent))
    }

    /// `φ(x) / x`, smooth through `x = 0`.
    #[inline]
    pub fn value_over_x(&self, x: f64) -> f64 {
        self.numer / self.denominator(x.powf(self.exponent))
    }

    /// `φ'(x)`.
    #[inline]
    pub fn derivative(&self, x: f64) -> f64 {
        let xn = x.powf(self.exponent);
        let d = self.denominator(xn);
        self.numer * (self.exponent - 1.0) * (self.peak_pow - xn) / (d * d)
    }

    /// `φ''(x)`.
    pub fn second_derivative(&self, x: f64) -> f64 {
        let n = self.exponent;
        let xn1 = x.powf(n - 1.0);
        let xn = xn1 * x;
        let d = self.denominator(xn);
        -self.numer * (n - 1.0) * n * xn1 * (d + 2.0 * (self.peak_pow - xn)) / (d * d * d)
    }

    /// `(1/x) d(x φ)/dx`, which stays finite at the origin where it equals
    /// `2 φ'(0)`.
    #[inline]
    pub fn weighted_derivative(&self, x: f64) -> f64 {
        let n = self.exponent;
        let xn = x.powf(n);
        let d = self.denominator(xn);
        self.numer * (2.0 * (n - 1.0) * self.peak_pow - (n - 2.0) * xn) / (d * d)
    }

    /// Derivative of [`weighted_derivative`](Self::weighted_derivative).
    pub fn weighted_derivative_slope(&self, x: f64) -> f64 {
        let n = self.exponent;
        let xn1 = x.powf(n - 1.0);
        let xn = xn1 * x;
        let d = self.denominator(xn);
        -self.numer * n * xn1 * ((n - 1.0) * (n + 2.0) * self.peak_pow - (n - 2.0) * xn)
            / (d * d * d)
    }

    /// Location of the maximum of `x φ(x)`, the zero of
    /// [`weighted_derivative`](Self::weighted_derivative). Only exists for
    /// `n > 2`; otherwise `x φ` increases without a turning point.
    pub fn weighted_peak(&self) -> Option<f64> {
        let n = self.exponent;
        if n > 2.0 {
            Some(self.peak * (2.0 * (n - 1.0) / (n - 2.0)).powf(1.0 / n))
        } else {
            None
        }
    }

    /// Smallest `x` in `(0, x_c]` with `φ(x) = φ(target)`, for `target ≥ x_c`.
    /// Closed form is not available for general `n`, so this bisects on the
    /// increasing branch.
    pub fn rising_preimage(&self, target: f64, tol: f64) -> f64 {
        if target <= self.peak {
            return target;
        }
        let level = self.value(target);
        crate::roots::bisect(|x| self.value(x) - level, 0.0, self.peak, tol).unwrap_or(self.peak)
    }
}
