//! Deterministic Marčenko–Pastur analytics for an atomic population measure.
//!
//! For a ratio `y > 0` and population measure `H`, the map
//!
//! ```text
//! g(s) = −1/s + y ∫ t/(1+ts) dH(t)
//! ```
//!
//! is a bijection of the upper half-plane whose inverse `m = g⁻¹` is the
//! Stieltjes transform of the companion law `F_{y,H}`. Its real restriction
//! `ψ(α) = g(−1/α)` drives everything else: the support of `F_{y,H}` is the
//! complement of the image of `{ψ' > 0}`, and population spikes are mapped
//! by `ψ` to the limits of their sample eigenvalues.

mod lsd;
mod stieltjes;
mod support;

pub use lsd::{lsd_density, lsd_of_sn, LsdOfSn, DEFAULT_DENSITY_EPS};
pub use stieltjes::{stieltjes, stieltjes_real, StieltjesValue, REAL_AXIS_EPS};
pub use support::{
    analyze, finite_n_support, psi_inverse, support, Component, SupportAnalysis, SupportSet,
};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measure::AtomicMeasure;

/// The pair `(y, H)` indexing a Marčenko–Pastur law.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MPModel {
    y: f64,
    base: AtomicMeasure,
}

impl MPModel {
    pub fn new(y: f64, base: AtomicMeasure) -> Result<Self> {
        if !(y > 0.0 && y.is_finite()) {
            return Err(Error::InvalidModel(format!("ratio y = {y} must be positive")));
        }
        Ok(Self { y, base })
    }

    pub fn y(&self) -> f64 {
        self.y
    }

    pub fn base(&self) -> &AtomicMeasure {
        &self.base
    }

    /// Same base measure, different ratio.
    pub fn with_y(&self, y: f64) -> Result<Self> {
        Self::new(y, self.base.clone())
    }

    fn check_alpha(&self, alpha: f64) -> Result<()> {
        if alpha == 0.0 || !alpha.is_finite() || self.base.is_atom(alpha) {
            return Err(Error::Domain { alpha });
        }
        Ok(())
    }

    /// `ψ(α) = α + yα Σ wᵢ tᵢ/(α − tᵢ)`.
    pub fn psi(&self, alpha: f64) -> Result<f64> {
        self.check_alpha(alpha)?;
        Ok(self.psi_unchecked(alpha))
    }

    /// `ψ'(α)` (order 1) or `ψ'''(α)` (order 3).
    pub fn psi_derivative(&self, alpha: f64, order: u8) -> Result<f64> {
        if order != 1 && order != 3 {
            return Err(Error::UnsupportedOrder(order));
        }
        self.check_alpha(alpha)?;
        Ok(match order {
            1 => self.dpsi(alpha),
            _ => self.d3psi(alpha),
        })
    }

    pub(crate) fn psi_unchecked(&self, alpha: f64) -> f64 {
        let s: f64 = self
            .base
            .positive_atoms()
            .map(|a| a.mass * a.location / (alpha - a.location))
            .sum();
        alpha + self.y * alpha * s
    }

    /// `ψ'(α) = 1 − y Σ wᵢ tᵢ²/(α − tᵢ)²`.
    pub(crate) fn dpsi(&self, alpha: f64) -> f64 {
        let s: f64 = self
            .base
            .positive_atoms()
            .map(|a| {
                let r = a.location / (alpha - a.location);
                a.mass * r * r
            })
            .sum();
        1.0 - self.y * s
    }

    /// `ψ''(α) = 2y Σ wᵢ tᵢ²/(α − tᵢ)³`, strictly decreasing on every
    /// component of the complement of the atoms.
    pub(crate) fn d2psi(&self, alpha: f64) -> f64 {
        let s: f64 = self
            .base
            .positive_atoms()
            .map(|a| {
                let d = alpha - a.location;
                a.mass * a.location * a.location / (d * d * d)
            })
            .sum();
        2.0 * self.y * s
    }

    pub(crate) fn d3psi(&self, alpha: f64) -> f64 {
        let s: f64 = self
            .base
            .positive_atoms()
            .map(|a| {
                let d = alpha - a.location;
                let d2 = d * d;
                a.mass * a.location * a.location / (d2 * d2)
            })
            .sum();
        -6.0 * self.y * s
    }

    /// `g(s) = −1/s + y Σ wᵢ tᵢ/(1 + tᵢ s)`.
    ///
    /// Accepted on the closed upper half-plane; on the real axis this is the
    /// boundary value, so `g(−1/α) = ψ(α)`.
    pub fn g_map(&self, s: Complex64) -> Result<Complex64> {
        if s == Complex64::new(0.0, 0.0) || s.im < 0.0 || !s.is_finite() {
            return Err(Error::NotUpperHalfPlane(format!("{s}")));
        }
        let mut acc = Complex64::new(0.0, 0.0);
        for a in self.base.positive_atoms() {
            let den = Complex64::new(1.0, 0.0) + a.location * s;
            if den.norm() == 0.0 {
                return Err(Error::Domain { alpha: -1.0 / s.re });
            }
            acc += a.mass * a.location / den;
        }
        Ok(-1.0 / s + self.y * acc)
    }

    /// `g(s)` and `g'(s)` without domain checks.
    pub(crate) fn g_and_derivative(&self, s: Complex64) -> (Complex64, Complex64) {
        let mut acc = Complex64::new(0.0, 0.0);
        let mut dacc = Complex64::new(0.0, 0.0);
        for a in self.base.positive_atoms() {
            let den = 1.0 + a.location * s;
            let r = a.location / den;
            acc += a.mass * r;
            dacc += a.mass * r * r;
        }
        let inv = 1.0 / s;
        (-inv + self.y * acc, inv * inv - self.y * dacc)
    }
}
