//! Finite atomic probability measures on `[0, ∞)`.
//!
//! Population spectra (the limit `H`, finite-size spectra `H_n` with spike
//! atoms) are all represented this way, so every integral against them is a
//! finite sum.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance on the total mass.
pub const MASS_TOLERANCE: f64 = 1e-12;

/// One atom of an [`AtomicMeasure`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub location: f64,
    pub mass: f64,
}

/// A probability measure with finitely many atoms, sorted by location.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Atom>", into = "Vec<Atom>")]
pub struct AtomicMeasure {
    atoms: Vec<Atom>,
}

impl AtomicMeasure {
    /// Builds a measure from `(location, mass)` pairs given in any order.
    pub fn new(pairs: impl IntoIterator<Item = (f64, f64)>) -> Result<Self> {
        let mut atoms: Vec<Atom> = pairs
            .into_iter()
            .map(|(location, mass)| Atom { location, mass })
            .collect();
        if atoms.is_empty() {
            return Err(Error::InvalidMeasure("no atoms".into()));
        }
        for a in &atoms {
            if !a.location.is_finite() || a.location < 0.0 {
                return Err(Error::InvalidMeasure(format!(
                    "location {} is not a finite nonnegative number",
                    a.location
                )));
            }
            if !a.mass.is_finite() || a.mass <= 0.0 {
                return Err(Error::InvalidMeasure(format!(
                    "mass {} at {} is not positive",
                    a.mass, a.location
                )));
            }
        }
        atoms.sort_by(|a, b| a.location.total_cmp(&b.location));
        if let Some(w) = atoms.windows(2).find(|w| w[0].location == w[1].location) {
            return Err(Error::InvalidMeasure(format!(
                "duplicate location {}",
                w[0].location
            )));
        }
        let total: f64 = atoms.iter().map(|a| a.mass).sum();
        if (total - 1.0).abs() > MASS_TOLERANCE {
            return Err(Error::InvalidMeasure(format!(
                "masses sum to {total}, expected 1"
            )));
        }
        Ok(Self { atoms })
    }

    /// Builds a measure from positive weights, normalizing them to sum to one.
    pub fn from_weights(pairs: impl IntoIterator<Item = (f64, f64)>) -> Result<Self> {
        let pairs: Vec<(f64, f64)> = pairs.into_iter().collect();
        let total: f64 = pairs.iter().map(|p| p.1).sum();
        if !(total > 0.0 && total.is_finite()) {
            return Err(Error::InvalidMeasure(format!("total weight {total}")));
        }
        Self::new(pairs.iter().map(|&(t, w)| (t, w / total)))
    }

    /// Uniform measure on the given distinct locations.
    pub fn uniform(locations: &[f64]) -> Result<Self> {
        Self::from_weights(locations.iter().map(|&t| (t, 1.0)))
    }

    /// Point mass at `location`.
    pub fn dirac(location: f64) -> Result<Self> {
        Self::new([(location, 1.0)])
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn locations(&self) -> impl Iterator<Item = f64> + '_ {
        self.atoms.iter().map(|a| a.location)
    }

    /// Atoms with strictly positive location; atoms at zero never contribute
    /// to the integrals `∫ t/(α−t) dH` and friends.
    pub fn positive_atoms(&self) -> impl Iterator<Item = &Atom> + '_ {
        self.atoms.iter().filter(|a| a.location > 0.0)
    }

    /// `true` if `x` is (numerically) one of the atom locations.
    pub fn is_atom(&self, x: f64) -> bool {
        self.atoms
            .iter()
            .any(|a| (a.location - x).abs() <= 1e-12 * a.location.abs().max(1.0))
    }

    /// `H({0})`.
    pub fn zero_mass(&self) -> f64 {
        self.atoms
            .iter()
            .find(|a| a.location == 0.0)
            .map_or(0.0, |a| a.mass)
    }

    /// `H((lo, hi))`, open at both ends.
    pub fn mass_open(&self, lo: f64, hi: f64) -> f64 {
        self.atoms
            .iter()
            .filter(|a| a.location > lo && a.location < hi)
            .map(|a| a.mass)
            .sum()
    }

    pub fn max_location(&self) -> f64 {
        self.atoms.last().map_or(0.0, |a| a.location)
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }
}

impl TryFrom<Vec<Atom>> for AtomicMeasure {
    type Error = Error;

    fn try_from(atoms: Vec<Atom>) -> Result<Self> {
        Self::new(atoms.into_iter().map(|a| (a.location, a.mass)))
    }
}

impl From<AtomicMeasure> for Vec<Atom> {
    fn from(m: AtomicMeasure) -> Self {
        m.atoms
    }
}
