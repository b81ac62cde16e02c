use rand::RngExt;
use serde::{Deserialize, Serialize};

use super::entries::rep_rng;
use crate::error::{Error, Result};
use crate::measure::AtomicMeasure;
use crate::spike::SpikedModel;

/// `p′` base eigenvalues realizing `H`: atom `i` gets `⌊wᵢ p′⌋` copies and
/// the remaining slots go to the largest fractional parts, ties broken by
/// ascending location. Returned in descending order.
pub fn realize_base(h: &AtomicMeasure, p_prime: usize) -> Result<Vec<f64>> {
    if p_prime < h.len() {
        return Err(Error::TooFewSlots {
            p_prime,
            atoms: h.len(),
        });
    }
    let exact: Vec<f64> = h.atoms().iter().map(|a| a.mass * p_prime as f64).collect();
    let mut counts: Vec<usize> = exact.iter().map(|e| e.floor() as usize).collect();
    let assigned: usize = counts.iter().sum();
    let mut order: Vec<usize> = (0..counts.len()).collect();
    // Atoms are stored by ascending location, so a stable sort on the
    // remainder alone implements the tie-break. Remainders equal up to
    // rounding noise count as ties.
    order.sort_by(|&i, &j| {
        let (ri, rj) = (exact[i] - exact[i].floor(), exact[j] - exact[j].floor());
        if (ri - rj).abs() <= 1e-9 {
            std::cmp::Ordering::Equal
        } else {
            rj.total_cmp(&ri)
        }
    });
    for &i in order.iter().cycle().take(p_prime.saturating_sub(assigned)) {
        counts[i] += 1;
    }
    let mut out = Vec::with_capacity(p_prime);
    for (atom, &c) in h.atoms().iter().zip(&counts).rev() {
        out.extend(std::iter::repeat_n(atom.location, c));
    }
    Ok(out)
}

/// Eigenvalues of the population matrix `T_p`, descending.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PopulationSpectrum {
    eigenvalues: Vec<f64>,
}

impl PopulationSpectrum {
    pub fn new(mut eigenvalues: Vec<f64>) -> Result<Self> {
        if eigenvalues.is_empty() {
            return Err(Error::InvalidArgument("empty population spectrum".into()));
        }
        if let Some(bad) = eigenvalues.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
            return Err(Error::InvalidArgument(format!(
                "population eigenvalue {bad} must be finite and nonnegative"
            )));
        }
        eigenvalues.sort_by(|a, b| b.total_cmp(a));
        Ok(Self { eigenvalues })
    }

    /// Identity matrix of dimension `p`.
    pub fn identity(p: usize) -> Result<Self> {
        Self::new(vec![1.0; p])
    }

    /// Spikes with their multiplicities plus `p − M` realized base values.
    pub fn from_model(model: &SpikedModel, p: usize) -> Result<Self> {
        let m = model.total_multiplicity();
        if p <= m {
            return Err(Error::InvalidArgument(format!(
                "dimension p = {p} leaves no room for the base next to {m} spike eigenvalues"
            )));
        }
        let mut values = realize_base(model.mp().base(), p - m)?;
        for s in model.spikes() {
            values.extend(std::iter::repeat_n(s.alpha, s.multiplicity));
        }
        Self::new(values)
    }

    /// Perturbs every eigenvalue by an independent uniform amount in
    /// `[−amplitude, amplitude]` (clamped at zero), for base spectra that only
    /// approach `H` in the limit.
    pub fn with_jitter(&self, amplitude: f64, seed: u64) -> Result<Self> {
        if !(amplitude >= 0.0 && amplitude.is_finite()) {
            return Err(Error::InvalidArgument(format!("jitter amplitude {amplitude}")));
        }
        if amplitude == 0.0 {
            return Ok(self.clone());
        }
        let mut rng = rep_rng(seed, u64::MAX);
        let values = self
            .eigenvalues
            .iter()
            .map(|v| (v + rng.random_range(-amplitude..=amplitude)).max(0.0))
            .collect();
        Self::new(values)
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    /// Spectral distribution `H_p`: mass `1/p` per eigenvalue, equal values
    /// merged.
    pub fn empirical_measure(&self) -> Result<AtomicMeasure> {
        let mut pairs: Vec<(f64, f64)> = Vec::new();
        for &v in &self.eigenvalues {
            match pairs.last_mut() {
                Some(last) if last.0 == v => last.1 += 1.0,
                _ => pairs.push((v, 1.0)),
            }
        }
        AtomicMeasure::from_weights(pairs)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn example_h() -> AtomicMeasure {
        AtomicMeasure::uniform(&[1.0, 4.0, 10.0]).unwrap()
    }

    fn counts(v: &[f64], x: f64) -> usize {
        v.iter().filter(|&&t| t == x).count()
    }

    #[test]
    fn equal_split() {
        let v = realize_base(&example_h(), 600).unwrap();
        assert_eq!(v.len(), 600);
        assert_eq!([counts(&v, 1.0), counts(&v, 4.0), counts(&v, 10.0)], [200, 200, 200]);
        assert!(v.windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn remainder_goes_to_lowest_location_on_ties() {
        let v = realize_base(&example_h(), 601).unwrap();
        assert_eq!([counts(&v, 1.0), counts(&v, 4.0), counts(&v, 10.0)], [201, 200, 200]);
        let v = realize_base(&example_h(), 602).unwrap();
        assert_eq!([counts(&v, 1.0), counts(&v, 4.0), counts(&v, 10.0)], [201, 201, 200]);
    }

    #[test]
    fn largest_remainder_wins() {
        let h = AtomicMeasure::new([(1.0, 0.25), (2.0, 0.75)]).unwrap();
        // 0.25·7 = 1.75, 0.75·7 = 5.25: the extra slot goes to the first atom.
        let v = realize_base(&h, 7).unwrap();
        assert_eq!([counts(&v, 1.0), counts(&v, 2.0)], [2, 5]);
    }

    #[test]
    fn dirac_and_too_few_slots() {
        assert_eq!(realize_base(&AtomicMeasure::dirac(1.0).unwrap(), 5).unwrap(), vec![1.0; 5]);
        assert!(matches!(
            realize_base(&example_h(), 2),
            Err(Error::TooFewSlots { p_prime: 2, atoms: 3 })
        ));
    }

    #[test]
    fn jitter_is_bounded_and_deterministic() {
        let base = PopulationSpectrum::identity(50).unwrap();
        let a = base.with_jitter(0.01, 3).unwrap();
        let b = base.with_jitter(0.01, 3).unwrap();
        assert_eq!(a, b);
        assert!(a.eigenvalues().iter().all(|v| (v - 1.0).abs() <= 0.01));
        assert!(PopulationSpectrum::new(vec![-1.0]).is_err());
    }
}
