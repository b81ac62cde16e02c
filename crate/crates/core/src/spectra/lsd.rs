//! Densities, distribution function and quantiles.
//!
//! `F_{y,H}` is the limit of the companion matrix `(1/n) Z* T Z`; the limit
//! `G` of the sample covariance matrix itself follows from the mass balance
//! `F = y·G + (1 − y)·δ₀`, which holds for every `y > 0`.

use std::f64::consts::PI;

use num_complex::Complex64;

use super::stieltjes::{stieltjes, REAL_AXIS_EPS};
use super::support::{support, SupportSet};
use super::MPModel;
use crate::error::{Error, Result};
use crate::quad::{integrate_edges, integrate_from_edge};

/// Default imaginary offset for [`lsd_density`]: `1e-6·(1 + |x|)`.
pub const DEFAULT_DENSITY_EPS: f64 = 1e-6;

const MASS_TOL: f64 = 1e-11;

/// Density of `F_{y,H}` at `x > 0`, smoothed at height `epsilon`.
pub fn lsd_density(model: &MPModel, x: f64, epsilon: f64) -> Result<f64> {
    if !(x > 0.0) || !(epsilon > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "density needs x > 0 and epsilon > 0 (x = {x}, epsilon = {epsilon})"
        )));
    }
    let v = stieltjes(model, Complex64::new(x, epsilon))?;
    Ok(v.m.im / PI)
}

/// The limiting spectral distribution `G` of the sample covariance matrix.
#[derive(Debug, Clone)]
pub struct LsdOfSn {
    model: MPModel,
    support: SupportSet,
    zero_mass: f64,
    masses: Vec<f64>,
    below: Vec<f64>,
}

pub fn lsd_of_sn(model: &MPModel) -> Result<LsdOfSn> {
    LsdOfSn::new(model)
}

impl LsdOfSn {
    pub fn new(model: &MPModel) -> Result<Self> {
        let support = support(model);
        let y = model.y();
        let zero_mass = ((support.atom_at_zero_mass - (1.0 - y)) / y).clamp(0.0, 1.0);
        let mut masses = Vec::with_capacity(support.intervals.len());
        let mut below = Vec::with_capacity(support.intervals.len());
        let mut acc = zero_mass;
        for &(lo, hi) in &support.intervals {
            let mut err = None;
            let [m] = integrate_edges(
                &mut |x| match density_g(model, x) {
                    Ok(d) => [d],
                    Err(e) => {
                        err.get_or_insert(e);
                        [0.0]
                    }
                },
                lo,
                hi,
                MASS_TOL,
            );
            if let Some(e) = err {
                return Err(e);
            }
            below.push(acc);
            masses.push(m);
            acc += m;
        }
        Ok(Self {
            model: model.clone(),
            support,
            zero_mass,
            masses,
            below,
        })
    }

    pub fn model(&self) -> &MPModel {
        &self.model
    }

    pub fn support(&self) -> &SupportSet {
        &self.support
    }

    /// `G({0}) = max(H({0}), 1 − 1/y)`.
    pub fn zero_mass(&self) -> f64 {
        self.zero_mass
    }

    /// Mass carried by each support interval.
    pub fn interval_masses(&self) -> &[f64] {
        &self.masses
    }

    /// Zero atom plus integrated interval masses; equals one up to
    /// quadrature error.
    pub fn total_mass(&self) -> f64 {
        self.zero_mass + self.masses.iter().sum::<f64>()
    }

    /// Density of `G` at `x > 0` (boundary value).
    pub fn density(&self, x: f64) -> Result<f64> {
        if !self.support.contains_interior(x) {
            return Ok(0.0);
        }
        density_g(&self.model, x)
    }

    pub fn cdf(&self, x: f64) -> Result<f64> {
        if x < 0.0 {
            return Ok(0.0);
        }
        let mut acc = self.zero_mass;
        for (i, &(lo, hi)) in self.support.intervals.iter().enumerate() {
            if x >= hi {
                acc += self.masses[i];
            } else if x > lo {
                acc += self.partial(i, x)?;
                break;
            } else {
                break;
            }
        }
        Ok(acc)
    }

    fn partial(&self, i: usize, x: f64) -> Result<f64> {
        let (lo, _) = self.support.intervals[i];
        let mut err = None;
        let [m] = integrate_from_edge(
            &mut |t| match density_g(&self.model, t) {
                Ok(d) => [d],
                Err(e) => {
                    err.get_or_insert(e);
                    [0.0]
                }
            },
            lo,
            x,
            MASS_TOL,
        );
        match err {
            Some(e) => Err(e),
            None => Ok(m),
        }
    }

    /// `inf{x : cdf(x) ≥ γ}`; `γ = 1` returns the upper support edge.
    pub fn quantile(&self, gamma: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&gamma) {
            return Err(Error::InvalidProbability(gamma));
        }
        let first = self.support.lower_positive_edge();
        if gamma <= self.zero_mass && (gamma > 0.0 || self.zero_mass > 0.0) {
            return Ok(0.0);
        }
        if gamma == 0.0 {
            return Ok(first.unwrap_or(0.0));
        }
        for (i, &(lo, hi)) in self.support.intervals.iter().enumerate() {
            let top = self.below[i] + self.masses[i];
            if gamma <= self.below[i] {
                return Ok(lo);
            }
            if gamma < top {
                return self.solve_in_interval(i, gamma - self.below[i]);
            }
            if i + 1 == self.support.intervals.len() {
                return Ok(hi);
            }
        }
        Ok(self.support.upper_edge().unwrap_or(0.0))
    }

    /// Safeguarded Newton on the partial integral over interval `i`.
    fn solve_in_interval(&self, i: usize, target: f64) -> Result<f64> {
        let (lo, hi) = self.support.intervals[i];
        let mut a = lo;
        let mut b = hi;
        let mut x = lo + (hi - lo) * (target / self.masses[i]).clamp(0.0, 1.0);
        for _ in 0..200 {
            let c = self.partial(i, x)? - target;
            if c.abs() < 1e-13 {
                return Ok(x);
            }
            if c > 0.0 {
                b = x;
            } else {
                a = x;
            }
            if b - a <= 4.0 * f64::EPSILON * b.abs().max(1.0) {
                return Ok(0.5 * (a + b));
            }
            let d = density_g(&self.model, x)?;
            let newton = x - c / d;
            x = if d > 0.0 && newton > a && newton < b {
                newton
            } else {
                0.5 * (a + b)
            };
        }
        Ok(x)
    }
}

fn density_g(model: &MPModel, x: f64) -> Result<f64> {
    if !(x > 0.0) {
        return Ok(0.0);
    }
    let eps = REAL_AXIS_EPS * (1.0 + x);
    let v = stieltjes(model, Complex64::new(x, eps))?;
    Ok((v.m.im / (PI * model.y())).max(0.0))
}
