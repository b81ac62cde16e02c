//! Support of `F_{y,H}` from the increasing intervals of `ψ`.
//!
//! The complement of the atoms of `H` splits the real line into components.
//! On each component `ψ'` is concave (`ψ''' < 0`) and `ψ''` is strictly
//! decreasing, so `{ψ' > 0}` is a single (possibly empty) sub-interval that
//! is located exactly: the maximizer of `ψ'` is the unique zero of `ψ''`,
//! and the two roots of `ψ'` on either side are bracketed by it.
//!
//! * `(−∞, t₁)`: `ψ'` decreases from 1 to −∞, one root `r`;
//! * `(tᵢ, tᵢ₊₁)`: `ψ'` rises from −∞ and falls back to −∞, zero or two roots;
//! * `(t_k, ∞)`: `ψ'` increases from −∞ to 1, one root.
//!
//! The images under `ψ` of the increasing sub-intervals are exactly the gaps
//! of the support.

use serde::{Deserialize, Serialize};

use super::MPModel;
use crate::error::{Error, Result};
use crate::measure::AtomicMeasure;

/// Closed support intervals of `F_{y,H}` on `(0, ∞)` plus the mass of its
/// atom at zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SupportSet {
    pub intervals: Vec<(f64, f64)>,
    /// `F_{y,H}({0}) = max(0, 1 − y·(1 − H({0})))`.
    pub atom_at_zero_mass: f64,
}

impl SupportSet {
    /// Membership in the closed support (zero counts when it carries mass).
    pub fn contains(&self, x: f64) -> bool {
        (x == 0.0 && self.atom_at_zero_mass > 0.0)
            || self.intervals.iter().any(|&(lo, hi)| lo <= x && x <= hi)
    }

    pub fn contains_interior(&self, x: f64) -> bool {
        self.intervals.iter().any(|&(lo, hi)| lo < x && x < hi)
    }

    /// Distance from `x` to the positive part of the support.
    pub fn distance(&self, x: f64) -> f64 {
        self.intervals
            .iter()
            .map(|&(lo, hi)| {
                if x < lo {
                    lo - x
                } else if x > hi {
                    x - hi
                } else {
                    0.0
                }
            })
            .fold(f64::INFINITY, f64::min)
    }

    pub fn upper_edge(&self) -> Option<f64> {
        self.intervals.last().map(|i| i.1)
    }

    /// Smallest positive support point `x₀`.
    pub fn lower_positive_edge(&self) -> Option<f64> {
        self.intervals.first().map(|i| i.0)
    }

    pub fn has_zero(&self) -> bool {
        self.atom_at_zero_mass > 0.0
    }
}

/// A maximal interval of the complement of the atoms of `H`, with the
/// sub-interval on which `ψ' > 0`, if any.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Component {
    pub lo: f64,
    pub hi: f64,
    pub increasing: Option<(f64, f64)>,
}

impl Component {
    pub fn contains(&self, alpha: f64) -> bool {
        self.lo < alpha && alpha < self.hi
    }
}

/// Everything the support computation produces.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SupportAnalysis {
    pub components: Vec<Component>,
    /// Roots of `ψ'`, ascending.
    pub critical_points: Vec<f64>,
    /// Open gaps `(ψ(u), ψ(v))` on the real line, ascending.
    pub gaps: Vec<(f64, f64)>,
    pub support: SupportSet,
}

impl SupportAnalysis {
    /// Maximal open intervals on which `ψ` is strictly increasing, with zero
    /// removed from the domain (so `(−∞, r)` with `r > 0` is reported as
    /// `(−∞, 0)` and `(0, r)`).
    pub fn increasing_intervals(&self) -> Vec<(f64, f64)> {
        let mut out = Vec::new();
        for c in &self.components {
            if let Some((u, v)) = c.increasing {
                if u < 0.0 && v > 0.0 {
                    out.push((u, 0.0));
                    out.push((0.0, v));
                } else {
                    out.push((u, v));
                }
            }
        }
        out
    }

    pub fn component_of(&self, alpha: f64) -> Option<&Component> {
        self.components.iter().find(|c| c.contains(alpha))
    }
}

/// Bisection for a sign change of `f` on `(lo, hi)`, where `f(lo)` has sign
/// `sign_lo`. Runs until the bracket stops shrinking in floating point.
fn bisect(mut lo: f64, mut hi: f64, sign_lo: bool, f: impl Fn(f64) -> f64) -> f64 {
    for _ in 0..400 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if (f(mid) > 0.0) == sign_lo {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Walks away from `start` by doubling steps until `pred` holds.
fn expand(start: f64, step: f64, pred: impl Fn(f64) -> bool) -> f64 {
    let mut s = step;
    let mut x = start + s;
    for _ in 0..2000 {
        if pred(x) {
            return x;
        }
        s *= 2.0;
        x = start + s;
    }
    x
}

/// Components of the complement of the positive atoms, with their
/// `ψ' > 0` sub-intervals.
fn components(model: &MPModel) -> Vec<Component> {
    let ts: Vec<f64> = model.base().positive_atoms().map(|a| a.location).collect();
    if ts.is_empty() {
        return vec![Component {
            lo: f64::NEG_INFINITY,
            hi: f64::INFINITY,
            increasing: Some((f64::NEG_INFINITY, f64::INFINITY)),
        }];
    }
    let dpsi = |a: f64| model.dpsi(a);
    let mut out = Vec::with_capacity(ts.len() + 1);

    // (−∞, t₁): ψ' decreasing from 1.
    let t1 = ts[0];
    let left = expand(t1, -t1.max(1.0), |a| dpsi(a) > 0.0);
    let r = bisect(left, t1, true, dpsi);
    out.push(Component {
        lo: f64::NEG_INFINITY,
        hi: t1,
        increasing: Some((f64::NEG_INFINITY, r)),
    });

    for w in ts.windows(2) {
        let (a, b) = (w[0], w[1]);
        let peak = bisect(a, b, true, |x| model.d2psi(x));
        let increasing = if dpsi(peak) > 0.0 {
            let u = bisect(a, peak, false, dpsi);
            let v = bisect(peak, b, true, dpsi);
            Some((u, v))
        } else {
            None
        };
        out.push(Component { lo: a, hi: b, increasing });
    }

    // (t_k, ∞): ψ' increasing to 1.
    let tk = *ts.last().unwrap();
    let right = expand(tk, tk.max(1.0), |a| dpsi(a) > 0.0);
    let u = bisect(tk, right, false, dpsi);
    out.push(Component {
        lo: tk,
        hi: f64::INFINITY,
        increasing: Some((u, f64::INFINITY)),
    });
    out
}

fn psi_ext(model: &MPModel, alpha: f64) -> f64 {
    if alpha == f64::NEG_INFINITY {
        f64::NEG_INFINITY
    } else if alpha == f64::INFINITY {
        f64::INFINITY
    } else if alpha == 0.0 {
        0.0
    } else {
        model.psi_unchecked(alpha)
    }
}

/// Full support analysis for `(y, H)`.
pub fn analyze(model: &MPModel) -> SupportAnalysis {
    let components = components(model);
    let mut critical_points = Vec::new();
    let mut gaps = Vec::new();
    for c in &components {
        if let Some((u, v)) = c.increasing {
            for x in [u, v] {
                if x.is_finite() {
                    critical_points.push(x);
                }
            }
            if u < 0.0 && v > 0.0 {
                // ψ(0±) = 0 and zero itself is excluded from the domain; the
                // two images (−∞, 0) and (0, ψ(v)) leave {0} in the support.
                gaps.push((f64::NEG_INFINITY, 0.0));
                gaps.push((0.0, psi_ext(model, v)));
            } else {
                gaps.push((psi_ext(model, u), psi_ext(model, v)));
            }
        }
    }
    gaps.sort_by(|a, b| a.0.total_cmp(&b.0));

    let mut intervals = Vec::new();
    let mut cursor = 0.0f64;
    for &(lo, hi) in &gaps {
        if hi <= 0.0 {
            continue;
        }
        if lo > cursor {
            intervals.push((cursor, lo));
        }
        cursor = cursor.max(hi);
    }
    intervals.retain(|&(lo, hi)| hi > lo);

    let h = model.base();
    let atom_at_zero_mass = (1.0 - model.y() * (1.0 - h.zero_mass())).max(0.0);

    SupportAnalysis {
        components,
        critical_points,
        gaps,
        support: SupportSet {
            intervals,
            atom_at_zero_mass,
        },
    }
}

pub fn support(model: &MPModel) -> SupportSet {
    analyze(model).support
}

/// Support of the finite-size law `F_{y_n, H_n}`, where `H_n` carries the
/// spike atoms with their finite-size weights.
pub fn finite_n_support(y_n: f64, h_n: &AtomicMeasure) -> Result<SupportSet> {
    Ok(support(&MPModel::new(y_n, h_n.clone())?))
}

/// Inverse of `ψ` restricted to the complement of the support. Points on
/// the boundary of a gap map to the corresponding critical point.
pub fn psi_inverse(model: &MPModel, lambda: f64) -> Result<f64> {
    psi_inverse_with(model, &analyze(model), lambda)
}

pub(crate) fn psi_inverse_with(
    model: &MPModel,
    analysis: &SupportAnalysis,
    lambda: f64,
) -> Result<f64> {
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "psi_inverse needs a positive finite lambda, got {lambda}"
        )));
    }
    let psi = |a: f64| model.psi_unchecked(a);
    for c in &analysis.components {
        let Some((u, v)) = c.increasing else { continue };
        // Positive part of the α-range and its image.
        let a_lo = if u < 0.0 && v > 0.0 { 0.0 } else { u };
        let a_hi = v;
        let l_lo = psi_ext(model, a_lo);
        let l_hi = psi_ext(model, a_hi);
        if !(l_lo <= lambda && lambda <= l_hi) {
            continue;
        }
        if lambda == l_lo && a_lo.is_finite() {
            return Ok(a_lo);
        }
        if lambda == l_hi && a_hi.is_finite() {
            return Ok(a_hi);
        }
        let lo = if a_lo.is_finite() {
            a_lo
        } else {
            let hi_f = if a_hi.is_finite() { a_hi } else { 0.0 };
            expand(hi_f, -(1.0 + hi_f.abs()), |a| psi(a) < lambda)
        };
        let hi = if a_hi.is_finite() {
            a_hi
        } else {
            expand(lo.max(0.0), 1.0 + lo.abs(), |a| psi(a) > lambda)
        };
        return Ok(bisect(lo, hi, false, |a| psi(a) - lambda));
    }
    Err(Error::InsideSupport { lambda })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn example() -> MPModel {
        MPModel::new(0.3, AtomicMeasure::uniform(&[1.0, 4.0, 10.0]).unwrap()).unwrap()
    }

    #[test]
    fn worked_example_support() {
        let s = support(&example());
        assert_eq!(s.intervals.len(), 2);
        let expected = [(0.32, 1.37), (1.67, 18.00)];
        for (got, want) in s.intervals.iter().zip(expected) {
            assert!((got.0 - want.0).abs() < 0.01, "{got:?}");
            assert!((got.1 - want.1).abs() < 0.01, "{got:?}");
        }
        assert!((s.atom_at_zero_mass - 0.7).abs() < 1e-15);
        assert!(s.contains(0.0));
    }

    #[test]
    fn worked_example_increasing_intervals() {
        let a = analyze(&example());
        let inc = a.increasing_intervals();
        assert_eq!(inc.len(), 4);
        assert_eq!(inc[0].0, f64::NEG_INFINITY);
        assert_eq!(inc[0].1, 0.0);
        assert_eq!(inc[1].0, 0.0);
        assert!((inc[1].1 - 0.63).abs() < 0.01);
        assert!((inc[2].0 - 1.40).abs() < 0.01);
        assert!((inc[2].1 - 2.57).abs() < 0.01);
        assert!((inc[3].0 - 13.19).abs() < 0.01);
        assert_eq!(inc[3].1, f64::INFINITY);
        // (4, 10) has no increasing part.
        assert!(a.component_of(6.0).unwrap().increasing.is_none());
    }

    #[test]
    fn classical_edges() {
        let m = MPModel::new(0.25, AtomicMeasure::dirac(1.0).unwrap()).unwrap();
        let s = support(&m);
        assert_eq!(s.intervals.len(), 1);
        assert!((s.intervals[0].0 - 0.25).abs() < 1e-6);
        assert!((s.intervals[0].1 - 2.25).abs() < 1e-6);
    }

    #[test]
    fn ratio_above_one_has_no_zero_atom_in_companion() {
        let m = MPModel::new(2.0, AtomicMeasure::dirac(1.0).unwrap()).unwrap();
        let s = support(&m);
        assert_eq!(s.atom_at_zero_mass, 0.0);
        let a = (1.0 - 2f64.sqrt()).powi(2);
        let b = (1.0 + 2f64.sqrt()).powi(2);
        assert!((s.intervals[0].0 - a).abs() < 1e-9);
        assert!((s.intervals[0].1 - b).abs() < 1e-9);
    }

    #[test]
    fn psi_inverse_roundtrip_and_boundary() {
        let m = example();
        for alpha in [15.0, 2.0, 0.5] {
            let lam = m.psi(alpha).unwrap();
            assert!((psi_inverse(&m, lam).unwrap() - alpha).abs() < 1e-8);
        }
        assert!(matches!(psi_inverse(&m, 5.0), Err(Error::InsideSupport { .. })));
        let j = MPModel::new(0.5, AtomicMeasure::dirac(1.0).unwrap()).unwrap();
        let b = (1.0 + 0.5f64.sqrt()).powi(2);
        assert!((psi_inverse(&j, b).unwrap() - (1.0 + 0.5f64.sqrt())).abs() < 1e-6);
    }

    #[test]
    fn dirac_at_zero_has_only_the_zero_atom() {
        let m = MPModel::new(0.5, AtomicMeasure::dirac(0.0).unwrap()).unwrap();
        let s = support(&m);
        assert!(s.intervals.is_empty());
        assert_eq!(s.atom_at_zero_mass, 1.0);
    }
}
