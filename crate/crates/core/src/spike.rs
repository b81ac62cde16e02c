//! Generalized spikes: classification, descending ranks and almost-sure
//! limits of the sample eigenvalues they generate.
//!
//! A spike `α ∉ Γ_H` with `ψ'(α) > 0` is distant and its packet converges to
//! `ψ(α)`, outside the support. A close spike (`ψ'(α) ≤ 0`) is absorbed: if
//! the component of `Γ_H^c` containing `α` has an increasing stretch
//! `(u, v)`, the packet sticks to `ψ` of the endpoint nearest `α`, a support
//! edge; otherwise it lands on the `γ`-quantile of `G` with `γ = H((0, α))`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sim::realize_base;
use crate::spectra::{analyze, lsd_of_sn, Component, MPModel, SupportAnalysis};

/// `ψ'` values within this distance of zero count as close.
pub const CLASSIFY_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Spike {
    pub alpha: f64,
    pub multiplicity: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FiniteSizes {
    pub p_prime: usize,
    pub n: usize,
}

/// Base law plus spikes sorted strictly descending.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpikedModel {
    mp: MPModel,
    spikes: Vec<Spike>,
    sizes: Option<FiniteSizes>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SpikeClass {
    Distant,
    Close,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LimitKind {
    OutsideSupport,
    SupportEdge,
    Quantile,
}

/// Limit of the packet of a close spike.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Attractor {
    /// `ψ(w)` for the endpoint `w` of the increasing stretch `(u, v)`
    /// nearest the spike.
    SupportEdge { u: f64, v: f64, endpoint: f64, value: f64 },
    Quantile { gamma: f64, value: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpikePrediction {
    pub spike_index: usize,
    pub alpha: f64,
    pub multiplicity: usize,
    pub class: SpikeClass,
    pub psi_prime: f64,
    /// First and last descending rank (1-based, inclusive); present when the
    /// model carries finite sizes.
    pub ranks: Option<(usize, usize)>,
    pub limit_kind: LimitKind,
    pub limit_value: f64,
    pub gamma: Option<f64>,
    /// Increasing stretch `(u, v)` when the limit is a support edge.
    pub endpoints: Option<(f64, f64)>,
}

impl SpikedModel {
    pub fn new(mp: MPModel, spikes: Vec<Spike>, sizes: Option<FiniteSizes>) -> Result<Self> {
        for (i, s) in spikes.iter().enumerate() {
            if !(s.alpha > 0.0 && s.alpha.is_finite()) {
                return Err(Error::InvalidModel(format!("spike {} must be positive", s.alpha)));
            }
            if mp.base().is_atom(s.alpha) {
                return Err(Error::InvalidModel(format!(
                    "spike {} coincides with an atom of the base measure",
                    s.alpha
                )));
            }
            if s.multiplicity == 0 {
                return Err(Error::InvalidModel(format!(
                    "spike {} has multiplicity zero",
                    s.alpha
                )));
            }
            if i > 0 && !(spikes[i - 1].alpha > s.alpha) {
                return Err(Error::InvalidModel(
                    "spikes must be sorted strictly descending".into(),
                ));
            }
        }
        if let Some(sz) = sizes {
            if sz.n == 0 || sz.p_prime == 0 {
                return Err(Error::InvalidModel("p' and n must be positive".into()));
            }
            let ratio = sz.p_prime as f64 / sz.n as f64;
            if (ratio - mp.y()).abs() > 0.1 * mp.y() {
                return Err(Error::InvalidModel(format!(
                    "p'/n = {ratio} is not within 10% of y = {}",
                    mp.y()
                )));
            }
        }
        Ok(Self { mp, spikes, sizes })
    }

    pub fn mp(&self) -> &MPModel {
        &self.mp
    }

    pub fn spikes(&self) -> &[Spike] {
        &self.spikes
    }

    pub fn sizes(&self) -> Option<FiniteSizes> {
        self.sizes
    }

    pub fn with_sizes(&self, sizes: Option<FiniteSizes>) -> Result<Self> {
        Self::new(self.mp.clone(), self.spikes.clone(), sizes)
    }

    /// Same spikes over a different ratio (finite sizes dropped).
    pub fn with_y(&self, y: f64) -> Result<Self> {
        Self::new(self.mp.with_y(y)?, self.spikes.clone(), None)
    }

    /// `M = Σ nₖ`.
    pub fn total_multiplicity(&self) -> usize {
        self.spikes.iter().map(|s| s.multiplicity).sum()
    }

    /// `p = p′ + M` when finite sizes are set.
    pub fn p(&self) -> Option<usize> {
        self.sizes.map(|s| s.p_prime + self.total_multiplicity())
    }

    fn spike(&self, k: usize) -> Result<Spike> {
        self.spikes.get(k).copied().ok_or(Error::SpikeIndex {
            index: k,
            count: self.spikes.len(),
        })
    }
}

pub fn classify(model: &SpikedModel, k: usize) -> Result<SpikeClass> {
    let s = model.spike(k)?;
    Ok(class_of(model.mp().dpsi(s.alpha)))
}

fn class_of(psi_prime: f64) -> SpikeClass {
    if psi_prime > CLASSIFY_TOL {
        SpikeClass::Distant
    } else {
        SpikeClass::Close
    }
}

/// Ranks `νₖ + 1 ..= νₖ + nₖ` of spike `k` in the descending population
/// spectrum of dimension `p`, with the base realized by [`realize_base`].
pub fn descending_ranks(model: &SpikedModel, k: usize, p: usize) -> Result<(usize, usize)> {
    let s = model.spike(k)?;
    let m = model.total_multiplicity();
    if p <= m {
        return Err(Error::InvalidArgument(format!(
            "dimension p = {p} must exceed the {m} spike eigenvalues"
        )));
    }
    let base = realize_base(model.mp().base(), p - m)?;
    if base.iter().any(|&b| b == s.alpha) {
        return Err(Error::RankCollision { alpha: s.alpha });
    }
    let above_spikes: usize = model.spikes()[..k].iter().map(|t| t.multiplicity).sum();
    let above_base = base.iter().filter(|&&b| b > s.alpha).count();
    let nu = above_spikes + above_base;
    Ok((nu + 1, nu + s.multiplicity))
}

/// Limit of the packet of a close spike.
pub fn close_spike_attractor(model: &SpikedModel, k: usize) -> Result<Attractor> {
    let s = model.spike(k)?;
    let analysis = analyze(model.mp());
    close_attractor_with(model.mp(), &analysis, s.alpha, &mut None)
}

fn close_attractor_with(
    mp: &MPModel,
    analysis: &SupportAnalysis,
    alpha: f64,
    lsd: &mut Option<crate::spectra::LsdOfSn>,
) -> Result<Attractor> {
    let component: Option<&Component> = analysis.component_of(alpha);
    if let Some(Component {
        increasing: Some((u, v)),
        ..
    }) = component
    {
        let (u, v) = (*u, *v);
        // Only positive endpoints can be attained by a positive spike.
        let du = if u > 0.0 { (alpha - u).abs() } else { f64::INFINITY };
        let dv = if v > 0.0 { (v - alpha).abs() } else { f64::INFINITY };
        if du.is_finite() || dv.is_finite() {
            if du == dv {
                log::warn!(
                    "spike {alpha} is equidistant from {u} and {v}; taking the lower endpoint"
                );
            }
            let endpoint = if du <= dv { u } else { v };
            return Ok(Attractor::SupportEdge {
                u,
                v,
                endpoint,
                value: mp.psi_unchecked(endpoint),
            });
        }
    }
    let gamma = mp.base().mass_open(0.0, alpha);
    if lsd.is_none() {
        *lsd = Some(lsd_of_sn(mp)?);
    }
    let value = lsd.as_ref().map(|g| g.quantile(gamma)).transpose()?.unwrap_or(0.0);
    Ok(Attractor::Quantile { gamma, value })
}

/// One prediction per spike, in model order.
pub fn predict(model: &SpikedModel) -> Result<Vec<SpikePrediction>> {
    let analysis = analyze(model.mp());
    let mut lsd = None;
    let mut out = Vec::with_capacity(model.spikes().len());
    for (k, s) in model.spikes().iter().enumerate() {
        let psi_prime = model.mp().dpsi(s.alpha);
        let class = class_of(psi_prime);
        let ranks = match model.p() {
            Some(p) => Some(descending_ranks(model, k, p)?),
            None => None,
        };
        let (limit_kind, limit_value, gamma, endpoints) = match class {
            SpikeClass::Distant => (
                LimitKind::OutsideSupport,
                model.mp().psi_unchecked(s.alpha),
                None,
                None,
            ),
            SpikeClass::Close => match close_attractor_with(model.mp(), &analysis, s.alpha, &mut lsd)? {
                Attractor::SupportEdge { u, v, value, .. } => {
                    (LimitKind::SupportEdge, value, None, Some((u, v)))
                }
                Attractor::Quantile { gamma, value } => {
                    (LimitKind::Quantile, value, Some(gamma), None)
                }
            },
        };
        out.push(SpikePrediction {
            spike_index: k,
            alpha: s.alpha,
            multiplicity: s.multiplicity,
            class,
            psi_prime,
            ranks,
            limit_kind,
            limit_value,
            gamma,
            endpoints,
        });
    }
    Ok(out)
}

/// Spikes over the null population `H = δ₁`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JohnstoneSummary {
    pub y: f64,
    /// `(1 − √y)²`.
    pub a_y: f64,
    /// `(1 + √y)²`.
    pub b_y: f64,
    /// `[1 − √y, 1 + √y]`: spikes inside are close.
    pub critical_interval: (f64, f64),
    /// Spikes above `1 + √y` with their limits `ψ(α)`, descending.
    pub upper: Vec<(Spike, f64)>,
    /// Spikes below `1 − √y` with their limits, descending.
    pub lower: Vec<(Spike, f64)>,
    /// Close spikes with the edge they stick to (`0` for spikes below one
    /// when `y > 1`).
    pub middle: Vec<(Spike, f64)>,
    /// `N₁`: the eigenvalues of rank `N₁ + 1` onwards approach `b_y`.
    pub n1: usize,
    /// `N₂`: the eigenvalue of rank `p − N₂` approaches `a_y`.
    pub n2: usize,
}

impl JohnstoneSummary {
    /// Rank of the sample eigenvalue that approaches `b_y`.
    pub fn upper_edge_rank(&self) -> usize {
        self.n1 + 1
    }

    /// Rank of the sample eigenvalue that approaches `a_y` in dimension `p`.
    pub fn lower_edge_rank(&self, p: usize) -> usize {
        p - self.n2
    }
}

pub fn johnstone_summary(y: f64, spikes: &[Spike]) -> Result<JohnstoneSummary> {
    if !(y > 0.0 && y.is_finite()) {
        return Err(Error::InvalidModel(format!("ratio y = {y} must be positive")));
    }
    if let Some(s) = spikes.iter().find(|s| s.alpha == 1.0) {
        return Err(Error::InvalidModel(format!(
            "spike {} coincides with the null population eigenvalue",
            s.alpha
        )));
    }
    let mut sorted = spikes.to_vec();
    sorted.sort_by(|a, b| b.alpha.total_cmp(&a.alpha));
    let r = y.sqrt();
    let (a_y, b_y) = ((1.0 - r).powi(2), (1.0 + r).powi(2));
    let psi = |a: f64| a + y * a / (a - 1.0);
    let (mut upper, mut lower, mut middle) = (Vec::new(), Vec::new(), Vec::new());
    for s in sorted {
        if s.alpha > 1.0 + r {
            upper.push((s, psi(s.alpha)));
        } else if s.alpha < 1.0 - r {
            lower.push((s, psi(s.alpha)));
        } else {
            // With p > n the bottom of the spectrum is the zero eigenvalue
            // block, not the lower edge.
            let edge = if s.alpha > 1.0 {
                b_y
            } else if y > 1.0 {
                0.0
            } else {
                a_y
            };
            middle.push((s, edge));
        }
    }
    let n1 = upper.iter().map(|(s, _)| s.multiplicity).sum();
    let n2 = lower.iter().map(|(s, _)| s.multiplicity).sum();
    Ok(JohnstoneSummary {
        y,
        a_y,
        b_y,
        critical_interval: (1.0 - r, 1.0 + r),
        upper,
        lower,
        middle,
        n1,
        n2,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::AtomicMeasure;

    fn example(sizes: Option<FiniteSizes>) -> SpikedModel {
        let mp = MPModel::new(0.3, AtomicMeasure::uniform(&[1.0, 4.0, 10.0]).unwrap()).unwrap();
        let spikes = [(15.0, 3), (6.0, 2), (2.0, 2), (0.5, 2)]
            .map(|(alpha, multiplicity)| Spike { alpha, multiplicity })
            .to_vec();
        SpikedModel::new(mp, spikes, sizes).unwrap()
    }

    #[test]
    fn validation() {
        let mp = MPModel::new(0.3, AtomicMeasure::uniform(&[1.0, 4.0, 10.0]).unwrap()).unwrap();
        let sp = |a: f64| Spike { alpha: a, multiplicity: 1 };
        assert!(SpikedModel::new(mp.clone(), vec![sp(4.0)], None).is_err());
        assert!(SpikedModel::new(mp.clone(), vec![sp(2.0), sp(3.0)], None).is_err());
        assert!(SpikedModel::new(mp.clone(), vec![sp(-1.0)], None).is_err());
        assert!(SpikedModel::new(mp.clone(), vec![Spike { alpha: 2.0, multiplicity: 0 }], None).is_err());
        let bad = FiniteSizes { p_prime: 600, n: 1000 };
        assert!(SpikedModel::new(mp, vec![sp(2.0)], Some(bad)).is_err());
    }

    #[test]
    fn classes_of_worked_example() {
        let m = example(None);
        let c: Vec<_> = (0..4).map(|k| classify(&m, k).unwrap()).collect();
        use SpikeClass::*;
        assert_eq!(c, vec![Distant, Close, Distant, Distant]);
        assert!(classify(&m, 4).is_err());
    }

    #[test]
    fn ranks_of_worked_example() {
        let m = example(None);
        let r: Vec<_> = (0..4).map(|k| descending_ranks(&m, k, 609).unwrap()).collect();
        assert_eq!(r, vec![(1, 3), (204, 205), (406, 407), (608, 609)]);
    }

    #[test]
    fn predictions_of_worked_example() {
        let m = example(Some(FiniteSizes { p_prime: 600, n: 2000 }));
        let p = predict(&m).unwrap();
        assert_eq!(p[0].limit_kind, LimitKind::OutsideSupport);
        assert!((p[0].limit_value - 18.65).abs() < 0.005);
        assert_eq!(p[1].limit_kind, LimitKind::Quantile);
        assert!((p[1].gamma.unwrap() - 2.0 / 3.0).abs() < 1e-12);
        assert!(p[1].limit_value > 5.0 && p[1].limit_value < 7.0);
        assert!((p[2].limit_value - 1.55).abs() < 0.005);
        assert!((p[3].limit_value - 0.29).abs() < 0.005);
        assert_eq!(p[3].ranks, Some((608, 609)));
    }

    #[test]
    fn johnstone_edges() {
        let j = johnstone_summary(0.5, &[]).unwrap();
        assert!((j.a_y - 0.086).abs() < 5e-4);
        assert!((j.b_y - 2.914).abs() < 5e-4);
        assert!((j.critical_interval.0 - 0.293).abs() < 5e-4);
        assert!((j.critical_interval.1 - 1.707).abs() < 5e-4);
        assert!(johnstone_summary(0.5, &[Spike { alpha: 1.0, multiplicity: 1 }]).is_err());
    }

    #[test]
    fn johnstone_groups() {
        let sp = |a: f64, m: usize| Spike { alpha: a, multiplicity: m };
        let j = johnstone_summary(0.5, &[sp(0.1, 1), sp(4.0, 2), sp(1.5, 1)]).unwrap();
        assert_eq!(j.n1, 2);
        assert_eq!(j.n2, 1);
        assert_eq!(j.upper_edge_rank(), 3);
        assert_eq!(j.lower_edge_rank(100), 99);
        assert_eq!(j.middle[0].1, j.b_y);
        // ψ(4) = 4 + 0.5·4/3
        assert!((j.upper[0].1 - (4.0 + 2.0 / 3.0)).abs() < 1e-12);
    }

    #[test]
    fn johnstone_single_distant_spike() {
        let mp = MPModel::new(0.5, AtomicMeasure::dirac(1.0).unwrap()).unwrap();
        let m = SpikedModel::new(mp, vec![Spike { alpha: 2.0, multiplicity: 1 }], None).unwrap();
        let p = predict(&m).unwrap();
        assert_eq!(p[0].class, SpikeClass::Distant);
        assert!((p[0].limit_value - 3.0).abs() < 1e-12);
    }

    #[test]
    fn critical_spike_sticks_to_the_edge() {
        let y: f64 = 0.5;
        let mp = MPModel::new(y, AtomicMeasure::dirac(1.0).unwrap()).unwrap();
        let alpha = 1.0 + y.sqrt();
        let m = SpikedModel::new(mp, vec![Spike { alpha, multiplicity: 1 }], None).unwrap();
        assert_eq!(classify(&m, 0).unwrap(), SpikeClass::Close);
        match close_spike_attractor(&m, 0).unwrap() {
            Attractor::SupportEdge { value, .. } => {
                assert!((value - (1.0 + y.sqrt()).powi(2)).abs() < 1e-9)
            }
            other => panic!("unexpected {other:?}"),
        }
    }
}
