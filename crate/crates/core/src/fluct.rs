//! Fluctuations of spike eigenvalues and the resolvent functionals behind
//! them.
//!
//! For `λ` outside the support of `G`,
//!
//! ```text
//! m₁(λ) = ∫ x/(λ−x) dG,   m₂(λ) = ∫ x²/(λ−x)² dG,   m₃(λ) = ∫ x/(λ−x)² dG.
//! ```
//!
//! A distant spike `α` of multiplicity one has `√n(λ − ψ(α))` asymptotically
//! Gaussian, with the scale correction `θ = 1/(1 + y m₃(ψ(α)) α)`; a packet of
//! multiplicity above one behaves like the ordered eigenvalues of a random
//! matrix and is not Gaussian.

use std::io::Write;

use faer::{c64, Mat};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quad::integrate_edges;
use crate::sim::{
    csv_writer, fmt_value, run_replications, EntryLaw, PopulationSpectrum, SpikedDraw,
    TraceFunctionals,
};
use crate::spectra::{support, MPModel, REAL_AXIS_EPS};
use crate::spike::{classify, descending_ranks, SpikeClass, SpikedModel};

/// Absolute tolerance of the m-transform quadrature.
pub const M_TRANSFORM_TOL: f64 = 1e-8;

/// Jarque–Bera critical value: the 99% quantile of χ² with two degrees of
/// freedom, `−2 ln 0.01`.
pub const JB_CRITICAL_1PCT: f64 = 9.210_340_371_976_184;

/// Fewer observations than this make a normality verdict underpowered.
pub const MIN_OBSERVATIONS: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MTransforms {
    pub lambda: f64,
    pub m1: f64,
    pub m2: f64,
    pub m3: f64,
}

pub fn m_transforms(model: &MPModel, lambda: f64) -> Result<MTransforms> {
    m_transforms_with_tol(model, lambda, M_TRANSFORM_TOL)
}

/// Quadrature of the three integrands against the density of `G`; the atom
/// of `G` at zero contributes nothing since every integrand vanishes there.
pub fn m_transforms_with_tol(model: &MPModel, lambda: f64, tol: f64) -> Result<MTransforms> {
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "m-transforms need a positive lambda, got {lambda}"
        )));
    }
    let supp = support(model);
    if supp.contains(lambda) {
        return Err(Error::InsideSupport { lambda });
    }
    let mut err = None;
    let mut total = [0.0; 3];
    for &(lo, hi) in &supp.intervals {
        let part = integrate_edges(
            &mut |x: f64| {
                let rho = match density_of_g(model, x) {
                    Ok(r) => r,
                    Err(e) => {
                        err.get_or_insert(e);
                        0.0
                    }
                };
                let r = 1.0 / (lambda - x);
                [rho * x * r, rho * x * x * r * r, rho * x * r * r]
            },
            lo,
            hi,
            tol,
        );
        for (t, p) in total.iter_mut().zip(part) {
            *t += p;
        }
    }
    if let Some(e) = err {
        return Err(e);
    }
    Ok(MTransforms {
        lambda,
        m1: total[0],
        m2: total[1],
        m3: total[2],
    })
}

fn density_of_g(model: &MPModel, x: f64) -> Result<f64> {
    if x <= 0.0 {
        return Ok(0.0);
    }
    let z = num_complex::Complex64::new(x, REAL_AXIS_EPS * (1.0 + x));
    let v = crate::spectra::stieltjes(model, z)?;
    Ok((v.m.im / (std::f64::consts::PI * model.y())).max(0.0))
}

/// `θₖ = 1/(1 + y m₃(ψ(αₖ)) αₖ)` for a distant spike.
pub fn clt_scale(model: &SpikedModel, k: usize) -> Result<f64> {
    let alpha = spike_alpha(model, k)?;
    if classify(model, k)? == SpikeClass::Close {
        return Err(Error::CloseSpike { alpha });
    }
    let mp = model.mp();
    let m = m_transforms(mp, mp.psi(alpha)?)?;
    Ok(1.0 / (1.0 + mp.y() * m.m3 * alpha))
}

fn spike_alpha(model: &SpikedModel, k: usize) -> Result<f64> {
    model
        .spikes()
        .get(k)
        .map(|s| s.alpha)
        .ok_or(Error::SpikeIndex {
            index: k,
            count: model.spikes().len(),
        })
}

/// Centered and scaled packet `√n(λⱼ − ψ(αₖ))`, `j ∈ Jₖ`, per replication.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FluctuationSample {
    pub spike_index: usize,
    pub n: usize,
    pub p: usize,
    pub center: f64,
    pub ranks: (usize, usize),
    /// `values[r][j]`: member `j` of the packet in replication `r`.
    pub values: Vec<Vec<f64>>,
}

impl FluctuationSample {
    pub fn reps(&self) -> usize {
        self.values.len()
    }

    pub fn member(&self, j: usize) -> Vec<f64> {
        self.values.iter().map(|v| v[j]).collect()
    }

    pub fn packet_size(&self) -> usize {
        self.ranks.1 + 1 - self.ranks.0
    }

    /// Long-format CSV `rep,member,value`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv_writer(out);
        w.write_record(["rep", "member", "value"])?;
        for (r, row) in self.values.iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                w.write_record([r.to_string(), (j + 1).to_string(), fmt_value(*v)])?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

/// Runs the packet of distant spike `k` at each `n` of `n_grid`, with
/// `p′ = round(y n)`.
pub fn fluctuations(
    model: &SpikedModel,
    k: usize,
    n_grid: &[usize],
    reps: usize,
    law: EntryLaw,
    seed: u64,
) -> Result<Vec<FluctuationSample>> {
    let alpha = spike_alpha(model, k)?;
    if classify(model, k)? == SpikeClass::Close {
        return Err(Error::CloseSpike { alpha });
    }
    if n_grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidArgument("n grid must be strictly ascending".into()));
    }
    let center = model.mp().psi(alpha)?;
    let m = model.total_multiplicity();
    n_grid
        .iter()
        .map(|&n| {
            let p_prime = (model.mp().y() * n as f64).round() as usize;
            let p = p_prime + m;
            let ranks = descending_ranks(model, k, p)?;
            let spectrum = PopulationSpectrum::from_model(model, p)?;
            let scale = (n as f64).sqrt();
            let values = run_replications(&spectrum, n, reps, law, seed, |s| {
                Ok((ranks.0..=ranks.1)
                    .map(|r| scale * (s.rank(r) - center))
                    .collect::<Vec<_>>())
            })?;
            Ok(FluctuationSample {
                spike_index: k,
                n,
                p,
                center,
                ranks,
                values,
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentSummary {
    pub count: usize,
    pub mean: f64,
    pub variance: f64,
    pub skewness: f64,
    pub excess_kurtosis: f64,
    /// `n/6 · (skew² + kurt²/4)`.
    pub jarque_bera: f64,
}

impl MomentSummary {
    pub fn of(xs: &[f64]) -> Self {
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let (mut m2, mut m3, mut m4) = (0.0, 0.0, 0.0);
        for x in xs {
            let d = x - mean;
            let d2 = d * d;
            m2 += d2;
            m3 += d2 * d;
            m4 += d2 * d2;
        }
        m2 /= n;
        m3 /= n;
        m4 /= n;
        let (skewness, excess_kurtosis) = if m2 > 0.0 {
            (m3 / m2.powf(1.5), m4 / (m2 * m2) - 3.0)
        } else {
            (f64::NAN, f64::NAN)
        };
        let jarque_bera = n / 6.0 * (skewness * skewness + excess_kurtosis * excess_kurtosis / 4.0);
        Self {
            count: xs.len(),
            mean,
            variance: if xs.len() > 1 { m2 * n / (n - 1.0) } else { 0.0 },
            skewness,
            excess_kurtosis,
            jarque_bera,
        }
    }

    /// Standard error of the mean.
    pub fn std_error(&self) -> f64 {
        (self.variance / self.count as f64).sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
    FailZeroVariance,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalityReport {
    /// Statistics of the leading packet member.
    pub summary: MomentSummary,
    pub critical_value: f64,
    pub verdict: Verdict,
    pub underpowered: bool,
    /// One entry per packet member.
    pub members: Vec<MomentSummary>,
    /// Consecutive spacings within the packet, pooled (packets above one).
    pub spacing: Option<MomentSummary>,
    /// Sample correlation matrix of the members (packets above one).
    pub correlation: Option<Vec<Vec<f64>>>,
    /// Members are non-increasing within every replication.
    pub ordered: bool,
}

impl NormalityReport {
    /// Flat `key,value` CSV of the leading-member fields.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv_writer(out);
        w.write_record(["key", "value"])?;
        let s = &self.summary;
        let rows = [
            ("count", s.count.to_string()),
            ("mean", fmt_value(s.mean)),
            ("variance", fmt_value(s.variance)),
            ("skewness", fmt_value(s.skewness)),
            ("excess_kurtosis", fmt_value(s.excess_kurtosis)),
            ("jarque_bera", fmt_value(s.jarque_bera)),
            ("critical_value", fmt_value(self.critical_value)),
            ("verdict", format!("{:?}", self.verdict)),
            ("underpowered", self.underpowered.to_string()),
            ("ordered", self.ordered.to_string()),
        ];
        for (k, v) in rows {
            w.write_record([k, v.as_str()])?;
        }
        w.flush()?;
        Ok(())
    }
}

pub fn normality_report(sample: &FluctuationSample) -> Result<NormalityReport> {
    let size = sample.packet_size();
    if sample.values.is_empty() || sample.values.iter().any(|v| v.len() != size) {
        return Err(Error::InvalidArgument(
            "every replication must hold the full packet".into(),
        ));
    }
    let members: Vec<MomentSummary> = (0..size)
        .map(|j| MomentSummary::of(&sample.member(j)))
        .collect();
    let summary = members[0];
    let verdict = if !(summary.variance > 0.0) {
        Verdict::FailZeroVariance
    } else if summary.jarque_bera <= JB_CRITICAL_1PCT {
        Verdict::Pass
    } else {
        Verdict::Fail
    };
    let ordered = sample
        .values
        .iter()
        .all(|v| v.windows(2).all(|w| w[0] >= w[1]));
    let (spacing, correlation) = if size > 1 {
        let gaps: Vec<f64> = sample
            .values
            .iter()
            .flat_map(|v| v.windows(2).map(|w| w[0] - w[1]).collect::<Vec<_>>())
            .collect();
        let cols: Vec<Vec<f64>> = (0..size).map(|j| sample.member(j)).collect();
        let corr = (0..size)
            .map(|a| (0..size).map(|b| correlation(&cols[a], &cols[b])).collect())
            .collect();
        (Some(MomentSummary::of(&gaps)), Some(corr))
    } else {
        (None, None)
    };
    Ok(NormalityReport {
        summary,
        critical_value: JB_CRITICAL_1PCT,
        verdict,
        underpowered: sample.reps() < MIN_OBSERVATIONS,
        members,
        spacing,
        correlation,
        ordered,
    })
}

fn correlation(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let (ma, mb) = (a.iter().sum::<f64>() / n, b.iter().sum::<f64>() / n);
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma) * (x - ma);
        sbb += (y - mb) * (y - mb);
    }
    sab / (saa * sbb).sqrt()
}

/// Slope of the least-squares line through `(xs, ys)`.
pub fn regression_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

fn p_prime_for(model: &SpikedModel, n: usize) -> usize {
    match model.sizes() {
        Some(s) if s.n == n => s.p_prime,
        _ => (model.mp().y() * n as f64).round() as usize,
    }
}

/// `(1/n) tr Aₙ`, `(1/n) tr AₙAₙ*` and `(1/n) Σ aᵢᵢ²` for one draw.
pub fn trace_functionals(
    model: &SpikedModel,
    lambda: f64,
    n: usize,
    law: EntryLaw,
    seed: u64,
) -> Result<TraceFunctionals> {
    SpikedDraw::new(model, p_prime_for(model, n), n, law, seed, 0, None)?.trace_functionals(lambda)
}

/// `Kₙ(λ)` for one draw.
pub fn kn_matrix(
    model: &SpikedModel,
    lambda: f64,
    n: usize,
    law: EntryLaw,
    seed: u64,
) -> Result<Mat<c64>> {
    SpikedDraw::new(model, p_prime_for(model, n), n, law, seed, 0, None)?.kn(lambda)
}

/// Limit of `Kₙ(λ)`: `(1 + y m₁(λ)) Σ`.
pub fn kn_limit(model: &SpikedModel, sigma: &Mat<c64>, lambda: f64) -> Result<Mat<c64>> {
    let m = m_transforms(model.mp(), lambda)?;
    let c = 1.0 + model.mp().y() * m.m1;
    Ok(Mat::from_fn(sigma.nrows(), sigma.ncols(), |i, j| sigma[(i, j)] * c))
}

/// `‖A − B‖_F`.
pub fn frobenius_distance(a: &Mat<c64>, b: &Mat<c64>) -> f64 {
    (a - b).norm_l2()
}

/// `(y(1 + m₁)/(λ − y(1 + m₁)))²`: the limit of `(1/n) Σ aᵢᵢ²` when the
/// base population is the identity. For a general base it does not hold;
/// see [`diagonal_square_limit`].
pub fn diagonal_square_formula(y: f64, lambda: f64, m1: f64) -> f64 {
    let c = y * (1.0 + m1);
    (c / (lambda - c)).powi(2)
}

/// Limit of `(1/n) Σ aᵢᵢ²` for any base population. The columns of `X₂` are
/// exchangeable, so every `aᵢᵢ` concentrates around the same value, and their
/// average is `(1/n) tr Aₙ → y m₁`.
pub fn diagonal_square_limit(y: f64, m1: f64) -> f64 {
    (y * m1).powi(2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::AtomicMeasure;
    use crate::spike::Spike;

    fn example() -> MPModel {
        MPModel::new(0.3, AtomicMeasure::uniform(&[1.0, 4.0, 10.0]).unwrap()).unwrap()
    }

    #[test]
    fn vanishing_ratio_reduces_to_atom_sums() {
        let m = example().with_y(1e-10).unwrap();
        let t = m_transforms(&m, 20.0).unwrap();
        let oracle = (1.0 / 19.0 + 4.0 / 16.0 + 10.0 / 10.0) / 3.0;
        assert!((t.m1 - oracle).abs() < 1e-3, "{} vs {oracle}", t.m1);
    }

    #[test]
    fn positive_outside_support_and_errors_inside() {
        let t = m_transforms(&example(), 18.65).unwrap();
        assert!(t.m2 > 0.0 && t.m3 > 0.0);
        assert!(matches!(
            m_transforms(&example(), 5.0),
            Err(Error::InsideSupport { .. })
        ));
    }

    #[test]
    fn moments_of_known_samples() {
        let s = MomentSummary::of(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(s.mean, 2.5);
        assert!((s.variance - 5.0 / 3.0).abs() < 1e-12);
        assert!(s.skewness.abs() < 1e-12);
        // Fourth central moment 2.5625 over 1.25²
        assert!((s.excess_kurtosis - (1.64 - 3.0)).abs() < 1e-12);
    }

    #[test]
    fn constant_sample_fails_with_zero_variance() {
        let s = FluctuationSample {
            spike_index: 0,
            n: 10,
            p: 3,
            center: 0.0,
            ranks: (1, 1),
            values: vec![vec![1.0]; 150],
        };
        let r = normality_report(&s).unwrap();
        assert_eq!(r.verdict, Verdict::FailZeroVariance);
        assert!(!r.underpowered);
    }

    #[test]
    fn close_spike_has_no_clt_scale() {
        let model = SpikedModel::new(
            example(),
            vec![Spike { alpha: 6.0, multiplicity: 1 }],
            None,
        )
        .unwrap();
        assert!(matches!(clt_scale(&model, 0), Err(Error::CloseSpike { .. })));
    }

    #[test]
    fn slope_of_a_line() {
        assert!((regression_slope(&[1.0, 2.0, 3.0], &[3.0, 1.0, -1.0]) + 2.0).abs() < 1e-12);
    }
}
