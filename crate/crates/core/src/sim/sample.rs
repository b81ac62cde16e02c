use std::time::Instant;

use faer::linalg::matmul::triangular::{matmul, BlockStructure};
use faer::{c64, Accum, Mat, Par, Side};
use rand::RngExt;
use serde::{Deserialize, Serialize};

use super::entries::{rep_rng, EntryLaw, Scalar};
use super::population::PopulationSpectrum;
use crate::error::{Error, Result};

/// Largest `p·n` accepted for a single draw.
pub const MAX_ENTRIES: usize = 500_000_000;

/// Relative size (to `λ₁`) of negative rounding noise that is clamped to 0.
const CLAMP_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleMeta {
    pub seed: u64,
    pub rep: u64,
    pub n: usize,
    pub p: usize,
    pub law: EntryLaw,
    pub wall_time_ms: f64,
}

/// Sample eigenvalues of one draw of `Sₙ`, descending.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigenSample {
    pub eigenvalues: Vec<f64>,
    /// `(1/n) Σ |x_ij|²` over the scaled entry matrix, accumulated while it
    /// is built: an independent value of `tr Sₙ`.
    pub entry_trace: f64,
    pub meta: SampleMeta,
}

impl EigenSample {
    /// Eigenvalue of descending rank `r` (1-based).
    pub fn rank(&self, r: usize) -> f64 {
        self.eigenvalues[r - 1]
    }
}

pub(crate) fn check_size(p: usize, n: usize) -> Result<()> {
    if n == 0 || p == 0 {
        return Err(Error::InvalidArgument(format!("dimensions p = {p}, n = {n}")));
    }
    match p.checked_mul(n) {
        Some(e) if e <= MAX_ENTRIES => Ok(()),
        _ => Err(Error::TooLarge { p, n }),
    }
}

/// Scaled entry matrix `diag(√σ) Z / √n`, drawn column by column, and the
/// accumulated `Σ |x_ij|²`.
pub(crate) fn scaled_entries<T: Scalar>(
    sigma: &[f64],
    n: usize,
    law: EntryLaw,
    rng: &mut impl rand::Rng,
) -> (Mat<T>, f64) {
    let p = sigma.len();
    let roots: Vec<f64> = sigma.iter().map(|s| (s / n as f64).sqrt()).collect();
    let mut x = Mat::<T>::zeros(p, n);
    let mut sum = 0.0;
    for j in 0..n {
        for (i, r) in roots.iter().enumerate() {
            let w = T::draw(law, rng).scale(*r);
            sum += w.abs2();
            x[(i, j)] = w;
        }
    }
    (x, sum)
}

/// `X X*` with only the lower triangle filled.
pub(crate) fn gram_lower<T: Scalar>(x: &Mat<T>) -> Mat<T> {
    let p = x.nrows();
    let mut s = Mat::<T>::zeros(p, p);
    matmul(
        s.as_mut(),
        BlockStructure::TriangularLower,
        Accum::Replace,
        x.as_ref(),
        BlockStructure::Rectangular,
        x.adjoint(),
        BlockStructure::Rectangular,
        T::one_impl(),
        Par::Seq,
    );
    s
}

/// Descending eigenvalues of a Hermitian matrix given by its lower triangle,
/// with negative rounding noise clamped to zero.
pub(crate) fn descending_eigenvalues<T: Scalar>(s: &Mat<T>) -> Result<Vec<f64>> {
    let mut ev = s
        .self_adjoint_eigenvalues(Side::Lower)
        .map_err(|e| Error::Eigen(format!("{e:?}")))?;
    ev.reverse();
    let top = ev.first().copied().unwrap_or(0.0).abs().max(f64::MIN_POSITIVE);
    for v in &mut ev {
        if *v < 0.0 {
            if -*v > CLAMP_TOL * top {
                return Err(Error::Eigen(format!(
                    "negative eigenvalue {v:e} beyond rounding level (top {top:e})"
                )));
            }
            *v = 0.0;
        }
    }
    Ok(ev)
}

fn draw_generic<T: Scalar>(
    spectrum: &PopulationSpectrum,
    n: usize,
    law: EntryLaw,
    seed: u64,
    rep: u64,
) -> Result<EigenSample> {
    let start = Instant::now();
    let mut rng = rep_rng(seed, rep);
    let (x, sum) = scaled_entries::<T>(spectrum.eigenvalues(), n, law, &mut rng);
    let eigenvalues = descending_eigenvalues(&gram_lower(&x))?;
    Ok(EigenSample {
        eigenvalues,
        entry_trace: sum,
        meta: SampleMeta {
            seed,
            rep,
            n,
            p: spectrum.dim(),
            law,
            wall_time_ms: start.elapsed().as_secs_f64() * 1e3,
        },
    })
}

/// One draw of `Sₙ = (1/n) T^{1/2} Z Z* T^{1/2}` with `T` diagonal, using
/// replication stream `rep` of `seed`.
pub fn sample_covariance_rep(
    spectrum: &PopulationSpectrum,
    n: usize,
    law: EntryLaw,
    seed: u64,
    rep: u64,
) -> Result<EigenSample> {
    check_size(spectrum.dim(), n)?;
    if law.is_complex() {
        draw_generic::<c64>(spectrum, n, law, seed, rep)
    } else {
        draw_generic::<f64>(spectrum, n, law, seed, rep)
    }
}

pub fn sample_covariance(
    spectrum: &PopulationSpectrum,
    n: usize,
    law: EntryLaw,
    seed: u64,
) -> Result<EigenSample> {
    sample_covariance_rep(spectrum, n, law, seed, 0)
}

/// Largest relative residual `‖S v − λ v‖ / ‖S‖` over `count` randomly
/// chosen eigenpairs of one draw.
pub fn eigen_residual_check(
    spectrum: &PopulationSpectrum,
    n: usize,
    law: EntryLaw,
    seed: u64,
    count: usize,
) -> Result<f64> {
    check_size(spectrum.dim(), n)?;
    if law.is_complex() {
        residual_generic::<c64>(spectrum, n, law, seed, count)
    } else {
        residual_generic::<f64>(spectrum, n, law, seed, count)
    }
}

fn residual_generic<T: Scalar>(
    spectrum: &PopulationSpectrum,
    n: usize,
    law: EntryLaw,
    seed: u64,
    count: usize,
) -> Result<f64> {
    let mut rng = rep_rng(seed, 0);
    let (x, _) = scaled_entries::<T>(spectrum.eigenvalues(), n, law, &mut rng);
    let s = &x * x.adjoint();
    let evd = s
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::Eigen(format!("{e:?}")))?;
    let norm = s.norm_l2();
    let p = spectrum.dim();
    let mut pick = rep_rng(seed, 1);
    let mut worst: f64 = 0.0;
    for _ in 0..count {
        let j = pick.random_range(0..p);
        let v = evd.U().col(j);
        let lambda = evd.S().column_vector()[j].re();
        let sv = &s * v;
        let r: f64 = (0..p)
            .map(|i| {
                let d = sv[i] - v[i].scale(lambda);
                d.abs2()
            })
            .sum::<f64>()
            .sqrt();
        worst = worst.max(r / norm.max(f64::MIN_POSITIVE));
    }
    Ok(worst)
}

/// Eigenvalues strictly inside `(a, b)` and strictly above `b`.
pub fn separation_check(sample: &EigenSample, a: f64, b: f64) -> Result<(usize, usize)> {
    if !(a < b) {
        return Err(Error::InvalidArgument(format!("interval [{a}, {b}] is empty")));
    }
    let inside = sample.eigenvalues.iter().filter(|&&x| a < x && x < b).count();
    let above = sample.eigenvalues.iter().filter(|&&x| x > b).count();
    Ok((inside, above))
}
