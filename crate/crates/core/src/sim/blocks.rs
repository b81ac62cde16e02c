//! Draws kept in block form: the first `M` rows carry the spike block
//! `Σ = U diag(α) U*`, the remaining `p′` rows the base block. With
//! `X₁ = Σ^{1/2} Z₁/√n` and `X₂ = V^{1/2} Z₂/√n`,
//!
//! ```text
//! Aₙ(λ) = X₂*(λ − X₂X₂*)⁻¹X₂,    Kₙ(λ) = X₁(I + Aₙ(λ))X₁*.
//! ```
//!
//! Everything is expressed through the eigendecomposition
//! `X₂X₂* = Q diag(μ) Q*` and `W = Q*X₂`, so evaluating at a new `λ` costs
//! `O(p′n)` instead of a fresh inversion.

use faer::{c64, Mat, Side};

use super::entries::{rep_rng, EntryLaw, Scalar};
use super::population::realize_base;
use super::sample::{check_size, descending_eigenvalues, gram_lower, scaled_entries};
use crate::error::{Error, Result};
use crate::spike::SpikedModel;

/// Smallest admissible distance between `λ` and the spectrum of `X₂X₂*`.
pub const RESOLVENT_GAP: f64 = 1e-8;

/// Normalized traces of `Aₙ(λ)`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct TraceFunctionals {
    pub lambda: f64,
    /// `(1/n) tr Aₙ`.
    pub trace: f64,
    /// `(1/n) tr Aₙ Aₙ*`.
    pub trace_square: f64,
    /// `(1/n) Σᵢ aᵢᵢ²`.
    pub diagonal_square: f64,
}

#[derive(Debug, Clone)]
pub struct SpikedDraw {
    n: usize,
    /// Spike block covariance `Σ`, `M × M`.
    sigma: Mat<c64>,
    s11: Mat<c64>,
    /// `X₁ W*`, `M × p′`.
    y: Mat<c64>,
    /// Eigenvalues `μ` of `X₂X₂*`, ascending.
    mu: Vec<f64>,
    /// `|W_ki|²`, `p′ × n`.
    w_abs2: Mat<f64>,
    /// Eigenvalues of the full `Sₙ`, descending.
    eigenvalues: Vec<f64>,
}

impl SpikedDraw {
    /// One draw for `model` with `p′` base rows and `n` samples. `rotation`
    /// is an optional real orthogonal `M × M` matrix `U`.
    pub fn new(
        model: &SpikedModel,
        p_prime: usize,
        n: usize,
        law: EntryLaw,
        seed: u64,
        rep: u64,
        rotation: Option<&Mat<f64>>,
    ) -> Result<Self> {
        let m = model.total_multiplicity();
        if m == 0 {
            return Err(Error::InvalidArgument("the model has no spikes".into()));
        }
        check_size(p_prime + m, n)?;
        if let Some(u) = rotation {
            check_orthogonal(u, m)?;
        }
        if law.is_complex() {
            build::<c64>(model, p_prime, n, law, seed, rep, rotation)
        } else {
            build::<f64>(model, p_prime, n, law, seed, rep, rotation)
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn sigma(&self) -> &Mat<c64> {
        &self.sigma
    }

    /// Descending eigenvalues of the full sample covariance matrix.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// Ascending eigenvalues of the base block `X₂X₂*`.
    pub fn base_eigenvalues(&self) -> &[f64] {
        &self.mu
    }

    fn resolvent_weights(&self, lambda: f64) -> Result<Vec<f64>> {
        let gap = self
            .mu
            .iter()
            .map(|m| (lambda - m).abs())
            .fold(f64::INFINITY, f64::min);
        if !(gap >= RESOLVENT_GAP) {
            return Err(Error::ResolventBlowUp { lambda, gap });
        }
        Ok(self.mu.iter().map(|m| 1.0 / (lambda - m)).collect())
    }

    pub fn trace_functionals(&self, lambda: f64) -> Result<TraceFunctionals> {
        let d = self.resolvent_weights(lambda)?;
        let n = self.n as f64;
        let trace = self.mu.iter().zip(&d).map(|(m, d)| m * d).sum::<f64>() / n;
        let trace_square = self
            .mu
            .iter()
            .zip(&d)
            .map(|(m, d)| (m * d) * (m * d))
            .sum::<f64>()
            / n;
        let mut diag = vec![0.0; self.n];
        for (k, dk) in d.iter().enumerate() {
            for (i, a) in diag.iter_mut().enumerate() {
                *a += dk * self.w_abs2[(k, i)];
            }
        }
        let diagonal_square = diag.iter().map(|a| a * a).sum::<f64>() / n;
        Ok(TraceFunctionals {
            lambda,
            trace,
            trace_square,
            diagonal_square,
        })
    }

    /// `Kₙ(λ) = S₁₁ + S₁₂(λ − S₂₂)⁻¹S₂₁`.
    pub fn kn(&self, lambda: f64) -> Result<Mat<c64>> {
        let d = self.resolvent_weights(lambda)?;
        let m = self.s11.nrows();
        let mut k = self.s11.clone();
        for a in 0..m {
            for b in 0..=a {
                let mut acc = c64::new(0.0, 0.0);
                for (j, dj) in d.iter().enumerate() {
                    acc += self.y[(a, j)] * self.y[(b, j)].conj() * *dj;
                }
                k[(a, b)] += acc;
                if a != b {
                    k[(b, a)] = k[(a, b)].conj();
                }
            }
        }
        Ok(k)
    }

    /// `|det(λ − Kₙ(λ))| / ‖Kₙ(λ)‖_F^M`: zero exactly when `λ` is an
    /// eigenvalue of `Sₙ` outside the spectrum of the base block.
    pub fn secular_residual(&self, lambda: f64) -> Result<f64> {
        let k = self.kn(lambda)?;
        let m = k.nrows();
        let shifted = Mat::<c64>::from_fn(m, m, |i, j| {
            let id = if i == j { lambda } else { 0.0 };
            c64::new(id, 0.0) - k[(i, j)]
        });
        let det = shifted.determinant().norm();
        Ok(det / k.norm_l2().powi(m as i32))
    }
}

fn check_orthogonal(u: &Mat<f64>, m: usize) -> Result<()> {
    if u.nrows() != m || u.ncols() != m {
        return Err(Error::InvalidArgument(format!(
            "rotation must be {m} x {m}, got {} x {}",
            u.nrows(),
            u.ncols()
        )));
    }
    let utu = u.transpose() * u;
    let err = (0..m)
        .flat_map(|i| (0..m).map(move |j| (i, j)))
        .map(|(i, j)| (utu[(i, j)] - if i == j { 1.0 } else { 0.0 }).abs())
        .fold(0.0, f64::max);
    if err > 1e-10 {
        return Err(Error::InvalidArgument(format!(
            "rotation is not orthogonal (max deviation {err:e})"
        )));
    }
    Ok(())
}

fn to_c64<T: Scalar>(a: &Mat<T>) -> Mat<c64> {
    Mat::from_fn(a.nrows(), a.ncols(), |i, j| a[(i, j)].into_c64())
}

fn build<T: Scalar>(
    model: &SpikedModel,
    p_prime: usize,
    n: usize,
    law: EntryLaw,
    seed: u64,
    rep: u64,
    rotation: Option<&Mat<f64>>,
) -> Result<SpikedDraw> {
    let alphas: Vec<f64> = model
        .spikes()
        .iter()
        .flat_map(|s| std::iter::repeat_n(s.alpha, s.multiplicity))
        .collect();
    let m = alphas.len();
    let mut rows = alphas.clone();
    rows.extend(realize_base(model.mp().base(), p_prime)?);

    let mut rng = rep_rng(seed, rep);
    let (mut x, _) = scaled_entries::<T>(&rows, n, law, &mut rng);
    if let Some(u) = rotation {
        let ut = Mat::<T>::from_fn(m, m, |i, j| T::from_real_impl(&u[(i, j)]));
        let rotated = &ut * x.subrows(0, m);
        x.subrows_mut(0, m).copy_from(&rotated);
    }
    let x1 = x.subrows(0, m).to_owned();
    let x2 = x.subrows(m, p_prime).to_owned();

    let evd = gram_lower(&x2)
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::Eigen(format!("{e:?}")))?;
    let mu: Vec<f64> = (0..p_prime)
        .map(|k| evd.S().column_vector()[k].re().max(0.0))
        .collect();
    let w = evd.U().adjoint() * &x2;
    let w_abs2 = Mat::<f64>::from_fn(p_prime, n, |k, i| w[(k, i)].abs2());
    let y = to_c64(&(&x1 * w.adjoint()));
    let s11 = to_c64(&(&x1 * x1.adjoint()));

    let sigma = match rotation {
        Some(u) => Mat::<c64>::from_fn(m, m, |i, j| {
            let s: f64 = (0..m).map(|l| u[(i, l)] * alphas[l] * u[(j, l)]).sum();
            c64::new(s, 0.0)
        }),
        None => Mat::<c64>::from_fn(m, m, |i, j| {
            c64::new(if i == j { alphas[i] } else { 0.0 }, 0.0)
        }),
    };

    let eigenvalues = descending_eigenvalues(&gram_lower(&x))?;
    Ok(SpikedDraw {
        n,
        sigma,
        s11,
        y,
        mu,
        w_abs2,
        eigenvalues,
    })
}
