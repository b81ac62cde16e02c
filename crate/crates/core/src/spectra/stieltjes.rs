//! Inversion of `g`: the Stieltjes transform of `F_{y,H}`.
//!
//! For an atomic `H` with `k` positive atoms, `g(m) = z` clears to a
//! polynomial of degree `k + 1` in `m`. Exactly one of its roots lies in
//! the upper half-plane when `Im z > 0` (the others are in the lower
//! half-plane, since `g` maps `ℂ⁺` bijectively onto itself and commutes with
//! conjugation). All roots are found simultaneously with the Aberth–Ehrlich
//! iteration, the one with the largest imaginary part is kept, and a few
//! Newton steps on `g` itself polish it.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::MPModel;
use crate::error::{Error, Result};

/// Imaginary offset (relative to `1 + |λ|`) used for boundary values on the
/// real axis.
pub const REAL_AXIS_EPS: f64 = 1e-9;

const RESIDUAL_TARGET: f64 = 1e-12;
const MAX_ABERTH_ITERS: usize = 500;
const MAX_NEWTON_ITERS: usize = 60;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StieltjesValue {
    pub z: Complex64,
    pub m: Complex64,
}

/// Solves `g(m) = z` for `m ∈ ℂ⁺`, given `Im z > 0`.
pub fn stieltjes(model: &MPModel, z: Complex64) -> Result<StieltjesValue> {
    if !(z.im > 0.0) || !z.is_finite() {
        return Err(Error::NotUpperHalfPlane(format!("{z}")));
    }
    let atoms: Vec<(f64, f64)> = model
        .base()
        .positive_atoms()
        .map(|a| (a.location, a.mass))
        .collect();
    if atoms.is_empty() {
        return Ok(StieltjesValue { z, m: -1.0 / z });
    }

    let coeffs = clearing_polynomial(model.y(), &atoms, z);
    let (roots, iters) = aberth(&coeffs);
    let mut best = roots
        .iter()
        .copied()
        .filter(|r| r.is_finite())
        .max_by(|a, b| a.im.total_cmp(&b.im))
        .ok_or(Error::NoConvergence {
            residual: f64::INFINITY,
            iterations: iters,
        })?;

    let scale = 1.0 + z.norm();
    let mut iterations = iters;
    for _ in 0..MAX_NEWTON_ITERS {
        let (g, dg) = model.g_and_derivative(best);
        let f = g - z;
        if f.norm() <= RESIDUAL_TARGET * scale * 1e-2 || dg.norm() == 0.0 {
            break;
        }
        let next = best - f / dg;
        iterations += 1;
        if !next.is_finite() || next.im <= 0.0 {
            break;
        }
        let step = (next - best).norm();
        let (g_next, _) = model.g_and_derivative(next);
        if (g_next - z).norm() > f.norm() {
            break;
        }
        best = next;
        if step <= 1e-16 * best.norm() {
            break;
        }
    }

    let residual = (model.g_and_derivative(best).0 - z).norm();
    if !(best.im > 0.0) || !(residual <= 1e-10 * scale) {
        return Err(Error::NoConvergence {
            residual,
            iterations,
        });
    }
    Ok(StieltjesValue { z, m: best })
}

/// Boundary value `m(λ) = lim_{ε→0⁺} m(λ + iε)` at a real point outside the
/// support. Errors with [`Error::InsideSupport`] when the limit is not real.
pub fn stieltjes_real(model: &MPModel, lambda: f64) -> Result<f64> {
    let eps = REAL_AXIS_EPS * (1.0 + lambda.abs());
    let v = stieltjes(model, Complex64::new(lambda, eps))?;
    if v.m.im.abs() >= 1e-6 {
        return Err(Error::InsideSupport { lambda });
    }
    Ok(v.m.re)
}

/// Coefficients (ascending degree) of
/// `−Q(m) + y m Σ wᵢ tᵢ Qᵢ(m) − z m Q(m)`, where `Q = Π (1 + tⱼ m)` and
/// `Qᵢ = Q / (1 + tᵢ m)`. Its roots away from the poles are the solutions
/// of `g(m) = z`.
fn clearing_polynomial(y: f64, atoms: &[(f64, f64)], z: Complex64) -> Vec<Complex64> {
    let k = atoms.len();
    let q = product_of_linear(atoms.iter().map(|a| a.0));
    let mut p = vec![Complex64::new(0.0, 0.0); k + 2];
    for (i, c) in q.iter().enumerate() {
        p[i] -= c;
        p[i + 1] -= z * c;
    }
    for (i, &(t, w)) in atoms.iter().enumerate() {
        let qi = product_of_linear(
            atoms
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .map(|(_, a)| a.0),
        );
        for (d, c) in qi.iter().enumerate() {
            p[d + 1] += y * w * t * c;
        }
    }
    p
}

/// Real coefficients of `Π (1 + tⱼ m)`, ascending.
fn product_of_linear(ts: impl Iterator<Item = f64>) -> Vec<f64> {
    let mut q = vec![1.0];
    for t in ts {
        let mut next = vec![0.0; q.len() + 1];
        for (d, c) in q.iter().enumerate() {
            next[d] += c;
            next[d + 1] += t * c;
        }
        q = next;
    }
    q
}

fn horner(coeffs: &[Complex64], x: Complex64) -> (Complex64, Complex64) {
    let mut p = Complex64::new(0.0, 0.0);
    let mut dp = Complex64::new(0.0, 0.0);
    for c in coeffs.iter().rev() {
        dp = dp * x + p;
        p = p * x + c;
    }
    (p, dp)
}

/// All roots of a polynomial by the Aberth–Ehrlich method.
fn aberth(coeffs: &[Complex64]) -> (Vec<Complex64>, usize) {
    let deg = coeffs.len() - 1;
    let lead = coeffs[deg];
    // Cauchy bound on the root moduli.
    let bound = 1.0
        + coeffs[..deg]
            .iter()
            .map(|c| (c / lead).norm())
            .fold(0.0, f64::max);
    let lower = {
        // Reciprocal bound keeps the starting circle away from tiny roots.
        let c0 = coeffs[0];
        if c0.norm() > 0.0 {
            let b = 1.0
                + coeffs[1..]
                    .iter()
                    .map(|c| (c / c0).norm())
                    .fold(0.0, f64::max);
            1.0 / b
        } else {
            0.0
        }
    };
    let radius = (bound * lower.max(1e-300)).sqrt().clamp(lower, bound);
    let mut roots: Vec<Complex64> = (0..deg)
        .map(|j| {
            let theta = 2.0 * std::f64::consts::PI * (j as f64) / (deg as f64) + 0.4;
            Complex64::from_polar(radius, theta)
        })
        .collect();

    let mut iterations = 0;
    for _ in 0..MAX_ABERTH_ITERS {
        iterations += 1;
        let mut max_rel = 0.0f64;
        for i in 0..deg {
            let (p, dp) = horner(coeffs, roots[i]);
            if p.norm() == 0.0 {
                continue;
            }
            let ratio = p / dp;
            let mut repulsion = Complex64::new(0.0, 0.0);
            for (j, r) in roots.iter().enumerate() {
                if j != i {
                    repulsion += 1.0 / (roots[i] - r);
                }
            }
            let step = ratio / (1.0 - ratio * repulsion);
            if step.is_finite() {
                roots[i] -= step;
                max_rel = max_rel.max(step.norm() / roots[i].norm().max(1e-300));
            }
        }
        if max_rel < 1e-15 {
            break;
        }
    }
    (roots, iterations)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::AtomicMeasure;

    fn example() -> MPModel {
        MPModel::new(0.3, AtomicMeasure::uniform(&[1.0, 4.0, 10.0]).unwrap()).unwrap()
    }

    #[test]
    fn polynomial_roots_solve_g() {
        let m = example();
        let z = Complex64::new(3.0, 0.5);
        let coeffs = clearing_polynomial(m.y(), &[(1.0, 1.0 / 3.0), (4.0, 1.0 / 3.0), (10.0, 1.0 / 3.0)], z);
        let (roots, _) = aberth(&coeffs);
        assert_eq!(roots.len(), 4);
        let upper: Vec<_> = roots.iter().filter(|r| r.im > 0.0).collect();
        assert_eq!(upper.len(), 1);
        for r in &roots {
            let g = m.g_map(Complex64::new(r.re, r.im.abs())).unwrap();
            let g = if r.im < 0.0 { g.conj() } else { g };
            assert!((g - z).norm() < 1e-9, "root {r} gives {g}");
        }
    }

    #[test]
    fn upper_half_plane_is_preserved() {
        let m = example();
        let v = stieltjes(&m, Complex64::new(1.5, 1e-9)).unwrap();
        assert!(v.m.im > 0.0);
    }

    #[test]
    fn rejects_real_or_lower_argument() {
        let m = example();
        assert!(stieltjes(&m, Complex64::new(1.0, 0.0)).is_err());
        assert!(stieltjes(&m, Complex64::new(1.0, -1.0)).is_err());
    }

    #[test]
    fn dirac_at_zero_gives_point_mass_transform() {
        let m = MPModel::new(0.5, AtomicMeasure::dirac(0.0).unwrap()).unwrap();
        let z = Complex64::new(2.0, 1.0);
        let v = stieltjes(&m, z).unwrap();
        assert!((v.m - (-1.0 / z)).norm() < 1e-15);
    }

    #[test]
    fn real_boundary_value_inside_support_errors() {
        let m = example();
        assert!(matches!(
            stieltjes_real(&m, 5.0),
            Err(Error::InsideSupport { .. })
        ));
        assert!(stieltjes_real(&m, 25.0).is_ok());
    }
}
