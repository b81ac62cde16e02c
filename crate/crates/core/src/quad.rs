//! Adaptive Simpson quadrature, vector-valued so several moments of the
//! same density share integrand evaluations.

const MAX_DEPTH: u32 = 48;

/// `∫_a^b f` to absolute tolerance `tol`, for `N` simultaneous integrands.
pub fn adaptive_simpson<const N: usize>(
    f: &mut impl FnMut(f64) -> [f64; N],
    a: f64,
    b: f64,
    tol: f64,
) -> [f64; N] {
    if b <= a {
        return [0.0; N];
    }
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = simpson(a, b, &fa, &fm, &fb);
    recurse(f, a, b, fa, fm, fb, whole, tol, MAX_DEPTH)
}

fn simpson<const N: usize>(a: f64, b: f64, fa: &[f64; N], fm: &[f64; N], fb: &[f64; N]) -> [f64; N] {
    let h = (b - a) / 6.0;
    std::array::from_fn(|i| h * (fa[i] + 4.0 * fm[i] + fb[i]))
}

#[allow(clippy::too_many_arguments)]
fn recurse<const N: usize>(
    f: &mut impl FnMut(f64) -> [f64; N],
    a: f64,
    b: f64,
    fa: [f64; N],
    fm: [f64; N],
    fb: [f64; N],
    whole: [f64; N],
    tol: f64,
    depth: u32,
) -> [f64; N] {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = simpson(a, m, &fa, &flm, &fm);
    let right = simpson(m, b, &fm, &frm, &fb);
    let err = (0..N)
        .map(|i| (left[i] + right[i] - whole[i]).abs())
        .fold(0.0, f64::max);
    if depth == 0 || err <= 15.0 * tol || m <= a || m >= b {
        return std::array::from_fn(|i| {
            let s = left[i] + right[i];
            s + (s - whole[i]) / 15.0
        });
    }
    let l = recurse(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1);
    let r = recurse(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
    std::array::from_fn(|i| l[i] + r[i])
}

/// Integral over `[lo, hi]` of a density with square-root behaviour at both
/// ends: the substitutions `x = lo + u²` on the lower half and `x = hi − u²`
/// on the upper half remove the endpoint singularity of the derivative.
pub fn integrate_edges<const N: usize>(
    f: &mut impl FnMut(f64) -> [f64; N],
    lo: f64,
    hi: f64,
    tol: f64,
) -> [f64; N] {
    if hi <= lo {
        return [0.0; N];
    }
    let mid = 0.5 * (lo + hi);
    let half = (mid - lo).sqrt();
    let left = adaptive_simpson::<N>(
        &mut |u: f64| {
            let v = f(lo + u * u);
            std::array::from_fn(|i| 2.0 * u * v[i])
        },
        0.0,
        half,
        0.5 * tol,
    );
    let right = adaptive_simpson::<N>(
        &mut |u: f64| {
            let v = f(hi - u * u);
            std::array::from_fn(|i| 2.0 * u * v[i])
        },
        0.0,
        half,
        0.5 * tol,
    );
    std::array::from_fn(|i| left[i] + right[i])
}

/// Integral over `[lo, x]` with the square-root substitution at `lo` only.
pub fn integrate_from_edge<const N: usize>(
    f: &mut impl FnMut(f64) -> [f64; N],
    lo: f64,
    x: f64,
    tol: f64,
) -> [f64; N] {
    if x <= lo {
        return [0.0; N];
    }
    adaptive_simpson(
        &mut |u: f64| {
            let v = f(lo + u * u);
            std::array::from_fn(|i| 2.0 * u * v[i])
        },
        0.0,
        (x - lo).sqrt(),
        tol,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_is_exact() {
        let r = adaptive_simpson(&mut |x: f64| [x * x * x, 1.0], 0.0, 2.0, 1e-12);
        assert!((r[0] - 4.0).abs() < 1e-12);
        assert!((r[1] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn semicircle_with_edge_substitution() {
        // ∫_{-1}^{1} sqrt(1 − x²) dx = π/2
        let r = integrate_edges(&mut |x: f64| [(1.0 - x * x).max(0.0).sqrt()], -1.0, 1.0, 1e-12);
        assert!((r[0] - std::f64::consts::FRAC_PI_2).abs() < 1e-10);
        let h = integrate_from_edge(&mut |x: f64| [(1.0 - x * x).max(0.0).sqrt()], -1.0, 0.0, 1e-12);
        assert!((h[0] - std::f64::consts::FRAC_PI_4).abs() < 1e-10);
    }
}
