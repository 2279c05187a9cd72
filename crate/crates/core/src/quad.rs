//! Adaptive quadrature.
//!
//! Two integrators cover the crate's needs:
//!
//! * [`adaptive_simpson`] — recursive Simpson for bounded smooth integrands
//!   (perturbation integrals on the log scale).
//! * [`tail_curve_integral`] — derivative-free trapezoid along the quantile
//!   curve for integrals of the form `∫ g(t, 1-G(t)) dt`. Nodes are placed
//!   log-spaced in `u = 1-G(t)` and mapped through the quantile, so no
//!   derivative of the quantile is ever needed. Panels are refined by
//!   doubling until the requested relative tolerance holds; when the range
//!   runs to the upper endpoint (`u → 0`) the panel ladder is extended one
//!   decade at a time until the remainder is negligible.

use crate::error::{Error, Result};
use crate::numeric::KahanSum;

/// Hard cap on Simpson recursion depth.
const MAX_SIMPSON_DEPTH: u32 = 52;
/// Panel refinement cap: 2^17 nodes per panel.
const MAX_PANEL_NODES: usize = 1 << 17;
/// Cap on decade extension toward u = 0.
const MAX_TAIL_DECADES: usize = 300;

/// Adaptive Simpson integration of `f` over `[a, b]` to relative tolerance
/// `rel_tol`.
pub fn adaptive_simpson<F>(f: &F, a: f64, b: f64, rel_tol: f64) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    if a == b {
        return Ok(0.0);
    }
    let whole = simpson(f, a, b);
    if !whole.is_finite() {
        return Err(Error::NonFinite {
            context: "adaptive_simpson",
            value: whole,
        });
    }
    let scale = whole.abs().max(1e-30);
    recurse(f, a, b, rel_tol * scale, whole, 0)
}

fn simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> f64 {
    let c = 0.5 * (a + b);
    (b - a) / 6.0 * (f(a) + 4.0 * f(c) + f(b))
}

fn recurse<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    eps: f64,
    whole: f64,
    depth: u32,
) -> Result<f64> {
    let c = 0.5 * (a + b);
    let left = simpson(f, a, c);
    let right = simpson(f, c, b);
    let delta = left + right - whole;
    if !delta.is_finite() {
        return Err(Error::NonFinite {
            context: "adaptive_simpson",
            value: delta,
        });
    }
    if delta.abs() <= 15.0 * eps {
        return Ok(left + right + delta / 15.0);
    }
    if depth >= MAX_SIMPSON_DEPTH {
        return Err(Error::QuadratureFailed(format!(
            "simpson depth limit at [{a}, {b}], residual {delta:e}"
        )));
    }
    Ok(recurse(f, a, c, 0.5 * eps, left, depth + 1)?
        + recurse(f, c, b, 0.5 * eps, right, depth + 1)?)
}

/// `∫_u^1 f(t)/t dt` computed on the log scale (`v = ln t`), which removes
/// the `1/t` singularity near zero.
pub fn log_scale_tail_integral<F>(f: &F, u: f64, rel_tol: f64) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    debug_assert!(u > 0.0 && u < 1.0);
    let g = |v: f64| f(v.exp());
    adaptive_simpson(&g, u.ln(), 0.0, rel_tol)
}

/// Integral `∫ g(t, u(t)) dt` for `t` ranging over the image of
/// `[u_lo, u_hi]` under the quantile `t = quantile(u)`, where `u = 1-G(t)`.
///
/// `u_lo = 0` means the integral runs to the upper endpoint of the
/// distribution. The quantile must be nonincreasing in `u` over the range.
pub fn tail_curve_integral<Q, G>(
    quantile: &Q,
    g: &G,
    u_lo: f64,
    u_hi: f64,
    rel_tol: f64,
) -> Result<f64>
where
    Q: Fn(f64) -> Result<f64>,
    G: Fn(f64, f64) -> f64,
{
    if !(0.0..1.0).contains(&u_lo) || !(0.0..1.0).contains(&u_hi) || u_lo >= u_hi {
        return Err(Error::InvalidArgument(format!(
            "tail_curve_integral needs 0 <= u_lo < u_hi < 1, got [{u_lo}, {u_hi}]"
        )));
    }

    let mut total = 0.0f64;
    let mut hi = u_hi;
    let mut small_streak = 0usize;
    for decade in 0..MAX_TAIL_DECADES {
        let lo = if u_lo > 0.0 {
            (hi / 10.0).max(u_lo)
        } else {
            hi / 10.0
        };
        // Once a running total exists, a panel only needs resolving to the
        // total's tolerance; deep endpoint decades contribute vanishingly
        // and their node spacing drops under f64 resolution.
        let abs_floor = 0.01 * rel_tol * total.abs();
        let piece = panel_integral(quantile, g, lo, hi, rel_tol, abs_floor)?;
        total += piece;
        hi = lo;

        if u_lo > 0.0 {
            if lo <= u_lo {
                return Ok(total);
            }
            continue;
        }

        // Endpoint integral: stop once two consecutive decades are
        // negligible against the accumulated value.
        if decade >= 3 && piece.abs() <= 0.05 * rel_tol * total.abs().max(1e-300) {
            small_streak += 1;
            if small_streak >= 2 {
                return Ok(total);
            }
        } else {
            small_streak = 0;
        }
    }
    Err(Error::QuadratureFailed(format!(
        "tail integral did not converge within {MAX_TAIL_DECADES} decades (u_hi={u_hi:e})"
    )))
}

/// Trapezoid over one log-u panel `[lo, hi]`, refined by doubling with one
/// Richardson extrapolation step; convergence is judged on the extrapolated
/// values (O(h⁴)), not the raw trapezoids.
fn panel_integral<Q, G>(
    quantile: &Q,
    g: &G,
    lo: f64,
    hi: f64,
    rel_tol: f64,
    abs_floor: f64,
) -> Result<f64>
where
    Q: Fn(f64) -> Result<f64>,
    G: Fn(f64, f64) -> f64,
{
    let mut m = 8usize;
    let mut prev_raw = raw_trapezoid(quantile, g, lo, hi, m)?;
    let mut prev_rich: Option<f64> = None;
    loop {
        m *= 2;
        let cur = raw_trapezoid(quantile, g, lo, hi, m)?;
        let rich = cur + (cur - prev_raw) / 3.0;
        if let Some(pr) = prev_rich {
            let err = (rich - pr).abs();
            if err <= rel_tol * rich.abs().max(1e-300)
                || err <= abs_floor
                || err <= 4.0 * f64::EPSILON * rich.abs()
            {
                return Ok(rich);
            }
        }
        if m >= MAX_PANEL_NODES {
            return Err(Error::QuadratureFailed(format!(
                "panel [{lo:e}, {hi:e}] not converged at {m} nodes"
            )));
        }
        prev_raw = cur;
        prev_rich = Some(rich);
    }
}

fn raw_trapezoid<Q, G>(quantile: &Q, g: &G, lo: f64, hi: f64, m: usize) -> Result<f64>
where
    Q: Fn(f64) -> Result<f64>,
    G: Fn(f64, f64) -> f64,
{
    let log_lo = lo.ln();
    let step = (hi.ln() - log_lo) / m as f64;
    let mut sum = KahanSum::new();
    // Ascending u, so t descends; each trapezoid contributes with t_i - t_{i+1}.
    let mut t_prev = quantile(lo)?;
    let mut g_prev = g(t_prev, lo);
    for i in 1..=m {
        let u = if i == m {
            hi
        } else {
            (log_lo + step * i as f64).exp()
        };
        let t = quantile(u)?;
        let gv = g(t, u);
        sum.add((t_prev - t) * 0.5 * (g_prev + gv));
        t_prev = t;
        g_prev = gv;
    }
    let sum = sum.value();
    if !sum.is_finite() {
        return Err(Error::NonFinite {
            context: "tail_curve_integral",
            value: sum,
        });
    }
    Ok(sum)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn simpson_polynomial() {
        let f = |x: f64| x * x;
        let v = adaptive_simpson(&f, 0.0, 1.0, 1e-12).unwrap();
        assert!((v - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn simpson_oscillatory() {
        let f = |x: f64| (10.0 * x).sin();
        let v = adaptive_simpson(&f, 0.0, 1.0, 1e-10).unwrap();
        let exact = (1.0 - (10.0f64).cos()) / 10.0;
        assert!((v - exact).abs() < 1e-9);
    }

    #[test]
    fn log_scale_handles_tiny_lower_limit() {
        // ∫_u^1 c/t dt = -c ln u
        let f = |_t: f64| 2.5;
        let u = 1e-12;
        let v = log_scale_tail_integral(&f, u, 1e-12).unwrap();
        assert!((v - (-2.5 * u.ln())).abs() < 1e-9 * v.abs());
    }

    #[test]
    fn curve_integral_exponential_tail() {
        // Quantile of a unit exponential: t(u) = -ln u, so
        // ∫_x^∞ (1-G(t)) dt with g = u equals e^{-x} = u_hi.
        let q = |u: f64| Ok(-(u.ln()));
        let g = |_t: f64, u: f64| u;
        let v = tail_curve_integral(&q, &g, 0.0, 1e-3, 1e-10).unwrap();
        assert!((v - 1e-3).abs() < 1e-12);
    }

    #[test]
    fn curve_integral_windowed() {
        // ∫ between two quantile levels: e^{-x} - e^{-z} = u_hi - u_lo.
        let q = |u: f64| Ok(-(u.ln()));
        let g = |_t: f64, u: f64| u;
        let v = tail_curve_integral(&q, &g, 1e-5, 1e-3, 1e-10).unwrap();
        assert!((v - (1e-3 - 1e-5)).abs() < 1e-13);
    }

    #[test]
    fn curve_integral_polynomial_kernel() {
        // ∫_x^∞ (t-x)(1-G(t)) dt = e^{-x} for the unit exponential.
        let q = |u: f64| Ok(-(u.ln()));
        let x = -(1e-3f64.ln());
        let g = move |t: f64, u: f64| (t - x) * u;
        let v = tail_curve_integral(&q, &g, 0.0, 1e-3, 1e-10).unwrap();
        assert!((v - 1e-3).abs() < 1e-11);
    }

    #[test]
    fn rejects_bad_range() {
        let q = |u: f64| Ok(-(u.ln()));
        let g = |_t: f64, u: f64| u;
        assert!(tail_curve_integral(&q, &g, 0.5, 0.1, 1e-8).is_err());
    }
}
