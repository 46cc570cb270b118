//! Adaptive Simpson quadrature with Richardson correction.

use crate::error::{Error, Result};

const MAX_DEPTH: u32 = 48;
const MAX_EVALS: usize = 2_000_000;

/// Integrates `f` over `[breaks[0], breaks.last()]` to absolute tolerance
/// `tol`.
///
/// `breaks` must be sorted. Each panel between consecutive breaks is refined
/// independently and receives a share of `tol` proportional to its width, so
/// kinks and narrow peaks should be listed as breaks.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: F, breaks: &[f64], tol: f64) -> Result<f64> {
    assert!(tol > 0.0, "tolerance must be positive");
    assert!(breaks.len() >= 2, "need at least one panel");
    let span = breaks[breaks.len() - 1] - breaks[0];
    if span <= 0.0 {
        return Ok(0.0);
    }
    let mut total = 0.0;
    let mut state = Refine {
        worst: 0.0,
        failed: false,
        evals_left: MAX_EVALS,
    };
    for w in breaks.windows(2) {
        let (a, b) = (w[0], w[1]);
        debug_assert!(b >= a, "breaks must be sorted");
        if b <= a {
            continue;
        }
        let panel_tol = tol * (b - a) / span;
        let (fa, fm, fb) = (f(a), f(0.5 * (a + b)), f(b));
        let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
        total += refine(&f, a, b, fa, fm, fb, whole, panel_tol, MAX_DEPTH, &mut state);
    }
    if state.failed {
        return Err(Error::QuadratureNonConvergent {
            tol,
            estimate: state.worst,
        });
    }
    Ok(total)
}

struct Refine {
    worst: f64,
    failed: bool,
    evals_left: usize,
}

#[allow(clippy::too_many_arguments)]
fn refine<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
    state: &mut Refine,
) -> f64 {
    let m = 0.5 * (a + b);
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (f(lm), f(rm));
    state.evals_left = state.evals_left.saturating_sub(2);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let sum = left + right;
    let delta = sum - whole;
    let converged =
        delta.abs() <= 15.0 * tol || delta.abs() <= 64.0 * f64::EPSILON * sum.abs();
    if converged {
        return sum + delta / 15.0;
    }
    if depth == 0 || state.evals_left == 0 {
        state.failed = true;
        state.worst = state.worst.max(delta.abs() / 15.0);
        return sum + delta / 15.0;
    }
    refine(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1, state)
        + refine(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1, state)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_is_exact() {
        let v = adaptive_simpson(|x| x * x * x - 2.0 * x, &[0.0, 2.0], 1e-12).unwrap();
        assert!((v - 0.0).abs() < 1e-12);
    }

    #[test]
    fn gaussian_density_normalizes() {
        let pdf = |x: f64| (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt();
        let v = adaptive_simpson(pdf, &[-12.0, -2.0, 0.0, 2.0, 12.0], 1e-12).unwrap();
        assert!((v - 1.0).abs() < 1e-11);
    }

    #[test]
    fn kink_at_break() {
        let v = adaptive_simpson(|x: f64| x.abs(), &[-1.0, 0.0, 3.0], 1e-12).unwrap();
        assert!((v - 5.0).abs() < 1e-12);
    }

    #[test]
    fn reports_non_convergence() {
        // oscillation far below the resolvable scale
        let err = adaptive_simpson(|x: f64| (1e9 * x).sin().signum(), &[0.0, 1.0], 1e-14);
        assert!(matches!(err, Err(Error::QuadratureNonConvergent { .. })));
    }
}
