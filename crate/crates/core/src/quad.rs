//! Thin adaptive layer over tanh-sinh quadrature.
//!
//! Finite intervals are handed to the double-exponential rule directly; the
//! half line is covered by geometrically growing panels until the panel
//! contributions have become negligible.

use crate::error::{Error, Result};

const MAX_PANELS: usize = 400;

/// ∫ₐᵇ f with absolute error target `abs_tol`.
pub(crate) fn integrate<F>(f: F, a: f64, b: f64, abs_tol: f64) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    if a == b {
        return Ok(0.0);
    }
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::Numeric {
            context: "quadrature",
            diagnostics: format!("non-finite interval [{a}, {b}]"),
        });
    }
    let out = quadrature::double_exponential::integrate(&f, a, b, abs_tol);
    if !out.integral.is_finite() {
        return Err(Error::Numeric {
            context: "quadrature",
            diagnostics: format!(
                "non-finite integral on [{a}, {b}] after {} evaluations",
                out.num_function_evaluations
            ),
        });
    }
    // The rule's error estimate is conservative; allow generous slack before
    // declaring non-convergence.
    if out.error_estimate > 1e3 * abs_tol.max(1e-300)
        && out.error_estimate > 1e-6 * out.integral.abs()
    {
        return Err(Error::Numeric {
            context: "quadrature",
            diagnostics: format!(
                "no convergence on [{a}, {b}]: estimate {} ± {:e} after {} evaluations (target {:e})",
                out.integral, out.error_estimate, out.num_function_evaluations, abs_tol
            ),
        });
    }
    Ok(out.integral)
}

/// Integrate over a list of breakpoints, so kinks and singular points sit on
/// panel ends where the double-exponential rule handles them.
pub(crate) fn integrate_pieces<F>(f: F, points: &[f64], abs_tol: f64) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    let pieces = points.len().saturating_sub(1).max(1) as f64;
    points
        .windows(2)
        .map(|w| integrate(&f, w[0], w[1], abs_tol / pieces))
        .sum()
}

/// ∫ₐᵇ f where f may blow up like |z − a|^{1/q_left − 1} at a and like
/// |b − z|^{1/q_right − 1} at b. The substitutions z = a + yᵠ and z = b − yᵠ
/// turn such endpoint singularities into smooth integrands; q = 1 means no
/// singularity.
pub(crate) fn integrate_graded<F>(
    f: F,
    a: f64,
    b: f64,
    q_left: f64,
    q_right: f64,
    abs_tol: f64,
) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    graded(&f, a, b, q_left, q_right, abs_tol)
}

fn graded(
    f: &dyn Fn(f64) -> f64,
    a: f64,
    b: f64,
    q_left: f64,
    q_right: f64,
    abs_tol: f64,
) -> Result<f64> {
    if q_left > 1.0 && q_right > 1.0 {
        let mid = 0.5 * (a + b);
        return Ok(graded(f, a, mid, q_left, 1.0, abs_tol / 2.0)?
            + graded(f, mid, b, 1.0, q_right, abs_tol / 2.0)?);
    }
    if q_left > 1.0 {
        let q = q_left;
        let top = (b - a).powf(1.0 / q);
        return integrate(
            |y: f64| finite_or_zero(f(a + y.powf(q)) * q * y.powf(q - 1.0)),
            0.0,
            top,
            abs_tol,
        );
    }
    if q_right > 1.0 {
        let q = q_right;
        let top = (b - a).powf(1.0 / q);
        return integrate(
            |y: f64| finite_or_zero(f(b - y.powf(q)) * q * y.powf(q - 1.0)),
            0.0,
            top,
            abs_tol,
        );
    }
    integrate(f, a, b, abs_tol)
}

/// Nodes that round onto the singular endpoint itself carry no mass.
#[inline]
fn finite_or_zero(v: f64) -> f64 {
    if v.is_finite() {
        v
    } else {
        0.0
    }
}

/// ∫ₐ^∞ f for an eventually decaying integrand.
///
/// Panels start at width one and double. Integration stops once two
/// consecutive panels each contribute less than `max(abs_tol, rel_tol·|total|)/16`
/// and the contributions are shrinking.
pub(crate) fn integrate_to_infinity<F>(f: F, a: f64, abs_tol: f64, rel_tol: f64) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    let mut total: f64 = 0.0;
    let mut lo = a;
    let mut width = 1.0;
    let mut prev = f64::INFINITY;
    let mut quiet = 0;
    for _ in 0..MAX_PANELS {
        let hi = lo + width;
        let target = (abs_tol.max(rel_tol * total.abs()) / 64.0).max(1e-300);
        let piece = integrate(&f, lo, hi, target)?;
        total += piece;
        let small = abs_tol.max(rel_tol * total.abs()) / 16.0;
        if piece.abs() < small && piece.abs() <= prev.abs() {
            quiet += 1;
            if quiet >= 2 {
                return Ok(total);
            }
        } else {
            quiet = 0;
        }
        prev = piece;
        lo = hi;
        width *= 2.0;
    }
    Err(Error::Numeric {
        context: "half-line quadrature",
        diagnostics: format!("tail still contributing {prev:e} at t = {lo:e} (total {total})"),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weibull_survival_integrates_to_gamma() {
        // ∫₀^∞ e^{−√t} dt = Γ(3) = 2
        let v = integrate_to_infinity(|t| (-t.sqrt()).exp(), 0.0, 1e-10, 0.0).unwrap();
        assert!((v - 2.0).abs() < 1e-9, "{v}");
    }

    #[test]
    fn endpoint_singularity() {
        // ∫₀¹ t^{-1/2} dt = 2
        let v = integrate(|t| 1.0 / t.sqrt(), 0.0, 1.0, 1e-10).unwrap();
        assert!((v - 2.0).abs() < 1e-6, "{v}");
    }

    #[test]
    fn graded_endpoint_singularity() {
        // ∫₀¹ t^{-1/2} dt = 2 and ∫₋₁⁰ (−t)^{-3/4} dt = 4
        let v = integrate_graded(|t| 1.0 / t.sqrt(), 0.0, 1.0, 2.0, 1.0, 1e-12).unwrap();
        assert!((v - 2.0).abs() < 1e-10, "{v}");
        let w = integrate_graded(|t: f64| (-t).powf(-0.75), -1.0, 0.0, 1.0, 4.0, 1e-12).unwrap();
        assert!((w - 4.0).abs() < 1e-10, "{w}");
    }

    #[test]
    fn pieces_sum() {
        let v = integrate_pieces(|t| t.abs(), &[-1.0, 0.0, 2.0], 1e-12).unwrap();
        assert!((v - 2.5).abs() < 1e-12);
    }
}
