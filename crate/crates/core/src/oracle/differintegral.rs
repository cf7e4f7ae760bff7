//! Hadamard fractional integrals and derivatives by tanh-sinh quadrature.

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::quadrature::QuadraturePolicy;
use crate::special::rgamma;

const HALF_PI: f64 = std::f64::consts::FRAC_PI_2;

/// ∫_lo^hi g(v, v - lo, hi - v) dv by the tanh-sinh rule with the given step.
/// The callback receives both endpoint distances computed without
/// cancellation, so kernels singular at either end stay accurate.
/// Non-finite values are skipped.
pub fn tanh_sinh<F>(lo: f64, hi: f64, step: f64, mut g: F) -> DVector<f64>
where
    F: FnMut(f64, f64, f64) -> DVector<f64>,
{
    let half = 0.5 * (hi - lo);
    let mid = lo + half;
    let mut acc = g(mid, half, half) * (HALF_PI * step * half);
    let mut k = 1;
    loop {
        let x = k as f64 * step;
        let s = HALF_PI * x.sinh();
        let w = HALF_PI * x.cosh() / s.cosh().powi(2);
        let near = half * 2.0 / (1.0 + (2.0 * s).exp());
        if near < 1e-300 || w * half < 1e-300 || x > 7.0 {
            break;
        }
        let far = 2.0 * half - near;
        let wk = w * step * half;
        // nodes that round onto a singular endpoint are dropped
        for value in [g(lo + near, near, far), g(hi - near, far, near)] {
            if value.iter().all(|v| v.is_finite()) {
                acc += value * wk;
            }
        }
        k += 1;
    }
    acc
}

fn step_for(quad: &QuadraturePolicy) -> f64 {
    7.0 / (quad.nodes_per_panel * quad.panel_count).max(8) as f64
}

/// Hadamard integral of order `gamma > 0` in log coordinates relative to the
/// base: `y` is a function of `xi = ln(t/base)` and the result is the value at
/// `x = ln(t/base)`. The range is split at the offsets in `breaks`.
pub fn fractional_integral_log<F>(
    y: &F,
    gamma: f64,
    x: f64,
    quad: &QuadraturePolicy,
    breaks: &[f64],
) -> Result<DVector<f64>>
where
    F: Fn(f64) -> DVector<f64>,
{
    if !(gamma > 0.0) {
        return Err(Error::Domain(format!("integral order must be positive, got {gamma}")));
    }
    if !(x > 0.0) {
        return Err(Error::Domain(format!("evaluation offset must be positive, got {x}")));
    }
    let mut cuts: Vec<f64> = breaks.iter().copied().filter(|b| *b > 0.0 && *b < x).collect();
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let mut edges = vec![0.0];
    edges.extend(cuts);
    edges.push(x);
    let step = step_for(quad);
    let dim = y(0.5 * x).len();
    let mut total = DVector::zeros(dim);
    let last = edges.len() - 2;
    for (i, w) in edges.windows(2).enumerate() {
        total += tanh_sinh(w[0], w[1], step, |xi, _, to_hi| {
            // distance to x is exact on the last piece
            let dist = if i == last { to_hi } else { x - xi };
            y(xi) * dist.powf(gamma - 1.0)
        });
    }
    Ok(total * rgamma(gamma))
}

/// Hadamard differintegral in log coordinates relative to the base (see
/// [`fractional_integral_log`]). Negative `order` is an integral of order
/// |order|; positive `order` in (0, 1) is the derivative d/dx of the
/// integral of order 1 - order, by a central difference.
pub fn differintegral_log<F>(y: &F, order: f64, x: f64, quad: &QuadraturePolicy, breaks: &[f64]) -> Result<DVector<f64>>
where
    F: Fn(f64) -> DVector<f64>,
{
    if !(order > -1.0 && order < 1.0) || order == 0.0 {
        return Err(Error::Domain(format!("order must lie in (-1, 1) without 0, got {order}")));
    }
    if order < 0.0 {
        return fractional_integral_log(y, -order, x, quad, breaks);
    }
    if !(x > 0.0) {
        return Err(Error::Domain(format!("evaluation offset must be positive, got {x}")));
    }
    let delta = f64::EPSILON.cbrt() * x;
    let up = fractional_integral_log(y, 1.0 - order, x + delta, quad, breaks)?;
    let down = fractional_integral_log(y, 1.0 - order, x - delta, quad, breaks)?;
    Ok((up - down) / (2.0 * delta))
}

/// Hadamard differintegral of a function of t, based at `base`, evaluated
/// at `t`. Functions singular at the base lose accuracy here because t
/// carries only relative precision; prefer [`differintegral_log`] for them.
pub fn hadamard_differintegral<F>(y: &F, order: f64, base: f64, t: f64, quad: &QuadraturePolicy) -> Result<DVector<f64>>
where
    F: Fn(f64) -> DVector<f64>,
{
    if !(base > 0.0 && t > base) {
        return Err(Error::Domain(format!("need 0 < base < t, got base={base}, t={t}")));
    }
    let rel = |xi: f64| y(base * xi.exp());
    differintegral_log(&rel, order, (t / base).ln(), quad, &[])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::special::gamma;

    fn monomial(b: f64) -> impl Fn(f64) -> DVector<f64> {
        move |xi: f64| DVector::from_element(1, xi.powf(b - 1.0))
    }

    #[test]
    fn power_rule_for_derivatives() {
        let q = QuadraturePolicy::default();
        let (a, b, g) = (1.3, 1.8, 0.4);
        let y = |t: f64| DVector::from_element(1, (t / a).ln().powf(b - 1.0));
        for &t in &[1.6, 2.5, 4.0] {
            let d = hadamard_differintegral(&y, g, a, t, &q).unwrap()[0];
            let want = gamma(b).unwrap() / gamma(b - g).unwrap() * (t / a).ln().powf(b - g - 1.0);
            assert!((d - want).abs() < 1e-8 * want.abs().max(1.0), "t={t}: {d} vs {want}");
        }
        for &(b, g) in &[(0.6, 0.3), (0.35, 0.8)] {
            let d = differintegral_log(&monomial(b), g, 0.9, &q, &[]).unwrap()[0];
            let want = gamma(b).unwrap() / gamma(b - g).unwrap() * 0.9f64.powf(b - g - 1.0);
            assert!((d - want).abs() < 1e-8 * want.abs().max(1.0), "b={b}: {d} vs {want}");
        }
        let d = differintegral_log(&monomial(0.6), 0.6, 0.7, &q, &[]).unwrap()[0];
        assert!(d.abs() < 1e-8, "{d}");
    }

    #[test]
    fn power_rule_for_integrals() {
        let q = QuadraturePolicy::default();
        let (b, g) = (0.3, 0.7);
        let x = 3f64.ln();
        let v = differintegral_log(&monomial(b), -g, x, &q, &[]).unwrap()[0];
        let want = gamma(b).unwrap() / gamma(b + g).unwrap() * x.powf(b + g - 1.0);
        assert!((v - want).abs() < 1e-10 * want, "{v} vs {want}");
    }

    #[test]
    fn semigroup_spot_check() {
        let q = QuadraturePolicy::default();
        let y = |xi: f64| DVector::from_element(1, (1.0 + xi).cos());
        let inner = |xi: f64| fractional_integral_log(&y, 0.3, xi, &q, &[]).unwrap();
        let lhs = fractional_integral_log(&inner, 0.4, 1.2, &q, &[]).unwrap()[0];
        let rhs = fractional_integral_log(&y, 0.7, 1.2, &q, &[]).unwrap()[0];
        assert!((lhs - rhs).abs() < 1e-9, "{lhs} vs {rhs}");
    }

    #[test]
    fn split_points_handle_interior_singularity() {
        let q = QuadraturePolicy::default();
        let y = |xi: f64| DVector::from_element(1, if xi > 0.5 { (xi - 0.5).powf(-0.5) } else { 0.0 });
        let v = fractional_integral_log(&y, 1.0, 1.0, &q, &[0.5]).unwrap()[0];
        // an interior singularity is resolved only to about sqrt(machine epsilon)
        assert!((v - 2.0 * 0.5f64.sqrt()).abs() < 1e-7, "{v}");
    }
}
