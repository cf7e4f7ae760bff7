//! Direct product-integration solver for the log-substituted system.
//!
//! The solution is split as y = S + w, where S collects the singular power
//! terms generated by the weighted initial value (treated analytically) and
//! w solves a Volterra equation with a bounded right-hand side, using
//! product-trapezoid weights. The mesh is graded toward the start of every
//! lag window, strongly in the history window where the history forcing
//! may be singular. Delayed values and values off the mesh come from one
//! more product-integration step.

use nalgebra::DVector;
use statrs::function::beta::beta_reg;

use super::LogSubstitutedProblem;
use crate::error::{Error, Result};
use crate::linear::Trajectory;
use crate::special::{gamma, rgamma};

/// c (xi - start)_+^e / Γ(e + 1), with xi the offset from u0.
#[derive(Debug, Clone)]
struct PowerTerm {
    coef: DVector<f64>,
    start: f64,
    exponent: f64,
}

impl PowerTerm {
    fn eval(&self, xi: f64) -> DVector<f64> {
        if xi <= self.start {
            return DVector::zeros(self.coef.len());
        }
        &self.coef * ((xi - self.start).powf(self.exponent) * rgamma(self.exponent + 1.0))
    }
}

fn sum_terms(terms: &[PowerTerm], xi: f64, n: usize) -> DVector<f64> {
    terms.iter().fold(DVector::zeros(n), |acc, t| acc + t.eval(xi))
}

/// Output of [`direct_solve`].
#[derive(Debug, Clone)]
pub struct DirectSolution {
    lsp: LogSubstitutedProblem,
    /// Mesh offsets from u0.
    mesh: Vec<f64>,
    regular: Vec<DVector<f64>>,
    psi: Vec<DVector<f64>>,
    /// Forcing at each node as the left and as the right end of a cell; the
    /// two differ only where the history forcing hands over to f.
    g_lo: Vec<DVector<f64>>,
    g_hi: Vec<DVector<f64>>,
    /// History forcing at the midpoint of the first cell.
    g_first: DVector<f64>,
    singular: Vec<PowerTerm>,
    regular_terms: Vec<PowerTerm>,
    gamma_alpha: f64,
    gamma_reflect: f64,
}

impl DirectSolution {
    fn dim(&self) -> usize {
        self.lsp.dim()
    }

    fn in_history(&self, right: f64) -> bool {
        right <= self.lsp.lag * (1.0 + 1e-12)
    }

    /// Regularized incomplete beta difference I_{r/x}(p, q) - I_{l/x}(p, q),
    /// taken from whichever tail avoids cancellation.
    fn beta_share(p: f64, q: f64, l: f64, r: f64, x: f64) -> f64 {
        if r <= 0.5 * x {
            beta_reg(p, q, r / x) - beta_reg(p, q, l / x)
        } else {
            beta_reg(q, p, (x - l) / x) - beta_reg(q, p, (x - r) / x)
        }
    }

    /// Weight of the midpoint forcing on the first history cell [0, r]:
    /// the kernel times v^-α is integrated exactly against G v^α.
    fn first_weight(&self, r: f64, x: f64) -> f64 {
        let alpha = self.lsp.order;
        let share = Self::beta_share(1.0 - alpha, alpha, 0.0, r, x);
        (0.5 * r).powf(alpha) * self.gamma_reflect * share
    }

    /// Weights of the forcing at the two ends of the cell [l, r] at offset x.
    /// In the history window the product G v^α is interpolated linearly and
    /// integrated exactly against the kernel times v^-α, which absorbs a
    /// v^-α singularity of G; afterwards G itself is interpolated.
    fn end_weights(&self, l: f64, r: f64, x: f64, (i0, i1, d): (f64, f64, f64)) -> (f64, f64) {
        if !self.in_history(r) {
            return ((i0 - i1 / d) / self.gamma_alpha, i1 / d / self.gamma_alpha);
        }
        let alpha = self.lsp.order;
        let m0 = self.gamma_reflect * Self::beta_share(1.0 - alpha, alpha, l, r, x);
        let m1 = x * (1.0 - alpha) * self.gamma_reflect * Self::beta_share(2.0 - alpha, alpha, l, r, x);
        let c = (m1 - l * m0) / d;
        ((m0 - c) * l.powf(alpha), c * r.powf(alpha))
    }

    /// The regular part at offset x from the first k nodes, with
    /// mesh[k - 1] < x. Returns w(x), the forcing at x and the delayed term
    /// A1 w(x - τ).
    fn step(&self, x: f64, k: usize) -> Result<(DVector<f64>, DVector<f64>, DVector<f64>)> {
        let lsp = &self.lsp;
        let (alpha, tau, n) = (lsp.order, lsp.lag, self.dim());
        let ga = self.gamma_alpha;
        let mesh = &self.mesh;
        let mut base = sum_terms(&self.regular_terms, x, n);
        for j in 0..k - 1 {
            let (l, r) = (mesh[j], mesh[j + 1]);
            let moments = product_weights(x - l, r - l, alpha);
            let (i0, i1, d) = moments;
            base += (&self.psi[j] * (i0 - i1 / d) + &self.psi[j + 1] * (i1 / d)) / ga;
            if j == 0 {
                base += &self.g_first * self.first_weight(r, x);
            } else {
                let (wl, wr) = self.end_weights(l, r, x, moments);
                base += &self.g_lo[j] * wl + &self.g_hi[j + 1] * wr;
            }
        }
        let left = mesh[k - 1];
        let moments = product_weights(x - left, x - left, alpha);
        let (i0, i1, d) = moments;
        let delayed = if x > tau { &lsp.a1 * self.regular_at(x - tau, k)? } else { DVector::zeros(n) };
        let mut fixed = &base + &self.psi[k - 1] * ((i0 - i1 / d) / ga) + &delayed * (i1 / d / ga);
        let history = self.in_history(x);
        let g_weight = if k == 1 {
            fixed += (lsp.history_forcing)(0.5 * x) * self.first_weight(x, x);
            0.0
        } else {
            let (wl, wr) = self.end_weights(left, x, x, moments);
            fixed += &self.g_lo[k - 1] * wl;
            wr
        };
        let s_x = sum_terms(&self.singular, x, n);

        let mut wk = self.regular[k - 1].clone();
        let mut gk = if history { (lsp.history_forcing)(x) } else { DVector::zeros(n) };
        for _ in 0..200 {
            if !history {
                gk = (lsp.forcing)(lsp.u0 + x, &(&s_x + &wk));
            }
            let next = &fixed + &lsp.a0 * &wk * (i1 / d / ga) + &gk * g_weight;
            let change = (&next - &wk).norm();
            wk = next;
            if change <= 1e-14 * (1.0 + wk.norm()) {
                if wk.iter().any(|v| !v.is_finite()) {
                    break;
                }
                return Ok((wk, gk, delayed));
            }
        }
        Err(Error::StepSize(format!("implicit step at u = {} did not settle", lsp.u0 + x)))
    }

    /// w at an earlier offset y < mesh[k - 1]: a stored node value when y is
    /// on the mesh, one more step otherwise.
    fn regular_at(&self, y: f64, k: usize) -> Result<DVector<f64>> {
        let j = self.mesh[..k].partition_point(|&m| m < y);
        let near = |i: usize| i < k && (self.mesh[i] - y).abs() <= 1e-12 * (1.0 + y);
        if near(j) {
            Ok(self.regular[j].clone())
        } else if j > 0 && near(j - 1) {
            Ok(self.regular[j - 1].clone())
        } else {
            Ok(self.step(y, j)?.0)
        }
    }

    /// y at the offset xi = u - u0.
    pub fn eval_offset(&self, xi: f64) -> Result<DVector<f64>> {
        let last = *self.mesh.last().unwrap();
        if !(xi > 0.0) || xi > last + 1e-12 {
            return Err(Error::Domain(format!("offset {xi} lies outside (0, {last}]")));
        }
        let xi = xi.min(last);
        let k = self.mesh.partition_point(|&m| m < xi);
        let w = if self.mesh[k] == xi { self.regular[k].clone() } else { self.step(xi, k)?.0 };
        Ok(w + sum_terms(&self.singular, xi, self.dim()))
    }

    /// y at u = ln t.
    pub fn eval_log(&self, u: f64) -> Result<DVector<f64>> {
        self.eval_offset(u - self.lsp.u0)
    }

    pub fn eval(&self, t: f64) -> Result<DVector<f64>> {
        self.eval_log(t.ln())
    }

    /// Samples on a caller-supplied grid in t.
    pub fn sample(&self, grid: &[f64]) -> Result<Trajectory> {
        let values = grid.iter().map(|&t| self.eval(t)).collect::<Result<Vec<_>>>()?;
        Ok(Trajectory { grid: grid.to_vec(), values, gamma_weight: 0.0 })
    }

    /// Values at the mesh nodes above 1/h, mapped back to t.
    pub fn trajectory(&self) -> Trajectory {
        let n = self.dim();
        let mut grid = Vec::new();
        let mut values = Vec::new();
        for (xi, w) in self.mesh.iter().zip(&self.regular).skip(1) {
            grid.push((self.lsp.u0 + xi).exp());
            values.push(w + sum_terms(&self.singular, *xi, n));
        }
        Trajectory { grid, values, gamma_weight: 0.0 }
    }
}

fn peel_singular(lsp: &LogSubstitutedProblem) -> (Vec<PowerTerm>, Vec<PowerTerm>) {
    let alpha = lsp.order;
    let mut singular = Vec::new();
    let mut regular = Vec::new();
    let span = lsp.u_end - lsp.u0;
    let mut queue = vec![PowerTerm { coef: lsp.a.clone(), start: 0.0, exponent: alpha - 1.0 }];
    while let Some(term) = queue.pop() {
        if term.coef.norm() == 0.0 || term.start >= span {
            continue;
        }
        if term.exponent > 0.0 {
            regular.push(term);
            continue;
        }
        queue.push(PowerTerm { coef: &lsp.a0 * &term.coef, start: term.start, exponent: term.exponent + alpha });
        queue.push(PowerTerm {
            coef: &lsp.a1 * &term.coef,
            start: term.start + lsp.lag,
            exponent: term.exponent + alpha,
        });
        singular.push(term);
    }
    (singular, regular)
}

/// Solves the log-substituted system with `steps_per_lag` steps per lag window.
pub fn direct_solve(lsp: &LogSubstitutedProblem, steps_per_lag: usize) -> Result<DirectSolution> {
    if steps_per_lag < 8 {
        return Err(Error::StepSize(format!("steps_per_lag must be at least 8, got {steps_per_lag}")));
    }
    let alpha = lsp.order;
    let tau = lsp.lag;
    let nw = steps_per_lag;
    let windows = ((lsp.u_end - lsp.u0) / tau).round().max(1.0) as usize;

    // strong enough grading for history forcing behaving like (u - u0)^(-alpha)
    let history_grading = (2.0 / (1.0 - alpha)).clamp(2.0, 8.0);
    let mut mesh = Vec::with_capacity(windows * nw + 1);
    mesh.push(0.0);
    for m in 0..windows {
        let left = m as f64 * tau;
        let grading = if m == 0 { history_grading } else { 2.0 };
        for i in 1..=nw {
            let r = i as f64 / nw as f64;
            mesh.push(if i == nw { left + tau } else { left + tau * r.powf(grading) });
        }
    }

    let (singular, regular_terms) = peel_singular(lsp);
    let n = lsp.dim();
    let w0 = sum_terms(&regular_terms, 0.0, n);
    let mut sol = DirectSolution {
        lsp: lsp.clone(),
        mesh: vec![0.0],
        psi: vec![&lsp.a0 * &w0],
        regular: vec![w0],
        g_lo: vec![DVector::zeros(n)],
        g_hi: vec![DVector::zeros(n)],
        g_first: (lsp.history_forcing)(0.5 * mesh[1]),
        singular,
        regular_terms,
        gamma_alpha: gamma(alpha)?,
        gamma_reflect: gamma(1.0 - alpha)?,
    };
    for (k, &x) in mesh.iter().enumerate().skip(1) {
        sol.mesh.push(x);
        let (wk, gk, delayed) = sol.step(x, k)?;
        let handover = (x - tau).abs() <= 1e-12 * tau;
        let g_lo =
            if handover { (lsp.forcing)(lsp.u0 + x, &(sum_terms(&sol.singular, x, n) + &wk)) } else { gk.clone() };
        sol.psi.push(&lsp.a0 * &wk + delayed);
        sol.g_lo.push(g_lo);
        sol.g_hi.push(gk);
        sol.regular.push(wk);
    }
    Ok(sol)
}

/// Exact moments of (u - v)^{α-1} over an interval of length d whose far end
/// lies at distance a from u: I0 = ∫ k, I1 = ∫ k (v - v_left), and d.
/// Written in terms of d/a so that short intervals far from u keep their
/// relative accuracy.
fn product_weights(a: f64, d: f64, alpha: f64) -> (f64, f64, f64) {
    let delta = (d / a).min(1.0);
    let log_q = (-delta).ln_1p();
    let one_minus = |p: f64| -(p * log_q).exp_m1();
    let pa = a.powf(alpha);
    let i0 = pa * one_minus(alpha) / alpha;
    let j = one_minus(alpha) / alpha - one_minus(alpha + 1.0) / (alpha + 1.0);
    (i0, pa * a * j, d)
}
