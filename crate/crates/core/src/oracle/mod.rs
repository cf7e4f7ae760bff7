//! Independent reference computations used by the tests and by `--verify`.
//!
//! Nothing here shares integration code with the production solvers: the
//! direct solver uses its own product-integration weights and the
//! differintegral uses tanh-sinh quadrature.

mod differintegral;
mod direct;

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

pub use differintegral::{differintegral_log, fractional_integral_log, hadamard_differintegral, tanh_sinh};
pub use direct::{direct_solve, DirectSolution};

use crate::error::Result;
use crate::linear::{HistoryMode, LinearDelayProblem};
use crate::nonlinear::SemilinearProblem;
use crate::quadrature::QuadraturePolicy;
use crate::special::rgamma;

/// A vector function of u = ln t.
pub type LogFn = Arc<dyn Fn(f64) -> DVector<f64> + Send + Sync>;
/// A right-hand side F(u, y) in log coordinates.
pub type LogRhs = Arc<dyn Fn(f64, &DVector<f64>) -> DVector<f64> + Send + Sync>;

/// The problem after the substitution u = ln t: a Riemann-Liouville delay
/// system on (u0, u_end] with lag τ = ln h and u0 = -τ.
#[derive(Clone)]
pub struct LogSubstitutedProblem {
    pub order: f64,
    pub lag: f64,
    pub a0: DMatrix<f64>,
    pub a1: DMatrix<f64>,
    pub u0: f64,
    pub u_end: f64,
    pub a: DVector<f64>,
    /// φ on (u0, 0].
    pub history: LogFn,
    /// D^α φ - A0 φ on (u0, 0], as a function of the offset u - u0.
    pub history_forcing: LogFn,
    /// Right-hand side on (0, u_end].
    pub forcing: LogRhs,
}

impl std::fmt::Debug for LogSubstitutedProblem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("LogSubstitutedProblem")
            .field("order", &self.order)
            .field("lag", &self.lag)
            .field("a0", &self.a0)
            .field("a1", &self.a1)
            .field("u0", &self.u0)
            .field("u_end", &self.u_end)
            .field("a", &self.a)
            .finish()
    }
}

impl LogSubstitutedProblem {
    pub fn dim(&self) -> usize {
        self.a.len()
    }

    /// Maps u back to t.
    pub fn to_t(u: f64) -> f64 {
        u.exp()
    }

    pub fn to_u(t: f64) -> f64 {
        t.ln()
    }
}

/// Problems that can be rewritten in log coordinates.
pub trait LogCoordinates {
    fn to_log_coordinates(&self) -> Result<LogSubstitutedProblem>;
}

pub fn to_log_coordinates<P: LogCoordinates>(problem: &P) -> Result<LogSubstitutedProblem> {
    problem.to_log_coordinates()
}

/// D^α φ - A0 φ as a function of the offset u - u0, using the oracle's own
/// differintegral when the history carries no analytic derivative.
pub(crate) fn history_forcing_of(problem: &LinearDelayProblem) -> LogFn {
    let alpha = problem.alpha();
    let u0 = -problem.lag();
    let a0 = problem.spec.a0.as_matrix().clone();
    let phi = problem.history.phi.clone();
    let n = problem.dim();
    match (&problem.history.frac_deriv, problem.history.mode) {
        (Some(d), _) => {
            let d = d.clone();
            // offsets below this are indistinguishable from the base in t;
            // there the generic (u - u0)^-α behaviour is continued
            let floor = 4.0 * f64::EPSILON * u0.abs().max(1.0);
            Arc::new(move |xi: f64| {
                let t = (u0 + xi.max(floor)).exp();
                let g = d(t) - &a0 * phi(t);
                if xi < floor {
                    g * (floor / xi).powf(alpha)
                } else {
                    g
                }
            })
        }
        (None, HistoryMode::Numeric) | (None, HistoryMode::Analytic) => {
            let quad = QuadraturePolicy { nodes_per_panel: 16, panel_count: 4, ..Default::default() };
            Arc::new(move |xi: f64| {
                let rel = |x: f64| phi((u0 + x).exp());
                match differintegral_log(&rel, alpha, xi, &quad, &[]) {
                    Ok(d) => d - &a0 * phi((u0 + xi).exp()),
                    Err(_) => DVector::from_element(n, f64::NAN),
                }
            })
        }
    }
}

impl LogCoordinates for LinearDelayProblem {
    fn to_log_coordinates(&self) -> Result<LogSubstitutedProblem> {
        self.validate()?;
        let n = self.dim();
        let phi = self.history.phi.clone();
        let forcing: LogRhs = match &self.forcing {
            Some(f) => {
                let f = f.clone();
                Arc::new(move |u: f64, _: &DVector<f64>| f(u.exp()))
            }
            None => Arc::new(move |_: f64, _: &DVector<f64>| DVector::zeros(n)),
        };
        Ok(LogSubstitutedProblem {
            order: self.alpha(),
            lag: self.lag(),
            a0: self.spec.a0.as_matrix().clone(),
            a1: self.spec.a1.as_matrix().clone(),
            u0: -self.lag(),
            u_end: self.log_horizon(),
            a: self.a.clone(),
            history: Arc::new(move |u: f64| phi(u.exp())),
            history_forcing: history_forcing_of(self),
            forcing,
        })
    }
}

impl LogCoordinates for SemilinearProblem {
    fn to_log_coordinates(&self) -> Result<LogSubstitutedProblem> {
        self.validate()?;
        let mut lsp = self.linear.to_log_coordinates()?;
        let rhs = self.rhs.clone();
        lsp.forcing = Arc::new(move |u: f64, y: &DVector<f64>| rhs(u.exp(), y));
        Ok(lsp)
    }
}

/// `y_k(tau)` summed over all words with m copies of A0 and k copies of A1,
/// `Σ_m S_{m,k} tau^((m+k)α+β-1) / Γ((m+k)α+β)`, with `S` built by the
/// recursion `S_{m,k} = A0 S_{m-1,k} + A1 S_{m,k-1}`. Valid for any pair of
/// matrices; `terms` bounds m.
pub fn word_series_piece(
    a0: &DMatrix<f64>,
    a1: &DMatrix<f64>,
    alpha: f64,
    beta: f64,
    k: usize,
    tau: f64,
    terms: usize,
) -> Result<DMatrix<f64>> {
    let n = a0.nrows();
    let mut prev_row: Vec<DMatrix<f64>> = Vec::new();
    let mut out = DMatrix::zeros(n, n);
    for m in 0..terms {
        let mut row: Vec<DMatrix<f64>> = Vec::with_capacity(k + 1);
        for j in 0..=k {
            let v = if m == 0 && j == 0 {
                DMatrix::identity(n, n)
            } else {
                let mut v = DMatrix::zeros(n, n);
                if m > 0 {
                    v += a0 * &prev_row[j];
                }
                if j > 0 {
                    v += a1 * &row[j - 1];
                }
                v
            };
            row.push(v);
        }
        let e = (m + k) as f64 * alpha + beta;
        out += &row[k] * (tau.powf(e - 1.0) * rgamma(e));
        prev_row = row;
    }
    Ok(out)
}
