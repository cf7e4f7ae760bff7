//! Delayed Mittag-Leffler matrix functions with logarithm.
//!
//! `Y(t, s)` depends on its arguments only through `ln(t/s)`. On the branch
//! `s h^k < t <= s h^(k+1)` it is the sum of the pieces `y_j(tau_j)` with
//! `tau_j = ln(t/s) - j ln h`, where each piece has the form
//! `y_j(tau) = tau^(j alpha + beta - 1) G_j(tau^alpha)` for an entire matrix
//! function `G_j`.
//!
//! For permutable `A0, A1` the pieces are summed from their closed-form double
//! series. Otherwise each `G_j` is tabulated on a Chebyshev grid, with values
//! obtained from the convolution recursion by graded Gauss-Jacobi quadrature
//! applied to the tabulated `G_(j-1)`.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::interp::ChebyshevTable;
use crate::matrix::{commutator_norm, commutes, SquareMatrix};
use crate::quadrature::{weighted_rule, QuadraturePolicy};
use crate::special::{gamma_step, ml_series, rgamma, SeriesPolicy};

/// Deepest recursion level supported by the tabulated path.
pub const MAX_DEPTH: usize = 16;

const TABLE_TOL: f64 = 1e-14;
const TABLE_MAX_NODES: usize = 256;

/// Parameters of `Y^{A0,A1}_{h,alpha,beta}`.
#[derive(Debug, Clone, PartialEq)]
pub struct DelayedMLSpec {
    pub alpha: f64,
    pub beta: f64,
    pub h: f64,
    pub a0: SquareMatrix,
    pub a1: SquareMatrix,
    pub series: SeriesPolicy,
    pub quad: QuadraturePolicy,
}

impl DelayedMLSpec {
    pub fn new(alpha: f64, beta: f64, h: f64, a0: SquareMatrix, a1: SquareMatrix) -> Result<Self> {
        let spec = Self { alpha, beta, h, a0, a1, series: SeriesPolicy::default(), quad: QuadraturePolicy::default() };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(Error::Domain(format!("alpha must lie in (0, 1], got {}", self.alpha)));
        }
        if !(self.beta > 0.0) || !self.beta.is_finite() {
            return Err(Error::Domain(format!("beta must be positive, got {}", self.beta)));
        }
        if !(self.h > 1.0) || !self.h.is_finite() {
            return Err(Error::Domain(format!("delay base h must exceed 1, got {}", self.h)));
        }
        if self.a0.dim() != self.a1.dim() {
            return Err(Error::Dimension(format!("A0 is {0}x{0} but A1 is {1}x{1}", self.a0.dim(), self.a1.dim())));
        }
        self.series.validate()?;
        self.quad.validate()
    }

    pub fn dim(&self) -> usize {
        self.a0.dim()
    }

    pub fn lag(&self) -> f64 {
        self.h.ln()
    }

    pub fn is_commuting(&self) -> bool {
        commutes(&self.a0, &self.a1)
    }
}

/// Branch index `k` with `s h^k < t <= s h^(k+1)`; `-1` when `t <= s`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct PiecewiseIndex(pub i64);

impl PiecewiseIndex {
    pub fn get(self) -> i64 {
        self.0
    }

    /// Number of pieces summed on this branch.
    pub fn pieces(self) -> usize {
        (self.0 + 1).max(0) as usize
    }
}

/// Branch index from the log-ratio `ln(t/s)` and the lag `ln h`.
pub fn delay_index_log(log_ratio: f64, lag: f64) -> PiecewiseIndex {
    if !(log_ratio > 0.0) {
        return PiecewiseIndex(-1);
    }
    let mut x = log_ratio / lag;
    let r = x.round();
    if (x - r).abs() < 1e-12 * x.abs().max(1.0) {
        x = r;
    }
    if x <= 0.0 {
        return PiecewiseIndex(-1);
    }
    PiecewiseIndex(x.ceil() as i64 - 1)
}

/// Branch index with `s h^k < t <= s h^(k+1)`. Points within 1e-12 (relative,
/// in `ln(t/s)/ln h`) of a breakpoint are treated as lying on it.
pub fn delay_index(t: f64, s: f64, h: f64) -> PiecewiseIndex {
    delay_index_log((t / s).ln(), h.ln())
}

/// The pure-delay function `E^{A1}_{h,alpha,beta}` at `ln t`.
pub fn pure_delay_ml(spec: &DelayedMLSpec, lnt: f64) -> Result<SquareMatrix> {
    if !lnt.is_finite() {
        return Err(Error::Domain("ln t must be finite".into()));
    }
    let n = spec.dim();
    let lag = spec.lag();
    let k = delay_index_log(lnt + lag, lag);
    let mut sum = DMatrix::zeros(n, n);
    let mut power = DMatrix::identity(n, n);
    for j in 0..k.pieces() {
        let e = j as f64 * spec.alpha + spec.beta;
        let base = lnt - (j as f64 - 1.0) * lag;
        if base <= 0.0 {
            if e - 1.0 < 0.0 {
                return Err(Error::SingularPoint(format!("term {j} is unbounded at ln t = {lnt}")));
            }
            break;
        }
        sum += &power * (base.powf(e - 1.0) * rgamma(e));
        power = &power * spec.a1.as_matrix();
    }
    SquareMatrix::new(sum)
}

fn support_check(spec: &DelayedMLSpec, k: usize, t: f64, s: f64) -> Result<f64> {
    let bound = s * spec.h.powi(k as i32);
    let tau = (t / s).ln() - k as f64 * spec.lag();
    if !(t > bound) || !(tau > 0.0) {
        return Err(Error::Support { t, bound });
    }
    Ok(tau)
}

/// `y_k(t, s h^k)` through the recursion, never through the closed form.
pub fn y_k_general(spec: &DelayedMLSpec, k: usize, t: f64, s: f64) -> Result<SquareMatrix> {
    spec.validate()?;
    let tau = support_check(spec, k, t, s)?;
    let eval = DelayedMl::with_path(spec.clone(), (t / s).ln(), Path::Tabulated)?;
    SquareMatrix::new(eval.piece(k, tau)?)
}

/// `y_k(t, s h^k)` from the closed form valid for permutable `A0, A1`.
pub fn y_k_commuting(spec: &DelayedMLSpec, k: usize, t: f64, s: f64) -> Result<SquareMatrix> {
    spec.validate()?;
    if !spec.is_commuting() {
        return Err(Error::NotCommuting(commutator_norm(&spec.a0, &spec.a1)));
    }
    let tau = support_check(spec, k, t, s)?;
    SquareMatrix::new(commuting_piece(spec, k, tau)?)
}

fn commuting_piece(spec: &DelayedMLSpec, k: usize, tau: f64) -> Result<DMatrix<f64>> {
    let g = commuting_reduced(spec, k, tau.powf(spec.alpha))?;
    Ok(g * tau.powf(k as f64 * spec.alpha + spec.beta - 1.0))
}

/// `A1^k Σ_n C(n+k,k) A0^n z^n / Γ((n+k)α+β)`.
fn commuting_reduced(spec: &DelayedMLSpec, k: usize, z: f64) -> Result<DMatrix<f64>> {
    let n = spec.dim();
    let a0 = spec.a0.as_matrix();
    let shift = k as f64 * spec.alpha + spec.beta;
    let a0_norm = a0.norm();
    let mut term = DMatrix::identity(n, n) * rgamma(shift);
    let mut sum = term.clone();
    let mut converged = false;
    for m in 1..spec.series.max_terms {
        let ratio = z * gamma_step(spec.alpha, shift, m) * (m + k) as f64 / m as f64;
        term = (&term * a0) * ratio;
        sum += &term;
        let tn = term.norm();
        if tn == 0.0 || (tn < spec.series.rel_tol * sum.norm() && a0_norm * ratio.abs() < 1.0) {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::NonConvergence { max_terms: spec.series.max_terms });
    }
    let a1k = spec.a1.as_matrix().pow(k as u32);
    Ok(a1k * sum)
}

/// Nodes `((1-x)^α, x^α, weight)` for ∫_0^1 x^((k-1)α+β-1) (1-x)^(α-1) g(x) dx
/// with g smooth in `x^α` and `(1-x)^α`. Each half is integrated in the
/// variable that makes its endpoint behaviour polynomial, with a quarter of
/// the panels of `quad`.
fn recursion_nodes(k: usize, alpha: f64, beta: f64, quad: &QuadraturePolicy) -> Result<Vec<(f64, f64, f64)>> {
    let lower = (k as f64 - 1.0) * alpha + beta - 1.0;
    let quad = &QuadraturePolicy { panel_count: quad.panel_count.div_ceil(4), ..*quad };
    let end = 0.5f64.powf(alpha);
    let inv = 1.0 / alpha;
    let near_zero = weighted_rule(0.0, end, &quad.with_exponents(k as f64 - 2.0 + beta / alpha, 0.0))?;
    let near_one = weighted_rule(0.0, end, &quad.with_exponents(0.0, 0.0))?;
    let mut nodes = Vec::with_capacity(near_zero.len() + near_one.len());
    for (&w, &wt) in near_zero.nodes.iter().zip(&near_zero.weights) {
        let rest = 1.0 - w.powf(inv);
        nodes.push((rest.powf(alpha), w, wt * inv * rest.powf(alpha - 1.0)));
    }
    for (&v, &wt) in near_one.nodes.iter().zip(&near_one.weights) {
        let x = 1.0 - v.powf(inv);
        nodes.push((v, x.powf(alpha), wt * inv * x.powf(lower)));
    }
    Ok(nodes)
}

/// How the pieces `y_j` are evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Path {
    Commuting,
    Tabulated,
}

/// Evaluator for `Y(t, s)` with `ln(t/s)` up to a fixed maximum. Building it
/// tabulates every piece needed on that range once; evaluations are then
/// cheap and side-effect free.
#[derive(Debug, Clone)]
pub struct DelayedMl {
    spec: DelayedMLSpec,
    tau_max: f64,
    path: Path,
    tables: Vec<ChebyshevTable>,
}

impl DelayedMl {
    /// Chooses the closed form when `A0, A1` commute.
    pub fn new(spec: DelayedMLSpec, tau_max: f64) -> Result<Self> {
        let path = if spec.is_commuting() { Path::Commuting } else { Path::Tabulated };
        Self::with_path(spec, tau_max, path)
    }

    pub fn with_path(spec: DelayedMLSpec, tau_max: f64, path: Path) -> Result<Self> {
        spec.validate()?;
        if !tau_max.is_finite() {
            return Err(Error::Domain("evaluation range must be finite".into()));
        }
        let tau_max = tau_max.max(0.0);
        let depth = delay_index_log(tau_max, spec.lag()).pieces().saturating_sub(1);
        if path == Path::Commuting && !spec.is_commuting() {
            return Err(Error::NotCommuting(commutator_norm(&spec.a0, &spec.a1)));
        }
        let mut eval = Self { spec, tau_max, path, tables: Vec::new() };
        if path == Path::Tabulated {
            if depth > MAX_DEPTH {
                return Err(Error::RecursionDepth { depth, max: MAX_DEPTH });
            }
            for k in 1..=depth {
                let table = eval.build_table(k)?;
                eval.tables.push(table);
            }
        }
        Ok(eval)
    }

    pub fn spec(&self) -> &DelayedMLSpec {
        &self.spec
    }

    pub fn path(&self) -> Path {
        self.path
    }

    pub fn tau_max(&self) -> f64 {
        self.tau_max
    }

    fn build_table(&self, k: usize) -> Result<ChebyshevTable> {
        let spec = &self.spec;
        let alpha = spec.alpha;
        let tau_k = (self.tau_max - k as f64 * spec.lag()).max(0.0);
        let a0 = spec.a0.as_matrix();
        let a1 = spec.a1.as_matrix();
        let n = spec.dim();
        let prepared = recursion_nodes(k, alpha, spec.beta, &spec.quad)?;
        ChebyshevTable::adaptive(tau_k.powf(alpha), TABLE_TOL, TABLE_MAX_NODES, |z| {
            let mut acc = DMatrix::zeros(n, n);
            for &(left, right, w) in &prepared {
                let kernel = ml_series(alpha, alpha, a0, z * left, &spec.series)?.value;
                let prev = self.reduced(k - 1, z * right)?;
                acc.gemm(w, &(kernel * a1), &prev, 1.0);
            }
            Ok(acc)
        })
    }

    /// `G_k(z)` with `y_k(tau) = tau^(k alpha + beta - 1) G_k(tau^alpha)`.
    pub fn reduced(&self, k: usize, z: f64) -> Result<DMatrix<f64>> {
        let spec = &self.spec;
        match (self.path, k) {
            (_, 0) => Ok(ml_series(spec.alpha, spec.beta, spec.a0.as_matrix(), z, &spec.series)?.value),
            (Path::Commuting, _) => commuting_reduced(spec, k, z),
            (Path::Tabulated, _) => match self.tables.get(k - 1) {
                Some(t) => Ok(t.eval(z)),
                None => Err(Error::Domain(format!("piece {k} was not tabulated for ln(t/s) <= {}", self.tau_max))),
            },
        }
    }

    /// `y_k(tau)` for `tau > 0`.
    pub fn piece(&self, k: usize, tau: f64) -> Result<DMatrix<f64>> {
        let e = k as f64 * self.spec.alpha + self.spec.beta - 1.0;
        if !(tau > 0.0) {
            if tau == 0.0 && e >= 0.0 {
                let g = self.reduced(k, 0.0)?;
                return Ok(if e == 0.0 { g } else { g * 0.0 });
            }
            return Err(Error::SingularPoint(format!("piece {k} at tau = {tau}")));
        }
        Ok(self.reduced(k, tau.powf(self.spec.alpha))? * tau.powf(e))
    }

    /// `Y` as a function of `ln(t/s)`.
    pub fn eval_log(&self, log_ratio: f64) -> Result<DMatrix<f64>> {
        let n = self.spec.dim();
        if log_ratio < 0.0 {
            return Ok(DMatrix::zeros(n, n));
        }
        if log_ratio == 0.0 {
            return Ok(DMatrix::identity(n, n));
        }
        if log_ratio > self.tau_max * (1.0 + 1e-12) {
            return Err(Error::Domain(format!("ln(t/s) = {log_ratio} exceeds the tabulated range {}", self.tau_max)));
        }
        let lag = self.spec.lag();
        let k = delay_index_log(log_ratio, lag);
        let mut sum = DMatrix::zeros(n, n);
        for j in 0..k.pieces() {
            sum += self.piece(j, log_ratio - j as f64 * lag)?;
        }
        Ok(sum)
    }

    pub fn eval(&self, t: f64, s: f64) -> Result<SquareMatrix> {
        if !(t > 0.0 && s > 0.0) {
            return Err(Error::Domain(format!("t and s must be positive, got ({t}, {s})")));
        }
        if t == s {
            return Ok(SquareMatrix::identity(self.spec.dim()));
        }
        SquareMatrix::new(self.eval_log((t / s).ln())?)
    }
}

/// `Y^{A0,A1}_{h,alpha,beta}(t, s)`: zero for `t < s`, the identity at
/// `t = s`, otherwise the sum of the pieces on the branch of `(t, s)`.
pub fn delayed_ml(spec: &DelayedMLSpec, t: f64, s: f64) -> Result<SquareMatrix> {
    if !(t > 0.0 && s > 0.0) {
        return Err(Error::Domain(format!("t and s must be positive, got ({t}, {s})")));
    }
    if t < s {
        return Ok(SquareMatrix::zeros(spec.dim()));
    }
    DelayedMl::new(spec.clone(), (t / s).ln())?.eval(t, s)
}

/// `Σ_n C(n+k,k) a1^k a0^n x^((n+k)α+β-1) / Γ((n+k)α+β)` for scalars `a0, a1 >= 0`.
pub fn scalar_piece(a0: f64, a1: f64, alpha: f64, beta: f64, k: usize, x: f64, policy: &SeriesPolicy) -> Result<f64> {
    if !(x > 0.0) {
        return Err(Error::Domain(format!("scalar piece needs x > 0, got {x}")));
    }
    let shift = k as f64 * alpha + beta;
    let z = x.powf(alpha);
    let policy = &majorant_policy(policy, a0 * z, alpha);
    let mut term = rgamma(shift);
    let mut sum = term;
    for m in 1..policy.max_terms {
        let ratio = z * gamma_step(alpha, shift, m) * (m + k) as f64 / m as f64;
        term *= a0 * ratio;
        sum += term;
        if term == 0.0 || (term.abs() < policy.rel_tol * sum.abs() && a0 * ratio.abs() < 1.0) {
            return Ok(a1.powi(k as i32) * sum * x.powf(shift - 1.0));
        }
    }
    Err(Error::NonConvergence { max_terms: policy.max_terms })
}

/// Term budget for a positive majorant series, whose terms shrink only once
/// `(mα)^α > a0 z`.
fn majorant_policy(policy: &SeriesPolicy, argument: f64, alpha: f64) -> SeriesPolicy {
    let onset = argument.max(0.0).powf(1.0 / alpha) / alpha;
    let needed = (4.0 * onset).min(1e6) as usize;
    SeriesPolicy { max_terms: policy.max_terms.max(needed + policy.max_terms), ..*policy }
}

/// `Y^{a0,a1}_{1,alpha,beta}(T, 1)` truncated to the pieces `k = 0..=p`, all
/// evaluated at `x = ln T`.
pub fn scalar_bound(a0: f64, a1: f64, alpha: f64, beta: f64, log_t: f64, p: usize) -> Result<f64> {
    let policy = SeriesPolicy::default();
    (0..=p).try_fold(0.0, |acc, k| Ok(acc + scalar_piece(a0, a1, alpha, beta, k, log_t, &policy)?))
}

/// Upper bound on `|Y(t, s)|_F` from the scalar majorant series with
/// `a0 = |A0|_F` and `a1 = |A1|_F`.
pub fn norm_bound(spec: &DelayedMLSpec, t: f64, s: f64) -> Result<f64> {
    spec.validate()?;
    if !(t > 0.0 && s > 0.0) {
        return Err(Error::Domain(format!("t and s must be positive, got ({t}, {s})")));
    }
    let root_n = (spec.dim() as f64).sqrt();
    if t < s {
        return Ok(0.0);
    }
    if t == s {
        return Ok(root_n);
    }
    let (a0, a1) = (spec.a0.frobenius(), spec.a1.frobenius());
    let lag = spec.lag();
    let log_ratio = (t / s).ln();
    let k = delay_index_log(log_ratio, lag);
    let mut total = 0.0;
    for j in 0..k.pieces() {
        let x = log_ratio - j as f64 * lag;
        total += scalar_piece(a0, a1, spec.alpha, spec.beta, j, x, &spec.series)?;
    }
    // the identity word has norm sqrt(n), every other word is bounded by the norm product
    total += (root_n - 1.0) * log_ratio.powf(spec.beta - 1.0) * rgamma(spec.beta);
    Ok(total)
}
