//! Explicit solution of the linear system
//!
//! D^α y(t) = A0 y(t) + A1 y(t/h) + f(t),  1 < t <= T = h^l,
//! y = φ on (1/h, 1],  I^{1-α} y((1/h)+) = a,
//!
//! with Hadamard operators based at 1/h. All integrals are taken in
//! u = ln t, where the lag is ln h and the history occupies (-ln h, 0].

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::delayed::{DelayedMLSpec, DelayedMl};
use crate::error::{Error, Result};
use crate::matrix::SquareMatrix;
use crate::quadrature::{kernel_rule, weighted_rule, QuadraturePolicy, WeightedRule};
use crate::special::{gamma, rgamma};

/// A vector-valued function of t.
pub type VectorFn = Arc<dyn Fn(f64) -> DVector<f64> + Send + Sync>;

/// Distance kept between grid points and the breakpoints h^k.
pub const BREAKPOINT_OFFSET: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HistoryMode {
    Analytic,
    Numeric,
}

/// Initial function φ on (1/h, 1] with an optional Hadamard derivative
/// D^α φ (based at 1/h).
#[derive(Clone)]
pub struct HistorySpec {
    pub phi: VectorFn,
    pub frac_deriv: Option<VectorFn>,
    pub mode: HistoryMode,
    /// Exponent p of a (ln th)^p singularity of D^α φ - A0 φ at 1/h.
    /// Defaults to -α, which covers any φ that is smooth up to 1/h.
    pub lower_exponent: Option<f64>,
}

impl fmt::Debug for HistorySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("HistorySpec")
            .field("mode", &self.mode)
            .field("has_frac_deriv", &self.frac_deriv.is_some())
            .field("lower_exponent", &self.lower_exponent)
            .finish()
    }
}

impl HistorySpec {
    pub fn analytic(phi: VectorFn, frac_deriv: VectorFn) -> Self {
        Self { phi, frac_deriv: Some(frac_deriv), mode: HistoryMode::Analytic, lower_exponent: None }
    }

    pub fn numeric(phi: VectorFn) -> Self {
        Self { phi, frac_deriv: None, mode: HistoryMode::Numeric, lower_exponent: None }
    }

    /// φ ≡ 0.
    pub fn zero(n: usize) -> Self {
        let z: VectorFn = Arc::new(move |_| DVector::zeros(n));
        Self::analytic(z.clone(), z)
    }

    pub fn with_lower_exponent(mut self, p: f64) -> Self {
        self.lower_exponent = Some(p);
        self
    }
}

/// The linear delay problem on (1, h^l].
#[derive(Clone)]
pub struct LinearDelayProblem {
    pub spec: DelayedMLSpec,
    pub a: DVector<f64>,
    pub history: HistorySpec,
    pub forcing: Option<VectorFn>,
    pub horizon: u32,
}

impl fmt::Debug for LinearDelayProblem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("LinearDelayProblem")
            .field("spec", &self.spec)
            .field("a", &self.a)
            .field("history", &self.history)
            .field("has_forcing", &self.forcing.is_some())
            .field("horizon", &self.horizon)
            .finish()
    }
}

impl LinearDelayProblem {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        alpha: f64,
        h: f64,
        a0: SquareMatrix,
        a1: SquareMatrix,
        a: DVector<f64>,
        history: HistorySpec,
        forcing: Option<VectorFn>,
        horizon: u32,
    ) -> Result<Self> {
        let spec = DelayedMLSpec::new(alpha, alpha, h, a0, a1)?;
        let p = Self { spec, a, history, forcing, horizon };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        self.spec.validate()?;
        if !(self.spec.alpha < 1.0) {
            return Err(Error::Domain(format!("the solver needs alpha < 1, got {}", self.spec.alpha)));
        }
        if self.spec.beta != self.spec.alpha {
            return Err(Error::Domain("the solution kernel needs beta = alpha".into()));
        }
        if self.horizon < 1 {
            return Err(Error::Domain("horizon exponent l must be at least 1".into()));
        }
        if self.a.len() != self.spec.dim() {
            return Err(Error::Dimension(format!(
                "initial value has length {} but the system has dimension {}",
                self.a.len(),
                self.spec.dim()
            )));
        }
        if self.a.iter().any(|v| !v.is_finite()) {
            return Err(Error::Domain("initial value must be finite".into()));
        }
        if self.history.mode == HistoryMode::Analytic && self.history.frac_deriv.is_none() {
            return Err(Error::MissingDerivative);
        }
        if !(self.history_exponent() > -1.0) {
            return Err(Error::Domain("history lower exponent must exceed -1".into()));
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.spec.dim()
    }

    pub fn history_exponent(&self) -> f64 {
        self.history.lower_exponent.unwrap_or(-self.alpha())
    }

    pub fn alpha(&self) -> f64 {
        self.spec.alpha
    }

    pub fn lag(&self) -> f64 {
        self.spec.lag()
    }

    /// ln T.
    pub fn log_horizon(&self) -> f64 {
        self.horizon as f64 * self.lag()
    }

    pub fn horizon_t(&self) -> f64 {
        self.spec.h.powi(self.horizon as i32)
    }

    pub fn without_forcing(&self) -> Self {
        Self { forcing: None, ..self.clone() }
    }

    pub fn without_history(&self) -> Self {
        Self { a: DVector::zeros(self.dim()), history: HistorySpec::zero(self.dim()), ..self.clone() }
    }
}

/// Solution samples.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub grid: Vec<f64>,
    pub values: Vec<DVector<f64>>,
    pub gamma_weight: f64,
}

impl Trajectory {
    /// max over grid points t > 1 of (ln t)^γ |y(t)|.
    pub fn weighted_sup(&self) -> f64 {
        weighted_sup(&self.grid, &self.values, self.gamma_weight)
    }

    /// Weighted sup distance to another trajectory on the same grid.
    pub fn weighted_distance(&self, other: &Trajectory) -> Result<f64> {
        if self.grid != other.grid {
            return Err(Error::Dimension("trajectories live on different grids".into()));
        }
        let diff: Vec<DVector<f64>> = self.values.iter().zip(&other.values).map(|(a, b)| a - b).collect();
        Ok(weighted_sup(&self.grid, &diff, self.gamma_weight))
    }
}

pub(crate) fn weighted_sup(grid: &[f64], values: &[DVector<f64>], gamma: f64) -> f64 {
    grid.iter().zip(values).filter(|(t, _)| **t > 1.0).map(|(t, v)| t.ln().powf(gamma) * v.norm()).fold(0.0, f64::max)
}

/// Grid in t with `per_interval` points on each delay interval
/// (h^(p-1), h^p], clustered toward the left end and kept
/// `BREAKPOINT_OFFSET` (in ln t) below the right end.
pub fn log_grid(h: f64, horizon: u32, per_interval: usize, include_history: bool) -> Result<Vec<f64>> {
    if !(h > 1.0) || per_interval < 1 || horizon < 1 {
        return Err(Error::Domain("grid needs h > 1, l >= 1 and at least one point per interval".into()));
    }
    let lag = h.ln();
    let first = if include_history { 0 } else { 1 };
    let mut grid = Vec::with_capacity((horizon as usize + 1) * per_interval);
    for p in first..=horizon as i64 {
        let left = (p - 1) as f64 * lag;
        for i in 1..=per_interval {
            let u = if i == per_interval {
                left + lag - BREAKPOINT_OFFSET
            } else {
                left + lag * (1.0 - (PI * i as f64 / (2 * per_interval) as f64).cos())
            };
            grid.push(u.exp());
        }
    }
    Ok(grid)
}

/// Hadamard derivative D^α φ based at e^{u0}, computed as the numerical
/// derivative of the fractional integral of order 1-α, at the offset
/// `dist = u - u0`. `phi_exponent` is the order of a (ln th)^p singularity of
/// φ itself.
pub fn numeric_frac_deriv(phi: &VectorFn, alpha: f64, u0: f64, phi_exponent: f64, dist: f64) -> Result<DVector<f64>> {
    let policy = QuadraturePolicy { nodes_per_panel: 16, panel_count: 4, endpoint_exponents: (phi_exponent, -alpha) };
    let integral = |x: f64| -> Result<DVector<f64>> {
        let rule = weighted_rule(0.0, x, &policy)?;
        Ok(rule.integrate(|v| phi((u0 + v).exp()) * (v.powf(-phi_exponent) * rgamma(1.0 - alpha))))
    };
    if !(dist > 0.0) {
        return Err(Error::Domain(format!("derivative requested at offset {dist} from the base")));
    }
    let delta = f64::EPSILON.cbrt() * dist;
    Ok((integral(dist + delta)? - integral(dist - delta)?) / (2.0 * delta))
}

/// D^α φ - A0 φ at offsets from u0, divided by the declared lower singularity.
/// Offsets keep their relative precision near the base.
struct HistoryForcing<'a> {
    problem: &'a LinearDelayProblem,
    u0: f64,
}

impl HistoryForcing<'_> {
    fn eval(&self, xi: f64) -> Result<DVector<f64>> {
        let p = self.problem;
        // below this offset t can no longer be told apart from 1/h
        let xi = xi.max(4.0 * f64::EPSILON * self.u0.abs().max(1.0));
        let t = (self.u0 + xi).exp();
        let phi = (p.history.phi)(t);
        let d = match (&p.history.frac_deriv, p.history.mode) {
            (Some(d), HistoryMode::Analytic) => d(t),
            (Some(d), HistoryMode::Numeric) => d(t),
            (None, HistoryMode::Numeric) => {
                let phi_exponent = (p.history_exponent() + p.alpha()).min(0.0);
                numeric_frac_deriv(&p.history.phi, p.alpha(), self.u0, phi_exponent, xi)?
            }
            (None, HistoryMode::Analytic) => return Err(Error::MissingDerivative),
        };
        let g = d - p.spec.a0.as_matrix() * phi;
        Ok(g * xi.powf(-p.history_exponent()))
    }
}

/// D^α φ(t) - A0 φ(t) for t in (1/h, 1].
pub fn history_residual(problem: &LinearDelayProblem, t: f64) -> Result<DVector<f64>> {
    let u0 = -problem.lag();
    let xi = t.ln() - u0;
    if !(xi > 0.0 && t <= 1.0) {
        return Err(Error::Domain(format!("t = {t} lies outside the history interval")));
    }
    let hf = HistoryForcing { problem, u0 };
    Ok(hf.eval(xi)? * xi.powf(problem.history_exponent()))
}

/// Precomputed pieces shared by the solvers on a fixed grid.
pub(crate) struct LinearKernel<'a> {
    pub problem: &'a LinearDelayProblem,
    pub kernel: DelayedMl,
    pub u0: f64,
    full_history: Option<(WeightedRule, Vec<DVector<f64>>)>,
}

impl<'a> LinearKernel<'a> {
    pub fn new(problem: &'a LinearDelayProblem) -> Result<Self> {
        problem.validate()?;
        let lag = problem.lag();
        let kernel = DelayedMl::new(problem.spec.clone(), problem.log_horizon() + lag)?;
        Ok(Self { problem, kernel, u0: -lag, full_history: None })
    }

    pub fn prepare_history(&mut self) -> Result<()> {
        let policy = self.problem.spec.quad.with_exponents(self.problem.history_exponent(), 0.0);
        let rule = weighted_rule(0.0, -self.u0, &policy)?;
        let hf = HistoryForcing { problem: self.problem, u0: self.u0 };
        let g = rule.nodes.iter().map(|&v| hf.eval(v)).collect::<Result<Vec<_>>>()?;
        self.full_history = Some((rule, g));
        Ok(())
    }

    fn check_point(&self, t: f64) -> Result<f64> {
        let u = t.ln();
        if !(u > self.u0) || u > self.problem.log_horizon() * (1.0 + 1e-12) + 1e-15 {
            return Err(Error::Domain(format!("grid point t = {t} lies outside (1/h, T]")));
        }
        Ok(u)
    }

    /// Y(t, 1/h) a + ∫_{1/h}^1 Y(t, s) g(s) ds/s.
    pub fn homogeneous_at(&self, t: f64) -> Result<DVector<f64>> {
        let u = self.check_point(t)?;
        let p = self.problem;
        let mut y = self.kernel.eval_log(u - self.u0)? * &p.a;
        let Some((full_rule, full_g)) = &self.full_history else {
            return Ok(y);
        };
        let lag = p.lag();
        let alpha = p.alpha();
        let hf = HistoryForcing { problem: p, u0: self.u0 };
        let pieces = crate::delayed::delay_index_log(u - self.u0, lag).pieces();
        for j in 0..pieces {
            let apex = u - j as f64 * lag;
            if apex >= 0.0 {
                for ((xi, w), g) in full_rule.nodes.iter().zip(&full_rule.weights).zip(full_g) {
                    y += self.kernel.piece(j, apex - self.u0 - xi)? * g * *w;
                }
            } else if apex > self.u0 {
                let len = apex - self.u0;
                let rule = kernel_rule(len, j + 1, alpha, p.history_exponent(), &p.spec.quad)?;
                for (s, w) in rule.near.nodes.iter().zip(&rule.near.weights) {
                    y += self.kernel.reduced(j, s.powf(alpha))? * hf.eval(len - s)? * *w;
                }
                for (xi, w) in rule.far.nodes.iter().zip(&rule.far.weights) {
                    y += self.kernel.reduced(j, (len - xi).powf(alpha))? * hf.eval(*xi)? * *w;
                }
            }
        }
        Ok(y)
    }
}

/// Quadrature nodes and matrix weights such that
/// ∫_1^t Y(t, s) F(s) ds/s ≈ Σ W_i F(e^{v_i}) at every grid point.
pub(crate) struct ForcedOperator {
    pub nodes: Vec<Vec<(f64, DMatrix<f64>)>>,
}

impl ForcedOperator {
    pub fn new(kernel: &DelayedMl, grid: &[f64], quad: &QuadraturePolicy) -> Result<Self> {
        let spec = kernel.spec();
        let (alpha, lag) = (spec.alpha, spec.lag());
        let mut nodes = Vec::with_capacity(grid.len());
        for &t in grid {
            let u = t.ln();
            let mut row = Vec::new();
            let mut j = 0;
            while u - j as f64 * lag > 0.0 {
                let apex = u - j as f64 * lag;
                let rule = kernel_rule(apex, j + 1, alpha, 0.0, quad)?;
                for (s, w) in rule.near.nodes.iter().zip(&rule.near.weights) {
                    row.push((apex - s, kernel.reduced(j, s.powf(alpha))? * *w));
                }
                for (v, w) in rule.far.nodes.iter().zip(&rule.far.weights) {
                    row.push((*v, kernel.reduced(j, (apex - v).powf(alpha))? * *w));
                }
                j += 1;
            }
            nodes.push(row);
        }
        Ok(Self { nodes })
    }

    /// Applies the operator to a forcing evaluated at node i of grid point k.
    pub fn apply<F>(&self, dim: usize, mut f: F) -> Result<Vec<DVector<f64>>>
    where
        F: FnMut(usize, f64) -> Result<DVector<f64>>,
    {
        self.nodes
            .iter()
            .enumerate()
            .map(|(k, row)| {
                let mut acc = DVector::zeros(dim);
                for (v, w) in row {
                    acc += w * f(k, *v)?;
                }
                Ok(acc)
            })
            .collect()
    }
}

fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() || grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::Domain("grid must be non-empty and strictly increasing".into()));
    }
    Ok(())
}

fn trajectory(grid: &[f64], values: Vec<DVector<f64>>) -> Trajectory {
    Trajectory { grid: grid.to_vec(), values, gamma_weight: 0.0 }
}

/// Solution with zero initial data: ∫_1^t Y(t, s) f(s) ds/s.
pub fn solve_forced_zero_ic(problem: &LinearDelayProblem, grid: &[f64]) -> Result<Trajectory> {
    problem.validate()?;
    check_grid(grid)?;
    let n = problem.dim();
    let Some(f) = &problem.forcing else {
        return Ok(trajectory(grid, vec![DVector::zeros(n); grid.len()]));
    };
    let lk = LinearKernel::new(problem)?;
    for &t in grid {
        lk.check_point(t)?;
    }
    let op = ForcedOperator::new(&lk.kernel, grid, &problem.spec.quad)?;
    let values = op.apply(n, |_, v| Ok(f(v.exp())))?;
    Ok(trajectory(grid, values))
}

/// Solution with f = 0: Y(t,1/h) a + ∫_{1/h}^1 Y(t,s)[D^α φ(s) - A0 φ(s)] ds/s.
pub fn solve_homogeneous(problem: &LinearDelayProblem, grid: &[f64]) -> Result<Trajectory> {
    problem.validate()?;
    check_grid(grid)?;
    let mut lk = LinearKernel::new(problem)?;
    lk.prepare_history()?;
    let values = grid.iter().map(|&t| lk.homogeneous_at(t)).collect::<Result<Vec<_>>>()?;
    Ok(trajectory(grid, values))
}

/// Sum of the homogeneous and zero-initial-data solutions.
pub fn solve_full(problem: &LinearDelayProblem, grid: &[f64]) -> Result<Trajectory> {
    let hom = solve_homogeneous(problem, grid)?;
    let forced = solve_forced_zero_ic(problem, grid)?;
    let values = hom.values.iter().zip(&forced.values).map(|(a, b)| a + b).collect();
    Ok(trajectory(grid, values))
}

/// |Γ(α) (ln th)^{1-α} y(t) - a| at the first grid point, the discrete
/// stand-in for I^{1-α} y((1/h)+) - a.
pub fn check_initial_condition(traj: &Trajectory, problem: &LinearDelayProblem) -> Result<f64> {
    let (Some(&t), Some(y)) = (traj.grid.first(), traj.values.first()) else {
        return Err(Error::Domain("empty trajectory".into()));
    };
    let alpha = problem.alpha();
    let x = (t * problem.spec.h).ln();
    if !(x > 0.0) {
        return Err(Error::Domain("first grid point must exceed 1/h".into()));
    }
    let scaled = y * (gamma(alpha)? * x.powf(1.0 - alpha));
    Ok((scaled - &problem.a).norm())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar(v: f64) -> SquareMatrix {
        SquareMatrix::diagonal(&[v]).unwrap()
    }

    fn constant(v: f64) -> VectorFn {
        Arc::new(move |_| DVector::from_element(1, v))
    }

    const TS: [f64; 4] = [1.2, 1.5, 2.0, 3.0];

    #[test]
    fn grid_layout() {
        let g = log_grid(1.5, 2, 8, true).unwrap();
        assert_eq!(g.len(), 24);
        assert!(g[0] > 1.0 / 1.5);
        assert!(g.windows(2).all(|w| w[1] > w[0]));
        for k in -1..=2 {
            let b = 1.5f64.powi(k);
            assert!(g.iter().all(|t| (t.ln() - b.ln()).abs() >= 0.5 * BREAKPOINT_OFFSET));
        }
        assert!(*g.last().unwrap() <= 2.25);
    }

    #[test]
    fn zero_forcing_gives_zero() {
        let p = LinearDelayProblem::new(
            0.6,
            1.5,
            scalar(0.3),
            scalar(0.2),
            DVector::zeros(1),
            HistorySpec::zero(1),
            None,
            2,
        )
        .unwrap();
        let traj = solve_forced_zero_ic(&p, &[1.2, 2.0]).unwrap();
        assert!(traj.values.iter().all(|v| v.norm() == 0.0));
    }

    #[test]
    fn scalar_no_delay_forced_reference() {
        let p = LinearDelayProblem::new(
            0.6,
            1.5,
            scalar(-0.5),
            scalar(0.0),
            DVector::zeros(1),
            HistorySpec::zero(1),
            Some(constant(1.0)),
            3,
        )
        .unwrap();
        let traj = solve_forced_zero_ic(&p, &TS).unwrap();
        // 40-digit references for (ln t)^α E_{α,α+1}(λ (ln t)^α)
        let want = [
            0.350_541_719_717_111_267_47,
            0.522_702_948_543_443_589_88,
            0.668_553_649_542_766_041_75,
            0.811_334_214_945_708_678_37,
        ];
        for (v, w) in traj.values.iter().zip(want) {
            assert!((v[0] - w).abs() < 1e-10, "{} vs {w}", v[0]);
        }
    }

    #[test]
    fn homogeneous_eigen_history_reference() {
        let (alpha, lam, h) = (0.6, -0.5, 1.5);
        let series = crate::special::SeriesPolicy::default();
        let e = move |t: f64| {
            let x = (t * h).ln();
            x.powf(alpha - 1.0) * crate::special::ml_scalar(alpha, alpha, lam * x.powf(alpha), &series).unwrap().value
        };
        let phi: VectorFn = Arc::new(move |t| DVector::from_element(1, e(t)));
        let dphi: VectorFn = Arc::new(move |t| DVector::from_element(1, lam * e(t)));
        let hist = HistorySpec::analytic(phi, dphi);
        let p =
            LinearDelayProblem::new(alpha, h, scalar(lam), scalar(0.0), DVector::from_element(1, 1.0), hist, None, 3)
                .unwrap();
        let traj = solve_homogeneous(&p, &TS).unwrap();
        let want = [
            0.477_527_849_767_373_564_65,
            0.376_495_295_719_213_809_95,
            0.295_598_063_696_504_856_96,
            0.225_534_017_310_840_383_70,
        ];
        for (v, w) in traj.values.iter().zip(want) {
            assert!((v[0] - w).abs() < 1e-10, "{} vs {w}", v[0]);
        }
    }

    #[test]
    fn power_history_without_coefficients() {
        let (alpha, h, c, a) = (0.7, 1.4, 2.0, 0.8);
        let phi: VectorFn = Arc::new(move |t: f64| DVector::from_element(1, c * (t * h).ln().powf(alpha - 1.0)));
        let hist = HistorySpec::analytic(phi, constant(0.0));
        let p = LinearDelayProblem::new(alpha, h, scalar(0.0), scalar(0.0), DVector::from_element(1, a), hist, None, 2)
            .unwrap();
        let grid = log_grid(h, 2, 6, true).unwrap();
        let traj = solve_homogeneous(&p, &grid).unwrap();
        for (t, v) in grid.iter().zip(&traj.values) {
            let want = a * (t * h).ln().powf(alpha - 1.0) / gamma(alpha).unwrap();
            assert!((v[0] - want).abs() < 1e-13);
        }
        assert!(check_initial_condition(&traj, &p).unwrap() < 1e-13);
    }

    #[test]
    fn numeric_history_derivative_matches_analytic() {
        // φ(t) = ln(th) has D^α φ = (ln th)^{1-α} / Γ(2-α)
        let (alpha, h) = (0.4, 1.3);
        let phi: VectorFn = Arc::new(move |t: f64| DVector::from_element(1, (t * h).ln()));
        for &t in &[0.8, 0.95, 1.0] {
            let d = numeric_frac_deriv(&phi, alpha, -h.ln(), 0.0, f64::ln(t * h)).unwrap();
            let want = (t * h).ln().powf(1.0 - alpha) / gamma(2.0 - alpha).unwrap();
            assert!((d[0] - want).abs() < 1e-7, "t={t}");
        }
    }

    #[test]
    fn missing_derivative_is_reported() {
        let mut hist = HistorySpec::numeric(constant(1.0));
        hist.mode = HistoryMode::Analytic;
        let r = LinearDelayProblem::new(0.5, 1.5, scalar(0.0), scalar(0.0), DVector::zeros(1), hist, None, 1);
        assert_eq!(r.unwrap_err(), Error::MissingDerivative);
    }

    #[test]
    fn superposition_is_exact() {
        let a0 = SquareMatrix::from_rows(&[vec![-0.3, 0.2], vec![0.1, -0.4]]).unwrap();
        let a1 = SquareMatrix::from_rows(&[vec![0.2, 0.0], vec![0.3, 0.1]]).unwrap();
        let phi: VectorFn = Arc::new(|t: f64| DVector::from_vec(vec![1.0 + t, 0.5]));
        let forcing: VectorFn = Arc::new(|t: f64| DVector::from_vec(vec![t.ln(), 1.0]));
        let p = LinearDelayProblem::new(
            0.7,
            1.5,
            a0,
            a1,
            DVector::from_vec(vec![0.2, -0.1]),
            HistorySpec::numeric(phi),
            Some(forcing),
            2,
        )
        .unwrap();
        let grid = [1.1, 1.7, 2.2];
        let full = solve_full(&p, &grid).unwrap();
        let hom = solve_homogeneous(&p, &grid).unwrap();
        let forced = solve_forced_zero_ic(&p, &grid).unwrap();
        for i in 0..3 {
            assert!((&full.values[i] - &hom.values[i] - &forced.values[i]).norm() < 1e-12);
        }
    }
}
