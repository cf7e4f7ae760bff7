//! Semilinear problem
//!
//! D^α y(t) = A0 y(t) + A1 y(t/h) + f(t, y(t)),  1 < t <= T,
//!
//! with the history data of [`LinearDelayProblem`], solved by Picard
//! iteration on the integral operator
//!
//! (Θy)(t) = Y(t,1/h) a + ∫_{1/h}^1 Y(t,s)[D^α φ - A0 φ](s) ds/s
//!         + ∫_1^t Y(t,s) f(s, y(s)) ds/s.

use std::fmt;
use std::sync::Arc;

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::delayed::scalar_bound;
use crate::error::{Error, Result};
use crate::interp::Pchip;
use crate::linear::{
    history_residual, log_grid, weighted_sup, ForcedOperator, LinearDelayProblem, LinearKernel, Trajectory, VectorFn,
};
use crate::special::gamma;

/// f(t, y).
pub type RhsFn = Arc<dyn Fn(f64, &DVector<f64>) -> DVector<f64> + Send + Sync>;

/// Number of history sample points used for the weighted norm of
/// D^α φ - A0 φ.
const HISTORY_SAMPLES: usize = 64;

#[derive(Clone)]
pub struct SemilinearProblem {
    /// Coefficients and history; its forcing is ignored.
    pub linear: LinearDelayProblem,
    pub rhs: RhsFn,
    pub lipschitz: f64,
    /// L_2 in |f(t, y)| <= L_f |y| + L_2.
    pub affine_bound: f64,
    pub gamma_weight: f64,
}

impl fmt::Debug for SemilinearProblem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SemilinearProblem")
            .field("linear", &self.linear)
            .field("lipschitz", &self.lipschitz)
            .field("affine_bound", &self.affine_bound)
            .field("gamma_weight", &self.gamma_weight)
            .finish()
    }
}

impl SemilinearProblem {
    pub fn new(
        linear: LinearDelayProblem,
        rhs: RhsFn,
        lipschitz: f64,
        affine_bound: f64,
        gamma_weight: f64,
    ) -> Result<Self> {
        let p = Self { linear: linear.without_forcing(), rhs, lipschitz, affine_bound, gamma_weight };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        self.linear.validate()?;
        if !(self.lipschitz >= 0.0) || !self.lipschitz.is_finite() {
            return Err(Error::Domain(format!(
                "Lipschitz constant must be finite and non-negative, got {}",
                self.lipschitz
            )));
        }
        if !(self.affine_bound >= 0.0) || !self.affine_bound.is_finite() {
            return Err(Error::Domain(format!(
                "affine bound must be finite and non-negative, got {}",
                self.affine_bound
            )));
        }
        let g = self.gamma_weight;
        if !(g >= 0.0 && g < self.linear.alpha()) {
            return Err(Error::Domain(format!("gamma must lie in [0, alpha), got {g}")));
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.linear.dim()
    }

    /// Same problem with f replaced by f + q(t).
    pub fn perturbed(&self, q: VectorFn) -> Self {
        let rhs = self.rhs.clone();
        Self { rhs: Arc::new(move |t, y| rhs(t, y) + q(t)), ..self.clone() }
    }
}

/// Constants of the existence and Ulam-Hyers estimates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StabilityReport {
    pub m1: f64,
    pub m2: f64,
    /// Radius M2/(1 - M1) of the invariant ball; infinite without contraction.
    pub r: f64,
    /// Ulam-Hyers constant, present only when M1 < 1.
    pub v: Option<f64>,
    pub contraction: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PicardOptions {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for PicardOptions {
    fn default() -> Self {
        Self { tol: 1e-12, max_iter: 100 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PicardSolution {
    pub trajectory: Trajectory,
    /// Weighted norm of y_{k+1} - y_k for every iteration.
    pub updates: Vec<f64>,
}

impl PicardSolution {
    pub fn iterations(&self) -> usize {
        self.updates.len()
    }

    /// Successive update ratios.
    pub fn ratios(&self) -> Vec<f64> {
        self.updates.windows(2).filter(|w| w[0] > 0.0).map(|w| w[1] / w[0]).collect()
    }
}

/// max over grid points t > 1 of (ln t)^γ |y(t)|.
pub fn weighted_norm(traj: &Trajectory, gamma: f64) -> f64 {
    weighted_sup(&traj.grid, &traj.values, gamma)
}

/// Θ on a fixed grid. Works on the grid extended by t = 1 so that iterates
/// can be interpolated down to the start of the forcing interval.
struct ThetaOperator<'a> {
    problem: &'a SemilinearProblem,
    work: Vec<f64>,
    /// Index into `work` of every requested grid point.
    index: Vec<usize>,
    /// Index of t = 1 in `work`.
    start: usize,
    base: Vec<DVector<f64>>,
    forced: ForcedOperator,
}

impl<'a> ThetaOperator<'a> {
    fn new(problem: &'a SemilinearProblem, grid: &[f64]) -> Result<Self> {
        problem.validate()?;
        if grid.is_empty() || grid.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Domain("grid must be non-empty and strictly increasing".into()));
        }
        let mut work = grid.to_vec();
        let (start, index) = match grid.binary_search_by(|t| t.total_cmp(&1.0)) {
            Ok(i) => (i, (0..grid.len()).collect()),
            Err(i) => {
                work.insert(i, 1.0);
                (i, (0..grid.len()).map(|k| if k < i { k } else { k + 1 }).collect::<Vec<_>>())
            }
        };
        let mut lk = LinearKernel::new(&problem.linear)?;
        lk.prepare_history()?;
        let base = work.iter().map(|&t| lk.homogeneous_at(t)).collect::<Result<Vec<_>>>()?;
        let forced = ForcedOperator::new(&lk.kernel, &work, &problem.linear.spec.quad)?;
        Ok(Self { problem, work, index, start, base, forced })
    }

    fn restrict(&self, values: &[DVector<f64>]) -> Vec<DVector<f64>> {
        self.index.iter().map(|&i| values[i].clone()).collect()
    }

    /// Θ applied to the iterate given on the working grid.
    fn apply(&self, y: &[DVector<f64>]) -> Result<Vec<DVector<f64>>> {
        let us: Vec<f64> = self.work[self.start..].iter().map(|t| t.ln()).collect();
        let interp = Pchip::new(us, y[self.start..].to_vec())?;
        let rhs = &self.problem.rhs;
        let forced = self.forced.apply(self.problem.dim(), |_, v| Ok(rhs(v.exp(), &interp.eval(v))))?;
        Ok(self.base.iter().zip(forced).map(|(b, f)| b + f).collect())
    }
}

fn lift(op: &ThetaOperator<'_>, traj: &Trajectory) -> Result<Vec<DVector<f64>>> {
    if traj.grid.len() < 2 {
        return Err(Error::Domain("trajectory needs at least two points".into()));
    }
    let us: Vec<f64> = traj.grid.iter().map(|t| t.ln()).collect();
    let interp = Pchip::new(us, traj.values.clone())?;
    Ok(op.work.iter().map(|t| interp.eval(t.ln())).collect())
}

/// Θy on the grid of `y`, interpolating y monotonically in ln t.
pub fn theta_apply(problem: &SemilinearProblem, y: &Trajectory) -> Result<Trajectory> {
    let op = ThetaOperator::new(problem, &y.grid)?;
    let values = op.apply(&lift(&op, y)?)?;
    Ok(Trajectory { grid: y.grid.clone(), values: op.restrict(&values), gamma_weight: problem.gamma_weight })
}

/// Picard iteration from the homogeneous solution until the weighted update
/// drops below `opts.tol`. Runs whether or not M1 < 1.
pub fn picard_solve(problem: &SemilinearProblem, grid: &[f64], opts: PicardOptions) -> Result<PicardSolution> {
    let op = ThetaOperator::new(problem, grid)?;
    let gamma = problem.gamma_weight;
    let mut y = op.base.clone();
    let mut updates = Vec::new();
    for _ in 0..opts.max_iter {
        let next = op.apply(&y)?;
        let diff: Vec<DVector<f64>> = next.iter().zip(&y).map(|(a, b)| a - b).collect();
        let update = weighted_sup(&op.work, &diff, gamma);
        updates.push(update);
        y = next;
        if !update.is_finite() {
            break;
        }
        if update < opts.tol {
            let trajectory = Trajectory { grid: grid.to_vec(), values: op.restrict(&y), gamma_weight: gamma };
            return Ok(PicardSolution { trajectory, updates });
        }
    }
    Err(Error::MaxIter {
        iterations: updates.len(),
        last_update: updates.last().copied().unwrap_or(f64::NAN),
        last: Box::new(Trajectory { grid: grid.to_vec(), values: op.restrict(&y), gamma_weight: gamma }),
    })
}

/// Weighted norm of D^α φ - A0 φ on the history interval, with the weight
/// (ln th)^γ, sampled on the clustered history grid.
pub fn history_norm(problem: &SemilinearProblem) -> Result<f64> {
    let lin = &problem.linear;
    let h = lin.spec.h;
    let mut sup: f64 = 0.0;
    for t in log_grid(h, 1, HISTORY_SAMPLES, true)?.into_iter().filter(|&t| t <= 1.0) {
        let g = history_residual(lin, t)?;
        sup = sup.max((t * h).ln().powf(problem.gamma_weight) * g.norm());
    }
    Ok(sup)
}

/// M1, M2, r and V with the scalar majorant series in the spectral norms of
/// A0 and A1, summed over every delay branch reachable from 1/h.
pub fn contraction_constants(problem: &SemilinearProblem) -> Result<StabilityReport> {
    problem.validate()?;
    let lin = &problem.linear;
    let alpha = lin.alpha();
    let g = problem.gamma_weight;
    let log_t = lin.log_horizon();
    let (a0, a1) = (lin.spec.a0.spectral(), lin.spec.a1.spectral());
    let branches = lin.horizon as usize;
    let y_aa = scalar_bound(a0, a1, alpha, alpha, log_t, branches)?;
    let y_ag = scalar_bound(a0, a1, alpha, alpha - g + 1.0, log_t, branches)?;
    let weight = gamma(1.0 - g)? * log_t.powf(g);
    let m1 = problem.lipschitz * weight * y_ag;
    let m2 = log_t.powf(g) * y_aa * lin.a.norm()
        + weight * y_ag * history_norm(problem)?
        + problem.affine_bound * log_t.powf(g + 1.0) * y_aa;
    let contraction = m1 < 1.0;
    let (r, v) = if contraction {
        (m2 / (1.0 - m1), Some(log_t.powf(g + 1.0) * y_aa / (1.0 - m1)))
    } else {
        (f64::INFINITY, None)
    };
    Ok(StabilityReport { m1, m2, r, v, contraction })
}

/// Largest difference quotient |f(t,y) - f(t,z)| / |y - z| over `samples`
/// random pairs in the ball of the given radius and random t in [1, T].
pub fn estimate_lipschitz(problem: &SemilinearProblem, radius: f64, samples: usize, seed: u64) -> f64 {
    let n = problem.dim();
    let t_max = problem.linear.horizon_t();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let point = |rng: &mut ChaCha8Rng| {
        let v = DVector::from_fn(n, |_, _| rng.gen_range(-1.0..1.0));
        let norm = v.norm();
        if norm > 0.0 {
            v * (radius * rng.gen::<f64>() / norm)
        } else {
            v
        }
    };
    let mut best: f64 = 0.0;
    for _ in 0..samples {
        let t = rng.gen_range(1.0..=t_max);
        let (y, z) = (point(&mut rng), point(&mut rng));
        let d = (&y - &z).norm();
        if d > 0.0 {
            best = best.max(((problem.rhs)(t, &y) - (problem.rhs)(t, &z)).norm() / d);
        }
    }
    best
}

/// Solves the problem with f replaced by f + q and returns the weighted
/// distance to the unperturbed fixed point. Fails when the weighted norm of
/// q on the grid exceeds `epsilon`.
pub fn verify_ulam_hyers(
    problem: &SemilinearProblem,
    grid: &[f64],
    epsilon: f64,
    perturbation: VectorFn,
    opts: PicardOptions,
) -> Result<f64> {
    let qs: Vec<DVector<f64>> = grid.iter().map(|&t| perturbation(t)).collect();
    let norm = weighted_sup(grid, &qs, problem.gamma_weight);
    if norm > epsilon * (1.0 + 1e-12) {
        return Err(Error::PerturbationTooLarge { norm, epsilon });
    }
    let y = picard_solve(problem, grid, opts)?.trajectory;
    let y_star = picard_solve(&problem.perturbed(perturbation), grid, opts)?.trajectory;
    y.weighted_distance(&y_star)
}
