//! Quadrature for weakly singular kernels in the logarithmic variable.
//!
//! Every integral ∫ f(s) ds/s is rewritten with u = ln s as ∫ f(e^u) du and
//! approximated by a composite rule for
//!
//! ∫_lo^hi (u - lo)^p (hi - u)^q g(u) du
//!
//! whose end panels carry Gauss-Jacobi weights and whose interior panels are
//! graded geometrically toward both endpoints.

use std::collections::HashMap;
use std::ops::{Add, Mul};
use std::sync::{Arc, Mutex, OnceLock};

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::special::beta;

/// Ratio between consecutive panel lengths toward a graded endpoint.
const GRADING: f64 = 0.15;

/// Discretization controls for [`log_integrate`] and friends.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadraturePolicy {
    pub nodes_per_panel: usize,
    /// Panels per half interval. A value of 1 means one Gauss-Jacobi panel
    /// carrying both endpoint exponents. The delayed Mittag-Leffler recursion
    /// uses a quarter of this count.
    pub panel_count: usize,
    /// Exponents of the (u - lo) and (hi - u) factors.
    pub endpoint_exponents: (f64, f64),
}

impl Default for QuadraturePolicy {
    fn default() -> Self {
        Self { nodes_per_panel: 32, panel_count: 8, endpoint_exponents: (0.0, 0.0) }
    }
}

impl QuadraturePolicy {
    pub fn new(nodes_per_panel: usize, panel_count: usize, endpoint_exponents: (f64, f64)) -> Result<Self> {
        let p = Self { nodes_per_panel, panel_count, endpoint_exponents };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.nodes_per_panel < 2 {
            return Err(Error::Domain("nodes_per_panel must be at least 2".into()));
        }
        if self.panel_count < 1 {
            return Err(Error::Domain("panel_count must be at least 1".into()));
        }
        let (p, q) = self.endpoint_exponents;
        if !(p > -1.0 && q > -1.0) || !p.is_finite() || !q.is_finite() {
            return Err(Error::Domain(format!("endpoint exponents must exceed -1, got ({p}, {q})")));
        }
        Ok(())
    }

    /// Same discretization with different endpoint exponents.
    pub fn with_exponents(&self, lower: f64, upper: f64) -> Self {
        Self { endpoint_exponents: (lower, upper), ..*self }
    }

    /// Twice the nodes and twice the panels.
    pub fn refined(&self) -> Self {
        Self { nodes_per_panel: 2 * self.nodes_per_panel, panel_count: 2 * self.panel_count, ..*self }
    }
}

/// Nodes and weights on [-1, 1] for the weight (1 - x)^a (1 + x)^b.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussJacobi {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

type RuleKey = (usize, u64, u64);

fn rule_cache() -> &'static Mutex<HashMap<RuleKey, Arc<GaussJacobi>>> {
    static CACHE: OnceLock<Mutex<HashMap<RuleKey, Arc<GaussJacobi>>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

/// Gauss-Jacobi rule with `n` nodes via Golub-Welsch. Rules are memoized.
pub fn gauss_jacobi(n: usize, a: f64, b: f64) -> Result<Arc<GaussJacobi>> {
    if n < 1 {
        return Err(Error::Domain("Gauss-Jacobi needs at least one node".into()));
    }
    if !(a > -1.0 && b > -1.0) || !a.is_finite() || !b.is_finite() {
        return Err(Error::Domain(format!("Jacobi exponents must exceed -1, got ({a}, {b})")));
    }
    let key = (n, a.to_bits(), b.to_bits());
    if let Some(rule) = rule_cache().lock().unwrap().get(&key) {
        return Ok(rule.clone());
    }
    let rule = Arc::new(golub_welsch(n, a, b)?);
    rule_cache().lock().unwrap().insert(key, rule.clone());
    Ok(rule)
}

fn golub_welsch(n: usize, a: f64, b: f64) -> Result<GaussJacobi> {
    let ab = a + b;
    let mut jac = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        let k = i as f64;
        jac[(i, i)] =
            if i == 0 { (b - a) / (ab + 2.0) } else { (b * b - a * a) / ((2.0 * k + ab) * (2.0 * k + ab + 2.0)) };
        if i + 1 < n {
            let m = k + 1.0;
            let s = 2.0 * m + ab;
            let beta_m = if i == 0 {
                4.0 * (1.0 + a) * (1.0 + b) / ((2.0 + ab).powi(2) * (3.0 + ab))
            } else {
                4.0 * m * (m + a) * (m + b) * (m + ab) / (s * s * (s + 1.0) * (s - 1.0))
            };
            let off = beta_m.sqrt();
            jac[(i, i + 1)] = off;
            jac[(i + 1, i)] = off;
        }
    }
    let mu0 = 2f64.powf(ab + 1.0) * beta(a + 1.0, b + 1.0)?;
    let eig = jac.symmetric_eigen();
    let mut pairs: Vec<(f64, f64)> =
        (0..n).map(|j| (eig.eigenvalues[j], mu0 * eig.eigenvectors[(0, j)].powi(2))).collect();
    pairs.sort_by(|x, y| x.0.total_cmp(&y.0));
    Ok(GaussJacobi { nodes: pairs.iter().map(|p| p.0).collect(), weights: pairs.iter().map(|p| p.1).collect() })
}

/// A composite rule on a finite interval: ∫ g ≈ Σ w_i g(x_i).
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl WeightedRule {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Σ w_i g(x_i) for any summable value type.
    pub fn integrate<T, F>(&self, mut g: F) -> T
    where
        T: Add<Output = T> + Mul<f64, Output = T>,
        F: FnMut(f64) -> T,
    {
        let mut it = self.nodes.iter().zip(&self.weights);
        let (x0, w0) = it.next().expect("quadrature rule has nodes");
        it.fold(g(*x0) * *w0, |acc, (x, w)| acc + g(*x) * *w)
    }

    pub fn integrate_matrix<F>(&self, rows: usize, cols: usize, mut g: F) -> DMatrix<f64>
    where
        F: FnMut(f64) -> DMatrix<f64>,
    {
        let mut acc = DMatrix::zeros(rows, cols);
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            acc += g(*x) * *w;
        }
        acc
    }
}

/// Rule for ∫_lo^hi (u - lo)^p (hi - u)^q g(u) du with (p, q) taken from the policy.
pub fn weighted_rule(lo: f64, hi: f64, policy: &QuadraturePolicy) -> Result<WeightedRule> {
    policy.validate()?;
    if !(hi > lo) || !lo.is_finite() || !hi.is_finite() {
        return Err(Error::Domain(format!("integration interval must satisfy lo < hi, got [{lo}, {hi}]")));
    }
    let (p, q) = policy.endpoint_exponents;
    let n = policy.nodes_per_panel;
    let len = hi - lo;
    let mut rule = WeightedRule { nodes: Vec::new(), weights: Vec::new() };

    if policy.panel_count == 1 {
        let gj = gauss_jacobi(n, q, p)?;
        let scale = (0.5 * len).powf(p + q + 1.0);
        for (x, w) in gj.nodes.iter().zip(&gj.weights) {
            rule.nodes.push(lo + 0.5 * len * (1.0 + x));
            rule.weights.push(w * scale);
        }
        return Ok(rule);
    }

    let m = policy.panel_count;
    let half = 0.5 * len;
    // breakpoints of the left half, measured from lo
    let mut left = vec![0.0];
    for i in (0..m - 1).rev() {
        left.push(half * GRADING.powi(i as i32 + 1));
    }
    left.push(half);
    let legendre = gauss_jacobi(n, 0.0, 0.0)?;
    let lower_end = gauss_jacobi(n, 0.0, p)?;
    let upper_end = gauss_jacobi(n, q, 0.0)?;

    let mut push = |a: f64, b: f64, gj: &GaussJacobi, factor: &dyn Fn(f64) -> f64, pow: f64| {
        let h = 0.5 * (b - a);
        let scale = h.powf(pow + 1.0);
        for (x, w) in gj.nodes.iter().zip(&gj.weights) {
            let u = a + h * (1.0 + x);
            rule.nodes.push(u);
            rule.weights.push(w * scale * factor(u));
        }
    };
    let both = |u: f64| (u - lo).powf(p) * (hi - u).powf(q);
    let upper_only = |u: f64| (hi - u).powf(q);
    let lower_only = |u: f64| (u - lo).powf(p);

    for w in left.windows(2) {
        let (a, b) = (lo + w[0], lo + w[1]);
        if w[0] == 0.0 {
            push(a, b, &lower_end, &upper_only, p);
        } else {
            push(a, b, &legendre, &both, 0.0);
        }
    }
    for w in left.windows(2).rev() {
        let (a, b) = (hi - w[1], hi - w[0]);
        if w[0] == 0.0 {
            push(a, b, &upper_end, &lower_only, q);
        } else {
            push(a, b, &legendre, &both, 0.0);
        }
    }
    Ok(rule)
}

/// Nodes and weights of [`kernel_rule`], split at the midpoint.
#[derive(Debug, Clone)]
pub struct KernelRule {
    /// Nodes are the distances s from the kernel apex.
    pub near: WeightedRule,
    /// Nodes are the distances len - s from the far end.
    pub far: WeightedRule,
}

/// Rule for ∫_0^len s^{kα-1} (len - s)^p g(s) ds with k ≥ 1, for integrands
/// g that are smooth in s^α near s = 0 (Mittag-Leffler type kernels). The
/// half next to s = 0 is integrated in w = s^α, where the weight becomes the
/// polynomial w^{k-1}/α; the other half carries the (len - s)^p weight.
pub fn kernel_rule(len: f64, k: usize, alpha: f64, p: f64, policy: &QuadraturePolicy) -> Result<KernelRule> {
    if !(len > 0.0) || !len.is_finite() {
        return Err(Error::Domain(format!("kernel interval length must be positive, got {len}")));
    }
    if k == 0 || !(alpha > 0.0) {
        return Err(Error::Domain(format!("kernel rule needs k >= 1 and alpha > 0, got k = {k}, alpha = {alpha}")));
    }
    let half = 0.5 * len;
    let smooth = policy.with_exponents(0.0, 0.0);
    let mut near = weighted_rule(0.0, half.powf(alpha), &smooth)?;
    for (x, w) in near.nodes.iter_mut().zip(near.weights.iter_mut()) {
        let s = x.powf(1.0 / alpha);
        *w *= x.powi(k as i32 - 1) / alpha * (len - s).powf(p);
        *x = s;
    }
    let mut far = weighted_rule(0.0, half, &policy.with_exponents(p, 0.0))?;
    for (x, w) in far.nodes.iter().zip(far.weights.iter_mut()) {
        *w *= (len - x).powf(k as f64 * alpha - 1.0);
    }
    Ok(KernelRule { near, far })
}

/// ∫_{t_lo}^{t_hi} f(s) ds/s. The integrand includes its own endpoint
/// singularities, which must match the declared endpoint exponents in
/// u = ln s.
pub fn log_integrate<T, F>(f: F, t_lo: f64, t_hi: f64, policy: &QuadraturePolicy) -> Result<T>
where
    T: Add<Output = T> + Mul<f64, Output = T>,
    F: Fn(f64) -> T,
{
    if !(t_lo > 0.0 && t_hi > t_lo) {
        return Err(Error::Domain(format!("log_integrate needs 0 < t_lo < t_hi, got ({t_lo}, {t_hi})")));
    }
    let (lo, hi) = (t_lo.ln(), t_hi.ln());
    let (p, q) = policy.endpoint_exponents;
    let rule = weighted_rule(lo, hi, policy)?;
    Ok(rule.integrate(|u| {
        let weight = (u - lo).powf(p) * (hi - u).powf(q);
        f(u.exp()) * (1.0 / weight)
    }))
}

/// ∫_r^t (ln t/s)^a (ln s/r)^b ds/s by quadrature.
pub fn log_beta_integral(a: f64, b: f64, t: f64, r: f64) -> Result<f64> {
    if !(a > -1.0 && b > -1.0) {
        return Err(Error::Domain(format!("exponents must exceed -1, got ({a}, {b})")));
    }
    if !(r > 0.0 && t > r) {
        return Err(Error::Domain(format!("need 0 < r < t, got r={r}, t={t}")));
    }
    let policy = QuadraturePolicy { nodes_per_panel: 8, panel_count: 1, endpoint_exponents: (b, a) };
    let rule = weighted_rule(r.ln(), t.ln(), &policy)?;
    Ok(rule.integrate(|_| 1.0))
}
