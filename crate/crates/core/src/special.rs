//! Gamma, beta and Mittag-Leffler evaluation.
//!
//! The gamma function uses the Lanczos approximation (g = 7, nine
//! coefficients) with the reflection formula below 1/2. Mittag-Leffler
//! functions are summed directly from their power series; there is no
//! scaling-and-squaring or Schur-Parlett acceleration, so arguments with a
//! very large `|A| x^alpha` need many terms and lose accuracy to cancellation.

use std::f64::consts::PI;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::matrix::SquareMatrix;

const LANCZOS_G: f64 = 7.0;
const LANCZOS_COEF: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_59,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];

/// Largest argument for which gamma is finite in double precision.
const GAMMA_MAX_ARG: f64 = 171.62;

fn lanczos_sum(x: f64) -> f64 {
    // x here is the shifted argument (z - 1)
    LANCZOS_COEF[1..].iter().enumerate().fold(LANCZOS_COEF[0], |acc, (i, c)| acc + c / (x + (i + 1) as f64))
}

fn is_nonpositive_integer(x: f64) -> bool {
    x <= 0.0 && x == x.floor()
}

/// The gamma function.
pub fn gamma(x: f64) -> Result<f64> {
    if x.is_nan() {
        return Err(Error::Domain("gamma of NaN".into()));
    }
    if is_nonpositive_integer(x) {
        return Err(Error::Pole(x));
    }
    if !(-GAMMA_MAX_ARG..=GAMMA_MAX_ARG).contains(&x) {
        return Err(Error::Overflow(x));
    }
    if x == x.floor() && x <= 171.0 {
        // exact factorial for positive integers
        return Ok((1..x as u32).fold(1.0, |acc, k| acc * k as f64));
    }
    if x < 0.5 {
        let s = (PI * x).sin();
        return Ok(PI / (s * gamma(1.0 - x)?));
    }
    let z = x - 1.0;
    let t = z + LANCZOS_G + 0.5;
    // split the power so that t^(z+1/2) does not overflow before e^-t is applied
    let half = t.powf(0.5 * (z + 0.5));
    Ok((2.0 * PI).sqrt() * half * (half * (-t).exp()) * lanczos_sum(z))
}

/// Natural logarithm of |gamma(x)|.
pub fn ln_gamma(x: f64) -> Result<f64> {
    if x.is_nan() {
        return Err(Error::Domain("ln_gamma of NaN".into()));
    }
    if is_nonpositive_integer(x) {
        return Err(Error::Pole(x));
    }
    if x < 0.5 {
        let s = (PI * x).sin().abs();
        return Ok(PI.ln() - s.ln() - ln_gamma(1.0 - x)?);
    }
    let z = x - 1.0;
    let t = z + LANCZOS_G + 0.5;
    Ok(0.5 * (2.0 * PI).ln() + (z + 0.5) * t.ln() - t + lanczos_sum(z).ln())
}

/// Reciprocal gamma, an entire function: zero at the poles of gamma.
pub fn rgamma(x: f64) -> f64 {
    if is_nonpositive_integer(x) {
        return 0.0;
    }
    if x > GAMMA_MAX_ARG {
        return match ln_gamma(x) {
            Ok(l) => (-l).exp(),
            Err(_) => 0.0,
        };
    }
    match gamma(x) {
        Ok(g) => 1.0 / g,
        Err(_) => 0.0,
    }
}

/// The beta function B(a, b) = Γ(a)Γ(b)/Γ(a+b) for a, b > 0.
pub fn beta(a: f64, b: f64) -> Result<f64> {
    if !(a > 0.0 && b > 0.0) {
        return Err(Error::Domain(format!("beta requires a, b > 0, got ({a}, {b})")));
    }
    if a + b < GAMMA_MAX_ARG {
        return Ok(gamma(a)? * gamma(b)? / gamma(a + b)?);
    }
    Ok((ln_gamma(a)? + ln_gamma(b)? - ln_gamma(a + b)?).exp())
}

/// Truncation controls for power series.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesPolicy {
    pub rel_tol: f64,
    pub max_terms: usize,
}

impl Default for SeriesPolicy {
    fn default() -> Self {
        Self { rel_tol: 1e-14, max_terms: 2000 }
    }
}

impl SeriesPolicy {
    pub fn new(rel_tol: f64, max_terms: usize) -> Result<Self> {
        let p = Self { rel_tol, max_terms };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rel_tol > 0.0) || self.max_terms < 1 {
            return Err(Error::Domain("series policy needs rel_tol > 0 and max_terms >= 1".into()));
        }
        Ok(())
    }
}

/// A truncated series value together with the number of terms summed.
#[derive(Debug, Clone, PartialEq)]
pub struct SeriesSum<T> {
    pub value: T,
    pub terms: usize,
}

/// Ratio Γ((k-1)α+β) / Γ(kα+β), computed in log space.
pub(crate) fn gamma_step(alpha: f64, beta: f64, k: usize) -> f64 {
    let prev = (k - 1) as f64 * alpha + beta;
    let next = k as f64 * alpha + beta;
    match (ln_gamma(prev), ln_gamma(next)) {
        (Ok(a), Ok(b)) => {
            let sign = gamma_sign(prev) * gamma_sign(next);
            sign * (a - b).exp()
        }
        _ => rgamma(next) / rgamma(prev),
    }
}

fn gamma_sign(x: f64) -> f64 {
    if x > 0.0 || (x.floor() as i64) % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Σ_k z^k / Γ(kα+β).
pub fn ml_scalar(alpha: f64, beta: f64, z: f64, policy: &SeriesPolicy) -> Result<SeriesSum<f64>> {
    check_params(alpha, beta)?;
    if !z.is_finite() {
        return Err(Error::Domain("Mittag-Leffler argument must be finite".into()));
    }
    let mut term = rgamma(beta);
    let mut sum = term;
    for k in 1..policy.max_terms {
        term *= z * gamma_step(alpha, beta, k);
        sum += term;
        if term == 0.0 || (term.abs() < policy.rel_tol * sum.abs() && k as f64 * alpha + beta > z.abs()) {
            return Ok(SeriesSum { value: sum, terms: k + 1 });
        }
    }
    if policy.max_terms == 1 && z == 0.0 {
        return Ok(SeriesSum { value: sum, terms: 1 });
    }
    Err(Error::NonConvergence { max_terms: policy.max_terms })
}

fn check_params(alpha: f64, beta: f64) -> Result<()> {
    if !(alpha > 0.0 && beta > 0.0) || !alpha.is_finite() || !beta.is_finite() {
        return Err(Error::Domain(format!(
            "Mittag-Leffler parameters must be positive, got alpha={alpha}, beta={beta}"
        )));
    }
    Ok(())
}

/// Σ_k A^k z^k / Γ(kα+β) for a matrix A and a scalar z (z plays the role of x^α).
pub(crate) fn ml_series(
    alpha: f64,
    beta: f64,
    a: &DMatrix<f64>,
    z: f64,
    policy: &SeriesPolicy,
) -> Result<SeriesSum<DMatrix<f64>>> {
    let n = a.nrows();
    let scale = a.norm() * z.abs();
    let mut term = DMatrix::<f64>::identity(n, n) * rgamma(beta);
    let mut next = DMatrix::<f64>::zeros(n, n);
    let mut sum = term.clone();
    for k in 1..policy.max_terms {
        next.gemm(z * gamma_step(alpha, beta, k), &term, a, 0.0);
        std::mem::swap(&mut term, &mut next);
        sum += &term;
        let tn = term.norm();
        if tn == 0.0 || (tn < policy.rel_tol * sum.norm() && k as f64 * alpha + beta > scale) {
            return Ok(SeriesSum { value: sum, terms: k + 1 });
        }
    }
    if policy.max_terms == 1 && scale == 0.0 {
        return Ok(SeriesSum { value: sum, terms: 1 });
    }
    Err(Error::NonConvergence { max_terms: policy.max_terms })
}

/// E_{α,β}(A; x) = Σ_k A^k x^{αk} / Γ(kα+β), without the x^{β-1} prefactor.
pub fn ml_matrix(alpha: f64, beta: f64, a: &SquareMatrix, x: f64, policy: &SeriesPolicy) -> Result<SquareMatrix> {
    check_params(alpha, beta)?;
    if !(x >= 0.0) || !x.is_finite() {
        return Err(Error::Domain(format!("matrix Mittag-Leffler needs finite x >= 0, got {x}")));
    }
    let s = ml_series(alpha, beta, a, x.powf(alpha), policy)?;
    SquareMatrix::new(s.value)
}

/// e_{α,β}(A; x) = x^{β-1} E_{α,β}(A; x).
pub fn e_ml_matrix(alpha: f64, beta: f64, a: &SquareMatrix, x: f64, policy: &SeriesPolicy) -> Result<SquareMatrix> {
    check_params(alpha, beta)?;
    if x == 0.0 && beta < 1.0 {
        return Err(Error::SingularPoint(format!("x^(beta-1) is unbounded at x = 0 for beta = {beta}")));
    }
    let e = ml_matrix(alpha, beta, a, x, policy)?;
    let pre = if beta == 1.0 { 1.0 } else { x.powf(beta - 1.0) };
    SquareMatrix::new(e.into_inner() * pre)
}
