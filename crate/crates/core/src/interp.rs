//! Interpolation helpers: matrix-valued Chebyshev tables and monotone
//! piecewise-cubic (PCHIP) interpolation of vector samples.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Chebyshev expansion of a matrix-valued function on [0, z_max].
#[derive(Debug, Clone)]
pub struct ChebyshevTable {
    z_max: f64,
    coefs: Vec<DMatrix<f64>>,
}

impl ChebyshevTable {
    /// Samples `f` at `n` first-kind Chebyshev points.
    pub fn from_fn<F>(z_max: f64, n: usize, mut f: F) -> Result<Self>
    where
        F: FnMut(f64) -> Result<DMatrix<f64>>,
    {
        if n == 0 {
            return Err(Error::Domain("Chebyshev table needs at least one node".into()));
        }
        let mut samples = Vec::with_capacity(n);
        for j in 0..n {
            let x = (PI * (j as f64 + 0.5) / n as f64).cos();
            samples.push(f(0.5 * z_max * (1.0 + x))?);
        }
        let (r, c) = (samples[0].nrows(), samples[0].ncols());
        let mut coefs = Vec::with_capacity(n);
        for k in 0..n {
            let mut ck = DMatrix::zeros(r, c);
            for (j, s) in samples.iter().enumerate() {
                ck += s * (PI * k as f64 * (j as f64 + 0.5) / n as f64).cos();
            }
            let scale = if k == 0 { 1.0 } else { 2.0 } / n as f64;
            coefs.push(ck * scale);
        }
        Ok(Self { z_max, coefs })
    }

    /// Doubles the node count from 16 until the trailing coefficients fall
    /// below `tol` relative to the largest one, or `max_nodes` is reached.
    /// Uses Chebyshev extrema, which nest under doubling, so every sample is
    /// computed once.
    pub fn adaptive<F>(z_max: f64, tol: f64, max_nodes: usize, mut f: F) -> Result<Self>
    where
        F: FnMut(f64) -> Result<DMatrix<f64>>,
    {
        if z_max == 0.0 {
            return Self::from_fn(0.0, 1, f);
        }
        let point = |j: usize, n: usize| 0.5 * z_max * (1.0 + (PI * j as f64 / n as f64).cos());
        let mut n = 16;
        let mut samples = (0..=n).map(|j| f(point(j, n))).collect::<Result<Vec<_>>>()?;
        loop {
            let table = Self::from_extrema(z_max, &samples);
            if table.tail_ratio() < tol || 2 * n > max_nodes {
                return Ok(table);
            }
            let mut refined = Vec::with_capacity(2 * n + 1);
            for (j, old) in samples.into_iter().enumerate() {
                if j > 0 {
                    refined.push(f(point(2 * j - 1, 2 * n))?);
                }
                refined.push(old);
            }
            samples = refined;
            n *= 2;
        }
    }

    /// Interpolant through samples at `cos(πj/n)`, `j = 0..=n`.
    fn from_extrema(z_max: f64, samples: &[DMatrix<f64>]) -> Self {
        let n = samples.len() - 1;
        let (r, c) = samples[0].shape();
        let mut coefs = Vec::with_capacity(n + 1);
        for k in 0..=n {
            let mut ck = DMatrix::zeros(r, c);
            for (j, s) in samples.iter().enumerate() {
                let end = if j == 0 || j == n { 0.5 } else { 1.0 };
                let w = end * (PI * (j * k % (2 * n)) as f64 / n as f64).cos();
                ck.zip_apply(s, |a, b| *a += w * b);
            }
            let end = if k == 0 || k == n { 0.5 } else { 1.0 };
            coefs.push(ck * (2.0 * end / n as f64));
        }
        Self { z_max, coefs }
    }

    fn tail_ratio(&self) -> f64 {
        let head = self.coefs.iter().map(|c| c.norm()).fold(0.0, f64::max);
        if head == 0.0 {
            return 0.0;
        }
        let tail = self.coefs.iter().rev().take(3).map(|c| c.norm()).fold(0.0, f64::max);
        tail / head
    }

    pub fn len(&self) -> usize {
        self.coefs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coefs.is_empty()
    }

    pub fn z_max(&self) -> f64 {
        self.z_max
    }

    /// Clenshaw evaluation; arguments are clamped to [0, z_max].
    pub fn eval(&self, z: f64) -> DMatrix<f64> {
        if self.z_max == 0.0 || self.coefs.len() == 1 {
            return self.coefs[0].clone();
        }
        let x = (2.0 * z.clamp(0.0, self.z_max) / self.z_max) - 1.0;
        let shape = self.coefs[0].shape();
        let mut b1 = DMatrix::zeros(shape.0, shape.1);
        let mut b2 = DMatrix::zeros(shape.0, shape.1);
        for c in self.coefs[1..].iter().rev() {
            // b2 <- 2x b1 - b2 + c, then swap so b1 holds the newest value
            b2.zip_apply(&b1, |a, b| *a = 2.0 * x * b - *a);
            b2 += c;
            std::mem::swap(&mut b1, &mut b2);
        }
        b2.zip_apply(&b1, |a, b| *a = x * b - *a);
        b2 += &self.coefs[0];
        b2
    }
}

/// Monotone piecewise-cubic Hermite interpolant (Fritsch-Carlson slopes),
/// applied componentwise to vector samples. Constant beyond the end points.
#[derive(Debug, Clone)]
pub struct Pchip {
    xs: Vec<f64>,
    ys: Vec<DVector<f64>>,
    ds: Vec<DVector<f64>>,
}

impl Pchip {
    pub fn new(xs: Vec<f64>, ys: Vec<DVector<f64>>) -> Result<Self> {
        if xs.len() != ys.len() || xs.is_empty() {
            return Err(Error::Dimension("PCHIP needs matching, non-empty abscissae and values".into()));
        }
        if xs.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Domain("PCHIP abscissae must be strictly increasing".into()));
        }
        let dim = ys[0].len();
        if ys.iter().any(|y| y.len() != dim) {
            return Err(Error::Dimension("PCHIP values must share a dimension".into()));
        }
        let n = xs.len();
        let mut ds = vec![DVector::zeros(dim); n];
        if n >= 2 {
            let h: Vec<f64> = xs.windows(2).map(|w| w[1] - w[0]).collect();
            let delta: Vec<DVector<f64>> = (0..n - 1).map(|i| (&ys[i + 1] - &ys[i]) / h[i]).collect();
            for c in 0..dim {
                let del: Vec<f64> = delta.iter().map(|d| d[c]).collect();
                let d = pchip_slopes(&h, &del);
                for i in 0..n {
                    ds[i][c] = d[i];
                }
            }
        }
        Ok(Self { xs, ys, ds })
    }

    pub fn eval(&self, x: f64) -> DVector<f64> {
        let n = self.xs.len();
        if n == 1 || x <= self.xs[0] {
            return self.ys[0].clone();
        }
        if x >= self.xs[n - 1] {
            return self.ys[n - 1].clone();
        }
        let i = self.xs.partition_point(|&v| v <= x) - 1;
        let h = self.xs[i + 1] - self.xs[i];
        let s = (x - self.xs[i]) / h;
        let h00 = (1.0 + 2.0 * s) * (1.0 - s) * (1.0 - s);
        let h10 = s * (1.0 - s) * (1.0 - s);
        let h01 = s * s * (3.0 - 2.0 * s);
        let h11 = s * s * (s - 1.0);
        &self.ys[i] * h00 + &self.ds[i] * (h10 * h) + &self.ys[i + 1] * h01 + &self.ds[i + 1] * (h11 * h)
    }
}

fn pchip_slopes(h: &[f64], delta: &[f64]) -> Vec<f64> {
    let n = h.len() + 1;
    if n == 2 {
        return vec![delta[0], delta[0]];
    }
    let mut d = vec![0.0; n];
    for k in 1..n - 1 {
        if delta[k - 1] * delta[k] > 0.0 {
            let w1 = 2.0 * h[k] + h[k - 1];
            let w2 = h[k] + 2.0 * h[k - 1];
            d[k] = (w1 + w2) / (w1 / delta[k - 1] + w2 / delta[k]);
        }
    }
    d[0] = end_slope(h[0], h[1], delta[0], delta[1]);
    d[n - 1] = end_slope(h[n - 2], h[n - 3], delta[n - 2], delta[n - 3]);
    d
}

fn end_slope(h0: f64, h1: f64, del0: f64, del1: f64) -> f64 {
    let d = ((2.0 * h0 + h1) * del0 - h0 * del1) / (h0 + h1);
    if d.signum() != del0.signum() {
        0.0
    } else if del0.signum() != del1.signum() && d.abs() > 3.0 * del0.abs() {
        3.0 * del0
    } else {
        d
    }
}
