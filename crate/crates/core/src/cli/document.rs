//! JSON problem documents.

use std::sync::Arc;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::expr::{parse_rhs, ExprError, RhsExpression};
use crate::linear::{HistorySpec, LinearDelayProblem, VectorFn};
use crate::matrix::SquareMatrix;
use crate::nonlinear::{RhsFn, SemilinearProblem};
use crate::quadrature::QuadraturePolicy;
use crate::special::{rgamma, SeriesPolicy};

#[derive(Debug, Error)]
pub enum DocumentError {
    #[error("invalid problem document: {0}")]
    Schema(String),
    #[error("invalid expression in {field}: {source}")]
    Expression { field: String, source: ExprError },
    #[error(transparent)]
    Problem(#[from] crate::error::Error),
}

fn schema(msg: impl Into<String>) -> DocumentError {
    DocumentError::Schema(msg.into())
}

/// One expression for a scalar problem or one per component.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Sources {
    One(String),
    Many(Vec<String>),
}

impl Sources {
    fn parse(&self, dim: usize, state_dim: usize, field: &str) -> Result<Vec<RhsExpression>, DocumentError> {
        let list: Vec<&str> = match self {
            Sources::One(s) => vec![s.as_str()],
            Sources::Many(v) => v.iter().map(String::as_str).collect(),
        };
        if list.len() != dim {
            return Err(schema(format!("{field} needs {dim} expressions, got {}", list.len())));
        }
        list.iter()
            .enumerate()
            .map(|(i, s)| {
                parse_rhs(s, state_dim)
                    .map_err(|source| DocumentError::Expression { field: format!("{field}[{i}]"), source })
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params", rename_all = "lowercase", deny_unknown_fields)]
pub enum HistoryDoc {
    /// φ(t) = c (ln th)^(α-1), whose Hadamard derivative vanishes.
    Power {
        c: Vec<f64>,
    },
    Constant {
        value: Vec<f64>,
    },
    /// Functions of t only; the derivative is computed numerically.
    Expression {
        source: Sources,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum RhsDoc {
    Zero,
    Expression { source: Sources },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PolicyDoc {
    pub nodes_per_panel: usize,
    pub panel_count: usize,
    pub series_rel_tol: f64,
    pub series_max_terms: usize,
}

impl Default for PolicyDoc {
    fn default() -> Self {
        let q = QuadraturePolicy::default();
        let s = SeriesPolicy::default();
        Self {
            nodes_per_panel: q.nodes_per_panel,
            panel_count: q.panel_count,
            series_rel_tol: s.rel_tol,
            series_max_terms: s.max_terms,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemDocument {
    pub alpha: f64,
    pub h: f64,
    pub l: u32,
    #[serde(rename = "A0")]
    pub a0: Vec<f64>,
    #[serde(rename = "A1")]
    pub a1: Vec<f64>,
    pub a: Vec<f64>,
    #[serde(default)]
    pub gamma: f64,
    pub history: HistoryDoc,
    pub rhs: RhsDoc,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lipschitz: Option<f64>,
    /// L_2 with |f(t, y)| <= L_f |y| + L_2; sampled from f(t, 0) when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub affine_bound: Option<f64>,
    #[serde(default)]
    pub policies: PolicyDoc,
}

/// The problem a document describes.
pub enum Problem {
    Linear(LinearDelayProblem),
    Semilinear(SemilinearProblem),
}

impl ProblemDocument {
    pub fn from_json(text: &str) -> Result<Self, DocumentError> {
        serde_json::from_str(text).map_err(|e| schema(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).unwrap_or_default()
    }

    pub fn dim(&self) -> usize {
        self.a.len()
    }

    fn matrix(&self, data: &[f64], name: &str) -> Result<SquareMatrix, DocumentError> {
        let n = self.dim();
        if data.len() != n * n {
            return Err(schema(format!(
                "{name} must hold {} row-major entries for dimension {n}, got {}",
                n * n,
                data.len()
            )));
        }
        SquareMatrix::from_row_major(n, data).map_err(|e| schema(format!("{name}: {e}")))
    }

    fn history(&self) -> Result<HistorySpec, DocumentError> {
        let n = self.dim();
        let (alpha, h) = (self.alpha, self.h);
        let check_len = |v: &[f64], name: &str| {
            if v.len() != n {
                return Err(schema(format!("history {name} must have {n} entries, got {}", v.len())));
            }
            Ok(DVector::from_column_slice(v))
        };
        Ok(match &self.history {
            HistoryDoc::Power { c } => {
                let c = check_len(c, "c")?;
                let phi: VectorFn = Arc::new(move |t: f64| &c * (t * h).ln().powf(alpha - 1.0));
                let zero: VectorFn = Arc::new(move |_| DVector::zeros(n));
                HistorySpec::analytic(phi, zero).with_lower_exponent(alpha - 1.0)
            }
            HistoryDoc::Constant { value } => {
                let c = check_len(value, "value")?;
                let c2 = c.clone();
                let phi: VectorFn = Arc::new(move |_| c.clone());
                let d: VectorFn = Arc::new(move |t: f64| &c2 * ((t * h).ln().powf(-alpha) * rgamma(1.0 - alpha)));
                HistorySpec::analytic(phi, d)
            }
            HistoryDoc::Expression { source } => {
                let exprs = source.parse(n, 0, "history")?;
                let phi: VectorFn = Arc::new(move |t: f64| {
                    DVector::from_iterator(exprs.len(), exprs.iter().map(|e| e.eval_raw(t, &[])))
                });
                HistorySpec::numeric(phi)
            }
        })
    }

    fn rhs(&self) -> Result<Option<Vec<RhsExpression>>, DocumentError> {
        match &self.rhs {
            RhsDoc::Zero => Ok(None),
            RhsDoc::Expression { source } => Ok(Some(source.parse(self.dim(), self.dim(), "rhs")?)),
        }
    }

    /// The linear part: coefficients, history and the right-hand side when
    /// it does not depend on y.
    pub fn build(&self) -> Result<Problem, DocumentError> {
        let n = self.dim();
        if n == 0 {
            return Err(schema("a must not be empty"));
        }
        if !self.alpha.is_finite() || !self.h.is_finite() || !self.gamma.is_finite() {
            return Err(schema("alpha, h and gamma must be finite"));
        }
        if !(self.gamma >= 0.0 && self.gamma < self.alpha) {
            return Err(schema(format!("gamma must lie in [0, alpha), got {}", self.gamma)));
        }
        let a0 = self.matrix(&self.a0, "A0")?;
        let a1 = self.matrix(&self.a1, "A1")?;
        let history = self.history()?;
        let mut linear = LinearDelayProblem::new(
            self.alpha,
            self.h,
            a0,
            a1,
            DVector::from_column_slice(&self.a),
            history,
            None,
            self.l,
        )
        .map_err(|e| schema(e.to_string()))?;
        let p = &self.policies;
        linear.spec.quad = QuadraturePolicy::new(p.nodes_per_panel, p.panel_count, (0.0, 0.0))
            .map_err(|e| schema(format!("policies: {e}")))?;
        linear.spec.series =
            SeriesPolicy::new(p.series_rel_tol, p.series_max_terms).map_err(|e| schema(format!("policies: {e}")))?;
        let Some(exprs) = self.rhs()? else {
            return Ok(Problem::Linear(linear));
        };
        if exprs.iter().all(|e| e.is_zero()) {
            return Ok(Problem::Linear(linear));
        }
        let exprs = Arc::new(exprs);
        if !exprs.iter().any(|e| e.uses_state()) {
            let zeros = vec![0.0; n];
            let f: VectorFn =
                Arc::new(move |t: f64| DVector::from_iterator(n, exprs.iter().map(|e| e.eval_raw(t, &zeros))));
            linear.forcing = Some(f);
            return Ok(Problem::Linear(linear));
        }
        let Some(lipschitz) = self.lipschitz else {
            return Err(schema("a right-hand side depending on y needs the lipschitz field"));
        };
        let rhs: RhsFn = Arc::new(move |t: f64, y: &DVector<f64>| {
            DVector::from_iterator(n, exprs.iter().map(|e| e.eval_raw(t, y.as_slice())))
        });
        let affine = match self.affine_bound {
            Some(v) => v,
            None => sample_affine_bound(&rhs, n, linear.horizon_t()),
        };
        Ok(Problem::Semilinear(
            SemilinearProblem::new(linear, rhs, lipschitz, affine, self.gamma).map_err(|e| schema(e.to_string()))?,
        ))
    }

    /// Semilinear view used by the stability report; linear right-hand
    /// sides count as state-independent f.
    pub fn build_semilinear(&self) -> Result<SemilinearProblem, DocumentError> {
        let Some(lipschitz) = self.lipschitz else {
            return Err(schema("the lipschitz field is required"));
        };
        match self.build()? {
            Problem::Semilinear(p) => Ok(p),
            Problem::Linear(lin) => {
                let n = lin.dim();
                let rhs: RhsFn = match lin.forcing.clone() {
                    Some(f) => Arc::new(move |t, _| f(t)),
                    None => Arc::new(move |_, _| DVector::zeros(n)),
                };
                let affine = match self.affine_bound {
                    Some(v) => v,
                    None => sample_affine_bound(&rhs, n, lin.horizon_t()),
                };
                SemilinearProblem::new(lin, rhs, lipschitz, affine, self.gamma).map_err(|e| schema(e.to_string()))
            }
        }
    }
}

/// max |f(t, 0)| over 257 evenly spaced t in [1, T].
fn sample_affine_bound(rhs: &RhsFn, n: usize, t_max: f64) -> f64 {
    let zero = DVector::zeros(n);
    (0..=256).map(|i| 1.0 + (t_max - 1.0) * i as f64 / 256.0).map(|t| rhs(t, &zero).norm()).fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = r#"{
        "alpha": 0.6, "h": 1.5, "l": 2,
        "A0": [-0.5, 0.2, 0.1, -0.3], "A1": [0.2, 0.0, 0.1, 0.15],
        "a": [0.3, -0.2], "gamma": 0.1,
        "history": {"kind": "expression", "params": {"source": ["0.5 + 0.2*t", "cos(ln(t))"]}},
        "rhs": {"kind": "expression", "source": ["0.1*tanh(y2)", "0.1*sin(y1)"]},
        "lipschitz": 0.1
    }"#;

    #[test]
    fn parses_and_dispatches() {
        let doc = ProblemDocument::from_json(SAMPLE).unwrap();
        assert_eq!(doc.policies, PolicyDoc::default());
        assert!(matches!(doc.build().unwrap(), Problem::Semilinear(_)));
        let again = ProblemDocument::from_json(&doc.to_json()).unwrap();
        assert_eq!(again, doc);
    }

    #[test]
    fn state_free_rhs_is_linear() {
        let text = SAMPLE.replace(r#"["0.1*tanh(y2)", "0.1*sin(y1)"]"#, r#"["sin(t)", "0"]"#);
        let doc = ProblemDocument::from_json(&text).unwrap();
        match doc.build().unwrap() {
            Problem::Linear(p) => assert!(p.forcing.is_some()),
            Problem::Semilinear(_) => panic!("expected a linear problem"),
        }
    }

    #[test]
    fn schema_violations() {
        let bad = [
            SAMPLE.replace(r#""A0": [-0.5, 0.2, 0.1, -0.3]"#, r#""A0": [1, 2, 3]"#),
            SAMPLE.replace(r#""gamma": 0.1"#, r#""gamma": 0.9"#),
            SAMPLE.replace(r#""lipschitz": 0.1"#, r#""lipschitz": 0.1, "extra": 1"#),
            SAMPLE.replace("tanh(y2)", "tanh(y3)"),
            SAMPLE.replace(r#""kind": "expression", "params""#, r#""kind": "spline", "params""#),
            SAMPLE.replace(r#""lipschitz": 0.1"#, r#""affine_bound": 1.0"#),
        ];
        for text in bad {
            let doc = ProblemDocument::from_json(&text);
            assert!(doc.and_then(|d| d.build().map(|_| ())).is_err(), "{text}");
        }
    }
}
