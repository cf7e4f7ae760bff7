use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::Path;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde_json::{json, Value};

use super::document::{Problem, ProblemDocument, Sources};
use super::{CliError, EvalArgs, ReproduceArgs, SolveArgs, StabilityArgs};
use crate::delayed::{delay_index_log, norm_bound, pure_delay_ml, DelayedMLSpec, DelayedMl};
use crate::linear::{log_grid, solve_full, solve_homogeneous, HistorySpec, LinearDelayProblem, Trajectory, VectorFn};
use crate::matrix::SquareMatrix;
use crate::nonlinear::{contraction_constants, estimate_lipschitz, picard_solve, PicardOptions, StabilityReport};
use crate::oracle::{direct_solve, to_log_coordinates};

/// Rows within this distance (in ln t) of a breakpoint get a branch label.
const BREAKPOINT_BAND: f64 = 1e-9;

fn input(msg: impl Into<String>) -> CliError {
    CliError::Input(msg.into())
}

fn eval_err(e: impl std::fmt::Display) -> CliError {
    CliError::Eval(e.to_string())
}

/// Shortest decimal that reads back to the same value.
fn num(x: f64) -> String {
    format!("{x:?}")
}

fn json_num(x: f64) -> Value {
    if x.is_finite() {
        json!(x)
    } else {
        Value::Null
    }
}

fn parse_matrix(text: &str, name: &str) -> Result<SquareMatrix, CliError> {
    let rows: Vec<Vec<f64>> = serde_json::from_str(text).map_err(|e| input(format!("--{name}: {e}")))?;
    SquareMatrix::from_rows(&rows).map_err(|e| input(format!("--{name}: {e}")))
}

fn parse_range(text: &str) -> Result<(f64, f64), CliError> {
    let parts: Vec<&str> = text.split([',', ':']).collect();
    let [lo, hi] = parts.as_slice() else {
        return Err(input(format!("--t-range must look like lo,hi, got '{text}'")));
    };
    let lo: f64 = lo.trim().parse().map_err(|_| input(format!("bad range start '{lo}'")))?;
    let hi: f64 = hi.trim().parse().map_err(|_| input(format!("bad range end '{hi}'")))?;
    if !(lo > 0.0 && hi >= lo && hi.is_finite()) {
        return Err(input(format!("--t-range needs 0 < lo <= hi, got {lo},{hi}")));
    }
    Ok((lo, hi))
}

/// Index j of the breakpoint s h^j when ln t lies within the band around it.
fn breakpoint_label(log_ratio: f64, lag: f64) -> String {
    let j = (log_ratio / lag).round();
    if (log_ratio - j * lag).abs() <= BREAKPOINT_BAND * (1.0 + 1e-6) {
        delay_index_log(log_ratio, lag).get().to_string()
    } else {
        String::new()
    }
}

fn write_out(out: &mut dyn Write, text: &str) -> Result<(), CliError> {
    out.write_all(text.as_bytes()).map_err(eval_err)
}

fn write_file(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|e| eval_err(format!("cannot write {}: {e}", path.display())))
}

fn matrix_cells(m: &DMatrix<f64>) -> impl Iterator<Item = f64> + '_ {
    (0..m.nrows()).flat_map(move |i| (0..m.ncols()).map(move |j| m[(i, j)]))
}

pub fn eval(args: &EvalArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let a1 = parse_matrix(&args.a1, "A1")?;
    let n = a1.dim();
    let a0 = match &args.a0 {
        Some(text) => parse_matrix(text, "A0")?,
        None => SquareMatrix::zeros(n),
    };
    let (lo, hi) = parse_range(&args.t_range)?;
    if args.points < 1 {
        return Err(input("--points must be at least 1"));
    }
    if !(args.s > 0.0) || !args.s.is_finite() {
        return Err(input("--s must be positive"));
    }
    if args.pure_delay && a0.as_matrix().iter().any(|v| *v != 0.0) {
        return Err(input("--pure-delay needs A0 = 0"));
    }
    let spec = DelayedMLSpec::new(args.alpha, args.beta.unwrap_or(args.alpha), args.h, a0, a1)
        .map_err(|e| input(e.to_string()))?;
    let s = args.s;
    let lag = spec.lag();
    let evaluator = if args.pure_delay {
        None
    } else {
        Some(DelayedMl::new(spec.clone(), (hi / s).ln().max(lag)).map_err(eval_err)?)
    };

    let mut csv = String::from("t");
    for i in 1..=n {
        for j in 1..=n {
            let _ = write!(csv, ",e{i}{j}");
        }
    }
    if args.bound {
        csv.push_str(",bound");
    }
    csv.push_str(",branch\n");
    for k in 0..args.points {
        let t = if args.points == 1 { lo } else { lo + (hi - lo) * k as f64 / (args.points - 1) as f64 };
        let value = match &evaluator {
            Some(ev) => ev.eval(t, s),
            None => pure_delay_ml(&spec, (t / s).ln() - lag),
        }
        .map_err(|e| eval_err(format!("t = {t}: {e}")))?;
        csv.push_str(&num(t));
        for v in matrix_cells(value.as_matrix()) {
            let _ = write!(csv, ",{}", num(v));
        }
        if args.bound {
            let b = norm_bound(&spec, t, s).map_err(eval_err)?;
            let _ = write!(csv, ",{}", num(b));
        }
        let _ = writeln!(csv, ",{}", breakpoint_label((t / s).ln(), lag));
    }
    write_out(out, &csv)
}

fn read_document(path: &Path) -> Result<ProblemDocument, CliError> {
    let text = fs::read_to_string(path).map_err(|e| input(format!("cannot read {}: {e}", path.display())))?;
    Ok(ProblemDocument::from_json(&text)?)
}

fn trajectory_csv(traj: &Trajectory, lag: f64) -> String {
    let n = traj.values.first().map_or(0, |v| v.len());
    let mut csv = String::from("t");
    for i in 1..=n {
        let _ = write!(csv, ",y{i}");
    }
    csv.push_str(",branch\n");
    for (t, y) in traj.grid.iter().zip(&traj.values) {
        csv.push_str(&num(*t));
        for v in y.iter() {
            let _ = write!(csv, ",{}", num(*v));
        }
        let _ = writeln!(csv, ",{}", breakpoint_label(t.ln(), lag));
    }
    csv
}

fn stability_json(r: &StabilityReport) -> Value {
    json!({
        "M1": json_num(r.m1),
        "M2": json_num(r.m2),
        "r": json_num(r.r),
        "V": r.v.map_or(Value::Null, json_num),
        "contraction": r.contraction,
    })
}

fn pretty(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).unwrap_or_default();
    s.push('\n');
    s
}

pub fn solve(args: &SolveArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<(), CliError> {
    let doc = read_document(&args.problem)?;
    let problem = doc.build()?;
    let grid = log_grid(doc.h, doc.l, args.grid_per_interval, false).map_err(|e| input(e.to_string()))?;
    if args.verify && args.verify_steps < 8 {
        return Err(input("--verify-steps must be at least 8"));
    }
    let mut report = serde_json::Map::new();
    let (traj, lsp) = match &problem {
        Problem::Linear(p) => {
            let traj = solve_full(p, &grid).map_err(eval_err)?;
            (traj, if args.verify { Some(to_log_coordinates(p).map_err(eval_err)?) } else { None })
        }
        Problem::Semilinear(p) => {
            let constants = contraction_constants(p).map_err(eval_err)?;
            if !constants.contraction {
                let _ = writeln!(
                    err,
                    "warning: M1 = {} >= 1, the contraction condition fails; attempting Picard iteration anyway",
                    num(constants.m1)
                );
            }
            let radius = if constants.r.is_finite() { constants.r } else { 10.0 };
            let estimate = estimate_lipschitz(p, radius, 1000, 0);
            if estimate > p.lipschitz * (1.0 + 1e-9) {
                let _ = writeln!(
                    err,
                    "warning: sampled Lipschitz quotient {} exceeds the supplied constant {}",
                    num(estimate),
                    num(p.lipschitz)
                );
            }
            let opts = PicardOptions { tol: args.tol, max_iter: args.max_iter };
            let sol = picard_solve(p, &grid, opts).map_err(eval_err)?;
            report.insert("iterations".into(), json!(sol.iterations()));
            report.insert("updates".into(), json!(sol.updates.iter().map(|u| json_num(*u)).collect::<Vec<_>>()));
            report.insert("stability".into(), stability_json(&constants));
            let mut traj = sol.trajectory;
            traj.gamma_weight = p.gamma_weight;
            (traj, if args.verify { Some(to_log_coordinates(p).map_err(eval_err)?) } else { None })
        }
    };
    if traj.values.iter().any(|v| v.iter().any(|x| !x.is_finite())) {
        return Err(eval_err("the solution contains non-finite values; check the history and right-hand side"));
    }
    let csv = trajectory_csv(&traj, doc.h.ln());
    match &args.output {
        Some(path) => write_file(path, &csv)?,
        None => write_out(out, &csv)?,
    }

    let mut failure = None;
    if let Some(lsp) = lsp {
        let reference = direct_solve(&lsp, args.verify_steps).and_then(|d| d.sample(&grid)).map_err(eval_err)?;
        let max_abs = traj.values.iter().zip(&reference.values).map(|(a, b)| (a - b).amax()).fold(0.0, f64::max);
        let weighted =
            traj.weighted_distance(&Trajectory { gamma_weight: doc.gamma, ..reference }).map_err(eval_err)?;
        report.insert("max_abs_err".into(), json_num(max_abs));
        report.insert("weighted_err".into(), json_num(weighted));
        report.insert("grid".into(), json!(grid));
        if !(max_abs <= args.verify_tol) {
            failure = Some(CliError::Verify(format!(
                "verification error {} exceeds --verify-tol {}",
                num(max_abs),
                num(args.verify_tol)
            )));
        }
    }
    if !report.is_empty() {
        let text = pretty(&Value::Object(report));
        match &args.report {
            Some(path) => write_file(path, &text)?,
            None => {
                let _ = err.write_all(text.as_bytes());
            }
        }
    }
    failure.map_or(Ok(()), Err)
}

pub fn stability(args: &StabilityArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let doc = read_document(&args.problem)?;
    let problem = doc.build_semilinear()?;
    let constants = contraction_constants(&problem).map_err(eval_err)?;
    write_out(out, &pretty(&stability_json(&constants)))
}

const EXAMPLE_ALPHA_TENTHS: i32 = 3;
const EXAMPLE_H: f64 = 1.2;
const EXAMPLE_L: u32 = 4;

fn example_a1() -> SquareMatrix {
    SquareMatrix::from_rows(&[vec![2.0, 1.0], vec![3.0, 5.0]]).unwrap_or_else(|_| SquareMatrix::zeros(2))
}

fn matrix_rows(m: &DMatrix<f64>) -> Value {
    json!((0..m.nrows()).map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect::<Vec<_>>()).collect::<Vec<_>>())
}

/// Branch table of E^{A1}_{h,α,α}(ln t): on h^(k-1) < t <= h^k the terms
/// j = 0..=k+1 contribute A1^j (ln t - (j-1) ln h)^(jα+α-1) / Γ(jα+α).
fn branch_table() -> Value {
    let a1 = example_a1();
    let tenth = |k: i32| k as f64 / 10.0;
    let mut power = DMatrix::identity(2, 2);
    let mut terms = Vec::new();
    for j in 0..=EXAMPLE_L as i32 {
        let e = (j + 1) * EXAMPLE_ALPHA_TENTHS - 10;
        let g = (j + 1) * EXAMPLE_ALPHA_TENTHS;
        terms.push(json!({
            "coefficient": if j == 0 { "I".to_string() } else if j == 1 { "A1".to_string() } else { format!("A1^{j}") },
            "matrix": matrix_rows(&power),
            "base": format!("ln t - ({}) ln 1.2", j - 1),
            "shift": j - 1,
            "exponent": tenth(e),
            "gamma_argument": tenth(g),
            "denominator": format!("Gamma({})", tenth(g)),
        }));
        power = &power * a1.as_matrix();
    }
    let mut branches = vec![json!({"lower": "-inf", "upper": "1/1.2", "terms": []})];
    for k in 0..=EXAMPLE_L as i32 {
        let bound = |p: i32| match p {
            -1 => "1/1.2".to_string(),
            0 => "1".to_string(),
            1 => "1.2".to_string(),
            p => format!("1.2^{p}"),
        };
        branches.push(json!({
            "lower": bound(k - 1),
            "upper": bound(k),
            "terms": terms[..k as usize + 1].to_vec(),
        }));
    }
    json!(branches)
}

pub fn reproduce_example(args: &ReproduceArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let alpha = EXAMPLE_ALPHA_TENTHS as f64 / 10.0;
    let a1 = example_a1();
    let t_max = EXAMPLE_H.powi(EXAMPLE_L as i32);
    for &t in &args.t_points {
        if !(t > 1.0 / EXAMPLE_H && t <= t_max) {
            return Err(input(format!("t-points must lie in (1/1.2, 1.2^4], got {t}")));
        }
    }
    let mut ts = args.t_points.clone();
    ts.sort_by(f64::total_cmp);
    ts.dedup();
    let phi = Sources::Many(args.phi.clone());
    let exprs = match phi {
        Sources::Many(v) if v.len() == 2 => v
            .iter()
            .map(|s| super::parse_rhs(s, 0).map_err(|e| input(format!("--phi: {e}"))))
            .collect::<Result<Vec<_>, _>>()?,
        _ => return Err(input("--phi needs two expressions in t")),
    };
    let phi_fn: VectorFn = Arc::new(move |t: f64| DVector::from_iterator(2, exprs.iter().map(|e| e.eval_raw(t, &[]))));
    let problem = LinearDelayProblem::new(
        alpha,
        EXAMPLE_H,
        SquareMatrix::zeros(2),
        a1.clone(),
        DVector::from_vec(vec![1.0, 2.0]),
        HistorySpec::numeric(phi_fn),
        None,
        EXAMPLE_L,
    )
    .map_err(eval_err)?;
    let spec = problem.spec.clone();
    let solution = solve_homogeneous(&problem, &ts).map_err(eval_err)?;

    let mut samples = Vec::new();
    let mut csv = String::from("t,E11,E12,E21,E22,y1,y2\n");
    for (t, y) in ts.iter().zip(&solution.values) {
        let e = pure_delay_ml(&spec, t.ln()).map_err(eval_err)?;
        if y.iter().chain(e.as_matrix().iter()).any(|v| !v.is_finite()) {
            return Err(eval_err(format!("non-finite value at t = {t}")));
        }
        samples.push(json!({"t": t, "E": matrix_rows(e.as_matrix()), "y": y.iter().copied().collect::<Vec<_>>()}));
        csv.push_str(&num(*t));
        for v in matrix_cells(e.as_matrix()).chain(y.iter().copied()) {
            let _ = write!(csv, ",{}", num(v));
        }
        csv.push('\n');
    }
    let doc = json!({
        "problem": {
            "alpha": alpha,
            "h": EXAMPLE_H,
            "l": EXAMPLE_L,
            "T": t_max,
            "A0": [[0.0, 0.0], [0.0, 0.0]],
            "A1": matrix_rows(a1.as_matrix()),
            "a": [1.0, 2.0],
            "phi": args.phi,
        },
        "function": "E^{A1}_{h,0.3,0.3}(ln t)",
        "variable": "t",
        "note": "branch intervals are stated in t",
        "branches": branch_table(),
        "samples": samples,
    });
    if let Some(path) = &args.csv {
        write_file(path, &csv)?;
    }
    write_out(out, &pretty(&doc))
}
