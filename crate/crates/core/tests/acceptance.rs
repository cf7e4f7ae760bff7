use std::f64::consts::PI;
use std::io::Write as _;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::Arc;
use std::time::{Duration, Instant};

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value;

use hdml::cli::{self, parse_rhs};
use hdml::delayed::{
    delayed_ml, norm_bound, pure_delay_ml, y_k_commuting, y_k_general, DelayedMLSpec, DelayedMl, Path,
};
use hdml::linear::{
    log_grid, solve_forced_zero_ic, solve_full, solve_homogeneous, HistorySpec, LinearDelayProblem, Trajectory,
    VectorFn,
};
use hdml::nonlinear::{
    contraction_constants, picard_solve, verify_ulam_hyers, PicardOptions, RhsFn, SemilinearProblem,
};
use hdml::oracle::{differintegral_log, direct_solve, to_log_coordinates};
use hdml::quadrature::{log_beta_integral, QuadraturePolicy};
use hdml::special::{beta, e_ml_matrix, gamma, ml_scalar, SeriesPolicy};
use hdml::SquareMatrix;

type Outcome = Result<String, String>;
type Criterion = fn() -> Outcome;
type Solver = fn(&LinearDelayProblem, &[f64]) -> hdml::Result<Trajectory>;

fn rel(got: f64, want: f64) -> f64 {
    (got - want).abs() / want.abs().max(f64::MIN_POSITIVE)
}

fn rel_matrix(got: &DMatrix<f64>, want: &DMatrix<f64>) -> f64 {
    (got - want).norm() / want.norm().max(1e-300)
}

fn within(elapsed: Duration, limit: Duration, detail: String) -> Outcome {
    if elapsed < limit {
        Ok(format!("{detail}, {:.2}s", elapsed.as_secs_f64()))
    } else {
        Err(format!("{detail}, {:.2}s exceeds {:.0}s", elapsed.as_secs_f64(), limit.as_secs_f64()))
    }
}

fn random_matrix(rng: &mut ChaCha8Rng, n: usize, scale: f64) -> SquareMatrix {
    let data: Vec<f64> = (0..n * n).map(|_| rng.gen_range(-scale..scale)).collect();
    SquareMatrix::from_row_major(n, &data).unwrap()
}

fn mat(rows: &[[f64; 2]; 2]) -> SquareMatrix {
    SquareMatrix::from_rows(&[rows[0].to_vec(), rows[1].to_vec()]).unwrap()
}

fn special_function_floor() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let p = SeriesPolicy::default();
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let x = loop {
            let x: f64 = rng.gen_range(-8.0..20.0);
            if (x - x.round()).abs() > 0.05 {
                break x;
            }
        };
        worst = worst.max(rel(gamma(x + 1.0).unwrap(), x * gamma(x).unwrap()));
        let reflected = gamma(x).unwrap() * gamma(1.0 - x).unwrap();
        worst = worst.max(rel(reflected, PI / (PI * x).sin()));
    }
    for _ in 0..200 {
        let z: f64 = rng.gen_range(-1.0..8.0);
        worst = worst.max(rel(ml_scalar(1.0, 1.0, z, &p).unwrap().value, z.exp()));
        let w: f64 = rng.gen_range(0.0..5.0);
        worst = worst.max(rel(ml_scalar(2.0, 1.0, w * w, &p).unwrap().value, w.cosh()));
    }
    let detail = format!("worst relative error {worst:.2e}");
    if worst > 1e-12 {
        return Err(detail);
    }
    within(start.elapsed(), Duration::from_secs(1), detail)
}

fn beta_integral_identity() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst: f64 = 0.0;
    for _ in 0..200 {
        let a = rng.gen_range(-0.95..3.0);
        let b = rng.gen_range(-0.95..3.0);
        let r = rng.gen_range(0.5..3.0);
        let t = r * rng.gen_range(1.01f64..20.0);
        let closed = (t / r).ln().powf(a + b + 1.0) * beta(a + 1.0, b + 1.0).unwrap();
        worst = worst.max(rel(log_beta_integral(a, b, t, r).unwrap(), closed));
    }
    let detail = format!("worst relative error {worst:.2e}");
    if worst > 1e-8 {
        return Err(detail);
    }
    within(start.elapsed(), Duration::from_secs(10), detail)
}

/// Σ_k e^{A0 x_k} A1^k x_k^k / k! with x_k = ln(t/s) - k ln h.
fn delayed_exponential(a0: &DMatrix<f64>, a1: &DMatrix<f64>, h: f64, t: f64, s: f64) -> DMatrix<f64> {
    let n = a0.nrows();
    let mut sum = DMatrix::zeros(n, n);
    let mut k = 0;
    loop {
        let x = (t / s).ln() - k as f64 * h.ln();
        if x <= 0.0 {
            break;
        }
        let coef = x.powi(k) / gamma(k as f64 + 1.0).unwrap();
        sum += (a0 * x).exp() * a1.pow(k as u32) * coef;
        k += 1;
    }
    sum
}

fn lemma_reductions() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let (mut no_delay, mut pure, mut classical): (f64, f64, f64) = (0.0, 0.0, 0.0);
    for _ in 0..10 {
        let alpha = rng.gen_range(0.2..0.95);
        let beta = rng.gen_range(0.3..1.8);
        let h = rng.gen_range(1.1..2.0);
        let a0 = random_matrix(&mut rng, 2, 1.0);
        let spec = DelayedMLSpec::new(alpha, beta, h, a0.clone(), SquareMatrix::zeros(2)).unwrap();
        let s = rng.gen_range(1.0..2.0);
        let tabulated = DelayedMl::with_path(spec.clone(), 5.0 * h.ln(), Path::Tabulated).unwrap();
        for k in 0..5 {
            let t = s * h.powf(k as f64 + rng.gen_range(0.1..0.9));
            let want = e_ml_matrix(alpha, beta, &a0, (t / s).ln(), &spec.series).unwrap();
            for got in [delayed_ml(&spec, t, s).unwrap(), tabulated.eval(t, s).unwrap()] {
                no_delay = no_delay.max(rel_matrix(got.as_matrix(), want.as_matrix()));
            }
        }

        let a1 = random_matrix(&mut rng, 2, 1.5);
        let spec = DelayedMLSpec::new(alpha, beta, h, SquareMatrix::zeros(2), a1).unwrap();
        for k in 0..5 {
            let t = h.powf(k as f64 + rng.gen_range(0.1..0.9));
            let got = delayed_ml(&spec, t, 1.0).unwrap();
            let want = pure_delay_ml(&spec, t.ln() - h.ln()).unwrap();
            pure = pure.max(rel_matrix(got.as_matrix(), want.as_matrix()));
        }

        let base = random_matrix(&mut rng, 2, 0.6).into_inner();
        let a0 = &base * 0.7 + DMatrix::identity(2, 2) * rng.gen_range(-0.5..0.5);
        let a1 = &base * &base * rng.gen_range(-1.0..1.0) + DMatrix::identity(2, 2) * rng.gen_range(-0.8..0.8);
        let spec = DelayedMLSpec::new(
            1.0,
            1.0,
            h,
            SquareMatrix::new(a0.clone()).unwrap(),
            SquareMatrix::new(a1.clone()).unwrap(),
        )
        .unwrap();
        for k in 0..5 {
            let t = s * h.powf(k as f64 + rng.gen_range(0.1..0.9));
            let got = delayed_ml(&spec, t, s).unwrap();
            let want = delayed_exponential(&a0, &a1, h, t, s);
            classical = classical.max(rel_matrix(got.as_matrix(), &want));
        }
    }
    let detail = format!("A1=0 {no_delay:.2e}, A0=0 {pure:.2e}, alpha=beta=1 {classical:.2e}");
    if no_delay > 1e-10 || pure > 1e-10 || classical > 1e-8 {
        return Err(detail);
    }
    within(start.elapsed(), Duration::from_secs(30), detail)
}

fn commuting_equivalence() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let m = random_matrix(&mut rng, 2, 1.0).into_inner();
        let id = DMatrix::identity(2, 2);
        let a0 = &id * rng.gen_range(-0.5..0.5) + &m * rng.gen_range(-1.0..1.0);
        let a1 = &id * rng.gen_range(-0.5..0.5) + &m * rng.gen_range(-1.0..1.0) + &m * &m * rng.gen_range(-0.5..0.5);
        let alpha = rng.gen_range(0.2..0.95);
        let beta = rng.gen_range(0.3..1.5);
        let h = rng.gen_range(1.1..2.0);
        let spec =
            DelayedMLSpec::new(alpha, beta, h, SquareMatrix::new(a0).unwrap(), SquareMatrix::new(a1).unwrap()).unwrap();
        let s = rng.gen_range(0.8..1.5);
        for k in 0..=3 {
            let t = s * h.powf(k as f64 + rng.gen_range(0.1..0.9));
            let general = y_k_general(&spec, k, t, s).unwrap();
            let closed = y_k_commuting(&spec, k, t, s).unwrap();
            worst = worst.max(rel_matrix(general.as_matrix(), closed.as_matrix()));
        }
    }
    let detail = format!("worst relative error {worst:.2e}");
    if worst > 1e-6 {
        return Err(detail);
    }
    within(start.elapsed(), Duration::from_secs(120), detail)
}

fn flatten(m: &DMatrix<f64>) -> DVector<f64> {
    DVector::from_iterator(m.len(), m.iter().copied())
}

fn derivative_residual(kernel: &DelayedMl, x: f64, quad: &QuadraturePolicy) -> f64 {
    let spec = kernel.spec();
    let lag = spec.lag();
    let y = |xi: f64| flatten(&kernel.eval_log(xi).unwrap());
    let breaks: Vec<f64> = (1..8).map(|k| k as f64 * lag).collect();
    let lhs = differintegral_log(&y, spec.alpha, x, quad, &breaks).unwrap();
    let n = spec.dim();
    let y_now = kernel.eval_log(x).unwrap();
    let y_lag = kernel.eval_log(x - lag).unwrap();
    let source =
        DMatrix::identity(n, n) * (x.powf(spec.beta - spec.alpha - 1.0) / gamma(spec.beta - spec.alpha).unwrap());
    let rhs = source + spec.a0.as_matrix() * &y_now + spec.a1.as_matrix() * &y_lag;
    (lhs - flatten(&rhs)).norm()
}

fn derivative_identity() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let coarse = QuadraturePolicy::new(4, 1, (0.0, 0.0)).unwrap();
    let fine = coarse.refined();
    let mut worst_fine: f64 = 0.0;
    let mut notes = Vec::new();
    for _ in 0..3 {
        let alpha = rng.gen_range(0.3..0.8);
        let beta = alpha + rng.gen_range(0.2..0.9);
        let h = rng.gen_range(1.3..2.0);
        let spec = DelayedMLSpec::new(alpha, beta, h, random_matrix(&mut rng, 2, 0.8), random_matrix(&mut rng, 2, 0.8))
            .unwrap();
        let lag = spec.lag();
        let kernel = DelayedMl::new(spec, 4.0 * lag).unwrap();
        let (mut r_coarse, mut r_fine): (f64, f64) = (0.0, 0.0);
        for frac in [0.5, 1.4, 2.3, 3.6] {
            let x = frac * lag;
            r_coarse = r_coarse.max(derivative_residual(&kernel, x, &coarse));
            r_fine = r_fine.max(derivative_residual(&kernel, x, &fine));
        }
        if !(r_fine < r_coarse) {
            return Err(format!("refinement did not reduce the residual: {r_coarse:.2e} -> {r_fine:.2e}"));
        }
        worst_fine = worst_fine.max(r_fine);
        notes.push(format!("{r_coarse:.1e}->{r_fine:.1e}"));
    }
    let detail = format!("residuals {}", notes.join(", "));
    if worst_fine > 1e-3 {
        return Err(detail);
    }
    within(start.elapsed(), Duration::from_secs(120), detail)
}

fn linear_solver_vs_oracle() -> Outcome {
    let start = Instant::now();
    let series = SeriesPolicy::default();
    let (alpha, lam, h, a, c) = (0.6, -0.5, 1.5, 0.8, 0.7);
    let eigen =
        move |x: f64| x.powf(alpha - 1.0) * ml_scalar(alpha, alpha, lam * x.powf(alpha), &series).unwrap().value;
    let phi: VectorFn = Arc::new(move |t: f64| DVector::from_element(1, a * eigen((t * h).ln())));
    let dphi: VectorFn = Arc::new(move |t: f64| DVector::from_element(1, lam * a * eigen((t * h).ln())));
    let forcing: VectorFn = Arc::new(move |_| DVector::from_element(1, c));
    let scalar = |v: f64| SquareMatrix::diagonal(&[v]).unwrap();
    let p = LinearDelayProblem::new(
        alpha,
        h,
        scalar(lam),
        scalar(0.0),
        DVector::from_element(1, a),
        HistorySpec::analytic(phi, dphi),
        Some(forcing),
        3,
    )
    .unwrap();
    let grid = log_grid(h, 3, 16, false).unwrap();
    let traj = solve_full(&p, &grid).unwrap();
    let mut closed_err: f64 = 0.0;
    for (t, v) in grid.iter().zip(&traj.values) {
        let x = t.ln();
        let forced = c * x.powf(alpha) * ml_scalar(alpha, alpha + 1.0, lam * x.powf(alpha), &series).unwrap().value;
        closed_err = closed_err.max((v[0] - a * eigen((t * h).ln()) - forced).abs());
    }
    if closed_err > 1e-6 {
        return Err(format!("scalar closed form error {closed_err:.2e}"));
    }

    let a0 = mat(&[[-0.4, 0.3], [0.2, -0.6]]);
    let a1 = mat(&[[0.3, -0.2], [0.1, 0.25]]);
    let phi: VectorFn = Arc::new(|t: f64| DVector::from_vec(vec![1.0 + 0.5 * t.ln(), (2.0 * t).cos()]));
    let f: VectorFn = Arc::new(|t: f64| DVector::from_vec(vec![t.ln().sin(), 0.5]));
    let p = LinearDelayProblem::new(
        0.7,
        1.5,
        a0,
        a1,
        DVector::from_vec(vec![0.4, -0.3]),
        HistorySpec::numeric(phi),
        Some(f),
        3,
    )
    .unwrap();
    let grid = log_grid(1.5, 3, 12, false).unwrap();
    let mut parts = Vec::new();
    let hom = p.without_forcing();
    let forced = p.without_history();
    let cases: [(&str, &LinearDelayProblem, Solver); 3] =
        [("homogeneous", &hom, solve_homogeneous), ("forced", &forced, solve_forced_zero_ic), ("full", &p, solve_full)];
    let mut worst: f64 = 0.0;
    for (name, problem, solver) in cases {
        let ours = solver(problem, &grid).unwrap();
        let oracle = direct_solve(&to_log_coordinates(problem).unwrap(), 512).unwrap().sample(&grid).unwrap();
        let d = ours.weighted_distance(&oracle).unwrap();
        worst = worst.max(d);
        parts.push(format!("{name} {d:.2e}"));
    }
    let detail = format!("scalar {closed_err:.2e}, {}", parts.join(", "));
    if worst > 1e-4 {
        return Err(detail);
    }
    within(start.elapsed(), Duration::from_secs(300), detail)
}

fn run_cli(args: &[&str]) -> (i32, Vec<u8>, Vec<u8>) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let mut full = vec!["hdml"];
    full.extend_from_slice(args);
    let code = cli::run(full, &mut out, &mut err);
    (code, out, err)
}

// 40-digit summation of the pure delay function at t = 1.1, 1.3, 1.6, 2.0
const EXAMPLE_VALUES: [[f64; 4]; 4] = [
    [4.258664747312410407544486, 1.719465701898392425860859, 5.158397105695177277582578, 9.417061853007587685127064],
    [11.31523464730306022662184, 9.578962825045138849212016, 28.73688847513541654763604, 40.05212312243847677425789],
    [33.99108427789069344319857, 37.49287304281496215312105, 112.4786191284448864593631, 146.4697034063355799025617],
    [123.9971433804258811768861, 150.0945854788489806242657, 450.2837564365469418727971, 574.2808998169728230496832],
];

fn example_reproduction() -> Outcome {
    let start = Instant::now();
    let (code, out, err) = run_cli(&["reproduce-example"]);
    if code != 0 {
        return Err(format!("exit {code}: {}", String::from_utf8_lossy(&err)));
    }
    let doc: Value = serde_json::from_slice(&out).map_err(|e| e.to_string())?;
    let last = doc["branches"].as_array().and_then(|b| b.last()).ok_or("no branches")?;
    let terms = last["terms"].as_array().ok_or("no terms")?;
    let exponents: Vec<f64> = terms.iter().filter_map(|t| t["exponent"].as_f64()).collect();
    let denominators: Vec<&str> = terms.iter().filter_map(|t| t["denominator"].as_str()).collect();
    if exponents != [-0.7, -0.4, -0.1, 0.2, 0.5] {
        return Err(format!("exponents {exponents:?}"));
    }
    let want = ["Gamma(0.3)", "Gamma(0.6)", "Gamma(0.9)", "Gamma(1.2)", "Gamma(1.5)"];
    if denominators != want {
        return Err(format!("denominators {denominators:?}"));
    }
    let samples = doc["samples"].as_array().ok_or("no samples")?;
    let mut worst: f64 = 0.0;
    for (sample, reference) in samples.iter().zip(EXAMPLE_VALUES) {
        let cells: Vec<f64> = sample["E"]
            .as_array()
            .ok_or("no E")?
            .iter()
            .flat_map(|row| row.as_array().cloned().unwrap_or_default())
            .filter_map(|v| v.as_f64())
            .collect();
        for (g, w) in cells.iter().zip(reference) {
            worst = worst.max(rel(*g, w));
        }
    }
    let detail = format!("exponents and Gamma denominators exact, worst relative error {worst:.2e}");
    if samples.len() != 4 || worst > 1e-10 {
        return Err(detail);
    }
    within(start.elapsed(), Duration::from_secs(5), detail)
}

fn nonlinear_suite() -> Outcome {
    let start = Instant::now();
    let phi: VectorFn = Arc::new(|t: f64| DVector::from_vec(vec![0.5 + 0.2 * t, t.ln().cos()]));
    let a0 = mat(&[[-0.5, 0.2], [0.1, -0.3]]);
    let a1 = mat(&[[0.2, 0.0], [0.1, 0.15]]);
    let linear = LinearDelayProblem::new(
        0.6,
        1.5,
        a0,
        a1,
        DVector::from_vec(vec![0.3, -0.2]),
        HistorySpec::numeric(phi),
        None,
        2,
    )
    .unwrap();
    let unit: RhsFn =
        Arc::new(|t: f64, y: &DVector<f64>| DVector::from_vec(vec![y[1].tanh() + 0.3 * t.sin(), y[0].sin()]));
    let probe = SemilinearProblem::new(linear.clone(), unit.clone(), 1.0, 0.3, 0.0).unwrap();
    let l = 0.5 / contraction_constants(&probe).unwrap().m1;
    let rhs: RhsFn = Arc::new(move |t, y| unit(t, y) * l);
    let problem = SemilinearProblem::new(linear, rhs, l, 0.3 * l, 0.0).unwrap();
    let report = contraction_constants(&problem).unwrap();
    if (report.m1 - 0.5).abs() > 1e-9 || !report.contraction {
        return Err(format!("M1 = {}", report.m1));
    }
    let grid = log_grid(1.5, 2, 32, false).unwrap();
    let opts = PicardOptions::default();
    let sol = picard_solve(&problem, &grid, opts).unwrap();
    let max_ratio = sol.ratios().into_iter().fold(0.0, f64::max);
    if max_ratio > 0.55 {
        return Err(format!("update ratio {max_ratio:.3}"));
    }
    let oracle = direct_solve(&to_log_coordinates(&problem).unwrap(), 512).unwrap().sample(&grid).unwrap();
    let err = sol.trajectory.weighted_distance(&oracle).unwrap();
    if err > 1e-4 {
        return Err(format!("fixed point vs oracle {err:.2e}"));
    }
    let v = report.v.ok_or("no Ulam-Hyers constant")?;
    let mut devs = Vec::new();
    for eps in [1e-2, 1e-3, 1e-4] {
        let c = eps / problem.linear.log_horizon().powf(problem.gamma_weight);
        let q: VectorFn = Arc::new(move |_| DVector::from_vec(vec![c, 0.0]));
        let dev = verify_ulam_hyers(&problem, &grid, eps, q, opts).unwrap();
        if dev > v * eps {
            return Err(format!("eps {eps}: deviation {dev:.2e} > {:.2e}", v * eps));
        }
        devs.push(format!("{dev:.1e}<={:.1e}", v * eps));
    }
    let detail = format!(
        "M1 {:.3}, {} iterations, ratio <= {max_ratio:.3}, oracle {err:.2e}, Ulam-Hyers {}",
        report.m1,
        sol.iterations(),
        devs.join(" ")
    );
    within(start.elapsed(), Duration::from_secs(300), detail)
}

fn norm_bound_dominance() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut violations = 0;
    let mut tightest = f64::INFINITY;
    for _ in 0..500 {
        let n = rng.gen_range(1..=3);
        let alpha = rng.gen_range(0.15..1.0);
        let beta = rng.gen_range(0.2..2.0);
        let h = rng.gen_range(1.1..3.0);
        let spec = DelayedMLSpec::new(alpha, beta, h, random_matrix(&mut rng, n, 1.0), random_matrix(&mut rng, n, 1.0))
            .unwrap();
        let s = rng.gen_range(0.5..3.0);
        let t = s * h.powf(rng.gen_range(-0.5..4.0));
        let y = delayed_ml(&spec, t, s).unwrap().frobenius();
        let bound = norm_bound(&spec, t, s).unwrap();
        if y > bound * (1.0 + 1e-12) {
            violations += 1;
        }
        if y > 0.0 {
            tightest = tightest.min(bound / y);
        }
    }
    let detail = format!("{violations} violations, tightest bound/value {tightest:.3}");
    if violations > 0 {
        return Err(detail);
    }
    within(start.elapsed(), Duration::from_secs(60), detail)
}

const CLI_PROBLEM: &str = r#"{
    "alpha": 0.6, "h": 1.5, "l": 2,
    "A0": [-0.5, 0.2, 0.1, -0.3], "A1": [0.2, 0.0, 0.1, 0.15],
    "a": [0.3, -0.2],
    "history": {"kind": "expression", "params": {"source": ["0.5 + 0.2*t", "cos(ln(t))"]}},
    "rhs": {"kind": "expression", "source": ["sin(ln(t))", "0.5"]}
}"#;

const FUZZ_ATOMS: [&str; 24] = [
    "t", "y", "y1", "y2", "y0", "1", "0.5", "2e3", "+", "-", "*", "/", "^", "(", ")", "sin", "exp", "ln", "sqrt",
    "tanh", ",", " ", ".", "abs",
];

fn cli_contract() -> Outcome {
    let start = Instant::now();
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let good = dir.path().join("problem.json");
    std::fs::write(&good, CLI_PROBLEM).map_err(|e| e.to_string())?;
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, CLI_PROBLEM.replace(r#""l": 2"#, r#""l": 2, "extra": true"#)).map_err(|e| e.to_string())?;
    let good = good.to_str().unwrap();

    let (code, _, _) = run_cli(&["solve", bad.to_str().unwrap()]);
    if code != 2 {
        return Err(format!("schema-invalid input exited {code}"));
    }
    let (code, _, _) = run_cli(&[
        "solve",
        good,
        "--grid-per-interval",
        "4",
        "--verify",
        "--verify-tol",
        "1e-14",
        "--verify-steps",
        "64",
    ]);
    if code != 4 {
        return Err(format!("verify over tolerance exited {code}"));
    }

    let runs: [&[&str]; 3] = [
        &["solve", good, "--grid-per-interval", "8"],
        &[
            "eval",
            "--alpha",
            "0.4",
            "--h",
            "1.3",
            "--A0",
            "[[0.1,0.2],[0.0,-0.3]]",
            "--A1",
            "[[0.5,0],[0.2,0.1]]",
            "--t-range",
            "1,4",
            "--bound",
        ],
        &["reproduce-example"],
    ];
    for args in runs {
        let first = run_cli(args);
        let second = run_cli(args);
        if first.0 != 0 || first.1 != second.1 || first.0 != second.0 {
            return Err(format!("rerun of {} differs or failed (exit {})", args[0], first.0));
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut parsed = 0;
    for i in 0..10_000 {
        let source: String = if i % 4 == 0 {
            let len = rng.gen_range(0..24);
            (0..len).map(|_| rng.gen_range(0x20u8..0x7f) as char).collect()
        } else {
            let len = rng.gen_range(1..16);
            (0..len).map(|_| FUZZ_ATOMS[rng.gen_range(0..FUZZ_ATOMS.len())]).collect()
        };
        let dim = rng.gen_range(1..=3);
        let outcome = catch_unwind(|| {
            if let Ok(expr) = parse_rhs(&source, dim) {
                let _ = expr.eval(1.7, &vec![0.3; dim]);
                true
            } else {
                false
            }
        });
        match outcome {
            Ok(true) => parsed += 1,
            Ok(false) => {}
            Err(_) => return Err(format!("parser panicked on {source:?}")),
        }
    }
    let nested = format!("{}t{}", "(".repeat(5000), ")".repeat(5000));
    if catch_unwind(|| parse_rhs(&nested, 1).is_ok()).is_err() {
        return Err("parser panicked on deep nesting".into());
    }
    within(
        start.elapsed(),
        Duration::from_secs(120),
        format!("exit codes 2 and 4, reruns identical, fuzz 10000 inputs ({parsed} parsed)"),
    )
}

fn main() {
    let criteria: [(&str, Criterion); 10] = [
        ("special-function floor", special_function_floor),
        ("beta-integral identity", beta_integral_identity),
        ("reductions A1=0, A0=0, alpha=beta=1", lemma_reductions),
        ("commuting-path equivalence", commuting_equivalence),
        ("fractional derivative identity", derivative_identity),
        ("linear solver vs oracle", linear_solver_vs_oracle),
        ("delayed example reproduction", example_reproduction),
        ("nonlinear suite", nonlinear_suite),
        ("norm bound dominance", norm_bound_dominance),
        ("cli contract", cli_contract),
    ];
    let mut failed = Vec::new();
    let stdout = std::io::stdout();
    for (i, (name, run)) in criteria.iter().enumerate() {
        let outcome = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|_| Err("panicked".into()));
        let line = match &outcome {
            Ok(detail) => format!("criterion {}: PASS {name}: {detail}", i + 1),
            Err(detail) => {
                failed.push(i + 1);
                format!("criterion {}: FAIL {name}: {detail}", i + 1)
            }
        };
        let mut lock = stdout.lock();
        let _ = writeln!(lock, "{line}");
    }
    if !failed.is_empty() {
        eprintln!("failed criteria: {failed:?}");
        std::process::exit(1);
    }
}
