//! Acceptance criteria 1–14. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any fails. Bounds are recomputed here from the stated formulas and
//! cross-checked against the ones the experiments report.

mod common;

use std::process::ExitCode;
use std::time::Instant;

use approachlab::geometry::{simplex_project, ConvexTarget, Sign};
use approachlab::invariant::invariant_measure;
use approachlab::suites::{self, Budget, Check};
use approachlab::zerosum::{solve, ScalarGame};
use proptest::prelude::*;
use proptest::test_runner::{Config, TestCaseError, TestRunner};

fn expected_bound(c: &Check) -> f64 {
    let n = c.param("n");
    match (c.criterion, c.at_least) {
        (1, _) => 3.0 * c.param("stderr"),
        (2, _) => (c.param("kappa") / n).sqrt(),
        (3, _) => c.param("norm_g") / n.sqrt(),
        (4, _) => 14.0 * ((2.0 * c.param("d")).ln() / n).sqrt(),
        (5, _) if c.param("two_norm") == 1.0 => (c.param("A") / n).sqrt(),
        (5, _) => 2.0 * (c.param("A").ln() / n).sqrt(),
        (6, _) => (c.param("scale") / n).sqrt(),
        (7, _) => 1e-8,
        (8, _) => (6.0 + 3.0 * c.param("max_nu")) * (c.param("L").ln() / n).sqrt(),
        (9, _) => (1.0 / n).sqrt(),
        (10, true) => 0.05,
        (10, false) => 6.0 * (c.param("L").ln() / n).sqrt(),
        (11, _) => 1.0 / c.param("N"),
        (12, true) => 0.95,
        (12, false) => 4.0 * (c.param("A") / n).sqrt(),
        (14, _) => 1e-6,
        _ => f64::NAN,
    }
}

/// `Ok(detail)` when every check holds against the recomputed bound.
fn judge(checks: &[Check]) -> Result<String, String> {
    if checks.is_empty() {
        return Err("no checks produced".into());
    }
    let mut worst = f64::NEG_INFINITY;
    let mut failures = Vec::new();
    for c in checks {
        let bound = expected_bound(c);
        if !((c.bound - bound).abs() <= 1e-12 * bound.abs().max(1.0)) {
            failures.push(format!("{}: reported bound {} ≠ {}", c.label, c.bound, bound));
            continue;
        }
        let ok = if c.at_least { c.measured >= bound } else { c.measured <= bound };
        let ratio = if c.at_least { bound / c.measured } else { c.measured / bound };
        worst = worst.max(ratio);
        if !ok {
            failures.push(format!("{}: measured {:.6} vs bound {:.6}", c.label, c.measured, bound));
        }
    }
    if failures.is_empty() {
        Ok(format!("{} check{}, worst measured/bound {:.3}", checks.len(), if checks.len() == 1 { "" } else { "s" }, worst))
    } else {
        Err(failures.join("; "))
    }
}

fn vec_in(d: usize, lo: f64, hi: f64) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(lo..hi, d)
}

fn close(a: &[f64], b: &[f64], tol: f64) -> Result<(), TestCaseError> {
    let gap = a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
    prop_assert!(gap <= tol, "{:?} vs {:?} (gap {:e})", a, b, gap);
    Ok(())
}

fn run_prop<S: Strategy>(
    strategy: S,
    test: impl Fn(S::Value) -> Result<(), TestCaseError>,
) -> Result<(), String> {
    let mut runner = TestRunner::new(Config { cases: 1000, failure_persistence: None, ..Config::default() });
    runner.run(&strategy, test).map_err(|e| e.to_string())
}

fn oracle_equivalences() -> Result<String, String> {
    let tol = 1e-7;
    run_prop((1usize..=4).prop_flat_map(|d| vec_in(d, -3.0, 3.0)), |z| {
        let got = simplex_project(&z).map_err(|e| TestCaseError::fail(e.to_string()))?;
        close(got.probs(), &common::simplex_by_supports(&z), tol)
    })
    .map_err(|e| format!("simplex projection: {e}"))?;

    let polyhedron = (1usize..=4).prop_flat_map(|d| {
        (1usize..=4).prop_flat_map(move |k| {
            (
                prop::collection::vec(vec_in(d, -1.0, 1.0), k),
                vec_in(d, -1.0, 1.0),
                vec_in(k, 0.0, 1.0),
                vec_in(d, -3.0, 3.0),
            )
        })
    });
    run_prop(polyhedron, |(normals, witness, margins, z)| {
        prop_assume!(normals.iter().all(|w| w.iter().map(|v| v * v).sum::<f64>() > 1e-2));
        let offsets: Vec<f64> = normals
            .iter()
            .zip(&margins)
            .map(|(w, m)| w.iter().zip(&witness).map(|(a, b)| a * b).sum::<f64>() + m)
            .collect();
        let oracle = common::polyhedron_by_active_sets(&normals, &offsets, &z);
        let target = ConvexTarget::halfspaces(normals, offsets, witness).map_err(|e| TestCaseError::fail(e.to_string()))?;
        close(&target.project(&z).map_err(|e| TestCaseError::fail(e.to_string()))?.pi, &oracle, tol)
    })
    .map_err(|e| format!("polyhedron projection: {e}"))?;

    let boxes = (1usize..=4).prop_flat_map(|d| (vec_in(d, -1.0, 1.0), vec_in(d, 0.0, 1.5), vec_in(d, -3.0, 3.0)));
    run_prop(boxes, |(lo, width, z)| {
        let hi: Vec<f64> = lo.iter().zip(&width).map(|(l, w)| l + w).collect();
        let (normals, offsets) = common::box_halfspaces(&lo, &hi);
        let oracle = common::polyhedron_by_active_sets(&normals, &offsets, &z);
        let target = ConvexTarget::boxed(lo, hi).map_err(|e| TestCaseError::fail(e.to_string()))?;
        close(&target.project(&z).map_err(|e| TestCaseError::fail(e.to_string()))?.pi, &oracle, tol)
    })
    .map_err(|e| format!("box projection: {e}"))?;

    let orthants = (1usize..=4).prop_flat_map(|d| (prop::collection::vec(any::<bool>(), d), vec_in(d, -3.0, 3.0)));
    run_prop(orthants, |(signs, z)| {
        let d = z.len();
        let normals: Vec<Vec<f64>> = signs
            .iter()
            .enumerate()
            .map(|(i, &nonpos)| (0..d).map(|j| if i != j { 0.0 } else if nonpos { 1.0 } else { -1.0 }).collect())
            .collect();
        let oracle = common::polyhedron_by_active_sets(&normals, &vec![0.0; d], &z);
        let signs = signs.into_iter().map(|s| if s { Sign::NonPositive } else { Sign::NonNegative }).collect();
        let target = ConvexTarget::orthant(signs).map_err(|e| TestCaseError::fail(e.to_string()))?;
        close(&target.project(&z).map_err(|e| TestCaseError::fail(e.to_string()))?.pi, &oracle, tol)
    })
    .map_err(|e| format!("orthant projection: {e}"))?;

    let balls = (1usize..=4).prop_flat_map(|d| (vec_in(d, -1.0, 1.0), 0.01f64..2.0, vec_in(d, -3.0, 3.0)));
    run_prop(balls, |(c, r, z)| {
        let gap: Vec<f64> = z.iter().zip(&c).map(|(a, b)| a - b).collect();
        let len = gap.iter().map(|v| v * v).sum::<f64>().sqrt();
        let oracle: Vec<f64> = if len <= r { z.clone() } else { c.iter().zip(&gap).map(|(ci, g)| ci + r * g / len).collect() };
        let target = ConvexTarget::ball(c, r).map_err(|e| TestCaseError::fail(e.to_string()))?;
        close(&target.project(&z).map_err(|e| TestCaseError::fail(e.to_string()))?.pi, &oracle, tol)
    })
    .map_err(|e| format!("ball projection: {e}"))?;

    let games = (1usize..=4, 1usize..=4).prop_flat_map(|(m, n)| prop::collection::vec(vec_in(n, -1.0, 1.0), m));
    run_prop(games, |rows| {
        let oracle = common::game_value_by_supports(&rows);
        let game = ScalarGame::from_rows(&rows).map_err(|e| TestCaseError::fail(e.to_string()))?;
        let got = solve(&game, 1e-10).map_err(|e| TestCaseError::fail(e.to_string()))?;
        close(&[got.value], &[oracle], tol)
    })
    .map_err(|e| format!("zero-sum value: {e}"))?;

    let matrices = (1usize..=4).prop_flat_map(|d| prop::collection::vec(vec_in(d, 0.05, 1.0), d));
    run_prop(matrices, |m| {
        let got = invariant_measure(&m).map_err(|e| TestCaseError::fail(e.to_string()))?;
        close(got.probs(), &common::invariant_by_power(&m), tol)
    })
    .map_err(|e| format!("invariant measure: {e}"))?;

    Ok("7 properties × 1000 instances".into())
}

fn main() -> ExitCode {
    let budget = Budget::default();
    type Run = Box<dyn Fn(&Budget) -> Result<String, String>>;
    let wrap = |f: fn(&Budget) -> approachlab::Result<Vec<Check>>| -> Run {
        Box::new(move |b| f(b).map_err(|e| e.to_string()).and_then(|c| judge(&c)))
    };
    let criteria: Vec<(u8, &str, Run)> = vec![
        (1, "LLN identity", Box::new(|b| suites::lln(b, 10_000).map_err(|e| e.to_string()).and_then(|c| judge(&c)))),
        (2, "Blackwell rate", wrap(suites::blackwell_rates)),
        (3, "cone rate", wrap(suites::cone_rates)),
        (4, "ℓ∞ potential rate", wrap(suites::linf_rates)),
        (5, "external regret", wrap(suites::external_regret)),
        (6, "internal / Φ-regret", wrap(suites::internal_regret)),
        (7, "orthogonality", wrap(suites::orthogonality)),
        (8, "grid calibration", wrap(suites::grid_calibration)),
        (9, "ε-independence", wrap(suites::eps_independence)),
        (10, "Oakes–Dawid", wrap(suites::oakes_dawid)),
        (11, "weak approachability", wrap(suites::weak_approach)),
        (12, "equilibrium dynamics", wrap(suites::equilibrium_dynamics)),
        (13, "oracle equivalences", Box::new(|_| oracle_equivalences())),
        (14, "reduction identity", wrap(suites::reduction_identity)),
    ];
    let only: Vec<u8> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = 0;
    for (k, name, run) in criteria.into_iter().filter(|(k, ..)| only.is_empty() || only.contains(k)) {
        let start = Instant::now();
        let outcome = run(&budget);
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("criterion {k:>2} PASS  {name} ({detail}; {secs:.1}s)"),
            Err(why) => {
                failed += 1;
                println!("criterion {k:>2} FAIL  {name}: {why}");
            }
        }
    }
    if failed == 0 {
        println!("acceptance: all selected criteria pass");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: {failed} criteria failed");
        ExitCode::FAILURE
    }
}
