use std::time::Instant;
use approachlab::suites::*;

fn main() {
    let trials: usize = std::env::args().nth(1).map(|s| s.parse().unwrap()).unwrap_or(4);
    let b = Budget { trials, seed: 0, threads: None };
    let runs: Vec<(&str, Box<dyn Fn(&Budget) -> approachlab::Result<Vec<Check>>>)> = vec![
        ("lln", Box::new(|b| lln(b, 10_000))),
        ("blackwell", Box::new(blackwell_rates)),
        ("cone", Box::new(cone_rates)),
        ("linf", Box::new(linf_rates)),
        ("external", Box::new(external_regret)),
        ("internal", Box::new(internal_regret)),
        ("orth", Box::new(orthogonality)),
        ("grid_calib", Box::new(grid_calibration)),
        ("eps", Box::new(eps_independence)),
        ("od", Box::new(oakes_dawid)),
        ("weak", Box::new(weak_approach)),
        ("eq", Box::new(equilibrium_dynamics)),
        ("reduction", Box::new(reduction_identity)),
    ];
    let only: Vec<String> = std::env::args().skip(2).collect();
    for (name, f) in runs.into_iter().filter(|(n, _)| only.is_empty() || only.iter().any(|o| o == n)) {
        let t = Instant::now();
        match f(&b) {
            Ok(cs) => {
                let fails: Vec<_> = cs.iter().filter(|c| !c.passed()).collect();
                let worst = cs.iter().map(|c| if c.at_least { c.bound / c.measured } else { c.measured / c.bound }).fold(0.0f64, f64::max);
                println!("{name}: {:.2}s, {} checks, {} fail, worst ratio {worst:.3}", t.elapsed().as_secs_f64(), cs.len(), fails.len());
                for c in fails { println!("   FAIL {} measured={:.5} bound={:.5}", c.label, c.measured, c.bound); }
            }
            Err(e) => println!("{name}: ERROR {e}"),
        }
    }
}
