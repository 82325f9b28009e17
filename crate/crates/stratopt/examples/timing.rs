//! Rough timing probe for the desk-scale pipeline stages.
use std::time::Instant;
use stratopt::bench::{generate, BenchmarkSpec, Family};
use stratopt::explorer::{explore, ExplorationConfig};
use stratopt::problem::sample_parameters;
use stratopt::solver::{solve_continuous, solve_mio, MioOptions};

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let which = args.get(1).map(String::as_str).unwrap_or("solve");
    let specs: Vec<BenchmarkSpec> = vec![
        { let mut s = BenchmarkSpec::new(Family::Inventory, 0); s.horizon = Some(30); s },
        BenchmarkSpec::new(Family::Knapsack, 0),
        BenchmarkSpec::new(Family::Supplier, 0),
        { let mut s = BenchmarkSpec::new(Family::Transportation, 1); s.n = Some(5); s.m = Some(5); s },
        { let mut s = BenchmarkSpec::new(Family::Portfolio, 2); s.n = Some(50); s.m = Some(10); s },
        { let mut s = BenchmarkSpec::new(Family::Facility, 3); s.n = Some(10); s.m = Some(10); s },
        { let mut s = BenchmarkSpec::new(Family::Hybrid, 4); s.horizon = Some(10); s },
    ];
    for spec in &specs {
        let (problem, space) = generate(spec).unwrap();
        if which == "solve" {
            let thetas = sample_parameters(&space, 99, 20).unwrap();
            let t0 = Instant::now();
            for theta in &thetas {
                let inst = problem.canonicalize(theta).unwrap();
                let r = if inst.integers.is_empty() { solve_continuous(&inst) } else { solve_mio(&inst, &MioOptions::default()) };
                assert!(r.status.is_optimal(), "{}: {:?}", spec.label(), r.status);
            }
            println!("{:<18} 20 solves in {:>8.3}s  ({:.1} ms/solve)", spec.label(), t0.elapsed().as_secs_f64(), t0.elapsed().as_secs_f64()*50.0);
        } else {
            let t0 = Instant::now();
            let cfg = ExplorationConfig { seed: spec.seed, verbose: true, ..Default::default() };
            let res = explore(&problem, &space, &cfg).unwrap();
            println!("{:<18} explore N={} M={} G={:.5} in {:>8.1}s ({:?})", spec.label(), res.n, res.catalog.len(), res.good_turing, t0.elapsed().as_secs_f64(), res.terminated_by);
        }
    }
}
