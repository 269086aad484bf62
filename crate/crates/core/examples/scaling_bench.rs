//! A quick depth sweep with slope fits. Use the `bench` subcommand of the
//! binary for full runs with CSV and plot output.

use layered_mcts::bench::{fit_slopes, run_benchmark, slope_ratios, BenchConfig};
use layered_mcts::{make_bug_trap_env, BugTrapParams, ImplTag, UctParams};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let env = make_bug_trap_env(BugTrapParams::default())?;
    let config = BenchConfig {
        ns: vec![2_000],
        depths: vec![4, 6, 8, 10],
        trials: 3,
        steps: 3,
        exploration: UctParams::new(env.default_exploration())?,
        ..Default::default()
    };
    let outcome = run_benchmark(&env, &config)?;
    let fits = fit_slopes(&outcome.records);
    for f in &fits {
        println!(
            "{:<15} n={} slope={:.3e} s/layer r2={:.3}",
            f.impl_tag.as_str(),
            f.n,
            f.slope,
            f.r_squared
        );
    }
    for r in slope_ratios(&fits, ImplTag::Tree, ImplTag::Array) {
        println!("tree/array at n={}: {:.2}", r.n, r.ratio);
    }
    Ok(())
}
