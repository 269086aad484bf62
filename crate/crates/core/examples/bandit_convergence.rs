//! UCT on a three-armed bandit: visits concentrate on the best arm as N grows.

use layered_mcts::{make_bandit_env, search, Mdp, SearchConfig, UctParams};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let env = make_bandit_env(&[0.2, 0.5, 0.9])?;
    println!("{:>6}  {:>24}  {:>6}  best", "n", "visits", "share");
    for n in [10, 100, 1_000, 10_000] {
        let cfg =
            SearchConfig::new(n, 1, env.max_branching(), 1).with_exploration(UctParams::new(1.0)?);
        let out = search(env.start(), &env, &cfg)?;
        let visits = out.store.root_child_visits();
        let share = visits[2] as f64 / n as f64;
        println!(
            "{n:>6}  {:>24}  {share:>6.3}  {}",
            format!("{visits:?}"),
            out.best_action
        );
    }
    Ok(())
}
