//! Receding-horizon planning out of the bug trap with each implementation.

use layered_mcts::{
    make_bug_trap_env, run_episode, BugTrapParams, ImplTag, Mdp, SearchConfig, UctParams,
};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let env = make_bug_trap_env(BugTrapParams::default())?;
    let seed = std::env::args()
        .nth(1)
        .map(|s| s.parse())
        .transpose()?
        .unwrap_or(0u64);
    let cfg = SearchConfig::new(5_000, 8, env.max_branching(), seed)
        .with_exploration(UctParams::new(env.default_exploration())?);

    for tag in ImplTag::ALL {
        let ep = run_episode(tag, &env, &cfg, env.horizon_hint(), seed)?;
        let path: Vec<String> = ep
            .steps
            .iter()
            .map(|s| {
                let [x, y] = env.position(&s.next);
                format!("({x:.2},{y:.2})")
            })
            .collect();
        println!(
            "{tag}: goal={} obstacle={} return={:.2}",
            ep.reached_goal, ep.hit_obstacle, ep.total_reward
        );
        println!("  {}", path.join(" "));
    }
    Ok(())
}
