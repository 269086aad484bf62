use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use layered_mcts::bench::{
    fit_slopes, read_records_csv, run_benchmark, slope_ratios, write_fits_csv,
    write_plots_from_csv, write_records_csv, BenchConfig, REFERENCE_SLOPES,
};
use layered_mcts::verify::{build_matrix, default_envs, verify_equivalence_with};
use layered_mcts::{
    make_bug_trap_env, run_episode, BugTrapParams, EnvSpec, ImplTag, Mdp, OverflowPolicy,
    SearchConfig, TieBreak, UctParams,
};

#[derive(Parser)]
#[command(
    name = "mcts-bench",
    version,
    about = "Plan, benchmark and cross-check the MCTS implementations"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one receding-horizon episode and print every step.
    Plan(PlanArgs),
    /// Time searches over a grid of N and depth; write CSV, fits and plots.
    Bench(BenchArgs),
    /// Check that all implementations build identical trees.
    Verify(VerifyArgs),
}

#[derive(Args)]
struct Common {
    /// Environment JSON file (default: built-in bug trap).
    #[arg(long)]
    env: Option<PathBuf>,
    /// Base seed.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// What to do when a layer's state branching cap is exceeded.
    #[arg(long, default_value = "fail", value_parser = ["fail", "clamp"])]
    overflow: String,
    /// UCT exploration constant (default: chosen per environment).
    #[arg(long)]
    c: Option<f64>,
}

#[derive(Args)]
struct PlanArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long = "impl", default_value = "array")]
    impl_tag: String,
    #[arg(long, default_value_t = 5_000)]
    n: u32,
    #[arg(long, default_value_t = 8)]
    depth: usize,
    /// Maximum steps (default: the environment's horizon).
    #[arg(long)]
    steps: Option<usize>,
    /// Also write the trajectory as CSV here.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    #[command(flatten)]
    common: Common,
    /// Implementations, comma separated.
    #[arg(
        long = "impl",
        value_delimiter = ',',
        default_value = "tree,array,array_unsorted"
    )]
    impl_tag: Vec<String>,
    /// Simulation budgets, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "5000,50000")]
    n: Vec<u32>,
    /// Depths, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "4,5,6,7,8,9,10,11,12")]
    depth: Vec<usize>,
    #[arg(long, default_value_t = 10)]
    trials: usize,
    #[arg(long, default_value_t = 10)]
    steps: usize,
    #[arg(long, default_value = "bench-out")]
    out: PathBuf,
}

#[derive(Args)]
struct VerifyArgs {
    /// Environment JSON file (default: bandit, chain and bug trap).
    #[arg(long)]
    env: Option<PathBuf>,
    /// First seed of the matrix.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Number of seeds.
    #[arg(long, default_value_t = 20)]
    trials: u64,
    #[arg(long, default_value_t = 200)]
    n: u32,
    #[arg(long, value_delimiter = ',', default_value = "1,5,8")]
    depth: Vec<usize>,
    /// Tie-breaking rule of the reference tree. `highest` deliberately
    /// diverges and checks that the harness reports it.
    #[arg(long, default_value = "lowest", value_parser = ["lowest", "highest"])]
    tie_break: String,
    /// Also write the report here.
    #[arg(long)]
    out: Option<PathBuf>,
}

enum Failure {
    Config(String),
    Mismatch,
}

impl<E: std::fmt::Display> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure::Config(e.to_string())
    }
}

fn load_env(path: Option<&Path>) -> Result<EnvSpec, Failure> {
    Ok(match path {
        Some(p) => EnvSpec::from_json_file(p)?,
        None => make_bug_trap_env(BugTrapParams::default())?,
    })
}

fn parse_overflow(s: &str) -> Result<OverflowPolicy, Failure> {
    s.parse::<OverflowPolicy>().map_err(Failure::Config)
}

fn plan(args: PlanArgs) -> Result<(), Failure> {
    let env = load_env(args.common.env.as_deref())?;
    let tag: ImplTag = args.impl_tag.parse().map_err(Failure::Config)?;
    let config = SearchConfig::new(args.n, args.depth, env.max_branching(), args.common.seed)
        .with_exploration(UctParams::new(
            args.common.c.unwrap_or(env.default_exploration()),
        )?)
        .with_overflow(parse_overflow(&args.common.overflow)?);
    let steps = args.steps.unwrap_or(env.horizon_hint());
    let episode = run_episode(tag, &env, &config, steps, args.common.seed)?;

    println!(
        "env={} impl={tag} n={} depth={} seed={}",
        env.name(),
        args.n,
        args.depth,
        args.common.seed
    );
    println!("step state action next reward");
    let mut csv = String::from("step,state,action,next,reward\n");
    for (t, s) in episode.steps.iter().enumerate() {
        println!("{t} {} {} {} {}", s.state, s.action, s.next, s.reward);
        csv.push_str(&format!(
            "{t},\"{}\",{},\"{}\",{}\n",
            s.state, s.action, s.next, s.reward
        ));
    }
    println!(
        "reached_goal={} hit_obstacle={} total_reward={} overflow_events={}",
        episode.reached_goal, episode.hit_obstacle, episode.total_reward, episode.overflow_events
    );
    if let Some(dir) = args.out {
        fs::create_dir_all(&dir).map_err(|e| format!("{}: {e}", dir.display()))?;
        let path = dir.join("trajectory.csv");
        fs::write(&path, csv).map_err(|e| format!("{}: {e}", path.display()))?;
    }
    Ok(())
}

fn bench(args: BenchArgs) -> Result<(), Failure> {
    let env = load_env(args.common.env.as_deref())?;
    let impls = args
        .impl_tag
        .iter()
        .map(|s| s.parse())
        .collect::<Result<Vec<ImplTag>, _>>()
        .map_err(Failure::Config)?;
    let config = BenchConfig {
        impls,
        ns: args.n,
        depths: args.depth,
        trials: args.trials,
        steps: args.steps,
        seed: args.common.seed,
        exploration: UctParams::new(args.common.c.unwrap_or(env.default_exploration()))?,
        overflow: parse_overflow(&args.common.overflow)?,
        branch_cap: None,
    };
    config.validate()?;
    fs::create_dir_all(&args.out).map_err(|e| format!("{}: {e}", args.out.display()))?;

    let outcome = run_benchmark(&env, &config)?;
    let records_path = args.out.join("records.csv");
    write_records_csv(&outcome.records, &records_path)?;
    // Everything below is derived from the CSV just written.
    let records = read_records_csv(&records_path)?;
    let fits = fit_slopes(&records);
    write_fits_csv(&fits, &args.out.join("fits.csv"))?;
    write_plots_from_csv(&records_path, &args.out)?;

    let meta = serde_json::json!({
        "env": env.name(),
        "impls": config.impls.iter().map(|t| t.as_str()).collect::<Vec<_>>(),
        "n": config.ns,
        "depths": config.depths,
        "trials": config.trials,
        "steps": config.steps,
        "seed": config.seed,
        "c": config.exploration.c(),
        "overflow": config.overflow.to_string(),
        "warmup": "one untimed search per (impl, n, depth) cell",
        "clock": "std::time::Instant, search call only",
        "records": records.len(),
        "failures": outcome.failures.len(),
        "overflow_events": outcome.overflow_events,
    });
    let meta_path = args.out.join("meta.json");
    fs::write(&meta_path, serde_json::to_string_pretty(&meta)?)
        .map_err(|e| format!("{}: {e}", meta_path.display()))?;

    for f in &outcome.failures {
        eprintln!(
            "failed: {} n={} depth={} trial={} step={}: {}",
            f.impl_tag, f.n, f.depth, f.trial, f.step, f.error
        );
    }
    println!("impl n slope_s_per_layer intercept r2");
    for f in &fits {
        println!(
            "{} {} {:.6e} {:.6e} {:.4}",
            f.impl_tag, f.n, f.slope, f.intercept, f.r_squared
        );
    }
    for (num, den) in [
        (ImplTag::Tree, ImplTag::Array),
        (ImplTag::ArrayUnsorted, ImplTag::Array),
    ] {
        for r in slope_ratios(&fits, num, den) {
            println!("ratio {num}/{den} n={}: {:.3}", r.n, r.ratio);
        }
    }
    for (n, tree, array) in REFERENCE_SLOPES {
        println!(
            "reference n={n}: tree {tree} array {array} ratio {:.3} (different hardware)",
            tree / array
        );
    }
    println!(
        "records={} failures={} overflow_events={} out={}",
        records.len(),
        outcome.failures.len(),
        outcome.overflow_events,
        args.out.display()
    );
    Ok(())
}

fn verify(args: VerifyArgs) -> Result<(), Failure> {
    let envs = match &args.env {
        Some(p) => vec![EnvSpec::from_json_file(p)?],
        None => default_envs(),
    };
    if args.n == 0 || args.depth.contains(&0) {
        return Err(Failure::Config("n and depths must be positive".into()));
    }
    let cells = build_matrix(
        &envs,
        args.seed..args.seed + args.trials,
        args.n,
        &args.depth,
    );
    let tie_break = if args.tie_break == "highest" {
        TieBreak::Highest
    } else {
        TieBreak::Lowest
    };
    let report = verify_equivalence_with(&cells, tie_break);
    let mut text = String::new();
    for c in &report.cells {
        match &c.result {
            Ok(()) => text.push_str(&format!("PASS {}\n", c.label)),
            Err(m) => text.push_str(&format!("FAIL {}: {m}\n", c.label)),
        }
    }
    let failed = report.failures().count();
    text.push_str(&format!(
        "{} cells, {failed} mismatches\n",
        report.cells.len()
    ));
    print!("{text}");
    if let Some(dir) = &args.out {
        fs::create_dir_all(dir).map_err(|e| format!("{}: {e}", dir.display()))?;
        let path = dir.join("verify.txt");
        fs::write(&path, &text).map_err(|e| format!("{}: {e}", path.display()))?;
    }
    if report.passed() {
        Ok(())
    } else {
        Err(Failure::Mismatch)
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Plan(a) => plan(a),
        Command::Bench(a) => bench(a),
        Command::Verify(a) => verify(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Mismatch) => ExitCode::from(1),
        Err(Failure::Config(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
