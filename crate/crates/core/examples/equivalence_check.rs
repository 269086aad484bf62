//! Runs the equivalence matrix and prints one line per cell.

use layered_mcts::verify::{build_matrix, default_envs, verify_equivalence};

fn main() {
    let cells = build_matrix(&default_envs(), 0..5, 200, &[1, 5, 8]);
    let report = verify_equivalence(&cells);
    for c in &report.cells {
        match &c.result {
            Ok(()) => println!("ok   {}", c.label),
            Err(m) => println!("FAIL {}: {m}", c.label),
        }
    }
    println!(
        "{} cells, {} mismatches",
        report.cells.len(),
        report.failures().count()
    );
    if !report.passed() {
        std::process::exit(1);
    }
}
