//! Equivalence matrix: run all three searches on the same configuration and
//! compare their snapshots.

use std::fmt;

use crate::array::search;
use crate::config::SearchConfig;
use crate::error::SearchError;
use crate::mdp::{make_bandit_env, make_bug_trap_env, make_chain_env, BugTrapParams, EnvSpec, Mdp};
use crate::snapshot::{Divergence, TreeSnapshot};
use crate::tree::{search_ref_with, TieBreak};
use crate::unsorted::search_unsorted;

/// Relative tolerance on node values.
pub const VALUE_REL_TOL: f64 = 1e-9;

#[derive(Debug, Clone)]
pub struct VerifyCell {
    pub env: EnvSpec,
    pub config: SearchConfig,
}

impl VerifyCell {
    pub fn label(&self) -> String {
        format!(
            "{} n={} depth={} seed={}",
            self.env.name(),
            self.config.num_simulations,
            self.config.max_depth,
            self.config.seed
        )
    }
}

/// Cells for every environment × seed × depth at `n` simulations, with each
/// layer capped at the environment's branching bound.
pub fn build_matrix(
    envs: &[EnvSpec],
    seeds: std::ops::Range<u64>,
    n: u32,
    depths: &[usize],
) -> Vec<VerifyCell> {
    let mut cells = Vec::new();
    for env in envs {
        for &depth in depths {
            for seed in seeds.clone() {
                let config = SearchConfig::new(n, depth, env.max_branching(), seed);
                cells.push(VerifyCell {
                    env: env.clone(),
                    config,
                });
            }
        }
    }
    cells
}

/// Bandit (0.2, 0.5, 0.9), chain of length 5 and the default bug trap.
pub fn default_envs() -> Vec<EnvSpec> {
    vec![
        make_bandit_env(&[0.2, 0.5, 0.9]).expect("valid bandit"),
        make_chain_env(5).expect("valid chain"),
        make_bug_trap_env(BugTrapParams::default()).expect("valid bug trap"),
    ]
}

/// 3 environments × 20 seeds × depths {1, 5, 8} at N = 200.
pub fn default_matrix() -> Vec<VerifyCell> {
    build_matrix(&default_envs(), 0..20, 200, &[1, 5, 8])
}

#[derive(Debug, Clone, PartialEq)]
pub enum Mismatch {
    Snapshot {
        against: &'static str,
        divergence: Divergence,
    },
    BestAction {
        against: &'static str,
        reference: usize,
        other: usize,
    },
    Draws {
        against: &'static str,
        reference: u64,
        other: u64,
    },
    Error {
        implementation: &'static str,
        error: SearchError,
    },
    Invariant {
        implementation: &'static str,
        message: String,
    },
}

impl fmt::Display for Mismatch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Snapshot {
                against,
                divergence,
            } => write!(f, "tree vs {against}: {divergence}"),
            Self::BestAction {
                against,
                reference,
                other,
            } => {
                write!(f, "tree vs {against}: best action {reference} vs {other}")
            }
            Self::Draws {
                against,
                reference,
                other,
            } => write!(f, "tree vs {against}: {reference} draws vs {other}"),
            Self::Error {
                implementation,
                error,
            } => write!(f, "{implementation} failed: {error}"),
            Self::Invariant {
                implementation,
                message,
            } => write!(f, "{implementation}: {message}"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct CellOutcome {
    pub label: String,
    pub result: Result<(), Mismatch>,
}

#[derive(Debug, Clone, Default)]
pub struct VerifyReport {
    pub cells: Vec<CellOutcome>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.cells.iter().all(|c| c.result.is_ok())
    }

    pub fn failures(&self) -> impl Iterator<Item = &CellOutcome> {
        self.cells.iter().filter(|c| c.result.is_err())
    }
}

/// Compares array and unsorted-array searches against the tree reference
/// on every cell.
pub fn verify_equivalence(cells: &[VerifyCell]) -> VerifyReport {
    verify_equivalence_with(cells, TieBreak::Lowest)
}

/// As [`verify_equivalence`] with the reference's tie-breaking rule
/// overridden.
pub fn verify_equivalence_with(cells: &[VerifyCell], tie_break: TieBreak) -> VerifyReport {
    if cells.is_empty() {
        log::warn!("empty verification matrix; nothing to compare");
    }
    let cells = cells
        .iter()
        .map(|cell| CellOutcome {
            label: cell.label(),
            result: verify_cell(cell, tie_break),
        })
        .collect();
    VerifyReport { cells }
}

fn verify_cell(cell: &VerifyCell, tie_break: TieBreak) -> Result<(), Mismatch> {
    let (env, cfg) = (&cell.env, &cell.config);
    let n = cfg.num_simulations;
    let err = |implementation| {
        move |error| Mismatch::Error {
            implementation,
            error,
        }
    };
    let invariant = |implementation| {
        move |message| Mismatch::Invariant {
            implementation,
            message,
        }
    };

    let reference =
        search_ref_with(env.start(), env, cfg, tie_break, &mut ()).map_err(err("tree"))?;
    let ref_snap = reference.tree.snapshot();
    ref_snap.check_conservation(n).map_err(invariant("tree"))?;

    let array = search(env.start(), env, cfg).map_err(err("array"))?;
    array.store.check_layout().map_err(invariant("array"))?;
    let unsorted = search_unsorted(env.start(), env, cfg).map_err(err("array_unsorted"))?;

    let expected_draws = 2 * n as u64 * cfg.max_depth as u64;
    let candidates: [(&'static str, TreeSnapshot, usize, u64); 2] = [
        (
            "array",
            array.store.snapshot(),
            array.best_action,
            array.draws,
        ),
        (
            "array_unsorted",
            unsorted.store.snapshot(),
            unsorted.best_action,
            unsorted.draws,
        ),
    ];
    for (name, snap, best, draws) in candidates {
        if let Some(divergence) = ref_snap.diff(&snap, VALUE_REL_TOL) {
            return Err(Mismatch::Snapshot {
                against: name,
                divergence,
            });
        }
        snap.check_conservation(n).map_err(invariant(name))?;
        if best != reference.best_action {
            return Err(Mismatch::BestAction {
                against: name,
                reference: reference.best_action,
                other: best,
            });
        }
        if draws != reference.draws || draws != expected_draws {
            return Err(Mismatch::Draws {
                against: name,
                reference: reference.draws,
                other: draws,
            });
        }
    }
    Ok(())
}
