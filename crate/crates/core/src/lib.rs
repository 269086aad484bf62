//! Monte Carlo tree search (UCT) over discretized MDPs, stored as flat
//! per-depth arrays and driven by branch-free kernels.
//!
//! Three searches share one selection rule and one random stream and so
//! produce identical trees:
//!
//! - [`array::search`]: nodes sorted into one array block per depth.
//! - [`unsorted::search_unsorted`]: the same arrays without depth sorting.
//! - [`tree::search_ref`]: a conventional linked-node tree, used as the
//!   reference and the benchmark baseline.
//!
//! [`bench`] runs receding-horizon planning over a grid of simulation counts
//! and depths, times every search, and fits scaling slopes.

pub mod array;
pub mod bench;
pub mod config;
pub mod error;
pub mod kernels;
pub mod mdp;
pub mod plan;
pub mod rng;
pub mod snapshot;
pub mod trace;
pub mod tree;
pub mod unsorted;
pub mod verify;

pub use array::{search, search_traced, ArraySearch, LayerStore};
pub use config::{OverflowPolicy, SearchConfig};
pub use error::{BenchError, ContractError, EnvError, SearchError};
pub use kernels::UctParams;
pub use mdp::{
    make_bandit_env, make_bug_trap_env, make_chain_env, make_slippery_chain_env, BugTrapParams,
    EnvSpec, Mdp, StateVec,
};
pub use plan::{run_episode, ImplTag};
pub use rng::DrawStream;
pub use snapshot::TreeSnapshot;
pub use tree::{search_ref, search_ref_with, SearchTree, TieBreak, TreeSearch};
pub use unsorted::{search_unsorted, FlatStore, UnsortedSearch};
