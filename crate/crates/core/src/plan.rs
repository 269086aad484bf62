//! Receding-horizon planning: search, execute the best root action, re-plan.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::array::search;
use crate::config::SearchConfig;
use crate::error::SearchError;
use crate::mdp::{EnvSpec, Mdp, StateVec};
use crate::rng::derive_seed;
use crate::tree::search_ref;
use crate::unsorted::search_unsorted;

/// Which search implementation to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ImplTag {
    Tree,
    Array,
    ArrayUnsorted,
}

impl ImplTag {
    pub const ALL: [ImplTag; 3] = [ImplTag::Tree, ImplTag::Array, ImplTag::ArrayUnsorted];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Tree => "tree",
            Self::Array => "array",
            Self::ArrayUnsorted => "array_unsorted",
        }
    }
}

impl fmt::Display for ImplTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ImplTag {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "tree" => Ok(Self::Tree),
            "array" => Ok(Self::Array),
            "array_unsorted" | "unsorted" => Ok(Self::ArrayUnsorted),
            _ => Err(format!(
                "unknown implementation `{s}` (expected tree, array or array_unsorted)"
            )),
        }
    }
}

/// Outcome of one search call.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Decision {
    pub action: usize,
    pub overflow_events: u64,
}

/// Run one search with the chosen implementation and return its decision.
pub fn plan_once<M: Mdp>(
    tag: ImplTag,
    root: StateVec,
    env: &M,
    config: &SearchConfig,
) -> Result<Decision, SearchError> {
    Ok(match tag {
        ImplTag::Tree => {
            let out = search_ref(root, env, config)?;
            Decision {
                action: out.best_action,
                overflow_events: out.tree.overflow_events(),
            }
        }
        ImplTag::Array => {
            let out = search(root, env, config)?;
            Decision {
                action: out.best_action,
                overflow_events: out.store.overflow_events(),
            }
        }
        ImplTag::ArrayUnsorted => {
            let out = search_unsorted(root, env, config)?;
            Decision {
                action: out.best_action,
                overflow_events: out.store.overflow_events(),
            }
        }
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeStep {
    pub state: StateVec,
    pub action: usize,
    pub next: StateVec,
    pub reward: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Episode {
    pub steps: Vec<EpisodeStep>,
    pub reached_goal: bool,
    pub hit_obstacle: bool,
    pub total_reward: f64,
    pub overflow_events: u64,
}

impl Episode {
    pub fn final_state(&self) -> Option<StateVec> {
        self.steps.last().map(|s| s.next)
    }
}

/// Plans from the start state for up to `steps` steps, stopping early once
/// the goal is reached. Search `t` uses the seed `derive_seed(config.seed, t)`;
/// executed transitions draw from a separate stream seeded by `exec_seed`.
pub fn run_episode(
    tag: ImplTag,
    env: &EnvSpec,
    config: &SearchConfig,
    steps: usize,
    exec_seed: u64,
) -> Result<Episode, SearchError> {
    let mut world = ChaCha8Rng::seed_from_u64(exec_seed);
    let mut state = env.start();
    let mut episode = Episode {
        steps: Vec::with_capacity(steps),
        reached_goal: env.in_goal(&state),
        hit_obstacle: env.in_obstacle(&state),
        total_reward: 0.0,
        overflow_events: 0,
    };
    for t in 0..steps {
        if episode.reached_goal {
            break;
        }
        let cfg = config.clone().with_seed(derive_seed(config.seed, t as u64));
        let decision = plan_once(tag, state, env, &cfg)?;
        let next = env.transition(&state, decision.action, world.random::<f64>());
        let reward = env.reward(&next);
        episode.overflow_events += decision.overflow_events;
        episode.total_reward += reward;
        episode.hit_obstacle |= env.in_obstacle(&next);
        episode.reached_goal = env.in_goal(&next);
        episode.steps.push(EpisodeStep {
            state,
            action: decision.action,
            next,
            reward,
        });
        state = next;
    }
    Ok(episode)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mdp::make_chain_env;

    #[test]
    fn impl_tags_round_trip() {
        for tag in ImplTag::ALL {
            assert_eq!(tag.as_str().parse::<ImplTag>().unwrap(), tag);
        }
        assert!("linked".parse::<ImplTag>().is_err());
    }

    #[test]
    fn chain_episode_walks_right() {
        let env = make_chain_env(3).unwrap();
        let cfg = SearchConfig::new(300, 4, 1, 2);
        for tag in ImplTag::ALL {
            let ep = run_episode(tag, &env, &cfg, 10, 0).unwrap();
            assert!(ep.reached_goal);
            assert_eq!(ep.steps.len(), 3);
            assert!(ep.steps.iter().all(|s| s.action == 1));
        }
    }

    #[test]
    fn implementations_agree_on_episodes() {
        let env = make_chain_env(4).unwrap();
        let cfg = SearchConfig::new(100, 3, 1, 11);
        let eps: Vec<_> = ImplTag::ALL
            .iter()
            .map(|&t| run_episode(t, &env, &cfg, 6, 3).unwrap())
            .collect();
        assert_eq!(eps[0], eps[1]);
        assert_eq!(eps[1], eps[2]);
    }
}
