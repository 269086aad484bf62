//! Array MCTS without layer sorting.
//!
//! Identical selection logic to [`crate::array`], but every action node of
//! every depth lives in one global set of arrays (and likewise every state
//! node), numbered in global creation order with the depth stored per node.
//! Nodes near the root end up interleaved with deep nodes, which is the
//! memory-layout ablation the benchmark compares against.

use crate::array::layer_capacities;
use crate::config::{OverflowPolicy, SearchConfig, MAX_ACTIONS, MAX_BRANCH_CAP};
use crate::error::SearchError;
use crate::kernels::{
    any_unvisited, incremental_mean_unchecked, max_index_unchecked, random_untried, select_f64,
    select_u32, select_usize, uct_value_unchecked,
};
use crate::mdp::{Mdp, StateVec};
use crate::rng::DrawStream;
use crate::snapshot::{NodeKey, NodeKind, NodeRecord, TreeSnapshot};
use crate::trace::SimTracer;

#[derive(Debug, Clone)]
pub struct FlatStore {
    num_actions: usize,
    dim: usize,
    max_depth: usize,
    branch_caps: Vec<u32>,
    stride: usize,
    overflow: OverflowPolicy,
    overflow_events: u64,

    state_capacity: u32,
    action_capacity: u32,
    num_states: u32,
    num_actions_created: u32,

    states: Vec<StateVec>,
    state_visits: Vec<u32>,
    state_parent: Vec<u32>,
    state_depth: Vec<u32>,
    child_actions: Vec<u32>,

    action_values: Vec<f64>,
    action_visits: Vec<u32>,
    action_parent: Vec<u32>,
    action_depth: Vec<u32>,
    child_states: Vec<u32>,
}

impl FlatStore {
    pub fn new(
        root: StateVec,
        num_actions: usize,
        config: &SearchConfig,
    ) -> Result<Self, SearchError> {
        config.validate(num_actions)?;
        let caps = layer_capacities(
            num_actions,
            config.num_simulations,
            &config.state_branch_caps,
        )?;
        let total_actions: u64 = caps.iter().map(|&(a, _)| a as u64).sum();
        // root + every layer + one dedicated sentinel slot
        let total_states: u64 = 2 + caps.iter().map(|&(_, s)| s as u64).sum::<u64>();
        if total_actions >= u32::MAX as u64 || total_states >= u32::MAX as u64 {
            return Err(SearchError::CapacityOverflow {
                depth: config.max_depth,
            });
        }
        let (na_total, ns_total) = (total_actions as usize, total_states as usize);
        let max_cap = *config
            .state_branch_caps
            .iter()
            .max()
            .expect("validated non-empty");
        let stride = max_cap as usize + 1;
        let dim = root.dim();
        let sentinel_slot = ns_total as u32 - 1;

        let mut states = vec![StateVec::new(&vec![0; dim]).expect("zero state"); ns_total];
        states[0] = root;
        states[ns_total - 1] = StateVec::sentinel(dim);
        let mut child_states = vec![sentinel_slot; stride * na_total];
        for col in child_states.chunks_exact_mut(stride) {
            col[stride - 1] = 0;
        }

        Ok(Self {
            num_actions,
            dim,
            max_depth: config.max_depth,
            branch_caps: config.state_branch_caps.clone(),
            stride,
            overflow: config.overflow,
            overflow_events: 0,
            state_capacity: ns_total as u32,
            action_capacity: na_total as u32,
            num_states: 1,
            num_actions_created: 0,
            states,
            state_visits: vec![0; ns_total],
            state_parent: vec![0; ns_total],
            state_depth: vec![0; ns_total],
            child_actions: vec![na_total as u32; num_actions * ns_total],
            action_values: vec![0.0; na_total + 1],
            action_visits: vec![0; na_total + 1],
            action_parent: vec![0; na_total + 1],
            action_depth: vec![0; na_total + 1],
            child_states,
        })
    }

    pub fn overflow_events(&self) -> u64 {
        self.overflow_events
    }

    pub fn num_states(&self) -> u32 {
        self.num_states
    }

    pub fn num_actions_created(&self) -> u32 {
        self.num_actions_created
    }

    fn select_child_action(&mut self, depth: usize, cur_state: u32, draw: f64, c: f64) -> usize {
        let na = self.num_actions;
        let base = cur_state as usize * na;
        let col = &mut self.child_actions[base..base + na];

        let mut visits = [0u32; MAX_ACTIONS];
        let mut values = [0f64; MAX_ACTIONS];
        for r in 0..na {
            let i = col[r] as usize;
            visits[r] = self.action_visits[i];
            values[r] = self.action_values[i];
        }
        let visits = &visits[..na];
        let untried = any_unvisited(visits);
        let parent_visits = self.state_visits[cur_state as usize];
        let mut uct = [0f64; MAX_ACTIONS];
        for r in 0..na {
            uct[r] = uct_value_unchecked(values[r], visits[r], parent_visits, c);
        }
        let best = max_index_unchecked(&uct[..na]);
        let fresh = random_untried(visits, draw);

        let next_action = select_usize(fresh, best, untried);
        let next_idx = select_u32(self.num_actions_created, col[best], untried);
        col[next_action] = next_idx;
        // Tag the candidate slot unconditionally; it is either the new node
        // or the next unused slot.
        self.action_depth[self.num_actions_created as usize] = depth as u32 + 1;
        self.num_actions_created += untried as u32;
        debug_assert!(self.num_actions_created <= self.action_capacity);
        next_action
    }

    fn select_child_state(
        &mut self,
        depth: usize,
        cur_action: u32,
        generated: &StateVec,
    ) -> Result<u32, SearchError> {
        let cap = self.branch_caps[depth - 1] as usize;
        let base = cur_action as usize * self.stride;
        let col = &mut self.child_states[base..base + self.stride];
        let count = col[self.stride - 1];

        let mut matches = [0u32; MAX_BRANCH_CAP as usize];
        for i in 0..cap {
            matches[i] = self.states[col[i] as usize].matching_dims(generated);
        }
        let match_row = max_index_unchecked(&matches[..cap]);
        let matched = matches[match_row] == self.dim as u32;
        let overflow = (count as usize == cap) & !matched;
        if overflow && self.overflow == OverflowPolicy::Fail {
            return Err(SearchError::BranchOverflow {
                depth,
                action_idx: cur_action as usize,
                cap: cap as u32,
            });
        }
        let hit = matched | overflow;

        let existing = col[match_row];
        let row = select_usize(match_row, count as usize, hit);
        let next = select_u32(existing, self.num_states, hit);
        let stored = if overflow {
            self.states[existing as usize]
        } else {
            *generated
        };
        col[row] = next;
        self.states[next as usize] = stored;
        self.state_depth[next as usize] = depth as u32;
        col[self.stride - 1] += !hit as u32;
        self.num_states += !hit as u32;
        self.overflow_events += overflow as u64;
        debug_assert!(self.num_states < self.state_capacity);
        Ok(next)
    }

    pub fn simulate_once<M: Mdp, T: SimTracer>(
        &mut self,
        env: &M,
        c: f64,
        rng: &mut DrawStream,
        tracer: &mut T,
    ) -> Result<f64, SearchError> {
        let na = self.num_actions;
        let mut cur_state_idx = 0u32;
        let mut cur_state = self.states[0];

        for l in 0..self.max_depth {
            let action_draw = rng.next_uniform();
            let row = self.select_child_action(l, cur_state_idx, action_draw, c);
            let action_idx = self.child_actions[cur_state_idx as usize * na + row];
            self.action_parent[action_idx as usize] = cur_state_idx;

            let noise_draw = rng.next_uniform();
            let generated = env.transition(&cur_state, row, noise_draw);
            cur_state_idx = self.select_child_state(l + 1, action_idx, &generated)?;
            self.state_parent[cur_state_idx as usize] = action_idx;
            cur_state = self.states[cur_state_idx as usize];
            tracer.on_layer(l + 1, action_idx, cur_state_idx, cur_state);
        }

        self.state_visits[cur_state_idx as usize] += 1;
        let mut summed = 0.0;
        for _ in 0..self.max_depth {
            summed += env.reward(&self.states[cur_state_idx as usize]);
            let a = self.state_parent[cur_state_idx as usize] as usize;
            self.action_visits[a] += 1;
            self.action_values[a] =
                incremental_mean_unchecked(self.action_values[a], summed, self.action_visits[a]);
            cur_state_idx = self.action_parent[a];
            self.state_visits[cur_state_idx as usize] += 1;
        }
        tracer.on_return(summed);
        Ok(summed)
    }

    pub fn best_action(&self) -> usize {
        let na = self.num_actions;
        let mut scores = [0f64; MAX_ACTIONS];
        for (r, &i) in self.child_actions[..na].iter().enumerate() {
            let i = i as usize;
            scores[r] = select_f64(
                self.action_values[i],
                f64::NEG_INFINITY,
                self.action_visits[i] > 0,
            );
        }
        max_index_unchecked(&scores[..na])
    }

    /// Snapshot with global indexes translated to per-depth creation ranks.
    pub fn snapshot(&self) -> TreeSnapshot {
        let na = self.num_actions;
        let unset = self.action_capacity;
        let mut action_rank = vec![0u32; self.num_actions_created as usize];
        let mut state_rank = vec![0u32; self.num_states as usize];
        let mut next = vec![0u32; self.max_depth + 1];
        for (i, rank) in action_rank.iter_mut().enumerate() {
            let d = self.action_depth[i] as usize;
            *rank = next[d];
            next[d] += 1;
        }
        next.fill(0);
        for (i, rank) in state_rank.iter_mut().enumerate() {
            let d = self.state_depth[i] as usize;
            *rank = next[d];
            next[d] += 1;
        }
        let mut row_of = vec![0u32; self.num_actions_created as usize];
        for s in 0..self.num_states as usize {
            for (r, &a) in self.child_actions[s * na..(s + 1) * na].iter().enumerate() {
                if a != unset {
                    row_of[a as usize] = r as u32;
                }
            }
        }

        let mut records = Vec::with_capacity((self.num_states + self.num_actions_created) as usize);
        for s in 0..self.num_states as usize {
            let depth = self.state_depth[s];
            records.push(NodeRecord {
                depth,
                kind: NodeKind::State,
                index: state_rank[s],
                parent: (depth > 0).then(|| action_rank[self.state_parent[s] as usize]),
                visits: self.state_visits[s],
                value: None,
                key: NodeKey::State(self.states[s]),
            });
        }
        for a in 0..self.num_actions_created as usize {
            records.push(NodeRecord {
                depth: self.action_depth[a],
                kind: NodeKind::Action,
                index: action_rank[a],
                parent: Some(state_rank[self.action_parent[a] as usize]),
                visits: self.action_visits[a],
                value: Some(self.action_values[a]),
                key: NodeKey::Action(row_of[a]),
            });
        }
        TreeSnapshot::new(self.max_depth as u32, records)
    }
}

pub struct UnsortedSearch {
    pub best_action: usize,
    pub store: FlatStore,
    pub draws: u64,
}

/// Same search as [`crate::array::search`] over the unsorted store.
pub fn search_unsorted<M: Mdp>(
    root: StateVec,
    env: &M,
    config: &SearchConfig,
) -> Result<UnsortedSearch, SearchError> {
    if root.dim() != env.dim() {
        return Err(SearchError::Config(format!(
            "root has dimension {}, environment has {}",
            root.dim(),
            env.dim()
        )));
    }
    let mut store = FlatStore::new(root, env.num_actions(), config)?;
    let mut rng = DrawStream::new(config.seed);
    let c = config.exploration.c();
    for _ in 0..config.num_simulations {
        store.simulate_once(env, c, &mut rng, &mut ())?;
    }
    Ok(UnsortedSearch {
        best_action: store.best_action(),
        draws: rng.draws(),
        store,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::array::search;
    use crate::mdp::{make_bandit_env, make_slippery_chain_env};

    #[test]
    fn matches_layered_store() {
        let env = make_slippery_chain_env(5, 0.3).unwrap();
        for seed in 0..5 {
            let cfg = SearchConfig::new(400, 6, 2, seed);
            let flat = search_unsorted(env.start(), &env, &cfg).unwrap();
            let layered = search(env.start(), &env, &cfg).unwrap();
            assert_eq!(flat.best_action, layered.best_action);
            assert_eq!(flat.draws, layered.draws);
            let (a, b) = (flat.store.snapshot(), layered.store.snapshot());
            assert_eq!(a.diff(&b, 0.0), None);
        }
    }

    #[test]
    fn fresh_store_snapshot() {
        let env = make_bandit_env(&[0.1, 0.2]).unwrap();
        let store = FlatStore::new(env.start(), 2, &SearchConfig::new(10, 2, 1, 0)).unwrap();
        assert_eq!(store.snapshot().records.len(), 1);
    }
}
