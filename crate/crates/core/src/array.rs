//! Layer-sorted array MCTS with predictable child selection.
//!
//! Every depth of the tree owns its own parallel arrays. Within a layer, nodes
//! are numbered in creation order, and parents store the indexes of their
//! children in the layer below. Child selection evaluates both the "existing
//! child" and the "new child" outcomes and combines them with selects, so the
//! only data-dependent jumps left are the fixed-trip-count loops.
//!
//! Per layer `l` the store keeps eight arrays:
//!
//! | array           | indexed by            | holds                                   |
//! |-----------------|-----------------------|-----------------------------------------|
//! | `states`        | state node            | the discretized state                   |
//! | `state_visits`  | state node            | visit count                             |
//! | `state_parent`  | state node            | parent action node (layer `l`)          |
//! | `child_actions` | `(state, action row)` | action node in layer `l + 1`, or UNSET  |
//! | `action_values` | action node           | mean return                             |
//! | `action_visits` | action node           | visit count                             |
//! | `action_parent` | action node           | parent state node (layer `l - 1`)       |
//! | `child_states`  | `(action, row)`       | child state nodes, then a count row     |
//!
//! UNSET is the next layer's action capacity; the action arrays carry one
//! extra zero slot at that index so gathers through UNSET read zeros. Unused
//! `child_states` entries point at one reserved state slot past the layer's
//! capacity, which always holds the sentinel state.

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
pub struct Layer {
    state_capacity: u32,
    action_capacity: u32,
    branch_cap: u32,
    num_states: u32,
    num_actions: u32,

    states: Vec<StateVec>,
    state_visits: Vec<u32>,
    state_parent: Vec<u32>,
    child_actions: Vec<u32>,

    action_values: Vec<f64>,
    action_visits: Vec<u32>,
    action_parent: Vec<u32>,
    child_states: Vec<u32>,
}

impl Layer {
    pub fn state_capacity(&self) -> u32 {
        self.state_capacity
    }

    pub fn action_capacity(&self) -> u32 {
        self.action_capacity
    }

    /// State branching cap `N_S` for this layer (1 for the root layer).
    pub fn branch_cap(&self) -> u32 {
        self.branch_cap
    }

    pub fn num_states(&self) -> u32 {
        self.num_states
    }

    pub fn num_actions(&self) -> u32 {
        self.num_actions
    }

    pub fn state(&self, idx: u32) -> &StateVec {
        &self.states[idx as usize]
    }

    pub fn state_visits(&self, idx: u32) -> u32 {
        self.state_visits[idx as usize]
    }

    pub fn action_value(&self, idx: u32) -> f64 {
        self.action_values[idx as usize]
    }

    pub fn action_visits(&self, idx: u32) -> u32 {
        self.action_visits[idx as usize]
    }

    /// Column of child action indexes for state `idx`, one entry per action
    /// row. Empty for the final layer.
    pub fn child_action_column(&self, idx: u32, num_actions: usize) -> &[u32] {
        if self.child_actions.is_empty() {
            return &[];
        }
        let base = idx as usize * num_actions;
        &self.child_actions[base..base + num_actions]
    }

    /// Column of child state indexes for action `idx`: `branch_cap` entries
    /// followed by the count row.
    pub fn child_state_column(&self, idx: u32) -> &[u32] {
        let stride = self.branch_cap as usize + 1;
        let base = idx as usize * stride;
        &self.child_states[base..base + stride]
    }
}

/// The whole search tree as per-depth arrays.
#[derive(Debug, Clone)]
pub struct LayerStore {
    layers: Vec<Layer>,
    num_actions: usize,
    dim: usize,
    overflow: OverflowPolicy,
    overflow_events: u64,
    simulations: u32,
}

/// Per-layer `(action capacity, state capacity)` for layers `1..=max_depth`,
/// following the branching recurrence clamped by the simulation budget.
pub fn layer_capacities(
    num_actions: usize,
    num_simulations: u32,
    caps: &[u32],
) -> Result<Vec<(u32, u32)>, SearchError> {
    let n = num_simulations as u64;
    let mut out = Vec::with_capacity(caps.len());
    let mut child = num_actions as u64;
    for (i, &cap) in caps.iter().enumerate() {
        let actions = child;
        let states = n.min(actions * cap as u64);
        child = n.min(states * num_actions as u64);
        // One extra slot (UNSET) must still be addressable.
        if actions >= u32::MAX as u64 || states >= u32::MAX as u64 {
            return Err(SearchError::CapacityOverflow { depth: i + 1 });
        }
        out.push((actions as u32, states as u32));
    }
    Ok(out)
}

impl LayerStore {
    /// Allocate and initialize every layer for a search from `root`.
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
        let dim = root.dim();
        let zero = StateVec::new(&vec![0; dim]).expect("zero state");
        let mut layers = Vec::with_capacity(config.max_depth + 1);

        let root_unset = caps[0].0;
        layers.push(Layer {
            state_capacity: 1,
            action_capacity: 0,
            branch_cap: 1,
            num_states: 1,
            num_actions: 0,
            states: vec![root],
            state_visits: vec![0],
            state_parent: vec![0],
            child_actions: vec![root_unset; num_actions],
            action_values: vec![0.0],
            action_visits: vec![0],
            action_parent: Vec::new(),
            child_states: Vec::new(),
        });

        for (l, &(action_cap, state_cap)) in caps.iter().enumerate() {
            let branch_cap = config.state_branch_caps[l];
            let last = l + 1 == caps.len();
            let mut states = vec![zero; state_cap as usize + 1];
            states[state_cap as usize] = StateVec::sentinel(dim);
            let mut child_states = vec![state_cap; (branch_cap as usize + 1) * action_cap as usize];
            for col in child_states.chunks_exact_mut(branch_cap as usize + 1) {
                col[branch_cap as usize] = 0;
            }
            let child_actions = if last {
                Vec::new()
            } else {
                let unset = caps[l + 1].0;
                vec![unset; num_actions * state_cap as usize]
            };
            layers.push(Layer {
                state_capacity: state_cap,
                action_capacity: action_cap,
                branch_cap,
                num_states: 0,
                num_actions: 0,
                states,
                state_visits: vec![0; state_cap as usize + 1],
                state_parent: vec![0; state_cap as usize + 1],
                child_actions,
                action_values: vec![0.0; action_cap as usize + 1],
                action_visits: vec![0; action_cap as usize + 1],
                action_parent: vec![0; action_cap as usize],
                child_states,
            });
        }

        Ok(Self {
            layers,
            num_actions,
            dim,
            overflow: config.overflow,
            overflow_events: 0,
            simulations: 0,
        })
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn max_depth(&self) -> usize {
        self.layers.len() - 1
    }

    pub fn num_actions(&self) -> usize {
        self.num_actions
    }

    pub fn overflow_events(&self) -> u64 {
        self.overflow_events
    }

    pub fn simulations(&self) -> u32 {
        self.simulations
    }

    pub fn root_state(&self) -> StateVec {
        self.layers[0].states[0]
    }

    /// Choose the action row to take from state `cur_state` at `depth`,
    /// creating the child action node in layer `depth + 1` when the choice is
    /// an untried action.
    pub fn select_child_action(
        &mut self,
        depth: usize,
        cur_state: u32,
        draw: f64,
        c: f64,
    ) -> usize {
        let na = self.num_actions;
        let (upper, lower) = self.layers.split_at_mut(depth + 1);
        let upper = &mut upper[depth];
        let lower = &mut lower[0];
        let base = cur_state as usize * na;
        let col = &mut upper.child_actions[base..base + na];

        let mut visits = [0u32; MAX_ACTIONS];
        let mut values = [0f64; MAX_ACTIONS];
        for r in 0..na {
            let i = col[r] as usize;
            visits[r] = lower.action_visits[i];
            values[r] = lower.action_values[i];
        }
        let visits = &visits[..na];
        let untried = any_unvisited(visits);
        let parent_visits = upper.state_visits[cur_state as usize];
        debug_assert!(
            untried || parent_visits > 0,
            "UCT consulted with zero parent visits"
        );

        let mut uct = [0f64; MAX_ACTIONS];
        for r in 0..na {
            uct[r] = uct_value_unchecked(values[r], visits[r], parent_visits, c);
        }
        let best = max_index_unchecked(&uct[..na]);
        let fresh = random_untried(visits, draw);

        let next_action = select_usize(fresh, best, untried);
        let next_idx = select_u32(lower.num_actions, col[best], untried);
        col[next_action] = next_idx;
        lower.num_actions += untried as u32;
        debug_assert!(lower.num_actions <= lower.action_capacity);
        next_action
    }

    /// Find or create the child of action node `cur_action` (layer `depth`)
    /// holding `generated`; returns its state index in layer `depth`.
    pub fn select_child_state(
        &mut self,
        depth: usize,
        cur_action: u32,
        generated: &StateVec,
    ) -> Result<u32, SearchError> {
        let dim = self.dim as u32;
        let layer = &mut self.layers[depth];
        let cap = layer.branch_cap as usize;
        let base = cur_action as usize * (cap + 1);
        let col = &mut layer.child_states[base..base + cap + 1];
        let count = col[cap];

        let mut matches = [0u32; MAX_BRANCH_CAP as usize];
        for i in 0..cap {
            matches[i] = layer.states[col[i] as usize].matching_dims(generated);
        }
        let match_row = max_index_unchecked(&matches[..cap]);
        let matched = matches[match_row] == dim;
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
        let next = select_u32(existing, layer.num_states, hit);
        // Under overflow the existing child keeps its own state.
        let stored = if overflow {
            layer.states[existing as usize]
        } else {
            *generated
        };
        col[row] = next;
        layer.states[next as usize] = stored;
        col[cap] += !hit as u32;
        layer.num_states += !hit as u32;
        self.overflow_events += overflow as u64;
        debug_assert!(layer.num_states <= layer.state_capacity);
        Ok(next)
    }

    /// One descent to `max_depth` and the backup of its return. Consumes
    /// exactly two draws per layer: action selection, then transition noise.
    pub fn simulate_once<M: Mdp, T: SimTracer>(
        &mut self,
        env: &M,
        c: f64,
        rng: &mut DrawStream,
        tracer: &mut T,
    ) -> Result<f64, SearchError> {
        let max_depth = self.max_depth();
        let na = self.num_actions;
        let mut cur_state_idx = 0u32;
        let mut cur_state = self.layers[0].states[0];

        for l in 0..max_depth {
            let action_draw = rng.next_uniform();
            let row = self.select_child_action(l, cur_state_idx, action_draw, c);
            let action_idx = self.layers[l].child_actions[cur_state_idx as usize * na + row];
            self.layers[l + 1].action_parent[action_idx as usize] = cur_state_idx;

            let noise_draw = rng.next_uniform();
            let generated = env.transition(&cur_state, row, noise_draw);
            cur_state_idx = self.select_child_state(l + 1, action_idx, &generated)?;
            let below = &mut self.layers[l + 1];
            below.state_parent[cur_state_idx as usize] = action_idx;
            cur_state = below.states[cur_state_idx as usize];
            tracer.on_layer(l + 1, action_idx, cur_state_idx, cur_state);
        }

        self.layers[max_depth].state_visits[cur_state_idx as usize] += 1;
        let mut summed = 0.0;
        for l in (0..max_depth).rev() {
            let below = &mut self.layers[l + 1];
            summed += env.reward(&below.states[cur_state_idx as usize]);
            let a = below.state_parent[cur_state_idx as usize] as usize;
            below.action_visits[a] += 1;
            below.action_values[a] =
                incremental_mean_unchecked(below.action_values[a], summed, below.action_visits[a]);
            cur_state_idx = below.action_parent[a];
            self.layers[l].state_visits[cur_state_idx as usize] += 1;
        }
        self.simulations += 1;
        tracer.on_return(summed);
        Ok(summed)
    }

    /// Root action row with the greatest value among tried actions; ties go
    /// to the lowest row.
    pub fn best_action(&self) -> usize {
        let na = self.num_actions;
        let col = &self.layers[0].child_actions[..na];
        let l1 = &self.layers[1];
        let mut scores = [0f64; MAX_ACTIONS];
        for r in 0..na {
            let i = col[r] as usize;
            scores[r] = select_f64(
                l1.action_values[i],
                f64::NEG_INFINITY,
                l1.action_visits[i] > 0,
            );
        }
        max_index_unchecked(&scores[..na])
    }

    /// Visit counts of the root's children by action row.
    pub fn root_child_visits(&self) -> Vec<u32> {
        let l1 = &self.layers[1];
        self.layers[0].child_actions[..self.num_actions]
            .iter()
            .map(|&i| l1.action_visits[i as usize])
            .collect()
    }

    /// Values of the root's children by action row (0 for untried rows).
    pub fn root_child_values(&self) -> Vec<f64> {
        let l1 = &self.layers[1];
        self.layers[0].child_actions[..self.num_actions]
            .iter()
            .map(|&i| l1.action_values[i as usize])
            .collect()
    }

    pub fn snapshot(&self) -> TreeSnapshot {
        let na = self.num_actions;
        let mut records = vec![NodeRecord {
            depth: 0,
            kind: NodeKind::State,
            index: 0,
            parent: None,
            visits: self.layers[0].state_visits[0],
            value: None,
            key: NodeKey::State(self.layers[0].states[0]),
        }];
        for l in 1..self.layers.len() {
            let (upper, layer) = (&self.layers[l - 1], &self.layers[l]);
            let unset = layer.action_capacity;
            let mut row_of = vec![u32::MAX; layer.num_actions as usize];
            for s in 0..upper.num_states as usize {
                for (r, &a) in upper.child_actions[s * na..(s + 1) * na].iter().enumerate() {
                    if a != unset {
                        row_of[a as usize] = r as u32;
                    }
                }
            }
            for a in 0..layer.num_actions {
                records.push(NodeRecord {
                    depth: l as u32,
                    kind: NodeKind::Action,
                    index: a,
                    parent: Some(layer.action_parent[a as usize]),
                    visits: layer.action_visits[a as usize],
                    value: Some(layer.action_values[a as usize]),
                    key: NodeKey::Action(row_of[a as usize]),
                });
            }
            for s in 0..layer.num_states {
                records.push(NodeRecord {
                    depth: l as u32,
                    kind: NodeKind::State,
                    index: s,
                    parent: Some(layer.state_parent[s as usize]),
                    visits: layer.state_visits[s as usize],
                    value: None,
                    key: NodeKey::State(layer.states[s as usize]),
                });
            }
        }
        TreeSnapshot::new(self.max_depth() as u32, records)
    }

    /// Structural checks specific to the array layout: counters within
    /// capacity, count rows consistent with column contents, unwritten
    /// entries pointing at a sentinel slot, UNSET flags only where no child
    /// exists.
    pub fn check_layout(&self) -> Result<(), String> {
        let na = self.num_actions;
        for (l, layer) in self.layers.iter().enumerate().skip(1) {
            if layer.num_states > layer.state_capacity || layer.num_actions > layer.action_capacity
            {
                return Err(format!("layer {l}: counters exceed capacity"));
            }
            if layer.action_visits[layer.action_capacity as usize] != 0
                || layer.action_values[layer.action_capacity as usize] != 0.0
            {
                return Err(format!("layer {l}: UNSET slot was written"));
            }
            let cap = layer.branch_cap as usize;
            let sentinel_slot = layer.state_capacity;
            let mut total = 0u64;
            for a in 0..layer.action_capacity {
                let col = layer.child_state_column(a);
                let count = col[cap] as usize;
                if count > cap {
                    return Err(format!(
                        "layer {l} action {a}: count {count} exceeds cap {cap}"
                    ));
                }
                if a >= layer.num_actions && count != 0 {
                    return Err(format!("layer {l}: unused action column {a} has children"));
                }
                total += count as u64;
                for (row, &s) in col[..cap].iter().enumerate() {
                    if row < count {
                        if s >= layer.num_states || layer.state_parent[s as usize] != a {
                            return Err(format!("layer {l} action {a} row {row}: bad child {s}"));
                        }
                    } else if s != sentinel_slot {
                        return Err(format!(
                            "layer {l} action {a} row {row}: unwritten entry points at {s}"
                        ));
                    }
                }
            }
            if total != layer.num_states as u64 {
                return Err(format!(
                    "layer {l}: count rows sum to {total}, layer has {}",
                    layer.num_states
                ));
            }
            if !layer.states[sentinel_slot as usize].is_sentinel() {
                return Err(format!("layer {l}: sentinel slot overwritten"));
            }
        }
        for (l, pair) in self.layers.windows(2).enumerate() {
            let (upper, lower) = (&pair[0], &pair[1]);
            let unset = lower.action_capacity;
            let mut seen = vec![false; lower.num_actions as usize];
            for s in 0..upper.state_capacity as usize {
                for &a in &upper.child_actions[s * na..(s + 1) * na] {
                    if a == unset {
                        continue;
                    }
                    if s >= upper.num_states as usize || a >= lower.num_actions {
                        return Err(format!(
                            "layer {l} state {s}: child action {a} out of range"
                        ));
                    }
                    if std::mem::replace(&mut seen[a as usize], true) {
                        return Err(format!("layer {}: action {a} has two parents", l + 1));
                    }
                    if lower.action_parent[a as usize] as usize != s {
                        return Err(format!("layer {}: action {a} parent mismatch", l + 1));
                    }
                }
            }
            if seen.iter().any(|&x| !x) {
                return Err(format!("layer {}: orphan action node", l + 1));
            }
        }
        Ok(())
    }
}

/// Result of a completed array search.
#[derive(Debug, Clone)]
pub struct ArraySearch {
    pub best_action: usize,
    pub store: LayerStore,
    pub draws: u64,
}

/// Run `config.num_simulations` simulations from `root` and return the best
/// root action together with the final store.
pub fn search<M: Mdp>(
    root: StateVec,
    env: &M,
    config: &SearchConfig,
) -> Result<ArraySearch, SearchError> {
    search_traced(root, env, config, &mut ())
}

pub fn search_traced<M: Mdp, T: SimTracer>(
    root: StateVec,
    env: &M,
    config: &SearchConfig,
    tracer: &mut T,
) -> Result<ArraySearch, SearchError> {
    if root.dim() != env.dim() {
        return Err(SearchError::Config(format!(
            "root has dimension {}, environment has {}",
            root.dim(),
            env.dim()
        )));
    }
    let mut store = LayerStore::new(root, env.num_actions(), config)?;
    let mut rng = DrawStream::new(config.seed);
    let c = config.exploration.c();
    for _ in 0..config.num_simulations {
        store.simulate_once(env, c, &mut rng, tracer)?;
    }
    Ok(ArraySearch {
        best_action: store.best_action(),
        draws: rng.draws(),
        store,
    })
}
