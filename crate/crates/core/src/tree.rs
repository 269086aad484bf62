//! Conventional linked-node UCT.
//!
//! Serves as the correctness oracle for the array searches and as the
//! benchmark baseline. Each node owns its children in a `Vec`, in creation
//! order; descent is recursive and branches on whether a child exists.
//!
//! Selection rules are the same as the array search: untried actions first,
//! sampled uniformly by one draw; otherwise the UCT argmax with ties to the
//! lowest row; child states matched exactly by a linear scan. One action draw
//! is consumed at every depth, even when it goes unused, so that both
//! implementations walk the same random stream.

use crate::config::{OverflowPolicy, SearchConfig, MAX_ACTIONS};
use crate::error::SearchError;
use crate::kernels::uct_value_unchecked;
use crate::mdp::{Mdp, StateVec};
use crate::rng::DrawStream;
use crate::snapshot::{NodeKey, NodeKind, NodeRecord, TreeSnapshot};
use crate::trace::SimTracer;

/// How argmax ties are broken. Only [`TieBreak::Lowest`] matches the array
/// searches; the other exists to check that the equivalence harness notices
/// a divergence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TieBreak {
    #[default]
    Lowest,
    Highest,
}

#[derive(Debug, Clone)]
struct ActionNode {
    row: u32,
    serial: u32,
    visits: u32,
    value: f64,
    children: Vec<StateNode>,
}

#[derive(Debug, Clone)]
struct StateNode {
    state: StateVec,
    serial: u32,
    visits: u32,
    actions: Vec<ActionNode>,
}

impl StateNode {
    fn new(state: StateVec, serial: u32) -> Self {
        Self {
            state,
            serial,
            visits: 0,
            actions: Vec::new(),
        }
    }
}

struct Ctx {
    num_actions: usize,
    max_depth: usize,
    caps: Vec<u32>,
    c: f64,
    overflow: OverflowPolicy,
    tie_break: TieBreak,
    overflow_events: u64,
    // next creation serial per depth
    action_serials: Vec<u32>,
    state_serials: Vec<u32>,
}

impl Ctx {
    fn beats(&self, candidate: f64, best: f64) -> bool {
        match self.tie_break {
            TieBreak::Lowest => candidate > best,
            TieBreak::Highest => candidate >= best,
        }
    }
}

/// A linked-node search tree.
pub struct SearchTree {
    root: StateNode,
    ctx: Ctx,
    simulations: u32,
}

impl SearchTree {
    pub fn new(
        root: StateVec,
        num_actions: usize,
        config: &SearchConfig,
    ) -> Result<Self, SearchError> {
        config.validate(num_actions)?;
        let depth = config.max_depth;
        Ok(Self {
            root: StateNode::new(root, 0),
            ctx: Ctx {
                num_actions,
                max_depth: depth,
                caps: config.state_branch_caps.clone(),
                c: config.exploration.c(),
                overflow: config.overflow,
                tie_break: TieBreak::Lowest,
                overflow_events: 0,
                action_serials: vec![0; depth + 1],
                state_serials: vec![0; depth + 1],
            },
            simulations: 0,
        })
    }

    pub fn with_tie_break(mut self, tie_break: TieBreak) -> Self {
        self.ctx.tie_break = tie_break;
        self
    }

    pub fn overflow_events(&self) -> u64 {
        self.ctx.overflow_events
    }

    pub fn simulations(&self) -> u32 {
        self.simulations
    }

    /// Node counts per depth as `(actions, states)`, index 0 being the root.
    pub fn nodes_per_depth(&self) -> Vec<(u32, u32)> {
        let mut out: Vec<(u32, u32)> = self
            .ctx
            .action_serials
            .iter()
            .zip(&self.ctx.state_serials)
            .map(|(&a, &s)| (a, s))
            .collect();
        out[0].1 = 1;
        out
    }

    pub fn simulate_once<M: Mdp, T: SimTracer>(
        &mut self,
        env: &M,
        rng: &mut DrawStream,
        tracer: &mut T,
    ) -> Result<f64, SearchError> {
        let total = descend(&mut self.root, 0, &mut self.ctx, env, rng, tracer)?;
        self.simulations += 1;
        tracer.on_return(total);
        Ok(total)
    }

    /// Best tried root action by value.
    pub fn best_action(&self) -> usize {
        let mut best: Option<(usize, f64)> = None;
        for row in 0..self.ctx.num_actions {
            if let Some(a) = self.root.actions.iter().find(|a| a.row as usize == row) {
                match best {
                    Some((_, v)) if !self.ctx.beats(a.value, v) => {}
                    _ => best = Some((row, a.value)),
                }
            }
        }
        best.map_or(0, |(row, _)| row)
    }

    pub fn root_child_visits(&self) -> Vec<u32> {
        let mut v = vec![0; self.ctx.num_actions];
        for a in &self.root.actions {
            v[a.row as usize] = a.visits;
        }
        v
    }

    pub fn snapshot(&self) -> TreeSnapshot {
        let mut records = Vec::new();
        let mut stack = vec![(&self.root, 0u32, None)];
        while let Some((node, depth, parent)) = stack.pop() {
            records.push(NodeRecord {
                depth,
                kind: NodeKind::State,
                index: node.serial,
                parent,
                visits: node.visits,
                value: None,
                key: NodeKey::State(node.state),
            });
            for a in &node.actions {
                records.push(NodeRecord {
                    depth: depth + 1,
                    kind: NodeKind::Action,
                    index: a.serial,
                    parent: Some(node.serial),
                    visits: a.visits,
                    value: Some(a.value),
                    key: NodeKey::Action(a.row),
                });
                for child in &a.children {
                    stack.push((child, depth + 1, Some(a.serial)));
                }
            }
        }
        TreeSnapshot::new(self.ctx.max_depth as u32, records)
    }
}

fn descend<M: Mdp, T: SimTracer>(
    node: &mut StateNode,
    depth: usize,
    ctx: &mut Ctx,
    env: &M,
    rng: &mut DrawStream,
    tracer: &mut T,
) -> Result<f64, SearchError> {
    if depth == ctx.max_depth {
        node.visits += 1;
        return Ok(0.0);
    }

    let draw = rng.next_uniform();
    let na = ctx.num_actions;
    let mut slot = [usize::MAX; MAX_ACTIONS];
    for (i, a) in node.actions.iter().enumerate() {
        slot[a.row as usize] = i;
    }

    let row = if node.actions.len() < na {
        let untried: Vec<usize> = (0..na).filter(|&r| slot[r] == usize::MAX).collect();
        let k = untried.len();
        untried[((draw * k as f64) as usize).min(k - 1)]
    } else {
        let mut best_row = 0;
        let mut best = f64::NEG_INFINITY;
        for r in 0..na {
            let a = &node.actions[slot[r]];
            let u = uct_value_unchecked(a.value, a.visits, node.visits, ctx.c);
            if r == 0 || ctx.beats(u, best) {
                best = u;
                best_row = r;
            }
        }
        best_row
    };

    let idx = if slot[row] == usize::MAX {
        let serial = ctx.action_serials[depth + 1];
        ctx.action_serials[depth + 1] += 1;
        node.actions.push(ActionNode {
            row: row as u32,
            serial,
            visits: 0,
            value: 0.0,
            children: Vec::new(),
        });
        node.actions.len() - 1
    } else {
        slot[row]
    };

    let from = node.state;
    let action = &mut node.actions[idx];
    let generated = env.transition(&from, row, rng.next_uniform());

    let child_idx = match action.children.iter().position(|c| c.state == generated) {
        Some(i) => i,
        None if action.children.len() < ctx.caps[depth] as usize => {
            let serial = ctx.state_serials[depth + 1];
            ctx.state_serials[depth + 1] += 1;
            action.children.push(StateNode::new(generated, serial));
            action.children.len() - 1
        }
        None => match ctx.overflow {
            OverflowPolicy::Fail => {
                return Err(SearchError::BranchOverflow {
                    depth: depth + 1,
                    action_idx: action.serial as usize,
                    cap: ctx.caps[depth],
                })
            }
            OverflowPolicy::ClampToBestMatch => {
                ctx.overflow_events += 1;
                let mut best = 0;
                for (i, c) in action.children.iter().enumerate() {
                    if c.state.matching_dims(&generated)
                        > action.children[best].state.matching_dims(&generated)
                    {
                        best = i;
                    }
                }
                best
            }
        },
    };

    let child = &mut action.children[child_idx];
    tracer.on_layer(depth + 1, action.serial, child.serial, child.state);
    let below = descend(child, depth + 1, ctx, env, rng, tracer)?;
    let total = below + env.reward(&child.state);

    action.visits += 1;
    action.value += (total - action.value) / action.visits as f64;
    node.visits += 1;
    Ok(total)
}

/// Result of a completed reference search.
pub struct TreeSearch {
    pub best_action: usize,
    pub tree: SearchTree,
    pub draws: u64,
}

pub fn search_ref<M: Mdp>(
    root: StateVec,
    env: &M,
    config: &SearchConfig,
) -> Result<TreeSearch, SearchError> {
    search_ref_with(root, env, config, TieBreak::Lowest, &mut ())
}

pub fn search_ref_with<M: Mdp, T: SimTracer>(
    root: StateVec,
    env: &M,
    config: &SearchConfig,
    tie_break: TieBreak,
    tracer: &mut T,
) -> Result<TreeSearch, SearchError> {
    if root.dim() != env.dim() {
        return Err(SearchError::Config(format!(
            "root has dimension {}, environment has {}",
            root.dim(),
            env.dim()
        )));
    }
    let mut tree = SearchTree::new(root, env.num_actions(), config)?.with_tie_break(tie_break);
    let mut rng = DrawStream::new(config.seed);
    for _ in 0..config.num_simulations {
        tree.simulate_once(env, &mut rng, tracer)?;
    }
    Ok(TreeSearch {
        best_action: tree.best_action(),
        draws: rng.draws(),
        tree,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mdp::{make_bandit_env, make_chain_env};

    #[test]
    fn fresh_tree_snapshot_is_root_only() {
        let env = make_chain_env(5).unwrap();
        let tree = SearchTree::new(env.start(), 2, &SearchConfig::new(10, 3, 1, 0)).unwrap();
        let snap = tree.snapshot();
        assert_eq!(snap.records.len(), 1);
        assert_eq!(snap.records[0].visits, 0);
    }

    #[test]
    fn bandit_best_arm() {
        let env = make_bandit_env(&[0.2, 0.5, 0.9]).unwrap();
        let out = search_ref(env.start(), &env, &SearchConfig::new(1_000, 1, 1, 5)).unwrap();
        assert_eq!(out.best_action, 2);
        assert_eq!(out.draws, 2_000);
        out.tree.snapshot().check_conservation(1_000).unwrap();
    }

    #[test]
    fn deterministic_snapshots() {
        let env = make_chain_env(5).unwrap();
        let cfg = SearchConfig::new(200, 4, 1, 8);
        let a = search_ref(env.start(), &env, &cfg)
            .unwrap()
            .tree
            .snapshot()
            .to_string();
        let b = search_ref(env.start(), &env, &cfg)
            .unwrap()
            .tree
            .snapshot()
            .to_string();
        assert_eq!(a, b);
    }

    #[test]
    fn nodes_per_depth_counts() {
        let env = make_bandit_env(&[0.2, 0.5, 0.9]).unwrap();
        let out = search_ref(env.start(), &env, &SearchConfig::new(50, 2, 1, 5)).unwrap();
        let counts = out.tree.nodes_per_depth();
        assert_eq!(counts[0], (0, 1));
        assert_eq!(counts[1], (3, 3));
        // each arm state has three actions all leading to the shared absorbing state
        assert_eq!(counts[2], (9, 9));
    }
}
