//! Layout-independent dump of a search tree.
//!
//! Text format, one record per line after a header:
//!
//! ```text
//! # layered-mcts snapshot v1 max_depth=<D>
//! <depth> <kind> <index> <parent> <visits> <value> <key>
//! ```
//!
//! * `kind` is `A` (action node) or `S` (state node).
//! * `index` is the node's creation rank within its depth and kind.
//! * `parent` is the parent's index (an action at the same depth for state
//!   nodes, a state at `depth - 1` for action nodes), or `-` for the root.
//! * `value` is the mean return in shortest round-trip scientific notation
//!   for action nodes, `-` for state nodes.
//! * `key` is `a=<row>` for action nodes and `s=[c0,c1,...]` for state nodes.
//!
//! Records are ordered by depth, then kind (actions before states), then
//! index.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::str::FromStr;

use crate::mdp::StateVec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum NodeKind {
    Action,
    State,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NodeKey {
    Action(u32),
    State(StateVec),
}

#[derive(Debug, Clone, PartialEq)]
pub struct NodeRecord {
    pub depth: u32,
    pub kind: NodeKind,
    pub index: u32,
    pub parent: Option<u32>,
    pub visits: u32,
    pub value: Option<f64>,
    pub key: NodeKey,
}

impl NodeRecord {
    fn sort_key(&self) -> (u32, NodeKind, u32) {
        (self.depth, self.kind, self.index)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TreeSnapshot {
    pub max_depth: u32,
    pub records: Vec<NodeRecord>,
}

/// First point where two snapshots disagree.
#[derive(Debug, Clone, PartialEq)]
pub struct Divergence {
    pub depth: u32,
    pub kind: NodeKind,
    pub index: u32,
    pub field: &'static str,
    pub left: String,
    pub right: String,
}

impl fmt::Display for Divergence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kind = match self.kind {
            NodeKind::Action => "action",
            NodeKind::State => "state",
        };
        write!(
            f,
            "depth {} {kind} node {}: field `{}` differs ({} vs {})",
            self.depth, self.index, self.field, self.left, self.right
        )
    }
}

impl TreeSnapshot {
    /// Builds a snapshot, putting records into canonical order.
    pub fn new(max_depth: u32, mut records: Vec<NodeRecord>) -> Self {
        records.sort_by_key(NodeRecord::sort_key);
        Self { max_depth, records }
    }

    pub fn root(&self) -> Option<&NodeRecord> {
        self.records
            .first()
            .filter(|r| r.depth == 0 && r.kind == NodeKind::State)
    }

    pub fn nodes_at(&self, depth: u32, kind: NodeKind) -> impl Iterator<Item = &NodeRecord> {
        self.records
            .iter()
            .filter(move |r| r.depth == depth && r.kind == kind)
    }

    /// Compare against `other`. Integers, keys and structure must match
    /// exactly; values within `rel_tol` relative error.
    pub fn diff(&self, other: &TreeSnapshot, rel_tol: f64) -> Option<Divergence> {
        if self.max_depth != other.max_depth {
            return Some(Divergence {
                depth: 0,
                kind: NodeKind::State,
                index: 0,
                field: "max_depth",
                left: self.max_depth.to_string(),
                right: other.max_depth.to_string(),
            });
        }
        for (a, b) in self.records.iter().zip(&other.records) {
            let at = |field, left: String, right: String| {
                let r = if a.sort_key() <= b.sort_key() { a } else { b };
                Some(Divergence {
                    depth: r.depth,
                    kind: r.kind,
                    index: r.index,
                    field,
                    left,
                    right,
                })
            };
            if a.sort_key() != b.sort_key() {
                return at(
                    "presence",
                    format!("{:?}", a.sort_key()),
                    format!("{:?}", b.sort_key()),
                );
            }
            if a.parent != b.parent {
                return at("parent", fmt_parent(a.parent), fmt_parent(b.parent));
            }
            if a.visits != b.visits {
                return at("visits", a.visits.to_string(), b.visits.to_string());
            }
            if a.key != b.key {
                return at("key", fmt_key(&a.key), fmt_key(&b.key));
            }
            match (a.value, b.value) {
                (Some(x), Some(y)) if !values_close(x, y, rel_tol) => {
                    return at("value", format!("{x:e}"), format!("{y:e}"));
                }
                (Some(_), None) | (None, Some(_)) => {
                    return at("value", fmt_value(a.value), fmt_value(b.value));
                }
                _ => {}
            }
        }
        let (n, m) = (self.records.len(), other.records.len());
        if n != m {
            let extra = if n > m {
                &self.records[m]
            } else {
                &other.records[n]
            };
            return Some(Divergence {
                depth: extra.depth,
                kind: extra.kind,
                index: extra.index,
                field: "presence",
                left: if n > m { "present" } else { "absent" }.into(),
                right: if n > m { "absent" } else { "present" }.into(),
            });
        }
        None
    }

    /// Checks visit conservation and child uniqueness. `num_simulations` is
    /// the expected root visit count.
    pub fn check_conservation(&self, num_simulations: u32) -> Result<(), String> {
        let root = self.root().ok_or("snapshot has no root")?;
        if root.visits != num_simulations {
            return Err(format!("root visits {} != {num_simulations}", root.visits));
        }
        // Child-visit sums keyed by (parent depth, parent kind, parent index).
        let mut sums: HashMap<(u32, NodeKind, u32), u64> = HashMap::new();
        let mut keys: HashSet<(u32, NodeKind, u32, String)> = HashSet::new();
        for r in &self.records {
            let Some(parent) = r.parent else { continue };
            let parent_id = match r.kind {
                NodeKind::Action => (r.depth - 1, NodeKind::State, parent),
                NodeKind::State => (r.depth, NodeKind::Action, parent),
            };
            *sums.entry(parent_id).or_default() += r.visits as u64;
            if !keys.insert((parent_id.0, parent_id.1, parent_id.2, fmt_key(&r.key))) {
                return Err(format!(
                    "duplicate child {} under {:?} node {} at depth {}",
                    fmt_key(&r.key),
                    parent_id.1,
                    parent,
                    parent_id.0
                ));
            }
        }
        for r in &self.records {
            if r.kind == NodeKind::State && r.depth == self.max_depth {
                continue;
            }
            let children = sums.get(&(r.depth, r.kind, r.index)).copied().unwrap_or(0);
            if children != r.visits as u64 {
                return Err(format!(
                    "{:?} node {} at depth {} has {} visits but its children sum to {children}",
                    r.kind, r.index, r.depth, r.visits
                ));
            }
        }
        Ok(())
    }
}

fn values_close(a: f64, b: f64, rel_tol: f64) -> bool {
    a.to_bits() == b.to_bits() || (a - b).abs() <= rel_tol * a.abs().max(b.abs())
}

fn fmt_parent(p: Option<u32>) -> String {
    p.map_or_else(|| "-".to_string(), |p| p.to_string())
}

fn fmt_value(v: Option<f64>) -> String {
    v.map_or_else(|| "-".to_string(), |v| format!("{v:e}"))
}

fn fmt_key(k: &NodeKey) -> String {
    match k {
        NodeKey::Action(row) => format!("a={row}"),
        NodeKey::State(s) => format!("s={s}"),
    }
}

const HEADER: &str = "# layered-mcts snapshot v1 max_depth=";

impl fmt::Display for TreeSnapshot {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{HEADER}{}", self.max_depth)?;
        for r in &self.records {
            let kind = match r.kind {
                NodeKind::Action => 'A',
                NodeKind::State => 'S',
            };
            writeln!(
                f,
                "{} {kind} {} {} {} {} {}",
                r.depth,
                r.index,
                fmt_parent(r.parent),
                r.visits,
                fmt_value(r.value),
                fmt_key(&r.key)
            )?;
        }
        Ok(())
    }
}

impl FromStr for TreeSnapshot {
    type Err = String;

    fn from_str(text: &str) -> Result<Self, Self::Err> {
        let mut lines = text.lines();
        let header = lines.next().ok_or("empty snapshot")?;
        let max_depth = header
            .strip_prefix(HEADER)
            .ok_or_else(|| format!("bad header `{header}`"))?
            .trim()
            .parse::<u32>()
            .map_err(|e| format!("bad max_depth: {e}"))?;
        let mut records = Vec::new();
        for (n, line) in lines.enumerate().filter(|(_, l)| !l.trim().is_empty()) {
            let err = |what: &str| format!("line {}: {what}: `{line}`", n + 2);
            let f: Vec<&str> = line.split_whitespace().collect();
            if f.len() != 7 {
                return Err(err("expected 7 fields"));
            }
            let num = |s: &str| s.parse::<u32>().map_err(|_| err("bad integer"));
            let kind = match f[1] {
                "A" => NodeKind::Action,
                "S" => NodeKind::State,
                _ => return Err(err("bad kind")),
            };
            let parent = if f[3] == "-" { None } else { Some(num(f[3])?) };
            let value = if f[5] == "-" {
                None
            } else {
                Some(f[5].parse::<f64>().map_err(|_| err("bad value"))?)
            };
            let key = if let Some(row) = f[6].strip_prefix("a=") {
                NodeKey::Action(num(row)?)
            } else if let Some(s) = f[6].strip_prefix("s=[").and_then(|s| s.strip_suffix(']')) {
                let coords = s
                    .split(',')
                    .map(|c| c.parse::<i32>().map_err(|_| err("bad coordinate")))
                    .collect::<Result<Vec<_>, _>>()?;
                NodeKey::State(StateVec::new(&coords).map_err(|e| err(&e.message))?)
            } else {
                return Err(err("bad key"));
            };
            records.push(NodeRecord {
                depth: num(f[0])?,
                kind,
                index: num(f[2])?,
                parent,
                visits: num(f[4])?,
                value,
                key,
            });
        }
        Ok(TreeSnapshot::new(max_depth, records))
    }
}
