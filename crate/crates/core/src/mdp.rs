//! Generative MDP interface and the three planning environments.
//!
//! States live on an integer lattice. Every successor is produced by
//! [`EnvSpec::discretize`] applied to a continuous point, so child states can
//! be identified by exact integer equality.

use std::f64::consts::FRAC_1_SQRT_2;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{ContractError, EnvError};

/// Widest state the lattice supports.
pub const MAX_STATE_DIM: usize = 4;

/// Reserved coordinate value; never produced by [`EnvSpec::discretize`].
pub const SENTINEL_COORD: i32 = i32::MIN;

/// Number of heading sectors for the vehicle (45 degrees each).
pub const HEADING_SECTORS: i32 = 8;

/// Unit heading vector `(cos, sin)` of each sector.
const SECTOR_DIRECTIONS: [(f64, f64); 8] = [
    (1.0, 0.0),
    (FRAC_1_SQRT_2, FRAC_1_SQRT_2),
    (0.0, 1.0),
    (-FRAC_1_SQRT_2, FRAC_1_SQRT_2),
    (-1.0, 0.0),
    (-FRAC_1_SQRT_2, -FRAC_1_SQRT_2),
    (0.0, -1.0),
    (FRAC_1_SQRT_2, -FRAC_1_SQRT_2),
];

/// Equal-probability quantile table for the vehicle's lateral disturbance:
/// midpoints (p = 0.1, 0.3, 0.5, 0.7, 0.9) of a standard normal. One uniform
/// draw selects a bin, so at most five successors exist per (state, action).
pub const NOISE_QUANTILES: [f64; 5] = [
    -1.281_551_565_544_600_4,
    -0.524_400_512_708_040_7,
    0.0,
    0.524_400_512_708_040_7,
    1.281_551_565_544_600_4,
];

/// A discretized state. Equality is exact, element-wise, on the first `dim`
/// coordinates (unused slots are always zero).
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct StateVec {
    coords: [i32; MAX_STATE_DIM],
    dim: u8,
}

impl StateVec {
    pub fn new(coords: &[i32]) -> Result<Self, ContractError> {
        if coords.is_empty() || coords.len() > MAX_STATE_DIM {
            return Err(ContractError::new(format!(
                "state dimension must be in 1..={MAX_STATE_DIM}, got {}",
                coords.len()
            )));
        }
        if coords.contains(&SENTINEL_COORD) {
            return Err(ContractError::new(
                "coordinate collides with the sentinel value",
            ));
        }
        let mut out = [0; MAX_STATE_DIM];
        out[..coords.len()].copy_from_slice(coords);
        Ok(Self {
            coords: out,
            dim: coords.len() as u8,
        })
    }

    /// The never-matching placeholder state of the given dimension.
    pub fn sentinel(dim: usize) -> Self {
        assert!((1..=MAX_STATE_DIM).contains(&dim));
        let mut coords = [0; MAX_STATE_DIM];
        coords[..dim].fill(SENTINEL_COORD);
        Self {
            coords,
            dim: dim as u8,
        }
    }

    pub fn is_sentinel(&self) -> bool {
        self.coords().iter().all(|&c| c == SENTINEL_COORD)
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim as usize
    }

    #[inline]
    pub fn coords(&self) -> &[i32] {
        &self.coords[..self.dim as usize]
    }

    #[inline]
    pub fn coord(&self, i: usize) -> i32 {
        self.coords[i]
    }

    /// Number of dimensions in which the two states agree. The sentinel agrees
    /// with no real state in any dimension.
    #[inline(always)]
    pub fn matching_dims(&self, other: &StateVec) -> u32 {
        let mut n = 0u32;
        for i in 0..self.dim as usize {
            n += (self.coords[i] == other.coords[i]) as u32;
        }
        n
    }
}

impl fmt::Debug for StateVec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for StateVec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("[")?;
        for (i, c) in self.coords().iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{c}")?;
        }
        f.write_str("]")
    }
}

/// An environment-specific control.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Control {
    /// Vehicle: move `forward` world units after turning by `turn` sectors.
    Drive { forward: f64, turn: i32 },
    /// Chain: move by `delta` cells.
    Shift(i32),
    /// Bandit: pull this arm.
    Arm(usize),
}

/// The fixed, numbered action set shared by every depth of a search.
#[derive(Debug, Clone, PartialEq)]
pub struct ActionSet {
    actions: Vec<Control>,
}

impl ActionSet {
    pub fn new(actions: Vec<Control>) -> Result<Self, ContractError> {
        if actions.is_empty() {
            return Err(ContractError::new("action set must not be empty"));
        }
        Ok(Self { actions })
    }

    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }

    pub fn get(&self, idx: usize) -> Option<&Control> {
        self.actions.get(idx)
    }

    pub fn as_slice(&self) -> &[Control] {
        &self.actions
    }
}

/// Axis-aligned rectangle in world units, bounds inclusive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub min: [f64; 2],
    pub max: [f64; 2],
}

impl Rect {
    pub fn contains(&self, p: [f64; 2]) -> bool {
        p[0] >= self.min[0] && p[0] <= self.max[0] && p[1] >= self.min[1] && p[1] <= self.max[1]
    }

    /// Whether the open segment `a -> b` touches the rectangle (slab test).
    pub fn intersects_segment(&self, a: [f64; 2], b: [f64; 2]) -> bool {
        let (mut t0, mut t1) = (0.0f64, 1.0f64);
        for axis in 0..2 {
            let d = b[axis] - a[axis];
            if d.abs() < 1e-15 {
                if a[axis] < self.min[axis] || a[axis] > self.max[axis] {
                    return false;
                }
            } else {
                let mut lo = (self.min[axis] - a[axis]) / d;
                let mut hi = (self.max[axis] - a[axis]) / d;
                if lo > hi {
                    std::mem::swap(&mut lo, &mut hi);
                }
                t0 = t0.max(lo);
                t1 = t1.min(hi);
                if t0 > t1 {
                    return false;
                }
            }
        }
        true
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Goal {
    pub center: [f64; 2],
    pub radius: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum EnvKind {
    /// 3-DOF vehicle among rectangular obstacles. The goal region and the
    /// obstacles are absorbing.
    BugTrap {
        obstacles: Vec<Rect>,
        goal: Goal,
        obstacle_penalty: f64,
        goal_reward: f64,
    },
    /// 1-D line over `[-length, length]` with a tabulated reward per cell.
    Chain { length: i32, rewards: Vec<f64> },
    /// Depth-1 MDP: the root `[0]` leads to arm state `[k + 1]`, every arm
    /// state leads to the absorbing `[-1]`.
    Bandit { arm_rewards: Vec<f64> },
}

/// An immutable environment description.
#[derive(Debug, Clone, PartialEq)]
pub struct EnvSpec {
    dim: usize,
    actions: ActionSet,
    grid_resolution: f64,
    noise_scale: f64,
    horizon_hint: usize,
    start: StateVec,
    kind: EnvKind,
}

/// The interface every search plans over.
pub trait Mdp {
    fn dim(&self) -> usize;
    fn num_actions(&self) -> usize;
    /// Successor of `state` under `action`. `action` must be a valid index.
    fn transition(&self, state: &StateVec, action: usize, noise_draw: f64) -> StateVec;
    fn reward(&self, state: &StateVec) -> f64;
    /// Upper bound on distinct successors of one (state, action) pair.
    fn max_branching(&self) -> u32;
}

impl EnvSpec {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn actions(&self) -> &ActionSet {
        &self.actions
    }

    pub fn grid_resolution(&self) -> f64 {
        self.grid_resolution
    }

    pub fn noise_scale(&self) -> f64 {
        self.noise_scale
    }

    pub fn horizon_hint(&self) -> usize {
        self.horizon_hint
    }

    /// UCT exploration constant matched to the environment's reward scale:
    /// 10 for the bug trap, whose per-step rewards span several units, and 1
    /// for the unit-scale chain and bandit.
    pub fn default_exploration(&self) -> f64 {
        match self.kind {
            EnvKind::BugTrap { .. } => 10.0,
            _ => 1.0,
        }
    }

    /// Default initial state for episodes.
    pub fn start(&self) -> StateVec {
        self.start
    }

    pub fn kind(&self) -> &EnvKind {
        &self.kind
    }

    pub fn name(&self) -> &'static str {
        match self.kind {
            EnvKind::BugTrap { .. } => "bug_trap",
            EnvKind::Chain { .. } => "chain",
            EnvKind::Bandit { .. } => "bandit",
        }
    }

    /// Map a continuous point onto the lattice, rounding half away from zero.
    pub fn discretize(&self, point: &[f64]) -> Result<StateVec, ContractError> {
        if point.len() != self.dim {
            return Err(ContractError::new(format!(
                "point has {} coordinates, environment has {}",
                point.len(),
                self.dim
            )));
        }
        let mut coords = [0i32; MAX_STATE_DIM];
        for (slot, &v) in coords.iter_mut().zip(point) {
            if !v.is_finite() {
                return Err(ContractError::new(format!("non-finite coordinate {v}")));
            }
            let cell = (v / self.grid_resolution).round();
            if cell <= SENTINEL_COORD as f64 || cell > i32::MAX as f64 {
                return Err(ContractError::new(format!(
                    "coordinate {v} is outside the lattice"
                )));
            }
            *slot = cell as i32;
        }
        StateVec::new(&coords[..self.dim])
    }

    /// Checked form of [`Mdp::transition`].
    pub fn step(
        &self,
        state: &StateVec,
        action_idx: usize,
        noise_draw: f64,
    ) -> Result<StateVec, ContractError> {
        if action_idx >= self.actions.len() {
            return Err(ContractError::new(format!(
                "action {action_idx} out of range for {} actions",
                self.actions.len()
            )));
        }
        if state.dim() != self.dim {
            return Err(ContractError::new(format!(
                "state has dimension {}, environment has {}",
                state.dim(),
                self.dim
            )));
        }
        Ok(self.transition(state, action_idx, noise_draw))
    }

    /// World-frame (x, y) position of a vehicle state.
    pub fn position(&self, state: &StateVec) -> [f64; 2] {
        [
            state.coord(0) as f64 * self.grid_resolution,
            state.coord(1) as f64 * self.grid_resolution,
        ]
    }

    pub fn in_obstacle(&self, state: &StateVec) -> bool {
        match &self.kind {
            EnvKind::BugTrap { obstacles, .. } => {
                let p = self.position(state);
                obstacles.iter().any(|r| r.contains(p))
            }
            _ => false,
        }
    }

    /// Whether the state lies in the goal region (bug trap), at the rewarded
    /// end (chain), or on the best arm (bandit).
    pub fn in_goal(&self, state: &StateVec) -> bool {
        match &self.kind {
            EnvKind::BugTrap { goal, .. } => dist(self.position(state), goal.center) <= goal.radius,
            EnvKind::Chain { length, .. } => state.coord(0) == *length,
            EnvKind::Bandit { arm_rewards } => {
                let best = arm_rewards
                    .iter()
                    .cloned()
                    .fold(f64::NEG_INFINITY, f64::max);
                self.reward(state) == best && state.coord(0) > 0
            }
        }
    }

    fn vehicle_successor(
        &self,
        state: &StateVec,
        forward: f64,
        turn: i32,
        noise_draw: f64,
    ) -> StateVec {
        // goal and obstacles are absorbing
        if self.in_goal(state) || self.in_obstacle(state) {
            return *state;
        }
        let heading = (state.coord(2) + turn).rem_euclid(HEADING_SECTORS);
        let (cos, sin) = SECTOR_DIRECTIONS[heading as usize];
        let bin =
            ((noise_draw * NOISE_QUANTILES.len() as f64) as usize).min(NOISE_QUANTILES.len() - 1);
        let lateral = self.noise_scale * NOISE_QUANTILES[bin];
        let [x, y] = self.position(state);
        let point = [
            x + forward * cos - lateral * sin,
            y + forward * sin + lateral * cos,
            heading as f64 * self.grid_resolution,
        ];
        self.discretize(&point)
            .expect("vehicle successor left the lattice")
    }

    /// Parse the JSON environment document (see the README for the schema).
    pub fn from_json(text: &str) -> Result<Self, EnvError> {
        let doc: EnvDocument = serde_json::from_str(text)?;
        doc.build()
    }

    pub fn from_json_file(path: &Path) -> Result<Self, EnvError> {
        let text = std::fs::read_to_string(path).map_err(|source| EnvError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&EnvDocument::from_env(self)).expect("environment serializes")
    }
}

impl Mdp for EnvSpec {
    #[inline]
    fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    fn num_actions(&self) -> usize {
        self.actions.len()
    }

    fn transition(&self, state: &StateVec, action: usize, noise_draw: f64) -> StateVec {
        match (&self.kind, self.actions.as_slice()[action]) {
            (EnvKind::BugTrap { .. }, Control::Drive { forward, turn }) => {
                self.vehicle_successor(state, forward, turn, noise_draw)
            }
            (EnvKind::Chain { length, .. }, Control::Shift(delta)) => {
                let slipped = noise_draw < self.noise_scale;
                let moved = (state.coord(0) + delta).clamp(-*length, *length);
                let next = if slipped { state.coord(0) } else { moved };
                StateVec::new(&[next]).expect("chain cell")
            }
            (EnvKind::Bandit { .. }, Control::Arm(arm)) => {
                let next = if state.coord(0) == 0 {
                    arm as i32 + 1
                } else {
                    -1
                };
                StateVec::new(&[next]).expect("bandit cell")
            }
            (kind, control) => unreachable!("control {control:?} does not apply to {kind:?}"),
        }
    }

    fn reward(&self, state: &StateVec) -> f64 {
        match &self.kind {
            EnvKind::BugTrap {
                obstacles,
                goal,
                obstacle_penalty,
                goal_reward,
            } => {
                let p = self.position(state);
                let d = dist(p, goal.center);
                let inside = obstacles.iter().any(|r| r.contains(p));
                -d + if inside { *obstacle_penalty } else { 0.0 }
                    + if d <= goal.radius { *goal_reward } else { 0.0 }
            }
            EnvKind::Chain { length, rewards } => {
                let cell = state.coord(0) + length;
                usize::try_from(cell)
                    .ok()
                    .and_then(|i| rewards.get(i))
                    .copied()
                    .unwrap_or(0.0)
            }
            EnvKind::Bandit { arm_rewards } => {
                let arm = state.coord(0) - 1;
                usize::try_from(arm)
                    .ok()
                    .and_then(|i| arm_rewards.get(i))
                    .copied()
                    .unwrap_or(0.0)
            }
        }
    }

    fn max_branching(&self) -> u32 {
        match &self.kind {
            EnvKind::BugTrap { .. } if self.noise_scale > 0.0 => NOISE_QUANTILES.len() as u32,
            EnvKind::Chain { .. } if self.noise_scale > 0.0 => 2,
            _ => 1,
        }
    }
}

fn dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
}

/// Parameters for [`make_bug_trap_env`].
///
/// The default places a U-shaped obstacle between start and goal with its
/// opening facing the start, so driving straight at the goal ends in the cup.
#[derive(Debug, Clone, PartialEq)]
pub struct BugTrapParams {
    pub grid_resolution: f64,
    pub noise_scale: f64,
    /// `(forward, turn)` pairs.
    pub actions: Vec<(f64, i32)>,
    pub obstacles: Vec<Rect>,
    pub goal: Goal,
    pub obstacle_penalty: f64,
    /// Bonus for a state inside the goal region.
    pub goal_reward: f64,
    /// World x, world y, heading sector.
    pub start: (f64, f64, i32),
    pub horizon_hint: usize,
}

impl Default for BugTrapParams {
    fn default() -> Self {
        Self {
            grid_resolution: 0.25,
            noise_scale: 0.1,
            // forward, forward-left, forward-right
            actions: vec![(1.0, 0), (1.0, 1), (1.0, -1)],
            // Walls are thicker than one step, so no move can hop across.
            obstacles: vec![
                // closed side, facing the goal
                Rect {
                    min: [2.5, -1.5],
                    max: [3.75, 1.5],
                },
                // arms, extending back toward the start
                Rect {
                    min: [1.5, 0.5],
                    max: [3.75, 1.5],
                },
                Rect {
                    min: [1.5, -1.5],
                    max: [3.75, -0.5],
                },
            ],
            goal: Goal {
                center: [5.0, 0.0],
                radius: 0.75,
            },
            obstacle_penalty: -5.0,
            goal_reward: 0.0,
            start: (0.0, 0.0, 0),
            horizon_hint: 12,
        }
    }
}

pub fn make_bug_trap_env(params: BugTrapParams) -> Result<EnvSpec, EnvError> {
    if !(params.grid_resolution > 0.0) || !params.grid_resolution.is_finite() {
        return Err(EnvError::Invalid("grid_resolution must be positive".into()));
    }
    if !(params.noise_scale >= 0.0) || !params.noise_scale.is_finite() {
        return Err(EnvError::Invalid("noise_scale must be non-negative".into()));
    }
    if !(params.obstacle_penalty < 0.0) {
        return Err(EnvError::Invalid(
            "obstacle_penalty must be negative".into(),
        ));
    }
    if !params.goal_reward.is_finite() {
        return Err(EnvError::Invalid("goal_reward must be finite".into()));
    }
    if !(params.goal.radius > 0.0) {
        return Err(EnvError::Invalid("goal radius must be positive".into()));
    }
    for r in &params.obstacles {
        if !(r.min[0] <= r.max[0] && r.min[1] <= r.max[1]) {
            return Err(EnvError::Invalid(format!(
                "obstacle {r:?} has inverted bounds"
            )));
        }
    }
    if params
        .obstacles
        .iter()
        .any(|r| r.contains(params.goal.center))
    {
        return Err(EnvError::Invalid("goal lies inside an obstacle".into()));
    }
    let actions = ActionSet::new(
        params
            .actions
            .iter()
            .map(|&(forward, turn)| Control::Drive { forward, turn })
            .collect(),
    )?;
    let mut env = EnvSpec {
        dim: 3,
        actions,
        grid_resolution: params.grid_resolution,
        noise_scale: params.noise_scale,
        horizon_hint: params.horizon_hint,
        start: StateVec::new(&[0, 0, 0])?,
        kind: EnvKind::BugTrap {
            obstacles: params.obstacles,
            goal: params.goal,
            obstacle_penalty: params.obstacle_penalty,
            goal_reward: params.goal_reward,
        },
    };
    let (sx, sy, sh) = params.start;
    env.start = env.discretize(&[
        sx,
        sy,
        sh.rem_euclid(HEADING_SECTORS) as f64 * params.grid_resolution,
    ])?;
    if env.in_obstacle(&env.start) {
        return Err(EnvError::Invalid("start lies inside an obstacle".into()));
    }
    Ok(env)
}

/// Line over `[-length, length]` starting at 0, reward 1 at `+length`.
pub fn make_chain_env(length: i32) -> Result<EnvSpec, EnvError> {
    make_slippery_chain_env(length, 0.0)
}

/// Chain whose moves fail (the agent stays put) with probability `slip`.
pub fn make_slippery_chain_env(length: i32, slip: f64) -> Result<EnvSpec, EnvError> {
    if !(1..=1 << 20).contains(&length) {
        return Err(EnvError::Invalid(format!(
            "chain length {length} out of range"
        )));
    }
    if !(0.0..1.0).contains(&slip) {
        return Err(EnvError::Invalid(format!(
            "slip probability {slip} must lie in [0, 1)"
        )));
    }
    let mut rewards = vec![0.0; (2 * length + 1) as usize];
    *rewards.last_mut().unwrap() = 1.0;
    Ok(EnvSpec {
        dim: 1,
        actions: ActionSet::new(vec![Control::Shift(-1), Control::Shift(1)])?,
        grid_resolution: 1.0,
        noise_scale: slip,
        horizon_hint: length as usize,
        start: StateVec::new(&[0])?,
        kind: EnvKind::Chain { length, rewards },
    })
}

pub fn make_bandit_env(arm_rewards: &[f64]) -> Result<EnvSpec, EnvError> {
    if arm_rewards.is_empty() {
        return Err(EnvError::Invalid("bandit needs at least one arm".into()));
    }
    if arm_rewards.iter().any(|r| !r.is_finite()) {
        return Err(EnvError::Invalid("arm rewards must be finite".into()));
    }
    Ok(EnvSpec {
        dim: 1,
        actions: ActionSet::new((0..arm_rewards.len()).map(Control::Arm).collect())?,
        grid_resolution: 1.0,
        noise_scale: 0.0,
        horizon_hint: 1,
        start: StateVec::new(&[0])?,
        kind: EnvKind::Bandit {
            arm_rewards: arm_rewards.to_vec(),
        },
    })
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct EnvDocument {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    kind: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    dim: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    actions: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    grid_resolution: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    noise_scale: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    obstacles: Option<Vec<Rect>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    goal: Option<Goal>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    obstacle_penalty: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    goal_reward: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    start: Option<(f64, f64, i32)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    horizon_hint: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    length: Option<i32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    slip: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    arm_rewards: Option<Vec<f64>>,
}

fn required<T>(field: Option<T>, name: &str) -> Result<T, EnvError> {
    field.ok_or_else(|| EnvError::Invalid(format!("missing key `{name}`")))
}

impl EnvDocument {
    fn build(self) -> Result<EnvSpec, EnvError> {
        match self.kind.as_deref().unwrap_or("bug_trap") {
            "bug_trap" => {
                let dim = required(self.dim, "dim")?;
                if dim != 3 {
                    return Err(EnvError::Invalid(format!(
                        "bug_trap requires dim = 3, got {dim}"
                    )));
                }
                let actions = required(self.actions, "actions")?
                    .into_iter()
                    .map(|a| match a.as_slice() {
                        &[forward, turn] if turn.fract() == 0.0 => Ok((forward, turn as i32)),
                        other => Err(EnvError::Invalid(format!(
                            "bug_trap action must be [forward, integer turn], got {other:?}"
                        ))),
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                let defaults = BugTrapParams::default();
                make_bug_trap_env(BugTrapParams {
                    grid_resolution: required(self.grid_resolution, "grid_resolution")?,
                    noise_scale: required(self.noise_scale, "noise_scale")?,
                    actions,
                    obstacles: required(self.obstacles, "obstacles")?,
                    goal: required(self.goal, "goal")?,
                    obstacle_penalty: required(self.obstacle_penalty, "obstacle_penalty")?,
                    goal_reward: self.goal_reward.unwrap_or(defaults.goal_reward),
                    start: self.start.unwrap_or(defaults.start),
                    horizon_hint: self.horizon_hint.unwrap_or(defaults.horizon_hint),
                })
            }
            "chain" => {
                make_slippery_chain_env(required(self.length, "length")?, self.slip.unwrap_or(0.0))
            }
            "bandit" => make_bandit_env(&required(self.arm_rewards, "arm_rewards")?),
            other => Err(EnvError::Invalid(format!(
                "unknown environment kind `{other}`"
            ))),
        }
    }

    fn from_env(env: &EnvSpec) -> Self {
        let mut doc = EnvDocument {
            kind: Some(env.name().to_string()),
            dim: None,
            actions: None,
            grid_resolution: None,
            noise_scale: None,
            obstacles: None,
            goal: None,
            obstacle_penalty: None,
            goal_reward: None,
            start: None,
            horizon_hint: None,
            length: None,
            slip: None,
            arm_rewards: None,
        };
        match &env.kind {
            EnvKind::BugTrap {
                obstacles,
                goal,
                obstacle_penalty,
                goal_reward,
            } => {
                let [x, y] = env.position(&env.start);
                doc.dim = Some(3);
                doc.actions = Some(
                    env.actions
                        .as_slice()
                        .iter()
                        .map(|c| match *c {
                            Control::Drive { forward, turn } => vec![forward, turn as f64],
                            _ => unreachable!(),
                        })
                        .collect(),
                );
                doc.grid_resolution = Some(env.grid_resolution);
                doc.noise_scale = Some(env.noise_scale);
                doc.obstacles = Some(obstacles.clone());
                doc.goal = Some(*goal);
                doc.obstacle_penalty = Some(*obstacle_penalty);
                doc.goal_reward = Some(*goal_reward);
                doc.start = Some((x, y, env.start.coord(2)));
                doc.horizon_hint = Some(env.horizon_hint);
            }
            EnvKind::Chain { length, .. } => {
                doc.length = Some(*length);
                doc.slip = Some(env.noise_scale);
            }
            EnvKind::Bandit { arm_rewards } => doc.arm_rewards = Some(arm_rewards.clone()),
        }
        doc
    }
}
