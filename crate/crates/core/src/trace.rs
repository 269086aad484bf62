//! Optional per-simulation trajectory recording.

use crate::mdp::StateVec;

/// Receives the path of each simulation. The unit type records nothing and
/// compiles away.
pub trait SimTracer {
    fn on_layer(&mut self, depth: usize, action_idx: u32, state_idx: u32, state: StateVec);
    fn on_return(&mut self, total: f64);
}

impl SimTracer for () {
    #[inline(always)]
    fn on_layer(&mut self, _: usize, _: u32, _: u32, _: StateVec) {}
    #[inline(always)]
    fn on_return(&mut self, _: f64) {}
}

/// One layer of a recorded simulation: the action node taken into layer
/// `depth` and the state node reached there.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceStep {
    pub depth: usize,
    pub action_idx: u32,
    pub state_idx: u32,
    pub state: StateVec,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Trajectory {
    pub steps: Vec<TraceStep>,
    pub total: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrajectoryLog {
    pub simulations: Vec<Trajectory>,
    open: Trajectory,
}

impl TrajectoryLog {
    pub fn new() -> Self {
        Self::default()
    }
}

impl SimTracer for TrajectoryLog {
    fn on_layer(&mut self, depth: usize, action_idx: u32, state_idx: u32, state: StateVec) {
        self.open.steps.push(TraceStep {
            depth,
            action_idx,
            state_idx,
            state,
        });
    }

    fn on_return(&mut self, total: f64) {
        let mut done = std::mem::take(&mut self.open);
        done.total = total;
        self.simulations.push(done);
    }
}
