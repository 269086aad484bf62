use std::fmt;
use std::str::FromStr;

use crate::error::SearchError;
use crate::kernels::UctParams;

/// Widest action set the searches accept; per-node gathers use fixed-size
/// stack buffers of this length.
pub const MAX_ACTIONS: usize = 32;

/// Largest per-layer state branching cap.
pub const MAX_BRANCH_CAP: u32 = 64;

/// What to do when an action node already holds its cap of child states and
/// a new, unmatched state is generated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OverflowPolicy {
    /// Abort the search with [`SearchError::BranchOverflow`].
    #[default]
    Fail,
    /// Descend into the best partially matching existing child and count the
    /// event.
    ClampToBestMatch,
}

impl FromStr for OverflowPolicy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "fail" => Ok(Self::Fail),
            "clamp" => Ok(Self::ClampToBestMatch),
            other => Err(format!(
                "unknown overflow policy `{other}` (expected fail or clamp)"
            )),
        }
    }
}

impl fmt::Display for OverflowPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Fail => "fail",
            Self::ClampToBestMatch => "clamp",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchConfig {
    pub num_simulations: u32,
    /// Number of layers below the root.
    pub max_depth: usize,
    pub exploration: UctParams,
    /// Per-layer state branching caps for layers `1..=max_depth`.
    pub state_branch_caps: Vec<u32>,
    pub seed: u64,
    pub overflow: OverflowPolicy,
}

impl SearchConfig {
    /// Config with every layer capped at `cap`.
    pub fn new(num_simulations: u32, max_depth: usize, cap: u32, seed: u64) -> Self {
        Self {
            num_simulations,
            max_depth,
            exploration: UctParams::default(),
            state_branch_caps: vec![cap; max_depth],
            seed,
            overflow: OverflowPolicy::Fail,
        }
    }

    pub fn with_exploration(mut self, params: UctParams) -> Self {
        self.exploration = params;
        self
    }

    pub fn with_overflow(mut self, policy: OverflowPolicy) -> Self {
        self.overflow = policy;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self, num_actions: usize) -> Result<(), SearchError> {
        if self.num_simulations == 0 {
            return Err(SearchError::Config(
                "num_simulations must be positive".into(),
            ));
        }
        if self.max_depth == 0 {
            return Err(SearchError::Config("max_depth must be positive".into()));
        }
        if self.state_branch_caps.len() != self.max_depth {
            return Err(SearchError::Config(format!(
                "expected {} state branching caps, got {}",
                self.max_depth,
                self.state_branch_caps.len()
            )));
        }
        if let Some(bad) = self
            .state_branch_caps
            .iter()
            .find(|&&c| c == 0 || c > MAX_BRANCH_CAP)
        {
            return Err(SearchError::Config(format!(
                "state branching caps must lie in 1..={MAX_BRANCH_CAP}, got {bad}"
            )));
        }
        if num_actions == 0 || num_actions > MAX_ACTIONS {
            return Err(SearchError::Config(format!(
                "action count must lie in 1..={MAX_ACTIONS}, got {num_actions}"
            )));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validation() {
        assert!(SearchConfig::new(10, 3, 2, 0).validate(3).is_ok());
        assert!(SearchConfig::new(0, 3, 2, 0).validate(3).is_err());
        assert!(SearchConfig::new(10, 0, 2, 0).validate(3).is_err());
        assert!(SearchConfig::new(10, 3, 0, 0).validate(3).is_err());
        assert!(SearchConfig::new(10, 3, 2, 0).validate(0).is_err());
        let mut c = SearchConfig::new(10, 3, 2, 0);
        c.state_branch_caps.pop();
        assert!(c.validate(3).is_err());
    }

    #[test]
    fn policy_parse() {
        assert_eq!(
            "fail".parse::<OverflowPolicy>().unwrap(),
            OverflowPolicy::Fail
        );
        assert_eq!(
            "clamp".parse::<OverflowPolicy>().unwrap(),
            OverflowPolicy::ClampToBestMatch
        );
        assert!("maybe".parse::<OverflowPolicy>().is_err());
    }
}
