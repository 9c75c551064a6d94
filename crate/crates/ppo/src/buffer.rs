use xslice_gcn::SliceGraph;

use crate::policy::Action;

#[derive(Debug, Clone)]
pub struct Transition {
    pub round: u64,
    pub graph: SliceGraph,
    pub state: Vec<f64>,
    pub action: Action,
    /// Normalized reward, or the penalty value for penalized rounds.
    pub reward: f64,
    /// Critic value of `state` under the behaviour parameters.
    pub value: f64,
    pub penalty: bool,
    /// Whether the transition feeds the actor term of the loss.
    pub actor_visible: bool,
}

/// Transitions of consecutive rounds awaiting an update.
#[derive(Debug, Clone, Default)]
pub struct RolloutBuffer {
    transitions: Vec<Transition>,
    capacity: usize,
}

impl RolloutBuffer {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity > 0);
        Self {
            transitions: Vec::with_capacity(capacity),
            capacity,
        }
    }

    pub fn push(&mut self, t: Transition) {
        debug_assert!(t.action.log_prob.is_finite());
        self.transitions.push(t);
    }

    pub fn len(&self) -> usize {
        self.transitions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.transitions.is_empty()
    }

    pub fn is_full(&self) -> bool {
        self.transitions.len() >= self.capacity
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn transitions(&self) -> &[Transition] {
        &self.transitions
    }

    pub fn take(&mut self) -> Vec<Transition> {
        std::mem::replace(&mut self.transitions, Vec::with_capacity(self.capacity))
    }

    pub fn clear(&mut self) {
        self.transitions.clear();
    }
}
