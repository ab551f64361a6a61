use crate::wfst::StateId;

use super::history::ROOT;

pub(crate) const NO_TRAIL: u32 = u32::MAX;

/// A live hypothesis head.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Token {
    pub state: StateId,
    pub cost: f64,
    /// Index of the originating record in the previous history layer.
    pub prev: u32,
    // Head of this frame's output-label trail.
    pub(crate) trail: u32,
}

impl Token {
    pub fn new(state: StateId, cost: f64) -> Self {
        Token {
            state,
            cost,
            prev: ROOT,
            trail: NO_TRAIL,
        }
    }
}

/// Drops tokens costing more than `best + beam`, then keeps at most
/// `max_active` of the rest, preferring lower cost and then lower state id.
/// Survivors are returned in state-id order.
pub fn prune(mut tokens: Vec<Token>, beam: f64, max_active: usize) -> Vec<Token> {
    let Some(best) = tokens.iter().map(|t| t.cost).min_by(f64::total_cmp) else {
        return tokens;
    };
    let cutoff = best + beam;
    tokens.retain(|t| t.cost <= cutoff);
    if tokens.len() > max_active {
        tokens.sort_by(|a, b| a.cost.total_cmp(&b.cost).then(a.state.cmp(&b.state)));
        tokens.truncate(max_active.max(1));
    }
    tokens.sort_by_key(|t| t.state);
    tokens
}
