use crate::wfst::{compose, SortKey, Wfst};

use super::TopologyError;

/// `T ∘ (L ∘ G)`, trimmed and ilabel-sorted for the decoder.
pub fn build_tlg(t: &Wfst, l: &Wfst, g: &Wfst) -> Result<Wfst, TopologyError> {
    let lg = compose(l, g);
    if lg.is_empty() {
        return Err(TopologyError::EmptyGraph);
    }
    let tlg = compose(t, &lg);
    if tlg.is_empty() {
        return Err(TopologyError::EmptyGraph);
    }
    Ok(tlg.arc_sorted(SortKey::ILabel))
}
