use std::cmp::Ordering;

use super::routing::RoutingBank;
use super::tree::{ArmId, LabelTree, NodeId};
use crate::error::{Error, Result};
use crate::rng::Rng;
use crate::sparse::SparseVector;

/// One member of the context-dependent arm decomposition: a pruned subtree or a single arm.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EffectiveArm {
    Node(NodeId),
    Arm(ArmId),
}

impl EffectiveArm {
    /// Id in the shared regressor space: arms keep their id, node `n` maps to `num_arms + n`.
    #[inline]
    pub fn bank_id(self, num_arms: usize) -> usize {
        match self {
            EffectiveArm::Arm(a) => a as usize,
            EffectiveArm::Node(n) => num_arms + n as usize,
        }
    }

    pub fn from_bank_id(id: usize, num_arms: usize) -> Self {
        if id < num_arms {
            EffectiveArm::Arm(id as ArmId)
        } else {
            EffectiveArm::Node((id - num_arms) as NodeId)
        }
    }

    pub fn is_node(self) -> bool {
        matches!(self, EffectiveArm::Node(_))
    }
}

/// Pruned nodes in `(depth, node id)` order followed by the singleton arms under the kept leaves
/// in arm-id order.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct EffectiveArmSet {
    entries: Vec<EffectiveArm>,
    num_nodes: usize,
}

impl EffectiveArmSet {
    pub fn entries(&self) -> &[EffectiveArm] {
        &self.entries
    }

    /// `Z`, the number of effective arms.
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn nodes(&self) -> &[EffectiveArm] {
        &self.entries[..self.num_nodes]
    }

    pub fn singletons(&self) -> &[EffectiveArm] {
        &self.entries[self.num_nodes..]
    }

    /// `(p - 1) b (H - 1) + b m` for the given tree and beam.
    pub fn size_bound(tree: &LabelTree, beam: usize) -> usize {
        (tree.branching() - 1) * beam * (tree.height() - 1) + beam * tree.max_leaf()
    }
}

/// Candidates and survivors of one beam-search level.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct LevelTrace {
    pub candidates: Vec<(NodeId, f64)>,
    pub kept: Vec<NodeId>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct BeamTrace {
    pub levels: Vec<LevelTrace>,
    /// Number of routing scorer evaluations.
    pub evaluations: usize,
}

/// Level-wise beam search over the routing scores.
pub fn beam_search(
    tree: &LabelTree,
    routing: &RoutingBank,
    x: &SparseVector,
    beam: usize,
) -> Result<EffectiveArmSet> {
    run_beam(tree, routing, x, beam, None)
}

/// [`beam_search`] that also reports per-level candidates, survivors and scorer calls.
pub fn beam_search_traced(
    tree: &LabelTree,
    routing: &RoutingBank,
    x: &SparseVector,
    beam: usize,
) -> Result<(EffectiveArmSet, BeamTrace)> {
    let mut trace = BeamTrace::default();
    let set = run_beam(tree, routing, x, beam, Some(&mut trace))?;
    Ok((set, trace))
}

fn run_beam(
    tree: &LabelTree,
    routing: &RoutingBank,
    x: &SparseVector,
    beam: usize,
    mut trace: Option<&mut BeamTrace>,
) -> Result<EffectiveArmSet> {
    if beam == 0 {
        return Err(Error::InvalidArgument("beam size must be positive".into()));
    }
    routing.check_compatible(tree)?;
    if x.dim() != routing.dim() {
        return Err(Error::DimensionMismatch {
            expected: routing.dim(),
            actual: x.dim(),
        });
    }
    // the root is always kept and is never an effective arm
    let mut frontier: Vec<(NodeId, f64)> = vec![(0, 1.0)];
    let mut pruned: Vec<NodeId> = Vec::new();
    let mut candidates: Vec<(NodeId, f64)> = Vec::new();
    while frontier.iter().any(|&(id, _)| !tree.node(id).is_leaf()) {
        candidates.clear();
        for &(id, score) in &frontier {
            let node = tree.node(id);
            if node.is_leaf() {
                // leaves above the deepest level compete again with their cached score
                candidates.push((id, score));
            } else {
                for &c in &node.children {
                    candidates.push((c, routing.score(c, x)));
                    if let Some(t) = trace.as_deref_mut() {
                        t.evaluations += 1;
                    }
                }
            }
        }
        candidates.sort_by(|a, b| {
            b.1.partial_cmp(&a.1)
                .unwrap_or(Ordering::Equal)
                .then(a.0.cmp(&b.0))
        });
        let keep = beam.min(candidates.len());
        pruned.extend(candidates[keep..].iter().map(|c| c.0));
        frontier.clear();
        frontier.extend_from_slice(&candidates[..keep]);
        if let Some(t) = trace.as_deref_mut() {
            let mut level_candidates = candidates.clone();
            level_candidates.sort_by_key(|c| c.0);
            let mut kept: Vec<NodeId> = frontier.iter().map(|c| c.0).collect();
            kept.sort_unstable();
            t.levels.push(LevelTrace {
                candidates: level_candidates,
                kept,
            });
        }
    }
    pruned.sort_unstable_by_key(|&id| (tree.node(id).depth, id));
    let mut singletons: Vec<ArmId> = frontier
        .iter()
        .flat_map(|&(id, _)| tree.node(id).arms.iter().copied())
        .collect();
    singletons.sort_unstable();
    let num_nodes = pruned.len();
    let entries = pruned
        .into_iter()
        .map(EffectiveArm::Node)
        .chain(singletons.into_iter().map(EffectiveArm::Arm))
        .collect();
    Ok(EffectiveArmSet { entries, num_nodes })
}

/// Uniform draw over the arms of the subtree rooted at `node`.
pub fn resolve_singleton(tree: &LabelTree, node: NodeId, rng: &mut Rng) -> ArmId {
    let arms = tree.subtree_arms(node);
    arms[rng.below(arms.len())]
}
