//! Label tree construction, routing scorers and beam-search decomposition of the arm set.

mod beam;
mod io;
mod routing;
mod tree;

pub use beam::{
    beam_search, beam_search_traced, resolve_singleton, BeamTrace, EffectiveArm, EffectiveArmSet,
    LevelTrace,
};
pub use io::Hierarchy;
pub use routing::{train_routing, RoutingBank};
pub use tree::{build_tree, pifa_embeddings, ArmId, LabelTree, NodeId, TreeNode};

use crate::error::Result;
use crate::rng::Rng;
use crate::sparse::SparseVector;

/// Builds the tree and routing scorers from a supervised split: PIFA embeddings, balanced
/// 2-means tree, one-vs-all routing.
pub fn build_hierarchy(
    rows: &[SparseVector],
    labels: &[Vec<ArmId>],
    num_arms: usize,
    dim: usize,
    max_leaf: usize,
    l2_penalty: f64,
    rng: &mut Rng,
) -> Result<Hierarchy> {
    let embeddings = pifa_embeddings(rows, labels, num_arms, dim)?;
    let tree = build_tree(&embeddings, max_leaf, rng)?;
    let routing = train_routing(&tree, rows, labels, dim, l2_penalty)?;
    Hierarchy::new(tree, routing)
}
