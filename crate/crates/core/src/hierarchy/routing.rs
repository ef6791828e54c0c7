use rayon::prelude::*;

use super::tree::{ArmId, LabelTree, NodeId};
use crate::error::{Error, Result};
use crate::oracle::ridge_fit;
use crate::sparse::{AugmentedWeights, SparseVector};

/// One-vs-all linear routing scorers, one per non-root node. Scores are clamped to `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct RoutingBank {
    dim: usize,
    scorers: Vec<Option<AugmentedWeights>>,
}

impl RoutingBank {
    /// Builds a bank from per-node scorers indexed by node id; the root entry must be `None`
    /// and every other entry present.
    pub fn new(dim: usize, scorers: Vec<Option<AugmentedWeights>>) -> Result<Self> {
        if scorers.first().is_some_and(|s| s.is_some()) {
            return Err(Error::InvalidArgument("the root has no routing scorer".into()));
        }
        for (id, s) in scorers.iter().enumerate().skip(1) {
            match s {
                None => {
                    return Err(Error::InvalidArgument(format!(
                        "node {id} has no routing scorer"
                    )))
                }
                Some(w) if w.dim() != dim => {
                    return Err(Error::DimensionMismatch {
                        expected: dim,
                        actual: w.dim(),
                    })
                }
                _ => {}
            }
        }
        Ok(RoutingBank { dim, scorers })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn num_nodes(&self) -> usize {
        self.scorers.len()
    }

    pub fn scorer(&self, node: NodeId) -> Option<&AugmentedWeights> {
        self.scorers.get(node as usize).and_then(|s| s.as_ref())
    }

    #[inline]
    pub fn score(&self, node: NodeId, x: &SparseVector) -> f64 {
        self.scorers[node as usize]
            .as_ref()
            .map_or(1.0, |w| w.predict_raw_unchecked(x).clamp(0.0, 1.0))
    }

    pub(crate) fn check_compatible(&self, tree: &LabelTree) -> Result<()> {
        if self.scorers.len() != tree.num_nodes() {
            return Err(Error::InvalidArgument(format!(
                "routing bank has {} nodes, tree has {}",
                self.scorers.len(),
                tree.num_nodes()
            )));
        }
        Ok(())
    }
}

/// Trains every non-root node's scorer on the held-out rows. Positives are rows with a label in
/// the node's subtree; negatives are rows with a label under the parent but none under the node.
/// Squared loss against targets 1 and 0 stands in for a hinge loss; only the induced ranking
/// matters to beam search.
pub fn train_routing(
    tree: &LabelTree,
    rows: &[SparseVector],
    labels: &[Vec<ArmId>],
    dim: usize,
    l2_penalty: f64,
) -> Result<RoutingBank> {
    if rows.len() != labels.len() {
        return Err(Error::DimensionMismatch {
            expected: rows.len(),
            actual: labels.len(),
        });
    }
    let n_nodes = tree.num_nodes();
    let mut positives: Vec<Vec<usize>> = vec![Vec::new(); n_nodes];
    let mut negatives: Vec<Vec<usize>> = vec![Vec::new(); n_nodes];
    let mut marked = vec![false; n_nodes];
    for (i, (x, ls)) in rows.iter().zip(labels).enumerate() {
        if x.dim() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                actual: x.dim(),
            });
        }
        if ls.is_empty() {
            continue;
        }
        let mut on_path: Vec<NodeId> = vec![0];
        marked[0] = true;
        for &a in ls {
            if a as usize >= tree.num_arms() {
                return Err(Error::InvalidArgument(format!("label {a} outside the tree")));
            }
            for id in tree.ancestors_of_arm(a) {
                if marked[id as usize] {
                    break;
                }
                marked[id as usize] = true;
                on_path.push(id);
            }
        }
        for &id in &on_path {
            if id != 0 {
                positives[id as usize].push(i);
            }
            for &c in &tree.node(id).children {
                if !marked[c as usize] {
                    negatives[c as usize].push(i);
                }
            }
        }
        for id in on_path {
            marked[id as usize] = false;
        }
    }

    let scorers = (0..n_nodes)
        .into_par_iter()
        .map(|id| {
            if id == 0 {
                return Ok(None);
            }
            let (pos, neg) = (&positives[id], &negatives[id]);
            if pos.is_empty() {
                return Ok(Some(AugmentedWeights::constant(dim, 0.0)));
            }
            if neg.is_empty() {
                return Ok(Some(AugmentedWeights::constant(dim, 1.0)));
            }
            let samples: Vec<(&SparseVector, f64)> = pos
                .iter()
                .map(|&i| (&rows[i], 1.0))
                .chain(neg.iter().map(|&i| (&rows[i], 0.0)))
                .collect();
            ridge_fit(&samples, dim, l2_penalty).map(Some)
        })
        .collect::<Result<Vec<_>>>()?;
    RoutingBank::new(dim, scorers)
}
