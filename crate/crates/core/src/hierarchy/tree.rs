use std::collections::VecDeque;

use crate::error::{Error, Result};
use crate::rng::Rng;
use crate::sparse::SparseVector;

pub type NodeId = u32;
pub type ArmId = u32;

const KMEANS_MAX_ITERATIONS: usize = 20;

#[derive(Debug, Clone, PartialEq)]
pub struct TreeNode {
    pub id: NodeId,
    pub depth: u32,
    pub parent: Option<NodeId>,
    pub children: Vec<NodeId>,
    /// Arms held by a leaf, ascending; empty for internal nodes.
    pub arms: Vec<ArmId>,
}

impl TreeNode {
    pub fn is_leaf(&self) -> bool {
        self.children.is_empty()
    }
}

/// A label hierarchy: internal nodes have at most `branching` children and every arm sits in
/// exactly one leaf of at most `max_leaf` arms.
///
/// Node ids are assigned breadth-first, so ids are ordered by depth. The arms of any subtree
/// occupy a contiguous range of [`LabelTree::leaf_order`].
#[derive(Debug, Clone, PartialEq)]
pub struct LabelTree {
    nodes: Vec<TreeNode>,
    num_arms: usize,
    branching: usize,
    max_leaf: usize,
    leaf_order: Vec<ArmId>,
    spans: Vec<(u32, u32)>,
    arm_leaf: Vec<NodeId>,
}

impl LabelTree {
    /// Assembles and validates a tree from its node table. `nodes[i].id` must equal `i` and
    /// node 0 is the root.
    pub fn from_nodes(
        nodes: Vec<TreeNode>,
        num_arms: usize,
        branching: usize,
        max_leaf: usize,
    ) -> Result<Self> {
        let invalid = |m: String| Err(Error::InvalidArgument(format!("invalid tree: {m}")));
        if nodes.is_empty() {
            return invalid("no nodes".into());
        }
        if branching < 2 || max_leaf < 1 {
            return invalid(format!("branching {branching}, max leaf {max_leaf}"));
        }
        let mut arm_leaf = vec![NodeId::MAX; num_arms];
        for (i, node) in nodes.iter().enumerate() {
            if node.id as usize != i {
                return invalid(format!("node at position {i} has id {}", node.id));
            }
            match node.parent {
                None if i != 0 => return invalid(format!("node {i} has no parent")),
                Some(_) if i == 0 => return invalid("root has a parent".into()),
                Some(p) => {
                    let parent = nodes.get(p as usize).ok_or(Error::InvalidArgument(format!(
                        "invalid tree: node {i} has unknown parent {p}"
                    )))?;
                    if !parent.children.contains(&node.id) || node.depth != parent.depth + 1 {
                        return invalid(format!("node {i} inconsistent with parent {p}"));
                    }
                }
                None => {
                    if node.depth != 0 {
                        return invalid("root depth must be 0".into());
                    }
                }
            }
            if node.children.len() > branching {
                return invalid(format!("node {i} has {} children", node.children.len()));
            }
            for &c in &node.children {
                if nodes.get(c as usize).and_then(|n| n.parent) != Some(node.id) {
                    return invalid(format!("child {c} of node {i} does not point back"));
                }
            }
            if node.is_leaf() {
                if node.arms.is_empty() || node.arms.len() > max_leaf {
                    return invalid(format!("leaf {i} holds {} arms", node.arms.len()));
                }
                for &a in &node.arms {
                    let slot = arm_leaf.get_mut(a as usize).ok_or(Error::InvalidArgument(
                        format!("invalid tree: arm {a} out of range"),
                    ))?;
                    if *slot != NodeId::MAX {
                        return invalid(format!("arm {a} appears in two leaves"));
                    }
                    *slot = node.id;
                }
            } else if !node.arms.is_empty() {
                return invalid(format!("internal node {i} holds arms"));
            }
        }
        if let Some(a) = arm_leaf.iter().position(|&l| l == NodeId::MAX) {
            return invalid(format!("arm {a} is not in any leaf"));
        }

        let mut leaf_order = Vec::with_capacity(num_arms);
        let mut spans = vec![(0, 0); nodes.len()];
        // iterative post-order so deep trees cannot overflow the stack
        let mut stack = vec![(0 as NodeId, false)];
        while let Some((id, done)) = stack.pop() {
            let node = &nodes[id as usize];
            if done {
                let start = node
                    .children
                    .first()
                    .map_or(spans[id as usize].0, |&c| spans[c as usize].0);
                spans[id as usize] = (start, leaf_order.len() as u32);
                continue;
            }
            if node.is_leaf() {
                let start = leaf_order.len() as u32;
                leaf_order.extend_from_slice(&node.arms);
                spans[id as usize] = (start, leaf_order.len() as u32);
            } else {
                stack.push((id, true));
                for &c in node.children.iter().rev() {
                    stack.push((c, false));
                }
            }
        }
        if leaf_order.len() != num_arms {
            return invalid("unreachable nodes".into());
        }
        Ok(LabelTree {
            nodes,
            num_arms,
            branching,
            max_leaf,
            leaf_order,
            spans,
            arm_leaf,
        })
    }

    /// A balanced binary tree over arms `0..num_arms` split into contiguous id ranges.
    pub fn balanced(num_arms: usize, max_leaf: usize) -> Result<Self> {
        let arms: Vec<ArmId> = (0..num_arms as ArmId).collect();
        Self::build_with(arms, num_arms, max_leaf, |arms| {
            let mid = arms.len().div_ceil(2);
            (arms[..mid].to_vec(), arms[mid..].to_vec())
        })
    }

    /// Breadth-first construction with a caller-supplied binary split.
    fn build_with(
        arms: Vec<ArmId>,
        num_arms: usize,
        max_leaf: usize,
        mut split: impl FnMut(&[ArmId]) -> (Vec<ArmId>, Vec<ArmId>),
    ) -> Result<Self> {
        if num_arms == 0 {
            return Err(Error::InvalidArgument("a tree needs at least one arm".into()));
        }
        if max_leaf == 0 {
            return Err(Error::InvalidArgument("max leaf size must be positive".into()));
        }
        let mut nodes: Vec<TreeNode> = Vec::new();
        let mut queue: VecDeque<(NodeId, Vec<ArmId>)> = VecDeque::new();
        nodes.push(TreeNode {
            id: 0,
            depth: 0,
            parent: None,
            children: Vec::new(),
            arms: Vec::new(),
        });
        queue.push_back((0, arms));
        while let Some((id, mut arms)) = queue.pop_front() {
            if arms.len() <= max_leaf {
                arms.sort_unstable();
                nodes[id as usize].arms = arms;
                continue;
            }
            let (left, right) = split(&arms);
            debug_assert!(!left.is_empty() && !right.is_empty());
            let depth = nodes[id as usize].depth + 1;
            for part in [left, right] {
                let child = nodes.len() as NodeId;
                nodes.push(TreeNode {
                    id: child,
                    depth,
                    parent: Some(id),
                    children: Vec::new(),
                    arms: Vec::new(),
                });
                nodes[id as usize].children.push(child);
                queue.push_back((child, part));
            }
        }
        Self::from_nodes(nodes, num_arms, 2, max_leaf)
    }

    pub fn num_arms(&self) -> usize {
        self.num_arms
    }

    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn branching(&self) -> usize {
        self.branching
    }

    pub fn max_leaf(&self) -> usize {
        self.max_leaf
    }

    pub fn root(&self) -> &TreeNode {
        &self.nodes[0]
    }

    pub fn node(&self, id: NodeId) -> &TreeNode {
        &self.nodes[id as usize]
    }

    pub fn nodes(&self) -> &[TreeNode] {
        &self.nodes
    }

    pub fn leaves(&self) -> impl Iterator<Item = &TreeNode> {
        self.nodes.iter().filter(|n| n.is_leaf())
    }

    /// Deepest leaf depth in edges from the root.
    pub fn depth(&self) -> usize {
        self.nodes.iter().map(|n| n.depth as usize).max().unwrap_or(0)
    }

    /// Number of node levels from the root down to the deepest leaf (`depth() + 1`). This is the
    /// `H` of the effective-arm bound `Z <= (p - 1) b (H - 1) + b m`.
    pub fn height(&self) -> usize {
        self.depth() + 1
    }

    /// `ceil(log_p(ceil(A / m)))`, the nominal height of a balanced tree.
    pub fn nominal_height(num_arms: usize, branching: usize, max_leaf: usize) -> usize {
        let leaves = num_arms.div_ceil(max_leaf);
        let mut h = 0;
        let mut reach = 1usize;
        while reach < leaves {
            reach = reach.saturating_mul(branching);
            h += 1;
        }
        h
    }

    /// Arms in the subtree rooted at `id`.
    pub fn subtree_arms(&self, id: NodeId) -> &[ArmId] {
        let (s, e) = self.spans[id as usize];
        &self.leaf_order[s as usize..e as usize]
    }

    pub fn subtree_size(&self, id: NodeId) -> usize {
        let (s, e) = self.spans[id as usize];
        (e - s) as usize
    }

    pub fn leaf_order(&self) -> &[ArmId] {
        &self.leaf_order
    }

    pub fn leaf_of(&self, arm: ArmId) -> NodeId {
        self.arm_leaf[arm as usize]
    }

    /// Nodes on the path from the leaf holding `arm` up to, but excluding, the root.
    pub fn ancestors_of_arm(&self, arm: ArmId) -> impl Iterator<Item = NodeId> + '_ {
        let mut cur = Some(self.leaf_of(arm));
        std::iter::from_fn(move || {
            let id = cur?;
            let node = self.node(id);
            node.parent?;
            cur = node.parent;
            Some(id)
        })
    }
}

/// Label embeddings as the normalized mean of each label's positive instances. Labels whose mean
/// is the zero vector (no positives, or cancellation) are returned as `None`.
pub fn pifa_embeddings(
    rows: &[SparseVector],
    labels: &[Vec<ArmId>],
    num_arms: usize,
    dim: usize,
) -> Result<Vec<Option<SparseVector>>> {
    if rows.len() != labels.len() {
        return Err(Error::DimensionMismatch {
            expected: rows.len(),
            actual: labels.len(),
        });
    }
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); num_arms];
    for (i, (x, ls)) in rows.iter().zip(labels).enumerate() {
        if x.dim() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                actual: x.dim(),
            });
        }
        for &a in ls {
            let slot = members.get_mut(a as usize).ok_or_else(|| {
                Error::InvalidArgument(format!("label {a} out of range for {num_arms} arms"))
            })?;
            slot.push(i);
        }
    }
    members
        .iter()
        .map(|idx| {
            let sum = SparseVector::sum(dim, idx.iter().map(|&i| &rows[i]))?;
            if sum.is_zero() {
                return Ok(None);
            }
            // the mean and the sum normalize to the same unit vector
            Ok(Some(sum.scaled(1.0 / idx.len() as f64).l2_normalize()?))
        })
        .collect()
}

/// Recursive balanced spherical 2-means over label embeddings until every leaf holds at most
/// `max_leaf` arms. Labels without an embedding are attached to the smaller side of each split.
pub fn build_tree(
    embeddings: &[Option<SparseVector>],
    max_leaf: usize,
    rng: &mut Rng,
) -> Result<LabelTree> {
    let dim = embeddings
        .iter()
        .flatten()
        .map(|e| e.dim())
        .next()
        .unwrap_or(0);
    if embeddings.iter().flatten().any(|e| e.dim() != dim) {
        return Err(Error::InvalidArgument("embeddings differ in dimension".into()));
    }
    let mut scratch = vec![0.0; dim];
    let arms: Vec<ArmId> = (0..embeddings.len() as ArmId).collect();
    LabelTree::build_with(arms, embeddings.len(), max_leaf, |arms| {
        let (mut with, mut without): (Vec<ArmId>, Vec<ArmId>) =
            arms.iter().copied().partition(|&a| embeddings[a as usize].is_some());
        with.sort_unstable();
        without.sort_unstable();
        let (mut left, mut right) = match with.len() {
            0 => (Vec::new(), Vec::new()),
            1 => (with, Vec::new()),
            _ => balanced_two_means(&with, embeddings, &mut scratch, rng),
        };
        for a in without {
            if right.len() < left.len() {
                right.push(a);
            } else {
                left.push(a);
            }
        }
        (left, right)
    })
}

fn dot_scattered(v: &SparseVector, dense: &[f64]) -> f64 {
    v.iter().map(|(i, x)| x * dense[i as usize]).sum()
}

/// Splits `arms` into halves of sizes `ceil(n/2)` and `floor(n/2)`: assignments are ranked by
/// the margin `sim(left) - sim(right)` and the top half goes left.
fn balanced_two_means(
    arms: &[ArmId],
    embeddings: &[Option<SparseVector>],
    scratch: &mut [f64],
    rng: &mut Rng,
) -> (Vec<ArmId>, Vec<ArmId>) {
    let emb = |a: ArmId| embeddings[a as usize].as_ref().expect("embedded arm");
    let n = arms.len();
    let half = n.div_ceil(2);

    // farthest-point seeding from a random start
    let first = arms[rng.below(n)];
    let c0 = emb(first);
    let second = arms
        .iter()
        .copied()
        .filter(|&a| a != first)
        .min_by(|&a, &b| {
            let (sa, sb) = (emb(a).dot_unchecked(c0), emb(b).dot_unchecked(c0));
            sa.total_cmp(&sb).then(a.cmp(&b))
        })
        .expect("at least two arms");
    let mut centroids = [c0.clone(), emb(second).clone()];
    let mut assignment: Vec<bool> = Vec::new();
    let mut sims = vec![[0.0f64; 2]; n];

    for _ in 0..KMEANS_MAX_ITERATIONS {
        for (c, centroid) in centroids.iter().enumerate() {
            for (i, x) in centroid.iter() {
                scratch[i as usize] = x;
            }
            for (s, &a) in sims.iter_mut().zip(arms) {
                s[c] = dot_scattered(emb(a), scratch);
            }
            for (i, _) in centroid.iter() {
                scratch[i as usize] = 0.0;
            }
        }
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&i, &j| {
            let (mi, mj) = (sims[i][0] - sims[i][1], sims[j][0] - sims[j][1]);
            mj.total_cmp(&mi).then(arms[i].cmp(&arms[j]))
        });
        let mut next = vec![false; n];
        for &i in &order[..half] {
            next[i] = true;
        }
        if next == assignment {
            break;
        }
        assignment = next;
        for (c, centroid) in centroids.iter_mut().enumerate() {
            let members = arms
                .iter()
                .zip(&assignment)
                .filter(|(_, &left)| left == (c == 0))
                .map(|(&a, _)| emb(a));
            if let Ok(sum) = SparseVector::sum(c0.dim(), members) {
                if let Ok(unit) = sum.l2_normalize() {
                    *centroid = unit;
                }
            }
        }
    }
    let mut left = Vec::with_capacity(half);
    let mut right = Vec::with_capacity(n - half);
    for (&a, &is_left) in arms.iter().zip(&assignment) {
        if is_left {
            left.push(a);
        } else {
            right.push(a);
        }
    }
    (left, right)
}
