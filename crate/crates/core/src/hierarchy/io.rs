use std::io::{BufRead, Write};
use std::path::Path;

use super::routing::RoutingBank;
use super::tree::{LabelTree, NodeId, TreeNode};
use crate::error::{Error, Result};
use crate::format::{parse_f64, parse_usize, read_sparse_pairs, write_sparse_pairs, LineReader};
use crate::sparse::AugmentedWeights;

/// A frozen label tree together with its routing scorers.
#[derive(Debug, Clone, PartialEq)]
pub struct Hierarchy {
    pub tree: LabelTree,
    pub routing: RoutingBank,
}

impl Hierarchy {
    pub fn new(tree: LabelTree, routing: RoutingBank) -> Result<Self> {
        routing.check_compatible(&tree)?;
        Ok(Hierarchy { tree, routing })
    }

    pub fn dim(&self) -> usize {
        self.routing.dim()
    }

    /// Version-1 text format:
    ///
    /// ```text
    /// xtopk-tree 1
    /// arms <A> branching <p> max_leaf <m> nodes <N> dim <d>
    /// node <id> <parent|-> <depth> <n_children> <child>... <n_arms> <arm>...   (N lines, by id)
    /// routing <id> <bias> <nnz> <index>:<value>...                          (N-1 lines, ids 1..N)
    /// ```
    pub fn write_to(&self, mut out: impl Write) -> Result<()> {
        let tree = &self.tree;
        writeln!(out, "xtopk-tree 1")?;
        writeln!(
            out,
            "arms {} branching {} max_leaf {} nodes {} dim {}",
            tree.num_arms(),
            tree.branching(),
            tree.max_leaf(),
            tree.num_nodes(),
            self.routing.dim()
        )?;
        for n in tree.nodes() {
            write!(out, "node {} ", n.id)?;
            match n.parent {
                Some(p) => write!(out, "{p}")?,
                None => write!(out, "-")?,
            }
            write!(out, " {} {}", n.depth, n.children.len())?;
            for c in &n.children {
                write!(out, " {c}")?;
            }
            write!(out, " {}", n.arms.len())?;
            for a in &n.arms {
                write!(out, " {a}")?;
            }
            writeln!(out)?;
        }
        for id in 1..tree.num_nodes() as NodeId {
            let w = self.routing.scorer(id).expect("non-root scorer");
            write!(out, "routing {id} {:e} {}", w.bias, w.weights.nnz())?;
            write_sparse_pairs(&mut out, &w.weights)?;
            writeln!(out)?;
        }
        Ok(())
    }

    pub fn read_from(input: impl BufRead, source: &str) -> Result<Self> {
        let mut lines = LineReader::new(input, source);
        let (n, magic) = lines.next_required()?;
        if magic.trim() != "xtopk-tree 1" {
            return Err(Error::parse(source, n, "not a version-1 tree file"));
        }
        let (n, header) = lines.next_required()?;
        let f: Vec<&str> = header.split_whitespace().collect();
        let keys = ["arms", "branching", "max_leaf", "nodes", "dim"];
        if f.len() != 10 || (0..5).any(|i| f[2 * i] != keys[i]) {
            return Err(Error::parse(source, n, "malformed tree header"));
        }
        let num_arms = parse_usize(f[1], source, n)?;
        let branching = parse_usize(f[3], source, n)?;
        let max_leaf = parse_usize(f[5], source, n)?;
        let num_nodes = parse_usize(f[7], source, n)?;
        let dim = parse_usize(f[9], source, n)?;

        let mut nodes = Vec::with_capacity(num_nodes);
        for _ in 0..num_nodes {
            let (n, line) = lines.next_required()?;
            let toks: Vec<&str> = line.split_whitespace().collect();
            if toks.len() < 6 || toks[0] != "node" {
                return Err(Error::parse(source, n, "expected a node line"));
            }
            let mut pos = 1;
            let mut num = || -> Result<usize> {
                let tok = toks
                    .get(pos)
                    .ok_or_else(|| Error::parse(source, n, "truncated node line"))?;
                pos += 1;
                parse_usize(tok, source, n)
            };
            let id = num()? as NodeId;
            let parent = if toks[2] == "-" {
                num().ok();
                None
            } else {
                Some(num()? as NodeId)
            };
            let depth = num()? as u32;
            let n_children = num()?;
            let children = (0..n_children)
                .map(|_| num().map(|c| c as NodeId))
                .collect::<Result<Vec<_>>>()?;
            let n_arms = num()?;
            let arms = (0..n_arms)
                .map(|_| num().map(|a| a as u32))
                .collect::<Result<Vec<_>>>()?;
            if pos != toks.len() {
                return Err(Error::parse(source, n, "trailing tokens on node line"));
            }
            nodes.push(TreeNode {
                id,
                depth,
                parent,
                children,
                arms,
            });
        }
        let tree = LabelTree::from_nodes(nodes, num_arms, branching, max_leaf)
            .map_err(|e| Error::parse(source, 0, e.to_string()))?;

        let mut scorers: Vec<Option<AugmentedWeights>> = vec![None; num_nodes];
        for expected in 1..num_nodes {
            let (n, line) = lines.next_required()?;
            let mut it = line.split_whitespace();
            if it.next() != Some("routing") {
                return Err(Error::parse(source, n, "expected a routing line"));
            }
            let id = parse_usize(it.next().unwrap_or(""), source, n)?;
            if id != expected {
                return Err(Error::parse(source, n, format!("expected routing for node {expected}")));
            }
            let bias = parse_f64(it.next().unwrap_or(""), source, n)?;
            let nnz = parse_usize(it.next().unwrap_or(""), source, n)?;
            let weights = read_sparse_pairs(it, dim, nnz, source, n)?;
            scorers[id] = Some(AugmentedWeights::new(weights, bias));
        }
        lines.expect_end()?;
        let routing = RoutingBank::new(dim, scorers)?;
        Hierarchy::new(tree, routing)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = std::io::BufWriter::new(file);
        self.write_to(&mut w)?;
        w.flush().map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read_from(std::io::BufReader::new(file), &path.display().to_string())
    }
}
