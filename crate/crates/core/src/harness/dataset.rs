//! Multi-label datasets in the plain-text extreme classification format.
//!
//! ```text
//! <n> <d> <A>
//! <l1>,<l2>,... <f>:<v> <f>:<v> ...
//! ```
//!
//! One row per instance. The label field is a comma-separated list of 0-based label ids and may
//! be empty, in which case the line starts directly with the features (or is blank). Feature ids
//! are 0-based. Tokens are separated by ASCII whitespace.

use std::io::{BufRead, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::format::{parse_pairs, parse_usize, LineReader};
use crate::hierarchy::ArmId;
use crate::rng::Rng;
use crate::sparse::SparseVector;

#[derive(Debug, Clone, PartialEq)]
pub struct MultiLabelDataset {
    dim: usize,
    num_labels: usize,
    rows: Vec<SparseVector>,
    labels: Vec<Vec<ArmId>>,
}

impl MultiLabelDataset {
    /// Validates dimensions and label ranges; label lists are sorted and deduplicated.
    pub fn new(
        dim: usize,
        num_labels: usize,
        rows: Vec<SparseVector>,
        mut labels: Vec<Vec<ArmId>>,
    ) -> Result<Self> {
        if rows.len() != labels.len() {
            return Err(Error::DimensionMismatch {
                expected: rows.len(),
                actual: labels.len(),
            });
        }
        for (x, ls) in rows.iter().zip(labels.iter_mut()) {
            if x.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    actual: x.dim(),
                });
            }
            ls.sort_unstable();
            ls.dedup();
            if let Some(&l) = ls.last() {
                if l as usize >= num_labels {
                    return Err(Error::InvalidArgument(format!(
                        "label {l} out of range for {num_labels} labels"
                    )));
                }
            }
        }
        Ok(MultiLabelDataset {
            dim,
            num_labels,
            rows,
            labels,
        })
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn num_labels(&self) -> usize {
        self.num_labels
    }

    pub fn rows(&self) -> &[SparseVector] {
        &self.rows
    }

    pub fn labels(&self) -> &[Vec<ArmId>] {
        &self.labels
    }

    pub fn row(&self, i: usize) -> &SparseVector {
        &self.rows[i]
    }

    pub fn positives(&self, i: usize) -> &[ArmId] {
        &self.labels[i]
    }

    pub fn subset(&self, indices: &[usize]) -> MultiLabelDataset {
        MultiLabelDataset {
            dim: self.dim,
            num_labels: self.num_labels,
            rows: indices.iter().map(|&i| self.rows[i].clone()).collect(),
            labels: indices.iter().map(|&i| self.labels[i].clone()).collect(),
        }
    }

    pub fn read_from(input: impl BufRead, source: &str) -> Result<Self> {
        let mut lines = LineReader::new(input, source);
        let (hn, header) = lines.next_required()?;
        let h: Vec<&str> = header.split_whitespace().collect();
        if h.len() != 3 {
            return Err(Error::parse(source, hn, "header must be 'n d A'"));
        }
        let n = parse_usize(h[0], source, hn)?;
        let dim = parse_usize(h[1], source, hn)?;
        let num_labels = parse_usize(h[2], source, hn)?;
        let mut rows = Vec::with_capacity(n);
        let mut labels = Vec::with_capacity(n);
        while rows.len() < n {
            let Some((ln, line)) = lines.next_line()? else {
                return Err(Error::parse(
                    source,
                    hn,
                    format!("header declares {n} rows but the file has {}", rows.len()),
                ));
            };
            let mut tokens = line.split_ascii_whitespace().peekable();
            let mut ls = Vec::new();
            if let Some(first) = tokens.peek() {
                if !first.contains(':') {
                    for l in first.split(',').filter(|s| !s.is_empty()) {
                        let l = parse_usize(l, source, ln)?;
                        if l >= num_labels {
                            return Err(Error::parse(
                                source,
                                ln,
                                format!("label {l} out of range for {num_labels} labels"),
                            ));
                        }
                        ls.push(l as ArmId);
                    }
                    tokens.next();
                }
            }
            rows.push(parse_pairs(tokens, dim, source, ln)?);
            labels.push(ls);
        }
        while let Some((ln, line)) = lines.next_line()? {
            if !line.trim().is_empty() {
                return Err(Error::parse(
                    source,
                    ln,
                    format!("more rows than the {n} declared in the header"),
                ));
            }
        }
        Self::new(dim, num_labels, rows, labels)
    }

    pub fn write_to(&self, mut out: impl Write) -> Result<()> {
        writeln!(out, "{} {} {}", self.len(), self.dim, self.num_labels)?;
        for (x, ls) in self.rows.iter().zip(&self.labels) {
            let labels: Vec<String> = ls.iter().map(|l| l.to_string()).collect();
            write!(out, "{}", labels.join(","))?;
            for (i, v) in x.iter() {
                write!(out, " {i}:{v}")?;
            }
            writeln!(out)?;
        }
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read_from(std::io::BufReader::new(file), &path.display().to_string())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = std::io::BufWriter::new(file);
        self.write_to(&mut w)?;
        w.flush().map_err(|e| Error::io(path, e))
    }
}

/// A planted multi-label problem: labels have random unit prototypes and each instance (a random
/// unit vector) is tagged with the `labels_per_row` labels whose prototypes score highest.
pub fn synthetic_multilabel(
    n: usize,
    dim: usize,
    num_labels: usize,
    labels_per_row: usize,
    rng: &mut Rng,
) -> Result<MultiLabelDataset> {
    use rand_distr::{Distribution, StandardNormal};
    if labels_per_row > num_labels {
        return Err(Error::InvalidArgument(format!(
            "{labels_per_row} labels per row out of {num_labels}"
        )));
    }
    let unit = |rng: &mut Rng| -> Result<SparseVector> {
        let v: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(rng)).collect();
        SparseVector::from_dense(&v)?.l2_normalize()
    };
    let prototypes = (0..num_labels)
        .map(|_| unit(rng))
        .collect::<Result<Vec<_>>>()?;
    let mut rows = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for _ in 0..n {
        let x = unit(rng)?;
        let scores: Vec<f64> = prototypes.iter().map(|p| p.dot_unchecked(&x)).collect();
        let top = crate::sampling::top_n(&scores, labels_per_row);
        labels.push(top.into_iter().map(|a| a as ArmId).collect());
        rows.push(x);
    }
    MultiLabelDataset::new(dim, num_labels, rows, labels)
}
