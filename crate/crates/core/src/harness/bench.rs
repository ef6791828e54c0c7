use std::io::Write;
use std::sync::Arc;
use std::time::Instant;

use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::hierarchy::{Hierarchy, LabelTree, RoutingBank};
use crate::oracle::{RegressorBank, DEFAULT_L2_PENALTY, DEFAULT_PREDICTION};
use crate::policy::{Mode, Policy, PolicyConfig};
use crate::rng::Rng;
use crate::sampling::StrategyConfig;
use crate::sparse::{AugmentedWeights, SparseVector};

/// Beam width standing for "score every arm".
pub const ALL_ARMS: usize = usize::MAX;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BenchRow {
    pub beam: usize,
    pub mean_ms: f64,
    pub p95_ms: f64,
}

/// Times one full selection step (candidates, scoring, sampling) per context for each beam
/// width. `ALL_ARMS` runs the flat policy on the same bank. A few warm-up steps precede each
/// measurement.
pub fn bench_inference(
    hierarchy: &Arc<Hierarchy>,
    bank: &RegressorBank,
    contexts: &[SparseVector],
    beams: &[usize],
    strategy: StrategyConfig,
) -> Result<Vec<BenchRow>> {
    if contexts.is_empty() {
        return Err(Error::InvalidArgument("no contexts to time".into()));
    }
    let num_arms = hierarchy.tree.num_arms();
    let dim = hierarchy.dim();
    beams
        .iter()
        .map(|&beam| {
            let mode = if beam == ALL_ARMS {
                Mode::Flat
            } else {
                Mode::Extreme {
                    hierarchy: Arc::clone(hierarchy),
                    beam,
                }
            };
            let cfg = PolicyConfig::new(strategy, num_arms, dim, contexts.len() as u64);
            let mut policy = Policy::new(cfg, mode, 0)?;
            policy.set_bank(bank.clone())?;
            // Late epoch so exploration is in its steady state.
            let t0 = 1u64 << 20;
            for (i, x) in contexts.iter().take(10).enumerate() {
                std::hint::black_box(policy.step(t0 + i as u64, x)?);
            }
            let mut times = Vec::with_capacity(contexts.len());
            for (i, x) in contexts.iter().enumerate() {
                let start = Instant::now();
                std::hint::black_box(policy.step(t0 + i as u64, x)?);
                times.push(start.elapsed().as_secs_f64() * 1e3);
            }
            let mean_ms = times.iter().sum::<f64>() / times.len() as f64;
            times.sort_by(f64::total_cmp);
            let idx = ((times.len() as f64 * 0.95).ceil() as usize).clamp(1, times.len()) - 1;
            Ok(BenchRow {
                beam,
                mean_ms,
                p95_ms: times[idx],
            })
        })
        .collect()
}

pub fn write_bench_csv(rows: &[BenchRow], mut out: impl Write) -> Result<()> {
    writeln!(out, "b,mean_ms,p95_ms")?;
    for r in rows {
        if r.beam == ALL_ARMS {
            writeln!(out, "all,{},{}", r.mean_ms, r.p95_ms)?;
        } else {
            writeln!(out, "{},{},{}", r.beam, r.mean_ms, r.p95_ms)?;
        }
    }
    Ok(())
}

/// Random sparse vector with `nnz` distinct coordinates (or `dim` if smaller).
pub fn random_sparse(dim: usize, nnz: usize, rng: &mut Rng) -> Result<SparseVector> {
    let nnz = nnz.min(dim);
    let mut idx = std::collections::BTreeSet::new();
    while idx.len() < nnz {
        idx.insert(rng.below(dim) as u32);
    }
    let pairs: Vec<(u32, f64)> = idx
        .into_iter()
        .map(|i| (i, StandardNormal.sample(rng)))
        .collect();
    SparseVector::from_pairs(dim, pairs)
}

pub fn random_contexts(n: usize, dim: usize, nnz: usize, rng: &mut Rng) -> Result<Vec<SparseVector>> {
    (0..n)
        .map(|_| random_sparse(dim, nnz, rng)?.l2_normalize())
        .collect()
}

/// A balanced tree over `num_arms` arms with random sparse routing scorers and a random sparse
/// regressor for every arm and node.
pub fn synthetic_model(
    num_arms: usize,
    max_leaf: usize,
    dim: usize,
    routing_nnz: usize,
    regressor_nnz: usize,
    rng: &mut Rng,
) -> Result<(Arc<Hierarchy>, RegressorBank)> {
    let tree = LabelTree::balanced(num_arms, max_leaf)?;
    let mut scorers = vec![None];
    for _ in 1..tree.num_nodes() {
        let w = random_sparse(dim, routing_nnz, rng)?;
        scorers.push(Some(AugmentedWeights::new(w, 0.0)));
    }
    let routing = RoutingBank::new(dim, scorers)?;
    let bank = random_bank(num_arms + tree.num_nodes(), dim, regressor_nnz, rng)?;
    Ok((Arc::new(Hierarchy::new(tree, routing)?), bank))
}

/// Regressors with `nnz` small random weights and bias 0.5 for ids `0..num_ids`.
pub fn random_bank(num_ids: usize, dim: usize, nnz: usize, rng: &mut Rng) -> Result<RegressorBank> {
    let mut bank = RegressorBank::empty(dim, num_ids, DEFAULT_PREDICTION, DEFAULT_L2_PENALTY);
    for id in 0..num_ids {
        let w = random_sparse(dim, nnz, rng)?.scaled(0.1);
        bank.set(id, AugmentedWeights::new(w, 0.5))?;
    }
    Ok(bank)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_model_benchmarks() {
        let mut rng = Rng::new(3);
        let (h, bank) = synthetic_model(200, 5, 50, 5, 5, &mut rng).unwrap();
        let xs = random_contexts(20, 50, 10, &mut rng).unwrap();
        let rows = bench_inference(&h, &bank, &xs, &[2, ALL_ARMS], StrategyConfig::default()).unwrap();
        assert_eq!(rows.len(), 2);
        assert!(rows.iter().all(|r| r.mean_ms >= 0.0 && r.p95_ms >= 0.0));
        let mut out = Vec::new();
        write_bench_csv(&rows, &mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        assert!(text.starts_with("b,mean_ms,p95_ms\n2,"));
        assert!(text.contains("\nall,"));
    }

    #[test]
    fn single_context_runs() {
        let mut rng = Rng::new(5);
        let (h, bank) = synthetic_model(30, 4, 8, 3, 3, &mut rng).unwrap();
        let xs = random_contexts(1, 8, 3, &mut rng).unwrap();
        let rows = bench_inference(&h, &bank, &xs, &[1], StrategyConfig::default()).unwrap();
        assert_eq!(rows[0].mean_ms, rows[0].p95_ms);
    }
}
