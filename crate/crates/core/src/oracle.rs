//! Offline least-squares regression oracle.
//!
//! Every effective arm (a physical arm in flat mode, a tree node or singleton in the reduced
//! mode) owns an independent ridge regressor `<w, x> + b`, refit from scratch on the whole
//! bandit log at each epoch boundary. Predictions are clamped to `[0, 1]` when read; stored
//! weights are the unclamped least-squares solution.

use std::io::{BufRead, Write};
use std::path::Path;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::format::{parse_f64, parse_usize, read_sparse_pairs, write_sparse_pairs, LineReader};
use crate::sparse::{AugmentedWeights, SparseVector};

pub type ContextId = u32;

/// Prediction for ids that never received a training sample.
pub const DEFAULT_PREDICTION: f64 = 0.5;
pub const DEFAULT_L2_PENALTY: f64 = 1.0;

const CG_TOLERANCE: f64 = 1e-10;
const CG_MIN_ITERATIONS: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogRecord {
    pub context: ContextId,
    /// Effective arm id the reward is attributed to.
    pub arm: u32,
    pub reward: f64,
    pub epoch: u32,
}

/// Append-only store of observed feedback together with the contexts it was observed in.
#[derive(Debug, Clone, Default)]
pub struct BanditLog {
    dim: usize,
    contexts: Vec<SparseVector>,
    records: Vec<LogRecord>,
}

impl BanditLog {
    pub fn new(dim: usize) -> Self {
        BanditLog {
            dim,
            contexts: Vec::new(),
            records: Vec::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn add_context(&mut self, x: SparseVector) -> Result<ContextId> {
        if x.dim() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                actual: x.dim(),
            });
        }
        self.contexts.push(x);
        Ok((self.contexts.len() - 1) as ContextId)
    }

    pub fn push(&mut self, context: ContextId, arm: u32, reward: f64, epoch: u32) -> Result<()> {
        if !(0.0..=1.0).contains(&reward) {
            return Err(Error::InvalidArgument(format!(
                "reward {reward} outside [0, 1]"
            )));
        }
        if context as usize >= self.contexts.len() {
            return Err(Error::InvalidArgument(format!("unknown context id {context}")));
        }
        self.records.push(LogRecord {
            context,
            arm,
            reward,
            epoch,
        });
        Ok(())
    }

    pub fn context(&self, id: ContextId) -> &SparseVector {
        &self.contexts[id as usize]
    }

    pub fn records(&self) -> &[LogRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn num_contexts(&self) -> usize {
        self.contexts.len()
    }
}

/// One regressor per effective arm id in `0..num_ids`.
#[derive(Debug, Clone, PartialEq)]
pub struct RegressorBank {
    dim: usize,
    weights: Vec<Option<AugmentedWeights>>,
    default_prediction: f64,
    l2_penalty: f64,
}

impl RegressorBank {
    /// A bank where every id predicts `default_prediction`.
    pub fn empty(dim: usize, num_ids: usize, default_prediction: f64, l2_penalty: f64) -> Self {
        RegressorBank {
            dim,
            weights: vec![None; num_ids],
            default_prediction,
            l2_penalty,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn num_ids(&self) -> usize {
        self.weights.len()
    }

    pub fn default_prediction(&self) -> f64 {
        self.default_prediction
    }

    pub fn l2_penalty(&self) -> f64 {
        self.l2_penalty
    }

    pub fn get(&self, id: usize) -> Option<&AugmentedWeights> {
        self.weights.get(id).and_then(|w| w.as_ref())
    }

    pub fn set(&mut self, id: usize, w: AugmentedWeights) -> Result<()> {
        if w.dim() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                actual: w.dim(),
            });
        }
        if id >= self.weights.len() {
            self.weights.resize(id + 1, None);
        }
        self.weights[id] = Some(w);
        Ok(())
    }

    pub fn trained_ids(&self) -> impl Iterator<Item = usize> + '_ {
        self.weights
            .iter()
            .enumerate()
            .filter_map(|(i, w)| w.as_ref().map(|_| i))
    }

    /// Clamped prediction; unknown or untrained ids give the default prediction.
    pub fn predict(&self, x: &SparseVector, id: usize) -> Result<f64> {
        if x.dim() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                actual: x.dim(),
            });
        }
        Ok(self.predict_unchecked(x, id))
    }

    #[inline]
    pub(crate) fn predict_unchecked(&self, x: &SparseVector, id: usize) -> f64 {
        match self.get(id) {
            Some(w) => w.predict_raw_unchecked(x).clamp(0.0, 1.0),
            None => self.default_prediction,
        }
    }

    /// Text serialization:
    ///
    /// ```text
    /// xtopk-regressors 1
    /// dim <d> ids <n> default <f> penalty <f> trained <count>
    /// <id> <bias> <nnz> <index>:<value> ...      (one line per trained id, ascending)
    /// ```
    ///
    /// Reals are written in shortest round-trip exponent form, so reading back is bit-exact.
    pub fn write_to(&self, mut out: impl Write) -> Result<()> {
        writeln!(out, "xtopk-regressors 1")?;
        writeln!(
            out,
            "dim {} ids {} default {:e} penalty {:e} trained {}",
            self.dim,
            self.weights.len(),
            self.default_prediction,
            self.l2_penalty,
            self.trained_ids().count()
        )?;
        for id in self.trained_ids() {
            let w = self.get(id).expect("trained id");
            write!(out, "{id} {:e} {}", w.bias, w.weights.nnz())?;
            write_sparse_pairs(&mut out, &w.weights)?;
            writeln!(out)?;
        }
        Ok(())
    }

    pub fn read_from(input: impl BufRead, source: &str) -> Result<Self> {
        let mut lines = LineReader::new(input, source);
        let (n, magic) = lines.next_required()?;
        if magic.trim() != "xtopk-regressors 1" {
            return Err(Error::parse(source, n, "not a version-1 regressor bank"));
        }
        let (n, header) = lines.next_required()?;
        let fields: Vec<&str> = header.split_whitespace().collect();
        if fields.len() != 10
            || fields[0] != "dim"
            || fields[2] != "ids"
            || fields[4] != "default"
            || fields[6] != "penalty"
            || fields[8] != "trained"
        {
            return Err(Error::parse(source, n, "malformed bank header"));
        }
        let dim = parse_usize(fields[1], source, n)?;
        let num_ids = parse_usize(fields[3], source, n)?;
        let default_prediction = parse_f64(fields[5], source, n)?;
        let l2_penalty = parse_f64(fields[7], source, n)?;
        let trained = parse_usize(fields[9], source, n)?;
        let mut bank = RegressorBank::empty(dim, num_ids, default_prediction, l2_penalty);
        for _ in 0..trained {
            let (n, line) = lines.next_required()?;
            let mut it = line.split_whitespace();
            let id = parse_usize(it.next().unwrap_or(""), source, n)?;
            let bias = parse_f64(it.next().unwrap_or(""), source, n)?;
            let nnz = parse_usize(it.next().unwrap_or(""), source, n)?;
            let weights = read_sparse_pairs(it, dim, nnz, source, n)?;
            if id >= num_ids {
                return Err(Error::parse(source, n, format!("id {id} >= {num_ids}")));
            }
            bank.weights[id] = Some(AugmentedWeights::new(weights, bias));
        }
        lines.expect_end()?;
        Ok(bank)
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

/// Refits one regressor per id in `0..num_ids` from every record of `log`. Ids without samples
/// keep the default prediction.
pub fn fit(log: &BanditLog, num_ids: usize, l2_penalty: f64) -> Result<RegressorBank> {
    if !l2_penalty.is_finite() || l2_penalty < 0.0 {
        return Err(Error::InvalidArgument(format!(
            "l2 penalty must be >= 0, got {l2_penalty}"
        )));
    }
    let mut groups: Vec<Vec<usize>> = vec![Vec::new(); num_ids];
    for (i, rec) in log.records().iter().enumerate() {
        let arm = rec.arm as usize;
        if arm >= num_ids {
            return Err(Error::InvalidArgument(format!(
                "logged arm {arm} outside id space of {num_ids}"
            )));
        }
        groups[arm].push(i);
    }
    let weights = groups
        .par_iter()
        .map(|rows| {
            if rows.is_empty() {
                return Ok(None);
            }
            let samples: Vec<(&SparseVector, f64)> = rows
                .iter()
                .map(|&i| {
                    let rec = &log.records()[i];
                    (log.context(rec.context), rec.reward)
                })
                .collect();
            ridge_fit(&samples, log.dim(), l2_penalty).map(Some)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(RegressorBank {
        dim: log.dim(),
        weights,
        default_prediction: DEFAULT_PREDICTION,
        l2_penalty,
    })
}

/// Minimizes `sum_i (<w, x_i> + b - y_i)^2 + penalty * |w|^2` (bias unpenalized) by
/// Jacobi-preconditioned conjugate gradient on the normal equations, restricted to the features
/// that occur in the samples.
pub fn ridge_fit(samples: &[(&SparseVector, f64)], dim: usize, penalty: f64) -> Result<AugmentedWeights> {
    if samples.is_empty() {
        return Err(Error::InvalidArgument("ridge fit needs at least one sample".into()));
    }
    let mut features: Vec<u32> = Vec::new();
    for (x, y) in samples {
        if x.dim() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                actual: x.dim(),
            });
        }
        if !y.is_finite() {
            return Err(Error::NonFinite(format!("target {y}")));
        }
        if let Some(v) = x.values().iter().find(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("feature value {v}")));
        }
        features.extend_from_slice(x.indices());
    }
    features.sort_unstable();
    features.dedup();
    let p = features.len();
    let n = samples.len() as f64;
    let rows: Vec<(Vec<usize>, &[f64])> = samples
        .iter()
        .map(|(x, _)| {
            let local = x
                .indices()
                .iter()
                .map(|i| features.binary_search(i).expect("feature collected above"))
                .collect();
            (local, x.values())
        })
        .collect();
    let targets: Vec<f64> = samples.iter().map(|(_, y)| *y).collect();

    // unknowns: p feature weights then the bias
    let apply = |v: &[f64], out: &mut [f64]| {
        out.iter_mut().for_each(|o| *o = 0.0);
        for (local, vals) in &rows {
            let pred = local.iter().zip(vals.iter()).map(|(&j, &x)| x * v[j]).sum::<f64>() + v[p];
            for (&j, &x) in local.iter().zip(vals.iter()) {
                out[j] += x * pred;
            }
            out[p] += pred;
        }
        for j in 0..p {
            out[j] += penalty * v[j];
        }
    };

    let mut rhs = vec![0.0; p + 1];
    let mut diag = vec![0.0; p + 1];
    for ((local, vals), &y) in rows.iter().zip(&targets) {
        for (&j, &x) in local.iter().zip(vals.iter()) {
            rhs[j] += x * y;
            diag[j] += x * x;
        }
        rhs[p] += y;
    }
    diag[p] = n;
    for d in diag.iter_mut().take(p) {
        *d += penalty;
    }
    let precond: Vec<f64> = diag.iter().map(|&d| if d > 0.0 { 1.0 / d } else { 1.0 }).collect();

    let mut sol = vec![0.0; p + 1];
    sol[p] = targets.iter().sum::<f64>() / n;
    let mut tmp = vec![0.0; p + 1];
    apply(&sol, &mut tmp);
    let mut resid: Vec<f64> = rhs.iter().zip(&tmp).map(|(b, a)| b - a).collect();
    let rhs_norm = rhs.iter().map(|v| v * v).sum::<f64>().sqrt().max(f64::MIN_POSITIVE);
    let mut z: Vec<f64> = resid.iter().zip(&precond).map(|(r, m)| r * m).collect();
    let mut dir = z.clone();
    let mut rz: f64 = resid.iter().zip(&z).map(|(r, z)| r * z).sum();
    let max_iter = CG_MIN_ITERATIONS.max(10 * (p + 1));
    for _ in 0..max_iter {
        let r_norm = resid.iter().map(|v| v * v).sum::<f64>().sqrt();
        if r_norm <= CG_TOLERANCE * rhs_norm {
            break;
        }
        apply(&dir, &mut tmp);
        let curv: f64 = dir.iter().zip(&tmp).map(|(d, a)| d * a).sum();
        if curv <= 0.0 || !curv.is_finite() {
            break;
        }
        let step = rz / curv;
        for j in 0..=p {
            sol[j] += step * dir[j];
            resid[j] -= step * tmp[j];
        }
        for j in 0..=p {
            z[j] = resid[j] * precond[j];
        }
        let rz_next: f64 = resid.iter().zip(&z).map(|(r, z)| r * z).sum();
        let beta = rz_next / rz;
        rz = rz_next;
        for j in 0..=p {
            dir[j] = z[j] + beta * dir[j];
        }
    }
    if sol.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("ridge solution diverged".into()));
    }
    let weights = SparseVector::new(dim, features, sol[..p].to_vec())?;
    Ok(AugmentedWeights::new(weights, sol[p]))
}
