//! Hits@k and mean reciprocal rank.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::kg::AlignmentPairSet;
use crate::par;
use crate::similarity::SimilarityMatrix;

/// 1-based rank of `truth` in `scores`; every other candidate scoring at
/// least as high ranks ahead of it.
pub fn rank_of_truth(scores: &[f64], truth: usize) -> Result<usize> {
    let t = *scores.get(truth).ok_or(Error::TruthNotInPool(truth))?;
    Ok(1 + scores
        .iter()
        .enumerate()
        .filter(|&(j, &v)| j != truth && v >= t)
        .count())
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct EvalReport {
    pub hits_at: BTreeMap<usize, f64>,
    pub mrr: f64,
    /// Number of candidate targets each reference was ranked against.
    pub pool_size: usize,
    pub references: usize,
    /// Free-form run metadata (mode, config snapshot, timings).
    pub metadata: BTreeMap<String, String>,
}

impl EvalReport {
    pub fn hits(&self, k: usize) -> Option<f64> {
        self.hits_at.get(&k).copied()
    }

    fn from_ranks(ranks: &[usize], ks: &[usize], pool_size: usize) -> Self {
        let n = ranks.len().max(1) as f64;
        let hits_at = ks
            .iter()
            .map(|&k| (k, ranks.iter().filter(|&&r| r <= k).count() as f64 / n))
            .collect();
        let mrr = ranks.iter().map(|&r| 1.0 / r as f64).sum::<f64>() / n;
        Self {
            hits_at,
            mrr,
            pool_size,
            references: ranks.len(),
            metadata: BTreeMap::new(),
        }
    }

    /// `key=value` lines, metrics first.
    pub fn to_key_values(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.hits_at {
            let _ = writeln!(out, "hits@{k}={v}");
        }
        let _ = writeln!(out, "mrr={}", self.mrr);
        let _ = writeln!(out, "pool_size={}", self.pool_size);
        let _ = writeln!(out, "references={}", self.references);
        for (k, v) in &self.metadata {
            let _ = writeln!(out, "{k}={}", v.replace('\n', "\\n"));
        }
        out
    }

    pub fn to_table(&self) -> String {
        let mut out = String::new();
        let mut header = String::new();
        let mut row = String::new();
        for (k, v) in &self.hits_at {
            let _ = write!(header, "{:>10}", format!("Hits@{k}"));
            let _ = write!(row, "{:>10.4}", v);
        }
        let _ = write!(header, "{:>10}{:>10}{:>12}", "MRR", "pool", "references");
        let _ = write!(row, "{:>10.4}{:>10}{:>12}", self.mrr, self.pool_size, self.references);
        let _ = writeln!(out, "{header}\n{row}");
        out
    }
}

/// Ranks every reference target within its source's row of `sim`.
pub fn evaluate(sim: &SimilarityMatrix, references: &AlignmentPairSet, ks: &[usize]) -> Result<EvalReport> {
    let row_of: HashMap<usize, usize> = sim.source_ids.iter().enumerate().map(|(i, &e)| (e, i)).collect();
    let col_of: HashMap<usize, usize> = sim.target_ids.iter().enumerate().map(|(j, &e)| (e, j)).collect();
    let refs = references.as_slice();
    let ranks: Vec<Result<usize>> = par::map_indices(refs.len(), |r| {
        let p = refs[r];
        let i = *row_of
            .get(&p.source)
            .ok_or_else(|| Error::Shape(format!("reference source {} has no row", p.source)))?;
        let j = *col_of.get(&p.target).ok_or(Error::TruthNotInPool(p.target))?;
        rank_of_truth(&sim.dense_row(i), j)
    });
    let ranks = ranks.into_iter().collect::<Result<Vec<_>>>()?;
    Ok(EvalReport::from_ranks(&ranks, ks, sim.n_cols()))
}

/// Mean of the G1 -> G2 and G2 -> G1 evaluations.
pub fn evaluate_bidirectional(
    sim: &SimilarityMatrix,
    references: &AlignmentPairSet,
    ks: &[usize],
) -> Result<EvalReport> {
    let forward = evaluate(sim, references, ks)?;
    let mut reversed = AlignmentPairSet::new();
    for p in references.iter() {
        reversed.insert(p.target, p.source, p.score, p.provenance);
    }
    let backward = evaluate(&sim.transposed(), &reversed, ks)?;
    Ok(EvalReport {
        hits_at: forward
            .hits_at
            .iter()
            .map(|(k, v)| (*k, (v + backward.hits_at[k]) / 2.0))
            .collect(),
        mrr: (forward.mrr + backward.mrr) / 2.0,
        pool_size: forward.pool_size,
        references: forward.references,
        metadata: BTreeMap::new(),
    })
}

/// Scores a prediction file that lists candidate targets per source (one
/// line per candidate). References whose target is not listed count as
/// misses with reciprocal rank 0.
pub fn evaluate_predictions(predictions: &AlignmentPairSet, references: &AlignmentPairSet, ks: &[usize]) -> EvalReport {
    let mut by_source: HashMap<usize, Vec<(usize, f64)>> = HashMap::new();
    for p in predictions.iter() {
        by_source.entry(p.source).or_default().push((p.target, p.score));
    }
    let n = references.len().max(1) as f64;
    let mut hits = vec![0usize; ks.len()];
    let mut rr = 0.0;
    for r in references.iter() {
        let Some(cands) = by_source.get(&r.source) else {
            continue;
        };
        let Some(pos) = cands.iter().position(|c| c.0 == r.target) else {
            continue;
        };
        let scores: Vec<f64> = cands.iter().map(|c| c.1).collect();
        let rank = rank_of_truth(&scores, pos).expect("position is in range");
        rr += 1.0 / rank as f64;
        for (h, &k) in hits.iter_mut().zip(ks) {
            if rank <= k {
                *h += 1;
            }
        }
    }
    EvalReport {
        hits_at: ks.iter().zip(hits).map(|(&k, h)| (k, h as f64 / n)).collect(),
        mrr: rr / n,
        pool_size: by_source.values().map(Vec::len).max().unwrap_or(0),
        references: references.len(),
        metadata: BTreeMap::new(),
    }
}
