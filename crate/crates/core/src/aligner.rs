//! Prediction: cosine similarity of global embeddings mixed with temporal
//! similarity, CSLS rescaling, argmax decoding and mutual-nearest-neighbor
//! bootstrapping.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::encoder::{self, EmbeddingState, EncoderConfig};
use crate::error::{Error, Result};
use crate::kg::{AlignmentPairSet, Provenance};
use crate::matrix::Matrix;
use crate::par;
use crate::similarity::{RowStore, SimilarityKind, SimilarityMatrix};
use crate::time_match::{build_time_similarity_matrix, TimeDictionary};
use crate::trainer::{TrainConfig, Trainer, UnionGraph};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AlignConfig {
    /// Weight of the temporal similarity; `1 - alpha` goes to embeddings.
    pub alpha: f64,
    pub csls_k: usize,
    /// Training rounds; 1 disables bootstrapping.
    pub iterations: usize,
}

impl Default for AlignConfig {
    fn default() -> Self {
        Self {
            alpha: 0.3,
            csls_k: 10,
            iterations: 5,
        }
    }
}

impl AlignConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(Error::Config(format!("alpha {} outside [0, 1]", self.alpha)));
        }
        if self.csls_k == 0 || self.iterations == 0 {
            return Err(Error::Config("csls_k and iterations must be at least 1".into()));
        }
        Ok(())
    }
}

fn normalized_rows(table: &Matrix, ids: &[usize]) -> Matrix {
    let mut out = Matrix::zeros(ids.len(), table.cols());
    out.par_fill_rows(|i, row| {
        let src = table.row(ids[i]);
        let norm = src.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm > 0.0 {
            for (o, v) in row.iter_mut().zip(src) {
                *o = v / norm;
            }
        }
    });
    out
}

/// Dot product with eight independent accumulators so the loop vectorizes;
/// the summation order is fixed, so results do not depend on threading.
fn dot(u: &[f64], v: &[f64]) -> f64 {
    let mut acc = [0.0f64; 8];
    let (uc, vc) = (u.chunks_exact(8), v.chunks_exact(8));
    let tail: f64 = uc.remainder().iter().zip(vc.remainder()).map(|(x, y)| x * y).sum();
    for (a, b) in uc.zip(vc) {
        for l in 0..8 {
            acc[l] += a[l] * b[l];
        }
    }
    acc.iter().sum::<f64>() + tail
}

/// Cosine similarity between rows `source_ids` of `g1` and rows
/// `target_ids` of `g2`. Zero rows score 0 against everything.
pub fn embedding_similarity(
    g1: &Matrix,
    g2: &Matrix,
    source_ids: &[usize],
    target_ids: &[usize],
) -> Result<SimilarityMatrix> {
    if g1.cols() != g2.cols() {
        return Err(Error::Shape(format!(
            "embedding widths {} and {}",
            g1.cols(),
            g2.cols()
        )));
    }
    let a = normalized_rows(g1, source_ids);
    let b = normalized_rows(g2, target_ids);
    let mut scores = Matrix::zeros(source_ids.len(), target_ids.len());
    scores.par_fill_rows(|i, row| {
        let u = a.row(i);
        for (j, o) in row.iter_mut().enumerate() {
            *o = dot(u, b.row(j));
        }
    });
    SimilarityMatrix::dense(
        source_ids.to_vec(),
        target_ids.to_vec(),
        SimilarityKind::Embedding,
        scores,
    )
}

/// Entry-wise `(1 - alpha) * emb + alpha * time`. The endpoints pass the
/// selected input through unchanged.
pub fn combine(emb: &SimilarityMatrix, time: &SimilarityMatrix, alpha: f64) -> Result<SimilarityMatrix> {
    if emb.source_ids != time.source_ids || emb.target_ids != time.target_ids {
        return Err(Error::Shape(format!(
            "combining {}x{} with {}x{} or differently ordered ids",
            emb.n_rows(),
            emb.n_cols(),
            time.n_rows(),
            time.n_cols()
        )));
    }
    let scores = if alpha == 0.0 {
        emb.to_dense()
    } else if alpha == 1.0 {
        time.to_dense()
    } else {
        let mut out = emb.to_dense();
        out.par_fill_rows(|i, row| {
            let t = time.dense_row(i);
            for (o, s) in row.iter_mut().zip(t) {
                *o = (1.0 - alpha) * *o + alpha * s;
            }
        });
        out
    };
    SimilarityMatrix::dense(
        emb.source_ids.clone(),
        emb.target_ids.clone(),
        SimilarityKind::Combined,
        scores,
    )
}

fn top_k_mean(values: &mut [f64], k: usize) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    let k = k.min(values.len());
    let n = values.len();
    values.select_nth_unstable_by(n - k, |a, b| a.total_cmp(b));
    values[n - k..].iter().sum::<f64>() / k as f64
}

/// Mean of the `k` largest entries of every row and every column.
pub fn csls_neighborhoods(scores: &Matrix, k: usize) -> (Vec<f64>, Vec<f64>) {
    let rows = par::map_indices(scores.rows(), |i| top_k_mean(&mut scores.row(i).to_vec(), k));
    let cols = par::map_indices(scores.cols(), |j| {
        let mut col: Vec<f64> = (0..scores.rows()).map(|i| scores.get(i, j)).collect();
        top_k_mean(&mut col, k)
    });
    (rows, cols)
}

/// CSLS: `2 s(i, j) - r_src(i) - r_tgt(j)` with `r` the mean of the `k`
/// best scores of a row (sources) or column (targets). `k` is clamped to
/// the pool size.
pub fn csls_rescale(sim: &SimilarityMatrix, k: usize) -> SimilarityMatrix {
    let mut scores = sim.to_dense();
    let (r_src, r_tgt) = csls_neighborhoods(&scores, k);
    scores.par_fill_rows(|i, row| {
        for (j, v) in row.iter_mut().enumerate() {
            *v = 2.0 * *v - r_src[i] - r_tgt[j];
        }
    });
    SimilarityMatrix {
        source_ids: sim.source_ids.clone(),
        target_ids: sim.target_ids.clone(),
        kind: sim.kind,
        store: RowStore::Dense(scores),
    }
}

/// Position of the largest value (first on ties) and whether it is unique.
fn argmax(values: impl Iterator<Item = f64>) -> Option<(usize, f64, bool)> {
    let mut best: Option<(usize, f64, bool)> = None;
    for (j, v) in values.enumerate() {
        best = match best {
            None => Some((j, v, true)),
            Some((_, bv, _)) if v > bv => Some((j, v, true)),
            Some((bj, bv, _)) if v == bv => Some((bj, bv, false)),
            keep => keep,
        };
    }
    best
}

/// Best target per source row, ties to the smaller column.
pub fn predict(sim: &SimilarityMatrix) -> AlignmentPairSet {
    let best = par::map_indices(sim.n_rows(), |i| argmax(sim.dense_row(i).into_iter()));
    let mut out = AlignmentPairSet::new();
    for (i, b) in best.into_iter().enumerate() {
        if let Some((j, v, _)) = b {
            out.insert(sim.source_ids[i], sim.target_ids[j], v, Provenance::Prediction);
        }
    }
    out
}

/// Pairs whose row argmax and column argmax are unique and point at each
/// other.
pub fn mutual_nearest_pairs(sim: &SimilarityMatrix) -> AlignmentPairSet {
    let dense = sim.to_dense();
    let row_best = par::map_indices(dense.rows(), |i| argmax(dense.row(i).iter().copied()));
    let col_best = par::map_indices(dense.cols(), |j| argmax((0..dense.rows()).map(|i| dense.get(i, j))));
    let mut out = AlignmentPairSet::new();
    for (i, rb) in row_best.into_iter().enumerate() {
        let Some((j, v, true)) = rb else { continue };
        if let Some((ci, _, true)) = col_best[j] {
            if ci == i {
                out.insert(sim.source_ids[i], sim.target_ids[j], v, Provenance::Pseudo);
            }
        }
    }
    out
}

/// Splits a union-graph embedding into the G1 and G2 blocks.
pub fn split_global(global: &Matrix, graph: &UnionGraph) -> (Matrix, Matrix) {
    let (n1, n2) = graph.entity_counts();
    let w = global.cols();
    let g1 = Matrix::from_vec(n1, w, global.as_slice()[..n1 * w].to_vec()).expect("sized");
    let g2 = Matrix::from_vec(n2, w, global.as_slice()[n1 * w..(n1 + n2) * w].to_vec()).expect("sized");
    (g1, g2)
}

/// Everything needed to score candidate pairs.
pub struct Scorer<'a> {
    pub graph: &'a UnionGraph,
    pub dic1: &'a TimeDictionary,
    pub dic2: &'a TimeDictionary,
    pub encoder: &'a EncoderConfig,
    pub align: &'a AlignConfig,
}

impl Scorer<'_> {
    /// Combined similarity for the given pools, before CSLS.
    pub fn combined(&self, state: &EmbeddingState, sources: &[usize], targets: &[usize]) -> Result<SimilarityMatrix> {
        let global = encoder::forward(state, self.graph.operator(), self.encoder, None).global;
        let (g1, g2) = split_global(&global, self.graph);
        let emb = embedding_similarity(&g1, &g2, sources, targets)?;
        let time = build_time_similarity_matrix(self.dic1, self.dic2, sources, targets, None);
        combine(&emb, &time, self.align.alpha)
    }

    /// Combined similarity rescaled with CSLS.
    pub fn score(&self, state: &EmbeddingState, sources: &[usize], targets: &[usize]) -> Result<SimilarityMatrix> {
        Ok(csls_rescale(
            &self.combined(state, sources, targets)?,
            self.align.csls_k,
        ))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct IterationRecord {
    pub iteration: usize,
    pub pseudo_pairs_added: usize,
    pub train_pool_size: usize,
}

#[derive(Debug, Clone)]
pub struct IterationOutcome {
    pub state: EmbeddingState,
    pub predictions: AlignmentPairSet,
    /// CSLS-rescaled combined similarity over the prediction pool.
    pub similarity: SimilarityMatrix,
    pub train_pairs: AlignmentPairSet,
    /// Loss per epoch across all rounds.
    pub loss_history: Vec<f64>,
    pub report: Vec<IterationRecord>,
}

/// Bootstrapped training. Each round trains for `epochs_per_iteration`
/// epochs; between rounds, mutual nearest neighbors among entities outside
/// the training set join it permanently. Predictions are decoded over the
/// given source and target pools after the last round.
pub fn iterate(
    mut state: EmbeddingState,
    scorer: &Scorer<'_>,
    seeds: &AlignmentPairSet,
    train: &TrainConfig,
    prediction_pool: (&[usize], &[usize]),
) -> Result<IterationOutcome> {
    if seeds.is_empty() {
        return Err(Error::EmptySeeds);
    }
    let mut trainer = Trainer::new(scorer.encoder.clone(), train.clone());
    let mut pool = seeds.clone();
    let mut loss_history = Vec::new();
    let mut report = Vec::new();
    let (n1, n2) = scorer.graph.entity_counts();
    for iteration in 1..=scorer.align.iterations {
        loss_history.extend(trainer.train_epochs(&mut state, scorer.graph, &pool, train.epochs_per_iteration)?);
        let mut added = 0;
        if iteration < scorer.align.iterations {
            let used_s: HashSet<usize> = pool.sources().collect();
            let used_t: HashSet<usize> = pool.targets().collect();
            let free_s: Vec<usize> = (0..n1).filter(|e| !used_s.contains(e)).collect();
            let free_t: Vec<usize> = (0..n2).filter(|e| !used_t.contains(e)).collect();
            if !free_s.is_empty() && !free_t.is_empty() {
                let sim = scorer.score(&state, &free_s, &free_t)?;
                added = pool.extend_from(&mutual_nearest_pairs(&sim));
            }
        }
        report.push(IterationRecord {
            iteration,
            pseudo_pairs_added: added,
            train_pool_size: pool.len(),
        });
    }
    let similarity = scorer.score(&state, prediction_pool.0, prediction_pool.1)?;
    let predictions = predict(&similarity);
    Ok(IterationOutcome {
        state,
        predictions,
        similarity,
        train_pairs: pool,
        loss_history,
        report,
    })
}

#[cfg(test)]
#[allow(clippy::needless_range_loop)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn dense(m: Matrix) -> SimilarityMatrix {
        let (r, c) = (m.rows(), m.cols());
        SimilarityMatrix::dense((0..r).collect(), (0..c).collect(), SimilarityKind::Combined, m).unwrap()
    }

    fn random_matrix(rng: &mut ChaCha8Rng, r: usize, c: usize) -> Matrix {
        Matrix::from_fn(r, c, |_, _| rng.random_range(-1.0..1.0))
    }

    // Straightforward CSLS: sort every row and column in full.
    fn naive_csls(m: &Matrix, k: usize) -> Matrix {
        let mean_top = |mut v: Vec<f64>| {
            v.sort_by(|a, b| b.partial_cmp(a).unwrap());
            let k = k.min(v.len());
            v[..k].iter().sum::<f64>() / k as f64
        };
        let rs: Vec<f64> = (0..m.rows()).map(|i| mean_top(m.row(i).to_vec())).collect();
        let cs: Vec<f64> = (0..m.cols())
            .map(|j| mean_top((0..m.rows()).map(|i| m.get(i, j)).collect()))
            .collect();
        Matrix::from_fn(m.rows(), m.cols(), |i, j| 2.0 * m.get(i, j) - rs[i] - cs[j])
    }

    #[test]
    fn cosine_cases() {
        let g1 = Matrix::from_vec(2, 2, vec![1.0, 2.0, 0.0, 0.0]).unwrap();
        let g2 = Matrix::from_vec(2, 2, vec![2.0, 4.0, -2.0, 1.0]).unwrap();
        let s = embedding_similarity(&g1, &g2, &[0, 1], &[0, 1]).unwrap();
        assert!((s.get(0, 0) - 1.0).abs() < 1e-15);
        assert_eq!(s.get(0, 1), 0.0);
        assert_eq!(s.dense_row(1), vec![0.0, 0.0]);
    }

    #[test]
    fn cosine_matches_double_loop() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let g1 = random_matrix(&mut rng, 20, 6);
        let g2 = random_matrix(&mut rng, 20, 6);
        let ids: Vec<usize> = (0..20).collect();
        let s = embedding_similarity(&g1, &g2, &ids, &ids).unwrap();
        for i in 0..20 {
            for j in 0..20 {
                let (mut dot, mut na, mut nb) = (0.0, 0.0, 0.0);
                for k in 0..6 {
                    dot += g1.get(i, k) * g2.get(j, k);
                    na += g1.get(i, k) * g1.get(i, k);
                    nb += g2.get(j, k) * g2.get(j, k);
                }
                assert!((s.get(i, j) - dot / (na.sqrt() * nb.sqrt())).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn combine_cases() {
        let e = dense(Matrix::from_vec(1, 1, vec![0.5]).unwrap());
        let t = dense(Matrix::from_vec(1, 1, vec![1.0]).unwrap());
        assert!((combine(&e, &t, 0.3).unwrap().get(0, 0) - 0.65).abs() < 1e-15);

        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let e = dense(random_matrix(&mut rng, 4, 5));
        let t = dense(random_matrix(&mut rng, 4, 5));
        assert_eq!(combine(&e, &t, 0.0).unwrap().to_dense(), e.to_dense());
        assert_eq!(combine(&e, &t, 1.0).unwrap().to_dense(), t.to_dense());
        let small = dense(random_matrix(&mut rng, 3, 5));
        assert!(combine(&e, &small, 0.5).is_err());
    }

    #[test]
    fn csls_constant_matrix_is_zero() {
        let m = dense(Matrix::from_fn(4, 4, |_, _| 0.7));
        let r = csls_rescale(&m, 2);
        assert!(r.to_dense().as_slice().iter().all(|v| v.abs() < 1e-15));
    }

    #[test]
    fn csls_hand_case() {
        // top-2 means: rows [0.85, 0.7, 0.5], columns [0.75, 0.75, 0.55]
        let m = Matrix::from_vec(3, 3, vec![0.9, 0.8, 0.1, 0.6, 0.3, 0.8, 0.2, 0.7, 0.3]).unwrap();
        let r = csls_rescale(&dense(m), 2).to_dense();
        let expected = [[0.2, 0.0, -1.2], [-0.25, -0.85, 0.35], [-0.85, 0.15, -0.45]];
        for i in 0..3 {
            for j in 0..3 {
                assert!((r.get(i, j) - expected[i][j]).abs() < 1e-12, "({i},{j})");
            }
        }
    }

    #[test]
    fn csls_matches_naive() {
        let mut rng = ChaCha8Rng::seed_from_u64(30);
        for _ in 0..5 {
            let m = random_matrix(&mut rng, 30, 30);
            let fast = csls_rescale(&dense(m.clone()), 10);
            let slow = naive_csls(&m, 10);
            for (a, b) in fast.to_dense().as_slice().iter().zip(slow.as_slice()) {
                assert!((a - b).abs() < 1e-10);
            }
            let fp: Vec<_> = predict(&fast).iter().map(|p| p.target).collect();
            let sp: Vec<_> = predict(&dense(slow)).iter().map(|p| p.target).collect();
            assert_eq!(fp, sp);
        }
        // k larger than the pool uses the whole pool
        let m = random_matrix(&mut rng, 3, 4);
        let a = csls_rescale(&dense(m.clone()), 100).to_dense();
        assert_eq!(a, naive_csls(&m, 100));
    }

    #[test]
    fn predict_cases() {
        let id = dense(Matrix::from_fn(4, 4, |i, j| if i == j { 1.0 } else { 0.1 }));
        let p = predict(&id);
        assert!(p
            .iter()
            .all(|x| x.source == x.target && x.provenance == Provenance::Prediction));
        let tied = dense(Matrix::from_vec(1, 3, vec![0.2, 0.9, 0.9]).unwrap());
        assert_eq!(predict(&tied).as_slice()[0].target, 1);

        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let m = random_matrix(&mut rng, 15, 9);
        let p = predict(&dense(m.clone()));
        for (i, pair) in p.iter().enumerate() {
            let mut best = 0;
            for j in 1..9 {
                if m.get(i, j) > m.get(i, best) {
                    best = j;
                }
            }
            assert_eq!(pair.target, best);
        }
    }

    #[test]
    fn mutual_cases() {
        let id = dense(Matrix::from_fn(3, 3, |i, j| if i == j { 1.0 } else { 0.0 }));
        assert_eq!(mutual_nearest_pairs(&id).len(), 3);
        // both rows prefer column 0; only row 1 is column 0's favourite
        let m = dense(Matrix::from_vec(2, 2, vec![0.8, 0.1, 0.9, 0.2]).unwrap());
        let p = mutual_nearest_pairs(&m);
        assert_eq!(p.len(), 1);
        assert_eq!((p.as_slice()[0].source, p.as_slice()[0].target), (1, 0));
        assert_eq!(p.as_slice()[0].provenance, Provenance::Pseudo);
    }

    #[test]
    fn mutual_matches_double_argmax() {
        let mut rng = ChaCha8Rng::seed_from_u64(25);
        let m = Matrix::from_fn(25, 25, |_, _| rng.random_range(0..6) as f64);
        let got: HashSet<(usize, usize)> = mutual_nearest_pairs(&dense(m.clone()))
            .iter()
            .map(|p| (p.source, p.target))
            .collect();
        let mut expected = HashSet::new();
        for i in 0..25 {
            let rmax = (0..25).map(|j| m.get(i, j)).fold(f64::MIN, f64::max);
            let rarg: Vec<usize> = (0..25).filter(|&j| m.get(i, j) == rmax).collect();
            if rarg.len() != 1 {
                continue;
            }
            let j = rarg[0];
            let cmax = (0..25).map(|a| m.get(a, j)).fold(f64::MIN, f64::max);
            let carg: Vec<usize> = (0..25).filter(|&a| m.get(a, j) == cmax).collect();
            if carg == vec![i] {
                expected.insert((i, j));
            }
        }
        assert_eq!(got, expected);
    }

    proptest! {
        #[test]
        fn full_pool_csls_argmax_ignores_row_shift(seed in 0u64..500, row in 0usize..12, shift in -5.0f64..5.0) {
            // With k below the pool size a shifted row also moves the column
            // neighborhoods it belongs to, so only the full-pool case is exact.
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let m = random_matrix(&mut rng, 12, 12);
            let mut shifted = m.clone();
            shifted.row_mut(row).iter_mut().for_each(|v| *v += shift);
            let a: Vec<_> = predict(&csls_rescale(&dense(m), 12)).iter().map(|p| p.target).collect();
            let b: Vec<_> = predict(&csls_rescale(&dense(shifted), 12)).iter().map(|p| p.target).collect();
            prop_assert_eq!(a, b);
        }

        #[test]
        fn source_scaling_term_never_changes_row_argmax(seed in 0u64..500, k in 1usize..12) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let m = random_matrix(&mut rng, 12, 12);
            let (_, r_tgt) = csls_neighborhoods(&m, k);
            let without_source = Matrix::from_fn(12, 12, |i, j| 2.0 * m.get(i, j) - r_tgt[j]);
            let a: Vec<_> = predict(&csls_rescale(&dense(m), k)).iter().map(|p| p.target).collect();
            let b: Vec<_> = predict(&dense(without_source)).iter().map(|p| p.target).collect();
            prop_assert_eq!(a, b);
        }

        #[test]
        fn mixing_is_monotone(e in -1.0f64..1.0, t in 0.0f64..1.0, de in 0.0f64..0.5, dt in 0.0f64..0.5, alpha in 0.0f64..=1.0) {
            let one = |v: f64| dense(Matrix::from_vec(1, 1, vec![v]).unwrap());
            let lo = combine(&one(e), &one(t), alpha).unwrap().get(0, 0);
            let hi = combine(&one(e + de), &one(t + dt), alpha).unwrap().get(0, 0);
            prop_assert!(hi >= lo);
        }

        #[test]
        fn mutual_pairs_form_a_matching(seed in 0u64..500) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let m = Matrix::from_fn(10, 8, |_, _| rng.random_range(0..4) as f64);
            prop_assert!(mutual_nearest_pairs(&dense(m)).is_partial_matching());
        }
    }
}
