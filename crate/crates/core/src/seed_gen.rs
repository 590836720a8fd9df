//! Unsupervised seeds from temporal matching.
//!
//! A pair `(i, j)` becomes a seed when `j` is the only target whose time
//! dictionary matches `i`'s exactly and no other row-unique source claims
//! `j` as its exact match.

use crate::kg::{AlignmentPairSet, Provenance};
use crate::par;
use crate::similarity::SimilarityMatrix;

/// Scores within this distance of 1 count as exact matches.
pub const EXACT_TOLERANCE: f64 = 1e-12;

#[inline]
fn is_exact(score: f64) -> bool {
    score >= 1.0 - EXACT_TOLERANCE
}

/// Seeds from a time similarity matrix.
pub fn generate_seeds(time_sim: &SimilarityMatrix) -> AlignmentPairSet {
    // Per row: the single exact column, if there is exactly one.
    let row_match: Vec<Option<usize>> = par::map_indices(time_sim.n_rows(), |i| {
        let mut found = None;
        for (j, s) in time_sim.row_entries(i) {
            if is_exact(s) {
                if found.is_some() {
                    return None;
                }
                found = Some(j);
            }
        }
        found
    });
    // Per column: how many row-unique sources claim it.
    let mut claims = vec![0usize; time_sim.n_cols()];
    for j in row_match.iter().flatten() {
        claims[*j] += 1;
    }
    let mut seeds = AlignmentPairSet::new();
    for (i, m) in row_match.into_iter().enumerate() {
        if let Some(j) = m {
            if claims[j] == 1 {
                seeds.insert(
                    time_sim.source_ids[i],
                    time_sim.target_ids[j],
                    time_sim.get(i, j),
                    Provenance::Generated,
                );
            }
        }
    }
    seeds
}
