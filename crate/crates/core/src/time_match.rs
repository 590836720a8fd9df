//! Per-entity time dictionaries and the temporal matching similarity
//! `2c / (m + n)`, where `c` is the multiset intersection size of two
//! dictionaries of sizes `m` and `n`.

use crate::kg::{TemporalKg, TimeAnnotation, TimeId};
use crate::par;
use crate::similarity::{RowStore, SimilarityKind, SimilarityMatrix};

/// Rows per work unit when building similarity matrices.
pub const ROW_BLOCK: usize = 64;

/// Sorted multiset of known timestamp ids per entity.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TimeDictionary {
    entries: Vec<Vec<TimeId>>,
}

impl TimeDictionary {
    pub fn build(kg: &TemporalKg) -> Self {
        let mut entries = vec![Vec::new(); kg.entity_count()];
        for q in kg.quadruples() {
            let stamps: &[TimeId] = match q.time {
                TimeAnnotation::Point(t) => &[t],
                TimeAnnotation::Interval(s, e) => &[s, e],
            };
            for &t in stamps.iter().filter(|t| t.is_known()) {
                entries[q.head].push(t);
                entries[q.tail].push(t);
            }
        }
        for e in &mut entries {
            e.sort_unstable();
        }
        Self { entries }
    }

    pub fn from_entries(mut entries: Vec<Vec<TimeId>>) -> Self {
        for e in &mut entries {
            e.retain(|t| t.is_known());
            e.sort_unstable();
        }
        Self { entries }
    }

    pub fn get(&self, entity: usize) -> &[TimeId] {
        &self.entries[entity]
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// `(time, multiplicity)` runs of one entity's dictionary.
    fn runs(&self, entity: usize) -> Vec<(TimeId, u32)> {
        let mut out: Vec<(TimeId, u32)> = Vec::new();
        for &t in &self.entries[entity] {
            match out.last_mut() {
                Some((last, n)) if *last == t => *n += 1,
                _ => out.push((t, 1)),
            }
        }
        out
    }
}

#[inline]
fn dice(common: usize, m: usize, n: usize) -> f64 {
    if m + n == 0 {
        0.0
    } else {
        2.0 * common as f64 / (m + n) as f64
    }
}

fn sorted_intersection(a: &[TimeId], b: &[TimeId]) -> usize {
    let (mut i, mut j, mut c) = (0, 0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                c += 1;
                i += 1;
                j += 1;
            }
        }
    }
    c
}

/// Temporal matching score of two timestamp multisets. Inputs need not be
/// sorted. Two empty multisets score 0.
pub fn time_similarity(a: &[TimeId], b: &[TimeId]) -> f64 {
    let common = if a.is_sorted() && b.is_sorted() {
        sorted_intersection(a, b)
    } else {
        let (mut a, mut b) = (a.to_vec(), b.to_vec());
        a.sort_unstable();
        b.sort_unstable();
        sorted_intersection(&a, &b)
    };
    dice(common, a.len(), b.len())
}

/// Scores every `(source, target)` pair sharing at least one timestamp.
///
/// Targets are indexed by timestamp so each source row only touches the
/// targets it overlaps with; all other entries are exactly zero. With
/// `top_k`, each row keeps its `k` largest entries (ties to the smaller
/// target position).
pub fn build_time_similarity_matrix(
    dic1: &TimeDictionary,
    dic2: &TimeDictionary,
    source_ids: &[usize],
    target_ids: &[usize],
    top_k: Option<usize>,
) -> SimilarityMatrix {
    let max_time = source_ids
        .iter()
        .flat_map(|&e| dic1.get(e).last())
        .chain(target_ids.iter().flat_map(|&e| dic2.get(e).last()))
        .map(|t| t.index())
        .max()
        .unwrap_or(0);
    let mut index: Vec<Vec<(usize, u32)>> = vec![Vec::new(); max_time + 1];
    for (col, &e) in target_ids.iter().enumerate() {
        for (t, mult) in dic2.runs(e) {
            index[t.index()].push((col, mult));
        }
    }
    let target_sizes: Vec<usize> = target_ids.iter().map(|&e| dic2.get(e).len()).collect();

    let blocks = source_ids.len().div_ceil(ROW_BLOCK);
    let per_block = par::map_indices(blocks, |b| {
        let mut common = vec![0u32; target_ids.len()];
        let mut touched = Vec::new();
        let lo = b * ROW_BLOCK;
        let hi = (lo + ROW_BLOCK).min(source_ids.len());
        (lo..hi)
            .map(|row| {
                let e = source_ids[row];
                for (t, m) in dic1.runs(e) {
                    for &(col, n) in &index[t.index()] {
                        if common[col] == 0 {
                            touched.push(col);
                        }
                        common[col] += m.min(n);
                    }
                }
                touched.sort_unstable();
                let m = dic1.get(e).len();
                let mut entries: Vec<(usize, f64)> = touched
                    .drain(..)
                    .map(|col| {
                        let c = std::mem::take(&mut common[col]) as usize;
                        (col, dice(c, m, target_sizes[col]))
                    })
                    .collect();
                if let Some(k) = top_k {
                    entries.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
                    entries.truncate(k);
                }
                entries
            })
            .collect::<Vec<_>>()
    });
    let rows: Vec<Vec<(usize, f64)>> = per_block.into_iter().flatten().collect();

    SimilarityMatrix {
        source_ids: source_ids.to_vec(),
        target_ids: target_ids.to_vec(),
        kind: SimilarityKind::Time,
        store: match top_k {
            Some(k) => RowStore::TopK { k, rows },
            None => RowStore::Sparse(rows),
        },
    }
}
