use crate::error::{Error, Result};
use crate::matrix::Matrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SimilarityKind {
    Time,
    Embedding,
    Combined,
}

#[derive(Debug, Clone, PartialEq)]
pub enum RowStore {
    Dense(Matrix),
    /// Per row, `(column, score)` entries sorted by column; absent entries
    /// are exactly zero.
    Sparse(Vec<Vec<(usize, f64)>>),
    /// Per row, the `k` best `(column, score)` entries ordered by descending
    /// score, ties by ascending column.
    TopK {
        k: usize,
        rows: Vec<Vec<(usize, f64)>>,
    },
}

/// Scores between an ordered list of source entities (rows) and target
/// entities (columns).
#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityMatrix {
    pub source_ids: Vec<usize>,
    pub target_ids: Vec<usize>,
    pub kind: SimilarityKind,
    pub store: RowStore,
}

impl SimilarityMatrix {
    pub fn dense(source_ids: Vec<usize>, target_ids: Vec<usize>, kind: SimilarityKind, scores: Matrix) -> Result<Self> {
        if scores.rows() != source_ids.len() || scores.cols() != target_ids.len() {
            return Err(Error::Shape(format!(
                "{}x{} scores for {} sources and {} targets",
                scores.rows(),
                scores.cols(),
                source_ids.len(),
                target_ids.len()
            )));
        }
        Ok(Self {
            source_ids,
            target_ids,
            kind,
            store: RowStore::Dense(scores),
        })
    }

    pub fn n_rows(&self) -> usize {
        self.source_ids.len()
    }

    pub fn n_cols(&self) -> usize {
        self.target_ids.len()
    }

    /// Score at row position `i`, column position `j`. Entries a truncated
    /// store dropped read as zero.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        match &self.store {
            RowStore::Dense(m) => m.get(i, j),
            RowStore::Sparse(rows) => rows[i].binary_search_by_key(&j, |e| e.0).map_or(0.0, |p| rows[i][p].1),
            RowStore::TopK { rows, .. } => rows[i].iter().find(|e| e.0 == j).map_or(0.0, |e| e.1),
        }
    }

    /// Stored entries of row `i` as `(column, score)`.
    pub fn row_entries(&self, i: usize) -> Vec<(usize, f64)> {
        match &self.store {
            RowStore::Dense(m) => m.row(i).iter().copied().enumerate().collect(),
            RowStore::Sparse(rows) | RowStore::TopK { rows, .. } => rows[i].clone(),
        }
    }

    pub fn dense_row(&self, i: usize) -> Vec<f64> {
        match &self.store {
            RowStore::Dense(m) => m.row(i).to_vec(),
            RowStore::Sparse(rows) | RowStore::TopK { rows, .. } => {
                let mut out = vec![0.0; self.n_cols()];
                for &(j, s) in &rows[i] {
                    out[j] = s;
                }
                out
            }
        }
    }

    pub fn to_dense(&self) -> Matrix {
        match &self.store {
            RowStore::Dense(m) => m.clone(),
            _ => {
                let mut m = Matrix::zeros(self.n_rows(), self.n_cols());
                m.par_fill_rows(|i, row| {
                    if let RowStore::Sparse(rows) | RowStore::TopK { rows, .. } = &self.store {
                        for &(j, s) in &rows[i] {
                            row[j] = s;
                        }
                    }
                });
                m
            }
        }
    }

    pub fn as_dense(&self) -> Option<&Matrix> {
        match &self.store {
            RowStore::Dense(m) => Some(m),
            _ => None,
        }
    }

    /// Swaps the roles of sources and targets.
    pub fn transposed(&self) -> SimilarityMatrix {
        let d = self.to_dense();
        let t = Matrix::from_fn(d.cols(), d.rows(), |i, j| d.get(j, i));
        SimilarityMatrix {
            source_ids: self.target_ids.clone(),
            target_ids: self.source_ids.clone(),
            kind: self.kind,
            store: RowStore::Dense(t),
        }
    }

    /// Restricts to the given row and column positions, densely.
    pub fn select(&self, rows: &[usize], cols: &[usize]) -> SimilarityMatrix {
        let mut m = Matrix::zeros(rows.len(), cols.len());
        m.par_fill_rows(|a, out| {
            let full = self.dense_row(rows[a]);
            for (b, &j) in cols.iter().enumerate() {
                out[b] = full[j];
            }
        });
        SimilarityMatrix {
            source_ids: rows.iter().map(|&i| self.source_ids[i]).collect(),
            target_ids: cols.iter().map(|&j| self.target_ids[j]).collect(),
            kind: self.kind,
            store: RowStore::Dense(m),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sparse_reads_absent_as_zero() {
        let m = SimilarityMatrix {
            source_ids: vec![0, 1],
            target_ids: vec![5, 6, 7],
            kind: SimilarityKind::Time,
            store: RowStore::Sparse(vec![vec![(1, 0.5)], vec![]]),
        };
        assert_eq!(m.get(0, 1), 0.5);
        assert_eq!(m.get(0, 2), 0.0);
        assert_eq!(m.dense_row(0), vec![0.0, 0.5, 0.0]);
        let t = m.transposed();
        assert_eq!(t.get(1, 0), 0.5);
        assert_eq!(t.source_ids, vec![5, 6, 7]);
    }
}
