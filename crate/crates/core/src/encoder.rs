//! Weightless mean-aggregation GNN.
//!
//! Layer 1 fuses an entity's structural feature (mean entity embedding over
//! its neighborhood, self included) with its relational feature (mean
//! relation embedding over incident relations). Every further layer is a
//! rectified neighborhood mean `relu(D^-1 A H)` of the previous one, and the
//! global embedding concatenates all layers. The only parameters are the
//! entity and relation tables.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kg::TemporalKg;
use crate::matrix::Matrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    #[default]
    Relu,
    Identity,
}

impl Activation {
    #[inline]
    fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Relu => x.max(0.0),
            Activation::Identity => x,
        }
    }

    /// Derivative evaluated from the activation's output; zero at the kink.
    #[inline]
    fn gate(self, out: f64) -> f64 {
        match self {
            Activation::Relu => {
                if out > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Identity => 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EncoderConfig {
    pub dim: usize,
    pub layers: usize,
    pub activation: Activation,
    pub init_seed: u64,
    /// Half-width of the uniform initializer. `None` uses
    /// `sqrt(6 / (rows + cols))` per table.
    pub init_scale: Option<f64>,
    /// Replace the relational half of layer 1 by a copy of the structural half.
    pub ablate_relational_fusion: bool,
    /// Use the last layer alone instead of the concatenation of all layers.
    pub ablate_global_concat: bool,
}

impl Default for EncoderConfig {
    fn default() -> Self {
        Self {
            dim: 100,
            layers: 2,
            activation: Activation::Relu,
            init_seed: 0,
            init_scale: None,
            ablate_relational_fusion: false,
            ablate_global_concat: false,
        }
    }
}

impl EncoderConfig {
    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 || self.layers == 0 {
            return Err(Error::Config("encoder dim and layers must be at least 1".into()));
        }
        if let Some(s) = self.init_scale {
            if !(s.is_finite() && s >= 0.0) {
                return Err(Error::Config(format!("init_scale {s} must be finite and >= 0")));
            }
        }
        Ok(())
    }

    /// Width of the global embedding.
    pub fn output_width(&self) -> usize {
        if self.ablate_global_concat {
            2 * self.dim
        } else {
            2 * self.dim * self.layers
        }
    }
}

/// The learnable tables.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingState {
    pub entity_table: Matrix,
    pub relation_table: Matrix,
}

impl EmbeddingState {
    pub fn dim(&self) -> usize {
        self.entity_table.cols()
    }

    pub fn parameter_count(&self) -> usize {
        self.entity_table.as_slice().len() + self.relation_table.as_slice().len()
    }

    pub fn is_finite(&self) -> bool {
        self.entity_table.is_finite() && self.relation_table.is_finite()
    }
}

fn uniform_table(rng: &mut ChaCha8Rng, rows: usize, cols: usize, scale: Option<f64>) -> Matrix {
    let s = scale.unwrap_or_else(|| (6.0 / (rows + cols) as f64).sqrt());
    let data = (0..rows * cols)
        .map(|_| (2.0 * rng.random::<f64>() - 1.0) * s)
        .collect();
    Matrix::from_vec(rows, cols, data).expect("sized")
}

/// Uniform tables reproducible from `config.init_seed`.
pub fn init_embeddings(config: &EncoderConfig, entity_count: usize, relation_count: usize) -> EmbeddingState {
    let mut rng = ChaCha8Rng::seed_from_u64(config.init_seed);
    let entity_table = uniform_table(&mut rng, entity_count, config.dim, config.init_scale);
    let relation_table = uniform_table(&mut rng, relation_count, config.dim, config.init_scale);
    EmbeddingState {
        entity_table,
        relation_table,
    }
}

/// Sparse mean operators of one graph, precomputed for forward and backward.
#[derive(Debug, Clone)]
pub struct GraphOperator {
    neighbors: Vec<Vec<usize>>,
    inv_degree: Vec<f64>,
    /// Per entity, `(relation, weight)` with weights summing to 1 (or empty).
    entity_relations: Vec<Vec<(usize, f64)>>,
    /// Per relation, `(entity, weight)`; the transpose of the above.
    relation_entities: Vec<Vec<(usize, f64)>>,
}

impl GraphOperator {
    pub fn new(kg: &TemporalKg) -> Self {
        let n = kg.entity_count();
        let neighbors: Vec<Vec<usize>> = (0..n).map(|e| kg.neighbors(e).to_vec()).collect();
        let inv_degree = neighbors.iter().map(|l| 1.0 / l.len() as f64).collect();
        let mut entity_relations = Vec::with_capacity(n);
        let mut relation_entities = vec![Vec::new(); kg.relation_count()];
        for e in 0..n {
            let rels = kg.entity_relations(e);
            let total = rels.len() as f64;
            let mut weighted: Vec<(usize, f64)> = Vec::new();
            for chunk in rels.chunk_by(|a, b| a == b) {
                weighted.push((chunk[0], chunk.len() as f64 / total));
            }
            for &(r, w) in &weighted {
                relation_entities[r].push((e, w));
            }
            entity_relations.push(weighted);
        }
        Self {
            neighbors,
            inv_degree,
            entity_relations,
            relation_entities,
        }
    }

    pub fn entity_count(&self) -> usize {
        self.neighbors.len()
    }

    pub fn relation_count(&self) -> usize {
        self.relation_entities.len()
    }

    /// `D^-1 A x`: each row becomes the mean of its neighbors' rows.
    pub fn neighbor_mean(&self, x: &Matrix) -> Matrix {
        let mut out = Matrix::zeros(x.rows(), x.cols());
        out.par_fill_rows(|i, row| {
            for &j in &self.neighbors[i] {
                for (o, v) in row.iter_mut().zip(x.row(j)) {
                    *o += v;
                }
            }
            let s = self.inv_degree[i];
            row.iter_mut().for_each(|o| *o *= s);
        });
        out
    }

    /// `(D^-1 A)^T g = A D^-1 g`, using the symmetry of `A`.
    pub fn neighbor_mean_transpose(&self, g: &Matrix) -> Matrix {
        let mut out = Matrix::zeros(g.rows(), g.cols());
        out.par_fill_rows(|i, row| {
            for &j in &self.neighbors[i] {
                let s = self.inv_degree[j];
                for (o, v) in row.iter_mut().zip(g.row(j)) {
                    *o += s * v;
                }
            }
        });
        out
    }

    /// Mean relation embedding per entity; zero rows where no relation occurs.
    pub fn relation_mean(&self, relation_table: &Matrix) -> Matrix {
        let mut out = Matrix::zeros(self.entity_count(), relation_table.cols());
        out.par_fill_rows(|e, row| {
            for &(r, w) in &self.entity_relations[e] {
                for (o, v) in row.iter_mut().zip(relation_table.row(r)) {
                    *o += w * v;
                }
            }
        });
        out
    }

    pub fn relation_mean_transpose(&self, g: &Matrix) -> Matrix {
        let mut out = Matrix::zeros(self.relation_count(), g.cols());
        out.par_fill_rows(|r, row| {
            for &(e, w) in &self.relation_entities[r] {
                for (o, v) in row.iter_mut().zip(g.row(e)) {
                    *o += w * v;
                }
            }
        });
        out
    }
}

/// Multipliers applied to the fused layer during training: 0 for dropped
/// components and `1 / (1 - rate)` for survivors.
#[derive(Debug, Clone, PartialEq)]
pub struct DropoutMask {
    scale: Matrix,
}

impl DropoutMask {
    pub fn sample(rows: usize, cols: usize, rate: f64, rng: &mut impl Rng) -> Self {
        let keep = 1.0 / (1.0 - rate);
        let data = (0..rows * cols)
            .map(|_| {
                if rate > 0.0 && rng.random::<f64>() < rate {
                    0.0
                } else {
                    keep
                }
            })
            .collect();
        Self {
            scale: Matrix::from_vec(rows, cols, data).expect("sized"),
        }
    }

    pub fn as_matrix(&self) -> &Matrix {
        &self.scale
    }

    fn apply(&self, x: &mut Matrix) {
        for (v, s) in x.as_mut_slice().iter_mut().zip(self.scale.as_slice()) {
            *v *= s;
        }
    }
}

/// Layer 1: `[neighbor mean of entity rows || relation mean]`.
pub fn fuse_features(state: &EmbeddingState, op: &GraphOperator, config: &EncoderConfig) -> Matrix {
    let structural = op.neighbor_mean(&state.entity_table);
    let relational = if config.ablate_relational_fusion {
        structural.clone()
    } else {
        op.relation_mean(&state.relation_table)
    };
    Matrix::hconcat(&[&structural, &relational]).expect("same row count")
}

/// One aggregation layer: `activation(D^-1 A prev)`.
pub fn aggregate_layer(prev: &Matrix, op: &GraphOperator, activation: Activation) -> Matrix {
    let mut out = op.neighbor_mean(prev);
    out.as_mut_slice().iter_mut().for_each(|v| *v = activation.apply(*v));
    out
}

/// Concatenation of all layer outputs, or the last layer alone.
pub fn global_embedding(layer_outputs: &[Matrix], ablate_global_concat: bool) -> Matrix {
    if ablate_global_concat {
        return layer_outputs.last().expect("at least one layer").clone();
    }
    let parts: Vec<&Matrix> = layer_outputs.iter().collect();
    Matrix::hconcat(&parts).expect("at least one layer with equal row counts")
}

/// Result of a forward pass, kept for the backward pass.
#[derive(Debug, Clone)]
pub struct Encoding {
    pub layer_outputs: Vec<Matrix>,
    pub global: Matrix,
}

pub fn forward(
    state: &EmbeddingState,
    op: &GraphOperator,
    config: &EncoderConfig,
    dropout: Option<&DropoutMask>,
) -> Encoding {
    let mut fused = fuse_features(state, op, config);
    if let Some(mask) = dropout {
        mask.apply(&mut fused);
    }
    let mut layer_outputs = Vec::with_capacity(config.layers);
    layer_outputs.push(fused);
    for _ in 1..config.layers {
        let next = aggregate_layer(layer_outputs.last().expect("nonempty"), op, config.activation);
        layer_outputs.push(next);
    }
    let global = global_embedding(&layer_outputs, config.ablate_global_concat);
    Encoding { layer_outputs, global }
}

/// Table gradients from the gradient of a scalar loss with respect to the
/// global embedding of `encoding`.
pub fn backward(
    encoding: &Encoding,
    grad_global: &Matrix,
    op: &GraphOperator,
    config: &EncoderConfig,
    dropout: Option<&DropoutMask>,
) -> EmbeddingState {
    let width = 2 * config.dim;
    let layers = encoding.layer_outputs.len();
    // Gradient reaching each layer directly from the global embedding.
    let mut direct: Vec<Option<Matrix>> = vec![None; layers];
    if config.ablate_global_concat {
        direct[layers - 1] = Some(grad_global.clone());
    } else {
        for (l, slot) in direct.iter_mut().enumerate() {
            *slot = Some(grad_global.column_slice(l * width, width));
        }
    }

    let mut upstream: Option<Matrix> = None;
    for l in (1..layers).rev() {
        let mut g = direct[l]
            .take()
            .unwrap_or_else(|| Matrix::zeros(op.entity_count(), width));
        if let Some(u) = upstream.take() {
            add_assign(&mut g, &u);
        }
        let out = &encoding.layer_outputs[l];
        for (gv, ov) in g.as_mut_slice().iter_mut().zip(out.as_slice()) {
            *gv *= config.activation.gate(*ov);
        }
        upstream = Some(op.neighbor_mean_transpose(&g));
    }

    let mut g1 = direct[0]
        .take()
        .unwrap_or_else(|| Matrix::zeros(op.entity_count(), width));
    if let Some(u) = upstream {
        add_assign(&mut g1, &u);
    }
    if let Some(mask) = dropout {
        mask.apply(&mut g1);
    }
    let mut g_structural = g1.column_slice(0, config.dim);
    let g_relational = g1.column_slice(config.dim, config.dim);
    let relation_grad = if config.ablate_relational_fusion {
        add_assign(&mut g_structural, &g_relational);
        Matrix::zeros(op.relation_count(), config.dim)
    } else {
        op.relation_mean_transpose(&g_relational)
    };
    EmbeddingState {
        entity_table: op.neighbor_mean_transpose(&g_structural),
        relation_table: relation_grad,
    }
}

fn add_assign(a: &mut Matrix, b: &Matrix) {
    for (x, y) in a.as_mut_slice().iter_mut().zip(b.as_slice()) {
        *x += y;
    }
}
