//! End-to-end runs: seeding, training with optional bootstrapping,
//! prediction and evaluation, plus ablation and sweep drivers.

use std::collections::HashSet;
use std::fmt::{self, Write as _};
use std::str::FromStr;
use std::time::Instant;

use crate::aligner::{iterate, IterationRecord, Scorer};
use crate::config::PipelineConfig;
use crate::error::{Error, Result};
use crate::eval::{evaluate, evaluate_bidirectional, EvalReport};
use crate::io::Dataset;
use crate::kg::AlignmentPairSet;
use crate::seed_gen::generate_seeds;
use crate::similarity::SimilarityMatrix;
use crate::time_match::{build_time_similarity_matrix, TimeDictionary};
use crate::trainer::UnionGraph;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// Gold seeds, bootstrapping over several rounds.
    Iterative,
    /// Gold seeds, a single training round.
    NonIterative,
    /// Seeds generated from exact temporal matches.
    Unsupervised,
}

impl Mode {
    pub fn label(self) -> &'static str {
        match self {
            Mode::Iterative => "iterative",
            Mode::NonIterative => "non-iterative",
            Mode::Unsupervised => "unsupervised",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub mode: Mode,
    pub report: EvalReport,
    pub predictions: AlignmentPairSet,
    pub similarity: SimilarityMatrix,
    pub seeds: AlignmentPairSet,
    pub train_pairs: AlignmentPairSet,
    pub loss_history: Vec<f64>,
    pub iterations: Vec<IterationRecord>,
    pub parameter_count: usize,
    pub wall_clock_secs: f64,
}

/// Seeds from exact, mutually unique temporal matches over all entities.
pub fn unsupervised_seeds(dataset: &Dataset) -> AlignmentPairSet {
    let d1 = TimeDictionary::build(&dataset.kg1);
    let d2 = TimeDictionary::build(&dataset.kg2);
    let s: Vec<usize> = (0..dataset.kg1.entity_count()).collect();
    let t: Vec<usize> = (0..dataset.kg2.entity_count()).collect();
    generate_seeds(&build_time_similarity_matrix(&d1, &d2, &s, &t, None))
}

/// Fraction of `generated` pairs that agree with `truth`, among generated
/// pairs whose source `truth` covers. `None` when nothing can be judged.
pub fn seed_precision(generated: &AlignmentPairSet, truth: &AlignmentPairSet) -> Option<(f64, usize)> {
    let sources: HashSet<usize> = truth.sources().collect();
    let judged: Vec<_> = generated.iter().filter(|p| sources.contains(&p.source)).collect();
    if judged.is_empty() {
        return None;
    }
    let correct = judged.iter().filter(|p| truth.contains(p.source, p.target)).count();
    Some((correct as f64 / judged.len() as f64, judged.len()))
}

/// Runs one alignment. Without gold seeds the run is unsupervised.
/// Predictions and metrics cover the reference pairs; when there are none,
/// every entity outside the training seeds is predicted and the report is
/// empty.
pub fn run_alignment(dataset: &Dataset, config: &PipelineConfig) -> Result<RunOutcome> {
    config.validate()?;
    let started = Instant::now();
    let graph = UnionGraph::new(&dataset.kg1, &dataset.kg2)?;
    let dic1 = TimeDictionary::build(&dataset.kg1);
    let dic2 = TimeDictionary::build(&dataset.kg2);

    let (mode, seeds) = if dataset.seeds.is_empty() {
        (Mode::Unsupervised, unsupervised_seeds(dataset))
    } else if config.align.iterations == 1 {
        (Mode::NonIterative, dataset.seeds.clone())
    } else {
        (Mode::Iterative, dataset.seeds.clone())
    };
    if seeds.is_empty() {
        return Err(Error::EmptySeeds);
    }

    let (sources, targets): (Vec<usize>, Vec<usize>) = if dataset.references.is_empty() {
        let s: HashSet<usize> = seeds.sources().collect();
        let t: HashSet<usize> = seeds.targets().collect();
        (
            (0..dataset.kg1.entity_count()).filter(|e| !s.contains(e)).collect(),
            (0..dataset.kg2.entity_count()).filter(|e| !t.contains(e)).collect(),
        )
    } else {
        let mut s: Vec<usize> = dataset.references.sources().collect();
        let mut t: Vec<usize> = dataset.references.targets().collect();
        s.sort_unstable();
        s.dedup();
        t.sort_unstable();
        t.dedup();
        (s, t)
    };

    let scorer = Scorer {
        graph: &graph,
        dic1: &dic1,
        dic2: &dic2,
        encoder: &config.encoder,
        align: &config.align,
    };
    let state = graph.init(&config.encoder);
    let out = iterate(state, &scorer, &seeds, &config.train, (&sources, &targets))?;

    let mut report = if dataset.references.is_empty() {
        EvalReport::default()
    } else if config.eval.bidirectional {
        evaluate_bidirectional(&out.similarity, &dataset.references, &config.eval.ks)?
    } else {
        evaluate(&out.similarity, &dataset.references, &config.eval.ks)?
    };
    let parameter_count = graph.parameter_count(config.encoder.dim);
    let meta = &mut report.metadata;
    meta.insert("mode".into(), mode.label().into());
    meta.insert("iterations".into(), config.align.iterations.to_string());
    meta.insert("trainable_parameters".into(), parameter_count.to_string());
    meta.insert("seed_pairs".into(), seeds.len().to_string());
    meta.insert("train_pool_size".into(), out.train_pairs.len().to_string());
    if mode == Mode::Unsupervised {
        if let Some((p, judged)) = seed_precision(&seeds, &dataset.references) {
            meta.insert("generated_seed_precision".into(), p.to_string());
            meta.insert("generated_seeds_judged".into(), judged.to_string());
        }
    }

    Ok(RunOutcome {
        mode,
        report,
        predictions: out.predictions,
        similarity: out.similarity,
        seeds,
        train_pairs: out.train_pairs,
        loss_history: out.loss_history,
        iterations: out.report,
        parameter_count,
        wall_clock_secs: started.elapsed().as_secs_f64(),
    })
}

/// Model components that can be switched off.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Component {
    /// Relational feature fusion in layer 1.
    Rff,
    /// Global-aware concatenation of all layers.
    Gar,
    /// Temporal similarity in the prediction score.
    Tsm,
}

impl FromStr for Component {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "rff" => Ok(Component::Rff),
            "gar" => Ok(Component::Gar),
            "tsm" => Ok(Component::Tsm),
            other => Err(Error::Config(format!(
                "unknown component {other:?}; expected RFF, GAR or TSM"
            ))),
        }
    }
}

impl fmt::Display for Component {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Component::Rff => "RFF",
            Component::Gar => "GAR",
            Component::Tsm => "TSM",
        })
    }
}

impl Component {
    /// `config` with this component disabled.
    pub fn ablate(self, config: &PipelineConfig) -> PipelineConfig {
        let mut c = config.clone();
        match self {
            Component::Rff => c.encoder.ablate_relational_fusion = true,
            Component::Gar => c.encoder.ablate_global_concat = true,
            Component::Tsm => c.align.alpha = 0.0,
        }
        c
    }
}

/// Full and ablated runs with identical seeds.
pub fn run_ablation(
    dataset: &Dataset,
    config: &PipelineConfig,
    component: Component,
) -> Result<(RunOutcome, RunOutcome)> {
    let full = run_alignment(dataset, config)?;
    let ablated = run_alignment(dataset, &component.ablate(config))?;
    Ok((full, ablated))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepParameter {
    Alpha,
    Layers,
    Dimension,
}

impl FromStr for SweepParameter {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "alpha" => Ok(SweepParameter::Alpha),
            "layers" => Ok(SweepParameter::Layers),
            "dimension" | "dim" => Ok(SweepParameter::Dimension),
            other => Err(Error::Config(format!(
                "unknown sweep parameter {other:?}; expected alpha, layers or dimension"
            ))),
        }
    }
}

impl fmt::Display for SweepParameter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SweepParameter::Alpha => "alpha",
            SweepParameter::Layers => "layers",
            SweepParameter::Dimension => "dimension",
        })
    }
}

impl SweepParameter {
    pub fn apply(self, config: &PipelineConfig, value: f64) -> Result<PipelineConfig> {
        let mut c = config.clone();
        let count = |v: f64| -> Result<usize> {
            if v >= 1.0 && v.fract() == 0.0 {
                Ok(v as usize)
            } else {
                Err(Error::Config(format!("{self} value {v} must be a positive integer")))
            }
        };
        match self {
            SweepParameter::Alpha => c.align.alpha = value,
            SweepParameter::Layers => c.encoder.layers = count(value)?,
            SweepParameter::Dimension => c.encoder.dim = count(value)?,
        }
        c.validate()?;
        Ok(c)
    }
}

/// One run per value, everything else fixed.
pub fn run_sweep(
    dataset: &Dataset,
    config: &PipelineConfig,
    parameter: SweepParameter,
    values: &[f64],
) -> Result<Vec<(f64, EvalReport)>> {
    if values.is_empty() {
        return Err(Error::Config("sweep needs at least one value".into()));
    }
    values
        .iter()
        .map(|&v| Ok((v, run_alignment(dataset, &parameter.apply(config, v)?)?.report)))
        .collect()
}

/// `epoch,loss` rows, epochs counted from 1 across all rounds.
pub fn loss_csv(history: &[f64]) -> String {
    let mut out = String::from("epoch,loss\n");
    for (i, l) in history.iter().enumerate() {
        let _ = writeln!(out, "{},{l}", i + 1);
    }
    out
}

pub fn iterations_csv(records: &[IterationRecord]) -> String {
    let mut out = String::from("iteration,pseudo_pairs_added,train_pool_size\n");
    for r in records {
        let _ = writeln!(out, "{},{},{}", r.iteration, r.pseudo_pairs_added, r.train_pool_size);
    }
    out
}

/// Metric-vs-value table for plotting.
pub fn sweep_csv(parameter: SweepParameter, rows: &[(f64, EvalReport)], ks: &[usize]) -> String {
    let mut out = parameter.to_string();
    for k in ks {
        let _ = write!(out, ",hits@{k}");
    }
    out.push_str(",mrr\n");
    for (v, r) in rows {
        let _ = write!(out, "{v}");
        for k in ks {
            let _ = write!(out, ",{}", r.hits(*k).unwrap_or(f64::NAN));
        }
        let _ = writeln!(out, ",{}", r.mrr);
    }
    out
}
