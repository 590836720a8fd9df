//! `tkalign`: align entities across two temporal knowledge graphs.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use tkalign_core::config::RunConfig;
use tkalign_core::eval::{evaluate_predictions, EvalReport};
use tkalign_core::io::{self, load_dataset, DatasetLayout};
use tkalign_core::kg::Provenance;
use tkalign_core::pipeline::{
    iterations_csv, loss_csv, run_alignment, run_sweep, seed_precision, sweep_csv, unsupervised_seeds, Component,
    RunOutcome, SweepParameter,
};
use tkalign_core::synth::{self, SynthParams};
use tkalign_core::SimilarityMatrix;

#[derive(Parser)]
#[command(name = "tkalign", version, about = "Entity alignment for temporal knowledge graphs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train, predict and evaluate one configuration.
    Align(RunArgs),
    /// Compare the full model with one component disabled.
    Ablate {
        #[command(flatten)]
        run: RunArgs,
        /// RFF, GAR or TSM.
        #[arg(long)]
        component: String,
    },
    /// One run per value of a hyperparameter.
    Sweep {
        #[command(flatten)]
        run: RunArgs,
        /// alpha, layers or dimension.
        #[arg(long)]
        parameter: String,
        /// Comma-separated values.
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<f64>,
    },
    /// Write a synthetic graph pair, its gold alignment and a config.
    Synth(SynthArgs),
    /// Generate seeds from exact temporal matches only.
    Seeds(RunArgs),
    /// Score an existing prediction file against reference pairs.
    Eval {
        /// `source<TAB>target[<TAB>score]` lines; several lines per source
        /// form a ranked candidate list.
        #[arg(long)]
        predictions: PathBuf,
        #[arg(long)]
        references: PathBuf,
        #[arg(long, value_delimiter = ',', default_value = "1,10")]
        ks: Vec<usize>,
    },
}

#[derive(Args)]
struct RunArgs {
    /// TOML run configuration; relative paths inside it are resolved
    /// against its directory.
    #[arg(long)]
    config: PathBuf,
    /// Override a config field, e.g. `--set align.alpha=0.5`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Overrides `output_dir` (relative to the working directory).
    #[arg(long)]
    output_dir: Option<PathBuf>,
    /// Overrides both `encoder.init_seed` and `train.rng_seed`.
    #[arg(long)]
    seed: Option<u64>,
    /// Single worker and no wall-clock fields.
    #[arg(long)]
    deterministic: bool,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long)]
    output_dir: PathBuf,
    #[arg(long, default_value_t = SynthParams::default().entities)]
    entities: usize,
    #[arg(long, default_value_t = SynthParams::default().relations)]
    relations: usize,
    #[arg(long, default_value_t = SynthParams::default().timestamps)]
    timestamps: usize,
    #[arg(long, default_value_t = SynthParams::default().facts_per_entity)]
    facts_per_entity: usize,
    #[arg(long, default_value_t = SynthParams::default().interval_fraction)]
    interval_fraction: f64,
    #[arg(long, default_value_t = SynthParams::default().edge_noise)]
    edge_noise: f64,
    #[arg(long, default_value_t = SynthParams::default().time_noise)]
    time_noise: f64,
    #[arg(long, default_value_t = SynthParams::default().seed_pairs)]
    seed_pairs: usize,
    /// Allow several entities to share a time signature.
    #[arg(long)]
    shared_signatures: bool,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

struct Loaded {
    config: RunConfig,
    /// The configuration as written to reports (paths as given).
    snapshot: String,
    dataset: tkalign_core::io::Dataset,
    output_dir: PathBuf,
}

fn main() {
    if let Err(e) = run(Cli::parse()) {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Align(args) => {
            let l = load(&args)?;
            let outcome = run_alignment(&l.dataset, &l.config.pipeline())?;
            let report = finish_report(&outcome, &l);
            write_run(&l.output_dir, &outcome, &report, &l.config)?;
            print!("{}", render(&report));
        }
        Command::Ablate { run, component } => {
            let component: Component = component.parse()?;
            let l = load(&run)?;
            let base = l.config.pipeline();
            let mut table = String::from("variant");
            for k in &base.eval.ks {
                let _ = write!(table, ",hits@{k}");
            }
            table.push_str(",mrr\n");
            for (name, cfg) in [
                ("full".to_string(), base.clone()),
                (format!("-{component}"), component.ablate(&base)),
            ] {
                let outcome = run_alignment(&l.dataset, &cfg)?;
                let mut report = finish_report(&outcome, &l);
                report.metadata.insert("variant".into(), name.clone());
                write_run(
                    &l.output_dir.join(name.trim_start_matches('-')),
                    &outcome,
                    &report,
                    &l.config,
                )?;
                let _ = write!(table, "{name}");
                for k in &base.eval.ks {
                    let _ = write!(table, ",{}", report.hits(*k).unwrap_or(f64::NAN));
                }
                let _ = writeln!(table, ",{}", report.mrr);
            }
            write(&l.output_dir.join("ablation.csv"), &table)?;
            print!("{table}");
        }
        Command::Sweep { run, parameter, values } => {
            let parameter: SweepParameter = parameter.parse()?;
            let l = load(&run)?;
            let cfg = l.config.pipeline();
            let rows = run_sweep(&l.dataset, &cfg, parameter, &values)?;
            let csv = sweep_csv(parameter, &rows, &cfg.eval.ks);
            write(&l.output_dir.join(format!("sweep_{parameter}.csv")), &csv)?;
            print!("{csv}");
        }
        Command::Synth(args) => synth_command(&args)?,
        Command::Seeds(args) => {
            let l = load(&args)?;
            let seeds = unsupervised_seeds(&l.dataset);
            fs::create_dir_all(&l.output_dir).with_context(|| format!("creating {}", l.output_dir.display()))?;
            let path = l.output_dir.join("generated_seeds.tsv");
            io::write_pairs(&seeds, &path)?;
            println!("generated_seeds={}", seeds.len());
            let mut truth = l.dataset.references.clone();
            truth.extend_from(&l.dataset.seeds);
            if let Some((p, judged)) = seed_precision(&seeds, &truth) {
                println!("precision={p}\njudged={judged}");
            }
        }
        Command::Eval {
            predictions,
            references,
            ks,
        } => {
            if ks.is_empty() || ks.contains(&0) {
                bail!("--ks must list positive cutoffs");
            }
            let preds = io::read_predictions(&predictions)?;
            let refs = io::read_pairs(&references, Provenance::Gold)?;
            let report = evaluate_predictions(&preds, &refs, &ks);
            print!("{}", report.to_key_values());
        }
    }
    Ok(())
}

fn load(args: &RunArgs) -> Result<Loaded> {
    let text = fs::read_to_string(&args.config).with_context(|| format!("reading {}", args.config.display()))?;
    let mut table: toml::Table = text
        .parse()
        .with_context(|| format!("parsing {}", args.config.display()))?;
    for o in &args.overrides {
        apply_override(&mut table, o)?;
    }
    if let Some(seed) = args.seed {
        let seed = toml::Value::Integer(i64::try_from(seed).context("--seed too large")?);
        set_path(&mut table, &["encoder", "init_seed"], seed.clone())?;
        set_path(&mut table, &["train", "rng_seed"], seed)?;
    }
    if args.deterministic {
        table.insert("deterministic".into(), toml::Value::Boolean(true));
    }
    let config: RunConfig = table
        .try_into()
        .with_context(|| format!("invalid configuration {}", args.config.display()))?;
    config.pipeline().validate()?;
    let snapshot = toml::to_string(&config).context("serializing configuration")?;

    let base = args.config.parent().unwrap_or(Path::new("."));
    let layout = config.dataset.resolve_against(base);
    let output_dir = match &args.output_dir {
        Some(d) => d.clone(),
        None => base.join(&config.output_dir),
    };
    if config.deterministic {
        single_worker();
    }
    let dataset = load_dataset(&layout)?;
    Ok(Loaded {
        config,
        snapshot,
        dataset,
        output_dir,
    })
}

#[cfg(feature = "parallel")]
fn single_worker() {
    // Fails only if the global pool already exists, which cannot happen
    // before the first parallel call.
    let _ = rayon::ThreadPoolBuilder::new().num_threads(1).build_global();
}

#[cfg(not(feature = "parallel"))]
fn single_worker() {}

fn apply_override(table: &mut toml::Table, assignment: &str) -> Result<()> {
    let Some((key, raw)) = assignment.split_once('=') else {
        bail!("override {assignment:?} is not KEY=VALUE");
    };
    // Parse as a TOML value; fall back to a bare string.
    let value = format!("v = {raw}")
        .parse::<toml::Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()));
    let path: Vec<&str> = key.trim().split('.').collect();
    set_path(table, &path, value)
}

fn set_path(table: &mut toml::Table, path: &[&str], value: toml::Value) -> Result<()> {
    let (last, parents) = path.split_last().expect("split yields at least one segment");
    let mut t = table;
    for p in parents {
        t = t
            .entry(p.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()))
            .as_table_mut()
            .with_context(|| format!("{p} is not a table"))?;
    }
    t.insert(last.to_string(), value);
    Ok(())
}

fn finish_report(outcome: &RunOutcome, l: &Loaded) -> EvalReport {
    let mut report = outcome.report.clone();
    report.metadata.insert("config".into(), l.snapshot.clone());
    if !l.config.deterministic {
        report
            .metadata
            .insert("wall_clock_secs".into(), format!("{:.3}", outcome.wall_clock_secs));
    }
    report
}

fn render(report: &EvalReport) -> String {
    let mut out = report.to_table();
    for (k, v) in &report.metadata {
        if k != "config" {
            let _ = writeln!(out, "{k}: {v}");
        }
    }
    out
}

fn write(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

/// Up to `n` best targets per source row, best first (ties to the smaller
/// column).
fn candidates(sim: &SimilarityMatrix, n: usize) -> String {
    let mut out = String::new();
    for i in 0..sim.n_rows() {
        let row = sim.dense_row(i);
        let mut order: Vec<usize> = (0..row.len()).collect();
        order.sort_by(|&a, &b| row[b].total_cmp(&row[a]).then(a.cmp(&b)));
        for &j in order.iter().take(n) {
            let _ = writeln!(out, "{}\t{}\t{}", sim.source_ids[i], sim.target_ids[j], row[j]);
        }
    }
    out
}

fn write_run(dir: &Path, outcome: &RunOutcome, report: &EvalReport, config: &RunConfig) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    io::write_predictions(&outcome.predictions, &dir.join("predictions.tsv"))?;
    let depth = config.eval.ks.iter().copied().max().unwrap_or(1);
    write(&dir.join("candidates.tsv"), &candidates(&outcome.similarity, depth))?;
    io::write_pairs(&outcome.seeds, &dir.join("seeds.tsv"))?;
    write(&dir.join("loss.csv"), &loss_csv(&outcome.loss_history))?;
    write(&dir.join("iterations.csv"), &iterations_csv(&outcome.iterations))?;
    write(&dir.join("report.kv"), &report.to_key_values())?;
    let snapshot = report.metadata.get("config").map(String::as_str).unwrap_or("");
    write(
        &dir.join("report.txt"),
        &format!("{}\n[config]\n{snapshot}", render(report)),
    )?;
    Ok(())
}

fn synth_command(args: &SynthArgs) -> Result<()> {
    let params = SynthParams {
        entities: args.entities,
        relations: args.relations,
        timestamps: args.timestamps,
        facts_per_entity: args.facts_per_entity,
        interval_fraction: args.interval_fraction,
        edge_noise: args.edge_noise,
        time_noise: args.time_noise,
        seed_pairs: args.seed_pairs,
        unique_time_signatures: !args.shared_signatures,
        seed: args.seed,
    };
    let data = synth::generate(&params)?;
    data.write(&args.output_dir)?;
    let [q1, q2, sup, refs, _] = synth::FILES;
    // every knob spelled out, paths relative to the config file
    let config = RunConfig {
        output_dir: PathBuf::from("out"),
        deterministic: false,
        dataset: DatasetLayout {
            quadruples_1: q1.into(),
            quadruples_2: q2.into(),
            seeds: Some(sup.into()),
            references: Some(refs.into()),
            ..Default::default()
        },
        encoder: Default::default(),
        train: Default::default(),
        align: Default::default(),
        eval: Default::default(),
    };
    let text = toml::to_string(&config).context("serializing configuration")?;
    write(&args.output_dir.join("config.toml"), &text)?;
    println!(
        "entities={} quadruples_1={} quadruples_2={} seeds={} references={}",
        params.entities,
        data.kg1.quadruples().len(),
        data.kg2.quadruples().len(),
        data.seeds.len(),
        data.references.len()
    );
    Ok(())
}
