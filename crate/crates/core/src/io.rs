//! Tab-separated dataset files.
//!
//! Quadruples: `head \t relation \t tail \t time_begin \t time_end`, one fact
//! per line, point facts repeating the same time in both columns and `0`
//! marking an unknown or open boundary. Pair files: `id_in_g1 \t id_in_g2`.
//! Label files (optional): `id \t label`. Predictions add a score column.

use std::collections::{BTreeMap, HashSet};
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kg::{AlignmentPairSet, MergedTimeVocabulary, Provenance, Quadruple, TemporalKg, TimeAnnotation, TimeId};

/// File locations of one dataset. Relative paths are resolved by the caller.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetLayout {
    pub quadruples_1: PathBuf,
    pub quadruples_2: PathBuf,
    #[serde(default)]
    pub entities_1: Option<PathBuf>,
    #[serde(default)]
    pub entities_2: Option<PathBuf>,
    #[serde(default)]
    pub relations_1: Option<PathBuf>,
    #[serde(default)]
    pub relations_2: Option<PathBuf>,
    #[serde(default)]
    pub timestamps_1: Option<PathBuf>,
    #[serde(default)]
    pub timestamps_2: Option<PathBuf>,
    /// Training seed pairs; absent or empty means unsupervised.
    #[serde(default)]
    pub seeds: Option<PathBuf>,
    /// Test pairs used for evaluation.
    #[serde(default)]
    pub references: Option<PathBuf>,
}

impl DatasetLayout {
    /// Joins every relative path onto `base`.
    pub fn resolve_against(&self, base: &Path) -> Self {
        let j = |p: &PathBuf| base.join(p);
        let jo = |p: &Option<PathBuf>| p.as_ref().map(j);
        Self {
            quadruples_1: j(&self.quadruples_1),
            quadruples_2: j(&self.quadruples_2),
            entities_1: jo(&self.entities_1),
            entities_2: jo(&self.entities_2),
            relations_1: jo(&self.relations_1),
            relations_2: jo(&self.relations_2),
            timestamps_1: jo(&self.timestamps_1),
            timestamps_2: jo(&self.timestamps_2),
            seeds: jo(&self.seeds),
            references: jo(&self.references),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Dataset {
    pub kg1: TemporalKg,
    pub kg2: TemporalKg,
    pub vocabulary: MergedTimeVocabulary,
    pub seeds: AlignmentPairSet,
    pub references: AlignmentPairSet,
}

struct RawQuad {
    head: usize,
    relation: usize,
    tail: usize,
    begin: Option<String>,
    end: Option<String>,
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim_end_matches('\r')))
        .filter(|(_, l)| !l.trim().is_empty())
}

fn parse_err(path: &Path, line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_owned(),
        line,
        message: message.into(),
    }
}

fn field<T: std::str::FromStr>(path: &Path, line: usize, name: &str, raw: &str) -> Result<T> {
    raw.trim()
        .parse()
        .map_err(|_| parse_err(path, line, format!("bad {name} {raw:?}")))
}

fn split<'a>(path: &Path, line: usize, text: &'a str, expected: usize) -> Result<Vec<&'a str>> {
    let cols: Vec<&str> = text.split('\t').collect();
    if cols.len() != expected {
        return Err(parse_err(
            path,
            line,
            format!("expected {expected} tab-separated fields, found {}", cols.len()),
        ));
    }
    Ok(cols)
}

/// Reads an `id \t label` file into an id-indexed map.
pub fn read_labels(path: &Path) -> Result<BTreeMap<usize, String>> {
    let text = read(path)?;
    let mut out = BTreeMap::new();
    for (n, l) in lines(&text) {
        let (id, label) = l
            .split_once('\t')
            .ok_or_else(|| parse_err(path, n, "expected `id \\t label`"))?;
        let id: usize = field(path, n, "id", id)?;
        if out.insert(id, label.to_owned()).is_some() {
            return Err(parse_err(path, n, format!("duplicate id {id}")));
        }
    }
    Ok(out)
}

fn time_label(path: &Path, line: usize, raw: &str, labels: Option<&BTreeMap<usize, String>>) -> Result<Option<String>> {
    let id: usize = field(path, line, "time", raw)?;
    if id == 0 {
        return Ok(None);
    }
    match labels {
        Some(map) => map.get(&id).cloned().map(Some).ok_or(Error::Dangling {
            path: path.to_owned(),
            what: "timestamp",
            id,
        }),
        None => Ok(Some(id.to_string())),
    }
}

fn read_raw_quads(path: &Path, time_labels: Option<&BTreeMap<usize, String>>) -> Result<Vec<RawQuad>> {
    let text = read(path)?;
    let mut out = Vec::new();
    for (n, l) in lines(&text) {
        let c = split(path, n, l, 5)?;
        out.push(RawQuad {
            head: field(path, n, "head", c[0])?,
            relation: field(path, n, "relation", c[1])?,
            tail: field(path, n, "tail", c[2])?,
            begin: time_label(path, n, c[3], time_labels)?,
            end: time_label(path, n, c[4], time_labels)?,
        });
    }
    Ok(out)
}

/// Reads `id_in_g1 \t id_in_g2` lines. A third score column is accepted.
pub fn read_pairs(path: &Path, provenance: Provenance) -> Result<AlignmentPairSet> {
    let text = read(path)?;
    let mut set = AlignmentPairSet::new();
    for (n, l) in lines(&text) {
        let c: Vec<&str> = l.split('\t').collect();
        if !(2..=3).contains(&c.len()) {
            return Err(parse_err(path, n, format!("expected 2 or 3 fields, found {}", c.len())));
        }
        let s = field(path, n, "source id", c[0])?;
        let t = field(path, n, "target id", c[1])?;
        let score = match c.get(2) {
            Some(raw) => field(path, n, "score", raw)?,
            None => 1.0,
        };
        set.insert(s, t, score, provenance);
    }
    Ok(set)
}

/// Reads a prediction file written by [`write_predictions`].
pub fn read_predictions(path: &Path) -> Result<AlignmentPairSet> {
    read_pairs(path, Provenance::Prediction)
}

/// Writes `source \t target \t score` lines.
pub fn write_predictions(pairs: &AlignmentPairSet, path: &Path) -> Result<()> {
    write_lines(
        path,
        pairs.iter().map(|p| format!("{}\t{}\t{}", p.source, p.target, p.score)),
    )
}

/// Writes `source \t target` lines.
pub fn write_pairs(pairs: &AlignmentPairSet, path: &Path) -> Result<()> {
    write_lines(path, pairs.iter().map(|p| format!("{}\t{}", p.source, p.target)))
}

/// Writes quadruples with raw integer time labels taken from `vocabulary`.
/// Labels must be integers; unknown boundaries are written as `0`.
pub fn write_quadruples(quads: &[Quadruple], vocabulary: &MergedTimeVocabulary, path: &Path) -> Result<()> {
    let label = |t: TimeId| vocabulary.label(t).unwrap_or("0").to_owned();
    write_lines(
        path,
        quads.iter().map(|q| {
            let (b, e) = q.time.bounds();
            format!("{}\t{}\t{}\t{}\t{}", q.head, q.relation, q.tail, label(b), label(e))
        }),
    )
}

fn write_lines(path: &Path, lines: impl Iterator<Item = String>) -> Result<()> {
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    for l in lines {
        writeln!(w, "{l}").map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

fn id_count(
    label_file: Option<&PathBuf>,
    what: &'static str,
    used: impl Iterator<Item = (usize, PathBuf)>,
) -> Result<usize> {
    match label_file {
        Some(lp) => {
            let labels = read_labels(lp)?;
            let count = labels.keys().next_back().map_or(0, |m| m + 1);
            for (id, path) in used {
                if !labels.contains_key(&id) {
                    return Err(Error::Dangling { path, what, id });
                }
            }
            Ok(count)
        }
        None => Ok(used.map(|(id, _)| id + 1).max().unwrap_or(0)),
    }
}

fn resolve(raw: &[RawQuad], vocabulary: &MergedTimeVocabulary) -> Vec<Quadruple> {
    let id = |l: &Option<String>| {
        l.as_deref().map_or(TimeId::UNKNOWN, |l| {
            vocabulary.id(l).expect("label collected into vocabulary")
        })
    };
    raw.iter()
        .map(|q| {
            Quadruple::new(
                q.head,
                q.relation,
                q.tail,
                TimeAnnotation::from_bounds(id(&q.begin), id(&q.end)),
            )
        })
        .collect()
}

fn time_labels(raw: &[RawQuad]) -> HashSet<&str> {
    raw.iter()
        .flat_map(|q| [q.begin.as_deref(), q.end.as_deref()])
        .flatten()
        .collect()
}

/// Loads both graphs, merges their timestamp vocabularies and reads the
/// optional seed and reference pair files.
pub fn load_dataset(layout: &DatasetLayout) -> Result<Dataset> {
    let tl1 = layout.timestamps_1.as_deref().map(read_labels).transpose()?;
    let tl2 = layout.timestamps_2.as_deref().map(read_labels).transpose()?;
    let raw1 = read_raw_quads(&layout.quadruples_1, tl1.as_ref())?;
    let raw2 = read_raw_quads(&layout.quadruples_2, tl2.as_ref())?;

    let seeds = match &layout.seeds {
        Some(p) => read_pairs(p, Provenance::Gold)?,
        None => AlignmentPairSet::new(),
    };
    let references = match &layout.references {
        Some(p) => read_pairs(p, Provenance::Gold)?,
        None => AlignmentPairSet::new(),
    };

    let vocabulary = MergedTimeVocabulary::build(time_labels(&raw1), time_labels(&raw2));

    let pair_files = |side: usize| {
        [(&layout.seeds, &seeds), (&layout.references, &references)]
            .into_iter()
            .filter_map(move |(p, set)| {
                p.as_ref().map(|p| {
                    set.iter()
                        .map(move |pair| (if side == 1 { pair.source } else { pair.target }, p.clone()))
                })
            })
            .flatten()
    };
    let ent_ids = |raw: &[RawQuad], qp: &PathBuf| -> Vec<(usize, PathBuf)> {
        raw.iter()
            .flat_map(|q| [(q.head, qp.clone()), (q.tail, qp.clone())])
            .collect()
    };
    let rel_ids = |raw: &[RawQuad], qp: &PathBuf| -> Vec<(usize, PathBuf)> {
        raw.iter().map(|q| (q.relation, qp.clone())).collect()
    };

    let e1 = id_count(
        layout.entities_1.as_ref(),
        "entity",
        ent_ids(&raw1, &layout.quadruples_1).into_iter().chain(pair_files(1)),
    )?;
    let e2 = id_count(
        layout.entities_2.as_ref(),
        "entity",
        ent_ids(&raw2, &layout.quadruples_2).into_iter().chain(pair_files(2)),
    )?;
    let r1 = id_count(
        layout.relations_1.as_ref(),
        "relation",
        rel_ids(&raw1, &layout.quadruples_1).into_iter(),
    )?;
    let r2 = id_count(
        layout.relations_2.as_ref(),
        "relation",
        rel_ids(&raw2, &layout.quadruples_2).into_iter(),
    )?;

    let kg1 = TemporalKg::new(e1, r1, resolve(&raw1, &vocabulary))?;
    let kg2 = TemporalKg::new(e2, r2, resolve(&raw2, &vocabulary))?;
    Ok(Dataset {
        kg1,
        kg2,
        vocabulary,
        seeds,
        references,
    })
}
