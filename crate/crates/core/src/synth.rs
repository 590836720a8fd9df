//! Synthetic temporal KG pairs: a random graph and a relabeled, perturbed
//! copy of it, with the full gold mapping.

use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::{self, DatasetLayout};
use crate::kg::{AlignmentPairSet, MergedTimeVocabulary, Provenance, Quadruple, TemporalKg, TimeAnnotation, TimeId};
use crate::time_match::TimeDictionary;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SynthParams {
    pub entities: usize,
    pub relations: usize,
    pub timestamps: usize,
    /// Average number of facts per entity.
    pub facts_per_entity: usize,
    /// Fraction of facts annotated with an interval instead of a point.
    pub interval_fraction: f64,
    /// Fraction of counterpart facts whose tail is rewired.
    pub edge_noise: f64,
    /// Fraction of counterpart facts whose time annotation is redrawn.
    pub time_noise: f64,
    /// Gold pairs handed out as training seeds; the rest are references.
    pub seed_pairs: usize,
    /// Make every source time dictionary distinct and keep noise from
    /// producing an exact match with a wrong source entity.
    pub unique_time_signatures: bool,
    pub seed: u64,
}

impl Default for SynthParams {
    fn default() -> Self {
        Self {
            entities: 1000,
            relations: 10,
            timestamps: 50,
            facts_per_entity: 5,
            interval_fraction: 0.2,
            edge_noise: 0.05,
            time_noise: 0.05,
            seed_pairs: 50,
            unique_time_signatures: true,
            seed: 0,
        }
    }
}

impl SynthParams {
    pub fn validate(&self) -> Result<()> {
        if self.entities < 2 || self.relations == 0 || self.timestamps < 2 || self.facts_per_entity == 0 {
            return Err(Error::Config(
                "synthetic graphs need >= 2 entities, >= 1 relation, >= 2 timestamps and >= 1 fact per entity".into(),
            ));
        }
        for (name, v) in [
            ("interval_fraction", self.interval_fraction),
            ("edge_noise", self.edge_noise),
            ("time_noise", self.time_noise),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::Config(format!("{name} {v} outside [0, 1]")));
            }
        }
        if self.seed_pairs > self.entities {
            return Err(Error::Config("more seed pairs than entities".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct SynthDataset {
    pub kg1: TemporalKg,
    pub kg2: TemporalKg,
    pub vocabulary: MergedTimeVocabulary,
    /// `(e, permutation[e])` for every entity.
    pub gold: AlignmentPairSet,
    pub seeds: AlignmentPairSet,
    pub references: AlignmentPairSet,
}

/// File names written by [`SynthDataset::write`].
pub const FILES: [&str; 5] = ["quadruples_1", "quadruples_2", "sup_pairs", "ref_pairs", "gold_pairs"];

impl SynthDataset {
    /// Writes the dataset in the tab-separated format and returns its layout.
    pub fn write(&self, dir: &Path) -> Result<DatasetLayout> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let p = |name: &str| -> PathBuf { dir.join(name) };
        io::write_quadruples(self.kg1.quadruples(), &self.vocabulary, &p(FILES[0]))?;
        io::write_quadruples(self.kg2.quadruples(), &self.vocabulary, &p(FILES[1]))?;
        io::write_pairs(&self.seeds, &p(FILES[2]))?;
        io::write_pairs(&self.references, &p(FILES[3]))?;
        io::write_pairs(&self.gold, &p(FILES[4]))?;
        Ok(DatasetLayout {
            quadruples_1: p(FILES[0]),
            quadruples_2: p(FILES[1]),
            seeds: Some(p(FILES[2])),
            references: Some(p(FILES[3])),
            ..Default::default()
        })
    }
}

struct Gen<'a> {
    params: &'a SynthParams,
    times: Vec<TimeId>,
    rng: ChaCha8Rng,
}

impl Gen<'_> {
    fn time(&mut self) -> TimeAnnotation {
        let t = self.times.len();
        if self.rng.random_bool(self.params.interval_fraction) {
            let a = self.rng.random_range(0..t - 1);
            let b = self.rng.random_range(a + 1..t);
            TimeAnnotation::Interval(self.times[a], self.times[b])
        } else {
            TimeAnnotation::Point(self.times[self.rng.random_range(0..t)])
        }
    }

    fn other_entity(&mut self, not: usize) -> usize {
        let r = self.rng.random_range(0..self.params.entities - 1);
        if r >= not {
            r + 1
        } else {
            r
        }
    }

    fn fact(&mut self, head: usize) -> Quadruple {
        let tail = self.other_entity(head);
        let relation = self.rng.random_range(0..self.params.relations);
        let time = self.time();
        Quadruple::new(head, relation, tail, time)
    }
}

fn dictionaries(n: usize, quads: &[Quadruple], relations: usize) -> Result<TimeDictionary> {
    Ok(TimeDictionary::build(&TemporalKg::new(n, relations, quads.to_vec())?))
}

/// Generates a source graph and its perturbed, relabeled counterpart.
pub fn generate(params: &SynthParams) -> Result<SynthDataset> {
    params.validate()?;
    let n = params.entities;
    let labels: Vec<String> = (1..=params.timestamps).map(|t| t.to_string()).collect();
    let vocabulary = MergedTimeVocabulary::build(labels.iter().map(String::as_str), std::iter::empty());
    let times = labels.iter().map(|l| vocabulary.id(l).expect("label")).collect();
    let mut g = Gen {
        params,
        times,
        rng: ChaCha8Rng::seed_from_u64(params.seed),
    };

    let mut quads: Vec<Quadruple> = (0..n).map(|e| g.fact(e)).collect();
    for _ in n..n * params.facts_per_entity {
        let h = g.rng.random_range(0..n);
        quads.push(g.fact(h));
    }
    if params.unique_time_signatures {
        loop {
            let dic = dictionaries(n, &quads, params.relations)?;
            let mut groups: HashMap<&[TimeId], Vec<usize>> = HashMap::new();
            for e in 0..n {
                groups.entry(dic.get(e)).or_default().push(e);
            }
            let mut dups: Vec<usize> = groups
                .values()
                .filter(|v| v.len() > 1)
                .flat_map(|v| v[1..].to_vec())
                .collect();
            if dups.is_empty() {
                break;
            }
            dups.sort_unstable();
            for e in dups {
                let f = g.fact(e);
                quads.push(f);
            }
        }
    }

    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(&mut g.rng);
    let mut rel_perm: Vec<usize> = (0..params.relations).collect();
    rel_perm.shuffle(&mut g.rng);

    let clean: Vec<Quadruple> = quads
        .iter()
        .map(|q| Quadruple::new(perm[q.head], rel_perm[q.relation], perm[q.tail], q.time))
        .collect();
    let mut noisy = clean.clone();
    let count = |frac: f64| (frac * clean.len() as f64).round() as usize;
    let mut order: Vec<usize> = (0..clean.len()).collect();
    order.shuffle(&mut g.rng);
    for &i in order.iter().take(count(params.edge_noise)) {
        let q = noisy[i];
        let mut tail = g.other_entity(q.head);
        while tail == q.tail && n > 2 {
            tail = g.other_entity(q.head);
        }
        noisy[i].tail = tail;
    }
    order.shuffle(&mut g.rng);
    for &i in order.iter().take(count(params.time_noise)) {
        let old = noisy[i].time;
        let mut t = g.time();
        while t == old {
            t = g.time();
        }
        noisy[i].time = t;
    }

    if params.unique_time_signatures {
        let d1 = dictionaries(n, &quads, params.relations)?;
        let sig1: HashMap<&[TimeId], usize> = (0..n).map(|e| (d1.get(e), e)).collect();
        let mut inverse = vec![0; n];
        for (e, &p) in perm.iter().enumerate() {
            inverse[p] = e;
        }
        loop {
            let d2 = dictionaries(n, &noisy, params.relations)?;
            let wrong: Vec<usize> = (0..n)
                .filter(|&j| matches!(sig1.get(d2.get(j)), Some(&i) if i != inverse[j]))
                .collect();
            if wrong.is_empty() {
                break;
            }
            for j in wrong {
                for (q, c) in noisy.iter_mut().zip(&clean) {
                    if q != c && (q.head == j || q.tail == j || c.tail == j) {
                        *q = *c;
                    }
                }
            }
        }
    }

    noisy.shuffle(&mut g.rng);
    let kg1 = TemporalKg::new(n, params.relations, quads)?;
    let kg2 = TemporalKg::new(n, params.relations, noisy)?;

    let gold = AlignmentPairSet::from_pairs((0..n).map(|e| (e, perm[e])), Provenance::Gold);
    let mut picks: Vec<usize> = (0..n).collect();
    picks.shuffle(&mut g.rng);
    let mut seed_ids = picks[..params.seed_pairs].to_vec();
    let mut ref_ids = picks[params.seed_pairs..].to_vec();
    seed_ids.sort_unstable();
    ref_ids.sort_unstable();
    Ok(SynthDataset {
        kg1,
        kg2,
        vocabulary,
        seeds: AlignmentPairSet::from_pairs(seed_ids.into_iter().map(|e| (e, perm[e])), Provenance::Gold),
        references: AlignmentPairSet::from_pairs(ref_ids.into_iter().map(|e| (e, perm[e])), Provenance::Gold),
        gold,
    })
}
