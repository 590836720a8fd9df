//! In-memory temporal knowledge graphs and alignment pair sets.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt;

use crate::error::{Error, Result};

/// Index into a [`MergedTimeVocabulary`]. Id 0 marks an unknown or open
/// boundary and never names a real timestamp.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct TimeId(pub u32);

impl TimeId {
    pub const UNKNOWN: TimeId = TimeId(0);

    #[inline]
    pub fn is_known(self) -> bool {
        self != Self::UNKNOWN
    }

    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for TimeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TimeAnnotation {
    Point(TimeId),
    Interval(TimeId, TimeId),
}

impl TimeAnnotation {
    /// Point when both ends agree, interval otherwise.
    pub fn from_bounds(begin: TimeId, end: TimeId) -> Self {
        if begin == end {
            TimeAnnotation::Point(begin)
        } else {
            TimeAnnotation::Interval(begin, end)
        }
    }

    pub fn bounds(self) -> (TimeId, TimeId) {
        match self {
            TimeAnnotation::Point(t) => (t, t),
            TimeAnnotation::Interval(s, e) => (s, e),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Quadruple {
    pub head: usize,
    pub relation: usize,
    pub tail: usize,
    pub time: TimeAnnotation,
}

impl Quadruple {
    pub fn new(head: usize, relation: usize, tail: usize, time: TimeAnnotation) -> Self {
        Self {
            head,
            relation,
            tail,
            time,
        }
    }
}

/// Timestamp labels of both graphs mapped onto one id space.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct MergedTimeVocabulary {
    label_to_id: HashMap<String, TimeId>,
    labels: Vec<String>,
}

impl MergedTimeVocabulary {
    /// Union of the two label sets. Ids are assigned in sorted label order
    /// starting at 1, so the result does not depend on argument order.
    pub fn build<'a, I, J>(g1: I, g2: J) -> Self
    where
        I: IntoIterator<Item = &'a str>,
        J: IntoIterator<Item = &'a str>,
    {
        let union: BTreeSet<&str> = g1.into_iter().chain(g2).collect();
        let labels: Vec<String> = union.into_iter().map(str::to_owned).collect();
        let label_to_id = labels
            .iter()
            .enumerate()
            .map(|(i, l)| (l.clone(), TimeId(i as u32 + 1)))
            .collect();
        Self { label_to_id, labels }
    }

    /// Number of distinct labels; the reserved unknown id is not counted.
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn id(&self, label: &str) -> Option<TimeId> {
        self.label_to_id.get(label).copied()
    }

    pub fn label(&self, id: TimeId) -> Option<&str> {
        if !id.is_known() {
            return None;
        }
        self.labels.get(id.index() - 1).map(String::as_str)
    }
}

/// Compressed adjacency lists.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Csr {
    offsets: Vec<usize>,
    items: Vec<usize>,
}

impl Csr {
    fn from_lists(lists: Vec<Vec<usize>>) -> Self {
        let mut offsets = Vec::with_capacity(lists.len() + 1);
        offsets.push(0);
        let mut items = Vec::with_capacity(lists.iter().map(Vec::len).sum());
        for l in lists {
            items.extend(l);
            offsets.push(items.len());
        }
        Self { offsets, items }
    }

    #[inline]
    pub fn get(&self, i: usize) -> &[usize] {
        &self.items[self.offsets[i]..self.offsets[i + 1]]
    }

    pub fn len(&self) -> usize {
        self.offsets.len().saturating_sub(1)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn nnz(&self) -> usize {
        self.items.len()
    }
}

/// Adjacency-derived structures of one graph.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Adjacency {
    /// Sorted neighbor set per entity, self included.
    pub neighbors: Csr,
    /// Sorted multiset of incident relation ids per entity.
    pub relations: Csr,
}

impl Adjacency {
    pub fn degree(&self, e: usize) -> usize {
        self.neighbors.get(e).len()
    }

    pub fn degrees(&self) -> Vec<usize> {
        (0..self.neighbors.len()).map(|e| self.degree(e)).collect()
    }
}

/// Builds the undirected neighbor sets (with self-loops, parallel edges
/// collapsed) and the relation multisets.
pub fn build_adjacency(quadruples: &[Quadruple], entity_count: usize, relation_count: usize) -> Result<Adjacency> {
    let mut neighbors: Vec<Vec<usize>> = (0..entity_count).map(|e| vec![e]).collect();
    let mut relations: Vec<Vec<usize>> = vec![Vec::new(); entity_count];
    for (index, q) in quadruples.iter().enumerate() {
        for (what, id, count) in [
            ("head", q.head, entity_count),
            ("tail", q.tail, entity_count),
            ("relation", q.relation, relation_count),
        ] {
            if id >= count {
                return Err(Error::IdOutOfRange { index, what, id, count });
            }
        }
        neighbors[q.head].push(q.tail);
        neighbors[q.tail].push(q.head);
        relations[q.head].push(q.relation);
        if q.tail != q.head {
            relations[q.tail].push(q.relation);
        }
    }
    for n in &mut neighbors {
        n.sort_unstable();
        n.dedup();
    }
    for r in &mut relations {
        r.sort_unstable();
    }
    Ok(Adjacency {
        neighbors: Csr::from_lists(neighbors),
        relations: Csr::from_lists(relations),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct TemporalKg {
    entity_count: usize,
    relation_count: usize,
    quadruples: Vec<Quadruple>,
    adjacency: Adjacency,
}

impl TemporalKg {
    pub fn new(entity_count: usize, relation_count: usize, quadruples: Vec<Quadruple>) -> Result<Self> {
        let adjacency = build_adjacency(&quadruples, entity_count, relation_count)?;
        Ok(Self {
            entity_count,
            relation_count,
            quadruples,
            adjacency,
        })
    }

    /// Both graphs in one id space: entities and relations of `b` are
    /// shifted past those of `a`.
    pub fn disjoint_union(a: &TemporalKg, b: &TemporalKg) -> Result<TemporalKg> {
        let (ne, nr) = (a.entity_count, a.relation_count);
        let quads = a
            .quadruples
            .iter()
            .copied()
            .chain(b.quadruples.iter().map(|q| Quadruple {
                head: q.head + ne,
                relation: q.relation + nr,
                tail: q.tail + ne,
                time: q.time,
            }))
            .collect();
        TemporalKg::new(ne + b.entity_count, nr + b.relation_count, quads)
    }

    pub fn entity_count(&self) -> usize {
        self.entity_count
    }

    pub fn relation_count(&self) -> usize {
        self.relation_count
    }

    pub fn quadruples(&self) -> &[Quadruple] {
        &self.quadruples
    }

    pub fn adjacency(&self) -> &Adjacency {
        &self.adjacency
    }

    pub fn degree(&self, e: usize) -> usize {
        self.adjacency.degree(e)
    }

    pub fn neighbors(&self, e: usize) -> &[usize] {
        self.adjacency.neighbors.get(e)
    }

    pub fn entity_relations(&self, e: usize) -> &[usize] {
        self.adjacency.relations.get(e)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Provenance {
    Gold,
    Pseudo,
    Generated,
    Prediction,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlignedPair {
    pub source: usize,
    pub target: usize,
    pub score: f64,
    pub provenance: Provenance,
}

/// Entity pairs (G1 id, G2 id) without duplicates, in insertion order.
#[derive(Debug, Clone, Default)]
pub struct AlignmentPairSet {
    pairs: Vec<AlignedPair>,
    index: HashSet<(usize, usize)>,
}

impl AlignmentPairSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_pairs(pairs: impl IntoIterator<Item = (usize, usize)>, provenance: Provenance) -> Self {
        let mut set = Self::new();
        for (s, t) in pairs {
            set.insert(s, t, 1.0, provenance);
        }
        set
    }

    /// Returns false and leaves the set unchanged when the pair exists.
    pub fn insert(&mut self, source: usize, target: usize, score: f64, provenance: Provenance) -> bool {
        if !self.index.insert((source, target)) {
            return false;
        }
        self.pairs.push(AlignedPair {
            source,
            target,
            score,
            provenance,
        });
        true
    }

    pub fn contains(&self, source: usize, target: usize) -> bool {
        self.index.contains(&(source, target))
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &AlignedPair> {
        self.pairs.iter()
    }

    pub fn as_slice(&self) -> &[AlignedPair] {
        &self.pairs
    }

    pub fn sources(&self) -> impl Iterator<Item = usize> + '_ {
        self.pairs.iter().map(|p| p.source)
    }

    pub fn targets(&self) -> impl Iterator<Item = usize> + '_ {
        self.pairs.iter().map(|p| p.target)
    }

    pub fn extend_from(&mut self, other: &AlignmentPairSet) -> usize {
        other
            .iter()
            .filter(|p| self.insert(p.source, p.target, p.score, p.provenance))
            .count()
    }

    /// True when no source and no target occurs twice.
    pub fn is_partial_matching(&self) -> bool {
        let mut s = HashSet::new();
        let mut t = HashSet::new();
        self.pairs.iter().all(|p| s.insert(p.source) && t.insert(p.target))
    }
}

impl PartialEq for AlignmentPairSet {
    fn eq(&self, other: &Self) -> bool {
        self.pairs == other.pairs
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn point(t: u32) -> TimeAnnotation {
        TimeAnnotation::Point(TimeId(t))
    }

    #[test]
    fn vocabulary_union() {
        let v = MergedTimeVocabulary::build(["2005", "2008"], ["2005", "2011"]);
        assert_eq!(v.len(), 3);
        let same = MergedTimeVocabulary::build(["a", "b"], ["a", "b"]);
        assert_eq!(same.len(), 2);
        assert_eq!(v.id("2005").map(|id| v.label(id)), Some(Some("2005")));
        assert!(v.id("1999").is_none());
        assert_eq!(v.label(TimeId::UNKNOWN), None);
    }

    #[test]
    fn single_edge_degrees() {
        let kg = TemporalKg::new(2, 1, vec![Quadruple::new(0, 0, 1, point(1))]).unwrap();
        assert_eq!(kg.adjacency().degrees(), vec![2, 2]);
        assert_eq!(kg.entity_relations(1), &[0]);
    }

    #[test]
    fn no_quadruples_means_self_loops_only() {
        let kg = TemporalKg::new(3, 1, vec![]).unwrap();
        assert_eq!(kg.adjacency().degrees(), vec![1, 1, 1]);
        for e in 0..3 {
            assert_eq!(kg.neighbors(e), &[e]);
            assert!(kg.entity_relations(e).is_empty());
        }
    }

    #[test]
    fn rejects_out_of_range_ids() {
        let quads = vec![Quadruple::new(0, 0, 1, point(1)), Quadruple::new(0, 3, 1, point(1))];
        match TemporalKg::new(2, 2, quads) {
            Err(Error::IdOutOfRange { index, what, id, .. }) => {
                assert_eq!((index, what, id), (1, "relation", 3));
            }
            other => panic!("unexpected {other:?}"),
        }
        assert!(TemporalKg::new(2, 1, vec![Quadruple::new(2, 0, 0, point(1))]).is_err());
    }

    #[test]
    fn parallel_edges_collapse_but_relations_accumulate() {
        let quads = vec![
            Quadruple::new(0, 0, 1, point(1)),
            Quadruple::new(1, 1, 0, point(2)),
            Quadruple::new(0, 0, 1, point(3)),
        ];
        let kg = TemporalKg::new(2, 2, quads).unwrap();
        assert_eq!(kg.neighbors(0), &[0, 1]);
        assert_eq!(kg.entity_relations(0), &[0, 0, 1]);
    }

    #[test]
    fn random_graph_matches_brute_force_neighbors() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let n = 12;
        let quads: Vec<_> = (0..20)
            .map(|_| {
                Quadruple::new(
                    rng.random_range(0..n),
                    rng.random_range(0..3),
                    rng.random_range(0..n),
                    point(1),
                )
            })
            .collect();
        let kg = TemporalKg::new(n, 3, quads.clone()).unwrap();
        for e in 0..n {
            let brute = (0..n)
                .filter(|&o| {
                    o == e
                        || quads
                            .iter()
                            .any(|q| (q.head == e && q.tail == o) || (q.tail == e && q.head == o))
                })
                .count();
            assert_eq!(kg.degree(e), brute, "entity {e}");
        }
    }

    #[test]
    fn pair_set_rejects_duplicates() {
        let mut s = AlignmentPairSet::new();
        assert!(s.insert(1, 2, 1.0, Provenance::Gold));
        assert!(!s.insert(1, 2, 0.5, Provenance::Pseudo));
        assert!(s.insert(1, 3, 1.0, Provenance::Gold));
        assert_eq!(s.len(), 2);
        assert!(!s.is_partial_matching());
    }

    proptest! {
        #[test]
        fn adjacency_is_symmetric_with_self_loops(
            edges in prop::collection::vec((0usize..15, 0usize..4, 0usize..15), 0..40)
        ) {
            let quads: Vec<_> = edges.iter().map(|&(h, r, t)| Quadruple::new(h, r, t, point(1))).collect();
            let kg = TemporalKg::new(15, 4, quads).unwrap();
            for e in 0..15 {
                prop_assert!(kg.neighbors(e).contains(&e));
                prop_assert!(kg.degree(e) >= 1);
                for &o in kg.neighbors(e) {
                    prop_assert!(kg.neighbors(o).contains(&e));
                }
            }
        }

        #[test]
        fn vocabulary_is_commutative(
            a in prop::collection::btree_set("[a-z0-9]{1,4}", 0..10),
            b in prop::collection::btree_set("[a-z0-9]{1,4}", 0..10),
        ) {
            let ab = MergedTimeVocabulary::build(a.iter().map(String::as_str), b.iter().map(String::as_str));
            let ba = MergedTimeVocabulary::build(b.iter().map(String::as_str), a.iter().map(String::as_str));
            prop_assert_eq!(ab.len(), a.union(&b).count());
            prop_assert_eq!(&ab, &ba);
            let ids: HashSet<_> = a.union(&b).map(|l| ab.id(l).unwrap()).collect();
            prop_assert_eq!(ids.len(), ab.len());
        }
    }
}
