//! Frequent-star structural index.
//!
//! Every entity vertex contributes one record: the labels of all its
//! incident edges (either direction), sorted by predicate name with
//! multiplicity. Because records are sorted, sub-multiset containment is
//! plain subsequence containment, and frequent star patterns fall out of a
//! prefix-growth (PrefixSpan-style) miner over the record database.
//!
//! The selected pattern set always holds every size-1 star, so each label
//! present on an entity has a posting list. Larger stars are kept only when
//! frequent and discriminative: the ratio between their posting size and
//! the intersection of their selected sub-stars' postings must not exceed
//! `gamma_max`.
//!
//! Candidate lists for query variables are the intersection of postings of
//! the maximal selected stars contained in the variable's label sequence.
//! Class and literal vertices have no records; they are filtered against
//! per-predicate incidence lists instead.

use std::collections::{BTreeMap, HashMap};
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};

use crate::error::{Result, SkqError};
use crate::exec::{self, Execution};
use crate::graph::{hex_string, PredicateId, RdfGraph, VertexId, VertexKind};
use crate::keyword::KeywordIndex;
use crate::query::{BoundQuery, NodeBinding, Unsatisfiable};

pub const INDEX_VERSION: u32 = 1;
const INDEX_MAGIC: &[u8; 8] = b"SKQINDEX";

/// Predicate ids ranked by name, the order used inside every sequence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelOrder {
    rank: Vec<u32>,
    by_rank: Vec<PredicateId>,
}

impl LabelOrder {
    pub fn new(graph: &RdfGraph) -> Self {
        let mut by_rank: Vec<PredicateId> = graph.predicate_ids().collect();
        by_rank.sort_by(|&a, &b| {
            graph
                .predicate_name(a)
                .cmp(graph.predicate_name(b))
                .then_with(|| graph.predicate_iri(a).cmp(graph.predicate_iri(b)))
        });
        let mut rank = vec![0; by_rank.len()];
        for (r, p) in by_rank.iter().enumerate() {
            rank[p.index()] = r as u32;
        }
        LabelOrder { rank, by_rank }
    }

    #[inline]
    pub fn rank(&self, p: PredicateId) -> u32 {
        self.rank[p.index()]
    }

    pub fn sort(&self, labels: &mut [PredicateId]) {
        labels.sort_by_key(|&p| self.rank(p));
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SequenceRecord {
    pub vertex: VertexId,
    pub sequence: Vec<PredicateId>,
}

/// One record per entity vertex, labels sorted by name with multiplicity.
pub fn build_sequence_db(graph: &RdfGraph, order: &LabelOrder, exec: Execution) -> Vec<SequenceRecord> {
    let entities: Vec<VertexId> = graph
        .vertex_ids()
        .filter(|&v| graph.kind(v) == VertexKind::Entity)
        .collect();
    exec::map_slice(exec, &entities, |&v| {
        let mut sequence: Vec<PredicateId> =
            graph.incidences(v).iter().map(|inc| inc.predicate).collect();
        order.sort(&mut sequence);
        SequenceRecord { vertex: v, sequence }
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StarPattern {
    /// Sorted by name, with multiplicity.
    pub labels: Vec<PredicateId>,
    /// Sorted vertices whose record contains `labels`.
    pub posting: Vec<VertexId>,
}

impl StarPattern {
    pub fn support(&self) -> usize {
        self.posting.len()
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }
}

/// Whether sorted multiset `small` is contained in sorted multiset `big`.
pub fn contains_multiset(big: &[PredicateId], small: &[PredicateId], order: &LabelOrder) -> bool {
    let mut i = 0;
    for &s in small {
        let rs = order.rank(s);
        while i < big.len() && order.rank(big[i]) < rs {
            i += 1;
        }
        if i == big.len() || big[i] != s {
            return false;
        }
        i += 1;
    }
    true
}

/// Mines every star with support at least `minsup` (size-1 stars are kept
/// at support 1) and at most `max_len` labels. Output is ordered by length,
/// then by label names.
pub fn mine_frequent_stars(
    db: &[SequenceRecord],
    order: &LabelOrder,
    minsup: usize,
    max_len: usize,
    exec: Execution,
) -> Vec<StarPattern> {
    let minsup = minsup.max(1);
    let ranked: Vec<Vec<u32>> = db
        .iter()
        .map(|r| r.sequence.iter().map(|&p| order.rank(p)).collect())
        .collect();

    // size-1 projections: first occurrence of each item per record
    let mut roots: BTreeMap<u32, Vec<(u32, u32)>> = BTreeMap::new();
    for (rec, seq) in ranked.iter().enumerate() {
        project_items(seq, 0, rec as u32, &mut roots);
    }
    let roots: Vec<(u32, Vec<(u32, u32)>)> = roots.into_iter().collect();

    let grown: Vec<Vec<(Vec<u32>, Vec<u32>)>> = exec::map_slice(exec, &roots, |(item, proj)| {
        let mut out = Vec::new();
        out.push((vec![*item], proj.iter().map(|&(r, _)| r).collect()));
        if proj.len() >= minsup && max_len > 1 {
            let mut prefix = vec![*item];
            grow(&ranked, &mut prefix, proj, minsup, max_len, &mut out);
        }
        out
    });

    let mut patterns: Vec<(Vec<u32>, Vec<u32>)> = grown.into_iter().flatten().collect();
    patterns.sort_by(|a, b| a.0.len().cmp(&b.0.len()).then_with(|| a.0.cmp(&b.0)));
    patterns
        .into_iter()
        .map(|(items, recs)| StarPattern {
            labels: items.iter().map(|&r| order.by_rank[r as usize]).collect(),
            posting: recs.iter().map(|&r| db[r as usize].vertex).collect(),
        })
        .collect()
}

/// For each distinct item in `seq[start..]`, records the position just
/// past its first occurrence.
fn project_items(seq: &[u32], start: usize, rec: u32, into: &mut BTreeMap<u32, Vec<(u32, u32)>>) {
    let mut last = None;
    for (j, &item) in seq.iter().enumerate().skip(start) {
        if last == Some(item) {
            continue;
        }
        last = Some(item);
        into.entry(item).or_default().push((rec, j as u32 + 1));
    }
}

fn grow(
    ranked: &[Vec<u32>],
    prefix: &mut Vec<u32>,
    projected: &[(u32, u32)],
    minsup: usize,
    max_len: usize,
    out: &mut Vec<(Vec<u32>, Vec<u32>)>,
) {
    let mut ext: BTreeMap<u32, Vec<(u32, u32)>> = BTreeMap::new();
    for &(rec, pos) in projected {
        project_items(&ranked[rec as usize], pos as usize, rec, &mut ext);
    }
    for (item, proj) in ext {
        if proj.len() < minsup {
            continue;
        }
        prefix.push(item);
        out.push((prefix.clone(), proj.iter().map(|&(r, _)| r).collect()));
        if prefix.len() < max_len {
            grow(ranked, prefix, &proj, minsup, max_len, out);
        }
        prefix.pop();
    }
}

/// Distinct non-empty proper sub-multisets of a sorted label multiset.
pub(crate) fn proper_sub_multisets(labels: &[PredicateId]) -> Vec<Vec<PredicateId>> {
    let mut all = sub_multisets_up_to(labels, labels.len());
    all.retain(|s| s.len() < labels.len());
    all
}

/// Distinct non-empty sub-multisets with at most `limit` labels; order of
/// `labels` is preserved inside each.
pub(crate) fn sub_multisets_up_to(labels: &[PredicateId], limit: usize) -> Vec<Vec<PredicateId>> {
    let mut groups: Vec<(PredicateId, usize)> = Vec::new();
    for &l in labels {
        match groups.last_mut() {
            Some((p, c)) if *p == l => *c += 1,
            _ => groups.push((l, 1)),
        }
    }
    let mut out = Vec::new();
    let mut current = Vec::new();
    fn rec(
        groups: &[(PredicateId, usize)],
        limit: usize,
        current: &mut Vec<PredicateId>,
        out: &mut Vec<Vec<PredicateId>>,
    ) {
        let Some(((label, count), rest)) = groups.split_first() else {
            if !current.is_empty() {
                out.push(current.clone());
            }
            return;
        };
        let base = current.len();
        for take in 0..=*count {
            if base + take > limit {
                break;
            }
            current.truncate(base);
            current.extend(std::iter::repeat_n(*label, take));
            rec(rest, limit, current, out);
        }
        current.truncate(base);
    }
    rec(&groups, limit, &mut current, &mut out);
    out
}

fn intersect_sorted(a: &[VertexId], b: &[VertexId]) -> Vec<VertexId> {
    let (mut i, mut j) = (0, 0);
    let mut out = Vec::with_capacity(a.len().min(b.len()));
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                out.push(a[i]);
                i += 1;
                j += 1;
            }
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IndexParams {
    pub minsup: usize,
    pub gamma_max: f64,
    pub max_pattern_len: usize,
}

impl IndexParams {
    pub const DEFAULT_GAMMA_MAX: f64 = 0.9;
    pub const DEFAULT_MAX_PATTERN_LEN: usize = 5;

    /// `minsup = max(2, ceil(0.001 * |entities|))`, `gamma_max = 0.9`.
    pub fn for_graph(graph: &RdfGraph) -> Self {
        let entities = graph.count_kind(VertexKind::Entity);
        IndexParams {
            minsup: 2.max((entities as f64 * 0.001).ceil() as usize),
            gamma_max: Self::DEFAULT_GAMMA_MAX,
            max_pattern_len: Self::DEFAULT_MAX_PATTERN_LEN,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StarIndex {
    selected: Vec<StarPattern>,
    lookup: HashMap<Vec<PredicateId>, usize>,
    params: IndexParams,
    order: LabelOrder,
    /// Per predicate, the sorted class and literal vertices touching it.
    non_entity: Vec<Vec<VertexId>>,
}

/// Discriminative ratio of `pattern` against an already selected set:
/// `|L(S)| / |intersection of L(S') over selected proper sub-stars S'|`.
pub fn discriminative_ratio(
    pattern: &StarPattern,
    selected: &[StarPattern],
    lookup: &HashMap<Vec<PredicateId>, usize>,
) -> f64 {
    let mut denom: Option<Vec<VertexId>> = None;
    for sub in proper_sub_multisets(&pattern.labels) {
        if let Some(&i) = lookup.get(&sub) {
            let posting = &selected[i].posting;
            denom = Some(match denom {
                None => posting.clone(),
                Some(d) => intersect_sorted(&d, posting),
            });
        }
    }
    match denom {
        Some(d) if !d.is_empty() => pattern.support() as f64 / d.len() as f64,
        _ => 1.0,
    }
}

/// Keeps every size-1 star plus each larger frequent star whose
/// discriminative ratio is at most `gamma_max`, deciding in increasing size
/// so that ratios are measured against the smaller stars already kept.
pub fn discriminative_select(
    patterns: Vec<StarPattern>,
    minsup: usize,
    gamma_max: f64,
) -> (Vec<StarPattern>, HashMap<Vec<PredicateId>, usize>) {
    let mut selected: Vec<StarPattern> = Vec::new();
    let mut lookup: HashMap<Vec<PredicateId>, usize> = HashMap::new();
    let mut pending = patterns;
    pending.sort_by_key(|p| p.len());
    for p in pending {
        let keep = p.len() == 1
            || (p.support() >= minsup && discriminative_ratio(&p, &selected, &lookup) <= gamma_max);
        if keep {
            lookup.insert(p.labels.clone(), selected.len());
            selected.push(p);
        }
    }
    (selected, lookup)
}

impl StarIndex {
    pub fn build(graph: &RdfGraph, params: IndexParams, exec: Execution) -> Self {
        let order = LabelOrder::new(graph);
        let db = build_sequence_db(graph, &order, exec);
        let mined = mine_frequent_stars(&db, &order, params.minsup, params.max_pattern_len, exec);
        let (selected, lookup) = discriminative_select(mined, params.minsup, params.gamma_max);
        Self::assemble(graph, selected, lookup, params, order)
    }

    fn assemble(
        graph: &RdfGraph,
        selected: Vec<StarPattern>,
        lookup: HashMap<Vec<PredicateId>, usize>,
        params: IndexParams,
        order: LabelOrder,
    ) -> Self {
        let mut non_entity = vec![Vec::new(); graph.num_predicates()];
        for v in graph.vertex_ids() {
            if graph.kind(v) == VertexKind::Entity {
                continue;
            }
            let mut last = None;
            for inc in graph.incidences(v) {
                if last != Some(inc.predicate) {
                    non_entity[inc.predicate.index()].push(v);
                    last = Some(inc.predicate);
                }
            }
        }
        StarIndex {
            selected,
            lookup,
            params,
            order,
            non_entity,
        }
    }

    pub fn selected(&self) -> &[StarPattern] {
        &self.selected
    }

    pub fn params(&self) -> IndexParams {
        self.params
    }

    pub fn order(&self) -> &LabelOrder {
        &self.order
    }

    pub fn pattern(&self, labels: &[PredicateId]) -> Option<&StarPattern> {
        self.lookup.get(labels).map(|&i| &self.selected[i])
    }

    /// Candidate vertices for a variable whose incident constant predicates
    /// are `sequence`.
    ///
    /// With `multiset` false the sequence is reduced to distinct labels, the
    /// sound choice under homomorphism, where two query edges may share one
    /// data edge. `allow_literals` is false for variables in subject
    /// position.
    pub fn candidates_for_variable(
        &self,
        graph: &RdfGraph,
        sequence: &[PredicateId],
        allow_literals: bool,
        multiset: bool,
    ) -> Vec<VertexId> {
        let mut labels = sequence.to_vec();
        self.order.sort(&mut labels);
        let mut distinct = labels.clone();
        distinct.dedup();
        if !multiset {
            labels = distinct.clone();
        }

        let kind_ok = |v: VertexId| match graph.kind(v) {
            VertexKind::Literal => allow_literals,
            VertexKind::Class => true,
            VertexKind::Entity => false,
        };

        if labels.is_empty() {
            return graph
                .vertex_ids()
                .filter(|&v| graph.kind(v) == VertexKind::Entity || kind_ok(v))
                .collect();
        }

        let entity_part = if distinct.iter().all(|&p| self.lookup.contains_key(&vec![p])) {
            let contained: Vec<&StarPattern> =
                sub_multisets_up_to(&labels, self.params.max_pattern_len)
                    .into_iter()
                    .filter_map(|s| self.pattern(&s))
                    .collect();
            let maximal: Vec<&StarPattern> = contained
                .iter()
                .filter(|a| {
                    !contained.iter().any(|b| {
                        b.len() > a.len() && contains_multiset(&b.labels, &a.labels, &self.order)
                    })
                })
                .copied()
                .collect();
            let mut by_size = maximal;
            by_size.sort_by_key(|p| p.support());
            let mut acc = by_size[0].posting.clone();
            for p in &by_size[1..] {
                acc = intersect_sorted(&acc, &p.posting);
            }
            acc
        } else {
            Vec::new()
        };

        let mut non_entity: Option<Vec<VertexId>> = None;
        for &p in &distinct {
            let list = &self.non_entity[p.index()];
            non_entity = Some(match non_entity {
                None => list.iter().copied().filter(|&v| kind_ok(v)).collect(),
                Some(acc) => intersect_sorted(&acc, list),
            });
        }

        let mut out = entity_part;
        out.extend(non_entity.unwrap_or_default());
        out.sort_unstable();
        out
    }
}

/// Per-variable candidate sets plus the dummy-vertex marking for one query.
#[derive(Debug, Clone)]
pub struct CandidateMap {
    per_variable: Vec<Vec<VertexId>>,
    /// Bit `j` set when the vertex is a candidate of variable slot `j`.
    membership: Vec<u64>,
    dummy: Vec<bool>,
}

pub const MAX_QUERY_VARIABLES: usize = 64;

impl CandidateMap {
    fn from_sets(graph: &RdfGraph, query: &BoundQuery, per_variable: Vec<Vec<VertexId>>) -> Self {
        let mut membership = vec![0u64; graph.num_vertices()];
        for (slot, set) in per_variable.iter().enumerate() {
            for v in set {
                membership[v.index()] |= 1 << slot;
            }
        }
        let mut dummy: Vec<bool> = membership.iter().map(|&m| m == 0).collect();
        for (_, binding) in &query.nodes {
            if let NodeBinding::Constant(v) = binding {
                dummy[v.index()] = false;
            }
        }
        CandidateMap {
            per_variable,
            membership,
            dummy,
        }
    }

    /// Every vertex is a candidate of every variable; nothing is dummy.
    pub fn unpruned(graph: &RdfGraph, query: &BoundQuery) -> Self {
        let all: Vec<VertexId> = graph.vertex_ids().collect();
        let per_variable = vec![all; query.variables.len()];
        Self::from_sets(graph, query, per_variable)
    }

    pub fn candidates(&self, slot: usize) -> &[VertexId] {
        &self.per_variable[slot]
    }

    #[inline]
    pub fn is_candidate(&self, slot: usize, v: VertexId) -> bool {
        self.membership[v.index()] & (1 << slot) != 0
    }

    #[inline]
    pub fn is_candidate_of_any(&self, v: VertexId) -> bool {
        self.membership[v.index()] != 0
    }

    #[inline]
    pub fn is_dummy(&self, v: VertexId) -> bool {
        self.dummy[v.index()]
    }

    pub fn dummies(&self) -> Vec<VertexId> {
        self.dummy
            .iter()
            .enumerate()
            .filter(|(_, &d)| d)
            .map(|(i, _)| VertexId(i as u32))
            .collect()
    }
}

/// Candidate sets for every variable of `query` and the resulting dummy
/// vertices: those outside every candidate set that are not bound to a
/// query constant.
pub fn mark_dummies(
    index: &StarIndex,
    query: &BoundQuery,
    graph: &RdfGraph,
    injective: bool,
) -> std::result::Result<CandidateMap, Unsatisfiable> {
    if query.variables.len() > MAX_QUERY_VARIABLES {
        return Err(Unsatisfiable::NoCandidates(format!(
            "more than {MAX_QUERY_VARIABLES} variables"
        )));
    }
    let mut per_variable = Vec::with_capacity(query.variables.len());
    for (slot, &node) in query.variables.iter().enumerate() {
        let seq = query.variable_predicates(node);
        let set = index.candidates_for_variable(graph, &seq, !query.is_subject(node), injective);
        if set.is_empty() {
            return Err(Unsatisfiable::NoCandidates(query.variable_name(slot).to_owned()));
        }
        per_variable.push(set);
    }
    Ok(CandidateMap::from_sets(graph, query, per_variable))
}

// ---------------------------------------------------------------------------
// Index file

/// Star index and keyword index persisted together, tied to one graph by
/// its fingerprint.
#[derive(Debug, Clone, PartialEq)]
pub struct IndexBundle {
    pub fingerprint: [u8; 32],
    pub star: StarIndex,
    pub keywords: KeywordIndex,
}

impl IndexBundle {
    pub fn build(graph: &RdfGraph, params: IndexParams, exec: Execution) -> Self {
        IndexBundle {
            fingerprint: graph.fingerprint(),
            star: StarIndex::build(graph, params, exec),
            keywords: KeywordIndex::build(graph),
        }
    }

    pub fn check_graph(&self, graph: &RdfGraph) -> Result<()> {
        if self.fingerprint != graph.fingerprint() {
            return Err(SkqError::StaleIndex {
                found: hex_string(&self.fingerprint),
                expected: graph.fingerprint_hex(),
            });
        }
        Ok(())
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<u64> {
        let path = path.as_ref();
        let mut buf = Vec::new();
        self.write_to(&mut buf).map_err(|e| SkqError::io(path, e))?;
        let file = File::create(path).map_err(|e| SkqError::io(path, e))?;
        let mut w = BufWriter::new(file);
        w.write_all(&buf)
            .and_then(|_| w.flush())
            .map_err(|e| SkqError::io(path, e))?;
        Ok(buf.len() as u64)
    }

    /// Loads an index and checks that it was built for `graph`.
    pub fn load(path: impl AsRef<Path>, graph: &RdfGraph) -> Result<Self> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| SkqError::io(path, e))?;
        Self::read_from(&mut BufReader::new(file), graph)
    }

    pub(crate) fn write_to<W: Write>(&self, w: &mut W) -> std::io::Result<()> {
        w.write_all(INDEX_MAGIC)?;
        w.write_u32::<LittleEndian>(INDEX_VERSION)?;
        w.write_all(&self.fingerprint)?;
        let p = self.star.params;
        w.write_u64::<LittleEndian>(p.minsup as u64)?;
        w.write_f64::<LittleEndian>(p.gamma_max)?;
        w.write_u32::<LittleEndian>(p.max_pattern_len as u32)?;
        w.write_u32::<LittleEndian>(self.star.selected.len() as u32)?;
        for s in &self.star.selected {
            w.write_u32::<LittleEndian>(s.labels.len() as u32)?;
            for l in &s.labels {
                w.write_u32::<LittleEndian>(l.0)?;
            }
            w.write_u32::<LittleEndian>(s.posting.len() as u32)?;
            for v in &s.posting {
                w.write_u32::<LittleEndian>(v.0)?;
            }
        }
        self.keywords.write_to(w)
    }

    pub(crate) fn read_from<R: Read>(r: &mut R, graph: &RdfGraph) -> Result<Self> {
        let bad = |m: String| SkqError::Format {
            what: "index",
            message: m,
        };
        let io = |e: std::io::Error| bad(e.to_string());
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic).map_err(io)?;
        if &magic != INDEX_MAGIC {
            return Err(bad("bad magic bytes".into()));
        }
        let version = r.read_u32::<LittleEndian>().map_err(io)?;
        if version != INDEX_VERSION {
            return Err(SkqError::Version {
                what: "index",
                found: version,
                expected: INDEX_VERSION,
            });
        }
        let mut fingerprint = [0u8; 32];
        r.read_exact(&mut fingerprint).map_err(io)?;
        if fingerprint != graph.fingerprint() {
            return Err(SkqError::StaleIndex {
                found: hex_string(&fingerprint),
                expected: graph.fingerprint_hex(),
            });
        }
        let params = IndexParams {
            minsup: r.read_u64::<LittleEndian>().map_err(io)? as usize,
            gamma_max: r.read_f64::<LittleEndian>().map_err(io)?,
            max_pattern_len: r.read_u32::<LittleEndian>().map_err(io)? as usize,
        };
        let n = r.read_u32::<LittleEndian>().map_err(io)? as usize;
        let mut selected = Vec::with_capacity(n.min(1 << 20));
        let mut lookup = HashMap::with_capacity(n.min(1 << 20));
        for i in 0..n {
            let nl = r.read_u32::<LittleEndian>().map_err(io)?;
            let mut labels = Vec::with_capacity(nl as usize);
            for _ in 0..nl {
                let p = r.read_u32::<LittleEndian>().map_err(io)?;
                if p as usize >= graph.num_predicates() {
                    return Err(bad(format!("predicate id {p} out of range")));
                }
                labels.push(PredicateId(p));
            }
            let np = r.read_u32::<LittleEndian>().map_err(io)?;
            let mut posting = Vec::with_capacity(np.min(1 << 24) as usize);
            for _ in 0..np {
                let v = r.read_u32::<LittleEndian>().map_err(io)?;
                if v as usize >= graph.num_vertices() {
                    return Err(bad(format!("vertex id {v} out of range")));
                }
                posting.push(VertexId(v));
            }
            lookup.insert(labels.clone(), i);
            selected.push(StarPattern { labels, posting });
        }
        let keywords = KeywordIndex::read_from(r)?;
        let star = StarIndex::assemble(graph, selected, lookup, params, LabelOrder::new(graph));
        Ok(IndexBundle {
            fingerprint,
            star,
            keywords,
        })
    }
}
