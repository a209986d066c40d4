//! RDF graph model: typed vertices, labeled directed edges, a predicate
//! dictionary and per-predicate salience weights.

mod ntriples;
mod store;

use std::collections::{HashMap, HashSet};
use std::fmt;

use sha2::{Digest, Sha256};

use crate::error::{Result, SkqError};

pub use ntriples::{ingest_ntriples, ingest_ntriples_str};
pub use store::{load_store, save_store, STORE_VERSION};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct VertexId(pub u32);

impl VertexId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for VertexId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PredicateId(pub u32);

impl PredicateId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum VertexKind {
    Literal,
    Entity,
    Class,
}

/// An RDF term as it appeared in the input.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Term {
    Iri(String),
    Blank(String),
    Literal(String),
}

impl Term {
    /// Human-facing label: the local name of an IRI, the lexical form of a
    /// literal, or the bare label of a blank node.
    pub fn label(&self) -> &str {
        match self {
            Term::Iri(iri) => local_name(iri),
            Term::Blank(b) => b,
            Term::Literal(s) => s,
        }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Iri(iri) => write!(f, "<{iri}>"),
            Term::Blank(b) => write!(f, "_:{b}"),
            Term::Literal(s) => write!(f, "{s:?}"),
        }
    }
}

/// Part of an IRI after the last `#`, `/` or `:`.
pub fn local_name(iri: &str) -> &str {
    match iri.rfind(['#', '/', ':']) {
        Some(pos) if pos + 1 < iri.len() => &iri[pos + 1..],
        _ => iri,
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vertex {
    pub kind: VertexKind,
    pub term: Term,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Edge {
    pub subject: VertexId,
    pub predicate: PredicateId,
    pub object: VertexId,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Direction {
    /// The vertex is the subject; the neighbor is the object.
    Out,
    /// The vertex is the object; the neighbor is the subject.
    In,
}

/// One edge seen from one of its endpoints.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct Incidence {
    pub predicate: PredicateId,
    pub neighbor: VertexId,
    pub direction: Direction,
}

impl Incidence {
    pub fn edge_from(&self, v: VertexId) -> Edge {
        match self.direction {
            Direction::Out => Edge {
                subject: v,
                predicate: self.predicate,
                object: self.neighbor,
            },
            Direction::In => Edge {
                subject: self.neighbor,
                predicate: self.predicate,
                object: v,
            },
        }
    }
}

/// Immutable RDF graph. Built once through [`GraphBuilder`] (or ingestion)
/// and shared read-only afterwards.
#[derive(Debug, Clone)]
pub struct RdfGraph {
    vertices: Vec<Vertex>,
    predicates: Vec<String>,
    edges: Vec<Edge>,
    adj_offsets: Vec<usize>,
    adj: Vec<Incidence>,
    incident_counts: Vec<u32>,
    salience: Vec<f64>,
    term_index: HashMap<Term, VertexId>,
    label_index: HashMap<String, Vec<VertexId>>,
    predicate_index: HashMap<String, PredicateId>,
    predicate_names: HashMap<String, Vec<PredicateId>>,
    fingerprint: [u8; 32],
}

impl RdfGraph {
    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn num_predicates(&self) -> usize {
        self.predicates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn vertex_ids(&self) -> impl ExactSizeIterator<Item = VertexId> + '_ {
        (0..self.vertices.len() as u32).map(VertexId)
    }

    pub fn vertex(&self, v: VertexId) -> Result<&Vertex> {
        self.vertices.get(v.index()).ok_or(SkqError::UnknownVertex(v.0))
    }

    pub fn kind(&self, v: VertexId) -> VertexKind {
        self.vertices[v.index()].kind
    }

    pub fn term(&self, v: VertexId) -> &Term {
        &self.vertices[v.index()].term
    }

    pub fn label(&self, v: VertexId) -> &str {
        self.vertices[v.index()].term.label()
    }

    pub fn vertices(&self) -> &[Vertex] {
        &self.vertices
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    /// Full IRI of a predicate.
    pub fn predicate_iri(&self, p: PredicateId) -> &str {
        &self.predicates[p.index()]
    }

    pub fn predicate_name(&self, p: PredicateId) -> &str {
        local_name(&self.predicates[p.index()])
    }

    pub fn predicate_ids(&self) -> impl ExactSizeIterator<Item = PredicateId> + '_ {
        (0..self.predicates.len() as u32).map(PredicateId)
    }

    /// Resolves a predicate by full IRI, or by local name when that name is
    /// unambiguous.
    pub fn find_predicate(&self, name: &str) -> Option<PredicateId> {
        if let Some(&p) = self.predicate_index.get(name) {
            return Some(p);
        }
        match self.predicate_names.get(name).map(Vec::as_slice) {
            Some([p]) => Some(*p),
            _ => None,
        }
    }

    pub fn find_term(&self, term: &Term) -> Option<VertexId> {
        self.term_index.get(term).copied()
    }

    /// All vertices whose [`Term::label`] equals `label`.
    pub fn find_by_label(&self, label: &str) -> &[VertexId] {
        self.label_index.get(label).map(Vec::as_slice).unwrap_or(&[])
    }

    /// Incident edges of `v` in both directions, ordered by predicate id,
    /// then neighbor id, then direction.
    pub fn neighbors(&self, v: VertexId) -> Result<&[Incidence]> {
        if v.index() >= self.vertices.len() {
            return Err(SkqError::UnknownVertex(v.0));
        }
        Ok(self.incidences(v))
    }

    #[inline]
    pub(crate) fn incidences(&self, v: VertexId) -> &[Incidence] {
        &self.adj[self.adj_offsets[v.index()]..self.adj_offsets[v.index() + 1]]
    }

    /// Incidences of `v` through predicate `p`.
    pub(crate) fn incidences_with(&self, v: VertexId, p: PredicateId) -> &[Incidence] {
        let all = self.incidences(v);
        let lo = all.partition_point(|inc| inc.predicate < p);
        let hi = all.partition_point(|inc| inc.predicate <= p);
        &all[lo..hi]
    }

    pub fn has_edge(&self, edge: Edge) -> bool {
        self.incidences_with(edge.subject, edge.predicate)
            .binary_search(&Incidence {
                predicate: edge.predicate,
                neighbor: edge.object,
                direction: Direction::Out,
            })
            .is_ok()
    }

    /// Number of distinct vertices incident to at least one `p` edge.
    pub fn incident_count(&self, p: PredicateId) -> u32 {
        self.incident_counts[p.index()]
    }

    /// Predicate salience, the edge weight of every `p` edge.
    pub fn salience(&self, p: PredicateId) -> f64 {
        self.salience[p.index()]
    }

    pub fn salience_table(&self) -> &[f64] {
        &self.salience
    }

    /// SHA-256 over vertex terms, predicate IRIs and the edge list.
    pub fn fingerprint(&self) -> [u8; 32] {
        self.fingerprint
    }

    pub fn fingerprint_hex(&self) -> String {
        hex_string(&self.fingerprint)
    }

    pub fn count_kind(&self, kind: VertexKind) -> usize {
        self.vertices.iter().filter(|v| v.kind == kind).count()
    }
}

pub(crate) fn hex_string(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// Per-predicate salience: the number of distinct vertices touching a
/// predicate in either direction, divided by the total vertex count.
pub fn compute_salience(graph: &RdfGraph) -> Vec<f64> {
    salience_from_counts(&graph.incident_counts, graph.num_vertices())
}

fn salience_from_counts(counts: &[u32], num_vertices: usize) -> Vec<f64> {
    counts
        .iter()
        .map(|&c| if num_vertices == 0 { 0.0 } else { c as f64 / num_vertices as f64 })
        .collect()
}

/// Whether a predicate classifies its objects as classes.
pub fn is_type_predicate(iri: &str) -> bool {
    local_name(iri) == "type"
}

/// Accumulates triples, assigning dense ids in order of first appearance.
#[derive(Debug, Default)]
pub struct GraphBuilder {
    vertices: Vec<Term>,
    term_index: HashMap<Term, VertexId>,
    predicates: Vec<String>,
    predicate_index: HashMap<String, PredicateId>,
    edges: Vec<Edge>,
    edge_set: HashSet<Edge>,
    class_objects: HashSet<VertexId>,
}

impl GraphBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn vertex(&mut self, term: Term) -> VertexId {
        if let Some(&id) = self.term_index.get(&term) {
            return id;
        }
        let id = VertexId(self.vertices.len() as u32);
        self.vertices.push(term.clone());
        self.term_index.insert(term, id);
        id
    }

    pub fn predicate(&mut self, iri: &str) -> PredicateId {
        if let Some(&id) = self.predicate_index.get(iri) {
            return id;
        }
        let id = PredicateId(self.predicates.len() as u32);
        self.predicates.push(iri.to_owned());
        self.predicate_index.insert(iri.to_owned(), id);
        id
    }

    /// Adds a triple; returns false for a duplicate. Literal subjects are
    /// rejected.
    pub fn add_triple(&mut self, subject: Term, predicate: &str, object: Term) -> Result<bool> {
        if matches!(subject, Term::Literal(_)) {
            return Err(SkqError::InvalidTriple(format!(
                "literal {subject} cannot be a triple subject"
            )));
        }
        let s = self.vertex(subject);
        let p = self.predicate(predicate);
        let literal_object = matches!(object, Term::Literal(_));
        let o = self.vertex(object);
        if is_type_predicate(predicate) && !literal_object {
            self.class_objects.insert(o);
        }
        let edge = Edge {
            subject: s,
            predicate: p,
            object: o,
        };
        if self.edge_set.insert(edge) {
            self.edges.push(edge);
            Ok(true)
        } else {
            Ok(false)
        }
    }

    /// Convenience for tests and generators: IRIs for subject and
    /// predicate, literal object when `literal` is set.
    pub fn add(&mut self, s: &str, p: &str, o: &str, literal: bool) -> &mut Self {
        let object = if literal {
            Term::Literal(o.to_owned())
        } else {
            Term::Iri(o.to_owned())
        };
        self.add_triple(Term::Iri(s.to_owned()), p, object)
            .expect("IRI subject");
        self
    }

    pub fn build(self) -> RdfGraph {
        let vertices = self
            .vertices
            .into_iter()
            .enumerate()
            .map(|(i, term)| {
                let kind = match term {
                    Term::Literal(_) => VertexKind::Literal,
                    _ if self.class_objects.contains(&VertexId(i as u32)) => VertexKind::Class,
                    _ => VertexKind::Entity,
                };
                Vertex { kind, term }
            })
            .collect();
        assemble(vertices, self.predicates, self.edges, None)
    }
}

/// Builds the derived tables (adjacency, salience, lookups, fingerprint).
pub(crate) fn assemble(
    vertices: Vec<Vertex>,
    predicates: Vec<String>,
    edges: Vec<Edge>,
    salience: Option<Vec<f64>>,
) -> RdfGraph {
    let n = vertices.len();
    let mut degree = vec![0usize; n + 1];
    for e in &edges {
        degree[e.subject.index()] += 1;
        degree[e.object.index()] += 1;
    }
    let mut adj_offsets = Vec::with_capacity(n + 1);
    let mut acc = 0;
    for d in &degree[..n] {
        adj_offsets.push(acc);
        acc += d;
    }
    adj_offsets.push(acc);

    let mut fill = adj_offsets.clone();
    let mut adj = vec![
        Incidence {
            predicate: PredicateId(0),
            neighbor: VertexId(0),
            direction: Direction::Out,
        };
        acc
    ];
    for e in &edges {
        adj[fill[e.subject.index()]] = Incidence {
            predicate: e.predicate,
            neighbor: e.object,
            direction: Direction::Out,
        };
        fill[e.subject.index()] += 1;
        adj[fill[e.object.index()]] = Incidence {
            predicate: e.predicate,
            neighbor: e.subject,
            direction: Direction::In,
        };
        fill[e.object.index()] += 1;
    }
    for v in 0..n {
        adj[adj_offsets[v]..adj_offsets[v + 1]].sort_unstable();
    }

    let mut incident_counts = vec![0u32; predicates.len()];
    for v in 0..n {
        let mut last = None;
        for inc in &adj[adj_offsets[v]..adj_offsets[v + 1]] {
            if last != Some(inc.predicate) {
                incident_counts[inc.predicate.index()] += 1;
                last = Some(inc.predicate);
            }
        }
    }
    let salience = match salience {
        Some(s) if s.len() == predicates.len() => s,
        _ => salience_from_counts(&incident_counts, n),
    };

    let mut term_index = HashMap::with_capacity(n);
    let mut label_index: HashMap<String, Vec<VertexId>> = HashMap::new();
    for (i, v) in vertices.iter().enumerate() {
        term_index.insert(v.term.clone(), VertexId(i as u32));
        label_index
            .entry(v.term.label().to_owned())
            .or_default()
            .push(VertexId(i as u32));
    }
    let mut predicate_index = HashMap::new();
    let mut predicate_names: HashMap<String, Vec<PredicateId>> = HashMap::new();
    for (i, iri) in predicates.iter().enumerate() {
        predicate_index.insert(iri.clone(), PredicateId(i as u32));
        predicate_names
            .entry(local_name(iri).to_owned())
            .or_default()
            .push(PredicateId(i as u32));
    }

    let fingerprint = fingerprint_of(&vertices, &predicates, &edges);

    RdfGraph {
        vertices,
        predicates,
        edges,
        adj_offsets,
        adj,
        incident_counts,
        salience,
        term_index,
        label_index,
        predicate_index,
        predicate_names,
        fingerprint,
    }
}

fn fingerprint_of(vertices: &[Vertex], predicates: &[String], edges: &[Edge]) -> [u8; 32] {
    let mut h = Sha256::new();
    for v in vertices {
        let (tag, text) = match &v.term {
            Term::Iri(s) => (0u8, s),
            Term::Blank(s) => (1, s),
            Term::Literal(s) => (2, s),
        };
        h.update([tag]);
        h.update((text.len() as u64).to_le_bytes());
        h.update(text.as_bytes());
    }
    for p in predicates {
        h.update((p.len() as u64).to_le_bytes());
        h.update(p.as_bytes());
    }
    for e in edges {
        h.update(e.subject.0.to_le_bytes());
        h.update(e.predicate.0.to_le_bytes());
        h.update(e.object.0.to_le_bytes());
    }
    h.finalize().into()
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;

    pub(crate) const FIX1: &str = r#"<http://ex.org/A> <http://ex.org/type> <http://ex.org/Actor> .
<http://ex.org/B> <http://ex.org/type> <http://ex.org/Actor> .
<http://ex.org/A> <http://ex.org/actedIn> <http://ex.org/F> .
<http://ex.org/B> <http://ex.org/actedIn> <http://ex.org/F> .
<http://ex.org/A> <http://ex.org/wonPrize> <http://ex.org/P> .
<http://ex.org/F> <http://ex.org/label> "Philadelphia" .
<http://ex.org/P> <http://ex.org/label> "Academy Award" .
"#;

    pub(crate) fn fix1() -> RdfGraph {
        ingest_ntriples_str(FIX1).unwrap()
    }

    pub(crate) fn id(g: &RdfGraph, label: &str) -> VertexId {
        g.find_by_label(label)[0]
    }

    #[test]
    fn fix1_shape_and_kinds() {
        let g = fix1();
        assert_eq!(g.num_vertices(), 7);
        assert_eq!(g.num_edges(), 7);
        assert_eq!(g.num_predicates(), 4);
        assert_eq!(g.kind(id(&g, "Actor")), VertexKind::Class);
        assert_eq!(g.kind(id(&g, "A")), VertexKind::Entity);
        assert_eq!(g.kind(id(&g, "Philadelphia")), VertexKind::Literal);
        assert_eq!(g.count_kind(VertexKind::Literal), 2);
    }

    #[test]
    fn fix1_salience() {
        let g = fix1();
        let s = |name: &str| g.salience(g.find_predicate(name).unwrap());
        assert!((s("actedIn") - 3.0 / 7.0).abs() < 1e-12);
        assert!((s("type") - 3.0 / 7.0).abs() < 1e-12);
        assert!((s("wonPrize") - 2.0 / 7.0).abs() < 1e-12);
        assert!((s("label") - 4.0 / 7.0).abs() < 1e-12);
        assert_eq!(compute_salience(&g), g.salience_table());
    }

    #[test]
    fn salience_of_predicate_on_every_vertex_is_one() {
        let mut b = GraphBuilder::new();
        b.add("a", "p", "b", false).add("b", "p", "c", false);
        let g = b.build();
        assert_eq!(g.salience(PredicateId(0)), 1.0);
    }

    #[test]
    fn neighbors_of_film_and_literal() {
        let g = fix1();
        let f = g.neighbors(id(&g, "F")).unwrap();
        assert_eq!(f.len(), 3);
        let acted = g.find_predicate("actedIn").unwrap();
        assert_eq!(
            f.iter()
                .filter(|i| i.predicate == acted && i.direction == Direction::In)
                .count(),
            2
        );
        let l2 = g.neighbors(id(&g, "Academy Award")).unwrap();
        assert_eq!(l2.len(), 1);
        assert_eq!(l2[0].neighbor, id(&g, "P"));
        assert_eq!(l2[0].direction, Direction::In);
        assert!(matches!(g.neighbors(VertexId(99)), Err(SkqError::UnknownVertex(99))));
    }

    #[test]
    fn isolated_vertex_has_no_neighbors() {
        let mut b = GraphBuilder::new();
        b.vertex(Term::Iri("lonely".into()));
        b.add("a", "p", "b", false);
        let g = b.build();
        assert!(g.neighbors(VertexId(0)).unwrap().is_empty());
    }

    #[test]
    fn neighbors_are_sorted_and_cover_edges_twice() {
        let g = fix1();
        let mut total = 0;
        for v in g.vertex_ids() {
            let incs = g.neighbors(v).unwrap();
            assert!(incs.windows(2).all(|w| w[0] <= w[1]));
            for inc in incs {
                assert!(g.has_edge(inc.edge_from(v)));
            }
            total += incs.len();
        }
        assert_eq!(total, 2 * g.num_edges());
    }

    #[test]
    fn local_names() {
        assert_eq!(local_name("http://ex.org/a#type"), "type");
        assert_eq!(local_name("http://ex.org/Actor"), "Actor");
        assert_eq!(local_name("rdf:type"), "type");
        assert_eq!(local_name("plain"), "plain");
    }
}
