//! Seeded random graphs and queries for property tests and benchmarks.
//!
//! Queries are carved out of the graph itself (a connected handful of real
//! edges with some endpoints generalized to variables), so most of them
//! have at least one match.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::graph::{GraphBuilder, RdfGraph, Term, VertexId, VertexKind};
use crate::query::{Constant, PredicateTerm, QueryNode, SkQuery, TriplePattern};

const NS: &str = "http://synth.example/";
const WORDS: [&str; 8] = ["red", "blue", "green", "car", "door", "house", "old", "new"];
const RELATIONS: [&str; 2] = ["knows", "near"];

#[derive(Debug, Clone, PartialEq)]
pub struct GraphShape {
    pub entities: (usize, usize),
    pub classes: (usize, usize),
    pub literals: (usize, usize),
    /// Edges per entity.
    pub density: (f64, f64),
    pub max_predicates: usize,
}

impl Default for GraphShape {
    /// At most 40 vertices and 4 predicates.
    fn default() -> Self {
        GraphShape {
            entities: (4, 26),
            classes: (0, 3),
            literals: (1, 10),
            density: (1.0, 3.0),
            max_predicates: 4,
        }
    }
}

impl GraphShape {
    /// A larger graph for benchmarking.
    pub fn scaled(entities: usize) -> Self {
        GraphShape {
            entities: (entities, entities),
            classes: (4, 8),
            literals: (entities / 4, entities / 4),
            density: (2.0, 3.0),
            max_predicates: 4,
        }
    }
}

fn range(rng: &mut ChaCha8Rng, (lo, hi): (usize, usize)) -> usize {
    rng.gen_range(lo..=hi.max(lo))
}

fn phrase(rng: &mut ChaCha8Rng) -> String {
    let n = rng.gen_range(1..=3);
    (0..n).map(|_| *WORDS.choose(rng).expect("non-empty")).collect::<Vec<_>>().join(" ")
}

pub fn random_graph(seed: u64, shape: &GraphShape) -> RdfGraph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    random_graph_from(&mut rng, shape)
}

fn random_graph_from(rng: &mut ChaCha8Rng, shape: &GraphShape) -> RdfGraph {
    let entities = range(rng, shape.entities).max(2);
    let classes = range(rng, shape.classes);
    let literals = range(rng, shape.literals);

    let mut predicates: Vec<&str> = Vec::new();
    if classes > 0 {
        predicates.push("type");
    }
    if literals > 0 {
        predicates.push("label");
    }
    let relations = shape.max_predicates.saturating_sub(predicates.len()).clamp(1, RELATIONS.len());
    predicates.extend(&RELATIONS[..rng.gen_range(1..=relations)]);

    let entity = |i: usize| Term::Iri(format!("{NS}e{i}"));
    let class = |i: usize| Term::Iri(format!("{NS}C{i}"));
    let literal_texts: Vec<String> = (0..literals).map(|_| phrase(rng)).collect();

    let mut b = GraphBuilder::new();
    // every literal hangs off some entity
    for text in &literal_texts {
        let s = entity(rng.gen_range(0..entities));
        b.add_triple(s, &format!("{NS}label"), Term::Literal(text.clone()))
            .expect("IRI subject");
    }
    let (lo, hi) = shape.density;
    let edges = (entities as f64 * rng.gen_range(lo..=hi.max(lo))).round() as usize;
    for _ in 0..edges {
        let p = *predicates.choose(rng).expect("non-empty");
        let s = entity(rng.gen_range(0..entities));
        let o = match p {
            "type" => class(rng.gen_range(0..classes)),
            "label" => Term::Literal(literal_texts[rng.gen_range(0..literals)].clone()),
            _ => entity(rng.gen_range(0..entities)),
        };
        b.add_triple(s, &format!("{NS}{p}"), o).expect("IRI subject");
    }
    b.build()
}

#[derive(Debug, Clone, PartialEq)]
pub struct InstanceShape {
    pub graph: GraphShape,
    pub max_patterns: usize,
    pub max_keywords: usize,
    pub k: usize,
    /// Chance that an endpoint stays a constant.
    pub constant_rate: f64,
    /// Chance that a predicate becomes a variable.
    pub predicate_variable_rate: f64,
}

impl Default for InstanceShape {
    fn default() -> Self {
        InstanceShape {
            graph: GraphShape::default(),
            max_patterns: 3,
            max_keywords: 3,
            k: 3,
            constant_rate: 0.25,
            predicate_variable_rate: 0.1,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Instance {
    pub seed: u64,
    pub graph: RdfGraph,
    pub query: SkQuery,
}

pub fn random_instance(seed: u64, shape: &InstanceShape) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let graph = random_graph_from(&mut rng, &shape.graph);
    let query = random_query_from(&mut rng, &graph, shape);
    Instance { seed, graph, query }
}

/// A connected query sampled from `graph`'s edges.
pub fn random_query(seed: u64, graph: &RdfGraph, shape: &InstanceShape) -> SkQuery {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    random_query_from(&mut rng, graph, shape)
}

fn random_query_from(rng: &mut ChaCha8Rng, graph: &RdfGraph, shape: &InstanceShape) -> SkQuery {
    let edges = graph.edges();
    let want = rng.gen_range(1..=shape.max_patterns.max(1));
    let mut picked = vec![edges[rng.gen_range(0..edges.len())]];
    let mut touched: Vec<VertexId> = vec![picked[0].subject, picked[0].object];
    while picked.len() < want {
        let adjacent: Vec<_> = edges
            .iter()
            .filter(|e| !picked.contains(e) && (touched.contains(&e.subject) || touched.contains(&e.object)))
            .collect();
        let Some(&&e) = adjacent.choose(rng) else { break };
        picked.push(e);
        for v in [e.subject, e.object] {
            if !touched.contains(&v) {
                touched.push(v);
            }
        }
    }

    // decide variable or constant per vertex; the first stays a variable
    let mut node_for: Vec<(VertexId, QueryNode)> = Vec::new();
    for (i, &v) in touched.iter().enumerate() {
        let node = if i > 0 && rng.gen_bool(shape.constant_rate) {
            QueryNode::Constant(match graph.term(v) {
                Term::Literal(s) => Constant::Literal(s.clone()),
                Term::Iri(iri) => Constant::Iri(iri.clone()),
                Term::Blank(b) => Constant::Name(b.clone()),
            })
        } else {
            QueryNode::Variable(format!("?v{i}"))
        };
        node_for.push((v, node));
    }
    let node = |v: VertexId| node_for.iter().find(|(u, _)| *u == v).expect("touched").1.clone();
    let mut predicate_vars = 0;
    let patterns: Vec<TriplePattern> = picked
        .iter()
        .map(|e| TriplePattern {
            subject: node(e.subject),
            predicate: if rng.gen_bool(shape.predicate_variable_rate) {
                predicate_vars += 1;
                PredicateTerm::Variable(format!("?r{predicate_vars}"))
            } else {
                PredicateTerm::Constant(graph.predicate_name(e.predicate).to_owned())
            },
            object: node(e.object),
        })
        .collect();

    let literals: Vec<VertexId> = graph
        .vertex_ids()
        .filter(|&v| graph.kind(v) == VertexKind::Literal)
        .collect();
    let count = rng.gen_range(1..=shape.max_keywords.max(1));
    let keywords: Vec<String> = (0..count)
        .map(|_| match literals.choose(rng) {
            Some(&v) => {
                let mut words: Vec<&str> = graph.label(v).split(' ').collect();
                words.shuffle(rng);
                words.truncate(rng.gen_range(1..=2));
                words.join(" ")
            }
            None => WORDS[0].to_owned(),
        })
        .collect();

    SkQuery {
        patterns,
        projected: vec!["?v0".to_owned()],
        keywords,
        k: shape.k,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::query::bind_constants;

    #[test]
    fn graphs_respect_the_default_shape() {
        for seed in 0..50 {
            let g = random_graph(seed, &GraphShape::default());
            assert!(g.num_vertices() <= 40, "{} vertices", g.num_vertices());
            assert!(g.num_predicates() <= 4);
        }
    }

    #[test]
    fn generation_is_deterministic() {
        let a = random_instance(9, &InstanceShape::default());
        let b = random_instance(9, &InstanceShape::default());
        assert_eq!(a.graph.fingerprint(), b.graph.fingerprint());
        assert_eq!(a.query, b.query);
    }

    #[test]
    fn sampled_queries_round_trip_and_bind() {
        for seed in 0..50 {
            let inst = random_instance(seed, &InstanceShape::default());
            let text = inst.query.to_string();
            assert_eq!(SkQuery::parse(&text).unwrap(), inst.query, "{text}");
            assert!(bind_constants(&inst.query, &inst.graph).is_ok());
        }
    }
}
