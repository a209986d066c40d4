//! Depth-first enumeration of the matches of a query that contain a given
//! seed vertex.
//!
//! Semantics is homomorphism (two variables may share a vertex) unless the
//! injective flag is set. Variables only bind vertices from their candidate
//! set that have not been searched yet; constants are pre-bound and exempt
//! from both checks. The search always extends the unmatched pattern edge
//! with the fewest continuations.

use std::collections::BTreeSet;

use crate::graph::{Direction, Edge, PredicateId, RdfGraph, VertexId};
use crate::query::{BoundQuery, NodeBinding, PredicateBinding, QueryEdge};
use crate::star_index::CandidateMap;

/// A total assignment of the query's nodes and predicate variables.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Match {
    /// Indexed by query node; constants hold their resolved vertex.
    pub nodes: Vec<VertexId>,
    /// Indexed by predicate variable.
    pub predicates: Vec<PredicateId>,
}

impl Match {
    /// Vertices bound to variables, in variable order.
    pub fn variable_vertices<'a>(&'a self, query: &'a BoundQuery) -> impl Iterator<Item = VertexId> + 'a {
        query.variables.iter().map(move |&n| self.nodes[n])
    }

    /// Distinct variable-bound vertices, sorted.
    pub fn variable_vertex_set(&self, query: &BoundQuery) -> Vec<VertexId> {
        let mut out: Vec<VertexId> = self.variable_vertices(query).collect();
        out.sort_unstable();
        out.dedup();
        out
    }

    /// Whether every pattern edge maps onto a data edge.
    pub fn satisfies(&self, graph: &RdfGraph, query: &BoundQuery) -> bool {
        query.edges.iter().all(|e| {
            let predicate = match e.predicate {
                PredicateBinding::Constant(p) => p,
                PredicateBinding::Variable(slot) => self.predicates[slot],
            };
            graph.has_edge(Edge {
                subject: self.nodes[e.subject],
                predicate,
                object: self.nodes[e.object],
            })
        })
    }
}

/// Bindings made so far during one search.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PartialBinding {
    pub nodes: Vec<Option<VertexId>>,
    pub predicates: Vec<Option<PredicateId>>,
}

impl PartialBinding {
    /// Constants bound, everything else open.
    pub fn new(query: &BoundQuery) -> Self {
        PartialBinding {
            nodes: query
                .nodes
                .iter()
                .map(|(_, b)| match b {
                    NodeBinding::Constant(v) => Some(*v),
                    NodeBinding::Variable => None,
                })
                .collect(),
            predicates: vec![None; query.predicate_variables.len()],
        }
    }
}

pub struct Matcher<'a> {
    graph: &'a RdfGraph,
    query: &'a BoundQuery,
    candidates: &'a CandidateMap,
    injective: bool,
    /// Variable slot per query node.
    slot_of: Vec<Option<usize>>,
}

impl<'a> Matcher<'a> {
    pub fn new(
        graph: &'a RdfGraph,
        query: &'a BoundQuery,
        candidates: &'a CandidateMap,
        injective: bool,
    ) -> Self {
        let slot_of = (0..query.nodes.len()).map(|n| query.variable_slot(n)).collect();
        Matcher {
            graph,
            query,
            candidates,
            injective,
            slot_of,
        }
    }

    /// Whether variable node `node` may take `v` under the current binding.
    fn admissible(&self, node: usize, v: VertexId, binding: &PartialBinding, searched: &[bool]) -> bool {
        let Some(slot) = self.slot_of[node] else {
            return binding.nodes[node] == Some(v);
        };
        if searched[v.index()] || self.candidates.is_dummy(v) || !self.candidates.is_candidate(slot, v) {
            return false;
        }
        !self.injective
            || binding
                .nodes
                .iter()
                .enumerate()
                .all(|(n, b)| n == node || *b != Some(v))
    }

    /// Whether `data` can realize `pattern` given the bindings so far.
    pub fn edge_matches(
        &self,
        data: Edge,
        pattern: &QueryEdge,
        binding: &PartialBinding,
        searched: &[bool],
    ) -> bool {
        let predicate_ok = match pattern.predicate {
            PredicateBinding::Constant(p) => p == data.predicate,
            PredicateBinding::Variable(s) => binding.predicates[s].is_none_or(|p| p == data.predicate),
        };
        let end_ok = |node: usize, v: VertexId| match binding.nodes[node] {
            Some(bound) => bound == v,
            None => self.admissible(node, v, binding, searched),
        };
        if !predicate_ok || !end_ok(pattern.subject, data.subject) || !end_ok(pattern.object, data.object) {
            return false;
        }
        // a self-loop pattern on an open variable needs both ends equal
        pattern.subject != pattern.object || data.subject == data.object
    }

    /// Every match containing `seed` at a variable position and no searched
    /// vertex at any variable position, deduplicated and sorted.
    pub fn find_matches_from(&self, seed: VertexId, searched: &[bool]) -> Vec<Match> {
        let mut out = BTreeSet::new();
        if searched[seed.index()] || self.candidates.is_dummy(seed) {
            return Vec::new();
        }
        let start = PartialBinding::new(self.query);
        for &node in &self.query.variables {
            if !self.admissible(node, seed, &start, searched) {
                continue;
            }
            let mut binding = start.clone();
            binding.nodes[node] = Some(seed);
            let mut done = vec![false; self.query.edges.len()];
            self.extend(&mut binding, &mut done, searched, &mut out);
        }
        out.into_iter().collect()
    }

    /// Data edges that can realize pattern edge `e`, given at least one
    /// bound endpoint.
    fn continuations(&self, e: &QueryEdge, binding: &PartialBinding, searched: &[bool]) -> Vec<Edge> {
        let (anchor, dir) = match (binding.nodes[e.subject], binding.nodes[e.object]) {
            (Some(s), _) => (s, Direction::Out),
            (None, Some(o)) => (o, Direction::In),
            (None, None) => return Vec::new(),
        };
        let incidences = match e.predicate {
            PredicateBinding::Constant(p) => self.graph.incidences_with(anchor, p),
            PredicateBinding::Variable(s) => match binding.predicates[s] {
                Some(p) => self.graph.incidences_with(anchor, p),
                None => self.graph.incidences(anchor),
            },
        };
        incidences
            .iter()
            .filter(|inc| inc.direction == dir)
            .map(|inc| inc.edge_from(anchor))
            .filter(|&data| self.edge_matches(data, e, binding, searched))
            .collect()
    }

    fn extend(
        &self,
        binding: &mut PartialBinding,
        done: &mut [bool],
        searched: &[bool],
        out: &mut BTreeSet<Match>,
    ) {
        // fail-first: the open edge with the fewest continuations
        let mut best: Option<(usize, Vec<Edge>)> = None;
        for (i, e) in self.query.edges.iter().enumerate() {
            if done[i] || (binding.nodes[e.subject].is_none() && binding.nodes[e.object].is_none()) {
                continue;
            }
            let conts = self.continuations(e, binding, searched);
            if best.as_ref().is_none_or(|(_, b)| conts.len() < b.len()) {
                let empty = conts.is_empty();
                best = Some((i, conts));
                if empty {
                    break;
                }
            }
        }
        let Some((i, conts)) = best else {
            if done.iter().all(|&d| d) {
                out.insert(Match {
                    nodes: binding.nodes.iter().map(|v| v.expect("connected query")).collect(),
                    predicates: binding
                        .predicates
                        .iter()
                        .map(|p| p.expect("every predicate variable occurs in an edge"))
                        .collect(),
                });
            }
            return;
        };
        let e = self.query.edges[i];
        done[i] = true;
        for data in conts {
            let saved_s = binding.nodes[e.subject];
            let saved_o = binding.nodes[e.object];
            let saved_p = match e.predicate {
                PredicateBinding::Variable(s) => {
                    let old = binding.predicates[s];
                    binding.predicates[s] = Some(data.predicate);
                    Some((s, old))
                }
                PredicateBinding::Constant(_) => None,
            };
            binding.nodes[e.subject] = Some(data.subject);
            binding.nodes[e.object] = Some(data.object);
            self.extend(binding, done, searched, out);
            binding.nodes[e.subject] = saved_s;
            binding.nodes[e.object] = saved_o;
            if let Some((s, old)) = saved_p {
                binding.predicates[s] = old;
            }
        }
        done[i] = false;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::baselines::enumerate_all_matches;
    use crate::graph::tests::{fix1, id};
    use crate::query::{bind_constants, parse_sk_query};
    use crate::star_index::{mark_dummies, IndexParams, StarIndex};
    use crate::synth::{random_instance, InstanceShape};
    use crate::exec::Execution;
    use proptest::prelude::*;

    fn fix1_setup() -> (RdfGraph, BoundQuery, CandidateMap) {
        let g = fix1();
        let q = parse_sk_query(crate::query::tests::FIX1_QUERY).unwrap();
        let b = bind_constants(&q, &g).unwrap();
        let idx = StarIndex::build(&g, IndexParams::for_graph(&g), Execution::Sequential);
        let cm = mark_dummies(&idx, &b, &g, false).unwrap();
        (g, b, cm)
    }

    fn pairs(g: &RdfGraph, q: &BoundQuery, ms: &[Match]) -> Vec<Vec<String>> {
        ms.iter()
            .map(|m| m.variable_vertices(q).map(|v| g.label(v).to_owned()).collect())
            .collect()
    }

    #[test]
    fn fix1_seed_f() {
        let (g, q, cm) = fix1_setup();
        let m = Matcher::new(&g, &q, &cm, false);
        let mut searched = vec![false; g.num_vertices()];
        let found = m.find_matches_from(id(&g, "F"), &searched);
        assert_eq!(pairs(&g, &q, &found), vec![vec!["A", "F"], vec!["B", "F"]]);
        assert!(found.iter().all(|x| x.satisfies(&g, &q)));
        searched[id(&g, "A").index()] = true;
        let found = m.find_matches_from(id(&g, "F"), &searched);
        assert_eq!(pairs(&g, &q, &found), vec![vec!["B", "F"]]);
    }

    #[test]
    fn dummy_seed_finds_nothing() {
        let (g, q, cm) = fix1_setup();
        let m = Matcher::new(&g, &q, &cm, false);
        let searched = vec![false; g.num_vertices()];
        assert!(m.find_matches_from(id(&g, "P"), &searched).is_empty());
        // the constant Actor is in no candidate set
        assert!(m.find_matches_from(id(&g, "Actor"), &searched).is_empty());
    }

    #[test]
    fn edge_match_checks() {
        let (g, q, cm) = fix1_setup();
        let m = Matcher::new(&g, &q, &cm, false);
        let searched = vec![false; g.num_vertices()];
        let p = |n: &str| g.find_predicate(n).unwrap();
        let (a, f, l1, l2) = (id(&g, "A"), id(&g, "F"), id(&g, "Philadelphia"), id(&g, "Academy Award"));
        let mut binding = PartialBinding::new(&q);
        binding.nodes[0] = Some(a);
        let acted = q.edges[1];
        let data = Edge { subject: a, predicate: p("actedIn"), object: f };
        assert!(m.edge_matches(data, &acted, &binding, &searched));
        let flipped = Edge { subject: f, predicate: p("actedIn"), object: a };
        assert!(!m.edge_matches(flipped, &acted, &binding, &searched));
        let label = q.edges[2];
        assert!(m.edge_matches(Edge { subject: f, predicate: p("label"), object: l1 }, &label, &binding, &searched));
        assert!(!m.edge_matches(Edge { subject: f, predicate: p("label"), object: l2 }, &label, &binding, &searched));
    }

    #[test]
    fn homomorphism_versus_injective() {
        let mut b = crate::graph::GraphBuilder::new();
        b.add("x", "knows", "y", false).add("x", "label", "w", true);
        let g = b.build();
        let q = parse_sk_query(r#"SELECT ?a WHERE { ?a knows ?b . ?a knows ?c } KEYWORDS("w")"#).unwrap();
        let bq = bind_constants(&q, &g).unwrap();
        let cm = CandidateMap::unpruned(&g, &bq);
        let searched = vec![false; g.num_vertices()];
        let x = g.find_by_label("x")[0];
        assert_eq!(Matcher::new(&g, &bq, &cm, false).find_matches_from(x, &searched).len(), 1);
        assert!(Matcher::new(&g, &bq, &cm, true).find_matches_from(x, &searched).is_empty());
    }

    #[test]
    fn predicate_variables_bind_consistently() {
        let mut b = crate::graph::GraphBuilder::new();
        b.add("x", "p", "y", false).add("y", "p", "z", false).add("y", "q", "w", false);
        let g = b.build();
        let q = parse_sk_query(r#"SELECT ?a WHERE { ?a ?r ?b . ?b ?r ?c } KEYWORDS("w")"#).unwrap();
        let bq = bind_constants(&q, &g).unwrap();
        let cm = CandidateMap::unpruned(&g, &bq);
        let searched = vec![false; g.num_vertices()];
        let m = Matcher::new(&g, &bq, &cm, false);
        let found = m.find_matches_from(g.find_by_label("y")[0], &searched);
        assert_eq!(found.len(), 1);
        assert_eq!(g.predicate_name(found[0].predicates[0]), "p");
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn searched_protocol_recovers_all_matches(seed in any::<u64>()) {
            let inst = random_instance(seed, &InstanceShape::default());
            let g = &inst.graph;
            let Ok(bq) = bind_constants(&inst.query, g) else { return Ok(()); };
            let idx = StarIndex::build(g, IndexParams::for_graph(g), Execution::Sequential);
            let Ok(cm) = mark_dummies(&idx, &bq, g, false) else {
                prop_assert!(enumerate_all_matches(g, &bq, false).is_empty());
                return Ok(());
            };
            let m = Matcher::new(g, &bq, &cm, false);
            let mut searched = vec![false; g.num_vertices()];
            let mut all = Vec::new();
            for v in g.vertex_ids() {
                if cm.is_dummy(v) {
                    continue;
                }
                for x in m.find_matches_from(v, &searched) {
                    prop_assert!(x.satisfies(g, &bq));
                    prop_assert!(x.variable_vertices(&bq).any(|u| u == v));
                    all.push(x);
                }
                searched[v.index()] = true;
            }
            let n = all.len();
            let set: BTreeSet<Match> = all.into_iter().collect();
            prop_assert_eq!(set.len(), n);
            let want: BTreeSet<Match> = enumerate_all_matches(g, &bq, false).into_iter().collect();
            prop_assert_eq!(set, want);
        }
    }
}
