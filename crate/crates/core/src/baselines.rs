//! Reference strategies and oracles: brute-force match enumeration,
//! fixpoint distance tables and the exhaustive top-k scorer.
//!
//! None of this shares code with the explorer or the matcher, so the two
//! can be checked against each other.

use crate::engine::{cost_key, Answer, EngineConfig, Outcome, Prepared, SeedPolicy, SkResult};
use crate::error::{Result, SkqError};
use crate::exec::{self, Execution};
use crate::explorer::Anchor;
use crate::graph::{Edge, RdfGraph, VertexId};
use crate::matcher::{Match, PartialBinding};
use crate::query::{BoundQuery, PredicateBinding};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RunCounters {
    pub pops: u64,
    pub relaxations: u64,
    pub matcher_calls: u64,
    pub matches: u64,
}

/// Every match of `query`, by joining the patterns in order against the
/// full edge list. Sorted, without duplicates.
pub fn enumerate_all_matches(graph: &RdfGraph, query: &BoundQuery, injective: bool) -> Vec<Match> {
    let mut partials = vec![PartialBinding::new(query)];
    for pattern in &query.edges {
        let mut next = Vec::new();
        for pb in &partials {
            for &data in graph.edges() {
                let mut b = pb.clone();
                if bind_edge(&mut b, pattern.subject, pattern.predicate, pattern.object, data) {
                    next.push(b);
                }
            }
        }
        partials = next;
    }
    let mut out: Vec<Match> = partials
        .into_iter()
        .map(|b| Match {
            nodes: b.nodes.into_iter().map(|v| v.expect("every node occurs in a pattern")).collect(),
            predicates: b.predicates.into_iter().map(|p| p.expect("bound")).collect(),
        })
        .filter(|m| {
            if !injective {
                return true;
            }
            let mut seen = m.nodes.clone();
            seen.sort_unstable();
            seen.windows(2).all(|w| w[0] != w[1])
        })
        .collect();
    out.sort();
    out.dedup();
    out
}

fn bind_edge(b: &mut PartialBinding, s: usize, p: PredicateBinding, o: usize, data: Edge) -> bool {
    match p {
        PredicateBinding::Constant(id) if id != data.predicate => return false,
        PredicateBinding::Variable(slot) => match b.predicates[slot] {
            Some(id) if id != data.predicate => return false,
            _ => b.predicates[slot] = Some(data.predicate),
        },
        _ => {}
    }
    for (node, v) in [(s, data.subject), (o, data.object)] {
        match b.nodes[node] {
            Some(bound) if bound != v => return false,
            _ => b.nodes[node] = Some(v),
        }
    }
    true
}

/// Per keyword and vertex: the cheapest seed cost plus undirected weighted
/// path length, computed by relaxing every edge until nothing changes.
#[derive(Debug, Clone)]
pub struct DistanceTable {
    vertices: usize,
    dist: Vec<f64>,
    pred: Vec<Option<(VertexId, Edge)>>,
    seed_cost: Vec<f64>,
}

impl DistanceTable {
    pub fn distance(&self, v: VertexId, keyword: usize) -> f64 {
        self.dist[keyword * self.vertices + v.index()]
    }

    pub fn num_keywords(&self) -> usize {
        self.dist.len().checked_div(self.vertices).unwrap_or(0)
    }

    fn anchor(&self, v: VertexId, keyword: usize) -> Anchor {
        let base = keyword * self.vertices;
        let mut path = Vec::new();
        let mut at = v;
        while let Some((prev, edge)) = self.pred[base + at.index()] {
            path.push(edge);
            at = prev;
        }
        path.reverse();
        Anchor {
            vertex: v,
            keyword_vertex: at,
            path,
            dist: self.distance(v, keyword),
        }
    }
}

pub fn all_pairs_distances(graph: &RdfGraph, seeds: &[Vec<(VertexId, f64)>]) -> DistanceTable {
    all_pairs_distances_with(graph, seeds, Execution::default())
}

pub fn all_pairs_distances_with(
    graph: &RdfGraph,
    seeds: &[Vec<(VertexId, f64)>],
    exec: Execution,
) -> DistanceTable {
    let n = graph.num_vertices();
    let per_keyword = exec::map_slice(exec, seeds, |list| {
        let mut dist = vec![f64::INFINITY; n];
        let mut pred: Vec<Option<(VertexId, Edge)>> = vec![None; n];
        for &(v, c) in list {
            dist[v.index()] = dist[v.index()].min(c);
        }
        let seed_cost = dist.clone();
        loop {
            let mut changed = false;
            for &e in graph.edges() {
                let w = graph.salience(e.predicate);
                for (from, to) in [(e.subject, e.object), (e.object, e.subject)] {
                    let nd = dist[from.index()] + w;
                    if nd < dist[to.index()] {
                        dist[to.index()] = nd;
                        pred[to.index()] = Some((from, e));
                        changed = true;
                    }
                }
            }
            if !changed {
                break;
            }
        }
        (dist, pred, seed_cost)
    });
    let mut table = DistanceTable {
        vertices: n,
        dist: Vec::with_capacity(n * seeds.len()),
        pred: Vec::with_capacity(n * seeds.len()),
        seed_cost: Vec::with_capacity(n * seeds.len()),
    };
    for (d, p, s) in per_keyword {
        table.dist.extend(d);
        table.pred.extend(p);
        table.seed_cost.extend(s);
    }
    table
}

/// Cost of a match under a distance table: per keyword, the closest
/// variable-bound vertex.
pub fn oracle_cost(table: &DistanceTable, query: &BoundQuery, m: &Match) -> f64 {
    let vertices = m.variable_vertex_set(query);
    (0..table.num_keywords())
        .map(|i| {
            vertices
                .iter()
                .map(|&v| table.distance(v, i))
                .fold(f64::INFINITY, f64::min)
        })
        .sum()
}

/// Every match with its exact cost, infinite costs included.
pub fn score_all_matches(graph: &RdfGraph, prepared: &Prepared) -> Vec<(Match, f64)> {
    let table = all_pairs_distances(graph, &prepared.seeds);
    enumerate_all_matches(graph, &prepared.query, false)
        .into_iter()
        .map(|m| {
            let c = oracle_cost(&table, &prepared.query, &m);
            (m, c)
        })
        .collect()
}

/// Finds all matches, scores each with full distance tables, ranks by
/// (cost, binding) and keeps the first k. Matches no keyword can reach are
/// dropped.
pub fn exhaustive_topk(graph: &RdfGraph, prepared: &Prepared, config: &EngineConfig) -> Result<Answer> {
    exhaustive_topk_with(graph, prepared, config, Execution::default())
}

pub fn exhaustive_topk_with(
    graph: &RdfGraph,
    prepared: &Prepared,
    config: &EngineConfig,
    exec: Execution,
) -> Result<Answer> {
    let query = &prepared.query;
    let table = all_pairs_distances_with(graph, &prepared.seeds, exec);
    let matches = enumerate_all_matches(graph, query, config.injective);
    let costs = exec::map_slice(exec, &matches, |m| oracle_cost(&table, query, m));
    let mut ranked: Vec<(i64, usize)> = costs
        .iter()
        .enumerate()
        .filter(|(_, c)| c.is_finite())
        .map(|(i, &c)| (cost_key(c), i))
        .collect();
    ranked.sort_by(|a, b| a.0.cmp(&b.0).then_with(|| matches[a.1].cmp(&matches[b.1])));
    ranked.truncate(prepared.k);

    let mut results = Vec::with_capacity(ranked.len());
    for (_, i) in ranked {
        let m = &matches[i];
        let vertices = m.variable_vertex_set(query);
        let mut anchors = Vec::new();
        let mut content = 0.0;
        for kw in 0..table.num_keywords() {
            let v = *vertices
                .iter()
                .min_by(|&&a, &&b| table.distance(a, kw).total_cmp(&table.distance(b, kw)).then(a.cmp(&b)))
                .ok_or_else(|| SkqError::Invariant("match without variable vertices".into()))?;
            let anchor = table.anchor(v, kw);
            if config.seed_policy == SeedPolicy::ContentCost {
                content += table.seed_cost[kw * table.vertices + anchor.keyword_vertex.index()];
            }
            anchors.push(anchor);
        }
        results.push(SkResult {
            binding: m.clone(),
            values: m.variable_vertices(query).collect(),
            anchors,
            content,
            structure: costs[i] - content,
            total: costs[i],
        });
    }
    Ok(Answer {
        variables: prepared.variable_names(),
        results,
        counters: RunCounters {
            pops: 0,
            relaxations: 0,
            matcher_calls: 1,
            matches: matches.len() as u64,
        },
        outcome: Outcome::Exhausted,
        stop_delta: None,
    })
}

/// Backward search with neither pruning nor early termination.
pub fn naive_backward_topk(
    graph: &RdfGraph,
    index: &crate::star_index::IndexBundle,
    query: &crate::query::SkQuery,
    config: &EngineConfig,
) -> Result<Answer> {
    let config = EngineConfig {
        strategy: crate::engine::Strategy::Naive,
        ..config.clone()
    };
    crate::engine::answer_sk_query(graph, index, query, &config)
}
