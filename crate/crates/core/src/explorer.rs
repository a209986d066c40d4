//! Backward exploration from keyword vertices: one Dijkstra frontier per
//! keyword, popped round-robin.
//!
//! Edges are walked in both directions and weighted by predicate salience.
//! A queue is seeded with every literal matching its keyword at that
//! literal's seed cost. Distances become final when popped; each vertex is
//! finalized at most once per keyword.

use std::collections::BTreeSet;

use ordered_float::OrderedFloat;

use crate::error::{Result, SkqError};
use crate::graph::{Edge, RdfGraph, VertexId};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SeenState {
    Unseen,
    PartiallySeen,
    FullySeen,
}

/// Result of one pop.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepEvent {
    pub vertex: VertexId,
    pub keyword: usize,
    pub dist: f64,
    /// The pop completed the vertex's distance vector.
    pub fully_seen: bool,
    /// First keyword to reach this vertex.
    pub first_seen: bool,
}

/// Where a keyword's distance to a vertex comes from.
#[derive(Debug, Clone, PartialEq)]
pub struct Anchor {
    /// Vertex of the match the distance is measured from.
    pub vertex: VertexId,
    pub keyword_vertex: VertexId,
    /// Edges from the keyword vertex to `vertex`, in walking order.
    pub path: Vec<Edge>,
    pub dist: f64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ExplorerCounters {
    pub pops: u64,
    pub relaxations: u64,
}

type QueueKey = (OrderedFloat<f64>, VertexId);

#[derive(Debug, Clone)]
pub struct Explorer<'g> {
    graph: &'g RdfGraph,
    keywords: usize,
    queues: Vec<BTreeSet<QueueKey>>,
    /// Tentative distance per keyword, per vertex (`keyword * n + v`).
    tentative: Vec<f64>,
    settled: Vec<bool>,
    /// Predecessor vertex and the edge walked, per keyword and vertex.
    pred: Vec<Option<(VertexId, Edge)>>,
    seed_cost: Vec<f64>,
    known: Vec<u32>,
    cursor: usize,
    counters: ExplorerCounters,
}

impl<'g> Explorer<'g> {
    /// `seeds[i]` lists the keyword vertices of keyword `i` with their seed
    /// costs. Repeated vertices keep the cheaper cost.
    pub fn new(graph: &'g RdfGraph, seeds: &[Vec<(VertexId, f64)>]) -> Self {
        let n = graph.num_vertices();
        let keywords = seeds.len();
        let mut ex = Explorer {
            graph,
            keywords,
            queues: vec![BTreeSet::new(); keywords],
            tentative: vec![f64::INFINITY; n * keywords],
            settled: vec![false; n * keywords],
            pred: vec![None; n * keywords],
            seed_cost: vec![f64::INFINITY; n * keywords],
            known: vec![0; n],
            cursor: 0,
            counters: ExplorerCounters::default(),
        };
        for (i, list) in seeds.iter().enumerate() {
            for &(v, cost) in list {
                let slot = i * n + v.index();
                ex.seed_cost[slot] = ex.seed_cost[slot].min(cost);
                ex.decrease(i, v, cost);
            }
        }
        ex
    }

    #[inline]
    fn slot(&self, v: VertexId, keyword: usize) -> usize {
        keyword * self.graph.num_vertices() + v.index()
    }

    fn decrease(&mut self, keyword: usize, v: VertexId, dist: f64) -> bool {
        let slot = self.slot(v, keyword);
        let old = self.tentative[slot];
        if dist >= old {
            return false;
        }
        let queue = &mut self.queues[keyword];
        if old.is_finite() {
            queue.remove(&(OrderedFloat(old), v));
        }
        queue.insert((OrderedFloat(dist), v));
        self.tentative[slot] = dist;
        true
    }

    pub fn num_keywords(&self) -> usize {
        self.keywords
    }

    pub fn graph(&self) -> &'g RdfGraph {
        self.graph
    }

    pub fn counters(&self) -> ExplorerCounters {
        self.counters
    }

    pub fn is_exhausted(&self) -> bool {
        self.queues.iter().all(BTreeSet::is_empty)
    }

    /// Pops the next non-empty queue in round-robin order and relaxes the
    /// popped vertex's edges. `None` once every queue is empty.
    pub fn step(&mut self) -> Option<StepEvent> {
        let keyword = (0..self.keywords)
            .map(|off| (self.cursor + off) % self.keywords)
            .find(|&i| !self.queues[i].is_empty())?;
        self.cursor = (keyword + 1) % self.keywords;
        let (OrderedFloat(dist), v) = self.queues[keyword].pop_first()?;
        let slot = self.slot(v, keyword);
        self.settled[slot] = true;
        self.known[v.index()] += 1;
        self.counters.pops += 1;

        let graph = self.graph;
        for inc in graph.incidences(v) {
            let u = inc.neighbor;
            let target = self.slot(u, keyword);
            // a settled target would close a cycle or revisit a final vertex
            if self.settled[target] {
                continue;
            }
            self.counters.relaxations += 1;
            let nd = dist + graph.salience(inc.predicate);
            if self.decrease(keyword, u, nd) {
                self.pred[target] = Some((v, inc.edge_from(v)));
            }
        }

        let known = self.known[v.index()] as usize;
        Some(StepEvent {
            vertex: v,
            keyword,
            dist,
            fully_seen: known == self.keywords,
            first_seen: known == 1,
        })
    }

    /// Distance of the head of queue `keyword`; infinite when empty.
    pub fn queue_head_bound(&self, keyword: usize) -> f64 {
        self.queues[keyword]
            .first()
            .map_or(f64::INFINITY, |&(OrderedFloat(d), _)| d)
    }

    /// Finalized distance, if `v` has been popped from queue `keyword`.
    #[inline]
    pub fn distance(&self, v: VertexId, keyword: usize) -> Option<f64> {
        let slot = self.slot(v, keyword);
        self.settled[slot].then(|| self.tentative[slot])
    }

    /// Finalized distance, or the queue head as a lower bound.
    #[inline]
    pub fn lower_bound(&self, v: VertexId, keyword: usize) -> f64 {
        self.distance(v, keyword)
            .unwrap_or_else(|| self.queue_head_bound(keyword))
    }

    pub fn seen_state(&self, v: VertexId) -> SeenState {
        match self.known[v.index()] as usize {
            0 => SeenState::Unseen,
            k if k == self.keywords => SeenState::FullySeen,
            _ => SeenState::PartiallySeen,
        }
    }

    #[inline]
    pub fn is_fully_seen(&self, v: VertexId) -> bool {
        self.known[v.index()] as usize == self.keywords
    }

    /// Seed cost of `v` for `keyword`, infinite if it is not a keyword
    /// vertex.
    pub fn seed_cost(&self, v: VertexId, keyword: usize) -> f64 {
        self.seed_cost[self.slot(v, keyword)]
    }

    /// Keyword vertex and path realizing the finalized distance of `v`.
    pub fn recover_anchor(&self, v: VertexId, keyword: usize) -> Result<Anchor> {
        let dist = self.distance(v, keyword).ok_or_else(|| {
            SkqError::State(format!("distance of vertex {} for keyword {keyword} is not final", v.0))
        })?;
        let mut path = Vec::new();
        let mut at = v;
        while let Some((prev, edge)) = self.pred[self.slot(at, keyword)] {
            path.push(edge);
            at = prev;
            if path.len() > self.graph.num_vertices() {
                return Err(SkqError::Invariant("predecessor chain has a cycle".into()));
            }
        }
        path.reverse();
        Ok(Anchor {
            vertex: v,
            keyword_vertex: at,
            path,
            dist,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::baselines::all_pairs_distances;
    use crate::graph::tests::{fix1, id};
    use crate::synth::{random_graph, GraphShape};
    use proptest::prelude::*;

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() < 1e-12
    }

    fn run_all(ex: &mut Explorer<'_>) -> Vec<StepEvent> {
        std::iter::from_fn(|| ex.step()).collect()
    }

    #[test]
    fn fix1_trace() {
        let g = fix1();
        let l2 = id(&g, "Academy Award");
        let mut ex = Explorer::new(&g, &[vec![(l2, 0.0)]]);
        assert_eq!(ex.queue_head_bound(0), 0.0);
        let first = ex.step().unwrap();
        assert_eq!((first.vertex, first.keyword, first.dist), (l2, 0, 0.0));
        assert!(first.fully_seen);
        assert!(close(ex.queue_head_bound(0), 4.0 / 7.0));
        let second = ex.step().unwrap();
        assert_eq!(second.vertex, id(&g, "P"));
        assert!(close(second.dist, 4.0 / 7.0));
        run_all(&mut ex);
        assert!(close(ex.distance(id(&g, "A"), 0).unwrap(), 6.0 / 7.0));
        assert!(close(ex.distance(id(&g, "F"), 0).unwrap(), 9.0 / 7.0));
        assert!(close(ex.distance(id(&g, "B"), 0).unwrap(), 12.0 / 7.0));
        assert_eq!(ex.queue_head_bound(0), f64::INFINITY);
    }

    #[test]
    fn fix1_anchors() {
        let g = fix1();
        let l2 = id(&g, "Academy Award");
        let mut ex = Explorer::new(&g, &[vec![(l2, 0.0)]]);
        assert!(ex.recover_anchor(id(&g, "A"), 0).is_err());
        run_all(&mut ex);
        let a = ex.recover_anchor(id(&g, "A"), 0).unwrap();
        assert_eq!(a.keyword_vertex, l2);
        let labels: Vec<&str> = a.path.iter().map(|e| g.predicate_name(e.predicate)).collect();
        assert_eq!(labels, vec!["label", "wonPrize"]);
        let seed = ex.recover_anchor(l2, 0).unwrap();
        assert!(seed.path.is_empty());
        assert_eq!(seed.dist, 0.0);
        let b = ex.recover_anchor(id(&g, "B"), 0).unwrap();
        assert_eq!(b.path.len(), 4);
        assert!(close(b.dist, 12.0 / 7.0));
    }

    #[test]
    fn seed_cost_is_the_start_distance() {
        let g = fix1();
        let l2 = id(&g, "Academy Award");
        let mut ex = Explorer::new(&g, &[vec![(l2, 0.5)]]);
        assert_eq!(ex.step().unwrap().dist, 0.5);
        assert_eq!(ex.seed_cost(l2, 0), 0.5);
    }

    #[test]
    fn two_keywords_alternate() {
        let g = fix1();
        let l1 = id(&g, "Philadelphia");
        let l2 = id(&g, "Academy Award");
        let mut ex = Explorer::new(&g, &[vec![(l2, 0.0)], vec![(l1, 0.0)]]);
        let order: Vec<usize> = (0..4).map(|_| ex.step().unwrap().keyword).collect();
        assert_eq!(order, vec![0, 1, 0, 1]);
        assert_eq!(ex.seen_state(l2), SeenState::PartiallySeen);
        assert_eq!(ex.seen_state(id(&g, "B")), SeenState::Unseen);
        run_all(&mut ex);
        assert!(g.vertex_ids().all(|v| ex.is_fully_seen(v)));
    }

    #[test]
    fn empty_queue_is_skipped() {
        let g = fix1();
        let l2 = id(&g, "Academy Award");
        let mut ex = Explorer::new(&g, &[vec![], vec![(l2, 0.0)]]);
        assert_eq!(ex.step().unwrap().keyword, 1);
        assert_eq!(ex.queue_head_bound(0), f64::INFINITY);
        let events = run_all(&mut ex);
        assert!(events.iter().all(|e| e.keyword == 1 && !e.fully_seen));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn finalized_distances_equal_oracle(seed in any::<u64>(), keywords in 1usize..4) {
            let g = random_graph(seed, &GraphShape::default());
            let seeds: Vec<Vec<(VertexId, f64)>> = (0..keywords)
                .map(|i| {
                    g.vertex_ids()
                        .filter(|v| (v.0 as usize + i).is_multiple_of(7))
                        .map(|v| (v, (v.0 % 3) as f64 * 0.25))
                        .collect()
                })
                .collect();
            let oracle = all_pairs_distances(&g, &seeds);
            let mut ex = Explorer::new(&g, &seeds);
            let mut last = vec![f64::NEG_INFINITY; keywords];
            let mut pops = std::collections::HashSet::new();
            while let Some(ev) = ex.step() {
                prop_assert!(ev.dist >= last[ev.keyword]);
                last[ev.keyword] = ev.dist;
                prop_assert!(pops.insert((ev.vertex, ev.keyword)));
            }
            for v in g.vertex_ids() {
                for i in 0..keywords {
                    let want = oracle.distance(v, i);
                    match ex.distance(v, i) {
                        Some(d) => {
                            prop_assert!((d - want).abs() < 1e-9);
                            let a = ex.recover_anchor(v, i).unwrap();
                            let walked: f64 = ex.seed_cost(a.keyword_vertex, i)
                                + a.path.iter().map(|e| g.salience(e.predicate)).sum::<f64>();
                            prop_assert!((walked - d).abs() < 1e-9);
                        }
                        None => prop_assert!(want.is_infinite()),
                    }
                }
            }
        }
    }
}
