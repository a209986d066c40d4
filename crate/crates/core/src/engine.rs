//! Top-k answering: drives the explorer, hands fully-seen candidate
//! vertices to the matcher, tracks every discovered match and stops as soon
//! as the k-th best complete cost beats the lower bounds on everything
//! still unresolved.
//!
//! Costs are compared through [`cost_key`], a fixed-point quantization, so
//! that float noise from different summation orders cannot reorder ties.
//! The stop test is strict: a pending match whose bound ties the k-th cost
//! could still win the binding tie-break.

use std::cell::RefCell;
use std::cmp::Reverse;
use std::collections::{BTreeSet, BinaryHeap, HashMap, HashSet};

use ordered_float::OrderedFloat;

use crate::baselines::{self, RunCounters};
use crate::error::{Result, SkqError};
use crate::exec::{self, Execution};
use crate::explorer::{Anchor, Explorer};
use crate::graph::{RdfGraph, VertexId};
use crate::keyword::KeywordIndex;
use crate::matcher::{Match, Matcher};
use crate::query::{bind_constants, BoundQuery, SkQuery, Unsatisfiable};
use crate::star_index::{mark_dummies, CandidateMap, IndexBundle};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Strategy {
    /// Star-index pruning plus early termination.
    Indexed,
    /// Every vertex is a candidate; exploration runs to exhaustion.
    Naive,
    /// Enumerate all matches, then score them with full distance tables.
    Exhaustive,
}

impl Strategy {
    pub const ALL: [Strategy; 3] = [Strategy::Exhaustive, Strategy::Naive, Strategy::Indexed];

    pub fn name(self) -> &'static str {
        match self {
            Strategy::Indexed => "indexed",
            Strategy::Naive => "naive",
            Strategy::Exhaustive => "exhaustive",
        }
    }
}

impl std::str::FromStr for Strategy {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "indexed" => Ok(Strategy::Indexed),
            "naive" => Ok(Strategy::Naive),
            "exhaustive" => Ok(Strategy::Exhaustive),
            other => Err(format!("unknown strategy {other:?} (expected indexed, naive or exhaustive)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SeedPolicy {
    /// Keyword vertices start at `alpha * content cost`.
    ContentCost,
    /// Keyword vertices start at zero; content does not enter the cost.
    Zero,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundPolicy {
    /// Per-keyword minima summed; never exceeds a true cost.
    Componentwise,
    /// Minimum over vertices of per-vertex sums, as originally published.
    /// Can overestimate when keywords are served by different vertices.
    Published,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EngineConfig {
    pub alpha: f64,
    pub strategy: Strategy,
    pub seed_policy: SeedPolicy,
    pub bound_policy: BoundPolicy,
    pub injective: bool,
    pub early_stop: bool,
    /// Overrides the query's own `k`.
    pub k: Option<usize>,
}

impl Default for EngineConfig {
    fn default() -> Self {
        EngineConfig {
            alpha: 1.0,
            strategy: Strategy::Indexed,
            seed_policy: SeedPolicy::ContentCost,
            bound_policy: BoundPolicy::Componentwise,
            injective: false,
            early_stop: true,
            k: None,
        }
    }
}

impl EngineConfig {
    pub fn with_strategy(strategy: Strategy) -> Self {
        EngineConfig {
            strategy,
            ..Self::default()
        }
    }
}

const KEY_SCALE: f64 = (1u64 << 30) as f64;

/// Fixed-point comparison key of a cost; infinity maps to `i64::MAX`.
pub fn cost_key(cost: f64) -> i64 {
    if cost.is_finite() {
        (cost * KEY_SCALE).round() as i64
    } else {
        i64::MAX
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SkResult {
    pub binding: Match,
    /// Variable bindings in variable order.
    pub values: Vec<VertexId>,
    /// One per keyword.
    pub anchors: Vec<Anchor>,
    pub content: f64,
    pub structure: f64,
    pub total: f64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Outcome {
    EarlyStop,
    Exhausted,
    Unanswerable(Unsatisfiable),
}

impl Outcome {
    pub fn name(&self) -> &'static str {
        match self {
            Outcome::EarlyStop => "early-stop",
            Outcome::Exhausted => "exhausted",
            Outcome::Unanswerable(_) => "unanswerable",
        }
    }
}

#[derive(Debug, Clone)]
pub struct Answer {
    /// Variable names in binding order.
    pub variables: Vec<String>,
    pub results: Vec<SkResult>,
    pub counters: RunCounters,
    pub outcome: Outcome,
    /// The k-th best cost at the moment of an early stop.
    pub stop_delta: Option<f64>,
}

impl Answer {
    pub fn unanswerable(reason: Unsatisfiable) -> Self {
        Answer {
            variables: Vec::new(),
            results: Vec::new(),
            counters: RunCounters::default(),
            outcome: Outcome::Unanswerable(reason),
            stop_delta: None,
        }
    }

    pub fn costs(&self) -> Vec<f64> {
        self.results.iter().map(|r| r.total).collect()
    }
}

/// A query bound to a graph together with its keyword seeds.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub query: BoundQuery,
    /// Per keyword: matching literals and their seed costs.
    pub seeds: Vec<Vec<(VertexId, f64)>>,
    pub k: usize,
}

impl Prepared {
    pub fn variable_names(&self) -> Vec<String> {
        (0..self.query.variables.len())
            .map(|i| self.query.variable_name(i).to_owned())
            .collect()
    }
}

/// Binds constants and resolves keywords. The inner `Err` means the query
/// can have no answer on this graph.
pub fn prepare(
    graph: &RdfGraph,
    keywords: &KeywordIndex,
    query: &SkQuery,
    config: &EngineConfig,
) -> Result<std::result::Result<Prepared, Unsatisfiable>> {
    if !(config.alpha.is_finite() && config.alpha >= 0.0) {
        return Err(SkqError::InvalidQuery(format!("alpha must be a nonnegative number, got {}", config.alpha)));
    }
    let mut seeds = Vec::with_capacity(query.keywords.len());
    for phrase in &query.keywords {
        let matches = keywords.match_keyword(graph, phrase)?;
        if matches.is_empty() {
            return Ok(Err(Unsatisfiable::NoKeywordMatch(phrase.clone())));
        }
        seeds.push(
            matches
                .into_iter()
                .map(|m| {
                    let cost = match config.seed_policy {
                        SeedPolicy::ContentCost => config.alpha * m.cost,
                        SeedPolicy::Zero => 0.0,
                    };
                    (m.vertex, cost)
                })
                .collect(),
        );
    }
    let bound = match bind_constants(query, graph) {
        Ok(b) => b,
        Err(u) => return Ok(Err(u)),
    };
    Ok(Ok(Prepared {
        query: bound,
        seeds,
        k: config.k.unwrap_or(query.k),
    }))
}

/// Answers one query with the configured strategy.
pub fn answer_sk_query(
    graph: &RdfGraph,
    index: &IndexBundle,
    query: &SkQuery,
    config: &EngineConfig,
) -> Result<Answer> {
    index.check_graph(graph)?;
    let prepared = match prepare(graph, &index.keywords, query, config)? {
        Ok(p) => p,
        Err(reason) => return Ok(Answer::unanswerable(reason)),
    };
    if prepared.k == 0 {
        return Err(SkqError::InvalidQuery("k must be positive".into()));
    }
    match config.strategy {
        Strategy::Exhaustive => baselines::exhaustive_topk(graph, &prepared, config),
        Strategy::Naive => {
            let candidates = CandidateMap::unpruned(graph, &prepared.query);
            let config = EngineConfig {
                early_stop: false,
                ..config.clone()
            };
            TopKSession::new(graph, &prepared, &candidates, &config).run()
        }
        Strategy::Indexed => {
            let candidates = match mark_dummies(&index.star, &prepared.query, graph, config.injective) {
                Ok(c) => c,
                Err(reason) => return Ok(Answer::unanswerable(reason)),
            };
            TopKSession::new(graph, &prepared, &candidates, config).run()
        }
    }
}

/// Answers several queries, in parallel when `exec` allows.
pub fn answer_batch(
    graph: &RdfGraph,
    index: &IndexBundle,
    queries: &[SkQuery],
    config: &EngineConfig,
    exec: Execution,
) -> Vec<Result<Answer>> {
    exec::map_slice(exec, queries, |q| answer_sk_query(graph, index, q, config))
}

#[derive(Debug, Clone)]
struct MatchRecord {
    binding: Match,
    /// Distinct variable-bound vertices.
    vertices: Vec<VertexId>,
    /// Vertices of `vertices` not yet fully seen.
    remaining: usize,
    cost: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bounds {
    pub delta: f64,
    pub theta1: f64,
    pub theta2: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Decision {
    Continue,
    Stop,
    Exhausted,
}

/// State of one query evaluation.
pub struct TopKSession<'a> {
    graph: &'a RdfGraph,
    query: &'a BoundQuery,
    candidates: &'a CandidateMap,
    config: &'a EngineConfig,
    k: usize,
    variables: Vec<String>,
    explorer: Explorer<'a>,
    matcher: Matcher<'a>,
    searched: Vec<bool>,
    records: Vec<MatchRecord>,
    known_matches: HashSet<Match>,
    waiting: HashMap<VertexId, Vec<usize>>,
    partial: BTreeSet<usize>,
    /// Lower bounds of partial matches, possibly stale. Bounds only grow,
    /// so a stale entry never overstates the minimum.
    partial_bounds: RefCell<BinaryHeap<Reverse<(OrderedFloat<f64>, usize)>>>,
    /// The k smallest complete cost keys (max-heap).
    best: BinaryHeap<(i64, OrderedFloat<f64>)>,
    /// Per keyword: candidate vertices that are partially seen and final
    /// for that keyword.
    frontier: Vec<BTreeSet<(OrderedFloat<f64>, VertexId)>>,
    partially_seen: BTreeSet<VertexId>,
    matcher_calls: u64,
}

impl<'a> TopKSession<'a> {
    pub fn new(
        graph: &'a RdfGraph,
        prepared: &'a Prepared,
        candidates: &'a CandidateMap,
        config: &'a EngineConfig,
    ) -> Self {
        let n = prepared.seeds.len();
        TopKSession {
            graph,
            query: &prepared.query,
            candidates,
            config,
            k: prepared.k,
            variables: prepared.variable_names(),
            explorer: Explorer::new(graph, &prepared.seeds),
            matcher: Matcher::new(graph, &prepared.query, candidates, config.injective),
            searched: vec![false; graph.num_vertices()],
            records: Vec::new(),
            known_matches: HashSet::new(),
            waiting: HashMap::new(),
            partial: BTreeSet::new(),
            partial_bounds: RefCell::new(BinaryHeap::new()),
            best: BinaryHeap::new(),
            frontier: vec![BTreeSet::new(); n],
            partially_seen: BTreeSet::new(),
            matcher_calls: 0,
        }
    }

    pub fn explorer(&self) -> &Explorer<'a> {
        &self.explorer
    }

    /// Relevant to any match: a candidate of some variable.
    fn relevant(&self, v: VertexId) -> bool {
        self.candidates.is_candidate_of_any(v) && !self.candidates.is_dummy(v)
    }

    /// Sum over keywords of the closest variable-bound vertex's distance.
    pub fn match_cost(&self, m: &Match) -> Result<f64> {
        let vertices = m.variable_vertex_set(self.query);
        let mut total = 0.0;
        for i in 0..self.explorer.num_keywords() {
            let mut best = f64::INFINITY;
            for &v in &vertices {
                let d = self.explorer.distance(v, i).ok_or_else(|| {
                    SkqError::State(format!("match vertex {} is not fully seen", v.0))
                })?;
                best = best.min(d);
            }
            total += best;
        }
        Ok(total)
    }

    /// Lower bound on the cost of a discovered match, using queue heads for
    /// distances that are not final yet.
    pub fn partial_lower_bound(&self, m: &Match) -> f64 {
        self.lower_bound_of(&m.variable_vertex_set(self.query))
    }

    fn lower_bound_of(&self, vertices: &[VertexId]) -> f64 {
        let n = self.explorer.num_keywords();
        match self.config.bound_policy {
            BoundPolicy::Componentwise => (0..n)
                .map(|i| {
                    vertices
                        .iter()
                        .map(|&v| self.explorer.lower_bound(v, i))
                        .fold(f64::INFINITY, f64::min)
                })
                .sum(),
            BoundPolicy::Published => vertices
                .iter()
                .map(|&v| self.vertex_sum_bound(v))
                .fold(f64::INFINITY, f64::min),
        }
    }

    fn vertex_sum_bound(&self, v: VertexId) -> f64 {
        (0..self.explorer.num_keywords())
            .map(|i| self.explorer.lower_bound(v, i))
            .sum()
    }

    /// k-th smallest complete cost; infinite with fewer than k.
    pub fn delta(&self) -> f64 {
        if self.best.len() < self.k {
            return f64::INFINITY;
        }
        self.best.peek().expect("k > 0").1.into_inner()
    }

    fn delta_key(&self) -> i64 {
        if self.best.len() < self.k {
            i64::MAX
        } else {
            self.best.peek().expect("k > 0").0
        }
    }

    /// Lower bound over discovered, incomplete matches.
    pub fn theta1(&self) -> f64 {
        let mut heap = self.partial_bounds.borrow_mut();
        while let Some(&Reverse((OrderedFloat(cached), id))) = heap.peek() {
            heap.pop();
            if !self.partial.contains(&id) {
                continue;
            }
            let now = self.lower_bound_of(&self.records[id].vertices);
            heap.push(Reverse((OrderedFloat(now), id)));
            if now == cached {
                return now;
            }
        }
        f64::INFINITY
    }

    /// Lower bound over matches not discovered yet.
    ///
    /// Every variable vertex of such a match is unseen or partially seen,
    /// so per keyword its distance is at least the smallest final distance
    /// among partially-seen candidates, or else the queue head.
    pub fn theta2(&self) -> f64 {
        match self.config.bound_policy {
            BoundPolicy::Componentwise => (0..self.explorer.num_keywords())
                .map(|i| match self.frontier[i].first() {
                    Some(&(OrderedFloat(d), _)) => d.min(self.explorer.queue_head_bound(i)),
                    None => self.explorer.queue_head_bound(i),
                })
                .sum(),
            BoundPolicy::Published => self
                .partially_seen
                .iter()
                .map(|&v| self.vertex_sum_bound(v))
                .fold(f64::INFINITY, f64::min),
        }
    }

    pub fn bounds(&self) -> Bounds {
        Bounds {
            delta: self.delta(),
            theta1: self.theta1(),
            theta2: self.theta2(),
        }
    }

    /// Stop once the k-th complete cost is strictly below both bounds.
    pub fn decision(&self) -> Decision {
        if self.explorer.is_exhausted() {
            return Decision::Exhausted;
        }
        if !self.config.early_stop {
            return Decision::Continue;
        }
        let delta = self.delta_key();
        if delta == i64::MAX {
            return Decision::Continue;
        }
        if delta < cost_key(self.theta1()) && delta < cost_key(self.theta2()) {
            Decision::Stop
        } else {
            Decision::Continue
        }
    }

    /// One explorer pop plus the bookkeeping it triggers. Returns `false`
    /// when every queue was already empty.
    pub fn advance(&mut self) -> Result<bool> {
        let Some(ev) = self.explorer.step() else {
            return Ok(false);
        };
        let v = ev.vertex;
        let relevant = self.relevant(v);
        if !ev.fully_seen {
            if ev.first_seen {
                self.partially_seen.insert(v);
            }
            if relevant {
                self.frontier[ev.keyword].insert((OrderedFloat(ev.dist), v));
            }
            return Ok(true);
        }

        self.partially_seen.remove(&v);
        if relevant {
            for i in 0..self.explorer.num_keywords() {
                if i != ev.keyword {
                    let d = self.explorer.distance(v, i).expect("fully seen");
                    self.frontier[i].remove(&(OrderedFloat(d), v));
                }
            }
        }

        for id in self.waiting.remove(&v).unwrap_or_default() {
            let rec = &mut self.records[id];
            rec.remaining -= 1;
            if rec.remaining == 0 {
                self.complete(id)?;
            }
        }

        if relevant {
            self.matcher_calls += 1;
            let found = self.matcher.find_matches_from(v, &self.searched);
            self.searched[v.index()] = true;
            for m in found {
                self.discover(m)?;
            }
        }
        Ok(true)
    }

    fn discover(&mut self, m: Match) -> Result<()> {
        if !self.known_matches.insert(m.clone()) {
            return Ok(());
        }
        let vertices = m.variable_vertex_set(self.query);
        let pending: Vec<VertexId> = vertices
            .iter()
            .copied()
            .filter(|&u| !self.explorer.is_fully_seen(u))
            .collect();
        let id = self.records.len();
        self.records.push(MatchRecord {
            binding: m,
            vertices,
            remaining: pending.len(),
            cost: None,
        });
        if pending.is_empty() {
            self.complete(id)?;
        } else {
            self.partial.insert(id);
            let bound = self.lower_bound_of(&self.records[id].vertices);
            self.partial_bounds.get_mut().push(Reverse((OrderedFloat(bound), id)));
            for u in pending {
                self.waiting.entry(u).or_default().push(id);
            }
        }
        Ok(())
    }

    fn complete(&mut self, id: usize) -> Result<()> {
        let cost = self.match_cost(&self.records[id].binding)?;
        self.partial.remove(&id);
        self.records[id].cost = Some(cost);
        if cost.is_finite() {
            self.best.push((cost_key(cost), OrderedFloat(cost)));
            if self.best.len() > self.k {
                self.best.pop();
            }
        }
        Ok(())
    }

    pub fn counters(&self) -> RunCounters {
        let ec = self.explorer.counters();
        RunCounters {
            pops: ec.pops,
            relaxations: ec.relaxations,
            matcher_calls: self.matcher_calls,
            matches: self.records.len() as u64,
        }
    }

    /// Runs until the stop rule fires or the queues run dry.
    pub fn run(mut self) -> Result<Answer> {
        let outcome = loop {
            match self.decision() {
                Decision::Stop => break Outcome::EarlyStop,
                Decision::Exhausted => break Outcome::Exhausted,
                Decision::Continue => {
                    self.advance()?;
                }
            }
        };
        let stop_delta = (outcome == Outcome::EarlyStop).then(|| self.delta());
        if outcome == Outcome::Exhausted && !self.partial.is_empty() {
            return Err(SkqError::Invariant(format!(
                "{} matches still incomplete after exploration ended",
                self.partial.len()
            )));
        }
        let results = self.results()?;
        Ok(Answer {
            variables: self.variables.clone(),
            results,
            counters: self.counters(),
            outcome,
            stop_delta,
        })
    }

    /// The best k complete matches, ranked by cost then binding.
    pub fn results(&self) -> Result<Vec<SkResult>> {
        let mut done: Vec<(i64, &MatchRecord)> = self
            .records
            .iter()
            .filter_map(|r| r.cost.filter(|c| c.is_finite()).map(|c| (cost_key(c), r)))
            .collect();
        let order = |a: &(i64, &MatchRecord), b: &(i64, &MatchRecord)| {
            a.0.cmp(&b.0).then_with(|| a.1.binding.cmp(&b.1.binding))
        };
        if done.len() > self.k {
            done.select_nth_unstable_by(self.k, order);
            done.truncate(self.k);
        }
        done.sort_by(order);
        done.into_iter().map(|(_, r)| self.result_for(r)).collect()
    }

    fn result_for(&self, rec: &MatchRecord) -> Result<SkResult> {
        let mut anchors = Vec::new();
        let mut content = 0.0;
        let mut total = 0.0;
        for i in 0..self.explorer.num_keywords() {
            let (d, v) = rec
                .vertices
                .iter()
                .map(|&v| (self.explorer.distance(v, i).unwrap_or(f64::INFINITY), v))
                .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)))
                .ok_or_else(|| SkqError::Invariant("match without variable vertices".into()))?;
            let anchor = self.explorer.recover_anchor(v, i)?;
            if self.config.seed_policy == SeedPolicy::ContentCost {
                content += self.explorer.seed_cost(anchor.keyword_vertex, i);
            }
            total += d;
            anchors.push(anchor);
        }
        Ok(SkResult {
            binding: rec.binding.clone(),
            values: rec.binding.variable_vertices(self.query).collect(),
            anchors,
            content,
            structure: total - content,
            total,
        })
    }

    pub fn graph(&self) -> &'a RdfGraph {
        self.graph
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::tests::{fix1, id};
    use crate::query::tests::FIX1_QUERY;
    use crate::star_index::IndexParams;
    use crate::synth::{random_instance, InstanceShape};
    use proptest::prelude::*;

    fn fix1_bundle() -> (RdfGraph, IndexBundle) {
        let g = fix1();
        let idx = IndexBundle::build(&g, IndexParams::for_graph(&g), Execution::Sequential);
        (g, idx)
    }

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() < 1e-9
    }

    #[test]
    fn fix1_top1() {
        let (g, idx) = fix1_bundle();
        let q = SkQuery::parse(FIX1_QUERY).unwrap();
        let ans = answer_sk_query(&g, &idx, &q, &EngineConfig::default()).unwrap();
        assert_eq!(ans.outcome, Outcome::EarlyStop);
        assert_eq!(ans.results.len(), 1);
        let r = &ans.results[0];
        assert_eq!(r.binding.nodes[0], id(&g, "A"));
        assert!(close(r.total, 6.0 / 7.0));
        assert_eq!(r.content, 0.0);
        assert_eq!(r.anchors[0].keyword_vertex, id(&g, "Academy Award"));
        assert_eq!(r.anchors[0].vertex, id(&g, "A"));
    }

    #[test]
    fn fix1_stops_before_b_is_final() {
        let (g, idx) = fix1_bundle();
        let q = SkQuery::parse(FIX1_QUERY).unwrap();
        let config = EngineConfig::default();
        let prepared = prepare(&g, &idx.keywords, &q, &config).unwrap().unwrap();
        let cm = mark_dummies(&idx.star, &prepared.query, &g, false).unwrap();
        let mut s = TopKSession::new(&g, &prepared, &cm, &config);
        assert_eq!(s.theta2(), 0.0);
        while s.decision() == Decision::Continue {
            s.advance().unwrap();
        }
        assert_eq!(s.decision(), Decision::Stop);
        assert!(s.explorer().distance(id(&g, "B"), 0).is_none());
        let b = s.bounds();
        assert!(close(b.delta, 6.0 / 7.0));
        assert!(close(b.theta1, 9.0 / 7.0));
    }

    #[test]
    fn fix1_k2_costs_and_second_anchor() {
        let (g, idx) = fix1_bundle();
        let q = SkQuery::parse(FIX1_QUERY).unwrap();
        let config = EngineConfig {
            k: Some(2),
            ..EngineConfig::default()
        };
        let ans = answer_sk_query(&g, &idx, &q, &config).unwrap();
        let costs = ans.costs();
        assert_eq!(costs.len(), 2);
        assert!(close(costs[0], 6.0 / 7.0) && close(costs[1], 9.0 / 7.0));
        // the second match is anchored at F, not at its ?a binding
        assert_eq!(ans.results[1].anchors[0].vertex, id(&g, "F"));
        for s in super::Strategy::ALL {
            let other = answer_sk_query(&g, &idx, &q, &EngineConfig { strategy: s, ..config.clone() }).unwrap();
            assert_eq!(other.results.len(), 2);
            assert!(other.costs().iter().zip(&costs).all(|(a, b)| close(*a, *b)));
        }
    }

    #[test]
    fn k_beyond_match_count_returns_all() {
        let (g, idx) = fix1_bundle();
        let q = SkQuery::parse(FIX1_QUERY).unwrap();
        let config = EngineConfig {
            k: Some(10),
            ..EngineConfig::default()
        };
        let ans = answer_sk_query(&g, &idx, &q, &config).unwrap();
        assert_eq!(ans.results.len(), 2);
        assert_eq!(ans.outcome, Outcome::Exhausted);
    }

    #[test]
    fn partial_keyword_has_content_cost() {
        let (g, idx) = fix1_bundle();
        let q = SkQuery::parse(&FIX1_QUERY.replace("Academy Award", "Award")).unwrap();
        let ans = answer_sk_query(&g, &idx, &q, &EngineConfig::default()).unwrap();
        let r = &ans.results[0];
        assert!(close(r.content, 0.5));
        assert!(close(r.total, 0.5 + 6.0 / 7.0));
        assert!(close(r.structure, 6.0 / 7.0));

        let zero = EngineConfig {
            seed_policy: SeedPolicy::Zero,
            ..EngineConfig::default()
        };
        let r = answer_sk_query(&g, &idx, &q, &zero).unwrap().results.remove(0);
        assert_eq!(r.content, 0.0);
        assert!(close(r.total, 6.0 / 7.0));
    }

    #[test]
    fn unanswerable_reasons() {
        let (g, idx) = fix1_bundle();
        let cfg = EngineConfig::default();
        let ask = |text: &str| answer_sk_query(&g, &idx, &SkQuery::parse(text).unwrap(), &cfg).unwrap();
        let a = ask(&FIX1_QUERY.replace("Academy Award", "Oscar"));
        assert!(matches!(a.outcome, Outcome::Unanswerable(Unsatisfiable::NoKeywordMatch(_))));
        let a = ask(r#"SELECT ?x WHERE { ?x directedBy ?y } KEYWORDS("Award")"#);
        assert!(matches!(a.outcome, Outcome::Unanswerable(Unsatisfiable::UnknownPredicate(_))));
        assert!(a.results.is_empty());
    }

    #[test]
    fn zero_hop_keyword_inside_match() {
        let (g, idx) = fix1_bundle();
        let q = SkQuery::parse(r#"SELECT ?f WHERE { ?f label ?l } KEYWORDS("Philadelphia") K=1"#).unwrap();
        let ans = answer_sk_query(&g, &idx, &q, &EngineConfig::default()).unwrap();
        assert_eq!(ans.results[0].total, 0.0);
        assert_eq!(ans.results[0].binding.nodes[1], id(&g, "Philadelphia"));
    }

    #[test]
    fn batch_matches_single_runs() {
        let (g, idx) = fix1_bundle();
        let qs: Vec<SkQuery> = [FIX1_QUERY, r#"SELECT ?x WHERE { ?x type Actor } KEYWORDS("Award") K=2"#]
            .iter()
            .map(|t| SkQuery::parse(t).unwrap())
            .collect();
        let cfg = EngineConfig::default();
        let seq = answer_batch(&g, &idx, &qs, &cfg, Execution::Sequential);
        let par = answer_batch(&g, &idx, &qs, &cfg, Execution::Parallel);
        for (a, b) in seq.iter().zip(&par) {
            let (a, b) = (a.as_ref().unwrap(), b.as_ref().unwrap());
            assert_eq!(a.results, b.results);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn delta_never_increases_and_bounds_hold(seed in any::<u64>()) {
            let inst = random_instance(seed, &InstanceShape::default());
            let g = &inst.graph;
            let idx = IndexBundle::build(g, IndexParams::for_graph(g), Execution::Sequential);
            let config = EngineConfig { k: Some(3), ..EngineConfig::default() };
            let Ok(Ok(prepared)) = prepare(g, &idx.keywords, &inst.query, &config) else { return Ok(()); };
            let Ok(cm) = mark_dummies(&idx.star, &prepared.query, g, false) else { return Ok(()); };
            let exhaustive = baselines::score_all_matches(g, &prepared);
            let mut s = TopKSession::new(g, &prepared, &cm, &config);
            let mut last = f64::INFINITY;
            while s.decision() == Decision::Continue {
                s.advance().unwrap();
                let d = s.delta();
                prop_assert!(d <= last);
                last = d;
                // every match still pending or undiscovered costs at least
                // the smaller of the two bounds
                let rescan = s.partial.iter()
                    .map(|&id| s.lower_bound_of(&s.records[id].vertices))
                    .fold(f64::INFINITY, f64::min);
                prop_assert_eq!(s.theta1(), rescan);
                let floor = s.theta1().min(s.theta2());
                for (m, cost) in &exhaustive {
                    if !s.known_matches.contains(m) {
                        prop_assert!(*cost >= s.theta2() - 1e-9, "undiscovered {cost} < theta2 {}", s.theta2());
                    } else if s.records.iter().any(|r| &r.binding == m && r.cost.is_none()) {
                        prop_assert!(*cost >= floor - 1e-9);
                    }
                }
            }
        }
    }
}
