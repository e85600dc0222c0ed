//! Importance sampling of vertex partitions on topic-attributed graphs.
//!
//! A [`TopicGraph`] carries, per edge, an empirical distribution over `K`
//! topics and the number of messages behind it. Screening draws uniform red
//! sets and keeps those whose red side is both denser (`Δρ`) and topically
//! different (`ΔP`) from the green side. Each kept partition then yields
//! attributed graphs by drawing one topic per edge and mapping it to red or
//! green, and those graphs are ranked and scored like κ samples.

use std::collections::BTreeMap;

use rand::seq::index;
use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{normalize_vertex_set, pair_count, relabel_map, AttributedGraph, EdgeAttr, Partition, SimpleGraph, VertexAttr, VertexId};
use crate::metrics::{Accumulator, AggregateReport, EvalReport, Stat, TruthSet};
use crate::nomination::{argmax_gamma, rank_with_stats, tie_keys, CandidateStats, FusionWeight};
use crate::seed::{self, stream};

/// Topic vectors may deviate this much from unit sum before being rejected.
pub const TOPIC_SUM_TOLERANCE: f64 = 1e-6;
/// Accepted vectors further than this from unit sum are rescaled; closer ones
/// are stored as given so that files round-trip exactly.
pub const NORMALIZED_TOLERANCE: f64 = 1e-9;
/// Bins with fewer partitions than this are flagged.
pub const MIN_PARTITIONS_PER_BIN: usize = 20;
/// Default side length of the `(Δρ, ΔP)` bins.
pub const BIN_WIDTH: f64 = 0.1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TopicEdge {
    pub u: VertexId,
    pub v: VertexId,
    pub count: u32,
    /// `topics[k - 1]` is the probability of topic `k`.
    pub topics: Vec<f64>,
}

/// Undirected simple graph whose edges carry topic distributions.
#[derive(Clone, Debug, PartialEq)]
pub struct TopicGraph {
    n: usize,
    k: usize,
    /// Sorted by `(u, v)` with `u < v`.
    edges: Vec<TopicEdge>,
    /// `(neighbour, edge index)`, sorted by neighbour.
    adj: Vec<Vec<(VertexId, usize)>>,
}

impl TopicGraph {
    /// Validates and normalizes. Topic vectors must have length `k` and sum
    /// to 1 within [`TOPIC_SUM_TOLERANCE`]; message counts must be positive.
    /// Vectors off by more than [`NORMALIZED_TOLERANCE`] are rescaled.
    pub fn new(n: usize, k: usize, edges: Vec<TopicEdge>) -> Result<Self> {
        if k < 2 {
            return Err(Error::input(format!("need at least 2 topics, got {k}")));
        }
        let mut edges = edges;
        for (i, e) in edges.iter_mut().enumerate() {
            validate_edge(n, k, e).map_err(|msg| Error::Input(format!("edge #{i}: {msg}")))?;
            if e.u > e.v {
                std::mem::swap(&mut e.u, &mut e.v);
            }
            let sum: f64 = e.topics.iter().sum();
            if (sum - 1.0).abs() > NORMALIZED_TOLERANCE {
                e.topics.iter_mut().for_each(|x| *x /= sum);
            }
        }
        edges.sort_by_key(|e| (e.u, e.v));
        if let Some(w) = edges.windows(2).find(|w| (w[0].u, w[0].v) == (w[1].u, w[1].v)) {
            return Err(Error::input(format!("duplicate edge ({}, {})", w[0].u, w[0].v)));
        }
        Ok(Self::from_sorted(n, k, edges))
    }

    fn from_sorted(n: usize, k: usize, edges: Vec<TopicEdge>) -> Self {
        let mut adj = vec![Vec::new(); n];
        for (i, e) in edges.iter().enumerate() {
            adj[e.u].push((e.v, i));
            adj[e.v].push((e.u, i));
        }
        for list in &mut adj {
            list.sort_unstable();
        }
        TopicGraph { n, k, edges, adj }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn edges(&self) -> &[TopicEdge] {
        &self.edges
    }

    pub fn neighbors(&self, v: VertexId) -> &[(VertexId, usize)] {
        &self.adj[v]
    }
}

/// Checks one edge record; the error names the first problem found.
pub(crate) fn validate_edge(n: usize, k: usize, e: &TopicEdge) -> std::result::Result<(), String> {
    if e.u == e.v {
        return Err(format!("self-loop at vertex {}", e.u));
    }
    if e.u >= n || e.v >= n {
        return Err(format!("edge ({}, {}) references an unknown vertex", e.u, e.v));
    }
    if e.count == 0 {
        return Err("message count must be at least 1".into());
    }
    if e.topics.len() != k {
        return Err(format!("topic vector has {} entries, expected {k}", e.topics.len()));
    }
    if e.topics.iter().any(|x| !x.is_finite() || *x < 0.0) {
        return Err("topic probabilities must be finite and non-negative".into());
    }
    let sum: f64 = e.topics.iter().sum();
    if (sum - 1.0).abs() > TOPIC_SUM_TOLERANCE {
        return Err(format!("topic vector sums to {sum}, expected 1"));
    }
    Ok(())
}

impl SimpleGraph for TopicGraph {
    fn vertex_count(&self) -> usize {
        self.n
    }

    fn edge_count(&self) -> usize {
        self.edges.len()
    }

    fn induced_subgraph(&self, vs: &[VertexId]) -> Result<Self> {
        let keep = normalize_vertex_set(self.n, vs)?;
        let map = relabel_map(self.n, &keep);
        let edges = self
            .edges
            .iter()
            .filter_map(|e| {
                Some(TopicEdge { u: map[e.u]?, v: map[e.v]?, count: e.count, topics: e.topics.clone() })
            })
            .collect();
        Ok(Self::from_sorted(keep.len(), self.k, edges))
    }
}

/// How edges are weighted when averaging topic vectors into a profile.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum ProfileWeighting {
    /// Weight by message count: the profile is the topic distribution over messages.
    #[default]
    MessageCount,
    /// Every edge counts once.
    Unweighted,
}

impl ProfileWeighting {
    fn weight(self, e: &TopicEdge) -> f64 {
        match self {
            ProfileWeighting::MessageCount => e.count as f64,
            ProfileWeighting::Unweighted => 1.0,
        }
    }
}

/// Per-topic red/green assignment; `is_red[k - 1]` for topic `k`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TopicMap {
    is_red: Vec<bool>,
}

impl TopicMap {
    pub fn new(is_red: Vec<bool>) -> Self {
        TopicMap { is_red }
    }

    /// Red exactly where the red side's profile exceeds the green side's.
    pub fn from_profiles(red: &[f64], green: &[f64]) -> Self {
        TopicMap { is_red: red.iter().zip(green).map(|(r, g)| r - g > 0.0).collect() }
    }

    pub fn k(&self) -> usize {
        self.is_red.len()
    }

    /// Attribute of topic `k` (1-based).
    pub fn attr(&self, k: usize) -> EdgeAttr {
        if self.is_red[k - 1] {
            EdgeAttr::RED
        } else {
            EdgeAttr::GREEN
        }
    }

    pub fn red_topics(&self) -> Vec<usize> {
        (1..=self.k()).filter(|&k| self.is_red[k - 1]).collect()
    }
}

/// Acceptance thresholds: a partition is kept iff `Δρ > tau_rho` and `ΔP > tau_p`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScreeningThresholds {
    pub tau_rho: f64,
    pub tau_p: f64,
}

impl ScreeningThresholds {
    /// Rejects NaN; infinities are allowed (`-∞` accepts everything).
    pub fn new(tau_rho: f64, tau_p: f64) -> Result<Self> {
        if tau_rho.is_nan() || tau_p.is_nan() {
            return Err(Error::input("thresholds must not be NaN"));
        }
        Ok(ScreeningThresholds { tau_rho, tau_p })
    }

    pub fn accepts(&self, delta_rho: f64, delta_p: f64) -> bool {
        delta_rho > self.tau_rho && delta_p > self.tau_p
    }
}

impl Default for ScreeningThresholds {
    fn default() -> Self {
        ScreeningThresholds { tau_rho: 0.1, tau_p: 0.2 }
    }
}

/// Fraction of possible pairs present, separately for red-internal and
/// green-internal pairs and each edge attribute.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimatedRates {
    pub p_hat_1: f64,
    pub p_hat_2: f64,
    pub s_hat_1: f64,
    pub s_hat_2: f64,
}

fn check_sides(part: &Partition, n: usize) -> Result<()> {
    if part.n() != n {
        return Err(Error::input(format!("partition covers {} vertices, graph has {n}", part.n())));
    }
    for side in [part.red_set(), part.green_set()] {
        if side.len() < 2 {
            return Err(Error::UndefinedDensity(side.len()));
        }
    }
    Ok(())
}

/// Edge counts inside each side of a partition.
fn internal_counts(g: &TopicGraph, is_red: &[bool]) -> (usize, usize) {
    let mut red = 0;
    let mut green = 0;
    for e in &g.edges {
        match (is_red[e.u], is_red[e.v]) {
            (true, true) => red += 1,
            (false, false) => green += 1,
            _ => {}
        }
    }
    (red, green)
}

/// `ρ(red side) - ρ(green side)` of the induced subgraphs.
pub fn delta_rho(g: &TopicGraph, part: &Partition) -> Result<f64> {
    check_sides(part, g.n)?;
    let (red, green) = internal_counts(g, &part.membership());
    Ok(red as f64 / pair_count(part.red_set().len()) as f64
        - green as f64 / pair_count(part.green_set().len()) as f64)
}

/// Weighted mean topic vector over the edges selected by `keep`, in edge order.
fn profile_where(
    g: &TopicGraph,
    weighting: ProfileWeighting,
    mut keep: impl FnMut(&TopicEdge) -> bool,
) -> Result<Vec<f64>> {
    let mut acc = vec![0.0; g.k];
    let mut total = 0.0;
    for e in g.edges.iter().filter(|e| keep(e)) {
        let w = weighting.weight(e);
        total += w;
        for (a, t) in acc.iter_mut().zip(&e.topics) {
            *a += w * t;
        }
    }
    if total == 0.0 {
        return Err(Error::EmptyProfile);
    }
    acc.iter_mut().for_each(|a| *a /= total);
    Ok(acc)
}

/// Topic profile of the subgraph induced by `vs`.
pub fn topic_profile(g: &TopicGraph, vs: &[VertexId], weighting: ProfileWeighting) -> Result<Vec<f64>> {
    let keep = normalize_vertex_set(g.n, vs)?;
    let mut inside = vec![false; g.n];
    for v in keep {
        inside[v] = true;
    }
    profile_where(g, weighting, |e| inside[e.u] && inside[e.v])
}

fn l1(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum()
}

/// L1 distance between the red-side and green-side topic profiles.
pub fn delta_p(g: &TopicGraph, part: &Partition, weighting: ProfileWeighting) -> Result<f64> {
    let red = topic_profile(g, part.red_set(), weighting)?;
    let green = topic_profile(g, part.green_set(), weighting)?;
    Ok(l1(&red, &green))
}

/// A partition that passed screening.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AcceptedPartition {
    /// Index of the draw that produced it.
    pub draw: u64,
    pub partition: Partition,
    pub topic_map: TopicMap,
    pub delta_rho: f64,
    pub delta_p: f64,
    pub red_profile: Vec<f64>,
    pub green_profile: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScreeningOutcome {
    /// In draw order.
    pub accepted: Vec<AcceptedPartition>,
    pub attempts: u64,
    /// Draws where one side had no internal edge, so `ΔP` was undefined.
    pub undefined: u64,
    pub weighting: ProfileWeighting,
}

impl ScreeningOutcome {
    pub fn acceptance_rate(&self) -> f64 {
        if self.attempts == 0 {
            0.0
        } else {
            self.accepted.len() as f64 / self.attempts as f64
        }
    }
}

/// Precomputed sums that make one screening draw cost `O(Σ deg(red) · K)`.
struct ScreeningIndex {
    /// `weight(e) · topics(e)`, flattened `[edge][topic]`.
    weighted: Vec<f64>,
    weights: Vec<f64>,
    total: Vec<f64>,
    total_weight: f64,
}

impl ScreeningIndex {
    fn new(g: &TopicGraph, weighting: ProfileWeighting) -> Self {
        let mut weighted = Vec::with_capacity(g.edges.len() * g.k);
        let mut weights = Vec::with_capacity(g.edges.len());
        let mut total = vec![0.0; g.k];
        for e in &g.edges {
            let w = weighting.weight(e);
            weights.push(w);
            for (t, x) in total.iter_mut().zip(&e.topics) {
                *t += w * x;
                weighted.push(w * x);
            }
        }
        let total_weight = weights.iter().sum();
        ScreeningIndex { weighted, weights, total, total_weight }
    }
}

struct Scratch {
    is_red: Vec<bool>,
    red_sum: Vec<f64>,
    cross_sum: Vec<f64>,
}

enum Draw {
    Rejected,
    Undefined,
    Accepted(AcceptedPartition),
}

/// Slack on the fast `ΔP` pre-filter; survivors are re-checked exactly.
const PREFILTER_SLACK: f64 = 1e-9;

#[allow(clippy::too_many_arguments)]
fn screen_one(
    g: &TopicGraph,
    idx: &ScreeningIndex,
    m: usize,
    thresholds: &ScreeningThresholds,
    weighting: ProfileWeighting,
    seed: u64,
    draw: u64,
    scratch: &mut Scratch,
) -> Result<Draw> {
    let k = g.k;
    let mut rng = seed::rng_at(seed, &[draw]);
    let mut red: Vec<VertexId> = index::sample(&mut rng, g.n, m).into_vec();
    red.sort_unstable();

    scratch.is_red.iter_mut().for_each(|b| *b = false);
    for &v in &red {
        scratch.is_red[v] = true;
    }
    scratch.red_sum.iter_mut().for_each(|x| *x = 0.0);
    scratch.cross_sum.iter_mut().for_each(|x| *x = 0.0);
    let (mut red_edges, mut cross_edges) = (0usize, 0usize);
    let (mut red_w, mut cross_w) = (0.0, 0.0);
    for &u in &red {
        for &(v, e) in g.neighbors(u) {
            let row = &idx.weighted[e * k..(e + 1) * k];
            if scratch.is_red[v] {
                if u < v {
                    red_edges += 1;
                    red_w += idx.weights[e];
                    scratch.red_sum.iter_mut().zip(row).for_each(|(a, x)| *a += x);
                }
            } else {
                cross_edges += 1;
                cross_w += idx.weights[e];
                scratch.cross_sum.iter_mut().zip(row).for_each(|(a, x)| *a += x);
            }
        }
    }
    let green_edges = g.edges.len() - red_edges - cross_edges;
    let d_rho = red_edges as f64 / pair_count(m) as f64 - green_edges as f64 / pair_count(g.n - m) as f64;
    if d_rho <= thresholds.tau_rho {
        return Ok(Draw::Rejected);
    }
    if red_edges == 0 || green_edges == 0 {
        return Ok(Draw::Undefined);
    }
    let green_w = idx.total_weight - red_w - cross_w;
    let approx: f64 = (0..k)
        .map(|t| {
            let green = (idx.total[t] - scratch.red_sum[t] - scratch.cross_sum[t]) / green_w;
            (scratch.red_sum[t] / red_w - green).abs()
        })
        .sum();
    if approx <= thresholds.tau_p - PREFILTER_SLACK {
        return Ok(Draw::Rejected);
    }

    let is_red = &scratch.is_red;
    let red_profile = profile_where(g, weighting, |e| is_red[e.u] && is_red[e.v])?;
    let green_profile = profile_where(g, weighting, |e| !is_red[e.u] && !is_red[e.v])?;
    let d_p = l1(&red_profile, &green_profile);
    if !thresholds.accepts(d_rho, d_p) {
        return Ok(Draw::Rejected);
    }
    Ok(Draw::Accepted(AcceptedPartition {
        draw,
        partition: Partition::new(g.n, &red)?,
        topic_map: TopicMap::from_profiles(&red_profile, &green_profile),
        delta_rho: d_rho,
        delta_p: d_p,
        red_profile,
        green_profile,
    }))
}

/// Draws `max_attempts` uniform `m`-subsets as red sets and keeps those that
/// pass `thresholds`. Draw `i` uses `seed::derive(seed, &[i])`.
pub fn screen_partitions(
    g: &TopicGraph,
    m: usize,
    thresholds: &ScreeningThresholds,
    max_attempts: u64,
    seed: u64,
    weighting: ProfileWeighting,
) -> Result<ScreeningOutcome> {
    if m < 2 || m + 2 > g.n {
        return Err(Error::input(format!("need 2 <= m <= n - 2, got m = {m}, n = {}", g.n)));
    }
    let idx = ScreeningIndex::new(g, weighting);
    let draws = (0..max_attempts)
        .into_par_iter()
        .map_init(
            || Scratch { is_red: vec![false; g.n], red_sum: vec![0.0; g.k], cross_sum: vec![0.0; g.k] },
            |scratch, i| screen_one(g, &idx, m, thresholds, weighting, seed, i, scratch),
        )
        .filter(|d| !matches!(d, Ok(Draw::Rejected)))
        .collect::<Result<Vec<_>>>()?;
    let mut accepted = Vec::new();
    let mut undefined = 0;
    for d in draws {
        match d {
            Draw::Accepted(a) => accepted.push(a),
            Draw::Undefined => undefined += 1,
            Draw::Rejected => {}
        }
    }
    Ok(ScreeningOutcome { accepted, attempts: max_attempts, undefined, weighting })
}

/// Draws one topic per edge from its distribution and maps it through `map`.
/// Vertex truth comes from `part`; every vertex is left occluded.
///
/// Edges consume one uniform draw each, in edge order.
pub fn instantiate_edges(g: &TopicGraph, part: &Partition, map: &TopicMap, seed: u64) -> Result<AttributedGraph> {
    if map.k() != g.k {
        return Err(Error::input(format!("topic map covers {} topics, graph has {}", map.k(), g.k)));
    }
    if part.n() != g.n {
        return Err(Error::input("partition and graph disagree on vertex count"));
    }
    let mut rng = seed::rng(seed);
    let edges = g
        .edges
        .iter()
        .map(|e| {
            let x: f64 = rng.random();
            let mut acc = 0.0;
            // Fall back to the last topic with mass if rounding leaves x above the total.
            let mut topic = e.topics.iter().rposition(|&p| p > 0.0).unwrap_or(0) + 1;
            for (i, &p) in e.topics.iter().enumerate() {
                acc += p;
                if x < acc {
                    topic = i + 1;
                    break;
                }
            }
            (e.u, e.v, map.attr(topic))
        })
        .collect();
    Ok(AttributedGraph::from_sorted_edges(2, edges, part.truth_layer(), vec![VertexAttr::Occluded; g.n]))
}

/// `p̂`, `ŝ`: fraction of the possible internal pairs of each side that carry
/// each attribute. Cross-side edges are ignored.
pub fn estimate_rates(g: &AttributedGraph, part: &Partition) -> Result<EstimatedRates> {
    check_sides(part, g.n())?;
    let is_red = part.membership();
    let mut counts = [[0usize; 2]; 2]; // [side][attr], side 0 = green
    for &(u, v, a) in g.edges() {
        if is_red[u] != is_red[v] {
            continue;
        }
        let attr = match a {
            EdgeAttr::RED => 0,
            EdgeAttr::GREEN => 1,
            _ => continue,
        };
        counts[is_red[u] as usize][attr] += 1;
    }
    let green_pairs = pair_count(part.green_set().len()) as f64;
    let red_pairs = pair_count(part.red_set().len()) as f64;
    Ok(EstimatedRates {
        p_hat_1: counts[0][0] as f64 / green_pairs,
        p_hat_2: counts[0][1] as f64 / green_pairs,
        s_hat_1: counts[1][0] as f64 / red_pairs,
        s_hat_2: counts[1][1] as f64 / red_pairs,
    })
}

/// Replicate-averaged results for one accepted partition.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PartitionTrial {
    pub draw: u64,
    pub delta_rho: f64,
    pub delta_p: f64,
    /// Mean estimates over this partition's instantiations.
    pub rates: EstimatedRates,
    /// Mean S@1, RR, AP per weight (grid order).
    pub s_at_1: Vec<f64>,
    pub rr: Vec<f64>,
    pub ap: Vec<f64>,
    /// `ap_y[j][y - 1]`.
    pub ap_y: Vec<Vec<f64>>,
}

/// Lower-left corner of a `(Δρ, ΔP)` bin, as integer multiples of the bin width.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct BinKey {
    pub rho: i64,
    pub p: i64,
}

impl BinKey {
    /// Half-open bins `[a, a + width)`.
    pub fn of(delta_rho: f64, delta_p: f64, width: f64) -> Self {
        BinKey { rho: bin_index(delta_rho, width), p: bin_index(delta_p, width) }
    }
}

/// `i·width`, computed as a division so widths like 0.1 give clean edges.
fn bin_edge(i: i64, width: f64) -> f64 {
    i as f64 / (1.0 / width)
}

fn bin_index(x: f64, width: f64) -> i64 {
    // The epsilon keeps values like 0.3 (stored as 0.299999...) in bin 3.
    (x / width + 1e-9).floor() as i64
}

/// Per-bin aggregate over partitions; standard errors are across partitions.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BinReport {
    pub key: BinKey,
    pub rho_range: (f64, f64),
    pub p_range: (f64, f64),
    pub partitions: usize,
    /// Fewer than [`MIN_PARTITIONS_PER_BIN`] partitions.
    pub insufficient: bool,
    pub reports: Vec<AggregateReport>,
    /// MAP-maximizing weight in this bin.
    pub gamma_star: f64,
    /// `min(MRR(0), MRR(1)) - MRR(0.5)` when the grid holds all three weights.
    pub fusion_advantage: Option<f64>,
}

impl BinReport {
    pub fn report_at(&self, gamma: f64) -> Option<&AggregateReport> {
        self.reports.iter().find(|r| r.gamma == gamma)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ImportanceReport {
    pub gammas: Vec<f64>,
    pub bin_width: f64,
    pub m_prime: usize,
    pub replicates_per_partition: usize,
    pub trials: Vec<PartitionTrial>,
    /// Sorted by key.
    pub bins: Vec<BinReport>,
}

fn run_partition(
    g: &TopicGraph,
    acc: &AcceptedPartition,
    ordinal: u64,
    m_prime: usize,
    grid: &[FusionWeight],
    replicates: usize,
    seed: u64,
) -> Result<PartitionTrial> {
    let reds = acc.partition.red_set();
    let mut s1 = vec![Accumulator::default(); grid.len()];
    let mut rr = s1.clone();
    let mut ap = s1.clone();
    let mut ap_y = vec![vec![Accumulator::default(); reds.len() - m_prime]; grid.len()];
    let mut rates = [Accumulator::default(); 4];
    for r in 0..replicates as u64 {
        let rep_seed = seed::derive(seed, &[ordinal, r]);
        let full = instantiate_edges(g, &acc.partition, &acc.topic_map, seed::derive(rep_seed, &[stream::EDGES]))?;
        let est = estimate_rates(&full, &acc.partition)?;
        for (a, x) in rates.iter_mut().zip([est.p_hat_1, est.p_hat_2, est.s_hat_1, est.s_hat_2]) {
            a.push(x);
        }
        let mut rng = seed::rng_at(rep_seed, &[stream::IDENTIFIED]);
        let identified: Vec<VertexId> =
            index::sample(&mut rng, reds.len(), m_prime).iter().map(|i| reds[i]).collect();
        let graph = full.with_identified(&identified)?;
        let stats = CandidateStats::compute(&graph);
        let truth = TruthSet::from_graph(&graph);
        let tie_seed = seed::derive(rep_seed, &[stream::TIES]);
        let keys = tie_keys(stats.len(), tie_seed);
        for (j, &w) in grid.iter().enumerate() {
            let ranking = rank_with_stats(&stats, w, &keys, tie_seed);
            let rep = EvalReport::from_hits(&truth.hits(&ranking))?;
            s1[j].push(rep.s_at_1 as u8 as f64);
            rr[j].push(rep.rr);
            ap[j].push(rep.ap);
            for (a, &v) in ap_y[j].iter_mut().zip(&rep.ap_y) {
                a.push(v);
            }
        }
    }
    let means = |v: &[Accumulator]| v.iter().map(|a| a.stat().mean).collect::<Vec<_>>();
    let r = means(&rates);
    Ok(PartitionTrial {
        draw: acc.draw,
        delta_rho: acc.delta_rho,
        delta_p: acc.delta_p,
        rates: EstimatedRates { p_hat_1: r[0], p_hat_2: r[1], s_hat_1: r[2], s_hat_2: r[3] },
        s_at_1: means(&s1),
        rr: means(&rr),
        ap: means(&ap),
        ap_y: ap_y.iter().map(|row| means(row)).collect(),
    })
}

/// Aggregates a set of partition trials (one bin).
fn aggregate_trials(trials: &[&PartitionTrial], grid: &[FusionWeight]) -> Vec<AggregateReport> {
    grid.iter()
        .enumerate()
        .map(|(j, w)| {
            let stat = |f: &dyn Fn(&PartitionTrial) -> f64| -> Stat {
                let mut a = Accumulator::default();
                trials.iter().for_each(|t| a.push(f(t)));
                a.stat()
            };
            let ys = trials.first().map_or(0, |t| t.ap_y[j].len());
            AggregateReport {
                gamma: w.gamma(),
                replicates: trials.len(),
                s_at_1: stat(&|t| t.s_at_1[j]),
                mrr: stat(&|t| t.rr[j]),
                map: stat(&|t| t.ap[j]),
                ap_y: (0..ys).map(|y| stat(&|t| t.ap_y[j][y])).collect(),
            }
        })
        .collect()
}

/// For every accepted partition and replicate: instantiate edges, draw the
/// identified set, rank at every weight and evaluate. Results are averaged per
/// partition and then binned on `(Δρ, ΔP)` with square bins of side `bin_width`.
#[allow(clippy::too_many_arguments)]
pub fn run_importance_trials(
    g: &TopicGraph,
    accepted: &[AcceptedPartition],
    m_prime: usize,
    grid: &[FusionWeight],
    replicates_per_partition: usize,
    bin_width: f64,
    seed: u64,
) -> Result<ImportanceReport> {
    if !(bin_width > 0.0 && bin_width.is_finite()) {
        return Err(Error::input("bin width must be positive"));
    }
    if accepted.is_empty() {
        return Err(Error::input("no accepted partitions to run"));
    }
    if grid.is_empty() {
        return Err(Error::input("empty fusion-weight grid"));
    }
    if replicates_per_partition == 0 {
        return Err(Error::input("replicates must be at least 1"));
    }
    if let Some(a) = accepted.iter().find(|a| m_prime == 0 || m_prime >= a.partition.red_set().len()) {
        return Err(Error::input(format!(
            "need 1 <= m' < m, got m' = {m_prime}, m = {}",
            a.partition.red_set().len()
        )));
    }
    let trials = accepted
        .par_iter()
        .enumerate()
        .map(|(i, a)| run_partition(g, a, i as u64, m_prime, grid, replicates_per_partition, seed))
        .collect::<Result<Vec<_>>>()?;

    let mut groups: BTreeMap<BinKey, Vec<&PartitionTrial>> = BTreeMap::new();
    for t in &trials {
        groups.entry(BinKey::of(t.delta_rho, t.delta_p, bin_width)).or_default().push(t);
    }
    let position = |gamma: f64| grid.iter().position(|w| w.gamma() == gamma);
    let bins = groups
        .into_iter()
        .map(|(key, members)| {
            let reports = aggregate_trials(&members, grid);
            let maps: Vec<f64> = reports.iter().map(|r| r.map.mean).collect();
            let fusion_advantage = match (position(0.0), position(1.0), position(0.5)) {
                (Some(a), Some(b), Some(h)) => {
                    Some(reports[a].mrr.mean.min(reports[b].mrr.mean) - reports[h].mrr.mean)
                }
                _ => None,
            };
            let range = |i: i64| (bin_edge(i, bin_width), bin_edge(i + 1, bin_width));
            BinReport {
                key,
                rho_range: range(key.rho),
                p_range: range(key.p),
                partitions: members.len(),
                insufficient: members.len() < MIN_PARTITIONS_PER_BIN,
                gamma_star: grid[argmax_gamma(grid, &maps)].gamma(),
                reports,
                fusion_advantage,
            }
        })
        .collect();
    Ok(ImportanceReport {
        gammas: grid.iter().map(FusionWeight::gamma).collect(),
        bin_width,
        m_prime,
        replicates_per_partition,
        trials,
        bins,
    })
}

/// Which estimated rate to bin MRR against.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum RateComponent {
    P1,
    P2,
    S1,
    S2,
}

impl RateComponent {
    pub const ALL: [RateComponent; 4] = [RateComponent::P1, RateComponent::P2, RateComponent::S1, RateComponent::S2];

    pub fn of(self, r: &EstimatedRates) -> f64 {
        match self {
            RateComponent::P1 => r.p_hat_1,
            RateComponent::P2 => r.p_hat_2,
            RateComponent::S1 => r.s_hat_1,
            RateComponent::S2 => r.s_hat_2,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            RateComponent::P1 => "p_hat_1",
            RateComponent::P2 => "p_hat_2",
            RateComponent::S1 => "s_hat_1",
            RateComponent::S2 => "s_hat_2",
        }
    }
}

/// Mean MRR per weight over partitions whose estimate falls in `[lower, lower + width)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimateBin {
    pub component: RateComponent,
    pub lower: f64,
    pub partitions: usize,
    pub insufficient: bool,
    pub mrr: Vec<f64>,
}

pub fn bin_by_estimate(report: &ImportanceReport, component: RateComponent, width: f64) -> Result<Vec<EstimateBin>> {
    if width.is_nan() || width <= 0.0 {
        return Err(Error::input("bin width must be positive"));
    }
    let mut groups: BTreeMap<i64, Vec<&PartitionTrial>> = BTreeMap::new();
    for t in &report.trials {
        let b = (component.of(&t.rates) / width + 1e-9).floor() as i64;
        groups.entry(b).or_default().push(t);
    }
    Ok(groups
        .into_iter()
        .map(|(b, members)| EstimateBin {
            component,
            lower: bin_edge(b, width),
            partitions: members.len(),
            insufficient: members.len() < MIN_PARTITIONS_PER_BIN,
            mrr: (0..report.gammas.len())
                .map(|j| members.iter().map(|t| t.rr[j]).sum::<f64>() / members.len() as f64)
                .collect(),
        })
        .collect())
}
