//! Context, content and linear-fusion statistics, and candidate ranking.

use std::ops::Range;

use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::experiments;
use crate::graph::{AttributedGraph, VertexAttr, VertexId};
use crate::kappa::KappaParams;
use crate::metrics::Criterion;
use crate::seed;

/// Weight `γ ∈ [0, 1]` on the content statistic.
///
/// When `γ` is a decimal with at most nine digits the weight also keeps the
/// exact rational `num/den`, so fused scores of integer statistics compare
/// exactly.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FusionWeight {
    gamma: f64,
    #[serde(skip)]
    rational: Option<(i64, i64)>,
}

impl FusionWeight {
    pub fn new(gamma: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&gamma) {
            return Err(Error::input(format!("fusion weight {gamma} outside [0, 1]")));
        }
        let mut rational = None;
        let mut den: i64 = 1;
        while den <= 1_000_000_000 {
            let num = (gamma * den as f64).round();
            if num / den as f64 == gamma {
                rational = Some((num as i64, den));
                break;
            }
            den *= 10;
        }
        Ok(FusionWeight { gamma, rational })
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// `(1-γ)·t0 + γ·t1`. Rational weights are evaluated exactly and divided
    /// once, so equal fused values compare equal.
    pub fn fuse(&self, t0: u32, t1: u32) -> f64 {
        match self.rational {
            Some((_, den)) => self.sort_key(t0, t1) / den as f64,
            None => (1.0 - self.gamma) * t0 as f64 + self.gamma * t1 as f64,
        }
    }

    /// Monotone image of the fused score, exact when the weight is rational.
    ///
    /// The rational form `(den-num)·t0 + num·t1` stays below 2^53 for any
    /// realistic degree, so the `f64` holds an exact integer.
    fn sort_key(&self, t0: u32, t1: u32) -> f64 {
        match self.rational {
            Some((num, den)) => ((den - num) * t0 as i64 + num * t1 as i64) as f64,
            None => (1.0 - self.gamma) * t0 as f64 + self.gamma * t1 as f64,
        }
    }
}

/// The default search grid `{0.00, 0.01, ..., 1.00}`.
pub fn default_grid() -> Vec<FusionWeight> {
    grid(101)
}

/// `points` evenly spaced weights from 0 to 1 inclusive.
pub fn grid(points: usize) -> Vec<FusionWeight> {
    assert!(points >= 2, "a grid needs both endpoints");
    let last = (points - 1) as f64;
    (0..points)
        .map(|i| {
            // Round through a decimal so 0.07 is 0.07, not 0.07000000000000001.
            let g = ((i as f64 / last) * 1e9).round() / 1e9;
            FusionWeight::new(g).expect("grid point lies in [0, 1]")
        })
        .collect()
}

/// Candidates ordered by fused score, best first.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Ranking {
    pub ordered: Vec<VertexId>,
    /// Fused score of `ordered[i]`.
    pub scores: Vec<f64>,
    /// Index ranges of `ordered` whose scores tied; only groups of two or more.
    pub tie_groups: Vec<Range<usize>>,
    pub seed_used: u64,
}

impl Ranking {
    pub fn len(&self) -> usize {
        self.ordered.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ordered.is_empty()
    }
}

fn check_candidate(g: &AttributedGraph, v: VertexId) -> Result<()> {
    if v >= g.n() {
        return Err(Error::input(format!("unknown vertex id {v}")));
    }
    if g.observed(v) != VertexAttr::Occluded {
        return Err(Error::input(format!("vertex {v} is identified, not a candidate")));
    }
    Ok(())
}

/// Context statistic: number of identified neighbours of `v`.
pub fn t0(g: &AttributedGraph, v: VertexId) -> Result<u32> {
    check_candidate(g, v)?;
    Ok(t0_unchecked(g, v))
}

/// Content statistic: number of red-attributed edges incident to `v`.
pub fn t1(g: &AttributedGraph, v: VertexId) -> Result<u32> {
    check_candidate(g, v)?;
    Ok(t1_unchecked(g, v))
}

pub fn t_gamma(g: &AttributedGraph, v: VertexId, w: FusionWeight) -> Result<f64> {
    Ok(w.fuse(t0(g, v)?, t1(g, v)?))
}

fn t0_unchecked(g: &AttributedGraph, v: VertexId) -> u32 {
    g.neighbors(v)
        .iter()
        .filter(|&&(u, _)| g.observed(u) == VertexAttr::Red)
        .count() as u32
}

fn t1_unchecked(g: &AttributedGraph, v: VertexId) -> u32 {
    g.neighbors(v).iter().filter(|&&(_, a)| a.is_red()).count() as u32
}

/// Both statistics for every candidate, computed once and reused across weights.
#[derive(Clone, Debug, PartialEq)]
pub struct CandidateStats {
    pub ids: Vec<VertexId>,
    pub t0: Vec<u32>,
    pub t1: Vec<u32>,
}

impl CandidateStats {
    pub fn compute(g: &AttributedGraph) -> Self {
        let ids = g.candidate_set();
        let t0 = ids.iter().map(|&v| t0_unchecked(g, v)).collect();
        let t1 = ids.iter().map(|&v| t1_unchecked(g, v)).collect();
        CandidateStats { ids, t0, t1 }
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }
}

/// Per-candidate random keys used to order ties; one key per candidate, in
/// candidate order, drawn from `seed`.
pub fn tie_keys(n_candidates: usize, seed: u64) -> Vec<u64> {
    let mut rng = seed::rng(seed);
    (0..n_candidates).map(|_| rng.next_u64()).collect()
}

/// Ranks precomputed candidates. Ties in the fused score fall back to the
/// random keys, then to the vertex id.
pub fn rank_with_stats(stats: &CandidateStats, w: FusionWeight, keys: &[u64], seed_used: u64) -> Ranking {
    debug_assert_eq!(keys.len(), stats.len());
    let sort_keys: Vec<f64> = (0..stats.len()).map(|i| w.sort_key(stats.t0[i], stats.t1[i])).collect();
    let mut order: Vec<usize> = (0..stats.len()).collect();
    order.sort_unstable_by(|&a, &b| {
        sort_keys[b]
            .total_cmp(&sort_keys[a])
            .then(keys[a].cmp(&keys[b]))
            .then(stats.ids[a].cmp(&stats.ids[b]))
    });

    let mut tie_groups = Vec::new();
    let mut start = 0;
    for i in 1..=order.len() {
        if i == order.len() || sort_keys[order[i]] != sort_keys[order[start]] {
            if i - start >= 2 {
                tie_groups.push(start..i);
            }
            start = i;
        }
    }

    Ranking {
        ordered: order.iter().map(|&i| stats.ids[i]).collect(),
        scores: order.iter().map(|&i| w.fuse(stats.t0[i], stats.t1[i])).collect(),
        tie_groups,
        seed_used,
    }
}

/// Ranks the candidate set by `T^γ`, breaking ties uniformly at random under `seed`.
pub fn rank_candidates(g: &AttributedGraph, w: FusionWeight, seed: u64) -> Result<Ranking> {
    let stats = CandidateStats::compute(g);
    if stats.is_empty() {
        return Err(Error::input("the graph has no candidate vertices"));
    }
    let keys = tie_keys(stats.len(), seed);
    Ok(rank_with_stats(&stats, w, &keys, seed))
}

/// Index of the best value; ties go to the smallest `γ`.
pub fn argmax_gamma(grid: &[FusionWeight], values: &[f64]) -> usize {
    assert_eq!(grid.len(), values.len());
    assert!(!grid.is_empty());
    let mut best = 0;
    for i in 1..grid.len() {
        let better = values[i] > values[best]
            || (values[i] == values[best] && grid[i].gamma() < grid[best].gamma());
        if better {
            best = i;
        }
    }
    best
}

/// Grid point maximizing the Monte Carlo mean of `criterion` under κ(`params`).
pub fn gamma_star(
    params: &KappaParams,
    grid: &[FusionWeight],
    criterion: Criterion,
    replicates: usize,
    seed: u64,
) -> Result<FusionWeight> {
    if grid.is_empty() {
        return Err(Error::input("empty fusion-weight grid"));
    }
    if !matches!(criterion, Criterion::SuccessAt1 | Criterion::Mrr | Criterion::Map) {
        return Err(Error::input(format!("γ* is searched over S@1, MRR or MAP, not {criterion}")));
    }
    if grid.len() == 1 {
        return Ok(grid[0]);
    }
    let agg = experiments::run_cell(params, grid, replicates, seed, 0)?;
    let means: Vec<f64> = agg.iter().map(|a| a.stat(criterion).mean).collect();
    Ok(grid[argmax_gamma(grid, &means)])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::EdgeAttr;
    use proptest::prelude::*;

    /// Vertex 0 is a candidate joined to identified reds 1-3 and to
    /// candidates 4-5. Edge topics around 0 are (1, 1, 2, 1, 1).
    fn star() -> AttributedGraph {
        let r = EdgeAttr::RED;
        let gr = EdgeAttr::GREEN;
        let mut truth = vec![VertexAttr::Red; 6];
        truth[5] = VertexAttr::Green;
        let mut observed = vec![VertexAttr::Occluded; 6];
        observed[1..=3].fill(VertexAttr::Red);
        AttributedGraph::new(
            2,
            [(0, 1, r), (0, 2, r), (0, 3, gr), (0, 4, r), (0, 5, r), (4, 5, gr), (4, 1, gr)],
            truth,
            observed,
        )
        .unwrap()
    }

    #[test]
    fn statistics_on_star() {
        let g = star();
        assert_eq!(t0(&g, 0).unwrap(), 3);
        assert_eq!(t1(&g, 0).unwrap(), 4);
        assert_eq!(t0(&g, 5).unwrap(), 0);
        assert_eq!(t1(&g, 5).unwrap(), 1);
        assert!(t0(&g, 1).is_err());
        assert!(t1(&g, 9).is_err());
        let half = FusionWeight::new(0.5).unwrap();
        assert_eq!(t_gamma(&g, 0, half).unwrap(), 3.5);
        assert_eq!(t_gamma(&g, 0, FusionWeight::new(0.0).unwrap()).unwrap(), 3.0);
        assert_eq!(t_gamma(&g, 0, FusionWeight::new(1.0).unwrap()).unwrap(), 4.0);
    }

    #[test]
    fn fused_arithmetic() {
        let w = FusionWeight::new(0.5).unwrap();
        assert_eq!(w.fuse(3, 5), 4.0);
        assert!(FusionWeight::new(1.5).is_err());
        assert!(FusionWeight::new(-0.1).is_err());
    }

    #[test]
    fn content_statistic_counts_red_edges_only() {
        // v = 0 with topics (1, 1, 2, 1) -> 3
        let e = |a| EdgeAttr::new(a).unwrap();
        let g = AttributedGraph::new(
            2,
            [(0, 1, e(1)), (0, 2, e(1)), (0, 3, e(2)), (0, 4, e(1))],
            vec![VertexAttr::Red; 5],
            {
                let mut o = vec![VertexAttr::Occluded; 5];
                o[4] = VertexAttr::Red;
                o
            },
        )
        .unwrap();
        assert_eq!(t1(&g, 0).unwrap(), 3);
        assert_eq!(t1(&g, 3).unwrap(), 0);
    }

    #[test]
    fn grid_points_are_clean_decimals() {
        let g = default_grid();
        assert_eq!(g.len(), 101);
        assert_eq!(g[7].gamma(), 0.07);
        assert_eq!(g[100].gamma(), 1.0);
        assert!(g.iter().all(|w| w.rational.is_some()));
    }

    #[test]
    fn exact_ties_at_rational_weights() {
        // 0.1*... : with floats, 0.9*1 + 0.1*10 and 0.9*2 + 0.1*1 ... compare
        // the rational form: (9*1 + 1*10) = 19 vs (9*2 + 1*1) = 19.
        let w = FusionWeight::new(0.1).unwrap();
        assert_eq!(w.sort_key(1, 10), w.sort_key(2, 1));
        let stats = CandidateStats { ids: vec![0, 1], t0: vec![1, 2], t1: vec![10, 1] };
        let r = rank_with_stats(&stats, w, &[5, 3], 0);
        assert_eq!(r.tie_groups, vec![0..2]);
        assert_eq!(r.ordered, vec![1, 0]);
    }

    #[test]
    fn distinct_scores_rank_by_score() {
        let stats = CandidateStats { ids: vec![10, 11, 12], t0: vec![3, 2, 0], t1: vec![5, 2, 9] };
        let w = FusionWeight::new(0.5).unwrap();
        let a = rank_with_stats(&stats, w, &tie_keys(3, 1), 1);
        let b = rank_with_stats(&stats, w, &tie_keys(3, 2), 2);
        assert_eq!(a.ordered, vec![12, 10, 11]);
        assert_eq!(a.ordered, b.ordered);
        assert_eq!(a.scores, vec![4.5, 4.0, 2.0]);
        assert!(a.tie_groups.is_empty());
    }

    #[test]
    fn empty_candidate_set_is_an_error() {
        let g = AttributedGraph::new(2, [], vec![VertexAttr::Red; 2], vec![VertexAttr::Red; 2]).unwrap();
        assert!(rank_candidates(&g, FusionWeight::new(0.5).unwrap(), 0).is_err());
    }

    #[test]
    fn full_tie_is_uniform() {
        // Empty graph, 5 candidates: each should lead 1/5 of the time.
        let mut observed = vec![VertexAttr::Occluded; 6];
        observed[0] = VertexAttr::Red;
        let g = AttributedGraph::new(2, [], vec![VertexAttr::Red; 6], observed).unwrap();
        let w = FusionWeight::new(0.5).unwrap();
        let trials = 10_000;
        let mut first = [0u32; 6];
        for s in 0..trials {
            let r = rank_candidates(&g, w, s).unwrap();
            assert_eq!(r.tie_groups, vec![0..5]);
            first[r.ordered[0]] += 1;
        }
        let p = 0.2;
        let sd = (trials as f64 * p * (1.0 - p)).sqrt();
        for &c in &first[1..] {
            assert!((c as f64 - trials as f64 * p).abs() < 3.0 * sd, "{first:?}");
        }
        assert_eq!(first[0], 0);
    }

    #[test]
    fn argmax_prefers_smallest_gamma() {
        let g: Vec<_> = [0.5, 0.0, 1.0].iter().map(|&x| FusionWeight::new(x).unwrap()).collect();
        assert_eq!(argmax_gamma(&g, &[0.3, 0.3, 0.1]), 1);
        assert_eq!(argmax_gamma(&g, &[0.3, 0.2, 0.4]), 2);
    }

    #[test]
    fn singleton_grid_short_circuits() {
        let p = crate::kappa::SimplexVec3::new(0.6, 0.2, 0.2).unwrap();
        let params = KappaParams::new(20, 6, 2, p, p).unwrap();
        let w = FusionWeight::new(0.5).unwrap();
        assert_eq!(gamma_star(&params, &[w], Criterion::Map, 3, 0).unwrap(), w);
        assert!(gamma_star(&params, &[w], Criterion::ApAt(2), 3, 0).is_err());
    }

    fn arb_stats() -> impl Strategy<Value = CandidateStats> {
        (1usize..20).prop_flat_map(|n| {
            (proptest::collection::vec(0u32..6, n), proptest::collection::vec(0u32..6, n)).prop_map(move |(t0, t1)| {
                CandidateStats { ids: (0..n).collect(), t0, t1 }
            })
        })
    }

    proptest! {
        #[test]
        fn ranking_is_a_sorted_permutation(stats in arb_stats(), g in 0u32..=100, seed in any::<u64>()) {
            let w = FusionWeight::new(g as f64 / 100.0).unwrap();
            let r = rank_with_stats(&stats, w, &tie_keys(stats.len(), seed), seed);
            let mut ids = r.ordered.clone();
            ids.sort_unstable();
            prop_assert_eq!(ids, stats.ids.clone());
            prop_assert!(r.scores.windows(2).all(|s| s[0] >= s[1]));
            for range in &r.tie_groups {
                prop_assert!(range.len() >= 2);
            }
        }

        #[test]
        fn endpoints_equal_single_statistic(stats in arb_stats(), seed in any::<u64>()) {
            let keys = tie_keys(stats.len(), seed);
            let zero = rank_with_stats(&stats, FusionWeight::new(0.0).unwrap(), &keys, seed);
            let t0_only = CandidateStats { t1: vec![0; stats.len()], ..stats.clone() };
            let by_t0 = rank_with_stats(&t0_only, FusionWeight::new(0.0).unwrap(), &keys, seed);
            prop_assert_eq!(zero.ordered, by_t0.ordered);

            let one = rank_with_stats(&stats, FusionWeight::new(1.0).unwrap(), &keys, seed);
            let t1_only = CandidateStats { t0: vec![0; stats.len()], ..stats.clone() };
            let by_t1 = rank_with_stats(&t1_only, FusionWeight::new(1.0).unwrap(), &keys, seed);
            prop_assert_eq!(one.ordered, by_t1.ordered);
        }

        #[test]
        fn scaling_statistics_preserves_order(stats in arb_stats(), seed in any::<u64>(), k in 1u32..5) {
            let keys = tie_keys(stats.len(), seed);
            let w = FusionWeight::new(0.3).unwrap();
            let base = rank_with_stats(&stats, w, &keys, seed);
            let scaled = CandidateStats {
                ids: stats.ids.clone(),
                t0: stats.t0.iter().map(|x| x * k).collect(),
                t1: stats.t1.iter().map(|x| x * k).collect(),
            };
            let r = rank_with_stats(&scaled, w, &keys, seed);
            prop_assert_eq!(base.ordered, r.ordered);
            prop_assert_eq!(base.tie_groups, r.tie_groups);
        }
    }
}
