//! Evaluation of rankings against the set of truly red candidates.
//!
//! The functions in [`hits`] work on a binary relevance list (`true` where the
//! ranked vertex is truly red) and are what the [`Ranking`]-level wrappers and
//! [`EvalReport`] reduce to.

use std::fmt;
use std::str::FromStr;

use rand::seq::index;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{AttributedGraph, VertexId};
use crate::nomination::Ranking;
use crate::seed;

/// Enumeration is used for chance baselines up to this many red placements.
pub const CHANCE_ENUMERATION_LIMIT: u64 = 1_000_000;
/// Sample count for Monte Carlo chance baselines.
pub const CHANCE_MC_SAMPLES: usize = 100_000;
const CHANCE_MC_SEED: u64 = 0x00C4_A4CE;

/// An evaluation criterion.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Criterion {
    /// Success at rank 1.
    SuccessAt1,
    /// Reciprocal rank (mean: MRR).
    Mrr,
    /// Average precision (mean: MAP).
    Map,
    /// Average precision truncated at the `y`-th red.
    ApAt(usize),
}

impl Criterion {
    /// The three main criteria, in report order.
    pub const MAIN: [Criterion; 3] = [Criterion::SuccessAt1, Criterion::Mrr, Criterion::Map];
}

impl fmt::Display for Criterion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Criterion::SuccessAt1 => f.write_str("s_at_1"),
            Criterion::Mrr => f.write_str("mrr"),
            Criterion::Map => f.write_str("map"),
            Criterion::ApAt(y) => write!(f, "ap@{y}"),
        }
    }
}

impl FromStr for Criterion {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "s_at_1" | "s@1" | "s1" => Ok(Criterion::SuccessAt1),
            "mrr" | "rr" => Ok(Criterion::Mrr),
            "map" | "ap" => Ok(Criterion::Map),
            other => other
                .strip_prefix("ap@")
                .and_then(|y| y.parse().ok())
                .filter(|&y| y >= 1)
                .map(Criterion::ApAt)
                .ok_or_else(|| Error::input(format!("unknown criterion {s:?}"))),
        }
    }
}

/// Membership test for the truly red candidates.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TruthSet {
    member: Vec<bool>,
    count: usize,
}

impl TruthSet {
    pub fn from_ids(n: usize, ids: &[VertexId]) -> Result<Self> {
        let mut member = vec![false; n];
        for &v in ids {
            *member
                .get_mut(v)
                .ok_or_else(|| Error::input(format!("unknown vertex id {v}")))? = true;
        }
        let count = member.iter().filter(|&&b| b).count();
        Ok(TruthSet { member, count })
    }

    /// Truly red, occluded vertices of `g`.
    pub fn from_graph(g: &AttributedGraph) -> Self {
        TruthSet::from_ids(g.n(), &g.red_candidates()).expect("ids come from the graph")
    }

    pub fn contains(&self, v: VertexId) -> bool {
        self.member.get(v).copied().unwrap_or(false)
    }

    pub fn len(&self) -> usize {
        self.count
    }

    pub fn is_empty(&self) -> bool {
        self.count == 0
    }

    /// Relevance list for `ranking`.
    pub fn hits(&self, ranking: &Ranking) -> Vec<bool> {
        ranking.ordered.iter().map(|&v| self.contains(v)).collect()
    }

    fn check(&self, ranking: &Ranking) -> Result<Vec<bool>> {
        if self.is_empty() {
            return Err(Error::NoRedCandidates);
        }
        let hits = self.hits(ranking);
        if hits.iter().filter(|&&h| h).count() != self.count {
            return Err(Error::input("truth set is not a subset of the ranked candidates"));
        }
        Ok(hits)
    }
}

/// Metrics on binary relevance lists.
pub mod hits {
    use super::*;

    fn first_hit(hits: &[bool]) -> Result<usize> {
        hits.iter().position(|&h| h).ok_or(Error::NoRedCandidates)
    }

    pub fn success_at_1(hits: &[bool]) -> Result<bool> {
        first_hit(hits)?;
        Ok(hits[0])
    }

    pub fn reciprocal_rank(hits: &[bool]) -> Result<f64> {
        Ok(1.0 / (first_hit(hits)? + 1) as f64)
    }

    /// Fraction of reds among the first `rank` positions.
    pub fn precision_at(hits: &[bool], rank: usize) -> Result<f64> {
        if rank == 0 || rank > hits.len() {
            return Err(Error::input(format!("rank {rank} outside 1..={}", hits.len())));
        }
        Ok(hits[..rank].iter().filter(|&&h| h).count() as f64 / rank as f64)
    }

    pub fn average_precision(hits: &[bool]) -> Result<f64> {
        let reds = hits.iter().filter(|&&h| h).count();
        average_precision_at_y(hits, reds.max(1))
    }

    /// Average precision over the positions up to and including the `y`-th red.
    pub fn average_precision_at_y(hits: &[bool], y: usize) -> Result<f64> {
        first_hit(hits)?;
        let reds = hits.iter().filter(|&&h| h).count();
        if y == 0 || y > reds {
            return Err(Error::input(format!("y = {y} outside 1..={reds}")));
        }
        let mut found = 0;
        let mut sum = 0.0;
        for (i, &h) in hits.iter().enumerate() {
            if h {
                found += 1;
                sum += found as f64 / (i + 1) as f64;
                if found == y {
                    break;
                }
            }
        }
        Ok(sum / y as f64)
    }
}

pub fn success_at_1(r: &Ranking, truth: &TruthSet) -> Result<bool> {
    hits::success_at_1(&truth.check(r)?)
}

pub fn reciprocal_rank(r: &Ranking, truth: &TruthSet) -> Result<f64> {
    hits::reciprocal_rank(&truth.check(r)?)
}

pub fn precision_at(r: &Ranking, truth: &TruthSet, rank: usize) -> Result<f64> {
    hits::precision_at(&truth.check(r)?, rank)
}

pub fn average_precision(r: &Ranking, truth: &TruthSet) -> Result<f64> {
    hits::average_precision(&truth.check(r)?)
}

pub fn average_precision_at_y(r: &Ranking, truth: &TruthSet, y: usize) -> Result<f64> {
    hits::average_precision_at_y(&truth.check(r)?, y)
}

/// All criteria for one ranking.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub s_at_1: bool,
    pub rr: f64,
    pub ap: f64,
    /// `ap_y[y - 1]` is `AP^y`, for `y` in `1..=n_red_candidates`.
    pub ap_y: Vec<f64>,
    pub n_candidates: usize,
    pub n_red_candidates: usize,
}

impl EvalReport {
    pub fn evaluate(r: &Ranking, truth: &TruthSet) -> Result<Self> {
        Self::from_hits(&truth.check(r)?)
    }

    /// One pass over a relevance list.
    pub fn from_hits(hits: &[bool]) -> Result<Self> {
        let mut ap_y = Vec::new();
        let mut sum = 0.0;
        let mut rr = 0.0;
        for (i, &h) in hits.iter().enumerate() {
            if h {
                if ap_y.is_empty() {
                    rr = 1.0 / (i + 1) as f64;
                }
                let found = ap_y.len() + 1;
                sum += found as f64 / (i + 1) as f64;
                ap_y.push(sum / found as f64);
            }
        }
        let &ap = ap_y.last().ok_or(Error::NoRedCandidates)?;
        Ok(EvalReport {
            s_at_1: hits[0],
            rr,
            ap,
            n_candidates: hits.len(),
            n_red_candidates: ap_y.len(),
            ap_y,
        })
    }

    pub fn value(&self, c: Criterion) -> Option<f64> {
        match c {
            Criterion::SuccessAt1 => Some(self.s_at_1 as u8 as f64),
            Criterion::Mrr => Some(self.rr),
            Criterion::Map => Some(self.ap),
            Criterion::ApAt(y) => y.checked_sub(1).and_then(|i| self.ap_y.get(i)).copied(),
        }
    }
}

/// Mean and standard error of a replicated quantity.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Stat {
    pub mean: f64,
    /// Sample standard deviation over `sqrt(replicates)`; zero for one replicate.
    pub stderr: f64,
}

/// Running sums for a [`Stat`]; values are added in a fixed order so results
/// are reproducible.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Accumulator {
    count: usize,
    sum: f64,
    sum_sq: f64,
}

impl Accumulator {
    pub fn push(&mut self, x: f64) {
        self.count += 1;
        self.sum += x;
        self.sum_sq += x * x;
    }

    pub fn merge(&mut self, other: &Accumulator) {
        self.count += other.count;
        self.sum += other.sum;
        self.sum_sq += other.sum_sq;
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn stat(&self) -> Stat {
        if self.count == 0 {
            return Stat { mean: f64::NAN, stderr: f64::NAN };
        }
        let n = self.count as f64;
        let mean = self.sum / n;
        let stderr = if self.count > 1 {
            let var = ((self.sum_sq - n * mean * mean) / (n - 1.0)).max(0.0);
            (var / n).sqrt()
        } else {
            0.0
        };
        Stat { mean, stderr }
    }
}

/// Replicate means at one fusion weight.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AggregateReport {
    pub gamma: f64,
    pub replicates: usize,
    pub s_at_1: Stat,
    pub mrr: Stat,
    pub map: Stat,
    /// `ap_y[y - 1]`, over the replicates where the `y`-th red exists.
    pub ap_y: Vec<Stat>,
}

impl AggregateReport {
    pub fn stat(&self, c: Criterion) -> Stat {
        match c {
            Criterion::SuccessAt1 => self.s_at_1,
            Criterion::Mrr => self.mrr,
            Criterion::Map => self.map,
            Criterion::ApAt(y) => y
                .checked_sub(1)
                .and_then(|i| self.ap_y.get(i))
                .copied()
                .unwrap_or(Stat { mean: f64::NAN, stderr: f64::NAN }),
        }
    }
}

/// Folds [`EvalReport`]s into an [`AggregateReport`].
#[derive(Clone, Debug, Default)]
pub struct ReportAccumulator {
    s_at_1: Accumulator,
    rr: Accumulator,
    ap: Accumulator,
    ap_y: Vec<Accumulator>,
}

impl ReportAccumulator {
    pub fn push(&mut self, r: &EvalReport) {
        self.s_at_1.push(r.s_at_1 as u8 as f64);
        self.rr.push(r.rr);
        self.ap.push(r.ap);
        if self.ap_y.len() < r.ap_y.len() {
            self.ap_y.resize(r.ap_y.len(), Accumulator::default());
        }
        for (acc, &v) in self.ap_y.iter_mut().zip(&r.ap_y) {
            acc.push(v);
        }
    }

    pub fn count(&self) -> usize {
        self.rr.count()
    }

    pub fn finish(&self, gamma: f64) -> AggregateReport {
        AggregateReport {
            gamma,
            replicates: self.count(),
            s_at_1: self.s_at_1.stat(),
            mrr: self.rr.stat(),
            map: self.ap.stat(),
            ap_y: self.ap_y.iter().map(Accumulator::stat).collect(),
        }
    }
}

/// Expected metric value under a uniformly random ranking.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Baseline {
    pub value: f64,
    /// True when computed by full enumeration, false for a Monte Carlo estimate.
    pub exact: bool,
}

/// `C(n, k)` saturating at `u64::MAX`.
pub fn binomial_coefficient(n: u64, k: u64) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
        if acc > u64::MAX as u128 {
            return u64::MAX;
        }
    }
    acc as u64
}

/// Criterion value given the sorted 1-based positions of the reds.
fn value_at_positions(positions: &[usize], c: Criterion) -> f64 {
    let prefix = |y: usize| -> f64 {
        positions[..y]
            .iter()
            .enumerate()
            .map(|(j, &p)| (j + 1) as f64 / p as f64)
            .sum::<f64>()
            / y as f64
    };
    match c {
        Criterion::SuccessAt1 => (positions[0] == 1) as u8 as f64,
        Criterion::Mrr => 1.0 / positions[0] as f64,
        Criterion::Map => prefix(positions.len()),
        Criterion::ApAt(y) => prefix(y),
    }
}

/// Chance performance for `n_red` reds among `n_candidates`, by enumerating
/// every placement of the reds when there are at most
/// [`CHANCE_ENUMERATION_LIMIT`] of them, and by a fixed-seed Monte Carlo
/// estimate otherwise.
pub fn chance_baseline(n_candidates: usize, n_red: usize, criterion: Criterion) -> Result<Baseline> {
    if n_red == 0 || n_red > n_candidates {
        return Err(Error::input(format!("need 1 <= reds <= candidates, got {n_red} of {n_candidates}")));
    }
    if let Criterion::ApAt(y) = criterion {
        if y == 0 || y > n_red {
            return Err(Error::input(format!("y = {y} outside 1..={n_red}")));
        }
    }
    let placements = binomial_coefficient(n_candidates as u64, n_red as u64);
    if placements <= CHANCE_ENUMERATION_LIMIT {
        let mut pos: Vec<usize> = (1..=n_red).collect();
        let mut total = 0.0;
        loop {
            total += value_at_positions(&pos, criterion);
            // Advance to the next combination in lexicographic order.
            let mut i = n_red;
            while i > 0 && pos[i - 1] == n_candidates - n_red + i {
                i -= 1;
            }
            if i == 0 {
                break;
            }
            pos[i - 1] += 1;
            for j in i..n_red {
                pos[j] = pos[j - 1] + 1;
            }
        }
        Ok(Baseline { value: total / placements as f64, exact: true })
    } else {
        let mut rng = seed::rng_at(CHANCE_MC_SEED, &[n_candidates as u64, n_red as u64]);
        let mut total = 0.0;
        let mut pos = Vec::with_capacity(n_red);
        for _ in 0..CHANCE_MC_SAMPLES {
            pos.clear();
            pos.extend(index::sample(&mut rng, n_candidates, n_red).iter().map(|i| i + 1));
            pos.sort_unstable();
            total += value_at_positions(&pos, criterion);
        }
        Ok(Baseline { value: total / CHANCE_MC_SAMPLES as f64, exact: false })
    }
}
