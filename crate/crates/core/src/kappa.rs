//! The two-block "kidney-egg" attributed random graph and the exact sampling
//! distributions of the nomination statistics under it.
//!
//! Pairs of truly red vertices draw their edge attribute from `s`, every other
//! pair from `p`. Each vector is a point of the 2-simplex indexed as
//! `[no edge, red edge, green edge]`.

use rand::seq::index;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{AttributedGraph, EdgeAttr, VertexAttr};
use crate::seed;

/// Inputs farther than this from unit sum are rejected instead of normalized.
pub const SIMPLEX_INPUT_TOLERANCE: f64 = 1e-6;

/// A probability vector over `{no edge, red edge, green edge}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimplexVec3([f64; 3]);

impl SimplexVec3 {
    pub fn new(q0: f64, q1: f64, q2: f64) -> Result<Self> {
        let q = [q0, q1, q2];
        if q.iter().any(|x| !x.is_finite() || *x < 0.0) {
            return Err(Error::input(format!("simplex entries must be finite and non-negative, got {q:?}")));
        }
        let sum: f64 = q.iter().sum();
        if (sum - 1.0).abs() > SIMPLEX_INPUT_TOLERANCE {
            return Err(Error::input(format!("simplex entries sum to {sum}, expected 1")));
        }
        Ok(SimplexVec3([q0 / sum, q1 / sum, q2 / sum]))
    }

    /// Builds `[1 - q1 - q2, q1, q2]`.
    pub fn from_edge_probs(q1: f64, q2: f64) -> Result<Self> {
        Self::new(1.0 - q1 - q2, q1, q2)
    }

    pub fn none(&self) -> f64 {
        self.0[0]
    }

    pub fn red(&self) -> f64 {
        self.0[1]
    }

    pub fn green(&self) -> f64 {
        self.0[2]
    }

    /// Probability that an edge is present at all.
    pub fn edge(&self) -> f64 {
        self.0[1] + self.0[2]
    }

    pub fn as_array(&self) -> [f64; 3] {
        self.0
    }

    /// Maps a uniform draw in `[0, 1)` to an attribute: red, then green, then no edge.
    #[inline]
    fn classify(&self, x: f64) -> Option<EdgeAttr> {
        if x < self.0[1] {
            Some(EdgeAttr::RED)
        } else if x < self.0[1] + self.0[2] {
            Some(EdgeAttr::GREEN)
        } else {
            None
        }
    }
}

/// Parameters of κ(n, p, m, s; m′).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KappaParams {
    pub n: usize,
    pub m: usize,
    pub m_prime: usize,
    pub p: SimplexVec3,
    pub s: SimplexVec3,
}

impl KappaParams {
    /// Checks `n > m > m_prime >= 1`.
    pub fn new(n: usize, m: usize, m_prime: usize, p: SimplexVec3, s: SimplexVec3) -> Result<Self> {
        if !(n > m && m > m_prime && m_prime >= 1) {
            return Err(Error::input(format!(
                "require n > m > m' >= 1, got n={n}, m={m}, m'={m_prime}"
            )));
        }
        Ok(KappaParams { n, m, m_prime, p, s })
    }

    pub fn with_sizes(&self, m: usize, m_prime: usize) -> Result<Self> {
        Self::new(self.n, m, m_prime, self.p, self.s)
    }

    pub fn n_candidates(&self) -> usize {
        self.n - self.m_prime
    }

    pub fn n_red_candidates(&self) -> usize {
        self.m - self.m_prime
    }
}

/// Draws one κ(n, p, m, s; m′) graph.
///
/// Stream order for a given seed: the red set (uniform `m`-subset of the
/// vertices), then the identified set (uniform `m′`-subset of the red set),
/// then one uniform draw per unordered pair `(u, v)`, `u < v`, in
/// lexicographic order.
pub fn sample_kappa(params: &KappaParams, seed: u64) -> AttributedGraph {
    let mut rng = seed::rng(seed);
    let n = params.n;

    let mut truth = vec![VertexAttr::Green; n];
    let reds = index::sample(&mut rng, n, params.m).into_vec();
    for &v in &reds {
        truth[v] = VertexAttr::Red;
    }
    let mut observed = vec![VertexAttr::Occluded; n];
    for i in index::sample(&mut rng, params.m, params.m_prime) {
        observed[reds[i]] = VertexAttr::Red;
    }

    let mut edges = Vec::new();
    for u in 0..n {
        let u_red = truth[u] == VertexAttr::Red;
        for (v, &tv) in truth.iter().enumerate().skip(u + 1) {
            let dist = if u_red && tv == VertexAttr::Red { &params.s } else { &params.p };
            let x: f64 = rng.random();
            if let Some(a) = dist.classify(x) {
                edges.push((u, v, a));
            }
        }
    }
    AttributedGraph::from_sorted_edges(2, edges, truth, observed)
}

/// A probability mass function on a contiguous integer support
/// `offset, offset + 1, ...`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Pmf {
    offset: usize,
    probs: Vec<f64>,
}

impl Pmf {
    pub fn point(k: usize) -> Self {
        Pmf { offset: k, probs: vec![1.0] }
    }

    /// Exact Binomial(trials, q) mass function.
    pub fn binomial(trials: usize, q: f64) -> Self {
        if q <= 0.0 {
            return Pmf::point(0);
        }
        if q >= 1.0 {
            return Pmf::point(trials);
        }
        let (lq, lr) = (q.ln(), (-q).ln_1p());
        let mut ln_fact = Vec::with_capacity(trials + 1);
        ln_fact.push(0.0f64);
        for i in 1..=trials {
            ln_fact.push(ln_fact[i - 1] + (i as f64).ln());
        }
        let probs = (0..=trials)
            .map(|k| {
                let ln_choose = ln_fact[trials] - ln_fact[k] - ln_fact[trials - k];
                (ln_choose + k as f64 * lq + (trials - k) as f64 * lr).exp()
            })
            .collect();
        Pmf { offset: 0, probs }
    }

    /// Distribution of the sum of two independent variables, by direct products.
    pub fn convolve(&self, other: &Pmf) -> Pmf {
        let mut probs = vec![0.0; self.probs.len() + other.probs.len() - 1];
        for (i, &a) in self.probs.iter().enumerate() {
            if a == 0.0 {
                continue;
            }
            for (j, &b) in other.probs.iter().enumerate() {
                probs[i + j] += a * b;
            }
        }
        Pmf { offset: self.offset + other.offset, probs }
    }

    /// `P[X = k]`, zero off the support.
    pub fn prob(&self, k: usize) -> f64 {
        k.checked_sub(self.offset)
            .and_then(|i| self.probs.get(i))
            .copied()
            .unwrap_or(0.0)
    }

    pub fn offset(&self) -> usize {
        self.offset
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    /// Largest value in the stored support.
    pub fn max_value(&self) -> usize {
        self.offset + self.probs.len() - 1
    }

    pub fn total(&self) -> f64 {
        self.probs.iter().sum()
    }

    pub fn mean(&self) -> f64 {
        self.probs
            .iter()
            .enumerate()
            .map(|(i, p)| (self.offset + i) as f64 * p)
            .sum()
    }

    /// Dense vector indexed by value, `0..=max_value`.
    pub fn dense(&self) -> Vec<f64> {
        (0..=self.max_value()).map(|k| self.prob(k)).collect()
    }

    /// Weighted mixture `Σ wᵢ·Pᵢ`.
    pub fn mixture<'a>(parts: impl IntoIterator<Item = (f64, &'a Pmf)>) -> Pmf {
        let mut acc: Vec<f64> = Vec::new();
        for (w, pmf) in parts {
            let top = pmf.max_value() + 1;
            if acc.len() < top {
                acc.resize(top, 0.0);
            }
            for (i, &p) in pmf.probs.iter().enumerate() {
                acc[pmf.offset + i] += w * p;
            }
        }
        Pmf { offset: 0, probs: acc }
    }

    /// Total-variation distance between this PMF and the empirical
    /// distribution given by `counts[k]` = number of observations equal to `k`.
    pub fn tv_distance_to_counts(&self, counts: &[u64]) -> f64 {
        let total: u64 = counts.iter().sum();
        let top = counts.len().max(self.max_value() + 1);
        0.5 * (0..top)
            .map(|k| {
                let emp = counts.get(k).copied().unwrap_or(0) as f64 / total as f64;
                (emp - self.prob(k)).abs()
            })
            .sum::<f64>()
    }
}

/// Which side of the truth a candidate sits on.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum VertexClass {
    /// A truly red, non-identified candidate.
    Red,
    Green,
}

/// Exact law of the context statistic (identified neighbours).
pub fn pmf_t0(params: &KappaParams, class: VertexClass) -> Pmf {
    let q = match class {
        VertexClass::Green => params.p.edge(),
        VertexClass::Red => params.s.edge(),
    };
    Pmf::binomial(params.m_prime, q)
}

/// Exact law of the content statistic (incident red edges).
pub fn pmf_t1(params: &KappaParams, class: VertexClass) -> Pmf {
    match class {
        VertexClass::Green => Pmf::binomial(params.n - 1, params.p.red()),
        VertexClass::Red => Pmf::binomial(params.m - 1, params.s.red())
            .convolve(&Pmf::binomial(params.n - params.m, params.p.red())),
    }
}

/// Exact law of the content statistic given the context statistic equals `c`.
///
/// Of the `c` edges to identified vertices, each is red with probability
/// `q₁/(q₁+q₂)`; the remaining pairs contribute independently.
pub fn pmf_t1_given_t0(params: &KappaParams, class: VertexClass, c: usize) -> Result<Pmf> {
    if c > params.m_prime {
        return Err(Error::input(format!("conditioning value {c} exceeds m' = {}", params.m_prime)));
    }
    let q = match class {
        VertexClass::Green => params.p,
        VertexClass::Red => params.s,
    };
    let first = if c == 0 {
        Pmf::point(0)
    } else if q.edge() == 0.0 {
        return Err(Error::DegenerateConditioning(format!(
            "T0 = {c} has probability zero when the edge probability toward identified vertices is 0"
        )));
    } else {
        Pmf::binomial(c, q.red() / q.edge())
    };
    Ok(match class {
        VertexClass::Green => first.convolve(&Pmf::binomial(params.n - 1 - params.m_prime, params.p.red())),
        VertexClass::Red => first
            .convolve(&Pmf::binomial(params.m - 1 - params.m_prime, params.s.red()))
            .convolve(&Pmf::binomial(params.n - params.m, params.p.red())),
    })
}

/// `Σ_c P[T0 = c] · P[T1 | T0 = c]`, skipping impossible values of `c`.
pub fn marginalize_t1(params: &KappaParams, class: VertexClass) -> Result<Pmf> {
    let t0 = pmf_t0(params, class);
    let conds = (0..=params.m_prime)
        .filter(|&c| t0.prob(c) > 0.0)
        .map(|c| Ok((t0.prob(c), pmf_t1_given_t0(params, class, c)?)))
        .collect::<Result<Vec<_>>>()?;
    Ok(Pmf::mixture(conds.iter().map(|(w, p)| (*w, p))))
}
