//! Monte Carlo harness for sweeps over κ configurations.
//!
//! Replicate `r` of cell `c` draws everything from
//! `seed::derive(master_seed, &[c, r])`. Replicates run on the rayon pool but
//! are folded in index order, so results do not depend on the worker count.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kappa::{sample_kappa, KappaParams, SimplexVec3};
use crate::metrics::{chance_baseline, AggregateReport, Baseline, Criterion, EvalReport, ReportAccumulator, TruthSet};
use crate::graph::VertexAttr;
use crate::nomination::{argmax_gamma, rank_with_stats, t0, t1, tie_keys, CandidateStats, FusionWeight};
use crate::seed::{self, stream};

/// Runs `f` on a dedicated pool with `workers` threads, or on the global pool.
pub fn with_workers<T: Send>(workers: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match workers {
        None => Ok(f()),
        Some(0) => Err(Error::input("worker count must be positive")),
        Some(w) => rayon::ThreadPoolBuilder::new()
            .num_threads(w)
            .build()
            .map(|pool| pool.install(f))
            .map_err(|e| Error::input(format!("cannot build thread pool: {e}"))),
    }
}

/// Per-weight evaluations of one sampled graph.
#[derive(Clone, Debug, PartialEq)]
pub struct ReplicateResult {
    /// Aligned with the weight grid.
    pub reports: Vec<EvalReport>,
    /// Digest of the sampled edge set; shared by every weight.
    pub edge_checksum: u64,
}

/// Samples one graph and evaluates every weight on it with the same tie-break keys.
pub fn run_replicate(params: &KappaParams, grid: &[FusionWeight], seed: u64) -> Result<ReplicateResult> {
    let g = sample_kappa(params, seed::derive(seed, &[stream::GRAPH]));
    let stats = CandidateStats::compute(&g);
    let truth = TruthSet::from_graph(&g);
    let tie_seed = seed::derive(seed, &[stream::TIES]);
    let keys = tie_keys(stats.len(), tie_seed);
    let reports = grid
        .iter()
        .map(|&w| {
            let r = rank_with_stats(&stats, w, &keys, tie_seed);
            EvalReport::from_hits(&truth.hits(&r))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ReplicateResult { reports, edge_checksum: g.edge_checksum() })
}

fn replicate_seed(master: u64, cell: u64, rep: u64) -> u64 {
    seed::derive(master, &[cell, rep])
}

/// Aggregates `replicates` runs of one configuration; one report per weight.
pub fn run_cell(
    params: &KappaParams,
    grid: &[FusionWeight],
    replicates: usize,
    master_seed: u64,
    cell: u64,
) -> Result<Vec<AggregateReport>> {
    if replicates == 0 {
        return Err(Error::input("replicates must be at least 1"));
    }
    let runs = (0..replicates as u64)
        .into_par_iter()
        .map(|r| run_replicate(params, grid, replicate_seed(master_seed, cell, r)))
        .collect::<Result<Vec<_>>>()?;
    let mut accs = vec![ReportAccumulator::default(); grid.len()];
    for run in &runs {
        for (acc, rep) in accs.iter_mut().zip(&run.reports) {
            acc.push(rep);
        }
    }
    Ok(accs.iter().zip(grid).map(|(a, w)| a.finish(w.gamma())).collect())
}

/// How the identified count is derived from `m`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum MPrimeRule {
    /// `m′ = round_half_up(r·m)` clamped to `[1, m-1]`.
    Ratio(f64),
    /// One `m′` per entry of `m_values`.
    Explicit(Vec<usize>),
}

/// `round_half_up(ratio·m)` clamped to `[1, m-1]`.
pub fn m_prime_from_ratio(m: usize, ratio: f64) -> usize {
    let raw = (ratio * m as f64 + 0.5).floor().max(1.0) as usize;
    raw.min(m.saturating_sub(1)).max(1)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub n: usize,
    pub p: SimplexVec3,
    pub s: SimplexVec3,
    pub m_values: Vec<usize>,
    pub m_prime_rule: MPrimeRule,
    pub gamma_grid: Vec<f64>,
    pub replicates: usize,
    pub master_seed: u64,
    /// Replace `s` by `[1 - s₁ - p₂, s₁, p₂]` before sampling.
    pub enforce_s2_eq_p2: bool,
}

impl SweepSpec {
    /// The default MAP-by-m sweep:
    /// n = 184, p = [0.6, 0.2, 0.2], s = [0.4, 0.4, 0.2], m ∈ {4, 8, ..., 40}.
    pub fn standard(m_prime_ratio: f64, replicates: usize, master_seed: u64) -> Self {
        SweepSpec {
            n: 184,
            p: SimplexVec3::new(0.6, 0.2, 0.2).expect("valid simplex"),
            s: SimplexVec3::new(0.4, 0.4, 0.2).expect("valid simplex"),
            m_values: (1..=10).map(|i| 4 * i).collect(),
            m_prime_rule: MPrimeRule::Ratio(m_prime_ratio),
            gamma_grid: vec![0.0, 0.5, 1.0],
            replicates,
            master_seed,
            enforce_s2_eq_p2: true,
        }
    }

    /// The `s` actually sampled from.
    pub fn effective_s(&self) -> Result<SimplexVec3> {
        if self.enforce_s2_eq_p2 {
            SimplexVec3::from_edge_probs(self.s.red(), self.p.green())
        } else {
            Ok(self.s)
        }
    }

    pub fn grid(&self) -> Result<Vec<FusionWeight>> {
        if self.gamma_grid.is_empty() {
            return Err(Error::input("empty fusion-weight grid"));
        }
        self.gamma_grid.iter().map(|&g| FusionWeight::new(g)).collect()
    }

    /// `(m, m′)` for every cell, in `m_values` order.
    pub fn cells(&self) -> Result<Vec<(usize, usize)>> {
        match &self.m_prime_rule {
            MPrimeRule::Ratio(r) => {
                if !(*r > 0.0 && *r < 1.0) {
                    return Err(Error::input(format!("m' ratio {r} outside (0, 1)")));
                }
                Ok(self.m_values.iter().map(|&m| (m, m_prime_from_ratio(m, *r))).collect())
            }
            MPrimeRule::Explicit(list) => {
                if list.len() != self.m_values.len() {
                    return Err(Error::input("explicit m' list must match m values in length"));
                }
                Ok(self.m_values.iter().copied().zip(list.iter().copied()).collect())
            }
        }
    }
}

/// Results for one `(m, m′)` configuration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellResult {
    pub m: usize,
    pub m_prime: usize,
    pub n_candidates: usize,
    pub n_red_candidates: usize,
    /// One per weight, in grid order.
    pub reports: Vec<AggregateReport>,
    /// Best grid weight per main criterion.
    pub gamma_star: Vec<(Criterion, f64)>,
    pub chance: Vec<(Criterion, Baseline)>,
}

impl CellResult {
    pub fn report_at(&self, gamma: f64) -> Option<&AggregateReport> {
        self.reports.iter().find(|r| r.gamma == gamma)
    }

    pub fn chance_for(&self, c: Criterion) -> Option<Baseline> {
        self.chance.iter().find(|(k, _)| *k == c).map(|(_, b)| *b)
    }

    pub fn gamma_star_for(&self, c: Criterion) -> Option<f64> {
        self.gamma_star.iter().find(|(k, _)| *k == c).map(|(_, g)| *g)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SkippedCell {
    pub m: usize,
    pub m_prime: usize,
    pub reason: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub cells: Vec<CellResult>,
    pub skipped: Vec<SkippedCell>,
}

/// Evaluates every feasible cell of `spec`; infeasible cells are listed in
/// [`SweepResult::skipped`].
pub fn run_sweep(spec: &SweepSpec) -> Result<SweepResult> {
    let grid = spec.grid()?;
    let s = spec.effective_s()?;
    if spec.replicates == 0 {
        return Err(Error::input("replicates must be at least 1"));
    }
    let mut feasible = Vec::new();
    let mut skipped = Vec::new();
    for (idx, (m, m_prime)) in spec.cells()?.into_iter().enumerate() {
        match KappaParams::new(spec.n, m, m_prime, spec.p, s) {
            Ok(params) => feasible.push((idx as u64, params)),
            Err(e) => skipped.push(SkippedCell { m, m_prime, reason: e.to_string() }),
        }
    }
    let cells = feasible
        .par_iter()
        .map(|(idx, params)| {
            let reports = run_cell(params, &grid, spec.replicates, spec.master_seed, *idx)?;
            let gamma_star = Criterion::MAIN
                .iter()
                .map(|&c| {
                    let means: Vec<f64> = reports.iter().map(|r| r.stat(c).mean).collect();
                    (c, grid[argmax_gamma(&grid, &means)].gamma())
                })
                .collect();
            let chance = Criterion::MAIN
                .iter()
                .map(|&c| Ok((c, chance_baseline(params.n_candidates(), params.n_red_candidates(), c)?)))
                .collect::<Result<Vec<_>>>()?;
            Ok(CellResult {
                m: params.m,
                m_prime: params.m_prime,
                n_candidates: params.n_candidates(),
                n_red_candidates: params.n_red_candidates(),
                reports,
                gamma_star,
                chance,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepResult { cells, skipped })
}

/// Mean `AP^y(γ)` on a `y × γ` grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GammaSurface {
    pub gammas: Vec<f64>,
    /// `mean[y - 1][j]` is the mean `AP^y` at `gammas[j]`.
    pub mean: Vec<Vec<f64>>,
    pub stderr: Vec<Vec<f64>>,
    pub replicates: usize,
}

impl GammaSurface {
    pub fn y_max(&self) -> usize {
        self.mean.len()
    }

    /// Weight maximizing row `y` (ties to the smallest weight).
    pub fn argmax_row(&self, y: usize) -> f64 {
        let row = &self.mean[y - 1];
        let mut best = 0;
        for j in 1..row.len() {
            if row[j] > row[best] {
                best = j;
            }
        }
        self.gammas[best]
    }
}

pub fn gamma_surface(
    params: &KappaParams,
    grid: &[FusionWeight],
    y_max: usize,
    replicates: usize,
    seed: u64,
) -> Result<GammaSurface> {
    if y_max == 0 || y_max > params.n_red_candidates() {
        return Err(Error::input(format!(
            "y_max = {y_max} outside 1..={}",
            params.n_red_candidates()
        )));
    }
    let reports = run_cell(params, grid, replicates, seed, 0)?;
    let row = |y: usize, f: fn(&crate::metrics::Stat) -> f64| -> Vec<f64> {
        reports.iter().map(|r| f(&r.ap_y[y - 1])).collect()
    };
    Ok(GammaSurface {
        gammas: grid.iter().map(FusionWeight::gamma).collect(),
        mean: (1..=y_max).map(|y| row(y, |s| s.mean)).collect(),
        stderr: (1..=y_max).map(|y| row(y, |s| s.stderr)).collect(),
        replicates,
    })
}

/// Histograms of `T⁰` and `T¹` for one green candidate and one red candidate
/// per sampled graph; index `k` counts samples with value `k`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct StatisticCounts {
    pub t0_green: Vec<u64>,
    pub t1_green: Vec<u64>,
    pub t0_red: Vec<u64>,
    pub t1_red: Vec<u64>,
    pub samples: usize,
}

fn bump(hist: &mut Vec<u64>, k: u32, by: u64) {
    let k = k as usize;
    if hist.len() <= k {
        hist.resize(k + 1, 0);
    }
    hist[k] += by;
}

/// Samples `samples` graphs and records the statistics of the lowest-id green
/// vertex and the lowest-id red candidate of each. Which vertex is picked
/// depends only on the labels, so by exchangeability its statistics follow
/// the per-class sampling distributions. Sample `i` uses `derive(seed, [i])`.
pub fn sample_statistics(params: &KappaParams, samples: usize, seed: u64) -> StatisticCounts {
    let draws: Vec<[u32; 4]> = (0..samples as u64)
        .into_par_iter()
        .map(|i| {
            let g = sample_kappa(params, seed::derive(seed, &[i]));
            let green = (0..g.n()).find(|&v| g.truth(v) == VertexAttr::Green).expect("n > m");
            let red = g.red_candidates()[0];
            let stat = |v| [t0(&g, v).expect("candidate"), t1(&g, v).expect("candidate")];
            let (a, b) = (stat(green), stat(red));
            [a[0], a[1], b[0], b[1]]
        })
        .collect();
    let mut out = StatisticCounts { samples, ..Default::default() };
    for d in draws {
        bump(&mut out.t0_green, d[0], 1);
        bump(&mut out.t1_green, d[1], 1);
        bump(&mut out.t0_red, d[2], 1);
        bump(&mut out.t1_red, d[3], 1);
    }
    out
}
