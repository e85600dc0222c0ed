use std::fmt::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use vnom::experiments::{self, gamma_surface, run_sweep, sample_statistics, MPrimeRule, SweepSpec};
use vnom::importance::{
    bin_by_estimate, estimate_rates, run_importance_trials, screen_partitions, ProfileWeighting, RateComponent,
    ScreeningThresholds,
};
use vnom::io::{self, RunMetadata, SurrogateConfig, TopicGraphFile};
use vnom::kappa::{pmf_t0, pmf_t1, sample_kappa, KappaParams, SimplexVec3, VertexClass};
use vnom::metrics::{chance_baseline, Criterion, EvalReport, TruthSet};
use vnom::nomination::{self, rank_candidates, FusionWeight};
use vnom::{Error, Partition, Result};

#[derive(Parser)]
#[command(name = "vnom", version, about = "Vertex nomination experiments on edge-attributed graphs")]
struct Cli {
    /// Worker threads for parallel commands (defaults to all cores).
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample one κ graph and report nomination metrics.
    Simulate(SimulateArgs),
    /// Monte Carlo sweep over m at fixed fusion weights.
    Sweep(SweepArgs),
    /// Mean AP^y over a grid of fusion weights.
    Surface(SurfaceArgs),
    /// Screen partitions of a topic graph and run nomination trials on them.
    Importance(ImportanceArgs),
    /// Estimate edge rates inside each side of a partition.
    Estimate(EstimateArgs),
    /// Exact distributions of the statistics, optionally against simulation.
    Analytic(AnalyticArgs),
    /// Write a synthetic topic-attributed corpus.
    Surrogate(SurrogateArgs),
    /// Expected metric value under a uniformly random ranking.
    Baseline(BaselineArgs),
}

#[derive(Clone, Copy, Debug, Default, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Clone, Copy, Debug, Default, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum Weighting {
    #[default]
    Count,
    Unweighted,
}

#[derive(Args, Serialize)]
struct ModelArgs {
    #[arg(long, default_value_t = 184)]
    n: usize,
    /// No-edge probability outside the block of interest.
    #[arg(long, default_value_t = 0.6)]
    p0: f64,
    /// Red-edge probability outside the block of interest.
    #[arg(long, default_value_t = 0.2)]
    p1: f64,
    /// Green-edge probability outside the block of interest.
    #[arg(long, default_value_t = 0.2)]
    p2: f64,
    /// Red-edge probability inside the block of interest.
    #[arg(long, default_value_t = 0.4)]
    s1: f64,
    /// Green-edge probability inside the block of interest (defaults to p2).
    #[arg(long)]
    s2: Option<f64>,
}

impl ModelArgs {
    fn p(&self) -> Result<SimplexVec3> {
        SimplexVec3::new(self.p0, self.p1, self.p2)
    }

    fn s(&self) -> Result<SimplexVec3> {
        let s2 = self.s2.unwrap_or(self.p2);
        SimplexVec3::new(1.0 - self.s1 - s2, self.s1, s2)
    }

    fn params(&self, m: usize, m_prime: usize) -> Result<KappaParams> {
        KappaParams::new(self.n, m, m_prime, self.p()?, self.s()?)
    }
}

#[derive(Args, Serialize)]
struct GammaArgs {
    /// Comma-separated fusion weights.
    #[arg(long, value_delimiter = ',', conflicts_with = "gamma_points")]
    gammas: Option<Vec<f64>>,
    /// Evenly spaced grid on [0, 1] with this many points.
    #[arg(long)]
    gamma_points: Option<usize>,
}

impl GammaArgs {
    fn resolve(&self, default: &[f64]) -> Result<Vec<FusionWeight>> {
        match (&self.gammas, self.gamma_points) {
            (Some(list), _) => list.iter().map(|&g| FusionWeight::new(g)).collect(),
            (None, Some(points)) if points >= 2 => Ok(nomination::grid(points)),
            (None, Some(points)) => Err(Error::Input(format!("need at least 2 grid points, got {points}"))),
            (None, None) => default.iter().map(|&g| FusionWeight::new(g)).collect(),
        }
    }
}

#[derive(Args, Serialize)]
struct OutputArgs {
    /// Output file (standard output if omitted).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t)]
    format: Format,
}

#[derive(Args, Serialize)]
struct SimulateArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long, default_value_t = 40)]
    m: usize,
    #[arg(long, default_value_t = 10)]
    m_prime: usize,
    #[command(flatten)]
    gammas: GammaArgs,
    #[arg(long)]
    seed: Option<u64>,
    /// Also write the sampled graph here.
    #[arg(long)]
    graph_out: Option<PathBuf>,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args, Serialize)]
struct SweepArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long, value_delimiter = ',', default_values_t = [4, 8, 12, 16, 20, 24, 28, 32, 36, 40])]
    m_list: Vec<usize>,
    /// m' = round(ratio·m), clamped to [1, m-1].
    #[arg(long, default_value_t = 0.25, conflicts_with = "m_prime_list")]
    m_prime_ratio: f64,
    /// Explicit m' per entry of --m-list.
    #[arg(long, value_delimiter = ',')]
    m_prime_list: Option<Vec<usize>>,
    #[command(flatten)]
    gammas: GammaArgs,
    #[arg(long, default_value_t = 1000)]
    replicates: usize,
    #[arg(long)]
    seed: Option<u64>,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args, Serialize)]
struct SurfaceArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long, default_value_t = 40)]
    m: usize,
    #[arg(long, default_value_t = 30)]
    m_prime: usize,
    /// Largest y (defaults to m - m').
    #[arg(long)]
    y_max: Option<usize>,
    #[command(flatten)]
    gammas: GammaArgs,
    #[arg(long, default_value_t = 1000)]
    replicates: usize,
    #[arg(long)]
    seed: Option<u64>,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args, Serialize)]
struct ImportanceArgs {
    /// Topic graph file.
    #[arg(long)]
    graph: PathBuf,
    #[arg(long, default_value_t = 10)]
    m: usize,
    #[arg(long, default_value_t = 5)]
    m_prime: usize,
    #[arg(long, default_value_t = 0.1, allow_negative_numbers = true)]
    tau_rho: f64,
    #[arg(long, default_value_t = 0.2, allow_negative_numbers = true)]
    tau_p: f64,
    #[arg(long, default_value_t = 1_000_000)]
    attempts: u64,
    /// Side length of the (Δρ, ΔP) bins.
    #[arg(long, default_value_t = 0.1)]
    bins: f64,
    /// Edge instantiations per accepted partition.
    #[arg(long, default_value_t = 20)]
    replicates: usize,
    #[arg(long, value_enum, default_value_t)]
    weighting: Weighting,
    #[command(flatten)]
    gammas: GammaArgs,
    /// Also write MRR binned by each estimated rate to this file.
    #[arg(long)]
    estimate_out: Option<PathBuf>,
    #[arg(long, default_value_t = 0.02)]
    estimate_width: f64,
    #[arg(long)]
    seed: Option<u64>,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args, Serialize)]
struct EstimateArgs {
    /// Attributed graph file.
    #[arg(long)]
    graph: PathBuf,
    /// Red side of the partition (defaults to the graph's red vertices).
    #[arg(long, value_delimiter = ',')]
    red: Option<Vec<usize>>,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args, Serialize)]
struct AnalyticArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long, default_value_t = 40)]
    m: usize,
    #[arg(long, default_value_t = 10)]
    m_prime: usize,
    /// Simulated graphs to compare against (0 skips the comparison).
    #[arg(long, default_value_t = 0)]
    samples: usize,
    #[arg(long)]
    seed: Option<u64>,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args, Serialize)]
struct SurrogateArgs {
    #[arg(long, default_value_t = 184)]
    n: usize,
    #[arg(long, default_value_t = 32)]
    k: usize,
    #[arg(long, default_value_t = 0.05)]
    density: f64,
    #[arg(long)]
    groups: Option<usize>,
    #[arg(long)]
    group_size: Option<usize>,
    #[arg(long)]
    group_density: Option<f64>,
    #[arg(long)]
    group_topics: Option<usize>,
    #[arg(long)]
    tilt: Option<f64>,
    #[arg(long)]
    concentration: Option<f64>,
    #[arg(long)]
    mean_messages: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

impl SurrogateArgs {
    fn config(&self) -> SurrogateConfig {
        let d = SurrogateConfig::default();
        SurrogateConfig {
            n: self.n,
            k: self.k,
            density: self.density,
            groups: self.groups.unwrap_or(d.groups),
            group_size: self.group_size.unwrap_or(d.group_size),
            group_density: self.group_density.unwrap_or(d.group_density),
            group_topics: self.group_topics.unwrap_or(d.group_topics),
            tilt: self.tilt.unwrap_or(d.tilt),
            concentration: self.concentration.unwrap_or(d.concentration),
            mean_messages: self.mean_messages.unwrap_or(d.mean_messages),
        }
    }
}

#[derive(Args, Serialize)]
struct BaselineArgs {
    #[arg(long)]
    candidates: usize,
    #[arg(long)]
    reds: usize,
    /// s_at_1, mrr, map or ap@<y>.
    #[arg(long, default_value = "map")]
    criterion: String,
}

fn resolve_seed(seed: Option<u64>) -> u64 {
    seed.unwrap_or_else(|| {
        let s = rand::random();
        eprintln!("seed: {s}");
        s
    })
}

fn emit(out: &Option<PathBuf>, text: &str) -> Result<()> {
    match out {
        Some(path) => io::write_file(path, text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn simulate(mut a: SimulateArgs) -> Result<()> {
    let seed = resolve_seed(a.seed);
    a.seed = Some(seed);
    let params = a.model.params(a.m, a.m_prime)?;
    let grid = a.gammas.resolve(&[0.0, 0.5, 1.0])?;
    let g = sample_kappa(&params, seed);
    if let Some(path) = &a.graph_out {
        io::write_file(path, &io::format_attributed_graph(&g))?;
    }
    let truth = TruthSet::from_graph(&g);
    #[derive(Serialize)]
    struct Row {
        gamma: f64,
        s_at_1: bool,
        rr: f64,
        ap: f64,
        top: Vec<usize>,
    }
    let rows = grid
        .iter()
        .map(|&w| {
            let ranking = rank_candidates(&g, w, seed)?;
            let r = EvalReport::evaluate(&ranking, &truth)?;
            Ok(Row { gamma: w.gamma(), s_at_1: r.s_at_1, rr: r.rr, ap: r.ap, top: ranking.ordered[..5.min(ranking.len())].to_vec() })
        })
        .collect::<Result<Vec<_>>>()?;
    let meta = RunMetadata::new("simulate", Some(seed), &a)?;
    let text = match a.output.format {
        Format::Json => io::to_json_document(&meta, &rows)?,
        Format::Csv => {
            let mut out = meta.comment_block();
            out.push_str("gamma,s_at_1,rr,ap,top5\n");
            for r in &rows {
                let top: Vec<String> = r.top.iter().map(|v| v.to_string()).collect();
                let _ = writeln!(out, "{},{},{},{},{}", r.gamma, r.s_at_1, r.rr, r.ap, top.join(";"));
            }
            out
        }
    };
    emit(&a.output.out, &text)
}

fn sweep(mut a: SweepArgs, workers: Option<usize>) -> Result<()> {
    let seed = resolve_seed(a.seed);
    a.seed = Some(seed);
    let grid = a.gammas.resolve(&[0.0, 0.5, 1.0])?;
    let spec = SweepSpec {
        n: a.model.n,
        p: a.model.p()?,
        s: a.model.s()?,
        m_values: a.m_list.clone(),
        m_prime_rule: match &a.m_prime_list {
            Some(list) => MPrimeRule::Explicit(list.clone()),
            None => MPrimeRule::Ratio(a.m_prime_ratio),
        },
        gamma_grid: grid.iter().map(FusionWeight::gamma).collect(),
        replicates: a.replicates,
        master_seed: seed,
        enforce_s2_eq_p2: false,
    };
    let result = experiments::with_workers(workers, || run_sweep(&spec))??;
    let meta = RunMetadata::new("sweep", Some(seed), &a)?;
    let text = match a.output.format {
        Format::Json => io::to_json_document(&meta, &result)?,
        Format::Csv => io::sweep_csv(&meta, &spec, &result)?,
    };
    emit(&a.output.out, &text)
}

fn surface(mut a: SurfaceArgs, workers: Option<usize>) -> Result<()> {
    let seed = resolve_seed(a.seed);
    a.seed = Some(seed);
    let params = a.model.params(a.m, a.m_prime)?;
    let grid = match (&a.gammas.gammas, a.gammas.gamma_points) {
        (None, None) => nomination::default_grid(),
        _ => a.gammas.resolve(&[])?,
    };
    let y_max = a.y_max.unwrap_or(params.n_red_candidates());
    let surface = experiments::with_workers(workers, || gamma_surface(&params, &grid, y_max, a.replicates, seed))??;
    let meta = RunMetadata::new("surface", Some(seed), &a)?;
    let text = match a.output.format {
        Format::Json => io::to_json_document(&meta, &surface)?,
        Format::Csv => io::surface_csv(&meta, &params, &surface),
    };
    emit(&a.output.out, &text)
}

fn importance(mut a: ImportanceArgs, workers: Option<usize>) -> Result<()> {
    let seed = resolve_seed(a.seed);
    a.seed = Some(seed);
    let file = io::read_topic_graph(&a.graph)?;
    let thresholds = ScreeningThresholds::new(a.tau_rho, a.tau_p)?;
    let weighting = match a.weighting {
        Weighting::Count => ProfileWeighting::MessageCount,
        Weighting::Unweighted => ProfileWeighting::Unweighted,
    };
    let grid = match (&a.gammas.gammas, a.gammas.gamma_points) {
        (None, None) => nomination::default_grid(),
        _ => a.gammas.resolve(&[])?,
    };
    let (screening, report) = experiments::with_workers(workers, || -> Result<_> {
        let screening = screen_partitions(
            &file.graph,
            a.m,
            &thresholds,
            a.attempts,
            vnom::seed::derive(seed, &[0]),
            weighting,
        )?;
        if screening.accepted.is_empty() {
            return Err(Error::Input(format!("no partition passed screening in {} attempts", a.attempts)));
        }
        let report = run_importance_trials(
            &file.graph,
            &screening.accepted,
            a.m_prime,
            &grid,
            a.replicates,
            a.bins,
            vnom::seed::derive(seed, &[1]),
        )?;
        Ok((screening, report))
    })??;
    eprintln!(
        "screened {} draws: {} accepted, {} undefined",
        screening.attempts,
        screening.accepted.len(),
        screening.undefined
    );
    let meta = RunMetadata::new("importance", Some(seed), &a)?;
    let text = match a.output.format {
        Format::Json => {
            #[derive(Serialize)]
            struct Out<'a> {
                attempts: u64,
                accepted: usize,
                undefined: u64,
                report: &'a vnom::importance::ImportanceReport,
            }
            let out = Out {
                attempts: screening.attempts,
                accepted: screening.accepted.len(),
                undefined: screening.undefined,
                report: &report,
            };
            io::to_json_document(&meta, &out)?
        }
        Format::Csv => io::importance_csv(&meta, &report),
    };
    emit(&a.output.out, &text)?;
    if let Some(path) = &a.estimate_out {
        let mut bins = Vec::new();
        for c in RateComponent::ALL {
            bins.extend(bin_by_estimate(&report, c, a.estimate_width)?);
        }
        io::write_file(path, &io::estimate_bins_csv(&meta, &report.gammas, &bins))?;
    }
    Ok(())
}

fn estimate(a: EstimateArgs) -> Result<()> {
    let g = io::read_attributed_graph(&a.graph)?;
    let red = a.red.clone().unwrap_or_else(|| g.red_set());
    let part = Partition::new(g.n(), &red)?;
    let r = estimate_rates(&g, &part)?;
    let meta = RunMetadata::new("estimate", None, &a)?;
    let text = match a.output.format {
        Format::Json => io::to_json_document(&meta, &r)?,
        Format::Csv => format!(
            "{}p_hat_1,p_hat_2,s_hat_1,s_hat_2\n{},{},{},{}\n",
            meta.comment_block(),
            r.p_hat_1,
            r.p_hat_2,
            r.s_hat_1,
            r.s_hat_2
        ),
    };
    emit(&a.output.out, &text)
}

fn analytic(mut a: AnalyticArgs, workers: Option<usize>) -> Result<()> {
    let seed = (a.samples > 0).then(|| resolve_seed(a.seed));
    a.seed = seed;
    let params = a.model.params(a.m, a.m_prime)?;
    let columns = [
        ("t0_green", pmf_t0(&params, VertexClass::Green)),
        ("t1_green", pmf_t1(&params, VertexClass::Green)),
        ("t0_red", pmf_t0(&params, VertexClass::Red)),
        ("t1_red", pmf_t1(&params, VertexClass::Red)),
    ];
    let counts = match seed {
        Some(s) => Some(experiments::with_workers(workers, || sample_statistics(&params, a.samples, s))?),
        None => None,
    };
    let tv: Vec<(&str, f64)> = counts
        .as_ref()
        .map(|c| {
            let hist = [&c.t0_green, &c.t1_green, &c.t0_red, &c.t1_red];
            columns.iter().zip(hist).map(|((name, pmf), h)| (*name, pmf.tv_distance_to_counts(h))).collect()
        })
        .unwrap_or_default();
    let meta = RunMetadata::new("analytic", seed, &a)?;
    let text = match a.output.format {
        Format::Json => {
            #[derive(Serialize)]
            struct Out<'a> {
                pmfs: Vec<(&'a str, Vec<f64>)>,
                tv_distance: Vec<(&'a str, f64)>,
            }
            let pmfs = columns.iter().map(|(n, p)| (*n, p.dense())).collect();
            io::to_json_document(&meta, &Out { pmfs, tv_distance: tv })?
        }
        Format::Csv => {
            let mut out = meta.comment_block();
            let max = columns.iter().map(|(_, p)| p.max_value()).max().unwrap_or(0);
            out.push_str("value,t0_green,t1_green,t0_red,t1_red\n");
            for k in 0..=max {
                let _ = write!(out, "{k}");
                for (_, p) in &columns {
                    let _ = write!(out, ",{}", p.prob(k));
                }
                out.push('\n');
            }
            if !tv.is_empty() {
                out.push_str("\nstatistic,tv_distance\n");
                for (name, d) in &tv {
                    let _ = writeln!(out, "{name},{d}");
                }
            }
            out
        }
    };
    emit(&a.output.out, &text)
}

fn surrogate(mut a: SurrogateArgs) -> Result<()> {
    let seed = resolve_seed(a.seed);
    a.seed = Some(seed);
    let config = a.config();
    let g = io::generate_surrogate(&config, seed)?;
    let meta = RunMetadata::new("surrogate", Some(seed), &config)?;
    let text = format!("{}{}", meta.comment_block(), io::format_topic_graph(&TopicGraphFile::unnamed(g)));
    emit(&a.out, &text)
}

fn baseline(a: BaselineArgs) -> Result<()> {
    let criterion: Criterion = a.criterion.parse()?;
    let b = chance_baseline(a.candidates, a.reds, criterion)?;
    println!("{}", b.value);
    eprintln!("{}", if b.exact { "exact enumeration" } else { "Monte Carlo estimate" });
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    let workers = cli.workers;
    if workers == Some(0) {
        return Err(Error::Input("--workers must be positive".into()));
    }
    match cli.command {
        Command::Simulate(a) => simulate(a),
        Command::Sweep(a) => sweep(a, workers),
        Command::Surface(a) => surface(a, workers),
        Command::Importance(a) => importance(a, workers),
        Command::Estimate(a) => estimate(a),
        Command::Analytic(a) => analytic(a, workers),
        Command::Surrogate(a) => surrogate(a),
        Command::Baseline(a) => baseline(a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_io() { 2 } else { 1 })
        }
    }
}
