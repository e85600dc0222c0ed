//! Text formats, result tables and the synthetic corpus generator.
//!
//! # Topic graph files
//!
//! ```text
//! #n=4
//! #k=2
//! #vertex 0 alice@example.com
//! e 0 1 3 0.25 0.75
//! e 1 2 1 1 0
//! ```
//!
//! Header lines come first. `#vertex` lines are optional and name vertices.
//! Each `e` line holds the two endpoints, the message count and `k` topic
//! probabilities. Other lines starting with `#` are comments.
//!
//! # Attributed graph files
//!
//! ```text
//! #n=5
//! #k=2
//! r 0
//! r 1
//! i 0
//! e 0 1 1
//! e 1 4 2
//! ```
//!
//! `r` marks a truly red vertex, `i` an identified one (which must also be
//! red), and `e u v a` an edge with attribute `a` in `1..=k`.
//!
//! # Result tables
//!
//! Every table starts with `#` metadata lines naming the command, the seed
//! and the resolved configuration as JSON, then a CSV header and data rows.
//! Column layouts:
//!
//! | table | columns |
//! |---|---|
//! | sweep | `n,p0,p1,p2,s0,s1,s2,m,m_prime,gamma,criterion,mean,stderr,replicates,chance,chance_exact` |
//! | surface | `n,m,m_prime,y,gamma,mean,stderr,replicates` |
//! | importance | `rho_lo,rho_hi,p_lo,p_hi,partitions,insufficient,gamma_star,fusion_advantage,gamma,criterion,mean,stderr` |
//! | estimate bins | `component,lower,partitions,insufficient,gamma,mrr` |

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng as _;
use rand_distr::{Distribution, Gamma, Geometric};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::experiments::{GammaSurface, SweepResult, SweepSpec};
use crate::graph::{AttributedGraph, EdgeAttr, VertexAttr, VertexId};
use crate::importance::{validate_edge, EstimateBin, ImportanceReport, TopicEdge, TopicGraph};
use crate::kappa::KappaParams;
use crate::metrics::Criterion;
use crate::seed;

/// A topic graph plus the optional external names of its vertices.
#[derive(Clone, Debug, PartialEq)]
pub struct TopicGraphFile {
    pub graph: TopicGraph,
    pub names: BTreeMap<VertexId, String>,
}

impl TopicGraphFile {
    pub fn unnamed(graph: TopicGraph) -> Self {
        TopicGraphFile { graph, names: BTreeMap::new() }
    }
}

fn read_to_string(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|source| Error::Io { path: path.to_path_buf(), source })
}

/// Writes `contents` to `path`, creating parent directories.
pub fn write_file(path: &Path, contents: &str) -> Result<()> {
    let io = |source| Error::Io { path: path.to_path_buf(), source };
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(io)?;
    }
    std::fs::write(path, contents).map_err(io)
}

fn parse_err(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse { line, msg: msg.into() }
}

fn invalid(line: usize, msg: impl Into<String>) -> Error {
    Error::Validation { line, msg: msg.into() }
}

fn field<T: std::str::FromStr>(line: usize, what: &str, s: Option<&str>) -> Result<T> {
    let s = s.ok_or_else(|| parse_err(line, format!("missing {what}")))?;
    s.parse().map_err(|_| parse_err(line, format!("bad {what} {s:?}")))
}

/// Shared header handling: `#n=` and `#k=` must precede any record.
#[derive(Default)]
struct Header {
    n: Option<usize>,
    k: Option<usize>,
}

impl Header {
    /// Returns `true` if the line was a header or comment line.
    fn consume(&mut self, line: usize, text: &str) -> Result<bool> {
        let Some(rest) = text.strip_prefix('#') else {
            return Ok(false);
        };
        if let Some(v) = rest.strip_prefix("n=") {
            self.n = Some(field(line, "vertex count", Some(v.trim()))?);
        } else if let Some(v) = rest.strip_prefix("k=") {
            self.k = Some(field(line, "attribute count", Some(v.trim()))?);
        }
        Ok(true)
    }

    fn require(&self, line: usize) -> Result<(usize, usize)> {
        match (self.n, self.k) {
            (Some(n), Some(k)) => Ok((n, k)),
            _ => Err(parse_err(line, "record before #n= and #k= headers")),
        }
    }
}

pub fn parse_topic_graph(text: &str) -> Result<TopicGraphFile> {
    let mut header = Header::default();
    let mut names = BTreeMap::new();
    let mut edges = Vec::new();
    let mut seen = std::collections::HashSet::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let text = raw.trim();
        if text.is_empty() {
            continue;
        }
        if let Some(rest) = text.strip_prefix("#vertex") {
            let (n, _) = header.require(line)?;
            let mut parts = rest.split_whitespace();
            let id: VertexId = field(line, "vertex id", parts.next())?;
            let name = parts.collect::<Vec<_>>().join(" ");
            if name.is_empty() {
                return Err(parse_err(line, "missing vertex name"));
            }
            if id >= n {
                return Err(invalid(line, format!("vertex {id} out of range for n={n}")));
            }
            if names.insert(id, name).is_some() {
                return Err(invalid(line, format!("vertex {id} named twice")));
            }
            continue;
        }
        if header.consume(line, text)? {
            continue;
        }
        let (n, k) = header.require(line)?;
        let mut parts = text.split_whitespace();
        if parts.next() != Some("e") {
            return Err(parse_err(line, format!("unrecognized record {text:?}")));
        }
        let u: VertexId = field(line, "endpoint", parts.next())?;
        let v: VertexId = field(line, "endpoint", parts.next())?;
        let count: u32 = field(line, "message count", parts.next())?;
        let topics = parts
            .map(|s| s.parse::<f64>().map_err(|_| parse_err(line, format!("bad probability {s:?}"))))
            .collect::<Result<Vec<_>>>()?;
        let e = TopicEdge { u, v, count, topics };
        validate_edge(n, k, &e).map_err(|msg| invalid(line, msg))?;
        if !seen.insert((u.min(v), u.max(v))) {
            return Err(invalid(line, format!("duplicate pair ({u}, {v})")));
        }
        edges.push(e);
    }
    let (n, k) = header.require(text.lines().count().max(1))?;
    Ok(TopicGraphFile { graph: TopicGraph::new(n, k, edges)?, names })
}

pub fn read_topic_graph(path: &Path) -> Result<TopicGraphFile> {
    parse_topic_graph(&read_to_string(path)?)
}

/// Shortest decimal that round-trips the value rounded to 12 significant digits.
pub fn format_prob(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    let rounded: f64 = format!("{x:.11e}").parse().expect("formatted float parses");
    format!("{rounded}")
}

/// Canonical form: edges sorted by pair, topics in index order.
pub fn format_topic_graph(file: &TopicGraphFile) -> String {
    let g = &file.graph;
    let mut out = format!("#n={}\n#k={}\n", g.n(), g.k());
    for (id, name) in &file.names {
        let _ = writeln!(out, "#vertex {id} {name}");
    }
    for e in g.edges() {
        let _ = write!(out, "e {} {} {}", e.u, e.v, e.count);
        for &t in &e.topics {
            out.push(' ');
            out.push_str(&format_prob(t));
        }
        out.push('\n');
    }
    out
}

pub fn write_topic_graph(file: &TopicGraphFile, path: &Path) -> Result<()> {
    write_file(path, &format_topic_graph(file))
}

pub fn parse_attributed_graph(text: &str) -> Result<AttributedGraph> {
    let mut header = Header::default();
    let mut red = Vec::new();
    let mut identified = Vec::new();
    let mut edges = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let text = raw.trim();
        if text.is_empty() || header.consume(line, text)? {
            continue;
        }
        let (n, k) = header.require(line)?;
        let mut parts = text.split_whitespace();
        let tag = parts.next().unwrap_or_default();
        let vertex = |s: Option<&str>| -> Result<VertexId> {
            let v: VertexId = field(line, "vertex id", s)?;
            if v >= n {
                return Err(invalid(line, format!("vertex {v} out of range for n={n}")));
            }
            Ok(v)
        };
        match tag {
            "r" => red.push(vertex(parts.next())?),
            "i" => identified.push(vertex(parts.next())?),
            "e" => {
                let u = vertex(parts.next())?;
                let v = vertex(parts.next())?;
                let a: u16 = field(line, "edge attribute", parts.next())?;
                if a == 0 || a as usize > k {
                    return Err(invalid(line, format!("edge attribute {a} outside 1..={k}")));
                }
                edges.push((u, v, EdgeAttr::new(a)?));
            }
            _ => return Err(parse_err(line, format!("unrecognized record {text:?}"))),
        }
        if parts.next().is_some() {
            return Err(parse_err(line, "trailing fields"));
        }
    }
    let (n, k) = header.require(text.lines().count().max(1))?;
    let k = u16::try_from(k).map_err(|_| invalid(1, "attribute count too large"))?;
    let mut truth = vec![VertexAttr::Green; n];
    for v in red {
        truth[v] = VertexAttr::Red;
    }
    let mut observed = vec![VertexAttr::Occluded; n];
    for v in identified {
        observed[v] = VertexAttr::Red;
    }
    AttributedGraph::new(k, edges, truth, observed)
}

pub fn read_attributed_graph(path: &Path) -> Result<AttributedGraph> {
    parse_attributed_graph(&read_to_string(path)?)
}

pub fn format_attributed_graph(g: &AttributedGraph) -> String {
    let mut out = format!("#n={}\n#k={}\n", g.n(), g.k_edge_attrs());
    for v in g.red_set() {
        let _ = writeln!(out, "r {v}");
    }
    for v in g.identified_set() {
        let _ = writeln!(out, "i {v}");
    }
    for &(u, v, a) in g.edges() {
        let _ = writeln!(out, "e {u} {v} {}", a.value());
    }
    out
}

/// Knobs of the synthetic corpus.
///
/// Vertices are split into `groups` disjoint latent groups of `group_size`
/// (the rest belong to none). Pairs inside a group connect with probability
/// `group_density`, all other pairs with a background probability chosen so
/// the expected overall density is `density`. Every edge gets a message count
/// `1 + Geometric` with mean `mean_messages`, and a topic vector drawn from a
/// Dirichlet with total concentration `concentration` around a base
/// distribution. The base is a corpus-wide topic popularity vector; inside a
/// group it is mixed with weight `tilt` toward that group's `group_topics`
/// favourite topics.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SurrogateConfig {
    pub n: usize,
    pub k: usize,
    pub density: f64,
    pub groups: usize,
    pub group_size: usize,
    pub group_density: f64,
    pub group_topics: usize,
    pub tilt: f64,
    pub concentration: f64,
    pub mean_messages: f64,
}

impl Default for SurrogateConfig {
    /// 184 vertices, 32 topics, 5% density.
    fn default() -> Self {
        SurrogateConfig {
            n: 184,
            k: 32,
            density: 0.05,
            groups: 1,
            group_size: 26,
            group_density: 0.9,
            group_topics: 3,
            tilt: 0.18,
            concentration: 100.0,
            mean_messages: 4.0,
        }
    }
}

impl SurrogateConfig {
    fn background_density(&self) -> Result<f64> {
        let pairs = |x: usize| (x * x.saturating_sub(1) / 2) as f64;
        let total = pairs(self.n);
        let inside = self.groups as f64 * pairs(self.group_size);
        let target = self.density * total;
        let expected_inside = inside * self.group_density;
        if total == inside {
            return Ok(0.0);
        }
        let b = (target - expected_inside) / (total - inside);
        if !(0.0..=1.0).contains(&b) {
            return Err(Error::input(format!(
                "groups contribute {expected_inside:.1} expected edges, incompatible with density {}",
                self.density
            )));
        }
        Ok(b)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 4 {
            return Err(Error::input(format!("need n >= 4, got {}", self.n)));
        }
        if self.k < 2 {
            return Err(Error::input(format!("need k >= 2, got {}", self.k)));
        }
        if !(self.density > 0.0 && self.density < 1.0) {
            return Err(Error::input(format!("density must lie in (0, 1), got {}", self.density)));
        }
        if self.groups * self.group_size > self.n {
            return Err(Error::input("groups do not fit in the vertex set"));
        }
        if self.groups > 0 && self.group_size < 2 {
            return Err(Error::input("groups need at least 2 vertices"));
        }
        if !(0.0..=1.0).contains(&self.group_density) || !(0.0..=1.0).contains(&self.tilt) {
            return Err(Error::input("group density and tilt must lie in [0, 1]"));
        }
        if self.group_topics == 0 || self.group_topics > self.k {
            return Err(Error::input("group topics must lie in 1..=k"));
        }
        if !(self.concentration > 0.0 && self.concentration.is_finite()) {
            return Err(Error::input("concentration must be positive"));
        }
        if !(self.mean_messages >= 1.0 && self.mean_messages.is_finite()) {
            return Err(Error::input("mean message count must be at least 1"));
        }
        self.background_density().map(|_| ())
    }
}

/// Normalized Gamma draws; entries of `alpha` are floored to keep every
/// draw strictly positive in total.
fn dirichlet(rng: &mut seed::Rng, alpha: &[f64]) -> Vec<f64> {
    loop {
        let mut x: Vec<f64> = alpha
            .iter()
            .map(|&a| Gamma::new(a.max(1e-3), 1.0).expect("positive shape").sample(rng))
            .collect();
        let sum: f64 = x.iter().sum();
        if sum > 0.0 && sum.is_finite() {
            x.iter_mut().for_each(|v| *v /= sum);
            return x;
        }
    }
}

/// Draws a surrogate corpus; deterministic in `seed`.
pub fn generate_surrogate(config: &SurrogateConfig, seed: u64) -> Result<TopicGraph> {
    config.validate()?;
    let background = config.background_density()?;
    let k = config.k;
    let mut rng = seed::rng(seed);

    let mut order: Vec<VertexId> = (0..config.n).collect();
    order.shuffle(&mut rng);
    let mut group_of = vec![None; config.n];
    for (g, chunk) in order.chunks(config.group_size.max(1)).take(config.groups).enumerate() {
        for &v in chunk {
            group_of[v] = Some(g);
        }
    }

    let popularity = dirichlet(&mut rng, &vec![1.0; k]);
    let group_bases: Vec<Vec<f64>> = (0..config.groups)
        .map(|_| {
            let mut topics: Vec<usize> = (0..k).collect();
            topics.shuffle(&mut rng);
            let mut base: Vec<f64> = popularity.iter().map(|p| (1.0 - config.tilt) * p).collect();
            for &t in &topics[..config.group_topics] {
                base[t] += config.tilt / config.group_topics as f64;
            }
            base
        })
        .collect();

    let messages = Geometric::new(1.0 / config.mean_messages).map_err(|e| Error::input(e.to_string()))?;
    let mut edges = Vec::new();
    for u in 0..config.n {
        for v in u + 1..config.n {
            let shared = match (group_of[u], group_of[v]) {
                (Some(a), Some(b)) if a == b => Some(a),
                _ => None,
            };
            let p = if shared.is_some() { config.group_density } else { background };
            if rng.random::<f64>() >= p {
                continue;
            }
            let base = shared.map_or(&popularity, |g| &group_bases[g]);
            let alpha: Vec<f64> = base.iter().map(|b| b * config.concentration).collect();
            let count = 1 + u32::try_from(messages.sample(&mut rng)).unwrap_or(u32::MAX - 1);
            edges.push(TopicEdge { u, v, count, topics: dirichlet(&mut rng, &alpha) });
        }
    }
    TopicGraph::new(config.n, k, edges)
}

/// Command, seed and resolved configuration echoed at the top of every output.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunMetadata {
    pub command: String,
    /// `None` for commands that draw no randomness.
    pub seed: Option<u64>,
    pub config: serde_json::Value,
}

impl RunMetadata {
    pub fn new(command: &str, seed: Option<u64>, config: impl Serialize) -> Result<Self> {
        let config = serde_json::to_value(config).map_err(|e| Error::input(e.to_string()))?;
        Ok(RunMetadata { command: command.into(), seed, config })
    }

    pub fn comment_block(&self) -> String {
        let mut out = format!("# command: {}\n", self.command);
        if let Some(seed) = self.seed {
            let _ = writeln!(out, "# seed: {seed}");
        }
        let _ = writeln!(out, "# config: {}", self.config);
        out
    }
}

/// `{"metadata": ..., "result": ...}`, pretty-printed with a trailing newline.
pub fn to_json_document(meta: &RunMetadata, result: &impl Serialize) -> Result<String> {
    #[derive(Serialize)]
    struct Doc<'a, T> {
        metadata: &'a RunMetadata,
        result: &'a T,
    }
    let mut s = serde_json::to_string_pretty(&Doc { metadata: meta, result }).map_err(|e| Error::input(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

/// Lines that are not `#` metadata.
pub fn data_section(text: &str) -> String {
    text.lines().filter(|l| !l.starts_with('#')).flat_map(|l| [l, "\n"]).collect()
}

pub const SWEEP_COLUMNS: &str =
    "n,p0,p1,p2,s0,s1,s2,m,m_prime,gamma,criterion,mean,stderr,replicates,chance,chance_exact";

/// One row per cell, weight and criterion in [`Criterion::MAIN`].
pub fn sweep_csv(meta: &RunMetadata, spec: &SweepSpec, result: &SweepResult) -> Result<String> {
    let s = spec.effective_s()?;
    let (p, s) = (spec.p.as_array(), s.as_array());
    let mut out = meta.comment_block();
    for sk in &result.skipped {
        let _ = writeln!(out, "# skipped: m={} m_prime={} reason={}", sk.m, sk.m_prime, sk.reason);
    }
    out.push_str(SWEEP_COLUMNS);
    out.push('\n');
    for cell in &result.cells {
        for r in &cell.reports {
            for c in Criterion::MAIN {
                let stat = r.stat(c);
                let chance = cell.chance_for(c);
                let _ = writeln!(
                    out,
                    "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
                    spec.n,
                    p[0],
                    p[1],
                    p[2],
                    s[0],
                    s[1],
                    s[2],
                    cell.m,
                    cell.m_prime,
                    r.gamma,
                    c,
                    stat.mean,
                    stat.stderr,
                    r.replicates,
                    chance.map_or(String::new(), |b| b.value.to_string()),
                    chance.map_or(String::new(), |b| b.exact.to_string()),
                );
            }
        }
    }
    Ok(out)
}

pub const SURFACE_COLUMNS: &str = "n,m,m_prime,y,gamma,mean,stderr,replicates";

pub fn surface_csv(meta: &RunMetadata, params: &KappaParams, surface: &GammaSurface) -> String {
    let mut out = meta.comment_block();
    out.push_str(SURFACE_COLUMNS);
    out.push('\n');
    for (y, (means, errs)) in surface.mean.iter().zip(&surface.stderr).enumerate() {
        for ((g, mean), se) in surface.gammas.iter().zip(means).zip(errs) {
            let _ = writeln!(
                out,
                "{},{},{},{},{g},{mean},{se},{}",
                params.n,
                params.m,
                params.m_prime,
                y + 1,
                surface.replicates
            );
        }
    }
    out
}

pub const IMPORTANCE_COLUMNS: &str =
    "rho_lo,rho_hi,p_lo,p_hi,partitions,insufficient,gamma_star,fusion_advantage,gamma,criterion,mean,stderr";

pub fn importance_csv(meta: &RunMetadata, report: &ImportanceReport) -> String {
    let mut out = meta.comment_block();
    out.push_str(IMPORTANCE_COLUMNS);
    out.push('\n');
    for bin in &report.bins {
        let advantage = bin.fusion_advantage.map_or(String::new(), |a| a.to_string());
        for r in &bin.reports {
            for c in Criterion::MAIN {
                let stat = r.stat(c);
                let _ = writeln!(
                    out,
                    "{},{},{},{},{},{},{},{advantage},{},{c},{},{}",
                    bin.rho_range.0,
                    bin.rho_range.1,
                    bin.p_range.0,
                    bin.p_range.1,
                    bin.partitions,
                    bin.insufficient,
                    bin.gamma_star,
                    r.gamma,
                    stat.mean,
                    stat.stderr,
                );
            }
        }
    }
    out
}

pub const ESTIMATE_BIN_COLUMNS: &str = "component,lower,partitions,insufficient,gamma,mrr";

pub fn estimate_bins_csv(meta: &RunMetadata, gammas: &[f64], bins: &[EstimateBin]) -> String {
    let mut out = meta.comment_block();
    out.push_str(ESTIMATE_BIN_COLUMNS);
    out.push('\n');
    for b in bins {
        for (g, mrr) in gammas.iter().zip(&b.mrr) {
            let _ = writeln!(
                out,
                "{},{},{},{},{g},{mrr}",
                b.component.name(),
                b.lower,
                b.partitions,
                b.insufficient
            );
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::SimpleGraph;

    const SMALL: &str = "#n=4\n#k=2\n#vertex 0 alice@example.com\n# a comment\ne 0 1 3 0.25 0.75\ne 2 1 1 1 0\n";

    #[test]
    fn parse_small_file() {
        let f = parse_topic_graph(SMALL).unwrap();
        assert_eq!(f.graph.n(), 4);
        assert_eq!(f.graph.edge_count(), 2);
        assert_eq!(f.names[&0], "alice@example.com");
        assert_eq!((f.graph.edges()[1].u, f.graph.edges()[1].v), (1, 2));
    }

    #[test]
    fn empty_edge_section() {
        let f = parse_topic_graph("#n=7\n#k=3\n").unwrap();
        assert_eq!((f.graph.n(), f.graph.edge_count()), (7, 0));
    }

    #[test]
    fn errors_name_the_line() {
        let bad_sum = "#n=3\n#k=2\ne 0 1 1 0.5 0.3\n";
        assert!(matches!(parse_topic_graph(bad_sum), Err(Error::Validation { line: 3, .. })));
        let dup = "#n=3\n#k=2\ne 0 1 1 0.5 0.5\n\ne 1 0 2 1 0\n";
        assert!(matches!(parse_topic_graph(dup), Err(Error::Validation { line: 5, .. })));
        let unknown = "#n=3\n#k=2\ne 0 3 1 0.5 0.5\n";
        assert!(matches!(parse_topic_graph(unknown), Err(Error::Validation { line: 3, .. })));
        let malformed = "#n=3\n#k=2\ne 0 x 1 0.5 0.5\n";
        assert!(matches!(parse_topic_graph(malformed), Err(Error::Parse { line: 3, .. })));
        let no_header = "e 0 1 1 0.5 0.5\n";
        assert!(matches!(parse_topic_graph(no_header), Err(Error::Parse { line: 1, .. })));
        let short = "#n=3\n#k=3\ne 0 1 1 0.5 0.5\n";
        assert!(matches!(parse_topic_graph(short), Err(Error::Validation { line: 3, .. })));
    }

    #[test]
    fn write_read_identity() {
        let f = parse_topic_graph(SMALL).unwrap();
        let text = format_topic_graph(&f);
        assert_eq!(parse_topic_graph(&text).unwrap(), f);
        assert_eq!(format_topic_graph(&parse_topic_graph(&text).unwrap()), text);
    }

    #[test]
    fn relabeled_graphs_differ() {
        let a = parse_topic_graph("#n=3\n#k=2\ne 0 1 1 1 0\n").unwrap();
        let b = parse_topic_graph("#n=3\n#k=2\ne 1 2 1 1 0\n").unwrap();
        assert_ne!(format_topic_graph(&a), format_topic_graph(&b));
    }

    #[test]
    fn probabilities_keep_twelve_digits() {
        assert_eq!(format_prob(0.1), "0.1");
        assert_eq!(format_prob(1.0 / 3.0), "0.333333333333");
        assert_eq!(format_prob(2.5e-7), "0.00000025");
        assert_eq!(format_prob(1.0), "1");
    }

    #[test]
    fn attributed_round_trip() {
        let text = "#n=5\n#k=2\nr 0\nr 1\ni 0\ne 0 1 1\ne 1 4 2\n";
        let g = parse_attributed_graph(text).unwrap();
        assert_eq!(g.red_set(), vec![0, 1]);
        assert_eq!(g.identified_set(), vec![0]);
        assert_eq!(format_attributed_graph(&g), text);
        assert!(matches!(parse_attributed_graph("#n=2\n#k=2\ne 0 1 3\n"), Err(Error::Validation { line: 3, .. })));
        assert!(parse_attributed_graph("#n=2\n#k=2\ni 0\n").is_err());
    }

    #[test]
    fn surrogate_is_deterministic_and_valid() {
        let c = SurrogateConfig::default();
        let a = generate_surrogate(&c, 1).unwrap();
        assert_eq!(a, generate_surrogate(&c, 1).unwrap());
        assert_ne!(a, generate_surrogate(&c, 2).unwrap());
        assert_eq!((a.n(), a.k()), (184, 32));
        assert!(a.edges().iter().all(|e| e.count >= 1));
    }

    #[test]
    fn tiny_density_is_nearly_empty() {
        let c = SurrogateConfig { density: 1e-6, groups: 0, ..SurrogateConfig::default() };
        let g = generate_surrogate(&c, 3).unwrap();
        assert!(g.edge_count() <= 2);
    }

    #[test]
    fn surrogate_validation() {
        let base = SurrogateConfig::default();
        for bad in [
            SurrogateConfig { n: 3, ..base.clone() },
            SurrogateConfig { k: 1, ..base.clone() },
            SurrogateConfig { density: 0.0, ..base.clone() },
            SurrogateConfig { density: 1.0, ..base.clone() },
            SurrogateConfig { density: 0.001, ..base.clone() },
            SurrogateConfig { group_size: 200, ..base.clone() },
        ] {
            assert!(generate_surrogate(&bad, 0).is_err(), "{bad:?}");
        }
    }

    #[test]
    fn data_section_strips_metadata() {
        assert_eq!(data_section("# a\nx,y\n1,2\n"), "x,y\n1,2\n");
    }
}
