//! The `ndrank` command-line front end.
//!
//! Subcommands: `check`, `rays`, `hrep`, `factorize`, `bounds`, `sample`.
//! Exit codes are 0 for success (or a positive membership verdict), 1 for a
//! negative verdict and 2 for usage, parse and other errors.
//!
//! Tensor arguments are `.json` files, CSV matrices or `fixture:NAME`; poset
//! arguments are poset files, `chain:N`, `trivial:N`, `star:N` or
//! `fixture:NAME`. When the tensor is a fixture and no posets are given, the
//! fixture's own posets are used.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::cone::{
    finite_rank_hrep, finite_rank_hrep_dd, finite_rank_vrep, format_normal, is_monotone,
    membership_finite_rank, order_cone_vrep, sample_finite_rank_probability,
    MembershipCertificate,
};
use crate::error::{NdError, Result};
use crate::factor::{
    hals, rank1_exponential, rank1_multinomial, rank1_poisson, rank_bounds, FitConfig,
    InitStrategy, Loss, NDFactorization,
};
use crate::fixtures;
use crate::io::{self, FactorizationExport};
use crate::poset::Poset;
use crate::tensor::Tensor;

pub const EXIT_OK: i32 = 0;
pub const EXIT_NEGATIVE: i32 = 1;
pub const EXIT_ERROR: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "ndrank", version, about = "Nondecreasing tensor rank toolkit")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Certify whether a tensor is monotone and has finite ND rank.
    Check(CheckArgs),
    /// List extremal rays of order cones.
    Rays(RaysArgs),
    /// Facet inequalities of the finite ND rank cone.
    Hrep(HrepArgs),
    /// Fit a nondecreasing factorization.
    Factorize(FactorizeArgs),
    /// Print ND rank bounds for a list of posets.
    Bounds(BoundsArgs),
    /// Estimate the finite-rank fraction of the m x m order polytope.
    Sample(SampleArgs),
}

#[derive(Debug, Args)]
pub struct CheckArgs {
    pub tensor: String,
    /// One poset per mode.
    #[arg(short, long = "poset")]
    pub posets: Vec<String>,
    #[arg(long)]
    pub tol: Option<f64>,
    /// Print the certificates as JSON.
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args)]
pub struct RaysArgs {
    #[arg(required = true)]
    pub posets: Vec<String>,
    /// Rays of the order cone of the product poset.
    #[arg(long, conflicts_with = "finite_rank")]
    pub product: bool,
    /// Generators of the finite ND rank cone (outer products of rays).
    #[arg(long)]
    pub finite_rank: bool,
    #[arg(long)]
    pub count_only: bool,
}

#[derive(Debug, Args)]
pub struct HrepArgs {
    #[arg(required = true)]
    pub posets: Vec<String>,
    /// Always use double description instead of the closed form.
    #[arg(long)]
    pub dd: bool,
    /// Print inequalities in tensor index notation.
    #[arg(long)]
    pub pretty: bool,
    /// Write the integer normals to a file instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct FactorizeArgs {
    pub tensor: String,
    #[arg(short, long = "poset")]
    pub posets: Vec<String>,
    #[arg(short, long, default_value_t = 1)]
    pub rank: usize,
    #[arg(long, default_value_t = 5)]
    pub restarts: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value = "gaussian")]
    pub loss: Loss,
    #[arg(long, default_value_t = 500)]
    pub max_sweeps: usize,
    #[arg(long, default_value_t = 1e-9)]
    pub rel_tol: f64,
    /// `als`, `random` or `mixed`.
    #[arg(long, default_value = "als", value_parser = parse_init)]
    pub init: InitStrategy,
    #[arg(long)]
    pub threads: Option<usize>,
    /// ℓ1 norms of the factor vectors per mode for the CSV tables, with `*`
    /// marking the mode that absorbs the scale, e.g. `*,7,1`.
    #[arg(long)]
    pub gauge: Option<String>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BoundsArgs {
    #[arg(required = true)]
    pub posets: Vec<String>,
}

#[derive(Debug, Args)]
pub struct SampleArgs {
    #[arg(long)]
    pub m: usize,
    #[arg(long, default_value_t = 100_000)]
    pub n: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

fn parse_init(s: &str) -> std::result::Result<InitStrategy, String> {
    match s {
        "als" => Ok(InitStrategy::AlsProject),
        "random" => Ok(InitStrategy::RandomCone),
        "mixed" => Ok(InitStrategy::Mixed),
        other => Err(format!("unknown init `{other}` (als, random, mixed)")),
    }
}

/// Provenance record written next to every output artifact.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub inputs: Vec<String>,
    pub config: serde_json::Value,
    pub seed: Option<u64>,
    pub version: String,
    pub started_unix: u64,
    pub wall_time_secs: f64,
}

impl RunManifest {
    fn new(command: &str, inputs: Vec<String>, config: serde_json::Value, seed: Option<u64>) -> Self {
        RunManifest {
            command: command.to_string(),
            inputs,
            config,
            seed,
            version: env!("CARGO_PKG_VERSION").to_string(),
            started_unix: SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0),
            wall_time_secs: 0.0,
        }
    }

    fn write(mut self, path: &Path, started: Instant) -> Result<()> {
        self.wall_time_secs = started.elapsed().as_secs_f64();
        let text = serde_json::to_string_pretty(&self).expect("manifest serializes");
        fs::write(path, text + "\n")?;
        Ok(())
    }
}

/// Parses `args` (including the program name) and runs the command, writing
/// normal output to `out` and diagnostics to `err`. Returns the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_ERROR } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if code == EXIT_OK {
                write!(out, "{text}")
            } else {
                write!(err, "{text}")
            };
            return code;
        }
    };
    match execute(&cli.command, out) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            EXIT_ERROR
        }
    }
}

fn execute(cmd: &Command, out: &mut dyn Write) -> Result<i32> {
    match cmd {
        Command::Check(a) => cmd_check(a, out),
        Command::Rays(a) => cmd_rays(a, out),
        Command::Hrep(a) => cmd_hrep(a, out),
        Command::Factorize(a) => cmd_factorize(a, out),
        Command::Bounds(a) => cmd_bounds(a, out),
        Command::Sample(a) => cmd_sample(a, out),
    }
}

fn w(e: std::io::Error) -> NdError {
    NdError::from(e)
}

/// Loads the tensor and its mode posets (with their display names).
fn load_problem(tensor: &str, poset_args: &[String]) -> Result<(Tensor, Vec<Poset>, Vec<String>)> {
    let t = io::load_tensor(tensor)?;
    let names: Vec<String> = if poset_args.is_empty() {
        match tensor.strip_prefix("fixture:") {
            Some(name) => fixtures::fixture_poset_names(name)?
                .iter()
                .map(|n| format!("fixture:{n}"))
                .collect(),
            None => {
                return Err(NdError::InvalidArgument(
                    "one --poset per tensor mode is required".into(),
                ))
            }
        }
    } else {
        poset_args.to_vec()
    };
    let posets = names
        .iter()
        .map(|s| io::load_poset(s))
        .collect::<Result<Vec<_>>>()?;
    if posets.len() != t.order() {
        return Err(NdError::ShapeMismatch(format!(
            "tensor has {} modes but {} posets were given",
            t.order(),
            posets.len()
        )));
    }
    for (j, (p, &n)) in posets.iter().zip(t.shape()).enumerate() {
        if p.size() != n {
            return Err(NdError::ShapeMismatch(format!(
                "mode {j} has length {n} but poset `{}` has {} elements",
                names[j],
                p.size()
            )));
        }
    }
    Ok((t, posets, names))
}

/// `t12 <= t32` for a cover difference, `t11 >= 0` for a coordinate, and
/// the general form otherwise.
pub fn describe_normal(normal: &[i64], shape: &[usize]) -> String {
    let nz: Vec<(usize, i64)> = normal
        .iter()
        .enumerate()
        .filter(|(_, &c)| c != 0)
        .map(|(i, &c)| (i, c))
        .collect();
    if let [(a, ca), (b, cb)] = nz[..] {
        if ca == -cb && ca.abs() == 1 {
            let (lo, hi) = if ca < 0 { (a, b) } else { (b, a) };
            let mut unit_lo = vec![0; normal.len()];
            unit_lo[lo] = 1;
            let mut unit_hi = vec![0; normal.len()];
            unit_hi[hi] = 1;
            let name = |u: &[i64]| format_normal(u, shape).trim_end_matches(" >= 0").to_string();
            return format!("{} <= {}", name(&unit_lo), name(&unit_hi));
        }
    }
    format_normal(normal, shape)
}

fn print_certificate(
    out: &mut dyn Write,
    title: &str,
    cert: &MembershipCertificate,
    shape: &[usize],
) -> Result<()> {
    writeln!(
        out,
        "{title}: {} (method {:?}, tol {:.3e}, min value {:.6})",
        if cert.is_member() { "member" } else { "NOT a member" },
        cert.method,
        cert.tol,
        cert.min_value
    )
    .map_err(w)?;
    for (normal, value) in &cert.violated {
        writeln!(out, "  violated: {}  (value {value:.4})", describe_normal(normal, shape))
            .map_err(w)?;
    }
    Ok(())
}

fn cmd_check(a: &CheckArgs, out: &mut dyn Write) -> Result<i32> {
    let (t, posets, _) = load_problem(&a.tensor, &a.posets)?;
    let product = Poset::product(&posets)?;
    let mono = is_monotone(&t, &product, a.tol)?;
    let finite = membership_finite_rank(&t, &posets, a.tol)?;
    if a.json {
        let report = serde_json::json!({ "monotone": mono, "finite_rank": finite });
        writeln!(out, "{}", serde_json::to_string_pretty(&report).expect("serializes")).map_err(w)?;
    } else {
        print_certificate(out, "monotone", &mono, t.shape())?;
        print_certificate(out, "finite ND rank", &finite, t.shape())?;
    }
    Ok(if finite.is_member() {
        EXIT_OK
    } else {
        EXIT_NEGATIVE
    })
}

fn label_set(p: &Poset, set: &[usize]) -> String {
    let names: Vec<&str> = set.iter().map(|&i| p.labels()[i].as_str()).collect();
    format!("{{{}}}", names.join(","))
}

fn cmd_rays(a: &RaysArgs, out: &mut dyn Write) -> Result<i32> {
    let posets = a
        .posets
        .iter()
        .map(|s| io::load_poset(s))
        .collect::<Result<Vec<_>>>()?;
    if a.finite_rank {
        let per_mode = posets
            .iter()
            .map(order_cone_vrep)
            .collect::<Result<Vec<_>>>()?;
        let gens = finite_rank_vrep(&posets)?;
        if a.count_only {
            writeln!(out, "{}", gens.len()).map_err(w)?;
            return Ok(EXIT_OK);
        }
        // Generators come in row-major order over the per-mode ray lists.
        let counts: Vec<usize> = per_mode.iter().map(|v| v.len()).collect();
        for (k, g) in gens.iter().enumerate() {
            let mut rem = k;
            let mut parts = vec![String::new(); counts.len()];
            for j in (0..counts.len()).rev() {
                let i = rem % counts[j];
                rem /= counts[j];
                parts[j] = label_set(&posets[j], &per_mode[j].upsets()[i]);
            }
            writeln!(out, "{}  {}", parts.join(" x "), fmt_values(g.data())).map_err(w)?;
        }
        return Ok(EXIT_OK);
    }
    let poset = if a.product || posets.len() > 1 {
        if !a.product {
            return Err(NdError::InvalidArgument(
                "several posets given: choose --product or --finite-rank".into(),
            ));
        }
        Poset::product(&posets)?
    } else {
        posets[0].clone()
    };
    let vrep = order_cone_vrep(&poset)?;
    if a.count_only {
        writeln!(out, "{}", vrep.len()).map_err(w)?;
        return Ok(EXIT_OK);
    }
    for (u, g) in vrep.upsets().iter().zip(vrep.generators()) {
        writeln!(out, "{}  {}", label_set(&poset, u), fmt_values(g)).map_err(w)?;
    }
    Ok(EXIT_OK)
}

fn fmt_values(v: &[f64]) -> String {
    let parts: Vec<String> = v.iter().map(|x| format!("{x}")).collect();
    format!("[{}]", parts.join(" "))
}

fn cmd_hrep(a: &HrepArgs, out: &mut dyn Write) -> Result<i32> {
    let started = Instant::now();
    let posets = a
        .posets
        .iter()
        .map(|s| io::load_poset(s))
        .collect::<Result<Vec<_>>>()?;
    let (hrep, method) = if a.dd {
        (finite_rank_hrep_dd(&posets)?, "double-description")
    } else {
        match finite_rank_hrep(&posets) {
            Ok(h) => (h, "closed-form"),
            Err(NdError::HypothesisViolated(_)) => {
                (finite_rank_hrep_dd(&posets)?, "double-description")
            }
            Err(e) => return Err(e),
        }
    };
    let text = if a.pretty {
        io::hrep_to_pretty(&hrep)
    } else {
        io::hrep_to_text(&hrep)
    };
    match &a.out {
        Some(path) => {
            fs::write(path, &text)?;
            let mut manifest_path = path.clone().into_os_string();
            manifest_path.push(".manifest.json");
            RunManifest::new(
                "hrep",
                a.posets.clone(),
                serde_json::json!({ "dd": a.dd, "pretty": a.pretty, "method": method }),
                None,
            )
            .write(Path::new(&manifest_path), started)?;
            writeln!(out, "{} inequalities ({method}) written to {}", hrep.len(), path.display())
                .map_err(w)?;
        }
        None => write!(out, "{text}").map_err(w)?,
    }
    Ok(EXIT_OK)
}

/// Parses a `--gauge` spec into ℓ1 targets and the absorbing mode.
fn parse_gauge(spec: &str, order: usize) -> Result<(Vec<f64>, usize)> {
    let parts: Vec<&str> = spec.split(',').map(str::trim).collect();
    if parts.len() != order {
        return Err(NdError::InvalidArgument(format!(
            "--gauge needs {order} comma-separated entries"
        )));
    }
    let mut absorb = None;
    let mut targets = Vec::with_capacity(order);
    for (j, p) in parts.iter().enumerate() {
        if *p == "*" {
            if absorb.replace(j).is_some() {
                return Err(NdError::InvalidArgument("--gauge takes exactly one `*`".into()));
            }
            targets.push(1.0);
        } else {
            let v: f64 = p
                .parse()
                .ok()
                .filter(|v: &f64| *v > 0.0)
                .ok_or_else(|| NdError::InvalidArgument(format!("bad --gauge entry `{p}`")))?;
            targets.push(v);
        }
    }
    let absorb =
        absorb.ok_or_else(|| NdError::InvalidArgument("--gauge needs one `*` entry".into()))?;
    Ok((targets, absorb))
}

fn cmd_factorize(a: &FactorizeArgs, out: &mut dyn Write) -> Result<i32> {
    let started = Instant::now();
    let (t, posets, names) = load_problem(&a.tensor, &a.posets)?;
    if a.loss != Loss::Gaussian && a.rank != 1 {
        return Err(NdError::UnsupportedLossRank {
            loss: a.loss.name().to_string(),
            rank: a.rank,
        });
    }
    let gauge = a
        .gauge
        .as_deref()
        .map(|g| parse_gauge(g, t.order()))
        .transpose()?;
    let cfg = FitConfig {
        rank: a.rank,
        max_sweeps: a.max_sweeps,
        rel_tol: a.rel_tol,
        restarts: a.restarts,
        seed: a.seed,
        init: a.init,
        threads: a.threads,
        record_blocks: false,
    };
    let (mut fact, report): (NDFactorization, _) = match a.loss {
        Loss::Gaussian => {
            let (f, r) = hals(&t, &posets, &cfg)?;
            (f, Some(r))
        }
        Loss::Multinomial => (rank1_multinomial(&t)?, None),
        Loss::Poisson => (rank1_poisson(&t)?, None),
        Loss::Exponential => (rank1_exponential(&t, &posets)?, None),
    };
    fact.sort_terms();
    let recon = fact.reconstruct();
    let rss = t.distance(&recon)?.powi(2);
    let tss: f64 = t.data().iter().map(|v| v * v).sum();
    let objective = a.loss.objective(&t, &recon)?;
    let terms = match &gauge {
        Some((targets, absorb)) => fact.l1_gauge(targets, *absorb)?,
        None => fact
            .factors()
            .iter()
            .zip(fact.lambdas())
            .map(|(term, &l)| {
                let mut term = term.clone();
                for v in term[0].iter_mut() {
                    *v *= l;
                }
                term
            })
            .collect(),
    };

    writeln!(out, "loss: {}", a.loss.name()).map_err(w)?;
    writeln!(out, "rank: {}", fact.rank()).map_err(w)?;
    writeln!(out, "lambdas: {}", fmt_values(fact.lambdas())).map_err(w)?;
    if let Some(r) = &report {
        writeln!(
            out,
            "best restart: {} of {} ({} sweeps, converged: {})",
            r.best_restart, cfg.restarts, r.sweeps, r.converged
        )
        .map_err(w)?;
    }
    if a.loss != Loss::Gaussian {
        writeln!(out, "objective: {objective:.6}").map_err(w)?;
    }
    writeln!(out, "residual: {:.6}", rss.sqrt()).map_err(w)?;
    writeln!(out, "RSS: {rss:.4}").map_err(w)?;
    writeln!(out, "TSS: {tss:.4}").map_err(w)?;

    if let Some(dir) = &a.out {
        fs::create_dir_all(dir)?;
        let export = FactorizationExport::new(&fact, &names, report.as_ref(), rss);
        fs::write(dir.join("factorization.json"), export.to_json() + "\n")?;
        for (j, p) in posets.iter().enumerate() {
            fs::write(
                dir.join(format!("factors_mode{}.csv", j + 1)),
                io::factor_table_csv(&terms, j, p.labels()),
            )?;
        }
        let trace = match &report {
            Some(r) => r.best_trace().to_vec(),
            None => vec![objective],
        };
        fs::write(dir.join("trace.csv"), io::trace_csv(&trace))?;
        let mut inputs = vec![a.tensor.clone()];
        inputs.extend(names.iter().cloned());
        RunManifest::new(
            "factorize",
            inputs,
            serde_json::json!({
                "rank": cfg.rank,
                "restarts": cfg.restarts,
                "max_sweeps": cfg.max_sweeps,
                "rel_tol": cfg.rel_tol,
                "init": cfg.init,
                "threads": cfg.threads,
                "loss": a.loss,
                "gauge": a.gauge,
            }),
            Some(a.seed),
        )
        .write(&dir.join("manifest.json"), started)?;
        writeln!(out, "wrote {}", dir.display()).map_err(w)?;
    }
    Ok(EXIT_OK)
}

fn cmd_bounds(a: &BoundsArgs, out: &mut dyn Write) -> Result<i32> {
    let posets = a
        .posets
        .iter()
        .map(|s| io::load_poset(s))
        .collect::<Result<Vec<_>>>()?;
    let b = rank_bounds(&posets)?;
    writeln!(out, "rays per mode: {:?}", b.q).map_err(w)?;
    writeln!(out, "upper bound: {}", b.upper).map_err(w)?;
    match b.exact_max {
        Some(m) => writeln!(out, "max rank: {m}"),
        None => writeln!(out, "max rank: unknown"),
    }
    .map_err(w)?;
    if let Some((lo, hi)) = b.typical_range {
        writeln!(out, "typical ranks: {lo}..{hi}").map_err(w)?;
    }
    Ok(EXIT_OK)
}

fn cmd_sample(a: &SampleArgs, out: &mut dyn Write) -> Result<i32> {
    let s = sample_finite_rank_probability(a.m, a.n, a.seed)?;
    writeln!(
        out,
        "m={} n={} members={} estimate={:.6} stderr={:.6}",
        s.m, s.samples, s.members, s.estimate, s.stderr
    )
    .map_err(w)?;
    Ok(EXIT_OK)
}
