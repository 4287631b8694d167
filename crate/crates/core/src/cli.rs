//! Command-line front end. Every command reads and writes files, and every run
//! leaves a manifest with the flags, seed and SHA-256 digests of its files.

use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::io::{fmt17, matrix_from_csv, matrix_to_csv, to_json_string, write_json};
use crate::lowerbound_lab::{lowerbound_fixture, SearchConfig};
use crate::lowrank::{factorize, verify_assumption_lr, LRConfig, VerifyLimits};
use crate::model::{
    sample, smooth_componentwise, smooth_quadratic, w1_upper_bound, NetworkKind, PolyNetwork, SeedDistribution,
    SmoothingParams, SphereRadial,
};
use crate::moments::{
    estimate_pair_moments, estimate_quadratic_moments, exact_pair_moments, exact_quadratic_moments, MomentTable,
    PairMomentTable, QuadraticMomentTable, SigmaMode,
};
use crate::tensor_core::{gauge_distance, AlignConfig};
use crate::tensor_ring::{decompose, verify_assumption_tr, Backend, TRConfig};

/// Version tag written as the first line of bench CSV files.
pub const BENCH_CSV_VERSION: &str = "# polypush-bench v1";
pub const BENCH_CSV_HEADER: &str = "r,d,omega,ell,rho,eta,n,backend,seed,gauge_dist,residual,wall_ms";

#[derive(Debug, Parser)]
#[command(name = "polypush", version, about = "Learn polynomial transformations of Gaussian seeds from moments")]
pub struct Cli {
    /// Where to write the run manifest. Defaults to `<out>.manifest.json`, or stderr.
    #[arg(long, global = true)]
    pub manifest: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a smoothed network.
    Generate(GenerateArgs),
    /// Draw samples `(p_1(x), …, p_d(x))` as CSV.
    Sample(SampleArgs),
    /// Moment table from samples or, with --net, exact.
    Moments(MomentsArgs),
    /// Tensor ring decomposition of a quadratic moment table.
    SolveTr(SolveTrArgs),
    /// Low-rank factorization of a pair moment table.
    SolveLr(SolveLrArgs),
    /// Gauge distance between two networks and the implied W1 bound.
    Eval(EvalArgs),
    /// Measure the conditioning quantities of a network.
    Verify(VerifyArgs),
    /// Search a moment-matched pair and evaluate the hard instance.
    Lowerbound(LowerboundArgs),
    /// Sweep instance sizes and noise levels, writing a CSV.
    Bench(BenchArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Kind {
    Quadratic,
    Lowrank,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SigmaFlag {
    Gaussian,
    Identity,
}

impl From<SigmaFlag> for SigmaMode {
    fn from(s: SigmaFlag) -> Self {
        match s {
            SigmaFlag::Gaussian => SigmaMode::Gaussian,
            SigmaFlag::Identity => SigmaMode::Identity,
        }
    }
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[arg(long, value_enum)]
    pub kind: Kind,
    #[arg(long)]
    pub r: usize,
    #[arg(long)]
    pub d: usize,
    #[arg(long, default_value_t = 3)]
    pub omega: usize,
    #[arg(long, default_value_t = 1)]
    pub ell: usize,
    #[arg(long)]
    pub rho: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Base network to smooth; all zeros when absent.
    #[arg(long)]
    pub base: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SampleArgs {
    #[arg(long)]
    pub net: PathBuf,
    #[arg(long)]
    pub n: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// `gaussian` or `sphere:<radius>`.
    #[arg(long, default_value = "gaussian")]
    pub seed_dist: String,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct MomentsArgs {
    #[arg(long, value_enum)]
    pub kind: Kind,
    #[arg(long, conflicts_with = "net")]
    pub samples: Option<PathBuf>,
    /// Exact moments of this network instead of estimates.
    #[arg(long)]
    pub net: Option<PathBuf>,
    #[arg(long, default_value = "gaussian")]
    pub seed_dist: String,
    /// Noise budget recorded in the table.
    #[arg(long, default_value_t = 0.0)]
    pub eta: f64,
    #[arg(long, default_value_t = 0.05)]
    pub delta: f64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SolverFlags {
    #[arg(long, default_value = "local")]
    pub backend: Backend,
    /// Relaxation degree; module default when absent.
    #[arg(long)]
    pub degree: Option<usize>,
    #[arg(long, default_value_t = 20)]
    pub restarts: usize,
    #[arg(long, default_value_t = 1e-12)]
    pub tol: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct SolveTrArgs {
    #[arg(long)]
    pub moments: PathBuf,
    #[arg(long)]
    pub r: usize,
    #[command(flatten)]
    pub solver: SolverFlags,
    /// Ground truth, for reporting the gauge distance.
    #[arg(long)]
    pub truth: Option<PathBuf>,
    /// Report JSON.
    #[arg(long)]
    pub out: PathBuf,
    /// Also write the recovered network here.
    #[arg(long)]
    pub network: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SolveLrArgs {
    #[arg(long)]
    pub moments: PathBuf,
    #[arg(long)]
    pub r: usize,
    #[arg(long, default_value_t = 3)]
    pub omega: usize,
    #[arg(long, default_value_t = 1)]
    pub ell: usize,
    #[command(flatten)]
    pub solver: SolverFlags,
    #[arg(long, value_enum, default_value = "gaussian")]
    pub sigma: SigmaFlag,
    /// Smoothing scale used to draw local restarts.
    #[arg(long)]
    pub prior_rho: Option<f64>,
    #[arg(long)]
    pub truth: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    /// Also write the recovered network here (local backend only).
    #[arg(long)]
    pub network: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub a: PathBuf,
    #[arg(long)]
    pub b: PathBuf,
    #[arg(long, default_value = "gaussian")]
    pub seed_dist: String,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(long)]
    pub net: PathBuf,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct LowerboundArgs {
    #[arg(long)]
    pub r: usize,
    #[arg(long, default_value_t = 50)]
    pub restarts: usize,
    #[arg(long, default_value_t = 1e-10)]
    pub tol: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[arg(long, value_enum, default_value = "quadratic")]
    pub kind: Kind,
    #[arg(long, value_delimiter = ',', default_value = "2")]
    pub r: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_value = "3")]
    pub d: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_value = "0.5")]
    pub rho: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_value = "0")]
    pub eta: Vec<f64>,
    /// Sample counts; 0 means exact moments perturbed by η.
    #[arg(long, value_delimiter = ',', default_value = "0")]
    pub n: Vec<usize>,
    #[arg(long, default_value_t = 3)]
    pub omega: usize,
    #[arg(long, default_value_t = 1)]
    pub ell: usize,
    #[arg(long, default_value_t = 5)]
    pub seeds: u64,
    #[command(flatten)]
    pub solver: SolverFlags,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileDigest {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub args: Vec<String>,
    pub rng_seed: Option<u64>,
    pub version: String,
    pub inputs: Vec<FileDigest>,
    pub outputs: Vec<FileDigest>,
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path)?;
    Ok(Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect())
}

fn digests(paths: &[PathBuf]) -> Result<Vec<FileDigest>> {
    paths
        .iter()
        .map(|p| Ok(FileDigest { path: p.display().to_string(), sha256: sha256_file(p)? }))
        .collect()
}

/// What a command touched, and what it printed.
#[derive(Debug, Default)]
pub struct Outcome {
    pub inputs: Vec<PathBuf>,
    pub outputs: Vec<PathBuf>,
    pub rng_seed: Option<u64>,
    pub stdout: Option<String>,
}

pub fn parse_seed_dist(s: &str) -> Result<SeedDistribution> {
    if s == "gaussian" {
        return Ok(SeedDistribution::Gaussian);
    }
    if let Some(rad) = s.strip_prefix("sphere:") {
        let radius: f64 = rad.parse().map_err(|_| Error::Usage(format!("bad sphere radius '{rad}'")))?;
        return Ok(SeedDistribution::rotation_invariant(SphereRadial { radius }));
    }
    Err(Error::Usage(format!("unknown seed distribution '{s}' (expected gaussian or sphere:<radius>)")))
}

fn load_net(path: &Path) -> Result<PolyNetwork> {
    PolyNetwork::load(path).map_err(|e| Error::Usage(format!("{}: {e}", path.display())))
}

fn load_table(path: &Path) -> Result<MomentTable> {
    MomentTable::load(path).map_err(|e| Error::Usage(format!("{}: {e}", path.display())))
}

fn load_samples(path: &Path) -> Result<DMatrix<f64>> {
    matrix_from_csv(&std::fs::read_to_string(path)?).map_err(|e| Error::Usage(format!("{}: {e}", path.display())))
}

fn zero_base(kind: Kind, r: usize, d: usize, omega: usize, ell: usize) -> Result<PolyNetwork> {
    match kind {
        Kind::Quadratic => PolyNetwork::quadratic(vec![DMatrix::zeros(r, r); d]),
        Kind::Lowrank => PolyNetwork::lowrank(omega, vec![vec![DVector::zeros(r); ell]; d]),
    }
}

pub fn generate_network(kind: Kind, r: usize, d: usize, omega: usize, ell: usize, rho: f64, seed: u64, base: Option<PolyNetwork>) -> Result<PolyNetwork> {
    if r == 0 || d == 0 || ell == 0 || (kind == Kind::Lowrank && omega == 0) {
        return Err(Error::Usage("r, d, ω and ℓ must be positive".into()));
    }
    let base = match base {
        Some(b) => {
            let ok = b.r() == r && b.d() == d && match (kind, b.kind()) {
                (Kind::Quadratic, NetworkKind::Quadratic(_)) => true,
                (Kind::Lowrank, NetworkKind::LowRank { .. }) => b.omega() == omega && b.ell() == Some(ell),
                _ => false,
            };
            if !ok {
                return Err(Error::Usage("base network does not match the requested kind and dimensions".into()));
            }
            b
        }
        None => zero_base(kind, r, d, omega, ell)?,
    };
    let params = SmoothingParams { rho, base, seed };
    match kind {
        Kind::Quadratic => smooth_quadratic(&params),
        Kind::Lowrank => smooth_componentwise(&params),
    }
}

#[derive(Debug, Serialize)]
struct LowRankReportFile {
    /// Sorted-index values of each recovered unit.
    units: Vec<Vec<f64>>,
    network: Option<serde_json::Value>,
    residual: f64,
    gauge_distance: Option<f64>,
    backend: Backend,
    iterations: usize,
    restarts_used: usize,
    combo: Option<crate::tensor_ring::NonDegenCombo>,
    anchor: Option<(usize, usize)>,
    notes: Vec<String>,
}

#[derive(Debug, Serialize)]
struct EvalReport {
    gauge_distance: f64,
    w1_upper_bound: f64,
}

fn tr_config(f: &SolverFlags) -> TRConfig {
    let mut cfg = TRConfig { backend: f.backend, restarts: f.restarts, tol: f.tol, rng_seed: f.seed, ..TRConfig::default() };
    if let Some(deg) = f.degree {
        cfg.sos_degree = deg;
    }
    cfg
}

fn lr_config(f: &SolverFlags, sigma: SigmaMode, prior_rho: Option<f64>) -> LRConfig {
    let mut cfg = LRConfig {
        backend: f.backend,
        restarts: f.restarts,
        tol: f.tol,
        rng_seed: f.seed,
        sigma_mode: sigma,
        prior_rho,
        ..LRConfig::default()
    };
    if let Some(deg) = f.degree {
        cfg.stage1_degree = deg;
        cfg.stage2_degree = deg;
    }
    cfg
}

fn quadratic_table(t: MomentTable) -> Result<QuadraticMomentTable> {
    match t {
        MomentTable::Quadratic(q) => Ok(q),
        MomentTable::Pair(_) => Err(Error::Usage("expected a quadratic moment table".into())),
    }
}

fn pair_table(t: MomentTable) -> Result<PairMomentTable> {
    match t {
        MomentTable::Pair(p) => Ok(p),
        MomentTable::Quadratic(_) => Err(Error::Usage("expected a pair moment table".into())),
    }
}

fn emit(out: &Option<PathBuf>, json: String, o: &mut Outcome) -> Result<()> {
    match out {
        Some(p) => {
            std::fs::write(p, json + "\n")?;
            o.outputs.push(p.clone());
        }
        None => o.stdout = Some(json),
    }
    Ok(())
}

pub fn execute(cmd: &Command) -> Result<Outcome> {
    let mut o = Outcome::default();
    match cmd {
        Command::Generate(a) => {
            let base = match &a.base {
                Some(p) => {
                    o.inputs.push(p.clone());
                    Some(load_net(p)?)
                }
                None => None,
            };
            let net = generate_network(a.kind, a.r, a.d, a.omega, a.ell, a.rho, a.seed, base)?;
            net.save(&a.out)?;
            o.outputs.push(a.out.clone());
            o.rng_seed = Some(a.seed);
        }
        Command::Sample(a) => {
            let net = load_net(&a.net)?;
            let z = sample(&net, &parse_seed_dist(&a.seed_dist)?, a.n, a.seed)?;
            std::fs::write(&a.out, matrix_to_csv(&z))?;
            o.inputs.push(a.net.clone());
            o.outputs.push(a.out.clone());
            o.rng_seed = Some(a.seed);
        }
        Command::Moments(a) => {
            let table = match (&a.samples, &a.net) {
                (Some(p), None) => {
                    o.inputs.push(p.clone());
                    let z = load_samples(p)?;
                    match a.kind {
                        Kind::Quadratic => MomentTable::Quadratic(estimate_quadratic_moments(&z, a.eta, a.delta)?),
                        Kind::Lowrank => MomentTable::Pair(estimate_pair_moments(&z, a.eta, a.delta)?),
                    }
                }
                (None, Some(p)) => {
                    o.inputs.push(p.clone());
                    let net = load_net(p)?;
                    match a.kind {
                        Kind::Quadratic => MomentTable::Quadratic(exact_quadratic_moments(&net)?),
                        Kind::Lowrank => MomentTable::Pair(exact_pair_moments(&net, &parse_seed_dist(&a.seed_dist)?)?),
                    }
                }
                _ => return Err(Error::Usage("give exactly one of --samples or --net".into())),
            };
            table.save(&a.out)?;
            o.outputs.push(a.out.clone());
        }
        Command::SolveTr(a) => {
            let table = quadratic_table(load_table(&a.moments)?)?;
            o.inputs.push(a.moments.clone());
            let truth = match &a.truth {
                Some(p) => {
                    o.inputs.push(p.clone());
                    Some(load_net(p)?)
                }
                None => None,
            };
            let rep = decompose(&table, a.r, &tr_config(&a.solver), truth.as_ref())?;
            write_json(&a.out, &rep)?;
            o.outputs.push(a.out.clone());
            if let Some(p) = &a.network {
                rep.network()?.save(p)?;
                o.outputs.push(p.clone());
            }
            o.rng_seed = Some(a.solver.seed);
        }
        Command::SolveLr(a) => {
            let table = pair_table(load_table(&a.moments)?)?;
            o.inputs.push(a.moments.clone());
            let truth = match &a.truth {
                Some(p) => {
                    o.inputs.push(p.clone());
                    Some(load_net(p)?)
                }
                None => None,
            };
            let cfg = lr_config(&a.solver, a.sigma.into(), a.prior_rho);
            let rep = factorize(&table, a.r, a.omega, a.ell, &cfg, truth.as_ref())?;
            let net = rep.network().transpose()?;
            let file = LowRankReportFile {
                units: rep.units.iter().map(|u| u.values().to_vec()).collect(),
                network: net.as_ref().map(|n| serde_json::from_str(&n.to_json()?).map_err(Error::from)).transpose()?,
                residual: rep.residual,
                gauge_distance: rep.gauge_distance,
                backend: rep.backend,
                iterations: rep.iterations,
                restarts_used: rep.restarts_used,
                combo: rep.combo.clone(),
                anchor: rep.anchor,
                notes: rep.notes.clone(),
            };
            write_json(&a.out, &file)?;
            o.outputs.push(a.out.clone());
            if let Some(p) = &a.network {
                let net = net.ok_or_else(|| Error::Usage("the relaxation backend yields tensors without components; omit --network".into()))?;
                net.save(p)?;
                o.outputs.push(p.clone());
            }
            o.rng_seed = Some(a.solver.seed);
        }
        Command::Eval(a) => {
            let (na, nb) = (load_net(&a.a)?, load_net(&a.b)?);
            o.inputs.extend([a.a.clone(), a.b.clone()]);
            let (dist, _) = gauge_distance(&na, &nb, &AlignConfig::default())?;
            let seed = parse_seed_dist(&a.seed_dist)?;
            let rep = EvalReport { gauge_distance: dist, w1_upper_bound: w1_upper_bound(dist, na.r(), na.d(), na.omega(), &seed) };
            emit(&a.out, to_json_string(&rep)?, &mut o)?;
        }
        Command::Verify(a) => {
            let net = load_net(&a.net)?;
            o.inputs.push(a.net.clone());
            let json = match net.kind() {
                NetworkKind::Quadratic(_) => to_json_string(&verify_assumption_tr(&net)?)?,
                NetworkKind::LowRank { .. } => to_json_string(&verify_assumption_lr(&net, &VerifyLimits::default())?)?,
            };
            emit(&a.out, json, &mut o)?;
        }
        Command::Lowerbound(a) => {
            let cfg = SearchConfig { restarts: a.restarts, tol: a.tol, rng_seed: a.seed, ..SearchConfig::default() };
            let (fixture, _) = lowerbound_fixture(a.r, &cfg)?;
            emit(&a.out, to_json_string(&fixture)?, &mut o)?;
            o.rng_seed = Some(a.seed);
        }
        Command::Bench(a) => {
            std::fs::write(&a.out, bench_csv(a)?)?;
            o.outputs.push(a.out.clone());
            o.rng_seed = Some(a.solver.seed);
        }
    }
    Ok(o)
}

fn bench_row(a: &BenchArgs, r: usize, d: usize, rho: f64, eta: f64, n: usize, seed: u64) -> Result<(f64, f64)> {
    let net = generate_network(a.kind, r, d, a.omega, a.ell, rho, seed, None)?;
    let sample_seed = seed.wrapping_add(a.solver.seed);
    match a.kind {
        Kind::Quadratic => {
            let table = if n == 0 {
                exact_quadratic_moments(&net)?.perturbed(eta, sample_seed)
            } else {
                estimate_quadratic_moments(&sample(&net, &SeedDistribution::Gaussian, n, sample_seed)?, eta, 0.05)?
            };
            let cfg = TRConfig { rng_seed: seed, ..tr_config(&a.solver) };
            let rep = decompose(&table, r, &cfg, Some(&net))?;
            Ok((rep.gauge_distance.unwrap_or(f64::NAN), rep.max_residual()))
        }
        Kind::Lowrank => {
            let table = if n == 0 {
                let exact = exact_pair_moments(&net, &SeedDistribution::Gaussian)?;
                perturb_pair(exact, eta, sample_seed)?
            } else {
                estimate_pair_moments(&sample(&net, &SeedDistribution::Gaussian, n, sample_seed)?, eta, 0.05)?
            };
            let cfg = LRConfig { rng_seed: seed, ..lr_config(&a.solver, SigmaMode::Gaussian, Some(rho)) };
            let rep = factorize(&table, r, a.omega, a.ell, &cfg, Some(&net))?;
            Ok((rep.gauge_distance.unwrap_or(f64::NAN), rep.residual))
        }
    }
}

/// `S + E` with `E` symmetric, entries uniform in `[−η, η]`.
pub fn perturb_pair(table: PairMomentTable, eta: f64, seed: u64) -> Result<PairMomentTable> {
    use rand::Rng;
    let d = table.d();
    let mut rng = crate::rng::stream(seed, crate::rng::domain::NOISE, 0);
    let mut s = table.s;
    for a in 0..d {
        for b in a..d {
            let e = eta * (2.0 * rng.random::<f64>() - 1.0);
            s[(a, b)] += e;
            if a != b {
                s[(b, a)] += e;
            }
        }
    }
    PairMomentTable::new(s, eta)
}

/// Solver failures become rows with `NaN` distances rather than aborting the sweep.
pub fn bench_csv(a: &BenchArgs) -> Result<String> {
    let mut out = format!("{BENCH_CSV_VERSION}\n{BENCH_CSV_HEADER}\n");
    let backend = serde_json::to_value(a.solver.backend)?;
    let backend = backend.as_str().unwrap_or("?");
    let ell = if a.kind == Kind::Lowrank { a.ell } else { 1 };
    let omega = if a.kind == Kind::Lowrank { a.omega } else { 2 };
    for &r in &a.r {
        for &d in &a.d {
            for &rho in &a.rho {
                for &eta in &a.eta {
                    for &n in &a.n {
                        for seed in 0..a.seeds {
                            let start = Instant::now();
                            let (g, res) = match bench_row(a, r, d, rho, eta, n, seed) {
                                Ok(x) => x,
                                Err(Error::Convergence(_) | Error::Degeneracy(_)) => (f64::NAN, f64::NAN),
                                Err(e) => return Err(e),
                            };
                            let ms = start.elapsed().as_millis();
                            out.push_str(&format!(
                                "{r},{d},{omega},{ell},{},{},{n},{backend},{seed},{},{},{ms}\n",
                                fmt17(rho),
                                fmt17(eta),
                                fmt17(g),
                                fmt17(res)
                            ));
                        }
                    }
                }
            }
        }
    }
    Ok(out)
}

fn command_name(cmd: &Command) -> &'static str {
    match cmd {
        Command::Generate(_) => "generate",
        Command::Sample(_) => "sample",
        Command::Moments(_) => "moments",
        Command::SolveTr(_) => "solve-tr",
        Command::SolveLr(_) => "solve-lr",
        Command::Eval(_) => "eval",
        Command::Verify(_) => "verify",
        Command::Lowerbound(_) => "lowerbound",
        Command::Bench(_) => "bench",
    }
}

/// Run a parsed command line and write its manifest. `args` is the raw
/// argument list, recorded verbatim.
pub fn run(cli: &Cli, args: Vec<String>) -> Result<RunManifest> {
    let o = execute(&cli.command)?;
    if let Some(s) = &o.stdout {
        println!("{s}");
    }
    let manifest = RunManifest {
        command: command_name(&cli.command).into(),
        args,
        rng_seed: o.rng_seed,
        version: env!("CARGO_PKG_VERSION").into(),
        inputs: digests(&o.inputs)?,
        outputs: digests(&o.outputs)?,
    };
    let target = cli.manifest.clone().or_else(|| {
        o.outputs.first().map(|p| {
            let mut s = p.clone().into_os_string();
            s.push(".manifest.json");
            PathBuf::from(s)
        })
    });
    match target {
        Some(p) => write_json(&p, &manifest)?,
        None => eprintln!("{}", to_json_string(&manifest)?),
    }
    Ok(manifest)
}
