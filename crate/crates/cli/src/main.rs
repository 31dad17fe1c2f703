use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;
use stochtop::cech::build_cech;
use stochtop::cycles::{
    default_detector_params, detect_theta_cycles, detect_theta_like_cycles, write_theta_csv, DetectorParams,
};
use stochtop::experiments::{parse_config, parse_manifold_spec, render_svg, run_sweep, write_csv, write_json, Schedule};
use stochtop::homology::{betti_numbers, homology_matches, reference_betti};
use stochtop::manifold::{read_points_csv, sample_poisson, write_points_csv};
use stochtop::morse::{enumerate_critical_points, write_critical_csv, CriticalQuery, RegionFilter};
use stochtop::{Error, Manifold, PointSample};

const SEED_ENV: &str = "STOCHTOP_SEED";

#[derive(Parser)]
#[command(name = "stochtop", version, about = "Random Cech complexes on flat manifolds")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Draw a Poisson sample and write it as CSV.
    Sample(SampleArgs),
    /// Betti numbers of the Cech complex of a sample.
    Betti(BettiArgs),
    /// Run an experiment sweep from a config file.
    Sweep(SweepArgs),
    /// List critical points of the distance function.
    Critical(CriticalArgs),
    /// Detect Theta- or Theta-like-cycles.
    Theta(ThetaArgs),
}

#[derive(Args)]
struct SourceArgs {
    /// Manifold spec: torus:L1,..,Ld | cylinder:P1,..,L | disk:R.
    #[arg(long)]
    manifold: String,
    /// Read points from a CSV file instead of sampling.
    #[arg(long, conflicts_with = "n")]
    points: Option<PathBuf>,
    /// Poisson intensity.
    #[arg(long, required_unless_present = "points")]
    n: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct SampleArgs {
    #[command(flatten)]
    source: SourceArgs,
    /// Directory for points.csv and points.json; stdout otherwise.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BettiArgs {
    #[command(flatten)]
    source: SourceArgs,
    #[arg(long)]
    r: f64,
    #[arg(long, default_value_t = 1)]
    kmax: usize,
}

#[derive(Args)]
struct SweepArgs {
    /// Experiment config file.
    config: PathBuf,
    /// Output directory for results.csv, results.json and results.svg.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Replace the intensities.
    #[arg(long, value_delimiter = ',')]
    n: Option<Vec<f64>>,
    /// Replace the scale schedule with fixed Λ values.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    lambda: Option<Vec<f64>>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    threads: Option<usize>,
    /// Also write an SVG chart (needs --out).
    #[arg(long)]
    plot: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum RegionArg {
    All,
    Interior,
    Collar,
}

#[derive(Args)]
struct CriticalArgs {
    #[command(flatten)]
    source: SourceArgs,
    #[arg(long)]
    k: usize,
    #[arg(long, default_value_t = 0.0)]
    r_lo: f64,
    #[arg(long)]
    r_hi: f64,
    #[arg(long, value_enum, default_value_t = RegionArg::All)]
    region: RegionArg,
    /// Collar width for --region interior|collar.
    #[arg(long)]
    r0: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum CycleArg {
    Theta,
    ThetaLike,
}

#[derive(Args)]
struct ThetaArgs {
    #[command(flatten)]
    source: SourceArgs,
    #[arg(long, value_enum, default_value_t = CycleArg::ThetaLike)]
    kind: CycleArg,
    #[arg(long, default_value_t = 1)]
    k: usize,
    /// Derive r, r1, r2, δ and φ from Λ and the intensity.
    #[arg(long, allow_negative_numbers = true)]
    lambda: Option<f64>,
    #[arg(long)]
    r: Option<f64>,
    #[arg(long)]
    r1: Option<f64>,
    #[arg(long)]
    r2: Option<f64>,
    #[arg(long)]
    eps_min: Option<f64>,
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long)]
    phi_angle: Option<f64>,
    #[arg(long)]
    net_factor: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Failure carrying its process exit code.
struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Invariant(_) => 4,
            _ => 2,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Error::from(e).into()
    }
}

fn usage(message: impl Into<String>) -> Failure {
    Failure {
        code: 2,
        message: message.into(),
    }
}

type CliResult<T = ()> = Result<T, Failure>;

fn env_seed() -> CliResult<Option<u64>> {
    match std::env::var(SEED_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| usage(format!("{SEED_ENV}='{v}' is not an unsigned integer"))),
        Err(_) => Ok(None),
    }
}

/// `--seed`, then `STOCHTOP_SEED`, then the fallback.
fn effective_seed(flag: Option<u64>, fallback: u64) -> CliResult<u64> {
    Ok(match flag {
        Some(s) => s,
        None => env_seed()?.unwrap_or(fallback),
    })
}

fn load(source: &SourceArgs) -> CliResult<(Manifold, PointSample)> {
    let m = parse_manifold_spec(&source.manifold)?;
    let sample = match (&source.points, source.n) {
        (Some(path), _) => {
            let sample: PointSample = read_points_csv(File::open(path)?)?;
            if sample.points.iter().any(|p| p.dim() != m.dim()) {
                return Err(usage(format!("points in {} do not have dimension {}", path.display(), m.dim())));
            }
            sample.validate(&m)?;
            sample
        }
        (None, Some(n)) => sample_poisson(&m, n, effective_seed(source.seed, 0)?)?,
        (None, None) => return Err(usage("either --points or --n is required")),
    };
    Ok((m, sample))
}

fn output(dir: Option<&Path>, file: &str) -> CliResult<Box<dyn Write>> {
    Ok(match dir {
        Some(d) => {
            fs::create_dir_all(d)?;
            Box::new(BufWriter::new(File::create(d.join(file))?))
        }
        None => Box::new(io::stdout().lock()),
    })
}

fn cmd_sample(args: &SampleArgs) -> CliResult {
    let (m, sample) = load(&args.source)?;
    write_points_csv(&sample, m.dim(), output(args.out.as_deref(), "points.csv")?)?;
    if let Some(dir) = &args.out {
        let meta = json!({
            "version": env!("CARGO_PKG_VERSION"),
            "manifold": args.source.manifold,
            "intensity": args.source.n,
            "seed": sample.seed,
            "points": sample.len(),
        });
        let mut w = output(Some(dir), "points.json")?;
        serde_json::to_writer_pretty(&mut w, &meta).map_err(|e| usage(e.to_string()))?;
        writeln!(w)?;
    }
    Ok(())
}

fn cmd_betti(args: &BettiArgs) -> CliResult {
    let (m, sample) = load(&args.source)?;
    let complex = build_cech(&m, &sample, args.r, args.kmax + 1)?;
    let betti = betti_numbers(&complex, args.kmax);
    let matched = homology_matches(&betti, &reference_betti(&m, args.kmax), args.kmax);
    let counts: Vec<String> = complex.simplex_counts().iter().map(|c| c.to_string()).collect();
    let mut out = io::stdout().lock();
    writeln!(out, "betti: {betti}")?;
    if betti.upper_bound_only {
        writeln!(out, "note: top Betti number is an upper bound")?;
    }
    writeln!(out, "match: {}", matched.all)?;
    writeln!(out, "simplices: {}", counts.join(" "))?;
    Ok(())
}

fn cmd_sweep(args: &SweepArgs) -> CliResult<bool> {
    if args.plot && args.out.is_none() {
        return Err(usage("--plot needs --out"));
    }
    let text = fs::read_to_string(&args.config)?;
    let mut cfg = parse_config(&text)?;
    if let Some(n) = &args.n {
        cfg.n_values = n.clone();
    }
    if let Some(l) = &args.lambda {
        cfg.schedule = Schedule::Lambdas(l.clone());
    }
    cfg.seed = effective_seed(args.seed, cfg.seed)?;
    if let Some(t) = args.trials {
        cfg.trials = t;
    }
    if args.threads.is_some() {
        cfg.threads = args.threads;
    }
    cfg.validate()?;
    let table = run_sweep(&cfg)?;
    let dir = args.out.as_deref();
    write_csv(&table, output(dir, "results.csv")?)?;
    if let Some(dir) = dir {
        let mut w = output(Some(dir), "results.json")?;
        write_json(&table, &cfg, &mut w)?;
        writeln!(w)?;
        if args.plot {
            fs::write(dir.join("results.svg"), render_svg(&table))?;
        }
    }
    let infeasible = table.rows.iter().filter(|r| r.infeasible).count();
    eprintln!(
        "{} rows, {} infeasible, {:.1}s",
        table.rows.len(),
        infeasible,
        table.wall_seconds
    );
    Ok(table.all_infeasible())
}

fn cmd_critical(args: &CriticalArgs) -> CliResult {
    let (m, sample) = load(&args.source)?;
    let region = match (args.region, args.r0) {
        (RegionArg::All, _) => RegionFilter::All,
        (RegionArg::Interior, Some(r0)) => RegionFilter::Interior(r0),
        (RegionArg::Collar, Some(r0)) => RegionFilter::Collar(r0),
        _ => return Err(usage("--region interior|collar needs --r0")),
    };
    let query = CriticalQuery::new(args.r_lo, args.r_hi, args.k).with_region(region);
    let points = enumerate_critical_points(&sample, &m, &query)?;
    write_critical_csv(&points, m.dim(), output(args.out.as_deref(), "critical.csv")?)?;
    Ok(())
}

fn theta_params(args: &ThetaArgs, m: &Manifold, sample: &PointSample) -> CliResult<DetectorParams<f64>> {
    let mut p = match (args.lambda, args.r, args.r1, args.r2) {
        (Some(lambda), None, None, None) => {
            let n = args.source.n.unwrap_or(sample.len() as f64);
            default_detector_params(n, m.dim(), args.k, lambda, 1.0, 1.0)?
        }
        (None, Some(r), Some(r1), Some(r2)) => DetectorParams::new(args.k, r1, r, r2, 0.05),
        _ => return Err(usage("give either --lambda or all of --r1 --r --r2")),
    };
    if let Some(e) = args.eps_min {
        p.eps_min = e;
    }
    if let Some(d) = args.delta {
        p.delta = d;
    }
    if let Some(a) = args.phi_angle {
        p.phi_angle = a;
    }
    if let Some(f) = args.net_factor {
        p.net_factor = f;
    }
    Ok(p)
}

fn cmd_theta(args: &ThetaArgs) -> CliResult {
    let (m, sample) = load(&args.source)?;
    let p = theta_params(args, &m, &sample)?;
    let records = match args.kind {
        CycleArg::Theta => detect_theta_cycles(&sample, &m, &p)?,
        CycleArg::ThetaLike => detect_theta_like_cycles(&sample, &m, &p)?,
    };
    write_theta_csv(&records, output(args.out.as_deref(), "theta.csv")?)?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Sample(a) => cmd_sample(a).map(|_| false),
        Command::Betti(a) => cmd_betti(a).map(|_| false),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Critical(a) => cmd_critical(a).map(|_| false),
        Command::Theta(a) => cmd_theta(a).map(|_| false),
    };
    match result {
        Ok(false) => ExitCode::SUCCESS,
        Ok(true) => {
            eprintln!("every cell is infeasible");
            ExitCode::from(3)
        }
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
