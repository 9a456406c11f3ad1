use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Parser, Subcommand, ValueEnum};
use skewinfo::divergence::{self, OrderParameter};
use skewinfo::harness::{self, Report, ReportFormat};
use skewinfo::{
    io as files, ComplexMatrix, DensityMatrix, KrausChannel, Property, ResourceChoice, SuiteConfig, TolerancePolicy,
};

#[derive(Parser)]
#[command(
    name = "skewinfo",
    version,
    about = "Skew-information resource measures and their verification suites"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate one quantity and print it with 17 significant digits.
    Compute(ComputeArgs),
    /// Run a randomized verification suite.
    Verify(VerifyArgs),
    /// Search for monotonicity violations of I_p with p in (1,2].
    Search(SearchArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Quantity {
    /// I(ρ,K), needs --op
    Skew,
    /// I(ρ,λ), needs --channel
    SkewChannel,
    /// J_p(K,A,B) with A = --state, B = --state-b (default A), K = --op (default identity)
    Jp,
    /// I_p(ρ,λ) with --channel, or I_p(ρ,K) with --op
    Ip,
    /// S(A‖B) with A = --state, B = --state-b
    Relent,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Csv,
}

impl From<Format> for ReportFormat {
    fn from(f: Format) -> Self {
        match f {
            Format::Json => ReportFormat::Json,
            Format::Csv => ReportFormat::Csv,
        }
    }
}

#[derive(clap::Args)]
struct ComputeArgs {
    #[arg(long, value_enum)]
    quantity: Quantity,
    #[arg(long)]
    state: PathBuf,
    #[arg(long)]
    state_b: Option<PathBuf>,
    #[arg(long)]
    channel: Option<PathBuf>,
    #[arg(long)]
    op: Option<PathBuf>,
    #[arg(long)]
    p: Option<f64>,
}

#[derive(clap::Args)]
struct VerifyArgs {
    #[arg(long)]
    property: Property,
    /// dephasing, twirl-cyclic (group order = dim), twirl-cyclic(N), or custom (with --rep)
    #[arg(long)]
    resource: String,
    #[arg(long)]
    rep: Option<PathBuf>,
    #[arg(long)]
    dim: usize,
    #[arg(long)]
    trials: u64,
    #[arg(long)]
    p: Option<f64>,
    #[arg(long, default_value_t = 2)]
    n_kraus: usize,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
}

#[derive(clap::Args)]
struct SearchArgs {
    #[arg(long)]
    p_min: f64,
    #[arg(long)]
    p_max: f64,
    #[arg(long)]
    grid: usize,
    #[arg(long)]
    dim: usize,
    #[arg(long)]
    trials: u64,
    #[arg(long)]
    seed: u64,
    #[arg(long, default_value = "dephasing")]
    resource: String,
    #[arg(long)]
    rep: Option<PathBuf>,
    #[arg(long, default_value_t = 2)]
    n_kraus: usize,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
}

fn resource_choice(name: &str, rep: Option<&Path>, dim: usize) -> anyhow::Result<ResourceChoice> {
    match (name, rep) {
        ("custom", Some(path)) => Ok(ResourceChoice::Custom(path.to_path_buf())),
        ("custom", None) => bail!("--resource custom needs --rep <file>"),
        ("twirl-cyclic", None) => Ok(ResourceChoice::TwirlCyclic(dim)),
        (other, None) => Ok(other.parse()?),
        (_, Some(_)) => bail!("--rep is only used with --resource custom"),
    }
}

fn order(p: Option<f64>) -> anyhow::Result<OrderParameter> {
    let p = p.context("this quantity needs --p")?;
    Ok(OrderParameter::new(p)?)
}

fn required<'a>(path: &'a Option<PathBuf>, flag: &str) -> anyhow::Result<&'a Path> {
    path.as_deref().with_context(|| format!("this quantity needs {flag}"))
}

fn load_op(path: &Path) -> anyhow::Result<ComplexMatrix> {
    files::load_matrix(path).with_context(|| format!("reading {}", path.display()))
}

fn load_state(path: &Path, tol: &TolerancePolicy) -> anyhow::Result<DensityMatrix> {
    files::load_density(path, tol).with_context(|| format!("reading {}", path.display()))
}

fn load_channel(path: &Path, tol: &TolerancePolicy) -> anyhow::Result<KrausChannel> {
    files::load_channel(path, tol).with_context(|| format!("reading {}", path.display()))
}

fn compute(args: &ComputeArgs) -> anyhow::Result<f64> {
    let tol = TolerancePolicy::default();
    let rho = load_state(&args.state, &tol)?;
    let value = match args.quantity {
        Quantity::Skew => divergence::skew_info_op(&rho, &load_op(required(&args.op, "--op")?)?, &tol)?,
        Quantity::SkewChannel => {
            let lambda = load_channel(required(&args.channel, "--channel")?, &tol)?;
            divergence::skew_info_channel(&rho, &lambda, &tol)?
        }
        Quantity::Jp => {
            let b = match &args.state_b {
                Some(path) => load_state(path, &tol)?,
                None => rho.clone(),
            };
            let k = match &args.op {
                Some(path) => load_op(path)?,
                None => skewinfo::numerics::identity(rho.dim()),
            };
            divergence::j_p(&k, &rho, &b, order(args.p)?, &tol)?.value
        }
        Quantity::Ip => {
            let p = order(args.p)?;
            match (&args.channel, &args.op) {
                (Some(path), None) => divergence::i_p_channel(&rho, &load_channel(path, &tol)?, p, &tol)?,
                (None, Some(path)) => divergence::i_p_op(&rho, &load_op(path)?, p, &tol)?,
                _ => bail!("ip needs exactly one of --channel and --op"),
            }
        }
        Quantity::Relent => {
            let b = load_state(required(&args.state_b, "--state-b")?, &tol)?;
            divergence::relative_entropy(&rho, &b, &tol)?.value
        }
    };
    Ok(value)
}

fn write_report<R: Report>(report: &R, format: Format, out: Option<&Path>) -> anyhow::Result<()> {
    match out {
        Some(path) => {
            let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
            harness::emit_report(report, format.into(), BufWriter::new(file))?;
        }
        None => harness::emit_report(report, format.into(), io::stdout().lock())?,
    }
    Ok(())
}

fn verify(args: &VerifyArgs) -> anyhow::Result<bool> {
    let resource = resource_choice(&args.resource, args.rep.as_deref(), args.dim)?;
    let p = args.p.map(OrderParameter::new).transpose()?;
    let config = SuiteConfig::new(args.property, resource, args.dim, args.trials, args.seed)
        .with_p(p)
        .with_n_kraus(args.n_kraus);
    let report = harness::run_suite(&config)?;
    write_report(&report, args.format, args.out.as_deref())?;
    log::info!(
        "{}: {} trials, {} violations, min margin {:e}",
        config.property,
        report.trials_run,
        report.violations,
        report.min_margin
    );
    Ok(report.passed())
}

fn search(args: &SearchArgs) -> anyhow::Result<bool> {
    let resource = resource_choice(&args.resource, args.rep.as_deref(), args.dim)?;
    let grid = harness::linear_grid(args.p_min, args.p_max, args.grid)?;
    let base =
        SuiteConfig::new(Property::Monotonicity, resource, args.dim, args.trials, args.seed).with_n_kraus(args.n_kraus);
    let report = harness::search_p_range(&grid, &base)?;
    write_report(&report, args.format, args.out.as_deref())?;
    Ok(report.confirmed_candidates == 0)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Compute(args) => compute(args).and_then(|v| {
            writeln!(io::stdout(), "{}", files::format_f64(v))?;
            Ok(true)
        }),
        Command::Verify(args) => verify(args),
        Command::Search(args) => search(args),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
