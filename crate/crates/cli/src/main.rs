//! `cdst`: generate instances, solve them with certificates, and check the analysis.

mod analysis;
mod error;
mod gen;
mod manifest;
mod solve;

use std::path::PathBuf;
use std::process::ExitCode;

use cdst_core::pipeline::{BaseMethod, MuPolicy, Reconnect, RootMode};
use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "cdst", version, about = "Cost-distance Steiner tree solver")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write instance files.
    Gen {
        #[command(subcommand)]
        family: gen::Family,
    },
    /// Solve one instance and check its certificate.
    Solve(SolveArgs),
    /// Print the table of approximation factors.
    Table1(analysis::Table1Args),
    /// Solve every instance matching a glob with several strategies.
    Compare(CompareArgs),
    /// Grid-check the inequality lemmas behind the coefficient b.
    VerifyAnalysis(analysis::VerifyArgs),
}

#[derive(Debug, Clone, Args)]
pub struct StrategyArgs {
    /// mst2, exact, or external:<path>.
    #[arg(long, default_value = "mst2", value_parser = parse_base)]
    pub base: BaseMethod,
    #[arg(long, value_enum, default_value_t = ReconnectArg::Split3)]
    pub reconnect: ReconnectArg,
    #[arg(long, value_enum, default_value_t = RootArg::Improve)]
    pub root: RootArg,
    /// Overrides the coefficient of the reconnection rule.
    #[arg(long)]
    pub b: Option<f64>,
    /// auto, baseline, or fixed:<value>.
    #[arg(long, default_value = "auto", value_parser = parse_mu_policy)]
    pub mu_policy: MuPolicy,
    /// JSON strategy file; replaces all strategy flags above.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ReconnectArg {
    Lemma1,
    Split2,
    Split3,
}

impl From<ReconnectArg> for Reconnect {
    fn from(r: ReconnectArg) -> Self {
        match r {
            ReconnectArg::Lemma1 => Reconnect::Lemma1,
            ReconnectArg::Split2 => Reconnect::Split2,
            ReconnectArg::Split3 => Reconnect::Split3,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum RootArg {
    Keep,
    Improve,
}

impl From<RootArg> for RootMode {
    fn from(r: RootArg) -> Self {
        match r {
            RootArg::Keep => RootMode::Keep,
            RootArg::Improve => RootMode::Improve,
        }
    }
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    pub instance: PathBuf,
    #[command(flatten)]
    pub strategy: StrategyArgs,
    /// Also compute the exact optimum (small graph instances only).
    #[arg(long)]
    pub oracle: bool,
    /// Directory for solution, certificate and trace files.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    /// Glob pattern of instance files.
    pub instances: String,
    /// Comma-separated reconnect:root pairs, e.g. lemma1:keep,split3:improve.
    #[arg(long, value_delimiter = ',', default_value = "lemma1:keep,split2:keep,split3:improve", value_parser = parse_strategies)]
    pub strategies: Vec<(Reconnect, RootMode)>,
    #[arg(long, default_value = "mst2", value_parser = parse_base)]
    pub base: BaseMethod,
    /// Use each instance's `<stem>.<companion>.json` tree as base (e.g. adv or opt).
    #[arg(long)]
    pub companion: Option<String>,
    #[arg(long, default_value = "auto", value_parser = parse_mu_policy)]
    pub mu_policy: MuPolicy,
    #[arg(long)]
    pub oracle: bool,
    /// Write report.csv and manifest.json here instead of printing the report.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn parse_base(s: &str) -> Result<BaseMethod, String> {
    match s {
        "mst2" => Ok(BaseMethod::Mst2),
        "exact" => Ok(BaseMethod::Exact),
        _ => match s.strip_prefix("external:") {
            Some(path) if !path.is_empty() => Ok(BaseMethod::External(path.into())),
            _ => Err(format!("expected mst2, exact or external:<path>, got {s:?}")),
        },
    }
}

fn parse_mu_policy(s: &str) -> Result<MuPolicy, String> {
    match s {
        "auto" => Ok(MuPolicy::Auto),
        "baseline" => Ok(MuPolicy::Baseline),
        _ => {
            let v = s
                .strip_prefix("fixed:")
                .ok_or_else(|| format!("expected auto, baseline or fixed:<value>, got {s:?}"))?;
            let mu: f64 = v.parse().map_err(|e| format!("bad threshold {v:?}: {e}"))?;
            if mu > 0.0 && mu.is_finite() {
                Ok(MuPolicy::Fixed(mu))
            } else {
                Err(format!("threshold must be positive, got {mu}"))
            }
        }
    }
}

fn parse_strategies(s: &str) -> Result<(Reconnect, RootMode), String> {
    let (r, m) = s.split_once(':').ok_or_else(|| format!("expected reconnect:root, got {s:?}"))?;
    let reconnect = ReconnectArg::from_str(r, true)?.into();
    let root = RootArg::from_str(m, true)?.into();
    Ok((reconnect, root))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Gen { family } => gen::run(family),
        Command::Solve(args) => solve::run_solve(args),
        Command::Table1(args) => analysis::run_table1(args),
        Command::Compare(args) => solve::run_compare(args),
        Command::VerifyAnalysis(args) => analysis::run_verify(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
