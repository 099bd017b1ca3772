use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use motlab::experiments::{self, ExperimentReport, DEFAULT_SEED};
use motlab::io::{coupling_to_json, read_measure};
use motlab::transport::{check_convex_order, mot_value, ot_value};
use motlab::{DiscreteMeasure, Norm};

#[derive(Parser)]
#[command(
    name = "motlab",
    version,
    about = "Martingale transport instability experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Failure of stability for (μ₃, ν_{3,n}) as n grows
    Stability {
        #[arg(long, default_value_t = 20)]
        nmax: usize,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Growth of M₁/W₁ along (μ_n, ν_{n,n})
    Ratio {
        #[arg(long, default_value_t = 10)]
        nmax: usize,
        #[arg(long, value_enum, default_value_t = NormArg::Euclidean)]
        norm: NormArg,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// W₁(μ_mP₀, μ_mP_θ) against 2 sin(θ/2) and θ
    Lemma2 {
        #[arg(long, default_value_t = 3)]
        m: usize,
        /// Number of equally spaced angles in [0, π/2]
        #[arg(long, default_value_t = 10)]
        steps: usize,
        /// Explicit comma-separated angles (overrides --steps)
        #[arg(long, value_delimiter = ',')]
        thetas: Option<Vec<f64>>,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Parallelogram and mixture variants
    Variants {
        #[arg(long, default_value_t = 3)]
        m: usize,
        #[arg(long, default_value_t = 3)]
        n: usize,
        #[arg(long, default_value_t = 2)]
        grid: usize,
        #[arg(long, default_value_t = 0.3)]
        eps: f64,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Optimal transport between two measure files
    SolveOt(SolveArgs),
    /// Martingale optimal transport between two measure files
    SolveMot(SolveArgs),
    /// Decide μ ≤_c ν for two measure files
    CheckOrder {
        #[command(flatten)]
        files: MeasureFiles,
    },
}

#[derive(Args)]
struct OutputArgs {
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Report runtime_ms as 0 so repeated runs are byte-identical
    #[arg(long)]
    no_timing: bool,
}

#[derive(Args)]
struct MeasureFiles {
    /// Source then target measure (JSON), given twice
    #[arg(long = "measure-file", num_args = 1, required = true)]
    measure_file: Vec<PathBuf>,
}

impl MeasureFiles {
    fn load(&self) -> Result<(DiscreteMeasure, DiscreteMeasure)> {
        let [a, b] = self.measure_file.as_slice() else {
            bail!(
                "expected exactly two --measure-file arguments, got {}",
                self.measure_file.len()
            );
        };
        let mu = read_measure(a).with_context(|| format!("reading {}", a.display()))?;
        let nu = read_measure(b).with_context(|| format!("reading {}", b.display()))?;
        Ok((mu, nu))
    }
}

#[derive(Args)]
struct SolveArgs {
    #[command(flatten)]
    files: MeasureFiles,
    #[arg(long, value_enum, default_value_t = NormArg::Euclidean)]
    norm: NormArg,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Clone, Copy, ValueEnum)]
enum NormArg {
    Euclidean,
    L1,
    Linf,
}

impl From<NormArg> for Norm {
    fn from(n: NormArg) -> Self {
        match n {
            NormArg::Euclidean => Norm::Euclidean,
            NormArg::L1 => Norm::L1,
            NormArg::Linf => Norm::Linf,
        }
    }
}

fn emit(text: &str, out: Option<&PathBuf>) -> Result<()> {
    match out {
        Some(path) => fs::write(path, text).with_context(|| format!("writing {}", path.display())),
        None => {
            print!("{text}");
            if !text.ends_with('\n') {
                println!();
            }
            Ok(())
        }
    }
}

fn emit_report(report: ExperimentReport, output: &OutputArgs) -> Result<bool> {
    let report = if output.no_timing {
        report.without_timing()
    } else {
        report
    };
    let text = match output.format {
        Format::Json => report.to_json(),
        Format::Csv => report.to_csv(),
    };
    emit(&text, output.out.as_ref())?;
    if !report.verdict {
        eprintln!("{}: verdict false", report.name);
    }
    Ok(report.verdict)
}

fn solve(args: &SolveArgs, martingale: bool) -> Result<bool> {
    let (mu, nu) = args.files.load()?;
    let norm = args.norm.into();
    let (value, plan) = if martingale {
        mot_value(&mu, &nu, norm)?
    } else {
        ot_value(&mu, &nu, norm)?
    };
    let plan: serde_json::Value = serde_json::from_str(&coupling_to_json(&plan))?;
    let doc = serde_json::json!({ "value": value, "norm": norm.as_str(), "plan": plan });
    emit(&serde_json::to_string_pretty(&doc)?, args.out.as_ref())?;
    Ok(true)
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Stability { nmax, seed, output } => {
            emit_report(experiments::run_stability(nmax, seed)?, &output)
        }
        Command::Ratio { nmax, norm, output } => {
            emit_report(experiments::run_ratio(nmax, norm.into())?, &output)
        }
        Command::Lemma2 {
            m,
            steps,
            thetas,
            output,
        } => {
            let thetas = thetas.unwrap_or_else(|| experiments::theta_grid(steps));
            emit_report(experiments::run_lemma2(m, &thetas)?, &output)
        }
        Command::Variants {
            m,
            n,
            grid,
            eps,
            output,
        } => emit_report(experiments::run_variants(m, n, grid, eps)?, &output),
        Command::SolveOt(args) => solve(&args, false),
        Command::SolveMot(args) => solve(&args, true),
        Command::CheckOrder { files } => {
            let (mu, nu) = files.load()?;
            let ordered = check_convex_order(&mu, &nu)?;
            println!("{ordered}");
            Ok(ordered)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::FAILURE
        }
    }
}
