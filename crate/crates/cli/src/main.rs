use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use qdesign::designs::{self, DesignCertificate, ProjectiveDesign, DEFAULT_MAX_ITERS};
use qdesign::harness::{self, DesignSuite, RunReport, Tolerances, DEFAULT_QUBIT_DESIGN_N, DEFAULT_QUTRIT_DESIGN_N};
use qdesign::states::{self, RngStream};

const EXIT_INVARIANT: u8 = 1;
const EXIT_USAGE: u8 = 2;

#[derive(Parser)]
#[command(name = "qdesign", version, about = "Entanglement criteria from quantum 2-designs: thresholds, sweeps and design tools")]
struct Cli {
    #[command(flatten)]
    opts: Opts,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Opts {
    /// Master seed for sampling and design construction
    #[arg(long, global = true, default_value_t = harness::DEFAULT_SEED)]
    seed: u64,
    /// Number of Monte Carlo samples for sweeps
    #[arg(long, global = true, default_value_t = harness::DEFAULT_SAMPLES)]
    samples: usize,
    /// Bisection tolerance for threshold searches
    #[arg(long, global = true, default_value_t = harness::DEFAULT_TOL)]
    tol: f64,
    /// Number of vectors in the E2D/L2D design for the local dimension the command uses
    #[arg(long = "design-n", global = true)]
    design_n: Option<usize>,
    /// Write output here instead of standard output
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Thresholds for noisy Bell states
    Table1,
    /// Detected fractions over random two-qubit NPT states
    Table2,
    /// Thresholds for the UPB bound entangled state with white noise
    Table3,
    /// Detected fractions over random qubit-qutrit NPT states
    Table4,
    /// Detected fractions over random chessboard states
    Chessboard,
    /// Threshold curves for the Horodecki family with white noise
    Horodecki {
        /// Comma-separated x values in (0, 1); defaults to 0.1, 0.2, ..., 0.9
        #[arg(long, value_delimiter = ',')]
        x: Option<Vec<f64>>,
    },
    /// Build, import and certify designs
    Designs {
        #[command(subcommand)]
        action: DesignAction,
    },
    /// Run the full invariant suite
    VerifyAll {
        /// Additional design files to certify
        #[arg(long = "design")]
        designs: Vec<PathBuf>,
    },
}

#[derive(Subcommand)]
enum DesignAction {
    /// Construct a design and write it as JSON
    Export {
        #[arg(long)]
        dim: usize,
        #[arg(long, value_enum, default_value_t = KindArg::Sic)]
        kind: KindArg,
    },
    /// Read a design file, certify it and write it back out canonically
    Import { path: PathBuf },
    /// Certify design files
    Verify {
        #[arg(required = true)]
        paths: Vec<PathBuf>,
    },
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum KindArg {
    Sic,
    Optimized,
    Superimposed,
}

enum Failure {
    Usage(String),
    Invariant(String),
}

impl From<qdesign::Error> for Failure {
    fn from(e: qdesign::Error) -> Self {
        Failure::Invariant(e.to_string())
    }
}

type CliResult<T> = std::result::Result<T, Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_USAGE)
        }
        Err(Failure::Invariant(msg)) => {
            eprintln!("invariant failure: {msg}");
            ExitCode::from(EXIT_INVARIANT)
        }
    }
}

fn validate(opts: &Opts) -> CliResult<()> {
    if !(opts.tol > 0.0 && opts.tol < 0.01) {
        return Err(Failure::Usage(format!("--tol must lie in (0, 0.01), got {}", opts.tol)));
    }
    if opts.samples == 0 {
        return Err(Failure::Usage("--samples must be at least 1".into()));
    }
    Ok(())
}

fn design_n_for(opts: &Opts, dim: usize) -> CliResult<usize> {
    let default = if dim == 2 { DEFAULT_QUBIT_DESIGN_N } else { DEFAULT_QUTRIT_DESIGN_N };
    let n = opts.design_n.unwrap_or(default);
    if n < dim * dim {
        return Err(Failure::Usage(format!("--design-n {n} is below the minimum {} for dimension {dim}", dim * dim)));
    }
    Ok(n)
}

/// `qubit` says whether `--design-n` sizes the qubit or the qutrit design.
fn suite(opts: &Opts, qubit: bool) -> CliResult<DesignSuite> {
    let (q2, q3) = if qubit {
        (design_n_for(opts, 2)?, DEFAULT_QUTRIT_DESIGN_N)
    } else {
        (DEFAULT_QUBIT_DESIGN_N, design_n_for(opts, 3)?)
    };
    Ok(DesignSuite::new(q2, q3, opts.seed)?)
}

fn emit(opts: &Opts, text: &str) -> CliResult<()> {
    match &opts.out {
        Some(path) => fs::write(path, text).map_err(|e| Failure::Usage(format!("cannot write {}: {e}", path.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn report(opts: &Opts, command: &str, suite: &DesignSuite, thresholds: Vec<harness::ThresholdResult>, sweeps: Vec<harness::SweepSummary>) -> CliResult<()> {
    for t in thresholds.iter().filter(|t| t.multiple_crossings) {
        eprintln!("warning: {} {} changes sign more than once; the first crossing is reported", t.family, t.criterion);
    }
    let samples = (!sweeps.is_empty()).then_some(opts.samples);
    let r = RunReport {
        command: command.to_string(),
        master_seed: opts.seed,
        samples,
        tolerances: Tolerances::current(opts.tol),
        designs: suite.certificates().to_vec(),
        thresholds,
        sweeps,
    };
    let text = match opts.format {
        Format::Json => r.to_json()? + "\n",
        Format::Csv => r.to_csv(),
    };
    emit(opts, &text)
}

fn read_design(path: &Path) -> CliResult<ProjectiveDesign> {
    let text = fs::read_to_string(path).map_err(|e| Failure::Usage(format!("cannot read {}: {e}", path.display())))?;
    Ok(ProjectiveDesign::from_json(&text)?)
}

fn certificate_text(opts: &Opts, label: &str, cert: &DesignCertificate) -> CliResult<String> {
    Ok(match opts.format {
        Format::Json => serde_json::to_string_pretty(cert).map_err(|e| Failure::Invariant(e.to_string()))? + "\n",
        Format::Csv => {
            let mut s = String::from("file,dim,n,kind,moment_residual,moment_tolerance,frame_potential_gap,unit_norm_deviation,passed\n");
            s += &format!(
                "{label},{},{},{},{:.3e},{:.0e},{:.3e},{:.3e},{}\n",
                cert.dim, cert.n, cert.kind, cert.moment_residual, cert.moment_tolerance, cert.frame_potential_gap, cert.unit_norm_deviation, cert.passed
            );
            s
        }
    })
}

fn designs_cmd(opts: &Opts, action: &DesignAction) -> CliResult<()> {
    match action {
        DesignAction::Export { dim, kind } => {
            if !(2..=3).contains(dim) {
                return Err(Failure::Usage(format!("--dim must be 2 or 3, got {dim}")));
            }
            let p = match kind {
                KindArg::Sic => designs::build_sic(*dim)?,
                KindArg::Optimized => designs::optimize_design(*dim, design_n_for(opts, *dim)?, opts.seed, DEFAULT_MAX_ITERS)?,
                KindArg::Superimposed => {
                    let sic = designs::build_sic(*dim)?;
                    let rotation = states::random_unitary(*dim, &mut RngStream::new(opts.seed, 0));
                    designs::superimpose(&sic, &sic, &rotation)?
                }
            };
            emit(opts, &(p.to_json()? + "\n"))
        }
        DesignAction::Import { path } => {
            let p = read_design(path)?;
            let cert = designs::verify_design(&p);
            if !cert.passed {
                return Err(Failure::Invariant(format!("{}: {}", path.display(), cert.failures.join("; "))));
            }
            emit(opts, &(p.to_json()? + "\n"))
        }
        DesignAction::Verify { paths } => {
            let mut text = String::new();
            let mut failures = Vec::new();
            for path in paths {
                let label = path.display().to_string();
                let cert = designs::verify_design(&read_design(path)?);
                let block = certificate_text(opts, &label, &cert)?;
                text += if text.is_empty() || opts.format == Format::Json { &block } else { block.split_once('\n').map(|x| x.1).unwrap_or("") };
                if !cert.passed {
                    failures.push(format!("{label}: {}", cert.failures.join("; ")));
                }
            }
            emit(opts, &text)?;
            if failures.is_empty() {
                Ok(())
            } else {
                Err(Failure::Invariant(failures.join(" | ")))
            }
        }
    }
}

fn run(cli: &Cli) -> CliResult<()> {
    let opts = &cli.opts;
    validate(opts)?;
    match &cli.command {
        Command::Table1 => {
            let s = suite(opts, true)?;
            let rows = harness::table1(&s, opts.tol)?;
            report(opts, "table1", &s, rows, vec![])
        }
        Command::Table2 => {
            let s = suite(opts, true)?;
            let sweep = harness::table2(&s, opts.samples, opts.seed)?;
            report(opts, "table2", &s, vec![], vec![sweep])
        }
        Command::Table3 => {
            let s = suite(opts, false)?;
            let rows = harness::table3(&s, opts.tol)?;
            report(opts, "table3", &s, rows, vec![])
        }
        Command::Table4 => {
            let s = suite(opts, true)?;
            let sweep = harness::table4(&s, opts.samples, opts.seed)?;
            report(opts, "table4", &s, vec![], vec![sweep])
        }
        Command::Chessboard => {
            let s = suite(opts, false)?;
            let sweep = harness::chessboard_sweep(opts.samples, opts.seed, &s)?;
            report(opts, "chessboard", &s, vec![], vec![sweep])
        }
        Command::Horodecki { x } => {
            let grid = x.clone().unwrap_or_else(harness::default_horodecki_grid);
            if let Some(bad) = grid.iter().find(|v| !(**v > 0.0 && **v < 1.0)) {
                return Err(Failure::Usage(format!("Horodecki parameter {bad} outside (0, 1)")));
            }
            let s = suite(opts, false)?;
            let rows = harness::horodecki_curves(&grid, opts.tol, &s)?;
            report(opts, "horodecki", &s, rows, vec![])
        }
        Command::Designs { action } => designs_cmd(opts, action),
        Command::VerifyAll { designs } => {
            let extra = designs
                .iter()
                .map(|p| Ok((p.display().to_string(), read_design(p)?)))
                .collect::<CliResult<Vec<_>>>()?;
            let r = harness::verify_all(opts.seed, &extra);
            let text = match opts.format {
                Format::Json => serde_json::to_string_pretty(&r).map_err(|e| Failure::Invariant(e.to_string()))? + "\n",
                Format::Csv => r.render(),
            };
            emit(opts, &text)?;
            if r.passed {
                Ok(())
            } else {
                let failed: Vec<&str> = r.checks.iter().filter(|c| !c.passed).map(|c| c.name.as_str()).collect();
                Err(Failure::Invariant(format!("failed checks: {}", failed.join(", "))))
            }
        }
    }
}
