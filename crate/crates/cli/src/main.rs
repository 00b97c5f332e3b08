//! `keyrate`: key-rate points, sweeps and security thresholds from the command line.

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use catqkd_core::fock::{verify_closed_forms, DEFAULT_CUTOFF};
use catqkd_core::sweep::{render, run_sweep, write_output, ConfigOverrides, Range, SweepConfig, SweepError};
use catqkd_core::{Case, Command, Format, Protocol};
use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(name = "keyrate", version, about = "Secret key rates of four-state MDI-CVQKD with zero-photon catalysis")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Evaluate a single operating point.
    Point(Flags),
    /// Sweep the variance V (range over V).
    SweepVariance(Flags),
    /// Sweep the Alice–Bob distance in km; adds the repeaterless bound.
    SweepDistance(Flags),
    /// Tolerable excess noise, at one distance or over a distance range.
    NoiseThreshold(Flags),
    /// Sweep the reconciliation efficiency.
    SweepBeta(Flags),
    /// Check the closed forms against the truncated Fock-space oracle.
    #[command(hide = true)]
    Verify {
        #[arg(long, default_value_t = DEFAULT_CUTOFF)]
        cutoff: usize,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ProtocolArg {
    Zpc,
    Original,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum CaseArg {
    #[value(alias = "asymmetric")]
    Asym,
    #[value(alias = "symmetric")]
    Sym,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

#[derive(Args, Debug)]
struct Flags {
    #[arg(long, value_enum)]
    protocol: Option<ProtocolArg>,
    #[arg(long = "case", value_enum)]
    case: Option<CaseArg>,
    /// Variance V = 1 + 2α² (defaults to the protocol's reference value).
    #[arg(long)]
    v: Option<f64>,
    /// Fixed catalysis transmittance.
    #[arg(long)]
    t: Option<f64>,
    /// Excess noise per leg (SNU).
    #[arg(long)]
    xi: Option<f64>,
    /// Reconciliation efficiency.
    #[arg(long)]
    beta: Option<f64>,
    /// Fiber loss (dB/km).
    #[arg(long)]
    kappa: Option<f64>,
    /// Alice–Bob distance (km); split evenly between legs in the symmetric case.
    #[arg(long)]
    distance: Option<f64>,
    /// Swept axis as START:STOP:STEP.
    #[arg(long)]
    range: Option<String>,
    #[arg(long)]
    optimize_t: bool,
    /// Restrict T so the catalyzed modulated variance stays below 0.5.
    #[arg(long)]
    strict_bound: bool,
    /// Output file (stdout when absent).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<FormatArg>,
    /// JSON config file; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
}

impl Flags {
    fn overrides(&self) -> Result<ConfigOverrides, SweepError> {
        Ok(ConfigOverrides {
            command: None,
            protocol: self.protocol.map(|p| match p {
                ProtocolArg::Zpc => Protocol::Zpc,
                ProtocolArg::Original => Protocol::Original,
            }),
            case: self.case.map(|c| match c {
                CaseArg::Asym => Case::Asymmetric,
                CaseArg::Sym => Case::Symmetric,
            }),
            v: self.v,
            t: self.t,
            xi: self.xi,
            beta: self.beta,
            kappa: self.kappa,
            distance: self.distance,
            range: self.range.as_deref().map(str::parse::<Range>).transpose()?,
            optimize_t: self.optimize_t.then_some(true),
            strict_bound: self.strict_bound.then_some(true),
            output: self.out.clone(),
            format: self.format.map(|f| match f {
                FormatArg::Csv => Format::Csv,
                FormatArg::Json => Format::Json,
            }),
        })
    }
}

fn build_config(command: Command, flags: &Flags) -> Result<SweepConfig, SweepError> {
    let mut config = SweepConfig::new(command, Protocol::Zpc, Case::Asymmetric);
    if let Some(path) = &flags.config {
        config.apply(&ConfigOverrides::load(path)?);
    }
    config.apply(&flags.overrides()?);
    config.command = command;
    config.normalized()
}

fn run(command: Command, flags: &Flags) -> Result<(), SweepError> {
    let config = build_config(command, flags)?;
    let format = config.format;
    let output = config.output.clone();
    let table = run_sweep(config)?;
    match output {
        Some(path) => write_output(&table, format, &path),
        None => {
            let text = render(&table, format)?;
            std::io::stdout()
                .write_all(text.as_bytes())
                .map_err(|source| SweepError::Io { path: PathBuf::from("<stdout>"), source })
        }
    }
}

fn verify(cutoff: usize) -> ExitCode {
    println!("alpha_sq,t_bs,max_deviation");
    let mut ok = true;
    for alpha_sq in [0.1, 0.2, 0.5, 0.75, 1.0] {
        for t_bs in [0.275, 0.5, 1.0] {
            match verify_closed_forms(alpha_sq, t_bs, cutoff) {
                Ok(report) => {
                    let dev = report.max_deviation();
                    ok &= dev < 1e-9;
                    println!("{alpha_sq},{t_bs},{dev:.3e}");
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    return ExitCode::from(1);
                }
            }
        }
    }
    if ok {
        ExitCode::SUCCESS
    } else {
        eprintln!("error: oracle deviation above 1e-9");
        ExitCode::from(1)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (command, flags) = match &cli.command {
        Cmd::Point(f) => (Command::Point, f),
        Cmd::SweepVariance(f) => (Command::SweepVariance, f),
        Cmd::SweepDistance(f) => (Command::SweepDistance, f),
        Cmd::NoiseThreshold(f) => (Command::NoiseThreshold, f),
        Cmd::SweepBeta(f) => (Command::SweepBeta, f),
        Cmd::Verify { cutoff } => return verify(*cutoff),
    };
    match run(command, flags) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
