use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use hk_dichotomy::norms::{build_dichotomy_norm, build_growth_norm, NormSequence};
use hk_dichotomy::series::TildeStrategy;
use hk_dichotomy::{ConditionId, SplitSystem, VectorNorm};
use hk_dichotomy_cli::analysis::{run_series, SeriesKind};
use hk_dichotomy_cli::report::{emit, norms_table, to_json, write_condition_csv};
use hk_dichotomy_cli::{example_spec, run_analysis, AnalysisConfig, CliError, Inputs, SpecFile, DEFAULT_CONDITIONS, EXIT_INPUT};

/// Finite-window checks of nonuniform (h,k)-dichotomy and growth conditions.
///
/// Exit codes: 0 when no selected condition fails or diverges, 1 when one
/// does, 2 on malformed or invalid input.
#[derive(Parser)]
#[command(name = "hkdich", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct Common {
    /// Spec file (JSON).
    spec: PathBuf,
    /// Overrides the spec's window N.
    #[arg(long)]
    window: Option<usize>,
    /// Overrides the spec's base norm: max, sum or euclid.
    #[arg(long)]
    norm: Option<VectorNorm>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Emit {
    Spec,
    Report,
}

#[derive(Subcommand)]
enum Command {
    /// Parse and validate a spec without running the analysis.
    Validate {
        #[command(flatten)]
        common: Common,
    },
    /// Run every check and write the JSON certificate.
    Verify {
        #[command(flatten)]
        common: Common,
        /// Certificate path (stdout when omitted).
        #[arg(long)]
        report: Option<PathBuf>,
        /// Directory for one CSV per condition.
        #[arg(long)]
        csv: Option<PathBuf>,
        /// Comma-separated conditions that decide the exit code.
        #[arg(long, value_delimiter = ',')]
        conditions: Option<Vec<ConditionId>>,
        /// Print the wall time to stderr (never written to the certificate).
        #[arg(long)]
        timing: bool,
    },
    /// Emit the spec or the certificate of a built-in example.
    Example {
        /// example2, example6, uniform-exponential, polynomial-diagonal or perturbed-random.
        name: String,
        /// Generator parameter as key=json, e.g. --set 'h={"kind":"exponential","alpha":1.0}'.
        #[arg(long = "set", value_parser = parse_key_value)]
        set: Vec<(String, serde_json::Value)>,
        #[arg(long, default_value_t = 32)]
        window: usize,
        #[arg(long, value_enum, default_value = "report")]
        emit: Emit,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// CSV of base, dichotomy and growth norms on the fixed samples.
    Norms {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Barbashin-type sums in the dichotomy norms.
    Barbashin {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Datko-type sums in the dichotomy norms.
    Datko {
        #[command(flatten)]
        common: Common,
        /// `default` or `table:<path>` with a JSON `{"values": [...], "bound": H}`.
        #[arg(long)]
        tilde: Option<String>,
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

fn parse_key_value(s: &str) -> Result<(String, serde_json::Value), String> {
    let (key, value) = s.split_once('=').ok_or_else(|| format!("expected key=json, got `{s}`"))?;
    let value = serde_json::from_str(value).map_err(|e| format!("{key}: {e}"))?;
    Ok((key.to_string(), value))
}

fn load(common: &Common, config_tol: &AnalysisConfig) -> Result<(SpecFile, Inputs), CliError> {
    let spec = SpecFile::read(&common.spec)?;
    let inputs = spec.inputs(common.window, common.norm, config_tol.tolerances.inputs())?;
    Ok((spec, inputs))
}

fn config_for(inputs: &Inputs, tilde: TildeStrategy<f64>, selected: Vec<ConditionId>) -> AnalysisConfig {
    AnalysisConfig::new(inputs.system.window(), inputs.system.norm(), tilde, selected)
}

fn defaults() -> AnalysisConfig {
    AnalysisConfig::new(1, VectorNorm::Max, TildeStrategy::Default, DEFAULT_CONDITIONS.to_vec())
}

fn parse_tilde(arg: &str) -> Result<TildeStrategy<f64>, CliError> {
    if arg == "default" {
        return Ok(TildeStrategy::Default);
    }
    let path = arg
        .strip_prefix("table:")
        .ok_or_else(|| CliError::validation("--tilde", format!("expected default or table:<path>, got `{arg}`")))?;
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(path.into(), e))?;
    #[derive(serde::Deserialize)]
    #[serde(deny_unknown_fields)]
    struct Table {
        values: Vec<f64>,
        bound: f64,
    }
    let t: Table = serde_json::from_str(&text).map_err(|e| CliError::Parse(format!("{path}: {e}")))?;
    Ok(TildeStrategy::Table { values: t.values, bound: t.bound })
}

fn run(command: Command) -> Result<i32, CliError> {
    match command {
        Command::Validate { common } => {
            let (spec, inputs) = load(&common, &defaults())?;
            println!("valid: {} (dimension {}, window {}), digest {}", inputs.source, spec.dimension, inputs.system.window(), inputs.digest);
            Ok(0)
        }
        Command::Verify { common, report, csv, conditions, timing } => {
            let start = Instant::now();
            let (_, inputs) = load(&common, &defaults())?;
            let config = config_for(&inputs, inputs.tilde.clone(), conditions.unwrap_or_else(|| DEFAULT_CONDITIONS.to_vec()));
            let cert = run_analysis(&inputs, &config)?;
            emit(&to_json(&cert), report.as_deref())?;
            if let Some(dir) = csv {
                write_condition_csv(&cert, &dir)?;
            }
            if timing {
                eprintln!("elapsed: {} ms", start.elapsed().as_millis());
            }
            Ok(cert.exit_code())
        }
        Command::Example { name, set, window, emit: what, output } => {
            let spec = example_spec(&name, &set, window)?;
            match what {
                Emit::Spec => {
                    spec.inputs(None, None, defaults().tolerances.inputs())?;
                    emit(&to_json(&spec), output.as_deref())?;
                    Ok(0)
                }
                Emit::Report => {
                    let inputs = spec.inputs(None, None, defaults().tolerances.inputs())?;
                    let config = config_for(&inputs, inputs.tilde.clone(), DEFAULT_CONDITIONS.to_vec());
                    let cert = run_analysis(&inputs, &config)?;
                    emit(&to_json(&cert), output.as_deref())?;
                    Ok(cert.exit_code())
                }
            }
        }
        Command::Norms { common, output } => {
            let config = defaults();
            let (_, inputs) = load(&common, &config)?;
            let structural = |e| CliError::Validation("splitting".into(), e);
            let split = SplitSystem::new(&inputs.system, inputs.projectors.clone(), config.tolerances.sigma_min)
                .map_err(structural)?;
            let base = NormSequence::base(&split, &inputs.h, &inputs.k).map_err(structural)?;
            let dichotomy = build_dichotomy_norm(&split, &inputs.h, &inputs.k).map_err(structural)?;
            let growth = build_growth_norm(&split, &inputs.h, &inputs.k).map_err(structural)?;
            emit(&norms_table(&base, &dichotomy, &growth)?, output.as_deref())?;
            Ok(0)
        }
        Command::Barbashin { common, output } => {
            let (_, inputs) = load(&common, &defaults())?;
            let config = config_for(&inputs, inputs.tilde.clone(), DEFAULT_CONDITIONS.to_vec());
            let out = run_series(&inputs, &config, SeriesKind::Barbashin)?;
            emit(&to_json(&out), output.as_deref())?;
            Ok(out.exit_code())
        }
        Command::Datko { common, tilde, output } => {
            let (_, inputs) = load(&common, &defaults())?;
            let strategy = match tilde {
                Some(arg) => parse_tilde(&arg)?,
                None => inputs.tilde.clone(),
            };
            let config = config_for(&inputs, strategy, DEFAULT_CONDITIONS.to_vec());
            let out = run_series(&inputs, &config, SeriesKind::Datko)?;
            emit(&to_json(&out), output.as_deref())?;
            Ok(out.exit_code())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_INPUT as u8)
        }
    }
}
