//! `tinydense` command-line front end.
//!
//! Exit codes: 0 success, 1 selftest failure, 2 input/parse/validation
//! error, 3 dimension mismatch, 4 I/O error.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use tinydense::eval::{self, scale_features, LabeledDataset, Scaling};
use tinydense::inference::{self, Batch};
use tinydense::network::{self, BUILTIN_NAMES};
use tinydense::{codegen, selftest, DispatchMode, EmitOptions, Error, ModelCard, NetworkSpec};

#[derive(Parser)]
#[command(name = "tinydense", version, about = "Inspect, run and deploy tiny dense networks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the model card: widths, activations, parameter count, memory.
    Describe {
        /// Built-in name (iris-8, iris-6) or path to a model document.
        model: String,
        #[arg(long)]
        json: bool,
    },
    /// Print one `index,probability,label` line per sample.
    Predict {
        model: String,
        /// CSV with one sample per row; a trailing label column is ignored.
        data: PathBuf,
        #[command(flatten)]
        run: RunFlags,
    },
    /// Print the confusion matrix and accuracy for a labelled CSV.
    Evaluate {
        model: String,
        data: PathBuf,
        #[command(flatten)]
        run: RunFlags,
    },
    /// Write a self-contained MicroPython program for the model.
    Emit {
        model: String,
        #[arg(long)]
        out: PathBuf,
        /// Emit the published activation and neuron code verbatim.
        #[arg(long)]
        compat: bool,
        /// Append confusion-matrix and accuracy code.
        #[arg(long)]
        include_eval: bool,
        /// Embed the samples (and labels, if present) of this CSV as Xtest/ytest.
        #[arg(long)]
        data: Option<PathBuf>,
    },
    /// Run the embedded invariant suite.
    Selftest {
        #[arg(long)]
        json: bool,
        /// Replace the built-in of the same name with this model document.
        #[arg(long, hide = true)]
        substitute_builtin: Option<PathBuf>,
    },
}

#[derive(Args)]
struct RunFlags {
    #[arg(long, default_value = "none", value_parser = parse_scaling)]
    scaling: Scaling,
    /// Defaults to the model's own mode (paper-compat for the built-ins).
    #[arg(long, value_parser = parse_mode)]
    mode: Option<DispatchMode>,
    /// Decision threshold in [0, 1]; defaults to the model's (0.5).
    #[arg(long, value_parser = parse_threshold)]
    threshold: Option<f64>,
    #[arg(long)]
    json: bool,
}

fn parse_scaling(s: &str) -> Result<Scaling, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_mode(s: &str) -> Result<DispatchMode, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_threshold(s: &str) -> Result<f64, String> {
    let t: f64 = s.parse().map_err(|_| format!("`{s}` is not a number"))?;
    if (0.0..=1.0).contains(&t) {
        Ok(t)
    } else {
        Err(format!("threshold must be within [0, 1], got {t}"))
    }
}

struct CliError {
    code: u8,
    message: String,
}

impl CliError {
    fn io(path: &Path, err: std::io::Error) -> Self {
        Self {
            code: 4,
            message: format!("{}: {err}", path.display()),
        }
    }

    fn input(message: impl Into<String>) -> Self {
        Self {
            code: 2,
            message: message.into(),
        }
    }
}

impl From<Error> for CliError {
    fn from(err: Error) -> Self {
        let code = match err {
            Error::DimensionMismatch { .. } => 3,
            _ => 2,
        };
        Self {
            code,
            message: err.to_string(),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.code)
        }
    }
}

fn run(command: Command) -> Result<u8, CliError> {
    match command {
        Command::Describe { model, json } => {
            let spec = resolve_model(&model)?;
            let card = ModelCard::from_spec(&spec)?;
            if json {
                println!("{}", card.to_json());
            } else {
                print!("{}", card.to_text());
            }
            Ok(0)
        }
        Command::Predict { model, data, run } => {
            let spec = configure(resolve_model(&model)?, &run);
            let text = read_input(&data)?;
            let (features, _) = eval::parse_samples(&text, spec.input_dim)?;
            let (features, _) = scale_features(&features, run.scaling)?;
            let probabilities = inference::probabilities(&spec, &Batch::new(features))?;
            let labels = inference::labels_from_probabilities(&probabilities, spec.threshold);
            if run.json {
                let rows: Vec<_> = probabilities
                    .iter()
                    .zip(&labels)
                    .enumerate()
                    .map(|(i, (p, l))| json!({ "index": i, "probability": p, "label": l }))
                    .collect();
                println!("{}", serde_json::to_string_pretty(&rows).expect("json values serialize"));
            } else {
                for (i, (p, l)) in probabilities.iter().zip(&labels).enumerate() {
                    println!("{i},{p},{l}");
                }
            }
            Ok(0)
        }
        Command::Evaluate { model, data, run } => {
            let spec = configure(resolve_model(&model)?, &run);
            let text = read_input(&data)?;
            let mut ds = load_labelled(&text, spec.input_dim)?;
            ds.name = data.display().to_string();
            let report = eval::evaluate(&spec, &ds, run.scaling)?;
            if run.json {
                println!("{}", report.to_json());
            } else {
                println!("{report}");
            }
            Ok(0)
        }
        Command::Emit {
            model,
            out,
            compat,
            include_eval,
            data,
        } => {
            let spec = resolve_model(&model)?;
            let embedded = match &data {
                Some(path) => Some(eval::parse_samples(&read_input(path)?, spec.input_dim)?),
                None => None,
            };
            let options = EmitOptions {
                compat,
                include_eval,
                samples: embedded.as_ref().map(|(x, _)| x),
                labels: embedded.as_ref().and_then(|(_, y)| y.as_deref()),
            };
            let program = codegen::emit_micropython(&spec, &options)?;
            fs::write(&out, &program).map_err(|e| CliError::io(&out, e))?;
            println!("wrote {} bytes to {}", program.len(), out.display());
            Ok(0)
        }
        Command::Selftest {
            json,
            substitute_builtin,
        } => {
            let report = match substitute_builtin {
                None => selftest::run(),
                Some(path) => {
                    let replacement = network::load(&read_input(&path)?)?;
                    let builtins: Vec<NetworkSpec> = BUILTIN_NAMES
                        .iter()
                        .map(|n| {
                            if *n == replacement.name {
                                replacement.clone()
                            } else {
                                network::builtin(n).expect("built-in names resolve")
                            }
                        })
                        .collect();
                    selftest::run_with_builtins(&builtins)
                }
            };
            if json {
                println!("{}", serde_json::to_string_pretty(&report).expect("reports serialize"));
            } else {
                for c in &report.checks {
                    let status = if c.passed { "ok  " } else { "FAIL" };
                    println!("{status} {:<22} {}", c.name, c.detail);
                }
            }
            match report.first_failure() {
                None => Ok(0),
                Some(failed) => {
                    eprintln!("selftest failed: {}", failed.name);
                    Ok(1)
                }
            }
        }
    }
}

fn resolve_model(arg: &str) -> Result<NetworkSpec, CliError> {
    if BUILTIN_NAMES.contains(&arg) {
        return Ok(network::builtin(arg)?);
    }
    let path = Path::new(arg);
    let text = fs::read_to_string(path).map_err(|e| {
        CliError::input(format!("cannot read model `{arg}`: {e} (built-ins: {})", BUILTIN_NAMES.join(", ")))
    })?;
    Ok(network::load(&text)?)
}

fn read_input(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::input(format!("cannot read `{}`: {e}", path.display())))
}

fn configure(mut spec: NetworkSpec, flags: &RunFlags) -> NetworkSpec {
    if let Some(mode) = flags.mode {
        spec.dispatch_mode = mode;
    }
    if let Some(t) = flags.threshold {
        spec.threshold = t;
    }
    spec
}

fn load_labelled(text: &str, input_dim: usize) -> Result<LabeledDataset, CliError> {
    match eval::parse_samples(text, input_dim)? {
        (features, Some(labels)) => Ok(LabeledDataset::new("csv", features, labels)?),
        (_, None) => Err(CliError::input("evaluate needs a label column after the features")),
    }
}
