use std::io::Read;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use tahp_core::fixture::{infosec_skeleton, infosec_targets, FitOptions, FitTargets};
use tahp_core::sensitivity::reports_for;
use tahp_core::{
    export_results, export_sensitivity, fit_fixture, parse, parse_lenient, serialize, synthesize, ConsistencyGate,
    DecisionModel, DocumentError, ExportFormat, FitError, Method, PowerIteration, SensitivityError, SolveOptions,
    SynthesisError, Theta,
};

mod outline;

/// Ternary AHP: build, check and solve pairwise-comparison models.
#[derive(Debug, Parser)]
#[command(name = "tahp", version)]
struct Cli {
    /// Model document to read (or write, for `new`).
    #[arg(long, global = true)]
    model: Option<PathBuf>,
    /// Output format: table, csv or json-lines.
    #[arg(long, global = true, default_value = "table")]
    format: ExportFormat,
    #[arg(long, global = true, default_value = "eigenvector")]
    method: Method,
    /// Override the model's θ.
    #[arg(long, global = true)]
    theta: Option<f64>,
    /// Consistency ratio above which a context is flagged.
    #[arg(long, global = true, default_value_t = ConsistencyGate::DEFAULT_THRESHOLD)]
    cr_threshold: f64,
    /// Power-iteration convergence tolerance (max-norm).
    #[arg(long, global = true, default_value_t = PowerIteration::default().tol)]
    tol: f64,
    /// Power-iteration step limit.
    #[arg(long, global = true, default_value_t = PowerIteration::default().max_iter)]
    max_iter: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Scaffold a model document from an indented hierarchy outline.
    New {
        /// Outline file; `-` or absent reads stdin.
        outline: Option<PathBuf>,
        #[arg(long, default_value = "model")]
        name: String,
    },
    /// Check structure and judgment completeness.
    Validate,
    /// Synthesize and print or export the results.
    Solve {
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Per-criterion sensitivity report.
    Sensitivity {
        /// Only this top-level criterion.
        #[arg(long)]
        criterion: Option<String>,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Search judgments reproducing target weights (defaults to the bundled case).
    FitFixture {
        /// JSON targets file.
        #[arg(long)]
        targets: Option<PathBuf>,
        /// Writes `<stem>.json` and `<stem>.provenance.json` here.
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
        #[arg(long, default_value = "infosec")]
        stem: String,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        restarts: Option<usize>,
        #[arg(long)]
        tolerance: Option<f64>,
    },
    /// Start the HTTP service.
    Serve {
        #[arg(long, default_value = "127.0.0.1")]
        bind: std::net::IpAddr,
        #[arg(long, default_value_t = 8080)]
        port: u16,
        /// Built UI bundle to serve under `/`.
        #[arg(long)]
        static_dir: Option<PathBuf>,
        #[arg(long)]
        snapshot_dir: Option<PathBuf>,
    },
}

/// A failed command: exit status plus the message printed to stderr.
#[derive(Debug)]
struct Failure {
    status: u8,
    message: String,
}

const VALIDATION: u8 = 1;
const IO_OR_PARSE: u8 = 2;
const COMPUTATIONAL: u8 = 3;

impl Failure {
    fn new(status: u8, message: impl Into<String>) -> Self {
        Failure {
            status,
            message: message.into(),
        }
    }

    fn io(path: &Path, e: std::io::Error) -> Self {
        Failure::new(IO_OR_PARSE, format!("error[io] at {}: {e}", path.display()))
    }
}

impl From<DocumentError> for Failure {
    fn from(e: DocumentError) -> Self {
        Failure::new(IO_OR_PARSE, format!("error[{}] at {}: {e}", e.code(), e.locus()))
    }
}

impl From<SynthesisError> for Failure {
    fn from(e: SynthesisError) -> Self {
        let status = if e.is_computational() {
            COMPUTATIONAL
        } else {
            VALIDATION
        };
        let locus = e.locus().map(|l| l.to_string()).unwrap_or_else(|| "model".into());
        let mut message = format!("error[{}] at {locus}: {e}", e.code());
        if let SynthesisError::Incomplete(missing) = &e {
            for m in missing {
                for (i, j) in &m.pairs {
                    message.push_str(&format!("\n  missing {}: ({i}, {j})", m.context));
                }
            }
        }
        Failure::new(status, message)
    }
}

impl From<SensitivityError> for Failure {
    fn from(e: SensitivityError) -> Self {
        match e {
            SensitivityError::Synthesis(s) => s.into(),
            other => Failure::new(VALIDATION, format!("error[{}]: {other}", other.code())),
        }
    }
}

fn read_text(path: Option<&Path>) -> Result<String, Failure> {
    match path {
        Some(p) if p != Path::new("-") => std::fs::read_to_string(p).map_err(|e| Failure::io(p, e)),
        _ => {
            let mut s = String::new();
            std::io::stdin()
                .read_to_string(&mut s)
                .map_err(|e| Failure::io(Path::new("<stdin>"), e))?;
            Ok(s)
        }
    }
}

fn write_text(path: Option<&Path>, text: &str) -> Result<(), Failure> {
    match path {
        Some(p) if p != Path::new("-") => std::fs::write(p, text).map_err(|e| Failure::io(p, e)),
        _ => {
            print!("{text}");
            Ok(())
        }
    }
}

impl Cli {
    fn model_path(&self) -> Result<&Path, Failure> {
        self.model
            .as_deref()
            .ok_or_else(|| Failure::new(IO_OR_PARSE, "error[usage]: --model <path> is required"))
    }

    fn theta(&self) -> Result<Option<Theta>, Failure> {
        self.theta
            .map(|t| {
                Theta::new(t).map_err(|e| Failure::new(IO_OR_PARSE, format!("error[{}] at --theta: {e}", e.code())))
            })
            .transpose()
    }

    fn load(&self, strict: bool) -> Result<DecisionModel, Failure> {
        let text = read_text(Some(self.model_path()?))?;
        let mut model = if strict { parse(&text)? } else { parse_lenient(&text)? };
        if let Some(theta) = self.theta()? {
            model.set_theta(theta);
        }
        Ok(model)
    }

    fn solve_options(&self) -> SolveOptions {
        SolveOptions {
            method: self.method,
            iteration: PowerIteration {
                tol: self.tol,
                max_iter: self.max_iter,
            },
            ..SolveOptions::default()
        }
    }

    fn gate(&self) -> ConsistencyGate {
        ConsistencyGate::new(self.cr_threshold)
    }
}

fn warn_gate(result: &tahp_core::SynthesisResult, gate: ConsistencyGate) {
    for pv in result.per_context.iter().filter(|pv| !gate.passes(pv)) {
        let ctx = pv.context.as_ref().map(|c| c.as_str()).unwrap_or("?");
        eprintln!(
            "warning: context `{ctx}` has CR {:.3} above {}; consider revising its judgments",
            pv.cr, gate.threshold
        );
    }
}

fn run(cli: &Cli) -> Result<(), Failure> {
    match &cli.command {
        Command::New { outline: source, name } => {
            let text = read_text(source.as_deref())?;
            let theta = cli.theta()?.unwrap_or_default();
            let model = outline::parse(name, theta.get(), &text).map_err(|e| match e {
                outline::Error::Outline(e) => Failure::new(IO_OR_PARSE, format!("error[outline] at {e}")),
                outline::Error::Model(e) => {
                    let locus = e.locus().map(|l| l.to_string()).unwrap_or_else(|| "outline".into());
                    Failure::new(VALIDATION, format!("error[{}] at {locus}: {e}", e.code()))
                }
            })?;
            write_text(cli.model.as_deref(), &serialize(&model))
        }
        Command::Validate => {
            let model = cli.load(false)?;
            let report = model.validate();
            if report.is_empty() {
                println!(
                    "ok: {} contexts, {} judgments, complete",
                    model.contexts().len(),
                    model.judgment_count()
                );
                Ok(())
            } else {
                Err(Failure::new(
                    VALIDATION,
                    format!(
                        "{report}\n{} issue(s), {} missing judgment(s)",
                        report.issues.len(),
                        report.missing_judgments()
                    ),
                ))
            }
        }
        Command::Solve { output } => {
            let model = cli.load(true)?;
            let opts = cli.solve_options();
            let result = synthesize(&model, &opts)?;
            let reports = reports_for(&model, &result, opts.execution)?;
            warn_gate(&result, cli.gate());
            write_text(
                output.as_deref(),
                &export_results(&result, &reports, cli.format, cli.gate()),
            )
        }
        Command::Sensitivity { criterion, output } => {
            let model = cli.load(true)?;
            let opts = cli.solve_options();
            let result = synthesize(&model, &opts)?;
            let reports = match criterion {
                Some(c) => vec![tahp_core::sensitivity::sensitivity_report(&model, &result, c)?],
                None => reports_for(&model, &result, opts.execution)?,
            };
            write_text(output.as_deref(), &export_sensitivity(&reports, cli.format))
        }
        Command::FitFixture {
            targets,
            out_dir,
            stem,
            seed,
            restarts,
            tolerance,
        } => {
            let (skeleton, targets) = match targets {
                Some(path) => {
                    let skeleton = cli.load(false)?;
                    let text = read_text(Some(path))?;
                    let targets: FitTargets = serde_json::from_str(&text).map_err(|e| {
                        Failure::new(
                            IO_OR_PARSE,
                            format!(
                                "error[syntax] at {} line {}, column {}: {e}",
                                path.display(),
                                e.line(),
                                e.column()
                            ),
                        )
                    })?;
                    (skeleton, targets)
                }
                None => (infosec_skeleton(), infosec_targets()),
            };
            let defaults = FitOptions::default();
            let opts = FitOptions {
                seed: seed.unwrap_or(defaults.seed),
                restarts: restarts.unwrap_or(defaults.restarts),
                tolerance: tolerance.unwrap_or(defaults.tolerance),
                preferred_theta: cli.theta.unwrap_or(defaults.preferred_theta),
                gate: cli.gate(),
                ..defaults
            };
            let (outcome, feasible) = match fit_fixture(&skeleton, &targets, &opts) {
                Ok(o) => (o, true),
                Err(FitError::Infeasible(best)) => (*best, false),
                Err(e) => return Err(Failure::new(VALIDATION, format!("error[{}]: {e}", e.code()))),
            };
            std::fs::create_dir_all(out_dir).map_err(|e| Failure::io(out_dir, e))?;
            let doc_path = out_dir.join(format!("{stem}.json"));
            let prov_path = out_dir.join(format!("{stem}.provenance.json"));
            write_text(Some(&doc_path), &outcome.document())?;
            write_text(Some(&prov_path), &outcome.provenance_text())?;
            let p = &outcome.provenance;
            println!(
                "theta {} max residual {:.5} overall inconsistency {:.4} sensitivity constraints {}",
                p.theta,
                p.max_residual,
                p.overall_inconsistency,
                if p.sensitivity_constraints_met {
                    "met"
                } else {
                    "NOT met"
                }
            );
            println!("wrote {} and {}", doc_path.display(), prov_path.display());
            if feasible {
                Ok(())
            } else {
                Err(Failure::new(
                    COMPUTATIONAL,
                    "error[infeasible_targets]: best attempt written, targets not met",
                ))
            }
        }
        Command::Serve {
            bind,
            port,
            static_dir,
            snapshot_dir,
        } => {
            tracing_subscriber::fmt()
                .with_env_filter(
                    tracing_subscriber::EnvFilter::try_from_default_env()
                        .unwrap_or_else(|_| tracing_subscriber::EnvFilter::new("info")),
                )
                .init();
            let config = tahp_service::Config {
                static_dir: static_dir.clone(),
                snapshot_dir: snapshot_dir.clone(),
                solve: cli.solve_options(),
                gate: cli.gate(),
            };
            let runtime = tokio::runtime::Runtime::new().map_err(|e| Failure::new(IO_OR_PARSE, e.to_string()))?;
            runtime
                .block_on(tahp_service::serve(SocketAddr::new(*bind, *port), config))
                .map_err(|e| Failure::new(IO_OR_PARSE, format!("error[io]: {e}")))
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("{}", f.message);
            ExitCode::from(f.status)
        }
    }
}
