//! `stdref`: validate, simulate, refine and compare state transition diagrams.

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use stdref::features::{apply_feature, conflict_matrix, ConflictVerdict, FeaturePatch};
use stdref::interp::{simulate, Bounds, InterpError, Outcome, Verdict};
use stdref::model::{check_input, desugar, validate_std, Environment, Std, Universe};
use stdref::refine::{check_refinement, RefineError};
use stdref::text::{
    export_dot, export_json, import_json, parse_env, parse_feature, parse_messages, parse_std,
    print_std,
};

const SUCCESS: u8 = 0;
const FAILED: u8 = 1;
const USAGE: u8 = 2;
const RESOURCE: u8 = 3;

#[derive(Parser)]
#[command(
    name = "stdref",
    version,
    about = "State transition diagrams: check, simulate, refine, detect feature conflicts"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Emit schema-tagged JSON instead of text.
    #[arg(long, global = true)]
    json: bool,
    #[command(flatten)]
    bounds: BoundArgs,
}

#[derive(Args)]
struct BoundArgs {
    /// Maximum input sequence length.
    #[arg(long, global = true, default_value_t = 4)]
    k: usize,
    /// Consecutive ε-steps allowed per message.
    #[arg(long, global = true, default_value_t = 4)]
    eps_budget: usize,
    /// Maximum length of an output sequence.
    #[arg(long, global = true, default_value_t = 16)]
    output_cap: usize,
    /// Limit on explored (configuration, output) pairs.
    #[arg(long, global = true, default_value_t = 2_000_000)]
    max_states: usize,
}

impl BoundArgs {
    fn bounds(&self) -> Bounds {
        Bounds {
            k: self.k,
            eps_budget: self.eps_budget,
            output_cap: self.output_cap,
            max_states: self.max_states,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Validate a .std, .feat or .env file and report its desugared form.
    Check {
        file: PathBuf,
        #[arg(long)]
        env: Option<PathBuf>,
    },
    /// Print the output set (or CHAOS) for one input sequence.
    Simulate {
        file: PathBuf,
        #[arg(long)]
        env: Option<PathBuf>,
        /// Comma-separated messages, e.g. "LT, DL(7)".
        #[arg(long, default_value = "")]
        input: String,
    },
    /// Verify refinement between two Stds or apply a feature patch.
    #[command(subcommand)]
    Refine(RefineCommand),
    /// Feature interaction analysis.
    #[command(subcommand)]
    Feature(FeatureCommand),
    /// Write a Std as Graphviz DOT or JSON.
    Export {
        format: ExportFormat,
        file: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum RefineCommand {
    /// Bounded check that CONCRETE refines ABSTRACT.
    Verify {
        r#abstract: PathBuf,
        concrete: PathBuf,
        #[arg(long)]
        env: Option<PathBuf>,
    },
    /// Apply a feature patch, checking each rule's side conditions.
    Apply {
        file: PathBuf,
        patch: PathBuf,
        #[arg(long)]
        env: Option<PathBuf>,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum FeatureCommand {
    /// Pairwise conflict detection between feature patches.
    Conflicts {
        file: PathBuf,
        #[arg(required = true, num_args = 2..)]
        patches: Vec<PathBuf>,
        #[arg(long)]
        env: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum ExportFormat {
    Dot,
    Json,
}

/// A failure carrying its exit code; the message goes to stderr.
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Failure {
        Failure {
            code: USAGE,
            message: message.into(),
        }
    }
}

impl From<RefineError> for Failure {
    fn from(e: RefineError) -> Failure {
        let code = match e {
            RefineError::Interp(InterpError::Resource { .. }) => RESOURCE,
            _ => USAGE,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

impl From<InterpError> for Failure {
    fn from(e: InterpError) -> Failure {
        RefineError::Interp(e).into()
    }
}

/// Report text plus exit code for a completed run.
struct Report {
    code: u8,
    text: String,
}

fn read(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))
}

fn write_out(path: &Path, text: &str) -> Result<(), Failure> {
    std::fs::write(path, text).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))
}

fn name(path: &Path) -> String {
    path.display().to_string()
}

fn load_std(path: &Path) -> Result<Std, Failure> {
    let text = read(path)?;
    if path.extension().is_some_and(|e| e == "json") {
        return import_json(&text).map_err(|e| Failure::usage(format!("{}: {e}", path.display())));
    }
    parse_std(&text, &name(path)).map_err(|errs| {
        Failure::usage(
            errs.iter()
                .map(|e| e.to_string())
                .collect::<Vec<_>>()
                .join("\n"),
        )
    })
}

fn load_env(path: Option<&Path>) -> Result<Environment, Failure> {
    match path {
        None => Ok(Environment::new()),
        Some(p) => parse_env(&read(p)?, &name(p)).map_err(|errs| {
            Failure::usage(
                errs.iter()
                    .map(|e| e.to_string())
                    .collect::<Vec<_>>()
                    .join("\n"),
            )
        }),
    }
}

fn load_patch(path: &Path) -> Result<FeaturePatch, Failure> {
    parse_feature(&read(path)?, &name(path)).map_err(|e| Failure::usage(e.to_string()))
}

fn env_diagnostics(std: &Std, env: &Environment) -> Result<(), Failure> {
    let diags = validate_std(std, Some(&env.decls));
    if diags.is_empty() {
        Ok(())
    } else {
        Err(Failure::usage(
            diags
                .iter()
                .map(|d| format!("{}: {d}", std.name))
                .collect::<Vec<_>>()
                .join("\n"),
        ))
    }
}

fn pretty(v: &serde_json::Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("JSON value serializes");
    s.push('\n');
    s
}

fn verdict_text(v: &Verdict, what: &str) -> String {
    let mut s = format!(
        "{} {what} (bounds: {})\n",
        if v.pass { "PASS" } else { "FAIL" },
        v.bounds
    );
    if let Some(cx) = &v.counterexample {
        let _ = writeln!(s, "counterexample: {cx}");
    }
    for w in &v.warnings {
        let _ = writeln!(s, "warning: {w}");
    }
    s
}

fn check(file: &Path, env: Option<&Path>, json: bool) -> Result<Report, Failure> {
    let ext = file.extension().and_then(|e| e.to_str()).unwrap_or("");
    match ext {
        "feat" => {
            let f = load_patch(file)?;
            let rules: Vec<&str> = f.steps.iter().map(|s| s.rule_name()).collect();
            let text = if json {
                pretty(
                    &json!({"format": "check/1", "kind": "feature", "name": f.name, "subject": f.subject, "rules": rules}),
                )
            } else {
                format!(
                    "ok: feature {} on {}: {}\n",
                    f.name,
                    f.subject,
                    rules.join(", ")
                )
            };
            return Ok(Report {
                code: SUCCESS,
                text,
            });
        }
        "env" => {
            let e = load_env(Some(file))?;
            let symbols: Vec<&String> = e.decls.symbols.keys().collect();
            let text = if json {
                pretty(
                    &json!({"format": "check/1", "kind": "env", "domains": e.decls.domains, "symbols": symbols}),
                )
            } else {
                format!(
                    "ok: environment with {} domain(s), {} symbol(s)\n",
                    e.decls.domains.len(),
                    symbols.len()
                )
            };
            return Ok(Report {
                code: SUCCESS,
                text,
            });
        }
        _ => {}
    }
    let std = load_std(file)?;
    if let Some(p) = env {
        env_diagnostics(&std, &load_env(Some(p))?)?;
    }
    let d = desugar(&std).map_err(|e| Failure::usage(e.to_string()))?;
    let text = if json {
        pretty(&json!({
            "format": "check/1",
            "kind": "std",
            "name": std.name,
            "states": std.states.len(),
            "attributes": std.attributes.len(),
            "transitions": std.transitions.len(),
            "sugared": std.has_surface_sugar(),
            "desugared": serde_json::from_str::<serde_json::Value>(&export_json(&d)).expect("export is JSON"),
        }))
    } else {
        let mut s = format!(
            "ok: std {}: {} states, {} attributes, {} transitions\n",
            std.name,
            std.states.len(),
            std.attributes.len(),
            std.transitions.len()
        );
        if std.has_surface_sugar() {
            s.push_str("desugared:\n");
            s.push_str(&print_std(&d));
        } else {
            s.push_str("no else guards or priorities to desugar\n");
        }
        s
    };
    Ok(Report {
        code: SUCCESS,
        text,
    })
}

fn run_simulate(
    file: &Path,
    env: Option<&Path>,
    input: &str,
    bounds: Bounds,
    json: bool,
) -> Result<Report, Failure> {
    let std = load_std(file)?;
    let env = load_env(env)?;
    env_diagnostics(&std, &env)?;
    let msgs =
        parse_messages(input).map_err(|e| Failure::usage(format!("--input: {}", e.message)))?;
    let d = desugar(&std).map_err(|e| Failure::usage(e.to_string()))?;
    let u = Universe::new(&d, &env);
    for m in &msgs {
        check_input(&u, m).map_err(|e| Failure::usage(format!("--input: {e}")))?;
    }
    let (outcome, warnings) = simulate(&u, &msgs, &bounds)?;
    let bounds = Bounds {
        k: msgs.len(),
        ..bounds
    };
    let text = if json {
        let outcome_json = match &outcome {
            Outcome::Chaos => json!("chaos"),
            Outcome::Outputs(set) => json!(set
                .iter()
                .map(|o| o.iter().map(|m| m.to_string()).collect::<Vec<_>>())
                .collect::<Vec<_>>()),
        };
        pretty(&json!({
            "format": "simulation/1",
            "bounds": bounds,
            "input": msgs.iter().map(|m| m.to_string()).collect::<Vec<_>>(),
            "outcome": outcome_json,
            "warnings": warnings,
        }))
    } else {
        let mut s = format!("{outcome}\n(bounds: {bounds})\n");
        for w in &warnings {
            let _ = writeln!(s, "warning: {w}");
        }
        s
    };
    Ok(Report {
        code: SUCCESS,
        text,
    })
}

fn verify(
    abs: &Path,
    conc: &Path,
    env: Option<&Path>,
    bounds: Bounds,
    json: bool,
) -> Result<Report, Failure> {
    let a = load_std(abs)?;
    let c = load_std(conc)?;
    let env = load_env(env)?;
    env_diagnostics(&a, &env)?;
    env_diagnostics(&c, &env)?;
    let v = check_refinement(&a, &c, &env, &bounds)?;
    let text = if json {
        pretty(&v.to_json())
    } else {
        verdict_text(&v, &format!("{} refines {}", name(conc), name(abs)))
    };
    Ok(Report {
        code: if v.pass { SUCCESS } else { FAILED },
        text,
    })
}

fn apply(
    file: &Path,
    patch: &Path,
    env: Option<&Path>,
    output: Option<&Path>,
    json: bool,
) -> Result<Report, Failure> {
    let std = load_std(file)?;
    let f = load_patch(patch)?;
    let env = load_env(env)?;
    env_diagnostics(&std, &env)?;
    match apply_feature(&std, &f, &env) {
        Ok(result) => {
            let body = if json {
                export_json(&result) + "\n"
            } else {
                print_std(&result)
            };
            match output {
                Some(p) => {
                    write_out(p, &body)?;
                    let text = if json {
                        pretty(&json!({"format": "apply/1", "applied": f.name, "output": name(p)}))
                    } else {
                        format!(
                            "applied {} ({} step(s)); wrote {}\n",
                            f.name,
                            f.steps.len(),
                            name(p)
                        )
                    };
                    Ok(Report {
                        code: SUCCESS,
                        text,
                    })
                }
                None => Ok(Report {
                    code: SUCCESS,
                    text: body,
                }),
            }
        }
        Err(e) => {
            let text = if json {
                pretty(&json!({"format": "apply/1", "applied": null, "error": e}))
            } else {
                format!("rule error: {e}\n")
            };
            Ok(Report { code: FAILED, text })
        }
    }
}

fn conflicts(
    file: &Path,
    patches: &[PathBuf],
    env: Option<&Path>,
    bounds: Bounds,
    json: bool,
) -> Result<Report, Failure> {
    let std = load_std(file)?;
    let env = load_env(env)?;
    env_diagnostics(&std, &env)?;
    let fs = patches
        .iter()
        .map(|p| load_patch(p))
        .collect::<Result<Vec<_>, _>>()?;
    let m = conflict_matrix(&std, &fs, &env, &bounds)?;
    let any_conflict = m
        .iter()
        .any(|(_, r)| r.verdict == ConflictVerdict::Conflicting);
    let text = if json {
        pretty(&json!({
            "format": "conflict-matrix/1",
            "bounds": bounds,
            "features": fs.iter().map(|f| &f.name).collect::<Vec<_>>(),
            "pairs": m.iter().map(|((i, j), r)| json!({"i": i, "j": j, "report": r.to_json()})).collect::<Vec<_>>(),
        }))
    } else {
        let mut s = format!("conflict matrix over {} (bounds: {bounds})\n", std.name);
        for (_, r) in &m {
            s.push_str(&r.to_string());
        }
        s
    };
    Ok(Report {
        code: if any_conflict { FAILED } else { SUCCESS },
        text,
    })
}

fn export(format: ExportFormat, file: &Path, output: Option<&Path>) -> Result<Report, Failure> {
    let std = load_std(file)?;
    let body = match format {
        ExportFormat::Dot => export_dot(&std),
        ExportFormat::Json => export_json(&std) + "\n",
    };
    match output {
        Some(p) => {
            write_out(p, &body)?;
            Ok(Report {
                code: SUCCESS,
                text: String::new(),
            })
        }
        None => Ok(Report {
            code: SUCCESS,
            text: body,
        }),
    }
}

fn run(cli: Cli) -> Result<Report, Failure> {
    let bounds = cli.bounds.bounds();
    let json = cli.json;
    match cli.command {
        Command::Check { file, env } => check(&file, env.as_deref(), json),
        Command::Simulate { file, env, input } => {
            run_simulate(&file, env.as_deref(), &input, bounds, json)
        }
        Command::Refine(RefineCommand::Verify {
            r#abstract,
            concrete,
            env,
        }) => verify(&r#abstract, &concrete, env.as_deref(), bounds, json),
        Command::Refine(RefineCommand::Apply {
            file,
            patch,
            env,
            output,
        }) => apply(&file, &patch, env.as_deref(), output.as_deref(), json),
        Command::Feature(FeatureCommand::Conflicts { file, patches, env }) => {
            conflicts(&file, &patches, env.as_deref(), bounds, json)
        }
        Command::Export {
            format,
            file,
            output,
        } => export(format, &file, output.as_deref()),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { USAGE } else { SUCCESS });
        }
    };
    match run(cli) {
        Ok(r) => {
            print!("{}", r.text);
            ExitCode::from(r.code)
        }
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
