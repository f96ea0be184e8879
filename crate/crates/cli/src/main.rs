use std::fmt;
use std::fs;
use std::io::{self, IsTerminal, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use pppm_core::analysis::{run_lints, LintConfig, Severity};
use pppm_core::dsl::{load_policy, LoadError};
use pppm_core::query::{QueryEngine, QueryError};
use pppm_core::render::{emit_graph, emit_tables, RenderOptions};
use pppm_core::{EvalContext, PolicyModel, Value};

const OK: u8 = 0;
const INVALID: u8 = 1;
const LINT_FAILED: u8 = 2;
const PARSE_FAILED: u8 = 3;
const USAGE: u8 = 4;

/// Validate, lint, query and render privacy policy permission models.
#[derive(Debug, Parser)]
#[command(name = "pppm", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Parse and validate a policy file.
    Check { file: PathBuf },
    /// Run the gap-analysis lints.
    Lint {
        file: PathBuf,
        /// Comma-separated rule ids or names, e.g. `L1,L5`. Defaults to all rules.
        #[arg(long)]
        rules: Option<String>,
        /// Exit with status 2 when any warning is reported.
        #[arg(long)]
        deny_warnings: bool,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
    /// Decide whether a role may access an attribute.
    Query {
        file: PathBuf,
        #[arg(long)]
        role: String,
        #[arg(long)]
        attribute: String,
        /// Restrict the decision to one purpose; all purposes are tried otherwise.
        #[arg(long)]
        purpose: Option<String>,
        /// Context binding `name=value`; value is a number, HH:MM, true/false or a quoted string.
        #[arg(long = "ctx", value_name = "NAME=VALUE")]
        ctx: Vec<String>,
    },
    /// Emit the permission diagram in DOT syntax.
    Render {
        file: PathBuf,
        /// Comma-separated: roles, purposes, attributes, role-purpose, purpose-attribute, all.
        #[arg(long, default_value = "all")]
        layers: String,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Add an id/label legend to each cluster.
        #[arg(long)]
        legend: bool,
        /// Draw attribute groups as nested clusters.
        #[arg(long)]
        cluster_groups: bool,
    },
    /// Emit tab-separated tables of every component and connection.
    Report {
        file: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Tsv,
}

/// A failed invocation: the message for stderr and the exit status.
#[derive(Debug)]
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn usage(message: impl fmt::Display) -> Self {
        Failure { code: USAGE, message: format!("error: {message}") }
    }
}

impl From<LoadError> for Failure {
    fn from(e: LoadError) -> Self {
        let code = match e {
            LoadError::Parse(_) => PARSE_FAILED,
            LoadError::Lower(_) => INVALID,
        };
        Failure { code, message: e.to_string() }
    }
}

struct Style {
    enabled: bool,
}

impl Style {
    fn detect() -> Self {
        let enabled = std::env::var_os("PPPM_NO_COLOR").is_none() && io::stdout().is_terminal();
        Style { enabled }
    }

    fn paint(&self, text: &str, code: &str) -> String {
        if self.enabled {
            format!("\x1b[{code}m{text}\x1b[0m")
        } else {
            text.to_string()
        }
    }

    fn severity(&self, s: Severity) -> String {
        match s {
            Severity::Error => self.paint(s.as_str(), "1;31"),
            Severity::Warning => self.paint(s.as_str(), "33"),
            Severity::Info => self.paint(s.as_str(), "36"),
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { USAGE } else { OK });
        }
    };
    let mut stdout = io::stdout().lock();
    match run(cli.command, &mut stdout) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            let _ = stdout.flush();
            eprintln!("{}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn load(path: &Path) -> Result<PolicyModel, Failure> {
    let text = fs::read_to_string(path)
        .map_err(|e| Failure::usage(format!("cannot read {}: {}", path.display(), io_reason(&e))))?;
    Ok(load_policy(&path.display().to_string(), &text)?)
}

fn io_reason(e: &io::Error) -> String {
    match e.kind() {
        io::ErrorKind::NotFound => "no such file".to_string(),
        io::ErrorKind::PermissionDenied => "permission denied".to_string(),
        _ => e.to_string(),
    }
}

fn emit(out: &mut dyn Write, target: Option<&Path>, text: &str) -> Result<(), Failure> {
    match target {
        Some(path) => fs::write(path, text)
            .map_err(|e| Failure::usage(format!("cannot write {}: {}", path.display(), io_reason(&e)))),
        None => out.write_all(text.as_bytes()).map_err(|e| Failure::usage(format!("cannot write output: {e}"))),
    }
}

fn parse_binding(binding: &str) -> Result<(String, Value), Failure> {
    let (name, value) = binding
        .split_once('=')
        .ok_or_else(|| Failure::usage(format!("--ctx `{binding}` must have the form name=value")))?;
    let name = name.trim();
    if name.is_empty() || !name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') {
        return Err(Failure::usage(format!("--ctx `{binding}` has an invalid variable name")));
    }
    let value = Value::parse_literal(value.trim()).map_err(|e| {
        Failure::usage(format!(
            "--ctx `{binding}`: {} (use a number, HH:MM, true/false or a double-quoted string)",
            e.message
        ))
    })?;
    Ok((name.to_string(), value))
}

fn run(command: Command, out: &mut dyn Write) -> Result<u8, Failure> {
    let style = Style::detect();
    let write_err = |e: io::Error| Failure::usage(format!("cannot write output: {e}"));
    match command {
        Command::Check { file } => {
            let m = load(&file)?;
            writeln!(
                out,
                "{}: valid ({} roles, {} purposes, {} attributes, {} tasks)",
                file.display(),
                m.roles.len(),
                m.purposes.len(),
                m.attributes.len(),
                m.tasks.len()
            )
            .map_err(write_err)?;
            Ok(OK)
        }
        Command::Lint { file, rules, deny_warnings, format } => {
            let config = match rules {
                Some(list) => LintConfig::from_rule_list(&list).map_err(Failure::usage)?,
                None => LintConfig::default(),
            };
            let m = load(&file)?;
            let findings = run_lints(&m, &config).map_err(|e| Failure { code: INVALID, message: e.to_string() })?;
            let mut text = String::new();
            for f in &findings {
                match format {
                    Format::Tsv => text.push_str(&f.tsv()),
                    Format::Text => {
                        text.push_str(&format!(
                            "{}[{} {}] {}: {}",
                            style.severity(f.severity),
                            f.rule,
                            f.rule.name(),
                            f.subject.join(", "),
                            f.message
                        ));
                    }
                }
                text.push('\n');
            }
            emit(out, None, &text)?;
            let count = |s: Severity| findings.iter().filter(|f| f.severity == s).count();
            let (errors, warnings) = (count(Severity::Error), count(Severity::Warning));
            if format == Format::Text {
                eprintln!(
                    "{} finding(s): {errors} error(s), {warnings} warning(s), {} info",
                    findings.len(),
                    count(Severity::Info)
                );
            }
            Ok(if errors > 0 || (deny_warnings && warnings > 0) { LINT_FAILED } else { OK })
        }
        Command::Query { file, role, attribute, purpose, ctx } => {
            let mut context = EvalContext::new();
            for binding in &ctx {
                let (name, value) = parse_binding(binding)?;
                context.bind(&name, value);
            }
            let m = load(&file)?;
            let engine = QueryEngine::new(&m).map_err(|e| Failure { code: INVALID, message: e.to_string() })?;
            let decision = engine
                .can_access(&role, &attribute, purpose.as_deref(), &context)
                .map_err(|e| match e {
                    QueryError::InvalidModel(e) => Failure { code: INVALID, message: e.to_string() },
                    other => Failure::usage(other),
                })?;
            let mut text = format!("{}\n", decision.outcome);
            for c in &decision.residual {
                text.push_str(&format!("residual: {c}\n"));
            }
            match &decision.path {
                Some(trace) => {
                    for line in trace.lines() {
                        text.push_str(&format!("trace: {line}\n"));
                    }
                }
                None => text.push_str("trace: no grant connects the role to the attribute\n"),
            }
            emit(out, None, &text)?;
            Ok(OK)
        }
        Command::Render { file, layers, out: target, legend, cluster_groups } => {
            let mut opts = RenderOptions::parse_layers(&layers).map_err(Failure::usage)?;
            opts.show_legend = legend;
            opts.cluster_groups = cluster_groups;
            let m = load(&file)?;
            let dot = emit_graph(&m, &opts).map_err(|e| Failure { code: INVALID, message: e.to_string() })?;
            emit(out, target.as_deref(), &dot)?;
            Ok(OK)
        }
        Command::Report { file, out: target } => {
            let m = load(&file)?;
            let tables = emit_tables(&m).map_err(|e| Failure { code: INVALID, message: e.to_string() })?;
            emit(out, target.as_deref(), &tables)?;
            Ok(OK)
        }
    }
}
