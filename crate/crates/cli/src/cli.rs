//! Argument parsing and the subcommands.

use std::ffi::OsString;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
#[cfg(feature = "serve")]
use std::sync::Arc;

use agentfilter_core::analysis::analyze;
use agentfilter_core::config::RunConfig;
use agentfilter_core::corpus::{
    load_messages, load_responses, write_messages, write_responses, SurveySet, MESSAGES_FILE,
    RESPONSES_FILE,
};
use agentfilter_core::filters::{compare_regimes, train_general, write_rows_csv, EvalReport};
use agentfilter_core::synthpop::generate;
use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::json;
use thiserror::Error;

#[cfg(feature = "serve")]
use crate::service::{router, AppState};
#[cfg(feature = "serve")]
use crate::session::LiveContext;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;

pub const PROFILES_FILE: &str = "profiles.json";

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Data(#[from] agentfilter_core::Error),
    #[error("cannot write {path}: {source}")]
    Write {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Data(_) | CliError::Write { .. } => EXIT_DATA,
        }
    }
}

type CliResult<T> = Result<T, CliError>;

#[derive(Debug, Parser)]
#[command(
    name = "agentfilter",
    version,
    about = "User-adaptive harassment filtering experiments and live service"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Flags shared by every subcommand. They override `--config`.
#[derive(Debug, Args)]
struct Common {
    /// key = value file; unspecified keys keep their defaults
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// significance level of the statistical tests
    #[arg(long)]
    alpha: Option<f64>,
    /// learner of the general filter and of the live agent
    #[arg(long, value_parser = ["nb", "svm", "rf"])]
    learner: Option<String>,
    /// significance rule of the proportion intervals
    #[arg(long = "ci-rule", value_parser = ["p_diff", "conventional"])]
    ci_rule: Option<String>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Validate a data directory and summarize it
    Ingest {
        #[arg(long, value_name = "DIR")]
        data: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Corpus reports and the statistical battery as JSON
    Analyze {
        #[arg(long, value_name = "DIR")]
        data: PathBuf,
        #[arg(long, value_name = "FILE")]
        out: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Train the population-wide filter and save it as JSON
    TrainGeneral {
        #[arg(long, value_name = "DIR")]
        data: PathBuf,
        #[arg(long, value_name = "FILE")]
        out: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Compare general, user-adapted and majority filters per user
    Evaluate {
        #[arg(long, value_name = "DIR")]
        data: PathBuf,
        #[arg(long, value_name = "FILE")]
        out: Option<PathBuf>,
        /// per-user accuracy table
        #[arg(long, value_name = "FILE")]
        csv: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Generate a synthetic survey population
    Simulate {
        #[arg(long, value_name = "DIR")]
        out: PathBuf,
        #[arg(long)]
        users: Option<usize>,
        #[arg(long)]
        messages: Option<usize>,
        #[arg(long)]
        items: Option<usize>,
        #[arg(long)]
        raters: Option<usize>,
        #[command(flatten)]
        common: Common,
    },
    /// Run the live adaptation service
    #[cfg(feature = "serve")]
    Serve {
        /// data directory; a default synthetic population when absent
        #[arg(long, value_name = "DIR")]
        data: Option<PathBuf>,
        #[arg(long)]
        port: Option<u16>,
        #[arg(long, default_value = "127.0.0.1")]
        host: String,
        /// append-only response log
        #[arg(long, value_name = "FILE")]
        log: Option<PathBuf>,
        #[arg(long)]
        warmup: Option<usize>,
        #[command(flatten)]
        common: Common,
    },
}

fn usage(e: impl std::fmt::Display) -> CliError {
    CliError::Usage(e.to_string())
}

fn resolve(common: &Common, extra: &[(&str, Option<String>)]) -> CliResult<RunConfig> {
    let mut cfg = match &common.config {
        Some(path) => RunConfig::load(path).map_err(usage)?,
        None => RunConfig::default(),
    };
    let flags = [
        ("seed", common.seed.map(|v| v.to_string())),
        ("stats.alpha", common.alpha.map(|v| v.to_string())),
        ("learner", common.learner.clone()),
        ("stats.ci_rule", common.ci_rule.clone()),
    ];
    for (key, value) in flags.iter().chain(extra) {
        if let Some(v) = value {
            cfg.set(key, v).map_err(usage)?;
        }
    }
    cfg.validate().map_err(usage)?;
    Ok(cfg)
}

/// Loads `messages.jsonl` and `responses.csv` under the configured design.
pub fn load_data(dir: &Path, cfg: &RunConfig) -> agentfilter_core::Result<(SurveySet, Vec<u64>)> {
    let loaded = load_messages(dir.join(MESSAGES_FILE))?;
    let responses = load_responses(dir.join(RESPONSES_FILE))?;
    let survey = SurveySet::with_design(
        loaded.messages,
        responses,
        cfg.synth.raters_per_message,
        cfg.synth.items_per_user,
    )?;
    Ok((survey, loaded.skipped_lines))
}

fn create(path: &Path) -> CliResult<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|source| CliError::Write {
            path: path.to_path_buf(),
            source,
        })
}

fn write_text(path: Option<&Path>, text: &str, stdout: &mut dyn Write) -> CliResult<()> {
    let (result, shown) = match path {
        Some(p) => (fs::write(p, text), p.to_path_buf()),
        None => (stdout.write_all(text.as_bytes()), PathBuf::from("<stdout>")),
    };
    result.map_err(|source| CliError::Write {
        path: shown,
        source,
    })
}

#[derive(Serialize)]
struct EvaluateOutput<'a> {
    run_config: &'a RunConfig,
    #[serde(flatten)]
    report: &'a EvalReport,
}

fn json_line(v: &serde_json::Value) -> String {
    let mut s = serde_json::to_string_pretty(v).unwrap_or_default();
    s.push('\n');
    s
}

fn execute(cli: Cli, stdout: &mut dyn Write, stderr: &mut dyn Write) -> CliResult<()> {
    match cli.command {
        Command::Ingest { data, common } => {
            let cfg = resolve(&common, &[])?;
            let (survey, skipped) = load_data(&data, &cfg)?;
            let non_codable = survey
                .messages()
                .iter()
                .filter(|m| m.category().is_none())
                .count();
            for line in &skipped {
                let _ = writeln!(
                    stderr,
                    "{}:{line}: skipped malformed record",
                    data.join(MESSAGES_FILE).display()
                );
            }
            let summary = json!({
                "messages": survey.messages().len(),
                "skipped_lines": skipped,
                "non_codable": non_codable,
                "responses": survey.responses().len(),
                "users": survey.user_count(),
                "raters_per_message": survey.raters_per_message,
                "items_per_user": survey.items_per_user,
                "deviations": survey.deviations(),
            });
            write_text(None, &json_line(&summary), stdout)
        }
        Command::Analyze { data, out, common } => {
            let cfg = resolve(&common, &[])?;
            let (survey, _) = load_data(&data, &cfg)?;
            let mut text = analyze(&survey, &cfg)?.to_json()?;
            text.push('\n');
            write_text(out.as_deref(), &text, stdout)
        }
        Command::TrainGeneral { data, out, common } => {
            let cfg = resolve(&common, &[])?;
            let (survey, _) = load_data(&data, &cfg)?;
            let filter =
                train_general(&survey, cfg.learner, cfg.seed, &cfg.features, &cfg.learners)?;
            write_text(Some(&out), &filter.to_json()?, stdout)?;
            let summary = json!({
                "out": out.display().to_string(),
                "learner": cfg.learner,
                "training_messages": filter.training_messages,
                "vocabulary": filter.vocabulary.len(),
                "constant": filter.classifier.is_constant(),
            });
            write_text(None, &json_line(&summary), stdout)
        }
        Command::Evaluate {
            data,
            out,
            csv,
            common,
        } => {
            let cfg = resolve(&common, &[])?;
            let (survey, _) = load_data(&data, &cfg)?;
            let report = compare_regimes(&survey, &cfg.eval_config())?;
            for e in &report.excluded {
                let _ = writeln!(stderr, "excluded user {}: {}", e.user_id, e.reason);
            }
            let output = EvaluateOutput {
                run_config: &cfg,
                report: &report,
            };
            let mut text =
                serde_json::to_string_pretty(&output).map_err(agentfilter_core::Error::from)?;
            text.push('\n');
            if let Some(path) = &csv {
                let mut w = create(path)?;
                write_rows_csv(&report, &mut w)?;
                w.flush().map_err(|source| CliError::Write {
                    path: path.clone(),
                    source,
                })?;
            }
            write_text(out.as_deref(), &text, stdout)
        }
        Command::Simulate {
            out,
            users,
            messages,
            items,
            raters,
            common,
        } => {
            let n = |v: Option<usize>| v.map(|x| x.to_string());
            let cfg = resolve(
                &common,
                &[
                    ("synth.users", n(users)),
                    ("synth.messages", n(messages)),
                    ("synth.items_per_user", n(items)),
                    ("synth.raters_per_message", n(raters)),
                ],
            )?;
            let generated = generate(&cfg.synth)?;
            fs::create_dir_all(&out).map_err(|source| CliError::Write {
                path: out.clone(),
                source,
            })?;
            let io = |path: PathBuf| move |source| CliError::Write { path, source };
            let mpath = out.join(MESSAGES_FILE);
            let mut w = create(&mpath)?;
            write_messages(&mut w, generated.survey.messages())
                .and_then(|_| w.flush())
                .map_err(io(mpath))?;
            let rpath = out.join(RESPONSES_FILE);
            let mut w = create(&rpath)?;
            write_responses(&mut w, generated.survey.responses())
                .and_then(|_| w.flush())
                .map_err(io(rpath))?;
            let mut truth = serde_json::to_string_pretty(&generated.truth)
                .map_err(agentfilter_core::Error::from)?;
            truth.push('\n');
            write_text(Some(&out.join(PROFILES_FILE)), &truth, stdout)?;
            if let Some(note) = &generated.truth.assignment.note {
                let _ = writeln!(stderr, "assignment: {note}");
            }
            let summary = json!({
                "out": out.display().to_string(),
                "users": generated.truth.users.len(),
                "messages": generated.survey.messages().len(),
                "responses": generated.survey.responses().len(),
                "assignment": generated.truth.assignment,
            });
            write_text(None, &json_line(&summary), stdout)
        }
        #[cfg(feature = "serve")]
        Command::Serve {
            data,
            port,
            host,
            log,
            warmup,
            common,
        } => {
            let cfg = resolve(
                &common,
                &[
                    ("serve.port", port.map(|p| p.to_string())),
                    ("serve.warmup", warmup.map(|w| w.to_string())),
                    ("serve.log", log.map(|p| p.display().to_string())),
                ],
            )?;
            let survey = match &data {
                Some(dir) => load_data(dir, &cfg)?.0,
                None => generate(&cfg.synth)?.survey,
            };
            let addr = format!("{host}:{}", cfg.serve.port);
            let state = Arc::new(AppState::new(LiveContext::new(survey, cfg))?);
            let runtime = tokio::runtime::Runtime::new()
                .map_err(|e| usage(format!("cannot start runtime: {e}")))?;
            runtime.block_on(async {
                let listener = tokio::net::TcpListener::bind(&addr)
                    .await
                    .map_err(|e| usage(format!("cannot bind {addr}: {e}")))?;
                let _ = writeln!(stderr, "listening on http://{addr}");
                axum::serve(listener, router(state))
                    .with_graceful_shutdown(async {
                        let _ = tokio::signal::ctrl_c().await;
                    })
                    .await
                    .map_err(|e| usage(format!("server: {e}")))
            })
        }
    }
}

/// Runs the command line and returns the process exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = stdout.write_all(text.as_bytes());
                    EXIT_OK
                }
                _ => {
                    let _ = stderr.write_all(text.as_bytes());
                    EXIT_USAGE
                }
            };
        }
    };
    match execute(cli, stdout, stderr) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            e.exit_code()
        }
    }
}
