//! Client-side commands against a running service, plus offline replay.

use std::io::Write;
use std::path::PathBuf;

use adf_client::{Client, StreamMessage};
use adf_core::fusion::{Algorithm, FusionConfig, OracleLabel};
use adf_core::oracle::api::CreateSession;
use adf_core::oracle::{load_journal, OracleMode};
use adf_core::stream::{load_stream, StreamFormat};
use anyhow::Context;
use clap::{Args, Subcommand};
use futures::StreamExt;
use serde::Serialize;

use crate::invalid;

#[derive(Debug, Args)]
pub struct SessionArgs {
    /// Service root URL.
    #[arg(long, env = "ADF_URL", default_value = "http://127.0.0.1:8080", global = true)]
    url: String,
    #[command(subcommand)]
    command: SessionCommand,
}

#[derive(Debug, Subcommand)]
enum SessionCommand {
    /// List sessions.
    List,
    /// Create a session.
    Create {
        #[arg(long)]
        id: Option<String>,
        /// Number of sub-detectors.
        #[arg(long)]
        dimension: usize,
        /// human, ground-truth, noisy:<p_flip> or intermittent:<k>
        #[arg(long, default_value = "human")]
        mode: String,
        /// Fusion configuration file (JSON).
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        algorithm: Option<Algorithm>,
        /// Expire unanswered verdict requests after this many milliseconds.
        #[arg(long)]
        ttl_ms: Option<u64>,
        #[arg(long, default_value_t = 0)]
        noise_seed: u64,
    },
    /// Submit every event of a stream file, printing one result per line.
    Submit {
        session: String,
        #[arg(long)]
        stream: PathBuf,
    },
    /// Events waiting for a verdict.
    Pending { session: String },
    /// Answer a pending event with +1 (confirm) or -1 (reject).
    Feedback {
        session: String,
        event_id: String,
        #[arg(allow_hyphen_values = true)]
        label: i64,
    },
    /// Weights, recent history and pending summaries.
    State {
        session: String,
        #[arg(long)]
        last: Option<usize>,
    },
    /// Download the session journal (JSONL).
    Export {
        session: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Replay a journal offline and print the resulting state.
    Replay {
        journal: PathBuf,
        #[arg(long)]
        last: Option<usize>,
    },
    /// Follow live state changes.
    Watch { session: String },
}

fn print_line(line: &str) -> anyhow::Result<()> {
    let mut out = std::io::stdout().lock();
    writeln!(out, "{line}")?;
    Ok(out.flush()?)
}

fn print_json<T: Serialize>(value: &T) -> anyhow::Result<()> {
    print_line(&serde_json::to_string_pretty(value)?)
}

fn parse_mode(s: &str) -> anyhow::Result<OracleMode> {
    let mode = match s {
        "human" => OracleMode::Human,
        "ground-truth" | "ground_truth" => OracleMode::GroundTruth,
        _ => match s.split_once(':') {
            Some(("noisy", p)) => OracleMode::Noisy {
                p_flip: p.parse().map_err(|_| invalid(format!("bad p_flip in '{s}'")))?,
            },
            Some(("intermittent", k)) => OracleMode::Intermittent {
                k: k.parse().map_err(|_| invalid(format!("bad k in '{s}'")))?,
            },
            _ => return Err(invalid(format!("unknown oracle mode '{s}'"))),
        },
    };
    mode.validate()?;
    Ok(mode)
}

pub async fn dispatch(args: SessionArgs) -> anyhow::Result<()> {
    let client = Client::new(&args.url);
    match args.command {
        SessionCommand::List => print_json(&client.list_sessions().await?),
        SessionCommand::Create {
            id,
            dimension,
            mode,
            config,
            algorithm,
            ttl_ms,
            noise_seed,
        } => {
            let mut config: FusionConfig = match config {
                Some(path) => serde_json::from_str(&std::fs::read_to_string(&path)?)
                    .with_context(|| format!("parsing {}", path.display()))?,
                None => FusionConfig::default(),
            };
            if let Some(a) = algorithm {
                config.algorithm = a;
            }
            let req = CreateSession {
                session_id: id,
                config,
                oracle_mode: parse_mode(&mode)?,
                dimension,
                pending_ttl_ms: ttl_ms,
                noise_seed,
            };
            print_json(&client.create_session(&req).await?)
        }
        SessionCommand::Submit { session, stream } => {
            let events = load_stream(&stream, StreamFormat::from_path(&stream))?;
            for event in &events {
                let sub = client.submit_event(&session, event).await?;
                print_line(&serde_json::to_string(&sub)?)?;
            }
            Ok(())
        }
        SessionCommand::Pending { session } => print_json(&client.pending(&session).await?),
        SessionCommand::Feedback {
            session,
            event_id,
            label,
        } => {
            let label = OracleLabel::from_sign(label)?;
            print_json(&client.feedback(&session, &event_id, label).await?)
        }
        SessionCommand::State { session, last } => print_json(&client.state(&session, last).await?),
        SessionCommand::Export { session, out } => {
            std::fs::write(&out, client.journal(&session).await?)?;
            Ok(())
        }
        SessionCommand::Replay { journal, last } => print_json(&load_journal(&journal, None)?.snapshot(last)),
        SessionCommand::Watch { session } => {
            let mut updates = client.stream(&session).await?;
            while let Some(msg) = updates.next().await {
                let line = match msg? {
                    StreamMessage::Snapshot(s) => serde_json::json!({"snapshot": s}),
                    StreamMessage::Delta(d) => serde_json::json!({"delta": d}),
                    StreamMessage::Lagged(n) => serde_json::json!({"lagged": n}),
                };
                print_line(&line.to_string())?;
            }
            Ok(())
        }
    }
}
