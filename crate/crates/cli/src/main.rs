//! `adf` — batch harness for decision fusion and a client for the oracle
//! service. Exits 0 on success, 2 when inputs fail validation, 1 otherwise.

mod batch;
mod session;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(name = "adf", version, about = "Online adaptive decision fusion")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a synthetic decision stream.
    Simulate(batch::SimulateArgs),
    /// Compare fusion algorithms over a stream.
    Run(batch::RunArgs),
    /// Ionosphere benchmark: sub-classifiers fused with frozen weights.
    Uci(batch::UciArgs),
    /// Region covariance features from an image manifest.
    Extract(batch::ExtractArgs),
    /// Start the oracle feedback service.
    Serve(ServeArgs),
    /// Talk to a running service.
    Session(session::SessionArgs),
}

#[derive(Debug, clap::Args)]
struct ServeArgs {
    #[arg(long, default_value = "127.0.0.1:8080")]
    addr: String,
    /// Persist session journals here and replay them on start.
    #[arg(long)]
    data_dir: Option<PathBuf>,
}

/// An input problem the user can fix; exits with status 2.
#[derive(Debug)]
pub struct Invalid(pub String);

impl std::fmt::Display for Invalid {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Invalid {}

pub fn invalid(msg: impl Into<String>) -> anyhow::Error {
    Invalid(msg.into()).into()
}

fn is_validation(err: &anyhow::Error) -> bool {
    use adf_core::{covariance::CovarianceError, eval::EvalError, fusion::FusionError, oracle::OracleError, stream::StreamError};
    err.chain().any(|e| {
        e.is::<Invalid>()
            || e.is::<FusionError>()
            || matches!(
                e.downcast_ref::<StreamError>(),
                Some(StreamError::InvalidConfig(_) | StreamError::Parse { .. } | StreamError::Dimension { .. } | StreamError::DuplicateEvent { .. })
            )
            || matches!(
                e.downcast_ref::<CovarianceError>(),
                Some(CovarianceError::Manifest { .. } | CovarianceError::Training(_) | CovarianceError::Undersized { .. } | CovarianceError::Unsupported(_))
            )
            || matches!(
                e.downcast_ref::<EvalError>(),
                Some(EvalError::Dataset(_) | EvalError::MissingTruth(_) | EvalError::Empty | EvalError::Fusion(_))
            )
            || matches!(e.downcast_ref::<OracleError>(), Some(OracleError::Validation(_) | OracleError::Journal { .. }))
            || e.downcast_ref::<adf_client::ClientError>().and_then(|c| c.status()).is_some_and(|s| (400..500).contains(&s))
            || e.is::<serde_json::Error>()
    })
}

async fn serve(args: ServeArgs) -> anyhow::Result<()> {
    let state = match &args.data_dir {
        Some(dir) => adf_service::AppState::with_data_dir(dir)?,
        None => adf_service::AppState::in_memory(),
    };
    let listener = tokio::net::TcpListener::bind(&args.addr).await?;
    eprintln!("listening on http://{}", listener.local_addr()?);
    adf_service::serve(listener, state, async {
        let _ = tokio::signal::ctrl_c().await;
    })
    .await?;
    Ok(())
}

#[tokio::main]
async fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_env_filter(tracing_subscriber::EnvFilter::from_default_env())
        .with_writer(std::io::stderr)
        .init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate(a) => batch::simulate(a),
        Command::Run(a) => batch::run(a),
        Command::Uci(a) => batch::uci(a),
        Command::Extract(a) => batch::extract(a),
        Command::Serve(a) => serve(a).await,
        Command::Session(a) => session::dispatch(a).await,
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        // Output piped into `head` and friends.
        Err(err)
            if err
                .chain()
                .any(|e| e.downcast_ref::<std::io::Error>().is_some_and(|io| io.kind() == std::io::ErrorKind::BrokenPipe)) =>
        {
            ExitCode::SUCCESS
        }
        Err(err) => {
            eprintln!("error: {err:#}");
            if is_validation(&err) {
                ExitCode::from(2)
            } else {
                ExitCode::FAILURE
            }
        }
    }
}
