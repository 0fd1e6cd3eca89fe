use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;

use assay_core::model::AssessmentId;
use assay_server::api;
use assay_server::config::Config;
use clap::{Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(name = "assay", version, about = "Assessment authoring service")]
struct Cli {
    /// TOML config file. Environment variables override it.
    #[arg(long, global = true, env = "ASSAY_CONFIG")]
    config: Option<PathBuf>,
    /// Journal file; overrides config and ASSAY_JOURNAL.
    #[arg(long, global = true)]
    journal: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the HTTP service.
    Serve {
        /// Listen address; port 0 picks a free port.
        #[arg(long)]
        bind: Option<String>,
    },
    /// Write one assessment to a file or stdout.
    Export {
        #[arg(long)]
        assessment: String,
        #[arg(long, value_enum)]
        format: Format,
        #[arg(long)]
        with_keys: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the HTTP route manifest.
    Routes,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Pdf,
    Html,
    Json,
}

fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_env_filter(tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| "info".into()))
        .with_writer(std::io::stderr)
        .init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("assay: {e}");
            ExitCode::FAILURE
        }
    }
}

fn load(cli: &Cli) -> Result<Config, String> {
    let mut config = Config::load(cli.config.as_deref(), |k| std::env::var(k).ok())?;
    if let Some(j) = &cli.journal {
        config.journal = j.clone();
    }
    Ok(config)
}

fn run(cli: Cli) -> Result<(), String> {
    match &cli.command {
        Command::Serve { bind } => {
            let mut config = load(&cli)?;
            if let Some(b) = bind {
                config.bind = b.clone();
            }
            let rt = tokio::runtime::Runtime::new().map_err(|e| e.to_string())?;
            rt.block_on(serve(config))
        }
        Command::Export { assessment, format, with_keys, out } => {
            let config = load(&cli)?;
            let bytes = export(&config, &AssessmentId::from(assessment.as_str()), *format, *with_keys)?;
            match out {
                Some(path) => std::fs::write(path, bytes).map_err(|e| format!("{}: {e}", path.display())),
                None => {
                    use std::io::Write;
                    std::io::stdout().write_all(&bytes).map_err(|e| e.to_string())
                }
            }
        }
        Command::Routes => {
            print!("{}", api::manifest_json());
            Ok(())
        }
    }
}

async fn serve(config: Config) -> Result<(), String> {
    let engine = Arc::new(config.open_engine()?);
    let listener = tokio::net::TcpListener::bind(&config.bind).await.map_err(|e| format!("{}: {e}", config.bind))?;
    let addr = listener.local_addr().map_err(|e| e.to_string())?;
    tracing::info!(journal = %config.journal.display(), provider = ?config.llm.provider, "started");
    println!("listening on {addr}");
    axum::serve(listener, api::router(engine))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
        .map_err(|e| e.to_string())
}

/// Exports directly from the journal, acting as the assessment's owner.
fn export(config: &Config, id: &AssessmentId, format: Format, keys: bool) -> Result<Vec<u8>, String> {
    let engine = config.open_engine()?;
    let owner = engine
        .read(|s| {
            let entry = s.assessments.get(id)?;
            s.courses.get(&entry.assessment.course_id).map(|c| c.owner.clone())
        })
        .ok_or_else(|| format!("no assessment {id}"))?;
    let out = match format {
        Format::Json => engine.export_json(&owner, id).map(String::into_bytes),
        Format::Pdf => engine.export_pdf(&owner, id, keys),
        Format::Html => engine.export_html(&owner, id, keys).map(String::into_bytes),
    };
    out.map_err(|e| e.to_string())
}
