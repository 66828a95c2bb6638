use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::Context;
use clap::{Parser, Subcommand};
use innerself::config::Config;
use innerself::engine::Engine;
use innerself::export::export_session;
use innerself::simulate::{parse_script, run_script, simulation_engine};
use innerself::store::StoreError;
use innerself::wav;
use innerself_core::voice::EnrollmentSample;

#[derive(Parser)]
#[command(name = "innerself", version, about = "Self-talk companion speaking in the user's own voice")]
struct Cli {
    /// TOML config file; INNERSELF_* environment variables override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the HTTP/WebSocket API.
    Serve {
        /// Overrides the configured bind address.
        #[arg(long)]
        bind: Option<String>,
    },
    /// Enroll voice samples for a session, creating it if needed.
    Enroll {
        #[arg(long)]
        session: String,
        /// Name used when the session has to be created.
        #[arg(long)]
        user: Option<String>,
        /// Sample as `path.wav=transcript`; repeat for more samples.
        #[arg(long = "sample", required = true, value_name = "WAV=TRANSCRIPT")]
        samples: Vec<String>,
    },
    /// Run a script offline with reference adapters and print one JSON line
    /// per turn. Exits 0 when every turn passes its constraints, 1 when one
    /// does not, 2 when the script does not parse.
    Simulate {
        script: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Write the JSON lines here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print a session's export document.
    Export {
        session: String,
        #[arg(long)]
        include_audio: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn output(path: Option<&PathBuf>) -> anyhow::Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("cannot create {}", p.display()))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn run(cli: Cli) -> anyhow::Result<ExitCode> {
    let mut config = Config::load(cli.config.as_deref())?;
    match cli.command {
        Command::Serve { bind } => {
            if let Some(b) = bind {
                config.bind = b;
            }
            let engine = Arc::new(Engine::from_config(&config)?);
            let rt = tokio::runtime::Runtime::new()?;
            rt.block_on(innerself::server::serve(engine, &config.bind))?;
        }
        Command::Enroll { session, user, samples } => {
            let engine = Engine::from_config(&config)?;
            let mut s = match engine.open_session(&session) {
                Ok(s) => s,
                Err(StoreError::UnknownSession(_)) => {
                    let name = user.context("session does not exist; pass --user to create it")?;
                    engine.create_session(&name, Some(session.clone()))?
                }
                Err(e) => return Err(e.into()),
            };
            let mut parsed = Vec::new();
            for spec in &samples {
                let (path, text) = spec
                    .split_once('=')
                    .with_context(|| format!("`{spec}` is not WAV=TRANSCRIPT"))?;
                parsed.push(EnrollmentSample::new(wav::read_wav(path.as_ref())?, text.trim()));
            }
            let outcome = engine.enroll_voice(&mut s, parsed)?;
            println!("{}", serde_json::to_string_pretty(&outcome)?);
        }
        Command::Simulate { script, seed, out } => {
            let text = std::fs::read_to_string(&script)
                .with_context(|| format!("cannot read {}", script.display()))?;
            let base = script.parent().map(PathBuf::from).unwrap_or_default();
            let parsed = match parse_script(&text, &base) {
                Ok(p) => p,
                Err(e) => {
                    eprintln!("{}: {e}", script.display());
                    return Ok(ExitCode::from(2));
                }
            };
            let engine = simulation_engine(&config)?;
            let mut w = output(out.as_ref())?;
            let summary = run_script(&engine, &parsed, seed, &mut w)?;
            drop(w);
            eprintln!(
                "{} turns, {} failed, session {}",
                summary.turns, summary.failed_turns, summary.session_id
            );
            return Ok(if summary.all_pass { ExitCode::SUCCESS } else { ExitCode::from(1) });
        }
        Command::Export { session, include_audio, out } => {
            let store = innerself::store::FsStore::open(&config.data_dir)?;
            let doc = export_session(&store, &session, include_audio)?;
            let mut w = output(out.as_ref())?;
            serde_json::to_writer_pretty(&mut w, &doc)?;
            writeln!(w)?;
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_env_filter(tracing_subscriber::EnvFilter::from_env("INNERSELF_LOG"))
        .with_writer(io::stderr)
        .init();
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
