use clap::{Parser, Subcommand, ValueEnum};
use std::net::SocketAddr;
use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;

use intentcell_core::episode::Episode;
use intentcell_core::Config;
use intentcell_gateway::{GatewayConfig, SessionManager};
use intentcell_harness::bundle::{self, GenKind};
use intentcell_harness::{client_for, evaluate_dir, replay_with};

#[derive(Parser)]
#[command(name = "intentcell", version, about = "Voice and pointing driven manipulation workcell")]
struct Cli {
    /// TOML configuration; defaults apply to anything left out.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Replay one episode. Exits 1 if any hard verdict was produced.
    Replay {
        episode: PathBuf,
        /// Print the full outcome as JSON.
        #[arg(long)]
        json: bool,
        /// Write the executed trajectory as JSON lines.
        #[arg(long)]
        trajectory: Option<PathBuf>,
    },
    /// Replay every *.jsonl episode in a directory and report metrics.
    Evaluate {
        dir: PathBuf,
        #[arg(long)]
        json: bool,
        /// Also write the JSON report here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write synthetic episodes.
    Generate {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 100)]
        n: usize,
        #[arg(long, default_value_t = 2.0)]
        noise_deg: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value_t = Kind::Clutter)]
        kind: Kind,
    },
    /// Serve the WebSocket gateway.
    Serve {
        #[arg(long, default_value = "127.0.0.1:8765")]
        addr: SocketAddr,
    },
    /// Print the effective configuration as TOML.
    Config,
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    Clutter,
    Mixed,
    /// The shipped example set.
    Bundle,
}

fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_env_filter(tracing_subscriber::EnvFilter::from_default_env())
        .with_writer(std::io::stderr)
        .init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

type BoxError = Box<dyn std::error::Error>;

fn run(cli: Cli) -> Result<ExitCode, BoxError> {
    let config = Arc::new(match &cli.config {
        Some(p) => Config::load(p)?,
        None => Config::default(),
    });
    match cli.command {
        Cmd::Replay {
            episode,
            json,
            trajectory,
        } => {
            let ep = Episode::load(&episode)?;
            let out = replay_with(&ep, &config, client_for(&config)?);
            if json {
                println!("{}", serde_json::to_string_pretty(&out)?);
            } else {
                println!("episode {} ({})", out.name, out.task);
                for i in &out.intentions {
                    println!("intention {}", i.summary());
                }
                for p in &out.plans {
                    println!("plan ({:?}):", p.provenance());
                    for line in p.to_plan_text().lines() {
                        println!("  {line}");
                    }
                }
                for v in &out.verdicts {
                    let step = v.step.map(|s| format!(" step {s}")).unwrap_or_default();
                    let mark = if v.hard { "FAIL" } else { "ok" };
                    println!("{mark:<4} {:?} {}{step}: {}", v.stage, v.code, v.message);
                }
            }
            if let Some(path) = trajectory {
                out.final_state.write_trajectory(std::fs::File::create(path)?)?;
            }
            Ok(if out.failed() { ExitCode::from(1) } else { ExitCode::SUCCESS })
        }
        Cmd::Evaluate { dir, json, out } => {
            let report = evaluate_dir(&dir, &config, client_for(&config)?)?;
            if let Some(path) = out {
                std::fs::write(path, report.to_json())?;
            }
            if json {
                println!("{}", report.to_json());
            } else {
                print!("{}", report.table());
            }
            Ok(ExitCode::SUCCESS)
        }
        Cmd::Generate {
            out,
            n,
            noise_deg,
            seed,
            kind,
        } => {
            if !(noise_deg >= 0.0 && noise_deg.is_finite()) {
                return Err(format!("--noise-deg must be a finite non-negative number, got {noise_deg}").into());
            }
            std::fs::create_dir_all(&out)?;
            let written = match kind {
                Kind::Bundle => bundle::write_bundle(&out, &config)?.len(),
                Kind::Clutter | Kind::Mixed => {
                    let k = if matches!(kind, Kind::Clutter) { GenKind::Clutter } else { GenKind::Mixed };
                    let eps = bundle::generate(k, n, noise_deg, seed, &config);
                    for r in &eps {
                        let path = out.join(format!("{}.jsonl", r.episode.header.name));
                        std::fs::write(path, r.episode.to_jsonl())?;
                    }
                    eps.len()
                }
            };
            println!("wrote {written} episodes to {}", out.display());
            Ok(ExitCode::SUCCESS)
        }
        Cmd::Serve { addr } => {
            let mut manager = SessionManager::new(config.clone(), GatewayConfig::default());
            if let Some(c) = client_for(&config)? {
                manager = manager.with_client(c);
            }
            let rt = tokio::runtime::Builder::new_multi_thread().enable_all().build()?;
            rt.block_on(async move {
                let listener = intentcell_gateway::server::bind(addr).await?;
                eprintln!("listening on ws://{}/ws", listener.local_addr()?);
                intentcell_gateway::server::serve(listener, Arc::new(manager)).await
            })?;
            Ok(ExitCode::SUCCESS)
        }
        Cmd::Config => {
            print!("{}", config.to_toml_string()?);
            Ok(ExitCode::SUCCESS)
        }
    }
}
