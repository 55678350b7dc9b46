use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};

use offload_kernel::harness::{diff_logs, gen_dom, oracle_check, replay};
use offload_kernel::Config;

#[derive(Parser)]
#[command(name = "offload", version, about = "Offloading kernel tools")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Replay a trace and write its decision log.
    Replay {
        #[arg(long)]
        trace: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        /// Compare the produced log against this golden log.
        #[arg(long)]
        expect: Option<PathBuf>,
    },
    /// Host sessions over WebSocket.
    Serve {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: std::net::IpAddr,
    },
    /// Print a random document snapshot as JSON.
    GenDom {
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value_t = 50, value_parser = clap::value_parser!(u64).range(1..))]
        max_nodes: u64,
    },
    /// Compare indexed queries against brute-force scans on random documents.
    OracleCheck {
        #[arg(long, default_value_t = 1000)]
        count: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Compare two decision logs byte for byte.
    DiffLog { a: PathBuf, b: PathBuf },
}

fn load_config(path: Option<&Path>) -> Result<Config> {
    match path {
        None => Ok(Config::default()),
        Some(p) => {
            let text = std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            Config::from_toml_str(&text).with_context(|| format!("in {}", p.display()))
        }
    }
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Replay {
            trace,
            config,
            out,
            expect,
        } => {
            let config = load_config(config.as_deref())?;
            let log = replay(&read(&trace)?, &config).with_context(|| format!("in {}", trace.display()))?;
            let text = log.to_jsonl();
            std::fs::write(&out, &text).with_context(|| format!("writing {}", out.display()))?;
            eprintln!("{} updates written to {}", log.entries.len(), out.display());
            if let Some(golden) = expect {
                if let Some(d) = diff_logs(&read(&golden)?, &text) {
                    eprintln!("{d}");
                    return Ok(false);
                }
                eprintln!("matches {}", golden.display());
            }
            Ok(true)
        }
        Command::Serve { config, port, host } => {
            let config = load_config(config.as_deref())?;
            tracing_subscriber::fmt()
                .with_env_filter(
                    tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| "info".into()),
                )
                .init();
            let rt = tokio::runtime::Runtime::new()?;
            rt.block_on(offload_server::serve(config, SocketAddr::new(host, port)))?;
            Ok(true)
        }
        Command::GenDom { seed, max_nodes } => {
            let raw = gen_dom(seed, max_nodes as usize);
            println!("{}", serde_json::to_string_pretty(&raw)?);
            Ok(true)
        }
        Command::OracleCheck { count, seed, config } => {
            let config = load_config(config.as_deref())?;
            let report = oracle_check(count, seed, config.selection.rubberband_threshold);
            println!("{report}");
            Ok(report.passed())
        }
        Command::DiffLog { a, b } => match diff_logs(&read(&a)?, &read(&b)?) {
            None => {
                println!("identical");
                Ok(true)
            }
            Some(d) => {
                println!("{d}");
                Ok(false)
            }
        },
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
