use std::net::{IpAddr, SocketAddr};
use std::path::PathBuf;
use std::process::ExitCode;

use chainform_cli::commands::{self, RenderArgs, RunArgs, SweepArgs, EXIT_INPUT, EXIT_OK};
use chainform_core::SweepParam;
use clap::{Parser, Subcommand};
use tracing_subscriber::EnvFilter;

#[derive(Parser)]
#[command(name = "chainform", version, about = "Threshold-gated mass-spring chain simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario and write trajectory.csv, metrics.json and optional SVG frames.
    Run {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Write frames/frame_NNNNNN.svg and final.svg.
        #[arg(long)]
        svg: bool,
        /// Keep every k-th SVG frame (the final frame is always written).
        #[arg(long, value_name = "K")]
        frames_every: Option<u64>,
    },
    /// Repeat a scenario over values of k (Pa), l (µm) or theta.
    Sweep {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        #[arg(long)]
        param: Option<SweepParam>,
        #[arg(long, value_delimiter = ',', num_args = 1..)]
        values: Option<Vec<f64>>,
    },
    /// Serve the session protocol over HTTP and WebSocket.
    Serve {
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        bind: IpAddr,
        /// Directory that `create_session` resolves scenario names against.
        #[arg(long, default_value = "scenarios")]
        scenarios: PathBuf,
    },
    /// Render one frame of a trajectory CSV as SVG.
    Render {
        #[arg(long)]
        trajectory: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Frame index; defaults to the last frame.
        #[arg(long)]
        frame: Option<u64>,
    },
}

fn init_logging() {
    let filter = EnvFilter::try_from_env("CHAINFORM_LOG").unwrap_or_else(|_| EnvFilter::new("warn"));
    tracing_subscriber::fmt()
        .with_env_filter(filter)
        .with_writer(std::io::stderr)
        .init();
}

fn main() -> ExitCode {
    init_logging();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run {
            scenario,
            out,
            svg,
            frames_every,
        } => commands::run(&RunArgs {
            scenario,
            out,
            svg,
            frames_every,
        })
        .map(|_| ()),
        Command::Sweep {
            scenario,
            out,
            param,
            values,
        } => commands::sweep(&SweepArgs {
            scenario,
            out,
            param,
            values,
        })
        .map(|table| print!("{table}")),
        Command::Render { trajectory, out, frame } => commands::render(&RenderArgs { trajectory, out, frame }),
        Command::Serve { port, bind, scenarios } => {
            let runtime = match tokio::runtime::Runtime::new() {
                Ok(r) => r,
                Err(e) => {
                    eprintln!("error: {e}");
                    return ExitCode::from(EXIT_INPUT);
                }
            };
            let dir = scenarios.is_dir().then_some(scenarios);
            if let Err(e) = runtime.block_on(chainform_cli::server::serve(SocketAddr::new(bind, port), dir)) {
                eprintln!("error: {e:#}");
                return ExitCode::from(EXIT_INPUT);
            }
            Ok(())
        }
    };
    match result {
        Ok(()) => ExitCode::from(EXIT_OK),
        Err(f) => {
            eprintln!("error: {:#}", f.error);
            ExitCode::from(f.code)
        }
    }
}
