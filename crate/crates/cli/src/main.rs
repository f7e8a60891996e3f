use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use hidaprop_cli::{execute, Command, RunConfig};

#[derive(Parser)]
#[command(name = "hidaprop", version, about = "Path-integral propagators for coupled oscillators in a bath")]
struct Cli {
    #[arg(value_enum)]
    command: Command,
    #[arg(long)]
    config: PathBuf,
    /// Summary output path (overrides `out` in the config); state files are
    /// written next to it.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn init_threads() -> Result<(), String> {
    let Ok(v) = std::env::var("HIDAPROP_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| format!("HIDAPROP_THREADS must be a positive integer, got '{v}'"))?;
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| e.to_string())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if let Err(e) = init_threads() {
        eprintln!("config error: {e}");
        return ExitCode::from(1);
    }
    let result = RunConfig::load(cli.command, &cli.config, cli.out).and_then(|cfg| execute(&cfg));
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("hidaprop: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
