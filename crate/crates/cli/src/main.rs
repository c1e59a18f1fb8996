use std::io::IsTerminal;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crashforest_cli::{
    cmd_importance, cmd_model_dump, cmd_run, cmd_synth, cmd_tree_dump, load_config, Emit,
};

/// Injury-severity classification toolkit: synthetic data generation,
/// one-against-all decision-tree and neural-network experiments, and
/// variable-importance reports.
#[derive(Parser)]
#[command(name = "crashforest", version, about)]
struct Cli {
    /// Config file (line-oriented `section.key = value`); defaults apply
    /// when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Override every seed in the config (split, training, generator).
    #[arg(long, global = true)]
    seed: Option<u64>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a planted-rule synthetic dataset (CSV + `.truth` sidecar).
    Synth {
        /// Output CSV path.
        out: PathBuf,
    },
    /// Run the five-class one-against-all experiment on a CSV.
    Run {
        /// Input CSV.
        data: PathBuf,
        /// Output stem; writes `<out>.txt` and `<out>.records`.
        out: PathBuf,
        /// Which format to print on stdout.
        #[arg(long, default_value = "text")]
        emit: Emit,
    },
    /// Rank input variables by importance for one class.
    Importance {
        /// Input CSV.
        data: PathBuf,
        /// Severity class token (none, possible, nonincap, incap, fatal).
        class: String,
    },
    /// Train and print the pruned decision tree for one class.
    TreeDump {
        data: PathBuf,
        class: String,
    },
    /// Train and print the neural network weights for one class.
    ModelDump {
        data: PathBuf,
        class: String,
    },
}

/// ANSI bold for the first line of terminal output; disabled when piped or
/// when CRASHFOREST_NO_COLOR is set, keeping piped bytes identical across
/// environments.
fn stylize(payload: &str) -> String {
    let colored = std::io::stdout().is_terminal()
        && std::env::var_os("CRASHFOREST_NO_COLOR").is_none();
    if !colored {
        return payload.to_string();
    }
    match payload.split_once('\n') {
        Some((first, rest)) => format!("\x1b[1m{first}\x1b[0m\n{rest}"),
        None => format!("\x1b[1m{payload}\x1b[0m"),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let config = match load_config(cli.config.as_deref(), cli.seed) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    // every run logs the resolved configuration (stderr, so stdout stays a
    // pure function of config and input bytes)
    eprint!("{}", config.render());

    let result = match &cli.command {
        Command::Synth { out } => cmd_synth(&config, out).map(|()| String::new()),
        Command::Run { data, out, emit } => cmd_run(&config, data, out, *emit),
        Command::Importance { data, class } => cmd_importance(&config, data, class),
        Command::TreeDump { data, class } => cmd_tree_dump(&config, data, class),
        Command::ModelDump { data, class } => cmd_model_dump(&config, data, class),
    };
    match result {
        Ok(payload) => {
            if !payload.is_empty() {
                print!("{}", stylize(&payload));
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
