//! The `ermcda` command line.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Parser, Subcommand, ValueEnum};
use ermcda_core::decision::Strategy;
use ermcda_core::fusion::Rule;
use ermcda_core::pipeline::{
    compare_rules, comparison_csv, comparison_text, load_scenario, report_csv, report_text, run_with, LoadError,
    RunOptions, Scenario, SCHEMA_VERSION,
};

use crate::store::SessionStore;

const SCHEMA_HINT: &str = "Scenario files are JSON documents with \"schema\": \"ermcda/1\"; \
`ermcda schema` prints the full JSON Schema.";

#[derive(Debug, Parser)]
#[command(name = "ermcda", version, about = "Evidential multi-criteria decision analysis", after_help = SCHEMA_HINT)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, ValueEnum)]
pub enum Format {
    #[default]
    Json,
    Csv,
    Text,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check a scenario file and list every problem found.
    Validate { file: PathBuf },
    /// Run the full pipeline and print the report.
    Run {
        file: PathBuf,
        #[arg(long)]
        rule: Option<Rule>,
        #[arg(long)]
        strategy: Option<Strategy>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t)]
        format: Format,
        /// Leave per-source artifacts and the audit log out of the report.
        #[arg(long)]
        lean: bool,
    },
    /// Run once per rule and compare the decisions.
    Compare {
        file: PathBuf,
        #[arg(long, value_delimiter = ',', required = true)]
        rules: Vec<Rule>,
        #[arg(long)]
        strategy: Option<Strategy>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t)]
        format: Format,
        #[arg(long)]
        lean: bool,
    },
    /// Serve the HTTP API.
    Serve {
        #[arg(long, default_value_t = 8080)]
        port: u16,
        /// Directory for saved scenarios.
        #[arg(long, default_value = "sessions")]
        dir: PathBuf,
    },
    /// Print the scenario JSON Schema.
    Schema,
}

enum Failure {
    Invalid(String),
    Runtime(String),
}

impl From<LoadError> for Failure {
    fn from(e: LoadError) -> Self {
        Failure::Invalid(e.to_string())
    }
}

fn load(path: &Path) -> Result<Scenario, Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| Failure::Runtime(format!("{}: {e}", path.display())))?;
    Ok(load_scenario(&text)?)
}

fn emit(text: String, out: Option<&Path>) -> Result<(), Failure> {
    match out {
        Some(p) => std::fs::write(p, text).map_err(|e| Failure::Runtime(format!("{}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn json<T: serde::Serialize>(v: &T) -> String {
    serde_json::to_string_pretty(v).expect("reports always serialize") + "\n"
}

fn execute(cmd: Command) -> Result<(), Failure> {
    match cmd {
        Command::Validate { file } => {
            let s = load(&file)?;
            println!("{}: valid {SCHEMA_VERSION} scenario `{}` ({} leaves)", file.display(), s.name(), s.leaf_ids().len());
            Ok(())
        }
        Command::Run { file, rule, strategy, out, format, lean } => {
            let s = load(&file)?;
            let r = run_with(&s, &RunOptions { rule, strategy, lean }).map_err(|e| Failure::Runtime(e.to_string()))?;
            let text = match format {
                Format::Json => json(&r),
                Format::Csv => report_csv(&r),
                Format::Text => report_text(&r),
            };
            emit(text, out.as_deref())
        }
        Command::Compare { file, rules, strategy, out, format, lean } => {
            let s = load(&file)?;
            let c = compare_rules(&s, &rules, &RunOptions { rule: None, strategy, lean })
                .map_err(|e| Failure::Runtime(e.to_string()))?;
            let text = match format {
                Format::Json => json(&c),
                Format::Csv => comparison_csv(&c),
                Format::Text => comparison_text(&c),
            };
            emit(text, out.as_deref())
        }
        Command::Serve { port, dir } => {
            let store = SessionStore::with_dir(&dir).map_err(|e| Failure::Runtime(e.to_string()))?;
            let rt = tokio::runtime::Runtime::new().map_err(|e| Failure::Runtime(e.to_string()))?;
            rt.block_on(crate::api::serve(Arc::new(store), port)).map_err(|e| Failure::Runtime(e.to_string()))
        }
        Command::Schema => {
            print!("{}", ermcda_core::pipeline::SCENARIO_SCHEMA);
            Ok(())
        }
    }
}

/// Exit codes: 0 success, 1 invalid scenario, 2 runtime or usage error.
pub fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = e.exit_code();
            let _ = e.print();
            if code != 0 {
                eprintln!("\n{SCHEMA_HINT}");
            }
            return ExitCode::from(code as u8);
        }
    };
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Invalid(msg)) => {
            eprintln!("invalid scenario:\n{msg}");
            ExitCode::from(1)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
