//! Batch front-end: one experiment per invocation.
//!
//! Exit codes: 0 when the experiment passes, 2 when it ran but a residual exceeded its
//! tolerance, 1 for usage, configuration and solver errors. Every flag can also be set
//! through an `HJMM_`-prefixed environment variable.

pub mod config;
pub mod output;
pub mod run;

use std::path::PathBuf;

use clap::{Parser, Subcommand};
use serde_json::json;

pub use config::{parse_config, read_config, ConfigError, ExperimentTag, Resolved, RunConfig, EXPERIMENTS};
pub use output::{fields_csv, format_number};
pub use run::{run, Outcome, RunReport};

pub const EXIT_PASS: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_FAIL: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "hjmm", version, about = "Minmax and viscosity solutions of u_t + H(t, x, u_x) = 0")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Option<Command>,
    /// Run the experiment described by this JSON file.
    #[arg(long, env = "HJMM_CONFIG", global = true)]
    pub config: Option<PathBuf>,
    /// Output directory for artifacts (overrides the config).
    #[arg(long, env = "HJMM_OUT", global = true)]
    pub out: Option<PathBuf>,
    /// Seed for every randomized audit (overrides the config).
    #[arg(long, env = "HJMM_SEED", global = true)]
    pub seed: Option<u64>,
    /// Worker threads; defaults to the number of cores.
    #[arg(long, env = "HJMM_THREADS", global = true)]
    pub threads: Option<usize>,
    /// Machine-readable output on stdout.
    #[arg(long, env = "HJMM_JSON", global = true)]
    pub json: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one experiment.
    Run { path: PathBuf },
    /// List the experiment tags.
    List,
}

fn list(json: bool) -> String {
    if json {
        let entries: Vec<_> = EXPERIMENTS
            .iter()
            .map(|(tag, about, fields)| json!({ "tag": tag, "description": about, "fields": fields }))
            .collect();
        format!("{}\n", serde_json::to_string_pretty(&entries).expect("static catalog"))
    } else {
        let mut s = String::new();
        for (tag, about, fields) in EXPERIMENTS {
            s.push_str(&format!("{tag:<11} {about}\n{:<11} fields: {}\n", "", fields.join(", ")));
        }
        s
    }
}

/// Parses `args` (including the program name) and runs; returns the exit code.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => EXIT_PASS,
                _ => EXIT_ERROR,
            };
            let _ = e.print();
            return code;
        }
    };
    let path = match (&cli.command, &cli.config) {
        (Some(Command::Run { path }), _) => path.clone(),
        (Some(Command::List), _) | (None, None) => {
            print!("{}", list(cli.json));
            return EXIT_PASS;
        }
        (None, Some(p)) => p.clone(),
    };
    if let Some(n) = cli.threads {
        if n == 0 {
            eprintln!("error: usage: --threads must be positive");
            return EXIT_ERROR;
        }
        // a pool already built by an embedding process is kept
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    let resolved = match read_config(&path).and_then(|c| c.resolve(cli.out.clone(), cli.seed)) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_ERROR;
        }
    };
    match run(&resolved) {
        Ok(out) => {
            if cli.json {
                println!("{}", serde_json::to_string_pretty(&out.report).expect("serializable report"));
            } else {
                println!(
                    "{} [{}]: {} -> {}, {}",
                    out.report.experiment,
                    out.report.tag,
                    if out.report.pass { "PASS" } else { "FAIL" },
                    out.field_path.display(),
                    out.report_path.display()
                );
            }
            if out.report.pass {
                EXIT_PASS
            } else {
                eprintln!("error: experiment failed: residual over tolerance (see {})", out.report_path.display());
                EXIT_FAIL
            }
        }
        Err(e) => {
            eprintln!("error: solver: {e}");
            EXIT_ERROR
        }
    }
}
