use clap::{Args, Parser, Subcommand, ValueEnum};
use orthoasym::commands::{cmd_recurrence, cmd_verify, cmd_zeros, exit, exit_code, RunOptions, Source};
use orthoasym::exec::{set_jobs, Execution};
use orthoasym::measure::Precision;
use orthoasym::verify::bundled_names;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "orthoasym", version, about = "Relative asymptotics experiments for orthogonal polynomials")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Recurrence table for a measure
    Recurrence {
        #[arg(long)]
        config: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Ratio ladders and zero counts; exits 1 if any check fails
    Verify {
        #[command(flatten)]
        source: SourceArgs,
        #[command(flatten)]
        common: Common,
    },
    /// Zero counts near the attraction points
    Zeros {
        #[command(flatten)]
        source: SourceArgs,
        #[command(flatten)]
        common: Common,
    },
    /// Names of the bundled scenarios
    List,
}

#[derive(Args)]
#[group(required = true, multiple = false)]
struct SourceArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    /// Name of a bundled scenario
    #[arg(long)]
    scenario: Option<String>,
}

#[derive(Args)]
struct Common {
    #[arg(long, default_value = "out")]
    out: PathBuf,
    #[arg(long, value_enum, default_value_t = PrecisionArg::Double)]
    precision: PrecisionArg,
    /// Worker threads; 1 runs sequentially
    #[arg(long)]
    jobs: Option<usize>,
}

#[derive(Clone, Copy, ValueEnum)]
enum PrecisionArg {
    Double,
    Extended,
}

impl Common {
    fn options(&self) -> RunOptions {
        let mode = match self.jobs {
            Some(1) => Execution::Sequential,
            Some(j) => {
                set_jobs(j);
                Execution::Parallel
            }
            None => Execution::Parallel,
        };
        RunOptions {
            out: self.out.clone(),
            precision: match self.precision {
                PrecisionArg::Double => Precision::Double,
                PrecisionArg::Extended => Precision::Extended,
            },
            mode,
        }
    }
}

impl SourceArgs {
    fn source(&self) -> Source {
        match (&self.config, &self.scenario) {
            (Some(p), _) => Source::File(p.clone()),
            (None, Some(s)) => Source::Bundled(s.clone()),
            (None, None) => unreachable!("clap requires one of --config or --scenario"),
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { exit::CONFIG as u8 } else { 0 });
        }
    };
    let result = match &cli.command {
        Command::Recurrence { config, common } => cmd_recurrence(config, &common.options()),
        Command::Verify { source, common } => cmd_verify(&source.source(), &common.options()),
        Command::Zeros { source, common } => cmd_zeros(&source.source(), &common.options()),
        Command::List => {
            for name in bundled_names() {
                println!("{name}");
            }
            return ExitCode::SUCCESS;
        }
    };
    match result {
        Ok(outcome) => {
            for p in &outcome.written {
                println!("{}", p.display());
            }
            if !outcome.passed {
                eprintln!("one or more checks failed");
            }
            ExitCode::from(outcome.code() as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e) as u8)
        }
    }
}
