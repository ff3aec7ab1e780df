use std::fs::File;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use dlb_core::harness::{self, config, generate, summary, verify, ExperimentSpec};
use dlb_core::mdp::{self, Layout};
use dlb_core::rng::{stream, Stream};
use dlb_core::Error;

#[derive(Parser)]
#[command(name = "dlb", version, about = "Online MDPs with aggregate bandit feedback via distorted linear bandits")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment and write traces, summary.json and a gnuplot script.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        replicates: Option<usize>,
    },
    /// Run verification suites and print one line per check.
    Verify {
        #[arg(long, value_enum, default_value = "all")]
        suite: SuiteArg,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Monte-Carlo reruns for the coverage check.
        #[arg(long, default_value_t = 500)]
        replicates: usize,
        /// Episodes per reduction run.
        #[arg(long, default_value_t = 2000)]
        episodes: usize,
        /// Frozen-state rounds for estimator checks.
        #[arg(long, default_value_t = 100_000)]
        samples: usize,
        /// Write the JSON report here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Summarise trace files.
    Summarize {
        #[arg(required = true)]
        traces: Vec<PathBuf>,
        /// Write the JSON summary here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Generate an MDP instance file.
    GenMdp {
        #[arg(long, value_enum, default_value = "random-dense")]
        kind: MdpKindArg,
        #[arg(long, default_value_t = 2)]
        states: usize,
        #[arg(long, default_value_t = 2)]
        actions: usize,
        #[arg(long, default_value_t = 2)]
        horizon: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Generate a loss-sequence CSV over the cells of an instance.
    GenLosses {
        #[arg(long, value_enum, default_value = "switching")]
        kind: LossKindArg,
        /// Instance file; when absent the sizes below are used.
        #[arg(long)]
        mdp: Option<PathBuf>,
        #[arg(long, default_value_t = 2)]
        states: usize,
        #[arg(long, default_value_t = 2)]
        actions: usize,
        #[arg(long, default_value_t = 2)]
        horizon: usize,
        #[arg(long)]
        episodes: usize,
        #[arg(long)]
        period: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum SuiteArg {
    Barrier,
    Estimators,
    Concentration,
    Reduction,
    All,
}

#[derive(Clone, Copy, ValueEnum)]
enum MdpKindArg {
    RandomDense,
    Chain,
}

#[derive(Clone, Copy, ValueEnum)]
enum LossKindArg {
    IidUniform,
    Switching,
    SinusoidalDrift,
    SingleCellSpike,
}

enum Failure {
    Assertion(String),
    Usage(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            e if e.is_assertion_failure() => Failure::Assertion(e.to_string()),
            e @ (Error::Parse { .. } | Error::Validation(_) | Error::SchemaMismatch(_) | Error::Io(_)) => {
                Failure::Usage(e.to_string())
            }
            Error::InReplicate { source, replicate } => match Failure::from(*source) {
                Failure::Assertion(m) => Failure::Assertion(format!("replicate {replicate}: {m}")),
                Failure::Usage(m) => Failure::Usage(format!("replicate {replicate}: {m}")),
            },
            e => Failure::Assertion(e.to_string()),
        }
    }
}

fn write_json(path: Option<&PathBuf>, value: &impl serde::Serialize) -> Result<(), Failure> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Failure::Usage(e.to_string()))? + "\n";
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| Failure::from(Error::from(e))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Run {
            config,
            seed,
            out,
            replicates,
        } => {
            let mut spec: ExperimentSpec = config::parse_config(&config)?;
            if let Some(s) = seed {
                spec.seed = s;
            }
            if let Some(o) = out {
                spec.out = o;
            }
            if let Some(r) = replicates {
                spec.replicates = r;
            }
            spec.validate()?;
            let outcome = harness::run_experiment(&spec)?;
            let s = &outcome.summary;
            println!(
                "{} replicates: median final regret {:.4} (q1 {:.4}, q3 {:.4}), median slope {:.3}",
                s.replicates.len(),
                s.median_final_regret,
                s.q1_final_regret,
                s.q3_final_regret,
                s.median_slope
            );
            for c in &s.checks {
                println!("{} {}: {}", if c.passed { "ok  " } else { "FAIL" }, c.name, c.detail);
            }
            println!("summary written to {}", outcome.summary_path.display());
            if s.assertion_failed {
                return Err(Failure::Assertion("an inline validity assertion failed".into()));
            }
            Ok(())
        }
        Command::Verify {
            suite,
            seed,
            replicates,
            episodes,
            samples,
            out,
        } => {
            let suite = match suite {
                SuiteArg::Barrier => verify::Suite::Barrier,
                SuiteArg::Estimators => verify::Suite::Estimators,
                SuiteArg::Concentration => verify::Suite::Concentration,
                SuiteArg::Reduction => verify::Suite::Reduction,
                SuiteArg::All => verify::Suite::All,
            };
            let opts = verify::VerifyOptions {
                seed,
                replicates,
                episodes,
                samples,
                ..Default::default()
            };
            let report = verify::verify(suite, &opts);
            for e in &report.entries {
                println!(
                    "{} {} (margin {:.3e}): {}",
                    if e.passed { "ok  " } else { "FAIL" },
                    e.name,
                    e.margin,
                    e.detail
                );
            }
            if let Some(p) = &out {
                write_json(Some(p), &report)?;
            }
            if report.passed {
                Ok(())
            } else {
                Err(Failure::Assertion("verification failed".into()))
            }
        }
        Command::Summarize { traces, out } => {
            let report: summary::SummaryReport = harness::summarize(&traces)?;
            write_json(out.as_ref(), &report)
        }
        Command::GenMdp {
            kind,
            states,
            actions,
            horizon,
            seed,
            out,
        } => {
            let layout = Layout::new(states, actions, horizon).map_err(|e| Failure::Usage(e.to_string()))?;
            let kind = match kind {
                MdpKindArg::RandomDense => config::MdpKind::RandomDense,
                MdpKindArg::Chain => config::MdpKind::Chain,
            };
            let m = generate::generate_mdp(kind, layout, &mut stream(seed, 0, Stream::Instance))?;
            mdp::write_mdp_file(&out, &m)?;
            Ok(())
        }
        Command::GenLosses {
            kind,
            mdp: mdp_file,
            states,
            actions,
            horizon,
            episodes,
            period,
            seed,
            out,
        } => {
            let layout = match mdp_file {
                Some(p) => mdp::read_mdp_file(&p)?.layout(),
                None => Layout::new(states, actions, horizon).map_err(|e| Failure::Usage(e.to_string()))?,
            };
            let kind = match kind {
                LossKindArg::IidUniform => config::LossKind::IidUniform,
                LossKindArg::Switching => config::LossKind::Switching,
                LossKindArg::SinusoidalDrift => config::LossKind::SinusoidalDrift,
                LossKindArg::SingleCellSpike => config::LossKind::SingleCellSpike,
            };
            let losses = generate::generate_losses(kind, layout, episodes, period, &mut stream(seed, 0, Stream::Losses));
            let mut f = File::create(&out).map_err(|e| Failure::from(Error::from(e)))?;
            mdp::write_losses(&mut f, &losses)?;
            f.flush().map_err(|e| Failure::from(Error::from(e)))?;
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Assertion(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
    }
}
