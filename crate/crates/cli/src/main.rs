use std::path::PathBuf;
use std::process::ExitCode;

use apsl_core::apsl::{Algorithm, Depth};
use apsl_core::commands::{
    cmd_bench, cmd_eval, cmd_learn, cmd_sample, metrics_json, BenchArgs, CmdError, EvalArgs, LearnArgs, SampleArgs,
};
use apsl_core::TestConfig;
use clap::{Args, Parser, Subcommand};

/// Any-part Bayesian network structure learning.
///
/// Exit status: 0 on success, 1 on internal errors, 2 on usage or input errors.
#[derive(Parser)]
#[command(name = "apsl", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Forward-sample a CSV dataset from a BIF network.
    Sample {
        bif: PathBuf,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output CSV; a manifest is written beside it.
        #[arg(long, short)]
        out: PathBuf,
    },
    /// Learn the structure around a target from a CSV dataset.
    Learn {
        data: PathBuf,
        #[arg(long)]
        target: String,
        /// Positive layer count or "max".
        #[arg(long, default_value = "max")]
        depth: Depth,
        /// apsl (HITON-MB backend) or apsl-fs (MB-FS backend).
        #[arg(long, default_value = "apsl")]
        algorithm: Algorithm,
        #[command(flatten)]
        test: TestFlags,
        /// Random seed, recorded in the manifest; learning itself is deterministic.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output prefix for .edges.txt, .adj.csv and .manifest.json
        /// [default: data path without extension, plus ".<target>"].
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    /// Score a learned graph against the true region around a target.
    Eval {
        /// Edge list, or adjacency matrix if the name ends in .csv.
        graph: PathBuf,
        bif: PathBuf,
        #[arg(long)]
        target: String,
        #[arg(long)]
        depth: Depth,
        /// Also write the metrics JSON here, with a manifest beside it.
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    /// Run a benchmark sweep described by a TOML spec file.
    Bench {
        spec: PathBuf,
        /// Output prefix for .jsonl, .txt and .manifest.json [default: spec path without extension].
        #[arg(long, short)]
        out: Option<PathBuf>,
        /// Worker threads; overrides the spec's `jobs`.
        #[arg(long)]
        jobs: Option<usize>,
    },
}

#[derive(Args)]
struct TestFlags {
    /// Significance level of the G² test.
    #[arg(long, default_value_t = 0.01)]
    alpha: f64,
    /// FCBF relevance threshold (apsl-fs).
    #[arg(long, default_value_t = 0.05)]
    delta: f64,
    /// Largest conditioning set tried, or "none" for no limit.
    /// Default 3 is a runtime bound, not part of the method.
    #[arg(long, default_value = "3", value_parser = parse_cond_size)]
    max_cond_size: CondSize,
    /// Tests with fewer than this many rows per degree of freedom count as independent.
    #[arg(long, default_value_t = 5.0)]
    reliability_factor: f64,
    /// Count degrees of freedom over non-empty rows and columns of each stratum.
    #[arg(long)]
    adjust_dof: bool,
    /// Keep PC members whose own PC does not contain the queried node.
    #[arg(long)]
    no_pc_symmetry: bool,
}

#[derive(Clone, Copy)]
struct CondSize(Option<usize>);

fn parse_cond_size(s: &str) -> Result<CondSize, String> {
    if s.eq_ignore_ascii_case("none") {
        Ok(CondSize(None))
    } else {
        s.parse().map(|k| CondSize(Some(k))).map_err(|_| format!("expected a non-negative integer or \"none\", got {s:?}"))
    }
}

fn execute(cli: Cli) -> Result<(), CmdError> {
    match cli.command {
        Command::Sample { bif, n, seed, out } => {
            let s = cmd_sample(&SampleArgs { bif, n, seed, out })?;
            println!("{s}");
        }
        Command::Learn { data, target, depth, algorithm, test, seed, out } => {
            let args = LearnArgs {
                data,
                target,
                depth,
                algorithm,
                test: TestConfig {
                    alpha: test.alpha,
                    reliability_factor: test.reliability_factor,
                    max_cond_size: test.max_cond_size.0,
                    adjust_dof: test.adjust_dof,
                },
                delta: test.delta,
                pc_symmetry: !test.no_pc_symmetry,
                seed,
                out,
            };
            let s = cmd_learn(&args)?;
            print!("{}", s.graph.to_edge_list(&s.names));
            println!("{s}");
        }
        Command::Eval { graph, bif, target, depth, out } => {
            let m = cmd_eval(&EvalArgs { graph, bif, target, depth, out })?;
            println!("{}", metrics_json(&m));
        }
        Command::Bench { spec, out, jobs } => {
            let o = cmd_bench(&BenchArgs { spec, out, jobs })?;
            print!("{}", o.table);
            println!("wrote {} and {}", o.json_path.display(), o.table_path.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
