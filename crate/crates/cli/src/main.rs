use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use npdc_cli::{render_tables, run_experiment, speedup_sweep, CliError, CliResult, ExperimentConfig, Overrides};
use npdc_core::decomposition::{differential_grouping, differential_grouping_cost};
use npdc_core::problems::true_interaction_groups;
use npdc_core::{Budget, Objective, ProblemDescriptor};

/// Parallel divide-and-conquer optimization experiments.
#[derive(Parser)]
#[command(name = "npdc", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every repetition of a config and write per-run CSV/JSON files.
    Run(RunArgs),
    /// Time repetition 0 at several worker counts and write speedup.csv.
    Sweep {
        #[command(flatten)]
        run: RunArgs,
        /// Comma-separated worker counts; must include 1.
        #[arg(long, value_delimiter = ',', default_value = "1,2,4,8")]
        counts: Vec<usize>,
    },
    /// Aggregate a run directory into summary, pairwise, wdl and convergence tables.
    Render { dir: PathBuf },
    /// Print a problem descriptor and its planted interaction groups.
    Problem {
        /// class:base:D:m:seed, "-" for no m.
        spec: String,
        /// Also evaluate this comma-separated point.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        eval: Option<Vec<f64>>,
    },
    /// Run differential grouping on a problem and compare with the planted groups.
    Group {
        spec: String,
        #[arg(long)]
        epsilon: Option<f64>,
    },
}

#[derive(Args)]
struct RunArgs {
    /// Flat TOML config; command-line values override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    problem: Option<String>,
    #[arg(long)]
    algo: Option<String>,
    #[arg(long)]
    budget: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long)]
    reps: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    lambda: Option<usize>,
}

impl RunArgs {
    fn resolve(self) -> CliResult<ExperimentConfig> {
        let overrides = Overrides {
            problem: self.problem,
            algo: self.algo,
            budget: self.budget,
            seed: self.seed,
            workers: self.workers,
            reps: self.reps,
            out: self.out,
            lambda: self.lambda,
        };
        ExperimentConfig::resolve(self.config.as_deref(), &overrides)
    }
}

fn execute(command: Command) -> CliResult<()> {
    match command {
        Command::Run(args) => {
            let cfg = args.resolve()?;
            let runs = run_experiment(&cfg)?;
            println!("run_id,seed,status,final_error,consumed");
            for r in &runs {
                let s = &r.summary;
                let status = match s.status {
                    npdc_cli::RunStatus::Ok => "ok",
                    npdc_cli::RunStatus::Failed => "failed",
                };
                let err = s.final_error.map(|e| format!("{e:e}")).unwrap_or_default();
                let used = s.consumed.map(|c| c.to_string()).unwrap_or_default();
                println!("{},{},{status},{err},{used}", s.run_id, s.seed);
            }
            if runs.iter().all(|r| r.record.is_none()) {
                return Err(CliError::Runtime("every run failed".into()));
            }
        }
        Command::Sweep { run, counts } => {
            let cfg = run.resolve()?;
            let rows = speedup_sweep(&cfg, &counts)?;
            println!("workers,total_time,evaluation_time,fe_fraction,measured_speedup,model_speedup");
            for r in rows {
                println!(
                    "{},{:.6},{:.6},{:.4},{:.3},{:.3}",
                    r.workers, r.total_time, r.evaluation_time, r.fe_fraction, r.measured_speedup, r.model_speedup
                );
            }
        }
        Command::Render { dir } => {
            let t = render_tables(&dir)?;
            println!(
                "wrote {} summary, {} pairwise, {} wdl and {} convergence rows to {}",
                t.summary.len(),
                t.pairwise.len(),
                t.wdl.len(),
                t.convergence.len(),
                dir.display()
            );
        }
        Command::Problem { spec, eval } => {
            let desc = ProblemDescriptor::from_compact(&spec)?;
            let problem = desc.build()?;
            print!("{}", desc.to_toml());
            println!("# label: {}", desc.label());
            println!("# planted groups (one per line):");
            print!("{}", true_interaction_groups(&problem).to_lines());
            if let Some(x) = eval {
                println!("f(x) = {:e}", problem.evaluate(&x)?);
            }
        }
        Command::Group { spec, epsilon } => {
            let desc = ProblemDescriptor::from_compact(&spec)?;
            let problem = desc.build()?;
            let mut budget = Budget::new(differential_grouping_cost(problem.dimension()));
            let found = differential_grouping(&problem, epsilon, &mut budget)?.canonical();
            let planted = true_interaction_groups(&problem).canonical();
            print!("{}", found.to_lines());
            println!(
                "# {} groups, {} evaluations, {} planted partition",
                found.len(),
                budget.used(),
                if found == planted { "matches" } else { "differs from" }
            );
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
