use std::path::PathBuf;
use std::process::ExitCode;

use bandjoin::config::TerminationKind;
use bandjoin::{commands, ExperimentConfig, Method};
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "bandjoin", version, about = "Partition, run and compare distributed band-joins")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build plans and write them with their optimization traces.
    Optimize(Common),
    /// Execute plans and report metrics.
    Run {
        #[command(flatten)]
        common: Common,
        /// Plan file to execute instead of building one.
        #[arg(long)]
        plan: Option<PathBuf>,
    },
    /// Run several methods on the same data and tabulate them.
    Compare(Common),
    /// Write the configured synthetic relations as CSV.
    Gen(Common),
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    /// Overrides the configured methods; repeat for several.
    #[arg(long, value_enum)]
    method: Vec<Method>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value = "out")]
    out_dir: PathBuf,
    /// Check every result against the nested-loop join.
    #[arg(long)]
    verify_oracle: bool,
    #[arg(long, value_enum)]
    termination: Option<TerminationKind>,
}

impl Common {
    fn load(&self) -> anyhow::Result<ExperimentConfig> {
        let mut cfg = ExperimentConfig::load(&self.config)?;
        if !self.method.is_empty() {
            cfg.methods = self.method.clone();
        }
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        if let Some(t) = self.termination {
            cfg.termination = t;
        }
        cfg.verify_oracle |= self.verify_oracle;
        Ok(cfg)
    }
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn dispatch(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Optimize(c) => {
            for b in commands::optimize(c.load()?, &c.out_dir)? {
                let iters = b.iterations.map(|i| format!(", {i} iterations")).unwrap_or_default();
                println!("{}: {} plan{iters}, optimization {:.3} s (sampling {:.3} s)", b.method, b.plan.kind(), b.optimization_seconds, b.sampling_seconds);
            }
        }
        Command::Run { common: c, plan } => {
            for r in commands::run(c.load()?, plan.as_deref(), &c.out_dir)? {
                println!("{}: I = {}, I_m = {}, O_m = {}, L_m = {}, dupOverhead = {:.4}, loadOverhead = {:.4}", r.method, r.input, r.max_input, r.max_output, r.max_load, r.dup_overhead, r.load_overhead);
            }
        }
        Command::Compare(c) => {
            let cfg = c.load()?;
            let name = cfg.name.clone();
            let records = commands::compare(cfg, &c.out_dir)?;
            print!("{}", bandjoin::report::compare_markdown(&name, &records));
        }
        Command::Gen(c) => {
            for p in commands::gen(&c.load()?, &c.out_dir)? {
                println!("wrote {}", p.display());
            }
        }
    }
    Ok(())
}
