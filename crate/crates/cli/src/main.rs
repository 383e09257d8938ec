use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use luo_core::engines::{
    EngineConfig, EngineKind, RunRecord, Scalarization, DEFAULT_FFE_BUDGET, DEFAULT_POP_SIZE,
};
use luo_core::harness::{
    compare_archive, run_experiment, tune_config, ExperimentPlan, TuneOptions, DEFAULT_ALPHA,
    TUNE_SEEDS,
};
use luo_core::instance::{generate_instance, load_instance};
use luo_core::operators::{CrossoverKind, InitKind, MutationKind, RepairKind};
use luo_core::{Error, GeneratorParams, Result, TelMode};

#[derive(Parser)]
#[command(name = "luo", version, about = "Multi-objective land-use allocation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Synthesise a seeded instance.
    Generate {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 30)]
        rows: usize,
        #[arg(long, default_value_t = 30)]
        cols: usize,
        /// T as a fraction of the agricultural cells.
        #[arg(long, default_value_t = 0.1)]
        budget_fraction: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run one optimizer on one instance and write its run record.
    Run {
        #[arg(long)]
        instance: PathBuf,
        #[command(flatten)]
        engine: EngineArgs,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Tune population size and variation probabilities; emits the tuned config.
    Tune {
        #[arg(long, num_args = 1.., required = true)]
        instances: Vec<PathBuf>,
        #[command(flatten)]
        engine: EngineArgs,
        /// Runs per instance for each score.
        #[arg(long, default_value_t = TUNE_SEEDS)]
        seeds: usize,
        #[arg(long, default_value_t = 0)]
        master_seed: u64,
        /// Tuned config output.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Full evaluation trace output.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Execute an experiment plan.
    Experiment {
        #[arg(long)]
        plan: PathBuf,
        #[arg(long, default_value_t = 1)]
        workers: usize,
        /// Output directory; overrides the plan's.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compare the optimizers of an experiment archive.
    Compare {
        #[arg(long)]
        archive: PathBuf,
        #[arg(long, default_value_t = DEFAULT_ALPHA)]
        alpha: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write a run record's front as `lap,tel` CSV.
    FrontDump {
        #[arg(long)]
        record: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct EngineArgs {
    #[arg(long, default_value_t = EngineKind::Moead)]
    engine: EngineKind,
    #[arg(long, default_value_t = InitKind::SpI)]
    init: InitKind,
    #[arg(long, default_value_t = CrossoverKind::Ac)]
    crossover: CrossoverKind,
    #[arg(long, default_value_t = MutationKind::MutC)]
    mutation: MutationKind,
    #[arg(long, default_value_t = RepairKind::Rrm)]
    repair: RepairKind,
    #[arg(long, default_value_t = DEFAULT_POP_SIZE)]
    pop: usize,
    #[arg(long, default_value_t = 0.5)]
    p_cross: f64,
    #[arg(long, default_value_t = 0.5)]
    p_mut: f64,
    /// FFE budget per run.
    #[arg(long, default_value_t = DEFAULT_FFE_BUDGET)]
    budget: u64,
    #[arg(long, default_value_t = TelMode::Boundary)]
    tel_mode: TelMode,
    #[arg(long)]
    neighbourhood: Option<usize>,
    #[arg(long, default_value_t = Scalarization::Raw)]
    scalarization: Scalarization,
}

impl EngineArgs {
    fn config(&self, seed: u64) -> EngineConfig {
        let mut c = EngineConfig::new(self.engine);
        c.pop_size = self.pop;
        c.ffe_budget = self.budget;
        c.seed = seed;
        c.tel_mode = self.tel_mode;
        c.moead_neighborhood = self.neighbourhood;
        c.moead_scalarization = self.scalarization;
        c.operators.init = self.init;
        c.operators.crossover = self.crossover;
        c.operators.mutation = self.mutation;
        c.operators.repair = self.repair;
        c.operators.p_cross = self.p_cross;
        c.operators.p_mut = self.p_mut;
        c
    }
}

fn write_output(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(path) => std::fs::write(path, text).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        }),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(text.as_bytes())
                .and_then(|_| stdout.flush())
                .map_err(|source| Error::Io {
                    path: PathBuf::from("<stdout>"),
                    source,
                })
        }
    }
}

fn execute(command: Command) -> Result<u8> {
    match command {
        Command::Generate {
            seed,
            rows,
            cols,
            budget_fraction,
            out,
        } => {
            let params = GeneratorParams {
                budget_fraction,
                ..GeneratorParams::default()
            };
            let inst = generate_instance(seed, rows, cols, &params)?;
            write_output(out.as_deref(), &inst.to_json())?;
        }
        Command::Run {
            instance,
            engine,
            seed,
            out,
        } => {
            let inst = load_instance(&instance)?;
            let rec = engine.config(seed).run(&inst)?;
            eprintln!(
                "{}: {} FFE, {} generations, {} front points",
                rec.config.engine,
                rec.ffe_used,
                rec.generations,
                rec.front.len()
            );
            write_output(out.as_deref(), &rec.to_json())?;
        }
        Command::Tune {
            instances,
            engine,
            seeds,
            master_seed,
            out,
            report,
        } => {
            let insts = instances
                .iter()
                .map(|p| load_instance(p))
                .collect::<Result<Vec<_>>>()?;
            let opts = TuneOptions {
                seeds,
                master_seed,
                ..TuneOptions::default()
            };
            let rep = tune_config(&insts, &engine.config(master_seed), &opts)?;
            eprintln!(
                "tuned: pop {}, p_cross {}, p_mut {} (mean HV {})",
                rep.best.pop_size,
                rep.best.operators.p_cross,
                rep.best.operators.p_mut,
                rep.best_score
            );
            if let Some(path) = report {
                write_output(Some(&path), &serde_json::to_string_pretty(&rep)?)?;
            }
            write_output(out.as_deref(), &serde_json::to_string_pretty(&rep.best)?)?;
        }
        Command::Experiment { plan, workers, out } => {
            let mut p = ExperimentPlan::load(&plan)?;
            if let Some(dir) = out {
                p.output_dir = dir;
            }
            let manifest = run_experiment(&p, workers)?;
            let failed = manifest.failures();
            eprintln!(
                "{} cells, {} failed; manifest in {}",
                manifest.entries.len(),
                failed,
                p.output_dir.display()
            );
            if failed > 0 {
                return Ok(2);
            }
        }
        Command::Compare {
            archive,
            alpha,
            out,
        } => {
            let report = compare_archive(&archive, alpha)?;
            for (name, j) in report.optimizers.iter().zip(&report.joined_rank) {
                eprintln!("{name}: joined rank {j:.3}");
            }
            write_output(out.as_deref(), &serde_json::to_string_pretty(&report)?)?;
        }
        Command::FrontDump { record, out } => {
            let rec = RunRecord::load(&record)?;
            let mut csv = String::from("lap,tel\n");
            for p in rec.front_points() {
                csv.push_str(&format!("{},{}\n", p.lap, p.tel));
            }
            write_output(out.as_deref(), &csv)?;
        }
    }
    Ok(0)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match execute(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
