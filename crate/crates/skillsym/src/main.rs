use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use skillsym::config::Overrides;
use skillsym::io;
use skillsym::run::{self, Failure, TheoryReport};
use skillsym_core::env::kitchen::Kitchen;
use skillsym_core::env::tasks::kitchen_suite;
use skillsym_core::theory::{check_consistency, check_soundness, empirical_d_compl, sample_bound};
use skillsym_core::{Abstractor, Dataset, Model, Transition, World};

#[derive(Parser)]
#[command(name = "skillsym", version, about = "Learn symbolic operators for black-box skills")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the learning loop and write a run directory.
    Learn {
        #[command(flatten)]
        overrides: Overrides,
        #[arg(long, default_value = "run")]
        out: PathBuf,
    },
    /// Evaluate a saved model on a task suite.
    Eval {
        #[command(flatten)]
        overrides: Overrides,
        #[arg(long)]
        model: PathBuf,
        #[arg(long, default_value = "eval")]
        out: PathBuf,
    },
    /// Write domain.pddl and problem files for a saved model.
    ExportPddl {
        #[command(flatten)]
        overrides: Overrides,
        #[arg(long)]
        model: PathBuf,
        #[arg(long, default_value = "pddl")]
        out: PathBuf,
    },
    /// Soundness, consistency and d_compl of a run directory.
    Check {
        #[command(flatten)]
        overrides: Overrides,
        #[arg(long)]
        run: PathBuf,
    },
    /// Sample-complexity bound for learning a model.
    SampleBound {
        #[arg(long)]
        epsilon: f64,
        #[arg(long)]
        delta: f64,
        #[arg(long)]
        p_max: u64,
        #[arg(long)]
        omega: u64,
        #[arg(long)]
        objects: u64,
        #[arg(long)]
        mu_max: u32,
    },
    /// Write the built-in kitchen task suite as task JSON.
    Tasks {
        #[arg(long, default_value = "tasks.json")]
        out: PathBuf,
    },
    /// Learn and evaluate over `--repeats` consecutive seeds.
    Experiment {
        #[command(flatten)]
        overrides: Overrides,
        #[arg(long, default_value = "experiment")]
        out: PathBuf,
    },
}

fn config_of(o: &Overrides) -> Result<skillsym::config::Config, Failure> {
    o.resolve().map_err(Failure::Config)
}

fn dataset_of(dir: &std::path::Path) -> Result<Dataset, Failure> {
    let mut files: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(|e| Failure::Config(format!("{}: {e}", dir.display())))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.file_name().and_then(|n| n.to_str()).is_some_and(|n| n.starts_with("dataset_") && n.ends_with(".jsonl")))
        .collect();
    files.sort();
    let mut d = Dataset::new();
    for f in files {
        d.transitions.extend(io::read_jsonl::<Transition>(&f)?);
    }
    Ok(d)
}

fn execute(cmd: Command) -> Result<(), Failure> {
    match cmd {
        Command::Learn { overrides, out } => {
            let cfg = config_of(&overrides)?;
            let mut o = run::learn(&cfg)?;
            run::write_learn_artifacts(&out, &mut o)?;
            print!("{}", run::theory_text(&o.theory));
            if let Some(runs) = &o.eval {
                print!("{}", run::report_text(&run::report_file(runs.clone())));
            }
            println!("artifacts in {}", out.display());
            o.fault.map_or(Ok(()), Err)
        }
        Command::Eval { overrides, model, out } => {
            let cfg = config_of(&overrides)?;
            let r = run::eval_model_file(&cfg, &model)?;
            std::fs::create_dir_all(&out).map_err(|e| Failure::Config(format!("{}: {e}", out.display())))?;
            io::write_json(&out.join("report.json"), &r)?;
            let text = run::report_text(&r);
            io::write_text(&out.join("report.txt"), &text)?;
            print!("{text}");
            Ok(())
        }
        Command::ExportPddl { overrides, model, out } => {
            let cfg = config_of(&overrides)?;
            run::export_model_file(&cfg, &model, &out)?;
            println!("wrote {}", out.display());
            Ok(())
        }
        Command::Check { overrides, run: dir } => {
            let cfg = config_of(&overrides)?;
            let model: Model = io::read_json(&dir.join("model.json"))?;
            let world: World = io::read_json(&dir.join("world.json"))?;
            let dataset = dataset_of(&dir)?;
            let mut c = run::components(&cfg)?;
            let abs = Abstractor::new(world.clone()).abstract_dataset(&mut c.classifier, &model.predicates, &dataset)?;
            let report = TheoryReport {
                soundness: vec![check_soundness(&model, &world, &dataset, &abs)],
                consistency: check_consistency(&model, &world, &dataset, &abs),
                d_compl_train: empirical_d_compl(&model, &world, &dataset, &abs),
                d_compl_heldout: None,
                heldout_transitions: 0,
            };
            print!("{}", run::theory_text(&report));
            if report.soundness[0].pass && report.consistency.pass {
                Ok(())
            } else {
                Err(Failure::Internal("theory checks failed".into()))
            }
        }
        Command::SampleBound { epsilon, delta, p_max, omega, objects, mu_max } => {
            let b = sample_bound(epsilon, delta, p_max, omega, objects, mu_max)?;
            match b.n {
                Some(n) => println!("n = {n}"),
                None => println!("n = exp({:.6}) (log space)", b.ln_n),
            }
            println!("log3 A_max = {}", b.log3_a_max);
            println!("ln log3 |H| = {:.6}", b.ln_log3_h);
            Ok(())
        }
        Command::Tasks { out } => {
            let specs = kitchen_suite(&Kitchen::new()).iter().map(io::TaskSpec::from_task).collect::<Result<Vec<_>, _>>()?;
            io::write_json(&out, &specs)?;
            println!("wrote {} tasks to {}", specs.len(), out.display());
            Ok(())
        }
        Command::Experiment { overrides, out } => {
            let cfg = config_of(&overrides)?;
            let s = run::experiment(&cfg, &out)?;
            let ok = |v: &[bool]| v.iter().filter(|b| **b).count();
            println!("soundness: {}/{} seeds", ok(&s.soundness_pass), s.seeds.len());
            println!("consistency: {}/{} seeds", ok(&s.consistency_pass), s.seeds.len());
            print!("{}", run::report_text(&run::ReportFile { runs: Vec::new(), aggregate: s.aggregate.clone() }));
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
