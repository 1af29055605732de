//! `kio` — synthetic-gait simulation, contact-aided kinematic-inertial
//! state estimation and trajectory evaluation, as one reproducible
//! pipeline.

use std::path::PathBuf;
use std::process::ExitCode;

use kio_core::config::RunConfig;
use kio_core::runner;

const USAGE: &str = "\
usage: kio <command> [options]

commands:
  simulate   generate a synthetic walk: dataset.csv + ground_truth.csv
  estimate   run the filter over a dataset: estimate.csv
  evaluate   compare an estimate against ground truth: report.csv + summary.txt
  converge   randomized-initialization study: trial_XX.csv + summary.txt

options:
  --config <path>    run configuration (flat key = value; defaults built in)
  --model <path>     chain description file (default: bundled reference biped)
  --dataset <path>   sensor log to estimate from (overrides config)
  --out <dir>        output directory (default: .)
  --seed <n>         master seed (overrides config)
  --trials <n>       number of convergence trials (default: 25)

forms:
  kio simulate --config c.txt --out runs/sim
  kio estimate --config runs/sim/config.txt --out runs/est
  kio evaluate runs/est/estimate.csv runs/sim/ground_truth.csv --out runs/eval
  kio converge --config runs/sim/config.txt --trials 25 --out runs/study
";

struct Args {
    command: String,
    positional: Vec<PathBuf>,
    config: Option<PathBuf>,
    model: Option<PathBuf>,
    dataset: Option<PathBuf>,
    out: PathBuf,
    seed: Option<u64>,
    trials: usize,
}

fn parse_args(mut argv: std::env::Args) -> Result<Args, String> {
    argv.next(); // program name
    let command = argv.next().ok_or_else(|| "missing command".to_string())?;
    let mut args = Args {
        command,
        positional: Vec::new(),
        config: None,
        model: None,
        dataset: None,
        out: PathBuf::from("."),
        seed: None,
        trials: 25,
    };
    let mut argv = argv.peekable();
    while let Some(arg) = argv.next() {
        let mut value = |name: &str| -> Result<String, String> {
            argv.next().ok_or_else(|| format!("{name} needs a value"))
        };
        match arg.as_str() {
            "--config" => args.config = Some(PathBuf::from(value("--config")?)),
            "--model" => args.model = Some(PathBuf::from(value("--model")?)),
            "--dataset" => args.dataset = Some(PathBuf::from(value("--dataset")?)),
            "--out" => args.out = PathBuf::from(value("--out")?),
            "--seed" => {
                args.seed = Some(
                    value("--seed")?
                        .parse()
                        .map_err(|_| "--seed needs an unsigned integer".to_string())?,
                )
            }
            "--trials" => {
                args.trials = value("--trials")?
                    .parse()
                    .map_err(|_| "--trials needs an unsigned integer".to_string())?
            }
            other if other.starts_with("--") => return Err(format!("unknown flag '{other}'")),
            other => args.positional.push(PathBuf::from(other)),
        }
    }
    Ok(args)
}

fn resolve_config(args: &Args) -> Result<RunConfig, String> {
    let mut config = match &args.config {
        Some(path) => RunConfig::load(path).map_err(|e| e.to_string())?,
        None => RunConfig::default(),
    };
    if let Some(model) = &args.model {
        config.model = Some(model.clone());
    }
    if let Some(dataset) = &args.dataset {
        config.dataset_file = Some(dataset.clone());
    }
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    Ok(config)
}

fn run() -> Result<(), String> {
    let args = parse_args(std::env::args()).map_err(|e| format!("{e}\n\n{USAGE}"))?;
    let config = resolve_config(&args)?;
    let fail = |e: runner::RunError| e.to_string();

    match args.command.as_str() {
        "simulate" => {
            let out = runner::cmd_simulate(&config, &args.out).map_err(fail)?;
            println!("wrote {}", out.dataset.display());
            println!("wrote {}", out.ground_truth.display());
            println!("wrote {}", out.config.display());
        }
        "estimate" => {
            let out = runner::cmd_estimate(&config, &args.out).map_err(fail)?;
            println!("wrote {}", out.estimate.display());
            println!("wrote {}", out.config.display());
        }
        "evaluate" => {
            if args.positional.len() != 2 {
                return Err(format!(
                    "evaluate needs <estimate.csv> <ground_truth.csv>\n\n{USAGE}"
                ));
            }
            let out =
                runner::cmd_evaluate(&config, &args.positional[0], &args.positional[1], &args.out)
                    .map_err(fail)?;
            println!("wrote {}", out.report.display());
            println!("wrote {}", out.summary.display());
            let summary = std::fs::read_to_string(&out.summary).map_err(|e| e.to_string())?;
            print!("{summary}");
        }
        "converge" => {
            let out = runner::cmd_converge(&config, &args.out, args.trials).map_err(fail)?;
            println!("wrote {} trial series", out.trial_files.len());
            println!("wrote {}", out.summary.display());
        }
        other => return Err(format!("unknown command '{other}'\n\n{USAGE}")),
    }
    Ok(())
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(message) => {
            eprintln!("error: {message}");
            ExitCode::FAILURE
        }
    }
}
