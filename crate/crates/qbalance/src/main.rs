//! Batch CLI over the experiment harness.
//!
//! Exit codes: 0 on success, 1 on configuration or I/O errors, 2 when an
//! invariant is violated during any trial.

use std::path::PathBuf;
use std::process::ExitCode;

use qbalance::harness::{
    export_series, load_config, render_csv, render_json, run_experiment, EmitFormat, Mode,
};
use qbalance::Error;

const USAGE: &str = "\
qbalance - quantized weight-balancing and average consensus experiments

USAGE:
  qbalance <balance|consensus> [FLAGS]

FLAGS (each mirrors a config key; flags override --config values):
  --config PATH         flat key=value config file
  --n N                 node count (default 6)
  --p P                 extra-edge probability (default 0.5)
  --trials T            trials per graph realization (default 100)
  --graphs G            graph realizations (default 100)
  --max-iters M         round cap per trial (default 100000)
  --tol X               stopping tolerance on the metric (default 0)
  --q-min X / --q-max X quantizer range (default 0 / 1)
  --alpha-a0 X          consensus step scale (default 1)
  --alpha-tau X         consensus step exponent in (1/2, 1] (default 1)
  --seed S              master seed (default 0)
  --record-every R      trajectory subsampling stride (default 100)
  --emit csv|json       output format (default csv)
  --graph-file PATH     fixture graph (edge-list text) instead of random
  --out PATH            write the series to PATH (default: stdout)
  --help                show this help

The tracked metric is the total imbalance in balance mode and the MSE
against the initial average in consensus mode.
";

struct CliArgs {
    mode: Mode,
    config_file: Option<PathBuf>,
    overrides: Vec<(String, String)>,
    out: Option<PathBuf>,
}

fn parse_args(mut args: std::env::Args) -> Result<Option<CliArgs>, String> {
    let _program = args.next();
    let mode = match args.next().as_deref() {
        Some("balance") => Mode::Balance,
        Some("consensus") => Mode::Consensus,
        Some("--help") | Some("-h") => return Ok(None),
        Some(other) => return Err(format!("unknown subcommand `{other}`")),
        None => return Err("missing subcommand".to_string()),
    };
    let mut cli = CliArgs {
        mode,
        config_file: None,
        overrides: Vec::new(),
        out: None,
    };
    while let Some(flag) = args.next() {
        if flag == "--help" || flag == "-h" {
            return Ok(None);
        }
        let mut value_of = |name: &str| {
            args.next()
                .ok_or_else(|| format!("{name} requires a value"))
        };
        match flag.as_str() {
            "--config" => cli.config_file = Some(PathBuf::from(value_of("--config")?)),
            "--out" => cli.out = Some(PathBuf::from(value_of("--out")?)),
            "--n" => cli.overrides.push(("n".into(), value_of("--n")?)),
            "--p" => cli.overrides.push(("p".into(), value_of("--p")?)),
            "--trials" => cli.overrides.push(("trials".into(), value_of("--trials")?)),
            "--graphs" => cli
                .overrides
                .push(("graph_realizations".into(), value_of("--graphs")?)),
            "--max-iters" => cli
                .overrides
                .push(("max_iters".into(), value_of("--max-iters")?)),
            "--tol" => cli.overrides.push(("tol".into(), value_of("--tol")?)),
            "--q-min" => cli.overrides.push(("q_min".into(), value_of("--q-min")?)),
            "--q-max" => cli.overrides.push(("q_max".into(), value_of("--q-max")?)),
            "--alpha-a0" => cli
                .overrides
                .push(("alpha_a0".into(), value_of("--alpha-a0")?)),
            "--alpha-tau" => cli
                .overrides
                .push(("alpha_tau".into(), value_of("--alpha-tau")?)),
            "--seed" => cli
                .overrides
                .push(("master_seed".into(), value_of("--seed")?)),
            "--record-every" => cli
                .overrides
                .push(("record_every".into(), value_of("--record-every")?)),
            "--emit" => cli.overrides.push(("emit".into(), value_of("--emit")?)),
            "--graph-file" => cli
                .overrides
                .push(("graph_file".into(), value_of("--graph-file")?)),
            other => return Err(format!("unknown flag `{other}`")),
        }
    }
    Ok(Some(cli))
}

fn run(cli: CliArgs) -> Result<(), Error> {
    let cfg = load_config(cli.config_file.as_deref(), &cli.overrides, Some(cli.mode))?;
    let result = run_experiment(&cfg)?;

    let converged = result.trials.iter().filter(|t| t.converged).count();
    let finals: Vec<f64> = result.trials.iter().map(|t| t.final_metric).collect();
    let worst_final = finals.iter().cloned().fold(0.0f64, f64::max);
    eprintln!(
        "{} trials ({} graphs x {}), {}/{} stopped on tolerance, worst final {} = {worst_final}",
        result.trials.len(),
        cfg.graph_realizations,
        cfg.trials,
        converged,
        result.trials.len(),
        match cfg.mode {
            Mode::Balance => "imbalance",
            Mode::Consensus => "mse",
        },
    );

    match &cli.out {
        Some(path) => {
            export_series(&result, path, cfg.emit)?;
            eprintln!("series written to {}", path.display());
        }
        None => {
            let body = match cfg.emit {
                EmitFormat::Csv => render_csv(&result),
                EmitFormat::Json => render_json(&result)?,
            };
            print!("{body}");
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match parse_args(std::env::args()) {
        Ok(Some(cli)) => cli,
        Ok(None) => {
            print!("{USAGE}");
            return ExitCode::SUCCESS;
        }
        Err(message) => {
            eprintln!("error: {message}\n\n{USAGE}");
            return ExitCode::from(1);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            if err.is_invariant_violation() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}
