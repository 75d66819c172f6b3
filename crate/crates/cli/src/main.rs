use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use structsgd::data::{gen_synthetic, reference_path, save_dataset, save_reference, SyntheticSpec};
use structsgd::harness::config::{DatasetSource, ExperimentConfig, DEFAULT_D, DEFAULT_N};
use structsgd::harness::experiment::{resolve, run_resolved, run_sweep, sampling_scheme, SweepParam};
use structsgd::harness::output::{emit_outputs, emit_sweep_outputs, summary_text, sweep_csv, theory_csv};
use structsgd::{Error, Family, Result, TheoryReport};

#[derive(Parser, Debug)]
#[command(name = "structsgd", version, about = "Mini-batch SGD on F + h with computable convergence constants")]
struct Cli {
    /// Base seed (repetition streams; also the synthetic data seed unless data_seed is set).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output path: dataset file for `gen`, directory for `theory`, `run` and `sweep`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Format of what is printed to stdout.
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    format: Format,
    /// Flat key=value experiment config file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Csv,
}

#[derive(Args, Debug, Clone)]
struct Overrides {
    /// Config overrides applied after the config file, e.g. `lh=5 batch_size=10`.
    #[arg(value_name = "KEY=VALUE")]
    set: Vec<String>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a synthetic dataset file.
    Gen {
        #[arg(long, default_value_t = DEFAULT_N)]
        n: usize,
        #[arg(long, default_value_t = DEFAULT_D)]
        d: usize,
        #[arg(long, default_value = "logistic")]
        family: String,
    },
    /// Solve for the reference minimizer of a dataset file and write `<dataset>.ref`.
    SolveRef {
        dataset: PathBuf,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Print the theory constants for a configuration.
    Theory {
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Run a repeated experiment and write trace.csv, theory.csv, summary.txt, plot.svg.
    Run {
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Run one experiment per grid value of `lh` or `batch_size`.
    Sweep {
        /// `lh` or `batch_size`.
        #[arg(long)]
        param: String,
        /// Comma-separated grid, e.g. `1,5,10,20`.
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<f64>,
        #[command(flatten)]
        overrides: Overrides,
    },
}

fn build_config(cli: &Cli, overrides: &[String]) -> Result<ExperimentConfig> {
    let mut cfg = match &cli.config {
        Some(path) => ExperimentConfig::from_file(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.base_seed = seed;
    }
    if let Some(out) = &cli.out {
        cfg.output_dir = Some(out.clone());
    }
    cfg.apply_overrides(overrides)?;
    cfg.validate()?;
    Ok(cfg)
}

fn out_dir(cfg: &ExperimentConfig) -> PathBuf {
    cfg.output_dir.clone().unwrap_or_else(|| PathBuf::from("out"))
}

fn cmd_gen(cli: &Cli, n: usize, d: usize, family: &str) -> Result<()> {
    let family: Family = family.parse()?;
    let spec = SyntheticSpec {
        n,
        d,
        seed: cli.seed.unwrap_or(0),
        family,
    };
    let ds = gen_synthetic(&spec)?;
    let path = cli.out.clone().unwrap_or_else(|| PathBuf::from("dataset.txt"));
    save_dataset(&ds, family, &path)?;
    println!("wrote {} ({n} x {d}, {family}, seed {})", path.display(), spec.seed);
    Ok(())
}

fn cmd_solve_ref(cli: &Cli, dataset: &Path, overrides: &[String]) -> Result<()> {
    let mut cfg = build_config(cli, overrides)?;
    cfg.dataset = DatasetSource::File(dataset.to_path_buf());
    let resolved = resolve(&cfg)?;
    let path = reference_path(dataset);
    save_reference(&resolved.reference, &path)?;
    let r = &resolved.reference;
    match cli.format {
        Format::Text => println!(
            "wrote {}\ngrad_norm = {:e}\niterations = {}\ntolerance = {:e}",
            path.display(),
            r.grad_norm,
            r.iterations_used,
            r.tolerance
        ),
        Format::Csv => println!(
            "path,grad_norm,iterations,tolerance\n{},{:e},{},{:e}",
            path.display(),
            r.grad_norm,
            r.iterations_used,
            r.tolerance
        ),
    }
    Ok(())
}

fn cmd_theory(cli: &Cli, overrides: &[String]) -> Result<()> {
    let cfg = build_config(cli, overrides)?;
    let resolved = resolve(&cfg)?;
    let scheme = sampling_scheme(&resolved.problem, cfg.sampling, cfg.batch_size)?;
    let report = TheoryReport::compute(
        &resolved.problem,
        &resolved.reference.x_star,
        &scheme,
        resolved.reference.tolerance,
    )?;
    if let Some(dir) = &cfg.output_dir {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let path = dir.join("theory.csv");
        std::fs::write(&path, theory_csv(&report)).map_err(|e| Error::io(&path, e))?;
    }
    match cli.format {
        Format::Text => print!("{}", report.to_kv()),
        Format::Csv => print!("{}", theory_csv(&report)),
    }
    Ok(())
}

fn cmd_run(cli: &Cli, overrides: &[String]) -> Result<()> {
    let cfg = build_config(cli, overrides)?;
    let resolved = resolve(&cfg)?;
    let report = run_resolved(&cfg, &resolved)?;
    let dir = out_dir(&cfg);
    emit_outputs(&report, &dir)?;
    let cfg_path = dir.join("config.txt");
    std::fs::write(&cfg_path, cfg.to_config_string()).map_err(|e| Error::io(&cfg_path, e))?;
    match cli.format {
        Format::Text => print!("{}", summary_text(&report)),
        Format::Csv => print!(
            "{}",
            sweep_csv(
                SweepParam::RegStrength,
                &[structsgd::harness::SweepPoint {
                    value: cfg.reg_strength,
                    report
                }]
            )
        ),
    }
    Ok(())
}

fn cmd_sweep(cli: &Cli, param: &str, values: &[f64], overrides: &[String]) -> Result<()> {
    let param: SweepParam = param.parse()?;
    let cfg = build_config(cli, overrides)?;
    let points = run_sweep(&cfg, param, values)?;
    let dir = out_dir(&cfg);
    emit_sweep_outputs(param, &points, &dir)?;
    match cli.format {
        Format::Csv => print!("{}", sweep_csv(param, &points)),
        Format::Text => {
            for p in &points {
                let r = &p.report;
                println!(
                    "{} = {:<10} R_rel = {:e}  slope = {}  violations = {}",
                    param.key(),
                    p.value,
                    r.r_rel,
                    r.slope.map(|s| format!("{s:e}")).unwrap_or_else(|| "na".into()),
                    r.violations.map(|v| v.to_string()).unwrap_or_else(|| "na".into())
                );
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Gen { n, d, family } => cmd_gen(&cli, *n, *d, family),
        Command::SolveRef { dataset, overrides } => cmd_solve_ref(&cli, dataset, &overrides.set),
        Command::Theory { overrides } => cmd_theory(&cli, &overrides.set),
        Command::Run { overrides } => cmd_run(&cli, &overrides.set),
        Command::Sweep {
            param,
            values,
            overrides,
        } => cmd_sweep(&cli, param, values, &overrides.set),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_numerical() {
                ExitCode::from(3)
            } else {
                ExitCode::from(2)
            }
        }
    }
}
