use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use anyhow::Context;
use clap::{Parser, Subcommand};
use fibtent::report::{read_lambda_json, run_suite, write_summary, ExperimentConfig, Lab, SUITES};

#[derive(Parser)]
#[command(name = "fibtent", version, about = "Certified experiments on the Fibonacci tent map")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// key = value configuration file; flags override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[arg(long, global = true)]
    a_plus: Option<String>,

    #[arg(long, global = true)]
    a_minus: Option<String>,

    /// Kneading prefix depth k (the prefix has length S(k)).
    #[arg(long, global = true)]
    depth_k: Option<u32>,

    /// Precision ceiling in bits.
    #[arg(long, global = true)]
    bits: Option<u32>,

    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Reuse a previously written lambda_f.json instead of solving.
    #[arg(long, global = true)]
    lambda: Option<PathBuf>,

    /// Run everything on the current thread.
    #[arg(long, global = true)]
    sequential: bool,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Solve λ_F and write lambda_f.json
    SolveLambda,
    Combinatorics,
    Diameters,
    Measure,
    Singularity,
    Prop1,
    Prop2,
    Recurrence,
    Backward,
    /// Every suite plus summary.json
    All,
}

impl Command {
    fn suites(self) -> Vec<&'static str> {
        match self {
            Command::SolveLambda => vec!["solve-lambda"],
            Command::Combinatorics => vec!["combinatorics"],
            Command::Diameters => vec!["diameters"],
            Command::Measure => vec!["measure"],
            Command::Singularity => vec!["singularity"],
            Command::Prop1 => vec!["prop1"],
            Command::Prop2 => vec!["prop2"],
            Command::Recurrence => vec!["recurrence"],
            Command::Backward => vec!["backward"],
            Command::All => SUITES.to_vec(),
        }
    }
}

fn config(cli: &Cli) -> anyhow::Result<ExperimentConfig> {
    let mut cfg = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            ExperimentConfig::parse(&text)?
        }
        None => ExperimentConfig::default(),
    };
    if let Some(v) = &cli.a_plus {
        cfg.a_plus = v.clone();
    }
    if let Some(v) = &cli.a_minus {
        cfg.a_minus = v.clone();
    }
    if let Some(v) = cli.depth_k {
        cfg.prefix_depth_k = v;
        cfg.k_max = cfg.k_max.min(v.saturating_sub(2));
    }
    if let Some(v) = cli.bits {
        cfg.max_precision = v;
    }
    if let Some(v) = &cli.out {
        cfg.output_dir = v.clone();
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: &Cli) -> anyhow::Result<bool> {
    if cli.sequential {
        fibtent::par::set_execution(fibtent::par::Execution::Sequential);
    }
    let cfg = config(cli)?;
    let dir = cfg.output_dir.clone();
    let t = Instant::now();
    let lab = match &cli.lambda {
        Some(path) => {
            let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            Lab::with_params(cfg, read_lambda_json(&text)?)?
        }
        None => Lab::build(cfg)?,
    };
    eprintln!("λ_F = {} ({:.1?})", lab.params.lambda.mid_digits(30), t.elapsed());

    let mut checks = Vec::new();
    for name in cli.command.suites() {
        let t = Instant::now();
        let out = run_suite(&lab, name).with_context(|| format!("suite {name}"))?;
        out.write(&dir)?;
        for c in &out.checks {
            let mark = if c.pass { "PASS" } else { "FAIL" };
            if c.detail.is_empty() {
                println!("{mark} [{}] {}", c.suite, c.name);
            } else {
                println!("{mark} [{}] {}: {}", c.suite, c.name, c.detail);
            }
        }
        eprintln!("  {name} done in {:.1?}", t.elapsed());
        checks.extend(out.checks);
    }
    if matches!(cli.command, Command::All) {
        write_summary(&lab, &checks, &dir)?;
    }
    let failed = checks.iter().filter(|c| !c.pass).count();
    println!("{} checks, {failed} failed; reports in {}", checks.len(), dir.display());
    Ok(failed == 0)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
