use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use l1gen::bench::{self, ExperimentConfig, RunOptions};
use l1gen::format::{read_instance, write_instance, write_operator_json, write_trace_csv};
use l1gen::instance::verify_optimality;
use l1gen::operator::Operator;
use l1gen::solution::ConditioningReport;
use l1gen::solvers::{objective, solve, SolverConfig, SolverKind};

/// Generate l1-regularized least-squares instances with known solutions,
/// solve them and benchmark solvers.
#[derive(Parser)]
#[command(name = "l1gen", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate every instance of an experiment without solving.
    Generate {
        #[command(flatten)]
        source: ConfigSource,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run one solver on an instance file.
    Solve {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long)]
        solver: SolverKind,
        /// Stop once f_tau(x) <= T.
        #[arg(long)]
        target: Option<f64>,
        #[arg(long)]
        max_iters: Option<usize>,
        #[arg(long)]
        max_seconds: Option<f64>,
        /// Trace CSV destination (default: stdout).
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Run an experiment: reference solver first, then the rest to its target.
    Bench {
        #[command(flatten)]
        source: ConfigSource,
        #[arg(long)]
        out: PathBuf,
        /// Also write the generated instances.
        #[arg(long)]
        write_instances: bool,
        /// Run solvers of one instance concurrently (timings become advisory).
        #[arg(long)]
        parallel: bool,
    },
    /// Check the optimality certificate of the planted solution.
    Verify {
        #[arg(long)]
        instance: PathBuf,
        /// Tolerance factor; violations must not exceed tol * tau.
        /// Defaults to 1e-8 * kappa(A^T A)^(1/2).
        #[arg(long)]
        tol: Option<f64>,
    },
    /// List the built-in presets, or print one as TOML.
    Presets { name: Option<String> },
}

#[derive(Args)]
#[group(required = true, multiple = false)]
struct ConfigSource {
    /// Built-in experiment name (see `l1gen presets`).
    #[arg(long)]
    preset: Option<String>,
    /// Experiment config in TOML.
    #[arg(long)]
    config: Option<PathBuf>,
}

impl ConfigSource {
    fn load(&self) -> Result<ExperimentConfig> {
        match (&self.preset, &self.config) {
            (Some(name), _) => bench::preset(name).with_context(|| format!("no preset named '{name}'")),
            (None, Some(path)) => {
                let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
                Ok(ExperimentConfig::from_toml(&text)?)
            }
            (None, None) => bail!("either --preset or --config is required"),
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Generate { source, out } => generate(&source.load()?, &out),
        Command::Solve {
            instance,
            solver,
            target,
            max_iters,
            max_seconds,
            trace,
        } => {
            let inst = read_instance(&instance).with_context(|| format!("reading {}", instance.display()))?;
            let mut cfg = SolverConfig::new(solver);
            cfg.target_objective = target;
            if let Some(k) = max_iters {
                cfg.max_iters = k;
            }
            cfg.max_seconds = max_seconds;
            let res = solve(&inst, &cfg)?;
            let t = &res.trace;
            let f_star = objective(&inst, &inst.x_star.to_dense())?;
            match trace {
                Some(path) => write_trace_csv(t, BufWriter::new(File::create(&path)?))?,
                None => write_trace_csv(t, io::stdout().lock())?,
            }
            eprintln!(
                "{}: {} after {} iterations, {:.1} matvecs, {:.3}s; f = {:.10e}, f(x*) = {:.10e}",
                t.solver,
                t.status.name(),
                t.totals.iterations,
                t.totals.matvecs,
                t.elapsed_s(),
                t.final_objective(),
                f_star
            );
            Ok(ExitCode::SUCCESS)
        }
        Command::Bench {
            source,
            out,
            write_instances,
            parallel,
        } => {
            let cfg = source.load()?;
            let output = bench::run_experiment_with(
                &cfg,
                &out,
                RunOptions {
                    write_instances,
                    parallel,
                },
            )?;
            let mut w = io::stdout().lock();
            writeln!(
                w,
                "{:<48} {:<8} {:<15} {:>12} {:>12}",
                "instance", "solver", "status", "matvecs", "seconds"
            )?;
            for r in &output.summary.rows {
                writeln!(
                    w,
                    "{:<48} {:<8} {:<15} {:>12.0} {:>12.3}",
                    r.instance, r.solver, r.status, r.matvecs, r.elapsed_s
                )?;
            }
            writeln!(w, "summary: {}", out.join("summary.csv").display())?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Verify { instance, tol } => {
            let inst = read_instance(&instance).with_context(|| format!("reading {}", instance.display()))?;
            let tol = tol.unwrap_or_else(|| inst.certificate_tolerance());
            let rep = verify_optimality(&inst, tol)?;
            println!("instance:            {}", instance.display());
            println!(
                "size:                {} x {}, nnz(x*) = {}, tau = {}",
                inst.m(),
                inst.n(),
                inst.x_star.nnz(),
                inst.tau
            );
            let cond = match (&inst.op, inst.provenance.conditioning) {
                (_, Some(c)) => Some(c),
                (Operator::Factored(spec), None) => ConditioningReport::compute(spec, &inst.x_star, 0.1).ok(),
                (Operator::Block(_), None) => None,
            };
            if let Some(c) = cond {
                println!("kappa(A^T A):        {:.6e}", c.kappa_ata);
                println!("kappa_{}(x*):       {:.6e}", c.rho, c.kappa_rho);
            }
            println!("support residual:    {:.3e}", rep.support_residual);
            println!("off-support excess:  {:.3e}", rep.off_support_excess);
            println!("threshold (tol*tau): {:.3e}", rep.threshold);
            println!("certificate:         {}", if rep.passed { "PASS" } else { "FAIL" });
            Ok(if rep.passed {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            })
        }
        Command::Presets { name } => {
            match name {
                Some(name) => {
                    let p = bench::preset(&name).with_context(|| format!("no preset named '{name}'"))?;
                    print!("{}", p.to_toml()?);
                }
                None => {
                    for p in bench::presets() {
                        println!("{:<22} {}", p.name, p.description);
                    }
                }
            }
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn generate(cfg: &ExperimentConfig, out: &Path) -> Result<ExitCode> {
    cfg.validate()?;
    fs::create_dir_all(out)?;
    for plan in bench::instance_plans(cfg) {
        let inst = bench::build_instance(cfg, &plan)?;
        let id = plan.id();
        write_instance(&inst, out.join(format!("{id}.l1i")))?;
        if let Operator::Factored(spec) = &inst.op {
            write_operator_json(
                spec,
                BufWriter::new(File::create(out.join(format!("{id}.operator.json")))?),
            )?;
        }
        println!("{id}.l1i");
    }
    Ok(ExitCode::SUCCESS)
}
