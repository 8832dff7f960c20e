use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use log::info;

use mapf_lra::batch::{run_batch, write_csv, BatchOptions, Isolation};
use mapf_lra::io::write_json;
use mapf_lra::movingai::ingest_movingai;
use mapf_lra::planner::{EXIT_ERROR, EXIT_INFEASIBLE, EXIT_SOLVED, EXIT_TIMEOUT};
use mapf_lra::rational::default_eps;
use mapf_lra::render::render_svg;
use mapf_lra::{
    gen_bottleneck, gen_empty, read_instance, read_plan, solve, validate, write_instance, write_plan, BenchmarkSpec,
    CostKind, Instance, PlanError, Rational, SolveConfig,
};

#[derive(Parser)]
#[command(name = "mapf-lra", version, about = "Continuous-time multi-agent path finding via linear real arithmetic")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve an instance file.
    Solve {
        instance: PathBuf,
        #[command(flatten)]
        solver: SolverArgs,
        /// Time budget in seconds.
        #[arg(long)]
        timeout: Option<f64>,
        /// Plan output path; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Statistics output path, written even on timeout.
        #[arg(long)]
        stats: Option<PathBuf>,
    },
    /// Check a plan against an instance with exact arithmetic.
    Validate { instance: PathBuf, plan: PathBuf },
    /// Generate a benchmark instance.
    #[command(subcommand)]
    Gen(GenCommand),
    /// Convert external benchmark formats.
    #[command(subcommand)]
    Ingest(IngestCommand),
    /// Solve a list of benchmark specs at several timeouts and write CSV.
    Bench {
        /// JSON array of benchmark specs.
        #[arg(long)]
        spec: PathBuf,
        /// Comma-separated timeouts in seconds.
        #[arg(long, value_delimiter = ',', default_value = "30")]
        timeouts: Vec<f64>,
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        /// Run solves inside this process instead of one worker process each.
        #[arg(long)]
        in_process: bool,
        #[command(flatten)]
        solver: SolverArgs,
        /// CSV output path; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Draw a plan as a static SVG.
    Render {
        instance: PathBuf,
        plan: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Number of time ticks per agent.
        #[arg(long, default_value_t = 10)]
        samples: usize,
    },
}

#[derive(Args, Clone)]
struct SolverArgs {
    /// soc, makespan or power.
    #[arg(long, default_value = "soc")]
    cost: CostKind,
    #[arg(long, default_value = "1", value_parser = parse_rational)]
    delta: Rational,
    #[arg(long = "bisect-c", default_value = "1/2", value_parser = parse_rational)]
    bisect_c: Rational,
    /// Rounding tolerance for clause bounds; 2^-20 when omitted.
    #[arg(long, value_parser = parse_rational)]
    eps: Option<Rational>,
    /// Skip the vertex ordering hints.
    #[arg(long)]
    no_hints: bool,
}

impl SolverArgs {
    fn config(&self, timeout: Option<f64>) -> Result<SolveConfig> {
        let mut config = SolveConfig {
            cost_kind: self.cost,
            delta: self.delta.clone(),
            bisect_c: self.bisect_c.clone(),
            eps: self.eps.clone().unwrap_or_else(default_eps),
            hints: !self.no_hints,
            ..SolveConfig::default()
        };
        if let Some(t) = timeout {
            config.timeout = Some(seconds(t)?);
        }
        Ok(config)
    }
}

#[derive(Subcommand)]
enum GenCommand {
    /// Square grid room with a 2^n neighborhood.
    Empty {
        #[arg(long)]
        size: usize,
        #[arg(long, default_value_t = 2)]
        n: u32,
        #[arg(long)]
        k: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "1/2", value_parser = parse_rational)]
        radius: Rational,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Star through one transfer vertex.
    Bottleneck {
        #[arg(long)]
        k: usize,
        /// Circle radius.
        #[arg(long = "big-r", default_value = "10", value_parser = parse_rational)]
        big_r: Rational,
        #[arg(long, default_value = "1/2", value_parser = parse_rational)]
        radius: Rational,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum IngestCommand {
    /// Moving AI map and scenario pair.
    Movingai {
        #[arg(long)]
        map: PathBuf,
        #[arg(long)]
        scen: PathBuf,
        #[arg(long, default_value_t = 3)]
        n: u32,
        #[arg(long)]
        k: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn parse_rational(s: &str) -> Result<Rational, String> {
    s.parse::<Rational>().map_err(|e| format!("{e}"))
}

fn seconds(t: f64) -> Result<Duration> {
    Duration::try_from_secs_f64(t).with_context(|| format!("invalid timeout {t}"))
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            std::io::stdout().write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

fn emit_instance(inst: &Instance, out: Option<&Path>) -> Result<()> {
    match out {
        Some(p) => write_instance(p, inst).with_context(|| format!("writing {}", p.display())),
        None => emit(None, &(mapf_lra::io::instance_to_json(inst) + "\n")),
    }
}

fn run_solve(
    instance: &Path,
    solver: &SolverArgs,
    timeout: Option<f64>,
    out: Option<&Path>,
    stats_path: Option<&Path>,
) -> Result<i32> {
    let inst = read_instance(instance).with_context(|| format!("reading {}", instance.display()))?;
    let config = solver.config(timeout)?;
    info!("solving {} ({} agents)", inst.name(), inst.num_agents());
    match solve(&inst, &config) {
        Ok(sol) => {
            let stats = serde_json::to_value(&sol.stats)?;
            if let Some(p) = stats_path {
                write_json(p, &stats)?;
            }
            match out {
                Some(p) => write_plan(p, &sol.plan, Some(stats))?,
                None => emit(None, &(mapf_lra::io::plan_to_json(&sol.plan, Some(stats)) + "\n"))?,
            }
            eprintln!(
                "{}: cost {} ({:.6}), steps {}, ratio {:.4}",
                if sol.complete { "solved" } else { "incomplete" },
                sol.plan.cost,
                sol.plan.cost.to_f64(),
                sol.plan.steps,
                sol.stats.ratio_f64.unwrap_or(f64::NAN)
            );
            Ok(sol.exit_code())
        }
        Err(e) => {
            if let (Some(p), PlanError::Timeout(stats)) = (stats_path, &e) {
                write_json(p, stats.as_ref())?;
            }
            eprintln!("{e}");
            Ok(e.exit_code())
        }
    }
}

fn run_validate(instance: &Path, plan: &Path) -> Result<i32> {
    let inst = read_instance(instance).with_context(|| format!("reading {}", instance.display()))?;
    let plan = read_plan(plan).with_context(|| format!("reading {}", plan.display()))?;
    let report = validate(&inst, &plan);
    println!("{}", serde_json::to_string_pretty(&report)?);
    Ok(if report.valid { EXIT_SOLVED } else { EXIT_INFEASIBLE })
}

fn run_bench(
    spec: &Path,
    timeouts: &[f64],
    jobs: usize,
    in_process: bool,
    solver: &SolverArgs,
    out: Option<&Path>,
) -> Result<i32> {
    let text = fs::read_to_string(spec).with_context(|| format!("reading {}", spec.display()))?;
    let specs: Vec<BenchmarkSpec> = serde_json::from_str(&text).with_context(|| format!("parsing {}", spec.display()))?;
    if timeouts.is_empty() {
        bail!("at least one timeout is required");
    }
    let isolation = if in_process {
        Isolation::InProcess
    } else {
        Isolation::Subprocess { exe: std::env::current_exe().context("locating own executable")? }
    };
    let opts = BatchOptions {
        config: solver.config(None)?,
        timeouts: timeouts.iter().map(|&t| seconds(t)).collect::<Result<_>>()?,
        isolation,
        jobs,
    };
    let rows = run_batch(&specs, &opts);
    let mut buf = Vec::new();
    write_csv(&rows, &mut buf)?;
    emit(out, &String::from_utf8(buf)?)?;
    let solved = rows.iter().filter(|r| r.solved).count();
    eprintln!("{solved}/{} rows solved", rows.len());
    Ok(EXIT_SOLVED)
}

fn run(cli: Cli) -> Result<i32> {
    match cli.command {
        Command::Solve { instance, solver, timeout, out, stats } => {
            run_solve(&instance, &solver, timeout, out.as_deref(), stats.as_deref())
        }
        Command::Validate { instance, plan } => run_validate(&instance, &plan),
        Command::Gen(GenCommand::Empty { size, n, k, seed, radius, out }) => {
            emit_instance(&gen_empty(size, n, k, seed, radius)?, out.as_deref())?;
            Ok(EXIT_SOLVED)
        }
        Command::Gen(GenCommand::Bottleneck { k, big_r, radius, out }) => {
            emit_instance(&gen_bottleneck(k, big_r, radius)?, out.as_deref())?;
            Ok(EXIT_SOLVED)
        }
        Command::Ingest(IngestCommand::Movingai { map, scen, n, k, out }) => {
            emit_instance(&ingest_movingai(&map, &scen, n, k)?, out.as_deref())?;
            Ok(EXIT_SOLVED)
        }
        Command::Bench { spec, timeouts, jobs, in_process, solver, out } => {
            run_bench(&spec, &timeouts, jobs, in_process, &solver, out.as_deref())
        }
        Command::Render { instance, plan, out, samples } => {
            let inst = read_instance(&instance).with_context(|| format!("reading {}", instance.display()))?;
            let plan = read_plan(&plan).with_context(|| format!("reading {}", plan.display()))?;
            emit(Some(&out), &render_svg(&inst, &plan, samples))?;
            Ok(EXIT_SOLVED)
        }
    }
}

/// Error chain joined with ": ", skipping causes their parent already quotes.
fn describe(e: &anyhow::Error) -> String {
    let mut out = String::new();
    for cause in e.chain() {
        let msg = cause.to_string();
        if !out.ends_with(&msg) {
            if !out.is_empty() {
                out.push_str(": ");
            }
            out.push_str(&msg);
        }
    }
    out
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_ERROR as u8 } else { EXIT_SOLVED as u8 });
        }
    };
    let code = match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {}", describe(&e));
            EXIT_ERROR
        }
    };
    debug_assert!([EXIT_SOLVED, EXIT_INFEASIBLE, EXIT_TIMEOUT, EXIT_ERROR].contains(&code));
    ExitCode::from(code as u8)
}
