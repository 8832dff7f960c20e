//! Timeout sweeps over benchmark specs with CSV output.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::{Command, Stdio};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::thread;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::gen::BenchmarkSpec;
use crate::io::write_instance;
use crate::planner::{solve, PlanError, SolveConfig, EXIT_INFEASIBLE, EXIT_SOLVED, EXIT_TIMEOUT};

/// How long a worker process may overrun its own budget before it is killed.
const GRACE: Duration = Duration::from_secs(5);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchRow {
    pub instance: String,
    pub agents: Option<usize>,
    pub timeout_secs: f64,
    pub solved: bool,
    pub reason: String,
    pub cost: Option<String>,
    pub cost_f64: Option<f64>,
    pub ratio: Option<f64>,
    pub h_final: Option<usize>,
    pub wall_secs: f64,
}

impl BatchRow {
    fn failed(spec: &BenchmarkSpec, timeout: Duration, reason: String, wall: Duration) -> Self {
        BatchRow {
            instance: spec.label(),
            agents: None,
            timeout_secs: timeout.as_secs_f64(),
            solved: false,
            reason,
            cost: None,
            cost_f64: None,
            ratio: None,
            h_final: None,
            wall_secs: wall.as_secs_f64(),
        }
    }
}

/// Where each solve runs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Isolation {
    InProcess,
    /// Runs `exe solve <instance> ...` per row.
    Subprocess { exe: PathBuf },
}

#[derive(Debug, Clone)]
pub struct BatchOptions {
    pub config: SolveConfig,
    pub timeouts: Vec<Duration>,
    pub isolation: Isolation,
    pub jobs: usize,
}

/// Solves every spec at every timeout; failures become rows, never errors.
pub fn run_batch(specs: &[BenchmarkSpec], opts: &BatchOptions) -> Vec<BatchRow> {
    let work: Vec<(usize, &BenchmarkSpec, Duration)> = specs
        .iter()
        .flat_map(|s| opts.timeouts.iter().map(move |&t| (s, t)))
        .enumerate()
        .map(|(i, (s, t))| (i, s, t))
        .collect();
    let results = Mutex::new(vec![None; work.len()]);
    let next = AtomicUsize::new(0);
    thread::scope(|scope| {
        for _ in 0..opts.jobs.max(1).min(work.len().max(1)) {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                let Some(&(slot, spec, timeout)) = work.get(i) else { break };
                let row = run_one(spec, timeout, opts);
                results.lock().expect("results poisoned")[slot] = Some(row);
            });
        }
    });
    results.into_inner().expect("results poisoned").into_iter().map(|r| r.expect("every row ran")).collect()
}

fn run_one(spec: &BenchmarkSpec, timeout: Duration, opts: &BatchOptions) -> BatchRow {
    let started = Instant::now();
    let inst = match spec.generate() {
        Ok(i) => i,
        Err(e) => return BatchRow::failed(spec, timeout, format!("error: {e}"), started.elapsed()),
    };
    let mut row = match &opts.isolation {
        Isolation::InProcess => in_process(spec, &inst, timeout, &opts.config),
        Isolation::Subprocess { exe } => subprocess(spec, &inst, timeout, &opts.config, exe),
    };
    row.agents = Some(inst.num_agents());
    row.wall_secs = started.elapsed().as_secs_f64();
    row
}

fn in_process(spec: &BenchmarkSpec, inst: &crate::model::Instance, timeout: Duration, config: &SolveConfig) -> BatchRow {
    let started = Instant::now();
    let config = SolveConfig { timeout: Some(timeout), ..config.clone() };
    match solve(inst, &config) {
        Ok(sol) => BatchRow {
            instance: spec.label(),
            agents: None,
            timeout_secs: timeout.as_secs_f64(),
            solved: sol.complete,
            reason: if sol.complete { "solved" } else { "incomplete" }.to_string(),
            cost_f64: Some(sol.plan.cost.to_f64()),
            cost: Some(sol.plan.cost.to_string()),
            ratio: sol.stats.ratio_f64,
            h_final: Some(sol.stats.h_final),
            wall_secs: started.elapsed().as_secs_f64(),
        },
        Err(e) => BatchRow::failed(spec, timeout, reason_for(&e), started.elapsed()),
    }
}

fn reason_for(e: &PlanError) -> String {
    match e {
        PlanError::Timeout(_) => "timeout".into(),
        PlanError::Infeasible(_) | PlanError::StepLimit(_) => "infeasible".into(),
        other => format!("error: {other}"),
    }
}

fn subprocess(
    spec: &BenchmarkSpec,
    inst: &crate::model::Instance,
    timeout: Duration,
    config: &SolveConfig,
    exe: &Path,
) -> BatchRow {
    let started = Instant::now();
    let fail = |reason: String| BatchRow::failed(spec, timeout, reason, started.elapsed());
    let dir = match tempfile::tempdir() {
        Ok(d) => d,
        Err(e) => return fail(format!("error: {e}")),
    };
    let inst_path = dir.path().join("instance.json");
    let stats_path = dir.path().join("stats.json");
    if let Err(e) = write_instance(&inst_path, inst) {
        return fail(format!("error: {e}"));
    }
    let mut cmd = Command::new(exe);
    cmd.arg("solve")
        .arg(&inst_path)
        .args(["--cost", &config.cost_kind.to_string()])
        .args(["--delta", &config.delta.to_string()])
        .args(["--bisect-c", &config.bisect_c.to_string()])
        .args(["--eps", &config.eps.to_string()])
        .args(["--timeout", &timeout.as_secs_f64().to_string()])
        .arg("--out")
        .arg(dir.path().join("plan.json"))
        .arg("--stats")
        .arg(&stats_path)
        .stdout(Stdio::null())
        .stderr(Stdio::null());
    if !config.hints {
        cmd.arg("--no-hints");
    }
    let mut child = match cmd.spawn() {
        Ok(c) => c,
        Err(e) => return fail(format!("error: cannot start worker: {e}")),
    };
    let hard_limit = timeout + GRACE;
    let status = loop {
        match child.try_wait() {
            Ok(Some(status)) => break status,
            Ok(None) if started.elapsed() > hard_limit => {
                let _ = child.kill();
                let _ = child.wait();
                return fail("timeout".into());
            }
            Ok(None) => thread::sleep(Duration::from_millis(20)),
            Err(e) => return fail(format!("error: {e}")),
        }
    };
    let stats: Option<serde_json::Value> =
        std::fs::read_to_string(&stats_path).ok().and_then(|t| serde_json::from_str(&t).ok());
    let field = |name: &str| stats.as_ref().and_then(|s| s.get(name)).cloned();
    let cost = field("cost_final").and_then(|v| v.as_str().map(str::to_string));
    let (solved, reason) = match status.code() {
        Some(EXIT_SOLVED) => (true, "solved".to_string()),
        Some(EXIT_TIMEOUT) if cost.is_some() => (false, "incomplete".into()),
        Some(EXIT_TIMEOUT) => (false, "timeout".into()),
        Some(EXIT_INFEASIBLE) => (false, "infeasible".into()),
        Some(code) => (false, format!("error: exit code {code}")),
        None => (false, "error: worker killed by signal".into()),
    };
    BatchRow {
        instance: spec.label(),
        agents: None,
        timeout_secs: timeout.as_secs_f64(),
        solved,
        reason,
        cost_f64: cost.as_deref().and_then(|c| c.parse::<crate::Rational>().ok()).map(|c| c.to_f64()),
        cost,
        ratio: field("ratio_f64").and_then(|v| v.as_f64()),
        h_final: field("h_final").and_then(|v| v.as_u64()).map(|h| h as usize),
        wall_secs: started.elapsed().as_secs_f64(),
    }
}

pub fn write_csv<W: Write>(rows: &[BatchRow], out: W) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(out);
    if rows.is_empty() {
        w.write_record([
            "instance", "agents", "timeout_secs", "solved", "reason", "cost", "cost_f64", "ratio", "h_final", "wall_secs",
        ])?;
    }
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Rational;

    fn opts(timeouts: &[u64]) -> BatchOptions {
        BatchOptions {
            config: SolveConfig::default(),
            timeouts: timeouts.iter().map(|&t| Duration::from_secs(t)).collect(),
            isolation: Isolation::InProcess,
            jobs: 2,
        }
    }

    fn csv_text(rows: &[BatchRow]) -> String {
        let mut buf = Vec::new();
        write_csv(rows, &mut buf).unwrap();
        String::from_utf8(buf).unwrap()
    }

    #[test]
    fn empty_batch_has_header_only() {
        let rows = run_batch(&[], &opts(&[30]));
        assert!(rows.is_empty());
        let text = csv_text(&rows);
        assert_eq!(text.lines().count(), 1);
        assert!(text.starts_with("instance,agents,timeout_secs,solved,reason"));
    }

    #[test]
    fn trivial_instance_is_solved_at_every_timeout() {
        let spec = BenchmarkSpec::Bottleneck { k: 1, big_r: Rational::from_integer(10), r: Rational::new(1, 2) };
        let rows = run_batch(&[spec], &opts(&[5, 30]));
        assert_eq!(rows.len(), 2);
        for r in &rows {
            assert!(r.solved, "{r:?}");
            assert_eq!(r.cost.as_deref(), Some("20"));
            assert_eq!(r.ratio, Some(1.0));
        }
        let text = csv_text(&rows);
        assert_eq!(text.lines().count(), 3);
    }

    #[test]
    fn zero_timeout_reports_timeout() {
        let spec = BenchmarkSpec::Bottleneck { k: 2, big_r: Rational::from_integer(2), r: Rational::new(1, 2) };
        let rows = run_batch(&[spec], &opts(&[0]));
        assert!(!rows[0].solved);
        assert_eq!(rows[0].reason, "timeout");
    }

    #[test]
    fn bad_spec_becomes_an_error_row() {
        let spec = BenchmarkSpec::File { path: "/nonexistent/instance.json".into() };
        let good = BenchmarkSpec::Bottleneck { k: 1, big_r: Rational::from_integer(10), r: Rational::new(1, 2) };
        let rows = run_batch(&[spec, good], &opts(&[5]));
        assert!(rows[0].reason.starts_with("error"));
        assert!(rows[1].solved);
    }

    #[test]
    fn missing_worker_binary_is_captured() {
        let spec = BenchmarkSpec::Bottleneck { k: 1, big_r: Rational::from_integer(10), r: Rational::new(1, 2) };
        let o = BatchOptions { isolation: Isolation::Subprocess { exe: "/nonexistent/mapf-lra".into() }, ..opts(&[5]) };
        let rows = run_batch(&[spec], &o);
        assert!(rows[0].reason.starts_with("error: cannot start worker"));
    }
}
