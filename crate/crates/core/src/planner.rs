//! Minimal-step search with cost bisection and lazily learned conflict clauses.

use std::collections::HashSet;
use std::time::{Duration, Instant};

use rustc_hash::FxHashMap;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::collision::{in_conflict, safe_delay, wait_conflict_window, CollisionError, TimedMotion};
use crate::encoder::{ClauseMM, ClauseWM, EncodeError, Encoder};
use crate::model::{evaluate_cost, opt_preplan, AgentId, CostKind, Instance, ModelError, Plan, PrePlan, StepAction, VertexId};
use crate::rational::{default_eps, Rational};
use crate::smt::{backend_from_env, Backend, BackendStats, SatResult, SmtError, SolverSession};
use crate::validator::validate;

pub const EXIT_SOLVED: i32 = 0;
pub const EXIT_INFEASIBLE: i32 = 1;
pub const EXIT_TIMEOUT: i32 = 2;
pub const EXIT_ERROR: i32 = 3;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SolveConfig {
    pub delta: Rational,
    pub cost_kind: CostKind,
    pub bisect_c: Rational,
    /// Wall-clock budget for the whole solve.
    pub timeout: Option<Duration>,
    pub eps: Rational,
    pub hints: bool,
    pub seed: u64,
    /// Re-evaluate every assertion on each model (slow; for testing).
    pub verify_models: bool,
    /// Give up with `Infeasible` past this many steps.
    pub max_steps: Option<usize>,
}

impl Default for SolveConfig {
    fn default() -> Self {
        SolveConfig {
            delta: Rational::one(),
            cost_kind: CostKind::SumOfCosts,
            bisect_c: Rational::new(1, 2),
            timeout: None,
            eps: default_eps(),
            hints: true,
            seed: 0,
            verify_models: false,
            max_steps: None,
        }
    }
}

impl SolveConfig {
    pub fn with_cost(mut self, kind: CostKind) -> Self {
        self.cost_kind = kind;
        self
    }

    pub fn with_delta(mut self, delta: Rational) -> Self {
        self.delta = delta;
        self
    }

    pub fn with_timeout(mut self, timeout: Duration) -> Self {
        self.timeout = Some(timeout);
        self
    }

    fn check(&self) -> Result<(), PlanError> {
        if !self.delta.is_positive() {
            return Err(PlanError::Config(format!("delta must be positive, got {}", self.delta)));
        }
        if !self.bisect_c.is_positive() || self.bisect_c >= Rational::one() {
            return Err(PlanError::Config(format!("bisect_c must lie in (0, 1), got {}", self.bisect_c)));
        }
        if !self.eps.is_positive() {
            return Err(PlanError::Config(format!("eps must be positive, got {}", self.eps)));
        }
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum PlanError {
    #[error("infeasible instance: {0}")]
    Infeasible(#[from] ModelError),
    #[error("no plan within {0} steps")]
    StepLimit(usize),
    #[error("time budget exhausted before any plan was found")]
    Timeout(Box<SolveStats>),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Smt(#[from] SmtError),
    #[error(transparent)]
    Encode(#[from] EncodeError),
    #[error("internal invariant violated: {0}")]
    Internal(String),
}

impl PlanError {
    pub fn exit_code(&self) -> i32 {
        match self {
            PlanError::Infeasible(_) | PlanError::StepLimit(_) => EXIT_INFEASIBLE,
            PlanError::Timeout(_) => EXIT_TIMEOUT,
            _ => EXIT_ERROR,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Conflict {
    MoveMove {
        a: AgentId,
        b: AgentId,
        step_a: usize,
        step_b: usize,
        edge_a: (VertexId, VertexId),
        edge_b: (VertexId, VertexId),
        start_a: Rational,
        start_b: Rational,
    },
    /// Agent `a` is at `vertex` over `[from, until]` (`until = None`: forever).
    WaitMove {
        a: AgentId,
        vertex: VertexId,
        step_a: usize,
        from: Rational,
        until: Option<Rational>,
        b: AgentId,
        step_b: usize,
        edge_b: (VertexId, VertexId),
        start_b: Rational,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum LearnedClause {
    MoveMove(ClauseMM),
    WaitMove(ClauseWM),
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SolveStats {
    pub h0: usize,
    pub h_final: usize,
    pub t_min_initial: Rational,
    pub t_min_final: Rational,
    pub cost_final: Option<Rational>,
    /// `cost_final / t_min_final`.
    pub ratio: Option<Rational>,
    pub ratio_f64: Option<f64>,
    pub sat_calls: u64,
    pub clauses_mm: u64,
    pub clauses_wm: u64,
    /// Clauses from alternative edges of the same source vertex.
    pub clauses_variant: u64,
    pub conflicts_found: u64,
    pub bisections: u64,
    /// `cost − t_min` after each bisection step.
    pub gaps: Vec<Rational>,
    pub first_loop_secs: f64,
    pub second_loop_secs: f64,
    pub total_secs: f64,
    /// Time inside `check_sat`.
    pub check_secs: f64,
    /// Time spent on conflict detection and clause geometry.
    pub learn_secs: f64,
    /// Time spent asserting learned clauses.
    pub assert_secs: f64,
    /// Distinct geometric configurations evaluated for clauses.
    pub geometry_evaluations: u64,
    pub timed_out: bool,
    pub backend: String,
    pub backend_stats: BackendStatsRecord,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BackendStatsRecord {
    pub checks: u64,
    pub conflicts: u64,
    pub decisions: u64,
    pub propagations: u64,
    pub theory_conflicts: u64,
    pub pivots: u64,
}

impl From<BackendStats> for BackendStatsRecord {
    fn from(s: BackendStats) -> Self {
        BackendStatsRecord {
            checks: s.checks,
            conflicts: s.conflicts,
            decisions: s.decisions,
            propagations: s.propagations,
            theory_conflicts: s.theory_conflicts,
            pivots: s.pivots,
        }
    }
}

/// Result of a completed or interrupted solve.
#[derive(Debug, Clone)]
pub struct Solution {
    pub plan: Plan,
    pub stats: SolveStats,
    /// False when the budget ran out during cost refinement.
    pub complete: bool,
}

impl Solution {
    pub fn exit_code(&self) -> i32 {
        if self.complete {
            EXIT_SOLVED
        } else {
            EXIT_TIMEOUT
        }
    }
}

struct Piece {
    step: usize,
    motion: TimedMotion,
    edge: (VertexId, VertexId),
}

struct Rest {
    step: usize,
    vertex: VertexId,
    from: Rational,
    until: Option<Rational>,
}

fn moves_of(inst: &Instance, pre: &PrePlan, a: AgentId) -> Vec<Piece> {
    let tl = &pre.timelines[a];
    tl.steps
        .iter()
        .enumerate()
        .filter_map(|(j, s)| match &s.action {
            StepAction::Move { to, duration } => Some(Piece {
                step: j,
                motion: TimedMotion::new(inst.coord(s.vertex).clone(), inst.coord(*to).clone(), duration.clone(), s.depart()),
                edge: (s.vertex, *to),
            }),
            StepAction::Stay => None,
        })
        .collect()
}

fn rests_of(pre: &PrePlan, a: AgentId) -> Vec<Rest> {
    let tl = &pre.timelines[a];
    let mut out: Vec<Rest> = tl
        .steps
        .iter()
        .enumerate()
        .filter(|(_, s)| s.wait.is_positive())
        .map(|(j, s)| Rest { step: j, vertex: s.vertex, from: s.arrive.clone(), until: Some(s.depart()) })
        .collect();
    out.push(Rest { step: tl.steps.len(), vertex: tl.final_vertex, from: tl.final_arrive.clone(), until: None });
    out
}

/// Stationary motion covering the rest, long enough to outlast `horizon`.
fn rest_motion(inst: &Instance, r: &Rest, horizon: &Rational) -> Option<TimedMotion> {
    let end = match &r.until {
        Some(u) => u.clone(),
        None => {
            if horizon <= &r.from {
                return None;
            }
            horizon + Rational::one()
        }
    };
    let d = &end - &r.from;
    d.is_positive().then(|| {
        let p = inst.coord(r.vertex).clone();
        TimedMotion::new(p.clone(), p, d, r.from.clone())
    })
}

fn radius(inst: &Instance, a: AgentId) -> &Rational {
    &inst.agents()[a].radius
}

/// All move-move and wait-move conflicts of a raw pre-plan.
pub fn detect_conflicts(inst: &Instance, pre: &PrePlan) -> Vec<Conflict> {
    let k = pre.timelines.len();
    let moves: Vec<Vec<Piece>> = (0..k).map(|a| moves_of(inst, pre, a)).collect();
    let rests: Vec<Vec<Rest>> = (0..k).map(|a| rests_of(pre, a)).collect();
    let mut out = Vec::new();
    for a in 0..k {
        for b in 0..k {
            if a == b {
                continue;
            }
            let (ra, rb) = (radius(inst, a), radius(inst, b));
            if a < b {
                for pa in &moves[a] {
                    for pb in &moves[b] {
                        if in_conflict(&pa.motion, &pb.motion, ra, rb) {
                            out.push(Conflict::MoveMove {
                                a,
                                b,
                                step_a: pa.step,
                                step_b: pb.step,
                                edge_a: pa.edge,
                                edge_b: pb.edge,
                                start_a: pa.motion.start.clone(),
                                start_b: pb.motion.start.clone(),
                            });
                        }
                    }
                }
            }
            for r in &rests[a] {
                for pb in &moves[b] {
                    let Some(wait) = rest_motion(inst, r, &pb.motion.end()) else { continue };
                    if in_conflict(&wait, &pb.motion, ra, rb) {
                        out.push(Conflict::WaitMove {
                            a,
                            vertex: r.vertex,
                            step_a: r.step,
                            from: r.from.clone(),
                            until: r.until.clone(),
                            b,
                            step_b: pb.step,
                            edge_b: pb.edge,
                            start_b: pb.motion.start.clone(),
                        });
                    }
                }
            }
        }
    }
    out
}

type Edge = (VertexId, VertexId);
type MmKey = (Rational, Rational, Edge, Edge, Rational);
type WmKey = (Rational, Rational, VertexId, Rational, Option<Rational>, Edge, Rational);

/// Memoized clause bounds; entries depend only on radii, edges and start times.
#[derive(Default)]
pub struct GeometryCache {
    mm: FxHashMap<MmKey, Option<(Rational, Rational)>>,
    wm: FxHashMap<WmKey, Option<(Rational, Rational)>>,
}

impl GeometryCache {
    pub fn len(&self) -> usize {
        self.mm.len() + self.wm.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Clause bounds for `a` starting `offset` after `b`, relative to `b`'s start.
fn mm_bounds(
    inst: &Instance,
    (ra, rb): (&Rational, &Rational),
    edge_a: Edge,
    edge_b: Edge,
    offset: &Rational,
    eps: &Rational,
) -> Result<Option<(Rational, Rational)>, CollisionError> {
    let motion = |e: Edge, start: Rational| {
        let d = inst.edge(e.0, e.1).expect("clause edges exist").duration.clone();
        TimedMotion::new(inst.coord(e.0).clone(), inst.coord(e.1).clone(), d, start)
    };
    let ma = motion(edge_a, offset.clone());
    let mb = motion(edge_b, Rational::zero());
    if !in_conflict(&ma, &mb, ra, rb) {
        return Ok(None);
    }
    let safe_ab = safe_delay(&ma, &mb, ra, rb, eps)?;
    let safe_ba = safe_delay(&mb, &ma, rb, ra, eps)?;
    Ok(Some((offset - safe_ba, safe_ab)))
}

fn mm_clause(
    inst: &Instance,
    conflict: (AgentId, usize, Edge, &Rational),
    other: (AgentId, usize, Edge, &Rational),
    eps: &Rational,
    cache: &mut GeometryCache,
) -> Result<Option<ClauseMM>, CollisionError> {
    let (a, step_a, edge_a, start_a) = conflict;
    let (b, step_b, edge_b, start_b) = other;
    let (ra, rb) = (radius(inst, a), radius(inst, b));
    let offset = start_a - start_b;
    let key = (ra.clone(), rb.clone(), edge_a, edge_b, offset);
    let bounds = match cache.mm.get(&key) {
        Some(hit) => hit.clone(),
        None => {
            let fresh = mm_bounds(inst, (ra, rb), edge_a, edge_b, &key.4, eps)?;
            cache.mm.insert(key, fresh.clone());
            fresh
        }
    };
    Ok(bounds.map(|(lower, upper)| ClauseMM { a, b, step_a, step_b, edge_a, edge_b, lower, upper }))
}

fn wm_bounds(
    inst: &Instance,
    (ra, rb): (&Rational, &Rational),
    rest: &Rest,
    (edge_b, start_b): (Edge, &Rational),
    eps: &Rational,
) -> Result<Option<(Rational, Rational)>, CollisionError> {
    let d = inst.edge(edge_b.0, edge_b.1).expect("clause edges exist").duration.clone();
    let mb = TimedMotion::new(inst.coord(edge_b.0).clone(), inst.coord(edge_b.1).clone(), d, start_b.clone());
    let Some(wait) = rest_motion(inst, rest, &mb.end()) else { return Ok(None) };
    if !in_conflict(&wait, &mb, ra, rb) {
        return Ok(None);
    }
    let w = wait_conflict_window(inst.coord(rest.vertex), ra, &mb, rb, eps)?;
    Ok(Some((w.lower - start_b, w.upper - start_b)))
}

fn wm_clause(
    inst: &Instance,
    rest: (AgentId, VertexId, usize, &Rational, Option<&Rational>),
    mover: (AgentId, usize, Edge, &Rational),
    eps: &Rational,
    cache: &mut GeometryCache,
) -> Result<Option<ClauseWM>, CollisionError> {
    let (a, vertex, step_a, from, until) = rest;
    let (b, step_b, edge_b, start_b) = mover;
    let (ra, rb) = (radius(inst, a), radius(inst, b));
    let key = (ra.clone(), rb.clone(), vertex, from.clone(), until.cloned(), edge_b, start_b.clone());
    let bounds = match cache.wm.get(&key) {
        Some(hit) => hit.clone(),
        None => {
            let r = Rest { step: step_a, vertex, from: from.clone(), until: until.cloned() };
            let fresh = wm_bounds(inst, (ra, rb), &r, (edge_b, start_b), eps)?;
            cache.wm.insert(key, fresh.clone());
            fresh
        }
    };
    Ok(bounds.map(|(lower, upper)| ClauseWM {
        a,
        vertex,
        step_a,
        b,
        step_b,
        edge_b,
        lower,
        upper,
        terminal: until.is_none(),
    }))
}

/// Clauses excluding the conflict and its same-source alternatives.
/// The first clause always covers the conflict itself.
pub fn generalize(inst: &Instance, conflict: &Conflict, eps: &Rational) -> Result<Vec<LearnedClause>, PlanError> {
    generalize_cached(inst, conflict, eps, &mut GeometryCache::default())
}

pub fn generalize_cached(
    inst: &Instance,
    conflict: &Conflict,
    eps: &Rational,
    cache: &mut GeometryCache,
) -> Result<Vec<LearnedClause>, PlanError> {
    let lost = |e: CollisionError| PlanError::Internal(format!("conflict could not be generalized: {e}"));
    let mut out = Vec::new();
    match conflict {
        Conflict::MoveMove { a, b, step_a, step_b, edge_a, edge_b, start_a, start_b } => {
            let main = mm_clause(inst, (*a, *step_a, *edge_a, start_a), (*b, *step_b, *edge_b, start_b), eps, cache)
                .map_err(lost)?
                .ok_or_else(|| PlanError::Internal("reported move conflict does not reproduce".into()))?;
            out.push(LearnedClause::MoveMove(main));
            for e in inst.out_edges(edge_a.0).filter(|e| e.to != edge_a.1) {
                let alt = (*a, *step_a, (e.from, e.to), start_a);
                if let Some(c) = mm_clause(inst, alt, (*b, *step_b, *edge_b, start_b), eps, cache).map_err(lost)? {
                    out.push(LearnedClause::MoveMove(c));
                }
            }
            for e in inst.out_edges(edge_b.0).filter(|e| e.to != edge_b.1) {
                let alt = (*b, *step_b, (e.from, e.to), start_b);
                if let Some(c) = mm_clause(inst, (*a, *step_a, *edge_a, start_a), alt, eps, cache).map_err(lost)? {
                    out.push(LearnedClause::MoveMove(c));
                }
            }
        }
        Conflict::WaitMove { a, vertex, step_a, from, until, b, step_b, edge_b, start_b } => {
            let rest = (*a, *vertex, *step_a, from, until.as_ref());
            let main = wm_clause(inst, rest, (*b, *step_b, *edge_b, start_b), eps, cache)
                .map_err(lost)?
                .ok_or_else(|| PlanError::Internal("reported wait conflict does not reproduce".into()))?;
            out.push(LearnedClause::WaitMove(main));
            for e in inst.out_edges(edge_b.0).filter(|e| e.to != edge_b.1) {
                if let Some(c) = wm_clause(inst, rest, (*b, *step_b, (e.from, e.to), start_b), eps, cache).map_err(lost)? {
                    out.push(LearnedClause::WaitMove(c));
                }
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FindOutcome {
    /// Collision-free raw pre-plan (goal stays and padding kept).
    Plan(PrePlan),
    /// No plan with this step count in the cost window.
    NoPlan,
    /// Budget exhausted; nothing can be concluded.
    Unknown,
}

/// Solver state carried across planning queries: encoder plus learned clauses.
pub struct Search<'a> {
    pub enc: Encoder<'a>,
    config: SolveConfig,
    learned: HashSet<LearnedClause>,
    geometry: GeometryCache,
    deadline: Option<Instant>,
    pub stats: SolveStats,
}

impl<'a> Search<'a> {
    pub fn new(inst: &'a Instance, config: SolveConfig, backend: Box<dyn Backend>, h0: usize) -> Result<Self, PlanError> {
        config.check()?;
        let deadline = config.timeout.map(|t| Instant::now() + t);
        let session = SolverSession::new(backend).with_model_verification(config.verify_models);
        let mut enc = Encoder::new(inst, session, h0)?;
        if config.hints {
            enc.apply_hints();
        }
        let stats = SolveStats { h0, backend: enc.session().backend_name().to_string(), ..SolveStats::default() };
        Ok(Search { enc, config, learned: HashSet::new(), geometry: GeometryCache::default(), deadline, stats })
    }

    pub fn deadline(&self) -> Option<Instant> {
        self.deadline
    }

    pub fn learned(&self) -> &HashSet<LearnedClause> {
        &self.learned
    }

    fn expired(&self) -> bool {
        self.deadline.is_some_and(|d| Instant::now() >= d)
    }

    /// Grows the unrolling to `h` steps (only upward).
    pub fn set_steps(&mut self, h: usize) -> Result<(), PlanError> {
        if h < self.enc.h() {
            return Err(PlanError::Internal(format!("cannot shrink from {} to {h} steps", self.enc.h())));
        }
        if h > self.enc.h() && self.enc.horizon_active() {
            self.enc.pop_horizon()?;
        }
        while self.enc.h() < h {
            self.enc.extend_to(self.enc.h() + 1)?;
        }
        Ok(())
    }

    /// Finds a collision-free plan with `h` steps and cost in `[lower, upper]`,
    /// learning clauses for every conflict met on the way.
    pub fn findplan(&mut self, h: usize, lower: &Rational, upper: Option<&Rational>) -> Result<FindOutcome, PlanError> {
        self.set_steps(h)?;
        self.enc.assert_h_scope(self.config.cost_kind, lower, upper)?;
        let inst = self.enc.instance();
        loop {
            if self.expired() {
                return Ok(FindOutcome::Unknown);
            }
            self.stats.sat_calls += 1;
            let clock = Instant::now();
            let result = self.enc.session_mut().check_sat(self.deadline)?;
            self.stats.check_secs += clock.elapsed().as_secs_f64();
            let model = match result {
                SatResult::Unsat => return Ok(FindOutcome::NoPlan),
                SatResult::Unknown => return Ok(FindOutcome::Unknown),
                SatResult::Sat(m) => m,
            };
            let clock = Instant::now();
            let raw = self.enc.extract_raw(&model)?;
            let conflicts = detect_conflicts(inst, &raw);
            if conflicts.is_empty() {
                self.stats.learn_secs += clock.elapsed().as_secs_f64();
                return Ok(FindOutcome::Plan(raw));
            }
            self.stats.conflicts_found += conflicts.len() as u64;
            let mut batches = Vec::with_capacity(conflicts.len());
            for c in &conflicts {
                batches.push(generalize_cached(inst, c, &self.config.eps, &mut self.geometry)?);
            }
            self.stats.learn_secs += clock.elapsed().as_secs_f64();
            let clock = Instant::now();
            let mut progressed = false;
            for batch in batches {
                for (i, clause) in batch.into_iter().enumerate() {
                    if !self.learned.insert(clause.clone()) {
                        continue;
                    }
                    progressed |= i == 0;
                    if i > 0 {
                        self.stats.clauses_variant += 1;
                    }
                    match &clause {
                        LearnedClause::MoveMove(mm) => {
                            self.stats.clauses_mm += 1;
                            self.enc.assert_conflict_mm(mm)?;
                        }
                        LearnedClause::WaitMove(wm) => {
                            self.stats.clauses_wm += 1;
                            self.enc.assert_conflict_wm(wm)?;
                        }
                    }
                }
            }
            self.stats.assert_secs += clock.elapsed().as_secs_f64();
            if !progressed {
                return Err(PlanError::Internal("model repeats a conflict that is already excluded".into()));
            }
        }
    }

    fn finish_stats(&mut self) {
        self.stats.geometry_evaluations = self.geometry.len() as u64;
        self.stats.backend_stats = self.enc.session().backend_stats().into();
    }
}

fn trimmed(raw: &PrePlan, kind: CostKind) -> PrePlan {
    let mut p = raw.normalized(kind);
    p.steps = raw.steps;
    p
}

fn ratio(cost: &Rational, t_min: &Rational) -> Rational {
    if t_min.is_positive() {
        cost / t_min
    } else {
        Rational::one()
    }
}

/// Certifies a trimmed pre-plan with the exact validator.
fn certify(inst: &Instance, pre: PrePlan) -> Result<Plan, PlanError> {
    let mut plan = Plan::uncertified(pre);
    let report = validate(inst, &plan);
    if !report.valid {
        return Err(PlanError::Internal(format!(
            "validator rejected the plan: {:?} {:?}",
            report.structural, report.violations
        )));
    }
    plan.certified = true;
    Ok(plan)
}

pub fn solve(inst: &Instance, config: &SolveConfig) -> Result<Solution, PlanError> {
    solve_with_backend(inst, config, backend_from_env()?)
}

/// Minimal-step search followed by bisection on the cost until the plan is
/// within `1 + δ` of the lower bound.
pub fn solve_with_backend(inst: &Instance, config: &SolveConfig, backend: Box<dyn Backend>) -> Result<Solution, PlanError> {
    let started = Instant::now();
    config.check()?;
    inst.check_disk_overlaps()?;
    let kind = config.cost_kind;
    let (_, opt_cost, h0) = opt_preplan(inst, kind)?;
    let mut search = Search::new(inst, config.clone(), backend, h0)?;
    search.stats.t_min_initial = opt_cost.clone();
    let mut t_min = opt_cost;
    let mut h = h0;

    let raw = loop {
        match search.findplan(h, &t_min, None)? {
            FindOutcome::Plan(p) => break p,
            FindOutcome::NoPlan => {
                h += 1;
                if config.max_steps.is_some_and(|m| h > m) {
                    return Err(PlanError::StepLimit(h - 1));
                }
            }
            FindOutcome::Unknown => {
                search.stats.h_final = h;
                search.stats.t_min_final = t_min;
                search.stats.timed_out = true;
                search.stats.first_loop_secs = started.elapsed().as_secs_f64();
                search.stats.total_secs = search.stats.first_loop_secs;
                search.finish_stats();
                return Err(PlanError::Timeout(Box::new(search.stats)));
            }
        }
    };
    search.stats.first_loop_secs = started.elapsed().as_secs_f64();
    let second = Instant::now();

    let mut best = trimmed(&raw, kind);
    let mut cost = best.cost.clone();
    let bound = |t: &Rational| (Rational::one() + &config.delta) * t;
    let c = &config.bisect_c;
    let mut complete = true;
    while cost > bound(&t_min) {
        let t_hat = (Rational::one() - c) * &t_min + c * &cost;
        search.stats.bisections += 1;
        match search.findplan(h, &t_min, Some(&t_hat))? {
            FindOutcome::Plan(p) => {
                best = trimmed(&p, kind);
                cost = best.cost.clone();
            }
            FindOutcome::NoPlan => t_min = t_hat,
            FindOutcome::Unknown => {
                complete = false;
                break;
            }
        }
        search.stats.gaps.push(&cost - &t_min);
    }

    let plan = certify(inst, best)?;
    let r = ratio(&plan.cost, &t_min);
    search.stats.h_final = h;
    search.stats.t_min_final = t_min;
    search.stats.cost_final = Some(plan.cost.clone());
    search.stats.ratio_f64 = Some(r.to_f64());
    search.stats.ratio = Some(r);
    search.stats.timed_out = !complete;
    search.stats.second_loop_secs = second.elapsed().as_secs_f64();
    search.stats.total_secs = started.elapsed().as_secs_f64();
    search.finish_stats();
    Ok(Solution { plan, stats: search.stats, complete })
}

/// Fresh single query: is there a collision-free plan with exactly `h` steps
/// and cost in `[lower, upper]`?
pub fn findplan_fresh(
    inst: &Instance,
    config: &SolveConfig,
    backend: Box<dyn Backend>,
    h: usize,
    lower: &Rational,
    upper: Option<&Rational>,
) -> Result<FindOutcome, PlanError> {
    let mut search = Search::new(inst, config.clone(), backend, h)?;
    search.findplan(h, lower, upper)
}

/// Whether the cost of a returned plan is consistent with the bound:
/// `cost ≤ (1 + δ)·t_min`.
pub fn within_delta(stats: &SolveStats, delta: &Rational) -> bool {
    match &stats.cost_final {
        Some(c) => c <= &((Rational::one() + delta) * &stats.t_min_final),
        None => false,
    }
}

/// Independent re-evaluation of a plan's cost.
pub fn plan_cost(plan: &Plan, kind: CostKind) -> Rational {
    evaluate_cost(&plan.as_preplan(), kind)
}
