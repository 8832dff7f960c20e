//! Unrolled formula over a [`SolverSession`]: one-hot vertex Booleans, time
//! reals, transitions, the cost variable and the learned conflict clauses.
//!
//! Scopes: depth 0 holds transitions, the time chain and move/wait clauses;
//! depth 1 holds goals, the cost definition and terminal-wait clauses for the
//! current step count; depth 2 holds the cost window.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{
    goal_table, hops_from, AgentId, AgentTimeline, CostKind, Instance, PrePlan, StepAction, TimelineStep,
    VertexId,
};
use crate::rational::Rational;
use crate::smt::{BoolVar, LinExpr, Model, RealVar, SmtError, SolverSession, Term};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EncodeError {
    #[error("scope misuse: {0}")]
    ScopeMisuse(String),
    #[error("degenerate clause: lower bound {0} is not below upper bound {1}")]
    DegenerateClause(Rational, Rational),
    #[error("malformed model: {0}")]
    MalformedModel(String),
    #[error(transparent)]
    Smt(#[from] SmtError),
}

const HORIZON_DEPTH: usize = 1;

/// Solver variables for every agent and unrolled step.
#[derive(Debug, Clone)]
pub struct StepVars {
    /// `vertex[a][j][v]` is true iff agent `a` is at `v` at step `j`.
    pub vertex: Vec<Vec<Vec<BoolVar>>>,
    /// Arrival times `T[a][j]`, `j ∈ 0..=h`.
    pub time: Vec<Vec<RealVar>>,
    /// Waits `w[a][j]`, `j ∈ 0..h`.
    pub wait: Vec<Vec<RealVar>>,
    /// Move durations `m[a][j]`, `j ∈ 0..h`.
    pub mv: Vec<Vec<RealVar>>,
    pub lambda: RealVar,
    pub h: usize,
}

impl StepVars {
    /// `T + w`: start of the move at step `j`.
    pub fn depart(&self, a: AgentId, j: usize) -> LinExpr {
        LinExpr::var(self.time[a][j]) + self.wait[a][j]
    }

    pub fn num_bools(&self) -> usize {
        self.vertex.iter().flatten().map(Vec::len).sum()
    }

    pub fn num_reals(&self) -> usize {
        self.time.iter().map(Vec::len).sum::<usize>()
            + self.wait.iter().map(Vec::len).sum::<usize>()
            + self.mv.iter().map(Vec::len).sum::<usize>()
            + 1
    }
}

/// Forbids two concrete moves from starting with `lower < τ_a − τ_b < upper`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ClauseMM {
    pub a: AgentId,
    pub b: AgentId,
    pub step_a: usize,
    pub step_b: usize,
    pub edge_a: (VertexId, VertexId),
    pub edge_b: (VertexId, VertexId),
    pub lower: Rational,
    pub upper: Rational,
}

/// Forbids agent `a` waiting at `vertex` while `b`'s move passes by. The window
/// is relative to the start of `b`'s move.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ClauseWM {
    pub a: AgentId,
    pub vertex: VertexId,
    pub step_a: usize,
    pub b: AgentId,
    pub step_b: usize,
    pub edge_b: (VertexId, VertexId),
    pub lower: Rational,
    pub upper: Rational,
    /// `a` rests at `vertex` forever from `T_a^h`; `step_a` follows the horizon.
    pub terminal: bool,
}

pub struct Encoder<'a> {
    inst: &'a Instance,
    session: SolverSession,
    vars: StepVars,
    reach_from_start: Vec<Vec<Option<usize>>>,
    hops_to_goal: Vec<Vec<Option<usize>>>,
    /// Vertices of each agent sorted by remaining duration to its goal.
    goal_rank: Vec<Vec<usize>>,
    horizon: Option<CostKind>,
    window: bool,
    terminal: Vec<ClauseWM>,
    hints: bool,
}

impl<'a> Encoder<'a> {
    /// Registers step-0 variables and the permanent layer for `h0` steps.
    pub fn new(inst: &'a Instance, session: SolverSession, h0: usize) -> Result<Self, EncodeError> {
        let k = inst.num_agents();
        let mut hops_to_goal = Vec::with_capacity(k);
        let mut goal_rank = Vec::with_capacity(k);
        for a in inst.agents() {
            let table = goal_table(inst, a.goal);
            let mut order: Vec<usize> = (0..inst.num_vertices()).collect();
            order.sort_by(|&u, &v| {
                let (eu, ev) = (table.get(u), table.get(v));
                (eu.duration.is_none(), &eu.duration, eu.min_hops, u).cmp(&(ev.duration.is_none(), &ev.duration, ev.min_hops, v))
            });
            let mut rank = vec![0; inst.num_vertices()];
            for (i, v) in order.into_iter().enumerate() {
                rank[v] = i;
            }
            goal_rank.push(rank);
            hops_to_goal.push(table.entries.iter().map(|e| e.min_hops).collect());
        }
        let mut session = session;
        let lambda = session.new_real("lambda");
        let vars = StepVars {
            vertex: vec![Vec::new(); k],
            time: vec![Vec::new(); k],
            wait: vec![Vec::new(); k],
            mv: vec![Vec::new(); k],
            lambda,
            h: 0,
        };
        let mut enc = Encoder {
            inst,
            session,
            vars,
            reach_from_start: inst.agents().iter().map(|a| hops_from(inst, a.start)).collect(),
            hops_to_goal,
            goal_rank,
            horizon: None,
            window: false,
            terminal: Vec::new(),
            hints: false,
        };
        for a in 0..k {
            let s = inst.agents()[a].start;
            let layer = enc.vertex_layer(a, 0)?;
            enc.session.assert(Term::Bool(layer[s]))?;
            let t0 = enc.session.new_real(format!("T_{a}_0"));
            enc.session.assert(LinExpr::var(t0).equals(Rational::zero()))?;
            enc.vars.vertex[a].push(layer);
            enc.vars.time[a].push(t0);
        }
        while enc.vars.h < h0 {
            enc.extend_to(enc.vars.h + 1)?;
        }
        Ok(enc)
    }

    pub fn instance(&self) -> &'a Instance {
        self.inst
    }

    pub fn h(&self) -> usize {
        self.vars.h
    }

    pub fn vars(&self) -> &StepVars {
        &self.vars
    }

    pub fn session(&self) -> &SolverSession {
        &self.session
    }

    pub fn session_mut(&mut self) -> &mut SolverSession {
        &mut self.session
    }

    pub fn into_session(self) -> SolverSession {
        self.session
    }

    pub fn horizon_active(&self) -> bool {
        self.horizon.is_some()
    }

    pub fn window_active(&self) -> bool {
        self.window
    }

    /// One-hot vertex layer for step `j`, with unreachable vertices fixed false.
    fn vertex_layer(&mut self, a: AgentId, j: usize) -> Result<Vec<BoolVar>, EncodeError> {
        let n = self.inst.num_vertices();
        let layer: Vec<BoolVar> = (0..n).map(|v| self.session.new_bool(format!("V_{a}_{j}_{v}"))).collect();
        self.session.assert(Term::ExactlyOne(layer.clone()))?;
        for v in 0..n {
            if !self.reachable(a, v, j) {
                self.session.assert(Term::lit(layer[v], false))?;
            }
        }
        if self.hints {
            self.hint_layer(a, j, &layer);
        }
        Ok(layer)
    }

    fn reachable(&self, a: AgentId, v: VertexId, j: usize) -> bool {
        self.reach_from_start[a][v].is_some_and(|d| d <= j)
    }

    /// Adds step `h` → `h + 1` to the permanent layer.
    pub fn extend_to(&mut self, h_new: usize) -> Result<(), EncodeError> {
        if self.horizon.is_some() {
            return Err(EncodeError::ScopeMisuse("horizon scope still active".into()));
        }
        if h_new != self.vars.h + 1 {
            return Err(EncodeError::ScopeMisuse(format!("cannot extend from {} to {h_new}", self.vars.h)));
        }
        let j = self.vars.h;
        let zero = Rational::zero();
        for a in 0..self.inst.num_agents() {
            let goal = self.inst.agents()[a].goal;
            let w = self.session.new_real(format!("w_{a}_{j}"));
            let m = self.session.new_real(format!("m_{a}_{j}"));
            let t = self.session.new_real(format!("T_{a}_{h_new}"));
            let next = self.vertex_layer(a, h_new)?;
            let cur = self.vars.vertex[a][j].clone();
            self.session.assert(LinExpr::var(w).ge(zero.clone()))?;
            self.session.assert(LinExpr::var(m).ge(zero.clone()))?;
            let t_prev = self.vars.time[a][j];
            self.session.assert(LinExpr::var(t).equals(t_prev + w + m))?;
            for u in 0..self.inst.num_vertices() {
                if !self.reachable(a, u, j) {
                    continue;
                }
                // Successor choice.
                let mut succ: Vec<Term> = vec![Term::lit(cur[u], false)];
                let mut durations: Vec<&Rational> = Vec::new();
                for e in self.inst.out_edges(u) {
                    succ.push(Term::Bool(next[e.to]));
                    durations.push(&e.duration);
                }
                if u == goal {
                    succ.push(Term::Bool(next[u]));
                    durations.push(&zero);
                }
                self.session.assert(Term::Or(succ))?;
                durations.sort();
                durations.dedup();
                if durations.len() == 1 {
                    let d = durations[0].clone();
                    self.session.assert(Term::Or(vec![Term::lit(cur[u], false), LinExpr::var(m).equals(d)]))?;
                    continue;
                }
                let mut options: Vec<(VertexId, Rational)> =
                    self.inst.out_edges(u).map(|e| (e.to, e.duration.clone())).collect();
                if u == goal {
                    options.push((u, zero.clone()));
                }
                for (v, d) in options {
                    let guard = [Term::lit(cur[u], false), Term::lit(next[v], false)];
                    let mut le = guard.to_vec();
                    le.push(LinExpr::var(m).le(d.clone()));
                    let mut ge = guard.to_vec();
                    ge.push(LinExpr::var(m).ge(d));
                    self.session.assert(Term::Or(le))?;
                    self.session.assert(Term::Or(ge))?;
                }
            }
            // Predecessor support: redundant, but prunes non-successors as soon as step j is decided.
            for v in 0..self.inst.num_vertices() {
                if !self.reachable(a, v, h_new) {
                    continue;
                }
                let mut pred: Vec<Term> = vec![Term::lit(next[v], false)];
                for e in self.inst.in_edges(v) {
                    if self.reachable(a, e.from, j) {
                        pred.push(Term::Bool(cur[e.from]));
                    }
                }
                if v == goal && self.reachable(a, v, j) {
                    pred.push(Term::Bool(cur[v]));
                }
                self.session.assert(Term::Or(pred))?;
            }
            self.vars.vertex[a].push(next);
            self.vars.time[a].push(t);
            self.vars.wait[a].push(w);
            self.vars.mv[a].push(m);
        }
        if j == 0 && self.inst.num_agents() > 0 {
            let first: Vec<Term> =
                (0..self.inst.num_agents()).map(|a| LinExpr::var(self.vars.wait[a][0]).le(zero.clone())).collect();
            self.session.assert(Term::Or(first))?;
        }
        self.vars.h = h_new;
        Ok(())
    }

    /// Pushes the horizon scope: goals at step `h`, the cost definition,
    /// goal-distance pruning and stored terminal-wait clauses.
    pub fn push_horizon(&mut self, kind: CostKind) -> Result<(), EncodeError> {
        if self.horizon.is_some() || self.session.depth() != 0 {
            return Err(EncodeError::ScopeMisuse("horizon scope already active".into()));
        }
        self.session.push()?;
        self.horizon = Some(kind);
        let h = self.vars.h;
        let k = self.inst.num_agents();
        for a in 0..k {
            let goal = self.inst.agents()[a].goal;
            self.session.assert(Term::Bool(self.vars.vertex[a][h][goal]))?;
            for j in 0..=h {
                for v in 0..self.inst.num_vertices() {
                    let far = self.hops_to_goal[a][v].is_none_or(|d| d > h - j);
                    if far && self.reachable(a, v, j) {
                        self.session.assert(Term::lit(self.vars.vertex[a][j][v], false))?;
                    }
                }
            }
        }
        let lambda = LinExpr::var(self.vars.lambda);
        match kind {
            CostKind::SumOfCosts => {
                let total = LinExpr::sum((0..k).map(|a| self.vars.time[a][h]));
                self.session.assert(lambda.equals(total))?;
            }
            CostKind::Makespan => {
                let mut pin = Vec::with_capacity(k);
                for a in 0..k {
                    let t = self.vars.time[a][h];
                    self.session.assert(lambda.clone().ge(t))?;
                    pin.push(lambda.clone().le(t));
                }
                if k == 0 {
                    self.session.assert(lambda.equals(Rational::zero()))?;
                } else {
                    self.session.assert(Term::Or(pin))?;
                }
            }
            CostKind::Power => {
                let two = Rational::from_integer(2);
                let mut terms = Vec::with_capacity(2 * k * h);
                for a in 0..k {
                    for j in 0..h {
                        terms.push((self.vars.mv[a][j], two.clone()));
                        terms.push((self.vars.wait[a][j], Rational::one()));
                    }
                }
                let total = LinExpr::from_terms(terms, Rational::zero());
                self.session.assert(lambda.equals(total))?;
            }
        }
        for c in self.terminal.clone() {
            self.assert_terminal(&c)?;
        }
        Ok(())
    }

    pub fn pop_horizon(&mut self) -> Result<(), EncodeError> {
        if self.window {
            self.pop_window()?;
        }
        if self.horizon.take().is_none() {
            return Err(EncodeError::ScopeMisuse("no horizon scope to pop".into()));
        }
        self.session.pop()?;
        Ok(())
    }

    /// Pushes the cost window `lower ≤ λ ≤ upper`; `None` leaves it unbounded above.
    pub fn push_window(&mut self, lower: &Rational, upper: Option<&Rational>) -> Result<(), EncodeError> {
        if self.horizon.is_none() || self.window {
            return Err(EncodeError::ScopeMisuse("cost window needs an open horizon and no window".into()));
        }
        self.session.push()?;
        self.window = true;
        self.session.assert(LinExpr::var(self.vars.lambda).ge(lower.clone()))?;
        if let Some(u) = upper {
            self.session.assert(LinExpr::var(self.vars.lambda).le(u.clone()))?;
        }
        Ok(())
    }

    pub fn pop_window(&mut self) -> Result<(), EncodeError> {
        if !self.window {
            return Err(EncodeError::ScopeMisuse("no cost window to pop".into()));
        }
        self.window = false;
        self.session.pop()?;
        Ok(())
    }

    /// Horizon and window in one call, as used by each planning query.
    pub fn assert_h_scope(&mut self, kind: CostKind, lower: &Rational, upper: Option<&Rational>) -> Result<(), EncodeError> {
        if self.horizon != Some(kind) {
            if self.horizon.is_some() {
                self.pop_horizon()?;
            }
            self.push_horizon(kind)?;
        } else if self.window {
            self.pop_window()?;
        }
        self.push_window(lower, upper)
    }

    fn check_step(&self, step: usize, what: &str) -> Result<(), EncodeError> {
        if step >= self.vars.h {
            return Err(EncodeError::ScopeMisuse(format!("{what} step {step} beyond horizon {}", self.vars.h)));
        }
        Ok(())
    }

    pub fn mm_term(&self, c: &ClauseMM) -> Term {
        let v = &self.vars;
        let diff = v.depart(c.a, c.step_a) - v.depart(c.b, c.step_b);
        Term::Or(vec![
            Term::lit(v.vertex[c.a][c.step_a][c.edge_a.0], false),
            Term::lit(v.vertex[c.a][c.step_a + 1][c.edge_a.1], false),
            Term::lit(v.vertex[c.b][c.step_b][c.edge_b.0], false),
            Term::lit(v.vertex[c.b][c.step_b + 1][c.edge_b.1], false),
            diff.clone().le(c.lower.clone()),
            diff.ge(c.upper.clone()),
        ])
    }

    /// Clause for agent `a` waiting at `step_a`, or resting from `T_a^{step_a}` when terminal.
    pub fn wm_term(&self, c: &ClauseWM, step_a: usize) -> Term {
        let v = &self.vars;
        let tau_b = v.depart(c.b, c.step_b);
        let arrive = LinExpr::var(v.time[c.a][step_a]);
        let mut lits = vec![
            Term::lit(v.vertex[c.a][step_a][c.vertex], false),
            Term::lit(v.vertex[c.b][c.step_b][c.edge_b.0], false),
            Term::lit(v.vertex[c.b][c.step_b + 1][c.edge_b.1], false),
            (arrive - tau_b.clone()).ge(c.upper.clone()),
        ];
        if !c.terminal {
            lits.push((v.depart(c.a, step_a) - tau_b).le(c.lower.clone()));
        }
        Term::Or(lits)
    }

    pub fn assert_conflict_mm(&mut self, c: &ClauseMM) -> Result<(), EncodeError> {
        if c.lower >= c.upper {
            return Err(EncodeError::DegenerateClause(c.lower.clone(), c.upper.clone()));
        }
        self.check_step(c.step_a, "move")?;
        self.check_step(c.step_b, "move")?;
        let t = self.mm_term(c);
        self.session.assert_at(0, t)?;
        Ok(())
    }

    pub fn assert_conflict_wm(&mut self, c: &ClauseWM) -> Result<(), EncodeError> {
        if c.lower >= c.upper {
            return Err(EncodeError::DegenerateClause(c.lower.clone(), c.upper.clone()));
        }
        self.check_step(c.step_b, "move")?;
        if c.terminal {
            self.terminal.push(c.clone());
            if self.horizon.is_some() {
                self.assert_terminal(c)?;
            }
            return Ok(());
        }
        self.check_step(c.step_a, "wait")?;
        let t = self.wm_term(c, c.step_a);
        self.session.assert_at(0, t)?;
        Ok(())
    }

    fn assert_terminal(&mut self, c: &ClauseWM) -> Result<(), EncodeError> {
        if c.step_b >= self.vars.h {
            return Ok(());
        }
        let t = self.wm_term(c, self.vars.h);
        self.session.assert_at(HORIZON_DEPTH, t)?;
        Ok(())
    }

    pub fn terminal_clauses(&self) -> &[ClauseWM] {
        &self.terminal
    }

    /// Enables goal-distance branching hints for current and future layers.
    pub fn apply_hints(&mut self) {
        self.hints = true;
        for a in 0..self.inst.num_agents() {
            for j in 0..=self.vars.h {
                let layer = self.vars.vertex[a][j].clone();
                self.hint_layer(a, j, &layer);
            }
        }
    }

    /// Earlier steps first, then agents in order, then vertices closer to the goal.
    fn hint_layer(&mut self, a: AgentId, j: usize, layer: &[BoolVar]) {
        let n = self.inst.num_vertices() as i64 + 1;
        let k = self.inst.num_agents() as i64;
        for (v, &b) in layer.iter().enumerate() {
            if !self.reachable(a, v, j) {
                continue;
            }
            let key = ((j as i64 * k) + a as i64) * n + self.goal_rank[a][v] as i64;
            self.session.hint_branching(b, true, -key);
        }
    }

    /// Decodes the raw timelines (goal stays and padding kept) with cost `λ`.
    pub fn extract_raw(&self, model: &Model) -> Result<PrePlan, EncodeError> {
        let h = self.vars.h;
        let mut timelines = Vec::with_capacity(self.inst.num_agents());
        for a in 0..self.inst.num_agents() {
            let at = |j: usize| -> Result<VertexId, EncodeError> {
                let mut hit = self.vars.vertex[a][j].iter().enumerate().filter(|(_, &b)| model.bool(b));
                match (hit.next(), hit.next()) {
                    (Some((v, _)), None) => Ok(v),
                    _ => Err(EncodeError::MalformedModel(format!("agent {a} step {j} is not one-hot"))),
                }
            };
            let mut steps = Vec::with_capacity(h);
            let mut u = at(0)?;
            for j in 0..h {
                let v = at(j + 1)?;
                let m = model.real(self.vars.mv[a][j]);
                let action = if u == v {
                    if !m.is_zero() {
                        return Err(EncodeError::MalformedModel(format!("agent {a} stays at step {j} with m = {m}")));
                    }
                    StepAction::Stay
                } else {
                    match self.inst.edge(u, v) {
                        Some(e) if e.duration == m => StepAction::Move { to: v, duration: m },
                        _ => {
                            return Err(EncodeError::MalformedModel(format!(
                                "agent {a} step {j}: {u} -> {v} with m = {m} is not an edge"
                            )))
                        }
                    }
                };
                steps.push(TimelineStep {
                    vertex: u,
                    arrive: model.real(self.vars.time[a][j]),
                    wait: model.real(self.vars.wait[a][j]),
                    action,
                });
                u = v;
            }
            let tl = AgentTimeline { steps, final_vertex: u, final_arrive: model.real(self.vars.time[a][h]) };
            if !tl.is_consistent() {
                return Err(EncodeError::MalformedModel(format!("agent {a} timeline is not time-consistent")));
            }
            timelines.push(tl);
        }
        Ok(PrePlan { timelines, steps: h, cost: model.real(self.vars.lambda) })
    }

    /// Trimmed timelines (stays folded, trailing waits dropped) with cost `λ`.
    pub fn extract_preplan(&self, model: &Model) -> Result<PrePlan, EncodeError> {
        let raw = self.extract_raw(model)?;
        Ok(PrePlan {
            timelines: raw.timelines.iter().map(AgentTimeline::normalized).collect(),
            steps: raw.steps,
            cost: raw.cost,
        })
    }
}
