//! Exact plan certification and a prioritized-planning oracle for small instances.
//!
//! Everything here is recomputed from the instance and the plan; nothing is
//! taken from the solver.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::collision::{in_conflict, safe_delay, TimedMotion};
use crate::model::{
    evaluate_cost, shortest_path_table, timeline_along, AgentId, AgentTimeline, CostKind, Coord, Instance, Plan,
    PrePlan, StepAction,
};
use crate::rational::Rational;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ValidationError {
    #[error("agent {agent}, step {step}: {message}")]
    Structural { agent: AgentId, step: usize, message: String },
    #[error("segments do not overlap in time")]
    NoOverlap,
    #[error("oracle supports at most 8 agents, got {0}")]
    TooLarge(usize),
    #[error("no priority order yields a collision-free schedule")]
    NoFeasibleOrder,
}

/// Affine motion of one agent over `[t0, t1]`; `t1 = None` means forever.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MotionSegment {
    pub agent: AgentId,
    pub t0: Rational,
    pub t1: Option<Rational>,
    pub from: Coord,
    pub to: Coord,
}

impl MotionSegment {
    fn is_constant(&self) -> bool {
        self.from == self.to
    }

    /// Position as `p + v·t` in absolute time.
    fn affine(&self) -> (Rational, Rational, Rational, Rational) {
        match &self.t1 {
            Some(t1) if !self.is_constant() && t1 > &self.t0 => {
                let d = t1 - &self.t0;
                let vx = (&self.to.x - &self.from.x) / &d;
                let vy = (&self.to.y - &self.from.y) / &d;
                (&self.from.x - &vx * &self.t0, &self.from.y - &vy * &self.t0, vx, vy)
            }
            _ => (self.from.x.clone(), self.from.y.clone(), Rational::zero(), Rational::zero()),
        }
    }

    pub fn position(&self, t: &Rational) -> Coord {
        let (px, py, vx, vy) = self.affine();
        Coord::new(px + vx * t, py + vy * t)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub agents: (AgentId, AgentId),
    pub from: Rational,
    /// `None` when the overlap extends forever.
    pub to: Option<Rational>,
    pub min_dist_sq: Rational,
    pub at: Rational,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub valid: bool,
    pub violations: Vec<Violation>,
    pub structural: Vec<String>,
}

fn structural(agent: AgentId, step: usize, message: impl Into<String>) -> ValidationError {
    ValidationError::Structural { agent, step, message: message.into() }
}

/// Piecewise-affine motion for every agent: waits, moves and a final rest.
pub fn segmentize(inst: &Instance, plan: &Plan) -> Result<Vec<Vec<MotionSegment>>, ValidationError> {
    if plan.timelines.len() != inst.num_agents() {
        return Err(structural(
            plan.timelines.len().min(inst.num_agents()),
            0,
            format!("plan has {} timelines for {} agents", plan.timelines.len(), inst.num_agents()),
        ));
    }
    inst.agents().iter().zip(&plan.timelines).map(|(agent, tl)| segmentize_agent(inst, agent.id, tl)).collect()
}

fn segmentize_agent(inst: &Instance, a: AgentId, tl: &AgentTimeline) -> Result<Vec<MotionSegment>, ValidationError> {
    let agent = &inst.agents()[a];
    let mut segs = Vec::new();
    let mut t = Rational::zero();
    let mut at = agent.start;
    for (j, s) in tl.steps.iter().enumerate() {
        if s.vertex >= inst.num_vertices() {
            return Err(structural(a, j, format!("vertex {} does not exist", s.vertex)));
        }
        if s.vertex != at {
            return Err(structural(a, j, format!("step starts at {} but agent is at {at}", s.vertex)));
        }
        if s.arrive != t {
            return Err(structural(a, j, format!("arrival {} breaks the time chain (expected {t})", s.arrive)));
        }
        if s.wait.is_negative() {
            return Err(structural(a, j, "negative wait"));
        }
        let here = inst.coord(at).clone();
        let depart = s.depart();
        if s.wait.is_positive() {
            segs.push(MotionSegment { agent: a, t0: t.clone(), t1: Some(depart.clone()), from: here.clone(), to: here.clone() });
        }
        match &s.action {
            StepAction::Stay => t = depart,
            StepAction::Move { to, duration } => {
                let e = inst
                    .edge(at, *to)
                    .ok_or_else(|| structural(a, j, format!("{at} -> {to} is not an edge")))?;
                if &e.duration != duration {
                    return Err(structural(a, j, format!("duration {duration} differs from edge duration {}", e.duration)));
                }
                let end = &depart + duration;
                segs.push(MotionSegment {
                    agent: a,
                    t0: depart,
                    t1: Some(end.clone()),
                    from: here,
                    to: inst.coord(*to).clone(),
                });
                t = end;
                at = *to;
            }
        }
    }
    if at != tl.final_vertex || t != tl.final_arrive {
        return Err(structural(a, tl.steps.len(), "final vertex or time does not match the steps"));
    }
    if at != agent.goal {
        return Err(structural(a, tl.steps.len(), format!("ends at {at} instead of goal {}", agent.goal)));
    }
    let goal = inst.coord(at).clone();
    segs.push(MotionSegment { agent: a, t0: t, t1: None, from: goal.clone(), to: goal });
    Ok(segs)
}

/// Exact minimum of the squared distance over the closed common interval,
/// with a time at which it is attained.
pub fn min_pair_distance_sq(a: &MotionSegment, b: &MotionSegment) -> Result<(Rational, Rational), ValidationError> {
    let lo = (&a.t0).max(&b.t0).clone();
    let hi = match (&a.t1, &b.t1) {
        (Some(x), Some(y)) => Some(x.min(y).clone()),
        (Some(x), None) | (None, Some(x)) => Some(x.clone()),
        (None, None) => None,
    };
    if hi.as_ref().is_some_and(|h| h < &lo) {
        return Err(ValidationError::NoOverlap);
    }
    let (pax, pay, vax, vay) = a.affine();
    let (pbx, pby, vbx, vby) = b.affine();
    let (cx, cy) = (pax - pbx, pay - pby);
    let (vx, vy) = (vax - vbx, vay - vby);
    let f = |t: &Rational| {
        let dx = &cx + &vx * t;
        let dy = &cy + &vy * t;
        &dx * &dx + &dy * &dy
    };
    let q2 = &vx * &vx + &vy * &vy;
    let mut best = (f(&lo), lo.clone());
    if let Some(h) = &hi {
        let v = f(h);
        if v < best.0 {
            best = (v, h.clone());
        }
    }
    if q2.is_positive() {
        let t = -(&cx * &vx + &cy * &vy) / &q2;
        if t > lo && hi.as_ref().is_none_or(|h| &t < h) {
            let v = f(&t);
            if v < best.0 {
                best = (v, t);
            }
        }
    }
    Ok(best)
}

/// Float copy of a segment used to skip pairs that are far apart.
struct FloatSegment {
    t0: f64,
    t1: f64,
    p: (f64, f64),
    v: (f64, f64),
}

impl FloatSegment {
    fn from(s: &MotionSegment) -> Self {
        let t0 = s.t0.to_f64();
        let t1 = s.t1.as_ref().map_or(f64::INFINITY, Rational::to_f64);
        let (fx, fy) = s.from.to_f64();
        let (tx, ty) = s.to.to_f64();
        let d = t1 - t0;
        let v = if d.is_finite() && d > 0.0 { ((tx - fx) / d, (ty - fy) / d) } else { (0.0, 0.0) };
        FloatSegment { t0, t1, p: (fx - v.0 * t0, fy - v.1 * t0), v }
    }

    /// True only when the pair stays apart by far more than rounding error,
    /// or the time spans are disjoint by a wide margin.
    fn clearly_apart(&self, o: &FloatSegment, r: f64) -> bool {
        let lo = self.t0.max(o.t0);
        let hi = self.t1.min(o.t1);
        let tscale = 1.0 + lo.abs() + if hi.is_finite() { hi.abs() } else { 0.0 };
        if hi < lo - 1e-9 * tscale {
            return true;
        }
        let (cx, cy) = (self.p.0 - o.p.0, self.p.1 - o.p.1);
        let (vx, vy) = (self.v.0 - o.v.0, self.v.1 - o.v.1);
        let q2 = vx * vx + vy * vy;
        let t = if q2 > 0.0 { (-(cx * vx + cy * vy) / q2).clamp(lo.min(hi), hi) } else { lo };
        if !t.is_finite() {
            return false;
        }
        let (dx, dy) = (cx + vx * t, cy + vy * t);
        let scale = 1.0 + cx.abs() + cy.abs() + (vx.abs() + vy.abs()) * t.abs() + r;
        let spread = (vx.abs() + vy.abs()) * 1e-9 * tscale;
        (dx * dx + dy * dy).sqrt() > r + 1e-6 * scale + spread
    }
}

/// Exact certification: structure, then pairwise clearance for every
/// overlapping segment pair. Touching is allowed.
pub fn validate(inst: &Instance, plan: &Plan) -> ValidationReport {
    let segs = match segmentize(inst, plan) {
        Ok(s) => s,
        Err(e) => return ValidationReport { valid: false, violations: Vec::new(), structural: vec![e.to_string()] },
    };
    let mut violations = Vec::new();
    let agents = inst.agents();
    let floats: Vec<Vec<FloatSegment>> = segs.iter().map(|s| s.iter().map(FloatSegment::from).collect()).collect();
    for a in 0..segs.len() {
        for b in a + 1..segs.len() {
            let r = &agents[a].radius + &agents[b].radius;
            let r_sq = &r * &r;
            let rf = r.to_f64();
            for (sa, fa) in segs[a].iter().zip(&floats[a]) {
                for (sb, fb) in segs[b].iter().zip(&floats[b]) {
                    if fa.clearly_apart(fb, rf) {
                        continue;
                    }
                    let Ok((d, at)) = min_pair_distance_sq(sa, sb) else { continue };
                    if d < r_sq {
                        let from = (&sa.t0).max(&sb.t0).clone();
                        let to = match (&sa.t1, &sb.t1) {
                            (Some(x), Some(y)) => Some(x.min(y).clone()),
                            (Some(x), None) | (None, Some(x)) => Some(x.clone()),
                            (None, None) => None,
                        };
                        violations.push(Violation { agents: (a, b), from, to, min_dist_sq: d, at });
                    }
                }
            }
        }
    }
    ValidationReport { valid: violations.is_empty(), violations, structural: Vec::new() }
}

/// Stationary or moving piece of a prioritized schedule.
fn pieces(inst: &Instance, tl: &AgentTimeline, horizon: &Rational) -> Vec<TimedMotion> {
    let mut out = Vec::new();
    for s in &tl.steps {
        let here = inst.coord(s.vertex).clone();
        if s.wait.is_positive() {
            out.push(TimedMotion::new(here.clone(), here.clone(), s.wait.clone(), s.arrive.clone()));
        }
        if let StepAction::Move { to, duration } = &s.action {
            out.push(TimedMotion::new(here, inst.coord(*to).clone(), duration.clone(), s.depart()));
        }
    }
    let goal = inst.coord(tl.final_vertex).clone();
    let rest = horizon - &tl.final_arrive + Rational::one();
    out.push(TimedMotion::new(goal.clone(), goal, rest, tl.final_arrive.clone()));
    out
}

/// Best cost over all priority orders, where each agent follows its
/// duration-optimal path and waits at its start for the smallest delay that
/// clears every higher-priority agent.
pub fn permutation_oracle(inst: &Instance, kind: CostKind, eps: &Rational) -> Result<Rational, ValidationError> {
    let k = inst.num_agents();
    if k > 8 {
        return Err(ValidationError::TooLarge(k));
    }
    let mut base = Vec::with_capacity(k);
    for a in inst.agents() {
        let table = shortest_path_table(inst, a.id);
        let path = table
            .path_from(inst, a.start)
            .ok_or_else(|| structural(a.id, 0, "goal unreachable"))?;
        base.push(timeline_along(inst, &path));
    }
    // Any delay beyond this bound cannot help: all higher-priority agents rest by then.
    let bound: Rational = base.iter().map(|t| t.final_arrive.clone() + Rational::one()).sum::<Rational>()
        * Rational::from_integer(2);
    let mut order: Vec<usize> = (0..k).collect();
    let mut best: Option<Rational> = None;
    loop {
        if let Some(tls) = prioritized(inst, &base, &order, &bound, eps) {
            let cost = evaluate_cost(&PrePlan::from_timelines(tls, kind), kind);
            if best.as_ref().is_none_or(|b| &cost < b) {
                best = Some(cost);
            }
        }
        if !next_permutation(&mut order) {
            break;
        }
    }
    best.ok_or(ValidationError::NoFeasibleOrder)
}

fn delayed(tl: &AgentTimeline, d: &Rational) -> AgentTimeline {
    let mut out = tl.clone();
    if d.is_positive() {
        if let Some(first) = out.steps.first_mut() {
            first.wait += d;
        }
        out.recompute_times();
    }
    out
}

fn prioritized(
    inst: &Instance,
    base: &[AgentTimeline],
    order: &[usize],
    bound: &Rational,
    eps: &Rational,
) -> Option<Vec<AgentTimeline>> {
    let mut fixed: Vec<Option<AgentTimeline>> = vec![None; base.len()];
    let agents = inst.agents();
    for &a in order {
        let ra = &agents[a].radius;
        let mut d = Rational::zero();
        'search: loop {
            if &d > bound {
                return None;
            }
            let mine = delayed(&base[a], &d);
            let my_pieces = pieces(inst, &mine, bound);
            for (b, other) in fixed.iter().enumerate() {
                let Some(other) = other else { continue };
                let rb = &agents[b].radius;
                for theirs in pieces(inst, other, bound) {
                    for (i, p) in my_pieces.iter().enumerate() {
                        if !in_conflict(p, &theirs, ra, rb) {
                            continue;
                        }
                        // The initial wait only grows with the delay.
                        if i == 0 && d.is_positive() {
                            return None;
                        }
                        let safe = safe_delay(p, &theirs, ra, rb, eps).ok()?;
                        d += safe - &p.start;
                        continue 'search;
                    }
                }
            }
            fixed[a] = Some(mine);
            break;
        }
    }
    fixed.into_iter().collect()
}

fn next_permutation(v: &mut [usize]) -> bool {
    let n = v.len();
    if n < 2 {
        return false;
    }
    let mut i = n - 1;
    while i > 0 && v[i - 1] >= v[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = n - 1;
    while v[j] <= v[i - 1] {
        j -= 1;
    }
    v.swap(i - 1, j);
    v[i..].reverse();
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Agent, EdgeAction, TimelineStep, Vertex};
    use crate::rational::{default_eps, exact_sqrt};
    use proptest::prelude::*;

    fn q(n: i64) -> Rational {
        Rational::from_integer(n)
    }

    fn c(x: i64, y: i64) -> Coord {
        Coord::from_ints(x, y)
    }

    fn seg(t0: i64, t1: Option<i64>, from: (i64, i64), to: (i64, i64)) -> MotionSegment {
        MotionSegment { agent: 0, t0: q(t0), t1: t1.map(q), from: c(from.0, from.1), to: c(to.0, to.1) }
    }

    /// Star with two crossing spokes of length 2, radius 1/2.
    fn crossing() -> Instance {
        let vertices = vec![
            Vertex { id: 0, coord: c(0, 0) },
            Vertex { id: 1, coord: c(2, 0) },
            Vertex { id: 2, coord: c(-2, 0) },
            Vertex { id: 3, coord: c(0, 2) },
            Vertex { id: 4, coord: c(0, -2) },
        ];
        let edges = vec![
            EdgeAction { from: 1, to: 0, duration: q(2) },
            EdgeAction { from: 0, to: 2, duration: q(2) },
            EdgeAction { from: 3, to: 0, duration: q(2) },
            EdgeAction { from: 0, to: 4, duration: q(2) },
        ];
        let agents = vec![
            Agent { id: 0, start: 1, goal: 2, radius: Rational::new(1, 2) },
            Agent { id: 1, start: 3, goal: 4, radius: Rational::new(1, 2) },
        ];
        Instance::new("crossing", vertices, edges, agents).unwrap()
    }

    fn plan_with_delay(inst: &Instance, delay: Rational) -> Plan {
        let t0 = timeline_along(inst, &[1, 0, 2]);
        let t1 = delayed(&timeline_along(inst, &[3, 0, 4]), &delay);
        Plan::uncertified(PrePlan::from_timelines(vec![t0, t1], CostKind::SumOfCosts))
    }

    #[test]
    fn wait_then_move_segments() {
        let vertices = vec![Vertex { id: 0, coord: c(0, 0) }, Vertex { id: 1, coord: c(1, 0) }];
        let edges = vec![EdgeAction { from: 0, to: 1, duration: q(1) }];
        let agents = vec![Agent { id: 0, start: 0, goal: 1, radius: Rational::new(1, 2) }];
        let inst = Instance::new("w", vertices, edges, agents).unwrap();
        let tl = AgentTimeline {
            steps: vec![TimelineStep { vertex: 0, arrive: q(0), wait: q(1), action: StepAction::Move { to: 1, duration: q(1) } }],
            final_vertex: 1,
            final_arrive: q(2),
        };
        let plan = Plan::uncertified(PrePlan::from_timelines(vec![tl.clone()], CostKind::SumOfCosts));
        let segs = segmentize(&inst, &plan).unwrap();
        assert_eq!(segs[0].len(), 3);
        assert_eq!((segs[0][0].t0.clone(), segs[0][0].t1.clone()), (q(0), Some(q(1))));
        assert_eq!((segs[0][1].t0.clone(), segs[0][1].t1.clone()), (q(1), Some(q(2))));
        assert_eq!((segs[0][2].t0.clone(), segs[0][2].t1.clone()), (q(2), None));
        assert!(validate(&inst, &plan).valid);

        let mut zero = tl.clone();
        zero.steps[0].wait = q(0);
        zero.recompute_times();
        let plan = Plan::uncertified(PrePlan::from_timelines(vec![zero], CostKind::SumOfCosts));
        let segs = segmentize(&inst, &plan).unwrap();
        assert_eq!(segs[0].len(), 2);
        assert_eq!(segs[0][0].t1.as_ref(), Some(&segs[0][1].t0));

        let mut bad = tl;
        bad.steps[0].action = StepAction::Move { to: 0, duration: q(1) };
        let plan = Plan { timelines: vec![bad], steps: 1, cost: q(2), certified: false };
        assert!(matches!(segmentize(&inst, &plan), Err(ValidationError::Structural { .. })));
    }

    #[test]
    fn head_on_minimum() {
        let a = seg(0, Some(4), (0, 0), (4, 0));
        let b = seg(0, Some(4), (4, 0), (0, 0));
        assert_eq!(min_pair_distance_sq(&a, &b).unwrap(), (q(0), q(2)));
    }

    #[test]
    fn parallel_lanes() {
        let a = seg(0, Some(4), (0, 0), (4, 0));
        let b = seg(0, Some(4), (0, 3), (4, 3));
        assert_eq!(min_pair_distance_sq(&a, &b).unwrap().0, q(9));
        let late = seg(5, Some(6), (0, 3), (4, 3));
        assert_eq!(min_pair_distance_sq(&a, &late), Err(ValidationError::NoOverlap));
    }

    #[test]
    fn crossing_delay_threshold() {
        let inst = crossing();
        // Delay by exactly 1: closest approach τ²/2 = 1/2 < 1.
        let report = validate(&inst, &plan_with_delay(&inst, q(1)));
        assert!(!report.valid);
        assert_eq!(report.violations[0].agents, (0, 1));
        assert!(report.violations.iter().all(|v| v.min_dist_sq < q(1)));
        // Delay by 3/2 ≥ √2.
        assert!(validate(&inst, &plan_with_delay(&inst, Rational::new(3, 2))).valid);
        // √2 rounded up.
        let (_, hi) = crate::rational::sqrt_bracket(&q(2), &default_eps());
        let report = validate(&inst, &plan_with_delay(&inst, hi.clone()));
        assert!(report.valid);
        let segs = segmentize(&inst, &plan_with_delay(&inst, hi)).unwrap();
        let d = min_pair_distance_sq(&segs[0][0], &segs[1][1]).unwrap().0;
        assert!(d >= q(1));
    }

    #[test]
    fn touching_is_valid() {
        // Two agents pass on parallel lanes exactly 1 apart with radii 1/2.
        let vertices = vec![
            Vertex { id: 0, coord: c(0, 0) },
            Vertex { id: 1, coord: c(4, 0) },
            Vertex { id: 2, coord: c(4, 1) },
            Vertex { id: 3, coord: c(0, 1) },
        ];
        let edges = vec![EdgeAction { from: 0, to: 1, duration: q(4) }, EdgeAction { from: 2, to: 3, duration: q(4) }];
        let agents = vec![
            Agent { id: 0, start: 0, goal: 1, radius: Rational::new(1, 2) },
            Agent { id: 1, start: 2, goal: 3, radius: Rational::new(1, 2) },
        ];
        let inst = Instance::new("touch", vertices, edges, agents).unwrap();
        let plan = Plan::uncertified(PrePlan::from_timelines(
            vec![timeline_along(&inst, &[0, 1]), timeline_along(&inst, &[2, 3])],
            CostKind::SumOfCosts,
        ));
        assert!(validate(&inst, &plan).valid);
    }

    #[test]
    fn wrong_goal_is_structural() {
        let inst = crossing();
        let mut plan = plan_with_delay(&inst, q(2));
        plan.timelines[1].steps.pop();
        plan.timelines[1].final_vertex = 0;
        plan.timelines[1].final_arrive = q(4);
        let report = validate(&inst, &plan);
        assert!(!report.valid);
        assert_eq!(report.structural.len(), 1);
    }

    #[test]
    fn oracle_crossing_values() {
        let inst = crossing();
        let eps = default_eps();
        let root2 = 2f64.sqrt();
        let soc = permutation_oracle(&inst, CostKind::SumOfCosts, &eps).unwrap();
        assert!((soc.to_f64() - (8.0 + root2)).abs() <= eps.to_f64());
        assert!(soc.to_f64() >= 8.0 + root2);
        let mk = permutation_oracle(&inst, CostKind::Makespan, &eps).unwrap();
        assert!((mk.to_f64() - (4.0 + root2)).abs() <= eps.to_f64());
        assert!(exact_sqrt(&q(2)).is_none());
    }

    #[test]
    fn oracle_single_agent_and_limits() {
        let inst = crossing().with_agents(vec![Agent { id: 0, start: 1, goal: 2, radius: Rational::new(1, 2) }]).unwrap();
        assert_eq!(permutation_oracle(&inst, CostKind::SumOfCosts, &default_eps()).unwrap(), q(4));
        let vertices = (0..18).map(|id| Vertex { id, coord: c(id as i64 * 3, 0) }).collect();
        let agents = (0..9).map(|id| Agent { id, start: 2 * id, goal: 2 * id, radius: Rational::new(1, 2) }).collect();
        let big = Instance::new("big", vertices, vec![], agents).unwrap();
        assert_eq!(permutation_oracle(&big, CostKind::SumOfCosts, &default_eps()), Err(ValidationError::TooLarge(9)));
    }

    #[test]
    fn permutations_are_enumerated() {
        let mut v = vec![0, 1, 2, 3];
        let mut n = 1;
        while next_permutation(&mut v) {
            n += 1;
        }
        assert_eq!(n, 24);
        assert_eq!(v, vec![3, 2, 1, 0]);
    }

    fn arb_seg() -> impl Strategy<Value = MotionSegment> {
        (0i64..6, 1i64..5, -4i64..5, -4i64..5, -4i64..5, -4i64..5, any::<bool>()).prop_map(
            |(t0, d, x0, y0, x1, y1, unbounded)| {
                if unbounded {
                    MotionSegment { agent: 0, t0: q(t0), t1: None, from: c(x0, y0), to: c(x0, y0) }
                } else {
                    MotionSegment { agent: 0, t0: q(t0), t1: Some(q(t0 + d)), from: c(x0, y0), to: c(x1, y1) }
                }
            },
        )
    }

    proptest! {
        #[test]
        fn minimum_bounds_samples(a in arb_seg(), b in arb_seg()) {
            let Ok((d, at)) = min_pair_distance_sq(&a, &b) else { return Ok(()) };
            prop_assert_eq!(a.position(&at).dist_sq(&b.position(&at)), d.clone());
            let lo = (&a.t0).max(&b.t0).clone();
            let hi = match (&a.t1, &b.t1) {
                (Some(x), Some(y)) => x.min(y).clone(),
                (Some(x), None) | (None, Some(x)) => x.clone(),
                (None, None) => &lo + q(3),
            };
            for i in 0..=64 {
                let t = &lo + (&hi - &lo) * Rational::new(i, 64);
                prop_assert!(a.position(&t).dist_sq(&b.position(&t)) >= d);
            }
        }

        #[test]
        fn dense_sampling_agrees(delay in 0i64..400) {
            let inst = crossing();
            let delay = Rational::new(delay, 100);
            let plan = plan_with_delay(&inst, delay);
            let report = validate(&inst, &plan);
            let segs = segmentize(&inst, &plan).unwrap();
            let hit = (0..=2000).any(|i| {
                let t = Rational::new(i, 250);
                let pos = |s: &[MotionSegment]| {
                    let seg = s.iter().rev().find(|g| g.t0 <= t).unwrap();
                    seg.position(&t)
                };
                pos(&segs[0]).dist_sq(&pos(&segs[1])) < q(1)
            });
            // Samples may miss grazing contacts but never report a phantom one.
            if hit {
                prop_assert!(!report.valid);
            }
        }
    }
}
