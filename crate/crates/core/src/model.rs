//! Problem definition: graphs embedded in the plane, disk agents, timelines,
//! pre-plans and plans, cost functions and per-agent shortest paths.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashMap, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rational::{sqrt_bracket, Rational};

pub type VertexId = usize;
pub type AgentId = usize;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error("invalid instance: {0}")]
    InvalidInstance(String),
    #[error("agent {0} cannot reach its goal")]
    Unreachable(AgentId),
    #[error("agents {0} and {1} overlap at their {2} vertices")]
    DiskOverlap(AgentId, AgentId, &'static str),
}

/// A point in the plane.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Coord {
    pub x: Rational,
    pub y: Rational,
}

impl Coord {
    pub fn new(x: Rational, y: Rational) -> Self {
        Coord { x, y }
    }

    pub fn from_ints(x: i64, y: i64) -> Self {
        Coord::new(Rational::from_integer(x), Rational::from_integer(y))
    }

    pub fn dist_sq(&self, other: &Coord) -> Rational {
        let dx = &self.x - &other.x;
        let dy = &self.y - &other.y;
        &dx * &dx + &dy * &dy
    }

    pub fn to_f64(&self) -> (f64, f64) {
        (self.x.to_f64(), self.y.to_f64())
    }

    /// Travel time at unit speed: exact when the length is rational, otherwise
    /// rounded up by at most `2^-DURATION_EPS`.
    pub fn euclidean_duration(&self, other: &Coord) -> Rational {
        sqrt_bracket(&self.dist_sq(other), &duration_eps()).1
    }
}

/// Binary exponent of the rounding allowance for irrational edge lengths.
pub const DURATION_EPS: u32 = 20;

pub fn duration_eps() -> Rational {
    Rational::pow2_neg(DURATION_EPS)
}

impl fmt::Display for Coord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.x, self.y)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Vertex {
    pub id: VertexId,
    pub coord: Coord,
}

/// Directed straight-line move traversed at constant velocity.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct EdgeAction {
    pub from: VertexId,
    pub to: VertexId,
    pub duration: Rational,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Agent {
    pub id: AgentId,
    pub start: VertexId,
    pub goal: VertexId,
    pub radius: Rational,
}

/// A validated problem instance. Immutable once built.
#[derive(Debug, Clone)]
pub struct Instance {
    name: String,
    vertices: Vec<Vertex>,
    edges: Vec<EdgeAction>,
    agents: Vec<Agent>,
    out_edges: Vec<Vec<usize>>,
    in_edges: Vec<Vec<usize>>,
    edge_index: HashMap<(VertexId, VertexId), usize>,
}

impl PartialEq for Instance {
    fn eq(&self, other: &Self) -> bool {
        self.name == other.name
            && self.vertices == other.vertices
            && self.edges == other.edges
            && self.agents == other.agents
    }
}

impl Eq for Instance {}

impl Instance {
    pub fn new(
        name: impl Into<String>,
        vertices: Vec<Vertex>,
        edges: Vec<EdgeAction>,
        agents: Vec<Agent>,
    ) -> Result<Self, ModelError> {
        let bad = |msg: String| Err(ModelError::InvalidInstance(msg));
        let n = vertices.len();
        for (i, v) in vertices.iter().enumerate() {
            if v.id != i {
                return bad(format!("vertex ids must be dense 0..{n}, found {} at position {i}", v.id));
            }
        }
        let mut out_edges = vec![Vec::new(); n];
        let mut in_edges = vec![Vec::new(); n];
        let mut edge_index = HashMap::new();
        for (i, e) in edges.iter().enumerate() {
            if e.from >= n || e.to >= n {
                return bad(format!("edge {}->{} references a missing vertex", e.from, e.to));
            }
            if e.from == e.to {
                return bad(format!("self-loop at vertex {}", e.from));
            }
            if !e.duration.is_positive() {
                return bad(format!("edge {}->{} has non-positive duration {}", e.from, e.to, e.duration));
            }
            if edge_index.insert((e.from, e.to), i).is_some() {
                return bad(format!("duplicate edge {}->{}", e.from, e.to));
            }
            out_edges[e.from].push(i);
            in_edges[e.to].push(i);
        }
        for (i, a) in agents.iter().enumerate() {
            if a.id != i {
                return bad(format!("agent ids must be dense 0..{}, found {} at position {i}", agents.len(), a.id));
            }
            if a.start >= n || a.goal >= n {
                return bad(format!("agent {i} references a missing vertex"));
            }
            if !a.radius.is_positive() {
                return bad(format!("agent {i} has non-positive radius"));
            }
        }
        for list in out_edges.iter_mut() {
            list.sort_by_key(|&e| edges[e].to);
        }
        Ok(Instance {
            name: name.into(),
            vertices,
            edges,
            agents,
            out_edges,
            in_edges,
            edge_index,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn vertices(&self) -> &[Vertex] {
        &self.vertices
    }

    pub fn edges(&self) -> &[EdgeAction] {
        &self.edges
    }

    pub fn agents(&self) -> &[Agent] {
        &self.agents
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_agents(&self) -> usize {
        self.agents.len()
    }

    pub fn coord(&self, v: VertexId) -> &Coord {
        &self.vertices[v].coord
    }

    pub fn edge(&self, from: VertexId, to: VertexId) -> Option<&EdgeAction> {
        self.edge_index.get(&(from, to)).map(|&i| &self.edges[i])
    }

    /// Outgoing edges of `v`, ordered by target id.
    pub fn out_edges(&self, v: VertexId) -> impl Iterator<Item = &EdgeAction> + '_ {
        self.out_edges[v].iter().map(move |&i| &self.edges[i])
    }

    pub fn in_edges(&self, v: VertexId) -> impl Iterator<Item = &EdgeAction> + '_ {
        self.in_edges[v].iter().map(move |&i| &self.edges[i])
    }

    pub fn out_degree(&self, v: VertexId) -> usize {
        self.out_edges[v].len()
    }

    /// Same graph with a different agent list.
    pub fn with_agents(&self, agents: Vec<Agent>) -> Result<Self, ModelError> {
        Instance::new(self.name.clone(), self.vertices.clone(), self.edges.clone(), agents)
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    /// Rejects instances whose start disks or goal disks overlap.
    pub fn check_disk_overlaps(&self) -> Result<(), ModelError> {
        for (which, pick) in [("start", 0usize), ("goal", 1usize)] {
            for a in 0..self.agents.len() {
                for b in a + 1..self.agents.len() {
                    let (aa, bb) = (&self.agents[a], &self.agents[b]);
                    let (va, vb) = if pick == 0 { (aa.start, bb.start) } else { (aa.goal, bb.goal) };
                    let rsum = &aa.radius + &bb.radius;
                    if self.coord(va).dist_sq(self.coord(vb)) < &rsum * &rsum {
                        return Err(ModelError::DiskOverlap(a, b, which));
                    }
                }
            }
        }
        Ok(())
    }
}

/// What an agent does after its wait at a step.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum StepAction {
    Move { to: VertexId, duration: Rational },
    /// Remain at the current vertex; the move duration is zero.
    Stay,
}

impl StepAction {
    pub fn duration(&self) -> Rational {
        match self {
            StepAction::Move { duration, .. } => duration.clone(),
            StepAction::Stay => Rational::zero(),
        }
    }

    pub fn is_move(&self) -> bool {
        matches!(self, StepAction::Move { .. })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TimelineStep {
    pub vertex: VertexId,
    pub arrive: Rational,
    pub wait: Rational,
    pub action: StepAction,
}

impl TimelineStep {
    /// Time at which the move (or stay) begins.
    pub fn depart(&self) -> Rational {
        &self.arrive + &self.wait
    }

    pub fn end(&self) -> Rational {
        &self.arrive + &self.wait + self.action.duration()
    }

    pub fn target(&self) -> VertexId {
        match self.action {
            StepAction::Move { to, .. } => to,
            StepAction::Stay => self.vertex,
        }
    }
}

/// One agent's schedule: `steps[j]` covers T^j, w^j and the j-th action;
/// `final_vertex` and `final_arrive` are the vertex and time T^h after the last step.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct AgentTimeline {
    pub steps: Vec<TimelineStep>,
    pub final_vertex: VertexId,
    pub final_arrive: Rational,
}

impl AgentTimeline {
    /// Timeline that never moves.
    pub fn resting(vertex: VertexId) -> Self {
        AgentTimeline { steps: Vec::new(), final_vertex: vertex, final_arrive: Rational::zero() }
    }

    pub fn start_vertex(&self) -> VertexId {
        self.steps.first().map_or(self.final_vertex, |s| s.vertex)
    }

    pub fn move_count(&self) -> usize {
        self.steps.iter().filter(|s| s.action.is_move()).count()
    }

    /// Whether times start at 0 and every step chains into the next exactly.
    pub fn is_consistent(&self) -> bool {
        let mut t = Rational::zero();
        let mut at = self.start_vertex();
        for s in &self.steps {
            if s.arrive != t || s.vertex != at || s.wait.is_negative() {
                return false;
            }
            if let StepAction::Move { duration, .. } = &s.action {
                if !duration.is_positive() {
                    return false;
                }
            }
            t = s.end();
            at = s.target();
        }
        t == self.final_arrive && at == self.final_vertex
    }

    /// Recomputes every T^j from the waits and move durations.
    pub fn recompute_times(&mut self) {
        let mut t = Rational::zero();
        for s in &mut self.steps {
            s.arrive = t.clone();
            t = s.end();
        }
        self.final_arrive = t;
    }

    /// Drops trailing stays, folds intermediate stays into the following
    /// wait, so that every remaining step is a genuine move.
    pub fn normalized(&self) -> Self {
        let mut steps: Vec<TimelineStep> = Vec::new();
        let mut pending: Option<(Rational, Rational)> = None;
        for s in &self.steps {
            match &s.action {
                StepAction::Stay => {
                    let (arrive, wait) = pending.take().unwrap_or((s.arrive.clone(), Rational::zero()));
                    pending = Some((arrive, wait + &s.wait));
                }
                StepAction::Move { .. } => {
                    let mut step = s.clone();
                    if let Some((arrive, wait)) = pending.take() {
                        step.arrive = arrive;
                        step.wait = wait + &s.wait;
                    }
                    steps.push(step);
                }
            }
        }
        let final_arrive = steps.last().map_or_else(Rational::zero, |s| s.end());
        AgentTimeline { steps, final_vertex: self.final_vertex, final_arrive }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CostKind {
    #[serde(rename = "soc")]
    SumOfCosts,
    #[serde(rename = "makespan")]
    Makespan,
    #[serde(rename = "power")]
    Power,
}

impl std::str::FromStr for CostKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "soc" | "sum" | "sum-of-costs" | "sumofcosts" => Ok(CostKind::SumOfCosts),
            "makespan" => Ok(CostKind::Makespan),
            "power" => Ok(CostKind::Power),
            other => Err(format!("unknown cost kind {other:?} (expected soc, makespan or power)")),
        }
    }
}

impl fmt::Display for CostKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CostKind::SumOfCosts => "soc",
            CostKind::Makespan => "makespan",
            CostKind::Power => "power",
        })
    }
}

/// Per-agent timelines that satisfy start/goal constraints but may collide.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PrePlan {
    pub timelines: Vec<AgentTimeline>,
    /// Unrolled step count the timelines were produced for.
    pub steps: usize,
    pub cost: Rational,
}

impl PrePlan {
    /// Builds a pre-plan with `steps` = maximum move count and the given cost kind.
    pub fn from_timelines(timelines: Vec<AgentTimeline>, kind: CostKind) -> Self {
        let steps = timelines.iter().map(AgentTimeline::move_count).max().unwrap_or(0);
        let mut p = PrePlan { timelines, steps, cost: Rational::zero() };
        p.cost = evaluate_cost(&p, kind);
        p
    }

    pub fn move_steps(&self) -> usize {
        self.timelines.iter().map(AgentTimeline::move_count).max().unwrap_or(0)
    }

    /// Normalized copy: trailing goal waits trimmed, stays folded, cost re-evaluated.
    pub fn normalized(&self, kind: CostKind) -> Self {
        let timelines: Vec<_> = self.timelines.iter().map(AgentTimeline::normalized).collect();
        PrePlan::from_timelines(timelines, kind)
    }
}

/// A pre-plan together with a flag recording that the validator accepted it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Plan {
    pub timelines: Vec<AgentTimeline>,
    pub steps: usize,
    pub cost: Rational,
    pub certified: bool,
}

impl Plan {
    pub fn uncertified(pre: PrePlan) -> Self {
        Plan { timelines: pre.timelines, steps: pre.steps, cost: pre.cost, certified: false }
    }

    pub fn as_preplan(&self) -> PrePlan {
        PrePlan { timelines: self.timelines.clone(), steps: self.steps, cost: self.cost.clone() }
    }
}

/// Cost of a pre-plan after trimming trailing goal waits.
pub fn evaluate_cost(preplan: &PrePlan, kind: CostKind) -> Rational {
    let trimmed: Vec<AgentTimeline> = preplan.timelines.iter().map(AgentTimeline::normalized).collect();
    match kind {
        CostKind::SumOfCosts => trimmed.iter().map(|t| &t.final_arrive).sum(),
        CostKind::Makespan => trimmed
            .iter()
            .map(|t| t.final_arrive.clone())
            .max()
            .unwrap_or_else(Rational::zero),
        CostKind::Power => {
            let two = Rational::from_integer(2);
            trimmed
                .iter()
                .flat_map(|t| t.steps.iter())
                .map(|s| &two * s.action.duration() + &s.wait)
                .sum()
        }
    }
}

/// Shortest-path data from one vertex to an agent's goal.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PathEntry {
    /// Minimum total duration; `None` when the goal is unreachable.
    pub duration: Option<Rational>,
    /// Fewest hops among duration-minimal paths.
    pub hops_at_duration: Option<usize>,
    /// Fewest hops over all paths, ignoring durations.
    pub min_hops: Option<usize>,
}

impl PathEntry {
    pub fn reachable(&self) -> bool {
        self.duration.is_some()
    }
}

/// Per-vertex shortest-path entries towards one goal.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PathTable {
    pub goal: VertexId,
    pub entries: Vec<PathEntry>,
}

impl PathTable {
    pub fn get(&self, v: VertexId) -> &PathEntry {
        &self.entries[v]
    }

    /// Next vertex on the preferred duration-optimal path from `v`
    /// (fewest hops, then smallest vertex id).
    pub fn next_hop(&self, instance: &Instance, v: VertexId) -> Option<VertexId> {
        if v == self.goal {
            return None;
        }
        let (d, h) = match (&self.entries[v].duration, self.entries[v].hops_at_duration) {
            (Some(d), Some(h)) => (d, h),
            _ => return None,
        };
        instance
            .out_edges(v)
            .filter(|e| {
                let next = &self.entries[e.to];
                match (&next.duration, next.hops_at_duration) {
                    (Some(nd), Some(nh)) => &(&e.duration + nd) == d && nh + 1 == h,
                    _ => false,
                }
            })
            .map(|e| e.to)
            .min()
    }

    /// Preferred duration-optimal vertex path from `v` to the goal.
    pub fn path_from(&self, instance: &Instance, v: VertexId) -> Option<Vec<VertexId>> {
        self.entries[v].duration.as_ref()?;
        let mut path = vec![v];
        let mut cur = v;
        while let Some(next) = self.next_hop(instance, cur) {
            path.push(next);
            cur = next;
        }
        (cur == self.goal).then_some(path)
    }
}

/// Shortest durations and hop counts to the agent's goal over reversed edges.
pub fn shortest_path_table(instance: &Instance, agent: AgentId) -> PathTable {
    goal_table(instance, instance.agents()[agent].goal)
}

/// Same as [`shortest_path_table`] for an arbitrary goal vertex.
pub fn goal_table(instance: &Instance, goal: VertexId) -> PathTable {
    let n = instance.num_vertices();
    let mut best: Vec<Option<(Rational, usize)>> = vec![None; n];
    let mut heap = BinaryHeap::new();
    best[goal] = Some((Rational::zero(), 0));
    heap.push(Reverse((Rational::zero(), 0usize, goal)));
    while let Some(Reverse((d, h, v))) = heap.pop() {
        if best[v].as_ref() != Some(&(d.clone(), h)) {
            continue;
        }
        for e in instance.in_edges(v) {
            let cand = (&d + &e.duration, h + 1);
            let better = match &best[e.from] {
                None => true,
                Some(cur) => cand < *cur,
            };
            if better {
                best[e.from] = Some(cand.clone());
                heap.push(Reverse((cand.0, cand.1, e.from)));
            }
        }
    }
    let min_hops = bfs_hops(n, goal, |v| instance.in_edges(v).map(|e| e.from).collect());
    let entries = best
        .into_iter()
        .zip(min_hops)
        .map(|(b, mh)| PathEntry {
            duration: b.as_ref().map(|(d, _)| d.clone()),
            hops_at_duration: b.map(|(_, h)| h),
            min_hops: mh,
        })
        .collect();
    PathTable { goal, entries }
}

/// Fewest hops from `source` to every vertex along forward edges.
pub fn hops_from(instance: &Instance, source: VertexId) -> Vec<Option<usize>> {
    bfs_hops(instance.num_vertices(), source, |v| instance.out_edges(v).map(|e| e.to).collect())
}

fn bfs_hops(n: usize, source: VertexId, neighbors: impl Fn(VertexId) -> Vec<VertexId>) -> Vec<Option<usize>> {
    let mut dist = vec![None; n];
    dist[source] = Some(0);
    let mut queue = VecDeque::from([source]);
    while let Some(v) = queue.pop_front() {
        let d = dist[v].unwrap_or(0);
        for w in neighbors(v) {
            if dist[w].is_none() {
                dist[w] = Some(d + 1);
                queue.push_back(w);
            }
        }
    }
    dist
}

/// Timeline following a vertex path with no waits.
pub fn timeline_along(instance: &Instance, path: &[VertexId]) -> AgentTimeline {
    let mut steps = Vec::new();
    let mut t = Rational::zero();
    for pair in path.windows(2) {
        let e = instance.edge(pair[0], pair[1]).expect("path follows graph edges");
        steps.push(TimelineStep {
            vertex: pair[0],
            arrive: t.clone(),
            wait: Rational::zero(),
            action: StepAction::Move { to: pair[1], duration: e.duration.clone() },
        });
        t += &e.duration;
    }
    AgentTimeline { steps, final_vertex: *path.last().expect("non-empty path"), final_arrive: t }
}

/// Collision-ignoring optimum: every agent follows its preferred
/// duration-optimal path. Returns the pre-plan, its cost and the step lower
/// bound `h0` (largest hop-minimal path length over agents).
pub fn opt_preplan(instance: &Instance, kind: CostKind) -> Result<(PrePlan, Rational, usize), ModelError> {
    let mut timelines = Vec::with_capacity(instance.num_agents());
    let mut h0 = 0;
    for a in instance.agents() {
        let table = shortest_path_table(instance, a.id);
        let path = table.path_from(instance, a.start).ok_or(ModelError::Unreachable(a.id))?;
        h0 = h0.max(table.get(a.start).min_hops.ok_or(ModelError::Unreachable(a.id))?);
        timelines.push(timeline_along(instance, &path));
    }
    let pre = PrePlan::from_timelines(timelines, kind);
    let t_min = pre.cost.clone();
    Ok((pre, t_min, h0))
}
