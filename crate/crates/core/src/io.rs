//! JSON instance and plan files.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{Agent, AgentId, AgentTimeline, Coord, EdgeAction, Instance, ModelError, Plan, StepAction, TimelineStep, Vertex, VertexId};
use crate::rational::Rational;

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("malformed JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("malformed plan: {0}")]
    Plan(String),
}

fn read(path: &Path) -> Result<String, IoError> {
    fs::read_to_string(path).map_err(|source| IoError::Io { path: path.display().to_string(), source })
}

fn write(path: &Path, text: &str) -> Result<(), IoError> {
    fs::write(path, text).map_err(|source| IoError::Io { path: path.display().to_string(), source })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VertexRecord {
    pub id: VertexId,
    pub x: Rational,
    pub y: Rational,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EdgeRecord {
    pub from: VertexId,
    pub to: VertexId,
    /// Defaults to the Euclidean length.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub duration: Option<Rational>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AgentRecord {
    pub id: AgentId,
    pub start: VertexId,
    pub goal: VertexId,
    pub radius: Rational,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InstanceFile {
    pub name: String,
    pub vertices: Vec<VertexRecord>,
    pub edges: Vec<EdgeRecord>,
    pub agents: Vec<AgentRecord>,
}

impl From<&Instance> for InstanceFile {
    fn from(inst: &Instance) -> Self {
        InstanceFile {
            name: inst.name().to_string(),
            vertices: inst
                .vertices()
                .iter()
                .map(|v| VertexRecord { id: v.id, x: v.coord.x.clone(), y: v.coord.y.clone() })
                .collect(),
            edges: inst
                .edges()
                .iter()
                .map(|e| EdgeRecord { from: e.from, to: e.to, duration: Some(e.duration.clone()) })
                .collect(),
            agents: inst
                .agents()
                .iter()
                .map(|a| AgentRecord { id: a.id, start: a.start, goal: a.goal, radius: a.radius.clone() })
                .collect(),
        }
    }
}

impl InstanceFile {
    pub fn to_instance(&self) -> Result<Instance, ModelError> {
        let mut vertices: Vec<Vertex> = self
            .vertices
            .iter()
            .map(|v| Vertex { id: v.id, coord: Coord::new(v.x.clone(), v.y.clone()) })
            .collect();
        vertices.sort_by_key(|v| v.id);
        let coord = |id: VertexId| {
            vertices
                .get(id)
                .filter(|v| v.id == id)
                .map(|v| &v.coord)
                .ok_or_else(|| ModelError::InvalidInstance(format!("edge references missing vertex {id}")))
        };
        let mut edges = Vec::with_capacity(self.edges.len());
        for e in &self.edges {
            let duration = match &e.duration {
                Some(d) => d.clone(),
                None => coord(e.from)?.euclidean_duration(coord(e.to)?),
            };
            edges.push(EdgeAction { from: e.from, to: e.to, duration });
        }
        let mut agents: Vec<Agent> = self
            .agents
            .iter()
            .map(|a| Agent { id: a.id, start: a.start, goal: a.goal, radius: a.radius.clone() })
            .collect();
        agents.sort_by_key(|a| a.id);
        Instance::new(self.name.clone(), vertices, edges, agents)
    }
}

pub fn instance_to_json(inst: &Instance) -> String {
    serde_json::to_string_pretty(&InstanceFile::from(inst)).expect("instance serializes")
}

pub fn instance_from_json(text: &str) -> Result<Instance, IoError> {
    let file: InstanceFile = serde_json::from_str(text)?;
    Ok(file.to_instance()?)
}

pub fn read_instance(path: impl AsRef<Path>) -> Result<Instance, IoError> {
    instance_from_json(&read(path.as_ref())?)
}

pub fn write_instance(path: impl AsRef<Path>, inst: &Instance) -> Result<(), IoError> {
    write(path.as_ref(), &instance_to_json(inst))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MoveRecord {
    pub from: VertexId,
    pub to: VertexId,
    pub duration: Rational,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActionRecord {
    pub t_arrive: Rational,
    pub wait: Rational,
    #[serde(rename = "move")]
    pub mv: Option<MoveRecord>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AgentPlanRecord {
    pub id: AgentId,
    pub start: VertexId,
    pub actions: Vec<ActionRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanFile {
    pub cost: Rational,
    pub steps: usize,
    #[serde(default)]
    pub certified: bool,
    pub agents: Vec<AgentPlanRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stats: Option<serde_json::Value>,
}

impl PlanFile {
    pub fn from_plan(plan: &Plan, stats: Option<serde_json::Value>) -> Self {
        let agents = plan
            .timelines
            .iter()
            .enumerate()
            .map(|(id, tl)| AgentPlanRecord {
                id,
                start: tl.start_vertex(),
                actions: tl
                    .steps
                    .iter()
                    .map(|s| ActionRecord {
                        t_arrive: s.arrive.clone(),
                        wait: s.wait.clone(),
                        mv: match &s.action {
                            StepAction::Move { to, duration } => {
                                Some(MoveRecord { from: s.vertex, to: *to, duration: duration.clone() })
                            }
                            StepAction::Stay => None,
                        },
                    })
                    .collect(),
            })
            .collect();
        PlanFile { cost: plan.cost.clone(), steps: plan.steps, certified: plan.certified, agents, stats }
    }

    /// Rebuilds the plan; timing consistency is left to the validator.
    pub fn to_plan(&self) -> Result<Plan, IoError> {
        let mut records: Vec<&AgentPlanRecord> = self.agents.iter().collect();
        records.sort_by_key(|a| a.id);
        let mut timelines = Vec::with_capacity(records.len());
        for (i, rec) in records.iter().enumerate() {
            if rec.id != i {
                return Err(IoError::Plan(format!("agent ids must be dense 0..{}, found {}", records.len(), rec.id)));
            }
            let mut at = rec.start;
            let mut steps = Vec::with_capacity(rec.actions.len());
            for (j, a) in rec.actions.iter().enumerate() {
                let action = match &a.mv {
                    Some(m) => {
                        if m.from != at {
                            return Err(IoError::Plan(format!(
                                "agent {i} step {j} moves from {} but is at {at}",
                                m.from
                            )));
                        }
                        at = m.to;
                        StepAction::Move { to: m.to, duration: m.duration.clone() }
                    }
                    None => StepAction::Stay,
                };
                let vertex = a.mv.as_ref().map_or(at, |m| m.from);
                steps.push(TimelineStep { vertex, arrive: a.t_arrive.clone(), wait: a.wait.clone(), action });
            }
            let final_arrive = steps.last().map_or_else(Rational::zero, TimelineStep::end);
            timelines.push(AgentTimeline { steps, final_vertex: at, final_arrive });
        }
        Ok(Plan { timelines, steps: self.steps, cost: self.cost.clone(), certified: self.certified })
    }
}

pub fn plan_to_json(plan: &Plan, stats: Option<serde_json::Value>) -> String {
    serde_json::to_string_pretty(&PlanFile::from_plan(plan, stats)).expect("plan serializes")
}

pub fn plan_from_json(text: &str) -> Result<Plan, IoError> {
    let file: PlanFile = serde_json::from_str(text)?;
    file.to_plan()
}

pub fn read_plan(path: impl AsRef<Path>) -> Result<Plan, IoError> {
    plan_from_json(&read(path.as_ref())?)
}

pub fn write_plan(path: impl AsRef<Path>, plan: &Plan, stats: Option<serde_json::Value>) -> Result<(), IoError> {
    write(path.as_ref(), &plan_to_json(plan, stats))
}

pub fn write_json<T: Serialize>(path: impl AsRef<Path>, value: &T) -> Result<(), IoError> {
    write(path.as_ref(), &serde_json::to_string_pretty(value)?)
}
