//! Continuous-time multi-agent path finding over linear real arithmetic with
//! lazily learned conflict clauses.

pub mod batch;
pub mod collision;
pub mod encoder;
pub mod gen;
pub mod io;
pub mod model;
pub mod movingai;
pub mod planner;
pub mod rational;
pub mod render;
pub mod smt;
pub mod validator;

pub use collision::{in_conflict, safe_delay, wait_conflict_window, ConflictWindow, TimedMotion};
pub use gen::{gen_bottleneck, gen_empty, BenchmarkSpec};
pub use io::{read_instance, read_plan, write_instance, write_plan, InstanceFile, PlanFile};
pub use model::{Agent, AgentTimeline, CostKind, Coord, EdgeAction, Instance, Plan, PrePlan, StepAction, Vertex};
pub use planner::{solve, solve_with_backend, PlanError, Solution, SolveConfig, SolveStats};
pub use rational::{approx_rational, Rational, RoundingMode};
pub use validator::{permutation_oracle, validate, ValidationReport};
