//! Incremental satisfiability interface for linear real arithmetic.
//!
//! [`SolverSession`] owns the variable registry and scope bookkeeping and
//! forwards to a [`Backend`]. The production backend is [`NativeBackend`];
//! [`MockBackend`] replays scripted answers and [`FaultInjector`] forces
//! budget exhaustion on selected calls.

mod mock;
mod native;
pub mod sat;
pub mod simplex;
pub mod term;

use std::fmt::Write as _;
use std::time::Instant;

use thiserror::Error;

use crate::rational::Rational;

pub use mock::{FaultInjector, MockBackend, MockLog, MockResponse};
pub use native::NativeBackend;
pub use term::{BoolVar, LinExpr, RealVar, Rel, Term};

/// Environment variable naming the backend implementation.
pub const BACKEND_ENV: &str = "MAPF_LRA_SMT";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SmtError {
    #[error("backend error: {0}")]
    Backend(String),
    #[error("pop without matching push")]
    ScopeUnderflow,
    #[error("unknown SMT backend {0:?}")]
    UnknownBackend(String),
    #[error("model violates assertion: {0}")]
    ModelCheck(String),
}

/// Satisfying assignment with exact values.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Model {
    bools: Vec<bool>,
    reals: Vec<Rational>,
}

impl Model {
    pub fn new(bools: Vec<bool>, reals: Vec<Rational>) -> Self {
        Model { bools, reals }
    }

    pub fn bool(&self, v: BoolVar) -> bool {
        self.bools.get(v.0 as usize).copied().unwrap_or(false)
    }

    pub fn real(&self, v: RealVar) -> Rational {
        self.reals.get(v.0 as usize).cloned().unwrap_or_default()
    }

    pub fn eval(&self, t: &Term) -> bool {
        t.eval(&|b| self.bool(b), &|r| self.real(r))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SatResult {
    Sat(Model),
    Unsat,
    Unknown,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct BackendStats {
    pub checks: u64,
    pub conflicts: u64,
    pub decisions: u64,
    pub propagations: u64,
    pub theory_conflicts: u64,
    pub pivots: u64,
}

/// Incremental decision procedure. Variables are declared with dense ids.
pub trait Backend: Send {
    fn name(&self) -> &'static str;
    fn declare_bool(&mut self, var: BoolVar);
    fn declare_real(&mut self, var: RealVar);
    fn assert_term(&mut self, term: &Term) -> Result<(), SmtError>;
    /// Asserts into the scope opened by the `depth`-th push (0 is the base level),
    /// so it is retracted together with that scope.
    fn assert_term_at(&mut self, term: &Term, depth: usize) -> Result<(), SmtError>;
    fn push(&mut self) -> Result<(), SmtError>;
    fn pop(&mut self) -> Result<(), SmtError>;
    fn check_sat(&mut self, deadline: Option<Instant>) -> Result<SatResult, SmtError>;
    /// Advisory branching preference; returns false if ignored.
    fn hint(&mut self, var: BoolVar, polarity: bool, priority: i64) -> bool;
    fn stats(&self) -> BackendStats {
        BackendStats::default()
    }
}

/// Backend chosen by [`BACKEND_ENV`]; defaults to the native engine.
pub fn backend_from_env() -> Result<Box<dyn Backend>, SmtError> {
    match std::env::var(BACKEND_ENV) {
        Err(_) => Ok(Box::new(NativeBackend::new())),
        Ok(name) => backend_by_name(&name),
    }
}

pub fn backend_by_name(name: &str) -> Result<Box<dyn Backend>, SmtError> {
    match name.trim().to_ascii_lowercase().as_str() {
        "" | "native" => Ok(Box::new(NativeBackend::new())),
        other => Err(SmtError::UnknownBackend(other.to_string())),
    }
}

/// Session over a backend: variable registry, scopes, optional assertion log.
pub struct SolverSession {
    backend: Box<dyn Backend>,
    bool_names: Vec<String>,
    real_names: Vec<String>,
    /// Assertions per scope; index 0 is the base level. Kept only when logging.
    log: Vec<Vec<Term>>,
    depth: usize,
    keep_log: bool,
    verify_models: bool,
    hints_issued: u64,
}

impl SolverSession {
    pub fn new(backend: Box<dyn Backend>) -> Self {
        SolverSession {
            backend,
            bool_names: Vec::new(),
            real_names: Vec::new(),
            log: vec![Vec::new()],
            depth: 0,
            keep_log: false,
            verify_models: false,
            hints_issued: 0,
        }
    }

    /// Keeps every assertion so models can be re-checked and the stack dumped.
    pub fn with_logging(mut self, on: bool) -> Self {
        self.keep_log = on;
        self
    }

    /// Re-evaluates all active assertions on every returned model (implies logging).
    pub fn with_model_verification(mut self, on: bool) -> Self {
        self.verify_models = on;
        if on {
            self.keep_log = true;
        }
        self
    }

    pub fn backend_name(&self) -> &'static str {
        self.backend.name()
    }

    pub fn backend_stats(&self) -> BackendStats {
        self.backend.stats()
    }

    pub fn new_bool(&mut self, name: impl Into<String>) -> BoolVar {
        let v = BoolVar(self.bool_names.len() as u32);
        self.bool_names.push(name.into());
        self.backend.declare_bool(v);
        v
    }

    pub fn new_real(&mut self, name: impl Into<String>) -> RealVar {
        let v = RealVar(self.real_names.len() as u32);
        self.real_names.push(name.into());
        self.backend.declare_real(v);
        v
    }

    pub fn bool_name(&self, v: BoolVar) -> &str {
        &self.bool_names[v.0 as usize]
    }

    pub fn real_name(&self, v: RealVar) -> &str {
        &self.real_names[v.0 as usize]
    }

    pub fn bool_by_name(&self, name: &str) -> Option<BoolVar> {
        self.bool_names.iter().position(|n| n == name).map(|i| BoolVar(i as u32))
    }

    pub fn real_by_name(&self, name: &str) -> Option<RealVar> {
        self.real_names.iter().position(|n| n == name).map(|i| RealVar(i as u32))
    }

    pub fn num_bools(&self) -> usize {
        self.bool_names.len()
    }

    pub fn num_reals(&self) -> usize {
        self.real_names.len()
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn assert(&mut self, term: Term) -> Result<(), SmtError> {
        self.backend.assert_term(&term)?;
        if self.keep_log {
            self.log[self.depth].push(term);
        }
        Ok(())
    }

    /// Asserts into an enclosing scope without disturbing the ones above it.
    pub fn assert_at(&mut self, depth: usize, term: Term) -> Result<(), SmtError> {
        if depth > self.depth {
            return Err(SmtError::Backend(format!("scope {depth} is not open (depth {})", self.depth)));
        }
        self.backend.assert_term_at(&term, depth)?;
        if self.keep_log {
            self.log[depth].push(term);
        }
        Ok(())
    }

    pub fn push(&mut self) -> Result<(), SmtError> {
        self.backend.push()?;
        self.depth += 1;
        self.log.push(Vec::new());
        Ok(())
    }

    pub fn pop(&mut self) -> Result<(), SmtError> {
        if self.depth == 0 {
            return Err(SmtError::ScopeUnderflow);
        }
        self.backend.pop()?;
        self.depth -= 1;
        self.log.pop();
        Ok(())
    }

    pub fn check_sat(&mut self, deadline: Option<Instant>) -> Result<SatResult, SmtError> {
        let r = self.backend.check_sat(deadline)?;
        if let (SatResult::Sat(m), true) = (&r, self.verify_models) {
            for t in self.log.iter().flatten() {
                if !m.eval(t) {
                    return Err(SmtError::ModelCheck(self.render(t)));
                }
            }
        }
        Ok(r)
    }

    /// Advisory: the backend may prefer deciding `var` to `polarity` first.
    pub fn hint_branching(&mut self, var: BoolVar, polarity: bool, priority: i64) {
        if var.0 as usize >= self.bool_names.len() {
            log::warn!("branching hint on unregistered variable {}", var.0);
            return;
        }
        self.hints_issued += 1;
        self.backend.hint(var, polarity, priority);
    }

    pub fn hints_issued(&self) -> u64 {
        self.hints_issued
    }

    fn render(&self, t: &Term) -> String {
        let mut s = String::new();
        let _ = t.write_smtlib(&mut s, &|b| self.smt_bool(b), &|r| self.smt_real(r));
        s
    }

    fn smt_bool(&self, b: BoolVar) -> String {
        format!("|{}|", self.bool_names[b.0 as usize])
    }

    fn smt_real(&self, r: RealVar) -> String {
        format!("|{}|", self.real_names[r.0 as usize])
    }

    /// Current assertion stack as SMT-LIB text (requires logging).
    pub fn to_smtlib(&self) -> String {
        let mut out = String::from("(set-logic QF_LRA)\n");
        for n in &self.bool_names {
            let _ = writeln!(out, "(declare-fun |{n}| () Bool)");
        }
        for n in &self.real_names {
            let _ = writeln!(out, "(declare-fun |{n}| () Real)");
        }
        for (d, scope) in self.log.iter().enumerate() {
            if d > 0 {
                out.push_str("(push 1)\n");
            }
            for t in scope {
                let _ = writeln!(out, "(assert {})", self.render(t));
            }
        }
        out.push_str("(check-sat)\n");
        out
    }
}
