use std::collections::VecDeque;
use std::sync::{Arc, Mutex};
use std::time::Instant;

use super::term::{BoolVar, RealVar, Term};
use super::{Backend, BackendStats, Model, SatResult, SmtError};

/// Scripted answer for one `check_sat` call.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MockResponse {
    Sat(Model),
    Unsat,
    Unknown,
    Error(String),
}

/// Shared record of calls made to a [`MockBackend`].
pub type MockLog = Arc<Mutex<Vec<String>>>;

/// Replays a fixed list of responses; once exhausted it answers `Unknown`.
pub struct MockBackend {
    responses: VecDeque<MockResponse>,
    log: MockLog,
    depth: usize,
    checks: u64,
}

impl MockBackend {
    pub fn new(responses: impl IntoIterator<Item = MockResponse>) -> Self {
        MockBackend {
            responses: responses.into_iter().collect(),
            log: Arc::default(),
            depth: 0,
            checks: 0,
        }
    }

    pub fn log(&self) -> MockLog {
        Arc::clone(&self.log)
    }

    fn record(&self, s: String) {
        self.log.lock().expect("mock log poisoned").push(s);
    }
}

impl Backend for MockBackend {
    fn name(&self) -> &'static str {
        "mock"
    }

    fn declare_bool(&mut self, var: BoolVar) {
        self.record(format!("bool {}", var.0));
    }

    fn declare_real(&mut self, var: RealVar) {
        self.record(format!("real {}", var.0));
    }

    fn assert_term(&mut self, term: &Term) -> Result<(), SmtError> {
        let mut s = String::new();
        let _ = term.write_smtlib(&mut s, &|b| format!("b{}", b.0), &|r| format!("r{}", r.0));
        self.record(format!("assert {s}"));
        Ok(())
    }

    fn assert_term_at(&mut self, term: &Term, depth: usize) -> Result<(), SmtError> {
        if depth > self.depth {
            return Err(SmtError::Backend(format!("scope {depth} is not open")));
        }
        self.record(format!("at {depth}"));
        self.assert_term(term)
    }

    fn push(&mut self) -> Result<(), SmtError> {
        self.depth += 1;
        self.record("push".into());
        Ok(())
    }

    fn pop(&mut self) -> Result<(), SmtError> {
        if self.depth == 0 {
            return Err(SmtError::ScopeUnderflow);
        }
        self.depth -= 1;
        self.record("pop".into());
        Ok(())
    }

    fn check_sat(&mut self, _deadline: Option<Instant>) -> Result<SatResult, SmtError> {
        self.checks += 1;
        self.record("check".into());
        match self.responses.pop_front().unwrap_or(MockResponse::Unknown) {
            MockResponse::Sat(m) => Ok(SatResult::Sat(m)),
            MockResponse::Unsat => Ok(SatResult::Unsat),
            MockResponse::Unknown => Ok(SatResult::Unknown),
            MockResponse::Error(e) => Err(SmtError::Backend(e)),
        }
    }

    fn hint(&mut self, var: BoolVar, polarity: bool, priority: i64) -> bool {
        self.record(format!("hint {} {polarity} {priority}", var.0));
        true
    }

    fn stats(&self) -> BackendStats {
        BackendStats { checks: self.checks, ..BackendStats::default() }
    }
}

/// Wraps a backend and answers `Unknown` on selected `check_sat` calls (1-based).
pub struct FaultInjector {
    inner: Box<dyn Backend>,
    fail_on: Vec<u64>,
    fail_from: Option<u64>,
    calls: u64,
}

impl FaultInjector {
    pub fn new(inner: Box<dyn Backend>) -> Self {
        FaultInjector { inner, fail_on: Vec::new(), fail_from: None, calls: 0 }
    }

    pub fn unknown_on(mut self, call: u64) -> Self {
        self.fail_on.push(call);
        self
    }

    pub fn unknown_from(mut self, call: u64) -> Self {
        self.fail_from = Some(call);
        self
    }
}

impl Backend for FaultInjector {
    fn name(&self) -> &'static str {
        self.inner.name()
    }

    fn declare_bool(&mut self, var: BoolVar) {
        self.inner.declare_bool(var)
    }

    fn declare_real(&mut self, var: RealVar) {
        self.inner.declare_real(var)
    }

    fn assert_term(&mut self, term: &Term) -> Result<(), SmtError> {
        self.inner.assert_term(term)
    }

    fn assert_term_at(&mut self, term: &Term, depth: usize) -> Result<(), SmtError> {
        self.inner.assert_term_at(term, depth)
    }

    fn push(&mut self) -> Result<(), SmtError> {
        self.inner.push()
    }

    fn pop(&mut self) -> Result<(), SmtError> {
        self.inner.pop()
    }

    fn check_sat(&mut self, deadline: Option<Instant>) -> Result<SatResult, SmtError> {
        self.calls += 1;
        if self.fail_on.contains(&self.calls) || self.fail_from.is_some_and(|f| self.calls >= f) {
            return Ok(SatResult::Unknown);
        }
        self.inner.check_sat(deadline)
    }

    fn hint(&mut self, var: BoolVar, polarity: bool, priority: i64) -> bool {
        self.inner.hint(var, polarity, priority)
    }

    fn stats(&self) -> BackendStats {
        self.inner.stats()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::smt::{LinExpr, NativeBackend, SolverSession};
    use crate::Rational;

    #[test]
    fn mock_replays_and_logs() {
        let mock = MockBackend::new([MockResponse::Unsat, MockResponse::Error("boom".into())]);
        let log = mock.log();
        let mut s = SolverSession::new(Box::new(mock));
        let x = s.new_real("x");
        s.push().unwrap();
        s.assert(LinExpr::var(x).ge(Rational::zero())).unwrap();
        assert_eq!(s.check_sat(None).unwrap(), SatResult::Unsat);
        assert!(matches!(s.check_sat(None), Err(SmtError::Backend(_))));
        assert_eq!(s.check_sat(None).unwrap(), SatResult::Unknown);
        let log = log.lock().unwrap();
        assert_eq!(log[0], "real 0");
        assert_eq!(log[1], "push");
        assert!(log[2].starts_with("assert"));
        assert_eq!(log.iter().filter(|l| *l == "check").count(), 3);
    }

    #[test]
    fn injector_forces_unknown() {
        let inj = FaultInjector::new(Box::new(NativeBackend::new())).unknown_on(2);
        let mut s = SolverSession::new(Box::new(inj));
        assert!(matches!(s.check_sat(None).unwrap(), SatResult::Sat(_)));
        assert_eq!(s.check_sat(None).unwrap(), SatResult::Unknown);
        assert!(matches!(s.check_sat(None).unwrap(), SatResult::Sat(_)));
    }
}
