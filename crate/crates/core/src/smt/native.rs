//! In-process CDCL(T) backend for linear real arithmetic.

use std::time::Instant;

use rustc_hash::FxHashMap;

use super::sat::{Lit, SearchResult, Solver, Theory, Var};
use super::simplex::{Delta, Simplex};
use super::term::{BoolVar, LinExpr, RealVar, Rel, Term};
use super::{Backend, BackendStats, Model, SatResult, SmtError};
use crate::rational::Rational;

/// Atom `x ≤ bound` over a simplex variable.
#[derive(Debug, Clone)]
struct Atom {
    x: u32,
    bound: Delta,
}

#[derive(Default)]
pub struct LraTheory {
    pub simplex: Simplex,
    atoms: Vec<Option<Atom>>,
    var_atoms: Vec<Vec<(Delta, Var)>>,
}

impl LraTheory {
    fn register_atom(&mut self, var: Var, x: u32, bound: Delta) {
        if self.atoms.len() <= var as usize {
            self.atoms.resize(var as usize + 1, None);
        }
        if self.var_atoms.len() <= x as usize {
            self.var_atoms.resize(x as usize + 1, Vec::new());
        }
        self.var_atoms[x as usize].push((bound.clone(), var));
        self.atoms[var as usize] = Some(Atom { x, bound });
    }

    fn atom(&self, var: Var) -> Option<&Atom> {
        self.atoms.get(var as usize).and_then(Option::as_ref)
    }
}

impl Theory for LraTheory {
    fn push_level(&mut self) {
        self.simplex.push_level();
    }

    fn backtrack(&mut self, level: usize) {
        self.simplex.backtrack(level);
    }

    fn assign(&mut self, lit: Lit, implied: &mut Vec<(Lit, Lit)>) -> Result<(), Vec<Lit>> {
        let Some(atom) = self.atom(lit.var()).cloned() else {
            return Ok(());
        };
        let others = self.var_atoms.get(atom.x as usize).map(Vec::as_slice).unwrap_or(&[]);
        if lit.is_positive() {
            for (b, v) in others {
                if *v != lit.var() && *b >= atom.bound {
                    implied.push((Lit::new(*v, true), lit));
                }
            }
            self.simplex.assert_upper(atom.x, atom.bound, lit)
        } else {
            // ¬(x ≤ c + kδ) is x ≥ c + (k+1)δ for k ∈ {−1, 0}.
            let lower = Delta::new(atom.bound.c.clone(), &atom.bound.k + Rational::one());
            for (b, v) in others {
                if *v != lit.var() && *b < lower {
                    implied.push((Lit::new(*v, false), lit));
                }
            }
            self.simplex.assert_lower(atom.x, lower, lit)
        }
    }

    fn check(&mut self) -> Result<(), Vec<Lit>> {
        self.simplex.check()
    }

    fn phase(&self, var: Var) -> Option<bool> {
        self.atom(var).map(|a| self.simplex.value(a.x) <= &a.bound)
    }
}

enum AtomLit {
    Const(bool),
    Lit(Lit),
}

pub struct NativeBackend {
    sat: Solver<LraTheory>,
    bool_map: Vec<Var>,
    real_map: Vec<u32>,
    slack_map: FxHashMap<Vec<(u32, Rational)>, u32>,
    atom_map: FxHashMap<(u32, Delta), Var>,
    scopes: Vec<Var>,
    checks: u64,
}

impl Default for NativeBackend {
    fn default() -> Self {
        Self::new()
    }
}

impl NativeBackend {
    pub fn new() -> Self {
        NativeBackend {
            sat: Solver::new(LraTheory::default()),
            bool_map: Vec::new(),
            real_map: Vec::new(),
            slack_map: FxHashMap::default(),
            atom_map: FxHashMap::default(),
            scopes: Vec::new(),
            checks: 0,
        }
    }

    fn atom_lit(&mut self, e: &LinExpr, strict: bool) -> AtomLit {
        let terms = e.terms();
        if terms.is_empty() {
            let c = e.constant_part();
            return AtomLit::Const(if strict { c.is_negative() } else { !c.is_positive() });
        }
        let a0 = terms[0].1.clone();
        let k = -(e.constant_part() / &a0);
        let x = if terms.len() == 1 {
            self.real_map[terms[0].0 .0 as usize]
        } else {
            let key: Vec<(u32, Rational)> =
                terms.iter().map(|(v, c)| (self.real_map[v.0 as usize], c / &a0)).collect();
            match self.slack_map.get(&key) {
                Some(&s) => s,
                None => {
                    let s = self.sat.theory.simplex.add_row(&key);
                    self.slack_map.insert(key, s);
                    s
                }
            }
        };
        // a0 > 0: F ≤ k (or F < k).  a0 < 0: F ≥ k = ¬(F < k), F > k = ¬(F ≤ k).
        let (bound_k, positive) = match (a0.is_positive(), strict) {
            (true, false) => (Rational::zero(), true),
            (true, true) => (-Rational::one(), true),
            (false, false) => (-Rational::one(), false),
            (false, true) => (Rational::zero(), false),
        };
        let bound = Delta::new(k, bound_k);
        let var = match self.atom_map.get(&(x, bound.clone())) {
            Some(&v) => v,
            None => {
                let v = self.sat.new_var();
                self.sat.theory.register_atom(v, x, bound.clone());
                self.atom_map.insert((x, bound), v);
                v
            }
        };
        AtomLit::Lit(Lit::new(var, positive))
    }

    fn bool_lit(&self, v: BoolVar, positive: bool) -> Result<Lit, SmtError> {
        self.bool_map
            .get(v.0 as usize)
            .map(|&s| Lit::new(s, positive))
            .ok_or_else(|| SmtError::Backend(format!("undeclared Boolean variable {}", v.0)))
    }

    fn add_clause(&mut self, lits: &[Lit]) {
        self.sat.add_clause(lits);
    }

    /// Asserts an NNF term, guarded by `guard` (clause gets `guard` added).
    fn add_top(&mut self, t: &Term, guard: Option<Lit>) -> Result<(), SmtError> {
        match t {
            Term::And(ts) => {
                for c in ts {
                    self.add_top(c, guard)?;
                }
                Ok(())
            }
            Term::ExactlyOne(vs) => {
                let lits: Vec<Lit> = vs.iter().map(|v| self.bool_lit(*v, true)).collect::<Result<_, _>>()?;
                let mut alo: Vec<Lit> = guard.into_iter().collect();
                alo.extend(&lits);
                self.add_clause(&alo);
                match guard {
                    None => {
                        self.sat.add_at_most_one(&lits);
                    }
                    Some(g) => {
                        for i in 0..lits.len() {
                            for j in i + 1..lits.len() {
                                self.add_clause(&[g, !lits[i], !lits[j]]);
                            }
                        }
                    }
                }
                Ok(())
            }
            _ => {
                let mut clause: Vec<Lit> = guard.into_iter().collect();
                if !self.collect_or(t, &mut clause)? {
                    self.add_clause(&clause);
                }
                Ok(())
            }
        }
    }

    /// Appends the literals of a disjunction; returns true if it is trivially satisfied.
    fn collect_or(&mut self, t: &Term, out: &mut Vec<Lit>) -> Result<bool, SmtError> {
        match t {
            Term::Const(b) => Ok(*b),
            Term::Or(ts) => {
                for c in ts {
                    if self.collect_or(c, out)? {
                        return Ok(true);
                    }
                }
                Ok(false)
            }
            Term::Bool(v) => {
                out.push(self.bool_lit(*v, true)?);
                Ok(false)
            }
            Term::Not(inner) => match inner.as_ref() {
                Term::Bool(v) => {
                    out.push(self.bool_lit(*v, false)?);
                    Ok(false)
                }
                _ => Err(SmtError::Backend("term not in negation normal form".into())),
            },
            Term::Rel(e, rel) => match self.atom_lit(e, *rel == Rel::Lt) {
                AtomLit::Const(b) => Ok(b),
                AtomLit::Lit(l) => {
                    out.push(l);
                    Ok(false)
                }
            },
            Term::And(_) | Term::ExactlyOne(_) => {
                let aux = self.sat.new_var();
                out.push(Lit::new(aux, true));
                self.add_top(t, Some(Lit::new(aux, false)))?;
                Ok(false)
            }
        }
    }

    pub fn sat_stats(&self) -> &super::sat::SatStats {
        &self.sat.stats
    }
}

/// Negation normal form with equalities split into two inequalities.
pub(crate) fn nnf(t: &Term, negate: bool) -> Term {
    match t {
        Term::Const(b) => Term::Const(*b != negate),
        Term::Bool(v) => Term::lit(*v, !negate),
        Term::Not(x) => nnf(x, !negate),
        Term::And(ts) => {
            let cs = ts.iter().map(|c| nnf(c, negate)).collect();
            if negate {
                Term::Or(cs)
            } else {
                Term::And(cs)
            }
        }
        Term::Or(ts) => {
            let cs = ts.iter().map(|c| nnf(c, negate)).collect();
            if negate {
                Term::And(cs)
            } else {
                Term::Or(cs)
            }
        }
        Term::Rel(e, Rel::Le) => {
            if negate {
                Term::Rel(-e.clone(), Rel::Lt)
            } else {
                t.clone()
            }
        }
        Term::Rel(e, Rel::Lt) => {
            if negate {
                Term::Rel(-e.clone(), Rel::Le)
            } else {
                t.clone()
            }
        }
        Term::Rel(e, Rel::Eq) => {
            if negate {
                Term::Or(vec![Term::Rel(e.clone(), Rel::Lt), Term::Rel(-e.clone(), Rel::Lt)])
            } else {
                Term::And(vec![Term::Rel(e.clone(), Rel::Le), Term::Rel(-e.clone(), Rel::Le)])
            }
        }
        Term::ExactlyOne(vs) => {
            if !negate {
                return t.clone();
            }
            let mut alts = vec![Term::And(vs.iter().map(|v| Term::lit(*v, false)).collect())];
            for i in 0..vs.len() {
                for j in i + 1..vs.len() {
                    alts.push(Term::And(vec![Term::Bool(vs[i]), Term::Bool(vs[j])]));
                }
            }
            Term::Or(alts)
        }
    }
}

impl Backend for NativeBackend {
    fn name(&self) -> &'static str {
        "native"
    }

    fn declare_bool(&mut self, var: BoolVar) {
        debug_assert_eq!(var.0 as usize, self.bool_map.len());
        let v = self.sat.new_var();
        self.bool_map.push(v);
    }

    fn declare_real(&mut self, var: RealVar) {
        debug_assert_eq!(var.0 as usize, self.real_map.len());
        let x = self.sat.theory.simplex.new_var();
        self.real_map.push(x);
    }

    fn assert_term(&mut self, term: &Term) -> Result<(), SmtError> {
        self.assert_term_at(term, self.scopes.len())
    }

    fn assert_term_at(&mut self, term: &Term, depth: usize) -> Result<(), SmtError> {
        if depth > self.scopes.len() {
            return Err(SmtError::Backend(format!("scope {depth} is not open")));
        }
        let guard = depth.checked_sub(1).map(|d| Lit::new(self.scopes[d], false));
        let t = nnf(term, false);
        self.add_top(&t, guard)
    }

    fn push(&mut self) -> Result<(), SmtError> {
        let s = self.sat.new_var();
        self.scopes.push(s);
        Ok(())
    }

    fn pop(&mut self) -> Result<(), SmtError> {
        let s = self.scopes.pop().ok_or(SmtError::ScopeUnderflow)?;
        self.sat.add_clause(&[Lit::new(s, false)]);
        Ok(())
    }

    fn check_sat(&mut self, deadline: Option<Instant>) -> Result<SatResult, SmtError> {
        self.checks += 1;
        let assumptions: Vec<Lit> = self.scopes.iter().map(|&s| Lit::new(s, true)).collect();
        match self.sat.solve(&assumptions, deadline) {
            SearchResult::Unsat => Ok(SatResult::Unsat),
            SearchResult::Unknown => Ok(SatResult::Unknown),
            SearchResult::Sat => {
                let bools = self.bool_map.iter().map(|&v| self.sat.value(v).unwrap_or(false)).collect();
                let simplex = &self.sat.theory.simplex;
                let delta = simplex.concrete_delta();
                let reals = self.real_map.iter().map(|&x| simplex.concrete_value(x, &delta)).collect();
                self.sat.backtrack(0);
                Ok(SatResult::Sat(Model::new(bools, reals)))
            }
        }
    }

    fn hint(&mut self, var: BoolVar, polarity: bool, priority: i64) -> bool {
        match self.bool_map.get(var.0 as usize) {
            Some(&v) => {
                self.sat.set_hint(v, polarity, priority);
                true
            }
            None => false,
        }
    }

    fn stats(&self) -> BackendStats {
        let s = &self.sat.stats;
        BackendStats {
            checks: self.checks,
            conflicts: s.conflicts,
            decisions: s.decisions,
            propagations: s.propagations,
            theory_conflicts: s.theory_conflicts,
            pivots: self.sat.theory.simplex.pivots,
        }
    }
}
