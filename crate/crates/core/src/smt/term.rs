//! Quantifier-free linear real arithmetic terms.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use crate::rational::Rational;

/// Handle to a Boolean variable registered with a session.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BoolVar(pub u32);

/// Handle to a real-valued variable registered with a session.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RealVar(pub u32);

/// `Σ coeff·var + constant`, kept sorted by variable with no zero coefficients.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct LinExpr {
    terms: Vec<(RealVar, Rational)>,
    constant: Rational,
}

impl LinExpr {
    pub fn zero() -> Self {
        LinExpr::default()
    }

    pub fn var(v: RealVar) -> Self {
        LinExpr { terms: vec![(v, Rational::one())], constant: Rational::zero() }
    }

    pub fn constant(c: Rational) -> Self {
        LinExpr { terms: Vec::new(), constant: c }
    }

    pub fn from_terms(terms: impl IntoIterator<Item = (RealVar, Rational)>, constant: Rational) -> Self {
        let mut e = LinExpr { terms: terms.into_iter().collect(), constant };
        e.normalize();
        e
    }

    /// Sum of variables with unit coefficients.
    pub fn sum(vars: impl IntoIterator<Item = RealVar>) -> Self {
        Self::from_terms(vars.into_iter().map(|v| (v, Rational::one())), Rational::zero())
    }

    fn normalize(&mut self) {
        self.terms.sort_by_key(|(v, _)| *v);
        let mut out: Vec<(RealVar, Rational)> = Vec::with_capacity(self.terms.len());
        for (v, c) in self.terms.drain(..) {
            match out.last_mut() {
                Some((lv, lc)) if *lv == v => *lc += c,
                _ => out.push((v, c)),
            }
        }
        out.retain(|(_, c)| !c.is_zero());
        self.terms = out;
    }

    pub fn terms(&self) -> &[(RealVar, Rational)] {
        &self.terms
    }

    pub fn constant_part(&self) -> &Rational {
        &self.constant
    }

    pub fn is_constant(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn scale(&self, k: &Rational) -> Self {
        if k.is_zero() {
            return LinExpr::zero();
        }
        LinExpr {
            terms: self.terms.iter().map(|(v, c)| (*v, c * k)).collect(),
            constant: &self.constant * k,
        }
    }

    pub fn eval(&self, real: impl Fn(RealVar) -> Rational) -> Rational {
        self.terms.iter().map(|(v, c)| c * real(*v)).sum::<Rational>() + &self.constant
    }

    pub fn le(self, rhs: impl Into<LinExpr>) -> Term {
        Term::Rel(self - rhs.into(), Rel::Le)
    }

    pub fn lt(self, rhs: impl Into<LinExpr>) -> Term {
        Term::Rel(self - rhs.into(), Rel::Lt)
    }

    pub fn ge(self, rhs: impl Into<LinExpr>) -> Term {
        Term::Rel(rhs.into() - self, Rel::Le)
    }

    pub fn gt(self, rhs: impl Into<LinExpr>) -> Term {
        Term::Rel(rhs.into() - self, Rel::Lt)
    }

    pub fn equals(self, rhs: impl Into<LinExpr>) -> Term {
        Term::Rel(self - rhs.into(), Rel::Eq)
    }
}

impl From<RealVar> for LinExpr {
    fn from(v: RealVar) -> Self {
        LinExpr::var(v)
    }
}

impl From<Rational> for LinExpr {
    fn from(c: Rational) -> Self {
        LinExpr::constant(c)
    }
}

impl From<&Rational> for LinExpr {
    fn from(c: &Rational) -> Self {
        LinExpr::constant(c.clone())
    }
}

impl<T: Into<LinExpr>> Add<T> for LinExpr {
    type Output = LinExpr;
    fn add(mut self, rhs: T) -> LinExpr {
        let rhs = rhs.into();
        self.terms.extend(rhs.terms);
        self.constant += rhs.constant;
        self.normalize();
        self
    }
}

impl<T: Into<LinExpr>> Sub<T> for LinExpr {
    type Output = LinExpr;
    fn sub(self, rhs: T) -> LinExpr {
        self + (-rhs.into())
    }
}

impl Neg for LinExpr {
    type Output = LinExpr;
    fn neg(self) -> LinExpr {
        self.scale(&-Rational::one())
    }
}

impl Mul<&Rational> for LinExpr {
    type Output = LinExpr;
    fn mul(self, k: &Rational) -> LinExpr {
        self.scale(k)
    }
}

impl<T: Into<LinExpr>> Add<T> for RealVar {
    type Output = LinExpr;
    fn add(self, rhs: T) -> LinExpr {
        LinExpr::var(self) + rhs
    }
}

impl<T: Into<LinExpr>> Sub<T> for RealVar {
    type Output = LinExpr;
    fn sub(self, rhs: T) -> LinExpr {
        LinExpr::var(self) - rhs
    }
}

/// Relation of a linear expression to zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Rel {
    Le,
    Lt,
    Eq,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Term {
    Const(bool),
    Bool(BoolVar),
    Not(Box<Term>),
    And(Vec<Term>),
    Or(Vec<Term>),
    /// `expr rel 0`.
    Rel(LinExpr, Rel),
    ExactlyOne(Vec<BoolVar>),
}

impl Term {
    pub fn lit(v: BoolVar, positive: bool) -> Term {
        if positive {
            Term::Bool(v)
        } else {
            Term::Not(Box::new(Term::Bool(v)))
        }
    }

    pub fn not(t: Term) -> Term {
        match t {
            Term::Not(inner) => *inner,
            Term::Const(b) => Term::Const(!b),
            other => Term::Not(Box::new(other)),
        }
    }

    pub fn implies(a: Term, b: Term) -> Term {
        Term::Or(vec![Term::not(a), b])
    }

    /// Evaluates under the given assignment.
    pub fn eval(&self, boolean: &impl Fn(BoolVar) -> bool, real: &impl Fn(RealVar) -> Rational) -> bool {
        match self {
            Term::Const(b) => *b,
            Term::Bool(v) => boolean(*v),
            Term::Not(t) => !t.eval(boolean, real),
            Term::And(ts) => ts.iter().all(|t| t.eval(boolean, real)),
            Term::Or(ts) => ts.iter().any(|t| t.eval(boolean, real)),
            Term::Rel(e, rel) => {
                let v = e.eval(real);
                match rel {
                    Rel::Le => !v.is_positive(),
                    Rel::Lt => v.is_negative(),
                    Rel::Eq => v.is_zero(),
                }
            }
            Term::ExactlyOne(vs) => vs.iter().filter(|v| boolean(**v)).count() == 1,
        }
    }

    /// Writes the term in SMT-LIB syntax using the given variable namers.
    pub fn write_smtlib(
        &self,
        out: &mut impl fmt::Write,
        bname: &impl Fn(BoolVar) -> String,
        rname: &impl Fn(RealVar) -> String,
    ) -> fmt::Result {
        match self {
            Term::Const(b) => write!(out, "{b}"),
            Term::Bool(v) => write!(out, "{}", bname(*v)),
            Term::Not(t) => {
                write!(out, "(not ")?;
                t.write_smtlib(out, bname, rname)?;
                write!(out, ")")
            }
            Term::And(ts) | Term::Or(ts) => {
                if ts.is_empty() {
                    return write!(out, "{}", matches!(self, Term::And(_)));
                }
                write!(out, "({}", if matches!(self, Term::And(_)) { "and" } else { "or" })?;
                for t in ts {
                    write!(out, " ")?;
                    t.write_smtlib(out, bname, rname)?;
                }
                write!(out, ")")
            }
            Term::Rel(e, rel) => {
                let op = match rel {
                    Rel::Le => "<=",
                    Rel::Lt => "<",
                    Rel::Eq => "=",
                };
                write!(out, "({op} ")?;
                write_linexpr(out, e, rname)?;
                write!(out, " 0.0)")
            }
            Term::ExactlyOne(vs) => {
                write!(out, "((_ pbeq 1")?;
                for _ in vs {
                    write!(out, " 1")?;
                }
                write!(out, ")")?;
                for v in vs {
                    write!(out, " {}", bname(*v))?;
                }
                write!(out, ")")
            }
        }
    }
}

fn write_rational(out: &mut impl fmt::Write, r: &Rational) -> fmt::Result {
    let body = |out: &mut dyn fmt::Write, r: &Rational| -> fmt::Result {
        if r.is_integer() {
            write!(out, "{}.0", r.numer())
        } else {
            write!(out, "(/ {}.0 {}.0)", r.numer(), r.denom())
        }
    };
    if r.is_negative() {
        write!(out, "(- ")?;
        body(out, &r.abs())?;
        write!(out, ")")
    } else {
        body(out, r)
    }
}

fn write_linexpr(out: &mut impl fmt::Write, e: &LinExpr, rname: &impl Fn(RealVar) -> String) -> fmt::Result {
    write!(out, "(+")?;
    for (v, c) in e.terms() {
        write!(out, " (* ")?;
        write_rational(out, c)?;
        write!(out, " {})", rname(*v))?;
    }
    write!(out, " ")?;
    write_rational(out, e.constant_part())?;
    write!(out, ")")
}
