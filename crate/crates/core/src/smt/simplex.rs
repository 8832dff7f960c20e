//! General simplex over delta-rationals with backtrackable bounds.

use std::cmp::Ordering;
use std::collections::BTreeSet;
use std::ops::{Add, Sub};

use rustc_hash::FxHashSet;

use super::sat::Lit;
use crate::rational::Rational;

/// `c + k·δ` for an infinitesimal δ > 0.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct Delta {
    pub c: Rational,
    pub k: Rational,
}

impl Delta {
    pub fn new(c: Rational, k: Rational) -> Self {
        Delta { c, k }
    }

    pub fn real(c: Rational) -> Self {
        Delta { c, k: Rational::zero() }
    }

    fn scale(&self, a: &Rational) -> Delta {
        Delta { c: &self.c * a, k: &self.k * a }
    }

    fn div(&self, a: &Rational) -> Delta {
        Delta { c: &self.c / a, k: &self.k / a }
    }
}

impl Ord for Delta {
    fn cmp(&self, other: &Self) -> Ordering {
        self.c.cmp(&other.c).then_with(|| self.k.cmp(&other.k))
    }
}

impl PartialOrd for Delta {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Add<&Delta> for &Delta {
    type Output = Delta;
    fn add(self, o: &Delta) -> Delta {
        Delta { c: &self.c + &o.c, k: &self.k + &o.k }
    }
}

impl Sub<&Delta> for &Delta {
    type Output = Delta;
    fn sub(self, o: &Delta) -> Delta {
        Delta { c: &self.c - &o.c, k: &self.k - &o.k }
    }
}

#[derive(Debug, Clone)]
pub struct Bound {
    pub value: Delta,
    pub reason: Lit,
}

struct Row {
    basic: u32,
    /// `basic = Σ coeff·var` over nonbasic variables, sorted by var.
    coeffs: Vec<(u32, Rational)>,
}

const NONBASIC: u32 = u32::MAX;

#[derive(Default)]
pub struct Simplex {
    values: Vec<Delta>,
    lower: Vec<Option<Bound>>,
    upper: Vec<Option<Bound>>,
    row_of: Vec<u32>,
    rows: Vec<Row>,
    cols: Vec<FxHashSet<u32>>,
    trail: Vec<(u32, bool, Option<Bound>)>,
    marks: Vec<usize>,
    to_check: BTreeSet<u32>,
    pub pivots: u64,
}

fn coeff_in(row: &[(u32, Rational)], v: u32) -> Option<&Rational> {
    row.binary_search_by_key(&v, |(x, _)| *x).ok().map(|i| &row[i].1)
}

impl Simplex {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn num_vars(&self) -> usize {
        self.values.len()
    }

    pub fn new_var(&mut self) -> u32 {
        let v = self.values.len() as u32;
        self.values.push(Delta::default());
        self.lower.push(None);
        self.upper.push(None);
        self.row_of.push(NONBASIC);
        self.cols.push(FxHashSet::default());
        v
    }

    /// Defines a fresh basic variable `s = Σ coeff·var`.
    pub fn add_row(&mut self, expr: &[(u32, Rational)]) -> u32 {
        let s = self.new_var();
        let mut acc: std::collections::BTreeMap<u32, Rational> = std::collections::BTreeMap::new();
        for (v, a) in expr {
            let r = self.row_of[*v as usize];
            if r == NONBASIC {
                *acc.entry(*v).or_default() += a;
            } else {
                for (w, b) in &self.rows[r as usize].coeffs {
                    *acc.entry(*w).or_default() += a * b;
                }
            }
        }
        let coeffs: Vec<(u32, Rational)> = acc.into_iter().filter(|(_, c)| !c.is_zero()).collect();
        let mut value = Delta::default();
        for (v, a) in &coeffs {
            value = &value + &self.values[*v as usize].scale(a);
        }
        let r = self.rows.len() as u32;
        for (v, _) in &coeffs {
            self.cols[*v as usize].insert(r);
        }
        self.values[s as usize] = value;
        self.row_of[s as usize] = r;
        self.rows.push(Row { basic: s, coeffs });
        s
    }

    pub fn value(&self, v: u32) -> &Delta {
        &self.values[v as usize]
    }

    pub fn push_level(&mut self) {
        self.marks.push(self.trail.len());
    }

    pub fn backtrack(&mut self, level: usize) {
        if self.marks.len() <= level {
            return;
        }
        let lim = self.marks[level];
        while self.trail.len() > lim {
            let (v, is_upper, old) = self.trail.pop().expect("trail entry");
            if is_upper {
                self.upper[v as usize] = old;
            } else {
                self.lower[v as usize] = old;
            }
        }
        self.marks.truncate(level);
    }

    pub fn assert_upper(&mut self, x: u32, v: Delta, reason: Lit) -> Result<(), Vec<Lit>> {
        let xi = x as usize;
        if let Some(u) = &self.upper[xi] {
            if u.value <= v {
                return Ok(());
            }
        }
        if let Some(l) = &self.lower[xi] {
            if v < l.value {
                return Err(vec![reason, l.reason]);
            }
        }
        let old = self.upper[xi].replace(Bound { value: v.clone(), reason });
        self.trail.push((x, true, old));
        if self.row_of[xi] == NONBASIC {
            if self.values[xi] > v {
                self.update(x, v);
            }
        } else {
            self.to_check.insert(x);
        }
        Ok(())
    }

    pub fn assert_lower(&mut self, x: u32, v: Delta, reason: Lit) -> Result<(), Vec<Lit>> {
        let xi = x as usize;
        if let Some(l) = &self.lower[xi] {
            if l.value >= v {
                return Ok(());
            }
        }
        if let Some(u) = &self.upper[xi] {
            if v > u.value {
                return Err(vec![reason, u.reason]);
            }
        }
        let old = self.lower[xi].replace(Bound { value: v.clone(), reason });
        self.trail.push((x, false, old));
        if self.row_of[xi] == NONBASIC {
            if self.values[xi] < v {
                self.update(x, v);
            }
        } else {
            self.to_check.insert(x);
        }
        Ok(())
    }

    pub fn lower(&self, x: u32) -> Option<&Bound> {
        self.lower[x as usize].as_ref()
    }

    pub fn upper(&self, x: u32) -> Option<&Bound> {
        self.upper[x as usize].as_ref()
    }

    fn update(&mut self, x: u32, v: Delta) {
        let diff = &v - &self.values[x as usize];
        for &r in &self.cols[x as usize] {
            let row = &self.rows[r as usize];
            let a = coeff_in(&row.coeffs, x).expect("column entry");
            let b = row.basic;
            self.values[b as usize] = &self.values[b as usize] + &diff.scale(a);
            self.to_check.insert(b);
        }
        self.values[x as usize] = v;
    }

    fn below_lower(&self, x: u32) -> bool {
        matches!(&self.lower[x as usize], Some(l) if self.values[x as usize] < l.value)
    }

    fn above_upper(&self, x: u32) -> bool {
        matches!(&self.upper[x as usize], Some(u) if self.values[x as usize] > u.value)
    }

    fn can_increase(&self, y: u32) -> bool {
        match &self.upper[y as usize] {
            None => true,
            Some(u) => self.values[y as usize] < u.value,
        }
    }

    fn can_decrease(&self, y: u32) -> bool {
        match &self.lower[y as usize] {
            None => true,
            Some(l) => self.values[y as usize] > l.value,
        }
    }

    /// Restores feasibility or returns the literals of an infeasible bound set.
    pub fn check(&mut self) -> Result<(), Vec<Lit>> {
        while let Some(x) = self.to_check.pop_first() {
            if self.row_of[x as usize] == NONBASIC {
                continue;
            }
            let increase = if self.below_lower(x) {
                true
            } else if self.above_upper(x) {
                false
            } else {
                continue;
            };
            let r = self.row_of[x as usize] as usize;
            let mut pick: Option<u32> = None;
            for (y, a) in &self.rows[r].coeffs {
                let ok = if increase == a.is_positive() { self.can_increase(*y) } else { self.can_decrease(*y) };
                if ok && pick.is_none_or(|p| *y < p) {
                    pick = Some(*y);
                }
            }
            match pick {
                None => {
                    let mut expl = Vec::with_capacity(self.rows[r].coeffs.len() + 1);
                    let own = if increase { &self.lower[x as usize] } else { &self.upper[x as usize] };
                    expl.push(own.as_ref().expect("violated bound").reason);
                    for (y, a) in &self.rows[r].coeffs {
                        let b = if increase == a.is_positive() { &self.upper[*y as usize] } else { &self.lower[*y as usize] };
                        expl.push(b.as_ref().expect("blocking bound").reason);
                    }
                    expl.sort();
                    expl.dedup();
                    self.to_check.insert(x);
                    return Err(expl);
                }
                Some(y) => {
                    let target = if increase {
                        self.lower[x as usize].as_ref().expect("bound").value.clone()
                    } else {
                        self.upper[x as usize].as_ref().expect("bound").value.clone()
                    };
                    self.pivot_and_update(x, y, target);
                }
            }
        }
        Ok(())
    }

    fn pivot_and_update(&mut self, x: u32, y: u32, v: Delta) {
        self.pivots += 1;
        let r = self.row_of[x as usize];
        let a = coeff_in(&self.rows[r as usize].coeffs, y).expect("pivot coefficient").clone();
        let theta = (&v - &self.values[x as usize]).div(&a);
        self.values[x as usize] = v;
        self.values[y as usize] = &self.values[y as usize] + &theta;
        let others: Vec<u32> = self.cols[y as usize].iter().copied().filter(|&o| o != r).collect();
        for &o in &others {
            let row = &self.rows[o as usize];
            let c = coeff_in(&row.coeffs, y).expect("column entry");
            let b = row.basic;
            self.values[b as usize] = &self.values[b as usize] + &theta.scale(c);
            self.to_check.insert(b);
        }
        self.pivot(r, x, y, &a, &others);
        self.to_check.insert(y);
    }

    fn pivot(&mut self, r: u32, x: u32, y: u32, a: &Rational, others: &[u32]) {
        // x = a·y + Σ c_j·z_j  ⇒  y = (1/a)·x − Σ (c_j/a)·z_j
        let inv = a.recip();
        let old = std::mem::take(&mut self.rows[r as usize].coeffs);
        let mut new_coeffs: Vec<(u32, Rational)> = Vec::with_capacity(old.len());
        for (z, c) in old {
            if z == y {
                continue;
            }
            new_coeffs.push((z, -(&c * &inv)));
        }
        let pos = new_coeffs.binary_search_by_key(&x, |(v, _)| *v).unwrap_err();
        new_coeffs.insert(pos, (x, inv));
        self.cols[y as usize].clear();
        self.cols[x as usize].insert(r);
        for &o in others {
            let c = coeff_in(&self.rows[o as usize].coeffs, y).expect("column entry").clone();
            let old_row = std::mem::take(&mut self.rows[o as usize].coeffs);
            let merged = merge_rows(&old_row, y, &c, &new_coeffs);
            for (v, _) in &old_row {
                if *v != y && coeff_in(&merged, *v).is_none() {
                    self.cols[*v as usize].remove(&o);
                }
            }
            for (v, _) in &merged {
                self.cols[*v as usize].insert(o);
            }
            self.rows[o as usize].coeffs = merged;
        }
        self.rows[r as usize].coeffs = new_coeffs;
        self.rows[r as usize].basic = y;
        self.row_of[x as usize] = NONBASIC;
        self.row_of[y as usize] = r;
    }

    /// Concrete value for δ such that every asserted bound holds.
    pub fn concrete_delta(&self) -> Rational {
        let mut delta = Rational::one();
        for (i, v) in self.values.iter().enumerate() {
            if let Some(l) = &self.lower[i] {
                // l.c + l.k δ <= v.c + v.k δ
                if l.value.c < v.c && l.value.k > v.k {
                    delta = delta.min((&v.c - &l.value.c) / (&l.value.k - &v.k));
                }
            }
            if let Some(u) = &self.upper[i] {
                if v.c < u.value.c && v.k > u.value.k {
                    delta = delta.min((&u.value.c - &v.c) / (&v.k - &u.value.k));
                }
            }
        }
        delta
    }

    pub fn concrete_value(&self, v: u32, delta: &Rational) -> Rational {
        let d = &self.values[v as usize];
        &d.c + &d.k * delta
    }
}

/// `row − c·y + c·sub` where `row` contains `y` and `sub` expresses `y`.
fn merge_rows(row: &[(u32, Rational)], y: u32, c: &Rational, sub: &[(u32, Rational)]) -> Vec<(u32, Rational)> {
    let mut out = Vec::with_capacity(row.len() + sub.len());
    let (mut i, mut j) = (0, 0);
    while i < row.len() || j < sub.len() {
        let take_row = j >= sub.len() || (i < row.len() && row[i].0 < sub[j].0);
        let take_sub = i >= row.len() || (j < sub.len() && sub[j].0 < row[i].0);
        if take_row {
            if row[i].0 != y {
                out.push(row[i].clone());
            }
            i += 1;
        } else if take_sub {
            out.push((sub[j].0, c * &sub[j].1));
            j += 1;
        } else {
            let v = row[i].0;
            let val = if v == y { c * &sub[j].1 } else { &row[i].1 + c * &sub[j].1 };
            if !val.is_zero() {
                out.push((v, val));
            }
            i += 1;
            j += 1;
        }
    }
    out
}
