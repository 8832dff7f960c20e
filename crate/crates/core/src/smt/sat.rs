//! CDCL SAT search with two watched literals, native at-most-one groups,
//! VSIDS with phase saving, Luby restarts and a pluggable theory.

use std::time::Instant;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Lit(u32);

pub type Var = u32;

impl Lit {
    pub fn new(var: Var, positive: bool) -> Lit {
        Lit(var << 1 | (!positive) as u32)
    }

    pub fn var(self) -> Var {
        self.0 >> 1
    }

    pub fn is_positive(self) -> bool {
        self.0 & 1 == 0
    }

    pub fn code(self) -> usize {
        self.0 as usize
    }
}

impl std::ops::Not for Lit {
    type Output = Lit;
    fn not(self) -> Lit {
        Lit(self.0 ^ 1)
    }
}

/// Theory solver driven by the SAT search.
pub trait Theory {
    fn push_level(&mut self);
    /// Undoes everything recorded above `level`.
    fn backtrack(&mut self, level: usize);
    /// Informs the theory that `lit` became true. Implied literals are pushed
    /// as `(implied, reason)` with `reason` a true literal. On conflict returns
    /// a set of true literals that is jointly inconsistent.
    fn assign(&mut self, lit: Lit, implied: &mut Vec<(Lit, Lit)>) -> Result<(), Vec<Lit>>;
    /// Full consistency check of the asserted literals.
    fn check(&mut self) -> Result<(), Vec<Lit>>;
    /// Preferred polarity for a theory atom, if `var` is one.
    fn phase(&self, var: Var) -> Option<bool>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Reason {
    Decision,
    Clause(u32),
    /// Binary clause `{implied, other}` with `other` false.
    Binary(Lit),
}

struct Clause {
    lits: Vec<Lit>,
    learnt: bool,
    deleted: bool,
    activity: f64,
    lbd: u32,
}

#[derive(Clone, Copy)]
struct Watch {
    clause: u32,
    blocker: Lit,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SearchResult {
    Sat,
    Unsat,
    Unknown,
}

#[derive(Debug, Clone, Default)]
pub struct SatStats {
    pub conflicts: u64,
    pub decisions: u64,
    pub propagations: u64,
    pub restarts: u64,
    pub theory_conflicts: u64,
    pub learnt_clauses: u64,
}

/// Indexed max-heap on variable activity.
#[derive(Default)]
struct VarHeap {
    heap: Vec<Var>,
    pos: Vec<Option<usize>>,
}

impl VarHeap {
    fn grow(&mut self, n: usize) {
        self.pos.resize(n, None);
    }

    fn contains(&self, v: Var) -> bool {
        self.pos[v as usize].is_some()
    }

    fn insert(&mut self, v: Var, act: &[f64]) {
        if self.contains(v) {
            return;
        }
        self.heap.push(v);
        self.pos[v as usize] = Some(self.heap.len() - 1);
        self.up(self.heap.len() - 1, act);
    }

    fn increased(&mut self, v: Var, act: &[f64]) {
        if let Some(i) = self.pos[v as usize] {
            self.up(i, act);
        }
    }

    fn pop(&mut self, act: &[f64]) -> Option<Var> {
        let top = *self.heap.first()?;
        let last = self.heap.pop().expect("non-empty");
        self.pos[top as usize] = None;
        if !self.heap.is_empty() {
            self.heap[0] = last;
            self.pos[last as usize] = Some(0);
            self.down(0, act);
        }
        Some(top)
    }

    fn up(&mut self, mut i: usize, act: &[f64]) {
        let v = self.heap[i];
        while i > 0 {
            let p = (i - 1) / 2;
            if act[self.heap[p] as usize] >= act[v as usize] {
                break;
            }
            self.heap[i] = self.heap[p];
            self.pos[self.heap[i] as usize] = Some(i);
            i = p;
        }
        self.heap[i] = v;
        self.pos[v as usize] = Some(i);
    }

    fn down(&mut self, mut i: usize, act: &[f64]) {
        let v = self.heap[i];
        let n = self.heap.len();
        loop {
            let l = 2 * i + 1;
            if l >= n {
                break;
            }
            let r = l + 1;
            let c = if r < n && act[self.heap[r] as usize] > act[self.heap[l] as usize] { r } else { l };
            if act[self.heap[c] as usize] <= act[v as usize] {
                break;
            }
            self.heap[i] = self.heap[c];
            self.pos[self.heap[i] as usize] = Some(i);
            i = c;
        }
        self.heap[i] = v;
        self.pos[v as usize] = Some(i);
    }
}

fn luby(mut i: u64) -> u64 {
    // Luby sequence 1,1,2,1,1,2,4,...
    let mut size = 1u64;
    let mut seq = 0u32;
    while size < i + 1 {
        seq += 1;
        size = 2 * size + 1;
    }
    while size - 1 != i {
        size = (size - 1) >> 1;
        seq -= 1;
        i %= size;
    }
    1u64 << seq
}

pub struct Solver<T: Theory> {
    pub theory: T,
    clauses: Vec<Clause>,
    watches: Vec<Vec<Watch>>,
    amo_groups: Vec<Vec<Lit>>,
    amo_occ: Vec<Vec<u32>>,
    assigns: Vec<i8>,
    level: Vec<u32>,
    reason: Vec<Reason>,
    trail: Vec<Lit>,
    trail_lim: Vec<usize>,
    qhead: usize,
    thead: usize,
    theory_dirty: bool,
    activity: Vec<f64>,
    var_inc: f64,
    clause_inc: f64,
    heap: VarHeap,
    saved_phase: Vec<bool>,
    hint: Vec<Option<(i64, bool)>>,
    hint_order: Vec<Var>,
    hint_order_stale: bool,
    hint_cursor: usize,
    seen: Vec<bool>,
    inconsistent: bool,
    num_learnts: usize,
    max_learnts: f64,
    units_since_simplify: bool,
    pub stats: SatStats,
    implied_buf: Vec<(Lit, Lit)>,
}

const RESTART_BASE: u64 = 100;

impl<T: Theory> Solver<T> {
    pub fn new(theory: T) -> Self {
        Solver {
            theory,
            clauses: Vec::new(),
            watches: Vec::new(),
            amo_groups: Vec::new(),
            amo_occ: Vec::new(),
            assigns: Vec::new(),
            level: Vec::new(),
            reason: Vec::new(),
            trail: Vec::new(),
            trail_lim: Vec::new(),
            qhead: 0,
            thead: 0,
            theory_dirty: false,
            activity: Vec::new(),
            var_inc: 1.0,
            clause_inc: 1.0,
            heap: VarHeap::default(),
            saved_phase: Vec::new(),
            hint: Vec::new(),
            hint_order: Vec::new(),
            hint_order_stale: false,
            hint_cursor: 0,
            seen: Vec::new(),
            inconsistent: false,
            num_learnts: 0,
            max_learnts: 4000.0,
            units_since_simplify: false,
            stats: SatStats::default(),
            implied_buf: Vec::new(),
        }
    }

    pub fn num_vars(&self) -> usize {
        self.assigns.len()
    }

    pub fn new_var(&mut self) -> Var {
        let v = self.assigns.len() as Var;
        self.assigns.push(0);
        self.level.push(0);
        self.reason.push(Reason::Decision);
        self.activity.push(0.0);
        self.saved_phase.push(false);
        self.hint.push(None);
        self.seen.push(false);
        self.watches.push(Vec::new());
        self.watches.push(Vec::new());
        self.amo_occ.push(Vec::new());
        self.heap.grow(self.assigns.len());
        self.heap.insert(v, &self.activity);
        v
    }

    fn lit_value(&self, l: Lit) -> i8 {
        let a = self.assigns[l.var() as usize];
        if l.is_positive() {
            a
        } else {
            -a
        }
    }

    pub fn value(&self, v: Var) -> Option<bool> {
        match self.assigns[v as usize] {
            0 => None,
            a => Some(a > 0),
        }
    }

    pub fn decision_level(&self) -> usize {
        self.trail_lim.len()
    }

    pub fn is_inconsistent(&self) -> bool {
        self.inconsistent
    }

    /// Records a preferred polarity and priority for deciding `v`.
    pub fn set_hint(&mut self, v: Var, polarity: bool, priority: i64) {
        self.hint[v as usize] = Some((priority, polarity));
        self.hint_order_stale = true;
    }

    pub fn clear_hints(&mut self) {
        for h in &mut self.hint {
            *h = None;
        }
        self.hint_order.clear();
        self.hint_order_stale = false;
    }

    fn enqueue(&mut self, l: Lit, r: Reason) {
        let v = l.var() as usize;
        debug_assert_eq!(self.assigns[v], 0);
        self.assigns[v] = if l.is_positive() { 1 } else { -1 };
        self.level[v] = self.trail_lim.len() as u32;
        self.reason[v] = r;
        self.trail.push(l);
        if self.trail_lim.is_empty() {
            self.units_since_simplify = true;
        }
    }

    fn new_decision_level(&mut self) {
        self.trail_lim.push(self.trail.len());
        self.theory.push_level();
    }

    pub fn backtrack(&mut self, lvl: usize) {
        if self.trail_lim.len() <= lvl {
            return;
        }
        let lim = self.trail_lim[lvl];
        for i in (lim..self.trail.len()).rev() {
            let l = self.trail[i];
            let v = l.var() as usize;
            self.saved_phase[v] = l.is_positive();
            self.assigns[v] = 0;
            self.reason[v] = Reason::Decision;
            if !self.heap.contains(l.var()) {
                self.heap.insert(l.var(), &self.activity);
            }
        }
        self.trail.truncate(lim);
        self.trail_lim.truncate(lvl);
        self.qhead = self.qhead.min(lim);
        self.thead = self.thead.min(lim);
        self.theory.backtrack(lvl);
        self.theory_dirty = true;
        self.hint_cursor = 0;
    }

    /// Adds a clause at decision level 0. Returns false if the solver became inconsistent.
    pub fn add_clause(&mut self, lits: &[Lit]) -> bool {
        if self.inconsistent {
            return false;
        }
        self.backtrack(0);
        let mut c: Vec<Lit> = lits.to_vec();
        c.sort();
        c.dedup();
        for w in c.windows(2) {
            if w[0] == !w[1] {
                return true;
            }
        }
        let mut kept = Vec::with_capacity(c.len());
        for &l in &c {
            match self.lit_value(l) {
                1 => return true,
                -1 => {}
                _ => kept.push(l),
            }
        }
        match kept.len() {
            0 => {
                self.inconsistent = true;
                false
            }
            1 => {
                self.enqueue(kept[0], Reason::Decision);
                true
            }
            _ => {
                self.attach(kept, false, 0);
                true
            }
        }
    }

    /// Adds an at-most-one constraint over the given literals at level 0.
    pub fn add_at_most_one(&mut self, lits: &[Lit]) -> bool {
        if self.inconsistent {
            return false;
        }
        self.backtrack(0);
        let g = self.amo_groups.len() as u32;
        self.amo_groups.push(lits.to_vec());
        for &l in lits {
            self.amo_occ[l.var() as usize].push(g);
        }
        // Existing level-0 truths must propagate through the new group.
        let trues: Vec<Lit> = lits.iter().copied().filter(|&l| self.lit_value(l) == 1).collect();
        if trues.len() > 1 {
            self.inconsistent = true;
            return false;
        }
        if let Some(&t) = trues.first() {
            for &l in lits {
                if l != t && self.lit_value(l) == 0 {
                    self.enqueue(!l, Reason::Binary(!t));
                }
            }
        }
        true
    }

    fn attach(&mut self, lits: Vec<Lit>, learnt: bool, lbd: u32) -> u32 {
        let cref = self.clauses.len() as u32;
        self.watches[lits[0].code()].push(Watch { clause: cref, blocker: lits[1] });
        self.watches[lits[1].code()].push(Watch { clause: cref, blocker: lits[0] });
        self.clauses.push(Clause { lits, learnt, deleted: false, activity: 0.0, lbd });
        if learnt {
            self.num_learnts += 1;
            self.stats.learnt_clauses += 1;
        }
        cref
    }

    /// Unit propagation over clauses, at-most-one groups and the theory.
    fn propagate(&mut self) -> Option<Vec<Lit>> {
        loop {
            while self.qhead < self.trail.len() {
                let p = self.trail[self.qhead];
                self.qhead += 1;
                self.stats.propagations += 1;
                if let Some(c) = self.propagate_amo(p) {
                    return Some(c);
                }
                if let Some(c) = self.propagate_clauses(p) {
                    return Some(c);
                }
            }
            if self.thead < self.trail.len() {
                while self.thead < self.trail.len() {
                    let p = self.trail[self.thead];
                    self.thead += 1;
                    let mut implied = std::mem::take(&mut self.implied_buf);
                    implied.clear();
                    match self.theory.assign(p, &mut implied) {
                        Err(expl) => {
                            self.implied_buf = implied;
                            self.stats.theory_conflicts += 1;
                            self.theory_dirty = true;
                            return Some(expl.into_iter().map(|l| !l).collect());
                        }
                        Ok(()) => {
                            self.theory_dirty = true;
                            for &(l, why) in &implied {
                                match self.lit_value(l) {
                                    1 => {}
                                    -1 => {
                                        self.implied_buf = implied;
                                        return Some(vec![l, !why]);
                                    }
                                    _ => self.enqueue(l, Reason::Binary(!why)),
                                }
                            }
                            self.implied_buf = implied;
                        }
                    }
                }
                continue;
            }
            if self.theory_dirty {
                self.theory_dirty = false;
                if let Err(expl) = self.theory.check() {
                    self.stats.theory_conflicts += 1;
                    self.theory_dirty = true;
                    return Some(expl.into_iter().map(|l| !l).collect());
                }
            }
            return None;
        }
    }

    fn propagate_amo(&mut self, p: Lit) -> Option<Vec<Lit>> {
        if !p.is_positive() && self.amo_occ[p.var() as usize].is_empty() {
            return None;
        }
        let groups = self.amo_occ[p.var() as usize].clone();
        for g in groups {
            let members = &self.amo_groups[g as usize];
            if !members.contains(&p) {
                continue;
            }
            for i in 0..self.amo_groups[g as usize].len() {
                let q = self.amo_groups[g as usize][i];
                if q == p {
                    continue;
                }
                match self.lit_value(q) {
                    1 => return Some(vec![!p, !q]),
                    0 => self.enqueue(!q, Reason::Binary(!p)),
                    _ => {}
                }
            }
        }
        None
    }

    fn propagate_clauses(&mut self, p: Lit) -> Option<Vec<Lit>> {
        let false_lit = !p;
        let mut ws = std::mem::take(&mut self.watches[false_lit.code()]);
        let mut i = 0;
        let mut j = 0;
        let mut conflict = None;
        while i < ws.len() {
            let w = ws[i];
            i += 1;
            if self.lit_value(w.blocker) == 1 {
                ws[j] = w;
                j += 1;
                continue;
            }
            let cref = w.clause as usize;
            if self.clauses[cref].deleted {
                continue;
            }
            {
                let lits = &mut self.clauses[cref].lits;
                if lits[0] == false_lit {
                    lits.swap(0, 1);
                }
            }
            let first = self.clauses[cref].lits[0];
            if first != w.blocker && self.lit_value(first) == 1 {
                ws[j] = Watch { clause: w.clause, blocker: first };
                j += 1;
                continue;
            }
            let mut found = false;
            let len = self.clauses[cref].lits.len();
            for k in 2..len {
                let l = self.clauses[cref].lits[k];
                if self.lit_value(l) != -1 {
                    self.clauses[cref].lits.swap(1, k);
                    self.watches[l.code()].push(Watch { clause: w.clause, blocker: first });
                    found = true;
                    break;
                }
            }
            if found {
                continue;
            }
            ws[j] = w;
            j += 1;
            if self.lit_value(first) == -1 {
                conflict = Some(self.clauses[cref].lits.clone());
                while i < ws.len() {
                    ws[j] = ws[i];
                    j += 1;
                    i += 1;
                }
            } else {
                self.enqueue(first, Reason::Clause(w.clause));
            }
        }
        ws.truncate(j);
        // Watches pushed onto this literal while iterating are appended.
        let pushed = std::mem::take(&mut self.watches[false_lit.code()]);
        ws.extend(pushed);
        self.watches[false_lit.code()] = ws;
        conflict
    }

    fn reason_lits(&self, v: Var, out: &mut Vec<Lit>) {
        out.clear();
        match self.reason[v as usize] {
            Reason::Decision => {}
            Reason::Binary(o) => out.push(o),
            Reason::Clause(c) => {
                out.extend(self.clauses[c as usize].lits.iter().copied().filter(|l| l.var() != v));
            }
        }
    }

    fn bump_var(&mut self, v: Var) {
        self.activity[v as usize] += self.var_inc;
        if self.activity[v as usize] > 1e100 {
            for a in &mut self.activity {
                *a *= 1e-100;
            }
            self.var_inc *= 1e-100;
        }
        self.heap.increased(v, &self.activity);
    }

    fn bump_clause(&mut self, c: u32) {
        let cl = &mut self.clauses[c as usize];
        if !cl.learnt {
            return;
        }
        cl.activity += self.clause_inc;
        if cl.activity > 1e20 {
            for c in &mut self.clauses {
                c.activity *= 1e-20;
            }
            self.clause_inc *= 1e-20;
        }
    }

    /// First-UIP conflict analysis. Returns the learnt clause (asserting literal
    /// first) and the backjump level, or `None` if the conflict is at level 0.
    fn analyze(&mut self, conflict: Vec<Lit>) -> Option<(Vec<Lit>, usize)> {
        let conf_level = conflict.iter().map(|l| self.level[l.var() as usize]).max().unwrap_or(0) as usize;
        if conf_level == 0 {
            return None;
        }
        if conf_level < self.decision_level() {
            self.backtrack(conf_level);
        }
        let mut learnt: Vec<Lit> = vec![Lit(0)];
        let mut counter = 0;
        let mut to_clear: Vec<Var> = Vec::new();
        let mut reason_buf = Vec::new();
        let mut current: Vec<Lit> = conflict;
        let mut idx = self.trail.len();
        let uip;
        loop {
            for &q in &current {
                let v = q.var();
                if self.seen[v as usize] || self.level[v as usize] == 0 {
                    continue;
                }
                self.seen[v as usize] = true;
                to_clear.push(v);
                self.bump_var(v);
                if self.level[v as usize] as usize >= conf_level {
                    counter += 1;
                } else {
                    learnt.push(q);
                }
            }
            // Next seen literal on the trail at the conflict level.
            loop {
                idx -= 1;
                if self.seen[self.trail[idx].var() as usize] {
                    break;
                }
            }
            let p = self.trail[idx];
            counter -= 1;
            if counter == 0 {
                uip = p;
                break;
            }
            if let Reason::Clause(c) = self.reason[p.var() as usize] {
                self.bump_clause(c);
            }
            self.reason_lits(p.var(), &mut reason_buf);
            current = reason_buf.clone();
        }
        learnt[0] = !uip;

        // Local minimization: drop literals implied by others in the clause.
        let mut minimized = vec![learnt[0]];
        for &l in &learnt[1..] {
            let v = l.var();
            let redundant = match self.reason[v as usize] {
                Reason::Decision => false,
                _ => {
                    self.reason_lits(v, &mut reason_buf);
                    reason_buf.iter().all(|r| self.seen[r.var() as usize] || self.level[r.var() as usize] == 0)
                }
            };
            if !redundant {
                minimized.push(l);
            }
        }
        for v in to_clear {
            self.seen[v as usize] = false;
        }
        let mut learnt = minimized;
        let mut back = 0usize;
        if learnt.len() > 1 {
            let mut best = 1;
            for i in 2..learnt.len() {
                if self.level[learnt[i].var() as usize] > self.level[learnt[best].var() as usize] {
                    best = i;
                }
            }
            learnt.swap(1, best);
            back = self.level[learnt[1].var() as usize] as usize;
        }
        Some((learnt, back))
    }

    fn lbd(&mut self, lits: &[Lit]) -> u32 {
        let mut levels: Vec<u32> = lits.iter().map(|l| self.level[l.var() as usize]).collect();
        levels.sort_unstable();
        levels.dedup();
        levels.len() as u32
    }

    fn reduce_db(&mut self) {
        let mut cands: Vec<u32> = (0..self.clauses.len() as u32)
            .filter(|&c| {
                let cl = &self.clauses[c as usize];
                cl.learnt && !cl.deleted && cl.lbd > 2 && !self.is_locked(c)
            })
            .collect();
        cands.sort_by(|&a, &b| {
            let (ca, cb) = (&self.clauses[a as usize], &self.clauses[b as usize]);
            cb.lbd.cmp(&ca.lbd).then(ca.activity.partial_cmp(&cb.activity).unwrap_or(std::cmp::Ordering::Equal))
        });
        let remove = cands.len() / 2;
        for &c in &cands[..remove] {
            self.clauses[c as usize].deleted = true;
            self.clauses[c as usize].lits = Vec::new();
            self.num_learnts -= 1;
        }
        self.max_learnts *= 1.1;
    }

    fn is_locked(&self, c: u32) -> bool {
        let cl = &self.clauses[c as usize];
        let first = cl.lits[0];
        self.reason[first.var() as usize] == Reason::Clause(c) && self.lit_value(first) == 1
    }

    /// Removes clauses satisfied at level 0.
    fn simplify(&mut self) {
        if !self.units_since_simplify || self.decision_level() != 0 {
            return;
        }
        self.units_since_simplify = false;
        for c in 0..self.clauses.len() {
            if self.clauses[c].deleted {
                continue;
            }
            let sat = self.clauses[c].lits.iter().any(|&l| self.lit_value(l) == 1 && self.level[l.var() as usize] == 0);
            if sat && !self.is_locked(c as u32) {
                if self.clauses[c].learnt {
                    self.num_learnts -= 1;
                }
                self.clauses[c].deleted = true;
                self.clauses[c].lits = Vec::new();
            }
        }
        for ws in &mut self.watches {
            let clauses = &self.clauses;
            ws.retain(|w| !clauses[w.clause as usize].deleted);
        }
    }

    fn pick_branch(&mut self) -> Option<Lit> {
        if self.hint_order_stale {
            let mut order: Vec<Var> = (0..self.hint.len() as Var).filter(|&v| self.hint[v as usize].is_some()).collect();
            order.sort_by_key(|&v| (std::cmp::Reverse(self.hint[v as usize].map(|h| h.0)), v));
            self.hint_order = order;
            self.hint_order_stale = false;
            self.hint_cursor = 0;
        }
        while self.hint_cursor < self.hint_order.len() {
            let v = self.hint_order[self.hint_cursor];
            if self.assigns[v as usize] == 0 {
                let pol = self.hint[v as usize].is_some_and(|h| h.1);
                return Some(Lit::new(v, pol));
            }
            self.hint_cursor += 1;
        }
        while let Some(v) = self.heap.pop(&self.activity) {
            if self.assigns[v as usize] == 0 {
                let pol = self.theory.phase(v).unwrap_or(self.saved_phase[v as usize]);
                return Some(Lit::new(v, pol));
            }
        }
        None
    }

    /// Searches for a model extending the given assumptions.
    pub fn solve(&mut self, assumptions: &[Lit], deadline: Option<Instant>) -> SearchResult {
        if self.inconsistent {
            return SearchResult::Unsat;
        }
        self.backtrack(0);
        if let Some(c) = self.propagate() {
            let _ = c;
            self.inconsistent = true;
            return SearchResult::Unsat;
        }
        self.simplify();
        let mut restart_idx = 0u64;
        let mut conflicts_left = luby(restart_idx) * RESTART_BASE;
        let mut tick = 0u32;
        loop {
            if let Some(conflict) = self.propagate() {
                self.stats.conflicts += 1;
                match self.analyze(conflict) {
                    None => {
                        self.inconsistent = true;
                        self.backtrack(0);
                        return SearchResult::Unsat;
                    }
                    Some((learnt, back)) => {
                        self.backtrack(back);
                        if learnt.len() == 1 {
                            self.enqueue(learnt[0], Reason::Decision);
                        } else {
                            let lbd = self.lbd(&learnt);
                            let first = learnt[0];
                            let cref = self.attach(learnt, true, lbd);
                            self.bump_clause(cref);
                            self.enqueue(first, Reason::Clause(cref));
                        }
                        self.var_inc /= 0.95;
                        self.clause_inc /= 0.999;
                    }
                }
                conflicts_left = conflicts_left.saturating_sub(1);
                if conflicts_left == 0 {
                    restart_idx += 1;
                    conflicts_left = luby(restart_idx) * RESTART_BASE;
                    self.stats.restarts += 1;
                    self.backtrack(0);
                }
                continue;
            }
            tick = tick.wrapping_add(1);
            if tick.is_multiple_of(64) {
                if let Some(d) = deadline {
                    if Instant::now() >= d {
                        self.backtrack(0);
                        return SearchResult::Unknown;
                    }
                }
            }
            if self.num_learnts as f64 > self.max_learnts {
                self.reduce_db();
            }
            let lvl = self.decision_level();
            if lvl < assumptions.len() {
                let a = assumptions[lvl];
                match self.lit_value(a) {
                    1 => self.new_decision_level(),
                    -1 => {
                        self.backtrack(0);
                        return SearchResult::Unsat;
                    }
                    _ => {
                        self.new_decision_level();
                        self.enqueue(a, Reason::Decision);
                    }
                }
                continue;
            }
            match self.pick_branch() {
                None => return SearchResult::Sat,
                Some(l) => {
                    self.stats.decisions += 1;
                    self.new_decision_level();
                    self.enqueue(l, Reason::Decision);
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    struct NoTheory;

    impl Theory for NoTheory {
        fn push_level(&mut self) {}
        fn backtrack(&mut self, _level: usize) {}
        fn assign(&mut self, _lit: Lit, _implied: &mut Vec<(Lit, Lit)>) -> Result<(), Vec<Lit>> {
            Ok(())
        }
        fn check(&mut self) -> Result<(), Vec<Lit>> {
            Ok(())
        }
        fn phase(&self, _var: Var) -> Option<bool> {
            None
        }
    }

    fn solver(n: usize) -> (Solver<NoTheory>, Vec<Var>) {
        let mut s = Solver::new(NoTheory);
        let vars = (0..n).map(|_| s.new_var()).collect();
        (s, vars)
    }

    fn pos(v: Var) -> Lit {
        Lit::new(v, true)
    }

    fn neg(v: Var) -> Lit {
        Lit::new(v, false)
    }

    fn model_satisfies(s: &Solver<NoTheory>, clauses: &[Vec<Lit>]) -> bool {
        clauses.iter().all(|c| c.iter().any(|&l| s.lit_value(l) == 1))
    }

    #[test]
    fn luby_prefix() {
        let seq: Vec<u64> = (0..15).map(luby).collect();
        assert_eq!(seq, vec![1, 1, 2, 1, 1, 2, 4, 1, 1, 2, 1, 1, 2, 4, 8]);
    }

    #[test]
    fn simple_sat_and_unsat() {
        let (mut s, v) = solver(3);
        let cls = vec![vec![pos(v[0]), pos(v[1])], vec![neg(v[0]), pos(v[2])], vec![neg(v[2])]];
        for c in &cls {
            s.add_clause(c);
        }
        assert_eq!(s.solve(&[], None), SearchResult::Sat);
        assert!(model_satisfies(&s, &cls));
        s.add_clause(&[neg(v[1])]);
        assert_eq!(s.solve(&[], None), SearchResult::Unsat);
    }

    #[test]
    fn assumptions_do_not_persist() {
        let (mut s, v) = solver(2);
        s.add_clause(&[neg(v[0]), pos(v[1])]);
        assert_eq!(s.solve(&[pos(v[0]), neg(v[1])], None), SearchResult::Unsat);
        assert_eq!(s.solve(&[pos(v[0])], None), SearchResult::Sat);
        assert_eq!(s.value(v[1]), Some(true));
    }

    #[test]
    fn pigeonhole_is_unsat() {
        // 5 pigeons, 4 holes.
        let (p, h) = (5, 4);
        let (mut s, v) = solver(p * h);
        let x = |i: usize, j: usize| v[i * h + j];
        for i in 0..p {
            let c: Vec<Lit> = (0..h).map(|j| pos(x(i, j))).collect();
            s.add_clause(&c);
        }
        for j in 0..h {
            let col: Vec<Lit> = (0..p).map(|i| pos(x(i, j))).collect();
            s.add_at_most_one(&col);
        }
        assert_eq!(s.solve(&[], None), SearchResult::Unsat);
    }

    #[test]
    fn at_most_one_groups_are_respected() {
        let (mut s, v) = solver(4);
        s.add_at_most_one(&v.iter().map(|&x| pos(x)).collect::<Vec<_>>());
        s.add_clause(&[pos(v[1]), pos(v[2])]);
        s.add_clause(&[pos(v[2]), pos(v[3])]);
        assert_eq!(s.solve(&[], None), SearchResult::Sat);
        assert_eq!(s.value(v[2]), Some(true));
        assert_eq!(v.iter().filter(|&&x| s.value(x) == Some(true)).count(), 1);
    }

    #[test]
    fn random_3sat_models_are_valid() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for round in 0..60 {
            let n = 20;
            let m = 60 + round;
            let (mut s, v) = solver(n);
            let mut cls = Vec::new();
            for _ in 0..m {
                let c: Vec<Lit> = (0..3).map(|_| Lit::new(v[rng.gen_range(0..n)], rng.gen())).collect();
                s.add_clause(&c);
                cls.push(c);
            }
            let r = s.solve(&[], None);
            if r == SearchResult::Sat {
                assert!(model_satisfies(&s, &cls));
            } else {
                // Cross-check unsat by brute force.
                let any = (0u32..1 << n).any(|bits| {
                    cls.iter().all(|c| c.iter().any(|l| ((bits >> l.var()) & 1 == 1) == l.is_positive()))
                });
                assert!(!any, "solver reported unsat on a satisfiable formula");
            }
        }
    }
}
