//! Collision geometry for open disks moving along straight lines at constant
//! velocity.
//!
//! Predicates are evaluated exactly over rationals. The minimal safe delay is
//! irrational in general; it is located by floating-point bisection and then
//! rounded up to a rational that is verified exactly to be conflict-free.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::Coord;
use crate::rational::{simplify_directed, sqrt_bracket, Rational, RoundingMode};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CollisionError {
    #[error("motions are not in conflict")]
    NoConflict,
}

/// A straight-line motion from `origin` to `target` over `[start, start + duration]`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TimedMotion {
    pub origin: Coord,
    pub target: Coord,
    pub duration: Rational,
    pub start: Rational,
}

impl TimedMotion {
    pub fn new(origin: Coord, target: Coord, duration: Rational, start: Rational) -> Self {
        TimedMotion { origin, target, duration, start }
    }

    pub fn end(&self) -> Rational {
        &self.start + &self.duration
    }

    pub fn shifted_to(&self, start: Rational) -> Self {
        TimedMotion { start, ..self.clone() }
    }

    /// Position at absolute time `t`, clamped to the motion's span.
    pub fn position(&self, t: &Rational) -> Coord {
        if t <= &self.start || self.duration.is_zero() {
            return if t <= &self.start { self.origin.clone() } else { self.target.clone() };
        }
        if t >= &self.end() {
            return self.target.clone();
        }
        let s = (t - &self.start) / &self.duration;
        Coord::new(
            &self.origin.x + &s * (&self.target.x - &self.origin.x),
            &self.origin.y + &s * (&self.target.y - &self.origin.y),
        )
    }

    fn velocity(&self) -> (Rational, Rational) {
        if self.duration.is_zero() {
            return (Rational::zero(), Rational::zero());
        }
        (
            (&self.target.x - &self.origin.x) / &self.duration,
            (&self.target.y - &self.origin.y) / &self.duration,
        )
    }
}

/// Absolute time window during which a moving disk overlaps a resting one.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ConflictWindow {
    pub lower: Rational,
    pub upper: Rational,
}

/// Open-disk overlap test: touching is not a collision.
pub fn is_collision(c_a: &Coord, c_b: &Coord, r_a: &Rational, r_b: &Rational) -> bool {
    let r = r_a + r_b;
    c_a.dist_sq(c_b) < &r * &r
}

/// Quadratic `q2 t² + q1 t + q0` giving squared distance minus squared radius sum.
struct Quadratic {
    q2: Rational,
    q1: Rational,
    q0: Rational,
}

impl Quadratic {
    fn eval(&self, t: &Rational) -> Rational {
        (&self.q2 * t + &self.q1) * t + &self.q0
    }

    /// Minimum over the closed interval `[lo, hi]`.
    fn min_on(&self, lo: &Rational, hi: &Rational) -> Rational {
        let mut best = self.eval(lo).min(self.eval(hi));
        if self.q2.is_positive() {
            let t = -(&self.q1) / (Rational::from_integer(2) * &self.q2);
            if &t > lo && &t < hi {
                best = best.min(self.eval(&t));
            }
        }
        best
    }
}

/// Relative displacement `pos_a(t) - pos_b(t) - (ra + rb)` squared, as a
/// quadratic in absolute time `t`, valid while both motions are active.
fn relative_quadratic(a: &TimedMotion, b: &TimedMotion, r_a: &Rational, r_b: &Rational) -> Quadratic {
    let (vax, vay) = a.velocity();
    let (vbx, vby) = b.velocity();
    let cx = &a.origin.x - &vax * &a.start - &b.origin.x + &vbx * &b.start;
    let cy = &a.origin.y - &vay * &a.start - &b.origin.y + &vby * &b.start;
    let vx = vax - vbx;
    let vy = vay - vby;
    let r = r_a + r_b;
    Quadratic {
        q2: &vx * &vx + &vy * &vy,
        q1: Rational::from_integer(2) * (&cx * &vx + &cy * &vy),
        q0: &cx * &cx + &cy * &cy - &r * &r,
    }
}

/// Whether the disks overlap at some instant of the half-open common span
/// `[max(starts), min(ends))`.
pub fn in_conflict(a: &TimedMotion, b: &TimedMotion, r_a: &Rational, r_b: &Rational) -> bool {
    if clearly_apart(a, b, r_a.to_f64() + r_b.to_f64()) {
        return false;
    }
    let lo = (&a.start).max(&b.start).clone();
    let hi = a.end().min(b.end());
    if lo >= hi {
        return false;
    }
    // A negative value at the closed right end extends slightly to its left.
    relative_quadratic(a, b, r_a, r_b).min_on(&lo, &hi).is_negative()
}

/// Float screen: true only when the time spans are disjoint or the closest
/// approach exceeds the contact distance, both by far more than any
/// rounding error.
fn clearly_apart(a: &TimedMotion, b: &TimedMotion, r: f64) -> bool {
    let (fa, fb) = (FloatMotion::from(a), FloatMotion::from(b));
    let (sa, sb) = (a.start.to_f64(), b.start.to_f64());
    let lo = sa.max(sb);
    let hi = (sa + fa.duration).min(sb + fb.duration);
    let tmargin = 1e-9 * (1.0 + lo.abs() + hi.abs());
    if hi < lo - tmargin {
        return true;
    }
    let cx = fa.ox - fa.vx * sa - fb.ox + fb.vx * sb;
    let cy = fa.oy - fa.vy * sa - fb.oy + fb.vy * sb;
    let (vx, vy) = (fa.vx - fb.vx, fa.vy - fb.vy);
    let q2 = vx * vx + vy * vy;
    let t = if q2 > 0.0 { (-(cx * vx + cy * vy) / q2).clamp(lo.min(hi), hi) } else { lo };
    let (dx, dy) = (cx + vx * t, cy + vy * t);
    let speed = vx.abs() + vy.abs();
    let scale = 1.0 + cx.abs() + cy.abs() + speed * hi.abs().max(lo.abs()) + r;
    (dx * dx + dy * dy).sqrt() > r + 1e-6 * scale + speed * tmargin
}

struct FloatMotion {
    ox: f64,
    oy: f64,
    vx: f64,
    vy: f64,
    duration: f64,
}

impl FloatMotion {
    fn from(m: &TimedMotion) -> Self {
        let d = m.duration.to_f64();
        let (ox, oy) = m.origin.to_f64();
        let (tx, ty) = m.target.to_f64();
        let (vx, vy) = if d > 0.0 { ((tx - ox) / d, (ty - oy) / d) } else { (0.0, 0.0) };
        FloatMotion { ox, oy, vx, vy, duration: d }
    }
}

fn in_conflict_f64(a: &FloatMotion, sa: f64, b: &FloatMotion, sb: f64, r: f64) -> bool {
    let lo = sa.max(sb);
    let hi = (sa + a.duration).min(sb + b.duration);
    if lo >= hi {
        return false;
    }
    let cx = a.ox - a.vx * sa - b.ox + b.vx * sb;
    let cy = a.oy - a.vy * sa - b.oy + b.vy * sb;
    let vx = a.vx - b.vx;
    let vy = a.vy - b.vy;
    let f = |t: f64| {
        let dx = cx + vx * t;
        let dy = cy + vy * t;
        dx * dx + dy * dy - r * r
    };
    let q2 = vx * vx + vy * vy;
    let mut best = f(lo).min(f(hi));
    if q2 > 0.0 {
        let t = -(cx * vx + cy * vy) / q2;
        if t > lo && t < hi {
            best = best.min(f(t));
        }
    }
    best < 0.0
}

/// Smallest start time for `a` (later than its current start) at which it no
/// longer conflicts with `b`, rounded up by at most `eps` and clipped to the
/// end of `b`.
pub fn safe_delay(
    a: &TimedMotion,
    b: &TimedMotion,
    r_a: &Rational,
    r_b: &Rational,
    eps: &Rational,
) -> Result<Rational, CollisionError> {
    if !in_conflict(a, b, r_a, r_b) {
        return Err(CollisionError::NoConflict);
    }
    let ceiling = b.end();
    let fa = FloatMotion::from(a);
    let fb = FloatMotion::from(b);
    let sb = b.start.to_f64();
    let r = (r_a + r_b).to_f64();
    let tol = eps.to_f64() / 4.0;
    let mut lo = a.start.to_f64();
    let mut hi = ceiling.to_f64();
    while hi - lo > tol {
        let mid = lo + (hi - lo) / 2.0;
        if mid <= lo || mid >= hi {
            break;
        }
        if in_conflict_f64(&fa, mid, &fb, sb, r) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let half = eps / Rational::from_integer(2);
    let mut base = Rational::from_f64_exact(hi).unwrap_or_else(|_| ceiling.clone());
    if base <= a.start {
        base = a.start.clone();
    }
    let mut step = eps / Rational::from_integer(4);
    loop {
        let cand = simplify_directed(&base, RoundingMode::Up, &half);
        if cand >= ceiling {
            return Ok(ceiling);
        }
        if cand > a.start && !in_conflict(&a.shifted_to(cand.clone()), b, r_a, r_b) {
            return Ok(cand);
        }
        base = cand + &step;
        step = &step * Rational::from_integer(2);
    }
}

/// Window during which `b` overlaps a disk resting at `p`, rounded outward
/// (lower down, upper up) and clipped to `b`'s span.
pub fn wait_conflict_window(
    p: &Coord,
    r_a: &Rational,
    b: &TimedMotion,
    r_b: &Rational,
    eps: &Rational,
) -> Result<ConflictWindow, CollisionError> {
    let r = r_a + r_b;
    let r_sq = &r * &r;
    let cx = &b.origin.x - &p.x;
    let cy = &b.origin.y - &p.y;
    let (vx, vy) = b.velocity();
    let a2 = &vx * &vx + &vy * &vy;
    let bc = &cx * &vx + &cy * &vy;
    let c0 = &cx * &cx + &cy * &cy - &r_sq;
    let span = &b.duration;
    if a2.is_zero() {
        return if c0.is_negative() && span.is_positive() {
            Ok(ConflictWindow { lower: b.start.clone(), upper: b.end() })
        } else {
            Err(CollisionError::NoConflict)
        };
    }
    // In relative time u = t - start: a2 u² + 2 bc u + c0 < 0.
    let quad = Quadratic { q2: a2.clone(), q1: Rational::from_integer(2) * &bc, q0: c0.clone() };
    if !quad.min_on(&Rational::zero(), span).is_negative() {
        return Err(CollisionError::NoConflict);
    }
    let disc = &bc * &bc - &a2 * &c0;
    let sqrt_eps = eps * &a2 / Rational::from_integer(4);
    let (_, s_hi) = sqrt_bracket(&disc, &sqrt_eps);
    let lower = (-(&bc) - &s_hi) / &a2;
    let upper = (-(&bc) + &s_hi) / &a2;
    let half = eps / Rational::from_integer(2);
    let lower = simplify_directed(&lower, RoundingMode::Down, &half).max(Rational::zero());
    let upper = simplify_directed(&upper, RoundingMode::Up, &half).min(span.clone());
    Ok(ConflictWindow { lower: &b.start + lower, upper: &b.start + upper })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::default_eps;
    use proptest::prelude::*;

    fn q(n: i64) -> Rational {
        Rational::from_integer(n)
    }

    fn c(x: i64, y: i64) -> Coord {
        Coord::from_ints(x, y)
    }

    fn half() -> Rational {
        Rational::new(1, 2)
    }

    fn motion(o: (i64, i64), t: (i64, i64), d: i64, s: i64) -> TimedMotion {
        TimedMotion::new(c(o.0, o.1), c(t.0, t.1), q(d), q(s))
    }

    /// Dense sampling oracle over the half-open common span.
    fn sampled_conflict(a: &TimedMotion, b: &TimedMotion, r: &Rational, n: i64) -> bool {
        let lo = (&a.start).max(&b.start).clone();
        let hi = a.end().min(b.end());
        if lo >= hi {
            return false;
        }
        (0..n).any(|i| {
            let t = &lo + (&hi - &lo) * Rational::new(i, n);
            is_collision(&a.position(&t), &b.position(&t), r, r)
        })
    }

    #[test]
    fn collision_predicate_examples() {
        let h = half();
        assert!(is_collision(&c(0, 0), &c(0, 0), &h, &h));
        assert!(!is_collision(&c(0, 0), &c(1, 0), &h, &h));
        let p = Coord::new(Rational::new(3, 5), q(0));
        assert!(is_collision(&c(0, 0), &p, &h, &h));
    }

    #[test]
    fn in_conflict_examples() {
        let h = half();
        let a = motion((0, 0), (4, 0), 4, 0);
        let b = motion((4, 0), (0, 0), 4, 0);
        assert!(in_conflict(&a, &b, &h, &h));
        assert!(!in_conflict(&a, &b.shifted_to(q(10)), &h, &h));
        let far = motion((0, 10), (4, 10), 4, 1);
        assert!(!in_conflict(&a, &far, &h, &h));
    }

    #[test]
    fn safe_delay_crossing_is_sqrt2() {
        let h = half();
        let eps = default_eps();
        let a = motion((0, 0), (0, 4), 4, 0);
        let b = motion((-2, 2), (2, 2), 4, 0);
        let s = safe_delay(&a, &b, &h, &h, &eps).unwrap();
        // sqrt(2) <= s  <=>  s² >= 2 ; s <= sqrt(2) + eps  <=>  (s - eps)² <= 2 or s - eps < 0.
        assert!(&s * &s >= q(2));
        let below = &s - &eps;
        assert!(&below * &below <= q(2));
        assert!(!in_conflict(&a.shifted_to(s.clone()), &b, &h, &h));
    }

    #[test]
    fn safe_delay_head_on_is_end_of_other() {
        let h = half();
        let a = motion((0, 0), (4, 0), 4, 0);
        let b = motion((4, 0), (0, 0), 4, 0);
        assert_eq!(safe_delay(&a, &b, &h, &h, &default_eps()).unwrap(), q(4));
    }

    #[test]
    fn safe_delay_requires_conflict() {
        let h = half();
        let a = motion((0, 0), (4, 0), 4, 0);
        let b = motion((0, 3), (4, 3), 4, 0);
        assert_eq!(safe_delay(&a, &b, &h, &h, &default_eps()), Err(CollisionError::NoConflict));
    }

    #[test]
    fn wait_window_examples() {
        let h = half();
        let eps = default_eps();
        let w = wait_conflict_window(&c(0, 0), &h, &motion((2, 0), (-2, 0), 4, 0), &h, &eps).unwrap();
        assert_eq!(w, ConflictWindow { lower: q(1), upper: q(3) });
        let w = wait_conflict_window(&c(0, 0), &h, &motion((2, 0), (0, 0), 2, 0), &h, &eps).unwrap();
        assert_eq!(w, ConflictWindow { lower: q(1), upper: q(2) });
        let none = wait_conflict_window(&c(0, 0), &h, &motion((2, 2), (-2, 2), 4, 0), &h, &eps);
        assert_eq!(none, Err(CollisionError::NoConflict));
    }

    #[test]
    fn wait_window_irrational_endpoints_are_outward() {
        let h = half();
        let eps = default_eps();
        // Passing at lateral offset 1/2: |x| < sqrt(3)/2.
        let b = TimedMotion::new(Coord::new(q(-2), h.clone()), Coord::new(q(2), h.clone()), q(4), q(0));
        let w = wait_conflict_window(&c(0, 0), &h, &b, &h, &eps).unwrap();
        let three_quarters = Rational::new(3, 4);
        let lo_off = q(2) - &w.lower;
        let hi_off = &w.upper - q(2);
        assert!(&lo_off * &lo_off >= three_quarters);
        assert!(&hi_off * &hi_off >= three_quarters);
        assert!(&w.upper - &w.lower <= Rational::from_f64_exact(3f64.sqrt()).unwrap() + &eps);
    }

    #[test]
    fn stationary_mover_covers_whole_span() {
        let h = half();
        let b = motion((0, 0), (0, 0), 3, 2);
        let w = wait_conflict_window(&c(0, 0), &h, &b, &h, &default_eps()).unwrap();
        assert_eq!(w, ConflictWindow { lower: q(2), upper: q(5) });
    }

    fn arb_motion() -> impl Strategy<Value = TimedMotion> {
        (-4i64..5, -4i64..5, -4i64..5, -4i64..5, 1i64..5, 0i64..6).prop_map(|(ox, oy, tx, ty, d, s)| {
            motion((ox, oy), (tx, ty), d, s)
        })
    }

    proptest! {
        #[test]
        fn translation_invariance(a in arb_motion(), b in arb_motion(), dn in -20i64..20, dd in 1i64..7) {
            let h = half();
            let delta = Rational::new(dn, dd);
            let a2 = a.shifted_to(&a.start + &delta);
            let b2 = b.shifted_to(&b.start + &delta);
            prop_assert_eq!(in_conflict(&a, &b, &h, &h), in_conflict(&a2, &b2, &h, &h));
        }

        #[test]
        fn symmetry(a in arb_motion(), b in arb_motion()) {
            let h = half();
            prop_assert_eq!(in_conflict(&a, &b, &h, &h), in_conflict(&b, &a, &h, &h));
        }

        #[test]
        fn sampling_never_beats_exact(a in arb_motion(), b in arb_motion()) {
            let h = half();
            if sampled_conflict(&a, &b, &h, 400) {
                prop_assert!(in_conflict(&a, &b, &h, &h));
            }
        }

        #[test]
        fn safe_delay_bounds_and_safety(a in arb_motion(), b in arb_motion()) {
            let h = half();
            let eps = default_eps();
            if in_conflict(&a, &b, &h, &h) {
                let s = safe_delay(&a, &b, &h, &h, &eps).unwrap();
                prop_assert!(s > a.start);
                prop_assert!(s <= b.end());
                prop_assert!(!in_conflict(&a.shifted_to(s.clone()), &b, &h, &h));
                // Anything later is also safe.
                for k in 1..4 {
                    let later = &s + Rational::new(k, 3);
                    prop_assert!(!in_conflict(&a.shifted_to(later), &b, &h, &h));
                }
                // Not more than eps above a still-conflicting start.
                let below = &s - &eps;
                if below > a.start {
                    prop_assert!(in_conflict(&a.shifted_to(below), &b, &h, &h));
                }
            }
        }

        #[test]
        fn wait_window_soundness(px in -3i64..4, py in -3i64..4, b in arb_motion()) {
            let h = half();
            let eps = default_eps();
            let p = c(px, py);
            match wait_conflict_window(&p, &h, &b, &h, &eps) {
                Ok(w) => {
                    prop_assert!(w.lower < w.upper);
                    prop_assert!(w.lower >= b.start && w.upper <= b.end());
                    for i in 0..=200 {
                        let t = &b.start + &b.duration * Rational::new(i, 200);
                        let hit = is_collision(&p, &b.position(&t), &h, &h);
                        if hit {
                            prop_assert!(t >= w.lower && t <= w.upper, "collision at {} outside window", t);
                        }
                        if t > &w.lower + &eps && t < &w.upper - &eps {
                            prop_assert!(hit, "no collision at {} inside window", t);
                        }
                    }
                }
                Err(_) => {
                    for i in 0..=200 {
                        let t = &b.start + &b.duration * Rational::new(i, 200);
                        prop_assert!(!is_collision(&p, &b.position(&t), &h, &h));
                    }
                }
            }
        }
    }
}
