//! Shared fixtures for the criterion benches.

use mapf_lra::{gen_bottleneck, gen_empty, Coord, Instance, Rational, TimedMotion};

pub fn bottleneck(k: usize) -> Instance {
    gen_bottleneck(k, Rational::from_integer(10), Rational::new(1, 2)).expect("bottleneck fits")
}

pub fn room(size: usize, n: u32, k: usize, seed: u64) -> Instance {
    gen_empty(size, n, k, seed, Rational::new(1, 2)).expect("room fits")
}

/// Two unit-speed motions crossing at right angles, `b` leaving `offset`
/// after `a`.
pub fn crossing(offset: Rational) -> (TimedMotion, TimedMotion) {
    let a = TimedMotion::new(Coord::from_ints(0, 0), Coord::from_ints(0, 4), Rational::from_integer(4), Rational::zero());
    let b = TimedMotion::new(Coord::from_ints(-2, 2), Coord::from_ints(2, 2), Rational::from_integer(4), offset);
    (a, b)
}
