use criterion::{black_box, criterion_group, criterion_main, Criterion};

use mapf_lra::rational::{default_eps, simplest_in_interval};
use mapf_lra::{approx_rational, in_conflict, safe_delay, wait_conflict_window, Coord, Rational, RoundingMode};
use mapf_lra_bench::crossing;

fn geometry(c: &mut Criterion) {
    let r = Rational::new(1, 2);
    let eps = default_eps();
    let (a, b) = crossing(Rational::new(1, 3));
    c.bench_function("in_conflict/crossing", |bench| bench.iter(|| in_conflict(black_box(&a), black_box(&b), &r, &r)));
    let (far_a, far_b) = crossing(Rational::from_integer(100));
    c.bench_function("in_conflict/disjoint_spans", |bench| {
        bench.iter(|| in_conflict(black_box(&far_a), black_box(&far_b), &r, &r))
    });
    c.bench_function("safe_delay/crossing", |bench| bench.iter(|| safe_delay(black_box(&a), black_box(&b), &r, &r, &eps)));
    let p = Coord::from_ints(0, 2);
    c.bench_function("wait_conflict_window/pass_through", |bench| {
        bench.iter(|| wait_conflict_window(black_box(&p), &r, black_box(&b), &r, &eps))
    });
}

fn rounding(c: &mut Criterion) {
    let x = std::f64::consts::PI;
    let eps = Rational::new(1, 1 << 20);
    c.bench_function("approx_rational/pi_up", |bench| {
        bench.iter(|| approx_rational(black_box(x), RoundingMode::Up, &eps))
    });
    let lo = Rational::new(1_414_213, 1_000_000);
    let hi = Rational::new(1_414_214, 1_000_000);
    c.bench_function("simplest_in_interval/root2", |bench| bench.iter(|| simplest_in_interval(black_box(&lo), &hi)));
}

criterion_group!(benches, geometry, rounding);
criterion_main!(benches);
