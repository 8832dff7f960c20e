//! Benchmark generators: empty rooms with 2^n neighborhoods and the
//! bottleneck star.

use std::path::PathBuf;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::io::{read_instance, IoError};
use crate::model::{Agent, Coord, EdgeAction, Instance, ModelError, Vertex};
use crate::movingai::{ingest_movingai, MovingAiError};
use crate::rational::{simplest_in_interval, Rational};

#[derive(Debug, Error)]
pub enum GenError {
    #[error("{k} agents do not fit on {cells} cells")]
    TooManyAgents { k: usize, cells: usize },
    #[error("{k} agents of radius {r} overlap on a circle of radius {big_r}")]
    Overcrowded { k: usize, big_r: Rational, r: Rational },
    #[error("neighborhood exponent must be 2, 3, 4 or 5, got {0}")]
    Neighborhood(u32),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Io(#[from] IoError),
    #[error(transparent)]
    MovingAi(#[from] MovingAiError),
}

/// Grid offsets giving exactly `2^n` neighbors per interior cell.
pub fn neighborhood_offsets(n: u32) -> Result<Vec<(i64, i64)>, GenError> {
    if !(2..=5).contains(&n) {
        return Err(GenError::Neighborhood(n));
    }
    let mut base: Vec<(i64, i64)> = vec![(1, 0), (0, 1)];
    if n >= 3 {
        base.push((1, 1));
    }
    if n >= 4 {
        base.extend([(1, 2), (2, 1)]);
    }
    if n >= 5 {
        base.extend([(1, 3), (3, 1), (2, 3), (3, 2)]);
    }
    let mut out = Vec::new();
    for (dx, dy) in base {
        let mut signs = vec![(dx, dy), (-dx, -dy)];
        if dx != 0 && dy != 0 {
            signs.extend([(dx, -dy), (-dx, dy)]);
        } else {
            signs.extend([(dy, dx), (-dy, -dx)]);
        }
        for s in signs {
            if !out.contains(&s) {
                out.push(s);
            }
        }
    }
    Ok(out)
}

/// Edges of a `size × size` grid graph restricted to `allowed` cells.
pub(crate) fn grid_edges(
    width: usize,
    height: usize,
    n: u32,
    id_of: impl Fn(usize, usize) -> Option<usize>,
    segment_ok: impl Fn((i64, i64), (i64, i64)) -> bool,
) -> Result<Vec<EdgeAction>, GenError> {
    let offsets = neighborhood_offsets(n)?;
    let mut edges = Vec::new();
    for y in 0..height as i64 {
        for x in 0..width as i64 {
            let Some(from) = id_of(x as usize, y as usize) else { continue };
            for &(dx, dy) in &offsets {
                let (tx, ty) = (x + dx, y + dy);
                if tx < 0 || ty < 0 || tx >= width as i64 || ty >= height as i64 {
                    continue;
                }
                let Some(to) = id_of(tx as usize, ty as usize) else { continue };
                if !segment_ok((x, y), (tx, ty)) {
                    continue;
                }
                let duration = Coord::from_ints(x, y).euclidean_duration(&Coord::from_ints(tx, ty));
                edges.push(EdgeAction { from, to, duration });
            }
        }
    }
    Ok(edges)
}

/// Empty `size × size` room. Starts and goals are drawn without repetition,
/// one agent at a time, so the first `k` agents do not depend on `k`.
pub fn gen_empty(size: usize, n: u32, k: usize, seed: u64, radius: Rational) -> Result<Instance, GenError> {
    let cells = size * size;
    if k > cells {
        return Err(GenError::TooManyAgents { k, cells });
    }
    let vertices: Vec<Vertex> = (0..cells)
        .map(|id| Vertex { id, coord: Coord::from_ints((id % size) as i64, (id / size) as i64) })
        .collect();
    let edges = grid_edges(size, size, n, |x, y| Some(y * size + x), |_, _| true)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut free_starts: Vec<usize> = (0..cells).collect();
    let mut free_goals: Vec<usize> = (0..cells).collect();
    let mut agents = Vec::with_capacity(k);
    for id in 0..k {
        let start = free_starts.swap_remove(rng.gen_range(0..free_starts.len()));
        let gi = rng.gen_range(0..free_goals.len());
        let goal = free_goals.swap_remove(gi);
        agents.push(Agent { id, start, goal, radius: radius.clone() });
    }
    let name = format!("empty-{size}-n{n}-k{k}-s{seed}");
    Ok(Instance::new(name, vertices, edges, agents)?)
}

/// Rational point exactly on the circle of radius `big_r`, within about
/// 2^-11 radians of angle `theta`. Antipodal angles give negated points and
/// the axes are hit exactly.
fn circle_point(big_r: &Rational, theta: f64) -> Coord {
    use std::f64::consts::{FRAC_PI_2, PI};
    let mut half = theta.rem_euclid(2.0 * PI);
    let flip = half > FRAC_PI_2 && half <= 3.0 * FRAC_PI_2;
    if flip {
        half -= PI;
    } else if half > 3.0 * FRAC_PI_2 {
        half -= 2.0 * PI;
    }
    let tol = 2f64.powi(-12);
    let tan = (half / 2.0).tan();
    let lo = Rational::from_f64_exact(tan - tol).expect("finite");
    let hi = Rational::from_f64_exact(tan + tol).expect("finite");
    let t = simplest_in_interval(&lo, &hi);
    let t2 = &t * &t;
    let den = Rational::one() + &t2;
    let x = &(Rational::one() - &t2) / &den;
    let y = &(Rational::from_integer(2) * &t) / &den;
    let (x, y) = if flip { (-x, -y) } else { (x, y) };
    Coord::new(big_r * &x, big_r * &y)
}

/// Star through a single transfer vertex at the origin. Agent `i` starts at
/// angle `i·π/k` on the circle of radius `big_r` and heads for the opposite
/// point; every edge takes `big_r`.
pub fn gen_bottleneck(k: usize, big_r: Rational, radius: Rational) -> Result<Instance, GenError> {
    let mut vertices = vec![Vertex { id: 0, coord: Coord::from_ints(0, 0) }];
    for i in 0..2 * k {
        let theta = std::f64::consts::PI * i as f64 / k as f64;
        vertices.push(Vertex { id: i + 1, coord: circle_point(&big_r, theta) });
    }
    let diameter = Rational::from_integer(2) * &radius;
    let min_sq = &diameter * &diameter;
    if k >= 2 {
        for i in 0..2 * k {
            let j = (i + 1) % (2 * k);
            if vertices[i + 1].coord.dist_sq(&vertices[j + 1].coord) <= min_sq {
                return Err(GenError::Overcrowded { k, big_r, r: radius });
            }
        }
    }
    if k >= 1 && big_r <= radius {
        return Err(GenError::Overcrowded { k, big_r, r: radius });
    }
    let mut edges = Vec::with_capacity(2 * k);
    let mut agents = Vec::with_capacity(k);
    for i in 0..k {
        let (start, goal) = (i + 1, i + k + 1);
        edges.push(EdgeAction { from: start, to: 0, duration: big_r.clone() });
        edges.push(EdgeAction { from: 0, to: goal, duration: big_r.clone() });
        agents.push(Agent { id: i, start, goal, radius: radius.clone() });
    }
    Ok(Instance::new(format!("bottleneck-k{k}"), vertices, edges, agents)?)
}

fn default_radius() -> Rational {
    Rational::new(1, 2)
}

fn default_circle() -> Rational {
    Rational::from_integer(10)
}

/// Deterministic description of a benchmark instance.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum BenchmarkSpec {
    Empty {
        size: usize,
        n: u32,
        k: usize,
        seed: u64,
        #[serde(default = "default_radius")]
        r: Rational,
    },
    Bottleneck {
        k: usize,
        #[serde(default = "default_circle")]
        big_r: Rational,
        #[serde(default = "default_radius")]
        r: Rational,
    },
    #[serde(rename = "movingai")]
    MovingAi {
        map: PathBuf,
        scen: PathBuf,
        n: u32,
        k: usize,
    },
    /// Externally generated graph stored as an instance file.
    File { path: PathBuf },
}

impl BenchmarkSpec {
    pub fn generate(&self) -> Result<Instance, GenError> {
        match self {
            BenchmarkSpec::Empty { size, n, k, seed, r } => gen_empty(*size, *n, *k, *seed, r.clone()),
            BenchmarkSpec::Bottleneck { k, big_r, r } => gen_bottleneck(*k, big_r.clone(), r.clone()),
            BenchmarkSpec::MovingAi { map, scen, n, k } => Ok(ingest_movingai(map, scen, *n, *k)?),
            BenchmarkSpec::File { path } => Ok(read_instance(path)?),
        }
    }

    pub fn label(&self) -> String {
        match self {
            BenchmarkSpec::Empty { size, n, k, seed, .. } => format!("empty-{size}-n{n}-k{k}-s{seed}"),
            BenchmarkSpec::Bottleneck { k, .. } => format!("bottleneck-k{k}"),
            BenchmarkSpec::MovingAi { map, n, k, .. } => {
                let stem = map.file_stem().map_or_else(|| "map".into(), |s| s.to_string_lossy().into_owned());
                format!("{stem}-n{n}-k{k}")
            }
            BenchmarkSpec::File { path } => path.display().to_string(),
        }
    }
}
