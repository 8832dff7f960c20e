//! Moving AI `.map` / `.scen` ingestion.

use std::fs;
use std::path::Path;

use thiserror::Error;

use crate::gen::{grid_edges, GenError};
use crate::model::{Agent, Coord, Instance, ModelError, Vertex};
use crate::rational::Rational;

#[derive(Debug, Error)]
pub enum MovingAiError {
    #[error("{file} line {line}: {message}")]
    Parse { file: String, line: usize, message: String },
    #[error("scenario entry {entry} has its {which} on blocked cell ({x}, {y})")]
    BlockedEndpoint { entry: usize, which: &'static str, x: usize, y: usize },
    #[error("scenario has {available} entries, {requested} requested")]
    TooFewEntries { available: usize, requested: usize },
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("neighborhood exponent must be 2, 3, 4 or 5, got {0}")]
    Neighborhood(u32),
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GridMap {
    pub width: usize,
    pub height: usize,
    passable: Vec<bool>,
}

impl GridMap {
    pub fn passable(&self, x: usize, y: usize) -> bool {
        x < self.width && y < self.height && self.passable[y * self.width + x]
    }

    fn blocked_i(&self, x: i64, y: i64) -> bool {
        x < 0 || y < 0 || !self.passable(x as usize, y as usize)
    }

    /// True when the straight segment between two cell centers touches no
    /// blocked cell, corners included.
    pub fn segment_clear(&self, from: (i64, i64), to: (i64, i64)) -> bool {
        // Doubled coordinates: cell (cx, cy) spans [2cx-1, 2cx+1] on each axis.
        let (px, py) = (2 * from.0, 2 * from.1);
        let (qx, qy) = (2 * to.0, 2 * to.1);
        let (dx, dy) = (qx - px, qy - py);
        for cy in from.1.min(to.1)..=from.1.max(to.1) {
            for cx in from.0.min(to.0)..=from.0.max(to.0) {
                if !self.blocked_i(cx, cy) {
                    continue;
                }
                let (x0, x1, y0, y1) = (2 * cx - 1, 2 * cx + 1, 2 * cy - 1, 2 * cy + 1);
                if px.max(qx) < x0 || px.min(qx) > x1 || py.max(qy) < y0 || py.min(qy) > y1 {
                    continue;
                }
                let sides: Vec<i64> = [(x0, y0), (x0, y1), (x1, y0), (x1, y1)]
                    .iter()
                    .map(|&(x, y)| (dx * (y - py) - dy * (x - px)).signum())
                    .collect();
                if sides.iter().all(|&s| s > 0) || sides.iter().all(|&s| s < 0) {
                    continue;
                }
                return false;
            }
        }
        true
    }
}

fn parse_err(file: &str, line: usize, message: impl Into<String>) -> MovingAiError {
    MovingAiError::Parse { file: file.to_string(), line, message: message.into() }
}

pub fn parse_map(text: &str) -> Result<GridMap, MovingAiError> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim_end_matches('\r')));
    let (mut width, mut height) = (None, None);
    loop {
        let Some((no, line)) = lines.next() else {
            return Err(parse_err("map", text.lines().count(), "missing 'map' header line"));
        };
        let mut parts = line.split_whitespace();
        match (parts.next(), parts.next()) {
            (Some("type"), _) => {}
            (Some("height"), Some(v)) => height = Some(v.parse::<usize>().map_err(|_| parse_err("map", no, "bad height"))?),
            (Some("width"), Some(v)) => width = Some(v.parse::<usize>().map_err(|_| parse_err("map", no, "bad width"))?),
            (Some("map"), None) => break,
            (None, _) => {}
            _ => return Err(parse_err("map", no, format!("unexpected header line {line:?}"))),
        }
    }
    let (Some(width), Some(height)) = (width, height) else {
        return Err(parse_err("map", 1, "header lacks width or height"));
    };
    let mut passable = Vec::with_capacity(width * height);
    for row in 0..height {
        let Some((no, line)) = lines.next() else {
            return Err(parse_err("map", row, format!("expected {height} rows, found {row}")));
        };
        if line.chars().count() != width {
            return Err(parse_err("map", no, format!("row has {} cells, expected {width}", line.chars().count())));
        }
        for c in line.chars() {
            passable.push(match c {
                '.' | 'G' | 'S' => true,
                '@' | 'O' | 'T' | 'W' => false,
                other => return Err(parse_err("map", no, format!("unknown terrain {other:?}"))),
            });
        }
    }
    Ok(GridMap { width, height, passable })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ScenEntry {
    pub start: (usize, usize),
    pub goal: (usize, usize),
}

pub fn parse_scen(text: &str) -> Result<Vec<ScenEntry>, MovingAiError> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let no = i + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with("version") {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() < 8 {
            return Err(parse_err("scen", no, format!("expected 9 fields, found {}", fields.len())));
        }
        let num = |k: usize| fields[k].parse::<usize>().map_err(|_| parse_err("scen", no, format!("bad integer {:?}", fields[k])));
        out.push(ScenEntry { start: (num(4)?, num(5)?), goal: (num(6)?, num(7)?) });
    }
    Ok(out)
}

/// Builds the instance over passable cells with the first `k` scenario
/// entries as agents of the given radius.
pub fn ingest(map: &GridMap, scen: &[ScenEntry], n: u32, k: usize, radius: Rational) -> Result<Instance, MovingAiError> {
    if k > scen.len() {
        return Err(MovingAiError::TooFewEntries { available: scen.len(), requested: k });
    }
    let mut ids = vec![None; map.width * map.height];
    let mut vertices = Vec::new();
    for y in 0..map.height {
        for x in 0..map.width {
            if map.passable(x, y) {
                ids[y * map.width + x] = Some(vertices.len());
                vertices.push(Vertex { id: vertices.len(), coord: Coord::from_ints(x as i64, y as i64) });
            }
        }
    }
    let id_of = |x: usize, y: usize| ids[y * map.width + x];
    let edges = grid_edges(map.width, map.height, n, id_of, |p, q| map.segment_clear(p, q)).map_err(|e| match e {
        GenError::Neighborhood(n) => MovingAiError::Neighborhood(n),
        other => unreachable!("grid edges only fail on the neighborhood: {other}"),
    })?;
    let mut agents = Vec::with_capacity(k);
    for (entry, s) in scen.iter().take(k).enumerate() {
        let cell = |(x, y): (usize, usize), which| {
            if map.passable(x, y) {
                Ok(id_of(x, y).expect("passable cells have ids"))
            } else {
                Err(MovingAiError::BlockedEndpoint { entry, which, x, y })
            }
        };
        agents.push(Agent { id: entry, start: cell(s.start, "start")?, goal: cell(s.goal, "goal")?, radius: radius.clone() });
    }
    Ok(Instance::new("movingai", vertices, edges, agents)?)
}

/// Reads a map and scenario pair; agents get radius 1/2.
pub fn ingest_movingai(map_path: &Path, scen_path: &Path, n: u32, k: usize) -> Result<Instance, MovingAiError> {
    let read = |p: &Path| fs::read_to_string(p).map_err(|source| MovingAiError::Io { path: p.display().to_string(), source });
    let map = parse_map(&read(map_path)?)?;
    let scen = parse_scen(&read(scen_path)?)?;
    let name = map_path.file_stem().map_or_else(|| "movingai".into(), |s| s.to_string_lossy().into_owned());
    Ok(ingest(&map, &scen, n, k, Rational::new(1, 2))?.with_name(format!("{name}-n{n}-k{k}")))
}
