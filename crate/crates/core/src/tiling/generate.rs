use std::collections::HashMap;

use super::pattern::{pattern, Pattern};
use super::{component_labels, Bbox, Point, TilingGraph, TopologyId, MERGE_TOLERANCE};
use crate::error::{Error, Result};

/// Uniform-grid spatial hash over a point set.
pub(crate) struct PointGrid {
    cell: f64,
    buckets: HashMap<(i64, i64), Vec<usize>>,
}

impl PointGrid {
    pub fn new(cell: f64) -> Self {
        PointGrid { cell, buckets: HashMap::new() }
    }

    fn key(&self, p: &Point) -> (i64, i64) {
        ((p.x / self.cell).floor() as i64, (p.y / self.cell).floor() as i64)
    }

    pub fn insert(&mut self, p: &Point, idx: usize) {
        self.buckets.entry(self.key(p)).or_default().push(idx);
    }

    /// Indices stored in the 3x3 block of cells around `p`. Exhaustive for any
    /// radius up to `cell`.
    pub fn near(&self, p: &Point) -> impl Iterator<Item = usize> + '_ {
        let (kx, ky) = self.key(p);
        (-1..=1)
            .flat_map(move |dx| (-1..=1).map(move |dy| (kx + dx, ky + dy)))
            .filter_map(move |k| self.buckets.get(&k))
            .flatten()
            .copied()
    }
}

/// Generate `topology` clipped to `bbox`, keeping only whole edges.
///
/// The pattern is anchored on the box centre at each mirror intersection of
/// the conventional cell, and the placement that keeps the most edges wins
/// (earliest candidate on ties). The snub hexagonal tiling has no mirrors and
/// is anchored on a hexagon centre.
pub fn generate_tiling(topology: TopologyId, bbox: Bbox, edge_length: f64) -> Result<TilingGraph> {
    if !(edge_length.is_finite() && edge_length > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "edge length must be positive, got {edge_length}"
        )));
    }
    if !(bbox.width.is_finite() && bbox.height.is_finite() && bbox.width > 0.0 && bbox.height > 0.0)
    {
        return Err(Error::InvalidParameter(format!(
            "bounding box must be positive, got {} x {}",
            bbox.width, bbox.height
        )));
    }

    let pat = pattern(topology);
    let offsets: Vec<Point> = match pat.rect {
        Some((w, h)) => [(0.0, 0.0), (0.5, 0.0), (0.0, 0.5), (0.5, 0.5)]
            .iter()
            .map(|&(fx, fy)| Point::new(fx * w, fy * h))
            .collect(),
        None => vec![Point::zeros()],
    };

    let mut best: Option<TilingGraph> = None;
    for offset in offsets {
        let g = clip(topology, &pat, offset, bbox, edge_length);
        if best.as_ref().is_none_or(|b| g.edges.len() > b.edges.len()) {
            best = Some(g);
        }
    }
    let g = best.expect("at least one placement");
    // a forest holds no complete polygon
    if g.edges.is_empty() || g.edges.len() < g.vertices.len() {
        return Err(Error::BboxTooSmall {
            topology,
            width: bbox.width,
            height: bbox.height,
            edge_length,
        });
    }
    Ok(g)
}

fn clip(topology: TopologyId, pat: &Pattern, offset: Point, bbox: Bbox, scale: f64) -> TilingGraph {
    let tol = MERGE_TOLERANCE * scale;
    let a1 = pat.a1 * scale;
    let a2 = pat.a2 * scale;
    let shift = offset * scale;
    let motif: Vec<Point> = pat.motif.iter().map(|m| m * scale - shift).collect();

    // lattice index range covering the box plus the motif reach
    let reach = motif.iter().map(|m| m.norm()).fold(0.0, f64::max) + scale;
    let det = a1.x * a2.y - a1.y * a2.x;
    let (hw, hh) = (0.5 * bbox.width + reach, 0.5 * bbox.height + reach);
    let corners = [(-hw, -hh), (hw, -hh), (-hw, hh), (hw, hh)];
    let (mut imin, mut imax, mut jmin, mut jmax) = (i64::MAX, i64::MIN, i64::MAX, i64::MIN);
    for (x, y) in corners {
        let fi = (x * a2.y - y * a2.x) / det;
        let fj = (a1.x * y - a1.y * x) / det;
        imin = imin.min(fi.floor() as i64 - 1);
        imax = imax.max(fi.ceil() as i64 + 1);
        jmin = jmin.min(fj.floor() as i64 - 1);
        jmax = jmax.max(fj.ceil() as i64 + 1);
    }

    let mut grid = PointGrid::new(scale);
    let mut points: Vec<Point> = Vec::new();
    for i in imin..=imax {
        for j in jmin..=jmax {
            let base = a1 * i as f64 + a2 * j as f64;
            for m in &motif {
                let p = base + m;
                if !bbox.contains(&p, tol) {
                    continue;
                }
                if grid.near(&p).any(|k| (points[k] - p).norm() <= tol) {
                    continue;
                }
                grid.insert(&p, points.len());
                points.push(p);
            }
        }
    }

    // deterministic order: by row, then column, on a snapped grid
    let snap = |v: f64| (v / tol).round() as i64;
    let mut order: Vec<usize> = (0..points.len()).collect();
    order.sort_by_key(|&k| (snap(points[k].y), snap(points[k].x)));
    let points: Vec<Point> = order.iter().map(|&k| points[k]).collect();

    let mut grid = PointGrid::new(scale * (1.0 + 2.0 * MERGE_TOLERANCE));
    for (k, p) in points.iter().enumerate() {
        grid.insert(p, k);
    }
    let mut edges = Vec::new();
    for (i, p) in points.iter().enumerate() {
        for j in grid.near(p) {
            if j > i && ((points[j] - p).norm() - scale).abs() <= tol {
                edges.push([i, j]);
            }
        }
    }
    edges.sort_unstable();

    keep_largest_component(TilingGraph {
        topology,
        edge_length: scale,
        bbox,
        vertices: points,
        edges,
    })
}

/// Drop isolated vertices and every component except the one with most edges.
fn keep_largest_component(g: TilingGraph) -> TilingGraph {
    let (label, count) = component_labels(g.vertices.len(), &g.edges);
    let mut edge_count = vec![0usize; count];
    for e in &g.edges {
        edge_count[label[e[0]]] += 1;
    }
    let Some(keep) = (0..count).max_by_key(|&c| (edge_count[c], std::cmp::Reverse(c))) else {
        return g;
    };
    let mut remap = vec![usize::MAX; g.vertices.len()];
    let mut vertices = Vec::new();
    for (v, p) in g.vertices.iter().enumerate() {
        if label[v] == keep && edge_count[keep] > 0 {
            remap[v] = vertices.len();
            vertices.push(*p);
        }
    }
    let edges = g
        .edges
        .iter()
        .filter(|e| remap[e[0]] != usize::MAX)
        .map(|e| [remap[e[0]], remap[e[1]]])
        .collect();
    TilingGraph { vertices, edges, ..g }
}
