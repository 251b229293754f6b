use std::collections::HashSet;
use std::f64::consts::PI;

use serde::Serialize;

use super::generate::PointGrid;
use super::{Point, TilingGraph, MERGE_TOLERANCE};

/// Relative tolerance for the equal-edge rule.
pub const EDGE_LENGTH_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation {
    pub rule: &'static str,
    pub entity: String,
    pub measured: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub passed: bool,
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn has(&self, rule: &str) -> bool {
        self.violations.iter().any(|v| v.rule == rule)
    }
}

/// Check every structural invariant of a tiling graph.
///
/// Rules: `equal-edge`, `edge-to-edge`, `duplicate-vertex`, `duplicate-edge`,
/// `degree`, `vertex-config`, `connected`.
pub fn validate_tiling(g: &TilingGraph) -> ValidationReport {
    let mut out = Vec::new();
    let l = g.edge_length;
    let n = g.vertices.len();

    let mut seen = HashSet::new();
    for (k, &[i, j]) in g.edges.iter().enumerate() {
        if i >= n || j >= n || i == j {
            out.push(Violation {
                rule: "duplicate-edge",
                entity: format!("edge {k} ({i}, {j})"),
                measured: 0.0,
            });
            continue;
        }
        if !seen.insert((i.min(j), i.max(j))) {
            out.push(Violation {
                rule: "duplicate-edge",
                entity: format!("edge {k} ({i}, {j})"),
                measured: 1.0,
            });
        }
        let len = (g.vertices[j] - g.vertices[i]).norm();
        if (len - l).abs() > EDGE_LENGTH_TOLERANCE * l {
            out.push(Violation { rule: "equal-edge", entity: format!("edge {k}"), measured: len });
        }
    }
    // the remaining geometric rules assume well-formed indices
    if out.iter().any(|v| v.rule == "duplicate-edge" && v.measured == 0.0) {
        return ValidationReport { passed: false, violations: out };
    }

    let cell = l.max(f64::MIN_POSITIVE);
    let mut grid = PointGrid::new(cell);
    for (k, p) in g.vertices.iter().enumerate() {
        for other in grid.near(p) {
            let d = (g.vertices[other] - p).norm();
            if d <= MERGE_TOLERANCE * l {
                out.push(Violation {
                    rule: "duplicate-vertex",
                    entity: format!("vertices {other} and {k}"),
                    measured: d,
                });
            }
        }
        grid.insert(p, k);
    }

    check_crossings(g, &mut out);

    let deg = g.degrees();
    let full = g.topology.vertex_degree();
    let adj = g.adjacency();
    for (v, &d) in deg.iter().enumerate() {
        if d > full {
            out.push(Violation { rule: "degree", entity: format!("vertex {v}"), measured: d as f64 });
        } else if d == full && !matches_config(g, &adj, v) {
            out.push(Violation {
                rule: "vertex-config",
                entity: format!("vertex {v}"),
                measured: d as f64,
            });
        }
    }

    let (_, components) = g.components();
    if components > 1 {
        out.push(Violation {
            rule: "connected",
            entity: "graph".to_string(),
            measured: components as f64,
        });
    }

    ValidationReport { passed: out.is_empty(), violations: out }
}

/// Proper intersections between edges, and vertices lying inside an edge.
fn check_crossings(g: &TilingGraph, out: &mut Vec<Violation>) {
    let l = g.edge_length;
    let eps = MERGE_TOLERANCE * l;
    let mid = |e: &[usize; 2]| 0.5 * (g.vertices[e[0]] + g.vertices[e[1]]);

    // edges whose midpoints are farther apart than their lengths cannot meet;
    // bucket by midpoint with a cell wide enough for any edge in the graph
    let reach = g
        .edges
        .iter()
        .map(|e| (g.vertices[e[1]] - g.vertices[e[0]]).norm())
        .fold(l, f64::max);
    let mut grid = PointGrid::new(reach);
    for (k, e) in g.edges.iter().enumerate() {
        let m = mid(e);
        for other in grid.near(&m) {
            let f = &g.edges[other];
            if e.iter().any(|v| f.contains(v)) {
                continue;
            }
            let (a, b) = (g.vertices[e[0]], g.vertices[e[1]]);
            let (c, d) = (g.vertices[f[0]], g.vertices[f[1]]);
            if segments_touch(a, b, c, d, eps) {
                out.push(Violation {
                    rule: "edge-to-edge",
                    entity: format!("edges {other} and {k}"),
                    measured: (mid(f) - m).norm(),
                });
            }
        }
        grid.insert(&m, k);
    }

    let mut vgrid = PointGrid::new(reach);
    for (k, p) in g.vertices.iter().enumerate() {
        vgrid.insert(p, k);
    }
    for (k, e) in g.edges.iter().enumerate() {
        let (a, b) = (g.vertices[e[0]], g.vertices[e[1]]);
        for v in vgrid.near(&mid(e)) {
            if e.contains(&v) {
                continue;
            }
            let p = g.vertices[v];
            let ab = b - a;
            let t = (p - a).dot(&ab) / ab.norm_squared();
            if t > 0.0 && t < 1.0 && (a + ab * t - p).norm() <= eps {
                out.push(Violation {
                    rule: "edge-to-edge",
                    entity: format!("vertex {v} inside edge {k}"),
                    measured: t,
                });
            }
        }
    }
}

fn cross(u: Point, v: Point) -> f64 {
    u.x * v.y - u.y * v.x
}

/// True when the closed segments ab and cd share a point (no shared endpoint assumed).
fn segments_touch(a: Point, b: Point, c: Point, d: Point, eps: f64) -> bool {
    let d1 = cross(b - a, c - a);
    let d2 = cross(b - a, d - a);
    let d3 = cross(d - c, a - c);
    let d4 = cross(d - c, b - c);
    let scale_ab = (b - a).norm();
    let scale_cd = (d - c).norm();
    let straddles = |p: f64, q: f64, s: f64| (p > eps * s && q < -eps * s) || (p < -eps * s && q > eps * s);
    if straddles(d1, d2, scale_ab) && straddles(d3, d4, scale_cd) {
        return true;
    }
    // collinear overlap
    if d1.abs() <= eps * scale_ab && d2.abs() <= eps * scale_ab {
        let dir = (b - a) / scale_ab;
        let (ta, tb) = (0.0, scale_ab);
        let (tc, td) = ((c - a).dot(&dir), (d - a).dot(&dir));
        let (lo, hi) = (tc.min(td), tc.max(td));
        return hi > ta + eps && lo < tb - eps;
    }
    false
}

/// Polygon sizes around vertex `v`, read counter-clockwise from the angular
/// gaps between consecutive incident edges. `None` if some gap is not the
/// interior angle of a regular polygon.
pub fn vertex_configuration_at(g: &TilingGraph, v: usize) -> Option<Vec<u32>> {
    let adj = g.adjacency();
    gaps_as_polygons(g, &adj[v], v)
}

fn gaps_as_polygons(g: &TilingGraph, nbrs: &[usize], v: usize) -> Option<Vec<u32>> {
    if nbrs.len() < 2 {
        return None;
    }
    let p = g.vertices[v];
    let mut angles: Vec<f64> = nbrs
        .iter()
        .map(|&w| {
            let d = g.vertices[w] - p;
            d.y.atan2(d.x)
        })
        .collect();
    angles.sort_by(f64::total_cmp);
    let k = angles.len();
    let mut out = Vec::with_capacity(k);
    for i in 0..k {
        let gap = if i + 1 < k { angles[i + 1] - angles[i] } else { angles[0] + 2.0 * PI - angles[i] };
        // interior angle of a regular n-gon is pi (n - 2) / n
        let n = 2.0 * PI / (PI - gap);
        let rounded = n.round();
        if !(rounded >= 3.0 && (n - rounded).abs() < 1e-6) {
            return None;
        }
        out.push(rounded as u32);
    }
    Some(out)
}

fn matches_config(g: &TilingGraph, adj: &[Vec<usize>], v: usize) -> bool {
    let Some(found) = gaps_as_polygons(g, &adj[v], v) else {
        return false;
    };
    same_cycle(&found, g.topology.vertex_config())
}

/// Equality of cyclic sequences up to rotation and reflection.
pub(crate) fn same_cycle(a: &[u32], b: &[u32]) -> bool {
    if a.len() != b.len() {
        return false;
    }
    let n = a.len();
    let reversed: Vec<u32> = a.iter().rev().copied().collect();
    [a.to_vec(), reversed]
        .iter()
        .any(|seq| (0..n).any(|s| (0..n).all(|i| seq[(i + s) % n] == b[i])))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tiling::{generate_tiling, Bbox, TopologyId};

    fn square() -> TilingGraph {
        generate_tiling(TopologyId::Square, Bbox::square(200.0), 50.0).unwrap()
    }

    #[test]
    fn generated_square_passes() {
        let r = validate_tiling(&square());
        assert!(r.passed);
        assert!(r.violations.is_empty());
    }

    #[test]
    fn short_edge_is_reported_with_its_length() {
        let g = TilingGraph {
            topology: TopologyId::Square,
            edge_length: 50.0,
            bbox: Bbox::square(100.0),
            vertices: vec![Point::new(0.0, 0.0), Point::new(49.9, 0.0)],
            edges: vec![[0, 1]],
        };
        let r = validate_tiling(&g);
        assert!(!r.passed);
        let v = r.violations.iter().find(|v| v.rule == "equal-edge").unwrap();
        assert!((v.measured - 49.9).abs() < 1e-12);
    }

    #[test]
    fn crossing_diagonal_is_reported() {
        let mut g = square();
        // from vertex 0 two cells right and one up, through the middle of a vertical edge
        let target = g.vertices[0] + Point::new(100.0, 50.0);
        let right = g.vertices.iter().position(|p| (p - target).norm() < 1e-9);
        g.edges.push([0, right.unwrap()]);
        let r = validate_tiling(&g);
        assert!(r.has("edge-to-edge"));
        assert!(r.has("equal-edge"));
    }

    #[test]
    fn duplicated_edge_and_vertex() {
        let mut g = square();
        g.edges.push(g.edges[0]);
        g.vertices.push(g.vertices[3] + Point::new(1e-9, 0.0));
        let r = validate_tiling(&g);
        assert!(r.has("duplicate-edge"));
        assert!(r.has("duplicate-vertex"));
    }

    #[test]
    fn disconnected_is_reported() {
        let mut g = square();
        let far = g.vertices.len();
        g.vertices.push(Point::new(1000.0, 1000.0));
        g.vertices.push(Point::new(1050.0, 1000.0));
        g.edges.push([far, far + 1]);
        assert!(validate_tiling(&g).has("connected"));
    }

    #[test]
    fn wrong_catalog_entry_fails_vertex_config() {
        let mut g = generate_tiling(TopologyId::Trihexagonal, Bbox::square(400.0), 50.0).unwrap();
        g.topology = TopologyId::Rhombitrihexagonal; // also degree 4
        assert!(validate_tiling(&g).has("vertex-config"));
    }

    #[test]
    fn cyclic_match_allows_reflection() {
        assert!(same_cycle(&[3, 3, 4, 3, 4], &[4, 3, 4, 3, 3]));
        assert!(same_cycle(&[3, 4, 6, 4], &[6, 4, 3, 4]));
        assert!(!same_cycle(&[3, 3, 3, 4, 4], &[3, 3, 4, 3, 4]));
    }
}
