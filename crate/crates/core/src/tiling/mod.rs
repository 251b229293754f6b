//! The eleven uniform tilings of the plane as clipped vertex/edge graphs.
//!
//! A [`TilingGraph`] is the abstract lattice: hub positions plus equal-length
//! edges. Coordinates are in millimetres, with the origin at the centre of the
//! bounding box, so the box spans `[-w/2, w/2] x [-h/2, h/2]`.

mod generate;
mod pattern;
mod validate;

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use nalgebra::Vector2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use generate::generate_tiling;
pub use validate::{validate_tiling, vertex_configuration_at, ValidationReport, Violation};

pub type Point = Vector2<f64>;

/// Relative tolerance used for merging coincident vertices and matching edge lengths.
pub const MERGE_TOLERANCE: f64 = 1e-6;

/// One of the eleven uniform (vertex-transitive, edge-to-edge) tilings.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum TopologyId {
    /// 3.3.3.3.3.3
    #[serde(rename = "T")]
    Triangular,
    /// 4.4.4.4
    #[serde(rename = "S")]
    Square,
    /// 6.6.6
    #[serde(rename = "H")]
    Hexagonal,
    /// 3.3.3.4.4
    #[serde(rename = "T3S2")]
    ElongatedTriangular,
    /// 3.3.4.3.4
    #[serde(rename = "T2STS")]
    SnubSquare,
    /// 3.6.3.6 (kagome)
    #[serde(rename = "THTH")]
    Trihexagonal,
    /// 3.4.6.4
    #[serde(rename = "TSHS")]
    Rhombitrihexagonal,
    /// 3.12.12
    #[serde(rename = "TD2")]
    TruncatedHexagonal,
    /// 4.8.8
    #[serde(rename = "SO2")]
    TruncatedSquare,
    /// 4.6.12
    #[serde(rename = "SHD")]
    TruncatedTrihexagonal,
    /// 3.3.3.3.6, chiral
    #[serde(rename = "T4H")]
    SnubHexagonal,
}

impl TopologyId {
    /// Catalog order: the three regular tilings, then the semi-regular ones.
    pub const ALL: [TopologyId; 11] = [
        TopologyId::Triangular,
        TopologyId::Square,
        TopologyId::Hexagonal,
        TopologyId::ElongatedTriangular,
        TopologyId::SnubSquare,
        TopologyId::Trihexagonal,
        TopologyId::Rhombitrihexagonal,
        TopologyId::TruncatedHexagonal,
        TopologyId::TruncatedSquare,
        TopologyId::TruncatedTrihexagonal,
        TopologyId::SnubHexagonal,
    ];

    /// Every topology with an orthotropic cell, i.e. all but the snub hexagonal tiling.
    pub const ORTHOTROPIC: [TopologyId; 10] = [
        TopologyId::Triangular,
        TopologyId::Square,
        TopologyId::Hexagonal,
        TopologyId::ElongatedTriangular,
        TopologyId::SnubSquare,
        TopologyId::Trihexagonal,
        TopologyId::Rhombitrihexagonal,
        TopologyId::TruncatedHexagonal,
        TopologyId::TruncatedSquare,
        TopologyId::TruncatedTrihexagonal,
    ];

    pub fn code(self) -> &'static str {
        match self {
            TopologyId::Triangular => "T",
            TopologyId::Square => "S",
            TopologyId::Hexagonal => "H",
            TopologyId::ElongatedTriangular => "T3S2",
            TopologyId::SnubSquare => "T2STS",
            TopologyId::Trihexagonal => "THTH",
            TopologyId::Rhombitrihexagonal => "TSHS",
            TopologyId::TruncatedHexagonal => "TD2",
            TopologyId::TruncatedSquare => "SO2",
            TopologyId::TruncatedTrihexagonal => "SHD",
            TopologyId::SnubHexagonal => "T4H",
        }
    }

    /// Polygons around a vertex, in cyclic order.
    pub fn vertex_config(self) -> &'static [u32] {
        match self {
            TopologyId::Triangular => &[3, 3, 3, 3, 3, 3],
            TopologyId::Square => &[4, 4, 4, 4],
            TopologyId::Hexagonal => &[6, 6, 6],
            TopologyId::ElongatedTriangular => &[3, 3, 3, 4, 4],
            TopologyId::SnubSquare => &[3, 3, 4, 3, 4],
            TopologyId::Trihexagonal => &[3, 6, 3, 6],
            TopologyId::Rhombitrihexagonal => &[3, 4, 6, 4],
            TopologyId::TruncatedHexagonal => &[3, 12, 12],
            TopologyId::TruncatedSquare => &[4, 8, 8],
            TopologyId::TruncatedTrihexagonal => &[4, 6, 12],
            TopologyId::SnubHexagonal => &[3, 3, 3, 3, 6],
        }
    }

    /// Dotted vertex configuration, e.g. `3.6.3.6`.
    pub fn vertex_config_string(self) -> String {
        self.vertex_config()
            .iter()
            .map(|n| n.to_string())
            .collect::<Vec<_>>()
            .join(".")
    }

    pub fn vertex_degree(self) -> usize {
        self.vertex_config().len()
    }

    /// False only for the chiral snub hexagonal tiling, which has no mirror axes.
    pub fn orthotropic_rve(self) -> bool {
        self != TopologyId::SnubHexagonal
    }

    /// Spacing of the vertical and horizontal mirror lines in units of the
    /// edge length. One line of each family passes through the centre of a
    /// generated box. `None` for the chiral snub hexagonal tiling.
    pub fn mirror_spacing(self) -> Option<(f64, f64)> {
        pattern::pattern(self).rect.map(|(w, h)| (0.5 * w, 0.5 * h))
    }

    pub fn is_regular(self) -> bool {
        matches!(
            self,
            TopologyId::Triangular | TopologyId::Square | TopologyId::Hexagonal
        )
    }

    /// Plane area per vertex for unit edge length.
    ///
    /// Each n-gon around a vertex contributes `1/n` of its area.
    pub fn area_per_vertex(self) -> f64 {
        self.vertex_config()
            .iter()
            .map(|&n| {
                let n = n as f64;
                1.0 / (4.0 * (std::f64::consts::PI / n).tan())
            })
            .sum()
    }

    /// Plane area per edge for unit edge length.
    pub fn area_per_edge(self) -> f64 {
        2.0 * self.area_per_vertex() / self.vertex_degree() as f64
    }
}

impl fmt::Display for TopologyId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

impl FromStr for TopologyId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let wanted = s.trim();
        TopologyId::ALL
            .into_iter()
            .find(|t| t.code().eq_ignore_ascii_case(wanted))
            .ok_or_else(|| Error::UnknownTopology(s.to_string()))
    }
}

/// All eleven topologies in catalog order.
pub fn list_topologies() -> Vec<TopologyId> {
    TopologyId::ALL.to_vec()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bbox {
    pub width: f64,
    pub height: f64,
}

impl Bbox {
    pub fn new(width: f64, height: f64) -> Self {
        Bbox { width, height }
    }

    pub fn square(side: f64) -> Self {
        Bbox::new(side, side)
    }

    pub fn area(&self) -> f64 {
        self.width * self.height
    }

    /// True if `p` (centre-origin coordinates) lies inside the box, inflated by `tol`.
    pub fn contains(&self, p: &Point, tol: f64) -> bool {
        p.x.abs() <= 0.5 * self.width + tol && p.y.abs() <= 0.5 * self.height + tol
    }
}

/// Clipped tiling: hub vertices and equal-length edges.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TilingGraph {
    pub topology: TopologyId,
    #[serde(rename = "edge_length_mm")]
    pub edge_length: f64,
    #[serde(rename = "bbox_mm", with = "bbox_pair")]
    pub bbox: Bbox,
    #[serde(with = "point_list")]
    pub vertices: Vec<Point>,
    pub edges: Vec<[usize; 2]>,
}

impl TilingGraph {
    pub fn degrees(&self) -> Vec<usize> {
        let mut deg = vec![0; self.vertices.len()];
        for &[i, j] in &self.edges {
            deg[i] += 1;
            deg[j] += 1;
        }
        deg
    }

    pub fn adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.vertices.len()];
        for &[i, j] in &self.edges {
            adj[i].push(j);
            adj[j].push(i);
        }
        adj
    }

    /// Connected-component label per vertex and the number of components.
    pub fn components(&self) -> (Vec<usize>, usize) {
        component_labels(self.vertices.len(), &self.edges)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

/// Vertices whose degree is below the topology's full vertex degree.
pub fn perimeter_vertices(g: &TilingGraph) -> BTreeSet<usize> {
    let full = g.topology.vertex_degree();
    g.degrees()
        .into_iter()
        .enumerate()
        .filter(|&(_, d)| d < full)
        .map(|(i, _)| i)
        .collect()
}

pub(crate) fn component_labels(n: usize, edges: &[[usize; 2]]) -> (Vec<usize>, usize) {
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for &[a, b] in edges {
        let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
        if ra != rb {
            parent[ra.max(rb)] = ra.min(rb);
        }
    }
    let mut label = vec![usize::MAX; n];
    let mut roots = Vec::new();
    for v in 0..n {
        let r = find(&mut parent, v);
        let id = match roots.iter().position(|&x| x == r) {
            Some(id) => id,
            None => {
                roots.push(r);
                roots.len() - 1
            }
        };
        label[v] = id;
    }
    (label, roots.len())
}

pub(crate) mod point_list {
    use super::Point;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(pts: &[Point], s: S) -> Result<S::Ok, S::Error> {
        let raw: Vec<[f64; 2]> = pts.iter().map(|p| [p.x, p.y]).collect();
        raw.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Point>, D::Error> {
        let raw: Vec<[f64; 2]> = Vec::deserialize(d)?;
        Ok(raw.into_iter().map(|[x, y]| Point::new(x, y)).collect())
    }
}

pub(crate) mod bbox_pair {
    use super::Bbox;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(b: &Bbox, s: S) -> Result<S::Ok, S::Error> {
        [b.width, b.height].serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Bbox, D::Error> {
        let [w, h] = <[f64; 2]>::deserialize(d)?;
        Ok(Bbox::new(w, h))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn catalog_has_eleven_entries_in_order() {
        let codes: Vec<_> = list_topologies().iter().map(|t| t.code()).collect();
        assert_eq!(
            codes,
            ["T", "S", "H", "T3S2", "T2STS", "THTH", "TSHS", "TD2", "SO2", "SHD", "T4H"]
        );
        assert_eq!(list_topologies().iter().filter(|t| t.is_regular()).count(), 3);
    }

    #[test]
    fn trihexagonal_config() {
        let t = TopologyId::Trihexagonal;
        assert_eq!(t.vertex_config_string(), "3.6.3.6");
        assert_eq!(t.vertex_degree(), 4);
    }

    #[test]
    fn only_snub_hexagonal_is_not_orthotropic() {
        for t in TopologyId::ALL {
            assert_eq!(t.orthotropic_rve(), t != TopologyId::SnubHexagonal);
            assert_eq!(t.vertex_degree(), t.vertex_config().len());
        }
    }

    #[test]
    fn vertex_angles_sum_to_full_turn() {
        for t in TopologyId::ALL {
            let total: f64 = t
                .vertex_config()
                .iter()
                .map(|&n| std::f64::consts::PI * (n as f64 - 2.0) / n as f64)
                .sum();
            assert!((total - 2.0 * std::f64::consts::PI).abs() < 1e-12, "{t}");
        }
    }

    #[test]
    fn area_per_edge_of_square_and_triangular() {
        assert!((TopologyId::Square.area_per_edge() - 0.5).abs() < 1e-12);
        // triangle area sqrt(3)/4, three edges per vertex, one vertex per sqrt(3)/2
        let tri = 3f64.sqrt() / 2.0 / 3.0;
        assert!((TopologyId::Triangular.area_per_edge() - tri).abs() < 1e-12);
    }

    #[test]
    fn parse_codes() {
        assert_eq!("thth".parse::<TopologyId>().unwrap(), TopologyId::Trihexagonal);
        assert!(matches!(
            "X9".parse::<TopologyId>(),
            Err(Error::UnknownTopology(_))
        ));
    }

    #[test]
    fn perimeter_of_single_edge_is_both_ends() {
        let g = TilingGraph {
            topology: TopologyId::Square,
            edge_length: 50.0,
            bbox: Bbox::square(100.0),
            vertices: vec![Point::new(-25.0, 0.0), Point::new(25.0, 0.0)],
            edges: vec![[0, 1]],
        };
        assert_eq!(perimeter_vertices(&g).into_iter().collect::<Vec<_>>(), vec![0, 1]);
    }
}
