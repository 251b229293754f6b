//! Beam meshes: every tiling edge becomes node-arm / actuator / node-arm.
//!
//! Hub fe-nodes share indices with the tiling vertices; the two interior
//! fe-nodes of edge `k` are `V + 2k` and `V + 2k + 1`. All arm segments that
//! meet at a hub share that single fe-node, which makes the hub a rigid
//! junction.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tiling::{
    generate_tiling, perimeter_vertices, point_list, validate_tiling, Bbox, Point, TilingGraph, TopologyId,
    MERGE_TOLERANCE,
};

/// Fraction of an edge taken by each node arm (12.5 mm of a 50 mm edge).
pub const ARM_FRACTION: f64 = 0.25;

/// Shear correction factor of a rectangular section.
pub const RECT_SHEAR_CORRECTION: f64 = 5.0 / 6.0;

pub const DEFAULT_EDGE_LENGTH: f64 = 50.0;
pub const DEFAULT_DEPTH: f64 = 5.0;
pub const STIFF_WIDTH: f64 = 5.0;
pub const COMPLIANT_WIDTH: f64 = 1.0;

/// Linear isotropic material; the shear modulus is derived.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Material {
    pub young_modulus: f64,
    pub poisson_ratio: f64,
}

impl Material {
    pub fn new(young_modulus: f64, poisson_ratio: f64) -> Result<Self> {
        if !(young_modulus.is_finite() && young_modulus > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "Young's modulus must be positive, got {young_modulus}"
            )));
        }
        if !(poisson_ratio > -1.0 && poisson_ratio < 0.5) {
            return Err(Error::InvalidParameter(format!(
                "Poisson's ratio must lie in (-1, 0.5), got {poisson_ratio}"
            )));
        }
        Ok(Material { young_modulus, poisson_ratio })
    }

    pub fn shear_modulus(&self) -> f64 {
        self.young_modulus / (2.0 * (1.0 + self.poisson_ratio))
    }

    pub fn scaled(&self, factor: f64) -> Result<Self> {
        Material::new(self.young_modulus * factor, self.poisson_ratio)
    }
}

impl Default for Material {
    /// 2000 MPa, 0.3.
    fn default() -> Self {
        Material { young_modulus: 2000.0, poisson_ratio: 0.3 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SectionProfile {
    pub in_plane_width: f64,
    pub out_of_plane_depth: f64,
    pub area: f64,
    /// In-plane bending, `depth * width^3 / 12`.
    pub second_moment: f64,
    pub shear_correction: f64,
}

impl SectionProfile {
    pub fn rectangular(width: f64, depth: f64) -> Self {
        SectionProfile {
            in_plane_width: width,
            out_of_plane_depth: depth,
            area: width * depth,
            second_moment: depth * width.powi(3) / 12.0,
            shear_correction: RECT_SHEAR_CORRECTION,
        }
    }

    /// Half of the section, for members lying on a mirror line: the other
    /// half belongs to the reflected neighbour. Widths are kept for reporting.
    pub fn halved(&self) -> Self {
        SectionProfile { area: 0.5 * self.area, second_moment: 0.5 * self.second_moment, ..*self }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CaseKind {
    ActuatorStiff,
    NodeStiff,
    EqualLow,
    EqualHigh,
}

impl CaseKind {
    pub const ALL: [CaseKind; 4] =
        [CaseKind::ActuatorStiff, CaseKind::NodeStiff, CaseKind::EqualLow, CaseKind::EqualHigh];

    pub fn name(self) -> &'static str {
        match self {
            CaseKind::ActuatorStiff => "actuator-stiff",
            CaseKind::NodeStiff => "node-stiff",
            CaseKind::EqualLow => "equal-low",
            CaseKind::EqualHigh => "equal-high",
        }
    }
}

impl fmt::Display for CaseKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for CaseKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm = s.trim().to_ascii_lowercase().replace('_', "-");
        CaseKind::ALL
            .into_iter()
            .find(|c| c.name() == norm)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown stiffness case `{s}`")))
    }
}

/// Relative actuator/node stiffness, expressed through in-plane widths.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StiffnessCase {
    pub kind: CaseKind,
    pub actuator_width: f64,
    pub node_width: f64,
}

impl StiffnessCase {
    /// Default widths: the stiff member is 5 mm wide, the compliant one 1 mm.
    pub fn preset(kind: CaseKind) -> Self {
        let (actuator_width, node_width) = match kind {
            CaseKind::ActuatorStiff => (STIFF_WIDTH, COMPLIANT_WIDTH),
            CaseKind::NodeStiff => (COMPLIANT_WIDTH, STIFF_WIDTH),
            CaseKind::EqualLow => (COMPLIANT_WIDTH, COMPLIANT_WIDTH),
            CaseKind::EqualHigh => (STIFF_WIDTH, STIFF_WIDTH),
        };
        StiffnessCase { kind, actuator_width, node_width }
    }

    pub fn width(&self, role: SegmentRole) -> f64 {
        match role {
            SegmentRole::NodeArm => self.node_width,
            SegmentRole::Actuator => self.actuator_width,
        }
    }
}

impl Default for StiffnessCase {
    fn default() -> Self {
        StiffnessCase::preset(CaseKind::ActuatorStiff)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SegmentRole {
    NodeArm,
    Actuator,
}

pub fn section_for(case: &StiffnessCase, role: SegmentRole, depth: f64) -> Result<SectionProfile> {
    if !(depth.is_finite() && depth > 0.0) {
        return Err(Error::InvalidParameter(format!("depth must be positive, got {depth}")));
    }
    let width = case.width(role);
    if !(width.is_finite() && width > 0.0) {
        return Err(Error::InvalidParameter(format!("section width must be positive, got {width}")));
    }
    Ok(SectionProfile::rectangular(width, depth))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Segment {
    pub i: usize,
    pub j: usize,
    pub role: SegmentRole,
    pub section: SectionProfile,
    /// Index of the tiling edge this segment belongs to.
    pub edge: usize,
}

impl Segment {
    pub fn length(&self, nodes: &[Point]) -> f64 {
        (nodes[self.j] - nodes[self.i]).norm()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BeamMesh {
    pub topology: TopologyId,
    pub edge_length: f64,
    pub fe_nodes: Vec<Point>,
    pub segments: Vec<Segment>,
    /// Sorted fe-node indices with prescribed displacements.
    pub boundary_hubs: Vec<usize>,
    pub hub_count: usize,
    pub edge_count: usize,
    pub bbox: Bbox,
    pub depth: f64,
    pub material: Material,
    pub case: StiffnessCase,
    /// Set when the mesh is clipped to a rectangle of mirror lines; `bbox`
    /// is then that rectangle.
    pub mirror: Option<MirrorDomain>,
}

/// Rectangle bounded by mirror lines of the tiling, centred on the box.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MirrorDomain {
    pub half_width: f64,
    pub half_height: f64,
}

impl MirrorDomain {
    /// Largest mirror-bounded rectangle inside `bbox`.
    pub fn inside(topology: TopologyId, bbox: Bbox, edge_length: f64) -> Result<Self> {
        let (sx, sy) = topology.mirror_spacing().ok_or(Error::NotOrthotropic(topology))?;
        let fit = |half: f64, step: f64| (half / step + MERGE_TOLERANCE).floor() * step;
        let d = MirrorDomain {
            half_width: fit(0.5 * bbox.width, sx * edge_length),
            half_height: fit(0.5 * bbox.height, sy * edge_length),
        };
        if !(d.half_width > 0.0 && d.half_height > 0.0) {
            return Err(Error::BboxTooSmall { topology, width: bbox.width, height: bbox.height, edge_length });
        }
        Ok(d)
    }

    pub fn bbox(&self) -> Bbox {
        Bbox::new(2.0 * self.half_width, 2.0 * self.half_height)
    }

    /// Whether `p` lies on the vertical (`x = +-half_width`) and on the
    /// horizontal (`y = +-half_height`) boundary lines.
    pub fn on_lines(&self, p: &Point, tol: f64) -> (bool, bool) {
        ((p.x.abs() - self.half_width).abs() <= tol, (p.y.abs() - self.half_height).abs() <= tol)
    }
}

impl BeamMesh {
    pub fn is_hub(&self, node: usize) -> bool {
        node < self.hub_count
    }

    /// Plane area the lattice represents: edge count times the area per edge
    /// of the infinite tiling.
    pub fn tributary_area(&self) -> f64 {
        self.edge_count as f64 * self.topology.area_per_edge() * self.edge_length.powi(2)
    }

    pub fn total_segment_length(&self) -> f64 {
        self.segments.iter().map(|s| s.length(&self.fe_nodes)).sum()
    }

    pub fn to_json(&self) -> Result<String> {
        #[derive(Serialize)]
        struct SegmentOut {
            i: usize,
            j: usize,
            role: SegmentRole,
            width_mm: f64,
        }
        #[derive(Serialize)]
        struct MeshOut<'a> {
            topology: TopologyId,
            material: &'a Material,
            depth_mm: f64,
            case: CaseKind,
            #[serde(with = "point_list")]
            fe_nodes: &'a Vec<Point>,
            segments: Vec<SegmentOut>,
            boundary_hubs: &'a [usize],
        }
        let out = MeshOut {
            topology: self.topology,
            material: &self.material,
            depth_mm: self.depth,
            case: self.case.kind,
            fe_nodes: &self.fe_nodes,
            segments: self
                .segments
                .iter()
                .map(|s| SegmentOut { i: s.i, j: s.j, role: s.role, width_mm: s.section.in_plane_width })
                .collect(),
            boundary_hubs: &self.boundary_hubs,
        };
        Ok(serde_json::to_string_pretty(&out)?)
    }
}

pub fn build_beam_mesh(
    g: &TilingGraph,
    case: StiffnessCase,
    material: Material,
    depth: f64,
) -> Result<BeamMesh> {
    let report = validate_tiling(g);
    if !report.passed {
        let first = &report.violations[0];
        return Err(Error::InvalidGraph(format!(
            "{} violation(s), first: {} at {} (measured {})",
            report.violations.len(),
            first.rule,
            first.entity,
            first.measured
        )));
    }
    let arm = section_for(&case, SegmentRole::NodeArm, depth)?;
    let actuator = section_for(&case, SegmentRole::Actuator, depth)?;

    let hubs = g.vertices.len();
    let mut fe_nodes = g.vertices.clone();
    fe_nodes.reserve(2 * g.edges.len());
    let mut segments = Vec::with_capacity(3 * g.edges.len());
    for (k, &[a, b]) in g.edges.iter().enumerate() {
        let (pa, pb) = (g.vertices[a], g.vertices[b]);
        let d = pb - pa;
        let n1 = fe_nodes.len();
        fe_nodes.push(pa + d * ARM_FRACTION);
        fe_nodes.push(pa + d * (1.0 - ARM_FRACTION));
        let seg = |i, j, role, section| Segment { i, j, role, section, edge: k };
        segments.push(seg(a, n1, SegmentRole::NodeArm, arm));
        segments.push(seg(n1, n1 + 1, SegmentRole::Actuator, actuator));
        segments.push(seg(n1 + 1, b, SegmentRole::NodeArm, arm));
    }

    Ok(BeamMesh {
        topology: g.topology,
        edge_length: g.edge_length,
        fe_nodes,
        segments,
        boundary_hubs: perimeter_vertices(g).into_iter().collect(),
        hub_count: hubs,
        edge_count: g.edges.len(),
        bbox: g.bbox,
        depth,
        material,
        case,
        mirror: None,
    })
}

#[derive(Clone, Copy, PartialEq)]
enum Side {
    In,
    On,
    Out,
}

/// Beam mesh of the mirror-bounded rectangle inside `bbox`.
///
/// Edges crossing a boundary line are cut at their midpoint (a mirror line
/// can only cross an edge perpendicularly through its middle), and edges
/// lying on a boundary line keep half their section. Boundary fe-nodes are
/// every node on the four lines.
pub fn build_mirror_mesh(
    topology: TopologyId,
    bbox: Bbox,
    edge_length: f64,
    case: StiffnessCase,
    material: Material,
    depth: f64,
) -> Result<BeamMesh> {
    let dom = MirrorDomain::inside(topology, bbox, edge_length)?;
    let pad = 4.0 * edge_length;
    let g = generate_tiling(topology, Bbox::new(2.0 * dom.half_width + pad, 2.0 * dom.half_height + pad), edge_length)?;
    let arm = section_for(&case, SegmentRole::NodeArm, depth)?;
    let actuator = section_for(&case, SegmentRole::Actuator, depth)?;

    let tol = MERGE_TOLERANCE * edge_length;
    let side = |p: &Point| {
        let (dx, dy) = (p.x.abs() - dom.half_width, p.y.abs() - dom.half_height);
        if dx > tol || dy > tol {
            Side::Out
        } else if dx >= -tol || dy >= -tol {
            Side::On
        } else {
            Side::In
        }
    };

    let along = |p: &Point, q: &Point| {
        let (vp, hp) = dom.on_lines(p, tol);
        let (vq, hq) = dom.on_lines(q, tol);
        (vp && vq && (p.x - q.x).abs() <= tol) || (hp && hq && (p.y - q.y).abs() <= tol)
    };
    // (inside hub, other end, whole edge?, halved section?)
    let mut kept: Vec<(usize, usize, bool, bool)> = Vec::new();
    for &[a, b] in &g.edges {
        let (pa, pb) = (g.vertices[a], g.vertices[b]);
        let mid = 0.5 * (pa + pb);
        match (side(&pa), side(&pb)) {
            (Side::Out, Side::Out) => {}
            (Side::In, Side::Out) | (Side::Out, Side::In) | (Side::On, Side::Out) | (Side::Out, Side::On) => {
                let (inner, outer) = if side(&pa) == Side::Out { (b, a) } else { (a, b) };
                match side(&mid) {
                    // also catches a boundary column leaving through the other line
                    Side::On => kept.push((inner, outer, false, along(&g.vertices[inner], &mid))),
                    // touches a line and leaves at once: its mirror image carries it
                    _ if side(&g.vertices[inner]) == Side::On => {}
                    _ => {
                        return Err(Error::InvalidGraph(format!(
                            "edge ({a}, {b}) leaves the mirror domain away from its midpoint"
                        )))
                    }
                }
            }
            (Side::On, Side::On) => kept.push((a, b, true, along(&pa, &pb))),
            _ => kept.push((a, b, true, false)),
        }
    }

    let mut remap = vec![usize::MAX; g.vertices.len()];
    let mut fe_nodes = Vec::new();
    for &(a, b, whole, _) in &kept {
        let ends: &[usize] = if whole { &[a, b] } else { &[a] };
        for &v in ends {
            if remap[v] == usize::MAX {
                remap[v] = fe_nodes.len();
                fe_nodes.push(g.vertices[v]);
            }
        }
    }
    // hubs in row-major order for deterministic numbering
    let hub_count = fe_nodes.len();
    let mut order: Vec<usize> = (0..hub_count).collect();
    let snap = |v: f64| (v / tol).round() as i64;
    order.sort_by_key(|&k| (snap(fe_nodes[k].y), snap(fe_nodes[k].x)));
    let mut rank = vec![0; hub_count];
    for (r, &k) in order.iter().enumerate() {
        rank[k] = r;
    }
    fe_nodes = order.iter().map(|&k| fe_nodes[k]).collect();
    for r in remap.iter_mut().filter(|r| **r != usize::MAX) {
        *r = rank[*r];
    }

    let mut segments = Vec::with_capacity(3 * kept.len());
    for (k, &(a, b, whole, halve)) in kept.iter().enumerate() {
        let (pa, pb) = (g.vertices[a], g.vertices[b]);
        let d = pb - pa;
        let (arm_s, act_s) = if halve { (arm.halved(), actuator.halved()) } else { (arm, actuator) };
        let n1 = fe_nodes.len();
        fe_nodes.push(pa + d * ARM_FRACTION);
        let seg = |i, j, role, section| Segment { i, j, role, section, edge: k };
        if whole {
            fe_nodes.push(pa + d * (1.0 - ARM_FRACTION));
            segments.push(seg(remap[a], n1, SegmentRole::NodeArm, arm_s));
            segments.push(seg(n1, n1 + 1, SegmentRole::Actuator, act_s));
            segments.push(seg(n1 + 1, remap[b], SegmentRole::NodeArm, arm_s));
        } else {
            fe_nodes.push(pa + d * 0.5);
            segments.push(seg(remap[a], n1, SegmentRole::NodeArm, arm_s));
            segments.push(seg(n1, n1 + 1, SegmentRole::Actuator, act_s));
        }
    }

    let boundary_hubs = (0..fe_nodes.len())
        .filter(|&n| {
            let (v, h) = dom.on_lines(&fe_nodes[n], tol);
            v || h
        })
        .collect();

    Ok(BeamMesh {
        topology,
        edge_length,
        fe_nodes,
        segments,
        boundary_hubs,
        hub_count,
        edge_count: kept.len(),
        bbox: dom.bbox(),
        depth,
        material,
        case,
        mirror: Some(dom),
    })
}
