//! Strain-energy homogenization: four prescribed-strain load cases give the
//! orthotropic stiffness tensor and the engineering constants.

use std::f64::consts::FRAC_PI_2;
use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fem::{
    affine_values, assemble, boundary_dofs, mirror_dofs, mirror_values, strain_energy_density, FactoredSystem,
    LinearSystem, MirrorLoading, DOF_PER_NODE,
};
use crate::meshbuild::{build_beam_mesh, build_mirror_mesh, BeamMesh, Material, StiffnessCase, DEFAULT_DEPTH, DEFAULT_EDGE_LENGTH};
use crate::tiling::{generate_tiling, Bbox, Point, TopologyId};

/// Largest strain component accepted; beyond it a linear model is meaningless.
pub const MAX_STRAIN: f64 = 0.1;

/// Strain at which results are compared by default.
pub const DEFAULT_STRAIN: f64 = 0.01;

/// Macroscopic strain; `eps12` is the tensor shear component (engineering
/// shear is `2 eps12`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MacroStrain {
    pub eps11: f64,
    pub eps22: f64,
    pub eps12: f64,
}

impl MacroStrain {
    pub fn new(eps11: f64, eps22: f64, eps12: f64) -> Result<Self> {
        for (name, v) in [("eps11", eps11), ("eps22", eps22), ("eps12", eps12)] {
            if !v.is_finite() || v.abs() > MAX_STRAIN {
                return Err(Error::InvalidParameter(format!(
                    "{name} = {v} must be finite with magnitude at most {MAX_STRAIN}"
                )));
            }
        }
        Ok(MacroStrain { eps11, eps22, eps12 })
    }

    pub fn zero() -> Self {
        MacroStrain { eps11: 0.0, eps22: 0.0, eps12: 0.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LoadCase {
    A,
    B,
    C,
    D,
}

impl LoadCase {
    pub const ALL: [LoadCase; 4] = [LoadCase::A, LoadCase::B, LoadCase::C, LoadCase::D];
}

impl fmt::Display for LoadCase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            LoadCase::A => "a",
            LoadCase::B => "b",
            LoadCase::C => "c",
            LoadCase::D => "d",
        };
        f.write_str(s)
    }
}

fn check_magnitude(s: f64) -> Result<()> {
    if s.is_finite() && s > 0.0 && s <= MAX_STRAIN {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("strain magnitude {s} must lie in (0, {MAX_STRAIN}]")))
    }
}

/// Uniaxial x, uniaxial y, pure shear, and equibiaxial strain of magnitude `s`.
pub fn load_case_strain(case: LoadCase, s: f64) -> Result<MacroStrain> {
    check_magnitude(s)?;
    Ok(match case {
        LoadCase::A => MacroStrain { eps11: s, eps22: 0.0, eps12: 0.0 },
        LoadCase::B => MacroStrain { eps11: 0.0, eps22: s, eps12: 0.0 },
        LoadCase::C => MacroStrain { eps11: 0.0, eps22: 0.0, eps12: s },
        LoadCase::D => MacroStrain { eps11: s, eps22: s, eps12: 0.0 },
    })
}

/// Strain-energy densities (MPa) of the four load cases.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyDensities {
    pub se_a: f64,
    pub se_b: f64,
    pub se_c: f64,
    pub se_d: f64,
    pub eps11: f64,
    pub eps22: f64,
    pub eps12: f64,
}

impl EnergyDensities {
    /// Densities of a homogeneous orthotropic medium with tensor `c`, for
    /// checking the inversion.
    pub fn from_tensor(c: &StiffnessTensorH, s: f64) -> Self {
        let w = |e: MacroStrain| {
            let sig = macro_stress(c, &e);
            0.5 * (sig.sigma11 * e.eps11 + sig.sigma22 * e.eps22 + 2.0 * sig.sigma12 * e.eps12)
        };
        EnergyDensities {
            se_a: w(MacroStrain { eps11: s, eps22: 0.0, eps12: 0.0 }),
            se_b: w(MacroStrain { eps11: 0.0, eps22: s, eps12: 0.0 }),
            se_c: w(MacroStrain { eps11: 0.0, eps22: 0.0, eps12: s }),
            se_d: w(MacroStrain { eps11: s, eps22: s, eps12: 0.0 }),
            eps11: s,
            eps22: s,
            eps12: s,
        }
    }
}

/// How the load-case strains reach the lattice and where energy is measured.
///
/// Serialized as its name; `affine-window:<margin>` sets a window margin.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum BoundaryMode {
    /// Mesh clipped to the largest rectangle of mirror lines inside the box,
    /// with symmetry conditions on those lines. For a lattice with mirror
    /// axes this reproduces the periodic response of the infinite tiling;
    /// energy is divided by the rectangle volume.
    #[default]
    Mirror,
    /// Affine displacement of every perimeter hub of the whole-edge clip.
    /// Energy and strain are measured in a smooth interior window (see
    /// [`InteriorWindow`]) and the boundary strain is calibrated so that the
    /// window carries exactly the load-case strain.
    AffineWindow {
        /// Distance from the box edge where the window weight reaches zero (mm).
        margin: f64,
    },
    /// Affine displacement of every perimeter hub; total energy over the
    /// bounding-box volume.
    AffineBox,
}

impl BoundaryMode {
    pub fn name(&self) -> &'static str {
        match self {
            BoundaryMode::Mirror => "mirror",
            BoundaryMode::AffineWindow { .. } => "affine-window",
            BoundaryMode::AffineBox => "affine-box",
        }
    }
}

impl fmt::Display for BoundaryMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for BoundaryMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let norm = s.trim().to_ascii_lowercase();
        if let Some(m) = norm.strip_prefix("affine-window:") {
            let margin = m
                .parse::<f64>()
                .ok()
                .filter(|m| m.is_finite() && *m >= 0.0)
                .ok_or_else(|| Error::InvalidParameter(format!("bad window margin `{m}`")))?;
            return Ok(BoundaryMode::AffineWindow { margin });
        }
        match norm.as_str() {
            "mirror" => Ok(BoundaryMode::Mirror),
            "affine-window" => Ok(BoundaryMode::AffineWindow { margin: DEFAULT_EDGE_LENGTH }),
            "affine-box" => Ok(BoundaryMode::AffineBox),
            _ => Err(Error::InvalidParameter(format!(
                "unknown boundary mode `{s}` (mirror, affine-window, affine-box)"
            ))),
        }
    }
}

impl TryFrom<String> for BoundaryMode {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<BoundaryMode> for String {
    fn from(m: BoundaryMode) -> String {
        match m {
            BoundaryMode::AffineWindow { margin } => format!("affine-window:{margin}"),
            _ => m.name().to_string(),
        }
    }
}

/// Separable `cos^2` weight centred on the box, zero `margin` from its edges.
///
/// Averages over a lattice with a smooth weight converge much faster than
/// sharp cut-offs, and the weight vanishes before the boundary layer that
/// the prescribed hubs create.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InteriorWindow {
    pub half_width: f64,
    pub half_height: f64,
}

impl InteriorWindow {
    pub fn new(bbox: Bbox, margin: f64) -> Result<Self> {
        let w = InteriorWindow { half_width: 0.5 * bbox.width - margin, half_height: 0.5 * bbox.height - margin };
        if !(margin >= 0.0 && w.half_width > 0.0 && w.half_height > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "window margin {margin} leaves no interior in a {} x {} box",
                bbox.width, bbox.height
            )));
        }
        Ok(w)
    }

    pub fn weight(&self, p: &Point) -> f64 {
        let (fx, fy) = ((p.x / self.half_width).abs(), (p.y / self.half_height).abs());
        if fx >= 1.0 || fy >= 1.0 {
            return 0.0;
        }
        (FRAC_PI_2 * fx).cos().powi(2) * (FRAC_PI_2 * fy).cos().powi(2)
    }
}

/// Window-weighted least-squares fit `u = c + F x` over the hubs; returns the
/// symmetric part of `F` as (eps11, eps22, eps12).
pub fn window_strain(mesh: &BeamMesh, win: &InteriorWindow, u: &[f64]) -> Result<[f64; 3]> {
    let mut m = Matrix3::zeros();
    let (mut bx, mut by) = (Vector3::zeros(), Vector3::zeros());
    for h in 0..mesh.hub_count {
        let p = mesh.fe_nodes[h];
        let w = win.weight(&p);
        if w == 0.0 {
            continue;
        }
        let q = Vector3::new(1.0, p.x, p.y);
        m += w * q * q.transpose();
        bx += w * u[DOF_PER_NODE * h] * q;
        by += w * u[DOF_PER_NODE * h + 1] * q;
    }
    let lu = m.lu();
    let (Some(cx), Some(cy)) = (lu.solve(&bx), lu.solve(&by)) else {
        return Err(Error::InsufficientData("too few hubs inside the interior window".into()));
    };
    Ok([cx[1], cy[2], 0.5 * (cx[2] + cy[1])])
}

/// Window-weighted energy per unit volume: each edge carries the plane area
/// per edge of the infinite tiling.
pub fn window_energy_density(mesh: &BeamMesh, sys: &LinearSystem, win: &InteriorWindow, u: &[f64]) -> Result<f64> {
    let weights = edge_weights(mesh, win);
    let energy: f64 =
        sys.element_energies(u)?.iter().zip(&sys.elements).map(|(e, el)| weights[el.edge] * e).sum();
    let per_edge = mesh.topology.area_per_edge() * mesh.edge_length.powi(2) * mesh.depth;
    let volume = weights.iter().sum::<f64>() * per_edge;
    if !(volume > 0.0) {
        return Err(Error::InsufficientData("no edge inside the interior window".into()));
    }
    Ok(energy / volume)
}

fn edge_weights(mesh: &BeamMesh, win: &InteriorWindow) -> Vec<f64> {
    let v = mesh.hub_count;
    (0..mesh.edge_count)
        .map(|k| win.weight(&(0.5 * (mesh.fe_nodes[v + 2 * k] + mesh.fe_nodes[v + 2 * k + 1]))))
        .collect()
}

/// The four load cases of one mesh: mirror conditions when the mesh is
/// clipped to a mirror domain, affine conditions over the whole box otherwise.
pub fn run_load_cases(mesh: &BeamMesh, s: f64) -> Result<EnergyDensities> {
    let sys = assemble(mesh)?;
    let mode = if mesh.mirror.is_some() { BoundaryMode::Mirror } else { BoundaryMode::AffineBox };
    run_load_cases_on(&sys, mesh, s, mode)
}

/// As [`run_load_cases`] on an already assembled system. Load cases sharing
/// a set of prescribed DOFs share one factorization.
pub fn run_load_cases_on(sys: &LinearSystem, mesh: &BeamMesh, s: f64, mode: BoundaryMode) -> Result<EnergyDensities> {
    check_magnitude(s)?;
    let mut se = [0.0; 4];
    match mode {
        BoundaryMode::Mirror => {
            let normal = FactoredSystem::new(sys, &mirror_dofs(mesh, MirrorLoading::Normal)?)?;
            let shear = FactoredSystem::new(sys, &mirror_dofs(mesh, MirrorLoading::Shear)?)?;
            for (k, case) in LoadCase::ALL.into_iter().enumerate() {
                let strain = load_case_strain(case, s)?;
                let loading = MirrorLoading::of(&strain)?;
                let factored = if loading == MirrorLoading::Shear { &shear } else { &normal };
                let sol = factored.solve(&mirror_values(mesh, loading, &strain)?)?;
                se[k] = strain_energy_density(&sol, mesh);
            }
        }
        BoundaryMode::AffineBox => {
            let factored = FactoredSystem::new(sys, &boundary_dofs(mesh)?)?;
            for (k, case) in LoadCase::ALL.into_iter().enumerate() {
                let strain = load_case_strain(case, s)?;
                let sol = factored.solve(&affine_values(mesh, &strain))?;
                se[k] = strain_energy_density(&sol, mesh);
            }
        }
        BoundaryMode::AffineWindow { margin } => {
            let factored = FactoredSystem::new(sys, &boundary_dofs(mesh)?)?;
            let win = InteriorWindow::new(mesh.bbox, margin)?;
            let calib = window_response(mesh, &factored, &win, s)?;
            for (k, case) in LoadCase::ALL.into_iter().enumerate() {
                let target = load_case_strain(case, s)?;
                let b = calib * Vector3::new(target.eps11, target.eps22, target.eps12);
                let boundary = MacroStrain { eps11: b[0], eps22: b[1], eps12: b[2] };
                let sol = factored.solve(&affine_values(mesh, &boundary))?;
                se[k] = window_energy_density(mesh, sys, &win, &sol.displacements)?;
            }
        }
    }
    Ok(EnergyDensities { se_a: se[0], se_b: se[1], se_c: se[2], se_d: se[3], eps11: s, eps22: s, eps12: s })
}

/// Map from window strain to the boundary strain that produces it.
fn window_response(
    mesh: &BeamMesh,
    factored: &FactoredSystem<'_>,
    win: &InteriorWindow,
    s: f64,
) -> Result<Matrix3<f64>> {
    let mut response = Matrix3::zeros();
    for (col, case) in [LoadCase::A, LoadCase::B, LoadCase::C].into_iter().enumerate() {
        let sol = factored.solve(&affine_values(mesh, &load_case_strain(case, s)?))?;
        let e = window_strain(mesh, win, &sol.displacements)?;
        response.set_column(col, &(Vector3::from(e) / s));
    }
    response.try_inverse().ok_or_else(|| {
        Error::InsufficientData("interior strain does not respond to every boundary strain".into())
    })
}

/// Homogenized orthotropic stiffness (MPa).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StiffnessTensorH {
    pub c1111: f64,
    pub c2222: f64,
    pub c1122: f64,
    pub c1212: f64,
}

impl StiffnessTensorH {
    pub fn is_positive_definite(&self) -> bool {
        self.c1111 > 0.0 && self.c2222 > 0.0 && self.c1212 > 0.0 && self.c1111 * self.c2222 - self.c1122 * self.c1122 > 0.0
    }
}

pub fn stiffness_tensor(ed: &EnergyDensities) -> Result<StiffnessTensorH> {
    let (e1, e2, e12) = (ed.eps11, ed.eps22, ed.eps12);
    if !(e1 != 0.0 && e2 != 0.0 && e12 != 0.0) {
        return Err(Error::InvalidParameter("load-case strains must be non-zero".into()));
    }
    let c = StiffnessTensorH {
        c1111: 2.0 * ed.se_a / (e1 * e1),
        c2222: 2.0 * ed.se_b / (e2 * e2),
        c1212: ed.se_c / (2.0 * e12 * e12),
        c1122: (ed.se_d - ed.se_a - ed.se_b) / (e1 * e2),
    };
    if !c.is_positive_definite() {
        return Err(Error::NotPositiveDefinite(format!("{c:?}")));
    }
    Ok(c)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MacroStress {
    pub sigma11: f64,
    pub sigma22: f64,
    pub sigma12: f64,
}

pub fn macro_stress(c: &StiffnessTensorH, e: &MacroStrain) -> MacroStress {
    MacroStress {
        sigma11: c.c1111 * e.eps11 + c.c1122 * e.eps22,
        sigma22: c.c1122 * e.eps11 + c.c2222 * e.eps22,
        sigma12: c.c1212 * 2.0 * e.eps12,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EngineeringConstants {
    pub e1: f64,
    pub e2: f64,
    pub g12: f64,
    pub nu12: f64,
    pub nu21: f64,
}

pub fn engineering_constants(c: &StiffnessTensorH) -> EngineeringConstants {
    EngineeringConstants {
        e1: c.c1111 - c.c1122 * c.c1122 / c.c2222,
        e2: c.c2222 - c.c1122 * c.c1122 / c.c1111,
        g12: c.c1212,
        nu12: c.c1122 / c.c2222,
        nu21: c.c1122 / c.c1111,
    }
}

/// Everything besides topology, box, case and strain that a run depends on.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HomogenizeOptions {
    pub edge_length: f64,
    pub depth: f64,
    pub material: Material,
    pub boundary: BoundaryMode,
}

impl Default for HomogenizeOptions {
    fn default() -> Self {
        HomogenizeOptions {
            edge_length: DEFAULT_EDGE_LENGTH,
            depth: DEFAULT_DEPTH,
            material: Material::default(),
            boundary: BoundaryMode::default(),
        }
    }
}

/// One homogenization run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRecord {
    pub topology: TopologyId,
    pub bbox_width: f64,
    pub bbox_height: f64,
    pub case: crate::meshbuild::CaseKind,
    pub strain: f64,
    pub c1111: f64,
    pub c2222: f64,
    pub c1122: f64,
    pub c1212: f64,
    pub e1: f64,
    pub e2: f64,
    pub g12: f64,
    pub nu12: f64,
    pub nu21: f64,
    pub wall_time_s: f64,
    pub dof_count: usize,
}

impl ResultRecord {
    pub const CSV_HEADER: &'static str = "topology,bbox_width,bbox_height,case,strain,c1111,c2222,c1122,c1212,e1,e2,g12,nu12,nu21,wall_time_s,dof_count";

    /// Mean of the two Young's moduli.
    pub fn e_mean(&self) -> f64 {
        0.5 * (self.e1 + self.e2)
    }

    pub fn tensor(&self) -> StiffnessTensorH {
        StiffnessTensorH { c1111: self.c1111, c2222: self.c2222, c1122: self.c1122, c1212: self.c1212 }
    }

    /// One CSV row. With `with_timing == false` the wall time is written as 0
    /// so that reruns are byte-identical.
    pub fn csv_row(&self, with_timing: bool) -> String {
        let t = if with_timing { self.wall_time_s } else { 0.0 };
        format!(
            "{},{},{},{},{},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{:.6},{}",
            self.topology,
            self.bbox_width,
            self.bbox_height,
            self.case,
            self.strain,
            self.c1111,
            self.c2222,
            self.c1122,
            self.c1212,
            self.e1,
            self.e2,
            self.g12,
            self.nu12,
            self.nu21,
            t,
            self.dof_count
        )
    }

    /// Inverse of [`ResultRecord::csv_row`].
    pub fn from_csv_row(line: &str) -> Result<Self> {
        let f: Vec<&str> = line.trim().split(',').collect();
        if f.len() != 16 {
            return Err(Error::InvalidParameter(format!("expected 16 CSV fields, found {}", f.len())));
        }
        let num = |i: usize| {
            f[i].parse::<f64>().map_err(|_| Error::InvalidParameter(format!("field {i} is not a number: `{}`", f[i])))
        };
        Ok(ResultRecord {
            topology: f[0].parse()?,
            bbox_width: num(1)?,
            bbox_height: num(2)?,
            case: f[3].parse()?,
            strain: num(4)?,
            c1111: num(5)?,
            c2222: num(6)?,
            c1122: num(7)?,
            c1212: num(8)?,
            e1: num(9)?,
            e2: num(10)?,
            g12: num(11)?,
            nu12: num(12)?,
            nu21: num(13)?,
            wall_time_s: num(14)?,
            dof_count: f[15]
                .parse()
                .map_err(|_| Error::InvalidParameter(format!("dof count is not an integer: `{}`", f[15])))?,
        })
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// The mesh a boundary mode works on.
pub fn mesh_for(topology: TopologyId, bbox: Bbox, case: StiffnessCase, opts: &HomogenizeOptions) -> Result<BeamMesh> {
    match opts.boundary {
        BoundaryMode::Mirror => build_mirror_mesh(topology, bbox, opts.edge_length, case, opts.material, opts.depth),
        _ => {
            let graph = generate_tiling(topology, bbox, opts.edge_length)?;
            build_beam_mesh(&graph, case, opts.material, opts.depth)
        }
    }
}

/// Tiling, mesh, four solves, tensor and constants for one configuration.
pub fn homogenize(topology: TopologyId, bbox: Bbox, case: StiffnessCase, s: f64) -> Result<ResultRecord> {
    homogenize_with(topology, bbox, case, s, &HomogenizeOptions::default())
}

pub fn homogenize_with(
    topology: TopologyId,
    bbox: Bbox,
    case: StiffnessCase,
    s: f64,
    opts: &HomogenizeOptions,
) -> Result<ResultRecord> {
    if !topology.orthotropic_rve() {
        return Err(Error::NotOrthotropic(topology));
    }
    check_magnitude(s)?;
    let start = Instant::now();
    let mesh = mesh_for(topology, bbox, case, opts)?;
    let sys = assemble(&mesh)?;
    let ed = run_load_cases_on(&sys, &mesh, s, opts.boundary)?;
    let c = stiffness_tensor(&ed)?;
    let k = engineering_constants(&c);
    Ok(ResultRecord {
        topology,
        bbox_width: bbox.width,
        bbox_height: bbox.height,
        case: case.kind,
        strain: s,
        c1111: c.c1111,
        c2222: c.c2222,
        c1122: c.c1122,
        c1212: c.c1212,
        e1: k.e1,
        e2: k.e2,
        g12: k.g12,
        nu12: k.nu12,
        nu21: k.nu21,
        wall_time_s: start.elapsed().as_secs_f64(),
        dof_count: sys.dof_count(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn load_case_strains() {
        assert_eq!(load_case_strain(LoadCase::A, 0.01).unwrap(), MacroStrain { eps11: 0.01, eps22: 0.0, eps12: 0.0 });
        assert_eq!(load_case_strain(LoadCase::D, 0.01).unwrap(), MacroStrain { eps11: 0.01, eps22: 0.01, eps12: 0.0 });
        assert_eq!(load_case_strain(LoadCase::C, 0.02).unwrap(), MacroStrain { eps11: 0.0, eps22: 0.0, eps12: 0.02 });
        assert!(load_case_strain(LoadCase::A, 0.0).is_err());
        assert!(load_case_strain(LoadCase::A, 0.2).is_err());
    }

    #[test]
    fn strain_guard() {
        assert!(MacroStrain::new(0.1, -0.1, 0.05).is_ok());
        assert!(MacroStrain::new(0.11, 0.0, 0.0).is_err());
        assert!(MacroStrain::new(f64::NAN, 0.0, 0.0).is_err());
    }

    #[test]
    fn tensor_from_square_oracle_density() {
        let ed = EnergyDensities { se_a: 3.335e-3, se_b: 3.335e-3, se_c: 1e-5, se_d: 6.67e-3, eps11: 0.01, eps22: 0.01, eps12: 0.01 };
        let c = stiffness_tensor(&ed).unwrap();
        assert_relative_eq!(c.c1111, 66.7, max_relative = 1e-12);
        assert_eq!(c.c1122, 0.0);
    }

    #[test]
    fn identity_plate_roundtrip() {
        // homogeneous plate with E = 1, nu = 0
        let c = StiffnessTensorH { c1111: 1.0, c2222: 1.0, c1122: 0.0, c1212: 0.5 };
        let back = stiffness_tensor(&EnergyDensities::from_tensor(&c, 0.01)).unwrap();
        assert_relative_eq!(back.c1111, 1.0, max_relative = 1e-12);
        assert_relative_eq!(back.c2222, 1.0, max_relative = 1e-12);
        assert!(back.c1122.abs() < 1e-12);
        assert_relative_eq!(back.c1212, 0.5, max_relative = 1e-12);
    }

    #[test]
    fn indefinite_tensor_rejected() {
        let c = StiffnessTensorH { c1111: 1.0, c2222: 1.0, c1122: 2.0, c1212: 0.5 };
        let ed = EnergyDensities { se_d: 0.0, ..EnergyDensities::from_tensor(&c, 0.01) };
        assert!(matches!(stiffness_tensor(&ed), Err(Error::NotPositiveDefinite(_))));
    }

    #[test]
    fn stresses() {
        let c = StiffnessTensorH { c1111: 100.0, c2222: 80.0, c1122: 30.0, c1212: 40.0 };
        let s = macro_stress(&c, &MacroStrain { eps11: 0.01, eps22: 0.0, eps12: 0.0 });
        assert_relative_eq!(s.sigma11, 1.0, max_relative = 1e-12);
        assert_eq!(macro_stress(&c, &MacroStrain::zero()), MacroStress { sigma11: 0.0, sigma22: 0.0, sigma12: 0.0 });
        let d = StiffnessTensorH { c1122: 0.0, ..c };
        let s = macro_stress(&d, &MacroStrain { eps11: 0.02, eps22: 0.03, eps12: 0.0 });
        assert_relative_eq!(s.sigma11, 2.0, max_relative = 1e-12);
        assert_relative_eq!(s.sigma22, 2.4, max_relative = 1e-12);
    }

    #[test]
    fn engineering_constants_substitution() {
        let k = engineering_constants(&StiffnessTensorH { c1111: 100.0, c2222: 100.0, c1122: 30.0, c1212: 40.0 });
        assert_relative_eq!(k.e1, 91.0, max_relative = 1e-12);
        assert_relative_eq!(k.e2, 91.0, max_relative = 1e-12);
        assert_eq!(k.g12, 40.0);
        assert_relative_eq!(k.nu12, 0.3, max_relative = 1e-12);
        assert_relative_eq!(k.nu21, 0.3, max_relative = 1e-12);
        let k = engineering_constants(&StiffnessTensorH { c1111: 7.0, c2222: 3.0, c1122: 0.0, c1212: 1.0 });
        assert_eq!((k.e1, k.e2, k.nu12, k.nu21), (7.0, 3.0, 0.0, 0.0));
    }

    #[test]
    fn snub_hexagonal_is_excluded() {
        let err = homogenize(TopologyId::SnubHexagonal, Bbox::square(750.0), StiffnessCase::default(), 0.01);
        assert!(matches!(err, Err(Error::NotOrthotropic(TopologyId::SnubHexagonal))));
    }

    #[test]
    fn square_energies_are_symmetric_and_quadratic() {
        let g = generate_tiling(TopologyId::Square, Bbox::square(400.0), 50.0).unwrap();
        let mesh = build_beam_mesh(&g, StiffnessCase::default(), Material::default(), 5.0).unwrap();
        let a = run_load_cases(&mesh, 0.01).unwrap();
        assert_relative_eq!(a.se_a, a.se_b, max_relative = 1e-9);
        let b = run_load_cases(&mesh, 0.02).unwrap();
        for (x, y) in [(a.se_a, b.se_a), (a.se_b, b.se_b), (a.se_c, b.se_c), (a.se_d, b.se_d)] {
            assert_relative_eq!(y, 4.0 * x, max_relative = 1e-9);
        }
    }

    #[test]
    fn csv_row_matches_header() {
        let r = homogenize(TopologyId::Square, Bbox::square(200.0), StiffnessCase::default(), 0.01).unwrap();
        let cols = ResultRecord::CSV_HEADER.split(',').count();
        assert_eq!(r.csv_row(true).split(',').count(), cols);
        assert!(r.csv_row(false).starts_with("S,200,200,actuator-stiff,0.01,"));
    }
}
