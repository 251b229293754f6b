use faer::sparse::{SparseColMat, Triplet};

use super::element::element_stiffness;
use crate::error::{Error, Result};
use crate::meshbuild::{BeamMesh, Material, SectionProfile};
use crate::tiling::{component_labels, Point};

pub const DOF_PER_NODE: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AssemblyOptions {
    /// Elements per mesh segment; 1 is exact for the prismatic members used here.
    pub elements_per_segment: usize,
}

impl Default for AssemblyOptions {
    fn default() -> Self {
        AssemblyOptions { elements_per_segment: 1 }
    }
}

/// One beam element of the assembled model.
#[derive(Debug, Clone, Copy)]
pub struct Element {
    pub i: usize,
    pub j: usize,
    pub section: SectionProfile,
    /// Tiling edge the element belongs to.
    pub edge: usize,
}

/// Global stiffness of a beam mesh.
///
/// Nodes `0..mesh.fe_nodes.len()` are the mesh fe-nodes; any subdivision
/// nodes follow. DOF `3 n + c` is component `c` (ux, uy, theta) of node `n`.
pub struct LinearSystem {
    pub nodes: Vec<Point>,
    pub elements: Vec<Element>,
    pub material: Material,
    /// Both triangles stored.
    pub stiffness: SparseColMat<usize, f64>,
}

impl LinearSystem {
    pub fn dof_count(&self) -> usize {
        DOF_PER_NODE * self.nodes.len()
    }

    pub fn dof(node: usize, component: usize) -> usize {
        DOF_PER_NODE * node + component
    }

    /// `K x`.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let k = &self.stiffness;
        let mut y = vec![0.0; k.nrows()];
        for (j, &xj) in x.iter().enumerate().take(k.ncols()) {
            if xj == 0.0 {
                continue;
            }
            for (i, v) in k.row_idx_of_col(j).zip(k.val_of_col(j)) {
                y[i] += v * xj;
            }
        }
        y
    }

    /// Strain energy of every element for the DOF vector `x`.
    pub fn element_energies(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.elements
            .iter()
            .map(|e| {
                let k = element_stiffness(self.nodes[e.i], self.nodes[e.j], &e.section, &self.material)?;
                let (a, b) = (DOF_PER_NODE * e.i, DOF_PER_NODE * e.j);
                let u = nalgebra::Vector6::new(x[a], x[a + 1], x[a + 2], x[b], x[b + 1], x[b + 2]);
                Ok(0.5 * u.dot(&(k * u)))
            })
            .collect()
    }

    /// `x^T K x / 2`.
    pub fn energy(&self, x: &[f64]) -> f64 {
        0.5 * self.apply(x).iter().zip(x).map(|(a, b)| a * b).sum::<f64>()
    }

    /// Dense copy, for diagnostics on small systems.
    pub fn to_dense(&self) -> nalgebra::DMatrix<f64> {
        let n = self.dof_count();
        let mut m = nalgebra::DMatrix::zeros(n, n);
        for j in 0..n {
            for (i, v) in self.stiffness.row_idx_of_col(j).zip(self.stiffness.val_of_col(j)) {
                m[(i, j)] += v;
            }
        }
        m
    }

    /// Lower triangle in Matrix Market coordinate format (1-based).
    pub fn to_matrix_market(&self) -> String {
        use std::fmt::Write;
        let n = self.dof_count();
        let mut entries = Vec::new();
        for j in 0..n {
            for (i, v) in self.stiffness.row_idx_of_col(j).zip(self.stiffness.val_of_col(j)) {
                if i >= j {
                    entries.push((i, j, *v));
                }
            }
        }
        let mut out = String::new();
        out.push_str("%%MatrixMarket matrix coordinate real symmetric\n");
        let _ = writeln!(out, "{n} {n} {}", entries.len());
        for (i, j, v) in entries {
            let _ = writeln!(out, "{} {} {v:e}", i + 1, j + 1);
        }
        out
    }
}

pub fn assemble(mesh: &BeamMesh) -> Result<LinearSystem> {
    assemble_with(mesh, AssemblyOptions::default())
}

pub fn assemble_with(mesh: &BeamMesh, opts: AssemblyOptions) -> Result<LinearSystem> {
    let parts = opts.elements_per_segment;
    if parts == 0 {
        return Err(Error::InvalidParameter("elements_per_segment must be at least 1".into()));
    }

    let mut nodes = mesh.fe_nodes.clone();
    let mut elements = Vec::with_capacity(parts * mesh.segments.len());
    for seg in &mesh.segments {
        let (a, b) = (mesh.fe_nodes[seg.i], mesh.fe_nodes[seg.j]);
        let mut prev = seg.i;
        for k in 1..=parts {
            let next = if k == parts {
                seg.j
            } else {
                nodes.push(a + (b - a) * (k as f64 / parts as f64));
                nodes.len() - 1
            };
            elements.push(Element { i: prev, j: next, section: seg.section, edge: seg.edge });
            prev = next;
        }
    }

    let pairs: Vec<[usize; 2]> = elements.iter().map(|e| [e.i, e.j]).collect();
    let (_, components) = component_labels(nodes.len(), &pairs);
    if components > 1 {
        return Err(Error::DisconnectedMesh(components));
    }

    let n = DOF_PER_NODE * nodes.len();
    let mut triplets = Vec::with_capacity(36 * elements.len());
    for e in &elements {
        let ke = element_stiffness(nodes[e.i], nodes[e.j], &e.section, &mesh.material)?;
        let dofs = [
            LinearSystem::dof(e.i, 0),
            LinearSystem::dof(e.i, 1),
            LinearSystem::dof(e.i, 2),
            LinearSystem::dof(e.j, 0),
            LinearSystem::dof(e.j, 1),
            LinearSystem::dof(e.j, 2),
        ];
        for (a, &ra) in dofs.iter().enumerate() {
            for (b, &cb) in dofs.iter().enumerate() {
                triplets.push(Triplet::new(ra, cb, ke[(a, b)]));
            }
        }
    }
    let stiffness = SparseColMat::try_new_from_triplets(n, n, &triplets)
        .map_err(|e| Error::InvalidParameter(format!("sparse assembly failed: {e:?}")))?;

    Ok(LinearSystem { nodes, elements, material: mesh.material, stiffness })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::meshbuild::{build_beam_mesh, Material, StiffnessCase};
    use crate::tiling::{generate_tiling, Bbox, TilingGraph, TopologyId};

    pub(crate) fn single_edge_mesh() -> BeamMesh {
        let g = TilingGraph {
            topology: TopologyId::Square,
            edge_length: 50.0,
            bbox: Bbox::new(50.0, 50.0),
            vertices: vec![Point::new(-25.0, 0.0), Point::new(25.0, 0.0)],
            edges: vec![[0, 1]],
        };
        build_beam_mesh(&g, StiffnessCase::default(), Material::default(), 5.0).unwrap()
    }

    fn zero_modes(sys: &LinearSystem) -> usize {
        let eig = sys.to_dense().symmetric_eigenvalues();
        let scale = eig.amax();
        assert!(eig.iter().all(|&e| e >= -1e-9 * scale));
        eig.iter().filter(|&&e| e.abs() <= 1e-9 * scale).count()
    }

    #[test]
    fn single_edge_has_three_rigid_modes() {
        let sys = assemble(&single_edge_mesh()).unwrap();
        assert_eq!(sys.dof_count(), 12);
        assert_eq!(zero_modes(&sys), 3);
    }

    #[test]
    fn square_mesh_dofs_and_symmetry() {
        let g = generate_tiling(TopologyId::Square, Bbox::square(200.0), 50.0).unwrap();
        let mesh = build_beam_mesh(&g, StiffnessCase::default(), Material::default(), 5.0).unwrap();
        let sys = assemble(&mesh).unwrap();
        assert_eq!(sys.dof_count(), 315);
        let k = sys.to_dense();
        let norm = k.norm();
        assert!((&k - k.transpose()).amax() <= 1e-12 * norm);
        assert_eq!(zero_modes(&sys), 3);
    }

    #[test]
    fn duplicate_triplets_are_summed() {
        // hub 0 of a two-edge path sees both arms
        let mesh = single_edge_mesh();
        let sys = assemble(&mesh).unwrap();
        let k = sys.to_dense();
        let arm = &mesh.segments[0].section;
        let act = &mesh.segments[1].section;
        // axial diagonal at interior node 2: arm EA/12.5 + actuator EA/25
        let want = 2000.0 * arm.area / 12.5 + 2000.0 * act.area / 25.0;
        assert!((k[(6, 6)] - want).abs() < 1e-9 * want);
    }

    proptest::proptest! {
        #![proptest_config(proptest::prelude::ProptestConfig::with_cases(64))]
        #[test]
        fn random_quadratic_forms_are_nonnegative(seed in proptest::collection::vec(-0.5f64..0.5, 1..64)) {
            let g = generate_tiling(TopologyId::Hexagonal, Bbox::square(300.0), 50.0).unwrap();
            let mesh = build_beam_mesh(&g, StiffnessCase::default(), Material::default(), 5.0).unwrap();
            let sys = assemble(&mesh).unwrap();
            let u: Vec<f64> = (0..sys.dof_count()).map(|k| seed[k % seed.len()] * (1.0 + (k / seed.len()) as f64)).collect();
            proptest::prop_assert!(sys.energy(&u) >= 0.0);
        }
    }

    #[test]
    fn subdivision_adds_nodes() {
        let mesh = single_edge_mesh();
        let sys = assemble_with(&mesh, AssemblyOptions { elements_per_segment: 4 }).unwrap();
        assert_eq!(sys.nodes.len(), 4 + 3 * 3);
        assert_eq!(sys.elements.len(), 12);
        assert_eq!(zero_modes(&sys), 3);
    }

    #[test]
    fn element_energies_sum_to_total() {
        let g = generate_tiling(TopologyId::Trihexagonal, Bbox::square(300.0), 50.0).unwrap();
        let mesh = build_beam_mesh(&g, StiffnessCase::default(), Material::default(), 5.0).unwrap();
        let sys = assemble(&mesh).unwrap();
        let u: Vec<f64> = (0..sys.dof_count()).map(|k| ((k * 7919) % 101) as f64 / 101.0 - 0.5).collect();
        let total: f64 = sys.element_energies(&u).unwrap().iter().sum();
        assert!((total - sys.energy(&u)).abs() <= 1e-10 * total);
    }

    #[test]
    fn disconnected_mesh_rejected() {
        let mut mesh = single_edge_mesh();
        mesh.segments.remove(1);
        assert!(matches!(assemble(&mesh), Err(Error::DisconnectedMesh(2))));
    }
}
