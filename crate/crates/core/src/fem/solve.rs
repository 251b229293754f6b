//! Prescribed-displacement solves by partitioning.
//!
//! The constrained DOFs are eliminated: `K_ff u_f = -K_fp u_p`. Everything
//! that depends only on which DOFs are prescribed (the partition and the
//! Cholesky factor of `K_ff`) lives in [`FactoredSystem`], so the four load
//! cases of one mesh share a single factorization.

use faer::linalg::solvers::Solve;
use faer::sparse::linalg::solvers::Llt;
use faer::sparse::{SparseColMat, Triplet};
use faer::{Mat, Side};

use super::assembly::{LinearSystem, DOF_PER_NODE};
use crate::error::{Error, Result};
use crate::homogenize::MacroStrain;
use crate::meshbuild::BeamMesh;
use crate::tiling::component_labels;

/// Relative residual bound every solve must meet.
pub const RESIDUAL_TOLERANCE: f64 = 1e-8;

/// A linear system with a set of prescribed DOF values.
pub struct ConstrainedSystem<'a> {
    pub system: &'a LinearSystem,
    /// (dof, value), sorted by dof.
    pub prescribed: Vec<(usize, f64)>,
}

/// Affine (kinematically uniform) boundary conditions: every boundary hub at
/// `x` relative to the box centre gets `u = eps x`; hub rotations stay free.
pub fn apply_affine_bc<'a>(
    sys: &'a LinearSystem,
    mesh: &BeamMesh,
    strain: &MacroStrain,
) -> Result<ConstrainedSystem<'a>> {
    let dofs = boundary_dofs(mesh)?;
    let values = affine_values(mesh, strain);
    Ok(ConstrainedSystem { system: sys, prescribed: dofs.into_iter().zip(values).collect() })
}

/// Translational DOFs of the boundary hubs, in hub order (ux, uy per hub).
pub fn boundary_dofs(mesh: &BeamMesh) -> Result<Vec<usize>> {
    if mesh.boundary_hubs.is_empty() {
        return Err(Error::NoBoundary);
    }
    Ok(mesh
        .boundary_hubs
        .iter()
        .flat_map(|&h| [LinearSystem::dof(h, 0), LinearSystem::dof(h, 1)])
        .collect())
}

/// Prescribed values matching [`boundary_dofs`].
pub fn affine_values(mesh: &BeamMesh, strain: &MacroStrain) -> Vec<f64> {
    mesh.boundary_hubs
        .iter()
        .flat_map(|&h| {
            let p = mesh.fe_nodes[h];
            let ux = strain.eps11 * p.x + strain.eps12 * p.y;
            let uy = strain.eps12 * p.x + strain.eps22 * p.y;
            [ux, uy]
        })
        .collect()
}

/// Which symmetry the mirror-line conditions express.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MirrorLoading {
    /// Normal strains: the field is symmetric about every mirror line, so
    /// the normal displacement is affine and the rotation vanishes there.
    Normal,
    /// Shear strain: the field is antisymmetric, so the tangential
    /// displacement is affine and the rest is free.
    Shear,
}

impl MirrorLoading {
    pub fn of(strain: &MacroStrain) -> Result<Self> {
        let normal = strain.eps11 != 0.0 || strain.eps22 != 0.0;
        match (normal, strain.eps12 != 0.0) {
            (true, true) => Err(Error::InvalidParameter(
                "mirror conditions take either normal or shear strain, not both".into(),
            )),
            (false, true) => Ok(MirrorLoading::Shear),
            _ => Ok(MirrorLoading::Normal),
        }
    }
}

/// DOFs fixed by the mirror-line conditions, sorted.
pub fn mirror_dofs(mesh: &BeamMesh, loading: MirrorLoading) -> Result<Vec<usize>> {
    Ok(mirror_constraints(mesh, loading)?.into_iter().map(|(d, _)| d).collect())
}

/// Prescribed values matching [`mirror_dofs`] for `strain`.
pub fn mirror_values(mesh: &BeamMesh, loading: MirrorLoading, strain: &MacroStrain) -> Result<Vec<f64>> {
    Ok(mirror_constraints(mesh, loading)?
        .into_iter()
        .map(|(d, kind)| {
            let p = mesh.fe_nodes[d / DOF_PER_NODE];
            match kind {
                Fixed::UxOnVertical => strain.eps11 * p.x,
                Fixed::UyOnHorizontal => strain.eps22 * p.y,
                Fixed::UyOnVertical => strain.eps12 * p.x,
                Fixed::UxOnHorizontal => strain.eps12 * p.y,
                Fixed::Rotation => 0.0,
            }
        })
        .collect())
}

/// Mirror-line conditions on a mesh clipped to a mirror domain.
pub fn apply_mirror_bc<'a>(
    sys: &'a LinearSystem,
    mesh: &BeamMesh,
    strain: &MacroStrain,
) -> Result<ConstrainedSystem<'a>> {
    let loading = MirrorLoading::of(strain)?;
    let dofs = mirror_dofs(mesh, loading)?;
    let values = mirror_values(mesh, loading, strain)?;
    Ok(ConstrainedSystem { system: sys, prescribed: dofs.into_iter().zip(values).collect() })
}

#[derive(Clone, Copy)]
enum Fixed {
    UxOnVertical,
    UyOnHorizontal,
    UyOnVertical,
    UxOnHorizontal,
    Rotation,
}

fn mirror_constraints(mesh: &BeamMesh, loading: MirrorLoading) -> Result<Vec<(usize, Fixed)>> {
    let dom = mesh.mirror.ok_or_else(|| {
        Error::InvalidParameter("mirror conditions need a mesh clipped to a mirror domain".into())
    })?;
    if mesh.boundary_hubs.is_empty() {
        return Err(Error::NoBoundary);
    }
    let tol = crate::tiling::MERGE_TOLERANCE * mesh.edge_length;
    let mut out = Vec::new();
    for &n in &mesh.boundary_hubs {
        let (v, h) = dom.on_lines(&mesh.fe_nodes[n], tol);
        let dof = |c| LinearSystem::dof(n, c);
        match loading {
            MirrorLoading::Normal => {
                if v {
                    out.push((dof(0), Fixed::UxOnVertical));
                }
                if h {
                    out.push((dof(1), Fixed::UyOnHorizontal));
                }
                if v || h {
                    out.push((dof(2), Fixed::Rotation));
                }
            }
            MirrorLoading::Shear => {
                if h {
                    out.push((dof(0), Fixed::UxOnHorizontal));
                }
                if v {
                    out.push((dof(1), Fixed::UyOnVertical));
                }
            }
        }
    }
    out.sort_by_key(|&(d, _)| d);
    Ok(out)
}

#[derive(Debug, Clone)]
pub struct Solution {
    /// Full DOF vector (mm, rad).
    pub displacements: Vec<f64>,
    /// Reaction forces at the prescribed DOFs, same order as the prescription.
    pub reactions: Vec<(usize, f64)>,
    /// `u^T K u / 2` over all DOFs (N mm).
    pub energy: f64,
    /// `||K_ff u_f + K_fp u_p|| / ||K_fp u_p||`, zero when nothing is loaded.
    pub relative_residual: f64,
}

impl Solution {
    /// Work of the reactions, `sum f u / 2` over prescribed DOFs.
    pub fn reaction_energy(&self) -> f64 {
        0.5 * self.reactions.iter().map(|&(d, f)| f * self.displacements[d]).sum::<f64>()
    }

    /// CSV rows `node,x,y,ux,uy,theta`.
    pub fn to_csv(&self, sys: &LinearSystem) -> String {
        let mut out = String::from("node,x,y,ux,uy,theta\n");
        for (n, p) in sys.nodes.iter().enumerate() {
            let u = &self.displacements[DOF_PER_NODE * n..DOF_PER_NODE * (n + 1)];
            out.push_str(&format!("{n},{},{},{:e},{:e},{:e}\n", p.x, p.y, u[0], u[1], u[2]));
        }
        out
    }
}

/// Factorized free-free block for a fixed set of prescribed DOFs.
pub struct FactoredSystem<'a> {
    system: &'a LinearSystem,
    prescribed: Vec<usize>,
    /// Position of each DOF in the free block, `usize::MAX` if prescribed.
    free_index: Vec<usize>,
    free: Vec<usize>,
    factor: Option<Llt<usize, f64>>,
    /// Entries of `K_fp` as (free row, prescribed position, value).
    coupling: Vec<(usize, usize, f64)>,
}

impl<'a> FactoredSystem<'a> {
    pub fn new(system: &'a LinearSystem, prescribed: &[usize]) -> Result<Self> {
        let n = system.dof_count();
        let mut slot = vec![usize::MAX; n];
        for (k, &d) in prescribed.iter().enumerate() {
            if d >= n || slot[d] != usize::MAX {
                return Err(Error::InvalidParameter(format!("bad or repeated prescribed dof {d}")));
            }
            slot[d] = k;
        }
        let free: Vec<usize> = (0..n).filter(|&d| slot[d] == usize::MAX).collect();
        let mut free_index = vec![usize::MAX; n];
        for (k, &d) in free.iter().enumerate() {
            free_index[d] = k;
        }

        let k = &system.stiffness;
        let mut kff = Vec::new();
        let mut coupling = Vec::new();
        for j in 0..n {
            for (i, &v) in k.row_idx_of_col(j).zip(k.val_of_col(j)) {
                let fi = free_index[i];
                if fi == usize::MAX {
                    continue;
                }
                if free_index[j] != usize::MAX {
                    if i >= j {
                        kff.push(Triplet::new(fi, free_index[j], v));
                    }
                } else {
                    coupling.push((fi, slot[j], v));
                }
            }
        }

        let factor = if free.is_empty() {
            None
        } else {
            let m = free.len();
            let kff = SparseColMat::try_new_from_triplets(m, m, &kff)
                .map_err(|e| Error::InvalidParameter(format!("sparse extraction failed: {e:?}")))?;
            let llt = kff
                .sp_cholesky(Side::Lower)
                .map_err(|e| Error::SingularSystem(singular_diagnostic(system, prescribed, &e)))?;
            Some(llt)
        };

        Ok(FactoredSystem {
            system,
            prescribed: prescribed.to_vec(),
            free_index,
            free,
            factor,
            coupling,
        })
    }

    pub fn free_dof_count(&self) -> usize {
        self.free.len()
    }

    /// Solve for the given prescribed values (same order as at construction).
    pub fn solve(&self, values: &[f64]) -> Result<Solution> {
        if values.len() != self.prescribed.len() || values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "expected {} finite prescribed values, got {}",
                self.prescribed.len(),
                values.len()
            )));
        }
        let n = self.system.dof_count();
        let mut u = vec![0.0; n];
        for (&d, &v) in self.prescribed.iter().zip(values) {
            u[d] = v;
        }

        let mut rhs = vec![0.0; self.free.len()];
        for &(fi, pj, v) in &self.coupling {
            rhs[fi] -= v * values[pj];
        }
        let rhs_norm = norm(&rhs);

        let mut relative_residual = 0.0;
        if let Some(factor) = &self.factor {
            let b = Mat::from_fn(rhs.len(), 1, |i, _| rhs[i]);
            let x = factor.solve(&b);
            for (k, &d) in self.free.iter().enumerate() {
                u[d] = x[(k, 0)];
            }
            if rhs_norm > 0.0 {
                let ku = self.system.apply(&u);
                let res: Vec<f64> = self.free.iter().map(|&d| ku[d]).collect();
                relative_residual = norm(&res) / rhs_norm;
            }
        }
        if relative_residual > RESIDUAL_TOLERANCE {
            return Err(Error::SingularSystem(format!(
                "relative residual {relative_residual:e} exceeds {RESIDUAL_TOLERANCE:e}"
            )));
        }

        let ku = self.system.apply(&u);
        let energy = 0.5 * ku.iter().zip(&u).map(|(a, b)| a * b).sum::<f64>();
        let reactions = self.prescribed.iter().map(|&d| (d, ku[d])).collect();
        debug_assert!(self.free_index.len() == n);
        Ok(Solution { displacements: u, reactions, energy, relative_residual })
    }
}

pub fn solve(csys: &ConstrainedSystem<'_>) -> Result<Solution> {
    let dofs: Vec<usize> = csys.prescribed.iter().map(|&(d, _)| d).collect();
    let values: Vec<f64> = csys.prescribed.iter().map(|&(_, v)| v).collect();
    FactoredSystem::new(csys.system, &dofs)?.solve(&values)
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Name the node groups that no prescribed DOF reaches; they carry the
/// rigid-body null space of `K_ff`.
fn singular_diagnostic(sys: &LinearSystem, prescribed: &[usize], err: &impl std::fmt::Debug) -> String {
    let pairs: Vec<[usize; 2]> = sys.elements.iter().map(|e| [e.i, e.j]).collect();
    let (label, count) = component_labels(sys.nodes.len(), &pairs);
    let mut anchored = vec![0usize; count];
    for &d in prescribed {
        if d % DOF_PER_NODE != 2 {
            anchored[label[d / DOF_PER_NODE]] += 1;
        }
    }
    let floating: Vec<String> = (0..count)
        .filter(|&c| anchored[c] < 3)
        .map(|c| {
            let nodes = label.iter().filter(|&&l| l == c).count();
            format!("component {c} ({nodes} nodes, {} prescribed translations)", anchored[c])
        })
        .collect();
    if floating.is_empty() {
        format!("factorization failed ({err:?}); every component has at least 3 prescribed translations")
    } else {
        format!("factorization failed ({err:?}); under-constrained: {}", floating.join(", "))
    }
}
