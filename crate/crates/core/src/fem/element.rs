//! Two-node shear-flexible (Timoshenko) frame element.
//!
//! DOFs per node: (ux, uy, theta). The bending block uses the exact
//! stiffness of a prismatic Timoshenko member, so one element per member is
//! exact for end loading.

use nalgebra::{Matrix3, Matrix6};

use crate::error::{Error, Result};
use crate::meshbuild::{Material, SectionProfile};
use crate::tiling::Point;

/// Members shorter than this are rejected.
pub const MIN_ELEMENT_LENGTH: f64 = 1e-9;

pub type ElementMatrix = Matrix6<f64>;

/// Stiffness in the member frame, DOFs (u1, v1, t1, u2, v2, t2).
pub fn local_stiffness(length: f64, section: &SectionProfile, material: &Material) -> ElementMatrix {
    let l = length;
    let e = material.young_modulus;
    let ea = e * section.area;
    let ei = e * section.second_moment;
    let kga = section.shear_correction * material.shear_modulus() * section.area;
    let phi = 12.0 * ei / (kga * l * l);

    let axial = ea / l;
    let c = ei / ((1.0 + phi) * l * l * l);
    let k11 = 12.0 * c;
    let k12 = 6.0 * l * c;
    let k22 = (4.0 + phi) * l * l * c;
    let k23 = (2.0 - phi) * l * l * c;

    #[rustfmt::skip]
    let k = Matrix6::from_row_slice(&[
         axial,  0.0,  0.0, -axial,  0.0,  0.0,
         0.0,    k11,  k12,  0.0,   -k11,  k12,
         0.0,    k12,  k22,  0.0,   -k12,  k23,
        -axial,  0.0,  0.0,  axial,  0.0,  0.0,
         0.0,   -k11, -k12,  0.0,    k11, -k12,
         0.0,    k12,  k23,  0.0,   -k12,  k22,
    ]);
    k
}

/// Global-frame stiffness of the member from `p1` to `p2`.
pub fn element_stiffness(
    p1: Point,
    p2: Point,
    section: &SectionProfile,
    material: &Material,
) -> Result<ElementMatrix> {
    let d = p2 - p1;
    let l = d.norm();
    if !(l > MIN_ELEMENT_LENGTH) {
        return Err(Error::ZeroLength(l));
    }
    let (c, s) = (d.x / l, d.y / l);
    let r = Matrix3::new(c, s, 0.0, -s, c, 0.0, 0.0, 0.0, 1.0);
    let mut t = Matrix6::zeros();
    t.fixed_view_mut::<3, 3>(0, 0).copy_from(&r);
    t.fixed_view_mut::<3, 3>(3, 3).copy_from(&r);
    let k = local_stiffness(l, section, material);
    let kg = t.transpose() * k * t;
    // exact symmetry for the assembled matrix
    Ok(0.5 * (kg + kg.transpose()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use nalgebra::{Matrix3 as M3, Vector3};

    fn actuator() -> (SectionProfile, Material) {
        (SectionProfile::rectangular(5.0, 5.0), Material::default())
    }

    #[test]
    fn axial_term_is_ea_over_l() {
        let (s, m) = actuator();
        let k = element_stiffness(Point::new(0.0, 0.0), Point::new(25.0, 0.0), &s, &m).unwrap();
        assert_relative_eq!(k[(0, 0)], 2000.0, max_relative = 1e-12);
        assert_relative_eq!(k[(0, 3)], -2000.0, max_relative = 1e-12);
    }

    #[test]
    fn cantilever_tip_deflection() {
        // clamp node 1, load node 2 transversely; reduce to the free 3x3 block
        let (s, m) = actuator();
        let l = 50.0;
        let k = local_stiffness(l, &s, &m);
        let kff: M3<f64> = k.fixed_view::<3, 3>(3, 3).into();
        let u = kff.lu().solve(&Vector3::new(0.0, 1.0, 0.0)).unwrap();
        let ei = m.young_modulus * s.second_moment;
        let kga = s.shear_correction * m.shear_modulus() * s.area;
        let expected = l.powi(3) / (3.0 * ei) + l / kga;
        assert_relative_eq!(u[1], expected, max_relative = 1e-9);
        assert_relative_eq!(expected, 0.403_12, max_relative = 1e-4);
    }

    #[test]
    fn vertical_member_is_permuted_horizontal() {
        let (s, m) = actuator();
        let h = element_stiffness(Point::new(0.0, 0.0), Point::new(30.0, 0.0), &s, &m).unwrap();
        let v = element_stiffness(Point::new(0.0, 0.0), Point::new(0.0, 30.0), &s, &m).unwrap();
        // rotating by 90 degrees maps (ux, uy) -> (-uy, ux)
        let r = M3::new(0.0, -1.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0);
        let mut t = Matrix6::zeros();
        t.fixed_view_mut::<3, 3>(0, 0).copy_from(&r);
        t.fixed_view_mut::<3, 3>(3, 3).copy_from(&r);
        let rotated = t * h * t.transpose();
        for (a, b) in rotated.iter().zip(v.iter()) {
            assert!((a - b).abs() <= 1e-9 * h.norm());
        }
    }

    #[test]
    fn three_rigid_body_modes() {
        let (s, m) = actuator();
        let k = element_stiffness(Point::new(1.0, 2.0), Point::new(20.0, 14.0), &s, &m).unwrap();
        assert_eq!(k, k.transpose());
        let eig = k.symmetric_eigenvalues();
        let scale = eig.amax();
        let zeros = eig.iter().filter(|&&e| e.abs() <= 1e-9 * scale).count();
        assert_eq!(zeros, 3);
        assert!(eig.iter().all(|&e| e >= -1e-9 * scale));
    }

    #[test]
    fn zero_length_rejected() {
        let (s, m) = actuator();
        let p = Point::new(3.0, 3.0);
        assert!(matches!(element_stiffness(p, p, &s, &m), Err(Error::ZeroLength(_))));
    }
}
