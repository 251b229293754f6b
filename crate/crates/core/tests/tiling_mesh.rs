//! Properties of the generated tilings and the beam meshes built on them.

use lattice_homog::meshbuild::{build_beam_mesh, CaseKind, Material, StiffnessCase};
use lattice_homog::tiling::{generate_tiling, perimeter_vertices, validate_tiling, Bbox, Point, TilingGraph, TopologyId};
use proptest::prelude::*;

const L: f64 = 50.0;

fn topology() -> impl Strategy<Value = TopologyId> {
    (0..TopologyId::ALL.len()).prop_map(|i| TopologyId::ALL[i])
}

fn edge_length(g: &TilingGraph, e: usize) -> f64 {
    let [a, b] = g.edges[e];
    (g.vertices[a] - g.vertices[b]).norm()
}

fn contains_point(points: &[Point], p: Point, tol: f64) -> bool {
    points.iter().any(|q| (q - p).norm() <= tol)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn edges_equal_and_graph_valid(t in topology(), w in 10.0f64..16.0, h in 10.0f64..16.0) {
        let g = generate_tiling(t, Bbox::new(w * L, h * L), L).unwrap();
        for e in 0..g.edges.len() {
            prop_assert!((edge_length(&g, e) - L).abs() <= 1e-9 * L);
        }
        let report = validate_tiling(&g);
        prop_assert!(report.passed, "{t}: {:?}", report.violations);
    }

    #[test]
    fn generation_is_deterministic(t in topology(), w in 10.0f64..14.0) {
        let a = generate_tiling(t, Bbox::square(w * L), L).unwrap();
        let b = generate_tiling(t, Bbox::square(w * L), L).unwrap();
        prop_assert_eq!(a.edges, b.edges);
        let same = a.vertices.iter().zip(&b.vertices).all(|(p, q)| p.x.to_bits() == q.x.to_bits() && p.y.to_bits() == q.y.to_bits());
        prop_assert!(same);
    }

    #[test]
    fn doubling_the_box_quadruples_edges(t in topology(), w in 12.0f64..16.0) {
        let small = generate_tiling(t, Bbox::square(w * L), L).unwrap().edges.len() as f64;
        let large = generate_tiling(t, Bbox::square(2.0 * w * L), L).unwrap().edges.len() as f64;
        let ratio = large / small;
        prop_assert!((3.2..=4.8).contains(&ratio), "{t}: ratio {ratio}");
    }

    #[test]
    fn orthotropic_tilings_are_mirror_symmetric(t in topology(), w in 10.0f64..16.0, h in 10.0f64..16.0) {
        prop_assume!(t.orthotropic_rve());
        let g = generate_tiling(t, Bbox::new(w * L, h * L), L).unwrap();
        for p in &g.vertices {
            prop_assert!(contains_point(&g.vertices, Point::new(-p.x, p.y), 1e-6));
            prop_assert!(contains_point(&g.vertices, Point::new(p.x, -p.y), 1e-6));
        }
    }

    #[test]
    fn mesh_geometry_is_case_independent(t in topology(), w in 10.0f64..13.0) {
        let g = generate_tiling(t, Bbox::square(w * L), L).unwrap();
        let meshes: Vec<_> = CaseKind::ALL
            .iter()
            .map(|&c| build_beam_mesh(&g, StiffnessCase::preset(c), Material::default(), 5.0).unwrap())
            .collect();
        for m in &meshes[1..] {
            prop_assert_eq!(&m.fe_nodes, &meshes[0].fe_nodes);
            let ends = |m: &lattice_homog::meshbuild::BeamMesh| m.segments.iter().map(|s| (s.i, s.j)).collect::<Vec<_>>();
            prop_assert_eq!(ends(m), ends(&meshes[0]));
        }
    }
}

#[test]
fn segment_length_matches_edge_count() {
    for t in TopologyId::ALL {
        let g = generate_tiling(t, Bbox::square(600.0), L).unwrap();
        let mesh = build_beam_mesh(&g, StiffnessCase::default(), Material::default(), 5.0).unwrap();
        let expected = g.edges.len() as f64 * L;
        assert!((mesh.total_segment_length() - expected).abs() <= 1e-9 * expected, "{t}");
    }
}

#[test]
fn interior_hubs_have_catalog_degree() {
    for t in TopologyId::ALL {
        let g = generate_tiling(t, Bbox::square(600.0), L).unwrap();
        let mesh = build_beam_mesh(&g, StiffnessCase::default(), Material::default(), 5.0).unwrap();
        let perimeter = perimeter_vertices(&g);
        let mut degree = vec![0usize; mesh.hub_count];
        for s in &mesh.segments {
            for n in [s.i, s.j] {
                if n < mesh.hub_count {
                    degree[n] += 1;
                }
            }
        }
        for (v, d) in degree.iter().enumerate() {
            if !perimeter.contains(&v) {
                assert_eq!(*d, t.vertex_degree(), "{t} hub {v}");
            }
        }
    }
}
