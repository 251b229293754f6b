//! Periodic definitions of the uniform tilings at unit edge length.
//!
//! Each pattern is a Bravais lattice plus a motif of vertices. Motifs may list
//! the same vertex more than once (as the corners of neighbouring polygons);
//! the generator merges coincident points. Patterns with mirror symmetry are
//! laid out so that one vertical and one horizontal mirror axis pass through
//! the origin, and `rect` is the rectangular conventional cell, whose half
//! periods give the other mirror intersections.

use std::f64::consts::PI;

use super::{Point, TopologyId};

pub(crate) struct Pattern {
    pub a1: Point,
    pub a2: Point,
    pub motif: Vec<Point>,
    /// Rectangular conventional cell (width, height); `None` for chiral patterns.
    pub rect: Option<(f64, f64)>,
}

fn rot(p: Point, angle: f64) -> Point {
    let (s, c) = angle.sin_cos();
    Point::new(c * p.x - s * p.y, s * p.x + c * p.y)
}

/// Vertices of a regular n-gon of unit side centred at `center`, first vertex at `phase`.
fn polygon(center: Point, n: u32, phase: f64) -> impl Iterator<Item = Point> {
    let radius = 1.0 / (2.0 * (PI / n as f64).sin());
    (0..n).map(move |k| {
        let a = phase + 2.0 * PI * k as f64 / n as f64;
        center + Point::new(radius * a.cos(), radius * a.sin())
    })
}

/// Triangular Bravais lattice with spacing `d` and a basis vector along x.
fn hex_lattice(d: f64) -> (Point, Point) {
    (Point::new(d, 0.0), Point::new(0.5 * d, 0.5 * 3f64.sqrt() * d))
}

pub(crate) fn pattern(topology: TopologyId) -> Pattern {
    let sqrt3 = 3f64.sqrt();
    let origin = Point::zeros();
    match topology {
        TopologyId::Triangular => {
            // edges run vertically so a strip one edge high still closes triangles
            Pattern {
                a1: Point::new(0.0, 1.0),
                a2: Point::new(0.5 * sqrt3, 0.5),
                motif: vec![origin],
                rect: Some((sqrt3, 1.0)),
            }
        }
        TopologyId::Square => Pattern {
            a1: Point::new(1.0, 0.0),
            a2: Point::new(0.0, 1.0),
            motif: vec![origin],
            rect: Some((1.0, 1.0)),
        },
        TopologyId::Hexagonal => {
            // hexagon centres on a triangular lattice, edge-sharing neighbours at 30 degrees
            let a1 = Point::new(1.5, 0.5 * sqrt3);
            let a2 = Point::new(0.0, sqrt3);
            Pattern { a1, a2, motif: polygon(origin, 6, 0.0).collect(), rect: Some((3.0, sqrt3)) }
        }
        TopologyId::ElongatedTriangular => {
            // horizontal bands: a row of squares, then a row of triangles
            let h = 0.5 * sqrt3;
            Pattern {
                a1: Point::new(1.0, 0.0),
                a2: Point::new(0.5, 1.0 + h),
                motif: vec![Point::new(0.0, -0.5), Point::new(0.0, 0.5)],
                rect: Some((1.0, 2.0 + sqrt3)),
            }
        }
        TopologyId::SnubSquare => {
            // squares at the lattice points turned by +15 degrees, squares at the cell
            // centres by -15; mirrors run along the cell diagonals, so turn the whole
            // pattern by -45 degrees about a mirror intersection.
            let s = (2.0 + sqrt3).sqrt();
            let center = Point::new(0.5 * s, 0.0);
            let square = [(0.5, 0.5), (-0.5, 0.5), (-0.5, -0.5), (0.5, -0.5)];
            let tilt = PI / 12.0;
            let turn = -PI / 4.0;
            let place = |p: Point| rot(p - center, turn);
            let motif = square
                .iter()
                .map(|&(x, y)| place(rot(Point::new(x, y), tilt)))
                .collect();
            Pattern {
                a1: rot(Point::new(s, 0.0), turn),
                a2: rot(Point::new(0.0, s), turn),
                motif,
                rect: Some((s * 2f64.sqrt(), s * 2f64.sqrt())),
            }
        }
        TopologyId::Trihexagonal => {
            // edge midpoints of a triangular lattice with spacing 2
            let (a1, a2) = hex_lattice(2.0);
            let motif = vec![
                Point::new(1.0, 0.0),
                Point::new(0.5, 0.5 * sqrt3),
                Point::new(-0.5, 0.5 * sqrt3),
            ];
            Pattern { a1, a2, motif, rect: Some((2.0, 2.0 * sqrt3)) }
        }
        TopologyId::Rhombitrihexagonal => {
            let d = 1.0 + sqrt3;
            let (a1, a2) = hex_lattice(d);
            Pattern {
                a1,
                a2,
                motif: polygon(origin, 6, PI / 6.0).collect(),
                rect: Some((d, d * sqrt3)),
            }
        }
        TopologyId::TruncatedHexagonal => {
            let d = 2.0 + sqrt3;
            let (a1, a2) = hex_lattice(d);
            Pattern {
                a1,
                a2,
                motif: polygon(origin, 12, PI / 12.0).collect(),
                rect: Some((d, d * sqrt3)),
            }
        }
        TopologyId::TruncatedSquare => {
            let d = 1.0 + 2f64.sqrt();
            Pattern {
                a1: Point::new(d, 0.0),
                a2: Point::new(0.0, d),
                motif: polygon(origin, 8, PI / 8.0).collect(),
                rect: Some((d, d)),
            }
        }
        TopologyId::TruncatedTrihexagonal => {
            let d = 3.0 + sqrt3;
            let (a1, a2) = hex_lattice(d);
            Pattern {
                a1,
                a2,
                motif: polygon(origin, 12, PI / 12.0).collect(),
                rect: Some((d, d * sqrt3)),
            }
        }
        TopologyId::SnubHexagonal => {
            // unit triangular lattice with a sqrt(7) superlattice removed; each
            // removed point leaves a hexagonal hole
            let a1 = Point::new(2.5, 0.5 * sqrt3);
            let a2 = rot(a1, PI / 3.0);
            Pattern { a1, a2, motif: polygon(origin, 6, 0.0).collect(), rect: None }
        }
    }
}
