//! Triangle meshes: 2D flow meshes and 3D surface meshes for the view scene.

mod generate;
mod io;
mod stl;

pub use generate::{generate_mapped_mesh, generate_rect_mesh, Profile};
pub use io::{read_mesh, write_mesh};
pub use stl::{encode_binary_stl, parse_stl, read_stl, StlImport};

use std::collections::{BTreeMap, HashMap};

use crate::geometry::{circumradius, Point, Vector};

/// Boundary tags written by [`generate_rect_mesh`], plus the house tag used
/// by the scenario builders.
pub mod tags {
    pub const BOTTOM: i64 = 1;
    pub const LEFT: i64 = 2;
    pub const RIGHT: i64 = 3;
    pub const TOP: i64 = 4;
    /// Facets of a house body and, as a cell marker, the cells inside it.
    pub const HOUSE: i64 = 5;
}

/// A facet is identified by its cell and the local index of the vertex
/// opposite to it.
pub type FacetId = (usize, usize);

/// Local vertex indices of facet `k` of a triangle.
#[inline]
pub fn facet_vertices(k: usize) -> [usize; 2] {
    [(k + 1) % 3, (k + 2) % 3]
}

/// Simplicial triangle mesh.
///
/// `dim == 2` meshes store `z = 0` for every vertex and are positively
/// oriented. `dim == 3` meshes are triangulated surfaces.
#[derive(Clone, Debug, PartialEq)]
pub struct Mesh {
    pub dim: usize,
    pub vertices: Vec<[f64; 3]>,
    pub cells: Vec<[usize; 3]>,
    pub cell_markers: Vec<i64>,
    pub facet_markers: BTreeMap<FacetId, i64>,
}

impl Mesh {
    pub fn new(dim: usize, vertices: Vec<[f64; 3]>, cells: Vec<[usize; 3]>) -> Self {
        let n = cells.len();
        Mesh {
            dim,
            vertices,
            cells,
            cell_markers: vec![0; n],
            facet_markers: BTreeMap::new(),
        }
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_cells(&self) -> usize {
        self.cells.len()
    }

    pub fn point(&self, v: usize) -> Point {
        let c = self.vertices[v];
        Point::new(c[0], c[1])
    }

    pub fn point3(&self, v: usize) -> nalgebra::Point3<f64> {
        let c = self.vertices[v];
        nalgebra::Point3::new(c[0], c[1], c[2])
    }

    pub fn triangle(&self, cell: usize) -> [Point; 3] {
        self.cells[cell].map(|v| self.point(v))
    }

    /// Signed area in 2D, unsigned surface area in 3D.
    pub fn cell_area(&self, cell: usize) -> f64 {
        if self.dim == 2 {
            crate::geometry::triangle_area(&self.triangle(cell))
        } else {
            let [a, b, c] = self.cells[cell].map(|v| self.point3(v));
            0.5 * (b - a).cross(&(c - a)).norm()
        }
    }

    pub fn total_area(&self) -> f64 {
        (0..self.num_cells()).map(|c| self.cell_area(c)).sum()
    }

    /// Cell size used by the flow discretization: twice the circumradius.
    pub fn cell_size(&self, cell: usize) -> f64 {
        2.0 * circumradius(&self.triangle(cell))
    }

    /// Endpoints of facet `(cell, k)`.
    pub fn facet_points(&self, (cell, k): FacetId) -> [Point; 2] {
        facet_vertices(k).map(|i| self.point(self.cells[cell][i]))
    }

    /// Unit normal of a 2D facet pointing out of its cell.
    pub fn facet_normal(&self, (cell, k): FacetId) -> Vector {
        let [a, b] = self.facet_points((cell, k));
        let opposite = self.point(self.cells[cell][k]);
        let t = b - a;
        let mut n = Vector::new(t.y, -t.x).normalize();
        if n.dot(&(opposite - a)) > 0.0 {
            n = -n;
        }
        n
    }

    /// Cells sharing each facet, keyed by sorted vertex pair.
    pub fn facet_adjacency(&self) -> HashMap<[usize; 2], Vec<FacetId>> {
        let mut map: HashMap<[usize; 2], Vec<FacetId>> = HashMap::with_capacity(2 * self.cells.len());
        for (c, cell) in self.cells.iter().enumerate() {
            for k in 0..3 {
                let [i, j] = facet_vertices(k).map(|l| cell[l]);
                map.entry([i.min(j), i.max(j)]).or_default().push((c, k));
            }
        }
        map
    }

    /// Facets that belong to exactly one cell, in sorted order.
    pub fn boundary_facets(&self) -> Vec<FacetId> {
        let mut out: Vec<FacetId> = self
            .facet_adjacency()
            .into_values()
            .filter(|owners| owners.len() == 1)
            .map(|owners| owners[0])
            .collect();
        out.sort_unstable();
        out
    }

    /// Facets carrying `marker`, in sorted order.
    pub fn facets_with_marker(&self, marker: i64) -> Vec<FacetId> {
        self.facet_markers
            .iter()
            .filter(|(_, &m)| m == marker)
            .map(|(&f, _)| f)
            .collect()
    }

    pub fn bbox(&self) -> Option<crate::geometry::Aabb> {
        let pts: Vec<Point> = (0..self.num_vertices()).map(|v| self.point(v)).collect();
        crate::geometry::Aabb::from_points(&pts)
    }

    /// Apply a rigid motion to a 2D mesh. Connectivity and markers are kept.
    pub fn transformed(&self, t: &RigidTransform2D) -> Mesh {
        let mut out = self.clone();
        for v in &mut out.vertices {
            let p = t.apply(&Point::new(v[0], v[1]));
            v[0] = p.x;
            v[1] = p.y;
        }
        out
    }
}

/// Free-function form of [`Mesh::transformed`].
pub fn transform_mesh(mesh: &Mesh, t: &RigidTransform2D) -> Mesh {
    mesh.transformed(t)
}

/// Rotation about the origin followed by a translation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RigidTransform2D {
    pub translation: Vector,
    pub rotation: f64,
}

impl Default for RigidTransform2D {
    fn default() -> Self {
        Self::identity()
    }
}

impl RigidTransform2D {
    pub fn identity() -> Self {
        RigidTransform2D {
            translation: Vector::zeros(),
            rotation: 0.0,
        }
    }

    pub fn new(translation: Vector, rotation: f64) -> Self {
        RigidTransform2D { translation, rotation }
    }

    pub fn translation(x: f64, y: f64) -> Self {
        Self::new(Vector::new(x, y), 0.0)
    }

    pub fn apply(&self, p: &Point) -> Point {
        if self.rotation == 0.0 {
            return p + self.translation;
        }
        let (s, c) = self.rotation.sin_cos();
        Point::new(c * p.x - s * p.y, s * p.x + c * p.y) + self.translation
    }

    /// `self ∘ other`: apply `other` first.
    pub fn compose(&self, other: &RigidTransform2D) -> RigidTransform2D {
        let rotated = nalgebra::Rotation2::new(self.rotation) * other.translation;
        RigidTransform2D::new(rotated + self.translation, self.rotation + other.rotation)
    }

    pub fn inverse(&self) -> RigidTransform2D {
        let back = nalgebra::Rotation2::new(-self.rotation) * self.translation;
        RigidTransform2D::new(-back, -self.rotation)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Aabb;
    use proptest::prelude::*;

    fn unit_square(n: usize) -> Mesh {
        generate_rect_mesh(&Aabb::new(Point::new(0.0, 0.0), Point::new(1.0, 1.0)), n, n, None).unwrap()
    }

    #[test]
    fn identity_transform_is_bitwise() {
        let m = unit_square(3);
        assert_eq!(m.transformed(&RigidTransform2D::identity()), m);
    }

    #[test]
    fn translation_shifts_x() {
        let m = unit_square(2);
        let t = m.transformed(&RigidTransform2D::translation(1.0, 0.0));
        for (a, b) in m.vertices.iter().zip(&t.vertices) {
            assert_eq!(b[0], a[0] + 1.0);
            assert_eq!(b[1], a[1]);
        }
        assert_eq!(m.cells, t.cells);
        assert_eq!(m.facet_markers, t.facet_markers);
    }

    #[test]
    fn quarter_turn_preserves_area() {
        let m = unit_square(4);
        let t = m.transformed(&RigidTransform2D::new(Vector::zeros(), std::f64::consts::FRAC_PI_2));
        assert!((t.total_area() - 1.0).abs() < 1e-14);
        for c in 0..t.num_cells() {
            assert!(t.cell_area(c) > 0.0);
        }
    }

    #[test]
    fn facet_normals_point_outward() {
        let m = unit_square(2);
        for f in m.facets_with_marker(tags::BOTTOM) {
            let n = m.facet_normal(f);
            assert!((n - Vector::new(0.0, -1.0)).norm() < 1e-15);
        }
        for f in m.facets_with_marker(tags::RIGHT) {
            let n = m.facet_normal(f);
            assert!((n - Vector::new(1.0, 0.0)).norm() < 1e-15);
        }
    }

    proptest! {
        #[test]
        fn rigid_motion_preserves_distances(tx in -5.0f64..5.0, ty in -5.0f64..5.0, angle in -7.0f64..7.0) {
            let m = unit_square(2);
            let t = RigidTransform2D::new(Vector::new(tx, ty), angle);
            let moved = m.transformed(&t);
            for i in 0..m.num_vertices() {
                for j in (i + 1)..m.num_vertices() {
                    let d0 = (m.point(i) - m.point(j)).norm();
                    let d1 = (moved.point(i) - moved.point(j)).norm();
                    prop_assert!((d0 - d1).abs() <= 1e-12 * d0.max(1.0));
                }
            }
            for c in 0..m.num_cells() {
                prop_assert!((m.cell_area(c) - moved.cell_area(c)).abs() <= 1e-12 * m.cell_area(c));
            }
        }

        #[test]
        fn compose_and_inverse(a in -3.0f64..3.0, b in -3.0f64..3.0, r1 in -3.0f64..3.0, r2 in -3.0f64..3.0,
                               px in -2.0f64..2.0, py in -2.0f64..2.0) {
            let s = RigidTransform2D::new(Vector::new(a, b), r1);
            let t = RigidTransform2D::new(Vector::new(b, -a), r2);
            let p = Point::new(px, py);
            let lhs = s.compose(&t).apply(&p);
            let rhs = s.apply(&t.apply(&p));
            prop_assert!((lhs - rhs).norm() < 1e-12);
            let back = s.inverse().apply(&s.apply(&p));
            prop_assert!((back - p).norm() < 1e-12);
        }
    }
}
