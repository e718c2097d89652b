//! Planar computational geometry used by the multimesh builder.

mod aabb;
mod clip;
mod quadrature;

pub use aabb::{Aabb, AabbTree};
pub use clip::{clip_polygon, clip_triangle, triangulate, Clipped, ConvexPolygon};
pub use quadrature::{gauss_legendre, map_quadrature, QuadRule, SimplexCell};

pub type Point = nalgebra::Point2<f64>;
pub type Vector = nalgebra::Vector2<f64>;

/// Relative tolerance below which two vertices are considered the same point.
pub const SNAP_TOLERANCE: f64 = 1e-12;

/// Relative area below which a polygon piece is treated as a sliver.
pub const SLIVER_TOLERANCE: f64 = 1e-12;

/// z-component of the cross product of `a` and `b`.
#[inline]
pub fn cross(a: &Vector, b: &Vector) -> f64 {
    a.x * b.y - a.y * b.x
}

/// Twice the signed area of the triangle `a, b, c` (positive when CCW).
#[inline]
pub fn orient(a: &Point, b: &Point, c: &Point) -> f64 {
    cross(&(b - a), &(c - a))
}

#[inline]
pub fn triangle_area(t: &[Point; 3]) -> f64 {
    0.5 * orient(&t[0], &t[1], &t[2])
}

/// Barycentric coordinates of `p` with respect to `t`.
///
/// Returns `None` for a degenerate triangle.
pub fn barycentric(t: &[Point; 3], p: &Point) -> Option<[f64; 3]> {
    let det = orient(&t[0], &t[1], &t[2]);
    if det == 0.0 {
        return None;
    }
    let l1 = orient(&t[2], &t[0], p) / det;
    let l2 = orient(&t[0], &t[1], p) / det;
    Some([1.0 - l1 - l2, l1, l2])
}

/// Point-in-triangle test with an absolute barycentric slack.
pub fn triangle_contains(t: &[Point; 3], p: &Point, slack: f64) -> bool {
    match barycentric(t, p) {
        Some(l) => l.iter().all(|&v| v >= -slack),
        None => false,
    }
}

/// Circumradius of a triangle.
pub fn circumradius(t: &[Point; 3]) -> f64 {
    let a = (t[1] - t[2]).norm();
    let b = (t[2] - t[0]).norm();
    let c = (t[0] - t[1]).norm();
    let area = triangle_area(t).abs();
    if area == 0.0 {
        return f64::INFINITY;
    }
    a * b * c / (4.0 * area)
}

/// Squared diagonal of the bounding box of `pts`.
pub fn bbox_diagonal_sq(pts: &[Point]) -> f64 {
    Aabb::from_points(pts).map_or(0.0, |b| b.diagonal().norm_squared())
}
