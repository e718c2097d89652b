use super::{bbox_diagonal_sq, cross, orient, Aabb, Point, SLIVER_TOLERANCE, SNAP_TOLERANCE};
use crate::{Error, Result};

/// Convex polygon with counter-clockwise vertices.
///
/// Construction canonicalizes the vertex loop: near-coincident vertices are
/// merged, collinear middle vertices are removed and clockwise input is
/// reversed. A polygon with fewer than three vertices left is degenerate.
#[derive(Clone, Debug, PartialEq)]
pub struct ConvexPolygon {
    vertices: Vec<Point>,
}

impl ConvexPolygon {
    pub fn new(vertices: Vec<Point>) -> Self {
        let scale = bbox_diagonal_sq(&vertices).sqrt();
        ConvexPolygon {
            vertices: canonicalize(vertices, scale),
        }
    }

    pub fn from_triangle(t: &[Point; 3]) -> Self {
        Self::new(t.to_vec())
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn is_degenerate(&self) -> bool {
        self.vertices.len() < 3
    }

    pub fn area(&self) -> f64 {
        polygon_area(&self.vertices)
    }

    pub fn bbox(&self) -> Option<Aabb> {
        Aabb::from_points(&self.vertices)
    }

    /// Closed containment test with absolute distance slack.
    pub fn contains(&self, p: &Point, slack: f64) -> bool {
        if self.is_degenerate() {
            return false;
        }
        let n = self.vertices.len();
        (0..n).all(|i| {
            let a = self.vertices[i];
            let b = self.vertices[(i + 1) % n];
            let e = b - a;
            cross(&e, &(p - a)) >= -slack * e.norm()
        })
    }
}

fn polygon_area(v: &[Point]) -> f64 {
    if v.len() < 3 {
        return 0.0;
    }
    let o = v[0];
    v.windows(2).skip(1).map(|w| orient(&o, &w[0], &w[1])).sum::<f64>() * 0.5
}

fn canonicalize(mut v: Vec<Point>, scale: f64) -> Vec<Point> {
    let snap = SNAP_TOLERANCE * scale;
    let mut out: Vec<Point> = Vec::with_capacity(v.len());
    for p in v.drain(..) {
        if out.last().is_none_or(|q| (p - q).norm() > snap) {
            out.push(p);
        }
    }
    while out.len() > 1 && (out[0] - out[out.len() - 1]).norm() <= snap {
        out.pop();
    }
    // drop vertices that do not turn
    let turn_tol = SNAP_TOLERANCE * scale * scale;
    let mut changed = true;
    while changed && out.len() >= 3 {
        changed = false;
        let n = out.len();
        for i in 0..n {
            let prev = out[(i + n - 1) % n];
            let next = out[(i + 1) % n];
            if orient(&prev, &out[i], &next).abs() <= turn_tol {
                out.remove(i);
                changed = true;
                break;
            }
        }
    }
    if out.len() < 3 {
        return out;
    }
    if polygon_area(&out) < 0.0 {
        out.reverse();
    }
    out
}

/// Split a convex vertex loop by the directed line `a -> b`.
///
/// Returns `(left, right)`; vertices within `tol` of the line go to both.
fn split_by_line(poly: &[Point], a: &Point, b: &Point, tol: f64) -> (Vec<Point>, Vec<Point>) {
    let dir = b - a;
    let len = dir.norm();
    let dist: Vec<f64> = poly
        .iter()
        .map(|p| {
            let d = cross(&dir, &(p - a)) / len;
            if d.abs() <= tol {
                0.0
            } else {
                d
            }
        })
        .collect();
    let mut left = Vec::with_capacity(poly.len() + 1);
    let mut right = Vec::with_capacity(poly.len() + 1);
    let n = poly.len();
    for i in 0..n {
        let j = (i + 1) % n;
        let (di, dj) = (dist[i], dist[j]);
        if di >= 0.0 {
            left.push(poly[i]);
        }
        if di <= 0.0 {
            right.push(poly[i]);
        }
        if di * dj < 0.0 {
            let t = di / (di - dj);
            let x = poly[i] + (poly[j] - poly[i]) * t;
            left.push(x);
            right.push(x);
        }
    }
    (left, right)
}

/// Result of clipping a subject against a convex clipper.
#[derive(Clone, Debug, Default)]
pub struct Clipped {
    /// subject ∩ clipper, at most one convex piece.
    pub inside: Vec<ConvexPolygon>,
    /// subject ∖ clipper as convex pieces, one per clipper edge at most.
    pub outside: Vec<ConvexPolygon>,
}

impl Clipped {
    pub fn inside_area(&self) -> f64 {
        self.inside.iter().map(ConvexPolygon::area).sum()
    }

    pub fn outside_area(&self) -> f64 {
        self.outside.iter().map(ConvexPolygon::area).sum()
    }
}

/// Successive half-plane clipping of a convex polygon by a convex clipper.
///
/// Each clipper edge peels off the part of the running polygon lying to its
/// right; those peels form the outside partition. Pieces whose area is below
/// `1e-12 * diag²` (diagonal of the subject's bounding box) are dropped.
pub fn clip_polygon(subject: &ConvexPolygon, clipper: &ConvexPolygon) -> Clipped {
    let mut out = Clipped::default();
    let (Some(sb), Some(cb)) = (subject.bbox(), clipper.bbox()) else {
        return out;
    };
    let scale_sq = sb.diagonal().norm_squared();
    let eps_area = SLIVER_TOLERANCE * scale_sq;
    if subject.area() <= eps_area {
        return out;
    }
    if !sb.intersects(&cb) || clipper.is_degenerate() {
        out.outside.push(subject.clone());
        return out;
    }
    let tol = SNAP_TOLERANCE * sb.merged(&cb).diagonal().norm();
    let cv = clipper.vertices();
    let mut current = subject.vertices().to_vec();
    for i in 0..cv.len() {
        let (left, right) = split_by_line(&current, &cv[i], &cv[(i + 1) % cv.len()], tol);
        let peel = ConvexPolygon::new(right);
        if !peel.is_degenerate() && peel.area() > eps_area {
            out.outside.push(peel);
        }
        current = left;
        if polygon_area(&current) <= eps_area {
            current.clear();
            break;
        }
    }
    let inside = ConvexPolygon::new(current);
    if !inside.is_degenerate() && inside.area() > eps_area {
        out.inside.push(inside);
    }
    out
}

/// Partition a triangle into its parts inside and outside a convex clipper.
pub fn clip_triangle(subject: &[Point; 3], clipper: &ConvexPolygon) -> Result<Clipped> {
    let eps_area = SLIVER_TOLERANCE * bbox_diagonal_sq(subject);
    let area = 0.5 * orient(&subject[0], &subject[1], &subject[2]).abs();
    if area <= eps_area {
        return Err(Error::Geometry(format!("degenerate subject triangle (area {area:e})")));
    }
    if clipper.is_degenerate() {
        return Err(Error::Geometry("degenerate clipper polygon".into()));
    }
    Ok(clip_polygon(&ConvexPolygon::from_triangle(subject), clipper))
}

/// Fan triangulation from the first vertex.
pub fn triangulate(poly: &ConvexPolygon) -> Result<Vec<[Point; 3]>> {
    let v = poly.vertices();
    if v.len() < 3 {
        return Err(Error::Geometry(format!(
            "cannot triangulate a polygon with {} vertices",
            v.len()
        )));
    }
    Ok((1..v.len() - 1).map(|i| [v[0], v[i], v[i + 1]]).collect())
}
