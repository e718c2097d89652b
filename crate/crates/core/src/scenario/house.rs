use nalgebra::{Point3, Vector2};

use super::{House, Terrain};
use crate::geometry::Point;
use crate::{Error, Result};

impl House {
    /// Local x and y axes in plan view.
    pub fn axes(&self) -> [Vector2<f64>; 2] {
        let (s, c) = self.rotation.sin_cos();
        [Vector2::new(c, s), Vector2::new(-s, c)]
    }

    /// Plan coordinates of a point given in the house frame.
    pub fn to_world(&self, lx: f64, ly: f64) -> Point {
        let [ex, ey] = self.axes();
        Point::new(self.x, self.y) + ex * lx + ey * ly
    }

    pub fn to_local(&self, p: &Point) -> [f64; 2] {
        let [ex, ey] = self.axes();
        let d = p - Point::new(self.x, self.y);
        [d.dot(&ex), d.dot(&ey)]
    }

    /// Footprint corners, counterclockwise.
    pub fn footprint(&self) -> [Point; 4] {
        let (w, d) = (0.5 * self.width, 0.5 * self.depth);
        [(-w, -d), (w, -d), (w, d), (-w, d)].map(|(x, y)| self.to_world(x, y))
    }

    /// Roof height above the house reference level at local `lx`.
    pub fn roof_at(&self, lx: f64) -> f64 {
        let t = (1.0 - lx.abs() / (0.5 * self.width)).clamp(0.0, 1.0);
        self.wall_height + (self.ridge_height - self.wall_height) * t
    }
}

/// Separating-axis test on the two footprints. Touching edges do not count
/// as overlap.
pub fn footprints_overlap(a: &House, b: &House) -> bool {
    let (pa, pb) = (a.footprint(), b.footprint());
    let scale = a.width.max(a.depth).max(b.width).max(b.depth);
    let axes = a.axes().into_iter().chain(b.axes());
    for axis in axes {
        let range = |pts: &[Point; 4]| {
            pts.iter()
                .map(|p| p.coords.dot(&axis))
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)))
        };
        let (a0, a1) = range(&pa);
        let (b0, b1) = range(&pb);
        if a1.min(b1) - a0.max(b0) <= 1e-9 * scale {
            return false;
        }
    }
    true
}

/// A house placed on the terrain.
#[derive(Clone, Debug, PartialEq)]
pub struct HouseGeometry {
    pub house: House,
    /// Lowest terrain point under the footprint; wall and ridge heights are
    /// measured from here.
    pub reference: f64,
    /// Bottom of the house body, sunk below the reference level.
    pub base: f64,
}

impl HouseGeometry {
    pub fn new(house: &House, terrain: &Terrain) -> Result<Self> {
        let reference = terrain
            .min_over(&house.footprint())
            .ok_or_else(|| Error::Validation(format!("house {} is not entirely on the terrain", house.id)))?;
        Ok(HouseGeometry {
            house: house.clone(),
            reference,
            base: reference - Self::sink_depth(house),
        })
    }

    /// How far the body reaches below the terrain.
    pub fn sink_depth(house: &House) -> f64 {
        0.05 * house.wall_height
    }

    pub fn wall_top(&self) -> f64 {
        self.reference + self.house.wall_height
    }

    pub fn ridge_top(&self) -> f64 {
        self.reference + self.house.ridge_height
    }

    /// Closed gabled box: floor, four walls, two gables and two roof planes,
    /// 16 triangles with outward orientation.
    pub fn triangles(&self) -> Vec<[Point3<f64>; 3]> {
        let h = &self.house;
        let (w, d) = (0.5 * h.width, 0.5 * h.depth);
        let at = |lx: f64, ly: f64, z: f64| {
            let p = h.to_world(lx, ly);
            Point3::new(p.x, p.y, z)
        };
        let (b, t, r) = (self.base, self.wall_top(), self.ridge_top());
        let bottom = [at(-w, -d, b), at(w, -d, b), at(w, d, b), at(-w, d, b)];
        let top = [at(-w, -d, t), at(w, -d, t), at(w, d, t), at(-w, d, t)];
        let ridge = [at(0.0, -d, r), at(0.0, d, r)];
        let mut out = vec![[bottom[0], bottom[2], bottom[1]], [bottom[0], bottom[3], bottom[2]]];
        for i in 0..4 {
            let j = (i + 1) % 4;
            out.push([bottom[i], bottom[j], top[j]]);
            out.push([bottom[i], top[j], top[i]]);
        }
        // gables at local y = -d and y = +d
        out.push([top[0], top[1], ridge[0]]);
        out.push([top[2], top[3], ridge[1]]);
        // roof planes: east (+x) and west (-x)
        out.push([top[1], top[2], ridge[1]]);
        out.push([top[1], ridge[1], ridge[0]]);
        out.push([top[3], top[0], ridge[0]]);
        out.push([top[3], ridge[0], ridge[1]]);
        out
    }

    /// Parameter interval of the segment `a + s·(b − a)/|b − a|`, `s ≥ 0`,
    /// that crosses the footprint, if any.
    pub fn chord(&self, a: &Point, b: &Point) -> Option<(f64, f64)> {
        let h = &self.house;
        let len = (b - a).norm();
        let dir = (b - a) / len;
        let origin = h.to_local(a);
        let [ex, ey] = h.axes();
        let local_dir = [dir.dot(&ex), dir.dot(&ey)];
        let half = [0.5 * h.width, 0.5 * h.depth];
        let (mut lo, mut hi) = (f64::NEG_INFINITY, f64::INFINITY);
        for k in 0..2 {
            if local_dir[k].abs() < 1e-14 {
                if origin[k].abs() >= half[k] {
                    return None;
                }
                continue;
            }
            let t0 = (-half[k] - origin[k]) / local_dir[k];
            let t1 = (half[k] - origin[k]) / local_dir[k];
            lo = lo.max(t0.min(t1));
            hi = hi.min(t0.max(t1));
        }
        (hi - lo > 1e-9 * h.width.min(h.depth)).then_some((lo, hi))
    }

    /// Local x coordinate along the segment at parameter `s`.
    pub fn local_x_along(&self, a: &Point, b: &Point, s: f64) -> f64 {
        let dir = (b - a) / (b - a).norm();
        self.house.to_local(&(a + dir * s))[0]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::tests::flat;
    use std::f64::consts::PI;

    fn house(x: f64, y: f64, rotation: f64) -> House {
        House {
            id: "h".into(),
            x,
            y,
            rotation,
            width: 10.0,
            depth: 6.0,
            wall_height: 3.0,
            ridge_height: 5.0,
        }
    }

    fn terrain() -> Terrain {
        let crate::scenario::TerrainSpec::Grid(g) = flat(1.0) else { unreachable!() };
        Terrain::from_grid(&g).unwrap()
    }

    #[test]
    fn box_is_closed_and_has_the_right_volume() {
        let g = HouseGeometry::new(&house(40.0, 50.0, 0.7), &terrain()).unwrap();
        let tris = g.triangles();
        assert_eq!(tris.len(), 16);
        // divergence theorem: V = Σ (p0 · (p1 × p2)) / 6 for an outward surface
        let vol: f64 = tris.iter().map(|t| t[0].coords.dot(&t[1].coords.cross(&t[2].coords)) / 6.0).sum();
        let body = 10.0 * 6.0 * (3.0 + 0.15);
        let roof = 0.5 * 10.0 * 2.0 * 6.0;
        assert!((vol - body - roof).abs() < 1e-9 * body, "{vol}");
        // every edge is shared by exactly two triangles
        let key = |p: &Point3<f64>| p.coords.iter().map(|v| (v * 1e6).round() as i64).collect::<Vec<_>>();
        let mut edges = std::collections::HashMap::new();
        for t in &tris {
            for k in 0..3 {
                let mut e = [key(&t[k]), key(&t[(k + 1) % 3])];
                e.sort();
                *edges.entry(e).or_insert(0) += 1;
            }
        }
        assert!(edges.values().all(|&n| n == 2));
    }

    #[test]
    fn sat_overlap() {
        let a = house(0.0, 0.0, 0.0);
        let mut b = house(10.0, 0.0, 0.0);
        assert!(!footprints_overlap(&a, &b), "touching");
        b.x = 9.9;
        assert!(footprints_overlap(&a, &b));
        // rotated square: both axis projections overlap, only the diagonal
        // separates the two
        let mut c = house(6.5, 4.5, PI / 4.0);
        c.width = 4.0;
        c.depth = 4.0;
        assert!(!footprints_overlap(&a, &c));
        c.x = 6.0;
        c.y = 4.0;
        assert!(footprints_overlap(&a, &c));
    }

    #[test]
    fn chord_through_rotated_house() {
        let g = HouseGeometry::new(&house(50.0, 50.0, PI / 2.0), &terrain()).unwrap();
        // rotated by 90°: width runs along y, depth along x
        let (s0, s1) = g.chord(&Point::new(0.0, 50.0), &Point::new(100.0, 50.0)).unwrap();
        assert!((s0 - 47.0).abs() < 1e-12 && (s1 - 53.0).abs() < 1e-12);
        assert!(g.chord(&Point::new(0.0, 60.0), &Point::new(100.0, 60.0)).is_none());
        assert_eq!(g.reference, 1.0);
        assert!((g.base - 0.85).abs() < 1e-15);
    }
}
