use nalgebra::Point3;

use super::{GridSpec, StlSpec};
use crate::geometry::{barycentric, Aabb, AabbTree, Point};
use crate::mesh::read_stl;
use crate::raster::Category;
use crate::{Error, Result};

/// Triangulated terrain surface with a plan-view search tree.
#[derive(Clone, Debug)]
pub struct Terrain {
    triangles: Vec<[Point3<f64>; 3]>,
    categories: Vec<Category>,
    plan: Vec<[Point; 3]>,
    tree: AabbTree,
}

fn plan_of(t: &[Point3<f64>; 3]) -> [Point; 3] {
    t.map(|p| Point::new(p.x, p.y))
}

impl Terrain {
    pub fn new(triangles: Vec<[Point3<f64>; 3]>, categories: Vec<Category>) -> Result<Self> {
        if triangles.is_empty() || triangles.len() != categories.len() {
            return Err(Error::Validation("terrain needs triangles with one category each".into()));
        }
        if triangles.iter().flatten().any(|p| !p.iter().all(|v| v.is_finite())) {
            return Err(Error::Validation("terrain has non-finite vertices".into()));
        }
        let plan: Vec<[Point; 3]> = triangles.iter().map(plan_of).collect();
        let boxes: Vec<Aabb> = plan.iter().map(|t| Aabb::from_points(t).expect("three points")).collect();
        let tree = AabbTree::build(&boxes)?;
        Ok(Terrain {
            triangles,
            categories,
            plan,
            tree,
        })
    }

    /// Two triangles per grid quad; water where the centroid is at or below
    /// sea level.
    pub fn from_grid(g: &GridSpec) -> Result<Self> {
        let ny = g.heights.len();
        let nx = g.heights.first().map_or(0, Vec::len);
        if nx < 2 || ny < 2 || g.heights.iter().any(|row| row.len() != nx) {
            return Err(Error::Validation("height grid must be rectangular with at least 2×2 samples".into()));
        }
        if !(g.dx > 0.0 && g.dy > 0.0) || !g.origin.iter().all(|v| v.is_finite()) {
            return Err(Error::Validation("grid spacing must be positive".into()));
        }
        let p = |i: usize, j: usize| Point3::new(g.origin[0] + i as f64 * g.dx, g.origin[1] + j as f64 * g.dy, g.heights[j][i]);
        let mut triangles = Vec::with_capacity(2 * (nx - 1) * (ny - 1));
        for j in 0..ny - 1 {
            for i in 0..nx - 1 {
                triangles.push([p(i, j), p(i + 1, j), p(i + 1, j + 1)]);
                triangles.push([p(i, j), p(i + 1, j + 1), p(i, j + 1)]);
            }
        }
        let categories = triangles
            .iter()
            .map(|t| {
                if (t[0].z + t[1].z + t[2].z) / 3.0 <= 0.0 {
                    Category::Water
                } else {
                    Category::Ground
                }
            })
            .collect();
        Terrain::new(triangles, categories)
    }

    pub fn from_stl(s: &StlSpec) -> Result<Self> {
        let mesh = read_stl(&s.path)?;
        if let Some(&bad) = s.water_tags.iter().find(|&&t| t >= mesh.num_cells()) {
            return Err(Error::Validation(format!(
                "water tag {bad} exceeds the {} facets of {}",
                mesh.num_cells(),
                s.path.display()
            )));
        }
        let triangles: Vec<[Point3<f64>; 3]> = (0..mesh.num_cells()).map(|c| mesh.cells[c].map(|v| mesh.point3(v))).collect();
        let mut categories = vec![Category::Ground; triangles.len()];
        for &t in &s.water_tags {
            categories[t] = Category::Water;
        }
        Terrain::new(triangles, categories)
    }

    pub fn triangles(&self) -> &[[Point3<f64>; 3]] {
        &self.triangles
    }

    pub fn categories(&self) -> &[Category] {
        &self.categories
    }

    /// Plan-view extent.
    pub fn extent(&self) -> Aabb {
        self.tree.bbox()
    }

    /// Highest surface triangle above `(x, y)` with its height.
    fn top_hit(&self, x: f64, y: f64) -> Option<(usize, f64)> {
        let p = Point::new(x, y);
        self.tree
            .query_point(&p)
            .into_iter()
            .filter_map(|t| {
                let l = barycentric(&self.plan[t], &p)?;
                if l.iter().any(|&v| v < -1e-12) {
                    return None;
                }
                let z = (0..3).map(|k| l[k] * self.triangles[t][k].z).sum::<f64>();
                Some((t, z))
            })
            .max_by(|a, b| a.1.total_cmp(&b.1).then(b.0.cmp(&a.0)))
    }

    pub fn elevation(&self, x: f64, y: f64) -> Option<f64> {
        self.top_hit(x, y).map(|(_, z)| z)
    }

    pub fn category_at(&self, x: f64, y: f64) -> Option<Category> {
        self.top_hit(x, y).map(|(t, _)| self.categories[t])
    }

    /// Lowest terrain point over a convex plan polygon, or `None` when part
    /// of the polygon is off the terrain.
    ///
    /// The surface is piecewise linear, so the minimum is attained at a
    /// polygon corner, a terrain vertex inside the polygon, or a crossing of
    /// a polygon edge with a terrain edge.
    pub fn min_over(&self, polygon: &[Point]) -> Option<f64> {
        let bbox = Aabb::from_points(polygon)?;
        let mut candidates: Vec<Point> = polygon.to_vec();
        let inside = |p: &Point| {
            (0..polygon.len()).all(|i| {
                let a = polygon[i];
                let b = polygon[(i + 1) % polygon.len()];
                crate::geometry::orient(&a, &b, p) >= 0.0
            })
        };
        for t in self.tree.query(&bbox) {
            let tri = &self.plan[t];
            candidates.extend(tri.iter().filter(|p| inside(p)));
            for i in 0..polygon.len() {
                let (a, b) = (polygon[i], polygon[(i + 1) % polygon.len()]);
                for k in 0..3 {
                    if let Some(x) = segment_crossing(&a, &b, &tri[k], &tri[(k + 1) % 3]) {
                        candidates.push(x);
                    }
                }
            }
        }
        let mut min = f64::INFINITY;
        for p in candidates {
            min = min.min(self.elevation(p.x, p.y)?);
        }
        Some(min)
    }
}

fn segment_crossing(a: &Point, b: &Point, c: &Point, d: &Point) -> Option<Point> {
    let r = b - a;
    let s = d - c;
    let den = crate::geometry::cross(&r, &s);
    if den == 0.0 {
        return None;
    }
    let t = crate::geometry::cross(&(c - a), &s) / den;
    let u = crate::geometry::cross(&(c - a), &r) / den;
    ((0.0..=1.0).contains(&t) && (0.0..=1.0).contains(&u)).then(|| a + r * t)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ramp() -> Terrain {
        // z = x - 5 on [0, 10]²
        Terrain::from_grid(&GridSpec {
            origin: [0.0, 0.0],
            dx: 5.0,
            dy: 5.0,
            heights: vec![vec![-5.0, 0.0, 5.0]; 3],
        })
        .unwrap()
    }

    #[test]
    fn elevation_interpolates_the_grid() {
        let t = ramp();
        for (x, y) in [(0.0, 0.0), (2.5, 7.1), (9.99, 3.3), (10.0, 10.0)] {
            assert!((t.elevation(x, y).unwrap() - (x - 5.0)).abs() < 1e-12);
        }
        assert!(t.elevation(10.5, 1.0).is_none());
        assert_eq!(t.category_at(1.0, 1.0), Some(Category::Water));
        assert_eq!(t.category_at(9.0, 1.0), Some(Category::Ground));
    }

    #[test]
    fn polygon_minimum() {
        let t = ramp();
        let square = [Point::new(3.0, 3.0), Point::new(7.0, 3.0), Point::new(7.0, 7.0), Point::new(3.0, 7.0)];
        assert!((t.min_over(&square).unwrap() + 2.0).abs() < 1e-12);
        let off = [Point::new(8.0, 3.0), Point::new(12.0, 3.0), Point::new(12.0, 7.0), Point::new(8.0, 7.0)];
        assert!(t.min_over(&off).is_none());
    }

    #[test]
    fn ragged_grid_is_rejected() {
        let g = GridSpec {
            origin: [0.0, 0.0],
            dx: 1.0,
            dy: 1.0,
            heights: vec![vec![0.0, 0.0], vec![0.0]],
        };
        assert!(Terrain::from_grid(&g).is_err());
    }
}
