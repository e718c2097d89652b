use super::{tags, Mesh};
use crate::geometry::Aabb;
use crate::{Error, Result};

/// Piecewise-linear height function sampled at increasing stations.
#[derive(Clone, Debug, PartialEq)]
pub struct Profile {
    stations: Vec<(f64, f64)>,
}

impl Profile {
    pub fn new(mut stations: Vec<(f64, f64)>) -> Result<Self> {
        if stations.len() < 2 {
            return Err(Error::Geometry("a profile needs at least two stations".into()));
        }
        if stations.iter().any(|(x, y)| !x.is_finite() || !y.is_finite()) {
            return Err(Error::Geometry("profile contains non-finite values".into()));
        }
        stations.sort_by(|a, b| a.0.total_cmp(&b.0));
        if stations.windows(2).any(|w| w[1].0 <= w[0].0) {
            return Err(Error::Geometry("profile stations must be distinct".into()));
        }
        Ok(Profile { stations })
    }

    pub fn constant(x0: f64, x1: f64, y: f64) -> Result<Self> {
        Self::new(vec![(x0, y), (x1, y)])
    }

    pub fn stations(&self) -> &[(f64, f64)] {
        &self.stations
    }

    /// Linear interpolation, clamped to the end values outside the range.
    pub fn eval(&self, x: f64) -> f64 {
        let s = &self.stations;
        if x <= s[0].0 {
            return s[0].1;
        }
        if x >= s[s.len() - 1].0 {
            return s[s.len() - 1].1;
        }
        let i = s.partition_point(|p| p.0 <= x) - 1;
        let (x0, y0) = s[i];
        let (x1, y1) = s[i + 1];
        y0 + (y1 - y0) * (x - x0) / (x1 - x0)
    }

    pub fn min(&self) -> f64 {
        self.stations.iter().map(|p| p.1).fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.stations.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Structured crossed-triangle mesh over a column-wise mapped grid.
///
/// `columns` are the x positions of the vertical grid lines and
/// `levels[i]` the increasing y positions of the grid nodes on column `i`;
/// every column has the same number of levels. Each grid quad gets a center
/// vertex (mean of its corners) and is split into four triangles. Boundary
/// facets are tagged bottom = 1, left = 2, right = 3, top = 4.
pub fn generate_mapped_mesh(columns: &[f64], levels: &[Vec<f64>]) -> Result<Mesh> {
    let nx = columns.len().checked_sub(1).filter(|&n| n >= 1).ok_or_else(|| {
        Error::Geometry("a structured mesh needs at least two columns".into())
    })?;
    if levels.len() != columns.len() {
        return Err(Error::Geometry("one level list per column is required".into()));
    }
    let ny = levels[0].len().checked_sub(1).filter(|&n| n >= 1).ok_or_else(|| {
        Error::Geometry("a structured mesh needs at least two levels".into())
    })?;
    if columns.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::Geometry("columns must be strictly increasing".into()));
    }
    for col in levels {
        if col.len() != ny + 1 || col.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Geometry(
                "levels must be strictly increasing with equal counts per column".into(),
            ));
        }
    }

    let grid = |i: usize, j: usize| j * (nx + 1) + i;
    let mut vertices = Vec::with_capacity((nx + 1) * (ny + 1) + nx * ny);
    for j in 0..=ny {
        for i in 0..=nx {
            vertices.push([columns[i], levels[i][j], 0.0]);
        }
    }
    let mut cells = Vec::with_capacity(4 * nx * ny);
    let mut facet_markers = std::collections::BTreeMap::new();
    for j in 0..ny {
        for i in 0..nx {
            let corners = [grid(i, j), grid(i + 1, j), grid(i + 1, j + 1), grid(i, j + 1)];
            let mut center = [0.0; 3];
            for &c in &corners {
                for d in 0..2 {
                    center[d] += 0.25 * vertices[c][d];
                }
            }
            let m = vertices.len();
            vertices.push(center);
            // edges in CCW order: bottom, right, top, left; each triangle's
            // boundary edge is opposite its local vertex 2 (the center)
            let edge_tags = [
                (j == 0).then_some(tags::BOTTOM),
                (i == nx - 1).then_some(tags::RIGHT),
                (j == ny - 1).then_some(tags::TOP),
                (i == 0).then_some(tags::LEFT),
            ];
            for e in 0..4 {
                let cell = cells.len();
                cells.push([corners[e], corners[(e + 1) % 4], m]);
                if let Some(tag) = edge_tags[e] {
                    facet_markers.insert((cell, 2), tag);
                }
            }
        }
    }
    let mut mesh = Mesh::new(2, vertices, cells);
    mesh.facet_markers = facet_markers;
    for c in 0..mesh.num_cells() {
        if mesh.cell_area(c) <= 0.0 {
            return Err(Error::Geometry(format!("mapped grid produced an inverted cell {c}")));
        }
    }
    Ok(mesh)
}

/// Structured crossed-triangle mesh of a box with `nx × ny` quads.
///
/// With a bottom profile the lowest row of vertices follows the profile and
/// the remaining rows are spaced evenly up to the top of the box.
pub fn generate_rect_mesh(bbox: &Aabb, nx: usize, ny: usize, bottom: Option<&Profile>) -> Result<Mesh> {
    if nx == 0 || ny == 0 {
        return Err(Error::Geometry("nx and ny must be at least 1".into()));
    }
    let (x0, x1) = (bbox.min.x, bbox.max.x);
    let (y0, y1) = (bbox.min.y, bbox.max.y);
    if !(x1 > x0 && y1 > y0) {
        return Err(Error::Geometry("bounding box must have positive extent".into()));
    }
    if let Some(p) = bottom {
        if p.min() < y0 || p.max() >= y1 {
            return Err(Error::Geometry(format!(
                "bottom profile [{}, {}] leaves the box height [{y0}, {y1})",
                p.min(),
                p.max()
            )));
        }
    }
    let columns: Vec<f64> = (0..=nx).map(|i| x0 + (x1 - x0) * i as f64 / nx as f64).collect();
    let levels: Vec<Vec<f64>> = columns
        .iter()
        .map(|&x| {
            let base = bottom.map_or(y0, |p| p.eval(x));
            (0..=ny).map(|j| base + (y1 - base) * j as f64 / ny as f64).collect()
        })
        .collect();
    generate_mapped_mesh(&columns, &levels)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Point;

    fn unit() -> Aabb {
        Aabb::new(Point::new(0.0, 0.0), Point::new(1.0, 1.0))
    }

    #[test]
    fn single_quad_has_center_vertex() {
        let m = generate_rect_mesh(&unit(), 1, 1, None).unwrap();
        assert_eq!(m.num_vertices(), 5);
        assert_eq!(m.num_cells(), 4);
    }

    #[test]
    fn eight_by_eight() {
        let m = generate_rect_mesh(&unit(), 8, 8, None).unwrap();
        assert_eq!(m.num_cells(), 256);
        assert!((m.total_area() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn constant_profile_removes_bottom_strip() {
        let p = Profile::constant(0.0, 1.0, 0.1).unwrap();
        let m = generate_rect_mesh(&unit(), 6, 5, Some(&p)).unwrap();
        let area: f64 = (0..m.num_cells()).map(|c| m.cell_area(c)).sum();
        assert!((area - 0.9).abs() < 1e-14);
    }

    #[test]
    fn profile_outside_box_is_rejected() {
        let p = Profile::new(vec![(0.0, 0.2), (1.0, 1.2)]).unwrap();
        assert!(generate_rect_mesh(&unit(), 2, 2, Some(&p)).is_err());
        let p = Profile::constant(0.0, 1.0, -0.1).unwrap();
        assert!(generate_rect_mesh(&unit(), 2, 2, Some(&p)).is_err());
    }

    #[test]
    fn generated_mesh_is_conforming() {
        let p = Profile::new(vec![(0.0, 0.0), (0.4, 0.3), (1.0, 0.1)]).unwrap();
        let m = generate_rect_mesh(&unit(), 7, 4, Some(&p)).unwrap();
        let adjacency = m.facet_adjacency();
        let boundary: Vec<_> = adjacency.values().filter(|o| o.len() == 1).collect();
        assert!(adjacency.values().all(|o| o.len() <= 2));
        assert_eq!(boundary.len(), 2 * (7 + 4));
        // every boundary facet is tagged and every tag sits on the boundary
        assert_eq!(m.facet_markers.len(), boundary.len());
        for owners in boundary {
            assert!(m.facet_markers.contains_key(&owners[0]));
        }
    }

    #[test]
    fn profile_interpolates_and_clamps() {
        let p = Profile::new(vec![(1.0, 2.0), (0.0, 0.0)]).unwrap();
        assert_eq!(p.eval(0.5), 1.0);
        assert_eq!(p.eval(-1.0), 0.0);
        assert_eq!(p.eval(3.0), 2.0);
        assert!(Profile::new(vec![(0.0, 1.0)]).is_err());
    }
}
