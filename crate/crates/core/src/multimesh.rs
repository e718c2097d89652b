//! Mesh hierarchy of one background mesh and disjoint overlapping meshes.
//!
//! Part 0 is the background. Every later part sits on top of it and hides
//! the background where they overlap. Background cells are classified as
//! active (untouched), cut (partly hidden) or covered (hidden), and cut
//! cells keep their visible and overlapped pieces as triangles so any
//! quadrature degree can be mapped onto them later.

use std::collections::BTreeMap;

use rayon::prelude::*;

use crate::geometry::{
    bbox_diagonal_sq, clip_polygon, map_quadrature, orient, triangle_contains, triangulate, Aabb, AabbTree,
    ConvexPolygon, Point, QuadRule, SimplexCell, Vector, SLIVER_TOLERANCE,
};
use crate::mesh::Mesh;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum CellKind {
    Active,
    Cut,
    Covered,
}

/// Piece of a background cell hidden by cell `cell` of part `part`.
#[derive(Clone, Debug)]
pub struct OverlapPiece {
    pub part: usize,
    pub cell: usize,
    pub triangle: [Point; 3],
}

#[derive(Clone, Debug, Default)]
pub struct CutCell {
    pub visible: Vec<[Point; 3]>,
    pub overlapped: Vec<OverlapPiece>,
}

impl CutCell {
    pub fn visible_area(&self) -> f64 {
        self.visible.iter().map(crate::geometry::triangle_area).sum()
    }

    pub fn overlapped_area(&self) -> f64 {
        self.overlapped.iter().map(|p| crate::geometry::triangle_area(&p.triangle)).sum()
    }
}

/// Piece of the boundary of an overlapping part lying inside exactly one
/// background cell and one cell of that part.
#[derive(Clone, Debug)]
pub struct InterfaceSegment {
    pub part: usize,
    pub points: [Point; 2],
    /// Unit normal pointing out of the overlapping part.
    pub normal: Vector,
    pub background_cell: usize,
    pub cell: usize,
}

impl InterfaceSegment {
    pub fn length(&self) -> f64 {
        (self.points[1] - self.points[0]).norm()
    }

    pub fn midpoint(&self) -> Point {
        nalgebra::center(&self.points[0], &self.points[1])
    }
}

#[derive(Clone, Debug)]
pub struct MultiMesh {
    parts: Vec<Mesh>,
    trees: Vec<AabbTree>,
    kinds: Vec<Vec<CellKind>>,
    cut: BTreeMap<usize, CutCell>,
    interface: Vec<Vec<InterfaceSegment>>,
    /// Per overlapping part and cell: area of the cell inside the background.
    background_cover: Vec<Vec<f64>>,
}

struct CellResult {
    kind: CellKind,
    cut: Option<CutCell>,
    overlaps: Vec<(usize, usize, f64)>,
}

fn cell_boxes(mesh: &Mesh) -> Vec<Aabb> {
    (0..mesh.num_cells())
        .map(|c| Aabb::from_points(&mesh.triangle(c)).expect("three points"))
        .collect()
}

impl MultiMesh {
    /// Build the hierarchy. `meshes[0]` is the background; later meshes must
    /// not intersect each other and must each overlap the background.
    pub fn build(meshes: Vec<Mesh>) -> Result<Self> {
        if meshes.is_empty() {
            return Err(Error::MultiMesh("a multimesh needs at least one mesh".into()));
        }
        for (i, m) in meshes.iter().enumerate() {
            if m.dim != 2 {
                return Err(Error::MultiMesh(format!("part {i} is not a 2D mesh")));
            }
            if m.num_cells() == 0 {
                return Err(Error::MultiMesh(format!("part {i} has no cells")));
            }
            if let Some(c) = (0..m.num_cells()).find(|&c| m.cell_area(c) <= 0.0) {
                return Err(Error::MultiMesh(format!("part {i} cell {c} is not positively oriented")));
            }
        }
        let boxes: Vec<Vec<Aabb>> = meshes.iter().map(cell_boxes).collect();
        let trees = boxes.iter().map(|b| AabbTree::build(b)).collect::<Result<Vec<_>>>()?;

        check_disjoint(&meshes, &trees)?;

        let bg = &meshes[0];
        let results: Vec<CellResult> = (0..bg.num_cells())
            .into_par_iter()
            .map(|c| classify_background_cell(&meshes, &trees, &boxes[0][c], bg.triangle(c)))
            .collect();

        let mut kinds = vec![results.iter().map(|r| r.kind).collect::<Vec<_>>()];
        let mut background_cover: Vec<Vec<f64>> = meshes.iter().map(|m| vec![0.0; m.num_cells()]).collect();
        let mut cut = BTreeMap::new();
        for (c, r) in results.into_iter().enumerate() {
            for (part, cell, area) in r.overlaps {
                background_cover[part][cell] += area;
            }
            if let Some(cc) = r.cut {
                cut.insert(c, cc);
            }
        }
        for (i, cover) in background_cover.iter().enumerate().skip(1) {
            if cover.iter().sum::<f64>() <= 0.0 {
                return Err(Error::MultiMesh(format!("overlapping mesh {i} does not intersect the background")));
            }
        }
        for m in &meshes[1..] {
            kinds.push(vec![CellKind::Active; m.num_cells()]);
        }
        let mut interface = vec![Vec::new()];
        for part in 1..meshes.len() {
            interface.push(build_interface(&meshes, &trees[0], part));
        }
        Ok(MultiMesh {
            parts: meshes,
            trees,
            kinds,
            cut,
            interface,
            background_cover,
        })
    }

    pub fn num_parts(&self) -> usize {
        self.parts.len()
    }

    pub fn part(&self, i: usize) -> &Mesh {
        &self.parts[i]
    }

    pub fn parts(&self) -> &[Mesh] {
        &self.parts
    }

    pub fn tree(&self, i: usize) -> &AabbTree {
        &self.trees[i]
    }

    pub fn kind(&self, part: usize, cell: usize) -> CellKind {
        self.kinds[part][cell]
    }

    pub fn kinds(&self, part: usize) -> &[CellKind] {
        &self.kinds[part]
    }

    /// Cut background cells with their pieces, in cell order.
    pub fn cut_cells(&self) -> impl Iterator<Item = (usize, &CutCell)> {
        self.cut.iter().map(|(&c, cc)| (c, cc))
    }

    pub fn cut_cell(&self, cell: usize) -> Option<&CutCell> {
        self.cut.get(&cell)
    }

    /// Triangles covering the visible part of a cell.
    pub fn visible_triangles(&self, part: usize, cell: usize) -> Vec<[Point; 3]> {
        match self.kinds[part][cell] {
            CellKind::Active => vec![self.parts[part].triangle(cell)],
            CellKind::Covered => Vec::new(),
            CellKind::Cut => self.cut[&cell].visible.clone(),
        }
    }

    /// Quadrature over the visible part of a cell, exact to `degree`.
    pub fn visible_quadrature(&self, part: usize, cell: usize, degree: usize) -> QuadRule {
        rule_on(&self.visible_triangles(part, cell), degree)
    }

    /// Quadrature over the overlapped part of a cut background cell, one rule
    /// per overlapping cell.
    pub fn overlapped_quadrature(&self, cell: usize, degree: usize) -> Vec<(usize, usize, QuadRule)> {
        let Some(cc) = self.cut.get(&cell) else {
            return Vec::new();
        };
        let mut grouped: BTreeMap<(usize, usize), Vec<[Point; 3]>> = BTreeMap::new();
        for piece in &cc.overlapped {
            grouped.entry((piece.part, piece.cell)).or_default().push(piece.triangle);
        }
        grouped
            .into_iter()
            .map(|((part, c), tris)| (part, c, rule_on(&tris, degree)))
            .collect()
    }

    /// Interface pieces on the boundary of overlapping part `part`.
    pub fn interface_segments(&self, part: usize) -> &[InterfaceSegment] {
        &self.interface[part]
    }

    pub fn all_interface_segments(&self) -> impl Iterator<Item = &InterfaceSegment> {
        self.interface.iter().flatten()
    }

    /// Gauss rule with `n` points on an interface segment.
    pub fn interface_quadrature(segment: &InterfaceSegment, n: usize) -> QuadRule {
        map_quadrature(&QuadRule::reference_segment(n), &SimplexCell::Segment(segment.points))
            .unwrap_or_default()
    }

    /// Area of cell `cell` of an overlapping part that lies inside the
    /// background domain.
    pub fn background_cover(&self, part: usize, cell: usize) -> f64 {
        self.background_cover[part][cell]
    }

    /// Topmost part and cell containing `p`.
    pub fn locate_point(&self, p: &Point) -> Option<(usize, usize)> {
        (0..self.parts.len()).rev().find_map(|part| self.locate_in_part(part, p).map(|c| (part, c)))
    }

    /// Cell of `part` containing `p`, ignoring the hierarchy.
    pub fn locate_in_part(&self, part: usize, p: &Point) -> Option<usize> {
        let mesh = &self.parts[part];
        self.trees[part]
            .query_point(p)
            .into_iter()
            .find(|&c| triangle_contains(&mesh.triangle(c), p, 1e-12))
    }

    /// Area of the region covered by the visible parts of all cells.
    pub fn visible_area(&self) -> f64 {
        (0..self.parts.len())
            .map(|part| {
                (0..self.parts[part].num_cells())
                    .map(|c| match self.kinds[part][c] {
                        CellKind::Active => self.parts[part].cell_area(c),
                        CellKind::Covered => 0.0,
                        CellKind::Cut => self.cut[&c].visible_area(),
                    })
                    .sum::<f64>()
            })
            .sum()
    }
}

fn rule_on(tris: &[[Point; 3]], degree: usize) -> QuadRule {
    let reference = QuadRule::reference_triangle(degree);
    let mut rule = QuadRule::default();
    for t in tris {
        if let Ok(r) = map_quadrature(&reference, &SimplexCell::Triangle(*t)) {
            rule.append(r);
        }
    }
    rule
}

fn check_disjoint(meshes: &[Mesh], trees: &[AabbTree]) -> Result<()> {
    for j in 2..meshes.len() {
        for i in 1..j {
            if !trees[i].bbox().intersects(&trees[j].bbox()) {
                continue;
            }
            for cj in 0..meshes[j].num_cells() {
                let tj = meshes[j].triangle(cj);
                let eps = SLIVER_TOLERANCE * bbox_diagonal_sq(&tj);
                let clipper = ConvexPolygon::from_triangle(&tj);
                let bb = Aabb::from_points(&tj).expect("three points");
                for ci in trees[i].query(&bb) {
                    let subject = ConvexPolygon::from_triangle(&meshes[i].triangle(ci));
                    if clip_polygon(&subject, &clipper).inside_area() > eps {
                        return Err(Error::MultiMesh(format!("overlapping meshes {i} and {j} intersect")));
                    }
                }
            }
        }
    }
    Ok(())
}

fn classify_background_cell(meshes: &[Mesh], trees: &[AabbTree], bbox: &Aabb, tri: [Point; 3]) -> CellResult {
    let eps = SLIVER_TOLERANCE * bbox_diagonal_sq(&tri);
    let mut visible = vec![ConvexPolygon::from_triangle(&tri)];
    let mut overlapped: Vec<(usize, usize, ConvexPolygon)> = Vec::new();
    for part in 1..meshes.len() {
        if !trees[part].bbox().intersects(bbox) {
            continue;
        }
        for cell in trees[part].query(bbox) {
            let clipper = ConvexPolygon::from_triangle(&meshes[part].triangle(cell));
            let mut next = Vec::with_capacity(visible.len());
            for piece in visible.drain(..) {
                let clipped = clip_polygon(&piece, &clipper);
                next.extend(clipped.outside);
                overlapped.extend(clipped.inside.into_iter().map(|p| (part, cell, p)));
            }
            visible = next;
        }
    }
    let overlaps: Vec<(usize, usize, f64)> = overlapped.iter().map(|(p, c, poly)| (*p, *c, poly.area())).collect();
    if overlapped.is_empty() {
        return CellResult {
            kind: CellKind::Active,
            cut: None,
            overlaps,
        };
    }
    let visible_area: f64 = visible.iter().map(ConvexPolygon::area).sum();
    if visible_area < eps {
        return CellResult {
            kind: CellKind::Covered,
            cut: None,
            overlaps,
        };
    }
    let mut cc = CutCell::default();
    for poly in &visible {
        cc.visible.extend(triangulate(poly).unwrap_or_default());
    }
    for (part, cell, poly) in &overlapped {
        for t in triangulate(poly).unwrap_or_default() {
            cc.overlapped.push(OverlapPiece {
                part: *part,
                cell: *cell,
                triangle: t,
            });
        }
    }
    CellResult {
        kind: CellKind::Cut,
        cut: Some(cc),
        overlaps,
    }
}

/// Parameters in (0, 1) where segment `a -> b` crosses the edges of `t`.
fn segment_breakpoints(a: &Point, b: &Point, t: &[Point; 3], out: &mut Vec<f64>) {
    let d = b - a;
    let len = d.norm();
    for k in 0..3 {
        let p = t[k];
        let q = t[(k + 1) % 3];
        let e = q - p;
        let denom = crate::geometry::cross(&d, &e);
        let scale = len * e.norm();
        if denom.abs() <= 1e-14 * scale {
            // parallel: collinear edges contribute their endpoints
            if orient(a, b, &p).abs() <= 1e-12 * len * len {
                for v in [p, q] {
                    out.push((v - a).dot(&d) / (len * len));
                }
            }
            continue;
        }
        let w = p - a;
        let t_seg = crate::geometry::cross(&w, &e) / denom;
        let s_edge = crate::geometry::cross(&w, &d) / denom;
        if (-1e-12..=1.0 + 1e-12).contains(&s_edge) {
            out.push(t_seg);
        }
    }
}

fn build_interface(meshes: &[Mesh], bg_tree: &AabbTree, part: usize) -> Vec<InterfaceSegment> {
    let mesh = &meshes[part];
    let bg = &meshes[0];
    let mut segments = Vec::new();
    for facet in mesh.boundary_facets() {
        let [a, b] = mesh.facet_points(facet);
        let normal = mesh.facet_normal(facet);
        let len = (b - a).norm();
        let bb = Aabb::from_points(&[a, b]).expect("two points");
        let candidates = bg_tree.query(&bb);
        let mut ts = vec![0.0, 1.0];
        for &c in &candidates {
            segment_breakpoints(&a, &b, &bg.triangle(c), &mut ts);
        }
        ts.retain(|t| (0.0..=1.0).contains(t));
        ts.sort_by(f64::total_cmp);
        ts.dedup_by(|x, y| (*x - *y).abs() <= 1e-12);
        let shift = 1e-8 * len;
        for w in ts.windows(2) {
            let (t0, t1) = (w[0], w[1]);
            if (t1 - t0) * len <= 1e-12 * len.max(1.0) {
                continue;
            }
            let mid = a + (b - a) * (0.5 * (t0 + t1));
            let probe = mid + normal * shift;
            let Some(&bc) = candidates
                .iter()
                .find(|&&c| triangle_contains(&bg.triangle(c), &probe, 0.0))
            else {
                continue;
            };
            segments.push(InterfaceSegment {
                part,
                points: [a + (b - a) * t0, a + (b - a) * t1],
                normal,
                background_cell: bc,
                cell: facet.0,
            });
        }
    }
    segments
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{generate_rect_mesh, RigidTransform2D};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn rect(x0: f64, y0: f64, x1: f64, y1: f64, n: usize) -> Mesh {
        generate_rect_mesh(&Aabb::new(Point::new(x0, y0), Point::new(x1, y1)), n, n, None).unwrap()
    }

    fn patch_setup() -> MultiMesh {
        MultiMesh::build(vec![rect(0.0, 0.0, 1.0, 1.0, 8), rect(0.25, 0.25, 0.75, 0.75, 4)]).unwrap()
    }

    #[test]
    fn single_mesh_is_all_active() {
        let mm = MultiMesh::build(vec![rect(0.0, 0.0, 1.0, 1.0, 3)]).unwrap();
        assert!(mm.kinds(0).iter().all(|&k| k == CellKind::Active));
        assert_eq!(mm.all_interface_segments().count(), 0);
    }

    #[test]
    fn aligned_patch_interface_length_and_area() {
        let mm = patch_setup();
        let length: f64 = mm.interface_segments(1).iter().map(InterfaceSegment::length).sum();
        assert!((length - 2.0).abs() < 1e-10, "{length}");
        let overlapped: f64 = mm.cut_cells().map(|(_, c)| c.overlapped_area()).sum::<f64>()
            + (0..mm.part(0).num_cells())
                .filter(|&c| mm.kind(0, c) == CellKind::Covered)
                .map(|c| mm.part(0).cell_area(c))
                .sum::<f64>();
        assert!((overlapped - 0.25).abs() < 1e-10, "{overlapped}");
    }

    #[test]
    fn normals_point_away_from_patch() {
        let mm = patch_setup();
        let center = Point::new(0.5, 0.5);
        for s in mm.interface_segments(1) {
            assert!((s.normal.norm() - 1.0).abs() < 1e-14);
            assert!(s.normal.x.abs() < 1e-14 || s.normal.y.abs() < 1e-14);
            assert!(s.normal.dot(&(s.midpoint() - center)) > 0.0);
            let tri = mm.part(0).triangle(s.background_cell);
            assert!(triangle_contains(&tri, &s.midpoint(), 1e-9));
        }
    }

    #[test]
    fn point_location_follows_hierarchy() {
        let mm = patch_setup();
        assert_eq!(mm.locate_point(&Point::new(0.5, 0.5)).map(|r| r.0), Some(1));
        assert_eq!(mm.locate_point(&Point::new(0.1, 0.9)).map(|r| r.0), Some(0));
        assert_eq!(mm.locate_point(&Point::new(1.5, 0.5)), None);
    }

    #[test]
    fn intersecting_overlaps_are_rejected() {
        let r = MultiMesh::build(vec![
            rect(0.0, 0.0, 1.0, 1.0, 4),
            rect(0.2, 0.2, 0.5, 0.5, 2),
            rect(0.4, 0.4, 0.7, 0.7, 2),
        ]);
        assert!(r.is_err());
        let r = MultiMesh::build(vec![rect(0.0, 0.0, 1.0, 1.0, 4), rect(2.0, 2.0, 3.0, 3.0, 2)]);
        assert!(r.is_err());
    }

    #[test]
    fn translation_sweep_invariants() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let bg = rect(0.0, 0.0, 1.0, 1.0, 8);
        let patch = rect(0.0, 0.0, 0.3, 0.3, 3);
        for _ in 0..50 {
            let t = RigidTransform2D::new(
                Vector::new(rng.random_range(0.12..0.55), rng.random_range(0.12..0.55)),
                rng.random_range(-0.3..0.3),
            );
            let moved = patch.transformed(&t);
            let patch_area = moved.total_area();
            let mm = MultiMesh::build(vec![bg.clone(), moved]).unwrap();
            let total = mm.visible_area();
            assert!((total - 1.0).abs() < 1e-9, "{total}");
            for (c, cc) in mm.cut_cells() {
                let a = mm.part(0).cell_area(c);
                assert!((cc.visible_area() + cc.overlapped_area() - a).abs() <= 1e-10 * a);
                let rule = mm.visible_quadrature(0, c, 4);
                assert!((rule.measure() - cc.visible_area()).abs() <= 1e-12);
            }
            let length: f64 = mm.interface_segments(1).iter().map(InterfaceSegment::length).sum();
            let perimeter = 4.0 * 0.3;
            assert!((length - perimeter).abs() < 1e-10, "{length}");
            let q: f64 = mm
                .interface_segments(1)
                .iter()
                .map(|s| MultiMesh::interface_quadrature(s, 3).measure())
                .sum();
            assert!((q - length).abs() < 1e-12);
            let cover: f64 = (0..mm.part(1).num_cells()).map(|c| mm.background_cover(1, c)).sum();
            assert!((cover - patch_area).abs() < 1e-10);
        }
    }

    #[test]
    fn random_points_match_brute_force() {
        let mm = MultiMesh::build(vec![rect(0.0, 0.0, 1.0, 1.0, 8), rect(0.31, 0.27, 0.63, 0.71, 3)]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..10_000 {
            let p = Point::new(rng.random_range(-0.1..1.1), rng.random_range(-0.1..1.1));
            let brute = (0..mm.num_parts()).rev().find_map(|part| {
                (0..mm.part(part).num_cells())
                    .find(|&c| triangle_contains(&mm.part(part).triangle(c), &p, 1e-12))
                    .map(|c| (part, c))
            });
            assert_eq!(mm.locate_point(&p), brute);
        }
    }
}
