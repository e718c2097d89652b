//! Software rasterizer for the view valuation.
//!
//! Triangles are projected through a pinhole camera, clipped against a near
//! plane, and filled by starting at the pixel holding the triangle's top
//! point and walking down row by row, widening left and right until the
//! pixels leave the triangle. Each pixel keeps the nearest surface by
//! Euclidean distance from the camera.

use nalgebra::{Point3, Vector3};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::view::{sigma, ViewWeights};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Category {
    Sky,
    Water,
    Ground,
    House,
}

impl Category {
    pub const ALL: [Category; 4] = [Category::Sky, Category::Water, Category::Ground, Category::House];

    pub fn name(self) -> &'static str {
        match self {
            Category::Sky => "sky",
            Category::Water => "water",
            Category::Ground => "ground",
            Category::House => "house",
        }
    }

    /// Palette of the category image.
    pub fn color(self) -> [u8; 3] {
        match self {
            Category::Sky => [170, 210, 255],
            Category::Water => [20, 70, 200],
            Category::Ground => [50, 160, 60],
            Category::House => [210, 40, 40],
        }
    }
}

/// Pinhole camera. The image plane sits at distance `d` along `direction`
/// and is `width × height` meters, sampled by `px_width × px_height`
/// pixels. Row 0 is the top of the image.
#[derive(Clone, Debug, PartialEq)]
pub struct Camera {
    pub position: Point3<f64>,
    pub direction: Vector3<f64>,
    pub up: Vector3<f64>,
    pub d: f64,
    pub width: f64,
    pub height: f64,
    pub px_width: usize,
    pub px_height: usize,
}

impl Camera {
    /// `up_hint` is orthogonalized against `direction`.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        position: Point3<f64>,
        direction: Vector3<f64>,
        up_hint: Vector3<f64>,
        d: f64,
        width: f64,
        height: f64,
        px_width: usize,
        px_height: usize,
    ) -> Result<Self> {
        let finite = position.iter().chain(direction.iter()).chain(up_hint.iter()).all(|v| v.is_finite());
        if !finite {
            return Err(Error::View("camera has non-finite coordinates".into()));
        }
        let direction = direction
            .try_normalize(1e-12)
            .ok_or_else(|| Error::View("camera direction is zero".into()))?;
        let up = (up_hint - direction * up_hint.dot(&direction))
            .try_normalize(1e-9)
            .ok_or_else(|| Error::View("camera up vector is parallel to its direction".into()))?;
        if !(d > 0.0 && width > 0.0 && height > 0.0) || !(d.is_finite() && width.is_finite() && height.is_finite()) {
            return Err(Error::View("camera distance and image size must be positive".into()));
        }
        if px_width == 0 || px_height == 0 {
            return Err(Error::View("image needs at least one pixel in each direction".into()));
        }
        Ok(Camera {
            position,
            direction,
            up,
            d,
            width,
            height,
            px_width,
            px_height,
        })
    }

    /// Camera with unit image distance, horizontal field of view `fov`
    /// (radians) and square pixels. Up is +z unless the camera looks
    /// straight up or down, in which case +y is used.
    pub fn with_fov(position: Point3<f64>, direction: Vector3<f64>, fov: f64, px_width: usize, px_height: usize) -> Result<Self> {
        if !(fov > 0.0 && fov < std::f64::consts::PI) {
            return Err(Error::View(format!("field of view must lie in (0, π), got {fov}")));
        }
        let width = 2.0 * (0.5 * fov).tan();
        let height = width * px_height.max(1) as f64 / px_width.max(1) as f64;
        let vertical = direction.cross(&Vector3::z()).norm() < 1e-9 * direction.norm();
        let hint = if vertical { Vector3::y() } else { Vector3::z() };
        Camera::new(position, direction, hint, 1.0, width, height, px_width, px_height)
    }

    /// Image-plane axis pointing right.
    pub fn right(&self) -> Vector3<f64> {
        self.direction.cross(&self.up)
    }

    /// Ray direction (not normalized) through the center of pixel `(row, col)`.
    pub fn pixel_ray(&self, row: usize, col: usize) -> Vector3<f64> {
        let u = self.width * ((col as f64 + 0.5) / self.px_width as f64 - 0.5);
        let v = self.height * (0.5 - (row as f64 + 0.5) / self.px_height as f64);
        self.direction * self.d + self.right() * u + self.up * v
    }

    fn to_pixel(&self, u: f64, v: f64) -> [f64; 2] {
        [
            (u / self.width + 0.5) * self.px_width as f64,
            (0.5 - v / self.height) * self.px_height as f64,
        ]
    }
}

/// Result of projecting a single point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Projection {
    /// Image-plane coordinates in meters from the image center (`u` right,
    /// `v` up) and Euclidean distance from the camera.
    Visible { u: f64, v: f64, depth: f64 },
    /// On or behind the camera plane.
    Behind,
}

pub fn project_vertex(cam: &Camera, x: &Point3<f64>) -> Projection {
    let rel = x - cam.position;
    let z = rel.dot(&cam.direction);
    if z <= 0.0 {
        return Projection::Behind;
    }
    Projection::Visible {
        u: cam.d * rel.dot(&cam.right()) / z,
        v: cam.d * rel.dot(&cam.up) / z,
        depth: rel.norm(),
    }
}

/// Triangles of a view scene with one category each.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Scene {
    pub triangles: Vec<[Point3<f64>; 3]>,
    pub categories: Vec<Category>,
}

impl Scene {
    pub fn push(&mut self, triangle: [Point3<f64>; 3], category: Category) {
        self.triangles.push(triangle);
        self.categories.push(category);
    }

    pub fn len(&self) -> usize {
        self.triangles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triangles.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        if self.triangles.len() != self.categories.len() {
            return Err(Error::View("every scene triangle needs a category".into()));
        }
        if self.categories.contains(&Category::Sky) {
            return Err(Error::View("sky is the absence of a hit, not a triangle category".into()));
        }
        if self.triangles.iter().flatten().flat_map(|p| p.iter()).any(|v| !v.is_finite()) {
            return Err(Error::View("scene contains non-finite vertices".into()));
        }
        Ok(())
    }
}

/// Per-pixel category, distance (m, +∞ for sky) and weight σ, row-major
/// with row 0 at the top.
#[derive(Clone, Debug, PartialEq)]
pub struct ViewBuffers {
    pub width: usize,
    pub height: usize,
    pub category: Vec<Category>,
    pub distance: Vec<f64>,
    pub sigma: Vec<f64>,
    /// Index of the winning triangle; `u32::MAX` for sky.
    pub owner: Vec<u32>,
}

impl ViewBuffers {
    pub fn new(width: usize, height: usize) -> Self {
        let n = width * height;
        ViewBuffers {
            width,
            height,
            category: vec![Category::Sky; n],
            distance: vec![f64::INFINITY; n],
            sigma: vec![1.0; n],
            owner: vec![u32::MAX; n],
        }
    }

    pub fn len(&self) -> usize {
        self.category.len()
    }

    pub fn is_empty(&self) -> bool {
        self.category.is_empty()
    }

    pub fn at(&self, row: usize, col: usize) -> usize {
        row * self.width + col
    }

    /// Recompute σ from category and distance.
    pub fn fill_sigma(&mut self, weights: &ViewWeights) -> Result<()> {
        for i in 0..self.len() {
            self.sigma[i] = sigma(self.category[i], self.distance[i] / 1000.0, weights)?;
        }
        Ok(())
    }
}

/// A triangle after projection: pixel-space vertices (x right, y down),
/// depth along the viewing axis, and positions relative to the camera.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ProjectedTriangle {
    pub pixels: [[f64; 2]; 3],
    pub axis_depth: [f64; 3],
    pub relative: [Vector3<f64>; 3],
}

impl ProjectedTriangle {
    fn signed_area(&self) -> f64 {
        let [a, b, c] = self.pixels;
        (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
    }

    /// Euclidean distance of the surface point seen through pixel-space
    /// point `p`, or `None` outside the triangle.
    fn distance_at(&self, p: [f64; 2], area: f64) -> Option<f64> {
        let mut b = [0.0; 3];
        for (i, bi) in b.iter_mut().enumerate() {
            let q = self.pixels[(i + 1) % 3];
            let r = self.pixels[(i + 2) % 3];
            *bi = ((r[0] - q[0]) * (p[1] - q[1]) - (r[1] - q[1]) * (p[0] - q[0])) / area;
            if *bi < 0.0 {
                return None;
            }
        }
        // perspective-correct weights recover the 3D hit point exactly
        let w: Vec<f64> = (0..3).map(|i| b[i] / self.axis_depth[i]).collect();
        let sum: f64 = w.iter().sum();
        let hit = (self.relative[0] * w[0] + self.relative[1] * w[1] + self.relative[2] * w[2]) / sum;
        Some(hit.norm())
    }
}

/// What a triangle writes into the pixels it wins.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Payload {
    pub category: Category,
    pub index: u32,
}

/// Mutable window of whole buffer rows `first_row..first_row + rows`.
struct Band<'a> {
    first_row: usize,
    width: usize,
    category: &'a mut [Category],
    distance: &'a mut [f64],
    owner: &'a mut [u32],
}

impl Band<'_> {
    fn rows(&self) -> usize {
        self.category.len() / self.width.max(1)
    }

    fn write(&mut self, row: usize, col: usize, dist: f64, payload: Payload) {
        let i = (row - self.first_row) * self.width + col;
        let (d, o) = (self.distance[i], self.owner[i]);
        // strict depth test; exact ties go to the lower triangle index
        if dist < d || (dist == d && payload.index < o) {
            self.distance[i] = dist;
            self.owner[i] = payload.index;
            self.category[i] = payload.category;
        }
    }
}

/// Inclusive pixel index range whose centers may fall in `[lo, hi]`.
fn center_range(lo: f64, hi: f64, n: usize) -> Option<(usize, usize)> {
    let first = (lo - 0.5).ceil().max(0.0);
    let last = (hi - 0.5).floor().min(n as f64 - 1.0);
    (first <= last).then_some((first as usize, last as usize))
}

fn fill_band(tri: &ProjectedTriangle, payload: Payload, band: &mut Band) {
    let area = tri.signed_area();
    if area == 0.0 || !area.is_finite() {
        return;
    }
    let xs = tri.pixels.map(|p| p[0]);
    let ys = tri.pixels.map(|p| p[1]);
    let min = |v: [f64; 3]| v.iter().copied().fold(f64::INFINITY, f64::min);
    let max = |v: [f64; 3]| v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let Some((c0, c1)) = center_range(min(xs), max(xs), band.width) else { return };
    let Some((r0, r1)) = center_range(min(ys), max(ys), band.first_row + band.rows()) else { return };
    let r0_band = r0.max(band.first_row);
    if r0_band > r1 {
        return;
    }
    let center = |r: usize, c: usize| [c as f64 + 0.5, r as f64 + 0.5];

    if c1 - c0 < 2 || r1 - r0 < 2 {
        // small triangles: test the whole bounding box
        for r in r0_band..=r1 {
            for c in c0..=c1 {
                if let Some(dist) = tri.distance_at(center(r, c), area) {
                    band.write(r, c, dist, payload);
                }
            }
        }
        return;
    }

    // top point, leftmost on ties
    let top = (0..3)
        .min_by(|&a, &b| ys[a].total_cmp(&ys[b]).then(xs[a].total_cmp(&xs[b])))
        .unwrap();
    // a band below the top point starts its walk from the top point's column
    let mut start = (xs[top].floor().max(c0 as f64) as usize).min(c1);
    for r in r0_band..=r1 {
        let inside = |c: usize| tri.distance_at(center(r, c), area);
        // the covered columns of a row are contiguous; find one of them
        let mut seed = None;
        for k in 0..=(c1 - c0) {
            let candidates = [start.checked_sub(k).filter(|&c| c >= c0), Some(start + k).filter(|&c| c <= c1)];
            if let Some(hit) = candidates.into_iter().flatten().find(|&c| inside(c).is_some()) {
                seed = Some(hit);
                break;
            }
        }
        let Some(seed) = seed else { continue };
        let mut left = seed;
        while left > c0 && inside(left - 1).is_some() {
            left -= 1;
        }
        let mut right = seed;
        while right < c1 && inside(right + 1).is_some() {
            right += 1;
        }
        for c in left..=right {
            if let Some(dist) = inside(c) {
                band.write(r, c, dist, payload);
            }
        }
        start = (left + right) / 2;
    }
}

/// Fill the pixels whose centers lie inside `tri`.
pub fn fill_triangle(tri: &ProjectedTriangle, payload: Payload, buffers: &mut ViewBuffers) {
    let mut band = Band {
        first_row: 0,
        width: buffers.width,
        category: &mut buffers.category,
        distance: &mut buffers.distance,
        owner: &mut buffers.owner,
    };
    fill_band(tri, payload, &mut band);
}

/// Clip a camera-relative polygon to `axis depth ≥ near`.
fn clip_near(poly: &[Vector3<f64>], dir: &Vector3<f64>, near: f64) -> Vec<Vector3<f64>> {
    let mut out = Vec::with_capacity(poly.len() + 1);
    for i in 0..poly.len() {
        let (a, b) = (poly[i], poly[(i + 1) % poly.len()]);
        let (da, db) = (a.dot(dir) - near, b.dot(dir) - near);
        if da >= 0.0 {
            out.push(a);
        }
        if (da >= 0.0) != (db >= 0.0) {
            out.push(a + (b - a) * (da / (da - db)));
        }
    }
    out
}

/// Near-plane clipped projections of a world triangle.
pub fn project_triangle(cam: &Camera, tri: &[Point3<f64>; 3]) -> Vec<ProjectedTriangle> {
    let near = cam.d * 1e-3;
    let rel = tri.map(|p| p - cam.position);
    let poly = clip_near(&rel, &cam.direction, near);
    if poly.len() < 3 {
        return Vec::new();
    }
    let right = cam.right();
    let project = |r: &Vector3<f64>| {
        let z = r.dot(&cam.direction);
        cam.to_pixel(cam.d * r.dot(&right) / z, cam.d * r.dot(&cam.up) / z)
    };
    (1..poly.len() - 1)
        .map(|k| {
            let verts = [poly[0], poly[k], poly[k + 1]];
            ProjectedTriangle {
                pixels: verts.map(|r| project(&r)),
                axis_depth: verts.map(|r| r.dot(&cam.direction)),
                relative: verts,
            }
        })
        .collect()
}

const BAND_ROWS: usize = 16;

/// Rasterize every triangle of `scene` and fill σ with `weights`.
pub fn rasterize_scene(scene: &Scene, cam: &Camera, weights: &ViewWeights) -> Result<ViewBuffers> {
    scene.validate()?;
    weights.validate()?;
    let projected: Vec<(ProjectedTriangle, Payload)> = scene
        .triangles
        .par_iter()
        .zip(&scene.categories)
        .enumerate()
        .flat_map_iter(|(i, (tri, &category))| {
            let payload = Payload {
                category,
                index: i as u32,
            };
            project_triangle(cam, tri).into_iter().map(move |p| (p, payload))
        })
        .collect();

    let mut buf = ViewBuffers::new(cam.px_width, cam.px_height);
    let width = buf.width;
    let chunk = BAND_ROWS * width;
    buf.category
        .par_chunks_mut(chunk)
        .zip(buf.distance.par_chunks_mut(chunk))
        .zip(buf.owner.par_chunks_mut(chunk))
        .enumerate()
        .for_each(|(b, ((category, distance), owner))| {
            let mut band = Band {
                first_row: b * BAND_ROWS,
                width,
                category,
                distance,
                owner,
            };
            let (top, bottom) = (band.first_row as f64, (band.first_row + band.rows()) as f64);
            for (tri, payload) in &projected {
                let ys = tri.pixels.map(|p| p[1]);
                let lo = ys.iter().copied().fold(f64::INFINITY, f64::min);
                let hi = ys.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                if hi >= top && lo <= bottom {
                    fill_band(tri, *payload, &mut band);
                }
            }
        });
    buf.fill_sigma(weights)?;
    Ok(buf)
}

fn ppm(width: usize, height: usize, pixels: impl Iterator<Item = [u8; 3]>) -> Vec<u8> {
    let mut out = format!("P6\n{width} {height}\n255\n").into_bytes();
    for px in pixels {
        out.extend_from_slice(&px);
    }
    out
}

/// Binary PPM of the category buffer.
pub fn category_ppm(buf: &ViewBuffers) -> Vec<u8> {
    ppm(buf.width, buf.height, buf.category.iter().map(|c| c.color()))
}

/// Binary PPM with σ as gray level.
pub fn sigma_ppm(buf: &ViewBuffers) -> Vec<u8> {
    ppm(
        buf.width,
        buf.height,
        buf.sigma.iter().map(|s| {
            let g = (s.clamp(0.0, 1.0) * 255.0).round() as u8;
            [g, g, g]
        }),
    )
}
