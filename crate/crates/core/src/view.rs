//! View valuation: per-pixel weights, single-image value and the
//! direction-weighted 360° estimate.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use nalgebra::{Point3, Vector3};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::raster::{rasterize_scene, Camera, Category, Scene, ViewBuffers};
use crate::{Error, Result};

/// Weights of the distance sigmoid. Water and sky always weigh 1.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ViewWeights {
    pub w_house: f64,
    pub w_ground: f64,
    /// Distance scale in kilometers.
    pub l_km: f64,
}

impl Default for ViewWeights {
    fn default() -> Self {
        ViewWeights {
            w_house: 0.1,
            w_ground: 0.7,
            l_km: 0.17,
        }
    }
}

impl ViewWeights {
    pub fn validate(&self) -> Result<()> {
        let ok = |v: f64| v > 0.0 && v.is_finite();
        if !(ok(self.w_house) && ok(self.w_ground) && ok(self.l_km)) {
            return Err(Error::View(format!("view weights must be positive: {self:?}")));
        }
        Ok(())
    }
}

pub fn sigmoid(t: f64) -> f64 {
    1.0 / (1.0 + (-t).exp())
}

/// Weight of a pixel showing `category` at distance `l_km`.
pub fn sigma(category: Category, l_km: f64, w: &ViewWeights) -> Result<f64> {
    let scaled = |weight: f64| -> Result<f64> {
        if !(l_km >= 0.0) {
            return Err(Error::View(format!("distance must be non-negative, got {l_km}")));
        }
        if l_km.is_infinite() {
            return Ok(1.0);
        }
        Ok(2.0 * sigmoid(weight * l_km / w.l_km) - 1.0)
    };
    match category {
        Category::Water | Category::Sky => Ok(1.0),
        Category::House => scaled(w.w_house),
        Category::Ground => scaled(w.w_ground),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ViewResult {
    #[serde(rename = "V")]
    pub v: f64,
    /// Share of pixels per category name.
    pub fractions: BTreeMap<String, f64>,
    pub width: usize,
    pub height: usize,
}

fn fractions(buf: &ViewBuffers) -> BTreeMap<String, f64> {
    let n = buf.len() as f64;
    Category::ALL
        .iter()
        .map(|&c| (c.name().to_string(), buf.category.iter().filter(|&&x| x == c).count() as f64 / n))
        .collect()
}

/// Mean of the σ buffer.
pub fn view_value(buf: &ViewBuffers) -> Result<ViewResult> {
    if buf.is_empty() {
        return Err(Error::View("cannot value an empty image".into()));
    }
    let v = buf.sigma.iter().sum::<f64>() / buf.len() as f64;
    Ok(ViewResult {
        v,
        fractions: fractions(buf),
        width: buf.width,
        height: buf.height,
    })
}

/// Rasterize and value a single image.
pub fn evaluate_view(scene: &Scene, cam: &Camera, w: &ViewWeights) -> Result<(ViewResult, ViewBuffers)> {
    let buf = rasterize_scene(scene, cam, w)?;
    Ok((view_value(&buf)?, buf))
}

/// Cardinal direction weight, θ measured from south: 1.5 looking south,
/// 0.5 looking north. Written as 1 + ½ sin(θ − 3π/2) = 1 + ½ cos θ; the
/// cosine form keeps D(0) and D(π) exact in floating point.
pub fn direction_weight(theta: f64) -> f64 {
    1.0 + 0.5 * theta.cos()
}

/// Horizontal unit vector of viewing angle θ (0 = south, π/2 = east).
pub fn direction(theta: f64) -> Vector3<f64> {
    Vector3::new(theta.sin(), -theta.cos(), 0.0)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct View360Config {
    /// Number of images around the horizon.
    pub n: usize,
    /// Camera-to-image distance (m).
    pub d: f64,
    /// Pixel columns per image; rows follow from square pixels.
    pub px_width: usize,
    /// Half the vertical field of view (radians).
    pub half_vertical: f64,
    pub weights: ViewWeights,
}

impl Default for View360Config {
    fn default() -> Self {
        View360Config {
            n: 32,
            d: 1.0,
            px_width: 32,
            half_vertical: PI / 6.0,
            weights: ViewWeights::default(),
        }
    }
}

impl View360Config {
    pub fn validate(&self) -> Result<()> {
        if self.n < 3 {
            return Err(Error::View("n must be ≥ 3".into()));
        }
        if !(self.d > 0.0 && self.d.is_finite()) {
            return Err(Error::View(format!("image distance must be positive, got {}", self.d)));
        }
        if self.px_width == 0 {
            return Err(Error::View("images need at least one pixel column".into()));
        }
        if !(self.half_vertical > 0.0 && self.half_vertical < 0.5 * PI) {
            return Err(Error::View("vertical half angle must lie in (0, π/2)".into()));
        }
        self.weights.validate()
    }

    /// Camera of image `i` at `point`. Adjacent images share edges, so the
    /// image planes form a regular N-gon around the point.
    pub fn camera(&self, point: Point3<f64>, i: usize) -> Result<Camera> {
        let theta = 2.0 * PI * i as f64 / self.n as f64;
        let width = 2.0 * self.d * (PI / self.n as f64).tan();
        let height = 2.0 * self.d * self.half_vertical.tan();
        let px_height = ((self.px_width as f64 * height / width).round() as usize).max(1);
        Camera::new(point, direction(theta), Vector3::z(), self.d, width, height, self.px_width, px_height)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DirectionalView {
    pub theta: f64,
    #[serde(rename = "V")]
    pub v: f64,
    pub weight: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct View360Result {
    #[serde(rename = "V360")]
    pub v360: f64,
    pub images: Vec<DirectionalView>,
}

/// Direction-weighted mean of N image values around `point`.
pub fn view_360(scene: &Scene, point: Point3<f64>, cfg: &View360Config) -> Result<(View360Result, Vec<ViewBuffers>)> {
    cfg.validate()?;
    let results: Vec<(DirectionalView, ViewBuffers)> = (0..cfg.n)
        .into_par_iter()
        .map(|i| {
            let cam = cfg.camera(point, i)?;
            let (res, buf) = evaluate_view(scene, &cam, &cfg.weights)?;
            let theta = 2.0 * PI * i as f64 / cfg.n as f64;
            Ok((
                DirectionalView {
                    theta,
                    v: res.v,
                    weight: direction_weight(theta),
                },
                buf,
            ))
        })
        .collect::<Result<_>>()?;
    let n = cfg.n as f64;
    let v360 = results.iter().map(|(d, _)| d.weight * d.v).sum::<f64>() / n;
    let (images, buffers) = results.into_iter().unzip();
    Ok((View360Result { v360, images }, buffers))
}
