//! Layout data model shared by the flow and view pipelines.
//!
//! A scenario is a terrain, a list of house placements, named cameras and
//! an optional flow transect. Both the 3D view scene and the 2D flow domain
//! are derived from the same placement records.

mod flow;
mod house;
mod terrain;

pub use flow::{build_flow_domain, trace_streamlines, FlowDomain, FlowHouse, StopReason, Streamline};
pub use house::{footprints_overlap, HouseGeometry};
pub use terrain::Terrain;

use std::collections::BTreeSet;
use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use nalgebra::{Point3, Vector3};
use serde::{Deserialize, Serialize};

use crate::raster::{Camera, Category, Scene};
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub terrain: TerrainSpec,
    #[serde(default)]
    pub houses: Vec<House>,
    #[serde(default)]
    pub cameras: Vec<CameraSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub flow: Option<FlowSpec>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", deny_unknown_fields)]
pub enum TerrainSpec {
    Grid(GridSpec),
    Stl(StlSpec),
}

/// Heightfield sampled at `origin + (i dx, j dy)`; `heights[j][i]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub origin: [f64; 2],
    pub dx: f64,
    pub dy: f64,
    pub heights: Vec<Vec<f64>>,
}

/// Imported surface. `water_tags` are the indices of the STL facets that
/// show water; every other facet is ground.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StlSpec {
    pub path: PathBuf,
    #[serde(default)]
    pub water_tags: Vec<usize>,
}

/// Gabled house. The footprint is `width` along the local x axis and
/// `depth` along local y, rotated counterclockwise by `rotation`; the ridge
/// runs along local y. Heights are measured from the lowest terrain point
/// under the footprint.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct House {
    pub id: String,
    pub x: f64,
    pub y: f64,
    #[serde(default)]
    pub rotation: f64,
    pub width: f64,
    pub depth: f64,
    pub wall_height: f64,
    pub ridge_height: f64,
}

fn default_fov() -> f64 {
    PI / 3.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CameraSpec {
    pub name: String,
    pub position: [f64; 3],
    pub direction: [f64; 3],
    /// Horizontal field of view.
    #[serde(default = "default_fov")]
    pub fov: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub up: Option<[f64; 3]>,
}

impl CameraSpec {
    pub fn camera(&self, px_width: usize, px_height: usize) -> Result<Camera> {
        let position = Point3::from(self.position);
        let direction = Vector3::from(self.direction);
        match self.up {
            None => Camera::with_fov(position, direction, self.fov, px_width, px_height),
            Some(up) => {
                if !(self.fov > 0.0 && self.fov < PI) {
                    return Err(Error::View(format!("field of view must lie in (0, π), got {}", self.fov)));
                }
                let width = 2.0 * (0.5 * self.fov).tan();
                let height = width * px_height.max(1) as f64 / px_width.max(1) as f64;
                Camera::new(position, direction, Vector3::from(up), 1.0, width, height, px_width, px_height)
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlowSpec {
    /// Plan-view segment the vertical flow plane follows.
    pub transect: [[f64; 2]; 2],
    /// Clearance between the highest terrain point on the transect and the
    /// channel top.
    pub height: f64,
    pub inflow: Inflow,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase", deny_unknown_fields)]
pub enum Inflow {
    /// `4 u_max ξ (1 − ξ)` across the inlet, ξ the relative height.
    Parabolic { u_max: f64 },
}

impl Inflow {
    pub fn u_max(&self) -> f64 {
        match *self {
            Inflow::Parabolic { u_max } => u_max,
        }
    }
}

fn positive(v: f64) -> bool {
    v > 0.0 && v.is_finite()
}

impl Scenario {
    pub fn from_json(text: &str) -> Result<Self> {
        let s: Scenario = serde_json::from_str(text)?;
        s.validate()?;
        Ok(s)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serializes")
    }

    pub fn terrain(&self) -> Result<Terrain> {
        match &self.terrain {
            TerrainSpec::Grid(g) => Terrain::from_grid(g),
            TerrainSpec::Stl(s) => Terrain::from_stl(s),
        }
    }

    pub fn house(&self, id: &str) -> Option<&House> {
        self.houses.iter().find(|h| h.id == id)
    }

    pub fn camera(&self, name: &str) -> Option<&CameraSpec> {
        self.cameras.iter().find(|c| c.name == name)
    }

    /// Check every scenario invariant.
    pub fn validate(&self) -> Result<()> {
        let terrain = self.terrain()?;
        self.validate_with(&terrain)
    }

    pub fn validate_with(&self, terrain: &Terrain) -> Result<()> {
        let mut ids = BTreeSet::new();
        for h in &self.houses {
            if h.id.is_empty() {
                return Err(Error::Validation("house ids must not be empty".into()));
            }
            if !ids.insert(h.id.as_str()) {
                return Err(Error::Validation(format!("duplicate house id {:?}", h.id)));
            }
            let finite = [h.x, h.y, h.rotation].iter().all(|v| v.is_finite());
            if !finite || !positive(h.width) || !positive(h.depth) || !positive(h.wall_height) {
                return Err(Error::Validation(format!("house {} needs finite placement and positive size", h.id)));
            }
            if !(h.ridge_height >= h.wall_height && h.ridge_height.is_finite()) {
                return Err(Error::Validation(format!("house {} has its ridge below the walls", h.id)));
            }
            if terrain.category_at(h.x, h.y) != Some(Category::Ground) {
                return Err(Error::Validation(format!("house {} is not over ground", h.id)));
            }
        }
        for (i, a) in self.houses.iter().enumerate() {
            for b in &self.houses[i + 1..] {
                if footprints_overlap(a, b) {
                    return Err(Error::Overlap {
                        first: a.id.clone(),
                        second: b.id.clone(),
                    });
                }
            }
        }
        let mut names = BTreeSet::new();
        for c in &self.cameras {
            if !names.insert(c.name.as_str()) {
                return Err(Error::Validation(format!("duplicate camera name {:?}", c.name)));
            }
            c.camera(4, 4)
                .map_err(|e| Error::Validation(format!("camera {}: {e}", c.name)))?;
        }
        if let Some(f) = &self.flow {
            let [a, b] = f.transect;
            if a.iter().chain(&b).any(|v| !v.is_finite()) || a == b {
                return Err(Error::Validation("transect needs two distinct finite endpoints".into()));
            }
            for p in [a, b] {
                if terrain.elevation(p[0], p[1]).is_none() {
                    return Err(Error::Validation(format!("transect endpoint ({}, {}) is off the terrain", p[0], p[1])));
                }
            }
            if !positive(f.height) {
                return Err(Error::Validation("channel height must be positive".into()));
            }
            if !positive(f.inflow.u_max()) {
                return Err(Error::Validation("inflow speed must be positive".into()));
            }
        }
        Ok(())
    }
}

/// Read and validate a scenario file. A relative STL path is resolved
/// against the scenario's directory.
pub fn load_scenario(path: impl AsRef<Path>) -> Result<Scenario> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)?;
    let mut s: Scenario = serde_json::from_str(&text).map_err(|e| Error::Parse {
        path: path.to_path_buf(),
        line: e.line(),
        msg: e.to_string(),
    })?;
    if let TerrainSpec::Stl(stl) = &mut s.terrain {
        if stl.path.is_relative() {
            if let Some(dir) = path.parent() {
                stl.path = dir.join(&stl.path);
            }
        }
    }
    s.validate()?;
    Ok(s)
}

pub fn save_scenario(s: &Scenario, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, s.to_json() + "\n")?;
    Ok(())
}

/// Terrain triangles first, then 16 triangles per house.
pub fn build_view_scene(s: &Scenario) -> Result<Scene> {
    let terrain = s.terrain()?;
    let mut scene = Scene::default();
    for (t, &c) in terrain.triangles().iter().zip(terrain.categories()) {
        scene.push(*t, c);
    }
    for h in &s.houses {
        let g = HouseGeometry::new(h, &terrain)?;
        for t in g.triangles() {
            scene.push(t, Category::House);
        }
    }
    Ok(scene)
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn flat(value: f64) -> TerrainSpec {
        TerrainSpec::Grid(GridSpec {
            origin: [0.0, 0.0],
            dx: 10.0,
            dy: 10.0,
            heights: vec![vec![value; 11]; 11],
        })
    }

    fn house(id: &str, x: f64, y: f64) -> House {
        House {
            id: id.into(),
            x,
            y,
            rotation: 0.0,
            width: 10.0,
            depth: 8.0,
            wall_height: 3.0,
            ridge_height: 6.0,
        }
    }

    fn minimal() -> Scenario {
        Scenario {
            terrain: flat(2.0),
            houses: vec![house("a", 50.0, 50.0)],
            cameras: vec![CameraSpec {
                name: "c".into(),
                position: [20.0, 50.0, 1.7],
                direction: [1.0, 0.0, 0.0],
                fov: default_fov(),
                up: None,
            }],
            flow: None,
        }
    }

    #[test]
    fn minimal_scenario_is_valid() {
        minimal().validate().unwrap();
    }

    #[test]
    fn coincident_houses_name_both_ids() {
        let mut s = minimal();
        s.houses.push(house("b", 50.0, 50.0));
        let err = s.validate().unwrap_err();
        assert!(matches!(&err, Error::Overlap { first, second } if first == "a" && second == "b"));
    }

    #[test]
    fn house_over_water_is_rejected() {
        let mut s = minimal();
        s.terrain = flat(-1.0);
        assert!(s.validate().unwrap_err().to_string().contains("not over ground"));
        let mut s = minimal();
        s.houses[0].x = 500.0;
        assert!(s.validate().is_err());
    }

    #[test]
    fn json_round_trip() {
        let mut s = minimal();
        s.flow = Some(FlowSpec {
            transect: [[5.0, 50.0], [95.0, 50.0]],
            height: 20.0,
            inflow: Inflow::Parabolic { u_max: 1.0 },
        });
        let text = s.to_json();
        assert!(text.contains("\"type\": \"parabolic\""));
        assert_eq!(Scenario::from_json(&text).unwrap(), s);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let text = minimal().to_json().replacen("\"houses\"", "\"hoses\"", 1);
        assert!(Scenario::from_json(&text).is_err());
    }

    #[test]
    fn scene_counts() {
        let s = minimal();
        let scene = build_view_scene(&s).unwrap();
        assert_eq!(scene.len(), 200 + 16);
        assert_eq!(scene.categories.iter().filter(|&&c| c == Category::House).count(), 16);
    }
}
