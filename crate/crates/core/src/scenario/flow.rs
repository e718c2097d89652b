//! The 2D flow problem on a vertical transect through the layout.

use serde::{Deserialize, Serialize};

use super::{HouseGeometry, Scenario};
use crate::fem::{evaluate_on, mark_house_noslip_facets, solve_stokes, Boundary, DirichletBC, StokesParams, StokesSolution, TaylorHoodSpace};
use crate::geometry::{Aabb, Point, Vector};
use crate::mesh::{generate_mapped_mesh, generate_rect_mesh, tags, Mesh, Profile};
use crate::multimesh::MultiMesh;
use crate::{Error, Result};

/// A house crossing the transect, in transect coordinates (s along the
/// transect, y vertical).
#[derive(Clone, Debug, PartialEq)]
pub struct FlowHouse {
    pub id: String,
    /// Multimesh part holding the house mesh.
    pub part: usize,
    pub s0: f64,
    pub s1: f64,
    /// Outline of the house body, counterclockwise.
    pub polygon: Vec<Point>,
}

impl FlowHouse {
    /// Strict point-in-polygon test by crossing number.
    pub fn contains(&self, p: &Point) -> bool {
        let poly = &self.polygon;
        let mut inside = false;
        for i in 0..poly.len() {
            let (a, b) = (poly[i], poly[(i + 1) % poly.len()]);
            if (a.y > p.y) != (b.y > p.y) {
                let x = a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y);
                if p.x < x {
                    inside = !inside;
                }
            }
        }
        inside
    }
}

/// Background channel plus one mesh per house crossing the transect.
#[derive(Clone, Debug)]
pub struct FlowDomain {
    /// Background first.
    pub meshes: Vec<Mesh>,
    pub houses: Vec<FlowHouse>,
    pub length: f64,
    pub bottom: Profile,
    pub top: f64,
    pub u_max: f64,
    pub h: f64,
}

/// Columns splitting each interval between `breaks` into pieces no longer
/// than `step`.
fn subdivide(breaks: &[f64], step: f64) -> Vec<f64> {
    let mut out = vec![breaks[0]];
    for w in breaks.windows(2) {
        let len = w[1] - w[0];
        if len <= 0.0 {
            continue;
        }
        let n = (len / step).ceil().max(1.0) as usize;
        out.extend((1..=n).map(|k| if k == n { w[1] } else { w[0] + len * k as f64 / n as f64 }));
    }
    out
}

fn graded(from: f64, to: f64, n: usize) -> impl Iterator<Item = f64> {
    (0..n).map(move |k| from + (to - from) * k as f64 / n as f64)
}

struct Crossing {
    geom: HouseGeometry,
    s0: f64,
    s1: f64,
}

/// Build the background channel and the house meshes for resolution `h`.
///
/// The channel runs along the transect from the inlet (s = 0) to the outlet,
/// its bottom follows the terrain and its top lies `height` above the
/// highest terrain point on the transect. House meshes are twice as fine as
/// the background and reach below the terrain by the sink depth.
pub fn build_flow_domain(s: &Scenario, h: f64) -> Result<FlowDomain> {
    let flow = s
        .flow
        .as_ref()
        .ok_or_else(|| Error::Validation("scenario has no flow transect".into()))?;
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::Validation(format!("resolution must be positive, got {h}")));
    }
    let terrain = s.terrain()?;
    let a = Point::new(flow.transect[0][0], flow.transect[0][1]);
    let b = Point::new(flow.transect[1][0], flow.transect[1][1]);
    let length = (b - a).norm();
    let dir = (b - a) / length;
    let nx = ((length / h).ceil() as usize).max(2);
    let stations = (0..=nx)
        .map(|i| {
            let s = length * i as f64 / nx as f64;
            let p = a + dir * s;
            terrain
                .elevation(p.x, p.y)
                .map(|z| (s, z))
                .ok_or_else(|| Error::Validation(format!("transect leaves the terrain at ({:.3}, {:.3})", p.x, p.y)))
        })
        .collect::<Result<Vec<_>>>()?;
    let bottom = Profile::new(stations)?;
    let top = bottom.max() + flow.height;
    let ny = (((top - bottom.min()) / h).ceil() as usize).max(2);
    let background = generate_rect_mesh(
        &Aabb::new(Point::new(0.0, bottom.min()), Point::new(length, top)),
        nx,
        ny,
        Some(&bottom),
    )?;

    let mut crossings = Vec::new();
    for house in &s.houses {
        let geom = HouseGeometry::new(house, &terrain)?;
        if let Some((s0, s1)) = geom.chord(&a, &b) {
            if s0 <= 0.0 || s1 >= length {
                return Err(Error::Validation(format!("house {} crosses an end of the transect", house.id)));
            }
            crossings.push(Crossing { geom, s0, s1 });
        }
    }
    crossings.sort_by(|x, y| x.s0.total_cmp(&y.s0));

    let mut meshes = vec![background];
    let mut houses = Vec::new();
    for (i, c) in crossings.iter().enumerate() {
        let gap_left = if i == 0 { c.s0 } else { c.s0 - crossings[i - 1].s1 };
        let gap_right = if i + 1 == crossings.len() { length - c.s1 } else { crossings[i + 1].s0 - c.s1 };
        let (mesh, house) = house_mesh(c, &a, &b, &bottom, top, h, gap_left, gap_right, meshes.len())?;
        meshes.push(mesh);
        houses.push(house);
    }
    Ok(FlowDomain {
        meshes,
        houses,
        length,
        bottom,
        top,
        u_max: flow.inflow.u_max(),
        h,
    })
}

#[allow(clippy::too_many_arguments)]
fn house_mesh(
    c: &Crossing,
    a: &Point,
    b: &Point,
    bottom: &Profile,
    top: f64,
    h: f64,
    gap_left: f64,
    gap_right: f64,
    part: usize,
) -> Result<(Mesh, FlowHouse)> {
    let g = &c.geom;
    let id = &g.house.id;
    let hh = 0.5 * h;
    let roof = |s: f64| g.reference + g.house.roof_at(g.local_x_along(a, b, s.clamp(c.s0, c.s1)));

    // the roof kinks where the transect passes under the ridge
    let (lx0, lx1) = (g.local_x_along(a, b, c.s0), g.local_x_along(a, b, c.s1));
    let kink = (lx0 * lx1 < 0.0).then(|| c.s0 + (c.s1 - c.s0) * lx0 / (lx0 - lx1));

    let mut outline = vec![Point::new(c.s0, g.base), Point::new(c.s1, g.base), Point::new(c.s1, roof(c.s1))];
    outline.extend(kink.map(|k| Point::new(k, roof(k))));
    outline.push(Point::new(c.s0, roof(c.s0)));
    let max_roof = outline.iter().map(|p| p.y).fold(f64::NEG_INFINITY, f64::max);
    if max_roof >= top {
        return Err(Error::Validation(format!(
            "house {id} reaches {max_roof:.3} m, above the channel top at {top:.3} m"
        )));
    }

    let margin = (2.0 * hh).max(0.25 * (c.s1 - c.s0).max(g.house.ridge_height));
    let (ml, mr) = (margin.min(0.45 * gap_left), margin.min(0.45 * gap_right));
    let box_top = max_roof + margin.min(0.5 * (top - max_roof));

    let mut breaks = vec![c.s0 - ml, c.s0];
    breaks.extend(kink);
    breaks.extend([c.s1, c.s1 + mr]);
    let columns = subdivide(&breaks, hh);

    // the body must close the channel bottom under it
    for s in columns.iter().copied().filter(|&s| s >= c.s0 && s <= c.s1) {
        if g.base >= bottom.eval(s) {
            return Err(Error::Validation(format!(
                "house {id} does not reach below the terrain at s = {s:.3}; the terrain is too steep for the sink depth"
            )));
        }
    }

    let roofline: Vec<f64> = columns.iter().map(|&s| roof(s)).collect();
    let min_roof = roofline.iter().copied().fold(f64::INFINITY, f64::min);
    let below = (((max_roof - g.base) / hh).ceil() as usize).max(2);
    let above = (((box_top - min_roof) / hh).ceil() as usize).max(2);
    let levels: Vec<Vec<f64>> = roofline
        .iter()
        .map(|&r| graded(g.base, r, below).chain(graded(r, box_top, above)).chain([box_top]).collect())
        .collect();
    let mut mesh = generate_mapped_mesh(&columns, &levels)?;

    let nx = columns.len() - 1;
    let first = columns.iter().position(|&s| s == c.s0).expect("chord start is a column");
    let last = columns.iter().position(|&s| s == c.s1).expect("chord end is a column");
    for j in 0..below {
        for i in first..last {
            for e in 0..4 {
                let cell = 4 * (j * nx + i) + e;
                mesh.cell_markers[cell] = tags::HOUSE;
                for k in 0..3 {
                    mesh.facet_markers.insert((cell, k), tags::HOUSE);
                }
            }
        }
    }
    Ok((
        mesh,
        FlowHouse {
            id: id.clone(),
            part,
            s0: c.s0,
            s1: c.s1,
            polygon: outline,
        },
    ))
}

impl FlowDomain {
    pub fn multimesh(&self) -> Result<MultiMesh> {
        MultiMesh::build(self.meshes.clone())
    }

    /// Relative height above the inlet bottom.
    fn inlet_fraction(&self, y: f64) -> f64 {
        let b = self.bottom.eval(0.0);
        (y - b) / (self.top - b)
    }

    /// No-slip terrain and lid, parabolic inflow, zero outlet pressure and
    /// no-slip house bodies.
    pub fn boundary_conditions(&self, mm: &MultiMesh) -> Result<Vec<DirichletBC>> {
        let b = self.bottom.eval(0.0);
        let (top, u_max) = (self.top, self.u_max);
        let mut bcs = vec![
            DirichletBC::velocity(0, Boundary::Marker(tags::LEFT), move |p| {
                let xi = ((p.y - b) / (top - b)).clamp(0.0, 1.0);
                Vector::new(4.0 * u_max * xi * (1.0 - xi), 0.0)
            }),
            DirichletBC::noslip(0, Boundary::Marker(tags::BOTTOM)),
            DirichletBC::noslip(0, Boundary::Marker(tags::TOP)),
            DirichletBC::pressure(0, Boundary::Marker(tags::RIGHT), |_| 0.0),
        ];
        for house in &self.houses {
            let facets = mark_house_noslip_facets(mm, house.part, tags::HOUSE)?;
            bcs.push(DirichletBC::noslip(house.part, Boundary::Facets(facets)));
        }
        Ok(bcs)
    }

    pub fn solve(&self, params: &StokesParams) -> Result<(MultiMesh, StokesSolution)> {
        let mm = self.multimesh()?;
        let bcs = self.boundary_conditions(&mm)?;
        let sol = solve_stokes(&mm, params, &bcs)?;
        Ok((mm, sol))
    }

    /// `n` seeds just downstream of the inlet, evenly spread over its height.
    pub fn inlet_seeds(&self, n: usize) -> Vec<Point> {
        let b = self.bottom.eval(0.0);
        let s = 1e-3 * self.h;
        let bottom_here = self.bottom.eval(s);
        (0..n)
            .map(|k| {
                let xi = (k as f64 + 0.5) / n as f64;
                let y = b + xi * (self.top - b);
                Point::new(s, y.max(bottom_here + 1e-6 * self.h))
            })
            .filter(|p| (0.0..1.0).contains(&self.inlet_fraction(p.y)))
            .collect()
    }

    /// House whose body contains `p`.
    pub fn house_at(&self, p: &Point) -> Option<&FlowHouse> {
        self.houses.iter().find(|h| h.contains(p))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    /// Left the background domain.
    Exit,
    /// Would have entered a house body.
    Solid,
    /// Velocity below 1e-10.
    Stagnation,
    MaxLength,
    MaxSteps,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Streamline {
    pub points: Vec<[f64; 2]>,
    pub stop: StopReason,
}

enum Probe {
    Fluid(Vector),
    Outside,
    Solid,
}

fn probe(mm: &MultiMesh, space: &TaylorHoodSpace, coeffs: &[f64], p: &Point) -> Probe {
    if mm.locate_in_part(0, p).is_none() {
        return Probe::Outside;
    }
    let Some((part, cell)) = mm.locate_point(p) else {
        return Probe::Outside;
    };
    if part > 0 && mm.part(part).cell_markers[cell] == tags::HOUSE {
        return Probe::Solid;
    }
    Probe::Fluid(evaluate_on(mm, space, coeffs, part, cell, p).0)
}

const MAX_STEPS: usize = 100_000;

/// Classical RK4 on the discrete velocity with time step `step`. Seeds
/// outside the fluid are skipped with a warning.
pub fn trace_streamlines(
    mm: &MultiMesh,
    space: &TaylorHoodSpace,
    coeffs: &[f64],
    seeds: &[Point],
    step: f64,
    max_len: f64,
) -> Vec<Streamline> {
    let stage = |p: &Point| match probe(mm, space, coeffs, p) {
        Probe::Fluid(u) => Ok(u),
        Probe::Outside => Err(StopReason::Exit),
        Probe::Solid => Err(StopReason::Solid),
    };
    let trace = |seed: &Point| -> std::result::Result<Streamline, StopReason> {
        let k1 = stage(seed)?;
        let mut x = *seed;
        let mut first = Some(k1);
        let mut points = vec![[x.x, x.y]];
        let mut arc = 0.0;
        let mut advance = || -> std::result::Result<(), StopReason> {
            let k1 = match first.take() {
                Some(k) => k,
                None => stage(&x)?,
            };
            if k1.norm() < 1e-10 {
                return Err(StopReason::Stagnation);
            }
            let k2 = stage(&(x + k1 * (0.5 * step)))?;
            let k3 = stage(&(x + k2 * (0.5 * step)))?;
            let k4 = stage(&(x + k3 * step))?;
            let next = x + (k1 + (k2 + k3) * 2.0 + k4) * (step / 6.0);
            stage(&next)?;
            arc += (next - x).norm();
            x = next;
            points.push([x.x, x.y]);
            if arc >= max_len {
                return Err(StopReason::MaxLength);
            }
            Ok(())
        };
        let mut stop = StopReason::MaxSteps;
        for _ in 0..MAX_STEPS {
            if let Err(reason) = advance() {
                stop = reason;
                break;
            }
        }
        Ok(Streamline { points, stop })
    };
    seeds
        .iter()
        .filter_map(|seed| match trace(seed) {
            Ok(line) => Some(line),
            Err(_) => {
                log::warn!("streamline seed ({}, {}) is outside the fluid; skipped", seed.x, seed.y);
                None
            }
        })
        .collect()
}
