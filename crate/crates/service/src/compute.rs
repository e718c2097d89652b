//! The blocking work behind the compute endpoints.

use nalgebra::Point3;
use serde_json::Value;
use settle_client::api::{FlowRequest, Px, ViewRequest};
use settle_core::fem::StokesParams;
use settle_core::raster::{category_ppm, ViewBuffers};
use settle_core::report::{canonicalize, flow_report, round_significant, view360_report, view_report};
use settle_core::scenario::{build_flow_domain, build_view_scene, trace_streamlines, Scenario};
use settle_core::view::{evaluate_view, view_360, View360Config, ViewWeights};
use settle_core::vtk::format_vtk;

use crate::{ApiError, ApiResult};

pub const DEFAULT_PX: [usize; 2] = [320, 240];
pub const DEFAULT_SEEDS: usize = 16;
const MAX_PIXELS: usize = 4096 * 4096;

/// Canonical report and category image of a view request.
pub fn view(s: &Scenario, req: &ViewRequest) -> ApiResult<(Value, Vec<u8>)> {
    let scene = build_view_scene(s)?;
    match (&req.camera, req.point) {
        (Some(name), None) => {
            if req.n.is_some() || req.d.is_some() {
                return Err(ApiError::BadRequest("n and d belong to a 360° sweep, not a camera view".into()));
            }
            let [w, h] = match req.px {
                None => DEFAULT_PX,
                Some(Px::Size(size)) => size,
                Some(Px::Width(w)) => [w, (w * 3).div_ceil(4)],
            };
            check_pixels(w, h)?;
            let spec = s.camera(name).ok_or_else(|| ApiError::NotFound(format!("no camera {name}")))?;
            let cam = spec.camera(w, h).map_err(|e| ApiError::BadRequest(e.to_string()))?;
            let (res, buf) = evaluate_view(&scene, &cam, &ViewWeights::default())?;
            Ok((canonicalize(view_report(name, &res)), category_ppm(&buf)))
        }
        (None, Some(point)) => {
            let mut cfg = View360Config::default();
            match req.px {
                None => {}
                Some(Px::Width(w)) => cfg.px_width = w,
                Some(Px::Size(_)) => return Err(ApiError::BadRequest("px of a 360° sweep is a single image width".into())),
            }
            cfg.n = req.n.unwrap_or(cfg.n);
            cfg.d = req.d.unwrap_or(cfg.d);
            cfg.validate().map_err(|e| ApiError::BadRequest(e.to_string()))?;
            check_pixels(cfg.px_width, cfg.n)?;
            let (res, bufs) = view_360(&scene, Point3::from(point), &cfg)?;
            Ok((canonicalize(view360_report(point, &cfg, &res)), category_ppm(&panorama(&bufs))))
        }
        _ => Err(ApiError::BadRequest("give exactly one of camera and point".into())),
    }
}

fn check_pixels(w: usize, h: usize) -> ApiResult<()> {
    if w == 0 || h == 0 || w.saturating_mul(h) > MAX_PIXELS {
        return Err(ApiError::BadRequest(format!("image size {w}×{h} is out of range")));
    }
    Ok(())
}

/// Sweep images side by side, in order of increasing angle.
fn panorama(bufs: &[ViewBuffers]) -> ViewBuffers {
    let (w, h) = (bufs[0].width, bufs[0].height);
    let mut out = ViewBuffers::new(w * bufs.len(), h);
    for (k, b) in bufs.iter().enumerate() {
        for row in 0..h {
            let dst = row * out.width + k * w;
            out.category[dst..dst + w].copy_from_slice(&b.category[row * w..(row + 1) * w]);
        }
    }
    out
}

pub fn check_flow_request(req: &FlowRequest) -> ApiResult<()> {
    if !(req.h > 0.0 && req.h.is_finite()) {
        return Err(ApiError::BadRequest(format!("h must be positive, got {}", req.h)));
    }
    if req.seeds.is_some_and(|n| n == 0 || n > 10_000) {
        return Err(ApiError::BadRequest("seeds must lie in 1..=10000".into()));
    }
    Ok(())
}

pub type Polyline = Vec<[f64; 2]>;

/// Streamlines, canonical report and VTK text of a flow solve.
pub fn flow(s: &Scenario, req: &FlowRequest) -> ApiResult<(Vec<Polyline>, Value, String)> {
    let domain = build_flow_domain(s, req.h)?;
    let (mm, sol) = domain.solve(&StokesParams::default())?;
    let seeds = domain.inlet_seeds(req.seeds.unwrap_or(DEFAULT_SEEDS));
    let step = 0.5 * domain.h / domain.u_max;
    let lines = trace_streamlines(&mm, &sol.space, &sol.coeffs, &seeds, step, 2.0 * domain.length);
    let report = canonicalize(flow_report(&domain, &mm, &sol, &lines));
    let polylines = lines
        .iter()
        .map(|l| l.points.iter().map(|p| p.map(round_significant)).collect())
        .collect();
    Ok((polylines, report, format_vtk(&mm, &sol.space, &sol.coeffs)))
}
