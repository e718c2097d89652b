//! Deterministic JSON reports: sorted keys, floats rounded to 12
//! significant digits, no timings.

use std::collections::BTreeMap;

use serde::Serialize;
use serde_json::{json, Map, Number, Value};

use crate::fem::StokesSolution;
use crate::multimesh::{CellKind, MultiMesh};
use crate::scenario::{FlowDomain, Streamline};
use crate::view::{View360Config, View360Result, ViewResult};
use crate::Result;

pub const SIGNIFICANT_DIGITS: usize = 12;

pub fn round_significant(v: f64) -> f64 {
    if v == 0.0 || !v.is_finite() {
        return v;
    }
    format!("{:.*e}", SIGNIFICANT_DIGITS - 1, v).parse().expect("formatted float parses")
}

/// Round every float and rebuild objects so their keys are sorted.
pub fn canonicalize(v: Value) -> Value {
    match v {
        Value::Number(n) if n.is_f64() => {
            let x = round_significant(n.as_f64().expect("f64 number"));
            Number::from_f64(x).map_or(Value::Null, Value::Number)
        }
        Value::Array(items) => Value::Array(items.into_iter().map(canonicalize).collect()),
        Value::Object(map) => {
            let sorted: BTreeMap<String, Value> = map.into_iter().map(|(k, v)| (k, canonicalize(v))).collect();
            Value::Object(sorted.into_iter().collect::<Map<_, _>>())
        }
        other => other,
    }
}

/// Pretty-printed canonical JSON with a trailing newline.
pub fn to_canonical_json<T: Serialize + ?Sized>(value: &T) -> Result<String> {
    let v = canonicalize(serde_json::to_value(value)?);
    Ok(serde_json::to_string_pretty(&v)? + "\n")
}

pub fn view_report(camera: &str, res: &ViewResult) -> Value {
    json!({
        "kind": "view",
        "camera": camera,
        "V": res.v,
        "fractions": res.fractions,
        "width": res.width,
        "height": res.height,
    })
}

pub fn view360_report(point: [f64; 3], cfg: &View360Config, res: &View360Result) -> Value {
    json!({
        "kind": "view360",
        "point": point,
        "n": cfg.n,
        "d": cfg.d,
        "px_width": cfg.px_width,
        "half_vertical": cfg.half_vertical,
        "V360": res.v360,
        "images": res.images,
    })
}

pub fn flow_report(domain: &FlowDomain, mm: &MultiMesh, sol: &StokesSolution, lines: &[Streamline]) -> Value {
    let count = |kind: CellKind| mm.kinds(0).iter().filter(|&&k| k == kind).count();
    let mut stops: BTreeMap<String, usize> = BTreeMap::new();
    for l in lines {
        let name = serde_json::to_value(l.stop).ok().and_then(|v| v.as_str().map(str::to_string)).unwrap_or_default();
        *stops.entry(name).or_default() += 1;
    }
    let houses: Vec<Value> = domain
        .houses
        .iter()
        .map(|h| json!({"id": h.id, "part": h.part, "s0": h.s0, "s1": h.s1}))
        .collect();
    json!({
        "kind": "flow",
        "h": domain.h,
        "length": domain.length,
        "top": domain.top,
        "parts": mm.num_parts(),
        "cells": {
            "active": count(CellKind::Active),
            "cut": count(CellKind::Cut),
            "covered": count(CellKind::Covered),
            "houses": (1..mm.num_parts()).map(|p| mm.part(p).num_cells()).sum::<usize>(),
        },
        "dofs": sol.space.num_dofs(),
        "system_size": sol.system_size,
        "pinned": sol.pinned,
        "solve": {
            "residual": sol.report.residual_norm,
            "unscaled_residual": sol.report.unscaled_residual,
            "refinement_steps": sol.report.refinement_steps,
            "matrix_nnz": sol.report.matrix_nnz,
        },
        "houses": houses,
        "streamlines": {
            "count": lines.len(),
            "points": lines.iter().map(|l| l.points.len()).sum::<usize>(),
            "stops": stops,
        },
    })
}
