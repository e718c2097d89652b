mod common;

use std::path::PathBuf;

use nalgebra::{Point3, Vector3};
use settle_core::fem::{StokesParams, TaylorHoodSpace};
use settle_core::geometry::Point;
use settle_core::mesh::{encode_binary_stl, Mesh, RigidTransform2D};
use settle_core::multimesh::CellKind;
use settle_core::raster::{Camera, Category};
use settle_core::scenario::*;
use settle_core::view::{evaluate_view, ViewWeights};
use settle_core::Error;

fn data(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/data").join(name)
}

const CORPUS: [&str; 4] = ["minimal.json", "all_water.json", "two_house.json", "demo.json"];

#[test]
fn corpus_loads_and_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    for name in CORPUS {
        let s = load_scenario(data(name)).unwrap();
        let out = dir.path().join(name);
        save_scenario(&s, &out).unwrap();
        assert_eq!(load_scenario(&out).unwrap(), s, "{name}");
    }
}

#[test]
fn stl_terrain_uses_explicit_water_tags() {
    let dir = tempfile::tempdir().unwrap();
    // two facets above sea level, the second one tagged as water anyway
    let mut mesh = Mesh::new(
        3,
        vec![[0.0, 0.0, 1.0], [100.0, 0.0, 1.0], [100.0, 100.0, 1.0], [0.0, 100.0, 1.0]],
        vec![[0, 1, 2], [0, 2, 3]],
    );
    mesh.cell_markers = vec![0, 0];
    std::fs::write(dir.path().join("land.stl"), encode_binary_stl(&mesh)).unwrap();
    let text = r#"{
        "terrain": {"stl": {"path": "land.stl", "water_tags": [1]}},
        "houses": [{"id": "h", "x": 70, "y": 20, "width": 8, "depth": 6, "wall_height": 3, "ridge_height": 5}]
    }"#;
    let path = dir.path().join("s.json");
    std::fs::write(&path, text).unwrap();
    let s = load_scenario(&path).unwrap();
    let t = s.terrain().unwrap();
    assert_eq!(t.category_at(70.0, 20.0), Some(Category::Ground));
    assert_eq!(t.category_at(20.0, 70.0), Some(Category::Water));
    // a house on the water-tagged facet is rejected
    let moved = text.replace("\"x\": 70, \"y\": 20", "\"x\": 20, \"y\": 70");
    std::fs::write(&path, moved).unwrap();
    assert!(load_scenario(&path).unwrap_err().to_string().contains("not over ground"));
}

#[test]
fn coincident_houses_are_reported_by_id() {
    let mut s = load_scenario(data("two_house.json")).unwrap();
    s.houses[1].x = s.houses[0].x;
    s.houses[1].y = s.houses[0].y;
    match s.validate() {
        Err(Error::Overlap { first, second }) => assert_eq!((first.as_str(), second.as_str()), ("west", "east")),
        other => panic!("expected an overlap, got {other:?}"),
    }
}

#[test]
fn view_scene_counts_and_categories() {
    let s = load_scenario(data("all_water.json")).unwrap();
    let scene = build_view_scene(&s).unwrap();
    assert!(scene.categories.iter().all(|&c| c == Category::Water));
    let s = load_scenario(data("minimal.json")).unwrap();
    let scene = build_view_scene(&s).unwrap();
    let terrain = s.terrain().unwrap().triangles().len();
    assert_eq!(scene.len(), terrain + 16);
}

#[test]
fn all_water_view_is_one() {
    let s = load_scenario(data("all_water.json")).unwrap();
    let scene = build_view_scene(&s).unwrap();
    let cam = s.cameras[0].camera(128, 96).unwrap();
    let (res, _) = evaluate_view(&scene, &cam, &ViewWeights::default()).unwrap();
    assert_eq!(res.v, 1.0);
}

#[test]
fn facing_a_wall_at_one_meter_is_worthless() {
    let s = load_scenario(data("minimal.json")).unwrap();
    let scene = build_view_scene(&s).unwrap();
    // the west wall of house "a" is at x = 45
    let cam = Camera::with_fov(Point3::new(44.0, 50.0, 3.5), Vector3::x(), std::f64::consts::FRAC_PI_3, 256, 192).unwrap();
    let (res, _) = evaluate_view(&scene, &cam, &ViewWeights::default()).unwrap();
    assert!(res.v <= 0.01, "{}", res.v);
    assert_eq!(res.fractions["house"], 1.0);
}

fn flat_channel(houses: Vec<House>) -> Scenario {
    let mut s = load_scenario(data("minimal.json")).unwrap();
    s.houses = houses;
    s.flow = Some(FlowSpec {
        transect: [[0.0, 50.0], [100.0, 50.0]],
        height: 20.0,
        inflow: Inflow::Parabolic { u_max: 1.0 },
    });
    s
}

#[test]
fn flat_terrain_without_houses_is_a_rectangle() {
    let d = build_flow_domain(&flat_channel(vec![]), 5.0).unwrap();
    assert_eq!(d.meshes.len(), 1);
    let bbox = d.meshes[0].bbox().unwrap();
    assert_eq!((bbox.min.x, bbox.min.y, bbox.max.x, bbox.max.y), (0.0, 2.0, 100.0, 22.0));
    assert!((d.meshes[0].total_area() - 2000.0).abs() < 1e-9);
}

#[test]
fn centered_house_is_cut_into_the_background() {
    let s = load_scenario(data("minimal.json")).unwrap();
    let d = build_flow_domain(&flat_channel(s.houses.clone()), 2.0).unwrap();
    assert_eq!(d.meshes.len(), 2);
    let mm = d.multimesh().unwrap();
    assert!(mm.kinds(0).iter().any(|&k| k == CellKind::Cut));
    // the outline: chord 45..55, sunk 0.15 m under the terrain at 2 m, ridge at 8 m
    let h = &d.houses[0];
    assert!((h.s0 - 45.0).abs() < 1e-12 && (h.s1 - 55.0).abs() < 1e-12);
    let top = h.polygon.iter().map(|p| p.y).fold(f64::MIN, f64::max);
    assert!((top - 8.0).abs() < 1e-12);
    assert!(h.polygon.iter().any(|p| (p.y - 1.85).abs() < 1e-12));
}

#[test]
fn tall_house_is_rejected() {
    let s = load_scenario(data("minimal.json")).unwrap();
    let mut houses = s.houses.clone();
    houses[0].ridge_height = 30.0;
    let err = build_flow_domain(&flat_channel(houses), 2.0).unwrap_err();
    assert!(err.to_string().contains("above the channel top"), "{err}");
}

#[test]
fn corpus_flow_domains_build() {
    for name in CORPUS {
        let s = load_scenario(data(name)).unwrap();
        if s.flow.is_none() {
            continue;
        }
        let d = build_flow_domain(&s, 4.0).unwrap();
        let mm = d.multimesh().unwrap();
        assert_eq!(mm.num_parts(), 1 + d.houses.len());
        for part in 1..mm.num_parts() {
            let cover: f64 = (0..mm.part(part).num_cells()).map(|c| mm.background_cover(part, c)).sum();
            assert!(cover > 0.0 && cover < mm.part(part).total_area(), "{name}: house mesh must protrude");
        }
    }
    let d = build_flow_domain(&load_scenario(data("two_house.json")).unwrap(), 4.0).unwrap();
    assert_eq!(d.meshes.len(), 3);
}

#[test]
fn poiseuille_streamline_is_straight() {
    let mm = common::poiseuille_multimesh(16, 4, &RigidTransform2D::translation(1.7, 0.3));
    let sol = settle_core::fem::solve_stokes(&mm, &StokesParams::default().with_gamma(1.0), &common::poiseuille_bcs()).unwrap();
    let lines = trace_streamlines(&mm, &sol.space, &sol.coeffs, &[Point::new(0.1, 0.5)], 0.5, 100.0);
    assert_eq!(lines.len(), 1);
    assert_eq!(lines[0].stop, StopReason::Exit);
    assert!(lines[0].points.len() > 10);
    for p in &lines[0].points {
        assert!((p[1] - 0.5).abs() < 1e-9, "{p:?}");
    }
}

#[test]
fn uniform_field_advances_by_the_step() {
    let mm = common::poiseuille_multimesh(8, 2, &RigidTransform2D::translation(1.7, 0.3));
    let space = TaylorHoodSpace::new(&mm);
    let coeffs: Vec<f64> = space
        .dofs()
        .iter()
        .map(|d| if d.field == settle_core::fem::Field::VelocityX { 1.0 } else { 0.0 })
        .collect();
    let seeds = [Point::new(0.05, 0.3), Point::new(-1.0, 0.5)];
    let lines = trace_streamlines(&mm, &space, &coeffs, &seeds, 0.25, 1.9);
    assert_eq!(lines.len(), 1, "the seed outside is skipped");
    assert_eq!(lines[0].stop, StopReason::MaxLength);
    assert_eq!(lines[0].points.len(), 9);
    for (k, p) in lines[0].points.iter().enumerate() {
        assert!((p[0] - (0.05 + 0.25 * k as f64)).abs() < 1e-12);
        assert!((p[1] - 0.3).abs() < 1e-12);
    }
}

#[test]
fn streamlines_stay_out_of_houses() {
    let s = load_scenario(data("two_house.json")).unwrap();
    let d = build_flow_domain(&s, 4.0).unwrap();
    let (mm, sol) = d.solve(&StokesParams::default()).unwrap();
    let seeds = d.inlet_seeds(12);
    let lines = trace_streamlines(&mm, &sol.space, &sol.coeffs, &seeds, 0.5 * d.h / d.u_max, 2.0 * d.length);
    assert_eq!(lines.len(), 12);
    for line in &lines {
        assert_ne!(line.stop, StopReason::Solid);
        for p in &line.points {
            assert!(d.house_at(&Point::new(p[0], p[1])).is_none());
        }
    }
    assert!(lines.iter().any(|l| l.stop == StopReason::Exit));
}
