#![allow(dead_code)]

use std::f64::consts::PI;

use settle_core::fem::{solve_stokes, Boundary, DirichletBC, Field, StokesParams, StokesSolution};
use settle_core::geometry::{Aabb, Point, Vector};
use settle_core::mesh::{generate_rect_mesh, tags, Mesh, RigidTransform2D};
use settle_core::multimesh::MultiMesh;

pub fn rect(x0: f64, y0: f64, x1: f64, y1: f64, nx: usize, ny: usize) -> Mesh {
    generate_rect_mesh(&Aabb::new(Point::new(x0, y0), Point::new(x1, y1)), nx, ny, None).unwrap()
}

/// Channel [0,4]×[0,1] with a 0.6×0.4 patch moved by `t`.
pub fn poiseuille_multimesh(nx: usize, ny: usize, t: &RigidTransform2D) -> MultiMesh {
    let bg = rect(0.0, 0.0, 4.0, 1.0, nx, ny);
    let patch = rect(0.0, 0.0, 0.6, 0.4, 3, 2).transformed(t);
    MultiMesh::build(vec![bg, patch]).unwrap()
}

pub fn poiseuille_u(p: &Point) -> Vector {
    Vector::new(p.y * (1.0 - p.y), 0.0)
}

pub fn poiseuille_p(p: &Point) -> f64 {
    8.0 - 2.0 * p.x
}

pub fn poiseuille_bcs() -> Vec<DirichletBC> {
    vec![
        DirichletBC::noslip(0, Boundary::Marker(tags::BOTTOM)),
        DirichletBC::noslip(0, Boundary::Marker(tags::TOP)),
        DirichletBC::velocity(0, Boundary::Marker(tags::LEFT), poiseuille_u),
        DirichletBC::pressure(0, Boundary::Marker(tags::RIGHT), |_| 0.0),
    ]
}

/// Largest nodal deviation from the exact Poiseuille solution.
pub fn max_dof_error(sol: &StokesSolution) -> f64 {
    sol.space
        .dofs()
        .iter()
        .zip(&sol.coeffs)
        .map(|(d, c)| {
            let exact = match d.field {
                Field::VelocityX => poiseuille_u(&d.point).x,
                Field::VelocityY => 0.0,
                Field::Pressure => poiseuille_p(&d.point),
            };
            (c - exact).abs()
        })
        .fold(0.0, f64::max)
}

/// Divergence-free velocity from the stream function sin²(πx) sin²(πy).
pub fn mms_u(p: &Point) -> Vector {
    let (sx, cx, sy, cy) = ((PI * p.x).sin(), (PI * p.x).cos(), (PI * p.y).sin(), (PI * p.y).cos());
    Vector::new(2.0 * PI * sx * sx * sy * cy, -2.0 * PI * sx * cx * sy * sy)
}

pub fn mms_p(p: &Point) -> f64 {
    (PI * p.x).cos() * (PI * p.y).cos()
}

/// −Δu + ∇p for the manufactured pair.
pub fn mms_f(p: &Point) -> Vector {
    let (sx, cx, sy, cy) = ((PI * p.x).sin(), (PI * p.x).cos(), (PI * p.y).sin(), (PI * p.y).cos());
    let pi2 = PI * PI;
    Vector::new(
        PI * (16.0 * pi2 * sx * sx * sy - sx - 4.0 * pi2 * sy) * cy,
        PI * (-16.0 * pi2 * sx * sy * sy + 4.0 * pi2 * sx - sy) * cx,
    )
}

/// Unit square with an n×n background and a 0.3×0.3 patch placed by `t`.
pub fn mms_multimesh(n: usize, t: &RigidTransform2D) -> MultiMesh {
    let bg = rect(0.0, 0.0, 1.0, 1.0, n, n);
    let m = ((0.3 * n as f64).ceil() as usize).max(2);
    let patch = rect(0.0, 0.0, 0.3, 0.3, m, m).transformed(t);
    MultiMesh::build(vec![bg, patch]).unwrap()
}

pub fn walls_noslip() -> Vec<DirichletBC> {
    [tags::BOTTOM, tags::TOP, tags::LEFT, tags::RIGHT]
        .into_iter()
        .map(|m| DirichletBC::noslip(0, Boundary::Marker(m)))
        .collect()
}

/// Solve the manufactured problem; returns (velocity L2 error, pressure L2
/// error, scaled residual).
pub fn mms_errors(mm: &MultiMesh, gamma: f64) -> (f64, f64, f64) {
    let params = StokesParams::default().with_gamma(gamma).with_force(mms_f);
    let sol = solve_stokes(mm, &params, &walls_noslip()).unwrap();
    let (eu, ep) = settle_core::fem::l2_errors(mm, &sol.space, &sol.coeffs, mms_u, mms_p, 8);
    (eu, ep, sol.report.residual_norm)
}
