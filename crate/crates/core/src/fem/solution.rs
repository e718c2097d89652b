use super::assemble::assemble_system;
use super::bc::{add_pressure_gauge, apply_dirichlet, pin_free_columns, BcField, DirichletBC};
use super::element::Element;
use super::space::TaylorHoodSpace;
use super::StokesParams;
use crate::geometry::{Point, Vector};
use crate::linsolve::{solve_sparse, SolveReport};
use crate::multimesh::MultiMesh;
use crate::{Error, Result};

/// Solved velocity/pressure coefficients on a multimesh.
#[derive(Clone, Debug)]
pub struct StokesSolution {
    pub space: TaylorHoodSpace,
    pub coeffs: Vec<f64>,
    pub report: SolveReport,
    /// Size of the solved system, including any pressure multiplier.
    pub system_size: usize,
    /// Unknowns pinned because nothing coupled to them.
    pub pinned: usize,
}

impl StokesSolution {
    pub fn evaluate(&self, mm: &MultiMesh, x: &Point) -> Result<(Vector, f64)> {
        evaluate_solution(mm, &self.space, &self.coeffs, x)
    }
}

/// Assemble, constrain and solve. Without a pressure condition the pressure
/// is fixed by a zero-mean multiplier.
pub fn solve_stokes(mm: &MultiMesh, params: &StokesParams, bcs: &[DirichletBC]) -> Result<StokesSolution> {
    let space = TaylorHoodSpace::new(mm);
    let sys = assemble_system(mm, &space, params)?;
    let sys = apply_dirichlet(&sys, mm, &space, bcs)?;
    let (mut sys, pinned) = pin_free_columns(&sys);
    if !bcs.iter().any(|bc| bc.field == BcField::Pressure) {
        sys = add_pressure_gauge(&sys, mm, &space, params.volume_degree);
    }
    let (mut x, report) = solve_sparse(&sys.matrix, &sys.rhs)?;
    x.truncate(sys.num_space_dofs);
    Ok(StokesSolution {
        space,
        coeffs: x,
        report,
        system_size: sys.size(),
        pinned,
    })
}

/// Velocity and pressure of `part` at `x`, using the basis of `cell`.
pub fn evaluate_on(mm: &MultiMesh, space: &TaylorHoodSpace, coeffs: &[f64], part: usize, cell: usize, x: &Point) -> (Vector, f64) {
    let el = Element::new(mm.part(part).triangle(cell));
    let bv = el.eval(x);
    let dofs = space.cell_dofs(part, cell);
    let c = |k: usize| dofs[k].map_or(0.0, |d| coeffs[d]);
    let mut u = Vector::zeros();
    let mut p = 0.0;
    for i in 0..6 {
        u.x += c(i) * bv.phi[i];
        u.y += c(6 + i) * bv.phi[i];
    }
    for q in 0..3 {
        p += c(12 + q) * bv.psi[q];
    }
    (u, p)
}

/// Solution at `x` taken from the topmost part containing it.
pub fn evaluate_solution(mm: &MultiMesh, space: &TaylorHoodSpace, coeffs: &[f64], x: &Point) -> Result<(Vector, f64)> {
    let (part, cell) = mm
        .locate_point(x)
        .ok_or_else(|| Error::MultiMesh(format!("point ({}, {}) lies outside every mesh", x.x, x.y)))?;
    Ok(evaluate_on(mm, space, coeffs, part, cell, x))
}

/// L² errors of velocity and pressure over the visible domain.
pub fn l2_errors(
    mm: &MultiMesh,
    space: &TaylorHoodSpace,
    coeffs: &[f64],
    u_exact: impl Fn(&Point) -> Vector,
    p_exact: impl Fn(&Point) -> f64,
    degree: usize,
) -> (f64, f64) {
    let (mut eu, mut ep) = (0.0, 0.0);
    for part in 0..mm.num_parts() {
        for c in 0..mm.part(part).num_cells() {
            for (x, w) in mm.visible_quadrature(part, c, degree).iter() {
                let (u, p) = evaluate_on(mm, space, coeffs, part, c, x);
                eu += w * (u - u_exact(x)).norm_squared();
                ep += w * (p - p_exact(x)).powi(2);
            }
        }
    }
    (eu.sqrt(), ep.sqrt())
}
