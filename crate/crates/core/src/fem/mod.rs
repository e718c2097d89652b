//! Taylor–Hood discretization of Stokes flow on a multimesh.
//!
//! The bilinear form combines, on the visible domain,
//! `(∇u, ∇v) − (div v, p) − (div u, q)`, Nitsche coupling across the
//! interface Γ between the background and each overlapping part, a
//! gradient-jump and a pressure-jump penalty on the overlapped part of cut
//! background cells, and a least-squares residual term on their visible
//! part.

mod assemble;
mod bc;
mod element;
mod solution;
mod space;

use std::sync::Arc;

pub use assemble::{assemble_system, LinearSystem};
pub use bc::{
    add_pressure_gauge, apply_dirichlet, constrained_values, mark_house_noslip_facets, pin_free_columns, BcField,
    Boundary, BoundaryFn, DirichletBC,
};
pub use element::{BasisValues, Element};
pub use solution::{evaluate_on, evaluate_solution, l2_errors, solve_stokes, StokesSolution};
pub use space::{DofInfo, Field, PartSpace, TaylorHoodSpace};

use crate::geometry::{Point, Vector};
use crate::{Error, Result};

pub type VectorFn = Arc<dyn Fn(&Point) -> Vector + Send + Sync>;

#[derive(Clone)]
pub struct StokesParams {
    /// Nitsche penalty.
    pub beta: f64,
    /// Pressure-jump penalty on the overlapped region.
    pub gamma: f64,
    /// Body force; zero when absent.
    pub f: Option<VectorFn>,
    pub volume_degree: usize,
    pub interface_points: usize,
}

impl Default for StokesParams {
    fn default() -> Self {
        StokesParams {
            beta: 10.0,
            gamma: 1e8,
            f: None,
            volume_degree: 4,
            interface_points: 3,
        }
    }
}

impl std::fmt::Debug for StokesParams {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("StokesParams")
            .field("beta", &self.beta)
            .field("gamma", &self.gamma)
            .field("f", &self.f.as_ref().map(|_| "fn"))
            .field("volume_degree", &self.volume_degree)
            .field("interface_points", &self.interface_points)
            .finish()
    }
}

impl StokesParams {
    pub fn with_force(mut self, f: impl Fn(&Point) -> Vector + Send + Sync + 'static) -> Self {
        self.f = Some(Arc::new(f));
        self
    }

    pub fn with_gamma(mut self, gamma: f64) -> Self {
        self.gamma = gamma;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.beta > 0.0 && self.beta.is_finite()) {
            return Err(Error::Assembly(format!("beta must be positive, got {}", self.beta)));
        }
        if !(self.gamma >= 0.0 && self.gamma.is_finite()) {
            return Err(Error::Assembly(format!("gamma must be non-negative, got {}", self.gamma)));
        }
        if self.interface_points == 0 {
            return Err(Error::Assembly("interface rule needs at least one point".into()));
        }
        Ok(())
    }
}
