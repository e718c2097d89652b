//! Flow and view evaluation for settlement layouts.
//!
//! Two pipelines share one [`scenario::Scenario`]:
//!
//! * flow: a 2D vertical transect is discretized as a fixed background mesh
//!   with one boundary-fitted mesh per house laid on top ([`multimesh`]), and
//!   the Stokes equations are solved with a stabilized Nitsche-coupled
//!   Taylor–Hood method ([`fem`], [`linsolve`]);
//! * view: the 3D scene is rasterized ([`raster`]) and each pixel is weighted
//!   by what it shows and how far away it is ([`view`]).

pub mod error;
pub mod fem;
pub mod geometry;
pub mod linsolve;
pub mod mesh;
pub mod multimesh;
pub mod raster;
pub mod report;
pub mod scenario;
pub mod view;
pub mod vtk;

pub use error::{Error, Result};
