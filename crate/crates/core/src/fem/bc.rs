use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use super::assemble::LinearSystem;
use super::space::{Field, TaylorHoodSpace};
use crate::geometry::{Point, Vector};
use crate::linsolve::SparseMatrix;
use crate::mesh::{facet_vertices, FacetId};
use crate::multimesh::MultiMesh;
use crate::{Error, Result};

pub type BoundaryFn = Arc<dyn Fn(&Point) -> Vector + Send + Sync>;

#[derive(Clone, Debug, PartialEq)]
pub enum Boundary {
    /// Facets carrying this marker on the referenced part.
    Marker(i64),
    /// An explicit facet set, e.g. from [`mark_house_noslip_facets`].
    Facets(Vec<FacetId>),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BcField {
    Velocity,
    Pressure,
}

/// Essential condition on velocity (both components) or pressure. For
/// pressure only the `x` component of the value is used.
#[derive(Clone)]
pub struct DirichletBC {
    pub part: usize,
    pub field: BcField,
    pub boundary: Boundary,
    pub value: BoundaryFn,
}

impl std::fmt::Debug for DirichletBC {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("DirichletBC")
            .field("part", &self.part)
            .field("field", &self.field)
            .field("boundary", &self.boundary)
            .finish_non_exhaustive()
    }
}

impl DirichletBC {
    pub fn velocity(part: usize, boundary: Boundary, value: impl Fn(&Point) -> Vector + Send + Sync + 'static) -> Self {
        DirichletBC {
            part,
            field: BcField::Velocity,
            boundary,
            value: Arc::new(value),
        }
    }

    pub fn noslip(part: usize, boundary: Boundary) -> Self {
        Self::velocity(part, boundary, |_| Vector::zeros())
    }

    pub fn pressure(part: usize, boundary: Boundary, value: impl Fn(&Point) -> f64 + Send + Sync + 'static) -> Self {
        DirichletBC {
            part,
            field: BcField::Pressure,
            boundary,
            value: Arc::new(move |p| Vector::new(value(p), 0.0)),
        }
    }
}

fn resolve_facets(mm: &MultiMesh, bc: &DirichletBC) -> Result<Vec<FacetId>> {
    if bc.part >= mm.num_parts() {
        return Err(Error::Boundary(format!("boundary condition refers to missing part {}", bc.part)));
    }
    match &bc.boundary {
        Boundary::Marker(m) => {
            let facets = mm.part(bc.part).facets_with_marker(*m);
            if facets.is_empty() {
                return Err(Error::Boundary(format!("marker {m} does not exist on part {}", bc.part)));
            }
            Ok(facets)
        }
        Boundary::Facets(f) => Ok(f.clone()),
    }
}

/// Constrained dofs with their values, later conditions overriding earlier.
pub fn constrained_values(mm: &MultiMesh, space: &TaylorHoodSpace, bcs: &[DirichletBC]) -> Result<BTreeMap<usize, f64>> {
    let mut values = BTreeMap::new();
    for bc in bcs {
        let facets = resolve_facets(mm, bc)?;
        let mesh = mm.part(bc.part);
        let ps = &space.parts[bc.part];
        for (cell, k) in facets {
            if cell >= mesh.num_cells() || k > 2 {
                return Err(Error::Boundary(format!("facet ({cell}, {k}) is not on part {}", bc.part)));
            }
            let [a, b] = facet_vertices(k).map(|l| mesh.cells[cell][l]);
            match bc.field {
                BcField::Velocity => {
                    let edge = ps.edge_node(a, b).expect("edge node of a mesh facet");
                    for node in [a, b, edge] {
                        let g = (bc.value)(&ps.nodes[node]);
                        if let Some(d) = ps.ux[node] {
                            values.insert(d, g.x);
                        }
                        if let Some(d) = ps.uy[node] {
                            values.insert(d, g.y);
                        }
                    }
                }
                BcField::Pressure => {
                    for v in [a, b] {
                        if let Some(d) = ps.p[v] {
                            values.insert(d, (bc.value)(&ps.nodes[v]).x);
                        }
                    }
                }
            }
        }
    }
    Ok(values)
}

fn replace_rows(sys: &LinearSystem, rows: &BTreeMap<usize, f64>) -> LinearSystem {
    let n = sys.size();
    let mut entries: Vec<(usize, usize, f64)> = sys
        .matrix
        .entries
        .iter()
        .copied()
        .filter(|(i, _, _)| !rows.contains_key(i))
        .collect();
    let mut rhs = sys.rhs.clone();
    let mut constrained = sys.constrained.clone();
    for (&i, &g) in rows {
        entries.push((i, i, 1.0));
        rhs[i] = g;
        constrained[i] = true;
    }
    LinearSystem {
        matrix: SparseMatrix::from_triplets(n, n, entries),
        rhs,
        constrained,
        num_space_dofs: sys.num_space_dofs,
    }
}

/// Replace constrained rows by identity rows carrying the boundary values.
pub fn apply_dirichlet(sys: &LinearSystem, mm: &MultiMesh, space: &TaylorHoodSpace, bcs: &[DirichletBC]) -> Result<LinearSystem> {
    let values = constrained_values(mm, space, bcs)?;
    Ok(replace_rows(sys, &values))
}

/// Pin unknowns whose column is empty to zero.
///
/// This happens for pressure inside solid house regions once all nearby
/// velocities are fixed: nothing couples to those pressures any more.
pub fn pin_free_columns(sys: &LinearSystem) -> (LinearSystem, usize) {
    let mut used = vec![false; sys.size()];
    for &(_, j, _) in &sys.matrix.entries {
        used[j] = true;
    }
    let rows: BTreeMap<usize, f64> = (0..sys.size()).filter(|&j| !used[j]).map(|j| (j, 0.0)).collect();
    let count = rows.len();
    if count == 0 {
        return (sys.clone(), 0);
    }
    (replace_rows(sys, &rows), count)
}

/// Append a Lagrange multiplier enforcing a zero mean pressure over the
/// visible domain.
pub fn add_pressure_gauge(sys: &LinearSystem, mm: &MultiMesh, space: &TaylorHoodSpace, degree: usize) -> LinearSystem {
    let n = sys.size();
    let mut weights = vec![0.0; n];
    for part in 0..mm.num_parts() {
        for c in 0..mm.part(part).num_cells() {
            let rule = mm.visible_quadrature(part, c, degree);
            if rule.is_empty() {
                continue;
            }
            let el = super::element::Element::new(mm.part(part).triangle(c));
            let dofs = space.cell_dofs(part, c);
            for (x, w) in rule.iter() {
                let bv = el.eval(x);
                for q in 0..3 {
                    if let Some(d) = dofs[12 + q] {
                        weights[d] += w * bv.psi[q];
                    }
                }
            }
        }
    }
    let mut entries = sys.matrix.entries.clone();
    for (j, &w) in weights.iter().enumerate() {
        if w != 0.0 && !sys.constrained[j] && space.dof(j).field == Field::Pressure {
            entries.push((n, j, w));
            entries.push((j, n, w));
        }
    }
    let mut rhs = sys.rhs.clone();
    rhs.push(0.0);
    let mut constrained = sys.constrained.clone();
    constrained.push(false);
    LinearSystem {
        matrix: SparseMatrix::from_triplets(n + 1, n + 1, entries),
        rhs,
        constrained,
        num_space_dofs: sys.num_space_dofs,
    }
}

/// No-slip facets of an overlapping house mesh.
///
/// Every facet starts marked. Facets of cells lying entirely inside the
/// background domain are released, facets of cells crossing the background
/// boundary are marked again, and finally every facet tagged
/// `house_boundary_marker` (the house walls) is marked.
pub fn mark_house_noslip_facets(mm: &MultiMesh, part: usize, house_boundary_marker: i64) -> Result<Vec<FacetId>> {
    if part == 0 || part >= mm.num_parts() {
        return Err(Error::Boundary(format!("part {part} is not an overlapping mesh")));
    }
    let mesh = mm.part(part);
    let key = |(c, k): FacetId| {
        let [a, b] = facet_vertices(k).map(|l| mesh.cells[c][l]);
        [a.min(b), a.max(b)]
    };
    let cell_keys = |c: usize| (0..3).map(move |k| key((c, k)));
    let mut marked: BTreeSet<[usize; 2]> = (0..mesh.num_cells()).flat_map(cell_keys).collect();

    let status: Vec<(bool, bool)> = (0..mesh.num_cells())
        .map(|c| {
            let area = mesh.cell_area(c);
            let cover = mm.background_cover(part, c);
            let inside = cover >= area * (1.0 - 1e-9);
            (inside, !inside && cover > 0.0)
        })
        .collect();
    for c in (0..mesh.num_cells()).filter(|&c| status[c].0) {
        for k in cell_keys(c) {
            marked.remove(&k);
        }
    }
    for c in (0..mesh.num_cells()).filter(|&c| status[c].1) {
        marked.extend(cell_keys(c));
    }
    for (&f, &m) in &mesh.facet_markers {
        if m == house_boundary_marker {
            marked.insert(key(f));
        }
    }
    // report each marked facet once, through its first owning cell
    let mut owner: BTreeMap<[usize; 2], FacetId> = BTreeMap::new();
    for c in 0..mesh.num_cells() {
        for k in 0..3 {
            owner.entry(key((c, k))).or_insert((c, k));
        }
    }
    Ok(marked.into_iter().map(|k| owner[&k]).collect())
}
