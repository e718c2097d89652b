//! Legacy ASCII VTK export of a multimesh solution.

use std::fmt::Write as _;
use std::path::Path;

use crate::fem::TaylorHoodSpace;
use crate::multimesh::{CellKind, MultiMesh};
use crate::Result;

/// All parts in one unstructured grid. Point data `u` (z = 0) and `p` come
/// from each part's own degrees of freedom, zero where a part has none
/// (covered background). Cell data: `part`, `kind` (0 active, 1 cut,
/// 2 covered) and the mesh cell `marker`.
pub fn format_vtk(mm: &MultiMesh, space: &TaylorHoodSpace, coeffs: &[f64]) -> String {
    let parts = mm.parts();
    let num_points: usize = parts.iter().map(|m| m.num_vertices()).sum();
    let num_cells: usize = parts.iter().map(|m| m.num_cells()).sum();
    let mut out = String::with_capacity(64 * (num_points + num_cells));
    out.push_str("# vtk DataFile Version 3.0\nmultimesh Stokes solution\nASCII\nDATASET UNSTRUCTURED_GRID\n");
    let _ = writeln!(out, "POINTS {num_points} double");
    for m in parts {
        for v in &m.vertices {
            let _ = writeln!(out, "{} {} 0", v[0], v[1]);
        }
    }
    let _ = writeln!(out, "CELLS {num_cells} {}", 4 * num_cells);
    let mut offset = 0;
    for m in parts {
        for c in &m.cells {
            let _ = writeln!(out, "3 {} {} {}", c[0] + offset, c[1] + offset, c[2] + offset);
        }
        offset += m.num_vertices();
    }
    let _ = writeln!(out, "CELL_TYPES {num_cells}");
    for _ in 0..num_cells {
        out.push_str("5\n");
    }

    let value = |d: Option<usize>| d.map_or(0.0, |i| coeffs.get(i).copied().unwrap_or(0.0));
    let _ = writeln!(out, "POINT_DATA {num_points}\nVECTORS u double");
    for (part, m) in parts.iter().enumerate() {
        let ps = &space.parts[part];
        for v in 0..m.num_vertices() {
            let _ = writeln!(out, "{} {} 0", value(ps.ux[v]), value(ps.uy[v]));
        }
    }
    out.push_str("SCALARS p double 1\nLOOKUP_TABLE default\n");
    for (part, m) in parts.iter().enumerate() {
        let ps = &space.parts[part];
        for v in 0..m.num_vertices() {
            let _ = writeln!(out, "{}", value(ps.p[v]));
        }
    }

    let _ = writeln!(out, "CELL_DATA {num_cells}\nSCALARS part int 1\nLOOKUP_TABLE default");
    for (part, m) in parts.iter().enumerate() {
        for _ in 0..m.num_cells() {
            let _ = writeln!(out, "{part}");
        }
    }
    out.push_str("SCALARS kind int 1\nLOOKUP_TABLE default\n");
    for part in 0..parts.len() {
        for k in mm.kinds(part) {
            let code = match k {
                CellKind::Active => 0,
                CellKind::Cut => 1,
                CellKind::Covered => 2,
            };
            let _ = writeln!(out, "{code}");
        }
    }
    out.push_str("SCALARS marker int 1\nLOOKUP_TABLE default\n");
    for m in parts {
        for marker in &m.cell_markers {
            let _ = writeln!(out, "{marker}");
        }
    }
    out
}

pub fn write_vtk(mm: &MultiMesh, space: &TaylorHoodSpace, coeffs: &[f64], path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, format_vtk(mm, space, coeffs))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::Field;
    use crate::geometry::{Aabb, Point};
    use crate::mesh::{generate_rect_mesh, RigidTransform2D};

    #[test]
    fn sections_and_values() {
        let bg = generate_rect_mesh(&Aabb::new(Point::new(0.0, 0.0), Point::new(1.0, 1.0)), 2, 2, None).unwrap();
        let patch = generate_rect_mesh(&Aabb::new(Point::new(0.0, 0.0), Point::new(0.4, 0.4)), 1, 1, None)
            .unwrap()
            .transformed(&RigidTransform2D::translation(0.3, 0.3));
        let mm = MultiMesh::build(vec![bg, patch]).unwrap();
        let space = TaylorHoodSpace::new(&mm);
        // u = (x, 0), p = 2
        let coeffs: Vec<f64> = space
            .dofs()
            .iter()
            .map(|d| match d.field {
                Field::VelocityX => d.point.x,
                Field::VelocityY => 0.0,
                Field::Pressure => 2.0,
            })
            .collect();
        let text = format_vtk(&mm, &space, &coeffs);
        let lines: Vec<&str> = text.lines().collect();
        assert!(lines.contains(&"POINTS 18 double"));
        assert!(lines.contains(&"CELLS 20 80"));
        assert!(lines.contains(&"POINT_DATA 18"));
        assert!(lines.contains(&"CELL_DATA 20"));
        // the patch center vertex carries u = (0.5, 0) and p = 2
        let start = lines.iter().position(|l| *l == "VECTORS u double").unwrap() + 1;
        assert_eq!(lines[start + 17], "0.5 0 0");
        let p = lines.iter().position(|l| l.starts_with("SCALARS p")).unwrap() + 2;
        assert_eq!(lines[p + 17], "2");
        let kinds = lines.iter().position(|l| l.starts_with("SCALARS kind")).unwrap() + 2;
        assert!(lines[kinds..kinds + 16].contains(&"1"));
    }
}
