use std::collections::HashMap;

use crate::geometry::Point;
use crate::multimesh::{CellKind, MultiMesh};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Field {
    VelocityX,
    VelocityY,
    Pressure,
}

/// Where a global degree of freedom lives.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DofInfo {
    pub part: usize,
    pub field: Field,
    /// P2 node index for velocity, vertex index for pressure.
    pub node: usize,
    pub point: Point,
}

/// P2 nodes and global numbering of one part.
#[derive(Clone, Debug)]
pub struct PartSpace {
    /// Node coordinates: mesh vertices first, then edge midpoints.
    pub nodes: Vec<Point>,
    /// Local P2 node → part node, per cell.
    pub cell_nodes: Vec<[usize; 6]>,
    edge_index: HashMap<[usize; 2], usize>,
    pub ux: Vec<Option<usize>>,
    pub uy: Vec<Option<usize>>,
    pub p: Vec<Option<usize>>,
    pub offset: usize,
    pub len: usize,
}

impl PartSpace {
    /// P2 node of the edge between mesh vertices `a` and `b`.
    pub fn edge_node(&self, a: usize, b: usize) -> Option<usize> {
        self.edge_index.get(&[a.min(b), a.max(b)]).copied()
    }
}

/// Taylor–Hood P2/P1 space over every part of a multimesh.
///
/// Each part contributes `[ux | uy | p]` blocks in that order. Degrees of
/// freedom whose support lies entirely in covered cells are left out.
#[derive(Clone, Debug)]
pub struct TaylorHoodSpace {
    pub parts: Vec<PartSpace>,
    dofs: Vec<DofInfo>,
}

impl TaylorHoodSpace {
    pub fn new(mm: &MultiMesh) -> Self {
        let mut parts = Vec::with_capacity(mm.num_parts());
        let mut dofs = Vec::new();
        for part in 0..mm.num_parts() {
            let mesh = mm.part(part);
            let nv = mesh.num_vertices();
            let mut nodes: Vec<Point> = (0..nv).map(|v| mesh.point(v)).collect();
            let mut edge_index = HashMap::new();
            let mut cell_nodes = Vec::with_capacity(mesh.num_cells());
            for cell in &mesh.cells {
                let mut local = [cell[0], cell[1], cell[2], 0, 0, 0];
                for k in 0..3 {
                    let (a, b) = (cell[(k + 1) % 3], cell[(k + 2) % 3]);
                    let key = [a.min(b), a.max(b)];
                    local[3 + k] = *edge_index.entry(key).or_insert_with(|| {
                        nodes.push(nalgebra::center(&mesh.point(a), &mesh.point(b)));
                        nodes.len() - 1
                    });
                }
                cell_nodes.push(local);
            }
            let mut node_used = vec![false; nodes.len()];
            for (c, local) in cell_nodes.iter().enumerate() {
                if mm.kind(part, c) != CellKind::Covered {
                    for &n in local {
                        node_used[n] = true;
                    }
                }
            }
            let offset = dofs.len();
            let mut ux = vec![None; nodes.len()];
            let mut uy = vec![None; nodes.len()];
            let mut p = vec![None; nv];
            for (field, map) in [(Field::VelocityX, &mut ux), (Field::VelocityY, &mut uy)] {
                for n in (0..nodes.len()).filter(|&n| node_used[n]) {
                    map[n] = Some(dofs.len());
                    dofs.push(DofInfo {
                        part,
                        field,
                        node: n,
                        point: nodes[n],
                    });
                }
            }
            for v in (0..nv).filter(|&v| node_used[v]) {
                p[v] = Some(dofs.len());
                dofs.push(DofInfo {
                    part,
                    field: Field::Pressure,
                    node: v,
                    point: nodes[v],
                });
            }
            parts.push(PartSpace {
                nodes,
                cell_nodes,
                edge_index,
                ux,
                uy,
                p,
                offset,
                len: dofs.len() - offset,
            });
        }
        TaylorHoodSpace { parts, dofs }
    }

    pub fn num_dofs(&self) -> usize {
        self.dofs.len()
    }

    pub fn dof(&self, i: usize) -> &DofInfo {
        &self.dofs[i]
    }

    pub fn dofs(&self) -> &[DofInfo] {
        &self.dofs
    }

    /// Global dofs of a cell in local order `[ux 0..6, uy 0..6, p 0..3]`.
    pub fn cell_dofs(&self, part: usize, cell: usize) -> [Option<usize>; 15] {
        let ps = &self.parts[part];
        let nodes = &ps.cell_nodes[cell];
        std::array::from_fn(|k| match k {
            0..6 => ps.ux[nodes[k]],
            6..12 => ps.uy[nodes[k - 6]],
            _ => ps.p[nodes[k - 12]],
        })
    }

    pub fn is_pressure(&self, dof: usize) -> bool {
        self.dofs[dof].field == Field::Pressure
    }
}
