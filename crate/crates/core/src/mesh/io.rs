//! Line-oriented text format:
//!
//! ```text
//! mesh <dim> <nvertices> <ncells>
//! v <x> <y> [<z>]            (nvertices lines)
//! c <i> <j> <k> [marker]     (ncells lines)
//! f <cell> <local_facet> <marker>   (any number of lines)
//! ```

use std::fmt::Write as _;
use std::path::Path;

use super::Mesh;
use crate::{Error, Result};

pub fn write_mesh(mesh: &Mesh, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, format_mesh(mesh))?;
    Ok(())
}

pub fn format_mesh(mesh: &Mesh) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "mesh {} {} {}", mesh.dim, mesh.num_vertices(), mesh.num_cells());
    for v in &mesh.vertices {
        if mesh.dim == 2 {
            let _ = writeln!(s, "v {:.16e} {:.16e}", v[0], v[1]);
        } else {
            let _ = writeln!(s, "v {:.16e} {:.16e} {:.16e}", v[0], v[1], v[2]);
        }
    }
    for (c, marker) in mesh.cells.iter().zip(&mesh.cell_markers) {
        let _ = writeln!(s, "c {} {} {} {}", c[0], c[1], c[2], marker);
    }
    for (&(cell, k), marker) in &mesh.facet_markers {
        let _ = writeln!(s, "f {cell} {k} {marker}");
    }
    s
}

pub fn read_mesh(path: impl AsRef<Path>) -> Result<Mesh> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)?;
    parse_mesh(&text, path)
}

pub fn parse_mesh(text: &str, path: &Path) -> Result<Mesh> {
    let err = |line: usize, msg: String| Error::parse(path, line, msg);
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));

    let (hl, header) = lines.next().ok_or_else(|| err(1, "empty file".into()))?;
    let h: Vec<&str> = header.split_whitespace().collect();
    if h.len() != 4 || h[0] != "mesh" {
        return Err(err(hl, format!("expected `mesh <dim> <nvertices> <ncells>`, got `{header}`")));
    }
    let parse_count = |s: &str| s.parse::<usize>().map_err(|e| err(hl, format!("bad count `{s}`: {e}")));
    let dim = parse_count(h[1])?;
    if dim != 2 && dim != 3 {
        return Err(err(hl, format!("dimension must be 2 or 3, got {dim}")));
    }
    let (nv, nc) = (parse_count(h[2])?, parse_count(h[3])?);

    let mut vertices = Vec::with_capacity(nv);
    let mut cells = Vec::with_capacity(nc);
    let mut cell_markers = Vec::with_capacity(nc);
    let mut facet_markers = std::collections::BTreeMap::new();
    let mut last_line = hl;

    for (ln, line) in lines {
        last_line = ln;
        let mut tok = line.split_whitespace();
        let kind = tok.next().unwrap_or_default();
        let rest: Vec<&str> = tok.collect();
        match kind {
            "v" => {
                if !cells.is_empty() || vertices.len() == nv {
                    return Err(err(ln, "unexpected vertex line".into()));
                }
                if rest.len() != dim {
                    return Err(err(ln, format!("vertex needs {dim} coordinates")));
                }
                let mut v = [0.0; 3];
                for (d, s) in rest.iter().enumerate() {
                    let x: f64 = s.parse().map_err(|e| err(ln, format!("bad coordinate `{s}`: {e}")))?;
                    if !x.is_finite() {
                        return Err(err(ln, format!("non-finite coordinate `{s}`")));
                    }
                    v[d] = x;
                }
                vertices.push(v);
            }
            "c" => {
                if vertices.len() != nv {
                    return Err(err(ln, format!("expected {nv} vertices before cells")));
                }
                if cells.len() == nc {
                    return Err(err(ln, format!("more than {nc} cells")));
                }
                if rest.len() != 3 && rest.len() != 4 {
                    return Err(err(ln, "cell needs 3 vertex indices and an optional marker".into()));
                }
                let mut c = [0usize; 3];
                for k in 0..3 {
                    let i: usize = rest[k]
                        .parse()
                        .map_err(|e| err(ln, format!("bad vertex index `{}`: {e}", rest[k])))?;
                    if i >= nv {
                        return Err(err(ln, format!("vertex index {i} out of range (nvertices = {nv})")));
                    }
                    c[k] = i;
                }
                let marker = match rest.get(3) {
                    Some(s) => s.parse().map_err(|e| err(ln, format!("bad marker `{s}`: {e}")))?,
                    None => 0,
                };
                cells.push(c);
                cell_markers.push(marker);
            }
            "f" => {
                if rest.len() != 3 {
                    return Err(err(ln, "facet line needs `<cell> <local_facet> <marker>`".into()));
                }
                let cell: usize = rest[0].parse().map_err(|e| err(ln, format!("bad cell `{}`: {e}", rest[0])))?;
                let k: usize = rest[1].parse().map_err(|e| err(ln, format!("bad facet `{}`: {e}", rest[1])))?;
                let marker: i64 = rest[2].parse().map_err(|e| err(ln, format!("bad marker `{}`: {e}", rest[2])))?;
                if cell >= nc || k > 2 {
                    return Err(err(ln, format!("facet ({cell}, {k}) out of range")));
                }
                facet_markers.insert((cell, k), marker);
            }
            other => return Err(err(ln, format!("unknown record `{other}`"))),
        }
    }
    if vertices.len() != nv || cells.len() != nc {
        return Err(err(
            last_line,
            format!("expected {nv} vertices and {nc} cells, found {} and {}", vertices.len(), cells.len()),
        ));
    }
    if let Some(&(cell, _)) = facet_markers.keys().find(|(c, _)| *c >= cells.len()) {
        return Err(err(last_line, format!("facet refers to missing cell {cell}")));
    }
    Ok(Mesh {
        dim,
        vertices,
        cells,
        cell_markers,
        facet_markers,
    })
}
