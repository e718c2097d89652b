use std::collections::HashMap;
use std::path::Path;

use super::Mesh;
use crate::{Error, Result};

/// Surface mesh read from STL plus the number of facets dropped as degenerate.
#[derive(Clone, Debug)]
pub struct StlImport {
    pub mesh: Mesh,
    pub degenerate: usize,
}

/// Read a binary or ASCII STL file as a 3D surface mesh.
///
/// Coincident vertices are merged; zero-area facets are dropped with a
/// warning.
pub fn read_stl(path: impl AsRef<Path>) -> Result<Mesh> {
    let path = path.as_ref();
    let import = parse_stl(&std::fs::read(path)?, path)?;
    if import.degenerate > 0 {
        log::warn!("{}: dropped {} degenerate facets", path.display(), import.degenerate);
    }
    Ok(import.mesh)
}

pub fn parse_stl(bytes: &[u8], path: &Path) -> Result<StlImport> {
    let binary_len = |n: usize| 84 + 50 * n;
    let declared = (bytes.len() >= 84).then(|| u32::from_le_bytes(bytes[80..84].try_into().unwrap()) as usize);
    let looks_ascii = bytes.starts_with(b"solid") && declared.is_none_or(|n| binary_len(n) != bytes.len());
    let facets = if looks_ascii {
        parse_ascii(bytes, path)?
    } else {
        let n = declared.ok_or_else(|| Error::parse(path, 0, "truncated STL header"))?;
        if bytes.len() < binary_len(n) {
            return Err(Error::parse(
                path,
                0,
                format!("truncated binary STL: {n} facets need {} bytes, found {}", binary_len(n), bytes.len()),
            ));
        }
        (0..n)
            .map(|i| {
                let rec = &bytes[84 + 50 * i..84 + 50 * (i + 1)];
                let f = |k: usize| f32::from_le_bytes(rec[4 * k..4 * k + 4].try_into().unwrap()) as f64;
                // 3 normal components first
                [[f(3), f(4), f(5)], [f(6), f(7), f(8)], [f(9), f(10), f(11)]]
            })
            .collect()
    };
    Ok(build(facets))
}

fn parse_ascii(bytes: &[u8], path: &Path) -> Result<Vec<[[f64; 3]; 3]>> {
    let text = std::str::from_utf8(bytes).map_err(|e| Error::parse(path, 0, format!("invalid UTF-8: {e}")))?;
    let mut facets = Vec::new();
    let mut current: Vec<[f64; 3]> = Vec::with_capacity(3);
    let mut in_facet = false;
    let mut last = 0;
    for (i, line) in text.lines().enumerate() {
        let ln = i + 1;
        last = ln;
        let mut tok = line.split_whitespace();
        match tok.next() {
            Some("facet") => {
                if in_facet {
                    return Err(Error::parse(path, ln, "facet opened twice"));
                }
                in_facet = true;
                current.clear();
            }
            Some("vertex") => {
                let v: Vec<f64> = tok
                    .map(|s| s.parse::<f64>())
                    .collect::<std::result::Result<_, _>>()
                    .map_err(|e| Error::parse(path, ln, format!("bad vertex: {e}")))?;
                if v.len() != 3 || !in_facet || v.iter().any(|x| !x.is_finite()) {
                    return Err(Error::parse(path, ln, "malformed vertex record"));
                }
                current.push([v[0], v[1], v[2]]);
            }
            Some("endfacet") => {
                if current.len() != 3 {
                    return Err(Error::parse(path, ln, format!("facet has {} vertices", current.len())));
                }
                facets.push([current[0], current[1], current[2]]);
                in_facet = false;
            }
            _ => {}
        }
    }
    if in_facet {
        return Err(Error::parse(path, last, "truncated ASCII STL: unterminated facet"));
    }
    Ok(facets)
}

fn build(facets: Vec<[[f64; 3]; 3]>) -> StlImport {
    let mut index: HashMap<[u64; 3], usize> = HashMap::new();
    let mut vertices = Vec::new();
    let mut cells = Vec::with_capacity(facets.len());
    let mut degenerate = 0;
    for f in facets {
        let ids = f.map(|v| {
            let key = v.map(|x| (x + 0.0).to_bits());
            *index.entry(key).or_insert_with(|| {
                vertices.push(v);
                vertices.len() - 1
            })
        });
        let [a, b, c] = f.map(nalgebra::Vector3::from);
        if ids[0] == ids[1] || ids[1] == ids[2] || ids[0] == ids[2] || (b - a).cross(&(c - a)).norm() == 0.0 {
            degenerate += 1;
            continue;
        }
        cells.push(ids);
    }
    StlImport {
        mesh: Mesh::new(3, vertices, cells),
        degenerate,
    }
}

/// Binary STL encoding of a 3D surface mesh.
pub fn encode_binary_stl(mesh: &Mesh) -> Vec<u8> {
    let mut out = vec![0u8; 80];
    out.extend_from_slice(&(mesh.num_cells() as u32).to_le_bytes());
    for cell in &mesh.cells {
        let [a, b, c] = cell.map(|v| nalgebra::Vector3::from(mesh.vertices[v]));
        let n = (b - a).cross(&(c - a)).normalize();
        for x in n.iter().chain(a.iter()).chain(b.iter()).chain(c.iter()) {
            out.extend_from_slice(&(*x as f32).to_le_bytes());
        }
        out.extend_from_slice(&[0, 0]);
    }
    out
}
