use rayon::prelude::*;

use super::element::{BasisValues, Element};
use super::space::TaylorHoodSpace;
use super::StokesParams;
use crate::geometry::{Point, QuadRule, Vector};
use crate::linsolve::SparseMatrix;
use crate::multimesh::{CellKind, InterfaceSegment, MultiMesh};
use crate::Result;

/// Assembled operator and load vector.
#[derive(Clone, Debug)]
pub struct LinearSystem {
    pub matrix: SparseMatrix,
    pub rhs: Vec<f64>,
    /// Rows replaced by boundary conditions or pinning.
    pub constrained: Vec<bool>,
    /// Unknowns belonging to the finite element space; anything beyond is a
    /// Lagrange multiplier.
    pub num_space_dofs: usize,
}

impl LinearSystem {
    pub fn size(&self) -> usize {
        self.rhs.len()
    }
}

#[derive(Default)]
struct Contribution {
    entries: Vec<(usize, usize, f64)>,
    rhs: Vec<(usize, f64)>,
}

impl Contribution {
    fn scatter(&mut self, dofs: &[Option<usize>], local: &[f64], local_rhs: &[f64]) {
        let n = dofs.len();
        for (i, di) in dofs.iter().enumerate() {
            let Some(gi) = *di else { continue };
            for (j, dj) in dofs.iter().enumerate() {
                let v = local[i * n + j];
                if let (Some(gj), true) = (*dj, v != 0.0) {
                    self.entries.push((gi, gj, v));
                }
            }
            if local_rhs[i] != 0.0 {
                self.rhs.push((gi, local_rhs[i]));
            }
        }
    }
}

fn force(params: &StokesParams, x: &Point) -> Vector {
    params.f.as_ref().map_or(Vector::zeros(), |f| f(x))
}

/// Galerkin volume terms `(∇u, ∇v) − (div v, p) − (div u, q)` and `(f, v)`.
fn volume_terms(el: &Element, rule: &QuadRule, params: &StokesParams, a: &mut [f64], b: &mut [f64]) {
    for (x, w) in rule.iter() {
        let bv = el.eval(x);
        let f = force(params, x);
        for i in 0..6 {
            for j in 0..6 {
                let k = w * bv.dphi[i].dot(&bv.dphi[j]);
                a[i * 15 + j] += k;
                a[(6 + i) * 15 + 6 + j] += k;
            }
            for c in 0..2 {
                let vi = c * 6 + i;
                for q in 0..3 {
                    let k = -w * bv.dphi[i][c] * bv.psi[q];
                    a[vi * 15 + 12 + q] += k;
                    a[(12 + q) * 15 + vi] += k;
                }
                b[vi] += w * f[c] * bv.phi[i];
            }
        }
    }
}

/// Trial and test vectors of the least-squares term: `Δu − ∇p` and `Δv + ∇q`.
fn residual_vectors(bv: &BasisValues) -> ([Vector; 15], [Vector; 15]) {
    let mut trial = [Vector::zeros(); 15];
    let mut test = [Vector::zeros(); 15];
    for i in 0..6 {
        trial[i] = Vector::new(bv.lap[i], 0.0);
        trial[6 + i] = Vector::new(0.0, bv.lap[i]);
    }
    test[..12].copy_from_slice(&trial[..12]);
    for q in 0..3 {
        trial[12 + q] = -bv.dpsi[q];
        test[12 + q] = bv.dpsi[q];
    }
    (trial, test)
}

/// `h²(Δu − ∇p, Δv + ∇q)` and `−h²(f, Δv + ∇q)` over the visible part of a
/// cut background cell.
fn least_squares_terms(el: &Element, h: f64, rule: &QuadRule, params: &StokesParams, a: &mut [f64], b: &mut [f64]) {
    let h2 = h * h;
    for (x, w) in rule.iter() {
        let (trial, test) = residual_vectors(&el.eval(x));
        let f = force(params, x);
        for s in 0..15 {
            for t in 0..15 {
                a[s * 15 + t] += w * h2 * test[s].dot(&trial[t]);
            }
            b[s] -= w * h2 * f.dot(&test[s]);
        }
    }
}

/// `([∇u], [∇v]) + γ([p], [q])` over the overlapped part of a cut background
/// cell. Local layout: background dofs 0..15, overlapping dofs 15..30.
fn overlap_terms(bg: &Element, ov: &Element, gamma: f64, rule: &QuadRule, a: &mut [f64]) {
    for (x, w) in rule.iter() {
        let sides = [(bg.eval(x), -1.0, 0usize), (ov.eval(x), 1.0, 15usize)];
        for (bs, ss, os) in &sides {
            for (bt, st, ot) in &sides {
                let sign = ss * st * w;
                for i in 0..6 {
                    for j in 0..6 {
                        let k = sign * bs.dphi[i].dot(&bt.dphi[j]);
                        a[(os + i) * 30 + ot + j] += k;
                        a[(os + 6 + i) * 30 + ot + 6 + j] += k;
                    }
                }
                for i in 0..3 {
                    for j in 0..3 {
                        a[(os + 12 + i) * 30 + ot + 12 + j] += gamma * sign * bs.psi[i] * bt.psi[j];
                    }
                }
            }
        }
    }
}

/// Nitsche coupling on an interface segment:
/// `−(⟨∇u n⟩, [v]) − ([u], ⟨∇v n⟩) + β/h ([u], [v]) + ([n·u], ⟨q⟩) + ([n·v], ⟨p⟩)`
/// with `[v] = v₁ − v₀` and `n` pointing out of the overlapping part.
fn interface_terms(bg: &Element, ov: &Element, seg: &InterfaceSegment, h: f64, beta: f64, rule: &QuadRule, a: &mut [f64]) {
    let n = seg.normal;
    let penalty = beta / h;
    for (x, w) in rule.iter() {
        let sides = [(bg.eval(x), -1.0, 0usize), (ov.eval(x), 1.0, 15usize)];
        for (bs, ss, os) in &sides {
            // test functions on side s
            for (bt, st, ot) in &sides {
                // trial functions on side t
                for i in 0..6 {
                    let dvn = bs.dphi[i].dot(&n);
                    for j in 0..6 {
                        let dun = bt.dphi[j].dot(&n);
                        let k = w
                            * (-0.5 * dun * ss * bs.phi[i] - st * bt.phi[j] * 0.5 * dvn
                                + penalty * st * ss * bt.phi[j] * bs.phi[i]);
                        a[(os + i) * 30 + ot + j] += k;
                        a[(os + 6 + i) * 30 + ot + 6 + j] += k;
                    }
                }
                for c in 0..2 {
                    for j in 0..6 {
                        for q in 0..3 {
                            // row q on side s, column u_c on side t
                            a[(os + 12 + q) * 30 + ot + c * 6 + j] += w * st * bt.phi[j] * n[c] * 0.5 * bs.psi[q];
                            // row v_c on side s, column p on side t
                            a[(os + c * 6 + j) * 30 + ot + 12 + q] += w * ss * bs.phi[j] * n[c] * 0.5 * bt.psi[q];
                        }
                    }
                }
            }
        }
    }
}

enum Job<'a> {
    Cell(usize, usize),
    Interface(&'a InterfaceSegment),
}

/// Assemble every term of the stabilized multimesh Stokes form.
pub fn assemble_system(mm: &MultiMesh, space: &TaylorHoodSpace, params: &StokesParams) -> Result<LinearSystem> {
    params.validate()?;
    let n = space.num_dofs();
    let deg = params.volume_degree;
    let mut jobs: Vec<Job> = Vec::new();
    for part in 0..mm.num_parts() {
        for c in 0..mm.part(part).num_cells() {
            if mm.kind(part, c) != CellKind::Covered {
                jobs.push(Job::Cell(part, c));
            }
        }
    }
    jobs.extend(mm.all_interface_segments().map(Job::Interface));

    let parts: Vec<Contribution> = jobs
        .par_iter()
        .map(|job| {
            let mut out = Contribution::default();
            match *job {
                Job::Cell(part, c) => {
                    let mesh = mm.part(part);
                    let el = Element::new(mesh.triangle(c));
                    let dofs = space.cell_dofs(part, c);
                    let mut a = vec![0.0; 225];
                    let mut b = vec![0.0; 15];
                    let rule = mm.visible_quadrature(part, c, deg);
                    volume_terms(&el, &rule, params, &mut a, &mut b);
                    if part == 0 && mm.kind(0, c) == CellKind::Cut {
                        least_squares_terms(&el, mesh.cell_size(c), &rule, params, &mut a, &mut b);
                    }
                    out.scatter(&dofs, &a, &b);
                    if part == 0 && mm.kind(0, c) == CellKind::Cut {
                        for (op, oc, rule) in mm.overlapped_quadrature(c, deg) {
                            let ov = Element::new(mm.part(op).triangle(oc));
                            let mut a = vec![0.0; 900];
                            overlap_terms(&el, &ov, params.gamma, &rule, &mut a);
                            let mut pair = dofs.to_vec();
                            pair.extend(space.cell_dofs(op, oc));
                            out.scatter(&pair, &a, &[0.0; 30]);
                        }
                    }
                }
                Job::Interface(seg) => {
                    let bg = Element::new(mm.part(0).triangle(seg.background_cell));
                    let ov = Element::new(mm.part(seg.part).triangle(seg.cell));
                    let h = 0.5 * (mm.part(0).cell_size(seg.background_cell) + mm.part(seg.part).cell_size(seg.cell));
                    let rule = MultiMesh::interface_quadrature(seg, params.interface_points);
                    let mut a = vec![0.0; 900];
                    interface_terms(&bg, &ov, seg, h, params.beta, &rule, &mut a);
                    let mut pair = space.cell_dofs(0, seg.background_cell).to_vec();
                    pair.extend(space.cell_dofs(seg.part, seg.cell));
                    out.scatter(&pair, &a, &[0.0; 30]);
                }
            }
            out
        })
        .collect();

    let mut entries = Vec::with_capacity(parts.iter().map(|p| p.entries.len()).sum());
    let mut rhs = vec![0.0; n];
    for p in parts {
        entries.extend(p.entries);
        for (i, v) in p.rhs {
            rhs[i] += v;
        }
    }
    Ok(LinearSystem {
        matrix: SparseMatrix::from_triplets(n, n, entries),
        rhs,
        constrained: vec![false; n],
        num_space_dofs: n,
    })
}
