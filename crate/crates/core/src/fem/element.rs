use crate::geometry::{orient, Point, Vector};

/// Quadratic (velocity) and linear (pressure) Lagrange basis on a triangle.
///
/// Local P2 numbering: vertices 0..3, then edge nodes 3..6 where edge node
/// `3 + k` sits on the edge opposite vertex `k`. Basis functions are
/// polynomials, so they can be evaluated outside the triangle as well.
#[derive(Clone, Debug)]
pub struct Element {
    pub vertices: [Point; 3],
    grad_lambda: [Vector; 3],
}

#[derive(Clone, Debug, Default)]
pub struct BasisValues {
    pub phi: [f64; 6],
    pub dphi: [Vector; 6],
    pub lap: [f64; 6],
    pub psi: [f64; 3],
    pub dpsi: [Vector; 3],
}

impl Element {
    pub fn new(vertices: [Point; 3]) -> Self {
        let det = orient(&vertices[0], &vertices[1], &vertices[2]);
        let grad_lambda = std::array::from_fn(|i| {
            let a = vertices[(i + 1) % 3];
            let b = vertices[(i + 2) % 3];
            // rotate the opposite edge by -90°
            Vector::new(a.y - b.y, b.x - a.x) / det
        });
        Element { vertices, grad_lambda }
    }

    pub fn lambda(&self, p: &Point) -> [f64; 3] {
        // λ_i vanishes on the edge opposite vertex i
        std::array::from_fn(|i| self.grad_lambda[i].dot(&(p - self.vertices[(i + 1) % 3])))
    }

    pub fn grad_lambda(&self) -> &[Vector; 3] {
        &self.grad_lambda
    }

    pub fn eval(&self, p: &Point) -> BasisValues {
        let l = self.lambda(p);
        let g = &self.grad_lambda;
        let mut out = BasisValues::default();
        for i in 0..3 {
            out.phi[i] = l[i] * (2.0 * l[i] - 1.0);
            out.dphi[i] = g[i] * (4.0 * l[i] - 1.0);
            out.lap[i] = 4.0 * g[i].norm_squared();
            let (a, b) = ((i + 1) % 3, (i + 2) % 3);
            out.phi[3 + i] = 4.0 * l[a] * l[b];
            out.dphi[3 + i] = (g[b] * l[a] + g[a] * l[b]) * 4.0;
            out.lap[3 + i] = 8.0 * g[a].dot(&g[b]);
            out.psi[i] = l[i];
            out.dpsi[i] = g[i];
        }
        out
    }

    /// Physical location of local P2 node `k`.
    pub fn node(&self, k: usize) -> Point {
        if k < 3 {
            self.vertices[k]
        } else {
            let i = k - 3;
            nalgebra::center(&self.vertices[(i + 1) % 3], &self.vertices[(i + 2) % 3])
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{map_quadrature, QuadRule, SimplexCell};

    fn tri() -> [Point; 3] {
        [Point::new(0.3, -0.1), Point::new(1.4, 0.2), Point::new(0.5, 1.1)]
    }

    #[test]
    fn nodal_basis_is_kronecker() {
        let e = Element::new(tri());
        for k in 0..6 {
            let b = e.eval(&e.node(k));
            for j in 0..6 {
                let expect = if j == k { 1.0 } else { 0.0 };
                assert!((b.phi[j] - expect).abs() < 1e-14, "node {k} basis {j}: {}", b.phi[j]);
            }
        }
        for k in 0..3 {
            let b = e.eval(&e.vertices[k]);
            for j in 0..3 {
                assert!((b.psi[j] - if j == k { 1.0 } else { 0.0 }).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn partition_of_unity_and_gradients() {
        let e = Element::new(tri());
        let p = Point::new(0.7, 0.4);
        let b = e.eval(&p);
        assert!((b.phi.iter().sum::<f64>() - 1.0).abs() < 1e-14);
        let g: Vector = b.dphi.iter().sum();
        assert!(g.norm() < 1e-13);
        let h = 1e-6;
        for k in 0..6 {
            let fx = (e.eval(&Point::new(p.x + h, p.y)).phi[k] - e.eval(&Point::new(p.x - h, p.y)).phi[k]) / (2.0 * h);
            let fy = (e.eval(&Point::new(p.x, p.y + h)).phi[k] - e.eval(&Point::new(p.x, p.y - h)).phi[k]) / (2.0 * h);
            assert!((fx - b.dphi[k].x).abs() < 1e-7 && (fy - b.dphi[k].y).abs() < 1e-7);
        }
    }

    #[test]
    fn interpolates_quadratics_exactly() {
        let e = Element::new(tri());
        let f = |p: &Point| 1.0 + 2.0 * p.x - p.y + 3.0 * p.x * p.y - 0.5 * p.y * p.y + p.x * p.x;
        let coeffs: Vec<f64> = (0..6).map(|k| f(&e.node(k))).collect();
        let p = Point::new(0.2, 0.9);
        let b = e.eval(&p);
        let v: f64 = (0..6).map(|k| coeffs[k] * b.phi[k]).sum();
        let lap: f64 = (0..6).map(|k| coeffs[k] * b.lap[k]).sum();
        assert!((v - f(&p)).abs() < 1e-13);
        assert!((lap - 1.0).abs() < 1e-12);
    }

    #[test]
    fn stiffness_rows_sum_to_zero() {
        let e = Element::new(tri());
        let rule = map_quadrature(&QuadRule::reference_triangle(4), &SimplexCell::Triangle(tri())).unwrap();
        for a in 0..6 {
            let row: f64 = (0..6)
                .map(|b| rule.integrate(|p| e.eval(p).dphi[a].dot(&e.eval(p).dphi[b])))
                .sum();
            assert!(row.abs() < 1e-13);
        }
    }
}
