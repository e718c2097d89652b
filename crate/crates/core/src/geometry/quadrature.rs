use super::{orient, Point};
use crate::{Error, Result};

/// Quadrature rule in physical coordinates.
///
/// Weights carry the measure of the integration region (length or area), so
/// `∑ w = |region|` for any rule exact on constants.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct QuadRule {
    pub points: Vec<Point>,
    pub weights: Vec<f64>,
}

impl QuadRule {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn measure(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn integrate(&self, f: impl Fn(&Point) -> f64) -> f64 {
        self.points.iter().zip(&self.weights).map(|(p, w)| w * f(p)).sum()
    }

    pub fn append(&mut self, other: QuadRule) {
        self.points.extend(other.points);
        self.weights.extend(other.weights);
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Point, f64)> {
        self.points.iter().zip(self.weights.iter().copied())
    }

    /// Rule on the reference triangle (0,0), (1,0), (0,1) exact for
    /// polynomials of total degree `degree`. Weights sum to 1/2.
    pub fn reference_triangle(degree: usize) -> QuadRule {
        match degree {
            0 | 1 => QuadRule {
                points: vec![Point::new(1.0 / 3.0, 1.0 / 3.0)],
                weights: vec![0.5],
            },
            2..=4 => dunavant_degree4(),
            _ => collapsed_gauss(degree.div_ceil(2) + 1),
        }
    }

    /// Gauss–Legendre rule with `n` points on the reference segment [0, 1],
    /// exact to degree `2n - 1`. Points are stored as `(t, 0)`.
    pub fn reference_segment(n: usize) -> QuadRule {
        let (x, w) = gauss_legendre(n);
        QuadRule {
            points: x.iter().map(|&t| Point::new(0.5 * (t + 1.0), 0.0)).collect(),
            weights: w.iter().map(|&w| 0.5 * w).collect(),
        }
    }
}

/// Six-point symmetric rule of degree 4.
fn dunavant_degree4() -> QuadRule {
    const A: f64 = 0.445_948_490_915_964_886_318_329_253_883;
    const B: f64 = 0.091_576_213_509_770_743_459_571_463_402_2;
    const WA: f64 = 0.223_381_589_678_011_465_944_634_215_103;
    const WB: f64 = 0.109_951_743_655_321_867_388_699_118_231;
    let pts = [
        (A, A),
        (1.0 - 2.0 * A, A),
        (A, 1.0 - 2.0 * A),
        (B, B),
        (1.0 - 2.0 * B, B),
        (B, 1.0 - 2.0 * B),
    ];
    QuadRule {
        points: pts.iter().map(|&(x, y)| Point::new(x, y)).collect(),
        weights: [WA, WA, WA, WB, WB, WB].iter().map(|w| 0.5 * w).collect(),
    }
}

/// Tensor Gauss rule on the square mapped onto the triangle by collapsing one
/// edge. Exact to degree `2n - 2`.
fn collapsed_gauss(n: usize) -> QuadRule {
    let seg = QuadRule::reference_segment(n);
    let mut rule = QuadRule::default();
    for (a, wa) in seg.iter() {
        for (b, wb) in seg.iter() {
            let (s, t) = (a.x, b.x);
            rule.points.push(Point::new(s * (1.0 - t), t));
            rule.weights.push(wa * wb * (1.0 - t));
        }
    }
    rule
}

/// Gauss–Legendre nodes and weights on [-1, 1].
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "Gauss–Legendre rule needs at least one point");
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            // Legendre recurrence
            let (mut p0, mut p1) = (1.0, 0.0);
            for k in 0..n {
                let p2 = p1;
                p1 = p0;
                p0 = ((2 * k + 1) as f64 * z * p1 - k as f64 * p2) / (k + 1) as f64;
            }
            dp = n as f64 * (z * p0 - p1) / (z * z - 1.0);
            let dz = p0 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
        w[n - 1 - i] = w[i];
    }
    if n % 2 == 1 {
        x[n / 2] = 0.0;
    }
    (x, w)
}

/// A physical simplex a reference rule can be mapped onto.
#[derive(Clone, Copy, Debug)]
pub enum SimplexCell {
    Segment([Point; 2]),
    Triangle([Point; 3]),
}

/// Affine map of a reference rule onto a physical segment or triangle.
///
/// Segment rules use the `x` coordinate of their points on [0, 1].
pub fn map_quadrature(reference: &QuadRule, cell: &SimplexCell) -> Result<QuadRule> {
    match cell {
        SimplexCell::Segment([a, b]) => {
            let len = (b - a).norm();
            if len == 0.0 || !len.is_finite() {
                return Err(Error::Geometry("degenerate segment".into()));
            }
            Ok(QuadRule {
                points: reference.points.iter().map(|r| a + (b - a) * r.x).collect(),
                weights: reference.weights.iter().map(|w| w * len).collect(),
            })
        }
        SimplexCell::Triangle([a, b, c]) => {
            let det = orient(a, b, c);
            if det == 0.0 || !det.is_finite() {
                return Err(Error::Geometry("degenerate triangle".into()));
            }
            let (e1, e2) = (b - a, c - a);
            Ok(QuadRule {
                points: reference.points.iter().map(|r| a + e1 * r.x + e2 * r.y).collect(),
                weights: reference.weights.iter().map(|w| w * det.abs()).collect(),
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn monomial_integral(i: i32, j: i32) -> f64 {
        // ∫ x^i y^j over the reference triangle = i! j! / (i + j + 2)!
        let fact = |n: i32| (1..=n).map(f64::from).product::<f64>();
        fact(i) * fact(j) / fact(i + j + 2)
    }

    #[test]
    fn reference_triangle_rules_are_exact() {
        for degree in [1usize, 2, 4, 5, 6, 8] {
            let rule = QuadRule::reference_triangle(degree);
            for i in 0..=degree as i32 {
                for j in 0..=(degree as i32 - i) {
                    let q = rule.integrate(|p| p.x.powi(i) * p.y.powi(j));
                    let exact = monomial_integral(i, j);
                    assert!((q - exact).abs() < 1e-14, "deg {degree} x^{i} y^{j}: {q} vs {exact}");
                }
            }
        }
    }

    #[test]
    fn gauss_legendre_is_exact() {
        for n in 1..8 {
            let (x, w) = gauss_legendre(n);
            for k in 0..(2 * n) {
                let q: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(k as i32)).sum();
                let exact = if k % 2 == 1 { 0.0 } else { 2.0 / (k as f64 + 1.0) };
                assert!((q - exact).abs() < 1e-14, "n={n} k={k}");
            }
        }
    }

    #[test]
    fn midpoint_rule_on_long_segment() {
        let mid = QuadRule::reference_segment(1);
        let seg = SimplexCell::Segment([Point::new(0.0, 0.0), Point::new(2.0, 0.0)]);
        let rule = map_quadrature(&mid, &seg).unwrap();
        assert_eq!(rule.weights, vec![2.0]);
        assert_eq!(rule.points, vec![Point::new(1.0, 0.0)]);
    }

    #[test]
    fn degree4_rule_on_unit_triangle() {
        let cell = SimplexCell::Triangle([Point::new(0.0, 0.0), Point::new(1.0, 0.0), Point::new(0.0, 1.0)]);
        let rule = map_quadrature(&QuadRule::reference_triangle(4), &cell).unwrap();
        assert!((rule.measure() - 0.5).abs() < 1e-15);
        // ∫ x² y over the triangle = 2!·1!/5! = 1/60
        let q = rule.integrate(|p| p.x * p.x * p.y);
        assert!((q - 1.0 / 60.0).abs() < 1e-15);
    }

    #[test]
    fn mapped_weights_sum_to_cell_measure() {
        let cell = SimplexCell::Triangle([Point::new(1.0, 1.0), Point::new(1.3, 2.0), Point::new(-0.2, 1.7)]);
        let area = 0.5 * orient(&Point::new(1.0, 1.0), &Point::new(1.3, 2.0), &Point::new(-0.2, 1.7)).abs();
        let rule = map_quadrature(&QuadRule::reference_triangle(4), &cell).unwrap();
        assert!((rule.measure() - area).abs() <= 1e-14 * area);
    }

    #[test]
    fn degenerate_cells_are_errors() {
        let r = QuadRule::reference_triangle(4);
        let flat = SimplexCell::Triangle([Point::new(0.0, 0.0), Point::new(1.0, 1.0), Point::new(2.0, 2.0)]);
        assert!(map_quadrature(&r, &flat).is_err());
        let dot = SimplexCell::Segment([Point::new(1.0, 1.0), Point::new(1.0, 1.0)]);
        assert!(map_quadrature(&QuadRule::reference_segment(3), &dot).is_err());
    }
}
