//! Symmetric quadrature rules on the reference triangle and tetrahedron.
//!
//! Points are barycentric; weights sum to the reference measure (1/2 for the
//! triangle, 1/6 for the tetrahedron). A physical integral over a simplex of
//! measure `m` is `Σ w · (m / reference measure) · g(x)`.

use alloc::vec::Vec;

#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule<const N: usize> {
    pub points: Vec<[f64; N]>,
    pub weights: Vec<f64>,
    pub degree: usize,
}

pub type TriangleRule = QuadratureRule<3>;
pub type TetRule = QuadratureRule<4>;

impl<const N: usize> QuadratureRule<N> {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&[f64; N], f64)> {
        self.points.iter().zip(self.weights.iter().copied())
    }

    /// Sum of weights, i.e. the reference measure.
    pub fn reference_measure(&self) -> f64 {
        self.weights.iter().sum()
    }
}

impl TriangleRule {
    /// Smallest positive rule in this module that is exact for `degree`.
    pub fn with_degree(degree: usize) -> Self {
        match degree {
            0 | 1 => Self::centroid(),
            2 => Self::degree2(),
            3 | 4 => Self::degree4(),
            _ => panic!("no triangle rule of degree {degree}"),
        }
    }

    pub fn centroid() -> Self {
        Self {
            points: alloc::vec![[1.0 / 3.0; 3]],
            weights: alloc::vec![0.5],
            degree: 1,
        }
    }

    pub fn degree2() -> Self {
        let mut points = Vec::new();
        orbit3(&mut points, 1.0 / 6.0);
        Self {
            points,
            weights: alloc::vec![1.0 / 6.0; 3],
            degree: 2,
        }
    }

    /// Six-point rule (Strang-Fix / Dunavant).
    pub fn degree4() -> Self {
        let mut points = Vec::new();
        let mut weights = Vec::new();
        for (a, w) in [
            (0.445_948_490_915_965, 0.223_381_589_678_011),
            (0.091_576_213_509_771, 0.109_951_743_655_322),
        ] {
            orbit3(&mut points, a);
            weights.extend([0.5 * w; 3]);
        }
        Self {
            points,
            weights,
            degree: 4,
        }
    }
}

impl TetRule {
    pub fn with_degree(degree: usize) -> Self {
        match degree {
            0 | 1 => Self::centroid(),
            2 => Self::degree2(),
            3..=5 => Self::degree5(),
            _ => panic!("no tetrahedron rule of degree {degree}"),
        }
    }

    pub fn centroid() -> Self {
        Self {
            points: alloc::vec![[0.25; 4]],
            weights: alloc::vec![1.0 / 6.0],
            degree: 1,
        }
    }

    pub fn degree2() -> Self {
        let mut points = Vec::new();
        orbit4_1(&mut points, 0.1381966011250105);
        Self {
            points,
            weights: alloc::vec![1.0 / 24.0; 4],
            degree: 2,
        }
    }

    /// Fourteen-point rule with positive weights, exact for degree 5.
    pub fn degree5() -> Self {
        let mut points = Vec::new();
        let mut weights = Vec::new();
        let a = 0.0455037041256496;
        for i in 0..4 {
            for j in i + 1..4 {
                let mut p = [0.5 - a; 4];
                p[i] = a;
                p[j] = a;
                points.push(p);
            }
        }
        weights.extend([0.007091003462846911; 6]);
        for (b, w) in [
            (0.0927352503108912, 0.01224884051939366),
            (0.3108859192633006, 0.01878132095300264),
        ] {
            orbit4_1(&mut points, b);
            weights.extend([w; 4]);
        }
        Self {
            points,
            weights,
            degree: 5,
        }
    }
}

/// The three permutations of `(a, a, 1 - 2a)`.
fn orbit3(points: &mut Vec<[f64; 3]>, a: f64) {
    let b = 1.0 - 2.0 * a;
    points.extend([[b, a, a], [a, b, a], [a, a, b]]);
}

/// The four permutations of `(a, a, a, 1 - 3a)`.
fn orbit4_1(points: &mut Vec<[f64; 4]>, a: f64) {
    for i in 0..4 {
        let mut p = [a; 4];
        p[i] = 1.0 - 3.0 * a;
        points.push(p);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn factorial(n: u32) -> f64 {
        (1..=n).map(f64::from).product()
    }

    /// `∫ x^i y^j z^k` over the reference simplex, by the Dirichlet formula.
    fn monomial_integral(exponents: &[u32]) -> f64 {
        let dim = exponents.len() as u32;
        let total: u32 = exponents.iter().sum();
        exponents.iter().map(|&e| factorial(e)).product::<f64>() / factorial(total + dim)
    }

    fn check_tet(rule: &TetRule) {
        assert!(rule.weights.iter().all(|&w| w > 0.0));
        assert!((rule.reference_measure() - 1.0 / 6.0).abs() < 1e-15);
        let d = rule.degree as u32;
        for i in 0..=d {
            for j in 0..=d - i {
                for k in 0..=d - i - j {
                    let q: f64 = rule
                        .iter()
                        .map(|(p, w)| w * p[1].powi(i as i32) * p[2].powi(j as i32) * p[3].powi(k as i32))
                        .sum();
                    let exact = monomial_integral(&[i, j, k]);
                    assert!((q - exact).abs() < 1e-13, "x^{i} y^{j} z^{k}: {q} vs {exact}");
                }
            }
        }
    }

    fn check_triangle(rule: &TriangleRule) {
        assert!(rule.weights.iter().all(|&w| w > 0.0));
        assert!((rule.reference_measure() - 0.5).abs() < 1e-15);
        let d = rule.degree as u32;
        for i in 0..=d {
            for j in 0..=d - i {
                let q: f64 = rule
                    .iter()
                    .map(|(p, w)| w * p[1].powi(i as i32) * p[2].powi(j as i32))
                    .sum();
                let exact = monomial_integral(&[i, j]);
                assert!((q - exact).abs() < 1e-13, "x^{i} y^{j}: {q} vs {exact}");
            }
        }
    }

    #[test]
    fn tetrahedron_rules_are_exact() {
        for rule in [TetRule::centroid(), TetRule::degree2(), TetRule::degree5()] {
            check_tet(&rule);
        }
        assert_eq!(TetRule::with_degree(4).len(), 14);
    }

    #[test]
    fn triangle_rules_are_exact() {
        for rule in [TriangleRule::centroid(), TriangleRule::degree2(), TriangleRule::degree4()] {
            check_triangle(&rule);
        }
    }

    #[test]
    fn barycentric_coordinates_sum_to_one() {
        for p in TetRule::degree5().points {
            assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        }
        for p in TriangleRule::degree4().points {
            assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        }
    }
}
