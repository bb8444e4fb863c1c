//! Quadrature on the reference triangle (barycentric points, weights summing
//! to one) and on the unit interval.

#[derive(Clone, Debug)]
pub struct Quadrature {
    pub points: Vec<[f64; 3]>,
    pub weights: Vec<f64>,
}

impl Quadrature {
    /// Three interior points, exact for quadratics.
    pub fn order2() -> Self {
        let (a, b) = (2.0 / 3.0, 1.0 / 6.0);
        Self { points: vec![[a, b, b], [b, a, b], [b, b, a]], weights: vec![1.0 / 3.0; 3] }
    }

    /// Seven points, exact for polynomials of degree five.
    pub fn order5() -> Self {
        let (a1, b1, w1) = (0.059715871789770, 0.470142064105115, 0.132394152788506);
        let (a2, b2, w2) = (0.797426985353087, 0.101286507323456, 0.125939180544827);
        let c = 1.0 / 3.0;
        Self {
            points: vec![[c, c, c], [a1, b1, b1], [b1, a1, b1], [b1, b1, a1], [a2, b2, b2], [b2, a2, b2], [b2, b2, a2]],
            weights: vec![0.225, w1, w1, w1, w2, w2, w2],
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Three-point Gauss rule on `[0, 1]`: `(parameter, weight)` pairs.
pub fn gauss_edge() -> [(f64, f64); 3] {
    let d = 15f64.sqrt() / 10.0;
    [(0.5, 8.0 / 18.0), (0.5 - d, 5.0 / 18.0), (0.5 + d, 5.0 / 18.0)]
}

#[cfg(test)]
mod tests {
    use super::*;

    // Exact integral of x^i y^j over the reference triangle: i! j! / (i+j+2)!.
    fn exact(i: u32, j: u32) -> f64 {
        let f = |n: u32| (1..=n).map(f64::from).product::<f64>();
        f(i) * f(j) / f(i + j + 2)
    }

    fn check(rule: &Quadrature, degree: u32) {
        assert!((rule.weights.iter().sum::<f64>() - 1.0).abs() < 1e-14);
        for i in 0..=degree {
            for j in 0..=degree - i {
                let q: f64 = rule
                    .points
                    .iter()
                    .zip(&rule.weights)
                    .map(|(p, w)| w * 0.5 * p[1].powi(i as i32) * p[2].powi(j as i32))
                    .sum();
                assert!((q - exact(i, j)).abs() < 1e-13, "x^{i} y^{j}");
            }
        }
    }

    #[test]
    fn triangle_rules_are_exact() {
        check(&Quadrature::order2(), 2);
        check(&Quadrature::order5(), 5);
    }

    #[test]
    fn edge_rule_is_exact_to_degree_five() {
        for k in 0..=5 {
            let q: f64 = gauss_edge().iter().map(|(t, w)| w * t.powi(k)).sum();
            assert!((q - 1.0 / (k as f64 + 1.0)).abs() < 1e-14);
        }
    }
}
