//! Six-point Gauss rule on triangles, exact for polynomials of degree 4.

/// Barycentric coordinates of the quadrature points.
pub const POINTS: [[f64; 3]; 6] = {
    const A1: f64 = 0.445_948_490_915_964_886_318_329_253_883;
    const B1: f64 = 1.0 - 2.0 * A1;
    const A2: f64 = 0.091_576_213_509_770_743_459_571_463_402_2;
    const B2: f64 = 1.0 - 2.0 * A2;
    [
        [A1, A1, B1],
        [A1, B1, A1],
        [B1, A1, A1],
        [A2, A2, B2],
        [A2, B2, A2],
        [B2, A2, A2],
    ]
};

/// Weights normalised to sum to one; multiply by the triangle area.
pub const WEIGHTS: [f64; 6] = {
    const W1: f64 = 0.223_381_589_678_011_465_944_827_307_725_7;
    const W2: f64 = 0.109_951_743_655_321_867_388_505_825_607_6;
    [W1, W1, W1, W2, W2, W2]
};

#[cfg(test)]
mod tests {
    use super::*;

    fn factorial(k: u32) -> f64 {
        (1..=k).map(f64::from).product()
    }

    /// ∫ over the unit reference triangle of x^p y^q = p! q! / (p + q + 2)!
    #[test]
    fn exact_up_to_degree_four() {
        for p in 0..=4u32 {
            for q in 0..=(4 - p) {
                let exact = factorial(p) * factorial(q) / factorial(p + q + 2);
                let approx: f64 = POINTS
                    .iter()
                    .zip(WEIGHTS)
                    .map(|(l, w)| 0.5 * w * l[1].powi(p as i32) * l[2].powi(q as i32))
                    .sum();
                assert!(
                    (approx - exact).abs() < 1e-15,
                    "x^{p} y^{q}: {approx} vs {exact}"
                );
            }
        }
    }

    #[test]
    fn not_exact_at_degree_six() {
        let exact = factorial(6) / factorial(8);
        let approx: f64 = POINTS
            .iter()
            .zip(WEIGHTS)
            .map(|(l, w)| 0.5 * w * l[1].powi(6))
            .sum();
        assert!((approx - exact).abs() > 1e-6);
    }

    #[test]
    fn weights_sum_to_one() {
        let s: f64 = WEIGHTS.iter().sum();
        assert!((s - 1.0).abs() < 1e-15);
        for p in POINTS {
            assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        }
    }
}
