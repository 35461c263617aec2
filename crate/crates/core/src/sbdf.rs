//! Coefficients of the semi-implicit backward differentiation formulas.
//!
//! Order k applies the BDF weights a_0..a_k to the solution history and the
//! extrapolation weights b_1..b_k to the explicit terms:
//!
//!   sum_{i=0}^k a_i u^{n-i} / tau = implicit(u^n) + sum_{i=1}^k b_i explicit(u^{n-i})

/// SBDF coefficient row for a given order.
#[derive(Clone, Copy, Debug)]
pub struct SbdfScheme {
    pub order: usize,
    a: [f64; 5],
    b: [f64; 5],
}

impl SbdfScheme {
    /// Scheme of the requested order, 1 through 4.
    pub fn new(order: usize) -> SbdfScheme {
        let (a, b) = match order {
            1 => ([1.0, -1.0, 0.0, 0.0, 0.0], [1.0, 0.0, 0.0, 0.0]),
            2 => ([1.5, -2.0, 0.5, 0.0, 0.0], [2.0, -1.0, 0.0, 0.0]),
            3 => (
                [11.0 / 6.0, -3.0, 1.5, -1.0 / 3.0, 0.0],
                [3.0, -3.0, 1.0, 0.0],
            ),
            4 => (
                [25.0 / 12.0, -4.0, 3.0, -4.0 / 3.0, 0.25],
                [4.0, -6.0, 4.0, -1.0],
            ),
            _ => panic!("SBDF order must be 1..=4, got {order}"),
        };
        let mut bb = [0.0; 5];
        bb[1..].copy_from_slice(&b);
        SbdfScheme { order, a, b: bb }
    }

    /// BDF weight a_i, i in 0..=order.
    pub fn a(&self, i: usize) -> f64 {
        debug_assert!(i <= self.order);
        self.a[i]
    }

    /// Extrapolation weight b_i, i in 1..=order.
    pub fn b(&self, i: usize) -> f64 {
        debug_assert!(i >= 1 && i <= self.order);
        self.b[i]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_values_are_exact() {
        let s = SbdfScheme::new(3);
        assert_eq!(s.a(0), 11.0 / 6.0);
        assert_eq!(s.a(1), -3.0);
        assert_eq!(s.a(2), 1.5);
        assert_eq!(s.a(3), -1.0 / 3.0);
        assert_eq!(s.b(1), 3.0);
        assert_eq!(s.b(2), -3.0);
        assert_eq!(s.b(3), 1.0);

        let s = SbdfScheme::new(4);
        assert_eq!(s.a(0), 25.0 / 12.0);
        assert_eq!(s.a(4), 0.25);
        assert_eq!(s.b(4), -1.0);
    }

    #[test]
    fn consistency_identities() {
        for k in 1..=4 {
            let s = SbdfScheme::new(k);
            // Zeroth order: BDF weights annihilate constants.
            let sum_a: f64 = (0..=k).map(|i| s.a(i)).sum();
            assert!(sum_a.abs() < 1e-15, "order {k}: {sum_a}");
            // First order: d/dt of t is 1 and extrapolation reproduces constants.
            let sum_ia: f64 = (0..=k).map(|i| i as f64 * s.a(i)).sum();
            let sum_b: f64 = (1..=k).map(|i| s.b(i)).sum();
            assert!((sum_ia + 1.0).abs() < 1e-15, "order {k}");
            assert!((sum_b - 1.0).abs() < 1e-15, "order {k}");
            // Extrapolation is exact on linears (k >= 2): sum i*b_i = 0.
            if k >= 2 {
                let sum_ib: f64 = (1..=k).map(|i| i as f64 * s.b(i)).sum();
                assert!(sum_ib.abs() < 1e-14, "order {k}");
            }
        }
    }
}
