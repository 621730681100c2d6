/// Solution of `u_t = a u_xx` from the Gaussian `amp·exp(-x²/(2σ²))`.
pub fn heat_oracle(a: f64, amp: f64, sigma: f64, x: f64, t: f64) -> f64 {
    let s2 = sigma * sigma + 2.0 * a * t;
    amp * sigma / s2.sqrt() * (-x * x / (2.0 * s2)).exp()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Grid;
    use crate::stencil::trapezoid;
    use proptest::prelude::*;

    #[test]
    fn initial_gaussian_and_peak() {
        for x in [-3.0, -0.5, 0.0, 1.7] {
            let g: f64 = 0.01 * (-x * x / 2.0f64).exp();
            assert_eq!(heat_oracle(1.0, 0.01, 1.0, x, 0.0), g);
        }
        assert!((heat_oracle(1.0, 0.01, 1.0, 0.0, 1.5) - 0.005).abs() < 1e-18);
    }

    #[test]
    fn mass_is_conserved() {
        let g = Grid::with_spacing(-80.0, 0.01, 16_001).unwrap();
        let (amp, sigma) = (0.3, 1.2);
        let exact = amp * sigma * (2.0 * std::f64::consts::PI).sqrt();
        for t in [0.0, 1.0, 10.0, 50.0] {
            let v: Vec<f64> = g.nodes().map(|x| heat_oracle(0.7, amp, sigma, x, t)).collect();
            assert!((trapezoid(&v, g.dx()) - exact).abs() < 1e-10, "t = {t}");
        }
    }

    proptest! {
        #[test]
        fn solves_heat_equation(
            a in 0.2f64..3.0, sigma in 0.5f64..2.0, x in -4.0f64..4.0, t in 0.1f64..5.0,
        ) {
            let h = 1e-4;
            let f = |x: f64, t: f64| heat_oracle(a, 1.0, sigma, x, t);
            let u_t = (f(x, t + h) - f(x, t - h)) / (2.0 * h);
            let u_xx = (f(x + h, t) - 2.0 * f(x, t) + f(x - h, t)) / (h * h);
            prop_assert!((u_t - a * u_xx).abs() < 1e-5);
        }
    }
}
