//! Finite-difference stencils and discrete norms on uniform grids.
//!
//! Interior nodes use central differences; boundary nodes use second-order
//! one-sided stencils so that boundary diagnostics keep the interior order.
//! All quadratures are trapezoidal.

use crate::error::{Error, Result};
use crate::model::{Field, Grid};

/// First derivative: central in the interior, three-point one-sided at the ends.
pub fn dx1(f: &Field, g: &Grid) -> Result<Field> {
    f.check_aligned(g)?;
    Field::new(dx1_slice(f.values(), g.dx()))
}

/// Second derivative: three-point in the interior, four-point one-sided at
/// the ends (three-point when the grid has only three nodes).
pub fn dx2(f: &Field, g: &Grid) -> Result<Field> {
    f.check_aligned(g)?;
    Field::new(dx2_slice(f.values(), g.dx()))
}

pub(crate) fn dx1_slice(v: &[f64], dx: f64) -> Vec<f64> {
    let n = v.len();
    let mut out = vec![0.0; n];
    let inv2 = 0.5 / dx;
    for i in 1..n - 1 {
        out[i] = (v[i + 1] - v[i - 1]) * inv2;
    }
    // Differences against the end value keep constants exactly annihilated.
    out[0] = (4.0 * (v[1] - v[0]) - (v[2] - v[0])) * inv2;
    out[n - 1] = (4.0 * (v[n - 1] - v[n - 2]) - (v[n - 1] - v[n - 3])) * inv2;
    out
}

pub(crate) fn dx2_slice(v: &[f64], dx: f64) -> Vec<f64> {
    let n = v.len();
    let mut out = vec![0.0; n];
    let inv = 1.0 / (dx * dx);
    for i in 1..n - 1 {
        out[i] = (v[i + 1] - 2.0 * v[i] + v[i - 1]) * inv;
    }
    if n >= 4 {
        let (a, b) = (v[0], v[n - 1]);
        out[0] = (-5.0 * (v[1] - a) + 4.0 * (v[2] - a) - (v[3] - a)) * inv;
        out[n - 1] = (-5.0 * (v[n - 2] - b) + 4.0 * (v[n - 3] - b) - (v[n - 4] - b)) * inv;
    } else {
        out[0] = out[1];
        out[n - 1] = out[1];
    }
    out
}

/// Trapezoidal integral of samples spaced `dx` apart.
pub fn trapezoid(v: &[f64], dx: f64) -> f64 {
    match v.len() {
        0 | 1 => 0.0,
        n => dx * (v.iter().sum::<f64>() - 0.5 * (v[0] + v[n - 1])),
    }
}

/// Trapezoidal integral of `y` over the increasing abscissae `x`.
pub fn trapezoid_nonuniform(x: &[f64], y: &[f64]) -> f64 {
    x.windows(2)
        .zip(y.windows(2))
        .map(|(xs, ys)| 0.5 * (xs[1] - xs[0]) * (ys[0] + ys[1]))
        .sum()
}

pub(crate) fn l2_slice(v: &[f64], dx: f64) -> f64 {
    let n = v.len();
    if n < 2 {
        return 0.0;
    }
    let s: f64 = v.iter().map(|x| x * x).sum::<f64>() - 0.5 * (v[0] * v[0] + v[n - 1] * v[n - 1]);
    (dx * s).max(0.0).sqrt()
}

/// `(∫ f² dx)^{1/2}` over the grid span.
pub fn l2_norm(f: &Field, g: &Grid) -> Result<f64> {
    f.check_aligned(g)?;
    Ok(l2_slice(f.values(), g.dx()))
}

/// Lebesgue exponent for discrete norms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NormKind {
    L1,
    L2,
    Inf,
}

impl NormKind {
    /// `1/p`, zero for the sup norm.
    pub fn reciprocal(self) -> f64 {
        match self {
            NormKind::L1 => 1.0,
            NormKind::L2 => 0.5,
            NormKind::Inf => 0.0,
        }
    }
}

pub(crate) fn lp_slice(v: &[f64], dx: f64, p: NormKind) -> f64 {
    match p {
        NormKind::L1 => {
            let abs: Vec<f64> = v.iter().map(|x| x.abs()).collect();
            trapezoid(&abs, dx)
        }
        NormKind::L2 => l2_slice(v, dx),
        NormKind::Inf => v.iter().fold(0.0, |m, x| m.max(x.abs())),
    }
}

pub fn lp_norm(f: &Field, g: &Grid, p: NormKind) -> Result<f64> {
    f.check_aligned(g)?;
    Ok(lp_slice(f.values(), g.dx(), p))
}

/// `‖f‖_m = (Σ_{k≤m} ‖∂^k f‖²)^{1/2}` for `m ∈ {0, 1, 2}`; the second
/// derivative comes from [`dx2`], not from applying [`dx1`] twice.
pub fn sobolev_norm(f: &Field, g: &Grid, m: usize) -> Result<f64> {
    if m > 2 {
        return Err(Error::InvalidConfig(format!(
            "Sobolev order must be 0, 1 or 2, got {m}"
        )));
    }
    let mut sum = l2_norm(f, g)?.powi(2);
    if m >= 1 {
        sum += l2_norm(&dx1(f, g)?, g)?.powi(2);
    }
    if m >= 2 {
        sum += l2_norm(&dx2(f, g)?, g)?.powi(2);
    }
    Ok(sum.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::build_grid;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn sample(g: &Grid, f: impl Fn(f64) -> f64) -> Field {
        Field::from_fn(g, f).unwrap()
    }

    #[test]
    fn constants_are_annihilated() {
        let g = build_grid(-1.0, 3.0, 17).unwrap();
        let c = sample(&g, |_| 4.2);
        assert!(dx1(&c, &g).unwrap().values().iter().all(|v| *v == 0.0));
        assert!(dx2(&c, &g).unwrap().max_abs() < 1e-12);
    }

    #[test]
    fn dx1_exact_on_linear_including_boundaries() {
        let g = build_grid(0.3, 2.0, 9).unwrap();
        let f = sample(&g, |x| x);
        for v in dx1(&f, &g).unwrap().values() {
            assert!((v - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn dx1_exact_on_quadratic_interior() {
        // Central difference of x²: ((x+h)² - (x-h)²)/(2h) = 2x identically.
        let g = build_grid(0.0, 1.0, 11).unwrap();
        let f = sample(&g, |x| x * x);
        let d = dx1(&f, &g).unwrap();
        for i in 1..10 {
            assert!((d[i] - 2.0 * g.node(i)).abs() < 1e-13);
        }
        // One-sided three-point stencils are also exact on quadratics.
        assert!(d[0].abs() < 1e-13);
        assert!((d[10] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn dx2_exact_on_low_degree() {
        let g = build_grid(-2.0, 4.0, 21).unwrap();
        let lin = sample(&g, |x| 3.0 * x - 1.0);
        assert!(dx2(&lin, &g).unwrap().max_abs() < 1e-10);
        let quad = sample(&g, |x| x * x);
        for v in dx2(&quad, &g).unwrap().values() {
            assert!((v - 2.0).abs() < 1e-10);
        }
    }

    #[test]
    fn dx2_sine_taylor_bound() {
        // dx²/12 · max|f''''| = 1e-4/12 for sin.
        let g = Grid::with_spacing(0.0, 0.01, 629).unwrap();
        let f = sample(&g, f64::sin);
        let d = dx2(&f, &g).unwrap();
        let err = (1..g.n() - 1)
            .map(|i| (d[i] + g.node(i).sin()).abs())
            .fold(0.0, f64::max);
        assert!(err <= 1e-4 / 12.0 + 1e-12, "err = {err}");
        assert!(err <= 1e-3);
    }

    #[test]
    fn boundary_stencils_are_second_order() {
        let err_at = |n: usize| {
            let g = build_grid(0.0, 1.0, n).unwrap();
            let f = sample(&g, f64::exp);
            let d1 = dx1(&f, &g).unwrap();
            let d2 = dx2(&f, &g).unwrap();
            ((d1[0] - 1.0).abs(), (d2[n - 1] - 1f64.exp()).abs())
        };
        let (a1, a2) = err_at(21);
        let (b1, b2) = err_at(41);
        assert!((a1 / b1).log2() > 1.8);
        assert!((a2 / b2).log2() > 1.8);
    }

    #[test]
    fn l2_norm_closed_forms() {
        let g = build_grid(0.0, 3.0, 31).unwrap();
        let c = sample(&g, |_| -2.0);
        assert!((l2_norm(&c, &g).unwrap() - 2.0 * 3f64.sqrt()).abs() < 1e-12);
        assert_eq!(l2_norm(&Field::zeros(31), &g).unwrap(), 0.0);

        let g = Grid::with_spacing(-20.0, 0.01, 4001).unwrap();
        let gauss = sample(&g, |x| (-x * x / 2.0).exp());
        // ∫ exp(-x²) dx = √π, so the norm is π^{1/4}.
        let expect = PI.powf(0.25);
        assert!((l2_norm(&gauss, &g).unwrap() - expect).abs() < 1e-6);
    }

    #[test]
    fn sobolev_norms() {
        let g = build_grid(0.0, 2.0, 41).unwrap();
        let f = sample(&g, |x| x.cos() + 0.3 * x);
        assert_eq!(sobolev_norm(&f, &g, 0).unwrap(), l2_norm(&f, &g).unwrap());
        let c = sample(&g, |_| 1.5);
        assert!((sobolev_norm(&c, &g, 2).unwrap() - 1.5 * 2f64.sqrt()).abs() < 1e-10);
        assert!(sobolev_norm(&f, &g, 3).is_err());

        let g = build_grid(0.0, 2.0 * PI, 2001).unwrap();
        let s = sample(&g, f64::sin);
        let h1 = sobolev_norm(&s, &g, 1).unwrap();
        assert!((h1 - (2.0 * PI).sqrt()).abs() < 1e-3, "h1 = {h1}");
    }

    #[test]
    fn misaligned_field_rejected() {
        let g = build_grid(0.0, 1.0, 5).unwrap();
        assert!(matches!(
            dx1(&Field::zeros(4), &g),
            Err(Error::Misaligned { expected: 5, found: 4 })
        ));
    }

    proptest! {
        #[test]
        fn l2_is_absolutely_homogeneous(c in -50.0f64..50.0, k in 0.1f64..3.0) {
            let g = build_grid(-1.0, 2.0, 33).unwrap();
            let f = sample(&g, |x| (k * x).sin() + x * x);
            let lhs = l2_norm(&f.scaled(c).unwrap(), &g).unwrap();
            let rhs = c.abs() * l2_norm(&f, &g).unwrap();
            prop_assert!((lhs - rhs).abs() <= 1e-12 * rhs.max(1.0));
        }

        #[test]
        fn sobolev_nondecreasing_in_order(k in 0.1f64..4.0, shift in -2.0f64..2.0) {
            let g = build_grid(-3.0, 6.0, 61).unwrap();
            let f = sample(&g, |x| (k * x + shift).cos() * (-x * x / 4.0).exp());
            let n0 = sobolev_norm(&f, &g, 0).unwrap();
            let n1 = sobolev_norm(&f, &g, 1).unwrap();
            let n2 = sobolev_norm(&f, &g, 2).unwrap();
            prop_assert!(n0 <= n1 && n1 <= n2);
        }
    }
}
