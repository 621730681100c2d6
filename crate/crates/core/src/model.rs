//! Model coefficients, uniform grids, grid-aligned fields and solver states.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Coefficients of the Keller–Segel system and the far-field bacteria
/// densities. The chemical far fields are always derived through the Darcy
/// closure `ρ± = (μ/λ) u±`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelParams {
    /// Bacteria diffusivity.
    pub a: f64,
    /// Chemical diffusivity.
    pub b: f64,
    /// Chemical decay rate.
    pub lambda: f64,
    /// Chemical production rate.
    pub mu: f64,
    /// Chemotaxis intensity. Zero is accepted as the decoupled limit.
    pub kappa: f64,
    pub u_minus: f64,
    pub u_plus: f64,
}

impl Default for ModelParams {
    fn default() -> Self {
        Self {
            a: 1.0,
            b: 1.0,
            lambda: 1.0,
            mu: 1.0,
            kappa: 1.0,
            u_minus: -0.025,
            u_plus: 0.025,
        }
    }
}

impl ModelParams {
    pub fn new(
        a: f64,
        b: f64,
        lambda: f64,
        mu: f64,
        kappa: f64,
        u_minus: f64,
        u_plus: f64,
    ) -> Result<Self> {
        let p = Self {
            a,
            b,
            lambda,
            mu,
            kappa,
            u_minus,
            u_plus,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let named = [
            ("a", self.a),
            ("b", self.b),
            ("lambda", self.lambda),
            ("mu", self.mu),
        ];
        for (name, v) in named {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidParams(format!(
                    "{name} must be a positive finite number, got {v}"
                )));
            }
        }
        if !(self.kappa.is_finite() && self.kappa >= 0.0) {
            return Err(Error::InvalidParams(format!(
                "kappa must be non-negative and finite, got {}",
                self.kappa
            )));
        }
        let bound = self.degeneracy_threshold();
        for (name, v) in [("u_minus", self.u_minus), ("u_plus", self.u_plus)] {
            if !v.is_finite() {
                return Err(Error::InvalidParams(format!("{name} is not finite")));
            }
            if v.abs() >= bound {
                return Err(Error::InvalidParams(format!(
                    "|{name}| = {} violates |u±| < a·λ/(κ·μ) = {bound}",
                    v.abs()
                )));
            }
        }
        Ok(())
    }

    /// `μ/λ`, the Darcy ratio between chemical and bacteria states.
    pub fn darcy_ratio(&self) -> f64 {
        self.mu / self.lambda
    }

    /// `κμ/λ`, the slope of the effective diffusivity.
    pub fn chemo_coupling(&self) -> f64 {
        self.kappa * self.mu / self.lambda
    }

    /// Effective diffusivity `f(u) = a - (κμ/λ) u` of the limit equation.
    pub fn diffusivity(&self, u: f64) -> f64 {
        self.a - self.chemo_coupling() * u
    }

    /// `aλ/(κμ)`; infinite when `κ = 0`.
    pub fn degeneracy_threshold(&self) -> f64 {
        let c = self.chemo_coupling();
        if c == 0.0 {
            f64::INFINITY
        } else {
            self.a / c
        }
    }

    pub fn rho_minus(&self) -> f64 {
        self.darcy_ratio() * self.u_minus
    }

    pub fn rho_plus(&self) -> f64 {
        self.darcy_ratio() * self.u_plus
    }

    /// Wave strength `|ρ+ - ρ-| + |u+| + |u-|`.
    pub fn wave_strength(&self) -> f64 {
        (self.rho_plus() - self.rho_minus()).abs() + self.u_plus.abs() + self.u_minus.abs()
    }
}

/// Uniform grid `x_i = x0 + i·dx`, `i = 0..n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    x0: f64,
    dx: f64,
    n: usize,
}

/// Grid of `n` nodes spanning `[x0, x0 + length]`.
pub fn build_grid(x0: f64, length: f64, n: usize) -> Result<Grid> {
    if n < 3 {
        return Err(Error::InvalidGrid(format!("need at least 3 nodes, got {n}")));
    }
    if !(length.is_finite() && length > 0.0) {
        return Err(Error::InvalidGrid(format!(
            "length must be positive, got {length}"
        )));
    }
    if !x0.is_finite() {
        return Err(Error::InvalidGrid("x0 is not finite".into()));
    }
    Ok(Grid {
        x0,
        dx: length / (n - 1) as f64,
        n,
    })
}

impl Grid {
    pub fn with_spacing(x0: f64, dx: f64, n: usize) -> Result<Self> {
        if !(dx.is_finite() && dx > 0.0) {
            return Err(Error::InvalidGrid(format!("dx must be positive, got {dx}")));
        }
        build_grid(x0, dx * (n.max(1) - 1) as f64, n).map(|g| Grid { dx, ..g })
    }

    pub fn x0(&self) -> f64 {
        self.x0
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn node(&self, i: usize) -> f64 {
        self.x0 + i as f64 * self.dx
    }

    pub fn last(&self) -> f64 {
        self.node(self.n - 1)
    }

    pub fn length(&self) -> f64 {
        (self.n - 1) as f64 * self.dx
    }

    pub fn nodes(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n).map(move |i| self.node(i))
    }

    /// Halve the spacing over the same span.
    pub fn refined(&self) -> Grid {
        Grid {
            x0: self.x0,
            dx: self.dx / 2.0,
            n: 2 * self.n - 1,
        }
    }
}

/// Finite values aligned to a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Field(Vec<f64>);

impl Field {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        Ok(Field(values))
    }

    pub fn zeros(n: usize) -> Self {
        Field(vec![0.0; n])
    }

    pub fn constant(n: usize, c: f64) -> Self {
        Field(vec![c; n])
    }

    pub fn from_fn(grid: &Grid, f: impl Fn(f64) -> f64) -> Result<Self> {
        Field::new(grid.nodes().map(f).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn check_aligned(&self, grid: &Grid) -> Result<()> {
        if self.0.len() != grid.n() {
            return Err(Error::Misaligned {
                expected: grid.n(),
                found: self.0.len(),
            });
        }
        Ok(())
    }

    pub fn scaled(&self, c: f64) -> Result<Field> {
        Field::new(self.0.iter().map(|v| c * v).collect())
    }

    /// `self - other`, node by node.
    pub fn minus(&self, other: &Field) -> Result<Field> {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn zip_with(&self, other: &Field, f: impl Fn(f64, f64) -> f64) -> Result<Field> {
        if self.len() != other.len() {
            return Err(Error::Misaligned {
                expected: self.len(),
                found: other.len(),
            });
        }
        Field::new(self.0.iter().zip(&other.0).map(|(a, b)| f(*a, *b)).collect())
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

impl std::ops::Index<usize> for Field {
    type Output = f64;

    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

/// Bacteria density and chemical concentration on one grid at time `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct State {
    pub grid: Grid,
    pub u: Field,
    pub rho: Field,
    pub t: f64,
}

impl State {
    pub fn new(grid: Grid, u: Field, rho: Field, t: f64) -> Result<Self> {
        u.check_aligned(&grid)?;
        rho.check_aligned(&grid)?;
        if !(t.is_finite() && t >= 0.0) {
            return Err(Error::InvalidConfig(format!("state time must be >= 0, got {t}")));
        }
        Ok(Self { grid, u, rho, t })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_grid() {
        let g = build_grid(0.0, 1.0, 5).unwrap();
        assert_eq!(g.dx(), 0.25);
        let nodes: Vec<f64> = g.nodes().collect();
        assert_eq!(nodes, vec![0.0, 0.25, 0.5, 0.75, 1.0]);
    }

    #[test]
    fn coarse_symmetric_grid() {
        let g = build_grid(-10.0, 20.0, 3).unwrap();
        assert_eq!(g.dx(), 10.0);
        assert_eq!(g.nodes().collect::<Vec<_>>(), vec![-10.0, 0.0, 10.0]);
    }

    #[test]
    fn grid_rejects_bad_input() {
        assert!(build_grid(0.0, 1.0, 2).is_err());
        assert!(build_grid(0.0, 0.0, 5).is_err());
        assert!(build_grid(0.0, -1.0, 5).is_err());
    }

    #[test]
    fn last_node_within_rounding() {
        let g = build_grid(-3.7, 11.3, 997).unwrap();
        let last = g.last();
        assert!((last - 7.6).abs() <= 4.0 * f64::EPSILON * 7.6);
    }

    #[test]
    fn refined_grid_shares_nodes() {
        let g = build_grid(0.0, 2.0, 5).unwrap();
        let r = g.refined();
        assert_eq!(r.n(), 9);
        assert_eq!(r.node(2), g.node(1));
        assert_eq!(r.last(), g.last());
    }

    #[test]
    fn params_reject_degenerate_states() {
        assert!(ModelParams::new(1.0, 1.0, 1.0, 1.0, 1.0, -0.5, 1.0).is_err());
        assert!(ModelParams::new(0.0, 1.0, 1.0, 1.0, 1.0, 0.0, 0.1).is_err());
        assert!(ModelParams::new(1.0, 1.0, 1.0, 1.0, -1.0, 0.0, 0.1).is_err());
        let p = ModelParams::new(1.0, 1.0, 2.0, 1.0, 1.0, -0.1, 0.2).unwrap();
        assert_eq!(p.rho_plus(), 0.1);
        assert_eq!(p.rho_minus(), -0.05);
        assert!(p.diffusivity(p.u_plus) > 0.0);
    }

    #[test]
    fn zero_kappa_has_no_threshold() {
        let p = ModelParams::new(1.0, 1.0, 1.0, 1.0, 0.0, -50.0, 50.0).unwrap();
        assert_eq!(p.degeneracy_threshold(), f64::INFINITY);
        assert_eq!(p.diffusivity(30.0), 1.0);
    }

    #[test]
    fn field_rejects_non_finite() {
        assert!(matches!(
            Field::new(vec![0.0, f64::NAN]),
            Err(Error::NonFinite { index: 1 })
        ));
    }
}
