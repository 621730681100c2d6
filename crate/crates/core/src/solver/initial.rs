use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Perturbation profile added to the reference state at `t = 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "shape", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialShape {
    #[default]
    Zero,
    /// `amp·exp(-(x-center)²/(2σ²))`.
    GaussianBump { amp: f64, center: f64, sigma: f64 },
    /// Plateau of height `amp` on `[left, right]` with `tanh` edges of
    /// width `width`.
    SmoothedStep {
        amp: f64,
        left: f64,
        right: f64,
        width: f64,
    },
    /// Random trigonometric sum with `modes` wavenumbers up to `cutoff`,
    /// under a Gaussian window of width `width`. `|value| ≤ amp`.
    FilteredNoise {
        seed: u64,
        cutoff: f64,
        amp: f64,
        #[serde(default)]
        center: f64,
        #[serde(default = "default_noise_width")]
        width: f64,
        #[serde(default = "default_noise_modes")]
        modes: usize,
    },
}

fn default_noise_width() -> f64 {
    4.0
}

fn default_noise_modes() -> usize {
    16
}

impl InitialShape {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        match *self {
            InitialShape::Zero => Ok(()),
            InitialShape::GaussianBump { amp, center, sigma } => {
                if !(amp.is_finite() && center.is_finite()) {
                    return bad("gaussian_bump amp and center must be finite".into());
                }
                if !(sigma.is_finite() && sigma > 0.0) {
                    return bad(format!("gaussian_bump sigma must be positive, got {sigma}"));
                }
                Ok(())
            }
            InitialShape::SmoothedStep {
                amp,
                left,
                right,
                width,
            } => {
                if !(amp.is_finite() && left.is_finite() && right.is_finite() && left < right) {
                    return bad(format!("smoothed_step needs finite amp and left < right, got [{left}, {right}]"));
                }
                if !(width.is_finite() && width > 0.0) {
                    return bad(format!("smoothed_step width must be positive, got {width}"));
                }
                Ok(())
            }
            InitialShape::FilteredNoise {
                cutoff,
                amp,
                center,
                width,
                modes,
                ..
            } => {
                if !(amp.is_finite() && center.is_finite()) {
                    return bad("filtered_noise amp and center must be finite".into());
                }
                if !(cutoff.is_finite() && cutoff > 0.0) {
                    return bad(format!("filtered_noise cutoff must be positive, got {cutoff}"));
                }
                if !(width.is_finite() && width > 0.0) {
                    return bad(format!("filtered_noise width must be positive, got {width}"));
                }
                if modes == 0 {
                    return bad("filtered_noise needs at least one mode".into());
                }
                Ok(())
            }
        }
    }

    pub fn amplitude(&self) -> f64 {
        match *self {
            InitialShape::Zero => 0.0,
            InitialShape::GaussianBump { amp, .. }
            | InitialShape::SmoothedStep { amp, .. }
            | InitialShape::FilteredNoise { amp, .. } => amp.abs(),
        }
    }

    /// Radius about the origin beyond which the shape is negligible
    /// (below about `1e-14` relative).
    pub fn support_radius(&self) -> f64 {
        match *self {
            InitialShape::Zero => 0.0,
            InitialShape::GaussianBump { center, sigma, .. } => center.abs() + 8.0 * sigma,
            InitialShape::SmoothedStep {
                left, right, width, ..
            } => left.abs().max(right.abs()) + 20.0 * width,
            InitialShape::FilteredNoise { center, width, .. } => center.abs() + 8.0 * width,
        }
    }

    /// Shape with any random coefficients drawn.
    pub fn compile(&self) -> Result<CompiledShape> {
        self.validate()?;
        let noise = match *self {
            InitialShape::FilteredNoise {
                seed,
                cutoff,
                modes,
                ..
            } => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let mut terms: Vec<(f64, f64, f64)> = (1..=modes)
                    .map(|m| {
                        let k = cutoff * m as f64 / modes as f64;
                        (k, rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
                    })
                    .collect();
                let norm: f64 = terms.iter().map(|(_, c, s)| c.abs() + s.abs()).sum();
                if norm > 0.0 {
                    for t in &mut terms {
                        t.1 /= norm;
                        t.2 /= norm;
                    }
                }
                terms
            }
            _ => Vec::new(),
        };
        Ok(CompiledShape {
            shape: self.clone(),
            noise,
        })
    }
}

/// An [`InitialShape`] ready for evaluation.
#[derive(Debug, Clone)]
pub struct CompiledShape {
    shape: InitialShape,
    noise: Vec<(f64, f64, f64)>,
}

impl CompiledShape {
    pub fn value(&self, x: f64) -> f64 {
        self.value_and_slope(x).0
    }

    pub fn slope(&self, x: f64) -> f64 {
        self.value_and_slope(x).1
    }

    pub fn value_and_slope(&self, x: f64) -> (f64, f64) {
        match self.shape {
            InitialShape::Zero => (0.0, 0.0),
            InitialShape::GaussianBump { amp, center, sigma } => {
                let y = x - center;
                let v = amp * (-y * y / (2.0 * sigma * sigma)).exp();
                (v, -y / (sigma * sigma) * v)
            }
            InitialShape::SmoothedStep {
                amp,
                left,
                right,
                width,
            } => {
                let (tl, tr) = (((x - left) / width).tanh(), ((x - right) / width).tanh());
                let v = 0.5 * amp * (tl - tr);
                let d = 0.5 * amp * ((1.0 - tl * tl) - (1.0 - tr * tr)) / width;
                (v, d)
            }
            InitialShape::FilteredNoise {
                amp, center, width, ..
            } => {
                let y = x - center;
                let win = (-y * y / (2.0 * width * width)).exp();
                let dwin = -y / (width * width) * win;
                let (mut s, mut ds) = (0.0, 0.0);
                for &(k, c, sn) in &self.noise {
                    let (sin, cos) = (k * y).sin_cos();
                    s += c * cos + sn * sin;
                    ds += k * (-c * sin + sn * cos);
                }
                (amp * win * s, amp * (dwin * s + win * ds))
            }
        }
    }
}

/// Initial perturbations of the chemical (`w0`) and bacteria (`z0`) fields.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialData {
    #[serde(default)]
    pub w0: InitialShape,
    #[serde(default)]
    pub z0: InitialShape,
}

impl InitialData {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn both(shape: InitialShape) -> Self {
        Self {
            w0: shape.clone(),
            z0: shape,
        }
    }

    pub fn amplitude(&self) -> f64 {
        self.w0.amplitude().max(self.z0.amplitude())
    }

    pub fn support_radius(&self) -> f64 {
        self.w0.support_radius().max(self.z0.support_radius())
    }
}
