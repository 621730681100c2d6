use crate::error::{Error, Result};
use crate::stats::fit_line;
use crate::stencil::trapezoid_nonuniform;

/// Fitted power law `value ≈ e^intercept · (1+t)^exponent`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateFit {
    pub exponent: f64,
    pub intercept: f64,
    pub window: (f64, f64),
    pub r2: f64,
    pub samples: usize,
}

/// Minimum number of samples inside a fit window.
pub const MIN_FIT_SAMPLES: usize = 8;

/// `[t_final/10, t_final]`.
pub fn default_window(t_final: f64) -> (f64, f64) {
    (t_final / 10.0, t_final)
}

/// Least-squares slope of `log(value)` against `log(1+t)` over samples
/// with `t` in `window`.
pub fn fit_decay_rate(times: &[f64], values: &[f64], window: (f64, f64)) -> Result<RateFit> {
    if times.len() != values.len() {
        return Err(Error::Misaligned {
            expected: times.len(),
            found: values.len(),
        });
    }
    let (lo, hi) = window;
    if !(lo < hi) {
        return Err(Error::InvalidConfig(format!("empty fit window [{lo}, {hi}]")));
    }
    let slack = 1e-9 * hi.abs().max(1.0);
    let mut x = Vec::new();
    let mut y = Vec::new();
    for (&t, &v) in times.iter().zip(values) {
        if t >= lo - slack && t <= hi + slack {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::DegenerateFit(format!(
                    "non-positive value {v:e} at t = {t} inside the fit window"
                )));
            }
            x.push((1.0 + t).ln());
            y.push(v.ln());
        }
    }
    if x.len() < MIN_FIT_SAMPLES {
        return Err(Error::InsufficientData(format!(
            "{} samples in [{lo}, {hi}], need at least {MIN_FIT_SAMPLES}",
            x.len()
        )));
    }
    let fit = fit_line(&x, &y).ok_or_else(|| Error::DegenerateFit("coincident times".into()))?;
    Ok(RateFit {
        exponent: fit.slope,
        intercept: fit.intercept,
        window,
        r2: fit.r2,
        samples: x.len(),
    })
}

/// Outcome of [`tail_vanishing_check`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TailCheck {
    pub passed: bool,
    /// Time average over `1+t ≤ 10(1+t_first)`.
    pub first_mean: f64,
    /// Time average over `1+t ≥ (1+t_last)/10`.
    pub last_mean: f64,
    pub final_value: f64,
    pub max_value: f64,
}

/// Whether a non-negative series dies out: the last-decade time average
/// is at most 10% of the first-decade one and the final value at most 5%
/// of the maximum. Decades are measured in `1+t`.
pub fn tail_vanishing_check(times: &[f64], values: &[f64]) -> Result<TailCheck> {
    if times.len() != values.len() {
        return Err(Error::Misaligned {
            expected: times.len(),
            found: values.len(),
        });
    }
    if times.len() < 4 || times.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InsufficientData(
            "tail check needs at least 4 strictly increasing times".into(),
        ));
    }
    let (t0, t1) = (times[0], times[times.len() - 1]);
    if (1.0 + t1) < 10.0 * (1.0 + t0) {
        return Err(Error::InsufficientData(format!(
            "series must span a decade in 1+t, got [{t0}, {t1}]"
        )));
    }
    let mean_over = |keep: &dyn Fn(f64) -> bool| -> f64 {
        let (ts, vs): (Vec<f64>, Vec<f64>) = times
            .iter()
            .zip(values)
            .filter(|(t, _)| keep(**t))
            .map(|(t, v)| (*t, *v))
            .unzip();
        if ts.len() < 2 {
            return vs.first().copied().unwrap_or(0.0);
        }
        trapezoid_nonuniform(&ts, &vs) / (ts[ts.len() - 1] - ts[0])
    };
    let first_mean = mean_over(&|t| 1.0 + t <= 10.0 * (1.0 + t0) * (1.0 + 1e-12));
    let last_mean = mean_over(&|t| 1.0 + t >= (1.0 + t1) / 10.0 * (1.0 - 1e-12));
    let final_value = values[values.len() - 1];
    let max_value = values.iter().cloned().fold(0.0, f64::max);
    let passed = last_mean <= 0.1 * first_mean && final_value <= 0.05 * max_value;
    Ok(TailCheck {
        passed,
        first_mean,
        last_mean,
        final_value,
        max_value,
    })
}
