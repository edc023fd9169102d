//! Exponent fitting for empirical decay series.

use crate::dynamics::DecaySeries;
use crate::error::{Error, Result};
use crate::stats::linear_fit;
use serde::{Deserialize, Serialize};

/// Which decay law to regress against.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FitHypothesis {
    /// log Var against log t.
    Polynomial,
    /// log Var against t^(p/(2-p)).
    Stretched { p: f64 },
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FitModel {
    /// Var ~ t^slope
    Polynomial { slope: f64 },
    /// Var ~ e^(-rate * t^exponent)
    StretchedExp { exponent: f64, rate: f64 },
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct FitResult {
    pub model: FitModel,
    /// Mean squared residual of the linearised regression.
    pub residual: f64,
    pub intercept: f64,
    /// Time window actually used.
    pub window: (f64, f64),
    pub points_used: usize,
}

/// Least-squares fit of the series inside the window (inclusive).
///
/// Errors with `NoiseFloor` when a variance inside the window is not
/// positive: the series has hit the Monte Carlo noise floor and the caller
/// must shrink the window.
pub fn fit_decay_exponent(
    series: &DecaySeries,
    hypothesis: FitHypothesis,
    window: (f64, f64),
) -> Result<FitResult> {
    if window.0 > window.1 {
        return Err(Error::invalid("fit window is empty"));
    }
    if matches!(hypothesis, FitHypothesis::Polynomial) && window.0 <= 0.0 {
        return Err(Error::invalid("polynomial fits need a strictly positive window"));
    }
    if let FitHypothesis::Stretched { p } = hypothesis {
        if !(p > 0.0 && p <= 1.0) {
            return Err(Error::invalid("stretched hypothesis needs p in (0,1]"));
        }
    }

    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for (&t, &v) in series.times.iter().zip(&series.variance) {
        if t < window.0 || t > window.1 {
            continue;
        }
        if !(v > 0.0) {
            return Err(Error::NoiseFloor);
        }
        let x = match hypothesis {
            FitHypothesis::Polynomial => t.ln(),
            FitHypothesis::Stretched { p } => t.powf(p / (2.0 - p)),
        };
        xs.push(x);
        ys.push(v.ln());
    }
    if xs.len() < 5 {
        return Err(Error::NotEnoughData { need: 5, have: xs.len() });
    }

    let fit = linear_fit(&xs, &ys);
    let model = match hypothesis {
        FitHypothesis::Polynomial => FitModel::Polynomial { slope: fit.slope },
        FitHypothesis::Stretched { p } => {
            FitModel::StretchedExp { exponent: p / (2.0 - p), rate: -fit.slope }
        }
    };
    Ok(FitResult {
        model,
        residual: fit.mean_sq_residual,
        intercept: fit.intercept,
        window,
        points_used: xs.len(),
    })
}
