//! Variance-decay envelopes in time.
//!
//! A weak Poincaré inequality with rate function beta turns into the decay
//! bound
//!
//! ```text
//! Var(S_t f) <= e^(-2t/beta(s)) Var(f) + 4 s (1 - e^(-2t/beta(s))) |f - mean|^2
//! ```
//!
//! for every s > 0. Optimising over s produces an explicit envelope: a power
//! law t^(-alpha/2) for polynomial-tail potentials and a stretched exponential
//! e^(-C t^(p/(2-p))) for the sub-exponential class. Finite-volume corollary
//! and theorem shapes carry their volume factors explicitly.

pub mod fit;

use crate::error::{Error, Result};
use crate::rates::RateFunction;
use serde::{Deserialize, Serialize};

/// The decay bound at a fixed free parameter s.
///
/// Conventions at the edges: beta(s) = 0 means instant decay of the first
/// term; beta(s) = +inf means no decay, so the bound is the initial variance.
/// t = 0 returns the initial variance exactly.
pub fn rw_bound(beta: &RateFunction, s: f64, t: f64, var0: f64, sup_norm: f64) -> f64 {
    assert!(s > 0.0, "s must be positive");
    assert!(t >= 0.0, "time must be nonnegative");
    let b = beta.evaluate(s);
    let decay = if b == 0.0 {
        if t > 0.0 {
            0.0
        } else {
            1.0
        }
    } else {
        (-2.0 * t / b).exp() // b = +inf gives exp(0) = 1
    };
    decay * var0 + 4.0 * s * (1.0 - decay) * sup_norm * sup_norm
}

/// Lower edge of the s search window.
pub const ENVELOPE_S_MIN: f64 = 1e-12;
/// Upper edge: only s < 1/4 carries information.
pub const ENVELOPE_S_MAX: f64 = 0.25;

/// Minimises the decay bound over s: coarse log-grid scan (64 points)
/// followed by golden-section refinement. Returns (value, argmin).
pub fn rw_envelope(beta: &RateFunction, t: f64, var0: f64, sup_norm: f64) -> (f64, f64) {
    assert!(t > 0.0, "envelope needs t > 0");
    let objective = |s: f64| rw_bound(beta, s, t, var0, sup_norm);

    let n = 64;
    let (ln_lo, ln_hi) = (ENVELOPE_S_MIN.ln(), ENVELOPE_S_MAX.ln());
    let mut best_i = 0;
    let mut best_v = f64::INFINITY;
    let grid: Vec<f64> =
        (0..n).map(|i| (ln_lo + (ln_hi - ln_lo) * i as f64 / (n - 1) as f64).exp()).collect();
    for (i, &s) in grid.iter().enumerate() {
        let v = objective(s);
        if v < best_v {
            best_v = v;
            best_i = i;
        }
    }

    // Golden-section refinement on the bracketing interval, in log s.
    let mut a = grid[best_i.saturating_sub(1)].ln();
    let mut b = grid[(best_i + 1).min(n - 1)].ln();
    let phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - phi * (b - a);
    let mut d = a + phi * (b - a);
    let mut fc = objective(c.exp());
    let mut fd = objective(d.exp());
    for _ in 0..200 {
        if (b - a).abs() < 1e-10 * a.abs().max(1.0) {
            break;
        }
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - phi * (b - a);
            fc = objective(c.exp());
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + phi * (b - a);
            fd = objective(d.exp());
        }
    }
    let s_star = (0.5 * (a + b)).exp();
    let val = objective(s_star);
    if val <= best_v {
        (val, s_star)
    } else {
        (best_v, grid[best_i])
    }
}

/// Finite-volume corollary envelope for the polynomial-tail class:
/// C |Lambda|^(1+eps) / t^(alpha/2).
pub fn kappa_corollary_envelope(alpha: f64, eps: f64, volume: f64, c: f64, t: f64) -> f64 {
    c * volume.powf(1.0 + eps) / t.powf(alpha / 2.0)
}

/// Finite-volume corollary envelope for the sub-exponential class:
/// (1/C) e^(-C t^(p/(2-p))), valid only once t^(p/(2-p)) >= 2 A log|Lambda|.
/// Returns None below the time threshold.
pub fn subexp_corollary_envelope(p: f64, c: f64, t: f64, volume: f64, a: f64) -> Option<f64> {
    let gamma = p / (2.0 - p);
    if t.powf(gamma) >= 2.0 * a * volume.ln() {
        Some((1.0 / c) * (-c * t.powf(gamma)).exp())
    } else {
        None
    }
}

/// Infinite-volume theorem shapes.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TheoremKind {
    /// Exponent alpha/2 - d(1+eps); useful only when positive.
    Kappa { alpha: f64, dimension: u32, eps: f64 },
    /// Stretched exponential with exponent p/(2-p).
    SubExp { p: f64 },
}

/// Theorem-shaped envelope. The polynomial form falls back to the contraction
/// bound norm^2 when its exponent is not positive.
pub fn theorem_envelope(kind: TheoremKind, c: f64, t: f64, norm: f64) -> f64 {
    match kind {
        TheoremKind::Kappa { alpha, dimension, eps } => {
            let exponent = alpha / 2.0 - dimension as f64 * (1.0 + eps);
            if exponent > 0.0 {
                c * norm * norm / t.powf(exponent)
            } else {
                norm * norm
            }
        }
        TheoremKind::SubExp { p } => {
            (1.0 / c) * (-c * t.powf(p / (2.0 - p))).exp() * norm * norm
        }
    }
}

/// The s schedule used in the polynomial-tail corollary: s = (lambda/t)^(alpha/2)
/// with lambda chosen so the contraction factor per halving is (1/2)^(alpha/2 + 1).
pub fn kappa_lambda_schedule(c: f64, volume: f64, alpha: f64, eps: f64) -> f64 {
    c * volume.powf(2.0 * (1.0 + eps) / alpha) / 2.0 * (alpha / 2.0 + 1.0) * std::f64::consts::LN_2
}

/// The s schedule used in the sub-exponential corollary: s = e^(-t^(p/(2-p))).
pub fn subexp_s_schedule(t: f64, p: f64) -> f64 {
    (-t.powf(p / (2.0 - p))).exp()
}

/// A decay envelope with its shape tag, for tabulation.
#[derive(Clone, Debug)]
pub enum DecayEnvelope {
    RwOptimized { beta: RateFunction, var0: f64, sup_norm: f64 },
    KappaCorollary { alpha: f64, eps: f64, volume: f64, c: f64 },
    SubExpCorollary { p: f64, c: f64, volume: f64, a: f64 },
    KappaTheorem { alpha: f64, dimension: u32, eps: f64, c: f64, norm: f64 },
    SubExpTheorem { p: f64, c: f64, norm: f64 },
}

impl DecayEnvelope {
    /// Envelope value at time t; None when a corollary threshold makes the
    /// bound inapplicable. The optional second value is the optimising s.
    pub fn evaluate(&self, t: f64) -> (Option<f64>, Option<f64>) {
        match self {
            DecayEnvelope::RwOptimized { beta, var0, sup_norm } => {
                let (v, s) = rw_envelope(beta, t, *var0, *sup_norm);
                (Some(v), Some(s))
            }
            DecayEnvelope::KappaCorollary { alpha, eps, volume, c } => {
                (Some(kappa_corollary_envelope(*alpha, *eps, *volume, *c, t)), None)
            }
            DecayEnvelope::SubExpCorollary { p, c, volume, a } => {
                (subexp_corollary_envelope(*p, *c, t, *volume, *a), None)
            }
            DecayEnvelope::KappaTheorem { alpha, dimension, eps, c, norm } => (
                Some(theorem_envelope(
                    TheoremKind::Kappa { alpha: *alpha, dimension: *dimension, eps: *eps },
                    *c,
                    t,
                    *norm,
                )),
                None,
            ),
            DecayEnvelope::SubExpTheorem { p, c, norm } => {
                (Some(theorem_envelope(TheoremKind::SubExp { p: *p }, *c, t, *norm)), None)
            }
        }
    }
}

/// Calibrates the theorem constant so the envelope passes through the value
/// `var_ref` at time `t_ref` (for the given squared norm).
pub fn calibrate_theorem_constant(
    kind: TheoremKind,
    t_ref: f64,
    var_ref: f64,
    norm: f64,
) -> Result<f64> {
    if !(t_ref > 0.0) || !(var_ref > 0.0) {
        return Err(Error::invalid("calibration needs positive reference time and variance"));
    }
    match kind {
        TheoremKind::Kappa { alpha, dimension, eps } => {
            let exponent = alpha / 2.0 - dimension as f64 * (1.0 + eps);
            if exponent <= 0.0 {
                return Err(Error::invalid(
                    "polynomial envelope exponent not positive; contraction fallback applies",
                ));
            }
            Ok(var_ref * t_ref.powf(exponent) / (norm * norm))
        }
        TheoremKind::SubExp { p } => {
            // Solve (1/C) e^(-C x) = v with x = t_ref^(p/(2-p)), v = var_ref/norm^2.
            // g(C) = -ln C - C x - ln v is strictly decreasing in C.
            let x = t_ref.powf(p / (2.0 - p));
            let v = var_ref / (norm * norm);
            let g = |c: f64| -c.ln() - c * x - v.ln();
            let mut lo = 1e-12;
            let mut hi = 1.0;
            while g(hi) > 0.0 {
                hi *= 2.0;
                if hi > 1e12 {
                    return Err(Error::invalid("calibration diverged for the stretched envelope"));
                }
            }
            if g(lo) < 0.0 {
                return Err(Error::invalid("reference variance too large to calibrate"));
            }
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if g(mid) > 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            Ok(0.5 * (lo + hi))
        }
    }
}

/// Largest constant whose envelope stays above the given floor values at the
/// given times. The stretched family is monotone: lowering C raises the
/// envelope everywhere, so a dominating constant always exists and the
/// largest one is the informative one (it tracks the decay rate the data
/// exhibits). The polynomial family is monotone the other way; there the
/// smallest dominating constant comes from a direct maximum.
pub fn calibrate_dominating_constant(
    kind: TheoremKind,
    times: &[f64],
    floor: &[f64],
    norm: f64,
) -> Result<f64> {
    if times.len() != floor.len() || times.is_empty() {
        return Err(Error::invalid("calibration needs matching nonempty times and floors"));
    }
    let dominates = |c: f64| -> bool {
        times.iter().zip(floor).all(|(&t, &v)| {
            if t <= 0.0 {
                // the contraction cap norm^2 rules at t = 0
                norm * norm >= v
            } else {
                theorem_envelope(kind, c, t, norm).min(norm * norm) >= v
            }
        })
    };
    match kind {
        TheoremKind::SubExp { .. } => {
            let mut hi = 1024.0;
            if dominates(hi) {
                return Ok(hi);
            }
            let mut lo = hi;
            let mut tries = 0;
            while !dominates(lo) {
                lo *= 0.5;
                tries += 1;
                if tries > 400 {
                    return Err(Error::invalid(
                        "no stretched envelope dominates: floor above the contraction cap",
                    ));
                }
            }
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if dominates(mid) {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            Ok(lo)
        }
        TheoremKind::Kappa { alpha, dimension, eps } => {
            let exponent = alpha / 2.0 - dimension as f64 * (1.0 + eps);
            if exponent <= 0.0 {
                return Err(Error::invalid("polynomial envelope in the contraction fallback regime"));
            }
            let mut c: f64 = 0.0;
            for (&t, &v) in times.iter().zip(floor) {
                if t > 0.0 && v > 0.0 {
                    c = c.max(v * t.powf(exponent) / (norm * norm));
                }
            }
            if c == 0.0 {
                return Err(Error::invalid("every floor value is nonpositive; nothing to calibrate"));
            }
            Ok(c)
        }
    }
}
