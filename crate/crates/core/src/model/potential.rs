//! Single-site self potentials.
//!
//! Two heavy-tailed families built from a convex base U > 0:
//! polynomial tails V = (1+alpha) log U (Cauchy type, density ~ U^-(1+alpha))
//! and stretched-exponential tails V = U^p with p in (0,1]. A quadratic
//! potential is kept for calibration against the Ornstein-Uhlenbeck process.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Convex base function U: R -> (0, inf).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BasePotential {
    /// U(u) = sqrt(1 + u^2): smooth everywhere.
    SmoothAbs,
    /// U(u) = 1 + |u|: kinked at zero, derivative taken as 0 there.
    OnePlusAbs,
    /// U(u) = sqrt(1 + (u/width)^2): smooth with a flat core of the given
    /// width; widening the core slows the local relaxation so the
    /// heavy-tail decay regime falls inside a desk-scale time window.
    SmoothAbsWide { width: f64 },
}

impl BasePotential {
    #[inline]
    pub fn value(&self, u: f64) -> f64 {
        match self {
            BasePotential::SmoothAbs => (1.0 + u * u).sqrt(),
            BasePotential::OnePlusAbs => 1.0 + u.abs(),
            BasePotential::SmoothAbsWide { width } => {
                let v = u / width;
                (1.0 + v * v).sqrt()
            }
        }
    }

    #[inline]
    pub fn derivative(&self, u: f64) -> f64 {
        match self {
            BasePotential::SmoothAbs => u / (1.0 + u * u).sqrt(),
            BasePotential::OnePlusAbs => {
                if u == 0.0 {
                    0.0
                } else {
                    u.signum()
                }
            }
            BasePotential::SmoothAbsWide { width } => {
                let v = u / width;
                v / (width * (1.0 + v * v).sqrt())
            }
        }
    }

    /// Width of the core: U(u) >= |u| / core_width everywhere, which the
    /// truncation bounds rely on.
    pub fn core_width(&self) -> f64 {
        match self {
            BasePotential::SmoothAbs | BasePotential::OnePlusAbs => 1.0,
            BasePotential::SmoothAbsWide { width } => *width,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if let BasePotential::SmoothAbsWide { width } = self {
            if !(*width > 0.0) || !width.is_finite() {
                return Err(Error::invalid(format!("base width must be positive, got {width}")));
            }
        }
        Ok(())
    }
}

/// Tail class of the self potential.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PotentialKind {
    /// V = (1+alpha) log U; density has polynomial tails of order 1+alpha.
    KappaConcave { alpha: f64 },
    /// V = U^p; density has stretched-exponential tails.
    SubExponential { p: f64 },
    /// V = u^2/2; calibration only.
    Quadratic,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SelfPotential {
    pub kind: PotentialKind,
    pub base: BasePotential,
}

impl SelfPotential {
    pub fn kappa_concave(alpha: f64) -> Result<Self> {
        Self::kappa_concave_with_base(alpha, BasePotential::SmoothAbs)
    }

    pub fn kappa_concave_with_base(alpha: f64, base: BasePotential) -> Result<Self> {
        if !(alpha > 0.0) || !alpha.is_finite() {
            return Err(Error::invalid(format!("alpha must be positive, got {alpha}")));
        }
        base.validate()?;
        Ok(SelfPotential { kind: PotentialKind::KappaConcave { alpha }, base })
    }

    pub fn sub_exponential(p: f64) -> Result<Self> {
        Self::sub_exponential_with_base(p, BasePotential::SmoothAbs)
    }

    pub fn sub_exponential_with_base(p: f64, base: BasePotential) -> Result<Self> {
        if !(p > 0.0 && p <= 1.0) {
            return Err(Error::invalid(format!("p must lie in (0, 1], got {p}")));
        }
        base.validate()?;
        Ok(SelfPotential { kind: PotentialKind::SubExponential { p }, base })
    }

    pub fn quadratic() -> Self {
        SelfPotential { kind: PotentialKind::Quadratic, base: BasePotential::SmoothAbs }
    }

    #[inline]
    pub fn value(&self, u: f64) -> f64 {
        match self.kind {
            PotentialKind::KappaConcave { alpha } => (1.0 + alpha) * self.base.value(u).ln(),
            PotentialKind::SubExponential { p } => self.base.value(u).powf(p),
            PotentialKind::Quadratic => 0.5 * u * u,
        }
    }

    #[inline]
    pub fn derivative(&self, u: f64) -> f64 {
        match self.kind {
            PotentialKind::KappaConcave { alpha } => {
                (1.0 + alpha) * self.base.derivative(u) / self.base.value(u)
            }
            PotentialKind::SubExponential { p } => {
                p * self.base.value(u).powf(p - 1.0) * self.base.derivative(u)
            }
            PotentialKind::Quadratic => u,
        }
    }

    /// Checks smoothness (derivative vs central difference, 1e-6 relative on a
    /// grid) and integrability of exp(-V) (integrand negligible at a large
    /// truncation radius).
    pub fn validate(&self) -> Result<()> {
        let h = 1e-5;
        for i in 0..=400 {
            let u = -20.0 + 0.1 * i as f64;
            let d = self.derivative(u);
            let fd = (self.value(u + h) - self.value(u - h)) / (2.0 * h);
            if !d.is_finite() {
                return Err(Error::NonFinite { context: format!("potential derivative at {u}"), value: d });
            }
            let rel = (d - fd).abs() / d.abs().max(1.0);
            if rel > 1e-6 {
                return Err(Error::invalid(format!(
                    "potential derivative mismatch at u={u}: analytic {d}, finite difference {fd}"
                )));
            }
        }
        // Heavy tails still integrate: exp(-V) must be tiny far out.
        let radius = 1e8;
        let tail = (-self.value(radius)).exp().max((-self.value(-radius)).exp());
        if !(tail < 1e-8) {
            return Err(Error::invalid(format!(
                "exp(-V) = {tail:.3e} at |u| = {radius:.0e}; potential not integrable enough"
            )));
        }
        Ok(())
    }
}
