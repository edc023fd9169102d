//! Bounded finite-range pair interactions.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// The pair potential W applied to spin differences.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InteractionKind {
    Zero,
    /// W(u) = 1 / (1 + u^2)
    Lorentz,
    /// W(u) = cos u
    Cosine,
}

impl InteractionKind {
    #[inline]
    pub fn value(&self, u: f64) -> f64 {
        match self {
            InteractionKind::Zero => 0.0,
            InteractionKind::Lorentz => 1.0 / (1.0 + u * u),
            InteractionKind::Cosine => u.cos(),
        }
    }

    #[inline]
    pub fn derivative(&self, u: f64) -> f64 {
        match self {
            InteractionKind::Zero => 0.0,
            InteractionKind::Lorentz => {
                let d = 1.0 + u * u;
                -2.0 * u / (d * d)
            }
            InteractionKind::Cosine => -u.sin(),
        }
    }

    #[inline]
    pub fn second_derivative(&self, u: f64) -> f64 {
        match self {
            InteractionKind::Zero => 0.0,
            InteractionKind::Lorentz => {
                let d = 1.0 + u * u;
                (6.0 * u * u - 2.0) / (d * d * d)
            }
            InteractionKind::Cosine => -u.cos(),
        }
    }

    /// Declared sup norms of (W, W', W''). Slightly rounded up.
    pub fn default_norms(&self) -> (f64, f64, f64) {
        match self {
            InteractionKind::Zero => (0.0, 0.0, 0.0),
            // |W'| peaks at 9/(8 sqrt 3) ~ 0.6495 at u = 1/sqrt(3)
            InteractionKind::Lorentz => (1.0, 0.65, 2.0),
            InteractionKind::Cosine => (1.0, 1.0, 1.0),
        }
    }
}

/// Interaction together with its range, temperature and declared norms.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct InteractionSpec {
    pub kind: InteractionKind,
    /// Interaction range (Euclidean distance on the lattice).
    pub range: u32,
    pub temperature: f64,
    pub norm_w: f64,
    pub norm_w_prime: f64,
    pub norm_w_second: f64,
}

impl InteractionSpec {
    pub fn new(kind: InteractionKind, range: u32, temperature: f64) -> Result<Self> {
        let (norm_w, norm_w_prime, norm_w_second) = kind.default_norms();
        Self::with_norms(kind, range, temperature, norm_w, norm_w_prime, norm_w_second)
    }

    pub fn with_norms(
        kind: InteractionKind,
        range: u32,
        temperature: f64,
        norm_w: f64,
        norm_w_prime: f64,
        norm_w_second: f64,
    ) -> Result<Self> {
        if range == 0 {
            return Err(Error::invalid("interaction range must be a positive integer"));
        }
        if !(temperature > 0.0) || !temperature.is_finite() {
            return Err(Error::invalid(format!("temperature must be positive, got {temperature}")));
        }
        for (name, v) in [("|W|", norm_w), ("|W'|", norm_w_prime), ("|W''|", norm_w_second)] {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::invalid(format!("norm bound {name} must be finite and nonnegative")));
            }
        }
        Ok(InteractionSpec { kind, range, temperature, norm_w, norm_w_prime, norm_w_second })
    }

    pub fn by_name(name: &str, range: u32, temperature: f64) -> Result<Self> {
        let kind = match name {
            "zero" => InteractionKind::Zero,
            "lorentz" => InteractionKind::Lorentz,
            "cosine" => InteractionKind::Cosine,
            other => return Err(Error::invalid(format!("unknown interaction '{other}'"))),
        };
        Self::new(kind, range, temperature)
    }

    /// Samples |W|, |W'|, |W''| densely and checks the declared bounds dominate.
    pub fn validate(&self) -> Result<()> {
        let mut sup = (0.0f64, 0.0f64, 0.0f64);
        for i in 0..=20_000 {
            let u = -100.0 + 0.01 * i as f64;
            sup.0 = sup.0.max(self.kind.value(u).abs());
            sup.1 = sup.1.max(self.kind.derivative(u).abs());
            sup.2 = sup.2.max(self.kind.second_derivative(u).abs());
        }
        let checks = [
            ("|W|", sup.0, self.norm_w),
            ("|W'|", sup.1, self.norm_w_prime),
            ("|W''|", sup.2, self.norm_w_second),
        ];
        for (name, sampled, declared) in checks {
            if sampled > declared {
                return Err(Error::invalid(format!(
                    "declared bound {name} = {declared} is below sampled sup {sampled}"
                )));
            }
        }
        Ok(())
    }
}
