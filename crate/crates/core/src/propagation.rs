//! Finite speed of propagation: how slowly boundary information travels.
//!
//! The distance between the finite-volume semigroup on [-L, L]^d and a larger
//! (or infinite) volume acting on a local observable is controlled by the
//! exponential remainder
//!
//! ```text
//! R(m, x) = e^x - sum_{k=0..m} x^k / k!   (x = C t)
//! ```
//!
//! through the chain bound (4 (2r)^d |W'| / C) |||f||| R(L/r - l, C t) with
//! C = (2r)^d |W''|, and in headline form by C |||f||| (C' t / L)^(C'' L) e^(C t).
//! Both are negligible once L >> t.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Tail of the exponential series beyond order m: sum_{k > m} x^k / k!.
///
/// Summed forward from k = m+1 until terms drop below 1e-18 relative, which
/// avoids the catastrophic cancellation of e^x minus a partial sum.
///
/// ```
/// use gdl_core::propagation::remainder_r;
/// let r = remainder_r(2, 1.0); // e - (1 + 1 + 1/2)
/// assert!((r - (std::f64::consts::E - 2.5)).abs() < 1e-14);
/// ```
pub fn remainder_r(m: u32, x: f64) -> f64 {
    assert!(x >= 0.0, "remainder argument must be nonnegative");
    if x == 0.0 {
        return 0.0;
    }
    // First tail term x^(m+1) / (m+1)! by running product.
    let mut term = 1.0f64;
    for k in 1..=m + 1 {
        term *= x / k as f64;
    }
    let mut sum = term;
    let mut k = m + 1;
    loop {
        k += 1;
        term *= x / k as f64;
        sum += term;
        if term < 1e-18 * sum || term == 0.0 {
            break;
        }
    }
    sum
}

/// Closed upper bound (x e / m)^m e^x for the remainder, m >= 1.
/// Underflows cleanly to zero for m >> x.
pub fn remainder_closed_bound(m: u32, x: f64) -> f64 {
    assert!(m >= 1, "closed bound needs m >= 1");
    assert!(x >= 0.0);
    if x == 0.0 {
        return 0.0;
    }
    let mf = m as f64;
    (mf * (x.ln() + 1.0 - mf.ln()) + x).exp()
}

/// Inputs for the propagation bound on the cube [-L, L]^d.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct PropagationInputs {
    /// Cube half side; must be a multiple of the range.
    pub half_side: u64,
    /// Interaction range.
    pub range: u32,
    /// Observable support radius: support inside [-l, l]^d.
    pub support_radius: u32,
    pub time: f64,
    /// Headline constants.
    pub c: f64,
    pub c_prime: f64,
    pub c_second: f64,
    /// Sum of per-site derivative sup-norms of the observable.
    pub triple_norm: f64,
    /// Lattice dimension (enters the proof-chain constants).
    pub dimension: u32,
    /// Interaction derivative norms for the proof-chain form.
    pub w_prime_norm: f64,
    pub w_second_norm: f64,
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct PropagationBound {
    /// C |||f||| (C' t / L)^(C'' L) e^(C t)
    pub headline: f64,
    /// (4 (2r)^d |W'| / C) |||f||| R(L/r - l, C t) with C = (2r)^d |W''|
    pub proof_chain: f64,
}

impl PropagationInputs {
    pub fn validate(&self) -> Result<()> {
        if self.range == 0 {
            return Err(Error::invalid("range must be positive"));
        }
        if self.half_side == 0 || self.half_side % self.range as u64 != 0 {
            return Err(Error::invalid(format!(
                "half side {} must be a positive multiple of the range {}",
                self.half_side, self.range
            )));
        }
        if self.half_side / self.range as u64 <= self.support_radius as u64 {
            return Err(Error::invalid(
                "support radius too large: remainder order L/r - l must be positive",
            ));
        }
        if !(self.time > 0.0) {
            return Err(Error::invalid("time must be positive"));
        }
        for (name, v) in [("C", self.c), ("C'", self.c_prime), ("C''", self.c_second)] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::invalid(format!("constant {name} must be positive")));
            }
        }
        if self.triple_norm < 0.0 || !self.triple_norm.is_finite() {
            return Err(Error::invalid("triple norm must be finite and nonnegative"));
        }
        if self.dimension == 0 || self.dimension > 3 {
            return Err(Error::invalid("dimension must be in 1..=3"));
        }
        Ok(())
    }

    /// Proof-chain propagation speed constant (2r)^d |W''|.
    pub fn chain_constant(&self) -> f64 {
        (2.0 * self.range as f64).powi(self.dimension as i32) * self.w_second_norm
    }

    pub fn bound(&self) -> Result<PropagationBound> {
        self.validate()?;
        let l = self.half_side as f64;
        let headline = self.c
            * self.triple_norm
            * (self.c_prime * self.time / l).powf(self.c_second * l)
            * (self.c * self.time).exp();

        let c_chain = self.chain_constant();
        let m = (self.half_side / self.range as u64) as u32 - self.support_radius;
        let prefactor =
            4.0 * (2.0 * self.range as f64).powi(self.dimension as i32) * self.w_prime_norm / c_chain;
        let proof_chain = prefactor * self.triple_norm * remainder_r(m, c_chain * self.time);
        Ok(PropagationBound { headline, proof_chain })
    }
}
