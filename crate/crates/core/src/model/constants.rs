//! Registry of constants that the analysis leaves unspecified.
//!
//! The rate-function and propagation bounds are proved "for some constant";
//! every operation that needs one takes it from here explicitly, so runs are
//! auditable and the structural tests can pin documented defaults.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConstantsRegistry {
    /// Covariance-decay prefactor in the strong-mixing bound.
    pub mixing_d: f64,
    /// Covariance-decay rate in the strong-mixing bound.
    pub mixing_m: f64,
    /// Crude perturbation constant.
    pub perturbation_c: f64,
    /// Coupling amplitude in the two-rectangle recursion.
    pub geometry_c1: f64,
    /// Coupling decay rate in the two-rectangle recursion.
    pub geometry_c2: f64,
    /// First level at which the recursion is seeded.
    pub geometry_k0: u32,
    /// Propagation bound constants (headline form).
    pub propagation_c: f64,
    pub propagation_c_prime: f64,
    pub propagation_c_second: f64,
    /// Envelope time-shift schedule parameters.
    pub lambda: f64,
    pub lambda_prime: f64,
    pub envelope_a: f64,
    /// Closed-form rate prefactors for the two potential classes.
    pub rate_c_alpha: f64,
    pub rate_c_p: f64,
}

impl Default for ConstantsRegistry {
    fn default() -> Self {
        ConstantsRegistry {
            mixing_d: 1.0,
            mixing_m: 1.0,
            perturbation_c: 1.0,
            geometry_c1: 1.0,
            geometry_c2: 1.0,
            geometry_k0: 0,
            propagation_c: 1.0,
            propagation_c_prime: 1.0,
            propagation_c_second: 1.0,
            lambda: 1.0,
            lambda_prime: 1.0,
            envelope_a: 1.0,
            rate_c_alpha: 1.0,
            rate_c_p: 1.0,
        }
    }
}

impl ConstantsRegistry {
    pub fn validate(&self) -> Result<()> {
        let entries = [
            ("mixing_d", self.mixing_d),
            ("mixing_m", self.mixing_m),
            ("perturbation_c", self.perturbation_c),
            ("geometry_c1", self.geometry_c1),
            ("geometry_c2", self.geometry_c2),
            ("propagation_c", self.propagation_c),
            ("propagation_c_prime", self.propagation_c_prime),
            ("propagation_c_second", self.propagation_c_second),
            ("lambda", self.lambda),
            ("lambda_prime", self.lambda_prime),
            ("envelope_a", self.envelope_a),
            ("rate_c_alpha", self.rate_c_alpha),
            ("rate_c_p", self.rate_c_p),
        ];
        for (name, v) in entries {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::invalid(format!("registry entry {name} must be strictly positive, got {v}")));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate_and_zero_entries_do_not() {
        ConstantsRegistry::default().validate().unwrap();
        let mut r = ConstantsRegistry::default();
        r.geometry_c2 = 0.0;
        assert!(r.validate().is_err());
        let mut r = ConstantsRegistry::default();
        r.mixing_m = f64::NAN;
        assert!(r.validate().is_err());
    }
}
