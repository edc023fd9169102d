//! Single-site random-walk Metropolis sampling of the finite-volume measure.
//!
//! Proposals mix a Gaussian step with a heavy-tailed Cauchy jump: for targets
//! with polynomial tails a purely Gaussian walk mixes the tail only
//! arithmetically, while an occasional Cauchy jump keeps tail excursions
//! geometric. Acceptance uses unnormalised log-density differences only,
//! which reduce to the local energy terms of the flipped site.

use crate::dynamics::SimulationParams;
use crate::error::{Error, Result};
use crate::model::region::Configuration;
use crate::model::ModelSpec;
use crate::rng::{site_key, NoiseStream};

pub(crate) const TAG_METROPOLIS: u64 = 0x4d45_5452;

/// A Metropolis chain advanced sweep by sweep; local energies are evaluated
/// at proposal time, so updates within a sweep see earlier acceptances.
pub(crate) struct MetropolisChain<'a> {
    model: &'a ModelSpec,
    params: &'a SimulationParams,
    keys: Vec<u64>,
    stream: NoiseStream,
    values: Vec<f64>,
    sweep: u64,
    pub accepted: u64,
    pub proposed: u64,
}

impl<'a> MetropolisChain<'a> {
    pub fn new(model: &'a ModelSpec, params: &'a SimulationParams) -> Self {
        let keys = model.region().sites().iter().map(|s| site_key(*s)).collect();
        MetropolisChain {
            model,
            params,
            keys,
            stream: NoiseStream::new(params.seed).derive(TAG_METROPOLIS, 0),
            values: vec![0.0; model.region().len()],
            sweep: 0,
            accepted: 0,
            proposed: 0,
        }
    }

    fn sweep_once(&mut self, count: bool) {
        let mut acc = 0u64;
        for i in 0..self.values.len() {
            let key = self.keys[i];
            let mix = self.stream.uniform(key, self.sweep, 0);
            let jump = if mix < self.params.heavy_tail_mix {
                self.params.proposal_scale * self.stream.cauchy(key, self.sweep, 1)
            } else {
                self.params.proposal_scale * self.stream.normal(key, self.sweep, 1)
            };
            let candidate = self.values[i] + jump;
            let old_energy = self.model.local_energy(&self.values, i, self.values[i]);
            let new_energy = self.model.local_energy(&self.values, i, candidate);
            let log_ratio = old_energy - new_energy; // log pi(new) - log pi(old)
            let u = self.stream.uniform(key, self.sweep, 4);
            if log_ratio >= 0.0 || u.ln() < log_ratio {
                self.values[i] = candidate;
                acc += 1;
            }
        }
        self.sweep += 1;
        if count {
            self.accepted += acc;
            self.proposed += self.values.len() as u64;
        }
    }

    pub fn burn_in(&mut self) {
        for _ in 0..self.params.burn_in_steps {
            self.sweep_once(false);
        }
    }

    /// One retained draw: `thinning` counted sweeps.
    pub fn advance(&mut self) {
        for _ in 0..self.params.thinning {
            self.sweep_once(true);
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn acceptance_rate(&self) -> f64 {
        self.accepted as f64 / self.proposed.max(1) as f64
    }

    pub fn warnings(&self) -> Vec<String> {
        let rate = self.acceptance_rate();
        if (0.05..=0.95).contains(&rate) {
            Vec::new()
        } else {
            vec![format!(
                "acceptance rate {rate:.3} outside [0.05, 0.95]; retune proposal_scale"
            )]
        }
    }
}

/// Draws from the equilibrium measure plus sampling diagnostics.
#[derive(Clone, Debug)]
pub struct EquilibriumSample {
    pub configurations: Vec<Configuration>,
    /// Acceptance rate over the post-burn-in phase.
    pub acceptance_rate: f64,
    pub warnings: Vec<String>,
}

/// `n` approximately independent draws from the Gibbs measure of `model`:
/// one chain, `burn_in_steps` discarded sweeps, then one draw every
/// `thinning` sweeps.
pub fn sample_equilibrium(
    model: &ModelSpec,
    n: usize,
    params: &SimulationParams,
) -> Result<EquilibriumSample> {
    params.validate()?;
    if n == 0 {
        return Err(Error::invalid("need at least one sample"));
    }
    let region = model.region().clone();
    let mut chain = MetropolisChain::new(model, params);
    chain.burn_in();
    let mut configurations = Vec::with_capacity(n);
    for _ in 0..n {
        chain.advance();
        configurations
            .push(Configuration::from_values_unchecked(region.clone(), chain.values().to_vec()));
    }
    Ok(EquilibriumSample {
        acceptance_rate: chain.acceptance_rate(),
        warnings: chain.warnings(),
        configurations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::boundary::BoundaryCondition;
    use crate::model::interaction::{InteractionKind, InteractionSpec};
    use crate::model::potential::SelfPotential;
    use crate::model::region::Region;
    use std::sync::Arc;

    fn gaussian_single_site() -> ModelSpec {
        ModelSpec::new(
            SelfPotential::quadratic(),
            InteractionSpec::new(InteractionKind::Zero, 1, 1.0).unwrap(),
            Arc::new(Region::cube(1, 0).unwrap()),
            BoundaryCondition::Zero,
        )
        .unwrap()
    }

    #[test]
    fn standard_normal_moments_recovered() {
        let model = gaussian_single_site();
        let params = SimulationParams { ensemble_size: 1, ..SimulationParams::test_default(7) };
        let n = 100_000;
        let sample = sample_equilibrium(&model, n, &params).unwrap();
        let xs: Vec<f64> = sample.configurations.iter().map(|c| c.values()[0]).collect();
        let mean = crate::stats::mean(&xs);
        let var = crate::stats::sample_variance(&xs);
        // Thinned draws are nearly independent; allow 4 nominal SEs.
        let se_mean = (1.0 / n as f64).sqrt();
        let se_var = (2.0 / n as f64).sqrt();
        assert!(mean.abs() < 4.0 * se_mean, "mean {mean}");
        assert!((var - 1.0).abs() < 4.0 * se_var, "var {var}");
        assert!(sample.warnings.is_empty(), "{:?}", sample.warnings);
    }

    #[test]
    fn same_seed_reproduces_chain() {
        let model = gaussian_single_site();
        let params = SimulationParams::test_default(99);
        let a = sample_equilibrium(&model, 50, &params).unwrap();
        let b = sample_equilibrium(&model, 50, &params).unwrap();
        for (x, y) in a.configurations.iter().zip(&b.configurations) {
            assert_eq!(x.values()[0].to_bits(), y.values()[0].to_bits());
        }
    }

    #[test]
    fn tiny_acceptance_triggers_warning() {
        let model = gaussian_single_site();
        let mut params = SimulationParams::test_default(3);
        params.proposal_scale = 500.0; // nearly always rejected
        params.heavy_tail_mix = 0.0;
        let sample = sample_equilibrium(&model, 200, &params).unwrap();
        assert!(sample.acceptance_rate < 0.05);
        assert!(!sample.warnings.is_empty());
    }
}
