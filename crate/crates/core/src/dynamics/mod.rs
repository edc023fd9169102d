//! Simulation of the spin diffusion and its decay estimators.
//!
//! The dynamics is the overdamped diffusion with generator
//! sum_x (d^2/dsigma_x^2 - dH/dsigma_x d/dsigma_x), discretised by fixed-step
//! Euler-Maruyama:
//!
//! ```text
//! sigma'_x = sigma_x - grad_x H dt + sqrt(2 dt) xi_x
//! ```
//!
//! Both potential classes have drifts that stay bounded at infinity, so no
//! taming is needed; a 1e12 overflow guard catches an unstable dt instead.
//!
//! Variance decay is estimated through the reversibility identity
//! Var(P_{t/2} f) = Cov(f(X_0), f(X_t)) along stationary trajectories: one
//! level of randomness instead of a nested start-and-restart estimator. The
//! series is indexed by the lag t; read the value at lag t as the variance of
//! the semigroup at time t/2. Trajectories are independent batches for the
//! standard errors, and every stream is counter-based, so results are
//! bit-identical for a fixed seed no matter the thread count.

pub mod metropolis;

pub use metropolis::{sample_equilibrium, EquilibriumSample};

use crate::error::{Error, Result};
use crate::model::observable::LocalObservable;
use crate::model::region::{Configuration, Site};
use crate::model::ModelSpec;
use crate::rng::{site_key, NoiseStream};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

const TAG_TRAJECTORY: u64 = 0x5452_414a;
const TAG_COUPLING: u64 = 0x4350_4c47;
const OVERFLOW_GUARD: f64 = 1e12;

/// Knobs of the simulation experiments.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationParams {
    /// Euler-Maruyama step.
    pub dt: f64,
    /// Trajectory length in time units.
    pub horizon: f64,
    /// Number of independent stationary trajectories (batches).
    pub ensemble_size: usize,
    /// Metropolis sweeps discarded before sampling.
    pub burn_in_steps: usize,
    /// Metropolis sweeps between retained samples.
    pub thinning: usize,
    /// Scale of both proposal kinds.
    pub proposal_scale: f64,
    /// Probability of a Cauchy jump instead of a Gaussian step.
    pub heavy_tail_mix: f64,
    pub seed: u64,
}

impl SimulationParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(Error::invalid("dt must be positive"));
        }
        if !(self.horizon > 0.0) || !self.horizon.is_finite() {
            return Err(Error::invalid("horizon must be positive"));
        }
        if self.ensemble_size == 0 {
            return Err(Error::invalid("ensemble size must be positive"));
        }
        if self.burn_in_steps == 0 || self.thinning == 0 {
            return Err(Error::invalid("burn-in and thinning must be positive"));
        }
        if !(self.proposal_scale > 0.0) {
            return Err(Error::invalid("proposal scale must be positive"));
        }
        if !(0.0..=1.0).contains(&self.heavy_tail_mix) {
            return Err(Error::invalid("heavy tail mix must lie in [0, 1]"));
        }
        Ok(())
    }

    /// Small but sane defaults for unit tests.
    #[doc(hidden)]
    pub fn test_default(seed: u64) -> Self {
        SimulationParams {
            dt: 1e-3,
            horizon: 4.0,
            ensemble_size: 64,
            burn_in_steps: 300,
            thinning: 5,
            proposal_scale: 1.0,
            heavy_tail_mix: 0.1,
            seed,
        }
    }
}

/// One synchronous Euler-Maruyama step; `noise` holds one standard normal
/// per region site, in region order.
pub fn langevin_step(
    cfg: &Configuration,
    model: &ModelSpec,
    dt: f64,
    noise: &[f64],
) -> Result<Configuration> {
    if noise.len() != cfg.region().len() {
        return Err(Error::invalid(format!(
            "noise has {} entries for {} sites",
            noise.len(),
            cfg.region().len()
        )));
    }
    if !(dt > 0.0) {
        return Err(Error::invalid("dt must be positive"));
    }
    let amp = (2.0 * dt).sqrt();
    let old = cfg.values();
    let mut new = vec![0.0; old.len()];
    for i in 0..old.len() {
        new[i] = old[i] - model.grad_at(old, i) * dt + amp * noise[i];
        if !new[i].is_finite() || new[i].abs() > OVERFLOW_GUARD {
            return Err(Error::Diverged {
                site: cfg.region().sites()[i],
                step: 0,
                value: new[i],
            });
        }
    }
    Ok(Configuration::from_values_unchecked(cfg.region().clone(), new))
}

/// In-place double-buffered step used by the trajectory loops.
fn step_in_place(
    model: &ModelSpec,
    keys: &[u64],
    sites: &[Site],
    stream: &NoiseStream,
    step: u64,
    dt: f64,
    amp: f64,
    old: &[f64],
    new: &mut [f64],
) -> Result<()> {
    for i in 0..old.len() {
        let xi = stream.normal(keys[i], step, 0);
        new[i] = old[i] - model.grad_at(old, i) * dt + amp * xi;
        if !new[i].is_finite() || new[i].abs() > OVERFLOW_GUARD {
            return Err(Error::Diverged { site: sites[i], step, value: new[i] });
        }
    }
    Ok(())
}

/// Metadata pinned to every estimated series: enough to re-run it.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SeriesMetadata {
    pub model_fingerprint: String,
    pub seed: u64,
    pub params: SimulationParams,
    pub acceptance_rate: f64,
    pub warnings: Vec<String>,
}

impl Default for SeriesMetadata {
    fn default() -> Self {
        SeriesMetadata {
            model_fingerprint: String::new(),
            seed: 0,
            params: SimulationParams {
                dt: 0.0,
                horizon: 0.0,
                ensemble_size: 0,
                burn_in_steps: 0,
                thinning: 0,
                proposal_scale: 0.0,
                heavy_tail_mix: 0.0,
                seed: 0,
            },
            acceptance_rate: 0.0,
            warnings: Vec::new(),
        }
    }
}

/// Time-indexed variance estimates with batch-means standard errors.
///
/// Times are lags along stationary trajectories; the entry at lag t is an
/// unbiased estimate of the variance of the semigroup at time t/2. Negative
/// estimates near the noise floor are reported as-is, never clamped.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DecaySeries {
    pub times: Vec<f64>,
    pub variance: Vec<f64>,
    pub std_error: Vec<f64>,
    pub metadata: SeriesMetadata,
}

/// Estimates the stationary autocovariance of `f` at the requested lags.
pub fn estimate_variance_decay(
    model: &ModelSpec,
    f: &LocalObservable,
    times: &[f64],
    params: &SimulationParams,
) -> Result<DecaySeries> {
    params.validate()?;
    let region = model.region().clone();
    for site in &f.support {
        if !region.contains(*site) {
            return Err(Error::invalid(format!("observable support site {site} outside the region")));
        }
    }
    if times.is_empty() {
        return Err(Error::invalid("need at least one time"));
    }
    for w in times.windows(2) {
        if w[1] <= w[0] {
            return Err(Error::invalid("times must be strictly increasing"));
        }
    }
    if times[0] < 0.0 {
        return Err(Error::invalid("times must be nonnegative"));
    }

    // Snap lags to the step grid.
    let lags: Vec<usize> = times.iter().map(|t| (t / params.dt).round() as usize).collect();
    for w in lags.windows(2) {
        if w[1] <= w[0] {
            return Err(Error::invalid("two requested times snap to the same step; dt too coarse"));
        }
    }
    let snapped: Vec<f64> = lags.iter().map(|&l| l as f64 * params.dt).collect();
    let n_steps = (params.horizon / params.dt).round() as usize;
    let max_lag = *lags.last().unwrap();
    if n_steps <= max_lag {
        return Err(Error::invalid(format!(
            "horizon {} leaves no averaging window beyond the largest lag {}",
            params.horizon,
            max_lag as f64 * params.dt
        )));
    }

    let starts = sample_equilibrium(model, params.ensemble_size, params)?;
    let keys: Vec<u64> = region.sites().iter().map(|s| site_key(*s)).collect();
    let sites = region.sites().to_vec();
    let root = NoiseStream::new(params.seed);
    let amp = (2.0 * params.dt).sqrt();

    struct TrajStats {
        sum_f: f64,
        count: usize,
        prod: Vec<f64>,
        head: Vec<f64>,
        tail: Vec<f64>,
    }

    let run_one = |j: usize| -> Result<TrajStats> {
        let stream = root.derive(TAG_TRAJECTORY, j as u64);
        let mut old = starts.configurations[j].values().to_vec();
        let mut new = vec![0.0; old.len()];
        let mut cfg =
            Configuration::from_values_unchecked(region.clone(), old.clone());

        let cap = max_lag + 1;
        let mut ring = vec![0.0f64; cap];
        let mut stats = TrajStats {
            sum_f: 0.0,
            count: n_steps + 1,
            prod: vec![0.0; lags.len()],
            head: vec![0.0; lags.len()],
            tail: vec![0.0; lags.len()],
        };

        for step in 0..=n_steps {
            if step > 0 {
                step_in_place(model, &keys, &sites, &stream, step as u64 - 1, params.dt, amp, &old, &mut new)?;
                std::mem::swap(&mut old, &mut new);
                cfg.values_mut().copy_from_slice(&old);
            }
            let v = f.evaluate(&cfg);
            ring[step % cap] = v;
            stats.sum_f += v;
            for (li, &lag) in lags.iter().enumerate() {
                if step >= lag {
                    let past = ring[(step - lag) % cap];
                    stats.prod[li] += past * v;
                    stats.head[li] += past;
                    stats.tail[li] += v;
                }
            }
        }
        Ok(stats)
    };

    let per_traj: Vec<Result<TrajStats>> =
        (0..params.ensemble_size).into_par_iter().map(run_one).collect();
    let mut all = Vec::with_capacity(params.ensemble_size);
    for s in per_traj {
        all.push(s?);
    }

    let total_count: usize = all.iter().map(|s| s.count).sum();
    let pooled_mean = all.iter().map(|s| s.sum_f).sum::<f64>() / total_count as f64;

    let mut variance = Vec::with_capacity(lags.len());
    let mut std_error = Vec::with_capacity(lags.len());
    for (li, &lag) in lags.iter().enumerate() {
        let n_pairs = (n_steps + 1 - lag) as f64;
        let per_batch: Vec<f64> = all
            .iter()
            .map(|s| {
                (s.prod[li] - pooled_mean * (s.head[li] + s.tail[li])
                    + n_pairs * pooled_mean * pooled_mean)
                    / n_pairs
            })
            .collect();
        variance.push(crate::stats::mean(&per_batch));
        std_error.push(if per_batch.len() > 1 {
            crate::stats::standard_error(&per_batch)
        } else {
            f64::NAN
        });
    }

    Ok(DecaySeries {
        times: snapped,
        variance,
        std_error,
        metadata: SeriesMetadata {
            model_fingerprint: format!("{:016x}", model.fingerprint()),
            seed: params.seed,
            params: *params,
            acceptance_rate: starts.acceptance_rate,
            warnings: starts.warnings.clone(),
        },
    })
}

/// Monte Carlo covariance of two local observables with separated supports.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct CovarianceEstimate {
    pub covariance: f64,
    pub std_error: f64,
    /// Euclidean distance between the two supports.
    pub distance: f64,
}

pub fn estimate_covariance_distance(
    model: &ModelSpec,
    f: &LocalObservable,
    g: &LocalObservable,
    params: &SimulationParams,
) -> Result<CovarianceEstimate> {
    let region = model.region();
    for site in f.support.iter().chain(&g.support) {
        if !region.contains(*site) {
            return Err(Error::invalid(format!("support site {site} outside the region")));
        }
    }
    if f.support.iter().any(|s| g.support.contains(s)) {
        return Err(Error::OverlappingSupports);
    }
    let mut distance = f64::INFINITY;
    for a in &f.support {
        for b in &g.support {
            distance = distance.min(a.distance(b));
        }
    }

    // Stream the chain: per-batch moment accumulators instead of stored
    // samples, so ensemble_size can be large.
    params.validate()?;
    let n = params.ensemble_size;
    let batches = 16.min(n / 4).max(2);
    let mut chain = metropolis::MetropolisChain::new(model, params);
    chain.burn_in();
    let mut cfg =
        Configuration::from_values_unchecked(region.clone(), vec![0.0; region.len()]);
    let mut per_batch = Vec::with_capacity(batches);
    let mut drawn = 0usize;
    for b in 0..batches {
        let count = if b + 1 == batches { n - drawn } else { n / batches };
        let (mut sf, mut sg, mut sfg) = (0.0, 0.0, 0.0);
        for _ in 0..count {
            chain.advance();
            cfg.values_mut().copy_from_slice(chain.values());
            let fv = f.evaluate(&cfg);
            let gv = g.evaluate(&cfg);
            sf += fv;
            sg += gv;
            sfg += fv * gv;
        }
        drawn += count;
        let c = count as f64;
        per_batch.push((sfg - sf * sg / c) / (c - 1.0));
    }
    Ok(CovarianceEstimate {
        covariance: crate::stats::mean(&per_batch),
        std_error: crate::stats::standard_error(&per_batch),
        distance,
    })
}

/// Coupling gap between a small and a large volume evolved with common noise.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CouplingGap {
    /// Largest |averaged difference| over the sampled starts.
    pub gap: f64,
    /// Standard error of the averaged difference at that start.
    pub std_error: f64,
    /// Per-start averaged differences (diagnostics).
    pub per_start: Vec<f64>,
}

/// Estimates sup_sigma |P_t f (restricted) - P_t f (extended)| from below:
/// for each sampled start, both systems are evolved `replicas` times with
/// per-site common random numbers and the noise-averaged difference of f is
/// recorded; the maximum over starts is returned.
pub fn coupled_propagation_gap(
    model_small: &ModelSpec,
    model_large: &ModelSpec,
    f: &LocalObservable,
    t: f64,
    replicas: usize,
    params: &SimulationParams,
) -> Result<CouplingGap> {
    params.validate()?;
    if t < 0.0 || !t.is_finite() {
        return Err(Error::invalid("time must be nonnegative"));
    }
    if replicas == 0 {
        return Err(Error::invalid("need at least one replica"));
    }
    let small = model_small.region().clone();
    let large = model_large.region().clone();
    for site in small.sites() {
        if !large.contains(*site) {
            return Err(Error::CouplingBroken(format!(
                "small region site {site} missing from the large region"
            )));
        }
    }
    for site in &f.support {
        if !small.contains(*site) {
            return Err(Error::CouplingBroken(format!("observable site {site} outside the small region")));
        }
    }
    if model_small.potential != model_large.potential
        || model_small.interaction != model_large.interaction
    {
        return Err(Error::CouplingBroken(
            "the two systems must share potential, interaction, range and temperature".into(),
        ));
    }
    // The shared external configuration extends starts onto the large region.
    let tau = |site: Site| -> Result<f64> {
        use crate::model::boundary::BoundaryCondition::*;
        match (model_small.boundary(), model_large.boundary()) {
            (Zero, Zero) => Ok(0.0),
            (Constant { value: a }, Constant { value: b }) if a == b => Ok(*a),
            _ => Err(Error::CouplingBroken(format!(
                "coupling needs a shared zero or constant boundary (site {site})"
            ))),
        }
    };

    let n_steps = (t / params.dt).round() as u64;
    let starts = sample_equilibrium(model_small, params.ensemble_size, params)?;

    let small_keys: Vec<u64> = small.sites().iter().map(|s| site_key(*s)).collect();
    let large_keys: Vec<u64> = large.sites().iter().map(|s| site_key(*s)).collect();
    let small_sites = small.sites().to_vec();
    let large_sites = large.sites().to_vec();
    let root = NoiseStream::new(params.seed);
    let amp = (2.0 * params.dt).sqrt();

    let run_start = |i: usize| -> Result<(f64, f64)> {
        let start_small = starts.configurations[i].values().to_vec();
        let mut start_large = Vec::with_capacity(large.len());
        for site in large.sites() {
            match small.index_of(*site) {
                Some(j) => start_large.push(start_small[j]),
                None => start_large.push(tau(*site)?),
            }
        }

        let mut diffs = Vec::with_capacity(replicas);
        for m in 0..replicas {
            let stream = root.derive(TAG_COUPLING, (i as u64) << 20 | m as u64);
            let mut s_old = start_small.clone();
            let mut s_new = vec![0.0; s_old.len()];
            let mut l_old = start_large.clone();
            let mut l_new = vec![0.0; l_old.len()];
            for step in 0..n_steps {
                step_in_place(
                    model_small, &small_keys, &small_sites, &stream, step, params.dt, amp, &s_old, &mut s_new,
                )?;
                std::mem::swap(&mut s_old, &mut s_new);
                step_in_place(
                    model_large, &large_keys, &large_sites, &stream, step, params.dt, amp, &l_old, &mut l_new,
                )?;
                std::mem::swap(&mut l_old, &mut l_new);
            }
            let cfg_s = Configuration::from_values_unchecked(small.clone(), s_old.clone());
            let cfg_l = Configuration::from_values_unchecked(large.clone(), l_old.clone());
            diffs.push(f.evaluate(&cfg_s) - f.evaluate(&cfg_l));
        }
        let gap = crate::stats::mean(&diffs).abs();
        let se = if diffs.len() > 1 { crate::stats::standard_error(&diffs) } else { 0.0 };
        Ok((gap, se))
    };

    let results: Vec<Result<(f64, f64)>> =
        (0..params.ensemble_size).into_par_iter().map(run_start).collect();
    let mut per_start = Vec::with_capacity(params.ensemble_size);
    let mut best = (0.0f64, 0.0f64);
    for r in results {
        let (gap, se) = r?;
        if gap >= best.0 {
            best = (gap, se);
        }
        per_start.push(gap);
    }
    Ok(CouplingGap { gap: best.0, std_error: best.1, per_start })
}
