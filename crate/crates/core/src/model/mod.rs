//! The lattice model: self potential + pair interaction on a finite region
//! with a frozen boundary condition.
//!
//! The energy of a configuration sigma on the region Lambda is
//!
//! ```text
//! H(sigma) = sum_{x in Lambda} [ V(sigma_x)
//!            + (1/T) sum_{y != x, d(x,y) <= r} W(sigma_x - sigma_y) ]
//! ```
//!
//! where sigma_y reads the boundary condition when y falls outside Lambda.
//! Each ordered pair with outer index in Lambda contributes once, and the
//! self term y = x is excluded (it only shifts the measure by a constant).

pub mod boundary;
pub mod constants;
pub mod interaction;
pub mod observable;
pub mod potential;
pub mod region;

use crate::error::{Error, Result};
use boundary::BoundaryCondition;
use interaction::InteractionSpec;
use potential::SelfPotential;
use region::{neighbor_stencil, Configuration, Region, Site};
use std::collections::BTreeSet;
use std::sync::Arc;

/// Per-site neighbourhood split into in-region indices and frozen values.
///
/// Interior pairs appear under both orderings of the energy's double sum,
/// while true boundary pairs appear once (outer index inside the region
/// only). A conditional model derived from a parent therefore carries a
/// third class: frozen neighbours that lie inside the parent region, whose
/// pair terms must be kept under both orderings for the conditional to be
/// exactly the parent's conditional (the DLR property).
#[derive(Clone, Debug)]
struct SiteNeighbors {
    internal: Vec<u32>,
    /// Frozen neighbours counted once (outside every enclosing region).
    external_once: Vec<f64>,
    /// Frozen neighbours counted under both orderings (inside the parent).
    external_both: Vec<f64>,
}

/// A fully specified finite-volume model.
#[derive(Clone, Debug)]
pub struct ModelSpec {
    pub potential: SelfPotential,
    pub interaction: InteractionSpec,
    region: Arc<Region>,
    boundary: BoundaryCondition,
    shell: BTreeSet<Site>,
    neighbors: Vec<SiteNeighbors>,
}

impl ModelSpec {
    pub fn new(
        potential: SelfPotential,
        interaction: InteractionSpec,
        region: Arc<Region>,
        boundary: BoundaryCondition,
    ) -> Result<Self> {
        potential.validate()?;
        interaction.validate()?;
        Self::new_prevalidated(potential, interaction, region, boundary)
    }

    pub fn region(&self) -> &Arc<Region> {
        &self.region
    }

    pub fn boundary(&self) -> &BoundaryCondition {
        &self.boundary
    }

    /// Boundary value at a shell site; asking outside the shell is an error.
    pub fn boundary_value(&self, site: Site) -> Result<f64> {
        if !self.shell.contains(&site) {
            return Err(Error::SiteOutsideShell(site));
        }
        self.boundary.raw_value(site).ok_or(Error::BoundaryIncomplete(site))
    }

    /// Number of pair terms in the energy: one per ordered pair with outer
    /// index in the region, plus the doubled frozen terms of conditionals.
    pub fn ordered_neighbor_pairs(&self) -> usize {
        self.neighbors
            .iter()
            .map(|n| n.internal.len() + n.external_once.len() + 2 * n.external_both.len())
            .sum()
    }

    fn check_region(&self, cfg: &Configuration) -> Result<()> {
        if Arc::ptr_eq(&self.region, cfg.region()) || self.region.as_ref() == cfg.region().as_ref() {
            Ok(())
        } else {
            Err(Error::RegionMismatch)
        }
    }

    /// Total energy of a configuration.
    pub fn hamiltonian(&self, cfg: &Configuration) -> Result<f64> {
        self.check_region(cfg)?;
        let h = self.hamiltonian_unchecked(cfg.values());
        if !h.is_finite() {
            return Err(Error::NonFinite { context: "hamiltonian".into(), value: h });
        }
        Ok(h)
    }

    pub(crate) fn hamiltonian_unchecked(&self, values: &[f64]) -> f64 {
        let beta = 1.0 / self.interaction.temperature;
        let mut h = 0.0;
        for (i, nb) in self.neighbors.iter().enumerate() {
            let v = values[i];
            h += self.potential.value(v);
            let mut w = 0.0;
            for &j in &nb.internal {
                w += self.interaction.kind.value(v - values[j as usize]);
            }
            for &b in &nb.external_once {
                w += self.interaction.kind.value(v - b);
            }
            for &b in &nb.external_both {
                w += self.interaction.kind.value(v - b) + self.interaction.kind.value(b - v);
            }
            h += beta * w;
        }
        h
    }

    /// Partial derivative of the energy with respect to the spin at `site`.
    pub fn grad(&self, cfg: &Configuration, site: Site) -> Result<f64> {
        self.check_region(cfg)?;
        let i = self.region.index_of(site).ok_or(Error::SiteOutsideRegion(site))?;
        let g = self.grad_at(cfg.values(), i);
        if !g.is_finite() {
            return Err(Error::NonFinite { context: format!("grad at {site}"), value: g });
        }
        Ok(g)
    }

    /// Fast path used by the integrator; index must be valid.
    #[inline]
    pub(crate) fn grad_at(&self, values: &[f64], i: usize) -> f64 {
        let nb = &self.neighbors[i];
        let v = values[i];
        // d/dv [W(v-u) + W(u-v)] = W'(v-u) - W'(u-v); the second term exists
        // only when the partner's own pair term is part of the energy.
        let mut w = 0.0;
        for &j in &nb.internal {
            let u = values[j as usize];
            w += self.interaction.kind.derivative(v - u) - self.interaction.kind.derivative(u - v);
        }
        for &b in &nb.external_once {
            w += self.interaction.kind.derivative(v - b);
        }
        for &b in &nb.external_both {
            w += self.interaction.kind.derivative(v - b) - self.interaction.kind.derivative(b - v);
        }
        self.potential.derivative(v) + w / self.interaction.temperature
    }

    /// Energy terms involving site index `i` with its spin replaced by `value`,
    /// used for single-site Metropolis updates.
    pub(crate) fn local_energy(&self, values: &[f64], i: usize, value: f64) -> f64 {
        let nb = &self.neighbors[i];
        let beta = 1.0 / self.interaction.temperature;
        let mut w = 0.0;
        for &j in &nb.internal {
            let u = values[j as usize];
            w += self.interaction.kind.value(value - u) + self.interaction.kind.value(u - value);
        }
        for &b in &nb.external_once {
            w += self.interaction.kind.value(value - b);
        }
        for &b in &nb.external_both {
            w += self.interaction.kind.value(value - b) + self.interaction.kind.value(b - value);
        }
        self.potential.value(value) + beta * w
    }

    /// Log of the unnormalised density of the Gibbs measure, -H(sigma).
    pub fn log_density_unnormalized(&self, cfg: &Configuration) -> Result<f64> {
        Ok(-self.hamiltonian(cfg)?)
    }

    /// The conditional model on a sub-region: spins outside `inner` are
    /// frozen at the supplied values (falling back to this model's boundary
    /// outside its region). Pair terms with frozen in-region neighbours keep
    /// both orderings, so the result is exactly the conditional distribution
    /// of this model's measure given the frozen spins.
    pub fn conditional(
        &self,
        inner: Arc<Region>,
        frozen: &std::collections::BTreeMap<Site, f64>,
    ) -> Result<ModelSpec> {
        for site in inner.sites() {
            if !self.region.contains(*site) {
                return Err(Error::SiteOutsideRegion(*site));
            }
        }
        let shell = inner.shell(self.interaction.range);
        let mut values = std::collections::BTreeMap::new();
        let mut doubled = BTreeSet::new();
        for site in &shell {
            let v = match frozen.get(site) {
                Some(v) => *v,
                None => {
                    if self.region.contains(*site) {
                        return Err(Error::invalid(format!(
                            "conditional model missing a frozen value for in-region site {site}"
                        )));
                    }
                    self.boundary.raw_value(*site).ok_or(Error::BoundaryIncomplete(*site))?
                }
            };
            if self.region.contains(*site) {
                doubled.insert(*site);
            }
            values.insert(*site, v);
        }
        ModelSpec::build(
            self.potential,
            self.interaction,
            inner,
            BoundaryCondition::Explicit { values },
            &doubled,
        )
    }

    /// Constructor that trusts the potential and interaction (already
    /// validated on a parent model); boundary coverage is still checked.
    pub(crate) fn new_prevalidated(
        potential: SelfPotential,
        interaction: InteractionSpec,
        region: Arc<Region>,
        boundary: BoundaryCondition,
    ) -> Result<Self> {
        Self::build(potential, interaction, region, boundary, &BTreeSet::new())
    }

    fn build(
        potential: SelfPotential,
        interaction: InteractionSpec,
        region: Arc<Region>,
        boundary: BoundaryCondition,
        doubled: &BTreeSet<Site>,
    ) -> Result<Self> {
        let shell: BTreeSet<Site> = region.shell(interaction.range).into_iter().collect();
        for &site in &shell {
            if boundary.raw_value(site).is_none() {
                return Err(Error::BoundaryIncomplete(site));
            }
        }
        let stencil = neighbor_stencil(region.dim(), interaction.range);
        let mut neighbors = Vec::with_capacity(region.len());
        for site in region.sites() {
            let c = site.coords();
            let mut internal = Vec::new();
            let mut external_once = Vec::new();
            let mut external_both = Vec::new();
            for off in &stencil {
                let y = Site::from([c[0] + off[0], c[1] + off[1], c[2] + off[2]]);
                match region.index_of(y) {
                    Some(j) => internal.push(j as u32),
                    None => {
                        let v = boundary.raw_value(y).ok_or(Error::BoundaryIncomplete(y))?;
                        if doubled.contains(&y) {
                            external_both.push(v);
                        } else {
                            external_once.push(v);
                        }
                    }
                }
            }
            neighbors.push(SiteNeighbors { internal, external_once, external_both });
        }
        Ok(ModelSpec { potential, interaction, region, boundary, shell, neighbors })
    }

    /// Stable fingerprint of the model for artifact metadata.
    pub fn fingerprint(&self) -> u64 {
        let mut text = String::new();
        text.push_str(&format!(
            "dim={};potential={:?};base={:?};interaction={:?};r={};T={};",
            self.region.dim(),
            self.potential.kind,
            self.potential.base,
            self.interaction.kind,
            self.interaction.range,
            self.interaction.temperature,
        ));
        for s in self.region.sites() {
            text.push_str(&format!("{s};"));
        }
        for s in &self.shell {
            text.push_str(&format!("{s}={};", self.boundary.raw_value(*s).unwrap_or(f64::NAN)));
        }
        fnv64(text.as_bytes())
    }
}

/// FNV-1a, used for stable fingerprints in metadata.
pub fn fnv64(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x1_0000_01b3);
    }
    h
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::interaction::InteractionKind;
    use crate::model::potential::BasePotential;

    fn single_site_model() -> ModelSpec {
        // One site, range 1, T = 1, V = 2 log(1+|u|), W = 1/(1+u^2), zero boundary
        let region = Arc::new(Region::cube(1, 0).unwrap());
        ModelSpec::new(
            SelfPotential::kappa_concave_with_base(1.0, BasePotential::OnePlusAbs).unwrap(),
            InteractionSpec::new(InteractionKind::Lorentz, 1, 1.0).unwrap(),
            region,
            BoundaryCondition::Zero,
        )
        .unwrap()
    }

    #[test]
    fn hamiltonian_counts_both_boundary_neighbors() {
        let model = single_site_model();
        let cfg = Configuration::constant(model.region().clone(), 0.0);
        // V(0) = 0, both neighbours are boundary zeros: H = W(0) + W(0) = 2
        assert!((model.hamiltonian(&cfg).unwrap() - 2.0).abs() < 1e-15);
    }

    #[test]
    fn hamiltonian_ordered_pairs_two_sites() {
        // Lambda = {0,1}, r=1, T=2, V = u^2/2, W = cos, zero boundary, sigma = 0:
        // ordered pairs (0,1), (1,0), (0,-1), (1,2) each contribute cos 0 = 1.
        let region = Arc::new(Region::rectangle(1, [0, 0, 0], [1, 0, 0]).unwrap());
        let model = ModelSpec::new(
            SelfPotential::quadratic(),
            InteractionSpec::new(InteractionKind::Cosine, 1, 2.0).unwrap(),
            region,
            BoundaryCondition::Zero,
        )
        .unwrap();
        let cfg = Configuration::constant(model.region().clone(), 0.0);
        assert_eq!(model.ordered_neighbor_pairs(), 4);
        assert!((model.hamiltonian(&cfg).unwrap() - 2.0).abs() < 1e-15);
    }

    #[test]
    fn zero_interaction_reduces_to_potential_sum() {
        let region = Arc::new(Region::cube(1, 2).unwrap());
        let model = ModelSpec::new(
            SelfPotential::sub_exponential(0.5).unwrap(),
            InteractionSpec::new(InteractionKind::Zero, 1, 1.0).unwrap(),
            region.clone(),
            BoundaryCondition::Zero,
        )
        .unwrap();
        let values: Vec<f64> = (0..region.len()).map(|i| 0.7 * i as f64 - 1.0).collect();
        let cfg = Configuration::new(region, values.clone()).unwrap();
        let expect: f64 = values.iter().map(|&u| model.potential.value(u)).sum();
        assert!((model.hamiltonian(&cfg).unwrap() - expect).abs() < 1e-12);
    }

    #[test]
    fn gradient_reduces_to_potential_derivative_without_interaction() {
        let region = Arc::new(Region::cube(1, 1).unwrap());
        let model = ModelSpec::new(
            SelfPotential::kappa_concave(2.0).unwrap(),
            InteractionSpec::new(InteractionKind::Zero, 1, 1.0).unwrap(),
            region.clone(),
            BoundaryCondition::Zero,
        )
        .unwrap();
        let cfg = Configuration::new(region, vec![0.3, -1.2, 2.0]).unwrap();
        for &s in cfg.region().clone().sites() {
            let g = model.grad(&cfg, s).unwrap();
            assert!((g - model.potential.derivative(cfg.value(s).unwrap())).abs() < 1e-14);
        }
    }

    #[test]
    fn even_interaction_constant_configuration_gradient() {
        // W even and sigma == tau constant: all spin differences vanish and
        // W'(0) = 0 for the Lorentz kind, so grad = V'(sigma_x).
        let region = Arc::new(Region::cube(1, 1).unwrap());
        let model = ModelSpec::new(
            SelfPotential::kappa_concave(2.0).unwrap(),
            InteractionSpec::new(InteractionKind::Lorentz, 1, 1.0).unwrap(),
            region.clone(),
            BoundaryCondition::Constant { value: 0.8 },
        )
        .unwrap();
        let cfg = Configuration::constant(region, 0.8);
        let g = model.grad(&cfg, Site::from(0)).unwrap();
        assert!((g - model.potential.derivative(0.8)).abs() < 1e-14);
    }

    #[test]
    fn energy_is_additive_in_the_self_potential() {
        // Swapping the potential shifts H by the summed potential difference;
        // the interaction part is untouched. A constant shift of V therefore
        // moves the log density by exactly -c |Lambda|.
        let region = Arc::new(Region::cube(1, 2).unwrap());
        let build = |potential: SelfPotential| {
            ModelSpec::new(
                potential,
                InteractionSpec::new(InteractionKind::Lorentz, 1, 2.0).unwrap(),
                region.clone(),
                BoundaryCondition::Constant { value: 0.3 },
            )
            .unwrap()
        };
        let a = build(SelfPotential::kappa_concave(2.0).unwrap());
        let b = build(SelfPotential::sub_exponential(0.5).unwrap());
        let cfg = Configuration::new(region.clone(), vec![-1.4, 0.2, 0.9, 2.5, -0.6]).unwrap();
        let shift: f64 = cfg
            .values()
            .iter()
            .map(|&u| a.potential.value(u) - b.potential.value(u))
            .sum();
        let diff = a.hamiltonian(&cfg).unwrap() - b.hamiltonian(&cfg).unwrap();
        assert!((diff - shift).abs() < 1e-12);
    }

    #[test]
    fn log_density_is_minus_hamiltonian() {
        let model = single_site_model();
        let cfg = Configuration::constant(model.region().clone(), 0.0);
        assert_eq!(model.log_density_unnormalized(&cfg).unwrap(), -2.0);
    }

    #[test]
    fn grad_outside_region_errors() {
        let model = single_site_model();
        let cfg = Configuration::constant(model.region().clone(), 0.0);
        assert!(model.grad(&cfg, Site::from(5)).is_err());
    }

    #[test]
    fn incomplete_explicit_boundary_rejected() {
        let region = Arc::new(Region::cube(1, 0).unwrap());
        let mut values = std::collections::BTreeMap::new();
        values.insert(Site::from(1), 0.0); // missing -1
        let err = ModelSpec::new(
            SelfPotential::quadratic(),
            InteractionSpec::new(InteractionKind::Lorentz, 1, 1.0).unwrap(),
            region,
            BoundaryCondition::Explicit { values },
        );
        assert!(matches!(err, Err(Error::BoundaryIncomplete(_))));
    }

    #[test]
    fn boundary_value_outside_shell_errors() {
        let model = single_site_model();
        assert!(model.boundary_value(Site::from(1)).is_ok());
        assert!(model.boundary_value(Site::from(7)).is_err());
    }
}
