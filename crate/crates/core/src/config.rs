//! Declarative model and observable descriptions for config files.

use crate::error::{Error, Result};
use crate::model::boundary::BoundaryCondition;
use crate::model::interaction::InteractionSpec;
use crate::model::observable::LocalObservable;
use crate::model::potential::{BasePotential, SelfPotential};
use crate::model::region::{Region, Site};
use crate::model::ModelSpec;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::sync::Arc;

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub dimension: usize,
    /// Cube half side: the region is [-L, L]^dimension.
    pub l: i64,
    /// Interaction range.
    pub r: u32,
    /// Temperature.
    pub t: f64,
    pub potential: PotentialConfig,
    pub interaction: InteractionConfig,
    #[serde(default)]
    pub boundary: BoundaryConfig,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PotentialConfig {
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub base: Option<String>,
    /// Core width for base = "smooth_abs_wide".
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub base_width: Option<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InteractionConfig {
    pub name: String,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundaryConfig {
    #[serde(default)]
    pub kind: BoundaryKindConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub value: Option<f64>,
    /// Explicit shell values: site coordinates and matching values.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sites: Option<Vec<Vec<i64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub values: Option<Vec<f64>>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryKindConfig {
    #[default]
    Zero,
    Constant,
    Explicit,
}

impl ModelConfig {
    pub fn build(&self) -> Result<ModelSpec> {
        let base = match self.potential.base.as_deref() {
            None | Some("smooth_abs") => BasePotential::SmoothAbs,
            Some("one_plus_abs") => BasePotential::OnePlusAbs,
            Some("smooth_abs_wide") => BasePotential::SmoothAbsWide {
                width: self
                    .potential
                    .base_width
                    .ok_or_else(|| Error::invalid("smooth_abs_wide base needs 'base_width'"))?,
            },
            Some(other) => return Err(Error::invalid(format!("unknown potential base '{other}'"))),
        };
        if self.potential.base_width.is_some()
            && self.potential.base.as_deref() != Some("smooth_abs_wide")
        {
            return Err(Error::invalid("'base_width' only applies to the smooth_abs_wide base"));
        }
        let potential = match self.potential.kind.as_str() {
            "kappa_concave" => {
                let alpha = self
                    .potential
                    .alpha
                    .ok_or_else(|| Error::invalid("kappa_concave potential needs 'alpha'"))?;
                if self.potential.p.is_some() {
                    return Err(Error::invalid("kappa_concave potential does not take 'p'"));
                }
                SelfPotential::kappa_concave_with_base(alpha, base)?
            }
            "sub_exponential" => {
                let p = self
                    .potential
                    .p
                    .ok_or_else(|| Error::invalid("sub_exponential potential needs 'p'"))?;
                if self.potential.alpha.is_some() {
                    return Err(Error::invalid("sub_exponential potential does not take 'alpha'"));
                }
                SelfPotential::sub_exponential_with_base(p, base)?
            }
            "quadratic" => SelfPotential::quadratic(),
            other => return Err(Error::invalid(format!("unknown potential kind '{other}'"))),
        };

        let interaction = InteractionSpec::by_name(&self.interaction.name, self.r, self.t)?;
        let region = Arc::new(Region::cube(self.dimension, self.l)?);

        let boundary = match self.boundary.kind {
            BoundaryKindConfig::Zero => BoundaryCondition::Zero,
            BoundaryKindConfig::Constant => BoundaryCondition::Constant {
                value: self
                    .boundary
                    .value
                    .ok_or_else(|| Error::invalid("constant boundary needs 'value'"))?,
            },
            BoundaryKindConfig::Explicit => {
                let sites = self
                    .boundary
                    .sites
                    .as_ref()
                    .ok_or_else(|| Error::invalid("explicit boundary needs 'sites'"))?;
                let values = self
                    .boundary
                    .values
                    .as_ref()
                    .ok_or_else(|| Error::invalid("explicit boundary needs 'values'"))?;
                if sites.len() != values.len() {
                    return Err(Error::invalid("boundary sites and values differ in length"));
                }
                let mut map = BTreeMap::new();
                for (coords, &v) in sites.iter().zip(values) {
                    map.insert(Site::new(coords), v);
                }
                BoundaryCondition::Explicit { values: map }
            }
        };

        ModelSpec::new(potential, interaction, region, boundary)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObservableConfig {
    pub kind: String,
    #[serde(default)]
    pub site: Vec<i64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub second_site: Option<Vec<i64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scale: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bound: Option<f64>,
}

impl ObservableConfig {
    pub fn build(&self) -> Result<LocalObservable> {
        let site = Site::new(&self.site);
        match self.kind.as_str() {
            "tanh" => LocalObservable::tanh_site(site, self.scale.unwrap_or(1.0)),
            "tanh_pair" => {
                let other = self
                    .second_site
                    .as_ref()
                    .ok_or_else(|| Error::invalid("tanh_pair needs 'second_site'"))?;
                LocalObservable::tanh_pair(site, Site::new(other))
            }
            "clipped_coordinate" => {
                LocalObservable::clipped_coordinate(site, self.bound.unwrap_or(10.0))
            }
            "coordinate" => Ok(LocalObservable::coordinate(site)),
            other => Err(Error::invalid(format!("unknown observable kind '{other}'"))),
        }
    }
}

/// Declarative rate-function composition.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case", deny_unknown_fields)]
pub enum RateSpec {
    Constant { value: f64 },
    Kappa { alpha: f64, c: f64 },
    SubExponential { p: f64, c: f64 },
    Tensorize { n: u64, base: Box<RateSpec> },
    PerturbCrude { volume: u64, c: f64, base: Box<RateSpec> },
    PerturbBisection {
        l: u64,
        dimension: u32,
        eps: f64,
        #[serde(default)]
        registry: crate::model::constants::ConstantsRegistry,
        base: Box<RateSpec>,
    },
}

impl RateSpec {
    pub fn build(&self) -> Result<crate::rates::RateFunction> {
        use crate::rates::*;
        match self {
            RateSpec::Constant { value } => {
                if !(*value >= 0.0) {
                    return Err(Error::invalid("constant rate must be nonnegative"));
                }
                Ok(RateFunction::Constant(*value))
            }
            RateSpec::Kappa { alpha, c } => rate_kappa_concave(*alpha, *c),
            RateSpec::SubExponential { p, c } => rate_sub_exponential(*p, *c),
            RateSpec::Tensorize { n, base } => tensorize(base.build()?, *n),
            RateSpec::PerturbCrude { volume, c, base } => perturb_crude(base.build()?, *volume, *c),
            RateSpec::PerturbBisection { l, dimension, eps, registry, base } => {
                perturb_bisection(base.build()?, *l, *dimension, *eps, registry)
            }
        }
    }
}
