//! Boundary conditions: frozen spin values on the shell around a region.

use crate::model::region::Site;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BoundaryCondition {
    #[default]
    Zero,
    Constant { value: f64 },
    /// Explicit values; must cover the full width-r shell of the region.
    Explicit { values: BTreeMap<Site, f64> },
}

impl BoundaryCondition {
    /// Raw lookup; shell membership is enforced by the model, which knows
    /// the region and the interaction range.
    pub fn raw_value(&self, site: Site) -> Option<f64> {
        match self {
            BoundaryCondition::Zero => Some(0.0),
            BoundaryCondition::Constant { value } => Some(*value),
            BoundaryCondition::Explicit { values } => values.get(&site).copied(),
        }
    }
}
