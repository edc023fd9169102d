//! Finite sub-lattices of Z^d and configurations living on them.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

/// Lattices up to dimension 3 are supported; everything downstream
/// (geometry sweeps, quadrature, dynamics) stays within that range.
pub const MAX_DIM: usize = 3;

/// A lattice point. Coordinates beyond the region dimension are zero.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Site([i64; 3]);

impl Site {
    pub fn new(coords: &[i64]) -> Self {
        let mut c = [0i64; 3];
        c[..coords.len().min(3)].copy_from_slice(&coords[..coords.len().min(3)]);
        Site(c)
    }

    pub fn coords(&self) -> [i64; 3] {
        self.0
    }

    /// Squared Euclidean distance.
    pub fn dist_sq(&self, other: &Site) -> i64 {
        let mut s = 0;
        for k in 0..3 {
            let d = self.0[k] - other.0[k];
            s += d * d;
        }
        s
    }

    pub fn distance(&self, other: &Site) -> f64 {
        (self.dist_sq(other) as f64).sqrt()
    }
}

impl fmt::Display for Site {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{},{})", self.0[0], self.0[1], self.0[2])
    }
}

impl From<[i64; 3]> for Site {
    fn from(c: [i64; 3]) -> Self {
        Site(c)
    }
}

impl From<i64> for Site {
    fn from(x: i64) -> Self {
        Site([x, 0, 0])
    }
}

/// All nonzero integer offsets v with |v| <= r, restricted to `dim` axes.
pub fn neighbor_stencil(dim: usize, range: u32) -> Vec<[i64; 3]> {
    let r = range as i64;
    let mut out = Vec::new();
    let lo = |k: usize| if k < dim { -r } else { 0 };
    let hi = |k: usize| if k < dim { r } else { 0 };
    for a in lo(0)..=hi(0) {
        for b in lo(1)..=hi(1) {
            for c in lo(2)..=hi(2) {
                if (a, b, c) == (0, 0, 0) {
                    continue;
                }
                if a * a + b * b + c * c <= r * r {
                    out.push([a, b, c]);
                }
            }
        }
    }
    out
}

/// A finite set of lattice sites with a fixed iteration order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Region {
    dim: usize,
    sites: Vec<Site>,
    index: BTreeMap<Site, usize>,
}

impl Region {
    pub fn from_sites(dim: usize, sites: impl IntoIterator<Item = Site>) -> Result<Self> {
        if dim == 0 || dim > MAX_DIM {
            return Err(Error::invalid(format!("dimension must be in 1..={MAX_DIM}, got {dim}")));
        }
        let set: BTreeSet<Site> = sites.into_iter().collect();
        if set.is_empty() {
            return Err(Error::invalid("region must contain at least one site"));
        }
        for s in &set {
            for k in dim..3 {
                if s.coords()[k] != 0 {
                    return Err(Error::invalid(format!(
                        "site {s} uses coordinate axis {k} beyond dimension {dim}"
                    )));
                }
            }
        }
        let sites: Vec<Site> = set.into_iter().collect();
        let index = sites.iter().enumerate().map(|(i, s)| (*s, i)).collect();
        Ok(Region { dim, sites, index })
    }

    /// The cube [-L, L]^d, with (2L+1)^d sites.
    pub fn cube(dim: usize, half_side: i64) -> Result<Self> {
        if half_side < 0 {
            return Err(Error::invalid("cube half side must be nonnegative"));
        }
        Self::rectangle(dim, [-half_side; 3], [half_side; 3])
    }

    /// The box with inclusive corners `lo` and `hi` on the first `dim` axes.
    pub fn rectangle(dim: usize, lo: [i64; 3], hi: [i64; 3]) -> Result<Self> {
        if dim == 0 || dim > MAX_DIM {
            return Err(Error::invalid(format!("dimension must be in 1..={MAX_DIM}, got {dim}")));
        }
        for k in 0..dim {
            if lo[k] > hi[k] {
                return Err(Error::invalid("rectangle has empty side"));
            }
        }
        let mut sites = Vec::new();
        let axis = |k: usize| if k < dim { (lo[k], hi[k]) } else { (0, 0) };
        let (a0, a1) = axis(0);
        let (b0, b1) = axis(1);
        let (c0, c1) = axis(2);
        for a in a0..=a1 {
            for b in b0..=b1 {
                for c in c0..=c1 {
                    sites.push(Site([a, b, c]));
                }
            }
        }
        Self::from_sites(dim, sites)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }

    pub fn sites(&self) -> &[Site] {
        &self.sites
    }

    pub fn contains(&self, site: Site) -> bool {
        self.index.contains_key(&site)
    }

    pub fn index_of(&self, site: Site) -> Option<usize> {
        self.index.get(&site).copied()
    }

    /// Sites outside the region within Euclidean distance `range` of it.
    pub fn shell(&self, range: u32) -> Vec<Site> {
        let stencil = neighbor_stencil(self.dim, range);
        let mut out = BTreeSet::new();
        for site in &self.sites {
            let c = site.coords();
            for off in &stencil {
                let y = Site([c[0] + off[0], c[1] + off[1], c[2] + off[2]]);
                if !self.contains(y) {
                    out.insert(y);
                }
            }
        }
        out.into_iter().collect()
    }
}

/// A spin configuration: one real value per region site.
#[derive(Clone, Debug)]
pub struct Configuration {
    region: Arc<Region>,
    values: Vec<f64>,
}

impl Configuration {
    pub fn new(region: Arc<Region>, values: Vec<f64>) -> Result<Self> {
        if values.len() != region.len() {
            return Err(Error::invalid(format!(
                "configuration has {} values for a region of {} sites",
                values.len(),
                region.len()
            )));
        }
        Ok(Configuration { region, values })
    }

    pub fn constant(region: Arc<Region>, value: f64) -> Self {
        let n = region.len();
        Configuration { region, values: vec![value; n] }
    }

    pub fn region(&self) -> &Arc<Region> {
        &self.region
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn value(&self, site: Site) -> Result<f64> {
        self.region
            .index_of(site)
            .map(|i| self.values[i])
            .ok_or(Error::SiteOutsideRegion(site))
    }

    pub fn with_value(&self, site: Site, value: f64) -> Result<Self> {
        let i = self.region.index_of(site).ok_or(Error::SiteOutsideRegion(site))?;
        let mut values = self.values.clone();
        values[i] = value;
        Ok(Configuration { region: self.region.clone(), values })
    }

    pub(crate) fn from_values_unchecked(region: Arc<Region>, values: Vec<f64>) -> Self {
        Configuration { region, values }
    }

    /// Hot-loop access for the integrators; length must stay unchanged.
    pub(crate) fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }
}
