//! Bounded local observables with explicit per-site derivatives.

use crate::error::{Error, Result};
use crate::model::region::{Configuration, Site};
use std::fmt;
use std::sync::Arc;

type EvalFn = dyn Fn(&Configuration) -> f64 + Send + Sync;
type PartialFn = dyn Fn(Site, &Configuration) -> f64 + Send + Sync;

/// A local function of the configuration together with its support, its
/// per-site derivatives, a sup-norm bound and the summed derivative bound
/// sum_x sup |d_x f|.
#[derive(Clone)]
pub struct LocalObservable {
    pub support: Vec<Site>,
    pub sup_norm: f64,
    pub triple_norm: f64,
    name: String,
    eval: Arc<EvalFn>,
    partial: Arc<PartialFn>,
}

impl fmt::Debug for LocalObservable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("LocalObservable")
            .field("name", &self.name)
            .field("support", &self.support)
            .field("sup_norm", &self.sup_norm)
            .field("triple_norm", &self.triple_norm)
            .finish()
    }
}

impl LocalObservable {
    pub fn new(
        name: impl Into<String>,
        support: Vec<Site>,
        sup_norm: f64,
        triple_norm: f64,
        eval: impl Fn(&Configuration) -> f64 + Send + Sync + 'static,
        partial: impl Fn(Site, &Configuration) -> f64 + Send + Sync + 'static,
    ) -> Self {
        let support_set = support.clone();
        let raw = Arc::new(partial);
        let raw2 = raw.clone();
        // Derivatives vanish off the support by construction.
        let gated = move |site: Site, cfg: &Configuration| {
            if support_set.contains(&site) {
                raw2(site, cfg)
            } else {
                0.0
            }
        };
        LocalObservable {
            name: name.into(),
            support,
            sup_norm,
            triple_norm,
            eval: Arc::new(eval),
            partial: Arc::new(gated),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn evaluate(&self, cfg: &Configuration) -> f64 {
        (self.eval)(cfg)
    }

    pub fn partial(&self, site: Site, cfg: &Configuration) -> f64 {
        (self.partial)(site, cfg)
    }

    /// Oscillation bound: after centering, Osc(f) <= 2 sup|f|.
    pub fn oscillation(&self) -> f64 {
        2.0 * self.sup_norm
    }

    /// f = tanh(sigma_x / scale): bounded by 1, derivative bounded by 1/scale.
    pub fn tanh_site(site: Site, scale: f64) -> Result<Self> {
        if !(scale > 0.0) {
            return Err(Error::invalid("tanh scale must be positive"));
        }
        Ok(Self::new(
            format!("tanh(s{site}/{scale})"),
            vec![site],
            1.0,
            1.0 / scale,
            move |cfg| (cfg.value(site).unwrap_or(f64::NAN) / scale).tanh(),
            move |_, cfg| {
                let t = (cfg.value(site).unwrap_or(f64::NAN) / scale).tanh();
                (1.0 - t * t) / scale
            },
        ))
    }

    /// f = tanh(sigma_x) * tanh(sigma_y), a two-site product.
    pub fn tanh_pair(x: Site, y: Site) -> Result<Self> {
        if x == y {
            return Err(Error::invalid("pair observable needs two distinct sites"));
        }
        Ok(Self::new(
            format!("tanh(s{x})*tanh(s{y})"),
            vec![x, y],
            1.0,
            2.0,
            move |cfg| {
                cfg.value(x).unwrap_or(f64::NAN).tanh() * cfg.value(y).unwrap_or(f64::NAN).tanh()
            },
            move |site, cfg| {
                let tx = cfg.value(x).unwrap_or(f64::NAN).tanh();
                let ty = cfg.value(y).unwrap_or(f64::NAN).tanh();
                if site == x {
                    (1.0 - tx * tx) * ty
                } else {
                    (1.0 - ty * ty) * tx
                }
            },
        ))
    }

    /// f = sigma_x clamped to [-bound, bound].
    pub fn clipped_coordinate(site: Site, bound: f64) -> Result<Self> {
        if !(bound > 0.0) {
            return Err(Error::invalid("clip bound must be positive"));
        }
        Ok(Self::new(
            format!("clip(s{site},{bound})"),
            vec![site],
            bound,
            1.0,
            move |cfg| cfg.value(site).unwrap_or(f64::NAN).clamp(-bound, bound),
            move |_, cfg| {
                let v = cfg.value(site).unwrap_or(f64::NAN);
                if v.abs() < bound {
                    1.0
                } else {
                    0.0
                }
            },
        ))
    }

    /// f = sigma_x, unbounded; for quadratic calibration runs only.
    pub fn coordinate(site: Site) -> Self {
        Self::new(
            format!("s{site}"),
            vec![site],
            f64::INFINITY,
            1.0,
            move |cfg| cfg.value(site).unwrap_or(f64::NAN),
            move |_, _| 1.0,
        )
    }

    /// Checks the declared bounds and the derivatives against finite
    /// differences on the supplied probe configurations.
    pub fn validate(&self, probes: &[Configuration]) -> Result<()> {
        let h = 1e-5;
        for cfg in probes {
            let v = self.evaluate(cfg);
            if v.abs() > self.sup_norm * (1.0 + 1e-12) {
                return Err(Error::invalid(format!(
                    "observable {} exceeds its sup norm: |{v}| > {}",
                    self.name, self.sup_norm
                )));
            }
            let mut partial_sum = 0.0;
            for &site in cfg.region().sites() {
                let p = self.partial(site, cfg);
                if !self.support.contains(&site) {
                    if p != 0.0 {
                        return Err(Error::invalid(format!(
                            "observable {} has nonzero derivative off its support at {site}",
                            self.name
                        )));
                    }
                    continue;
                }
                partial_sum += p.abs();
                let up = self.evaluate(&cfg.with_value(site, cfg.value(site)? + h)?);
                let dn = self.evaluate(&cfg.with_value(site, cfg.value(site)? - h)?);
                let fd = (up - dn) / (2.0 * h);
                if (fd - p).abs() / p.abs().max(1.0) > 1e-6 {
                    return Err(Error::invalid(format!(
                        "observable {} derivative mismatch at {site}: {p} vs fd {fd}",
                        self.name
                    )));
                }
            }
            if partial_sum > self.triple_norm * (1.0 + 1e-9) {
                return Err(Error::invalid(format!(
                    "observable {} derivative sum {partial_sum} exceeds declared bound {}",
                    self.name, self.triple_norm
                )));
            }
        }
        Ok(())
    }
}
