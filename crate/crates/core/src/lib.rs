//! Heavy-tailed lattice spin systems: Glauber dynamics, weak Poincaré rate
//! functions, decay envelopes, finite-speed-of-propagation bounds, and exact
//! small-system quadrature oracles for checking the inequalities.
//!
//! The crate is organised around the objects of the theory:
//!
//! * [`model`] — potentials, regions, boundary conditions, the energy and
//!   its gradient, local observables, and the registry of constants.
//! * [`rates`] — rate functions for weak Poincaré inequalities with the
//!   tensorisation, crude perturbation and bisection-improved perturbation
//!   transforms, plus the rectangle-splitting geometry behind the recursion.
//! * [`envelopes`] — variance-decay envelopes in time and exponent fitting.
//! * [`dynamics`] — Euler-Maruyama simulation of the spin diffusion,
//!   equilibrium sampling, variance-decay and coupling estimators.
//! * [`propagation`] — the analytic finite-speed-of-propagation calculator.
//! * [`quadrature`] — tensor-grid integration for regions of up to three
//!   sites, used as the exact oracle behind the inequality checks.
//!
//! Everything is deterministic given a seed: noise is counter-based (keyed by
//! site, step and stream), and all parallel reductions are ordered.

pub mod config;
pub mod dynamics;
pub mod envelopes;
pub mod error;
pub mod model;
pub mod propagation;
pub mod quadrature;
pub mod rates;
pub mod rng;
pub mod stats;

pub use error::{Error, Result};
pub use model::boundary::BoundaryCondition;
pub use model::constants::ConstantsRegistry;
pub use model::interaction::{InteractionKind, InteractionSpec};
pub use model::observable::LocalObservable;
pub use model::potential::{BasePotential, PotentialKind, SelfPotential};
pub use model::region::{Configuration, Region, Site};
pub use model::ModelSpec;
