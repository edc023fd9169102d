//! Experiment configuration: one file, one experiment, one output set.

use gdl_core::config::{ModelConfig, ObservableConfig, RateSpec};
use gdl_core::dynamics::SimulationParams;
use gdl_core::quadrature::QuadRule;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TaskKind {
    Rates,
    Envelope,
    Simulate,
    Propagation,
    Oracle,
    DecayStudy,
}

impl TaskKind {
    pub fn name(&self) -> &'static str {
        match self {
            TaskKind::Rates => "rates",
            TaskKind::Envelope => "envelope",
            TaskKind::Simulate => "simulate",
            TaskKind::Propagation => "propagation",
            TaskKind::Oracle => "oracle",
            TaskKind::DecayStudy => "decay-study",
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub task: TaskKind,
    /// Optional filename prefix for every artifact of this experiment.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out_prefix: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<ModelConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub params: Option<SimulationParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rates: Option<RatesTask>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub envelope: Option<EnvelopeTask>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub simulate: Option<SimulateTask>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub propagation: Option<PropagationTask>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub oracle: Option<OracleTask>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub decay_study: Option<DecayStudyTask>,
}

impl ExperimentConfig {
    /// The task block must match `task`; stray blocks of other tasks are
    /// rejected so a config never silently describes two experiments.
    pub fn validate_shape(&self) -> Result<(), String> {
        let blocks: [(&str, bool, TaskKind); 6] = [
            ("rates", self.rates.is_some(), TaskKind::Rates),
            ("envelope", self.envelope.is_some(), TaskKind::Envelope),
            ("simulate", self.simulate.is_some(), TaskKind::Simulate),
            ("propagation", self.propagation.is_some(), TaskKind::Propagation),
            ("oracle", self.oracle.is_some(), TaskKind::Oracle),
            ("decay_study", self.decay_study.is_some(), TaskKind::DecayStudy),
        ];
        for (name, present, kind) in blocks {
            if kind == self.task && !present {
                return Err(format!("task '{}' needs a [{name}] block", self.task.name()));
            }
            if kind != self.task && present {
                return Err(format!(
                    "config declares task '{}' but carries a [{name}] block",
                    self.task.name()
                ));
            }
        }
        let needs_model = matches!(
            self.task,
            TaskKind::Simulate | TaskKind::Oracle | TaskKind::DecayStudy
        );
        if needs_model && self.model.is_none() {
            return Err(format!("task '{}' needs a [model] block", self.task.name()));
        }
        let needs_params = matches!(self.task, TaskKind::Simulate | TaskKind::DecayStudy);
        if needs_params && self.params.is_none() {
            return Err(format!("task '{}' needs a [params] block", self.task.name()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RatesTask {
    pub s_min: f64,
    pub s_max: f64,
    pub points: usize,
    pub rate: RateSpec,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnvelopeTask {
    pub t_min: f64,
    pub t_max: f64,
    pub points: usize,
    pub envelope: EnvelopeSpec,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum EnvelopeSpec {
    RwOptimized { rate: RateSpec, var0: f64, sup_norm: f64 },
    KappaCorollary { alpha: f64, eps: f64, volume: f64, c: f64 },
    SubExpCorollary { p: f64, c: f64, volume: f64, a: f64 },
    KappaTheorem { alpha: f64, dimension: u32, eps: f64, c: f64, norm: f64 },
    SubExpTheorem { p: f64, c: f64, norm: f64 },
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateTask {
    pub observable: ObservableConfig,
    pub times: Vec<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PropagationTask {
    pub range: u32,
    pub support_radius: u32,
    pub time: f64,
    pub c: f64,
    pub c_prime: f64,
    pub c_second: f64,
    pub triple_norm: f64,
    pub dimension: u32,
    pub w_prime_norm: f64,
    pub w_second_norm: f64,
    /// Cube half sides to tabulate.
    pub l_values: Vec<u64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub points: usize,
    #[serde(default = "default_rule")]
    pub rule: QuadRule,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radius: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tail_tol: Option<f64>,
}

fn default_rule() -> QuadRule {
    QuadRule::GaussLegendre
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleTask {
    pub grid: GridConfig,
    pub check: OracleCheck,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case", deny_unknown_fields)]
pub enum OracleCheck {
    /// Deficit of a rate function over tanh(sigma_0 / scale) observables on
    /// an s grid of powers of two; optionally fits the smallest passing
    /// constant for the given shape first.
    WeakPoincare {
        rate: RateSpec,
        scales: Vec<f64>,
        /// s grid: 2^-k for k in s_exp_min..=s_exp_max.
        s_exp_min: i32,
        s_exp_max: i32,
        #[serde(default)]
        fit_constant: bool,
    },
    /// |mu_Delta(mu_Lambda(f)) - mu_Delta(f)| with Lambda = [-inner_l, inner_l]^d.
    Dlr { inner_l: i64, observable: ObservableConfig },
    /// Var vs conditional variances for the split [-L, split] u [split, L].
    QuasiFactorization { split: i64, observable: ObservableConfig },
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DecayStudyTask {
    pub observable: ObservableConfig,
    pub times: Vec<f64>,
    /// Requested fit window; shrunk from the right if the series hits the
    /// Monte Carlo noise floor.
    pub fit_window: [f64; 2],
    pub envelope: StudyEnvelope,
    /// Exponent hypothesis for the stretched fit; defaults to the envelope's
    /// p when the envelope is the stretched one.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stretched_p: Option<f64>,
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum StudyEnvelope {
    Kappa { alpha: f64, eps: f64 },
    SubExp { p: f64 },
}
