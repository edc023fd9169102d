//! `envelope`: tabulate a decay envelope over a log-spaced time grid.

use crate::artifacts::{format_float, ArtifactWriter, Csv};
use crate::config::{EnvelopeSpec, EnvelopeTask};
use crate::error::CliError;
use gdl_core::envelopes::DecayEnvelope;
use serde::Serialize;

#[derive(Serialize)]
struct EnvelopeMeta {
    shape: String,
    points: usize,
}

pub fn run(task: &EnvelopeTask, writer: &mut ArtifactWriter) -> Result<(), CliError> {
    if !(task.t_min > 0.0) || !(task.t_max > task.t_min) || task.points < 2 {
        return Err(CliError::Config("envelope grid needs 0 < t_min < t_max and at least 2 points".into()));
    }
    let (envelope, shape) = build(&task.envelope)?;
    let mut csv = Csv::new(&["t", "bound", "s_star"]);
    for t in super::log_grid(task.t_min, task.t_max, task.points) {
        let (bound, s_star) = envelope.evaluate(t);
        csv.row(vec![
            format_float(t),
            bound.map(format_float).unwrap_or_else(|| "inapplicable".into()),
            s_star.map(format_float).unwrap_or_default(),
        ]);
    }
    writer.write_csv("envelope.csv", &csv)?;
    writer.write_sidecar("envelope.csv", EnvelopeMeta { shape, points: task.points })?;
    Ok(())
}

fn build(spec: &EnvelopeSpec) -> Result<(DecayEnvelope, String), CliError> {
    let env = match spec {
        EnvelopeSpec::RwOptimized { rate, var0, sup_norm } => DecayEnvelope::RwOptimized {
            beta: rate.build().map_err(|e| CliError::Config(e.to_string()))?,
            var0: *var0,
            sup_norm: *sup_norm,
        },
        EnvelopeSpec::KappaCorollary { alpha, eps, volume, c } => DecayEnvelope::KappaCorollary {
            alpha: *alpha,
            eps: *eps,
            volume: *volume,
            c: *c,
        },
        EnvelopeSpec::SubExpCorollary { p, c, volume, a } => DecayEnvelope::SubExpCorollary {
            p: *p,
            c: *c,
            volume: *volume,
            a: *a,
        },
        EnvelopeSpec::KappaTheorem { alpha, dimension, eps, c, norm } => DecayEnvelope::KappaTheorem {
            alpha: *alpha,
            dimension: *dimension,
            eps: *eps,
            c: *c,
            norm: *norm,
        },
        EnvelopeSpec::SubExpTheorem { p, c, norm } => DecayEnvelope::SubExpTheorem {
            p: *p,
            c: *c,
            norm: *norm,
        },
    };
    let shape = match spec {
        EnvelopeSpec::RwOptimized { .. } => "rw_optimized",
        EnvelopeSpec::KappaCorollary { .. } => "kappa_corollary",
        EnvelopeSpec::SubExpCorollary { .. } => "subexp_corollary",
        EnvelopeSpec::KappaTheorem { .. } => "kappa_theorem",
        EnvelopeSpec::SubExpTheorem { .. } => "subexp_theorem",
    };
    Ok((env, shape.to_string()))
}
