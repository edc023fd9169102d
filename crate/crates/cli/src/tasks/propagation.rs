//! `propagation`: tabulate the finite-speed bound against the cube size.

use crate::artifacts::{format_float, ArtifactWriter, Csv};
use crate::config::PropagationTask;
use crate::error::CliError;
use gdl_core::propagation::PropagationInputs;
use serde::Serialize;

#[derive(Serialize)]
struct PropagationMeta {
    chain_constant: f64,
    time: f64,
}

pub fn run(task: &PropagationTask, writer: &mut ArtifactWriter) -> Result<(), CliError> {
    if task.l_values.is_empty() {
        return Err(CliError::Config("propagation needs at least one L value".into()));
    }
    let mut csv = Csv::new(&["L", "bound_headline", "bound_proof_chain"]);
    let mut chain_constant = 0.0;
    for &half_side in &task.l_values {
        let inputs = PropagationInputs {
            half_side,
            range: task.range,
            support_radius: task.support_radius,
            time: task.time,
            c: task.c,
            c_prime: task.c_prime,
            c_second: task.c_second,
            triple_norm: task.triple_norm,
            dimension: task.dimension,
            w_prime_norm: task.w_prime_norm,
            w_second_norm: task.w_second_norm,
        };
        inputs.validate().map_err(|e| CliError::Config(e.to_string()))?;
        let bound = inputs.bound()?;
        chain_constant = inputs.chain_constant();
        csv.row(vec![
            half_side.to_string(),
            format_float(bound.headline),
            format_float(bound.proof_chain),
        ]);
    }
    writer.write_csv("propagation.csv", &csv)?;
    writer.write_sidecar("propagation.csv", PropagationMeta { chain_constant, time: task.time })?;
    Ok(())
}
