//! `simulate`: estimate the variance-decay series of an observable.

use crate::artifacts::{format_float, ArtifactWriter, Csv};
use crate::config::SimulateTask;
use crate::error::CliError;
use gdl_core::config::ModelConfig;
use gdl_core::dynamics::{estimate_variance_decay, DecaySeries, SeriesMetadata, SimulationParams};
use serde::Serialize;

#[derive(Serialize)]
struct SimulateMeta {
    series: SeriesMetadata,
}

pub fn run(
    task: &SimulateTask,
    model_cfg: &ModelConfig,
    params: &SimulationParams,
    writer: &mut ArtifactWriter,
) -> Result<DecaySeries, CliError> {
    let model = model_cfg.build().map_err(|e| CliError::Config(e.to_string()))?;
    let observable = task.observable.build().map_err(|e| CliError::Config(e.to_string()))?;
    let series = estimate_variance_decay(&model, &observable, &task.times, params)?;
    write_series(&series, writer)?;
    Ok(series)
}

pub fn write_series(series: &DecaySeries, writer: &mut ArtifactWriter) -> Result<(), CliError> {
    let mut csv = Csv::new(&["t", "var", "se"]);
    for i in 0..series.times.len() {
        csv.row(vec![
            format_float(series.times[i]),
            format_float(series.variance[i]),
            format_float(series.std_error[i]),
        ]);
    }
    writer.write_csv("series.csv", &csv)?;
    writer.write_sidecar("series.csv", SimulateMeta { series: series.metadata.clone() })?;
    Ok(())
}
