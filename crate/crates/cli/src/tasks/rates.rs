//! `rates`: tabulate a composed rate function over a log-spaced s grid.

use crate::artifacts::{format_float, ArtifactWriter, Csv};
use crate::config::RatesTask;
use crate::error::CliError;
use serde::Serialize;

#[derive(Serialize)]
struct RatesMeta {
    saturated: bool,
    points: usize,
}

pub fn run(task: &RatesTask, writer: &mut ArtifactWriter) -> Result<(), CliError> {
    if !(task.s_min > 0.0) || !(task.s_max > task.s_min) || task.points < 2 {
        return Err(CliError::Config("rates grid needs 0 < s_min < s_max and at least 2 points".into()));
    }
    let beta = task.rate.build().map_err(|e| CliError::Config(e.to_string()))?;
    let mut csv = Csv::new(&["s", "beta"]);
    for s in super::log_grid(task.s_min, task.s_max, task.points) {
        csv.row(vec![format_float(s), format_float(beta.evaluate(s))]);
    }
    writer.write_csv("rates.csv", &csv)?;
    writer.write_sidecar("rates.csv", RatesMeta { saturated: beta.is_saturated(), points: task.points })?;
    Ok(())
}
