//! `oracle`: run one quadrature check and emit a JSON verdict.

use crate::config::{GridConfig, OracleCheck, OracleTask};
use crate::artifacts::ArtifactWriter;
use crate::error::CliError;
use gdl_core::config::ModelConfig;
use gdl_core::quadrature::{
    check_dlr, check_quasi_factorization, check_weak_poincare, fit_weak_poincare_constant,
    tail_mass_bound, QuadratureGrid,
};
use gdl_core::{LocalObservable, ModelSpec, Region, Site};
use serde::Serialize;
use std::sync::Arc;

#[derive(Serialize)]
struct OracleVerdict {
    check: String,
    /// Worst deficit (weak Poincaré), residual (DLR) or ratio (factorisation).
    value: f64,
    pass: bool,
    detail: serde_json::Value,
    grid_points_per_axis: usize,
    grid_radius: f64,
    tail_mass_bound: f64,
}

fn build_grid(cfg: &GridConfig, model: &ModelSpec) -> Result<QuadratureGrid, CliError> {
    let grid = match (cfg.radius, cfg.tail_tol) {
        (Some(r), Some(tol)) => QuadratureGrid::new(r, cfg.points, cfg.rule, tol),
        (Some(r), None) => QuadratureGrid::new(r, cfg.points, cfg.rule, 1e-6),
        _ => {
            let auto = QuadratureGrid::for_model(model, cfg.points, cfg.rule)?;
            match cfg.tail_tol {
                Some(tol) => QuadratureGrid::new(auto.radius, cfg.points, cfg.rule, tol),
                None => Ok(auto),
            }
        }
    };
    grid.map_err(|e| CliError::Config(e.to_string()))
}

pub fn run(
    task: &OracleTask,
    model_cfg: &ModelConfig,
    writer: &mut ArtifactWriter,
) -> Result<(), CliError> {
    let model = model_cfg.build().map_err(|e| CliError::Config(e.to_string()))?;
    let grid = build_grid(&task.grid, &model)?;
    let tail = tail_mass_bound(&model, &grid);

    let verdict = match &task.check {
        OracleCheck::WeakPoincare { rate, scales, s_exp_min, s_exp_max, fit_constant } => {
            if scales.is_empty() || s_exp_min > s_exp_max {
                return Err(CliError::Config("weak_poincare needs scales and a nonempty s range".into()));
            }
            let family: Vec<LocalObservable> = scales
                .iter()
                .map(|&a| LocalObservable::tanh_site(Site::from(0), a))
                .collect::<Result<_, _>>()
                .map_err(|e| CliError::Config(e.to_string()))?;
            let s_grid: Vec<f64> = (*s_exp_min..=*s_exp_max).map(|k| 2f64.powi(-k)).collect();
            let shape = rate.build().map_err(|e| CliError::Config(e.to_string()))?;
            let (beta, fitted) = if *fit_constant {
                let c = fit_weak_poincare_constant(&model, &grid, &shape, &family, &s_grid)?;
                (gdl_core::rates::scale(shape, c)?, Some(c))
            } else {
                (shape, None)
            };
            let report = check_weak_poincare(&model, &grid, &beta, &family, &s_grid)?;
            OracleVerdict {
                check: "weak_poincare".into(),
                value: report.worst_deficit,
                pass: report.worst_deficit <= 0.0,
                detail: serde_json::json!({
                    "worst_observable": report.worst_observable,
                    "worst_s": report.worst_s,
                    "fitted_constant": fitted,
                }),
                grid_points_per_axis: grid.points_per_axis(),
                grid_radius: grid.radius,
                tail_mass_bound: tail,
            }
        }
        OracleCheck::Dlr { inner_l, observable } => {
            let inner = Arc::new(
                Region::cube(model.region().dim(), *inner_l)
                    .map_err(|e| CliError::Config(e.to_string()))?,
            );
            let f = observable.build().map_err(|e| CliError::Config(e.to_string()))?;
            let residual = check_dlr(&model, inner, &f, &grid)?;
            OracleVerdict {
                check: "dlr".into(),
                value: residual,
                pass: residual <= 1e-6,
                detail: serde_json::json!({ "inner_l": inner_l }),
                grid_points_per_axis: grid.points_per_axis(),
                grid_radius: grid.radius,
                tail_mass_bound: tail,
            }
        }
        OracleCheck::QuasiFactorization { split, observable } => {
            if model.region().dim() != 1 {
                return Err(CliError::Config("quasi_factorization split is one-dimensional".into()));
            }
            let sites = model.region().sites();
            let (lo, hi) = (sites[0].coords()[0], sites[sites.len() - 1].coords()[0]);
            if *split <= lo || *split >= hi {
                return Err(CliError::Config(format!(
                    "split {split} must lie strictly inside [{lo}, {hi}]"
                )));
            }
            let part1 = Arc::new(
                Region::rectangle(1, [lo, 0, 0], [*split, 0, 0])
                    .map_err(|e| CliError::Config(e.to_string()))?,
            );
            let part2 = Arc::new(
                Region::rectangle(1, [*split, 0, 0], [hi, 0, 0])
                    .map_err(|e| CliError::Config(e.to_string()))?,
            );
            let f = observable.build().map_err(|e| CliError::Config(e.to_string()))?;
            let qf = check_quasi_factorization(&model, part1, part2, &f, &grid)?;
            OracleVerdict {
                check: "quasi_factorization".into(),
                value: qf.ratio,
                pass: qf.ratio <= 1.5,
                detail: serde_json::json!({ "lhs": qf.lhs, "rhs": qf.rhs, "split": split }),
                grid_points_per_axis: grid.points_per_axis(),
                grid_radius: grid.radius,
                tail_mass_bound: tail,
            }
        }
    };

    writer.write_json("oracle.json", &verdict)?;
    writer.write_sidecar("oracle.json", serde_json::json!({ "check": verdict.check }))?;
    Ok(())
}
