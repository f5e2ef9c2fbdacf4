use std::path::PathBuf;

use nsregret::analysis::fit_scaling_exponent;
use serde::Serialize;

use super::{out_path, write_json, write_text};
use crate::config::{ExperimentConfig, Sweep};
use crate::error::{CliError, CliResult};
use crate::experiment::{cells, run_cells_with, CellOutput, ResultRow};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScalingPoint {
    /// Horizon or budget, depending on the sweep.
    pub x: f64,
    pub mean_regret: f64,
    pub seed_regrets: Vec<f64>,
    /// `mean_regret / (n^{1/3}·ln²n)` for horizon sweeps.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub normalized: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScalingReport {
    pub schema_version: u32,
    pub sweep: Sweep,
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    /// Normal-approximation 95% interval of the per-seed slopes.
    pub slope_ci: [f64; 2],
    pub seed_slopes: Vec<f64>,
    /// max/min of the normalized column (horizon sweeps only).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub normalized_max_min_ratio: Option<f64>,
    pub synthetic: bool,
    pub table: Vec<ScalingPoint>,
    #[serde(skip_serializing)]
    pub rows: Vec<ResultRow>,
}

#[derive(Debug)]
pub struct ScalingSummary {
    pub report: ScalingReport,
    pub json: PathBuf,
}

fn check_geometric(xs: &[f64], what: &str) -> CliResult<()> {
    if xs.len() < 4 {
        return Err(CliError::validation(format!(
            "scaling needs at least 4 {what} values, got {}",
            xs.len()
        )));
    }
    if xs.iter().any(|x| !(*x > 0.0)) {
        return Err(CliError::validation(format!("{what} values must be positive")));
    }
    let r = xs[1] / xs[0];
    let geometric = r > 1.0 && xs.windows(2).all(|w| ((w[1] / w[0]) / r - 1.0).abs() <= 1e-2);
    if !geometric {
        return Err(CliError::validation(format!(
            "{what} values must be increasing with a constant ratio, got {xs:?}"
        )));
    }
    Ok(())
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Sweeps the horizon (or the budget), averages regret over seeds and fits
/// the log-log slope.
pub fn cmd_scaling(cfg: &ExperimentConfig) -> CliResult<ScalingSummary> {
    cmd_scaling_with(cfg, |_| Ok(())).map(|(s, _)| s)
}

/// [`cmd_scaling`] that also maps every cell output through `inspect`
/// (nothing is inspected for synthetic sweeps).
pub fn cmd_scaling_with<R, F>(cfg: &ExperimentConfig, inspect: F) -> CliResult<(ScalingSummary, Vec<R>)>
where
    R: Send,
    F: Fn(&CellOutput) -> CliResult<R> + Sync,
{
    let (xs, horizons): (Vec<f64>, Vec<usize>) = match cfg.sweep {
        Sweep::Horizon => {
            if cfg.budgets.len() != 1 {
                return Err(CliError::validation("a horizon sweep takes exactly one budget in `budgets`"));
            }
            let h = cfg.horizon_grid();
            (h.iter().map(|n| *n as f64).collect(), h)
        }
        Sweep::Budget => {
            if !cfg.horizons.is_empty() && cfg.horizons.len() != 1 {
                return Err(CliError::validation("a budget sweep takes a single horizon; use `horizon`"));
            }
            (cfg.budgets.clone(), cfg.horizon_grid())
        }
    };
    let what = match cfg.sweep {
        Sweep::Horizon => "horizon",
        Sweep::Budget => "budget",
    };
    check_geometric(&xs, what)?;

    // per_x[i][j]: regret at x_i for seed j
    let mut inspected = Vec::new();
    let (per_x, rows, synthetic) = match cfg.synthetic_regret_exponent {
        Some(p) => {
            let per_x: Vec<Vec<f64>> = xs.iter().map(|x| vec![x.powf(p); cfg.seeds.len()]).collect();
            (per_x, Vec::new(), true)
        }
        None => {
            let grid = cells(cfg, &horizons);
            let outs = run_cells_with(cfg, &grid, cfg.workers, |o| Ok((o.row.clone(), inspect(&o)?)))?;
            let mut rows = Vec::with_capacity(outs.len());
            for (row, r) in outs {
                rows.push(row);
                inspected.push(r);
            }
            let per_x = xs
                .iter()
                .map(|x| {
                    cfg.seeds
                        .iter()
                        .map(|s| {
                            rows.iter()
                                .find(|r| {
                                    r.seed == *s
                                        && match cfg.sweep {
                                            Sweep::Horizon => r.n as f64 == *x,
                                            Sweep::Budget => r.budget == *x,
                                        }
                                })
                                .map_or(f64::NAN, |r| r.dynamic_regret)
                        })
                        .collect()
                })
                .collect();
            (per_x, rows, false)
        }
    };

    let table: Vec<ScalingPoint> = xs
        .iter()
        .zip(&per_x)
        .map(|(x, regs)| {
            let m = mean(regs);
            ScalingPoint {
                x: *x,
                mean_regret: m,
                seed_regrets: regs.clone(),
                normalized: (cfg.sweep == Sweep::Horizon).then(|| m / (x.cbrt() * x.ln().powi(2))),
            }
        })
        .collect();
    let points: Vec<(f64, f64)> = table.iter().map(|p| (p.x, p.mean_regret)).collect();
    let fit = fit_scaling_exponent(&points)?;
    let seed_slopes: Vec<f64> = (0..cfg.seeds.len())
        .filter_map(|j| {
            let pts: Vec<(f64, f64)> = xs.iter().zip(&per_x).map(|(x, r)| (*x, r[j])).collect();
            fit_scaling_exponent(&pts).ok().map(|f| f.slope)
        })
        .collect();
    let slope_ci = if seed_slopes.len() >= 2 {
        let m = mean(&seed_slopes);
        let var = seed_slopes.iter().map(|s| (s - m).powi(2)).sum::<f64>() / (seed_slopes.len() - 1) as f64;
        let half = 1.96 * (var / seed_slopes.len() as f64).sqrt();
        [m - half, m + half]
    } else {
        [fit.slope, fit.slope]
    };
    let normalized_max_min_ratio = (cfg.sweep == Sweep::Horizon).then(|| {
        let v: Vec<f64> = table.iter().filter_map(|p| p.normalized).collect();
        let max = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let min = v.iter().copied().fold(f64::INFINITY, f64::min);
        max / min
    });
    let report = ScalingReport {
        schema_version: nsregret::io::SCHEMA_VERSION,
        sweep: cfg.sweep,
        slope: fit.slope,
        intercept: fit.intercept,
        r_squared: fit.r_squared,
        slope_ci,
        seed_slopes,
        normalized_max_min_ratio,
        synthetic,
        table,
        rows,
    };

    let json = out_path(cfg, "scaling.json");
    write_json(&json, &report)?;
    if !report.rows.is_empty() {
        let outs_path = out_path(cfg, "scaling_results.csv");
        let meta = super::base_meta("scaling", Some(cfg))?;
        super::write_file(&outs_path, |w| {
            Ok(nsregret::io::write_table(
                w,
                &meta,
                &crate::experiment::RESULT_COLUMNS,
                report.rows.iter().map(ResultRow::to_record),
            )?)
        })?;
    }
    write_text(&out_path(cfg, "scaling_points.dat"), &plot_data(&report))?;
    write_text(&out_path(cfg, "scaling_plot.gp"), &plot_script(&report, what))?;
    Ok((ScalingSummary { report, json }, inspected))
}

fn plot_data(r: &ScalingReport) -> String {
    let mut s = String::from("# x mean_regret fit\n");
    for p in &r.table {
        let fit = (r.intercept + r.slope * p.x.ln()).exp();
        s.push_str(&format!("{} {} {}\n", p.x, p.mean_regret, fit));
    }
    s
}

/// A gnuplot script rendering `scaling_points.dat` on log-log axes.
fn plot_script(r: &ScalingReport, what: &str) -> String {
    format!(
        "set terminal pngcairo size 800,600\n\
         set output 'scaling.png'\n\
         set logscale xy\n\
         set xlabel '{what}'\n\
         set ylabel 'mean dynamic regret'\n\
         set key top left\n\
         plot 'scaling_points.dat' using 1:2 with linespoints title 'measured', \\\n\
         \x20    'scaling_points.dat' using 1:3 with lines title 'fit, slope {:.3}'\n",
        r.slope
    )
}
