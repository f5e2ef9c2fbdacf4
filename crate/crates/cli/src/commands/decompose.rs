use std::path::PathBuf;

use nsregret::analysis::{regret_decompose, DecompositionRow};
use serde::Serialize;
use serde_json::json;

use super::{base_meta, budget_label, out_path, write_file, write_json};
use crate::config::ExperimentConfig;
use crate::error::CliResult;
use crate::experiment::{cells, run_cells, Cell};

#[derive(Debug, Clone, Serialize)]
pub struct DecompositionSummary {
    pub n: usize,
    pub budget: f64,
    pub seed: u64,
    pub bins: usize,
    pub t1: f64,
    pub t2: f64,
    pub t3: f64,
    pub total: f64,
    pub dynamic_regret: f64,
    pub max_t2: f64,
    pub file: PathBuf,
    #[serde(skip)]
    pub rows: Vec<DecompositionRow<f64>>,
}

/// Runs every cell and splits its regret over the oracle's key partition.
pub fn cmd_decompose(cfg: &ExperimentConfig) -> CliResult<Vec<DecompositionSummary>> {
    let grid: Vec<Cell> = cells(cfg, &cfg.horizon_grid());
    let outs = run_cells(cfg, &grid, cfg.workers)?;
    let mut summaries = Vec::with_capacity(outs.len());
    for o in &outs {
        let rows = regret_decompose(&o.trace, &o.oracle, &o.partition, &o.instance.losses, o.curvature.beta)?;
        let file = out_path(
            cfg,
            &format!("decomposition_n{}_C{}_seed{}.csv", o.cell.n, budget_label(o.cell.budget), o.cell.seed),
        );
        let mut meta = base_meta("decompose", None)?;
        meta.insert("n".into(), json!(o.cell.n));
        meta.insert("C_n".into(), json!(o.cell.budget));
        meta.insert("seed".into(), json!(o.cell.seed));
        meta.insert("dynamic_regret".into(), json!(o.row.dynamic_regret));
        write_file(&file, |w| Ok(nsregret::io::write_decomposition(w, &rows, &meta)?))?;
        let sum = |f: fn(&DecompositionRow<f64>) -> f64| rows.iter().map(f).sum::<f64>();
        let (t1, t2, t3) = (sum(|r| r.t1), sum(|r| r.t2), sum(|r| r.t3));
        summaries.push(DecompositionSummary {
            n: o.cell.n,
            budget: o.cell.budget,
            seed: o.cell.seed,
            bins: rows.len(),
            t1,
            t2,
            t3,
            total: t1 + t2 + t3,
            dynamic_regret: o.row.dynamic_regret,
            max_t2: rows.iter().map(|r| r.t2).fold(f64::NEG_INFINITY, f64::max),
            file,
            rows,
        });
    }
    write_json(&out_path(cfg, "decompose.json"), &summaries)?;
    Ok(summaries)
}
