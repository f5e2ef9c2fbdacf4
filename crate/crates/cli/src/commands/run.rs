use std::path::PathBuf;

use serde_json::json;

use super::{base_meta, budget_label, out_path, write_file};
use crate::config::ExperimentConfig;
use crate::error::CliResult;
use crate::experiment::{cells, run_cells, CellOutput, ResultRow, RESULT_COLUMNS};

#[derive(Debug)]
pub struct RunSummary {
    pub results: PathBuf,
    pub rows: Vec<ResultRow>,
    pub traces: Vec<PathBuf>,
}

pub fn write_results(path: &std::path::Path, cfg: &ExperimentConfig, command: &str, outs: &[CellOutput]) -> CliResult<()> {
    let meta = base_meta(command, Some(cfg))?;
    write_file(path, |w| {
        Ok(nsregret::io::write_table(
            w,
            &meta,
            &RESULT_COLUMNS,
            outs.iter().map(|o| o.row.to_record()),
        )?)
    })
}

/// Generate or load data, play the protocol, solve the oracle and measure
/// regret for every `(n, C, seed)` cell.
pub fn cmd_run(cfg: &ExperimentConfig) -> CliResult<RunSummary> {
    let grid = cells(cfg, &cfg.horizon_grid());
    let outs = run_cells(cfg, &grid, cfg.workers)?;
    let results = out_path(cfg, "results.csv");
    write_results(&results, cfg, "run", &outs)?;
    let mut traces = Vec::new();
    if cfg.output.traces {
        for o in &outs {
            let path = out_path(
                cfg,
                &format!("traces/trace_n{}_C{}_seed{}.csv", o.cell.n, budget_label(o.cell.budget), o.cell.seed),
            );
            let mut meta = base_meta("run", None)?;
            meta.insert("n".into(), json!(o.cell.n));
            meta.insert("C_n".into(), json!(o.cell.budget));
            meta.insert("seed".into(), json!(o.cell.seed));
            write_file(&path, |w| Ok(nsregret::io::write_trace(w, &o.trace, &meta)?))?;
            traces.push(path);
        }
    }
    Ok(RunSummary {
        results,
        rows: outs.into_iter().map(|o| o.row).collect(),
        traces,
    })
}
