use std::io::BufReader;
use std::path::{Path, PathBuf};

use nsregret::io::{read_instance, Instance};
use nsregret::{tv_constrained_solve, KktReport, OracleSolution};
use serde::Serialize;
use serde_json::json;

use super::{base_meta, out_path, write_file, write_json};
use crate::config::ExperimentConfig;
use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, Default)]
pub struct OracleArgs {
    pub budget: Option<f64>,
    pub bound: Option<f64>,
}

/// Residual limits at tolerance `tol`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KktLimits {
    pub stationarity: f64,
    pub subgradient: f64,
    pub comp_slack_tv: f64,
    pub comp_slack_box: f64,
}

impl KktLimits {
    pub fn new(tol: f64, lambda: f64) -> Self {
        Self {
            stationarity: tol,
            subgradient: 1e-9,
            comp_slack_tv: tol * lambda.max(1.0),
            comp_slack_box: tol,
        }
    }

    pub fn admits(&self, r: &KktReport<f64>) -> bool {
        r.stationarity_max_residual <= self.stationarity
            && r.subgradient_violation <= self.subgradient
            && r.comp_slack_tv <= self.comp_slack_tv
            && r.comp_slack_box <= self.comp_slack_box
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct KktFile {
    pub schema_version: u32,
    pub n: usize,
    pub d: usize,
    pub budget: f64,
    pub bound: f64,
    pub lambda: f64,
    pub objective: f64,
    pub tv: f64,
    pub kkt: KktReport<f64>,
    pub limits: KktLimits,
    pub pass: bool,
}

#[derive(Debug)]
pub struct OracleSummary {
    pub solution: OracleSolution<f64>,
    pub report: KktFile,
    pub solution_path: PathBuf,
    pub kkt_path: PathBuf,
}

pub(crate) fn load_instance(path: &Path) -> CliResult<Instance> {
    let file = std::fs::File::open(path).map_err(|e| CliError::Io(format!("cannot open {}: {e}", path.display())))?;
    read_instance(BufReader::new(file)).map_err(|e| match e {
        nsregret::Error::Parse { line, message } => {
            CliError::Validation(format!("{}: line {line}: {message}", path.display()))
        }
        other => other.into(),
    })
}

/// `flag`, else the instance metadata entry `key`, else `fallback`.
pub(crate) fn pick(flag: Option<f64>, inst: &Instance, key: &str, fallback: f64) -> f64 {
    flag.or_else(|| inst.meta.get(key).and_then(serde_json::Value::as_f64))
        .unwrap_or(fallback)
}

/// Solves the squared-loss oracle for the labels in `input` and writes
/// `solution.csv` and `kkt.json`. `report.pass` is false when a residual
/// exceeds its limit.
pub fn cmd_oracle(cfg: &ExperimentConfig, input: &Path, args: OracleArgs) -> CliResult<OracleSummary> {
    let inst = load_instance(input)?;
    let budget = pick(args.budget, &inst, "C_n", cfg.budgets[0]);
    let bound = pick(args.bound, &inst, "B", cfg.bound);
    if !(budget >= 0.0) || !budget.is_finite() {
        return Err(CliError::validation(format!("budget must be ≥ 0, got {budget}")));
    }
    if let Some(v) = inst.labels.iter().flatten().find(|v| v.abs() > bound) {
        return Err(CliError::validation(format!(
            "label {v} lies outside [−{bound}, {bound}]; pass a larger --bound"
        )));
    }
    let sol = tv_constrained_solve(&inst.labels, budget, bound)?;
    let limits = KktLimits::new(cfg.tol, sol.lambda);
    let report = KktFile {
        schema_version: nsregret::io::SCHEMA_VERSION,
        n: sol.len(),
        d: sol.dim(),
        budget,
        bound,
        lambda: sol.lambda,
        objective: sol.objective,
        tv: sol.tv,
        kkt: sol.kkt,
        limits,
        pass: limits.admits(&sol.kkt),
    };
    let solution_path = out_path(cfg, "solution.csv");
    let mut meta = base_meta("oracle", None)?;
    meta.insert("B".into(), json!(bound));
    meta.insert("input".into(), json!(input.display().to_string()));
    write_file(&solution_path, |w| Ok(nsregret::io::write_solution(w, &sol, &meta)?))?;
    let kkt_path = out_path(cfg, "kkt.json");
    write_json(&kkt_path, &report)?;
    Ok(OracleSummary {
        solution: sol,
        report,
        solution_path,
        kkt_path,
    })
}
