use std::path::PathBuf;

use nsregret::datagen::gen_paper_example;
use serde_json::json;

use super::{base_meta, out_path, write_file};
use crate::config::ExperimentConfig;
use crate::error::{CliError, CliResult};
use crate::experiment::{build_instance, Cell};

/// Writes `instance.csv` (`t,k,y,w`): either the constructive example of
/// horizon `paper_example`, or one instance from the configured profile using
/// the first budget and seed (the same data `run` sees for that cell).
pub fn cmd_gen(cfg: &ExperimentConfig, paper_example: Option<usize>) -> CliResult<PathBuf> {
    let path = out_path(cfg, "instance.csv");
    let mut meta = base_meta("gen", None)?;
    let (labels, w) = match paper_example {
        Some(n) => {
            let ex = gen_paper_example::<f64>(n)?;
            meta.insert("profile".into(), json!("paper_example"));
            meta.insert("C_n".into(), json!(ex.budget));
            meta.insert("B".into(), json!(ex.bound));
            meta.insert("expected_lambda".into(), json!(ex.expected_lambda));
            meta.insert("epsilon".into(), json!(ex.epsilon));
            (ex.labels, ex.expected_u)
        }
        None => {
            let cell = Cell {
                n: cfg.horizon,
                budget: cfg.budgets[0],
                seed: cfg.seeds[0],
            };
            let inst = build_instance(cfg, &cell)?;
            let (Some(labels), Some(w)) = (inst.labels, inst.comparator) else {
                return Err(CliError::validation("gen writes squared-loss instances; set loss = \"squared\""));
            };
            let kind = cfg.profile_for(cell.n, cell.budget);
            meta.insert(
                "profile".into(),
                serde_json::to_value(kind).map_err(|e| CliError::numerical(e.to_string()))?,
            );
            meta.insert(
                "noise".into(),
                serde_json::to_value(cfg.data.noise).map_err(|e| CliError::numerical(e.to_string()))?,
            );
            meta.insert("seed".into(), json!(cell.seed));
            meta.insert("C_n".into(), json!(cell.budget));
            meta.insert("B".into(), json!(cfg.bound));
            meta.insert("realized_tv".into(), json!(w.total_variation));
            (labels, w.w)
        }
    };
    write_file(&path, |out| Ok(nsregret::io::write_instance(out, &labels, Some(&w), &meta)?))?;
    Ok(path)
}
