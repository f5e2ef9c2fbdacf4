use std::io::BufReader;
use std::path::{Path, PathBuf};

use nsregret::analysis::{build_partition, Partition};
use nsregret::io::{read_table, Table};
use nsregret::tv_constrained_solve;
use serde_json::json;

use super::oracle::{load_instance, pick, OracleArgs};
use super::{base_meta, out_path, write_file};
use crate::config::ExperimentConfig;
use crate::error::{CliError, CliResult};

#[derive(Debug)]
pub struct PartitionSummary {
    pub partition: Partition<f64>,
    pub path: PathBuf,
}

fn field<T: std::str::FromStr>(row: &(u64, Vec<String>), col: usize, name: &str) -> CliResult<T> {
    let raw = row.1.get(col).map(String::as_str).unwrap_or("");
    raw.trim()
        .parse()
        .map_err(|_| CliError::Validation(format!("line {}: cannot parse `{raw}` as {name}", row.0)))
}

/// Reads the `t,k,u` rows of a solution file into an `n × d` matrix.
fn read_solution(table: &Table) -> CliResult<Vec<Vec<f64>>> {
    let missing = |c: &str| CliError::Validation(format!("solution file lacks column `{c}`"));
    let ti = table.header.iter().position(|h| h == "t").ok_or_else(|| missing("t"))?;
    let ki = table.header.iter().position(|h| h == "k").ok_or_else(|| missing("k"))?;
    let ui = table.header.iter().position(|h| h == "u").ok_or_else(|| missing("u"))?;
    let mut cells = Vec::with_capacity(table.rows.len());
    for row in &table.rows {
        let t: usize = field(row, ti, "t")?;
        let k: usize = field(row, ki, "k")?;
        let u: f64 = field(row, ui, "u")?;
        if t == 0 || k == 0 {
            return Err(CliError::Validation(format!("line {}: t and k are 1-based", row.0)));
        }
        cells.push((t, k, u));
    }
    let n = cells.iter().map(|c| c.0).max().unwrap_or(0);
    let d = cells.iter().map(|c| c.1).max().unwrap_or(0);
    if n == 0 || cells.len() != n * d {
        return Err(CliError::validation(format!(
            "solution file must hold a full n × d grid, got {} rows for n = {n}, d = {d}",
            cells.len()
        )));
    }
    let mut u = vec![vec![0.0; d]; n];
    for (t, k, v) in cells {
        u[t - 1][k - 1] = v;
    }
    Ok(u)
}

/// Key partition of an oracle sequence. `input` is either a solution file
/// (`t,k,u`, used as is) or an instance (`t,k,y`, solved first).
pub fn cmd_partition(cfg: &ExperimentConfig, input: &Path, args: OracleArgs) -> CliResult<PartitionSummary> {
    let file = std::fs::File::open(input).map_err(|e| CliError::Io(format!("cannot open {}: {e}", input.display())))?;
    let table = read_table(BufReader::new(file))?;
    let (u, bound) = if table.header.iter().any(|h| h == "u") {
        let bound = args
            .bound
            .or_else(|| table.meta.get("B").and_then(serde_json::Value::as_f64))
            .unwrap_or(cfg.bound);
        (read_solution(&table)?, bound)
    } else {
        let inst = load_instance(input)?;
        let budget = pick(args.budget, &inst, "C_n", cfg.budgets[0]);
        let bound = pick(args.bound, &inst, "B", cfg.bound);
        (tv_constrained_solve(&inst.labels, budget, bound)?.u, bound)
    };
    let partition = build_partition(&u, bound);
    let path = out_path(cfg, "partition.csv");
    let mut meta = base_meta("partition", None)?;
    meta.insert("B".into(), json!(bound));
    meta.insert("n".into(), json!(u.len()));
    meta.insert("M".into(), json!(partition.bins.len()));
    write_file(&path, |w| Ok(nsregret::io::write_partition(w, &partition, &meta)?))?;
    Ok(PartitionSummary { partition, path })
}
