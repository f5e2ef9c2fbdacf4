//! Subcommand implementations. Each returns a small summary that `main`
//! prints; all artifacts go under the configured output directory.

pub mod decompose;
pub mod gen;
pub mod oracle;
pub mod partition;
pub mod run;
pub mod scaling;
pub mod verify;

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{json, Map, Value};

use crate::config::ExperimentConfig;
use crate::error::{CliError, CliResult};

pub(crate) fn ensure_dir(dir: &Path) -> CliResult<()> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("cannot create {}: {e}", dir.display())))
}

/// Creates `path` (and its parent) and hands a buffered writer to `body`.
pub(crate) fn write_file<F>(path: &Path, body: F) -> CliResult<()>
where
    F: FnOnce(&mut BufWriter<File>) -> CliResult<()>,
{
    if let Some(parent) = path.parent() {
        ensure_dir(parent)?;
    }
    let file = File::create(path).map_err(|e| CliError::Io(format!("cannot create {}: {e}", path.display())))?;
    let mut w = BufWriter::new(file);
    body(&mut w)?;
    w.flush().map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))
}

/// Pretty JSON with a trailing newline; object keys come out sorted.
pub(crate) fn write_json<S: Serialize>(path: &Path, value: &S) -> CliResult<()> {
    let value = serde_json::to_value(value).map_err(|e| CliError::numerical(e.to_string()))?;
    write_file(path, |w| {
        serde_json::to_writer_pretty(&mut *w, &value).map_err(|e| CliError::Io(e.to_string()))?;
        writeln!(w)?;
        Ok(())
    })
}

pub(crate) fn write_text(path: &Path, text: &str) -> CliResult<()> {
    write_file(path, |w| Ok(w.write_all(text.as_bytes())?))
}

pub(crate) fn out_path(cfg: &ExperimentConfig, name: &str) -> PathBuf {
    cfg.output.dir.join(name)
}

/// Metadata shared by every CSV header.
pub(crate) fn base_meta(command: &str, cfg: Option<&ExperimentConfig>) -> CliResult<Map<String, Value>> {
    let mut meta = Map::new();
    meta.insert("command".into(), json!(command));
    if let Some(cfg) = cfg {
        let mut c = serde_json::to_value(cfg).map_err(|e| CliError::numerical(e.to_string()))?;
        // the output location does not describe the experiment
        if let Some(obj) = c.as_object_mut() {
            obj.remove("output");
            obj.remove("workers");
        }
        meta.insert("config".into(), c);
    }
    Ok(meta)
}

/// `0.5` → `0.5`, `2` → `2`: short, filename-safe budget labels.
pub(crate) fn budget_label(c: f64) -> String {
    format!("{c}").replace('-', "m")
}
