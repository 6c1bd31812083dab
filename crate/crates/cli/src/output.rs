use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{json, Map, Value};
use tempfile::NamedTempFile;

use crate::args::Format;
use crate::CliError;

/// Writes `bytes` to `path` through a temporary file in the same directory.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let io = |e: std::io::Error| CliError::Io(format!("{}: {e}", path.display()));
    let mut tmp = NamedTempFile::new_in(dir).map_err(io)?;
    tmp.write_all(bytes).map_err(io)?;
    tmp.as_file().sync_all().map_err(io)?;
    tmp.persist(path).map_err(|e| io(e.error))?;
    Ok(())
}

/// Where a command puts its report and tables.
pub struct Sink {
    pub out_dir: Option<PathBuf>,
    pub format: Format,
    /// `{command, version, config}`, repeated in every file written.
    pub header: Value,
}

impl Sink {
    pub fn new(
        out_dir: Option<PathBuf>,
        format: Format,
        command: &str,
        config: Value,
    ) -> Result<Self, CliError> {
        if let Some(dir) = &out_dir {
            std::fs::create_dir_all(dir)
                .map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
        }
        Ok(Self {
            out_dir,
            format,
            header: json!({
                "command": command,
                "version": env!("CARGO_PKG_VERSION"),
                "config": config,
            }),
        })
    }

    fn path(&self, name: &str) -> Option<PathBuf> {
        self.out_dir.as_ref().map(|d| d.join(name))
    }

    /// The command report: `<command>.json` in the output directory, or stdout.
    pub fn report<T: Serialize>(&self, passed: Option<bool>, report: &T) -> Result<(), CliError> {
        let mut doc = self.header.clone();
        doc["passed"] = json!(passed);
        doc["report"] = serde_json::to_value(report).map_err(|e| CliError::Io(e.to_string()))?;
        let text = pretty(&doc);
        match self.path(&format!(
            "{}.json",
            self.header["command"].as_str().unwrap_or("report")
        )) {
            Some(p) => write_atomic(&p, text.as_bytes()),
            None => {
                println!("{text}");
                Ok(())
            }
        }
    }

    /// A table given as CSV text; stored as `<stem>.csv` with a `.csv.json`
    /// sidecar, or as `<stem>.json` holding the header and the rows.
    /// Nothing is written without an output directory.
    pub fn table(
        &self,
        stem: &str,
        csv: &str,
        extra: Option<Value>,
    ) -> Result<Option<PathBuf>, CliError> {
        if self.out_dir.is_none() {
            return Ok(None);
        }
        let mut meta = self.header.clone();
        if let Some(Value::Object(m)) = extra {
            for (k, v) in m {
                meta[k] = v;
            }
        }
        match self.format {
            Format::Csv => {
                let p = self.path(&format!("{stem}.csv")).unwrap();
                write_atomic(&p, csv.as_bytes())?;
                let side = self.path(&format!("{stem}.csv.json")).unwrap();
                write_atomic(&side, pretty(&meta).as_bytes())?;
                Ok(Some(p))
            }
            Format::Json => {
                meta["rows"] = csv_rows(csv);
                let p = self.path(&format!("{stem}.json")).unwrap();
                write_atomic(&p, pretty(&meta).as_bytes())?;
                Ok(Some(p))
            }
        }
    }
}

fn pretty(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("json values serialize");
    s.push('\n');
    s
}

/// Rows of a headed CSV table as JSON objects; numeric cells become numbers
/// and empty cells `null`.
fn csv_rows(csv: &str) -> Value {
    let mut lines = csv.lines();
    let header: Vec<&str> = lines
        .next()
        .map(|h| h.split(',').collect())
        .unwrap_or_default();
    let rows = lines
        .map(|line| {
            let mut obj = Map::new();
            for (k, cell) in header.iter().zip(line.split(',')) {
                let v = if cell.is_empty() {
                    Value::Null
                } else if let Ok(i) = cell.parse::<i64>() {
                    json!(i)
                } else if let Ok(f) = cell.parse::<f64>() {
                    json!(f)
                } else {
                    json!(cell)
                };
                obj.insert((*k).to_owned(), v);
            }
            Value::Object(obj)
        })
        .collect();
    Value::Array(rows)
}
