use std::fs::{File, OpenOptions};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context};
use hallrate::corpus::{self, Record};
use serde::Serialize;

use crate::args::Cli;

/// Loads a JSONL file; errors carry the path and line.
pub fn load<T: Record>(path: &Path) -> anyhow::Result<Vec<T>> {
    corpus::load_jsonl(path).with_context(|| format!("{}", path.display()))
}

fn sidecar_path(output: &Path) -> PathBuf {
    let mut name = output.as_os_str().to_owned();
    name.push(".config.json");
    PathBuf::from(name)
}

#[derive(Serialize)]
struct Sidecar<'a> {
    tool: &'static str,
    version: &'static str,
    #[serde(flatten)]
    config: &'a Cli,
}

/// Writes `<output>.config.json` with the full invocation.
pub fn write_sidecar(cli: &Cli, output: &Path) -> anyhow::Result<()> {
    let side = Sidecar {
        tool: "hallrate",
        version: env!("CARGO_PKG_VERSION"),
        config: cli,
    };
    let path = sidecar_path(output);
    let mut text = serde_json::to_string_pretty(&side)?;
    text.push('\n');
    std::fs::write(&path, text).with_context(|| format!("writing {}", path.display()))
}

pub fn emit_text(cli: &Cli, output: &Path, text: &str) -> anyhow::Result<()> {
    std::fs::write(output, text).with_context(|| format!("writing {}", output.display()))?;
    write_sidecar(cli, output)
}

pub fn emit_json<T: Serialize>(cli: &Cli, output: &Path, value: &T) -> anyhow::Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    emit_text(cli, output, &text)
}

pub fn emit_jsonl<T: Serialize>(cli: &Cli, output: &Path, records: &[T]) -> anyhow::Result<usize> {
    let n = corpus::store_jsonl(records, output)?;
    write_sidecar(cli, output)?;
    Ok(n)
}

pub fn append_jsonl<T: Serialize>(cli: &Cli, output: &Path, records: &[T]) -> anyhow::Result<usize> {
    let file = OpenOptions::new()
        .create(true)
        .append(true)
        .open(output)
        .with_context(|| format!("opening {}", output.display()))?;
    let n = corpus::write_jsonl(records, BufWriter::new(file))
        .with_context(|| format!("writing {}", output.display()))?;
    write_sidecar(cli, output)?;
    Ok(n)
}

/// A CSV file held as header plus string rows.
pub struct Table {
    path: PathBuf,
    headers: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Table {
    pub fn read(path: &Path) -> anyhow::Result<Self> {
        let file = File::open(path).with_context(|| format!("{}", path.display()))?;
        let mut reader = csv::Reader::from_reader(file);
        let headers = reader
            .headers()
            .with_context(|| format!("{}: header row", path.display()))?
            .iter()
            .map(str::to_string)
            .collect();
        let mut rows = Vec::new();
        for (i, rec) in reader.records().enumerate() {
            let rec = rec.with_context(|| format!("{}: line {}", path.display(), i + 2))?;
            rows.push(rec.iter().map(str::to_string).collect());
        }
        Ok(Self {
            path: path.to_path_buf(),
            headers,
            rows,
        })
    }

    fn index(&self, column: &str) -> anyhow::Result<usize> {
        self.headers.iter().position(|h| h == column).ok_or_else(|| {
            anyhow!(
                "{}: no column `{column}` (have {})",
                self.path.display(),
                self.headers.join(", ")
            )
        })
    }

    pub fn strings(&self, column: &str) -> anyhow::Result<Vec<String>> {
        let i = self.index(column)?;
        Ok(self.rows.iter().map(|r| r[i].clone()).collect())
    }

    pub fn numbers(&self, column: &str) -> anyhow::Result<Vec<f64>> {
        let i = self.index(column)?;
        self.rows
            .iter()
            .enumerate()
            .map(|(line, r)| {
                r[i].trim().parse::<f64>().map_err(|e| {
                    anyhow!("{}: line {}: column `{column}`: `{}`: {e}", self.path.display(), line + 2, r[i])
                })
            })
            .collect()
    }
}

pub fn flush_stdout(text: &str) {
    let mut out = std::io::stdout().lock();
    let _ = out.write_all(text.as_bytes());
    let _ = out.flush();
}
