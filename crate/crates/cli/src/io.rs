//! Plain-text inputs and JSON-lines / CSV outputs.

use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::Serialize;

/// Rows of a text file with comments, blank lines and one optional header
/// line stripped. Each row comes back with its 1-based line number.
fn data_lines(path: &Path) -> Result<Vec<(usize, String)>> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(text
        .lines()
        .enumerate()
        .filter_map(|(i, line)| {
            let line = line.split('#').next().unwrap_or("").trim();
            (!line.is_empty()).then(|| (i + 1, line.to_string()))
        })
        .collect())
}

fn fields(line: &str) -> Vec<&str> {
    line.split(|c: char| c == ',' || c == ';' || c.is_whitespace())
        .filter(|s| !s.is_empty())
        .collect()
}

fn parse_row(line: &str, width: usize) -> Option<Vec<f64>> {
    let parts = fields(line);
    if parts.len() != width {
        return None;
    }
    parts.iter().map(|p| p.parse().ok()).collect()
}

/// Read `width` numeric columns per row. The first data line may be a header.
fn read_table(path: &Path, width: usize) -> Result<Vec<Vec<f64>>> {
    let mut rows = Vec::new();
    for (k, (line_no, line)) in data_lines(path)?.into_iter().enumerate() {
        match parse_row(&line, width) {
            Some(row) => rows.push(row),
            None if k == 0 && parse_row(&line, fields(&line).len()).is_none() => continue,
            None => bail!(
                "{}:{line_no}: expected {width} numeric column{}, got {line:?}",
                path.display(),
                if width == 1 { "" } else { "s" }
            ),
        }
    }
    Ok(rows)
}

/// One value per line.
pub fn read_values(path: &Path) -> Result<Vec<f64>> {
    Ok(read_table(path, 1)?.into_iter().map(|r| r[0]).collect())
}

/// Two columns `x, y` per line.
pub fn read_curve(path: &Path) -> Result<(Vec<f64>, Vec<f64>)> {
    Ok(read_table(path, 2)?.into_iter().map(|r| (r[0], r[1])).unzip())
}

/// A destination for JSON-lines records: a file, or stdout when absent.
pub struct Records {
    out: Box<dyn Write>,
}

impl Records {
    pub fn open(path: Option<&Path>) -> Result<Self> {
        let out: Box<dyn Write> = match path {
            Some(p) => {
                ensure_parent(p)?;
                Box::new(BufWriter::new(
                    File::create(p).with_context(|| format!("creating {}", p.display()))?,
                ))
            }
            None => Box::new(BufWriter::new(io::stdout())),
        };
        Ok(Self { out })
    }

    pub fn write<T: Serialize>(&mut self, record: &T) -> Result<()> {
        serde_json::to_writer(&mut self.out, record)?;
        self.out.write_all(b"\n")?;
        Ok(())
    }

    pub fn finish(mut self) -> Result<()> {
        self.out.flush()?;
        Ok(())
    }
}

fn ensure_parent(path: &Path) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    Ok(())
}

/// Write a CSV table; values use Rust's shortest round-trip formatting.
pub fn write_csv(path: &Path, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<()> {
    ensure_parent(path)?;
    let mut w = BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?);
    writeln!(w, "{}", header.join(","))?;
    for row in rows {
        writeln!(w, "{}", row.join(","))?;
    }
    w.flush()?;
    Ok(())
}

/// `<path>.manifest.json` next to an output file.
pub fn sidecar(path: &Path) -> PathBuf {
    let mut name = path.file_name().unwrap_or_default().to_os_string();
    name.push(".manifest.json");
    path.with_file_name(name)
}
