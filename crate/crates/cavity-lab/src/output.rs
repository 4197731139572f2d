//! Machine-readable outputs: CSV time series and JSON summaries.
//!
//! Every file starts with a self-describing header (title, column names,
//! units, config hash).  Floats are written with 17 significant digits so a
//! rerun on the same platform reproduces the files byte for byte and readers
//! recover the exact binary values.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use serde::Serialize;

/// Format a float with 17 significant digits (round-trips f64 exactly).
pub fn csv_float(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn csv_int(v: i64) -> String {
    format!("{v}")
}

/// CSV writer with `#`-prefixed metadata lines followed by a header row.
pub struct TableWriter {
    out: BufWriter<File>,
    columns: usize,
}

impl TableWriter {
    pub fn create(
        path: &Path,
        title: &str,
        meta: &[(&str, String)],
        columns: &[&str],
    ) -> io::Result<Self> {
        if let Some(dir) = path.parent() {
            if !dir.as_os_str().is_empty() {
                std::fs::create_dir_all(dir)?;
            }
        }
        let mut out = BufWriter::new(File::create(path)?);
        writeln!(out, "# {title}")?;
        for (key, value) in meta {
            writeln!(out, "# {key}: {value}")?;
        }
        writeln!(out, "# columns: {}", columns.join(","))?;
        writeln!(out, "{}", columns.join(","))?;
        Ok(TableWriter {
            out,
            columns: columns.len(),
        })
    }

    pub fn row(&mut self, cells: &[String]) -> io::Result<()> {
        debug_assert_eq!(cells.len(), self.columns, "row width mismatch");
        writeln!(self.out, "{}", cells.join(","))
    }

    pub fn finish(mut self) -> io::Result<()> {
        self.out.flush()
    }
}

/// Serialize a summary struct as pretty JSON (struct field order is the
/// stable key order).
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> io::Result<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            std::fs::create_dir_all(dir)?;
        }
    }
    let mut out = BufWriter::new(File::create(path)?);
    let text = serde_json::to_string_pretty(value).expect("summary serializes");
    writeln!(out, "{text}")?;
    out.flush()
}

/// Header block common to every report.
#[derive(Debug, Clone, Serialize)]
pub struct RunMeta {
    pub command: String,
    pub config_hash: String,
    /// Unit conventions of all numeric fields.
    pub units: String,
}

impl RunMeta {
    pub fn new(command: &str, config_hash: String) -> Self {
        RunMeta {
            command: command.to_string(),
            config_hash,
            units: "rates in units of J, time in 1/J, lengths in units of d, angular frequencies"
                .to_string(),
        }
    }

    pub fn csv_meta(&self) -> Vec<(&'static str, String)> {
        vec![
            ("command", self.command.clone()),
            ("config_hash", self.config_hash.clone()),
            ("units", self.units.clone()),
        ]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn float_format_round_trips_exactly() {
        for &v in &[0.1, -3.0e-17, 2.0 / 3.0, 123456.789, f64::MIN_POSITIVE] {
            let s = csv_float(v);
            let back: f64 = s.parse().unwrap();
            assert_eq!(back.to_bits(), v.to_bits(), "{s}");
        }
    }

    #[test]
    fn table_writer_emits_header_then_rows() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.csv");
        let meta = [("config_hash", "abc".to_string())];
        let mut w = TableWriter::create(&path, "test table", &meta, &["a", "b"]).unwrap();
        w.row(&[csv_float(1.0), csv_int(2)]).unwrap();
        w.finish().unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert!(lines[0].starts_with("# test table"));
        assert!(lines[1].contains("config_hash"));
        assert!(lines[2].starts_with("# columns: a,b"));
        assert_eq!(lines[3], "a,b");
        assert!(lines[4].starts_with("1."));
    }
}
