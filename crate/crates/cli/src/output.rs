//! Columnar tables, their CSV/JSON encodings, and the content-addressed run
//! directory that doubles as the cache.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::Format;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
const MARKER: &str = "COMPLETE";
const RECORD: &str = "record.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Column {
    pub name: String,
    pub unit: String,
    /// Operation that produced the column.
    pub provenance: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    pub columns: Vec<Column>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new(name: &str) -> Self {
        Self { name: name.into(), columns: Vec::new(), rows: Vec::new() }
    }

    pub fn col(mut self, name: &str, unit: &str, provenance: &str) -> Self {
        self.columns.push(Column { name: name.into(), unit: unit.into(), provenance: provenance.into() });
        self
    }

    pub fn push(&mut self, row: Vec<f64>) {
        assert_eq!(row.len(), self.columns.len(), "row width of table `{}`", self.name);
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::new();
        let header: Vec<String> = self.columns.iter().map(|c| format!("{} [{}]", c.name, c.unit)).collect();
        s.push_str(&header.join(","));
        s.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(|v| format!("{v:.16e}")).collect();
            s.push_str(&cells.join(","));
            s.push('\n');
        }
        s
    }

    /// Shortest round-trip decimal for each value; non-finite values become `null`.
    pub fn to_json(&self) -> String {
        let mut s = String::from("{\n");
        s.push_str(&format!("  \"table\": {},\n", serde_json::to_string(&self.name).unwrap()));
        s.push_str(&format!("  \"columns\": {},\n", serde_json::to_string(&self.columns).unwrap()));
        s.push_str("  \"rows\": [");
        for (i, row) in self.rows.iter().enumerate() {
            s.push_str(if i == 0 { "\n    " } else { ",\n    " });
            s.push_str(&serde_json::to_string(row).unwrap());
        }
        s.push_str(if self.rows.is_empty() { "]\n}\n" } else { "\n  ]\n}\n" });
        s
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Csv => self.to_csv(),
            Format::Json => self.to_json(),
        }
    }
}

/// `sha256(tool, version, subcommand, canonical config)` in hex.
pub fn config_hash(subcommand: &str, canonical: &str) -> String {
    let mut h = Sha256::new();
    for part in ["goldilocks", VERSION, subcommand, canonical] {
        h.update(part.as_bytes());
        h.update([0u8]);
    }
    hex::encode(h.finalize())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableRecord {
    pub name: String,
    pub file: String,
    pub rows: usize,
    pub columns: Vec<Column>,
}

/// Metadata sidecar written next to the tables.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRecord {
    pub tool: String,
    pub version: String,
    pub subcommand: String,
    pub config_hash: String,
    pub config: serde_json::Value,
    pub timestamp_unix: u64,
    pub complete: bool,
    pub tables: Vec<TableRecord>,
}

/// Writes `contents` to a sibling temp file and renames it into place.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let name = path.file_name().context("output path has no file name")?.to_string_lossy();
    let tmp = path.with_file_name(format!(".{name}.tmp"));
    let mut f = fs::File::create(&tmp).with_context(|| format!("creating {}", tmp.display()))?;
    f.write_all(contents)?;
    f.sync_all()?;
    drop(f);
    fs::rename(&tmp, path).with_context(|| format!("renaming into {}", path.display()))?;
    Ok(())
}

pub enum Opened {
    Cached { dir: PathBuf, record: ResultRecord },
    Fresh(RunWriter),
}

/// Opens `<out>/<subcommand>-<hash prefix>/`. A directory is served from
/// cache only if its marker and record agree on both hash and version. The
/// hashed config is `params` plus the output format.
pub fn open_run(out: &Path, subcommand: &str, params: serde_json::Value, format: Format, use_cache: bool) -> Result<Opened> {
    let config = serde_json::json!({ "format": format, "params": params });
    let canonical = serde_json::to_string(&config)?;
    let hash = config_hash(subcommand, &canonical);
    let dir = out.join(format!("{subcommand}-{}", &hash[..16]));
    if use_cache {
        if let Some(record) = cached_record(&dir, &hash) {
            return Ok(Opened::Cached { dir, record });
        }
    }
    fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    match fs::remove_file(dir.join(MARKER)) {
        Err(e) if e.kind() != std::io::ErrorKind::NotFound => return Err(e.into()),
        _ => {}
    }
    let record = ResultRecord {
        tool: "goldilocks".into(),
        version: VERSION.into(),
        subcommand: subcommand.into(),
        config_hash: hash,
        config,
        timestamp_unix: SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs()),
        complete: false,
        tables: Vec::new(),
    };
    Ok(Opened::Fresh(RunWriter { dir, format, record }))
}

fn marker_text(hash: &str) -> String {
    format!("{hash} {VERSION}\n")
}

fn cached_record(dir: &Path, hash: &str) -> Option<ResultRecord> {
    let marker = fs::read_to_string(dir.join(MARKER)).ok()?;
    if marker != marker_text(hash) {
        return None;
    }
    let record: ResultRecord = serde_json::from_str(&fs::read_to_string(dir.join(RECORD)).ok()?).ok()?;
    let files_present = record.tables.iter().all(|t| dir.join(&t.file).is_file());
    (record.complete && record.config_hash == hash && record.version == VERSION && files_present).then_some(record)
}

/// The single collector through which all files of a run are written.
#[derive(Debug)]
pub struct RunWriter {
    dir: PathBuf,
    format: Format,
    record: ResultRecord,
}

impl RunWriter {
    pub fn dir(&self) -> &Path {
        &self.dir
    }

    /// Writes one table and refreshes the (still incomplete) record.
    pub fn emit(&mut self, table: Table) -> Result<()> {
        let file = format!("{}.{}", table.name, self.format.extension());
        write_atomic(&self.dir.join(&file), table.render(self.format).as_bytes())?;
        self.record.tables.retain(|t| t.name != table.name);
        self.record.tables.push(TableRecord { name: table.name, file, rows: table.rows.len(), columns: table.columns });
        self.write_record()
    }

    fn write_record(&self) -> Result<()> {
        let mut text = serde_json::to_string_pretty(&self.record)?;
        text.push('\n');
        write_atomic(&self.dir.join(RECORD), text.as_bytes())
    }

    /// Marks the run complete; only now can it be served from cache.
    pub fn finish(mut self) -> Result<ResultRecord> {
        self.record.complete = true;
        self.write_record()?;
        write_atomic(&self.dir.join(MARKER), marker_text(&self.record.config_hash).as_bytes())?;
        Ok(self.record)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Table {
        let mut t = Table::new("demo").col("x", "1", "input").col("y", "bits", "f(x)");
        t.push(vec![0.1, f64::NAN]);
        t.push(vec![1.0 / 3.0, -2.5e-300]);
        t
    }

    #[test]
    fn csv_keeps_seventeen_digits() {
        let csv = sample().to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "x [1],y [bits]");
        assert_eq!(lines[1], "1.0000000000000001e-1,NaN");
        let back: f64 = lines[2].split(',').next().unwrap().parse().unwrap();
        assert_eq!(back, 1.0 / 3.0);
    }

    #[test]
    fn json_round_trips() {
        let v: serde_json::Value = serde_json::from_str(&sample().to_json()).unwrap();
        assert_eq!(v["columns"][1]["unit"], "bits");
        assert!(v["rows"][0][1].is_null());
        assert_eq!(v["rows"][1][0].as_f64().unwrap(), 1.0 / 3.0);
        assert_eq!(v["rows"][1][1].as_f64().unwrap(), -2.5e-300);
        let empty: serde_json::Value = serde_json::from_str(&Table::new("e").col("x", "1", "").to_json()).unwrap();
        assert_eq!(empty["rows"].as_array().unwrap().len(), 0);
    }

    #[test]
    fn hash_depends_on_every_part() {
        let a = config_hash("spectrum", "{\"n\":4}");
        assert_eq!(a, config_hash("spectrum", "{\"n\":4}"));
        assert_ne!(a, config_hash("qfi", "{\"n\":4}"));
        assert_ne!(a, config_hash("spectrum", "{\"n\":5}"));
        assert_eq!(a.len(), 64);
    }

    #[test]
    fn incomplete_runs_are_not_served() {
        let tmp = tempfile::tempdir().unwrap();
        let tmp = tmp.path();
        let config = serde_json::json!({"n": 4});
        let Opened::Fresh(mut w) = open_run(tmp, "demo", config.clone(), Format::Csv, true).unwrap() else {
            panic!("empty directory served from cache");
        };
        w.emit(sample()).unwrap();
        drop(w);
        let Opened::Fresh(mut w) = open_run(tmp, "demo", config.clone(), Format::Csv, true).unwrap() else {
            panic!("run without marker served from cache");
        };
        w.emit(sample()).unwrap();
        w.finish().unwrap();
        assert!(matches!(open_run(tmp, "demo", config.clone(), Format::Csv, true).unwrap(), Opened::Cached { .. }));
        assert!(matches!(open_run(tmp, "demo", config.clone(), Format::Csv, false).unwrap(), Opened::Fresh(_)));
    }

    #[test]
    fn other_versions_are_not_served() {
        let tmp = tempfile::tempdir().unwrap();
        let config = serde_json::json!({"n": 4});
        let Opened::Fresh(w) = open_run(tmp.path(), "demo", config.clone(), Format::Csv, true).unwrap() else {
            panic!("empty directory served from cache");
        };
        let dir = w.dir().to_path_buf();
        let record = w.finish().unwrap();
        fs::write(dir.join(MARKER), format!("{} 0.0.0-other\n", record.config_hash)).unwrap();
        assert!(matches!(open_run(tmp.path(), "demo", config, Format::Csv, true).unwrap(), Opened::Fresh(_)));
    }
}
