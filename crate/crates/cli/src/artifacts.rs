//! Output files: schema-tagged CSV tables, pretty JSON, atomic writes, and
//! the volatile-field stripping used by determinism checks.

use std::io::Write;
use std::path::Path;

use anyhow::{Context, Result};
use serde::Serialize;
use serde_json::Value;

pub const LANDSCAPE_SCHEMA: &str = "spnplan-landscape/1";
pub const SWEEP_SCHEMA: &str = "spnplan-sweep/1";
pub const ORACLE_GRID_SCHEMA: &str = "spnplan-oracle-grid/1";
pub const SCALING_SCHEMA: &str = "spnplan-scaling/1";
pub const PLAN_SCHEMA: &str = "spnplan-plan/1";
pub const TRAIN_REPORT_SCHEMA: &str = "spnplan-train-report/1";

/// Replaces `path` in one step, so readers never see a partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    #[cfg(unix)]
    {
        use std::os::unix::fs::PermissionsExt;
        tmp.as_file()
            .set_permissions(std::fs::Permissions::from_mode(0o644))?;
    }
    tmp.as_file().sync_all()?;
    tmp.persist(path)
        .with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_atomic(path, text.as_bytes())
}

/// Schema comment line plus CSV body.
pub fn csv_table(schema: &str, header: &[&str], rows: &[Vec<String>]) -> Result<String> {
    let mut text = format!("# schema: {schema}\n").into_bytes();
    {
        let mut w = csv::Writer::from_writer(&mut text);
        w.write_record(header)?;
        for r in rows {
            w.write_record(r)?;
        }
        w.flush()?;
    }
    Ok(String::from_utf8(text)?)
}

/// CSV records without the header, for appending to an existing table.
pub fn csv_records(rows: &[Vec<String>]) -> Result<String> {
    let mut text = Vec::new();
    {
        let mut w = csv::WriterBuilder::new()
            .has_headers(false)
            .from_writer(&mut text);
        for r in rows {
            w.write_record(r)?;
        }
        w.flush()?;
    }
    Ok(String::from_utf8(text)?)
}

/// Header and records of a table written by [`csv_table`]. Records with the
/// wrong field count (a write cut short) are dropped.
pub fn read_table(path: &Path) -> Result<(Vec<String>, Vec<Vec<String>>)> {
    let mut r = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .flexible(true)
        .from_path(path)
        .with_context(|| format!("reading {}", path.display()))?;
    let header: Vec<String> = r.headers()?.iter().map(str::to_owned).collect();
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        if rec.len() == header.len() {
            rows.push(rec.iter().map(str::to_owned).collect());
        }
    }
    Ok((header, rows))
}

pub fn num(x: f64) -> String {
    x.to_string()
}

pub fn opt<T: ToString>(x: Option<T>) -> String {
    x.map_or_else(String::new, |v| v.to_string())
}

/// Wall-clock and search-order dependent fields.
pub fn is_volatile(name: &str) -> bool {
    name.ends_with("_seconds") || name == "node_count"
}

/// Drops volatile keys at any depth.
pub fn strip_volatile_json(v: &mut Value) {
    match v {
        Value::Object(map) => {
            map.retain(|k, _| !is_volatile(k));
            map.values_mut().for_each(strip_volatile_json);
        }
        Value::Array(items) => items.iter_mut().for_each(strip_volatile_json),
        _ => {}
    }
}

/// Table text with volatile columns removed; comment lines are kept.
pub fn strip_volatile_csv(text: &str) -> Result<String> {
    let comments: String = text
        .lines()
        .take_while(|l| l.starts_with('#'))
        .map(|l| format!("{l}\n"))
        .collect();
    let mut r = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let header: Vec<String> = r.headers()?.iter().map(str::to_owned).collect();
    let keep: Vec<usize> = (0..header.len())
        .filter(|&i| !is_volatile(&header[i]))
        .collect();
    let pick = |rec: &[String]| keep.iter().map(|&i| rec[i].clone()).collect::<Vec<_>>();
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec: Vec<String> = rec?.iter().map(str::to_owned).collect();
        rows.push(pick(&rec));
    }
    let mut out = comments.into_bytes();
    {
        let mut w = csv::Writer::from_writer(&mut out);
        w.write_record(pick(&header))?;
        for row in rows {
            w.write_record(row)?;
        }
        w.flush()?;
    }
    Ok(String::from_utf8(out)?)
}

/// File contents with volatile fields removed, chosen by extension.
pub fn stable_contents(path: &Path) -> Result<String> {
    let text =
        std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    match path.extension().and_then(|e| e.to_str()) {
        Some("json") => {
            let mut v: Value = serde_json::from_str(&text)?;
            strip_volatile_json(&mut v);
            Ok(serde_json::to_string_pretty(&v)?)
        }
        Some("csv") => strip_volatile_csv(&text),
        _ => Ok(text),
    }
}
