use std::io::Write;
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;
use serde_json::Value;

use crate::args::Format;
use crate::{CliError, CliResult};

/// The only field allowed to differ between runs with the same configuration.
pub const TIMESTAMP_FIELD: &str = "generated_at_unix";

#[derive(Serialize)]
pub struct Report<'a, C: Serialize, R: Serialize> {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'static str,
    pub config: &'a C,
    pub generated_at_unix: u64,
    pub result: &'a R,
}

pub(crate) fn render<C: Serialize, R: Serialize>(
    command: &'static str,
    format: Format,
    config: &C,
    result: &R,
) -> CliResult<String> {
    let report = Report {
        tool: "twoprover",
        version: env!("CARGO_PKG_VERSION"),
        command,
        config,
        generated_at_unix: SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0),
        result,
    };
    match format {
        Format::Json => Ok(serde_json::to_string_pretty(&report)? + "\n"),
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(["key", "value"])?;
            for (k, v) in flatten(&serde_json::to_value(&report)?) {
                w.write_record([k, v])?;
            }
            let bytes =
                w.into_inner().map_err(|e| CliError::Io { path: "csv buffer".into(), source: e.into_error() })?;
            Ok(String::from_utf8(bytes).expect("csv of utf-8 input is utf-8"))
        }
    }
}

/// Leaves of a JSON value as `(path, value)` pairs, paths like `result.per_step[2].accepted`.
pub fn flatten(v: &Value) -> Vec<(String, String)> {
    fn walk(v: &Value, path: String, out: &mut Vec<(String, String)>) {
        match v {
            Value::Object(m) => {
                for (k, x) in m {
                    walk(x, if path.is_empty() { k.clone() } else { format!("{path}.{k}") }, out);
                }
            }
            Value::Array(a) => {
                for (i, x) in a.iter().enumerate() {
                    walk(x, format!("{path}[{i}]"), out);
                }
            }
            Value::String(s) => out.push((path, s.clone())),
            Value::Null => out.push((path, String::new())),
            other => out.push((path, other.to_string())),
        }
    }
    let mut out = Vec::new();
    walk(v, String::new(), &mut out);
    out
}

/// Writes to a temporary file next to `path`, then renames it into place.
pub(crate) fn write_atomic(path: &Path, bytes: &[u8]) -> CliResult<()> {
    let io = |source| CliError::Io { path: path.display().to_string(), source };
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io)?;
    tmp.write_all(bytes).map_err(io)?;
    tmp.as_file().sync_all().map_err(io)?;
    tmp.persist(path).map_err(|e| io(e.error))?;
    Ok(())
}

/// Writes rows with a header through the CSV writer, atomically.
pub(crate) fn write_csv<S: Serialize>(path: &Path, rows: &[S]) -> CliResult<()> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)?;
    }
    let bytes =
        w.into_inner().map_err(|e| CliError::Io { path: path.display().to_string(), source: e.into_error() })?;
    write_atomic(path, &bytes)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flatten_paths() {
        let v = serde_json::json!({"a": {"b": [1, {"c": "x,y"}]}, "d": null, "e": true});
        let flat = flatten(&v);
        assert_eq!(
            flat,
            vec![
                ("a.b[0]".to_string(), "1".to_string()),
                ("a.b[1].c".to_string(), "x,y".to_string()),
                ("d".to_string(), String::new()),
                ("e".to_string(), "true".to_string()),
            ]
        );
    }

    #[test]
    fn csv_quotes_commas() {
        let text = render("t", Format::Csv, &serde_json::json!({"s": "a,\"b\""}), &1).unwrap();
        assert!(text.starts_with("key,value\n"));
        assert!(text.contains("config.s,\"a,\"\"b\"\"\"\n"));
    }

    #[test]
    fn atomic_write_replaces_file() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("r.json");
        write_atomic(&p, b"one").unwrap();
        write_atomic(&p, b"two").unwrap();
        assert_eq!(std::fs::read_to_string(&p).unwrap(), "two");
        assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 1);
    }
}
