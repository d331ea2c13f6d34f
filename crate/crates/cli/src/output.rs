use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;

use anyhow::{Context, Result};
use serde::Serialize;
use serde_json::Value;

use crate::config::Format;

pub const VERSION: &str = concat!("q2lab ", env!("CARGO_PKG_VERSION"));

/// Top-level manifest written by every simulation command.
#[derive(Debug, Serialize)]
pub struct Manifest<R: Serialize, A: Serialize> {
    pub version: &'static str,
    pub config: Value,
    pub seeds: Vec<u64>,
    pub results: Vec<R>,
    pub aggregates: A,
    pub status: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timestamps: Option<Timestamps>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Timestamps {
    pub started_unix_ms: u128,
    pub finished_unix_ms: u128,
}

pub fn now_ms() -> u128 {
    std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_millis())
        .unwrap_or(0)
}

/// Config echo: the command name followed by its result-affecting arguments.
pub fn config_value<T: Serialize>(command: &str, args: &T) -> Result<Value> {
    let mut map = serde_json::Map::new();
    map.insert("command".into(), Value::from(command));
    if let Value::Object(fields) = serde_json::to_value(args)? {
        map.extend(fields);
    }
    Ok(Value::Object(map))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

/// Writes a table as CSV (with a leading `# config: ...` line) or as JSON
/// (`{"config": ..., "rows": [...]}`), returning the path written.
pub fn write_table<T: Serialize>(
    dir: &Path,
    stem: &str,
    format: Format,
    config: &Value,
    rows: &[T],
) -> Result<std::path::PathBuf> {
    match format {
        Format::Csv => {
            let path = dir.join(format!("{stem}.csv"));
            let file = File::create(&path).with_context(|| format!("creating {}", path.display()))?;
            let mut buf = BufWriter::new(file);
            writeln!(buf, "# config: {}", serde_json::to_string(config)?)?;
            let mut w = csv::Writer::from_writer(buf);
            for row in rows {
                w.serialize(row)?;
            }
            w.flush()?;
            Ok(path)
        }
        Format::Json => {
            let path = dir.join(format!("{stem}.json"));
            write_json(&path, &serde_json::json!({ "config": config, "rows": rows }))?;
            Ok(path)
        }
    }
}

/// Sample mean and standard error of the mean.
pub fn mean_se(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, f64::NAN);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Ordinary least-squares slope of `y` on `x`.
pub fn ls_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stats_helpers() {
        let (m, se) = mean_se(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(m, 2.5);
        assert!((se - (5.0f64 / 3.0 / 4.0).sqrt()).abs() < 1e-15);
        assert!(mean_se(&[]).0.is_nan());
        assert!(mean_se(&[1.0]).1.is_nan());
        assert!((ls_slope(&[1.0, 2.0, 3.0], &[2.0, 4.5, 7.0]) - 2.5).abs() < 1e-15);
    }
}
