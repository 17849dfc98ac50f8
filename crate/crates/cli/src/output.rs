//! CSV/JSON/SVG emission and atomic file writes.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{json, Value};

use crate::svg::{self, Figure};

pub const SCHEMA: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
    Svg,
}

/// Shortest representation that parses back to the same f64.
pub fn num(v: f64) -> String {
    if v.is_nan() {
        "NaN".into()
    } else if v.is_infinite() {
        if v > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{v:?}")
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Long-format CSV of a figure: one row per plotted value.
pub fn figure_csv(fig: &Figure) -> String {
    let mut out = String::new();
    match fig {
        Figure::Lines { panels, .. } => {
            out.push_str("panel,series,x,y\n");
            for p in panels {
                for s in &p.series {
                    for (x, y) in s.x.iter().zip(&s.y) {
                        out.push_str(&format!("{},{},{},{}\n", csv_field(&p.title), csv_field(&s.name), num(*x), num(*y)));
                    }
                }
            }
        }
        Figure::Grid { panels, .. } => {
            out.push_str("panel,x,y,value\n");
            for p in panels {
                for (iy, y) in p.y.iter().enumerate() {
                    for (ix, x) in p.x.iter().enumerate() {
                        out.push_str(&format!("{},{},{},{}\n", csv_field(&p.title), num(*x), num(*y), num(p.z[iy][ix])));
                    }
                }
            }
        }
        Figure::Ternary { panels, .. } => {
            out.push_str("panel,w1,w2,w3,value\n");
            for p in panels {
                for (w, v) in p.points.iter().zip(&p.values) {
                    out.push_str(&format!(
                        "{},{},{},{},{}\n",
                        csv_field(&p.title),
                        num(w[0]),
                        num(w[1]),
                        num(w[2]),
                        num(*v)
                    ));
                }
            }
        }
    }
    out
}

/// Top-level JSON document shared by every command.
pub fn document(command: &str, seed: u64, params: Value, result: Value) -> Value {
    json!({
        "schema": SCHEMA,
        "command": command,
        "version": env!("CARGO_PKG_VERSION"),
        "seed": seed,
        "params": params,
        "result": result,
    })
}

fn write_atomic(path: &Path, contents: &str) -> std::io::Result<()> {
    let tmp = path.with_extension(format!(
        "{}.tmp{}",
        path.extension().and_then(|e| e.to_str()).unwrap_or(""),
        std::process::id()
    ));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(contents.as_bytes())?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)
}

/// Writes the requested formats under `dir` as `<stem>.{csv,json,svg}`.
/// `csv` replaces the long-format figure table when given.
pub fn emit(
    dir: &Path,
    stem: &str,
    formats: &[Format],
    doc: &Value,
    fig: Option<&Figure>,
    csv: Option<&str>,
) -> std::io::Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    for f in formats {
        let (ext, body) = match f {
            Format::Json => ("json", serde_json::to_string_pretty(doc).expect("serializable") + "\n"),
            Format::Csv => match (csv, fig) {
                (Some(c), _) => ("csv", c.to_string()),
                (None, Some(fig)) => ("csv", figure_csv(fig)),
                (None, None) => continue,
            },
            Format::Svg => match fig {
                Some(fig) => ("svg", svg::render(fig)),
                None => continue,
            },
        };
        let path = dir.join(format!("{stem}.{ext}"));
        write_atomic(&path, &body)?;
        written.push(path);
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbers_round_trip() {
        for v in [0.1, 1.0 / 3.0, 1e-300, -2.5e17, 123456789.123456789, f64::MIN_POSITIVE] {
            assert_eq!(num(v).parse::<f64>().unwrap(), v);
        }
        assert_eq!(num(f64::NAN), "NaN");
    }

    #[test]
    fn quoting() {
        assert_eq!(csv_field("a,b"), "\"a,b\"");
        assert_eq!(csv_field("plain"), "plain");
    }
}
