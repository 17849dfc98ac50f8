//! `--config FILE` support: a JSON object whose keys are long flag names.
//!
//! Keys missing from the command line are appended as `--key=value`, so explicit
//! flags always win. An optional `"command"` key ("hr pickands") supplies the
//! subcommand when none is given.

use std::ffi::OsString;

use serde_json::Value;

fn config_path(args: &[OsString]) -> Option<String> {
    let mut it = args.iter().skip(1);
    while let Some(a) = it.next() {
        let a = a.to_string_lossy();
        if a == "--config" {
            return it.next().map(|p| p.to_string_lossy().into_owned());
        }
        if let Some(p) = a.strip_prefix("--config=") {
            return Some(p.to_string());
        }
    }
    None
}

fn has_flag(args: &[OsString], flag: &str) -> bool {
    args.iter().any(|a| {
        let a = a.to_string_lossy();
        a == flag || a.starts_with(&format!("{flag}="))
    })
}

fn scalar(v: &Value) -> Result<String, String> {
    match v {
        Value::String(s) => Ok(s.clone()),
        Value::Number(n) => Ok(n.to_string()),
        Value::Bool(b) => Ok(b.to_string()),
        other => Err(format!("unsupported config value {other}")),
    }
}

/// Merges the config file named on the command line into `args`.
pub fn merge(args: Vec<OsString>) -> Result<Vec<OsString>, String> {
    let Some(path) = config_path(&args) else {
        return Ok(args);
    };
    let text = std::fs::read_to_string(&path).map_err(|e| format!("cannot read config {path}: {e}"))?;
    let value: Value = serde_json::from_str(&text).map_err(|e| format!("config {path} is not valid JSON: {e}"))?;
    let Value::Object(map) = value else {
        return Err(format!("config {path} must be a JSON object"));
    };
    let mut out = args;
    if !has_command(&out) {
        if let Some(cmd) = map.get("command") {
            let cmd = cmd.as_str().ok_or("config key \"command\" must be a string")?;
            let words: Vec<OsString> = cmd.split_whitespace().map(OsString::from).collect();
            out.splice(1..1, words);
        }
    }
    for (key, v) in &map {
        if key == "command" {
            continue;
        }
        let flag = format!("--{}", key.replace('_', "-"));
        if has_flag(&out, &flag) {
            continue;
        }
        match v {
            Value::Bool(true) => out.push(flag.into()),
            Value::Bool(false) | Value::Null => {}
            Value::Array(items) => {
                let parts = items.iter().map(scalar).collect::<Result<Vec<_>, _>>()?;
                out.push(format!("{flag}={}", parts.join(",")).into());
            }
            other => out.push(format!("{flag}={}", scalar(other)?).into()),
        }
    }
    Ok(out)
}

/// True when the first argument other than `--config FILE` is a subcommand word.
fn has_command(args: &[OsString]) -> bool {
    let mut it = args.iter().skip(1);
    while let Some(a) = it.next() {
        if a == "--config" {
            it.next();
        } else if !a.to_string_lossy().starts_with("--config=") {
            return !a.to_string_lossy().starts_with('-');
        }
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn os(v: &[&str]) -> Vec<OsString> {
        v.iter().map(OsString::from).collect()
    }

    #[test]
    fn flags_override_file() {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        write!(f, r#"{{"command": "esn cdf", "tau": -1.5, "alpha": [1, -2], "x": 0, "verbose": false}}"#).unwrap();
        let p = f.path().to_str().unwrap();
        let got = merge(os(&["esnx", "--config", p, "--tau", "2"])).unwrap();
        let got: Vec<String> = got.iter().map(|a| a.to_string_lossy().into_owned()).collect();
        assert_eq!(&got[..3], &["esnx", "esn", "cdf"]);
        assert!(got.contains(&"--alpha=1,-2".to_string()));
        assert!(got.contains(&"--x=0".to_string()));
        assert!(!got.iter().any(|a| a.starts_with("--tau=")));
        assert!(!got.iter().any(|a| a.starts_with("--verbose")));
    }

    #[test]
    fn explicit_command_wins() {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        write!(f, r#"{{"command": "esn cdf"}}"#).unwrap();
        let p = f.path().to_str().unwrap();
        let got = merge(os(&["esnx", "mvn", "cdf", "--config", p])).unwrap();
        assert_eq!(got, os(&["esnx", "mvn", "cdf", "--config", p]));
    }
}
