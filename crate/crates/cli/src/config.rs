//! Command-line preprocessing: `--config FILE` expansion and the flag map
//! recorded in manifests.

use std::collections::BTreeMap;
use std::fs;

/// Reads flat `key=value` lines. Blank lines and lines starting with `#`
/// are skipped; `key=true` becomes a bare switch and `key=false` is dropped.
pub fn config_file_args(text: &str) -> Result<Vec<String>, String> {
    let mut out = Vec::new();
    for (no, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| format!("config line {}: expected key=value, got {line:?}", no + 1))?;
        let key = key.trim().trim_start_matches("--");
        let value = value.trim();
        if key.is_empty() {
            return Err(format!("config line {}: empty key", no + 1));
        }
        match value {
            "true" => out.push(format!("--{key}")),
            "false" => {}
            _ => {
                out.push(format!("--{key}"));
                out.push(value.to_string());
            }
        }
    }
    Ok(out)
}

/// Removes `--config FILE` from `args` and splices the file's flags in right
/// after the subcommand, so that flags given on the command line come later
/// and take precedence.
pub fn expand_config(args: Vec<String>) -> Result<Vec<String>, String> {
    let mut rest = Vec::with_capacity(args.len());
    let mut path = None;
    let mut it = args.into_iter();
    while let Some(a) = it.next() {
        if a == "--config" {
            path = Some(it.next().ok_or("--config needs a file path")?);
        } else if let Some(p) = a.strip_prefix("--config=") {
            path = Some(p.to_string());
        } else {
            rest.push(a);
        }
    }
    let Some(path) = path else {
        return Ok(rest);
    };
    let text = fs::read_to_string(&path).map_err(|e| format!("cannot read config {path}: {e}"))?;
    let extra = config_file_args(&text)?;
    // program name, then the subcommand, then file flags, then the rest
    let split = rest.iter().skip(1).position(|a| !a.starts_with('-')).map_or(rest.len(), |p| p + 2);
    let mut merged: Vec<String> = rest[..split].to_vec();
    merged.extend(extra);
    merged.extend_from_slice(&rest[split..]);
    Ok(merged)
}

/// Flag name to effective value, later occurrences winning; switches map
/// to `"true"`.
pub fn flag_map(args: &[String]) -> BTreeMap<String, String> {
    let mut map = BTreeMap::new();
    let mut i = 0;
    while i < args.len() {
        if let Some(body) = args[i].strip_prefix("--") {
            if let Some((k, v)) = body.split_once('=') {
                map.insert(k.to_string(), v.to_string());
            } else if i + 1 < args.len() && !args[i + 1].starts_with("--") {
                map.insert(body.to_string(), args[i + 1].clone());
                i += 1;
            } else {
                map.insert(body.to_string(), "true".to_string());
            }
        }
        i += 1;
    }
    map
}

#[cfg(test)]
mod tests {
    use super::*;

    fn strings(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn config_lines_become_flags() {
        let args = config_file_args("# model\nc = 0.5\n\nsigma=atoms:1:1\ngram=true\nquiet=false\n").unwrap();
        assert_eq!(args, strings(&["--c", "0.5", "--sigma", "atoms:1:1", "--gram"]));
        assert!(config_file_args("c 0.5").is_err());
    }

    #[test]
    fn command_line_flags_follow_file_flags() {
        let dir = std::env::temp_dir().join(format!("lcmp-config-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("run.conf");
        std::fs::write(&path, "c=0.5\ntol=1e-9\n").unwrap();
        let args = strings(&["lcmp", "density", "--c", "1", "--config", path.to_str().unwrap()]);
        let merged = expand_config(args).unwrap();
        assert_eq!(merged, strings(&["lcmp", "density", "--c", "0.5", "--tol", "1e-9", "--c", "1"]));
        assert_eq!(flag_map(&merged[2..])["c"], "1");
        std::fs::remove_dir_all(dir).unwrap();
    }

    #[test]
    fn flag_map_handles_switches_and_negative_values() {
        let m = flag_map(&strings(&["--gram", "--grid", "-1:1:10", "--seed=4"]));
        assert_eq!(m["gram"], "true");
        assert_eq!(m["grid"], "-1:1:10");
        assert_eq!(m["seed"], "4");
    }
}
