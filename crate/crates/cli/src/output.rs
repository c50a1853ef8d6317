use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde_json::Value;

use crate::args::Format;
use crate::CliError;

const CONFIG_PREFIX: &str = "# config: ";

/// One output file's contents. `suffix` distinguishes sibling files when a
/// run writes several.
#[derive(Debug, Clone)]
pub struct Artifact {
    pub suffix: Option<String>,
    pub content: String,
}

/// Prefixes `csv` with the config comment line, or wraps `json` next to the
/// config object.
pub fn render(
    config: &Value,
    format: Format,
    csv: impl FnOnce() -> String,
    json: impl FnOnce() -> Value,
) -> String {
    match format {
        Format::Csv => format!("{CONFIG_PREFIX}{config}\n{}", csv()),
        Format::Json => {
            let doc = serde_json::json!({ "config": config, "result": json() });
            let mut s = serde_json::to_string_pretty(&doc).expect("json values serialize");
            s.push('\n');
            s
        }
    }
}

/// The config recorded in a rendered output.
pub fn recorded_config(content: &str) -> Result<Value, CliError> {
    let bad = |msg: String| CliError::Core(regretlab_core::Error::Data { line: Some(1), msg });
    if let Some(rest) = content.strip_prefix(CONFIG_PREFIX) {
        let line = rest.lines().next().unwrap_or_default();
        return serde_json::from_str(line).map_err(|e| bad(format!("unreadable config line: {e}")));
    }
    let doc: Value =
        serde_json::from_str(content).map_err(|e| bad(format!("not a regretlab output: {e}")))?;
    doc.get("config")
        .cloned()
        .ok_or_else(|| bad("no config object".into()))
}

fn sibling_path(out: &Path, suffix: &str) -> PathBuf {
    let stem = out.file_stem().and_then(|s| s.to_str()).unwrap_or("out");
    let name = match out.extension().and_then(|e| e.to_str()) {
        Some(ext) => format!("{stem}_{suffix}.{ext}"),
        None => format!("{stem}_{suffix}"),
    };
    out.with_file_name(name)
}

fn write_file(path: &Path, content: &str) -> Result<(), CliError> {
    fs::write(path, content).map_err(|e| CliError::Core(e.into()))
}

/// Writes artifacts to `out` (siblings get `_<suffix>` before the
/// extension) or to stdout.
pub fn emit(artifacts: &[Artifact], out: Option<&Path>) -> Result<(), CliError> {
    match out {
        Some(path) => {
            for a in artifacts {
                match (&a.suffix, artifacts.len()) {
                    (Some(s), n) if n > 1 => write_file(&sibling_path(path, s), &a.content)?,
                    _ => write_file(path, &a.content)?,
                }
            }
        }
        None => {
            let mut stdout = std::io::stdout().lock();
            for (i, a) in artifacts.iter().enumerate() {
                if i > 0 {
                    writeln!(stdout).map_err(|e| CliError::Core(e.into()))?;
                }
                stdout
                    .write_all(a.content.as_bytes())
                    .map_err(|e| CliError::Core(e.into()))?;
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sibling_names() {
        assert_eq!(
            sibling_path(Path::new("/t/out.csv"), "ts"),
            PathBuf::from("/t/out_ts.csv")
        );
        assert_eq!(
            sibling_path(Path::new("res"), "ucb"),
            PathBuf::from("res_ucb")
        );
    }

    #[test]
    fn config_round_trip() {
        let cfg = serde_json::json!({"a": 1});
        let csv = render(&cfg, Format::Csv, || "x,y\n".into(), || Value::Null);
        assert_eq!(recorded_config(&csv).unwrap(), cfg);
        let json = render(&cfg, Format::Json, String::new, || {
            serde_json::json!([1, 2])
        });
        assert_eq!(recorded_config(&json).unwrap(), cfg);
        assert!(recorded_config("m,regret\n").is_err());
    }
}
