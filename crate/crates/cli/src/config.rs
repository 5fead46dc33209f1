//! Run configuration persisted into every output, and JSON config files
//! that pre-fill flags.

use std::ffi::OsString;
use std::path::Path;

use serde::Serialize;
use serde_json::Value;

use crate::error::CliError;

pub const TOOL: &str = "fspec";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Serialize)]
pub struct RunConfig<P: Serialize> {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'static str,
    pub seed: u64,
    pub params: P,
}

impl<P: Serialize> RunConfig<P> {
    pub fn new(command: &'static str, seed: u64, params: P) -> Self {
        Self { tool: TOOL, version: VERSION, command, seed, params }
    }

    pub fn compact(&self) -> String {
        serde_json::to_string(self).expect("config serialises")
    }

    /// `# config: {...}` line for CSV outputs.
    pub fn csv_header(&self) -> String {
        format!("# config: {}\n", self.compact())
    }

    /// Inserts `"config"` as the first member of a JSON object text.
    pub fn embed_json(&self, object: &str) -> String {
        let body = object.trim_start().strip_prefix('{').expect("JSON object");
        let sep = if body.trim_start().starts_with('}') { "" } else { "," };
        format!("{{\n  \"config\": {}{sep}{body}", self.compact())
    }
}

const COMMANDS: &[&str] = &["gen", "spectrum", "scale", "unfold", "fit", "kde", "invert", "trap"];
const TRAP_COMMANDS: &[&str] = &["modes", "integrate", "mathieu", "scan"];

fn config_path(args: &[OsString]) -> Option<OsString> {
    let mut it = args.iter();
    while let Some(a) = it.next() {
        if a == "--config" {
            return it.next().cloned();
        }
        if let Some(rest) = a.to_str().and_then(|s| s.strip_prefix("--config=")) {
            return Some(rest.into());
        }
    }
    None
}

fn flag_tokens(map: &serde_json::Map<String, Value>) -> Result<Vec<OsString>, CliError> {
    let mut out = Vec::new();
    for (key, value) in map {
        let flag = if key.len() == 1 && key.chars().all(|c| c.is_ascii_uppercase()) {
            format!("--{key}")
        } else {
            format!("--{}", key.replace('_', "-"))
        };
        match value {
            Value::Bool(true) => out.push(flag.into()),
            Value::Bool(false) | Value::Null => {}
            Value::Array(items) => {
                let joined: Vec<String> = items.iter().map(scalar).collect::<Result<_, _>>()?;
                out.push(flag.into());
                out.push(joined.join(",").into());
            }
            other => {
                out.push(flag.into());
                out.push(scalar(other)?.into());
            }
        }
    }
    Ok(out)
}

fn scalar(v: &Value) -> Result<String, CliError> {
    match v {
        Value::String(s) => Ok(s.clone()),
        Value::Number(n) => Ok(n.to_string()),
        Value::Bool(b) => Ok(b.to_string()),
        _ => Err(CliError::Usage(format!("unsupported config value {v}"))),
    }
}

/// Splices flags from `--config FILE` directly after the subcommand name, so
/// flags given on the command line (later in argv) take precedence.
pub fn expand_config(args: Vec<OsString>) -> Result<Vec<OsString>, CliError> {
    let Some(path) = config_path(&args) else { return Ok(args) };
    let path = Path::new(&path);
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Validation(format!("cannot read config {}: {e}", path.display())))?;
    let value: Value = serde_json::from_str(&text)
        .map_err(|e| CliError::Validation(format!("config {} is not valid JSON: {e}", path.display())))?;
    let Value::Object(map) = value else {
        return Err(CliError::Validation(format!("config {} must be a JSON object", path.display())));
    };
    let tokens = flag_tokens(&map)?;
    let Some(mut at) = args.iter().position(|a| COMMANDS.iter().any(|c| a == c)) else { return Ok(args) };
    if args[at] == "trap" {
        if let Some(sub) = args[at + 1..].iter().position(|a| TRAP_COMMANDS.iter().any(|c| a == c)) {
            at += 1 + sub;
        }
    }
    let mut out = args[..=at].to_vec();
    out.extend(tokens);
    out.extend_from_slice(&args[at + 1..]);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn embeds_first() {
        let c = RunConfig::new("fit", 3, serde_json::json!({"bins": 4}));
        let s = c.embed_json("{\n  \"a\": 1\n}");
        let v: Value = serde_json::from_str(&s).unwrap();
        assert_eq!(v["config"]["seed"], 3);
        assert_eq!(v["a"], 1);
        assert!(s.starts_with("{\n  \"config\": {\"tool\":\"fspec\""));
    }

    #[test]
    fn flags_from_object() {
        let map = serde_json::json!({"bits": 40, "exact_pi": true, "T": 100, "mu_list": [4, 16], "quiet": false});
        let t = flag_tokens(map.as_object().unwrap()).unwrap();
        let t: Vec<String> = t.into_iter().map(|s| s.into_string().unwrap()).collect();
        assert_eq!(t, ["--T", "100", "--bits", "40", "--exact-pi", "--mu-list", "4,16"]);
    }
}
