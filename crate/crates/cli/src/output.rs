use std::fmt;
use std::io::Write;
use std::path::Path;

use serde_json::{json, Map, Value};

use bilayer_ep::format::round_sig;
use bilayer_ep::ModelParams;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug)]
pub enum CliError {
    /// A check ran and failed (exit 1).
    CheckFailed(String),
    /// Flags or parameters are unusable (exit 2).
    BadInput(String),
    /// A numerical procedure did not converge (exit 3).
    Numerical(String),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::CheckFailed(m) => write!(f, "check failed: {m}"),
            CliError::BadInput(m) | CliError::Numerical(m) => f.write_str(m),
        }
    }
}

impl From<bilayer_ep::Error> for CliError {
    fn from(e: bilayer_ep::Error) -> Self {
        if e.is_numerical() {
            CliError::Numerical(e.to_string())
        } else {
            CliError::BadInput(e.to_string())
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::BadInput(format!("i/o: {e}"))
    }
}

/// Rounds every float in `v` to 12 significant digits.
fn normalize(v: &mut Value) {
    match v {
        Value::Number(n) => {
            if let Some(x) = n.as_f64().filter(|_| !n.is_i64() && !n.is_u64()) {
                *v = serde_json::Number::from_f64(round_sig(x)).map_or(Value::Null, Value::Number);
            }
        }
        Value::Array(items) => items.iter_mut().for_each(normalize),
        Value::Object(map) => map.values_mut().for_each(normalize),
        _ => {}
    }
}

pub fn to_value<T: serde::Serialize>(x: &T) -> Value {
    serde_json::to_value(x).expect("serializable")
}

/// Pretty JSON document with `schemaVersion` first-level field.
pub fn json_document(command: &str, mut body: Map<String, Value>) -> String {
    body.insert("schemaVersion".into(), json!(SCHEMA_VERSION));
    body.insert("command".into(), json!(command));
    let mut v = Value::Object(body);
    normalize(&mut v);
    let mut s = serde_json::to_string_pretty(&v).expect("serializable");
    s.push('\n');
    s
}

pub fn params_json(p: &ModelParams) -> Value {
    json!({"J": p.intra, "T": p.inter, "t": p.diag, "gamma": p.gamma, "tol": p.tol_ep})
}

/// Writes to `out` through a temporary file in the same directory, so a
/// failed run never leaves a partial file; standard output otherwise.
pub fn emit(text: &str, out: Option<&Path>) -> Result<(), CliError> {
    match out {
        None => {
            let mut stdout = std::io::stdout().lock();
            match stdout.write_all(text.as_bytes()).and_then(|_| stdout.flush()) {
                // reader went away, e.g. `| head`
                Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => {}
                r => r?,
            }
        }
        Some(path) => {
            let dir = match path.parent() {
                Some(d) if !d.as_os_str().is_empty() => d,
                _ => Path::new("."),
            };
            let mut builder = tempfile::Builder::new();
            builder.prefix(".bilayer-ep");
            // tempfile defaults to owner-only access
            #[cfg(unix)]
            {
                use std::os::unix::fs::PermissionsExt;
                builder.permissions(std::fs::Permissions::from_mode(0o644));
            }
            let mut tmp = builder.tempfile_in(dir)?;
            tmp.write_all(text.as_bytes())?;
            tmp.flush()?;
            tmp.persist(path).map_err(|e| CliError::from(e.error))?;
        }
    }
    Ok(())
}
