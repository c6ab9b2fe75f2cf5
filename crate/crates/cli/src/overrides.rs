//! `key.path=value` edits applied to a parsed TOML document.
//!
//! Path segments name table keys or, when numeric, array elements
//! (`ring.1.sfwm_efficiency=60`). Values are TOML literals; anything that
//! does not parse as one is taken as a bare string.

use toml::Value;

use crate::error::{RunError, RunResult};

pub fn parse(assign: &str) -> RunResult<(String, Value)> {
    let (key, raw) =
        assign.split_once('=').ok_or_else(|| RunError::Config(format!("override `{assign}` is not key=value")))?;
    let key = key.trim();
    if key.is_empty() {
        return Err(RunError::Config(format!("override `{assign}` has an empty key")));
    }
    let raw = raw.trim();
    let value = match toml::from_str::<toml::Table>(&format!("v = {raw}")) {
        Ok(mut t) => t.remove("v").expect("parsed table holds v"),
        Err(_) => Value::String(raw.to_string()),
    };
    Ok((key.to_string(), value))
}

pub fn apply(root: &mut Value, key: &str, value: Value) -> RunResult<()> {
    let parts: Vec<&str> = key.split('.').collect();
    let mut node = root;
    for (k, part) in parts.iter().enumerate() {
        let last = k + 1 == parts.len();
        node = match node {
            Value::Table(t) => {
                if last {
                    t.insert(part.to_string(), value);
                    return Ok(());
                }
                t.entry(part.to_string()).or_insert_with(|| Value::Table(toml::Table::new()))
            }
            Value::Array(a) => {
                let idx: usize = part
                    .parse()
                    .map_err(|_| RunError::Config(format!("override `{key}`: `{part}` indexes an array")))?;
                let len = a.len();
                let slot = a
                    .get_mut(idx)
                    .ok_or_else(|| RunError::Config(format!("override `{key}`: index {idx} out of range ({len})")))?;
                if last {
                    *slot = value;
                    return Ok(());
                }
                slot
            }
            _ => return Err(RunError::Config(format!("override `{key}`: `{part}` is inside a scalar"))),
        };
    }
    Ok(())
}

pub fn apply_all(root: &mut Value, assigns: &[String]) -> RunResult<()> {
    for a in assigns {
        let (k, v) = parse(a)?;
        apply(root, &k, v)?;
    }
    Ok(())
}
