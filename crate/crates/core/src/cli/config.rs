//! Line-oriented `key = value` config files.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::calculus::{Domain, SamplePlan};
use crate::expr::{parse, Expr, Mode};

const KEYS: [&str; 12] = [
    "f", "b", "phi", "domain", "mode", "samples", "tol", "seed", "omega1", "omega2", "omega3",
    "omega4",
];

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("line {line}: expected `key = value`")]
    Malformed { line: usize },
    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: duplicate key `{key}`")]
    DuplicateKey { line: usize, key: String },
    #[error("`{key}`: {message}")]
    Value { key: String, message: String },
    #[error("{0}")]
    Input(String),
}

fn value_error(key: &str, message: impl ToString) -> ConfigError {
    ConfigError::Value {
        key: key.to_string(),
        message: message.to_string(),
    }
}

/// What the web data is given by.
#[derive(Clone, Debug, PartialEq)]
pub enum Input {
    Web { f: Expr, b: Expr },
    Phi(Expr),
    /// Four forms `a dx + c dy`, used by `check-forms` only.
    Forms([(Expr, Expr); 4]),
}

/// A parsed config file. Command-line flags override `plan` afterwards.
#[derive(Clone, Debug, PartialEq)]
pub struct FileConfig {
    pub input: Input,
    pub domain: Domain,
    pub plan: SamplePlan,
}

/// Raw `key -> value` pairs; `#` starts a comment.
fn entries(text: &str) -> Result<BTreeMap<String, String>, ConfigError> {
    let mut map = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split_once('#').map_or(raw, |(c, _)| c).trim();
        if content.is_empty() {
            continue;
        }
        let (key, value) = content
            .split_once('=')
            .ok_or(ConfigError::Malformed { line })?;
        let (key, value) = (key.trim(), value.trim());
        if key.is_empty() || value.is_empty() {
            return Err(ConfigError::Malformed { line });
        }
        if !KEYS.contains(&key) {
            return Err(ConfigError::UnknownKey {
                line,
                key: key.into(),
            });
        }
        if map.insert(key.to_string(), value.to_string()).is_some() {
            return Err(ConfigError::DuplicateKey {
                line,
                key: key.into(),
            });
        }
    }
    Ok(map)
}

fn expr(key: &str, text: &str) -> Result<Expr, ConfigError> {
    parse(text).map_err(|e| value_error(key, e))
}

fn form(key: &str, text: &str) -> Result<(Expr, Expr), ConfigError> {
    let (a, c) = text
        .split_once(',')
        .ok_or_else(|| value_error(key, "expected `a, c` for the form a dx + c dy"))?;
    Ok((expr(key, a)?, expr(key, c)?))
}

pub fn parse_domain(text: &str) -> Result<Domain, ConfigError> {
    text.parse().map_err(|e| value_error("domain", e))
}

pub fn parse_mode(text: &str) -> Result<Mode, ConfigError> {
    text.parse().map_err(|_| value_error("mode", "expected `exact` or `float`"))
}

pub fn parse_config(text: &str) -> Result<FileConfig, ConfigError> {
    let map = entries(text)?;
    let get = |k: &str| map.get(k).map(String::as_str);
    let domain = parse_domain(get("domain").ok_or_else(|| ConfigError::Input("missing `domain`".into()))?)?;
    let mut plan = SamplePlan::default();
    if let Some(v) = get("mode") {
        plan.mode = parse_mode(v)?;
    }
    if let Some(v) = get("samples") {
        plan.samples = v.parse().map_err(|e| value_error("samples", e))?;
    }
    if let Some(v) = get("seed") {
        plan.seed = v.parse().map_err(|e| value_error("seed", e))?;
    }
    if let Some(v) = get("tol") {
        plan.tol = parse_tol(v)?;
    }
    let omegas: Vec<&str> = (1..=4).filter_map(|i| get(&format!("omega{i}"))).collect();
    let input = match (get("f"), get("b"), get("phi"), omegas.len()) {
        (Some(f), Some(b), None, 0) => Input::Web {
            f: expr("f", f)?,
            b: expr("b", b)?,
        },
        (None, None, Some(phi), 0) => Input::Phi(expr("phi", phi)?),
        (None, None, None, 4) => {
            let mut forms = Vec::with_capacity(4);
            for (i, text) in omegas.iter().enumerate() {
                forms.push(form(&format!("omega{}", i + 1), text)?);
            }
            Input::Forms(forms.try_into().expect("four forms"))
        }
        (None, None, None, 1..=3) => {
            return Err(ConfigError::Input("all four of omega1..omega4 are required".into()))
        }
        _ => {
            return Err(ConfigError::Input(
                "give exactly one of: both `f` and `b`, `phi`, or `omega1..omega4`".into(),
            ))
        }
    };
    Ok(FileConfig {
        input,
        domain,
        plan,
    })
}

pub fn parse_tol(text: &str) -> Result<f64, ConfigError> {
    match text.parse::<f64>() {
        Ok(t) if t.is_finite() && t > 0.0 => Ok(t),
        _ => Err(value_error("tol", "expected a positive number")),
    }
}
