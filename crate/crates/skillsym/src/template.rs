//! Prompt templates with `{{NAME}}` placeholders.

use std::collections::BTreeMap;
use std::path::Path;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TemplateError {
    #[error("template {template}: no value for {{{{{name}}}}}")]
    Missing { template: String, name: String },
    #[error("template {template}: unterminated placeholder at byte {at}")]
    Unterminated { template: String, at: usize },
    #[error("template {0} not found")]
    Unknown(String),
    #[error("reading {path}: {msg}")]
    Io { path: String, msg: String },
}

pub const SYSTEM: &str = "system";
pub const PROPOSE_SEQUENCES: &str = "propose_sequences";
pub const INVENT_PRECONDITION: &str = "invent_precondition";
pub const INVENT_EFFECT: &str = "invent_effect";
pub const EVALUATE_STEP1: &str = "evaluate_step1";
pub const EVALUATE_STEP2: &str = "evaluate_step2";

const BUILTIN: [(&str, &str); 6] = [
    (SYSTEM, include_str!("../prompts/system.txt")),
    (PROPOSE_SEQUENCES, include_str!("../prompts/propose_sequences.txt")),
    (INVENT_PRECONDITION, include_str!("../prompts/invent_precondition.txt")),
    (INVENT_EFFECT, include_str!("../prompts/invent_effect.txt")),
    (EVALUATE_STEP1, include_str!("../prompts/evaluate_step1.txt")),
    (EVALUATE_STEP2, include_str!("../prompts/evaluate_step2.txt")),
];

/// Placeholder names in order of first appearance.
pub fn placeholders(name: &str, text: &str) -> Result<Vec<String>, TemplateError> {
    let mut out: Vec<String> = Vec::new();
    let mut rest = text;
    let mut offset = 0;
    while let Some(i) = rest.find("{{") {
        let after = &rest[i + 2..];
        let j = after.find("}}").ok_or(TemplateError::Unterminated { template: name.into(), at: offset + i })?;
        let key = after[..j].trim().to_string();
        if !out.contains(&key) {
            out.push(key);
        }
        offset += i + 2 + j + 2;
        rest = &after[j + 2..];
    }
    Ok(out)
}

/// Substitutes every placeholder; a placeholder without a value is an error.
/// Substituted text is not rescanned.
pub fn render(name: &str, text: &str, values: &BTreeMap<&str, String>) -> Result<String, TemplateError> {
    let mut out = String::with_capacity(text.len());
    let mut rest = text;
    let mut offset = 0;
    while let Some(i) = rest.find("{{") {
        out.push_str(&rest[..i]);
        let after = &rest[i + 2..];
        let j = after.find("}}").ok_or(TemplateError::Unterminated { template: name.into(), at: offset + i })?;
        let key = after[..j].trim();
        let v = values.get(key).ok_or_else(|| TemplateError::Missing { template: name.into(), name: key.into() })?;
        out.push_str(v);
        offset += i + 2 + j + 2;
        rest = &after[j + 2..];
    }
    out.push_str(rest);
    Ok(out)
}

/// The prompt set: built-ins, optionally overridden by `<dir>/<name>.txt`.
#[derive(Clone, Debug)]
pub struct Templates {
    texts: BTreeMap<String, String>,
}

impl Default for Templates {
    fn default() -> Self {
        Templates { texts: BUILTIN.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect() }
    }
}

impl Templates {
    pub fn with_overrides(dir: &Path) -> Result<Self, TemplateError> {
        let mut t = Templates::default();
        for (name, _) in BUILTIN {
            let path = dir.join(format!("{name}.txt"));
            if path.exists() {
                let text = std::fs::read_to_string(&path)
                    .map_err(|e| TemplateError::Io { path: path.display().to_string(), msg: e.to_string() })?;
                placeholders(name, &text)?;
                t.texts.insert(name.to_string(), text);
            }
        }
        Ok(t)
    }

    pub fn get(&self, name: &str) -> Result<&str, TemplateError> {
        self.texts.get(name).map(String::as_str).ok_or_else(|| TemplateError::Unknown(name.into()))
    }

    pub fn render(&self, name: &str, values: &BTreeMap<&str, String>) -> Result<String, TemplateError> {
        render(name, self.get(name)?, values)
    }
}
