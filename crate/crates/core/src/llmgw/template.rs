//! Prompt templates with named `{slot}` placeholders.
//!
//! The canonical templates live in the repository's `prompts/` directory
//! as `<name>.user.txt` plus an optional `<name>.system.txt`, and are
//! compiled into the binary. A directory with the same layout can be
//! loaded at runtime to override them. Rendering is pure, single-pass
//! substitution: binding values are never re-expanded.

use std::collections::BTreeMap;
use std::path::Path;

#[derive(Debug, thiserror::Error)]
pub enum TemplateError {
    #[error("template {template}: unmatched '{{'")]
    UnbalancedBrace { template: String },
    #[error("template {template}: bad slot name {slot:?}")]
    BadSlotName { template: String, slot: String },
    #[error("template {template}: no binding for slot {slot:?}")]
    MissingBinding { template: String, slot: String },
    #[error("unknown template {0:?}")]
    UnknownTemplate(String),
    #[error("failed to load templates from {path}: {message}")]
    Load { path: String, message: String },
}

/// A system/user prompt pair with named slots.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PromptTemplate {
    name: String,
    system: String,
    user: String,
    slots: Vec<String>,
}

/// Fully substituted prompt text ready to send.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RenderedPrompt {
    pub system: String,
    pub user: String,
}

fn valid_slot_name(name: &str) -> bool {
    !name.is_empty()
        && name
            .chars()
            .all(|c| c.is_ascii_lowercase() || c.is_ascii_digit() || c == '_')
}

fn scan_slots(name: &str, text: &str, slots: &mut Vec<String>) -> Result<(), TemplateError> {
    let mut rest = text;
    while let Some(pos) = rest.find('{') {
        let after = &rest[pos + 1..];
        let end = after.find('}').ok_or_else(|| TemplateError::UnbalancedBrace {
            template: name.to_string(),
        })?;
        let slot = &after[..end];
        if !valid_slot_name(slot) {
            return Err(TemplateError::BadSlotName {
                template: name.to_string(),
                slot: slot.to_string(),
            });
        }
        if !slots.iter().any(|s| s == slot) {
            slots.push(slot.to_string());
        }
        rest = &after[end + 1..];
    }
    Ok(())
}

fn substitute(
    name: &str,
    text: &str,
    bindings: &[(&str, &str)],
) -> Result<String, TemplateError> {
    let mut out = String::with_capacity(text.len());
    let mut rest = text;
    while let Some(pos) = rest.find('{') {
        out.push_str(&rest[..pos]);
        let after = &rest[pos + 1..];
        let end = after.find('}').expect("validated at construction");
        let slot = &after[..end];
        match bindings.iter().find(|(k, _)| *k == slot) {
            Some((_, value)) => out.push_str(value),
            None => {
                return Err(TemplateError::MissingBinding {
                    template: name.to_string(),
                    slot: slot.to_string(),
                })
            }
        }
        rest = &after[end + 1..];
    }
    out.push_str(rest);
    Ok(out)
}

impl PromptTemplate {
    pub fn new(name: &str, system: &str, user: &str) -> Result<Self, TemplateError> {
        let mut slots = Vec::new();
        scan_slots(name, system, &mut slots)?;
        scan_slots(name, user, &mut slots)?;
        Ok(PromptTemplate {
            name: name.to_string(),
            system: system.to_string(),
            user: user.to_string(),
            slots,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// Slot names in order of first appearance.
    pub fn slots(&self) -> &[String] {
        &self.slots
    }

    pub fn system_text(&self) -> &str {
        &self.system
    }

    pub fn user_text(&self) -> &str {
        &self.user
    }

    /// Substitutes every slot. Bindings not used by the template are
    /// ignored; a slot without a binding is an error.
    pub fn render(&self, bindings: &[(&str, &str)]) -> Result<RenderedPrompt, TemplateError> {
        Ok(RenderedPrompt {
            system: substitute(&self.name, &self.system, bindings)?,
            user: substitute(&self.name, &self.user, bindings)?,
        })
    }
}

/// Template files end with a newline; the content itself does not.
fn strip_one_newline(text: &str) -> &str {
    text.strip_suffix('\n').unwrap_or(text)
}

macro_rules! builtin {
    ($name:literal, system) => {
        (
            $name,
            Some(include_str!(concat!(
                "../../../../prompts/",
                $name,
                ".system.txt"
            ))),
            include_str!(concat!("../../../../prompts/", $name, ".user.txt")),
        )
    };
    ($name:literal) => {
        (
            $name,
            None,
            include_str!(concat!("../../../../prompts/", $name, ".user.txt")),
        )
    };
}

const BUILTIN: &[(&str, Option<&str>, &str)] = &[
    builtin!("zero_shot", system),
    builtin!("few_shot", system),
    builtin!("self_consistency", system),
    builtin!("rewrite_subjectivity", system),
    builtin!("rewrite_inconsistency", system),
    builtin!("rewrite_both", system),
    builtin!("explanation_parse"),
    builtin!("synth_to_objective_type1"),
    builtin!("synth_to_objective_type2"),
    builtin!("synth_to_objective_type3"),
    builtin!("synth_to_objective_type4"),
    builtin!("synth_to_subjective_type1"),
    builtin!("synth_to_subjective_type2"),
    builtin!("synth_to_subjective_type3"),
    builtin!("synth_to_subjective_type4"),
];

/// A named collection of templates.
pub struct TemplateSet {
    templates: BTreeMap<String, PromptTemplate>,
}

impl TemplateSet {
    /// The compiled-in prompt set.
    pub fn builtin() -> Self {
        let mut templates = BTreeMap::new();
        for (name, system, user) in BUILTIN {
            let template = PromptTemplate::new(
                name,
                strip_one_newline(system.unwrap_or("")),
                strip_one_newline(user),
            )
            .expect("builtin templates are well-formed");
            templates.insert(name.to_string(), template);
        }
        TemplateSet { templates }
    }

    /// Loads `<name>.user.txt` (+ optional `<name>.system.txt`) files.
    pub fn from_dir(dir: &Path) -> Result<Self, TemplateError> {
        let display = dir.display().to_string();
        let entries = std::fs::read_dir(dir).map_err(|e| TemplateError::Load {
            path: display.clone(),
            message: e.to_string(),
        })?;
        let mut names = Vec::new();
        for entry in entries {
            let entry = entry.map_err(|e| TemplateError::Load {
                path: display.clone(),
                message: e.to_string(),
            })?;
            let file_name = entry.file_name().to_string_lossy().into_owned();
            if let Some(name) = file_name.strip_suffix(".user.txt") {
                names.push(name.to_string());
            }
        }
        names.sort();
        let mut templates = BTreeMap::new();
        for name in names {
            let read = |path: &Path| -> Result<String, TemplateError> {
                std::fs::read_to_string(path).map_err(|e| TemplateError::Load {
                    path: path.display().to_string(),
                    message: e.to_string(),
                })
            };
            let user = read(&dir.join(format!("{name}.user.txt")))?;
            let system_path = dir.join(format!("{name}.system.txt"));
            let system = if system_path.exists() {
                read(&system_path)?
            } else {
                String::new()
            };
            let template = PromptTemplate::new(
                &name,
                strip_one_newline(&system),
                strip_one_newline(&user),
            )?;
            templates.insert(name, template);
        }
        Ok(TemplateSet { templates })
    }

    pub fn get(&self, name: &str) -> Result<&PromptTemplate, TemplateError> {
        self.templates
            .get(name)
            .ok_or_else(|| TemplateError::UnknownTemplate(name.to_string()))
    }

    pub fn names(&self) -> Vec<&str> {
        self.templates.keys().map(|s| s.as_str()).collect()
    }

    /// Digest over every template's text, for run provenance.
    pub fn digest(&self) -> String {
        use sha2::{Digest, Sha256};
        let mut hasher = Sha256::new();
        for (name, t) in &self.templates {
            hasher.update(name.as_bytes());
            hasher.update([0]);
            hasher.update(t.system.as_bytes());
            hasher.update([0]);
            hasher.update(t.user.as_bytes());
            hasher.update([0]);
        }
        hex::encode(hasher.finalize())
    }
}
