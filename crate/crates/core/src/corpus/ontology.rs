use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Per-event-type role inventory plus the natural-language template the
/// ontology-based prompt is copied from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventOntology {
    pub event_type: String,
    pub roles: Vec<String>,
    pub template: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub role_dep_labels: Option<BTreeMap<String, String>>,
    #[serde(skip)]
    slots: BTreeMap<String, (usize, usize)>,
}

pub type OntologyRegistry = BTreeMap<String, EventOntology>;

impl EventOntology {
    pub fn new(
        event_type: impl Into<String>,
        roles: Vec<String>,
        template: impl Into<String>,
    ) -> Result<Self> {
        let mut ontology = EventOntology {
            event_type: event_type.into(),
            roles,
            template: template.into(),
            role_dep_labels: None,
            slots: BTreeMap::new(),
        };
        ontology.locate_slots()?;
        Ok(ontology)
    }

    pub fn with_dep_labels(mut self, labels: BTreeMap<String, String>) -> Self {
        self.role_dep_labels = Some(labels);
        self
    }

    pub fn template_tokens(&self) -> Vec<String> {
        tokenize(&self.template)
    }

    /// Token range `(start, end)` (inclusive) of `role` inside the template.
    pub fn slot(&self, role: &str) -> Option<(usize, usize)> {
        self.slots.get(role).copied()
    }

    pub fn slots(&self) -> &BTreeMap<String, (usize, usize)> {
        &self.slots
    }

    pub fn has_role(&self, role: &str) -> bool {
        self.roles.iter().any(|r| r == role)
    }

    /// Validates the role list and caches every role's slot in the template.
    pub(crate) fn locate_slots(&mut self) -> Result<()> {
        let fail = |message: String| Error::Ontology {
            event_type: self.event_type.clone(),
            message,
        };
        if self.event_type.trim().is_empty() {
            return Err(fail("empty event type".into()));
        }
        if self.roles.is_empty() {
            return Err(fail("roles list is empty".into()));
        }
        let mut seen = std::collections::BTreeSet::new();
        for role in &self.roles {
            if role.trim().is_empty() {
                return Err(fail("empty role name".into()));
            }
            if !seen.insert(role.as_str()) {
                return Err(fail(format!("role {role} declared twice")));
            }
        }
        let tokens = tokenize(&self.template);
        let mut slots = BTreeMap::new();
        for role in &self.roles {
            let hits = find_role(&tokens, role);
            match hits.as_slice() {
                [] => return Err(fail(format!("role {role} missing from template"))),
                [one] => {
                    slots.insert(role.clone(), *one);
                }
                _ => {
                    return Err(fail(format!(
                        "role {role} appears {} times in template",
                        hits.len()
                    )))
                }
            }
        }
        let mut ranges: Vec<_> = slots.values().copied().collect();
        ranges.sort_unstable();
        if ranges.windows(2).any(|w| w[1].0 <= w[0].1) {
            return Err(fail("role slots overlap in template".into()));
        }
        self.slots = slots;
        Ok(())
    }
}

pub fn tokenize(text: &str) -> Vec<String> {
    text.split_whitespace().map(str::to_owned).collect()
}

fn normalize(token: &str) -> String {
    token
        .trim_matches(|c: char| c.is_ascii_punctuation() && c != '_' && c != '-')
        .to_lowercase()
}

/// All token ranges in `tokens` spelling out `role` (case-insensitive,
/// surrounding punctuation ignored).
pub fn find_role(tokens: &[String], role: &str) -> Vec<(usize, usize)> {
    let needle: Vec<String> = role.split_whitespace().map(normalize).collect();
    if needle.is_empty() || needle.len() > tokens.len() {
        return Vec::new();
    }
    let hay: Vec<String> = tokens.iter().map(|t| normalize(t)).collect();
    (0..=hay.len() - needle.len())
        .filter(|&i| hay[i..i + needle.len()] == needle[..])
        .map(|i| (i, i + needle.len() - 1))
        .collect()
}

/// Reads a JSON array of ontology entries.
pub fn load_ontologies(path: impl AsRef<Path>) -> Result<OntologyRegistry> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let entries: Vec<EventOntology> = serde_json::from_str(&text).map_err(|e| {
        Error::record(path.display(), e.line(), "ontology", e.to_string())
    })?;
    registry_from(entries)
}

pub fn registry_from(entries: Vec<EventOntology>) -> Result<OntologyRegistry> {
    let mut registry = OntologyRegistry::new();
    for mut entry in entries {
        entry.locate_slots()?;
        if let Some(labels) = &entry.role_dep_labels {
            if let Some(extra) = labels.keys().find(|r| !entry.has_role(r)) {
                return Err(Error::Ontology {
                    event_type: entry.event_type.clone(),
                    message: format!("role_dep_labels names unknown role {extra}"),
                });
            }
        }
        if registry.contains_key(&entry.event_type) {
            return Err(Error::Ontology {
                event_type: entry.event_type.clone(),
                message: "duplicate ontology entry".into(),
            });
        }
        registry.insert(entry.event_type.clone(), entry);
    }
    Ok(registry)
}

pub fn write_ontologies(registry: &OntologyRegistry, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let entries: Vec<&EventOntology> = registry.values().collect();
    let text = serde_json::to_string_pretty(&entries).expect("ontology serializes");
    std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
}
