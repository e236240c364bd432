//! Validated in-memory data model for event argument extraction corpora.
//!
//! A [`Corpus`] owns the documents, the trigger-anchored [`EventInstance`]s
//! (each tagged with a [`Split`]), the ontology registry and, optionally,
//! dependency parses used by the bias diagnostics.

mod formats;
mod ontology;
mod parse;
mod split;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use formats::CorpusFormat;
pub use ontology::{
    find_role, load_ontologies, registry_from, tokenize, write_ontologies, EventOntology,
    OntologyRegistry,
};
pub use parse::{load_parses, DependencyParse};
pub use split::zero_shot_split;

/// Default maximum model input length, in tokens.
pub const DEFAULT_MAX_INPUT_LENGTH: usize = 512;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Document {
    pub doc_id: String,
    pub tokens: Vec<String>,
}

/// Inclusive token span.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct TriggerSpan {
    pub start: usize,
    pub end: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArgumentAnnotation {
    pub role: String,
    pub start: usize,
    pub end: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub head_index: Option<usize>,
}

#[derive(
    Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    #[default]
    Train,
    Dev,
    Test,
}

impl Split {
    pub const ALL: [Split; 3] = [Split::Train, Split::Dev, Split::Test];

    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Dev => "dev",
            Split::Test => "test",
        }
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Split {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "train" => Ok(Split::Train),
            "dev" | "valid" | "validation" => Ok(Split::Dev),
            "test" => Ok(Split::Test),
            other => Err(Error::InvalidArgument(format!("unknown split {other}"))),
        }
    }
}

/// Identifies an event instance across corpus, cluster and prediction files.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct InstanceKey {
    pub doc_id: String,
    pub trigger: TriggerSpan,
    pub event_type: String,
}

impl fmt::Display for InstanceKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}[{}..{}]:{}",
            self.doc_id, self.trigger.start, self.trigger.end, self.event_type
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EventInstance {
    pub doc_id: String,
    pub event_type: String,
    pub trigger: TriggerSpan,
    #[serde(default)]
    pub arguments: Vec<ArgumentAnnotation>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub context_window: Option<(usize, usize)>,
    #[serde(default)]
    pub split: Split,
}

impl EventInstance {
    pub fn key(&self) -> InstanceKey {
        InstanceKey {
            doc_id: self.doc_id.clone(),
            trigger: self.trigger,
            event_type: self.event_type.clone(),
        }
    }

    /// Inclusive token window the model consumes.
    ///
    /// An explicit `context_window` is returned as is. Otherwise the whole
    /// document is used when it fits in `max_len`, and longer documents are
    /// truncated symmetrically around the trigger.
    pub fn window(&self, doc_len: usize, max_len: usize) -> (usize, usize) {
        if let Some(w) = self.context_window {
            return w;
        }
        if doc_len <= max_len {
            return (0, doc_len - 1);
        }
        let trig_len = self.trigger.end - self.trigger.start + 1;
        if trig_len >= max_len {
            return (self.trigger.start, self.trigger.start + max_len - 1);
        }
        let extra = max_len - trig_len;
        let mut start = self.trigger.start.saturating_sub(extra / 2);
        let mut end = start + max_len - 1;
        if end >= doc_len {
            end = doc_len - 1;
            start = end + 1 - max_len;
        }
        (start, end)
    }

    pub fn roles_with_gold(&self) -> BTreeSet<&str> {
        self.arguments.iter().map(|a| a.role.as_str()).collect()
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Corpus {
    pub documents: BTreeMap<String, Document>,
    pub instances: Vec<EventInstance>,
    pub ontologies: OntologyRegistry,
    pub parses: BTreeMap<String, DependencyParse>,
}

/// One line of the generic JSON-lines corpus schema.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub(crate) struct GenericRecord {
    pub doc_id: String,
    pub tokens: Vec<String>,
    pub event_type: String,
    pub trigger: TriggerSpan,
    #[serde(default)]
    pub arguments: Vec<ArgumentAnnotation>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub context_window: Option<(usize, usize)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub split: Option<Split>,
}

/// Record plus its provenance, used for error reporting during assembly.
pub(crate) struct Located<T> {
    pub file: String,
    pub line: usize,
    pub value: T,
}

impl Corpus {
    /// Loads a corpus from a JSON-lines file or from a directory holding
    /// `train`/`dev`/`test` files, validating it against `ontologies`.
    pub fn load(
        path: impl AsRef<Path>,
        format: CorpusFormat,
        ontologies: OntologyRegistry,
    ) -> Result<Corpus> {
        let records = formats::read_records(path.as_ref(), format)?;
        Corpus::assemble(records, ontologies)
    }

    pub(crate) fn assemble(
        records: Vec<Located<GenericRecord>>,
        ontologies: OntologyRegistry,
    ) -> Result<Corpus> {
        let unknown: BTreeSet<String> = records
            .iter()
            .filter(|r| !ontologies.contains_key(&r.value.event_type))
            .map(|r| r.value.event_type.clone())
            .collect();
        if !unknown.is_empty() {
            return Err(Error::UnknownEventType(unknown.into_iter().collect()));
        }

        let mut corpus = Corpus {
            ontologies,
            ..Corpus::default()
        };
        let mut keys = BTreeSet::new();
        for Located { file, line, value } in records {
            let rec = value;
            if rec.tokens.is_empty() {
                return Err(Error::record(&file, line, "tokens", "token list is empty"));
            }
            match corpus.documents.get(&rec.doc_id) {
                Some(doc) if doc.tokens != rec.tokens => {
                    return Err(Error::record(
                        &file,
                        line,
                        "doc_id",
                        format!("doc_id {} reused with different tokens", rec.doc_id),
                    ))
                }
                Some(_) => {}
                None => {
                    corpus.documents.insert(
                        rec.doc_id.clone(),
                        Document {
                            doc_id: rec.doc_id.clone(),
                            tokens: rec.tokens.clone(),
                        },
                    );
                }
            }
            let instance = EventInstance {
                doc_id: rec.doc_id,
                event_type: rec.event_type,
                trigger: rec.trigger,
                arguments: rec.arguments,
                context_window: rec.context_window,
                split: rec.split.unwrap_or_default(),
            };
            corpus.check_instance(&instance, &file, line)?;
            if !keys.insert(instance.key()) {
                return Err(Error::record(
                    &file,
                    line,
                    "trigger",
                    format!("duplicate instance {}", instance.key()),
                ));
            }
            corpus.instances.push(instance);
        }
        Ok(corpus)
    }

    fn check_instance(&self, inst: &EventInstance, file: &str, line: usize) -> Result<()> {
        let len = self.documents[&inst.doc_id].tokens.len();
        let oob = |start, end| Error::OutOfBounds {
            doc_id: inst.doc_id.clone(),
            start,
            end,
            len,
        };
        let TriggerSpan { start, end } = inst.trigger;
        if start > end || end >= len {
            return Err(oob(start, end));
        }
        if let Some((ws, we)) = inst.context_window {
            if ws > we || we >= len {
                return Err(oob(ws, we));
            }
            if start < ws || end > we {
                return Err(Error::record(
                    file,
                    line,
                    "context_window",
                    "trigger lies outside the context window",
                ));
            }
        }
        let ontology = &self.ontologies[&inst.event_type];
        let mut seen = BTreeSet::new();
        for (i, arg) in inst.arguments.iter().enumerate() {
            if arg.start > arg.end || arg.end >= len {
                return Err(oob(arg.start, arg.end));
            }
            if !ontology.has_role(&arg.role) {
                return Err(Error::record(
                    file,
                    line,
                    format!("arguments[{i}].role"),
                    format!("role {} not defined for {}", arg.role, inst.event_type),
                ));
            }
            if let Some(h) = arg.head_index {
                if h < arg.start || h > arg.end {
                    return Err(Error::record(
                        file,
                        line,
                        format!("arguments[{i}].head_index"),
                        format!("head {h} outside span ({},{})", arg.start, arg.end),
                    ));
                }
            }
            if !seen.insert((arg.role.as_str(), arg.start, arg.end)) {
                return Err(Error::record(
                    file,
                    line,
                    format!("arguments[{i}]"),
                    "duplicate (role,start,end) argument",
                ));
            }
        }
        Ok(())
    }

    /// Attaches dependency parses, checking they align with the documents.
    pub fn attach_parses(&mut self, parses: Vec<DependencyParse>) -> Result<()> {
        for parse in parses {
            let doc = self.documents.get(&parse.doc_id).ok_or_else(|| {
                Error::Missing(format!("parse refers to unknown document {}", parse.doc_id))
            })?;
            parse.check(doc.tokens.len())?;
            self.parses.insert(parse.doc_id.clone(), parse);
        }
        Ok(())
    }

    pub fn document(&self, doc_id: &str) -> Result<&Document> {
        self.documents
            .get(doc_id)
            .ok_or_else(|| Error::Missing(format!("document {doc_id}")))
    }

    pub fn ontology(&self, event_type: &str) -> Result<&EventOntology> {
        self.ontologies
            .get(event_type)
            .ok_or_else(|| Error::UnknownEventType(vec![event_type.to_owned()]))
    }

    pub fn split(&self, split: Split) -> impl Iterator<Item = &EventInstance> {
        self.instances.iter().filter(move |i| i.split == split)
    }

    pub fn find(&self, key: &InstanceKey) -> Option<&EventInstance> {
        self.instances.iter().find(|i| {
            i.doc_id == key.doc_id && i.trigger == key.trigger && i.event_type == key.event_type
        })
    }

    pub fn event_types(&self) -> BTreeSet<&str> {
        self.instances.iter().map(|i| i.event_type.as_str()).collect()
    }

    /// Surface form of an instance's trigger.
    pub fn trigger_text(&self, inst: &EventInstance) -> Result<String> {
        let doc = self.document(&inst.doc_id)?;
        Ok(doc.tokens[inst.trigger.start..=inst.trigger.end].join(" "))
    }

    /// Serializes the corpus in the generic JSON-lines schema, one line per
    /// instance, in corpus order.
    pub fn write_jsonl(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut out = std::io::BufWriter::new(file);
        for inst in &self.instances {
            let rec = GenericRecord {
                doc_id: inst.doc_id.clone(),
                tokens: self.documents[&inst.doc_id].tokens.clone(),
                event_type: inst.event_type.clone(),
                trigger: inst.trigger,
                arguments: inst.arguments.clone(),
                context_window: inst.context_window,
                split: Some(inst.split),
            };
            let line = serde_json::to_string(&rec).expect("record serializes");
            writeln!(out, "{line}").map_err(|e| Error::io(path, e))?;
        }
        out.flush().map_err(|e| Error::io(path, e))
    }

    /// Counts per split, for summaries.
    pub fn split_sizes(&self) -> BTreeMap<Split, usize> {
        let mut sizes = BTreeMap::new();
        for inst in &self.instances {
            *sizes.entry(inst.split).or_insert(0) += 1;
        }
        sizes
    }
}
