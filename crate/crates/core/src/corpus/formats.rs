//! Adapters from on-disk corpus layouts onto the generic record schema.

use std::collections::BTreeMap;
use std::io::BufRead;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{ArgumentAnnotation, GenericRecord, Located, Split, TriggerSpan};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CorpusFormat {
    #[default]
    Generic,
    Rams,
    Wikievents,
}

impl std::str::FromStr for CorpusFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "generic" => Ok(CorpusFormat::Generic),
            "rams" => Ok(CorpusFormat::Rams),
            "wikievents" => Ok(CorpusFormat::Wikievents),
            other => Err(Error::InvalidArgument(format!("unknown corpus format {other}"))),
        }
    }
}

/// Extracts the offending field name from a serde error message, if any.
pub(crate) fn field_of(err: &serde_json::Error) -> String {
    let msg = err.to_string();
    msg.split('`').nth(1).unwrap_or("record").to_owned()
}

const SPLIT_EXTENSIONS: [&str; 3] = ["jsonl", "jsonlines", "json"];

fn split_files(dir: &Path) -> Vec<(PathBuf, Split)> {
    let mut files = Vec::new();
    for split in Split::ALL {
        for ext in SPLIT_EXTENSIONS {
            let candidate = dir.join(format!("{}.{ext}", split.as_str()));
            if candidate.is_file() {
                files.push((candidate, split));
                break;
            }
        }
    }
    files
}

fn split_from_name(path: &Path) -> Option<Split> {
    let stem = path.file_stem()?.to_str()?.to_ascii_lowercase();
    if stem.starts_with("dev") {
        Some(Split::Dev)
    } else if stem.starts_with("test") {
        Some(Split::Test)
    } else if stem.starts_with("train") {
        Some(Split::Train)
    } else {
        None
    }
}

pub(crate) fn read_records(path: &Path, format: CorpusFormat) -> Result<Vec<Located<GenericRecord>>> {
    let files = if path.is_dir() {
        let files = split_files(path);
        if files.is_empty() {
            return Err(Error::Missing(format!(
                "{} holds no train/dev/test JSON-lines files",
                path.display()
            )));
        }
        files.into_iter().map(|(p, s)| (p, Some(s))).collect()
    } else {
        vec![(path.to_path_buf(), None)]
    };
    let mut out = Vec::new();
    for (file, dir_split) in files {
        let split = dir_split.or_else(|| split_from_name(&file));
        read_file(&file, format, split, &mut out)?;
    }
    Ok(out)
}

fn read_file(
    path: &Path,
    format: CorpusFormat,
    split: Option<Split>,
    out: &mut Vec<Located<GenericRecord>>,
) -> Result<()> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let name = path.display().to_string();
    for (i, line) in std::io::BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        let lineno = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let parse_err = |e: serde_json::Error| Error::record(&name, lineno, field_of(&e), e.to_string());
        let records = match format {
            CorpusFormat::Generic => {
                let mut rec: GenericRecord = serde_json::from_str(&line).map_err(parse_err)?;
                if rec.split.is_none() {
                    rec.split = split;
                }
                vec![rec]
            }
            CorpusFormat::Rams => {
                let doc: RamsDoc = serde_json::from_str(&line).map_err(parse_err)?;
                doc.into_records(split)
                    .map_err(|(field, msg)| Error::record(&name, lineno, field, msg))?
            }
            CorpusFormat::Wikievents => {
                let doc: WikiDoc = serde_json::from_str(&line).map_err(parse_err)?;
                doc.into_records(split)
                    .map_err(|(field, msg)| Error::record(&name, lineno, field, msg))?
            }
        };
        out.extend(records.into_iter().map(|value| Located {
            file: name.clone(),
            line: lineno,
            value,
        }));
    }
    Ok(())
}

type AdaptResult = std::result::Result<Vec<GenericRecord>, (String, String)>;

/// Native RAMS layout: sentence-split tokens, one trigger per document and
/// argument links carrying role names like `evt089arg01communicator`.
#[derive(Debug, Deserialize)]
struct RamsDoc {
    doc_key: String,
    sentences: Vec<Vec<String>>,
    evt_triggers: Vec<RamsTrigger>,
    #[serde(default)]
    gold_evt_links: Vec<RamsLink>,
}

/// `[start, end, [[event_type, score], ...]]`
type RamsTrigger = (usize, usize, Vec<(String, f64)>);
/// `[[trigger_start, trigger_end], [arg_start, arg_end], role]`
type RamsLink = ((usize, usize), (usize, usize), String);

/// Strips the `evtNNNargNN` prefix RAMS puts in front of role names.
fn rams_role(raw: &str) -> &str {
    let rest = match raw.strip_prefix("evt") {
        Some(r) => r.trim_start_matches(|c: char| c.is_ascii_digit()),
        None => return raw,
    };
    match rest.strip_prefix("arg") {
        Some(r) => r.trim_start_matches(|c: char| c.is_ascii_digit()),
        None => raw,
    }
}

impl RamsDoc {
    fn into_records(self, split: Option<Split>) -> AdaptResult {
        let tokens: Vec<String> = self.sentences.into_iter().flatten().collect();
        let mut records = Vec::new();
        for (start, end, types) in self.evt_triggers {
            let event_type = types
                .first()
                .map(|(t, _)| t.clone())
                .ok_or_else(|| ("evt_triggers".to_owned(), "trigger without event type".to_owned()))?;
            let arguments = self
                .gold_evt_links
                .iter()
                .filter(|(trig, _, _)| *trig == (start, end))
                .map(|(_, (s, e), role)| ArgumentAnnotation {
                    role: rams_role(role).to_owned(),
                    start: *s,
                    end: *e,
                    head_index: None,
                })
                .collect();
            records.push(GenericRecord {
                doc_id: self.doc_key.clone(),
                tokens: tokens.clone(),
                event_type,
                trigger: TriggerSpan { start, end },
                arguments,
                context_window: None,
                split,
            });
        }
        Ok(records)
    }
}

/// Native WikiEvents layout. Entity offsets are end-exclusive; coreference
/// information is ignored, only conventional arguments are kept.
#[derive(Debug, Deserialize)]
struct WikiDoc {
    doc_id: String,
    tokens: Vec<String>,
    #[serde(default)]
    entity_mentions: Vec<WikiEntity>,
    #[serde(default)]
    event_mentions: Vec<WikiEvent>,
}

#[derive(Debug, Deserialize)]
struct WikiEntity {
    id: String,
    start: usize,
    end: usize,
    #[serde(default)]
    head: Option<usize>,
}

#[derive(Debug, Deserialize)]
struct WikiEvent {
    event_type: String,
    trigger: WikiSpan,
    #[serde(default)]
    arguments: Vec<WikiArgument>,
}

#[derive(Debug, Deserialize)]
struct WikiSpan {
    start: usize,
    end: usize,
}

#[derive(Debug, Deserialize)]
struct WikiArgument {
    entity_id: String,
    role: String,
}

impl WikiDoc {
    fn into_records(self, split: Option<Split>) -> AdaptResult {
        let entities: BTreeMap<&str, &WikiEntity> =
            self.entity_mentions.iter().map(|e| (e.id.as_str(), e)).collect();
        let exclusive = |start: usize, end: usize, field: &str| {
            if end <= start {
                Err((field.to_owned(), format!("empty span [{start},{end})")))
            } else {
                Ok(end - 1)
            }
        };
        let mut records = Vec::new();
        for (i, ev) in self.event_mentions.iter().enumerate() {
            let trig_end = exclusive(ev.trigger.start, ev.trigger.end, "trigger")?;
            let mut arguments: Vec<ArgumentAnnotation> = Vec::new();
            for arg in &ev.arguments {
                let ent = entities.get(arg.entity_id.as_str()).ok_or_else(|| {
                    (
                        format!("event_mentions[{i}].arguments"),
                        format!("unknown entity_id {}", arg.entity_id),
                    )
                })?;
                let end = exclusive(ent.start, ent.end, "entity_mentions")?;
                let candidate = ArgumentAnnotation {
                    role: arg.role.clone(),
                    start: ent.start,
                    end,
                    head_index: ent.head,
                };
                if !arguments
                    .iter()
                    .any(|a| (a.role.as_str(), a.start, a.end) == (candidate.role.as_str(), candidate.start, candidate.end))
                {
                    arguments.push(candidate);
                }
            }
            records.push(GenericRecord {
                doc_id: self.doc_id.clone(),
                tokens: self.tokens.clone(),
                event_type: ev.event_type.clone(),
                trigger: TriggerSpan {
                    start: ev.trigger.start,
                    end: trig_end,
                },
                arguments,
                context_window: None,
                split,
            });
        }
        Ok(records)
    }
}
