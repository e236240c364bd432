//! Deterministic synthetic corpora for tests, examples and smoke runs.
//!
//! Sentences follow a handful of fixed patterns with role fillers drawn from
//! disjoint word lists, so a small model can learn every gold span exactly.
//! Each document comes with a dependency parse consistent with its pattern.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus::{
    registry_from, write_ontologies, ArgumentAnnotation, Corpus, DependencyParse, EventOntology, GenericRecord, Located,
    OntologyRegistry, Split, TriggerSpan,
};
use crate::bias_analysis::AltPrompt;
use crate::error::{Error, Result};
use crate::prompts::{stub_generate_cluster, template_clauses, ClusterRecord};

pub const COMMUNICATE: &str = "contact.communicate";
pub const START_POSITION: &str = "personnel.start";

const PEOPLE: &[&str] = &["alice", "bruno", "chen", "dmitri", "esme", "farah", "goran", "hana"];
const PLACES: &[&[&str]] = &[&["paris"], &["lima"], &["oslo"], &["new", "york"], &["cairo"], &["hong", "kong"]];
const ORGS: &[&[&str]] = &[&["acme"], &["globex"], &["initech"], &["umbrella", "corp"], &["hooli"]];
const DAYS: &[&str] = &["monday", "tuesday", "friday", "sunday"];

/// The two event types of the running examples, with template dependency
/// labels for the syntactic-match diagnostic.
pub fn example_ontologies() -> OntologyRegistry {
    let labels = |pairs: &[(&str, &str)]| -> BTreeMap<String, String> {
        pairs.iter().map(|(r, l)| (r.to_string(), l.to_string())).collect()
    };
    registry_from(vec![
        EventOntology::new(
            COMMUNICATE,
            vec!["communicator".into(), "recipient".into(), "place".into()],
            "communicator communicated remotely with recipient about topic at place",
        )
        .expect("valid ontology")
        .with_dep_labels(labels(&[("communicator", "nsubj"), ("recipient", "pobj"), ("place", "pobj")])),
        EventOntology::new(
            START_POSITION,
            vec!["employee".into(), "placeofemployment".into(), "place".into()],
            "employee started working at placeofemployment in place",
        )
        .expect("valid ontology")
        .with_dep_labels(labels(&[("employee", "nsubj"), ("placeofemployment", "pobj"), ("place", "pobj")])),
    ])
    .expect("valid registry")
}

/// Sizes of the generated splits.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SyntheticSpec {
    pub train: usize,
    pub dev: usize,
    pub test: usize,
    pub seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        SyntheticSpec {
            train: 20,
            dev: 6,
            test: 6,
            seed: 7,
        }
    }
}

/// Token sequence under construction plus its parse and arguments.
struct Sentence {
    tokens: Vec<String>,
    labels: Vec<String>,
    heads: Vec<i64>,
    args: Vec<ArgumentAnnotation>,
}

impl Sentence {
    fn new() -> Self {
        Sentence {
            tokens: Vec::new(),
            labels: Vec::new(),
            heads: Vec::new(),
            args: Vec::new(),
        }
    }

    /// Appends a phrase whose last token attaches to `head` with `label`;
    /// earlier tokens attach to the last one as compounds.
    fn push(&mut self, words: &[&str], label: &str, head: i64, role: Option<&str>) -> usize {
        let start = self.tokens.len();
        let last = start + words.len() - 1;
        for (i, w) in words.iter().enumerate() {
            self.tokens.push(w.to_string());
            if start + i == last {
                self.labels.push(label.into());
                self.heads.push(head);
            } else {
                self.labels.push("compound".into());
                self.heads.push(last as i64);
            }
        }
        if let Some(role) = role {
            self.args.push(ArgumentAnnotation {
                role: role.into(),
                start,
                end: last,
                head_index: Some(last),
            });
        }
        last
    }
}

/// The trigger sits at a fixed offset after the subject, so heads can point
/// to it before it is pushed.
fn communicate(rng: &mut ChaCha8Rng) -> (Sentence, usize) {
    let mut s = Sentence::new();
    let lead = rng.random_bool(0.5);
    let people: Vec<&str> = PEOPLE.choose_multiple(rng, 2).copied().collect();
    let trigger = if lead { 4 } else { 1 };
    if lead {
        s.push(&["on"], "prep", trigger as i64, None);
        let day = *DAYS.choose(rng).expect("nonempty");
        s.push(&[day], "pobj", 0, None);
        s.push(&[","], "punct", trigger as i64, None);
    }
    s.push(&[people[0]], "nsubj", trigger as i64, Some("communicator"));
    s.push(&["called"], "ROOT", -1, None);
    s.push(&[people[1]], "dobj", trigger as i64, Some("recipient"));
    if rng.random_bool(0.7) {
        let prep = s.push(&["from"], "prep", trigger as i64, None);
        let place = *PLACES.choose(rng).expect("nonempty");
        s.push(place, "pobj", prep as i64, Some("place"));
    }
    s.push(&["."], "punct", trigger as i64, None);
    (s, trigger)
}

fn start_position(rng: &mut ChaCha8Rng) -> (Sentence, usize) {
    let mut s = Sentence::new();
    let person = *PEOPLE.choose(rng).expect("nonempty");
    let trigger = 1;
    s.push(&[person], "nsubj", trigger, Some("employee"));
    s.push(&["joined"], "ROOT", -1, None);
    let org = *ORGS.choose(rng).expect("nonempty");
    s.push(org, "dobj", trigger, Some("placeofemployment"));
    if rng.random_bool(0.6) {
        let prep = s.push(&["in"], "prep", trigger, None);
        let place = *PLACES.choose(rng).expect("nonempty");
        s.push(place, "pobj", prep as i64, Some("place"));
    }
    let day = *DAYS.choose(rng).expect("nonempty");
    let last = s.push(&["last"], "amod", s.tokens.len() as i64 + 1, None);
    s.push(&[day], "npadvmod", trigger, None);
    debug_assert_eq!(s.heads[last], last as i64 + 1);
    s.push(&["."], "punct", trigger, None);
    (s, trigger as usize)
}

/// Synthetic corpus over [`example_ontologies`], alternating event types,
/// with a parse attached to every document.
pub fn learnable_corpus(spec: SyntheticSpec) -> Result<Corpus> {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut records = Vec::new();
    let mut parses = Vec::new();
    let plan = [(Split::Train, spec.train), (Split::Dev, spec.dev), (Split::Test, spec.test)];
    let mut idx = 0;
    for (split, n) in plan {
        for _ in 0..n {
            let (event_type, (sent, trigger)) = if idx % 2 == 0 {
                (COMMUNICATE, communicate(&mut rng))
            } else {
                (START_POSITION, start_position(&mut rng))
            };
            let doc_id = format!("syn-{idx:03}");
            parses.push(DependencyParse {
                doc_id: doc_id.clone(),
                labels: sent.labels,
                heads: sent.heads,
            });
            records.push(Located {
                file: "<synthetic>".into(),
                line: idx + 1,
                value: GenericRecord {
                    doc_id,
                    tokens: sent.tokens,
                    event_type: event_type.into(),
                    trigger: TriggerSpan {
                        start: trigger,
                        end: trigger,
                    },
                    arguments: sent.args,
                    context_window: None,
                    split: Some(split),
                },
            });
            idx += 1;
        }
    }
    let mut corpus = Corpus::assemble(records, example_ontologies())?;
    corpus.attach_parses(parses)?;
    Ok(corpus)
}

/// Ten event types `type00`…`type09` with `12 - i` train+dev instances each
/// and one test instance each.
pub fn ten_type_corpus(seed: u64) -> Result<Corpus> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut ontologies = Vec::new();
    let mut records = Vec::new();
    for t in 0..10 {
        let event_type = format!("type{t:02}");
        ontologies.push(EventOntology::new(&event_type, vec!["agent".into()], "agent acted")?);
        for i in 0..(12 - t) + 1 {
            let split = match i {
                0 => Split::Test,
                i if i % 4 == 0 => Split::Dev,
                _ => Split::Train,
            };
            let person = *PEOPLE.choose(&mut rng).expect("nonempty");
            let line = records.len() + 1;
            records.push(Located {
                file: "<synthetic>".into(),
                line,
                value: GenericRecord {
                    doc_id: format!("{event_type}-{i:02}"),
                    tokens: vec![person.into(), "acted".into(), ".".into()],
                    event_type: event_type.clone(),
                    trigger: TriggerSpan { start: 1, end: 1 },
                    arguments: vec![ArgumentAnnotation {
                        role: "agent".into(),
                        start: 0,
                        end: 0,
                        head_index: None,
                    }],
                    context_window: None,
                    split: Some(split),
                },
            });
        }
    }
    Corpus::assemble(records, registry_from(ontologies)?)
}

/// Paths written by [`write_fixture_dir`].
#[derive(Debug, Clone)]
pub struct FixturePaths {
    pub corpus: PathBuf,
    pub ontology: PathBuf,
    pub parses: PathBuf,
    pub clusters: PathBuf,
    pub alt_prompts: PathBuf,
}

/// Writes a synthetic corpus with its ontology, parses, a stub-generated
/// cluster file (`k` prompts per instance) and clause-shuffled alternative
/// prompts into `dir`.
pub fn write_fixture_dir(dir: impl AsRef<Path>, spec: SyntheticSpec, k: usize) -> Result<FixturePaths> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let corpus = learnable_corpus(spec)?;
    let paths = FixturePaths {
        corpus: dir.join("corpus.jsonl"),
        ontology: dir.join("ontology.json"),
        parses: dir.join("parses.jsonl"),
        clusters: dir.join("clusters.jsonl"),
        alt_prompts: dir.join("alt_prompts.json"),
    };
    corpus.write_jsonl(&paths.corpus)?;
    write_ontologies(&corpus.ontologies, &paths.ontology)?;

    let mut parses = String::new();
    for parse in corpus.parses.values() {
        parses += &(serde_json::to_string(parse).expect("parse serializes") + "\n");
    }
    std::fs::write(&paths.parses, parses).map_err(|e| Error::io(&paths.parses, e))?;

    let mut clusters = String::new();
    for inst in &corpus.instances {
        let ontology = corpus.ontology(&inst.event_type)?;
        let surface = corpus.trigger_text(inst)?;
        let cluster = stub_generate_cluster(ontology, inst, &surface, k, spec.seed)?;
        for (prompt, loglik) in cluster.prompts.iter().zip(&cluster.logliks) {
            let rec = ClusterRecord {
                doc_id: inst.doc_id.clone(),
                trigger: inst.trigger,
                event_type: inst.event_type.clone(),
                prompt_text: prompt.text(),
                loglik: *loglik,
                trigger_lemma: None,
            };
            clusters += &(serde_json::to_string(&rec).expect("record serializes") + "\n");
        }
    }
    std::fs::write(&paths.clusters, clusters).map_err(|e| Error::io(&paths.clusters, e))?;

    let alts: Vec<AltPrompt> = corpus
        .ontologies
        .values()
        .map(|o| {
            let mut clauses = template_clauses(o);
            clauses.reverse();
            AltPrompt {
                event_type: o.event_type.clone(),
                template: clauses.concat().join(" "),
            }
        })
        .collect();
    let text = serde_json::to_string_pretty(&alts).expect("alt prompts serialize") + "\n";
    std::fs::write(&paths.alt_prompts, text).map_err(|e| Error::io(&paths.alt_prompts, e))?;
    Ok(paths)
}
