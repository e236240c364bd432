//! Diagnostics for prompt-induced bias: spurious role errors, syntactic
//! role matching, side-by-side case records and prompt-perturbation
//! robustness.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, DependencyParse, EventInstance, EventOntology, InstanceKey, OntologyRegistry, Split};
use crate::error::{Error, Result};
use crate::evaluation::{evaluate, predict, EvalReport};
use crate::model::{InstancePredictions, ToyModel};
use crate::prompts::ClusterSource;

/// A ratio together with the counts it was computed from.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Ratio {
    pub numerator: usize,
    pub denominator: usize,
    pub ratio: f64,
}

impl Ratio {
    pub fn new(numerator: usize, denominator: usize) -> Self {
        Ratio {
            numerator,
            denominator,
            ratio: if denominator == 0 {
                0.0
            } else {
                numerator as f64 / denominator as f64
            },
        }
    }

    fn add(self, other: Ratio) -> Ratio {
        Ratio::new(self.numerator + other.numerator, self.denominator + other.denominator)
    }
}

fn aligned<'c>(corpus: &'c Corpus, preds: &InstancePredictions) -> Result<&'c EventInstance> {
    let key = preds.key();
    corpus
        .find(&key)
        .ok_or_else(|| Error::Missing(format!("prediction for unknown instance {key}")))
}

fn spurious_counts(inst: &EventInstance, preds: &InstancePredictions) -> Ratio {
    let gold_roles = inst.roles_with_gold();
    let spans: Vec<_> = preds.spans().collect();
    let spurious = spans.iter().filter(|(role, _, _)| !gold_roles.contains(role)).count();
    Ratio::new(spurious, spans.len())
}

/// Share of predicted arguments whose role has no gold filler in their
/// instance. The denominator is every non-sentinel prediction.
pub fn spurious_role_error_ratio(predictions: &[InstancePredictions], corpus: &Corpus) -> Result<Ratio> {
    predictions.iter().try_fold(Ratio::default(), |acc, p| {
        let inst = aligned(corpus, p)?;
        Ok(acc.add(spurious_counts(inst, p)))
    })
}

fn syntactic_counts(
    preds: &InstancePredictions,
    parses: &BTreeMap<String, DependencyParse>,
    ontologies: &OntologyRegistry,
) -> Result<Ratio> {
    let mut spans = preds.spans().peekable();
    if spans.peek().is_none() {
        return Ok(Ratio::default());
    }
    let parse = parses
        .get(&preds.doc_id)
        .ok_or_else(|| Error::Missing(format!("no dependency parse for document {}", preds.doc_id)))?;
    let ontology = ontologies
        .get(&preds.event_type)
        .ok_or_else(|| Error::UnknownEventType(vec![preds.event_type.clone()]))?;
    let labels = ontology.role_dep_labels.as_ref().ok_or_else(|| Error::Ontology {
        event_type: ontology.event_type.clone(),
        message: "no role_dep_labels; syntactic matching needs template dependency labels".into(),
    })?;
    let mut matches = 0;
    let mut total = 0;
    for (role, (s, e), _) in spans {
        let expected = labels.get(role).ok_or_else(|| Error::Ontology {
            event_type: ontology.event_type.clone(),
            message: format!("role {role} has no dependency label"),
        })?;
        if e >= parse.labels.len() {
            return Err(Error::OutOfBounds {
                doc_id: preds.doc_id.clone(),
                start: s,
                end: e,
                len: parse.labels.len(),
            });
        }
        total += 1;
        if parse.span_head_label(s, e) == expected {
            matches += 1;
        }
    }
    Ok(Ratio::new(matches, total))
}

/// Share of predicted arguments whose span-head dependency label equals the
/// label of their role in the ontology template.
pub fn syntactic_match_ratio(
    predictions: &[InstancePredictions],
    parses: &BTreeMap<String, DependencyParse>,
    ontologies: &OntologyRegistry,
) -> Result<Ratio> {
    predictions
        .iter()
        .try_fold(Ratio::default(), |acc, p| Ok(acc.add(syntactic_counts(p, parses, ontologies)?)))
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EventBias {
    pub spurious: Ratio,
    pub syntactic: Option<Ratio>,
}

/// Diagnostics for one prediction set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BiasColumn {
    pub label: String,
    pub spurious: Ratio,
    pub syntactic: Option<Ratio>,
    pub per_event: BTreeMap<String, EventBias>,
}

/// One instance on which the two prediction sets disagree.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseRecord {
    pub instance: InstanceKey,
    pub sentence: String,
    pub trigger: String,
    pub gold: BTreeMap<String, Vec<String>>,
    pub left: BTreeMap<String, Vec<String>>,
    pub right: BTreeMap<String, Vec<String>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BiasReport {
    pub left: BiasColumn,
    pub right: BiasColumn,
    pub cases: Vec<CaseRecord>,
}

impl BiasReport {
    /// The same report with the two prediction sets exchanged.
    pub fn swapped(self) -> BiasReport {
        BiasReport {
            left: self.right,
            right: self.left,
            cases: self
                .cases
                .into_iter()
                .map(|c| CaseRecord {
                    left: c.right,
                    right: c.left,
                    ..c
                })
                .collect(),
        }
    }

    pub fn write_json(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let text = serde_json::to_string_pretty(self).expect("report serializes") + "\n";
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }
}

fn column(
    label: &str,
    preds: &[InstancePredictions],
    corpus: &Corpus,
    syntactic: bool,
) -> Result<BiasColumn> {
    let mut per_event: BTreeMap<String, EventBias> = BTreeMap::new();
    for p in preds {
        let inst = aligned(corpus, p)?;
        let entry = per_event.entry(p.event_type.clone()).or_insert_with(|| EventBias {
            spurious: Ratio::default(),
            syntactic: syntactic.then(Ratio::default),
        });
        entry.spurious = entry.spurious.add(spurious_counts(inst, p));
        if syntactic {
            let r = syntactic_counts(p, &corpus.parses, &corpus.ontologies)?;
            entry.syntactic = entry.syntactic.map(|s| s.add(r));
        }
    }
    let spurious = per_event.values().fold(Ratio::default(), |a, e| a.add(e.spurious));
    let syntactic_total = syntactic.then(|| {
        per_event
            .values()
            .filter_map(|e| e.syntactic)
            .fold(Ratio::default(), Ratio::add)
    });
    Ok(BiasColumn {
        label: label.to_owned(),
        spurious,
        syntactic: syntactic_total,
        per_event,
    })
}

type RoleSpans = BTreeSet<(String, (usize, usize))>;

fn surface(tokens: &[String], (s, e): (usize, usize)) -> String {
    tokens.get(s..=e).map(|t| t.join(" ")).unwrap_or_else(|| format!("<{s}..{e}>"))
}

fn by_role<'a>(
    tokens: &[String],
    spans: impl Iterator<Item = (&'a str, (usize, usize))>,
) -> BTreeMap<String, Vec<String>> {
    let mut out: BTreeMap<String, Vec<String>> = BTreeMap::new();
    for (role, span) in spans {
        out.entry(role.to_owned()).or_default().push(surface(tokens, span));
    }
    out
}

/// Joint diagnostics for two prediction sets over the same instances, plus a
/// case record for every instance where their argument sets differ.
/// Syntactic matching is computed when `syntactic` is set and then requires
/// parses and template labels.
pub fn compare_predictions(
    (left_label, left): (&str, &[InstancePredictions]),
    (right_label, right): (&str, &[InstancePredictions]),
    corpus: &Corpus,
    syntactic: bool,
) -> Result<BiasReport> {
    let left_col = column(left_label, left, corpus, syntactic)?;
    let right_col = column(right_label, right, corpus, syntactic)?;
    let index = |preds: &'_ [InstancePredictions]| -> BTreeMap<InstanceKey, RoleSpans> {
        preds
            .iter()
            .map(|p| (p.key(), p.spans().map(|(r, s, _)| (r.to_owned(), s)).collect()))
            .collect()
    };
    let (li, ri) = (index(left), index(right));
    let keys: BTreeSet<&InstanceKey> = li.keys().chain(ri.keys()).collect();
    let empty = BTreeSet::new();
    let mut cases = Vec::new();
    for key in keys {
        let (l, r) = (li.get(key).unwrap_or(&empty), ri.get(key).unwrap_or(&empty));
        if l == r {
            continue;
        }
        let inst = corpus
            .find(key)
            .ok_or_else(|| Error::Missing(format!("prediction for unknown instance {key}")))?;
        let tokens = &corpus.document(&inst.doc_id)?.tokens;
        let spans = |set: &RoleSpans| {
            by_role(tokens, set.iter().map(|(r, s)| (r.as_str(), *s)).collect::<Vec<_>>().into_iter())
        };
        cases.push(CaseRecord {
            instance: key.clone(),
            sentence: tokens.join(" "),
            trigger: corpus.trigger_text(inst)?,
            gold: by_role(tokens, inst.arguments.iter().map(|a| (a.role.as_str(), (a.start, a.end)))),
            left: spans(l),
            right: spans(r),
        });
    }
    Ok(BiasReport {
        left: left_col,
        right: right_col,
        cases,
    })
}

/// Runs two checkpoints (typically name-based and ontology-based prompts)
/// on `split` and compares them.
pub fn compare_prompt_styles(
    (left_label, left): (&str, &ToyModel),
    (right_label, right): (&str, &ToyModel),
    corpus: &Corpus,
    split: Split,
    clusters: &ClusterSource,
    syntactic: bool,
) -> Result<BiasReport> {
    let instances: Vec<&EventInstance> = corpus.split(split).collect();
    let lp = predict(left, corpus, &instances, clusters)?;
    let rp = predict(right, corpus, &instances, clusters)?;
    compare_predictions((left_label, &lp), (right_label, &rp), corpus, syntactic)
}

/// An alternative prompt template for one event type.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AltPrompt {
    pub event_type: String,
    pub template: String,
}

/// Reads alternative prompts from a JSON array. Ontology files qualify:
/// fields other than `event_type` and `template` are ignored.
pub fn load_alt_prompts(path: impl AsRef<Path>) -> Result<Vec<AltPrompt>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::record(path.display(), e.line(), "alt prompts", e.to_string()))
}

/// Copy of `corpus` whose ontology templates are replaced by `alts`.
///
/// Every event type present in the corpus needs an alternative, and each
/// alternative must mention every argument name of its event type.
pub fn apply_alt_prompts(corpus: &Corpus, alts: &[AltPrompt]) -> Result<Corpus> {
    let mut out = corpus.clone();
    let mut replaced = BTreeSet::new();
    for alt in alts {
        let orig = corpus.ontology(&alt.event_type)?;
        let mut ont = EventOntology::new(&alt.event_type, orig.roles.clone(), alt.template.clone()).map_err(|e| {
            Error::Ontology {
                event_type: alt.event_type.clone(),
                message: format!("alternative prompt must include every argument name ({e})"),
            }
        })?;
        if let Some(labels) = &orig.role_dep_labels {
            ont = ont.with_dep_labels(labels.clone());
        }
        out.ontologies.insert(alt.event_type.clone(), ont);
        replaced.insert(alt.event_type.as_str());
    }
    let missing: Vec<String> = corpus
        .event_types()
        .into_iter()
        .filter(|t| !replaced.contains(t))
        .map(str::to_owned)
        .collect();
    if !missing.is_empty() {
        return Err(Error::Missing(format!("no alternative prompt for {}", missing.join(", "))));
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RobustnessReport {
    pub raw_f1: f64,
    pub perturbed_f1: f64,
    /// `perturbed_f1 - raw_f1` (Arg-C).
    pub delta: f64,
    pub raw: EvalReport,
    pub perturbed: EvalReport,
}

/// Evaluates one checkpoint on `split` under its original prompts and under
/// `alts`.
pub fn robustness_delta(
    model: &ToyModel,
    corpus: &Corpus,
    split: Split,
    alts: &[AltPrompt],
    clusters: &ClusterSource,
) -> Result<RobustnessReport> {
    let perturbed_corpus = apply_alt_prompts(corpus, alts)?;
    let run = |c: &Corpus| -> Result<EvalReport> {
        let instances: Vec<&EventInstance> = c.split(split).collect();
        let preds = predict(model, c, &instances, clusters)?;
        evaluate(&preds, c, Some(split))
    };
    let raw = run(corpus)?;
    let perturbed = run(&perturbed_corpus)?;
    Ok(RobustnessReport {
        raw_f1: raw.arg_c.f1,
        perturbed_f1: perturbed.arg_c.f1,
        delta: perturbed.arg_c.f1 - raw.arg_c.f1,
        raw,
        perturbed,
    })
}

/// Alternative prompts equal to the current templates.
pub fn identity_alt_prompts(ontologies: &OntologyRegistry) -> Vec<AltPrompt> {
    ontologies
        .values()
        .map(|o| AltPrompt {
            event_type: o.event_type.clone(),
            template: o.template.clone(),
        })
        .collect()
}
