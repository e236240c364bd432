//! Argument-level scoring: Arg-I (exact offsets), Arg-C (offsets and role)
//! and Head-C (head token and role), micro-averaged.
//!
//! Within an instance, predictions are visited by descending score (then
//! start, end, role) and each consumes the first still-unmatched gold
//! argument it is compatible with. Compatibility is an equivalence relation
//! for every metric, so this greedy pass attains the maximum matching.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::{self, Write as _};
use std::io::{BufRead, Write};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, DependencyParse, EventInstance, InstanceKey, Split};
use crate::error::{Error, Result};
use crate::model::{extract, InstancePredictions, PromptInput, ToyModel};
use crate::prompts::{build_prompt, ClusterSource};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counts {
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

impl Counts {
    pub fn add(&mut self, other: Counts) {
        self.tp += other.tp;
        self.fp += other.fp;
        self.fn_ += other.fn_;
    }

    /// Precision, recall and F1; an empty denominator gives 0.
    pub fn prf(&self) -> Prf {
        let ratio = |num: usize, den: usize| if den == 0 { 0.0 } else { num as f64 / den as f64 };
        let precision = ratio(self.tp, self.tp + self.fp);
        let recall = ratio(self.tp, self.tp + self.fn_);
        let f1 = if precision + recall == 0.0 {
            0.0
        } else {
            2.0 * precision * recall / (precision + recall)
        };
        Prf { precision, recall, f1 }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Prf {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MetricCounts {
    pub arg_i: Counts,
    pub arg_c: Counts,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub head_c: Option<Counts>,
}

impl MetricCounts {
    fn add(&mut self, other: &MetricCounts) {
        self.arg_i.add(other.arg_i);
        self.arg_c.add(other.arg_c);
        self.head_c = match (self.head_c, other.head_c) {
            (Some(mut a), Some(b)) => {
                a.add(b);
                Some(a)
            }
            _ => None,
        };
    }
}

/// Scores for one slice of the data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scores {
    pub arg_i: Prf,
    pub arg_c: Prf,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub head_c: Option<Prf>,
    pub counts: MetricCounts,
    pub instances: usize,
}

impl Scores {
    fn from_counts(counts: MetricCounts, instances: usize) -> Self {
        Scores {
            arg_i: counts.arg_i.prf(),
            arg_c: counts.arg_c.prf(),
            head_c: counts.head_c.map(|c| c.prf()),
            counts,
            instances,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub arg_i: Prf,
    pub arg_c: Prf,
    /// Present only when every gold argument has a resolvable head.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub head_c: Option<Prf>,
    pub counts: MetricCounts,
    pub instances: usize,
    pub per_event_type: BTreeMap<String, Scores>,
}

impl EvalReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn write_json(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json() + "\n").map_err(|e| Error::io(path, e))
    }

    /// Aligned plain-text table, percentages with one decimal.
    pub fn to_table(&self) -> String {
        let mut rows = vec![(
            "ALL".to_owned(),
            Scores {
                arg_i: self.arg_i,
                arg_c: self.arg_c,
                head_c: self.head_c,
                counts: self.counts,
                instances: self.instances,
            },
        )];
        rows.extend(self.per_event_type.iter().map(|(k, v)| (k.clone(), v.clone())));
        let width = rows.iter().map(|(k, _)| k.len()).max().unwrap_or(0).max("event type".len());
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{:<width$}  {:>5}  {:>6} {:>6} {:>6}  {:>6} {:>6} {:>6}  {:>6}",
            "event type", "inst", "ArgI-P", "ArgI-R", "ArgI-F", "ArgC-P", "ArgC-R", "ArgC-F", "HeadC-F"
        );
        for (name, s) in rows {
            let pct = |x: f64| format!("{:.1}", 100.0 * x);
            let head = s.head_c.map(|p| pct(p.f1)).unwrap_or_else(|| "-".into());
            let _ = writeln!(
                out,
                "{:<width$}  {:>5}  {:>6} {:>6} {:>6}  {:>6} {:>6} {:>6}  {:>6}",
                name,
                s.instances,
                pct(s.arg_i.precision),
                pct(s.arg_i.recall),
                pct(s.arg_i.f1),
                pct(s.arg_c.precision),
                pct(s.arg_c.recall),
                pct(s.arg_c.f1),
                head
            );
        }
        out
    }
}

impl fmt::Display for EvalReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_table())
    }
}

/// A predicted or gold argument reduced to what the metrics look at.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoredSpan {
    pub role: String,
    pub span: (usize, usize),
    pub head: Option<usize>,
    pub score: f64,
}

/// Head token of a span: the syntactic head when a parse is available,
/// otherwise the rightmost token.
pub fn span_head(parse: Option<&DependencyParse>, (start, end): (usize, usize)) -> usize {
    parse.map_or(end, |p| p.span_head(start, end))
}

/// Matching counts for one instance. Heads are compared only when
/// `with_heads` is set; gold heads must then all be present.
pub fn score_instance(preds: &[ScoredSpan], gold: &[ScoredSpan], with_heads: bool) -> MetricCounts {
    let mut order: Vec<&ScoredSpan> = preds.iter().collect();
    order.sort_by(|a, b| {
        b.score
            .total_cmp(&a.score)
            .then(a.span.cmp(&b.span))
            .then(a.role.cmp(&b.role))
    });
    let count = |compatible: &dyn Fn(&ScoredSpan, &ScoredSpan) -> bool| {
        let mut used = vec![false; gold.len()];
        let mut tp = 0;
        for p in &order {
            if let Some(j) = (0..gold.len()).find(|&j| !used[j] && compatible(p, &gold[j])) {
                used[j] = true;
                tp += 1;
            }
        }
        Counts {
            tp,
            fp: preds.len() - tp,
            fn_: gold.len() - tp,
        }
    };
    MetricCounts {
        arg_i: count(&|p, g| p.span == g.span),
        arg_c: count(&|p, g| p.span == g.span && p.role == g.role),
        head_c: with_heads.then(|| count(&|p, g| p.role == g.role && p.head.is_some() && p.head == g.head)),
    }
}

fn gold_spans(corpus: &Corpus, inst: &EventInstance) -> Vec<ScoredSpan> {
    let parse = corpus.parses.get(&inst.doc_id);
    inst.arguments
        .iter()
        .map(|a| ScoredSpan {
            role: a.role.clone(),
            span: (a.start, a.end),
            head: a.head_index.or_else(|| parse.map(|p| p.span_head(a.start, a.end))),
            score: 0.0,
        })
        .collect()
}

/// Scores `predictions` against the gold instances of `split` (all
/// instances when `None`). Gold instances without a prediction record count
/// as predicting nothing.
pub fn evaluate(predictions: &[InstancePredictions], corpus: &Corpus, split: Option<Split>) -> Result<EvalReport> {
    let gold: Vec<&EventInstance> = corpus
        .instances
        .iter()
        .filter(|i| split.is_none_or(|s| i.split == s))
        .collect();
    let gold_keys: BTreeSet<InstanceKey> = gold.iter().map(|i| i.key()).collect();
    let mut by_key: BTreeMap<InstanceKey, &InstancePredictions> = BTreeMap::new();
    for p in predictions {
        let key = p.key();
        if !gold_keys.contains(&key) {
            return Err(Error::Missing(format!("prediction for unknown instance {key}")));
        }
        if by_key.insert(key.clone(), p).is_some() {
            return Err(Error::InvalidArgument(format!("duplicate predictions for instance {key}")));
        }
    }

    let gold_args: Vec<Vec<ScoredSpan>> = gold.iter().map(|i| gold_spans(corpus, i)).collect();
    let n_args: usize = gold_args.iter().map(Vec::len).sum();
    let with_heads = n_args > 0 && gold_args.iter().flatten().all(|a| a.head.is_some());

    let mut total = MetricCounts {
        head_c: with_heads.then(Counts::default),
        ..Default::default()
    };
    let mut per_type: BTreeMap<String, (MetricCounts, usize)> = BTreeMap::new();
    for (inst, gold) in gold.iter().zip(&gold_args) {
        let parse = corpus.parses.get(&inst.doc_id);
        let preds: Vec<ScoredSpan> = by_key
            .get(&inst.key())
            .map(|p| {
                p.spans()
                    .map(|(role, span, score)| ScoredSpan {
                        role: role.to_owned(),
                        span,
                        head: Some(span_head(parse, span)),
                        score,
                    })
                    .collect()
            })
            .unwrap_or_default();
        let counts = score_instance(&preds, gold, with_heads);
        total.add(&counts);
        let entry = per_type.entry(inst.event_type.clone()).or_insert_with(|| {
            (
                MetricCounts {
                    head_c: with_heads.then(Counts::default),
                    ..Default::default()
                },
                0,
            )
        });
        entry.0.add(&counts);
        entry.1 += 1;
    }
    let overall = Scores::from_counts(total, gold.len());
    Ok(EvalReport {
        arg_i: overall.arg_i,
        arg_c: overall.arg_c,
        head_c: overall.head_c,
        counts: overall.counts,
        instances: overall.instances,
        per_event_type: per_type
            .into_iter()
            .map(|(k, (c, n))| (k, Scores::from_counts(c, n)))
            .collect(),
    })
}

/// Runs extraction over `instances` in parallel; output order follows input
/// order.
pub fn predict(
    model: &ToyModel,
    corpus: &Corpus,
    instances: &[&EventInstance],
    clusters: &ClusterSource,
) -> Result<Vec<InstancePredictions>> {
    let config = &model.config;
    instances
        .par_iter()
        .map(|inst| {
            let ontology = corpus.ontology(&inst.event_type)?;
            let doc = corpus.document(&inst.doc_id)?;
            let prompt = build_prompt(ontology, config.prompt_style);
            let cluster = if config.lambda < 1.0 {
                clusters.cluster_for(inst, corpus)?
            } else {
                None
            };
            let input = PromptInput {
                prompt: &prompt,
                cluster: cluster.as_ref(),
            };
            extract(model, doc, inst, ontology, input, config)
        })
        .collect()
}

/// Extracts on `split`, scores the result, and returns both.
pub fn run_eval(
    model: &ToyModel,
    corpus: &Corpus,
    split: Split,
    clusters: &ClusterSource,
) -> Result<(EvalReport, Vec<InstancePredictions>)> {
    let instances: Vec<&EventInstance> = corpus.split(split).collect();
    let preds = predict(model, corpus, &instances, clusters)?;
    let report = evaluate(&preds, corpus, Some(split))?;
    Ok((report, preds))
}

pub fn write_predictions(preds: &[InstancePredictions], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = std::io::BufWriter::new(file);
    for p in preds {
        writeln!(out, "{}", serde_json::to_string(p).expect("predictions serialize")).map_err(|e| Error::io(path, e))?;
    }
    out.flush().map_err(|e| Error::io(path, e))
}

pub fn read_predictions(path: impl AsRef<Path>) -> Result<Vec<InstancePredictions>> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut preds = Vec::new();
    for (i, line) in std::io::BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let rec = serde_json::from_str(&line).map_err(|e| Error::record(path.display(), i + 1, "predictions", e.to_string()))?;
        preds.push(rec);
    }
    Ok(preds)
}
