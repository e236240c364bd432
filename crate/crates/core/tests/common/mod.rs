//! Independent oracles and fixture builders shared by the test targets.
#![allow(dead_code)]

use std::collections::BTreeMap;

use deae::corpus::{
    registry_from, ArgumentAnnotation, Corpus, Document, EventInstance, EventOntology, Split, TriggerSpan,
};
use deae::model::{GoldSlots, PipelineInputs, SpanDistributions, ToyModel, NO_ARGUMENT};

/// Enumerates every candidate (sentinel first, then by start and end) and
/// keeps the first one with the highest score.
pub fn brute_decode(dist: &SpanDistributions, max_len: usize) -> ((usize, usize), f64) {
    let n = dist.p_start.len();
    let mut candidates = vec![NO_ARGUMENT];
    for s in 1..n {
        for e in s..n {
            if e - s < max_len {
                candidates.push((s, e));
            }
        }
    }
    let score = |(s, e): (usize, usize)| dist.p_start[s].ln() + dist.p_end[e].ln();
    let mut best = candidates[0];
    for &c in &candidates[1..] {
        if score(c) > score(best) {
            best = c;
        }
    }
    (best, score(best))
}

/// Size of a maximum matching between `left` and `right` under `compatible`,
/// by trying every injective assignment.
pub fn max_matching<L, R>(left: &[L], right: &[R], compatible: &dyn Fn(&L, &R) -> bool) -> usize {
    fn go<L, R>(i: usize, left: &[L], right: &[R], used: &mut [bool], f: &dyn Fn(&L, &R) -> bool) -> usize {
        if i == left.len() {
            return 0;
        }
        let mut best = go(i + 1, left, right, used, f);
        for j in 0..right.len() {
            if !used[j] && f(&left[i], &right[j]) {
                used[j] = true;
                best = best.max(1 + go(i + 1, left, right, used, f));
                used[j] = false;
            }
        }
        best
    }
    go(0, left, right, &mut vec![false; right.len()], compatible)
}

/// Leftmost token of `[s, e]` whose governor is outside the span or absent.
pub fn head_oracle(heads: &[i64], s: usize, e: usize) -> usize {
    for (i, &h) in heads.iter().enumerate().take(e + 1).skip(s) {
        let inside = h >= 0 && (h as usize) != i && (h as usize) >= s && (h as usize) <= e;
        if !inside {
            return i;
        }
    }
    s
}

/// `(doc_id, tokens, event_type, trigger, arguments)`
pub type InstanceSpec<'a> = (String, Vec<String>, &'a str, (usize, usize), Vec<ArgumentAnnotation>);

/// Corpus of single-document instances, one ontology per event type with
/// the given roles.
pub fn corpus_from(ontologies: Vec<EventOntology>, instances: Vec<InstanceSpec<'_>>) -> Corpus {
    let mut corpus = Corpus {
        ontologies: registry_from(ontologies).unwrap(),
        ..Default::default()
    };
    for (doc_id, tokens, event_type, (s, e), arguments) in instances {
        corpus.documents.insert(doc_id.clone(), Document { doc_id: doc_id.clone(), tokens });
        corpus.instances.push(EventInstance {
            doc_id,
            event_type: event_type.into(),
            trigger: TriggerSpan { start: s, end: e },
            arguments,
            context_window: None,
            split: Split::Test,
        });
    }
    corpus
}

pub fn arg(role: &str, start: usize, end: usize) -> ArgumentAnnotation {
    ArgumentAnnotation {
        role: role.into(),
        start,
        end,
        head_index: None,
    }
}

pub fn words(text: &str) -> Vec<String> {
    text.split_whitespace().map(str::to_owned).collect()
}

/// Largest relative error between the analytic gradient and central finite
/// differences, over every scalar of every parameter. Relative error is
/// `|a - n| / max(|a|, |n|, floor)`.
pub fn gradient_check(
    model: &ToyModel,
    inputs: &PipelineInputs<'_>,
    assignment: &GoldSlots,
    step: f64,
    floor: f64,
) -> (f64, String, usize) {
    let (_, grads) = model.loss_with_assignment(inputs, assignment, true).unwrap();
    let grads = grads.unwrap();
    let mut worst = (0.0, String::new(), 0usize);
    let mut probe = model.clone();
    for id in 0..model.params.len() {
        let n = model.params.by_id(id).data.len();
        for k in 0..n {
            let orig = model.params.by_id(id).data[k];
            probe.params.by_id_mut(id).data[k] = orig + step;
            let plus = probe.loss_with_assignment(inputs, assignment, false).unwrap().0;
            probe.params.by_id_mut(id).data[k] = orig - step;
            let minus = probe.loss_with_assignment(inputs, assignment, false).unwrap().0;
            probe.params.by_id_mut(id).data[k] = orig;
            let numeric = (plus - minus) / (2.0 * step);
            let analytic = grads.by_id.get(&id).map_or(0.0, |g| g.data[k]);
            let rel = (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(floor);
            if rel > worst.0 {
                worst = (rel, model.params.name(id).to_owned(), k);
            }
        }
    }
    worst
}

/// Gold spans per role, as `InstanceBatchItem` stores them.
pub fn gold_map(pairs: &[(&str, (usize, usize))]) -> BTreeMap<String, Vec<(usize, usize)>> {
    let mut m: BTreeMap<String, Vec<(usize, usize)>> = BTreeMap::new();
    for (r, s) in pairs {
        m.entry(r.to_string()).or_default().push(*s);
    }
    m
}
