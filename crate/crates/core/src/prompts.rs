//! Prompt construction and the prompt-cluster confounder distribution.
//!
//! Name-based prompts concatenate role names; ontology-based prompts copy the
//! ontology template. A [`PromptCluster`] holds generated paraphrases of the
//! template for one instance, weighted by a softmax over their generation
//! log-likelihoods. Those weights are the strata weights of the backdoor
//! adjustment carried out by the model's mixture.

use std::collections::{BTreeMap, BTreeSet};
use std::io::BufRead;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{find_role, tokenize, Corpus, EventInstance, EventOntology, InstanceKey, TriggerSpan};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PromptStyle {
    NameBased,
    #[default]
    OntologyBased,
    Generated,
}

impl std::str::FromStr for PromptStyle {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "name" | "name_based" | "name-based" => Ok(PromptStyle::NameBased),
            "ontology" | "ontology_based" | "ontology-based" => Ok(PromptStyle::OntologyBased),
            "generated" => Ok(PromptStyle::Generated),
            other => Err(Error::InvalidArgument(format!("unknown prompt style {other}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prompt {
    pub event_type: String,
    pub tokens: Vec<String>,
    /// Inclusive token range of each role name inside `tokens`.
    pub role_slots: BTreeMap<String, (usize, usize)>,
    pub style: PromptStyle,
}

impl Prompt {
    pub fn text(&self) -> String {
        self.tokens.join(" ")
    }

    pub fn slot(&self, role: &str) -> Option<(usize, usize)> {
        self.role_slots.get(role).copied()
    }
}

pub fn build_name_prompt(ontology: &EventOntology) -> Prompt {
    let mut tokens = Vec::new();
    let mut role_slots = BTreeMap::new();
    for role in &ontology.roles {
        let start = tokens.len();
        tokens.extend(tokenize(role));
        role_slots.insert(role.clone(), (start, tokens.len() - 1));
    }
    Prompt {
        event_type: ontology.event_type.clone(),
        tokens,
        role_slots,
        style: PromptStyle::NameBased,
    }
}

pub fn build_ontology_prompt(ontology: &EventOntology) -> Prompt {
    Prompt {
        event_type: ontology.event_type.clone(),
        tokens: ontology.template_tokens(),
        role_slots: ontology.slots().clone(),
        style: PromptStyle::OntologyBased,
    }
}

pub fn build_prompt(ontology: &EventOntology, style: PromptStyle) -> Prompt {
    match style {
        PromptStyle::NameBased => build_name_prompt(ontology),
        _ => build_ontology_prompt(ontology),
    }
}

/// Parses free prompt text, assigning each role the first occurrence of its
/// name that does not overlap a longer role name already placed.
pub fn prompt_from_text(ontology: &EventOntology, text: &str, style: PromptStyle) -> Result<Prompt> {
    let tokens = tokenize(text);
    let mut roles: Vec<&String> = ontology.roles.iter().collect();
    roles.sort_by_key(|r| std::cmp::Reverse(r.split_whitespace().count()));
    let mut role_slots = BTreeMap::new();
    let mut taken: Vec<(usize, usize)> = Vec::new();
    for role in roles {
        let slot = find_role(&tokens, role)
            .into_iter()
            .find(|&(s, e)| taken.iter().all(|&(ts, te)| e < ts || s > te))
            .ok_or_else(|| Error::Cluster(format!("prompt {text:?} has no slot for role {role}")))?;
        taken.push(slot);
        role_slots.insert(role.clone(), slot);
    }
    Ok(Prompt {
        event_type: ontology.event_type.clone(),
        tokens,
        role_slots,
        style,
    })
}

/// Softmax over generation log-likelihoods, shifted by the maximum.
pub fn normalize_cluster_weights(logliks: &[f64]) -> Result<Vec<f64>> {
    if logliks.is_empty() {
        return Err(Error::Cluster("cannot normalize an empty cluster".into()));
    }
    if let Some(bad) = logliks.iter().find(|l| !l.is_finite()) {
        return Err(Error::Cluster(format!("non-finite log-likelihood {bad}")));
    }
    let max = logliks.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logliks.iter().map(|l| (l - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    Ok(exps.into_iter().map(|e| e / total).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PromptCluster {
    pub instance_key: InstanceKey,
    pub prompts: Vec<Prompt>,
    pub logliks: Vec<f64>,
    pub weights: Vec<f64>,
}

impl PromptCluster {
    pub fn new(instance_key: InstanceKey, prompts: Vec<Prompt>, logliks: Vec<f64>) -> Result<Self> {
        if prompts.len() != logliks.len() {
            return Err(Error::Cluster(format!(
                "{} prompts but {} log-likelihoods",
                prompts.len(),
                logliks.len()
            )));
        }
        let weights = normalize_cluster_weights(&logliks)?;
        Ok(PromptCluster {
            instance_key,
            prompts,
            logliks,
            weights,
        })
    }

    pub fn len(&self) -> usize {
        self.prompts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.prompts.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Prompt, f64)> {
        self.prompts.iter().zip(self.weights.iter().copied())
    }
}

/// One line of a cluster file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterRecord {
    pub doc_id: String,
    pub trigger: TriggerSpan,
    pub event_type: String,
    pub prompt_text: String,
    pub loglik: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trigger_lemma: Option<String>,
}

impl ClusterRecord {
    pub fn key(&self) -> InstanceKey {
        InstanceKey {
            doc_id: self.doc_id.clone(),
            trigger: self.trigger,
            event_type: self.event_type.clone(),
        }
    }
}

/// Generated prompts must mention the trigger (surface form, or lemma when one
/// is supplied) and every role name of the ontology.
pub fn check_coverage(
    text: &str,
    trigger_surface: &str,
    trigger_lemma: Option<&str>,
    roles: &[String],
) -> std::result::Result<(), String> {
    let hay = text.to_lowercase();
    let has_trigger = hay.contains(&trigger_surface.to_lowercase())
        || trigger_lemma.is_some_and(|l| hay.contains(&l.to_lowercase()));
    if !has_trigger {
        return Err(format!("trigger {trigger_surface:?} not covered"));
    }
    match roles.iter().find(|r| !hay.contains(&r.to_lowercase())) {
        Some(role) => Err(format!("role {role:?} not covered")),
        None => Ok(()),
    }
}

/// All records of a cluster file, grouped by instance.
#[derive(Debug, Clone, Default)]
pub struct ClusterIndex {
    records: BTreeMap<InstanceKey, Vec<ClusterRecord>>,
}

impl ClusterIndex {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        let mut index = ClusterIndex::default();
        for (i, line) in std::io::BufReader::new(file).lines().enumerate() {
            let line = line.map_err(|e| Error::io(path, e))?;
            if line.trim().is_empty() {
                continue;
            }
            let rec: ClusterRecord = serde_json::from_str(&line)
                .map_err(|e| Error::record(path.display(), i + 1, "cluster record", e.to_string()))?;
            index.insert(rec);
        }
        Ok(index)
    }

    pub fn insert(&mut self, record: ClusterRecord) {
        self.records.entry(record.key()).or_default().push(record);
    }

    pub fn records(&self, key: &InstanceKey) -> &[ClusterRecord] {
        self.records.get(key).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn keys(&self) -> impl Iterator<Item = &InstanceKey> {
        self.records.keys()
    }

    /// Validated cluster for `instance`; candidates failing the coverage
    /// constraint are dropped with a warning before normalization.
    pub fn cluster_for(&self, instance: &EventInstance, corpus: &Corpus) -> Result<PromptCluster> {
        let key = instance.key();
        let records = self.records(&key);
        if records.is_empty() {
            return Err(Error::Cluster(format!(
                "no generated prompts for {key}; use the ontology prompt alone (lambda = 1)"
            )));
        }
        let ontology = corpus.ontology(&instance.event_type)?;
        let surface = corpus.trigger_text(instance)?;
        let mut prompts = Vec::new();
        let mut logliks = Vec::new();
        for rec in records {
            let accepted = check_coverage(
                &rec.prompt_text,
                &surface,
                rec.trigger_lemma.as_deref(),
                &ontology.roles,
            )
            .and_then(|()| {
                prompt_from_text(ontology, &rec.prompt_text, PromptStyle::Generated)
                    .map_err(|e| e.to_string())
            });
            match accepted {
                Ok(prompt) => {
                    prompts.push(prompt);
                    logliks.push(rec.loglik);
                }
                Err(why) => log::warn!("{key}: rejected generated prompt {:?}: {why}", rec.prompt_text),
            }
        }
        if prompts.is_empty() {
            return Err(Error::Cluster(format!(
                "every generated prompt for {key} failed the coverage check; \
                 use the ontology prompt alone (lambda = 1)"
            )));
        }
        PromptCluster::new(key, prompts, logliks)
    }
}

pub fn load_prompt_cluster(
    path: impl AsRef<Path>,
    instance: &EventInstance,
    corpus: &Corpus,
) -> Result<PromptCluster> {
    ClusterIndex::load(path)?.cluster_for(instance, corpus)
}

/// Template split into clauses, each ending at a role slot. Trailing tokens
/// after the last role join the final clause.
pub fn template_clauses(ontology: &EventOntology) -> Vec<Vec<String>> {
    let tokens = ontology.template_tokens();
    let ends: BTreeSet<usize> = ontology.slots().values().map(|&(_, e)| e).collect();
    let mut clauses: Vec<Vec<String>> = Vec::new();
    let mut current = Vec::new();
    for (i, tok) in tokens.into_iter().enumerate() {
        current.push(tok);
        if ends.contains(&i) {
            clauses.push(std::mem::take(&mut current));
        }
    }
    if !current.is_empty() {
        match clauses.last_mut() {
            Some(last) => last.extend(current),
            None => clauses.push(current),
        }
    }
    clauses
}

fn stable_hash(text: &str) -> u64 {
    use sha2::{Digest, Sha256};
    let digest = Sha256::digest(text.as_bytes());
    u64::from_le_bytes(digest[..8].try_into().expect("8 bytes"))
}

/// Deterministic stand-in for the external keywords-to-sentence generator.
///
/// Prompt 0 keeps the template's clause order; the others shuffle clauses with
/// a generator seeded from `seed` and the instance key. The trigger surface
/// form is prepended to every prompt. Log-likelihoods are the negated token
/// edit distance to the template.
pub fn stub_generate_cluster(
    ontology: &EventOntology,
    instance: &EventInstance,
    trigger_surface: &str,
    k: usize,
    seed: u64,
) -> Result<PromptCluster> {
    if k == 0 {
        return Err(Error::InvalidArgument("stub cluster size k must be >= 1".into()));
    }
    let key = instance.key();
    let template = ontology.template_tokens();
    let clauses = template_clauses(ontology);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stable_hash(&key.to_string()));
    let mut order: Vec<usize> = (0..clauses.len()).collect();
    let mut prompts = Vec::with_capacity(k);
    let mut logliks = Vec::with_capacity(k);
    for i in 0..k {
        if i > 0 {
            order.shuffle(&mut rng);
        }
        let mut tokens = tokenize(trigger_surface);
        for &c in &order {
            tokens.extend(clauses[c].iter().cloned());
        }
        let distance = strsim::generic_levenshtein(&tokens, &template);
        let prompt = prompt_from_text(ontology, &tokens.join(" "), PromptStyle::Generated)?;
        prompts.push(prompt);
        logliks.push(-(distance as f64));
    }
    PromptCluster::new(key, prompts, logliks)
}

/// Where the generated prompts of each instance come from.
#[derive(Debug, Clone, Default)]
pub enum ClusterSource {
    /// Ontology (or name) prompt only.
    #[default]
    None,
    File(ClusterIndex),
    Stub { k: usize, seed: u64 },
}

impl ClusterSource {
    pub fn cluster_for(&self, instance: &EventInstance, corpus: &Corpus) -> Result<Option<PromptCluster>> {
        match self {
            ClusterSource::None => Ok(None),
            ClusterSource::File(index) => index.cluster_for(instance, corpus).map(Some),
            ClusterSource::Stub { k, seed } => {
                let ontology = corpus.ontology(&instance.event_type)?;
                let surface = corpus.trigger_text(instance)?;
                stub_generate_cluster(ontology, instance, &surface, *k, *seed).map(Some)
            }
        }
    }

    pub fn is_none(&self) -> bool {
        matches!(self, ClusterSource::None)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Split;

    fn comm() -> EventOntology {
        EventOntology::new(
            "comm",
            vec!["communicator".into(), "recipient".into(), "place".into()],
            "communicator communicated remotely with recipient about topic at place",
        )
        .unwrap()
    }

    fn hire() -> EventOntology {
        EventOntology::new(
            "hire",
            vec!["employee".into(), "placeofemployment".into(), "place".into()],
            "employee started working at placeofemployment in place",
        )
        .unwrap()
    }

    fn instance() -> EventInstance {
        EventInstance {
            doc_id: "d".into(),
            event_type: "comm".into(),
            trigger: TriggerSpan { start: 3, end: 3 },
            arguments: vec![],
            context_window: None,
            split: Split::Train,
        }
    }

    #[test]
    fn name_prompts() {
        let ont = EventOntology::new(
            "comm",
            vec!["recipient".into(), "communicator".into(), "place".into()],
            "communicator communicated remotely with recipient about topic at place",
        )
        .unwrap();
        assert_eq!(build_name_prompt(&ont).text(), "recipient communicator place");
        assert_eq!(build_name_prompt(&hire()).text(), "employee placeofemployment place");
        let single = EventOntology::new("x", vec!["place".into()], "at place").unwrap();
        let p = build_name_prompt(&single);
        assert_eq!(p.text(), "place");
        assert_eq!(p.slot("place"), Some((0, 0)));
    }

    #[test]
    fn ontology_prompts() {
        assert_eq!(
            build_ontology_prompt(&comm()).text(),
            "communicator communicated remotely with recipient about topic at place"
        );
        let p = build_ontology_prompt(&hire());
        assert_eq!(p.text(), "employee started working at placeofemployment in place");
        assert_eq!(p.slot("placeofemployment"), Some((4, 4)));
        assert_eq!(p.slot("place"), Some((6, 6)));
    }

    #[test]
    fn degenerate_template_matches_name_prompt() {
        let ont = EventOntology::new("x", vec!["a".into(), "b".into()], "a b").unwrap();
        let name = build_name_prompt(&ont);
        let onto = build_ontology_prompt(&ont);
        assert_eq!(name.tokens, onto.tokens);
        assert_eq!(name.role_slots, onto.role_slots);
    }

    #[test]
    fn softmax_examples() {
        let w = normalize_cluster_weights(&[0.0, 0.0, 0.0]).unwrap();
        for x in w {
            assert!((x - 1.0 / 3.0).abs() < 1e-12);
        }
        let w = normalize_cluster_weights(&[2f64.ln(), 0.0, 0.0]).unwrap();
        assert!((w[0] - 0.5).abs() < 1e-12 && (w[1] - 0.25).abs() < 1e-12);
        assert_eq!(normalize_cluster_weights(&[-5.2]).unwrap(), vec![1.0]);
        assert!(normalize_cluster_weights(&[]).is_err());
        assert!(normalize_cluster_weights(&[f64::NAN]).is_err());
        assert!(normalize_cluster_weights(&[f64::INFINITY, 0.0]).is_err());
    }

    #[test]
    fn coverage_rule() {
        let roles = comm().roles;
        assert!(check_coverage("urge communicator recipient place", "urge", None, &roles).is_ok());
        assert!(check_coverage("urge communicator recipient", "urge", None, &roles).is_err());
        assert!(check_coverage("urged communicator recipient place", "urging", Some("urge"), &roles).is_ok());
        assert!(check_coverage("communicator recipient place", "urge", None, &roles).is_err());
    }

    #[test]
    fn stub_singleton_is_template_with_trigger() {
        let c = stub_generate_cluster(&comm(), &instance(), "urge", 1, 7).unwrap();
        assert_eq!(c.weights, vec![1.0]);
        assert_eq!(
            c.prompts[0].text(),
            "urge communicator communicated remotely with recipient about topic at place"
        );
    }

    #[test]
    fn stub_is_deterministic_and_covered() {
        let a = stub_generate_cluster(&comm(), &instance(), "urge", 3, 11).unwrap();
        let b = stub_generate_cluster(&comm(), &instance(), "urge", 3, 11).unwrap();
        assert_eq!(a, b);
        for p in &a.prompts {
            check_coverage(&p.text(), "urge", None, &comm().roles).unwrap();
            assert_eq!(p.role_slots.len(), 3);
        }
        let total: f64 = a.weights.iter().sum();
        assert!((total - 1.0).abs() < 1e-9);
    }

    #[test]
    fn clauses_end_at_roles() {
        let clauses = template_clauses(&comm());
        let texts: Vec<String> = clauses.iter().map(|c| c.join(" ")).collect();
        assert_eq!(
            texts,
            vec!["communicator", "communicated remotely with recipient", "about topic at place"]
        );
    }

    #[test]
    fn overlapping_role_names_get_distinct_slots() {
        let p = prompt_from_text(&hire(), "place employee placeofemployment", PromptStyle::Generated).unwrap();
        assert_eq!(p.slot("place"), Some((0, 0)));
        assert_eq!(p.slot("placeofemployment"), Some((2, 2)));
    }
}
