//! The extraction core.
//!
//! An encoder-decoder backbone produces the instance states `H_X` and, for
//! each prompt, prompt states decoded against the encoder memory. Each role's
//! representation is the mean of its slot states; with a prompt cluster the
//! representation becomes the convex mixture
//! `λ·φ(orig) + (1-λ)·Σ wᵢ·φ(clusterᵢ)`. Role-specific selectors turn that
//! representation into start/end distributions over `[sentinel; H_X]`.

pub mod graph;
pub mod params;
mod pipeline;
pub mod span;
pub mod states;
pub mod tensor;
pub mod toy;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::corpus::{Document, EventInstance, EventOntology, InstanceKey, TriggerSpan, DEFAULT_MAX_INPUT_LENGTH};
use crate::error::{Error, Result};
use crate::prompts::{Prompt, PromptCluster, PromptStyle};

pub use pipeline::{GoldSlots, InstanceBatchItem, PipelineInputs};
pub use span::{
    assign_gold_to_slots, best_span, decode_spans, span_distributions, span_loss, Prediction, RoleSelector,
    SpanDistributions, MAX_SLOTS_PER_ROLE, NO_ARGUMENT,
};
pub use states::{debias_mixture, role_representation, HiddenStates};
pub use toy::{Checkpoint, ToyModel, Vocab};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ModelConfig {
    pub h: usize,
    pub lambda: f64,
    pub max_span_length: usize,
    pub max_input_length: usize,
    pub seed: u64,
    /// Roles not listed get one slot.
    pub slots_per_role: BTreeMap<String, usize>,
    pub prompt_style: PromptStyle,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            h: 32,
            lambda: 1.0,
            max_span_length: 10,
            max_input_length: DEFAULT_MAX_INPUT_LENGTH,
            seed: 42,
            slots_per_role: BTreeMap::new(),
            prompt_style: PromptStyle::OntologyBased,
        }
    }
}

impl ModelConfig {
    pub fn validate(&self) -> Result<()> {
        if self.h == 0 || self.max_span_length == 0 || self.max_input_length == 0 {
            return Err(Error::InvalidArgument(
                "h, max_span_length and max_input_length must be positive".into(),
            ));
        }
        if !(0.0..=1.0).contains(&self.lambda) {
            return Err(Error::InvalidArgument(format!("lambda {} outside [0,1]", self.lambda)));
        }
        if let Some((role, n)) = self
            .slots_per_role
            .iter()
            .find(|(_, &n)| n == 0 || n > MAX_SLOTS_PER_ROLE)
        {
            return Err(Error::InvalidArgument(format!(
                "role {role}: {n} slots, allowed 1..={MAX_SLOTS_PER_ROLE}"
            )));
        }
        Ok(())
    }

    pub fn slots_for(&self, role: &str) -> usize {
        self.slots_per_role.get(role).copied().unwrap_or(1)
    }
}

/// What the decoder consumes: hidden states (`H_X` pass) or prompt tokens.
pub enum DecoderTarget<'a> {
    States(&'a HiddenStates),
    Tokens(&'a [String]),
}

/// Backbone contract. Implementations must be deterministic given their
/// parameters, and `decode` must return one state per target position.
pub trait EncoderDecoder {
    fn hidden_size(&self) -> usize;

    /// `H_X^enc` for the window tokens; `trigger` is window-relative.
    fn encode(&self, tokens: &[String], trigger: (usize, usize)) -> Result<HiddenStates>;

    fn decode(&self, target: DecoderTarget<'_>, memory: &HiddenStates) -> Result<HiddenStates>;
}

/// Span-selection parameters attached to a backbone.
pub trait SpanHead {
    fn selector(&self, role: &str, slot: usize) -> Result<RoleSelector>;
    fn sentinel(&self) -> Vec<f64>;
    fn slots_for(&self, role: &str) -> usize;
}

/// Original prompt plus, optionally, its generated cluster.
#[derive(Debug, Clone, Copy)]
pub struct PromptInput<'a> {
    pub prompt: &'a Prompt,
    pub cluster: Option<&'a PromptCluster>,
}

/// Predictions for one instance, as written to prediction files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstancePredictions {
    pub doc_id: String,
    pub event_type: String,
    pub trigger: TriggerSpan,
    pub predictions: Vec<Prediction>,
}

impl InstancePredictions {
    pub fn key(&self) -> InstanceKey {
        InstanceKey {
            doc_id: self.doc_id.clone(),
            trigger: self.trigger,
            event_type: self.event_type.clone(),
        }
    }

    /// Predictions that name a span.
    pub fn spans(&self) -> impl Iterator<Item = (&str, (usize, usize), f64)> {
        self.predictions
            .iter()
            .filter_map(|p| p.span.map(|s| (p.role.as_str(), s, p.score)))
    }
}

/// Window tokens and window-relative trigger for an instance.
pub fn windowed<'d>(
    doc: &'d Document,
    instance: &EventInstance,
    max_input_length: usize,
) -> Result<(usize, &'d [String], (usize, usize))> {
    let (ws, we) = instance.window(doc.tokens.len(), max_input_length);
    if we - ws + 1 > max_input_length {
        return Err(Error::InvalidArgument(format!(
            "context window of {} tokens exceeds max_input_length {max_input_length}",
            we - ws + 1
        )));
    }
    let trigger = (instance.trigger.start - ws, instance.trigger.end - ws);
    Ok((ws, &doc.tokens[ws..=we], trigger))
}

/// `H_X` for an instance: encode, then decode the encoder states against
/// themselves.
pub fn encode_instance<M: EncoderDecoder>(
    model: &M,
    doc: &Document,
    instance: &EventInstance,
    max_input_length: usize,
) -> Result<(HiddenStates, HiddenStates)> {
    let (_, tokens, trigger) = windowed(doc, instance, max_input_length)?;
    let memory = model.encode(tokens, trigger)?;
    let states = model.decode(DecoderTarget::States(&memory), &memory)?;
    Ok((memory, states))
}

/// `H_pt`: the prompt decoded against the encoder memory.
pub fn encode_prompt<M: EncoderDecoder>(model: &M, prompt: &Prompt, memory: &HiddenStates) -> Result<HiddenStates> {
    if prompt.tokens.is_empty() {
        return Err(Error::InvalidArgument("empty prompt".into()));
    }
    model.decode(DecoderTarget::Tokens(&prompt.tokens), memory)
}

/// Role representations after the debiasing mixture, in ontology role order.
pub fn mixed_role_representations<M: EncoderDecoder>(
    model: &M,
    ontology: &EventOntology,
    prompts: PromptInput<'_>,
    memory: &HiddenStates,
    lambda: f64,
) -> Result<Vec<(String, HiddenStates)>> {
    let orig_states = encode_prompt(model, prompts.prompt, memory)?;
    let cluster_states = match (prompts.cluster, lambda < 1.0) {
        (Some(cluster), true) => cluster
            .iter()
            .map(|(p, w)| Ok((p, encode_prompt(model, p, memory)?, w)))
            .collect::<Result<Vec<_>>>()?,
        (None, true) => {
            return Err(Error::Cluster(
                "lambda < 1 requires a prompt cluster; set lambda = 1 for the ontology prompt alone".into(),
            ))
        }
        _ => Vec::new(),
    };
    ontology
        .roles
        .iter()
        .map(|role| {
            let orig = role_representation(&orig_states, prompts.prompt, role)?;
            let members = cluster_states
                .iter()
                .map(|(p, s, w)| Ok((role_representation(s, p, role)?, *w)))
                .collect::<Result<Vec<_>>>()?;
            let refs: Vec<(&HiddenStates, f64)> = members.iter().map(|(s, w)| (s, *w)).collect();
            Ok((role.clone(), debias_mixture(&orig, &refs, lambda)?))
        })
        .collect()
}

/// Full extraction for one instance; spans come back in document coordinates.
pub fn extract<M: EncoderDecoder + SpanHead>(
    model: &M,
    doc: &Document,
    instance: &EventInstance,
    ontology: &EventOntology,
    prompts: PromptInput<'_>,
    config: &ModelConfig,
) -> Result<InstancePredictions> {
    let (offset, _, _) = windowed(doc, instance, config.max_input_length)?;
    let (memory, states) = encode_instance(model, doc, instance, config.max_input_length)?;
    let reps = mixed_role_representations(model, ontology, prompts, &memory, config.lambda)?;
    let sentinel = model.sentinel();
    let mut predictions = Vec::new();
    for (role, phi) in &reps {
        for slot in 0..model.slots_for(role) {
            let selector = model.selector(role, slot)?;
            let dist = span_distributions(&selector, phi.vector(0), &states, &sentinel)?;
            let mut pred = decode_spans(&[(role, &dist)], config.max_span_length).remove(0);
            pred.span = pred.span.map(|(s, e)| (offset + s - 1, offset + e - 1));
            predictions.push(pred);
        }
    }
    Ok(InstancePredictions {
        doc_id: instance.doc_id.clone(),
        event_type: instance.event_type.clone(),
        trigger: instance.trigger,
        predictions,
    })
}
