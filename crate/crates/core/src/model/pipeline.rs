//! The differentiable version of the extraction pipeline, used for training
//! and gradient checks. It mirrors [`super::extract`] operation by operation
//! on the autodiff tape.

use std::collections::BTreeMap;

use super::graph::{Gradients, Graph, Var};
use super::span::{assign_gold_to_slots, SpanDistributions};
use super::toy::ToyModel;
use super::{windowed, PromptInput};
use crate::corpus::{Corpus, EventInstance, EventOntology, InstanceKey};
use crate::error::{Error, Result};
use crate::prompts::{build_prompt, ClusterSource, Prompt, PromptCluster, PromptStyle};

pub struct PipelineInputs<'a> {
    /// Context-window tokens.
    pub tokens: &'a [String],
    /// Window-relative trigger span.
    pub trigger: (usize, usize),
    pub ontology: &'a EventOntology,
    pub prompts: PromptInput<'a>,
    pub lambda: f64,
}

/// Gold `(start, end)` per `(role, slot)`, in distribution coordinates.
pub type GoldSlots = Vec<(String, usize, (usize, usize))>;

struct SlotVars {
    role: String,
    slot: usize,
    log_start: Var,
    log_end: Var,
}

impl ToyModel {
    fn forward_slots(&self, g: &mut Graph, inputs: &PipelineInputs<'_>) -> Result<Vec<SlotVars>> {
        let memory = self.encode_graph(g, inputs.tokens, inputs.trigger)?;
        let states = self.decode_states_graph(g, memory);
        let sentinel = g.param(self.sentinel_id());
        let augmented = g.concat_rows(vec![sentinel, states]);

        let prompt = inputs.prompts.prompt;
        let orig = self.decode_prompt_graph(g, &prompt.tokens, memory)?;
        let mut members: Vec<(&Prompt, Var, f64)> = Vec::new();
        if inputs.lambda < 1.0 {
            let cluster = inputs.prompts.cluster.ok_or_else(|| {
                Error::Cluster("lambda < 1 requires a prompt cluster".into())
            })?;
            for (p, w) in cluster.iter() {
                let v = self.decode_prompt_graph(g, &p.tokens, memory)?;
                members.push((p, v, w));
            }
        }

        let mut slots = Vec::new();
        for role in &inputs.ontology.roles {
            let slot_of = |p: &Prompt| {
                p.slot(role)
                    .ok_or_else(|| Error::Missing(format!("role {role} has no slot in prompt {:?}", p.text())))
            };
            let (s, e) = slot_of(prompt)?;
            let mut terms = vec![(g.mean_rows(orig, s, e), inputs.lambda)];
            for (p, v, w) in &members {
                let (s, e) = slot_of(p)?;
                let pooled = g.mean_rows(*v, s, e);
                terms.push((pooled, (1.0 - inputs.lambda) * w));
            }
            let phi = g.lin_comb(terms);
            for slot in 0..self.config.slots_for(role) {
                let (ws, we) = self.selector_ids(role, slot)?;
                let mut log_probs = |w_id| {
                    let w = g.param(w_id);
                    let query = g.mul(w, phi);
                    let logits = g.matmul_bt(query, augmented);
                    g.log_softmax_rows(logits)
                };
                let log_start = log_probs(ws);
                let log_end = log_probs(we);
                slots.push(SlotVars {
                    role: role.clone(),
                    slot,
                    log_start,
                    log_end,
                });
            }
        }
        Ok(slots)
    }

    fn slot_dists(g: &Graph, slots: &[SlotVars]) -> Vec<SpanDistributions> {
        slots
            .iter()
            .map(|s| SpanDistributions {
                p_start: g.value(s.log_start).data.iter().map(|x| x.exp()).collect(),
                p_end: g.value(s.log_end).data.iter().map(|x| x.exp()).collect(),
            })
            .collect()
    }

    /// Distributions per `(role, slot)` computed on the tape.
    pub fn slot_distributions(&self, inputs: &PipelineInputs<'_>) -> Result<Vec<(String, usize, SpanDistributions)>> {
        let mut g = Graph::new(&self.params);
        let slots = self.forward_slots(&mut g, inputs)?;
        let dists = Self::slot_dists(&g, &slots);
        Ok(slots.into_iter().zip(dists).map(|(s, d)| (s.role, s.slot, d)).collect())
    }

    fn loss_node(g: &mut Graph, slots: &[SlotVars], assignment: &GoldSlots) -> Result<Var> {
        let mut picks = Vec::new();
        for sv in slots {
            let &(_, _, (s, e)) = assignment
                .iter()
                .find(|(r, k, _)| *r == sv.role && *k == sv.slot)
                .ok_or_else(|| Error::Missing(format!("no gold assignment for {} slot {}", sv.role, sv.slot)))?;
            let n = g.value(sv.log_start).cols;
            if s >= n || e >= n {
                return Err(Error::InvalidArgument(format!("gold ({s},{e}) outside {n} positions")));
            }
            picks.push(g.pick(sv.log_start, 0, s));
            picks.push(g.pick(sv.log_end, 0, e));
        }
        let total = g.sum(picks);
        Ok(g.scale(total, -1.0))
    }

    /// Span loss and its gradient, with gold spans assigned to slots by
    /// minimal loss under the current distributions.
    pub fn loss_and_grad(
        &self,
        inputs: &PipelineInputs<'_>,
        gold: &BTreeMap<String, Vec<(usize, usize)>>,
    ) -> Result<(f64, Gradients, GoldSlots)> {
        let mut g = Graph::new(&self.params);
        let slots = self.forward_slots(&mut g, inputs)?;
        let dists = Self::slot_dists(&g, &slots);
        let mut assignment = GoldSlots::new();
        let mut i = 0;
        while i < slots.len() {
            let role = slots[i].role.clone();
            let n = self.config.slots_for(&role);
            let spans = gold.get(&role).map(Vec::as_slice).unwrap_or(&[]);
            let assigned = assign_gold_to_slots(spans, &dists[i..i + n]);
            for (k, pair) in assigned.into_iter().enumerate() {
                assignment.push((role.clone(), k, pair));
            }
            i += n;
        }
        let loss = Self::loss_node(&mut g, &slots, &assignment)?;
        let value = g.value(loss).data[0];
        Ok((value, g.backward(loss), assignment))
    }

    /// Span loss under a fixed assignment; the gradient is computed on request.
    pub fn loss_with_assignment(
        &self,
        inputs: &PipelineInputs<'_>,
        assignment: &GoldSlots,
        with_grad: bool,
    ) -> Result<(f64, Option<Gradients>)> {
        let mut g = Graph::new(&self.params);
        let slots = self.forward_slots(&mut g, inputs)?;
        let loss = Self::loss_node(&mut g, &slots, assignment)?;
        let value = g.value(loss).data[0];
        Ok((value, with_grad.then(|| g.backward(loss))))
    }
}

/// An instance prepared for training: window, gold spans in distribution
/// coordinates, and its prompts.
#[derive(Debug, Clone)]
pub struct InstanceBatchItem {
    pub key: InstanceKey,
    pub tokens: Vec<String>,
    pub trigger: (usize, usize),
    pub gold: BTreeMap<String, Vec<(usize, usize)>>,
    pub prompt: Prompt,
    pub cluster: Option<PromptCluster>,
}

impl InstanceBatchItem {
    pub fn prepare(
        corpus: &Corpus,
        instance: &EventInstance,
        style: PromptStyle,
        clusters: &ClusterSource,
        max_input_length: usize,
        lambda: f64,
    ) -> Result<Self> {
        let doc = corpus.document(&instance.doc_id)?;
        let ontology = corpus.ontology(&instance.event_type)?;
        let (offset, tokens, trigger) = windowed(doc, instance, max_input_length)?;
        let end = offset + tokens.len() - 1;
        let mut gold: BTreeMap<String, Vec<(usize, usize)>> = BTreeMap::new();
        for arg in &instance.arguments {
            if arg.start >= offset && arg.end <= end {
                gold.entry(arg.role.clone())
                    .or_default()
                    .push((arg.start - offset + 1, arg.end - offset + 1));
            }
        }
        let cluster = if lambda < 1.0 {
            clusters.cluster_for(instance, corpus)?
        } else {
            None
        };
        Ok(InstanceBatchItem {
            key: instance.key(),
            tokens: tokens.to_vec(),
            trigger,
            gold,
            prompt: build_prompt(ontology, style),
            cluster,
        })
    }

    pub fn inputs<'a>(&'a self, ontology: &'a EventOntology, lambda: f64) -> PipelineInputs<'a> {
        PipelineInputs {
            tokens: &self.tokens,
            trigger: self.trigger,
            ontology,
            prompts: PromptInput {
                prompt: &self.prompt,
                cluster: self.cluster.as_ref(),
            },
            lambda,
        }
    }
}
