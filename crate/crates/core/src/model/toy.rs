//! Reference encoder-decoder: one self-attention encoder block and one
//! cross-attention decoder block over learned token embeddings, fixed
//! sinusoidal positions and a learned segment embedding (context, trigger,
//! prompt). Each block is `x + Attn(x, mem)` followed by a residual
//! tanh feed-forward layer.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use super::graph::{Graph, Var};
use super::params::{normal_init, ParamStore};
use super::span::{RoleSelector, MAX_SLOTS_PER_ROLE};
use super::states::HiddenStates;
use super::tensor::Matrix;
use super::{DecoderTarget, EncoderDecoder, ModelConfig, SpanHead};
use crate::error::{Error, Result};

pub const UNK: &str = "<unk>";

const SEG_CONTEXT: usize = 0;
const SEG_TRIGGER: usize = 1;
const SEG_PROMPT: usize = 2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(from = "Vec<String>", into = "Vec<String>")]
pub struct Vocab {
    tokens: Vec<String>,
    index: HashMap<String, usize>,
}

impl From<Vec<String>> for Vocab {
    fn from(tokens: Vec<String>) -> Self {
        let index = tokens.iter().enumerate().map(|(i, t)| (t.clone(), i)).collect();
        Vocab { tokens, index }
    }
}

impl From<Vocab> for Vec<String> {
    fn from(v: Vocab) -> Self {
        v.tokens
    }
}

impl Vocab {
    /// Lower-cased, sorted vocabulary with `<unk>` at index 0.
    pub fn build<'a>(tokens: impl IntoIterator<Item = &'a str>) -> Vocab {
        let mut set: std::collections::BTreeSet<String> =
            tokens.into_iter().map(str::to_lowercase).collect();
        set.remove(UNK);
        let mut list = vec![UNK.to_owned()];
        list.extend(set);
        Vocab::from(list)
    }

    pub fn id(&self, token: &str) -> usize {
        self.index.get(&token.to_lowercase()).copied().unwrap_or(0)
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }
}

fn sinusoidal(n: usize, h: usize) -> Matrix {
    let mut m = Matrix::zeros(n, h);
    for pos in 0..n {
        for i in 0..h {
            let rate = 10000f64.powf((2 * (i / 2)) as f64 / h as f64);
            let angle = pos as f64 / rate;
            m.row_mut(pos)[i] = if i % 2 == 0 { angle.sin() } else { angle.cos() };
        }
    }
    m
}

fn selector_name(role: &str, slot: usize, which: &str) -> String {
    format!("selector.{role}.{slot}.{which}")
}

#[derive(Debug, Clone, PartialEq)]
pub struct ToyModel {
    pub config: ModelConfig,
    pub vocab: Vocab,
    pub params: ParamStore,
}

struct BlockIds {
    wq: usize,
    wk: usize,
    wv: usize,
    wo: usize,
    ff1: usize,
    ff1_bias: usize,
    ff2: usize,
    ff2_bias: usize,
}

impl ToyModel {
    /// Fresh model with selectors for every `(role, slots)` pair.
    pub fn new(
        config: ModelConfig,
        vocab: Vocab,
        roles: impl IntoIterator<Item = String>,
    ) -> Result<ToyModel> {
        config.validate()?;
        let h = config.h;
        let seed = config.seed;
        let ff = 2 * h;
        let mut params = ParamStore::default();
        let w_std = |fan_in: usize| 1.0 / (fan_in as f64).sqrt();
        params.insert("embed.tokens", normal_init(seed, "embed.tokens", vocab.len(), h, 0.0, 0.5));
        params.insert("embed.segments", normal_init(seed, "embed.segments", 3, h, 0.0, 0.5));
        for block in ["enc", "dec"] {
            for w in ["wq", "wk", "wv", "wo"] {
                let name = format!("{block}.{w}");
                params.insert(name.clone(), normal_init(seed, &name, h, h, 0.0, w_std(h)));
            }
            let name = format!("{block}.ff1");
            params.insert(name.clone(), normal_init(seed, &name, h, ff, 0.0, w_std(h)));
            params.insert(format!("{block}.ff1_bias"), Matrix::zeros(1, ff));
            let name = format!("{block}.ff2");
            params.insert(name.clone(), normal_init(seed, &name, ff, h, 0.0, w_std(ff)));
            params.insert(format!("{block}.ff2_bias"), Matrix::zeros(1, h));
        }
        params.insert("head.sentinel", normal_init(seed, "head.sentinel", 1, h, 0.0, w_std(h)));
        let mut model = ToyModel {
            config,
            vocab,
            params,
        };
        for role in roles {
            model.add_role(&role)?;
        }
        Ok(model)
    }

    /// Adds selectors for `role` (one per configured slot) if missing.
    pub fn add_role(&mut self, role: &str) -> Result<()> {
        let slots = self.config.slots_for(role);
        if slots == 0 || slots > MAX_SLOTS_PER_ROLE {
            return Err(Error::InvalidArgument(format!(
                "role {role}: {slots} slots, allowed 1..={MAX_SLOTS_PER_ROLE}"
            )));
        }
        for slot in 0..slots {
            for which in ["start", "end"] {
                let name = selector_name(role, slot, which);
                if self.params.id(&name).is_none() {
                    let init = normal_init(self.config.seed, &name, 1, self.config.h, 1.0, 0.1);
                    self.params.insert(name, init);
                }
            }
        }
        Ok(())
    }

    fn id(&self, name: &str) -> usize {
        self.params.id(name).unwrap_or_else(|| panic!("missing parameter {name}"))
    }

    fn block_ids(&self, block: &str) -> BlockIds {
        let id = |w: &str| self.id(&format!("{block}.{w}"));
        BlockIds {
            wq: id("wq"),
            wk: id("wk"),
            wv: id("wv"),
            wo: id("wo"),
            ff1: id("ff1"),
            ff1_bias: id("ff1_bias"),
            ff2: id("ff2"),
            ff2_bias: id("ff2_bias"),
        }
    }

    pub(crate) fn selector_ids(&self, role: &str, slot: usize) -> Result<(usize, usize)> {
        let get = |which| {
            self.params
                .id(&selector_name(role, slot, which))
                .ok_or_else(|| Error::Missing(format!("no selector for role {role} slot {slot}")))
        };
        Ok((get("start")?, get("end")?))
    }

    pub(crate) fn sentinel_id(&self) -> usize {
        self.id("head.sentinel")
    }

    fn embed(&self, g: &mut Graph, tokens: &[String], segments: Vec<usize>) -> Var {
        let ids: Vec<usize> = tokens.iter().map(|t| self.vocab.id(t)).collect();
        let table = g.param(self.id("embed.tokens"));
        let tok = g.gather(table, ids);
        let seg_table = g.param(self.id("embed.segments"));
        let seg = g.gather(seg_table, segments);
        let pos = g.input(sinusoidal(tokens.len(), self.config.h));
        let x = g.add(tok, seg);
        g.add(x, pos)
    }

    fn block(&self, g: &mut Graph, ids: &BlockIds, query_src: Var, memory: Var) -> Var {
        let wq = g.param(ids.wq);
        let wk = g.param(ids.wk);
        let wv = g.param(ids.wv);
        let wo = g.param(ids.wo);
        let q = g.matmul(query_src, wq);
        let k = g.matmul(memory, wk);
        let v = g.matmul(memory, wv);
        let scores = g.matmul_bt(q, k);
        let scores = g.scale(scores, 1.0 / (self.config.h as f64).sqrt());
        let attn = g.softmax_rows(scores);
        let ctx = g.matmul(attn, v);
        let out = g.matmul(ctx, wo);
        let h1 = g.add(query_src, out);
        let ff1 = g.param(ids.ff1);
        let b1 = g.param(ids.ff1_bias);
        let ff2 = g.param(ids.ff2);
        let b2 = g.param(ids.ff2_bias);
        let f = g.matmul(h1, ff1);
        let f = g.add_row(f, b1);
        let f = g.tanh(f);
        let f = g.matmul(f, ff2);
        let f = g.add_row(f, b2);
        g.add(h1, f)
    }

    pub(crate) fn check_length(&self, n: usize, what: &str) -> Result<()> {
        if n == 0 {
            return Err(Error::InvalidArgument(format!("empty {what}")));
        }
        if n > self.config.max_input_length {
            return Err(Error::InvalidArgument(format!(
                "{what} of {n} tokens exceeds max_input_length {}",
                self.config.max_input_length
            )));
        }
        Ok(())
    }

    /// `H_X^enc`: the encoder sees only the instance tokens.
    pub(crate) fn encode_graph(
        &self,
        g: &mut Graph,
        tokens: &[String],
        trigger: (usize, usize),
    ) -> Result<Var> {
        self.check_length(tokens.len(), "instance")?;
        let segments = (0..tokens.len())
            .map(|i| if i >= trigger.0 && i <= trigger.1 { SEG_TRIGGER } else { SEG_CONTEXT })
            .collect();
        let x = self.embed(g, tokens, segments);
        let ids = self.block_ids("enc");
        Ok(self.block(g, &ids, x, x))
    }

    /// `H_X = Decoder(H_X^enc; H_X^enc)`.
    pub(crate) fn decode_states_graph(&self, g: &mut Graph, memory: Var) -> Var {
        let ids = self.block_ids("dec");
        self.block(g, &ids, memory, memory)
    }

    /// `H_pt = Decoder(pt; H_X^enc)`.
    pub(crate) fn decode_prompt_graph(&self, g: &mut Graph, tokens: &[String], memory: Var) -> Result<Var> {
        self.check_length(tokens.len(), "prompt")?;
        let x = self.embed(g, tokens, vec![SEG_PROMPT; tokens.len()]);
        let ids = self.block_ids("dec");
        Ok(self.block(g, &ids, x, memory))
    }

    pub fn checkpoint(&self) -> Checkpoint {
        Checkpoint {
            format_version: Checkpoint::FORMAT_VERSION,
            config: self.config.clone(),
            vocab: self.vocab.clone(),
            params: self.params.clone(),
        }
    }

    pub fn from_checkpoint(ckpt: Checkpoint) -> Result<ToyModel> {
        if ckpt.format_version != Checkpoint::FORMAT_VERSION {
            return Err(Error::Checkpoint(format!(
                "unsupported format version {}",
                ckpt.format_version
            )));
        }
        ckpt.config.validate()?;
        let model = ToyModel {
            config: ckpt.config,
            vocab: ckpt.vocab,
            params: ckpt.params,
        };
        let h = model.config.h;
        for (name, m) in model.params.iter() {
            let ok = match name {
                "embed.tokens" => m.shape() == (model.vocab.len(), h),
                _ => m.cols == h || name.ends_with("ff1") || name.ends_with("ff1_bias"),
            };
            if !ok || !m.is_finite() {
                return Err(Error::Checkpoint(format!("parameter {name} has bad shape or values")));
            }
        }
        for required in ["embed.tokens", "embed.segments", "head.sentinel", "enc.wq", "dec.wq"] {
            if model.params.id(required).is_none() {
                return Err(Error::Checkpoint(format!("missing parameter {required}")));
            }
        }
        Ok(model)
    }

    pub fn roles(&self) -> Vec<String> {
        let mut roles: Vec<String> = self
            .params
            .iter()
            .filter_map(|(n, _)| n.strip_prefix("selector."))
            .filter_map(|rest| rest.strip_suffix(".0.start"))
            .map(str::to_owned)
            .collect();
        roles.dedup();
        roles
    }
}

impl EncoderDecoder for ToyModel {
    fn hidden_size(&self) -> usize {
        self.config.h
    }

    fn encode(&self, tokens: &[String], trigger: (usize, usize)) -> Result<HiddenStates> {
        let mut g = Graph::new(&self.params);
        let v = self.encode_graph(&mut g, tokens, trigger)?;
        HiddenStates::new(g.value(v).clone())
    }

    fn decode(&self, target: DecoderTarget<'_>, memory: &HiddenStates) -> Result<HiddenStates> {
        let mut g = Graph::new(&self.params);
        let mem = g.input(memory.matrix().clone());
        let v = match target {
            DecoderTarget::States(states) => {
                let t = g.input(states.matrix().clone());
                let ids = self.block_ids("dec");
                self.block(&mut g, &ids, t, mem)
            }
            DecoderTarget::Tokens(tokens) => self.decode_prompt_graph(&mut g, tokens, mem)?,
        };
        HiddenStates::new(g.value(v).clone())
    }
}

impl SpanHead for ToyModel {
    fn selector(&self, role: &str, slot: usize) -> Result<RoleSelector> {
        let (s, e) = self.selector_ids(role, slot)?;
        Ok(RoleSelector {
            role: role.to_owned(),
            w_start: self.params.by_id(s).data.clone(),
            w_end: self.params.by_id(e).data.clone(),
        })
    }

    fn sentinel(&self) -> Vec<f64> {
        self.params.by_id(self.sentinel_id()).data.clone()
    }

    fn slots_for(&self, role: &str) -> usize {
        self.config.slots_for(role)
    }
}

/// Serialized model: configuration, vocabulary and named parameter tensors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub format_version: u32,
    pub config: ModelConfig,
    pub vocab: Vocab,
    pub params: ParamStore,
}

impl Checkpoint {
    pub const FORMAT_VERSION: u32 = 1;

    pub fn save(&self, path: impl AsRef<std::path::Path>) -> Result<()> {
        let path = path.as_ref();
        let text = serde_json::to_string(self).expect("checkpoint serializes");
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<std::path::Path>) -> Result<Checkpoint> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::Checkpoint(format!("{}: {e}", path.display())))
    }

    pub fn param_names(&self) -> BTreeMap<String, (usize, usize)> {
        self.params.iter().map(|(n, m)| (n.to_owned(), m.shape())).collect()
    }
}
