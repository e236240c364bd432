//! Minibatch AdamW training of the toy model, dev-based checkpoint
//! selection and the λ sweep.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{tokenize, Corpus, EventInstance, Split};
use crate::error::{Error, Result};
use crate::evaluation::{evaluate, predict, EvalReport};
use crate::model::graph::Gradients;
use crate::model::tensor::Matrix;
use crate::model::{Checkpoint, InstanceBatchItem, ModelConfig, ToyModel, Vocab};
use crate::prompts::ClusterSource;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub weight_decay: f64,
    pub batch_size: usize,
    pub max_steps: usize,
    /// Dev evaluation period in steps; 0 evaluates only at the end.
    pub eval_every: usize,
    pub lambda_grid: Vec<f64>,
    pub seed: u64,
    pub clip_norm: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 1e-3,
            weight_decay: 0.01,
            batch_size: 8,
            max_steps: 500,
            eval_every: 50,
            lambda_grid: lambda_grid(0.0, 1.0, 0.1).expect("default grid is valid"),
            seed: 42,
            clip_norm: 1.0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 || self.max_steps == 0 {
            return Err(Error::InvalidArgument("batch_size and max_steps must be positive".into()));
        }
        let lr_ok = self.learning_rate.is_finite() && self.learning_rate > 0.0;
        if !lr_ok || self.weight_decay.is_nan() || self.weight_decay < 0.0 {
            return Err(Error::InvalidArgument("learning_rate must be positive, weight_decay non-negative".into()));
        }
        if let Some(l) = self.lambda_grid.iter().find(|l| !(0.0..=1.0).contains(*l)) {
            return Err(Error::InvalidArgument(format!("lambda {l} in grid lies outside [0,1]")));
        }
        Ok(())
    }
}

/// Inclusive grid `start, start+step, …, stop`, rounded to 10 decimals so
/// that `0:1:0.1` yields exactly eleven clean values.
pub fn lambda_grid(start: f64, stop: f64, step: f64) -> Result<Vec<f64>> {
    if step.is_nan() || step <= 0.0 || stop < start {
        return Err(Error::InvalidArgument(format!("bad grid {start}:{stop}:{step}")));
    }
    let n = ((stop - start) / step + 1e-9).floor() as usize;
    Ok((0..=n)
        .map(|i| ((start + i as f64 * step) * 1e10).round() / 1e10)
        .collect())
}

/// Decoupled-weight-decay Adam with per-parameter step counts.
#[derive(Debug, Clone)]
pub struct AdamW {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub weight_decay: f64,
    state: BTreeMap<usize, (Matrix, Matrix, i32)>,
}

impl AdamW {
    pub fn new(lr: f64, weight_decay: f64) -> Self {
        AdamW {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            weight_decay,
            state: BTreeMap::new(),
        }
    }

    /// Updates every parameter that received a gradient.
    pub fn step(&mut self, model: &mut ToyModel, grads: &Gradients) {
        for (&id, g) in &grads.by_id {
            let p = model.params.by_id_mut(id);
            let (m, v, t) = self
                .state
                .entry(id)
                .or_insert_with(|| (Matrix::zeros(g.rows, g.cols), Matrix::zeros(g.rows, g.cols), 0));
            *t += 1;
            let c1 = 1.0 - self.beta1.powi(*t);
            let c2 = 1.0 - self.beta2.powi(*t);
            for i in 0..g.data.len() {
                m.data[i] = self.beta1 * m.data[i] + (1.0 - self.beta1) * g.data[i];
                v.data[i] = self.beta2 * v.data[i] + (1.0 - self.beta2) * g.data[i] * g.data[i];
                let m_hat = m.data[i] / c1;
                let v_hat = v.data[i] / c2;
                p.data[i] -= self.lr * (m_hat / (v_hat.sqrt() + self.eps) + self.weight_decay * p.data[i]);
            }
        }
    }
}

/// One logged training step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub step: usize,
    /// Mean loss over the batch, before the update.
    pub loss: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dev_arg_c: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    /// Best dev Arg-C checkpoint (final parameters when there is no dev data).
    pub checkpoint: Checkpoint,
    pub curve: Vec<CurvePoint>,
    pub best_step: usize,
    pub best_dev_arg_c: Option<f64>,
}

/// Fresh toy model sized for `corpus`: vocabulary from documents, templates,
/// role names and file-based cluster prompts; selectors for every ontology role.
pub fn init_model(config: ModelConfig, corpus: &Corpus, clusters: &ClusterSource) -> Result<ToyModel> {
    let mut words: Vec<String> = corpus.documents.values().flat_map(|d| d.tokens.iter().cloned()).collect();
    for ont in corpus.ontologies.values() {
        words.extend(ont.template_tokens());
        for role in &ont.roles {
            words.extend(tokenize(role));
        }
    }
    if let ClusterSource::File(index) = clusters {
        for key in index.keys() {
            for rec in index.records(key) {
                words.extend(tokenize(&rec.prompt_text));
            }
        }
    }
    let vocab = Vocab::build(words.iter().map(String::as_str));
    let mut roles: Vec<String> = corpus.ontologies.values().flat_map(|o| o.roles.iter().cloned()).collect();
    roles.sort();
    roles.dedup();
    ToyModel::new(config, vocab, roles)
}

/// Prepares the training items of `split`.
pub fn prepare_items(
    model: &ToyModel,
    corpus: &Corpus,
    split: Split,
    clusters: &ClusterSource,
) -> Result<Vec<InstanceBatchItem>> {
    let cfg = &model.config;
    corpus
        .split(split)
        .map(|inst| InstanceBatchItem::prepare(corpus, inst, cfg.prompt_style, clusters, cfg.max_input_length, cfg.lambda))
        .collect()
}

/// Mean span loss over `items` under the current parameters.
pub fn mean_loss(model: &ToyModel, corpus: &Corpus, items: &[InstanceBatchItem]) -> Result<f64> {
    if items.is_empty() {
        return Ok(0.0);
    }
    let losses = items
        .par_iter()
        .map(|item| {
            let ont = corpus.ontology(&item.key.event_type)?;
            Ok(model.loss_and_grad(&item.inputs(ont, model.config.lambda), &item.gold)?.0)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(losses.iter().sum::<f64>() / items.len() as f64)
}

/// Batches of indices into `items`, grouped by event type and shuffled.
fn epoch_batches(items: &[InstanceBatchItem], batch_size: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<usize>> {
    let mut by_type: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (i, item) in items.iter().enumerate() {
        by_type.entry(item.key.event_type.as_str()).or_default().push(i);
    }
    let mut batches = Vec::new();
    for (_, mut idx) in by_type {
        idx.shuffle(rng);
        batches.extend(idx.chunks(batch_size).map(<[usize]>::to_vec));
    }
    batches.shuffle(rng);
    batches
}

fn dev_arg_c(model: &ToyModel, corpus: &Corpus, dev: &[&EventInstance], clusters: &ClusterSource) -> Result<f64> {
    let preds = predict(model, corpus, dev, clusters)?;
    Ok(evaluate(&preds, corpus, Some(Split::Dev))?.arg_c.f1)
}

/// Trains `model` on the train split, evaluating dev Arg-C every
/// `eval_every` steps and at the end, and keeps the best parameters (the
/// earliest on ties).
pub fn train(mut model: ToyModel, corpus: &Corpus, clusters: &ClusterSource, config: &TrainConfig) -> Result<TrainOutcome> {
    config.validate()?;
    let items = prepare_items(&model, corpus, Split::Train, clusters)?;
    if items.is_empty() {
        return Err(Error::Missing("corpus has no training instances".into()));
    }
    let dev: Vec<&EventInstance> = corpus.split(Split::Dev).collect();
    if dev.is_empty() {
        log::warn!("no dev instances; the final parameters are returned");
    }
    let lambda = model.config.lambda;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut opt = AdamW::new(config.learning_rate, config.weight_decay);
    let mut curve = Vec::with_capacity(config.max_steps);
    let mut best: Option<(f64, usize, Checkpoint)> = None;
    let mut queue: Vec<Vec<usize>> = Vec::new();

    for step in 1..=config.max_steps {
        if queue.is_empty() {
            queue = epoch_batches(&items, config.batch_size, &mut rng);
            queue.reverse();
        }
        let batch = queue.pop().expect("epoch has batches");
        let results = batch
            .par_iter()
            .map(|&i| {
                let item = &items[i];
                let ont = corpus.ontology(&item.key.event_type)?;
                let (loss, grads, _) = model.loss_and_grad(&item.inputs(ont, lambda), &item.gold)?;
                Ok((loss, grads))
            })
            .collect::<Result<Vec<_>>>()?;
        let mut loss = 0.0;
        let mut grads = Gradients::default();
        for (l, g) in results {
            loss += l;
            grads.accumulate(g);
        }
        let scale = 1.0 / batch.len() as f64;
        loss *= scale;
        grads.scale(scale);
        let norm = grads.global_norm();
        if !loss.is_finite() || !norm.is_finite() {
            let keys: Vec<String> = batch.iter().map(|&i| items[i].key.to_string()).collect();
            return Err(Error::NonFiniteLoss {
                step,
                batch: keys.join(", "),
            });
        }
        if config.clip_norm > 0.0 && norm > config.clip_norm {
            grads.scale(config.clip_norm / norm);
        }
        opt.step(&mut model, &grads);

        let mut point = CurvePoint {
            step,
            loss,
            dev_arg_c: None,
        };
        let due = (config.eval_every > 0 && step % config.eval_every == 0) || step == config.max_steps;
        if due && !dev.is_empty() {
            let f1 = dev_arg_c(&model, corpus, &dev, clusters)?;
            log::info!("step {step}: loss {loss:.5}, dev Arg-C F1 {f1:.4}");
            point.dev_arg_c = Some(f1);
            if best.as_ref().is_none_or(|(b, _, _)| f1 > *b) {
                best = Some((f1, step, model.checkpoint()));
            }
        } else {
            log::debug!("step {step}: loss {loss:.5}");
        }
        curve.push(point);
    }

    Ok(match best {
        Some((f1, step, checkpoint)) => TrainOutcome {
            checkpoint,
            curve,
            best_step: step,
            best_dev_arg_c: Some(f1),
        },
        None => TrainOutcome {
            checkpoint: model.checkpoint(),
            curve,
            best_step: config.max_steps,
            best_dev_arg_c: None,
        },
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepRow {
    pub lambda: f64,
    pub best_step: usize,
    pub dev: EvalReport,
}

#[derive(Debug, Clone)]
pub struct SweepOutcome {
    pub best_lambda: f64,
    pub rows: Vec<SweepRow>,
    pub best_checkpoint: Checkpoint,
}

/// Trains one model per λ in `config.lambda_grid` (in parallel, each from
/// `factory(λ)` with the shared seed) and picks the best dev Arg-C F1;
/// ties go to the smaller λ.
pub fn sweep_lambda<F>(factory: F, corpus: &Corpus, clusters: &ClusterSource, config: &TrainConfig) -> Result<SweepOutcome>
where
    F: Fn(f64) -> Result<ToyModel> + Sync,
{
    if config.lambda_grid.is_empty() {
        return Err(Error::InvalidArgument("lambda grid is empty".into()));
    }
    config.validate()?;
    let runs = config
        .lambda_grid
        .par_iter()
        .map(|&lambda| {
            let mut model = factory(lambda)?;
            model.config.lambda = lambda;
            let outcome = train(model, corpus, clusters, config)?;
            let trained = ToyModel::from_checkpoint(outcome.checkpoint.clone())?;
            let dev: Vec<&EventInstance> = corpus.split(Split::Dev).collect();
            let preds = predict(&trained, corpus, &dev, clusters)?;
            let report = evaluate(&preds, corpus, Some(Split::Dev))?;
            Ok((
                SweepRow {
                    lambda,
                    best_step: outcome.best_step,
                    dev: report,
                },
                outcome.checkpoint,
            ))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut best = 0;
    for (i, (row, _)) in runs.iter().enumerate() {
        let (b, _) = &runs[best];
        let better = row.dev.arg_c.f1 > b.dev.arg_c.f1 || (row.dev.arg_c.f1 == b.dev.arg_c.f1 && row.lambda < b.lambda);
        if better {
            best = i;
        }
    }
    let best_lambda = runs[best].0.lambda;
    let best_checkpoint = runs[best].1.clone();
    Ok(SweepOutcome {
        best_lambda,
        rows: runs.into_iter().map(|(r, _)| r).collect(),
        best_checkpoint,
    })
}
