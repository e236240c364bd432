//! Compares the tape gradient of the span loss with central finite
//! differences on a sample of parameter scalars, with the mixture active.

use deae::corpus::Split;
use deae::model::{InstanceBatchItem, ModelConfig};
use deae::prompts::ClusterSource;
use deae::synthetic::{learnable_corpus, SyntheticSpec};
use deae::training::init_model;

fn main() -> deae::Result<()> {
    let corpus = learnable_corpus(SyntheticSpec::default())?;
    let clusters = ClusterSource::Stub { k: 2, seed: 3 };
    let lambda = 0.6;
    let model = init_model(ModelConfig { h: 8, lambda, ..Default::default() }, &corpus, &clusters)?;
    let inst = corpus.split(Split::Train).next().expect("train instance");
    let item = InstanceBatchItem::prepare(&corpus, inst, model.config.prompt_style, &clusters, 512, lambda)?;
    let inputs = item.inputs(corpus.ontology(&inst.event_type)?, lambda);
    let (loss, _, assignment) = model.loss_and_grad(&inputs, &item.gold)?;
    let (_, grads) = model.loss_with_assignment(&inputs, &assignment, true)?;
    let grads = grads.expect("gradients requested");
    println!("loss {loss:.6}, {} parameter scalars", model.params.num_scalars());

    let step = 1e-5;
    let mut probe = model.clone();
    let mut worst: f64 = 0.0;
    for id in 0..model.params.len() {
        let n = model.params.by_id(id).data.len();
        // A few evenly spaced scalars per tensor keep the run short.
        for k in (0..n).step_by((n / 3).max(1)) {
            let orig = model.params.by_id(id).data[k];
            probe.params.by_id_mut(id).data[k] = orig + step;
            let plus = probe.loss_with_assignment(&inputs, &assignment, false)?.0;
            probe.params.by_id_mut(id).data[k] = orig - step;
            let minus = probe.loss_with_assignment(&inputs, &assignment, false)?.0;
            probe.params.by_id_mut(id).data[k] = orig;
            let numeric = (plus - minus) / (2.0 * step);
            let analytic = grads.by_id.get(&id).map_or(0.0, |g| g.data[k]);
            let rel = (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-6);
            worst = worst.max(rel);
        }
        println!("{:<36} checked", model.params.name(id));
    }
    println!("max relative error {worst:.2e}");
    Ok(())
}
