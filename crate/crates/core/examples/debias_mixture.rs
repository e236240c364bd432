//! Role representations under the debiasing mixture.
//!
//! For one instance, prints the distance between the mixed role vector and
//! the original-prompt vector as λ moves from 0 to 1, along with the
//! predicted spans of an untrained model at each λ.

use deae::model::{encode_instance, extract, mixed_role_representations, ModelConfig, PromptInput};
use deae::prompts::{build_prompt, ClusterSource, PromptStyle};
use deae::synthetic::{learnable_corpus, SyntheticSpec};
use deae::training::init_model;

fn main() -> deae::Result<()> {
    let corpus = learnable_corpus(SyntheticSpec::default())?;
    let clusters = ClusterSource::Stub { k: 3, seed: 1 };
    let model = init_model(ModelConfig { h: 16, ..Default::default() }, &corpus, &clusters)?;
    let instance = &corpus.instances[0];
    let doc = corpus.document(&instance.doc_id)?;
    let ontology = corpus.ontology(&instance.event_type)?;
    let prompt = build_prompt(ontology, PromptStyle::OntologyBased);
    let cluster = clusters.cluster_for(instance, &corpus)?;
    let input = PromptInput { prompt: &prompt, cluster: cluster.as_ref() };
    let (memory, _) = encode_instance(&model, doc, instance, model.config.max_input_length)?;
    let original = mixed_role_representations(&model, ontology, input, &memory, 1.0)?;

    for lambda in [0.0, 0.25, 0.5, 0.75, 1.0] {
        let mixed = mixed_role_representations(&model, ontology, input, &memory, lambda)?;
        let shifts: Vec<String> = mixed
            .iter()
            .zip(&original)
            .map(|((role, m), (_, o))| {
                let d: f64 = m.vector(0).iter().zip(o.vector(0)).map(|(a, b)| (a - b).powi(2)).sum();
                format!("{role}={:.3}", d.sqrt())
            })
            .collect();
        let config = ModelConfig { lambda, ..model.config.clone() };
        let preds = extract(&model, doc, instance, ontology, input, &config)?;
        let spans: Vec<String> = preds
            .predictions
            .iter()
            .map(|p| format!("{}:{:?}", p.role, p.span))
            .collect();
        println!("λ={lambda:.2}  |φ-φ_orig| {}  predictions {}", shifts.join(" "), spans.join(" "));
    }
    Ok(())
}
