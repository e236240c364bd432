//! Generates a stub prompt cluster for one instance and prints each
//! alternative prompt with its log-likelihood and normalized weight.

use deae::prompts::ClusterSource;
use deae::synthetic::{learnable_corpus, SyntheticSpec};

fn main() -> deae::Result<()> {
    let corpus = learnable_corpus(SyntheticSpec::default())?;
    let instance = &corpus.instances[0];
    let source = ClusterSource::Stub { k: 4, seed: 7 };
    let cluster = source.cluster_for(instance, &corpus)?.expect("stub source yields a cluster");
    println!("instance {}", instance.key());
    println!("sentence: {}", corpus.document(&instance.doc_id)?.tokens.join(" "));
    for ((prompt, weight), loglik) in cluster.iter().zip(&cluster.logliks) {
        println!("  w={weight:.4}  loglik={loglik:>7.3}  {}", prompt.text());
    }
    println!("weights sum to {:.12}", cluster.weights.iter().sum::<f64>());
    Ok(())
}
