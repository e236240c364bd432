//! Sweeps the mixture weight λ over a coarse grid with stub prompt
//! clusters and prints dev Arg-C F1 per λ.

use deae::model::ModelConfig;
use deae::prompts::ClusterSource;
use deae::synthetic::{learnable_corpus, SyntheticSpec};
use deae::training::{init_model, lambda_grid, sweep_lambda, TrainConfig};

fn main() -> deae::Result<()> {
    let corpus = learnable_corpus(SyntheticSpec::default())?;
    let clusters = ClusterSource::Stub { k: 3, seed: 5 };
    let config = TrainConfig {
        learning_rate: 1e-2,
        max_steps: 60,
        eval_every: 20,
        lambda_grid: lambda_grid(0.0, 1.0, 0.25)?,
        ..Default::default()
    };
    let factory = |lambda: f64| init_model(ModelConfig { h: 12, lambda, ..Default::default() }, &corpus, &clusters);
    let outcome = sweep_lambda(factory, &corpus, &clusters, &config)?;
    for row in &outcome.rows {
        println!("λ={:.2}  best step {:>3}  dev Arg-C F1 {:.4}", row.lambda, row.best_step, row.dev.arg_c.f1);
    }
    println!("selected λ = {}", outcome.best_lambda);
    Ok(())
}
