//! Trains the toy extractor on the 20-instance synthetic corpus and reports
//! the final training loss and train/dev scores.

use deae::corpus::Split;
use deae::evaluation::run_eval;
use deae::model::{ModelConfig, ToyModel};
use deae::prompts::ClusterSource;
use deae::synthetic::{learnable_corpus, SyntheticSpec};
use deae::training::{init_model, mean_loss, prepare_items, train, TrainConfig};

fn main() -> deae::Result<()> {
    let corpus = learnable_corpus(SyntheticSpec::default())?;
    let clusters = ClusterSource::None;
    let model = init_model(ModelConfig { h: 16, ..Default::default() }, &corpus, &clusters)?;
    let config = TrainConfig {
        learning_rate: 2e-2,
        weight_decay: 0.0,
        batch_size: 4,
        max_steps: 500,
        eval_every: 100,
        ..Default::default()
    };
    let start = std::time::Instant::now();
    let outcome = train(model, &corpus, &clusters, &config)?;
    let trained = ToyModel::from_checkpoint(outcome.checkpoint)?;
    for p in outcome.curve.iter().filter(|p| p.step % 50 == 0) {
        println!("step {:>4}  batch loss {:.4}  dev Arg-C {:?}", p.step, p.loss, p.dev_arg_c);
    }
    let items = prepare_items(&trained, &corpus, Split::Train, &clusters)?;
    println!("best step {}, train loss {:.5}", outcome.best_step, mean_loss(&trained, &corpus, &items)?);
    let (report, _) = run_eval(&trained, &corpus, Split::Train, &clusters)?;
    println!("train:\n{report}");
    let (report, _) = run_eval(&trained, &corpus, Split::Dev, &clusters)?;
    println!("dev:\n{report}");
    println!("elapsed {:?}", start.elapsed());
    Ok(())
}
