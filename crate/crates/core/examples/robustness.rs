//! Measures how much test Arg-C F1 moves when every prompt is replaced by a
//! clause-reordered variant that still names all roles.

use deae::bias_analysis::{load_alt_prompts, robustness_delta};
use deae::corpus::Split;
use deae::model::{ModelConfig, ToyModel};
use deae::prompts::ClusterSource;
use deae::synthetic::{learnable_corpus, write_fixture_dir, SyntheticSpec};
use deae::training::{init_model, train, TrainConfig};

fn main() -> deae::Result<()> {
    let spec = SyntheticSpec::default();
    let dir = std::env::temp_dir().join(format!("deae-robustness-{}", std::process::id()));
    let paths = write_fixture_dir(&dir, spec, 2)?;
    let alts = load_alt_prompts(&paths.alt_prompts)?;
    for alt in &alts {
        println!("{}: {}", alt.event_type, alt.template);
    }

    let corpus = learnable_corpus(spec)?;
    let none = ClusterSource::None;
    let model = init_model(ModelConfig { h: 16, ..Default::default() }, &corpus, &none)?;
    let config = TrainConfig { learning_rate: 1e-2, max_steps: 80, eval_every: 20, ..Default::default() };
    let trained = ToyModel::from_checkpoint(train(model, &corpus, &none, &config)?.checkpoint)?;
    let report = robustness_delta(&trained, &corpus, Split::Test, &alts, &none)?;
    println!(
        "raw Arg-C F1 {:.4}, perturbed {:.4}, delta {:+.4}",
        report.raw_f1, report.perturbed_f1, report.delta
    );
    let _ = std::fs::remove_dir_all(dir);
    Ok(())
}
