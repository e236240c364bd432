//! Trains a name-prompt and an ontology-prompt model on the synthetic
//! corpus and compares their spurious-role and syntactic-match ratios.

use deae::bias_analysis::compare_prompt_styles;
use deae::corpus::Split;
use deae::model::{ModelConfig, ToyModel};
use deae::prompts::{ClusterSource, PromptStyle};
use deae::synthetic::{learnable_corpus, SyntheticSpec};
use deae::training::{init_model, train, TrainConfig};

fn main() -> deae::Result<()> {
    let corpus = learnable_corpus(SyntheticSpec { test: 12, ..Default::default() })?;
    let none = ClusterSource::None;
    let config = TrainConfig { learning_rate: 1e-2, max_steps: 80, eval_every: 20, ..Default::default() };
    let fit = |style: PromptStyle| -> deae::Result<ToyModel> {
        let model = init_model(ModelConfig { h: 16, prompt_style: style, ..Default::default() }, &corpus, &none)?;
        ToyModel::from_checkpoint(train(model, &corpus, &none, &config)?.checkpoint)
    };
    let name = fit(PromptStyle::NameBased)?;
    let ontology = fit(PromptStyle::OntologyBased)?;
    let report = compare_prompt_styles(("name", &name), ("ontology", &ontology), &corpus, Split::Test, &none, true)?;
    for col in [&report.left, &report.right] {
        let syn = col.syntactic.expect("parses are attached");
        println!(
            "{:<9} spurious {}/{} = {:.3}   syntactic {}/{} = {:.3}",
            col.label,
            col.spurious.numerator,
            col.spurious.denominator,
            col.spurious.ratio,
            syn.numerator,
            syn.denominator,
            syn.ratio
        );
    }
    println!("{} instances where the two disagree", report.cases.len());
    for case in report.cases.iter().take(3) {
        println!("  {} | gold {:?} | name {:?} | ontology {:?}", case.sentence, case.gold, case.left, case.right);
    }
    Ok(())
}
