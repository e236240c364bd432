//! Shows the name-based and ontology-based prompts built for each event
//! type of the synthetic ontology, with the token slot of every role.

use deae::prompts::{build_prompt, PromptStyle};
use deae::synthetic::example_ontologies;

fn main() {
    for ontology in example_ontologies().values() {
        println!("{}", ontology.event_type);
        for style in [PromptStyle::NameBased, PromptStyle::OntologyBased] {
            let prompt = build_prompt(ontology, style);
            println!("  {style:?}: {}", prompt.text());
            for (role, (s, e)) in &prompt.role_slots {
                println!("    {role:<18} tokens {s}..={e}");
            }
        }
    }
}
