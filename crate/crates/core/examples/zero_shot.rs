//! Builds a zero-shot split of a ten-type corpus: the four most frequent
//! types stay in train/dev and every other type moves to test.

use std::collections::BTreeMap;

use deae::corpus::{zero_shot_split, Split};
use deae::synthetic::ten_type_corpus;

fn main() -> deae::Result<()> {
    let corpus = ten_type_corpus(1)?;
    let split = zero_shot_split(&corpus, 4)?;
    let mut table: BTreeMap<&str, [usize; 3]> = BTreeMap::new();
    for inst in &split.instances {
        let col = Split::ALL.iter().position(|s| *s == inst.split).expect("known split");
        table.entry(inst.event_type.as_str()).or_default()[col] += 1;
    }
    println!("{:<8} {:>5} {:>5} {:>5}", "type", "train", "dev", "test");
    for (ty, [train, dev, test]) in table {
        println!("{ty:<8} {train:>5} {dev:>5} {test:>5}");
    }
    Ok(())
}
