use std::collections::BTreeMap;

use super::{Corpus, Split};
use crate::error::{Error, Result};

/// Retags `corpus` for zero-shot transfer.
///
/// The `n` event types with the most train+dev instances (ties broken by
/// lexicographic event type) are "seen"; every other type is "unseen". Seen
/// instances keep their train/dev tag, seen instances originally in test move
/// to dev, and all unseen instances go to test. No instance is dropped.
pub fn zero_shot_split(corpus: &Corpus, n: usize) -> Result<Corpus> {
    if n == 0 {
        return Err(Error::InvalidArgument("n must be positive".into()));
    }
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for inst in &corpus.instances {
        let c = counts.entry(inst.event_type.as_str()).or_insert(0);
        if inst.split != Split::Test {
            *c += 1;
        }
    }
    if n >= counts.len() {
        return Err(Error::InvalidArgument(format!(
            "n={n} leaves no unseen event types ({} types in corpus)",
            counts.len()
        )));
    }
    let mut ranked: Vec<(&str, usize)> = counts.into_iter().collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    let seen: Vec<String> = ranked[..n].iter().map(|(t, _)| t.to_string()).collect();

    let mut out = corpus.clone();
    for inst in &mut out.instances {
        inst.split = if seen.contains(&inst.event_type) {
            match inst.split {
                Split::Test => Split::Dev,
                other => other,
            }
        } else {
            Split::Test
        };
    }
    Ok(out)
}
