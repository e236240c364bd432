use std::io::BufRead;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Pre-parsed dependency annotation for one document.
///
/// `heads[i]` is the 0-based index of token `i`'s governor. The root is
/// marked by a negative value or by its own index.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DependencyParse {
    pub doc_id: String,
    pub labels: Vec<String>,
    pub heads: Vec<i64>,
}

impl DependencyParse {
    /// Builds a parse from CoNLL-U style columns (1-based heads, 0 = root).
    pub fn from_conllu(doc_id: impl Into<String>, labels: Vec<String>, heads: &[usize]) -> Self {
        DependencyParse {
            doc_id: doc_id.into(),
            labels,
            heads: heads.iter().map(|&h| h as i64 - 1).collect(),
        }
    }

    pub(crate) fn check(&self, n_tokens: usize) -> Result<()> {
        if self.labels.len() != n_tokens || self.heads.len() != n_tokens {
            return Err(Error::Shape(format!(
                "parse for {} has {} labels / {} heads but document has {} tokens",
                self.doc_id,
                self.labels.len(),
                self.heads.len(),
                n_tokens
            )));
        }
        if let Some(h) = self.heads.iter().find(|&&h| h >= n_tokens as i64) {
            return Err(Error::Shape(format!(
                "parse for {} has head index {h} beyond {n_tokens} tokens",
                self.doc_id
            )));
        }
        Ok(())
    }

    fn governor(&self, i: usize) -> Option<usize> {
        let h = self.heads[i];
        (h >= 0 && h as usize != i).then_some(h as usize)
    }

    /// Syntactic head of the inclusive span `[start, end]`: the leftmost token
    /// whose governor lies outside the span (or which is the root).
    pub fn span_head(&self, start: usize, end: usize) -> usize {
        (start..=end)
            .find(|&i| match self.governor(i) {
                None => true,
                Some(g) => g < start || g > end,
            })
            .unwrap_or(start)
    }

    pub fn span_head_label(&self, start: usize, end: usize) -> &str {
        &self.labels[self.span_head(start, end)]
    }
}

pub fn load_parses(path: impl AsRef<Path>) -> Result<Vec<DependencyParse>> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut parses = Vec::new();
    for (i, line) in std::io::BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let parse: DependencyParse = serde_json::from_str(&line).map_err(|e| {
            Error::record(path.display(), i + 1, super::formats::field_of(&e), e.to_string())
        })?;
        parses.push(parse);
    }
    Ok(parses)
}
