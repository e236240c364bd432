use serde::{Deserialize, Serialize};

use super::tensor::{lin_comb, Matrix};
use crate::error::{Error, Result};
use crate::prompts::Prompt;

/// Position-indexed sequence of `h`-dimensional vectors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HiddenStates(Matrix);

impl HiddenStates {
    pub fn new(matrix: Matrix) -> Result<Self> {
        if !matrix.is_finite() {
            return Err(Error::Shape("hidden states contain non-finite values".into()));
        }
        Ok(HiddenStates(matrix))
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        if rows.iter().any(|r| r.len() != rows[0].len()) {
            return Err(Error::Shape("hidden vectors differ in dimension".into()));
        }
        HiddenStates::new(Matrix::from_rows(rows))
    }

    pub fn len(&self) -> usize {
        self.0.rows
    }

    pub fn is_empty(&self) -> bool {
        self.0.rows == 0
    }

    pub fn dim(&self) -> usize {
        self.0.cols
    }

    pub fn vector(&self, i: usize) -> &[f64] {
        self.0.row(i)
    }

    pub fn matrix(&self) -> &Matrix {
        &self.0
    }

    pub fn into_matrix(self) -> Matrix {
        self.0
    }
}

/// Convex mixture of the original-prompt representation with the weighted
/// cluster representations: `λ·orig + (1-λ)·Σ wᵢ·repᵢ`.
///
/// Terms with a zero coefficient are skipped, so `λ = 1` returns `orig`
/// unchanged and `λ = 0` with a singleton cluster returns that member.
pub fn debias_mixture(
    orig: &HiddenStates,
    cluster: &[(&HiddenStates, f64)],
    lambda: f64,
) -> Result<HiddenStates> {
    if !(0.0..=1.0).contains(&lambda) {
        return Err(Error::InvalidArgument(format!("lambda {lambda} outside [0,1]")));
    }
    if lambda == 1.0 {
        return Ok(orig.clone());
    }
    if cluster.is_empty() {
        return Err(Error::Cluster("mixture with lambda < 1 needs a nonempty cluster".into()));
    }
    let total: f64 = cluster.iter().map(|(_, w)| w).sum();
    if (total - 1.0).abs() > 1e-9 || cluster.iter().any(|(_, w)| *w < 0.0) {
        return Err(Error::Cluster(format!("cluster weights sum to {total}, expected 1")));
    }
    let mut terms = vec![(orig.matrix(), lambda)];
    for (states, w) in cluster {
        if states.matrix().shape() != orig.matrix().shape() {
            return Err(Error::Shape(format!(
                "cluster member has shape {:?}, original {:?}",
                states.matrix().shape(),
                orig.matrix().shape()
            )));
        }
        terms.push((states.matrix(), (1.0 - lambda) * w));
    }
    HiddenStates::new(lin_comb(&terms))
}

/// Mean of the prompt states over the role's slot, as a `1 × h` state.
pub fn role_representation(states: &HiddenStates, prompt: &Prompt, role: &str) -> Result<HiddenStates> {
    let (start, end) = prompt
        .slot(role)
        .ok_or_else(|| Error::Missing(format!("role {role} has no slot in prompt {:?}", prompt.text())))?;
    if end >= states.len() {
        return Err(Error::Shape(format!(
            "slot ({start},{end}) beyond {} prompt states",
            states.len()
        )));
    }
    Ok(HiddenStates(states.matrix().mean_rows(start, end)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prompts::PromptStyle;
    use std::collections::BTreeMap;

    fn hs(rows: &[&[f64]]) -> HiddenStates {
        HiddenStates::from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn mixture_boundaries() {
        let orig = hs(&[&[4.0, 4.0]]);
        let a = hs(&[&[2.0, 0.0]]);
        let b = hs(&[&[0.0, 2.0]]);
        assert_eq!(debias_mixture(&orig, &[(&a, 0.5), (&b, 0.5)], 1.0).unwrap(), orig);
        assert_eq!(debias_mixture(&orig, &[(&a, 1.0)], 0.0).unwrap(), a);
        let mixed = debias_mixture(&orig, &[(&a, 0.5), (&b, 0.5)], 0.5).unwrap();
        assert_eq!(mixed.vector(0), &[2.5, 2.5]);
    }

    #[test]
    fn mixture_errors() {
        let orig = hs(&[&[1.0, 1.0]]);
        let wide = hs(&[&[1.0, 1.0], &[0.0, 0.0]]);
        assert!(debias_mixture(&orig, &[(&wide, 1.0)], 0.5).is_err());
        assert!(debias_mixture(&orig, &[(&orig, 1.0)], 1.5).is_err());
        assert!(debias_mixture(&orig, &[(&orig, 0.7)], 0.5).is_err());
    }

    fn prompt() -> Prompt {
        Prompt {
            event_type: "e".into(),
            tokens: vec!["a".into(), "b".into(), "c".into()],
            role_slots: BTreeMap::from([("x".to_string(), (0, 0)), ("y".to_string(), (1, 2))]),
            style: PromptStyle::OntologyBased,
        }
    }

    #[test]
    fn pooling() {
        let states = hs(&[&[5.0, 6.0], &[1.0, 3.0], &[3.0, 1.0]]);
        let p = prompt();
        assert_eq!(role_representation(&states, &p, "x").unwrap().vector(0), &[5.0, 6.0]);
        assert_eq!(role_representation(&states, &p, "y").unwrap().vector(0), &[2.0, 2.0]);
        assert!(role_representation(&states, &p, "z").is_err());
    }
}
