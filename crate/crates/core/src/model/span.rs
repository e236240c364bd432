//! Role-specific span selection: start/end distributions over the instance
//! positions, the span loss, decoding, and gold-to-slot assignment.
//!
//! Position 0 of every distribution is the no-argument sentinel; positions
//! `1..=N` are the `N` tokens of the context window.

use serde::{Deserialize, Serialize};

use super::states::HiddenStates;
use super::tensor::Matrix;
use crate::error::{Error, Result};

/// Sentinel start/end pair meaning "no argument".
pub const NO_ARGUMENT: (usize, usize) = (0, 0);

/// Maximum number of slots a single role may be given.
pub const MAX_SLOTS_PER_ROLE: usize = 3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoleSelector {
    pub role: String,
    pub w_start: Vec<f64>,
    pub w_end: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpanDistributions {
    pub p_start: Vec<f64>,
    pub p_end: Vec<f64>,
}

impl SpanDistributions {
    /// Number of candidate positions, sentinel included.
    pub fn len(&self) -> usize {
        self.p_start.len()
    }

    pub fn is_empty(&self) -> bool {
        self.p_start.is_empty()
    }

    /// Negative log-likelihood of the `(start, end)` pair.
    pub fn nll(&self, (start, end): (usize, usize)) -> f64 {
        -(self.p_start[start].ln() + self.p_end[end].ln())
    }
}

/// `[sentinel; H_X]`, the `(N+1) × h` matrix the selectors score against.
pub fn augment(states: &HiddenStates, sentinel: &[f64]) -> Result<Matrix> {
    if sentinel.len() != states.dim() {
        return Err(Error::Shape(format!(
            "sentinel dim {} vs hidden dim {}",
            sentinel.len(),
            states.dim()
        )));
    }
    Ok(Matrix::concat_rows(&[&Matrix::row_vector(sentinel.to_vec()), states.matrix()]))
}

/// Start/end distributions for one role slot. The selector is applied
/// elementwise to the role representation, then scored against every
/// position of `[sentinel; H_X]`.
pub fn span_distributions(
    selector: &RoleSelector,
    phi: &[f64],
    states: &HiddenStates,
    sentinel: &[f64],
) -> Result<SpanDistributions> {
    let h = states.dim();
    if phi.len() != h || selector.w_start.len() != h || selector.w_end.len() != h {
        return Err(Error::Shape(format!(
            "selector {} / role vector {} / hidden {h} dimensions disagree",
            selector.w_start.len(),
            phi.len()
        )));
    }
    let augmented = augment(states, sentinel)?;
    let phi = Matrix::row_vector(phi.to_vec());
    let dist = |w: &[f64]| -> Vec<f64> {
        let query = Matrix::row_vector(w.to_vec()).hadamard(&phi);
        query.matmul_bt(&augmented).softmax_rows().data
    };
    Ok(SpanDistributions {
        p_start: dist(&selector.w_start),
        p_end: dist(&selector.w_end),
    })
}

/// `Σₖ -(log p_startₖ[sₖ] + log p_endₖ[eₖ])` over slots; sentinel slots use
/// index 0.
pub fn span_loss(dists: &[SpanDistributions], gold: &[(usize, usize)]) -> Result<f64> {
    if dists.len() != gold.len() {
        return Err(Error::Shape(format!(
            "{} slot distributions but {} gold assignments",
            dists.len(),
            gold.len()
        )));
    }
    let mut total = 0.0;
    for (d, &(s, e)) in dists.iter().zip(gold) {
        if s >= d.p_start.len() || e >= d.p_end.len() {
            return Err(Error::InvalidArgument(format!(
                "gold ({s},{e}) outside {} positions",
                d.len()
            )));
        }
        total += d.nll((s, e));
    }
    Ok(total)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "PredictionRecord", from = "PredictionRecord")]
pub struct Prediction {
    pub role: String,
    /// Inclusive span; `None` means no argument.
    pub span: Option<(usize, usize)>,
    pub score: f64,
}

#[derive(Serialize, Deserialize)]
struct PredictionRecord {
    role: String,
    start: Option<usize>,
    end: Option<usize>,
    score: f64,
}

impl From<Prediction> for PredictionRecord {
    fn from(p: Prediction) -> Self {
        PredictionRecord {
            role: p.role,
            start: p.span.map(|s| s.0),
            end: p.span.map(|s| s.1),
            score: p.score,
        }
    }
}

impl From<PredictionRecord> for Prediction {
    fn from(r: PredictionRecord) -> Self {
        let span = match (r.start, r.end) {
            (Some(s), Some(e)) => Some((s, e)),
            _ => None,
        };
        Prediction {
            role: r.role,
            span,
            score: r.score,
        }
    }
}

/// Best `(start, end)` under `log p_start[s] + log p_end[e]`, among the
/// sentinel pair and every span with `1 ≤ s ≤ e` and length ≤ `max_len`.
/// Ties go to the smaller start, then the smaller end.
pub fn best_span(dist: &SpanDistributions, max_len: usize) -> ((usize, usize), f64) {
    let log_s: Vec<f64> = dist.p_start.iter().map(|p| p.ln()).collect();
    let log_e: Vec<f64> = dist.p_end.iter().map(|p| p.ln()).collect();
    let n = log_s.len().min(log_e.len());
    let mut best = (NO_ARGUMENT, log_s[0] + log_e[0]);
    for (s, ls) in log_s.iter().enumerate().take(n).skip(1) {
        for (e, le) in log_e.iter().enumerate().take(n.min(s + max_len)).skip(s) {
            let score = ls + le;
            if score > best.1 {
                best = ((s, e), score);
            }
        }
    }
    best
}

/// Decodes each `(role, distributions)` slot into a prediction in
/// distribution coordinates (1-based token positions).
pub fn decode_spans(slots: &[(&str, &SpanDistributions)], max_len: usize) -> Vec<Prediction> {
    slots
        .iter()
        .map(|(role, dist)| {
            let (pair, score) = best_span(dist, max_len);
            Prediction {
                role: role.to_string(),
                span: (pair != NO_ARGUMENT).then_some(pair),
                score,
            }
        })
        .collect()
}

/// Assigns gold spans to slots so the summed span loss is minimal, trying
/// every injective placement. Gold beyond the slot count is truncated with a
/// warning; slots left over get the sentinel.
pub fn assign_gold_to_slots(gold: &[(usize, usize)], dists: &[SpanDistributions]) -> Vec<(usize, usize)> {
    let mut gold = gold.to_vec();
    gold.sort_unstable();
    if gold.len() > dists.len() {
        log::warn!(
            "{} gold spans for {} slots; keeping the first {}",
            gold.len(),
            dists.len(),
            dists.len()
        );
        gold.truncate(dists.len());
    }

    fn search(
        slot: usize,
        gold: &[(usize, usize)],
        used: &mut Vec<bool>,
        dists: &[SpanDistributions],
        current: &mut Vec<(usize, usize)>,
        cost: f64,
        best: &mut Option<(f64, Vec<(usize, usize)>)>,
    ) {
        if slot == dists.len() {
            if used.iter().all(|&u| u) && best.as_ref().is_none_or(|(c, _)| cost < *c) {
                *best = Some((cost, current.clone()));
            }
            return;
        }
        let remaining_slots = dists.len() - slot;
        let unassigned = used.iter().filter(|&&u| !u).count();
        if unassigned < remaining_slots {
            current.push(NO_ARGUMENT);
            search(slot + 1, gold, used, dists, current, cost + dists[slot].nll(NO_ARGUMENT), best);
            current.pop();
        }
        for g in 0..gold.len() {
            if used[g] {
                continue;
            }
            used[g] = true;
            current.push(gold[g]);
            search(slot + 1, gold, used, dists, current, cost + dists[slot].nll(gold[g]), best);
            current.pop();
            used[g] = false;
        }
    }

    let mut best = None;
    search(0, &gold, &mut vec![false; gold.len()], dists, &mut Vec::new(), 0.0, &mut best);
    best.map(|(_, a)| a).unwrap_or_else(|| vec![NO_ARGUMENT; dists.len()])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one_hot(n: usize, at: usize) -> Vec<f64> {
        (0..n).map(|i| if i == at { 1.0 } else { 0.0 }).collect()
    }

    fn dist(p_start: Vec<f64>, p_end: Vec<f64>) -> SpanDistributions {
        SpanDistributions { p_start, p_end }
    }

    #[test]
    fn equal_logits_give_uniform() {
        let states = HiddenStates::from_rows(&vec![vec![0.0; 4]; 5]).unwrap();
        let sel = RoleSelector {
            role: "r".into(),
            w_start: vec![1.0; 4],
            w_end: vec![1.0; 4],
        };
        let d = span_distributions(&sel, &[0.3, 0.1, 0.2, 0.4], &states, &[0.0; 4]).unwrap();
        for p in d.p_start.iter().chain(&d.p_end) {
            assert!((p - 1.0 / 6.0).abs() < 1e-12);
        }
    }

    #[test]
    fn dominant_logit_takes_the_mass() {
        let mut rows = vec![vec![0.0, 0.0]; 4];
        rows[2] = vec![100.0, 0.0];
        let states = HiddenStates::from_rows(&rows).unwrap();
        let sel = RoleSelector {
            role: "r".into(),
            w_start: vec![1.0, 1.0],
            w_end: vec![1.0, 1.0],
        };
        let d = span_distributions(&sel, &[1.0, 0.0], &states, &[0.0, 0.0]).unwrap();
        assert!(d.p_start[3] > 1.0 - 1e-12);
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        let states = HiddenStates::from_rows(&[vec![0.0; 3]]).unwrap();
        let sel = RoleSelector {
            role: "r".into(),
            w_start: vec![1.0; 2],
            w_end: vec![1.0; 2],
        };
        assert!(span_distributions(&sel, &[0.0; 3], &states, &[0.0; 3]).is_err());
    }

    #[test]
    fn loss_closed_forms() {
        let d = dist(one_hot(13, 4), one_hot(13, 6));
        assert_eq!(span_loss(&[d], &[(4, 6)]).unwrap(), 0.0);
        let u = dist(vec![1.0 / 13.0; 13], vec![1.0 / 13.0; 13]);
        let loss = span_loss(std::slice::from_ref(&u), &[(0, 0)]).unwrap();
        assert!((loss - 2.0 * 13f64.ln()).abs() < 1e-12);
        assert!((loss - 5.1299).abs() < 1e-4);
        assert!(span_loss(&[u], &[(13, 0)]).is_err());
    }

    #[test]
    fn decode_forced_cases() {
        let d = dist(one_hot(13, 3), one_hot(13, 5));
        assert_eq!(best_span(&d, 10).0, (3, 5));
        let mut p = vec![0.1 / 12.0; 13];
        p[0] = 0.9;
        let d = dist(p.clone(), p);
        let preds = decode_spans(&[("place", &d)], 10);
        assert_eq!(preds[0].span, None);
    }

    #[test]
    fn decode_respects_max_length() {
        let d = dist(one_hot(13, 2).iter().map(|x| x * 0.9 + 0.1 / 13.0).collect(),
                     one_hot(13, 9).iter().map(|x| x * 0.9 + 0.1 / 13.0).collect());
        let (pair, _) = best_span(&d, 3);
        assert!(pair.1 - pair.0 < 3);
    }

    #[test]
    fn assignment_small_cases() {
        let d = dist(vec![0.2; 5], vec![0.2; 5]);
        assert_eq!(assign_gold_to_slots(&[(1, 2)], std::slice::from_ref(&d)), vec![(1, 2)]);
        assert_eq!(assign_gold_to_slots(&[], &[d.clone(), d.clone()]), vec![(0, 0), (0, 0)]);
        assert_eq!(assign_gold_to_slots(&[(1, 1), (2, 2)], std::slice::from_ref(&d)), vec![(1, 1)]);
    }
}
