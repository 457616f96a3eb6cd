//! Core-vocabulary ontology, form and meaning distances, and the search for a
//! form-meaning bijection with maximal rank alignment.

mod assign;
mod ontology;

pub use assign::{hill_climb_assign, Assignment, AssignmentRecord, HillClimbConfig, PairSubsample};
pub use ontology::{load_ontology, sample_leaf_concepts, MeaningSet, NodeSpec, Ontology, OntologyNode, SENSE_SEPARATOR};

use crate::error::{Error, Result};

/// Unit-cost edit distance over phoneme tokens.
pub fn form_distance<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut cur = vec![0; b.len() + 1];
    for (i, x) in a.iter().enumerate() {
        cur[0] = i + 1;
        for (j, y) in b.iter().enumerate() {
            let sub = prev[j] + usize::from(x != y);
            cur[j + 1] = sub.min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

/// Ranks starting at 1, ties sharing their average rank.
pub fn average_ranks(xs: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..xs.len()).collect();
    order.sort_by(|&a, &b| xs[a].total_cmp(&xs[b]));
    let mut ranks = vec![0.0; xs.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && xs[order[j + 1]] == xs[order[i]] {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            ranks[k] = r;
        }
        i = j + 1;
    }
    ranks
}

fn pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    (sxx > 0.0 && syy > 0.0).then(|| (sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

/// Spearman rank correlation; `None` when either side has no variance.
pub fn spearman(x: &[f64], y: &[f64]) -> Option<f64> {
    if x.len() != y.len() || x.len() < 2 {
        return None;
    }
    pearson(&average_ranks(x), &average_ranks(y))
}

/// Spearman correlation between semantic and form distances over all pairs,
/// where `words[i]` is the form assigned to `meanings[i]`.
pub fn alignment_score(meanings: &[String], words: &[String], ont: &Ontology) -> Result<Option<f64>> {
    if meanings.len() != words.len() {
        return Err(Error::SizeMismatch(format!(
            "{} meanings for {} words",
            meanings.len(),
            words.len()
        )));
    }
    if meanings.len() < 3 {
        return Err(Error::InvalidInput("alignment needs at least three meanings".into()));
    }
    let toks: Vec<Vec<&str>> = words.iter().map(|w| w.split_whitespace().collect()).collect();
    let mut sem = Vec::new();
    let mut form = Vec::new();
    for i in 0..meanings.len() {
        for j in (i + 1)..meanings.len() {
            sem.push(f64::from(ont.semantic_distance(&meanings[i], &meanings[j])?));
            form.push(form_distance(&toks[i], &toks[j]) as f64);
        }
    }
    Ok(spearman(&sem, &form))
}
