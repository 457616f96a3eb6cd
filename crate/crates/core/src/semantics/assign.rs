use std::collections::{BTreeMap, HashMap, HashSet};

use rand::seq::SliceRandom;
use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::form_distance;
use super::ontology::Ontology;
use crate::error::{Error, Result};
use crate::seed::{derive_rng, Rng};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HillClimbConfig {
    pub restarts: usize,
    /// Consecutive rejected swaps that end a restart.
    pub max_iters: usize,
    /// Hard cap on proposals per restart.
    pub max_proposals: usize,
    pub pair_subsample: PairSubsample,
    /// Record the running score every this many proposals.
    pub trace_every: usize,
}

impl Default for HillClimbConfig {
    fn default() -> Self {
        HillClimbConfig {
            restarts: 8,
            max_iters: 2000,
            max_proposals: 100_000,
            pair_subsample: PairSubsample::default(),
            trace_every: 1000,
        }
    }
}

/// When to score on a uniform sample of meaning pairs instead of all of them.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PairSubsample {
    /// Largest N scored on every pair.
    pub full_up_to: usize,
    /// Number of pairs sampled above that size.
    pub pairs: usize,
}

impl Default for PairSubsample {
    fn default() -> Self {
        PairSubsample {
            full_up_to: 1000,
            pairs: 1_000_000,
        }
    }
}

impl HillClimbConfig {
    pub fn validate(&self) -> Result<()> {
        if self.restarts == 0 || self.max_iters == 0 || self.max_proposals == 0 || self.trace_every == 0 {
            return Err(Error::Config(
                "restarts, max_iters, max_proposals and trace_every must be positive".into(),
            ));
        }
        if self.pair_subsample.pairs == 0 {
            return Err(Error::Config("pair_subsample.pairs must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Assignment {
    /// `(meaning, word)` in meaning order.
    pub mapping: Vec<(String, String)>,
    /// Best Spearman correlation; 0 when undefined.
    pub score: f64,
    /// The best score was undefined (a distance vector had no variance).
    pub undefined: bool,
    pub best_restart: usize,
    pub initial_scores: Vec<f64>,
    pub restart_scores: Vec<f64>,
    pub traces: Vec<Vec<f64>>,
    pub pairs: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssignmentMetadata {
    pub score: f64,
    pub undefined: bool,
    pub best_restart: usize,
    pub initial_scores: Vec<f64>,
    pub restart_scores: Vec<f64>,
    pub traces: Vec<Vec<f64>>,
    pub pairs: usize,
    pub seed: u64,
}

/// Serialized assignment: meaning id to word form, plus search metadata.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssignmentRecord {
    pub mapping: BTreeMap<String, String>,
    pub metadata: AssignmentMetadata,
}

impl Assignment {
    pub fn record(&self, seed: u64) -> AssignmentRecord {
        AssignmentRecord {
            mapping: self.mapping.iter().cloned().collect(),
            metadata: AssignmentMetadata {
                score: self.score,
                undefined: self.undefined,
                best_restart: self.best_restart,
                initial_scores: self.initial_scores.clone(),
                restart_scores: self.restart_scores.clone(),
                traces: self.traces.clone(),
                pairs: self.pairs,
                seed,
            },
        }
    }
}

enum Pairs {
    Full { sem: Vec<u8> },
    Sampled { pairs: Vec<(u32, u32, u8)>, incident: Vec<Vec<u32>> },
}

struct Problem {
    n: usize,
    pairs: Pairs,
    /// Word-by-word edit distances, row-major.
    form: Vec<u8>,
    s_levels: usize,
    f_levels: usize,
}

/// Joint histogram of (semantic, form) distance over the scored pairs.
#[derive(Clone)]
struct Histogram {
    cells: Vec<u64>,
    f_levels: usize,
}

impl Histogram {
    fn bin(&self, s: u8, f: u8) -> usize {
        usize::from(s) * self.f_levels + usize::from(f)
    }

    /// Spearman correlation with average ranks, computed from the counts alone.
    fn rho(&self, s_levels: usize) -> Option<f64> {
        let fl = self.f_levels;
        let mut a = vec![0u64; s_levels];
        let mut b = vec![0u64; fl];
        for s in 0..s_levels {
            for f in 0..fl {
                let c = self.cells[s * fl + f];
                a[s] += c;
                b[f] += c;
            }
        }
        let n: u64 = a.iter().sum();
        let mean = (n as f64 + 1.0) / 2.0;
        let centred = |counts: &[u64]| -> Vec<f64> {
            let mut below = 0u64;
            counts
                .iter()
                .map(|&c| {
                    let r = below as f64 + (c as f64 + 1.0) / 2.0;
                    below += c;
                    r - mean
                })
                .collect()
        };
        let (rs, rf) = (centred(&a), centred(&b));
        let vs: f64 = a.iter().zip(&rs).map(|(c, r)| *c as f64 * r * r).sum();
        let vf: f64 = b.iter().zip(&rf).map(|(c, r)| *c as f64 * r * r).sum();
        if !(vs > 0.0 && vf > 0.0) {
            return None;
        }
        let mut cov = 0.0;
        for s in 0..s_levels {
            for f in 0..fl {
                let c = self.cells[s * fl + f];
                if c > 0 {
                    cov += c as f64 * rs[s] * rf[f];
                }
            }
        }
        Some((cov / (vs * vf).sqrt()).clamp(-1.0, 1.0))
    }
}

impl Problem {
    fn form(&self, wa: u32, wb: u32) -> u8 {
        self.form[wa as usize * self.n + wb as usize]
    }

    fn histogram(&self, perm: &[u32]) -> Histogram {
        let mut h = Histogram {
            cells: vec![0; self.s_levels * self.f_levels],
            f_levels: self.f_levels,
        };
        match &self.pairs {
            Pairs::Full { sem } => {
                for a in 0..self.n {
                    for b in (a + 1)..self.n {
                        let bin = h.bin(sem[a * self.n + b], self.form(perm[a], perm[b]));
                        h.cells[bin] += 1;
                    }
                }
            }
            Pairs::Sampled { pairs, .. } => {
                for &(a, b, s) in pairs {
                    let bin = h.bin(s, self.form(perm[a as usize], perm[b as usize]));
                    h.cells[bin] += 1;
                }
            }
        }
        h
    }

    fn pair_count(&self) -> usize {
        match &self.pairs {
            Pairs::Full { .. } => self.n * (self.n - 1) / 2,
            Pairs::Sampled { pairs, .. } => pairs.len(),
        }
    }

    /// Histogram moves caused by swapping the words of meanings `i` and `j`.
    fn swap_moves(&self, perm: &[u32], i: usize, j: usize, h: &Histogram, out: &mut Vec<(usize, usize)>) {
        out.clear();
        let (wi, wj) = (perm[i], perm[j]);
        let mut push = |s: u8, old: u8, new: u8| {
            if old != new {
                out.push((h.bin(s, old), h.bin(s, new)));
            }
        };
        match &self.pairs {
            Pairs::Full { sem } => {
                for (k, &wk) in perm.iter().enumerate() {
                    if k == i || k == j {
                        continue;
                    }
                    push(sem[i * self.n + k], self.form(wi, wk), self.form(wj, wk));
                    push(sem[j * self.n + k], self.form(wj, wk), self.form(wi, wk));
                }
            }
            Pairs::Sampled { pairs, incident } => {
                for (me, mine, theirs) in [(i, wi, wj), (j, wj, wi)] {
                    for &p in &incident[me] {
                        let (a, b, s) = pairs[p as usize];
                        let other = if a as usize == me { b } else { a } as usize;
                        if other == i || other == j {
                            continue;
                        }
                        let wk = perm[other];
                        push(s, self.form(mine, wk), self.form(theirs, wk));
                    }
                }
            }
        }
    }
}

fn apply(h: &mut Histogram, moves: &[(usize, usize)], forward: bool) {
    for &(from, to) in moves {
        let (from, to) = if forward { (from, to) } else { (to, from) };
        h.cells[from] -= 1;
        h.cells[to] += 1;
    }
}

struct RestartResult {
    perm: Vec<u32>,
    initial: f64,
    score: Option<f64>,
    trace: Vec<f64>,
}

fn climb(problem: &Problem, config: &HillClimbConfig, rng: &mut Rng) -> RestartResult {
    let n = problem.n;
    let mut perm: Vec<u32> = (0..n as u32).collect();
    perm.shuffle(rng);
    let mut h = problem.histogram(&perm);
    let mut rho = h.rho(problem.s_levels);
    let mut score = rho.unwrap_or(0.0);
    let initial = score;
    let mut trace = vec![score];
    let mut moves = Vec::with_capacity(2 * n);
    let mut rejections = 0;
    for proposal in 1..=config.max_proposals {
        if rejections >= config.max_iters {
            break;
        }
        let i = rng.random_range(0..n);
        let mut j = rng.random_range(0..n - 1);
        if j >= i {
            j += 1;
        }
        problem.swap_moves(&perm, i, j, &h, &mut moves);
        apply(&mut h, &moves, true);
        let candidate = h.rho(problem.s_levels);
        if candidate.unwrap_or(0.0) > score {
            perm.swap(i, j);
            rho = candidate;
            score = candidate.unwrap_or(0.0);
            rejections = 0;
        } else {
            apply(&mut h, &moves, false);
            rejections += 1;
        }
        if proposal % config.trace_every == 0 {
            trace.push(score);
        }
    }
    if trace.last() != Some(&score) {
        trace.push(score);
    }
    RestartResult {
        perm,
        initial,
        score: rho,
        trace,
    }
}

fn edit_matrix(words: &[String]) -> Result<Vec<u8>> {
    let mut ids: HashMap<&str, u16> = HashMap::new();
    let mut tokenized = Vec::with_capacity(words.len());
    for w in words {
        let toks: Vec<u16> = w
            .split_whitespace()
            .map(|t| {
                let next = ids.len() as u16;
                *ids.entry(t).or_insert(next)
            })
            .collect();
        if toks.is_empty() {
            return Err(Error::InvalidInput("empty word form".into()));
        }
        tokenized.push(toks);
    }
    let n = words.len();
    let rows: Vec<Vec<u8>> = (0..n)
        .into_par_iter()
        .map(|a| {
            (0..n)
                .map(|b| form_distance(&tokenized[a], &tokenized[b]).min(255) as u8)
                .collect()
        })
        .collect();
    Ok(rows.concat())
}

fn sample_pairs(n: usize, count: usize, sem: impl Fn(usize, usize) -> u8, rng: &mut Rng) -> Pairs {
    let mut seen: HashSet<(u32, u32)> = HashSet::with_capacity(count);
    let mut pairs = Vec::with_capacity(count);
    while pairs.len() < count {
        let a = rng.random_range(0..n);
        let b = rng.random_range(0..n);
        if a == b {
            continue;
        }
        let key = (a.min(b) as u32, a.max(b) as u32);
        if seen.insert(key) {
            pairs.push((key.0, key.1, sem(key.0 as usize, key.1 as usize)));
        }
    }
    let mut incident = vec![Vec::new(); n];
    for (p, &(a, b, _)) in pairs.iter().enumerate() {
        incident[a as usize].push(p as u32);
        incident[b as usize].push(p as u32);
    }
    Pairs::Sampled { pairs, incident }
}

/// Search for the bijection of words onto meanings with the highest Spearman
/// correlation between semantic and edit distances.
///
/// Each restart starts from a random bijection and proposes random swaps,
/// keeping a swap only when it strictly improves the score. The score is exact
/// after every proposal: only pairs touching the two swapped meanings move in
/// the joint distance histogram, and ranks are recomputed from the histogram.
pub fn hill_climb_assign(
    meanings: &[String],
    words: &[String],
    ont: &Ontology,
    config: &HillClimbConfig,
    seed: u64,
) -> Result<Assignment> {
    config.validate()?;
    if meanings.len() != words.len() {
        return Err(Error::SizeMismatch(format!(
            "{} meanings for {} words",
            meanings.len(),
            words.len()
        )));
    }
    let n = meanings.len();
    if n < 3 {
        return Err(Error::InvalidInput("assignment needs at least three meanings".into()));
    }
    let sem = ont.distance_matrix(meanings)?;
    let form = edit_matrix(words)?;
    let s_levels = usize::from(*sem.iter().max().unwrap_or(&0)) + 1;
    let f_levels = usize::from(*form.iter().max().unwrap_or(&0)) + 1;
    let total_pairs = n * (n - 1) / 2;
    let sub = config.pair_subsample;
    let pairs = if n <= sub.full_up_to || total_pairs <= sub.pairs {
        Pairs::Full { sem }
    } else {
        sample_pairs(n, sub.pairs, |a, b| sem[a * n + b], &mut derive_rng(seed, "pairs", &[]))
    };
    let problem = Problem {
        n,
        pairs,
        form,
        s_levels,
        f_levels,
    };
    let results: Vec<RestartResult> = (0..config.restarts)
        .into_par_iter()
        .map(|r| climb(&problem, config, &mut derive_rng(seed, "assign", &[r as u64])))
        .collect();
    let best = (0..results.len())
        .max_by(|&a, &b| {
            let (sa, sb) = (results[a].score.unwrap_or(0.0), results[b].score.unwrap_or(0.0));
            sa.total_cmp(&sb).then(b.cmp(&a))
        })
        .expect("at least one restart");
    let winner = &results[best];
    Ok(Assignment {
        mapping: meanings
            .iter()
            .zip(&winner.perm)
            .map(|(m, &w)| (m.clone(), words[w as usize].clone()))
            .collect(),
        score: winner.score.unwrap_or(0.0),
        undefined: winner.score.is_none(),
        best_restart: best,
        initial_scores: results.iter().map(|r| r.initial).collect(),
        restart_scores: results.iter().map(|r| r.score.unwrap_or(0.0)).collect(),
        traces: results.iter().map(|r| r.trace.clone()).collect(),
        pairs: problem.pair_count(),
    })
}
