//! Candidate selection under the six grammar regimes, and lexicon generation.

use std::collections::{BTreeMap, HashSet};
use std::fmt;

use rand::Rng as _;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::candidates::{generate_candidates, Constraint, Phonotactics, TemplateParams, ViolationVector, WordForm};
use crate::error::{Error, Result};
use crate::inventory::PhonemeInventory;
use crate::lexicon::{Lexicon, Provenance};
use crate::seed::{derive_rng, Rng};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GrammarKind {
    #[serde(alias = "det")]
    Deterministic,
    #[serde(alias = "ot")]
    StrictOt,
    #[serde(alias = "ot-stochastic")]
    StochasticOt,
    Hg,
    Maxent,
    Random,
}

impl GrammarKind {
    pub const ALL: [GrammarKind; 6] = [
        GrammarKind::Deterministic,
        GrammarKind::StrictOt,
        GrammarKind::StochasticOt,
        GrammarKind::Hg,
        GrammarKind::Maxent,
        GrammarKind::Random,
    ];

    /// Short label used on the command line and in report files.
    pub fn label(self) -> &'static str {
        match self {
            GrammarKind::Deterministic => "det",
            GrammarKind::StrictOt => "ot",
            GrammarKind::StochasticOt => "ot-stochastic",
            GrammarKind::Hg => "hg",
            GrammarKind::Maxent => "maxent",
            GrammarKind::Random => "random",
        }
    }
}

impl fmt::Display for GrammarKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl std::str::FromStr for GrammarKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "det" | "deterministic" => GrammarKind::Deterministic,
            "ot" | "strict_ot" | "strict-ot" => GrammarKind::StrictOt,
            "ot-stochastic" | "stochastic_ot" | "stochastic-ot" => GrammarKind::StochasticOt,
            "hg" => GrammarKind::Hg,
            "maxent" => GrammarKind::Maxent,
            "random" => GrammarKind::Random,
            other => return Err(Error::Config(format!("unknown grammar `{other}`"))),
        })
    }
}

pub const DEFAULT_RANKING: [Constraint; 5] = [
    Constraint::Ssp,
    Constraint::NasalStopHomorganic,
    Constraint::Complex,
    Constraint::Onset,
    Constraint::NoCoda,
];

const DEFAULT_WEIGHTS: [f64; 5] = [8.0, 6.0, 4.0, 2.0, 1.0];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GrammarSpec {
    pub kind: GrammarKind,
    pub ranking: Vec<Constraint>,
    pub ranking_values: BTreeMap<Constraint, f64>,
    pub noise_sigma: f64,
    pub weights: BTreeMap<Constraint, f64>,
    /// Widest onset or coda the deterministic filter admits.
    pub cluster_limit: u8,
}

impl Default for GrammarSpec {
    fn default() -> Self {
        GrammarSpec::new(GrammarKind::StrictOt)
    }
}

impl GrammarSpec {
    pub fn new(kind: GrammarKind) -> Self {
        let n = DEFAULT_RANKING.len();
        GrammarSpec {
            kind,
            ranking: DEFAULT_RANKING.to_vec(),
            ranking_values: DEFAULT_RANKING
                .iter()
                .enumerate()
                .map(|(i, c)| (*c, 10.0 * (n - i) as f64))
                .collect(),
            noise_sigma: 2.0,
            weights: DEFAULT_RANKING.iter().copied().zip(DEFAULT_WEIGHTS).collect(),
            cluster_limit: 2,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let mut seen: Vec<Constraint> = self.ranking.clone();
        seen.sort();
        seen.dedup();
        if seen.len() != Constraint::ALL.len() || self.ranking.len() != Constraint::ALL.len() {
            return Err(Error::Config(
                "ranking must list each of the five constraints exactly once".into(),
            ));
        }
        if self.kind == GrammarKind::StochasticOt {
            if !(self.noise_sigma > 0.0 && self.noise_sigma.is_finite()) {
                return Err(Error::Config(format!(
                    "noise_sigma must be positive, got {}",
                    self.noise_sigma
                )));
            }
            if Constraint::ALL.iter().any(|c| !self.ranking_values.contains_key(c)) {
                return Err(Error::Config("ranking_values must cover all five constraints".into()));
            }
        }
        if matches!(self.kind, GrammarKind::Hg | GrammarKind::Maxent)
            && Constraint::ALL
                .iter()
                .any(|c| !self.weights.get(c).is_some_and(|w| *w >= 0.0 && w.is_finite()))
        {
            return Err(Error::Config(
                "weights must give a finite non-negative value for all five constraints".into(),
            ));
        }
        Ok(())
    }

    pub fn weight_vector(&self) -> [f64; 5] {
        let mut w = [0.0; 5];
        for c in Constraint::ALL {
            w[c.index()] = self.weights.get(&c).copied().unwrap_or(0.0);
        }
        w
    }

    pub fn ranking_value_vector(&self) -> [f64; 5] {
        let mut w = [0.0; 5];
        for c in Constraint::ALL {
            w[c.index()] = self.ranking_values.get(&c).copied().unwrap_or(0.0);
        }
        w
    }
}

/// A scored candidate.
#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    pub form: WordForm,
    pub violations: ViolationVector,
}

/// Evaluation record for one candidate set.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Tableau {
    pub violations: Vec<ViolationVector>,
    pub winner_index: Option<usize>,
    pub harmony: Option<Vec<f64>>,
    pub probabilities: Option<Vec<f64>>,
}

impl Tableau {
    pub fn evaluate(spec: &GrammarSpec, candidates: &[Candidate], rng: &mut Rng) -> Tableau {
        let violations: Vec<ViolationVector> = candidates.iter().map(|c| c.violations).collect();
        let weights = spec.weight_vector();
        let harmonies = || violations.iter().map(|v| harmony(v, &weights)).collect::<Vec<_>>();
        let (harmony_col, probabilities) = match spec.kind {
            GrammarKind::Hg => (Some(harmonies()), None),
            GrammarKind::Maxent => (Some(harmonies()), Some(maxent_probabilities(&violations, &weights))),
            _ => (None, None),
        };
        let winner_index = select(spec, candidates, &violations, rng);
        Tableau {
            violations,
            winner_index,
            harmony: harmony_col,
            probabilities,
        }
    }
}

/// First candidate with no hard-filter violation, if any.
pub fn deterministic_select(candidates: &[Candidate], cluster_limit: u8) -> Option<usize> {
    candidates.iter().position(|c| {
        c.violations.get(Constraint::Ssp) == 0
            && c.violations.get(Constraint::NasalStopHomorganic) == 0
            && Phonotactics::max_cluster(&c.form) <= cluster_limit
    })
}

fn ranked_key<'a>(v: &ViolationVector, ranking: &'a [Constraint]) -> impl Iterator<Item = u32> + 'a {
    let v = *v;
    ranking.iter().map(move |c| v.get(*c))
}

/// Lexicographic minimum under `ranking`; ties go to the earliest candidate.
pub fn strict_ot_select(violations: &[ViolationVector], ranking: &[Constraint]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, v) in violations.iter().enumerate() {
        match best {
            None => best = Some(i),
            Some(b) => {
                if ranked_key(v, ranking).lt(ranked_key(&violations[b], ranking)) {
                    best = Some(i);
                }
            }
        }
    }
    best
}

/// Strict OT under a ranking re-sorted from noisy ranking values.
pub fn stochastic_ot_select(
    violations: &[ViolationVector],
    ranking_values: &[f64; 5],
    noise_sigma: f64,
    rng: &mut Rng,
) -> Option<usize> {
    let normal = Normal::new(0.0, noise_sigma).ok()?;
    let mut noisy: Vec<(f64, Constraint)> = Constraint::ALL
        .iter()
        .map(|c| (ranking_values[c.index()] + normal.sample(rng), *c))
        .collect();
    noisy.sort_by(|a, b| b.0.total_cmp(&a.0));
    let ranking: Vec<Constraint> = noisy.into_iter().map(|(_, c)| c).collect();
    strict_ot_select(violations, &ranking)
}

pub fn harmony(v: &ViolationVector, weights: &[f64; 5]) -> f64 {
    v.0.iter().zip(weights).map(|(n, w)| f64::from(*n) * w).sum()
}

/// Harmony argmin; ties go to the earliest candidate.
pub fn hg_select(violations: &[ViolationVector], weights: &[f64; 5]) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, v) in violations.iter().enumerate() {
        let h = harmony(v, weights);
        if best.is_none_or(|(_, bh)| h < bh) {
            best = Some((i, h));
        }
    }
    best.map(|(i, _)| i)
}

/// Softmax over negated harmonies, computed with log-sum-exp.
pub fn maxent_probabilities(violations: &[ViolationVector], weights: &[f64; 5]) -> Vec<f64> {
    let scores: Vec<f64> = violations.iter().map(|v| -harmony(v, weights)).collect();
    softmax(&scores)
}

pub fn softmax(scores: &[f64]) -> Vec<f64> {
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = max + scores.iter().map(|s| (s - max).exp()).sum::<f64>().ln();
    scores.iter().map(|s| (s - lse).exp()).collect()
}

pub fn maxent_sample(violations: &[ViolationVector], weights: &[f64; 5], rng: &mut Rng) -> Option<usize> {
    if violations.is_empty() {
        return None;
    }
    let probs = maxent_probabilities(violations, weights);
    let mut u: f64 = rng.random();
    for (i, p) in probs.iter().enumerate() {
        if u < *p {
            return Some(i);
        }
        u -= p;
    }
    Some(probs.len() - 1)
}

fn select(spec: &GrammarSpec, candidates: &[Candidate], violations: &[ViolationVector], rng: &mut Rng) -> Option<usize> {
    match spec.kind {
        GrammarKind::Deterministic => deterministic_select(candidates, spec.cluster_limit),
        GrammarKind::StrictOt => strict_ot_select(violations, &spec.ranking),
        GrammarKind::StochasticOt => {
            stochastic_ot_select(violations, &spec.ranking_value_vector(), spec.noise_sigma, rng)
        }
        GrammarKind::Hg => hg_select(violations, &spec.weight_vector()),
        GrammarKind::Maxent => maxent_sample(violations, &spec.weight_vector(), rng),
        GrammarKind::Random => (!candidates.is_empty()).then_some(0),
    }
}

/// Settings shared by every grammar when building a lexicon.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GenerationConfig {
    pub template: TemplateParams,
    pub candidates_per_word: usize,
}

impl Default for GenerationConfig {
    fn default() -> Self {
        GenerationConfig {
            template: TemplateParams::default(),
            candidates_per_word: 64,
        }
    }
}

/// Generate `n` distinct word forms, one fresh candidate set per attempt.
///
/// Attempt `a` for output slot `i` draws from the stream `(seed, "lexicon", [i, a])`,
/// so the lexicon is a pure function of its inputs.
pub fn generate_words(
    spec: &GrammarSpec,
    inv: &PhonemeInventory,
    config: &GenerationConfig,
    n: usize,
    seed: u64,
) -> Result<Vec<WordForm>> {
    if n == 0 {
        return Err(Error::InvalidInput("lexicon size must be at least 1".into()));
    }
    spec.validate()?;
    config.template.validate()?;
    if config.candidates_per_word == 0 {
        return Err(Error::Config("candidates_per_word must be at least 1".into()));
    }
    let scorer = Phonotactics::new(inv);
    let budget = 50 * n;
    let mut used = 0;
    let mut seen = HashSet::with_capacity(n);
    let mut words = Vec::with_capacity(n);
    for slot in 0..n {
        let mut attempt = 0u64;
        loop {
            if used >= budget {
                return Err(Error::Capacity {
                    achieved: words.len(),
                    requested: n,
                });
            }
            used += 1;
            let mut rng = derive_rng(seed, "lexicon", &[slot as u64, attempt]);
            attempt += 1;
            let forms = generate_candidates(&config.template, inv, config.candidates_per_word, &mut rng)?;
            let candidates = forms
                .into_iter()
                .map(|form| {
                    let violations = scorer.evaluate(&form)?;
                    Ok(Candidate { form, violations })
                })
                .collect::<Result<Vec<_>>>()?;
            let violations: Vec<ViolationVector> = candidates.iter().map(|c| c.violations).collect();
            let Some(pick) = select(spec, &candidates, &violations, &mut rng) else {
                continue;
            };
            let form = candidates.into_iter().nth(pick).expect("winner in range").form;
            if seen.insert(form.segments.clone()) {
                words.push(form);
                break;
            }
        }
    }
    Ok(words)
}

pub fn generate_lexicon(
    spec: &GrammarSpec,
    inv: &PhonemeInventory,
    config: &GenerationConfig,
    n: usize,
    seed: u64,
) -> Result<Lexicon> {
    let words = generate_words(spec, inv, config, n, seed)?;
    Ok(Lexicon {
        words: words.iter().map(|w| w.surface(inv)).collect(),
        provenance: Some(Provenance::new(spec, inv, config, seed)?),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::candidates::SyllableSkeleton;
    use crate::seed::rng_from_seed;

    fn vv(a: [u32; 5]) -> ViolationVector {
        ViolationVector(a)
    }

    fn ranked(top_to_bottom: [u32; 5]) -> ViolationVector {
        // Arrange counts given in default-ranking order into index order.
        let mut v = ViolationVector::default();
        for (c, n) in DEFAULT_RANKING.iter().zip(top_to_bottom) {
            v.set(*c, n);
        }
        v
    }

    #[test]
    fn strict_domination() {
        let a = ranked([1, 0, 0, 0, 0]);
        let b = ranked([0, 0, 1, 1, 1]);
        assert_eq!(strict_ot_select(&[a, b], &DEFAULT_RANKING), Some(1));
        assert_eq!(strict_ot_select(&[b, b], &DEFAULT_RANKING), Some(0));
        assert_eq!(strict_ot_select(&[], &DEFAULT_RANKING), None);
    }

    #[test]
    fn gang_effect() {
        let a = vv([0, 0, 0, 1, 0]);
        let b = vv([1, 1, 2, 0, 0]);
        let mut w = [1.0, 1.0, 1.0, 3.0, 1.0];
        assert_eq!(hg_select(&[a, b], &w), Some(0));
        w[3] = 5.0;
        assert_eq!(hg_select(&[a, b], &w), Some(1));
        assert_eq!(hg_select(&[b, a], &[0.0; 5]), Some(0));
    }

    #[test]
    fn maxent_closed_forms() {
        let mut w = [0.0; 5];
        w[0] = std::f64::consts::LN_2;
        let p = maxent_probabilities(&[vv([0; 5]), vv([1, 0, 0, 0, 0])], &w);
        assert!((p[0] - 2.0 / 3.0).abs() < 1e-12 && (p[1] - 1.0 / 3.0).abs() < 1e-12);
        let p = maxent_probabilities(&[vv([2; 5]), vv([2; 5])], &DEFAULT_WEIGHTS);
        assert!((p[0] - 0.5).abs() < 1e-12);
        // Huge harmonies stay finite.
        let p = maxent_probabilities(&[vv([1000; 5]), vv([1001; 5])], &[100.0; 5]);
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-9 && p[0] > 0.99);
    }

    #[test]
    fn softmax_shift_invariance() {
        let s = [0.3, -1.2, 4.0];
        let t: Vec<f64> = s.iter().map(|x| x + 17.0).collect();
        for (a, b) in softmax(&s).iter().zip(softmax(&t)) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn stochastic_ot_separated_values_follow_strict_ranking() {
        let a = ranked([1, 0, 0, 0, 0]);
        let b = ranked([0, 1, 0, 0, 0]);
        let spec = GrammarSpec::new(GrammarKind::StochasticOt);
        let mut rng = rng_from_seed(4);
        let wins = (0..10_000)
            .filter(|_| {
                stochastic_ot_select(&[a, b], &spec.ranking_value_vector(), 0.5, &mut rng) == Some(1)
            })
            .count();
        assert!(wins as f64 / 10_000.0 > 0.99);
    }

    #[test]
    fn stochastic_ot_equal_values_split_evenly() {
        let mut a = ViolationVector::default();
        a.set(Constraint::Ssp, 1);
        let mut b = ViolationVector::default();
        b.set(Constraint::Onset, 1);
        let mut values = [0.0; 5];
        values[Constraint::Ssp.index()] = 100.0;
        values[Constraint::Onset.index()] = 100.0;
        let mut rng = rng_from_seed(6);
        let a_wins = (0..10_000)
            .filter(|_| stochastic_ot_select(&[a, b], &values, 2.0, &mut rng) == Some(0))
            .count();
        assert!((a_wins as f64 / 10_000.0 - 0.5).abs() < 0.02, "{a_wins}");
    }

    #[test]
    fn deterministic_filter() {
        let form = WordForm {
            segments: vec![0, 1],
            syllables: vec![SyllableSkeleton { onset: 1, coda: 0 }],
        };
        let clean = Candidate {
            form: form.clone(),
            violations: vv([0, 3, 0, 0, 0]),
        };
        let bad = Candidate {
            form,
            violations: vv([0, 0, 0, 1, 0]),
        };
        assert_eq!(deterministic_select(&[bad.clone(), clean], 2), Some(1));
        assert_eq!(deterministic_select(&[bad.clone(), bad], 2), None);
    }

    #[test]
    fn spec_validation() {
        let mut s = GrammarSpec::new(GrammarKind::StrictOt);
        s.ranking.pop();
        assert!(s.validate().is_err());
        let mut s = GrammarSpec::new(GrammarKind::StochasticOt);
        s.noise_sigma = 0.0;
        assert!(s.validate().is_err());
        let mut s = GrammarSpec::new(GrammarKind::Maxent);
        s.weights.insert(Constraint::Onset, -1.0);
        assert!(s.validate().is_err());
        for k in GrammarKind::ALL {
            GrammarSpec::new(k).validate().unwrap();
            assert_eq!(k.label().parse::<GrammarKind>().unwrap(), k);
        }
    }

    #[test]
    fn spec_round_trips_toml_and_json() {
        let s = GrammarSpec::new(GrammarKind::Maxent);
        let t = toml::to_string(&s).unwrap();
        assert_eq!(toml::from_str::<GrammarSpec>(&t).unwrap(), s);
        let j = serde_json::to_string(&s).unwrap();
        assert_eq!(serde_json::from_str::<GrammarSpec>(&j).unwrap(), s);
    }

    fn toy_inventory() -> PhonemeInventory {
        PhonemeInventory::from_segments(&["p", "t", "k", "m", "n", "s", "l", "r"], &["a", "i", "u"]).unwrap()
    }

    #[test]
    fn lexicons_are_distinct_and_reproducible() {
        let inv = toy_inventory();
        let cfg = GenerationConfig::default();
        for kind in GrammarKind::ALL {
            let spec = GrammarSpec::new(kind);
            let a = generate_lexicon(&spec, &inv, &cfg, 200, 11).unwrap();
            let b = generate_lexicon(&spec, &inv, &cfg, 200, 11).unwrap();
            assert_eq!(a, b);
            let set: HashSet<_> = a.words.iter().collect();
            assert_eq!(set.len(), 200);
        }
    }

    #[test]
    fn deterministic_words_are_clean() {
        let inv = toy_inventory();
        let spec = GrammarSpec::new(GrammarKind::Deterministic);
        let words = generate_words(&spec, &inv, &GenerationConfig::default(), 1000, 3).unwrap();
        let scorer = Phonotactics::new(&inv);
        for w in &words {
            let v = scorer.evaluate(w).unwrap();
            assert_eq!(v.get(Constraint::Ssp) + v.get(Constraint::NasalStopHomorganic), 0);
        }
        let one = generate_words(&spec, &inv, &GenerationConfig::default(), 1, 0).unwrap();
        assert_eq!(one.len(), 1);
    }

    #[test]
    fn tiny_inventory_hits_capacity() {
        let inv = PhonemeInventory::from_segments(&["t"], &["a"]).unwrap();
        let cfg = GenerationConfig {
            template: TemplateParams::cv(1),
            candidates_per_word: 4,
        };
        let err = generate_words(&GrammarSpec::new(GrammarKind::Random), &inv, &cfg, 3, 0).unwrap_err();
        assert!(matches!(err, Error::Capacity { achieved: 1, requested: 3 }), "{err:?}");
    }
}
