//! Phoneme n-gram models, perplexity, KL divergence against PHOIBLE, and the
//! cross-grammar log-likelihood matrix.

use std::collections::HashMap;
use std::io::Write;

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grammar::{generate_lexicon, GenerationConfig, GrammarKind, GrammarSpec};
use crate::inventory::PhonemeInventory;
use crate::lexicon::Lexicon;
use crate::phoible::PhonemeDistribution;
use crate::seed::{derive_rng, derive_seed};

pub const END: &str = "</s>";
pub const UNK: &str = "<unk>";
const START: u32 = u32::MAX;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum Smoothing {
    AddK { k: f64 },
    WittenBell,
}

impl Default for Smoothing {
    fn default() -> Self {
        Smoothing::AddK { k: 0.1 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalConfig {
    pub order: usize,
    pub smoothing: Smoothing,
    pub heldout_fraction: f64,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            order: 3,
            smoothing: Smoothing::default(),
            heldout_fraction: 0.2,
        }
    }
}

impl EvalConfig {
    pub fn validate(&self) -> Result<()> {
        if self.order == 0 {
            return Err(Error::Config("n-gram order must be at least 1".into()));
        }
        if let Smoothing::AddK { k } = self.smoothing {
            if !(k > 0.0 && k.is_finite()) {
                return Err(Error::Config(format!("add-k smoothing needs k > 0, got {k}")));
            }
        }
        if !(self.heldout_fraction > 0.0 && self.heldout_fraction < 1.0) {
            return Err(Error::Config(format!(
                "heldout_fraction must lie in (0, 1), got {}",
                self.heldout_fraction
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default)]
struct ContextCounts {
    total: u32,
    next: HashMap<u32, u32>,
}

/// Smoothed phoneme n-gram model over a closed vocabulary.
///
/// The predicted vocabulary is the training symbols plus the end marker and the
/// unknown symbol. The start marker only ever appears as context.
#[derive(Debug, Clone)]
pub struct NgramModel {
    order: usize,
    smoothing: Smoothing,
    vocab: Vec<String>,
    index: HashMap<String, u32>,
    /// `tables[j]` holds counts for contexts of length `j`.
    tables: Vec<HashMap<Vec<u32>, ContextCounts>>,
}

/// Average log-likelihood (nats per token) and perplexity of a held-out set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Score {
    pub avg_log_likelihood: f64,
    pub perplexity: f64,
    pub tokens: usize,
}

impl NgramModel {
    pub fn train(lexicon: &Lexicon, order: usize, smoothing: Smoothing) -> Result<Self> {
        if lexicon.is_empty() {
            return Err(Error::EmptyInput("cannot train on an empty lexicon".into()));
        }
        if order == 0 {
            return Err(Error::Config("n-gram order must be at least 1".into()));
        }
        let mut vocab: Vec<String> = lexicon
            .tokens()
            .flatten()
            .map(str::to_string)
            .collect::<std::collections::BTreeSet<_>>()
            .into_iter()
            .collect();
        vocab.push(END.into());
        vocab.push(UNK.into());
        let index = vocab
            .iter()
            .enumerate()
            .map(|(i, s)| (s.clone(), i as u32))
            .collect();
        let mut model = NgramModel {
            order,
            smoothing,
            vocab,
            index,
            tables: vec![HashMap::new(); order],
        };
        for word in lexicon.tokens() {
            let ids = model.encode(&word);
            for (pos, sym) in ids.iter().enumerate().skip(order - 1) {
                for len in 0..order {
                    let ctx = ids[pos - len..pos].to_vec();
                    let entry = model.tables[len].entry(ctx).or_default();
                    entry.total += 1;
                    *entry.next.entry(*sym).or_default() += 1;
                }
            }
        }
        Ok(model)
    }

    /// Padded id sequence: `order - 1` start markers, the word, one end marker.
    fn encode(&self, word: &[&str]) -> Vec<u32> {
        let unk = self.index[UNK];
        let mut ids = vec![START; self.order - 1];
        ids.extend(word.iter().map(|t| self.index.get(*t).copied().unwrap_or(unk)));
        ids.push(self.index[END]);
        ids
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn vocabulary(&self) -> &[String] {
        &self.vocab
    }

    fn prob(&self, ctx: &[u32], sym: u32) -> f64 {
        let v = self.vocab.len() as f64;
        match self.smoothing {
            Smoothing::AddK { k } => {
                let (c, total) = self.tables[ctx.len()]
                    .get(ctx)
                    .map(|e| (e.next.get(&sym).copied().unwrap_or(0), e.total))
                    .unwrap_or((0, 0));
                (f64::from(c) + k) / (f64::from(total) + k * v)
            }
            Smoothing::WittenBell => {
                let lower = if ctx.is_empty() {
                    1.0 / v
                } else {
                    self.prob(&ctx[1..], sym)
                };
                match self.tables[ctx.len()].get(ctx) {
                    None => lower,
                    Some(e) => {
                        let types = e.next.len() as f64;
                        let c = f64::from(e.next.get(&sym).copied().unwrap_or(0));
                        (c + types * lower) / (f64::from(e.total) + types)
                    }
                }
            }
        }
    }

    /// Conditional probability of `symbol` after `context` (most recent last).
    pub fn probability(&self, context: &[&str], symbol: &str) -> f64 {
        let unk = self.index[UNK];
        let n = self.order - 1;
        let mut ctx: Vec<u32> = context
            .iter()
            .map(|t| if *t == "<s>" { START } else { self.index.get(*t).copied().unwrap_or(unk) })
            .collect();
        if ctx.len() < n {
            let mut padded = vec![START; n - ctx.len()];
            padded.extend(ctx);
            ctx = padded;
        }
        let ctx = &ctx[ctx.len() - n..];
        self.prob(ctx, self.index.get(symbol).copied().unwrap_or(unk))
    }

    pub fn score(&self, heldout: &Lexicon) -> Result<Score> {
        if heldout.is_empty() {
            return Err(Error::EmptyInput("held-out set is empty".into()));
        }
        let n = self.order - 1;
        let mut total = 0.0;
        let mut tokens = 0usize;
        for word in heldout.tokens() {
            let ids = self.encode(&word);
            for pos in n..ids.len() {
                total += self.prob(&ids[pos - n..pos], ids[pos]).ln();
                tokens += 1;
            }
        }
        let avg = total / tokens as f64;
        Ok(Score {
            avg_log_likelihood: avg,
            perplexity: (-avg).exp(),
            tokens,
        })
    }
}

pub fn train_ngram(lexicon: &Lexicon, order: usize, smoothing: Smoothing) -> Result<NgramModel> {
    NgramModel::train(lexicon, order, smoothing)
}

pub fn score(model: &NgramModel, heldout: &Lexicon) -> Result<Score> {
    model.score(heldout)
}

/// Random-baseline perplexity over model perplexity; above 1 means improvement.
pub fn improvement_ratio(model_metric: f64, random_metric: f64) -> Result<f64> {
    if !(model_metric > 0.0 && random_metric > 0.0) {
        return Err(Error::InvalidInput(format!(
            "perplexities must be positive, got {model_metric} and {random_metric}"
        )));
    }
    Ok(random_metric / model_metric)
}

/// D(P || Q) in nats, with P the lexicon's unigram phoneme distribution.
pub fn kl_divergence(lexicon: &Lexicon, reference: &PhonemeDistribution) -> Result<f64> {
    let mut counts: HashMap<&str, u64> = HashMap::new();
    for t in lexicon.tokens().flatten() {
        *counts.entry(t).or_default() += 1;
    }
    let total: u64 = counts.values().sum();
    if total == 0 {
        return Err(Error::EmptyInput("lexicon has no phonemes".into()));
    }
    let mut entries: Vec<(&str, u64)> = counts.into_iter().collect();
    entries.sort_unstable();
    let mut kl = 0.0;
    for (sym, c) in entries {
        let q = reference
            .get(sym)
            .filter(|q| *q > 0.0)
            .ok_or_else(|| Error::Coverage(sym.to_string()))?;
        let p = c as f64 / total as f64;
        kl += p * (p / q).ln();
    }
    Ok(kl.max(0.0))
}

/// Seeded split into (train, held-out) by word. Both parts are non-empty when
/// the lexicon has at least two words.
pub fn split_heldout(lexicon: &Lexicon, fraction: f64, seed: u64) -> Result<(Lexicon, Lexicon)> {
    if lexicon.len() < 2 {
        return Err(Error::InvalidInput("need at least two words to hold some out".into()));
    }
    let n = lexicon.len();
    let held = ((fraction * n as f64).round() as usize).clamp(1, n - 1);
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut derive_rng(seed, "heldout", &[n as u64]));
    let (h, t) = idx.split_at(held);
    let mut h = h.to_vec();
    let mut t = t.to_vec();
    h.sort_unstable();
    t.sort_unstable();
    let pick = |ix: &[usize]| Lexicon::from_words(ix.iter().map(|&i| lexicon.words[i].clone()));
    Ok((pick(&t), pick(&h)))
}

/// Held-out score of a model trained on the rest of the same lexicon.
pub fn evaluate_heldout(lexicon: &Lexicon, config: &EvalConfig, seed: u64) -> Result<Score> {
    let (train, held) = split_heldout(lexicon, config.heldout_fraction, seed)?;
    NgramModel::train(&train, config.order, config.smoothing)?.score(&held)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossGrammarMatrix {
    pub grammars: Vec<GrammarKind>,
    /// Indexed `[train][test]`.
    pub log_likelihood: Vec<Vec<f64>>,
    pub perplexity: Vec<Vec<f64>>,
}

impl CrossGrammarMatrix {
    fn position(&self, g: GrammarKind) -> Option<usize> {
        self.grammars.iter().position(|x| *x == g)
    }

    pub fn ll(&self, train: GrammarKind, test: GrammarKind) -> Option<f64> {
        Some(self.log_likelihood[self.position(train)?][self.position(test)?])
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["train", "test", "avg_ll", "perplexity"])?;
        for (i, train) in self.grammars.iter().enumerate() {
            for (j, test) in self.grammars.iter().enumerate() {
                w.write_record([
                    train.label().to_string(),
                    test.label().to_string(),
                    format!("{:.6}", self.log_likelihood[i][j]),
                    format!("{:.6}", self.perplexity[i][j]),
                ])?;
            }
        }
        w.flush().map_err(|e| Error::io("<csv>", e))?;
        Ok(())
    }
}

/// Every cell trains on the train grammar's training split and scores the test
/// grammar's held-out split. The split depends only on the seed and lexicon size,
/// so the diagonal never scores memorised words.
pub fn cross_grammar_matrix(
    lexicons: &[(GrammarKind, Lexicon)],
    config: &EvalConfig,
    seed: u64,
) -> Result<CrossGrammarMatrix> {
    config.validate()?;
    let Some((_, first)) = lexicons.first() else {
        return Err(Error::EmptyInput("no lexicons to compare".into()));
    };
    if let Some((g, l)) = lexicons.iter().find(|(_, l)| l.len() != first.len()) {
        return Err(Error::SizeMismatch(format!(
            "lexicon for {g} has {} words, expected {}",
            l.len(),
            first.len()
        )));
    }
    let splits = lexicons
        .iter()
        .map(|(_, l)| split_heldout(l, config.heldout_fraction, seed))
        .collect::<Result<Vec<_>>>()?;
    let models = splits
        .par_iter()
        .map(|(train, _)| NgramModel::train(train, config.order, config.smoothing))
        .collect::<Result<Vec<_>>>()?;
    let k = lexicons.len();
    let cells = (0..k * k)
        .into_par_iter()
        .map(|c| models[c / k].score(&splits[c % k].1))
        .collect::<Result<Vec<_>>>()?;
    let grid = |f: fn(&Score) -> f64| -> Vec<Vec<f64>> {
        cells.chunks(k).map(|row| row.iter().map(f).collect()).collect()
    };
    Ok(CrossGrammarMatrix {
        grammars: lexicons.iter().map(|(g, _)| *g).collect(),
        log_likelihood: grid(|s| s.avg_log_likelihood),
        perplexity: grid(|s| s.perplexity),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub grammar: GrammarKind,
    pub lexicon_size: usize,
    pub seed: u64,
    pub perplexity: f64,
    pub avg_log_likelihood: f64,
    /// Relative to the random grammar at the same size and seed, when it was run.
    pub improvement_ratio: Option<f64>,
    pub kl_divergence: f64,
}

pub fn write_metrics_csv<W: Write>(out: W, reports: &[EvalReport]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["grammar", "size", "seed", "perplexity", "avg_ll", "improvement_ratio", "kl"])?;
    for r in reports {
        w.write_record([
            r.grammar.label().to_string(),
            r.lexicon_size.to_string(),
            r.seed.to_string(),
            format!("{:.6}", r.perplexity),
            format!("{:.6}", r.avg_log_likelihood),
            r.improvement_ratio.map(|x| format!("{x:.6}")).unwrap_or_default(),
            format!("{:.6}", r.kl_divergence),
        ])?;
    }
    w.flush().map_err(|e| Error::io("<csv>", e))?;
    Ok(())
}

/// Inputs for a size sweep. `inventories[i]` is the shared inventory for `seeds[i]`.
#[derive(Debug, Clone)]
pub struct SweepPlan<'a> {
    pub grammars: &'a [GrammarSpec],
    pub sizes: &'a [usize],
    pub seeds: &'a [u64],
    pub inventories: &'a [PhonemeInventory],
    pub generation: &'a GenerationConfig,
    pub eval: &'a EvalConfig,
    pub reference: &'a PhonemeDistribution,
}

/// Result of a sweep: the reports plus the largest lexicon per (seed, grammar).
#[derive(Debug, Clone)]
pub struct SweepOutput {
    pub reports: Vec<EvalReport>,
    pub lexicons: Vec<(u64, GrammarKind, Lexicon)>,
}

/// Evaluate every (grammar, size, seed) cell.
///
/// One lexicon of the largest size is generated per (seed, grammar); smaller
/// sizes are its prefixes, which equal what a direct run at that size would produce.
/// All grammars under one seed share the candidate-set streams.
pub fn size_sweep(plan: &SweepPlan<'_>) -> Result<SweepOutput> {
    let lexicons = sweep_lexicons(plan)?;
    let reports = sweep_reports(&lexicons, plan.sizes, plan.eval, plan.reference)?;
    Ok(SweepOutput { reports, lexicons })
}

fn check_sizes(sizes: &[usize]) -> Result<()> {
    if sizes.is_empty() || sizes.windows(2).any(|w| w[0] >= w[1]) || sizes[0] < 2 {
        return Err(Error::Config("sweep sizes must be ascending, distinct and at least 2".into()));
    }
    Ok(())
}

/// The generation half of [`size_sweep`]: one lexicon of the largest size per (seed, grammar).
pub fn sweep_lexicons(plan: &SweepPlan<'_>) -> Result<Vec<(u64, GrammarKind, Lexicon)>> {
    plan.eval.validate()?;
    check_sizes(plan.sizes)?;
    if plan.inventories.len() != plan.seeds.len() {
        return Err(Error::SizeMismatch(format!(
            "{} inventories for {} seeds",
            plan.inventories.len(),
            plan.seeds.len()
        )));
    }
    let max = *plan.sizes.last().expect("non-empty");
    let jobs: Vec<(usize, usize)> = (0..plan.seeds.len())
        .flat_map(|s| (0..plan.grammars.len()).map(move |g| (s, g)))
        .collect();
    jobs.par_iter()
        .map(|&(s, g)| {
            let seed = plan.seeds[s];
            let lex = generate_lexicon(
                &plan.grammars[g],
                &plan.inventories[s],
                plan.generation,
                max,
                derive_seed(seed, "lexicon", &[]),
            )?;
            Ok((seed, plan.grammars[g].kind, lex))
        })
        .collect()
}

/// The evaluation half of [`size_sweep`]. Each lexicon must hold at least the largest size.
pub fn sweep_reports(
    lexicons: &[(u64, GrammarKind, Lexicon)],
    sizes: &[usize],
    eval: &EvalConfig,
    reference: &PhonemeDistribution,
) -> Result<Vec<EvalReport>> {
    eval.validate()?;
    check_sizes(sizes)?;
    let max = *sizes.last().expect("non-empty");
    if let Some((_, g, l)) = lexicons.iter().find(|(_, _, l)| l.len() < max) {
        return Err(Error::SizeMismatch(format!("lexicon for {g} has {} words, sweep needs {max}", l.len())));
    }
    let cells: Vec<(usize, usize)> = (0..lexicons.len())
        .flat_map(|l| (0..sizes.len()).map(move |z| (l, z)))
        .collect();
    let mut reports = cells
        .par_iter()
        .map(|&(l, z)| {
            let (seed, kind, lex) = &lexicons[l];
            let size = sizes[z];
            let sub = lex.prefix(size);
            let s = evaluate_heldout(&sub, eval, derive_seed(*seed, "eval", &[size as u64]))?;
            Ok(EvalReport {
                grammar: *kind,
                lexicon_size: size,
                seed: *seed,
                perplexity: s.perplexity,
                avg_log_likelihood: s.avg_log_likelihood,
                improvement_ratio: None,
                kl_divergence: kl_divergence(&sub, reference)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let random: HashMap<(u64, usize), f64> = reports
        .iter()
        .filter(|r| r.grammar == GrammarKind::Random)
        .map(|r| ((r.seed, r.lexicon_size), r.perplexity))
        .collect();
    for r in &mut reports {
        if let Some(p) = random.get(&(r.seed, r.lexicon_size)) {
            r.improvement_ratio = Some(improvement_ratio(r.perplexity, *p)?);
        }
    }
    Ok(reports)
}

/// Mean of a metric over seeds for one (grammar, size) cell.
pub fn seed_mean(reports: &[EvalReport], grammar: GrammarKind, size: usize, metric: fn(&EvalReport) -> f64) -> Option<f64> {
    let xs: Vec<f64> = reports
        .iter()
        .filter(|r| r.grammar == grammar && r.lexicon_size == size)
        .map(metric)
        .collect();
    (!xs.is_empty()).then(|| xs.iter().sum::<f64>() / xs.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed::rng_from_seed;
    use rand::Rng as _;

    fn lex(words: &[&str]) -> Lexicon {
        Lexicon::from_words(words.iter().copied())
    }

    #[test]
    fn single_observation_bigram() {
        let m = NgramModel::train(&lex(&["a b"]), 2, Smoothing::AddK { k: 1e-12 }).unwrap();
        assert!((m.probability(&["a"], "b") - 1.0).abs() < 1e-9);
    }

    #[test]
    fn unseen_context_is_uniform() {
        let m = NgramModel::train(&lex(&["a b", "b a"]), 3, Smoothing::AddK { k: 0.5 }).unwrap();
        let v = m.vocabulary().len() as f64;
        for s in m.vocabulary() {
            assert!((m.probability(&["b", "b"], s) - 1.0 / v).abs() < 1e-12);
        }
    }

    #[test]
    fn hand_counted_bigrams() {
        // Corpus: "a b", "a a", "b". Vocabulary {a, b, </s>, <unk>}, k = 1.
        // Context <s>: a twice, b once (total 3). Context a: b 1, a 1, </s> 1 (total 3).
        let m = NgramModel::train(&lex(&["a b", "a a", "b"]), 2, Smoothing::AddK { k: 1.0 }).unwrap();
        assert!((m.probability(&["<s>"], "a") - 3.0 / 7.0).abs() < 1e-12);
        assert!((m.probability(&["<s>"], "b") - 2.0 / 7.0).abs() < 1e-12);
        assert!((m.probability(&["a"], "b") - 2.0 / 7.0).abs() < 1e-12);
        assert!((m.probability(&["a"], END) - 2.0 / 7.0).abs() < 1e-12);
        assert!((m.probability(&["b"], END) - 3.0 / 6.0).abs() < 1e-12);
        assert!((m.probability(&["b"], "zz") - 1.0 / 6.0).abs() < 1e-12);
    }

    #[test]
    fn conditionals_sum_to_one() {
        let corpus = lex(&["t a k a", "p a t i", "k i t a", "a p a"]);
        for smoothing in [Smoothing::AddK { k: 0.1 }, Smoothing::WittenBell] {
            for order in 1..=4 {
                let m = NgramModel::train(&corpus, order, smoothing).unwrap();
                for ctx in [vec![], vec!["a"], vec!["t", "a"], vec!["<s>", "<s>", "k"], vec!["q", "a"]] {
                    let total: f64 = m.vocabulary().iter().map(|s| m.probability(&ctx, s)).sum();
                    assert!((total - 1.0).abs() < 1e-9, "{smoothing:?} {order} {ctx:?} {total}");
                }
            }
        }
    }

    #[test]
    fn memorised_word_has_low_perplexity() {
        let corpus = Lexicon::from_words(std::iter::repeat_n("k a t a", 200));
        let m = NgramModel::train(&corpus, 2, Smoothing::AddK { k: 1e-6 }).unwrap();
        let s = m.score(&lex(&["k a t a"])).unwrap();
        assert!(s.perplexity < 1.6, "{}", s.perplexity);
        assert!((s.perplexity - (-s.avg_log_likelihood).exp()).abs() < 1e-12);
    }

    #[test]
    fn uniform_symbols_give_alphabet_size_perplexity() {
        let alphabet = ["a", "b", "c", "d", "e", "f", "g", "h"];
        let mut rng = rng_from_seed(3);
        let mut gen = |n: usize| {
            let words: Vec<String> = (0..n)
                .map(|_| {
                    (0..200)
                        .map(|_| alphabet[rng.random_range(0..alphabet.len())])
                        .collect::<Vec<_>>()
                        .join(" ")
                })
                .collect();
            Lexicon::from_words(words)
        };
        let train = gen(200);
        let test = gen(20);
        let s = NgramModel::train(&train, 1, Smoothing::AddK { k: 0.1 }).unwrap().score(&test).unwrap();
        // End markers are one token in 201 and carry little weight.
        assert!((s.perplexity / 8.0 - 1.0).abs() < 0.05, "{}", s.perplexity);
    }

    #[test]
    fn improvement_ratio_identities() {
        assert_eq!(improvement_ratio(3.0, 3.0).unwrap(), 1.0);
        assert!((improvement_ratio(5.2, 8.6).unwrap() - 1.654).abs() < 1e-3);
        let r = improvement_ratio(2.0, 7.0).unwrap() * improvement_ratio(7.0, 2.0).unwrap();
        assert!((r - 1.0).abs() < 1e-12);
        assert!(improvement_ratio(0.0, 1.0).is_err());
    }

    #[test]
    fn kl_closed_forms() {
        let q = PhonemeDistribution::from_weights([("a", 1.0), ("b", 1.0)]).unwrap();
        assert!(kl_divergence(&lex(&["a b", "b a"]), &q).unwrap().abs() < 1e-12);
        assert!((kl_divergence(&lex(&["a a a"]), &q).unwrap() - std::f64::consts::LN_2).abs() < 1e-12);
        let q = PhonemeDistribution::from_weights([("a", 0.2), ("b", 0.8)]).unwrap();
        // P = (3/4, 1/4).
        let want = 0.75 * (0.75f64 / 0.2).ln() + 0.25 * (0.25f64 / 0.8).ln();
        assert!((kl_divergence(&lex(&["a b a", "a"]), &q).unwrap() - want).abs() < 1e-12);
        assert!(matches!(kl_divergence(&lex(&["a z"]), &q), Err(Error::Coverage(s)) if s == "z"));
    }

    #[test]
    fn split_is_disjoint_and_deterministic() {
        let words: Vec<String> = (0..50).map(|i| format!("w {i}")).collect();
        let l = Lexicon::from_words(words);
        let (t1, h1) = split_heldout(&l, 0.2, 9).unwrap();
        let (t2, h2) = split_heldout(&l, 0.2, 9).unwrap();
        assert_eq!((t1.words.clone(), h1.words.clone()), (t2.words, h2.words));
        assert_eq!(h1.len(), 10);
        assert!(h1.words.iter().all(|w| !t1.words.contains(w)));
        assert_eq!(t1.len() + h1.len(), 50);
    }

    #[test]
    fn identical_lexicons_give_flat_matrix() {
        let words: Vec<String> = (0..40).map(|i| format!("t a {} i", ["k", "p", "s", "m"][i % 4])).collect();
        let l = Lexicon::from_words(words.iter().enumerate().map(|(i, w)| format!("{w} {}", "a ".repeat(i % 7).trim())));
        let lexs: Vec<(GrammarKind, Lexicon)> = [GrammarKind::Deterministic, GrammarKind::StrictOt, GrammarKind::Maxent, GrammarKind::Random]
            .into_iter()
            .map(|g| (g, l.clone()))
            .collect();
        let m = cross_grammar_matrix(&lexs, &EvalConfig::default(), 1).unwrap();
        let x = m.log_likelihood[0][0];
        assert!(m.log_likelihood.iter().flatten().all(|v| (v - x).abs() < 1e-9));
        let mut bad = lexs.clone();
        bad[1].1.words.pop();
        assert!(matches!(cross_grammar_matrix(&bad, &EvalConfig::default(), 1), Err(Error::SizeMismatch(_))));
    }

    #[test]
    fn metrics_csv_header() {
        let mut out = Vec::new();
        write_metrics_csv(&mut out, &[]).unwrap();
        assert_eq!(String::from_utf8(out).unwrap().trim(), "grammar,size,seed,perplexity,avg_ll,improvement_ratio,kl");
    }
}
