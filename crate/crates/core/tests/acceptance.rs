//! Acceptance checks. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any fails.
//!
//! The PHOIBLE CSV is read from `PHOIBLE_CSV`, else `data/phoible.csv` at the
//! workspace root.

use std::collections::HashSet;
use std::path::PathBuf;
use std::time::Instant;

use phonolex::candidates::ViolationVector;
use phonolex::evaluation::{kl_divergence, seed_mean, split_heldout, train_ngram};
use phonolex::grammar::{harmony, hg_select, maxent_probabilities, maxent_sample, strict_ot_select};
use phonolex::inventory::Enforcement;
use phonolex::semantics::{alignment_score, form_distance, spearman};
use phonolex::stats::{all_statistics, ChiSquareOptions, FeatureStat, StatKind};
use phonolex::*;
use rand::seq::{IndexedRandom, SliceRandom};
use rand::Rng as _;
use statrs::distribution::{ChiSquared, ContinuousCDF};

fn phoible_path() -> PathBuf {
    std::env::var_os("PHOIBLE_CSV")
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data/phoible.csv"))
}

struct Report {
    failed: usize,
}

impl Report {
    fn line(&mut self, n: u32, name: &str, pass: bool, detail: String) {
        if !pass {
            self.failed += 1;
        }
        println!("{} {n} {name}: {detail}", if pass { "PASS" } else { "FAIL" });
    }
}

fn find<'a>(stats: &'a [FeatureStat], kind: StatKind, lhs: &str, rhs: &str) -> Option<&'a FeatureStat> {
    stats.iter().find(|s| s.kind == kind && s.lhs == lhs && s.rhs == rhs)
}

fn criterion_1(r: &mut Report) {
    let t = Instant::now();
    let db = match parse_phoible_csv(phoible_path()) {
        Ok(db) => db,
        Err(e) => return r.line(1, "phoible statistics", false, format!("cannot read PHOIBLE: {e}")),
    };
    let (stats, _) = all_statistics(&db, ChiSquareOptions::default()).expect("statistics");
    let elapsed = t.elapsed().as_secs_f64();
    let pearson = [
        ("consonant_count", "ejective", 0.324),
        ("consonant_count", "click", 0.188),
        ("inventory_size", "click", 0.188),
        ("vowel_count", "long_vowel", 0.412),
    ];
    let implications = [
        ("pharyngeal", "uvular", 1.000),
        ("nasal_vowel", "oral_vowel", 1.000),
        ("voiced_obstruent", "voiceless_obstruent", 0.997),
        ("fricative", "stop", 1.000),
        ("front_rounded_vowel", "front_unrounded_vowel", 1.000),
    ];
    let mut ok = elapsed < 60.0;
    let mut parts = Vec::new();
    for (l, rh, want) in pearson {
        match find(&stats, StatKind::PearsonR, l, rh) {
            Some(s) => {
                ok &= (s.value - want).abs() <= 0.02 && s.p_value.is_some_and(|p| p < 0.001);
                parts.push(format!("r({l},{rh})={:.3}/{want}", s.value));
            }
            None => {
                ok = false;
                parts.push(format!("r({l},{rh}) missing"));
            }
        }
    }
    for (l, rh, want) in implications {
        match find(&stats, StatKind::ConditionalProb, l, rh) {
            Some(s) => {
                ok &= (s.value - want).abs() <= 0.005;
                parts.push(format!("P({rh}|{l})={:.3}/{want}", s.value));
            }
            None => {
                ok = false;
                parts.push(format!("P({rh}|{l}) missing"));
            }
        }
    }
    let antecedents = find(&stats, StatKind::ConditionalProb, "voiced_obstruent", "voiceless_obstruent")
        .and_then(|s| s.total_x)
        .unwrap_or(0);
    ok &= (antecedents as f64 - 2355.0).abs() <= 0.05 * 2355.0;
    parts.push(format!("voiced antecedents={antecedents}/2355"));
    parts.push(format!("{elapsed:.1}s"));
    r.line(1, "phoible statistics", ok, parts.join(" "));
}

const PLOTTED: [GrammarKind; 4] = [
    GrammarKind::Deterministic,
    GrammarKind::StrictOt,
    GrammarKind::Maxent,
    GrammarKind::Random,
];

/// Criteria 2-4; returns the runtime line for criterion 9.
fn default_scale(r: &mut Report) -> (bool, String) {
    let dir = tempfile::tempdir().expect("tempdir");
    let config = RunConfig {
        phoible_path: phoible_path(),
        output_dir: dir.path().to_path_buf(),
        ..RunConfig::default()
    };
    let out = match run_pipeline(&config) {
        Ok(o) => o,
        Err(e) => {
            for (n, name) in [(2, "perplexity ordering"), (3, "KL dissociation"), (4, "cross-grammar asymmetry")] {
                r.line(n, name, false, format!("pipeline failed: {e}"));
            }
            return (false, format!("pipeline failed: {e}"));
        }
    };
    let n = *config.lexicon_sizes.last().unwrap();
    let mean = |g, f: fn(&EvalReport) -> f64| seed_mean(&out.reports, g, n, f).unwrap();
    let [det, ot, me, rnd] = PLOTTED.map(|g| mean(g, |x| x.perplexity));
    let gap = (ot - me).abs() < 0.5 * (det - ot.max(me));
    r.line(
        2,
        "perplexity ordering",
        ot < det && me < det && det < rnd && gap,
        format!(
            "N={n}, {} seeds: det {det:.3} ot {ot:.3} maxent {me:.3} random {rnd:.3}; |ot-maxent| {:.3} vs half-gap {:.3}",
            config.replicates,
            (ot - me).abs(),
            0.5 * (det - ot.max(me))
        ),
    );
    let [kdet, kot, kme, krnd] = PLOTTED.map(|g| mean(g, |x| x.kl_divergence));
    r.line(
        3,
        "KL dissociation",
        kdet > kme && (kme - krnd).abs() < 0.05,
        format!("det {kdet:.4} ot {kot:.4} maxent {kme:.4} random {krnd:.4}; |maxent-random| {:.4}", (kme - krnd).abs()),
    );
    let m = &out.cross_mean;
    let ll = |a, b| m.ll(a, b).unwrap();
    use GrammarKind::{Deterministic as D, Maxent as M, Random as R, StrictOt as O};
    let c = [
        ll(D, O) > ll(O, D),
        ll(D, M) > ll(M, D),
        (ll(O, M) - ll(O, O)).abs() < (ll(O, D) - ll(O, O)).abs(),
        [D, O, M].iter().all(|&g| ll(R, R) < ll(g, g)),
    ];
    r.line(
        4,
        "cross-grammar asymmetry",
        c.iter().all(|x| *x),
        format!(
            "LL det->ot {:.4} ot->det {:.4}; det->maxent {:.4} maxent->det {:.4}; ot->maxent {:.4} ot->ot {:.4} ot->det {:.4}; diag det {:.4} ot {:.4} maxent {:.4} random {:.4}",
            ll(D, O), ll(O, D), ll(D, M), ll(M, D), ll(O, M), ll(O, O), ll(O, D), ll(D, D), ll(O, O), ll(M, M), ll(R, R)
        ),
    );
    let cores = std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1);
    (
        out.elapsed_secs < 1800.0,
        format!(
            "full pipeline (4 grammars, sizes {:?}, {} replicates, semantics on) in {:.1}s on {cores} core(s); limit 1800s",
            config.lexicon_sizes, config.replicates, out.elapsed_secs
        ),
    )
}

fn random_tableau(rng: &mut Rng, max: usize) -> Vec<ViolationVector> {
    let k = rng.random_range(1..=max);
    (0..k)
        .map(|_| {
            let mut v = ViolationVector::default();
            for c in Constraint::ALL {
                v.set(c, rng.random_range(0..4));
            }
            v
        })
        .collect()
}

/// Classic OT evaluation: filter by each constraint from the top, keep the first survivor.
fn ot_filter(vs: &[ViolationVector], ranking: &[Constraint]) -> Option<usize> {
    let mut alive: Vec<usize> = (0..vs.len()).collect();
    for c in ranking {
        let best = alive.iter().map(|&i| vs[i].get(*c)).min()?;
        alive.retain(|&i| vs[i].get(*c) == best);
    }
    alive.first().copied()
}

fn criterion_5(r: &mut Report) {
    let mut rng = rng_from_seed(5);
    let (mut ot_ok, mut hg_ok) = (0, 0);
    for _ in 0..1000 {
        let vs = random_tableau(&mut rng, 8);
        let mut ranking = Constraint::ALL.to_vec();
        ranking.shuffle(&mut rng);
        ot_ok += usize::from(strict_ot_select(&vs, &ranking) == ot_filter(&vs, &ranking));
        let w: [f64; 5] = std::array::from_fn(|_| f64::from(rng.random_range(1u32..=20)));
        let sums: Vec<u32> = vs
            .iter()
            .map(|v| Constraint::ALL.iter().map(|c| v.get(*c) * w[c.index()] as u32).sum())
            .collect();
        let min = *sums.iter().min().unwrap();
        let want = sums.iter().position(|s| *s == min);
        hg_ok += usize::from(hg_select(&vs, &w) == want);
    }
    r.line(
        5,
        "grammar oracle equivalence",
        ot_ok == 1000 && hg_ok == 1000,
        format!("strict OT {ot_ok}/1000, HG {hg_ok}/1000 match brute force"),
    );
}

fn criterion_6(r: &mut Report) {
    let mut rng = rng_from_seed(6);
    let mut passed = 0;
    let mut worst = f64::INFINITY;
    for _ in 0..20 {
        let k = rng.random_range(3..=5);
        let mut vs = random_tableau(&mut rng, 8);
        vs.truncate(k);
        while vs.len() < k {
            vs.extend(random_tableau(&mut rng, 1));
        }
        let w: [f64; 5] = std::array::from_fn(|_| rng.random_range(0.1..1.5));
        let probs = maxent_probabilities(&vs, &w);
        // Analytic reference straight from the definition.
        let z: f64 = vs.iter().map(|v| (-harmony(v, &w)).exp()).sum();
        assert!(vs.iter().zip(&probs).all(|(v, p)| ((-harmony(v, &w)).exp() / z - p).abs() < 1e-12));
        let draws = 100_000;
        let mut counts = vec![0u64; k];
        for _ in 0..draws {
            counts[maxent_sample(&vs, &w, &mut rng).unwrap()] += 1;
        }
        let stat: f64 = counts
            .iter()
            .zip(&probs)
            .map(|(&o, &p)| {
                let e = p * draws as f64;
                (o as f64 - e).powi(2) / e
            })
            .sum();
        let p = 1.0 - ChiSquared::new((k - 1) as f64).unwrap().cdf(stat);
        worst = worst.min(p);
        passed += usize::from(p > 0.01);
    }
    r.line(
        6,
        "maxent sampling",
        passed >= 19,
        format!("{passed}/20 tableaux pass chi-square at p > 0.01 (smallest p {worst:.4})"),
    );
}

fn random_words(rng: &mut Rng, n: usize) -> Vec<String> {
    let alphabet = ["p", "t", "k", "m", "n", "s", "a", "i", "u"];
    let mut seen = HashSet::new();
    while seen.len() < n {
        let len = rng.random_range(1..=6);
        let w: Vec<&str> = (0..len).map(|_| *alphabet.choose(rng).unwrap()).collect();
        seen.insert(w.join(" "));
    }
    let mut v: Vec<String> = seen.into_iter().collect();
    v.sort();
    v.shuffle(rng);
    v
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for pos in 0..=p.len() {
            let mut q = p.clone();
            q.insert(pos, n - 1);
            out.push(q);
        }
    }
    out
}

fn exhaustive_best(meanings: &[String], words: &[String], ont: &Ontology) -> f64 {
    let n = meanings.len();
    let toks: Vec<Vec<&str>> = words.iter().map(|w| w.split(' ').collect()).collect();
    let mut sem = Vec::new();
    let mut pairs = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            sem.push(f64::from(ont.semantic_distance(&meanings[i], &meanings[j]).unwrap()));
            pairs.push((i, j));
        }
    }
    let form: Vec<Vec<f64>> = (0..n)
        .map(|a| (0..n).map(|b| form_distance(&toks[a], &toks[b]) as f64).collect())
        .collect();
    permutations(n)
        .iter()
        .map(|p| {
            let f: Vec<f64> = pairs.iter().map(|&(i, j)| form[p[i]][p[j]]).collect();
            spearman(&sem, &f).unwrap_or(0.0)
        })
        .fold(f64::NEG_INFINITY, f64::max)
}

fn criterion_7(r: &mut Report) {
    let ont = Ontology::bundled();
    let leaves: Vec<String> = ont.leaf_ids().map(String::from).collect();
    let mut rng = rng_from_seed(7);
    let config = HillClimbConfig {
        restarts: 20,
        ..HillClimbConfig::default()
    };
    let mut micro_ok = true;
    let mut parts = Vec::new();
    for n in 3..=7 {
        let mut hits = 0;
        for trial in 0..100u64 {
            let meanings: Vec<String> = leaves.choose_multiple(&mut rng, n).cloned().collect();
            let words = random_words(&mut rng, n);
            let best = exhaustive_best(&meanings, &words, &ont);
            let got = hill_climb_assign(&meanings, &words, &ont, &config, trial).unwrap().score;
            hits += usize::from((got - best).abs() < 1e-9);
        }
        micro_ok &= hits >= 95;
        parts.push(format!("N={n} {hits}/100"));
    }
    let meanings: Vec<String> = leaves.choose_multiple(&mut rng, 100).cloned().collect();
    let words = random_words(&mut rng, 100);
    let null: Vec<f64> = (0..1000)
        .map(|_| {
            let mut w = words.clone();
            w.shuffle(&mut rng);
            alignment_score(&meanings, &w, &ont).unwrap().unwrap_or(0.0)
        })
        .collect();
    let mu = null.iter().sum::<f64>() / null.len() as f64;
    let sd = (null.iter().map(|x| (x - mu).powi(2)).sum::<f64>() / (null.len() - 1) as f64).sqrt();
    let a = hill_climb_assign(
        &meanings,
        &words,
        &ont,
        &HillClimbConfig {
            restarts: 5,
            ..HillClimbConfig::default()
        },
        100,
    )
    .unwrap();
    let fin = a.restart_scores.iter().sum::<f64>() / a.restart_scores.len() as f64;
    let z = (fin - mu) / sd;
    r.line(
        7,
        "assignment optimality",
        micro_ok && z > 3.0,
        format!("{}; N=100 mean final rho {fin:.4} vs null {mu:.4} +- {sd:.4} (z = {z:.1})", parts.join(", ")),
    );
}

fn criterion_8(r: &mut Report) {
    let mut parts = Vec::new();
    let mut ok = true;

    // Universal repair over sampled inventories.
    match parse_phoible_csv(phoible_path()) {
        Ok(db) => {
            let rules = default_rules();
            let categorical: Vec<UniversalRule> =
                rules.iter().copied().filter(|r| r.enforcement == Enforcement::Deterministic).collect();
            let (mut violations, mut not_idempotent) = (0, 0);
            for s in 0..10_000u64 {
                let cfg = SamplerConfig {
                    seed: s,
                    ..SamplerConfig::default()
                };
                let inv = sample_inventory(&db, &cfg).expect("sample");
                violations += usize::from(!inv.violated_rules(&categorical).is_empty());
                let again = repair_universals(inv.clone(), &categorical, &db, &mut rng_from_seed(s)).expect("repair");
                not_idempotent += usize::from(again != inv);
            }
            ok &= violations == 0 && not_idempotent == 0;
            parts.push(format!("repair: {violations} categorical violations, {not_idempotent} changed on re-repair (10000 inventories)"));
        }
        Err(e) => {
            ok = false;
            parts.push(format!("repair: cannot read PHOIBLE: {e}"));
        }
    }

    // Metric properties of both distances.
    let ont = Ontology::bundled();
    let leaves: Vec<String> = ont.leaf_ids().map(String::from).collect();
    let mut rng = rng_from_seed(8);
    let mut metric_bad = 0;
    for _ in 0..2000 {
        let m: Vec<&String> = leaves.choose_multiple(&mut rng, 3).collect();
        let d = |a: &String, b: &String| ont.semantic_distance(a, b).unwrap();
        metric_bad += usize::from(
            d(m[0], m[1]) != d(m[1], m[0]) || d(m[0], m[0]) != 0 || d(m[0], m[1]) == 0 || d(m[0], m[2]) > d(m[0], m[1]) + d(m[1], m[2]),
        );
        let w = random_words(&mut rng, 3);
        let t: Vec<Vec<&str>> = w.iter().map(|x| x.split(' ').collect()).collect();
        let f = |a: usize, b: usize| form_distance(&t[a], &t[b]);
        metric_bad += usize::from(f(0, 1) != f(1, 0) || f(0, 0) != 0 || f(0, 1) == 0 || f(0, 2) > f(0, 1) + f(1, 2));
    }
    ok &= metric_bad == 0;
    parts.push(format!("metric violations {metric_bad}/4000"));

    // Perplexity / log-likelihood identity and KL non-negativity.
    let mut identity_bad = 0;
    let mut kl_bad = 0;
    for s in 0..200u64 {
        let mut rng = rng_from_seed(1000 + s);
        let words = random_words(&mut rng, 40);
        let lex = Lexicon::from_words(words);
        let (train, test) = split_heldout(&lex, 0.25, s).unwrap();
        let model = train_ngram(&train, 1 + (s as usize % 3), Smoothing::AddK { k: 0.1 }).unwrap();
        let sc = model.score(&test).unwrap();
        identity_bad += usize::from((sc.perplexity - (-sc.avg_log_likelihood).exp()).abs() > 1e-9 * sc.perplexity);
        let q = PhonemeDistribution::from_weights(
            ["p", "t", "k", "m", "n", "s", "a", "i", "u"].map(|x| (x, rng.random_range(0.01..1.0))),
        )
        .unwrap();
        let kl = kl_divergence(&lex, &q).unwrap();
        kl_bad += usize::from(kl.is_nan() || kl < 0.0);
    }
    ok &= identity_bad == 0 && kl_bad == 0;
    parts.push(format!("ppl/ll identity failures {identity_bad}/200, negative KL {kl_bad}/200"));

    // Bit-level reproducibility of a small pipeline run.
    let dir = tempfile::tempdir().unwrap();
    let run = |sub: &str| {
        let c = RunConfig {
            phoible_path: phoible_path(),
            output_dir: dir.path().join(sub),
            replicates: 2,
            lexicon_sizes: vec![100, 300],
            semantics: phonolex::pipeline::SemanticsConfig {
                restarts: 2,
                max_proposals: 5000,
                ..Default::default()
            },
            ..RunConfig::default()
        };
        run_full_pipeline(&c)
    };
    match (run("a"), run("b")) {
        (Ok(a), Ok(b)) => {
            let same = a.without_timestamps() == b.without_timestamps();
            ok &= same;
            parts.push(format!("manifests identical: {same} ({} files)", a.outputs().count()));
        }
        (Err(e), _) | (_, Err(e)) => {
            ok = false;
            parts.push(format!("pipeline failed: {e}"));
        }
    }
    r.line(8, "invariant suites", ok, parts.join("; "));
}

fn main() {
    // Under `cargo test -- <filter>` only run when the filter names this target.
    let args: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    if !args.is_empty() && !args.iter().any(|a| "acceptance".contains(a.as_str())) {
        return;
    }
    let mut r = Report { failed: 0 };
    criterion_1(&mut r);
    let (fast, runtime) = default_scale(&mut r);
    criterion_5(&mut r);
    criterion_6(&mut r);
    criterion_7(&mut r);
    criterion_8(&mut r);
    r.line(9, "runtime", fast, runtime);
    if r.failed > 0 {
        std::process::exit(1);
    }
}
