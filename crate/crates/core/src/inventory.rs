//! Phoneme inventory sampling.
//!
//! Inventory sizes are drawn under a vowel/consonant ratio bound, segments are drawn
//! without replacement in proportion to their cross-linguistic frequency, and the
//! result is repaired so that the implicational universals hold.

use std::collections::HashSet;

use rand::seq::IndexedRandom;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{FeatureBundle, FeatureClass, SegmentClass};
use crate::phoible::{SegmentDatabase, SegmentId};
use crate::seed::{rng_from_seed, Rng};
use crate::stats::IMPLICATIONS;

/// Maximum number of size/inventory draws before the sampler gives up.
pub const MAX_SAMPLING_ATTEMPTS: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Archetype {
    #[default]
    None,
    /// Small CV-dominant system: sizes from the bottom quartile of each range,
    /// no clicks or ejectives, and no complex codas downstream.
    SmallCv,
    /// Consonant counts from the top quartile of the configured range.
    ConsonantRich,
}

impl std::str::FromStr for Archetype {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(Archetype::None),
            "small_cv" | "small-cv" => Ok(Archetype::SmallCv),
            "consonant_rich" | "consonant-rich" => Ok(Archetype::ConsonantRich),
            other => Err(Error::Config(format!("unknown archetype `{other}`"))),
        }
    }
}

impl Archetype {
    fn excluded_classes(self) -> &'static [FeatureClass] {
        match self {
            Archetype::SmallCv => &[FeatureClass::Ejective, FeatureClass::Click],
            _ => &[],
        }
    }
}

/// How consonant and vowel counts are drawn within their ranges.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SizeDistribution {
    /// PHOIBLE's size histogram restricted to the range.
    #[default]
    Empirical,
    Uniform,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SamplerConfig {
    pub consonant_count_range: [u32; 2],
    pub vowel_count_range: [u32; 2],
    pub ratio_bounds: [f64; 2],
    pub archetype: Archetype,
    pub seed: u64,
    pub size_conditioning: bool,
    pub size_distribution: SizeDistribution,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        SamplerConfig {
            consonant_count_range: [14, 36],
            vowel_count_range: [4, 10],
            ratio_bounds: [0.15, 0.40],
            archetype: Archetype::None,
            seed: 0,
            size_conditioning: true,
            size_distribution: SizeDistribution::Empirical,
        }
    }
}

fn quartile(range: [u32; 2], top: bool) -> [u32; 2] {
    let span = (range[1] - range[0]) / 4;
    if top {
        [range[1] - span, range[1]]
    } else {
        [range[0], range[0] + span]
    }
}

impl SamplerConfig {
    /// Check invariants and that at least one (consonant, vowel) pair satisfies the ratio bound.
    pub fn validate(&self) -> Result<()> {
        let [lo, hi] = self.ratio_bounds;
        if !(lo > 0.0 && hi < 1.0 && lo < hi) {
            return Err(Error::Config(format!(
                "ratio bounds must satisfy 0 < min < max < 1, got [{lo}, {hi}]"
            )));
        }
        for (name, [a, b]) in [
            ("consonant_count_range", self.consonant_count_range),
            ("vowel_count_range", self.vowel_count_range),
        ] {
            if a == 0 || a > b {
                return Err(Error::Config(format!(
                    "{name} must be a non-empty positive range, got [{a}, {b}]"
                )));
            }
        }
        let sizes = self.effective_ranges();
        if !feasible_pairs(sizes.0, sizes.1, self.ratio_bounds).any(|_| true) {
            return Err(Error::Config(format!(
                "no consonant count in {:?} and vowel count in {:?} gives a vowel/consonant ratio in [{lo}, {hi}]",
                sizes.0, sizes.1
            )));
        }
        Ok(())
    }

    /// Count ranges after the archetype override.
    pub fn effective_ranges(&self) -> ([u32; 2], [u32; 2]) {
        match self.archetype {
            Archetype::None => (self.consonant_count_range, self.vowel_count_range),
            Archetype::SmallCv => (
                quartile(self.consonant_count_range, false),
                quartile(self.vowel_count_range, false),
            ),
            Archetype::ConsonantRich => {
                (quartile(self.consonant_count_range, true), self.vowel_count_range)
            }
        }
    }

    pub fn ratio_ok(&self, consonants: usize, vowels: usize) -> bool {
        ratio_in(consonants as u32, vowels as u32, self.ratio_bounds)
    }
}

fn ratio_in(c: u32, v: u32, [lo, hi]: [f64; 2]) -> bool {
    if c == 0 {
        return false;
    }
    let r = f64::from(v) / f64::from(c);
    r >= lo && r <= hi
}

fn feasible_pairs(cons: [u32; 2], vows: [u32; 2], bounds: [f64; 2]) -> impl Iterator<Item = (u32, u32)> {
    (cons[0]..=cons[1])
        .flat_map(move |c| (vows[0]..=vows[1]).map(move |v| (c, v)))
        .filter(move |&(c, v)| ratio_in(c, v, bounds))
}

/// Per-class inventory size frequencies observed in the database.
#[derive(Debug, Clone, PartialEq)]
pub struct SizeHistogram {
    consonants: Vec<u32>,
    vowels: Vec<u32>,
}

impl SizeHistogram {
    pub fn from_db(db: &SegmentDatabase) -> Self {
        let mut h = SizeHistogram {
            consonants: Vec::new(),
            vowels: Vec::new(),
        };
        for inv in db.inventories() {
            for (class, bins) in [
                (SegmentClass::Consonant, &mut h.consonants),
                (SegmentClass::Vowel, &mut h.vowels),
            ] {
                let n = db.class_count(inv, class);
                if bins.len() <= n {
                    bins.resize(n + 1, 0);
                }
                bins[n] += 1;
            }
        }
        h
    }

    fn median(bins: &[u32]) -> f64 {
        let total: u32 = bins.iter().sum();
        if total == 0 {
            return 0.0;
        }
        let mut acc = 0;
        for (n, c) in bins.iter().enumerate() {
            acc += c;
            if 2 * acc >= total {
                return n as f64;
            }
        }
        (bins.len() - 1) as f64
    }

    pub fn median_consonants(&self) -> f64 {
        Self::median(&self.consonants)
    }

    pub fn median_vowels(&self) -> f64 {
        Self::median(&self.vowels)
    }
}

fn draw_count(range: [u32; 2], bins: Option<&[u32]>, rng: &mut Rng) -> u32 {
    if let Some(bins) = bins {
        let support: Vec<(u32, u32)> = (range[0]..=range[1])
            .map(|n| (n, bins.get(n as usize).copied().unwrap_or(0)))
            .filter(|(_, w)| *w > 0)
            .collect();
        if let Ok(&(n, _)) = support.choose_weighted(rng, |(_, w)| *w) {
            return n;
        }
    }
    rng.random_range(range[0]..=range[1])
}

/// Draw consonant and vowel counts uniformly within the configured ranges.
pub fn sample_sizes(config: &SamplerConfig, rng: &mut Rng) -> Result<(u32, u32)> {
    sample_sizes_with(config, None, rng)
}

/// Draw consonant and vowel counts, resampling until the ratio bound holds.
pub fn sample_sizes_with(
    config: &SamplerConfig,
    histogram: Option<&SizeHistogram>,
    rng: &mut Rng,
) -> Result<(u32, u32)> {
    config.validate()?;
    let (cons, vows) = config.effective_ranges();
    for _ in 0..MAX_SAMPLING_ATTEMPTS {
        let c = draw_count(cons, histogram.map(|h| h.consonants.as_slice()), rng);
        let v = draw_count(vows, histogram.map(|h| h.vowels.as_slice()), rng);
        if ratio_in(c, v, config.ratio_bounds) {
            return Ok((c, v));
        }
    }
    Err(Error::Config(format!(
        "ratio bound not met after {MAX_SAMPLING_ATTEMPTS} size draws"
    )))
}

/// A segment in a sampled inventory together with its feature bundle.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Phoneme {
    pub segment: String,
    pub class: SegmentClass,
    pub features: FeatureBundle,
}

impl Phoneme {
    pub fn is(&self, class: FeatureClass) -> bool {
        class.matches(self.class, &self.features)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhonemeInventory {
    pub consonants: Vec<Phoneme>,
    pub vowels: Vec<Phoneme>,
    pub seed: u64,
    pub config: SamplerConfig,
}

impl PhonemeInventory {
    /// Build an inventory directly from segment strings using the fallback feature table.
    pub fn from_segments(consonants: &[&str], vowels: &[&str]) -> Result<Self> {
        let make = |segs: &[&str], want: SegmentClass| -> Result<Vec<Phoneme>> {
            segs.iter()
                .map(|s| {
                    let (class, features) = crate::features::fallback_bundle(s)
                        .ok_or_else(|| Error::FeatureLookup(s.to_string()))?;
                    if class != want {
                        return Err(Error::InvalidInput(format!("`{s}` is not a {want:?}")));
                    }
                    Ok(Phoneme {
                        segment: s.to_string(),
                        class,
                        features,
                    })
                })
                .collect()
        };
        Ok(PhonemeInventory {
            consonants: make(consonants, SegmentClass::Consonant)?,
            vowels: make(vowels, SegmentClass::Vowel)?,
            seed: 0,
            config: SamplerConfig::default(),
        })
    }

    /// All segments, consonants first.
    pub fn phonemes(&self) -> impl Iterator<Item = &Phoneme> {
        self.consonants.iter().chain(&self.vowels)
    }

    pub fn len(&self) -> usize {
        self.consonants.len() + self.vowels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn has(&self, class: FeatureClass) -> bool {
        self.phonemes().any(|p| p.is(class))
    }

    pub fn contains(&self, segment: &str) -> bool {
        self.phonemes().any(|p| p.segment == segment)
    }

    pub fn ratio(&self) -> f64 {
        self.vowels.len() as f64 / self.consonants.len() as f64
    }

    /// Rules whose antecedent is present without the consequent.
    pub fn violated_rules<'r>(&self, rules: &'r [UniversalRule]) -> Vec<&'r UniversalRule> {
        rules
            .iter()
            .filter(|r| self.has(r.antecedent) && !self.has(r.consequent))
            .collect()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Enforcement {
    Deterministic,
    Probabilistic,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UniversalRule {
    pub antecedent: FeatureClass,
    pub consequent: FeatureClass,
    pub strength: f64,
    pub enforcement: Enforcement,
}

impl UniversalRule {
    pub fn new(antecedent: FeatureClass, consequent: FeatureClass, strength: f64) -> Result<Self> {
        if !(strength > 0.0 && strength <= 1.0) {
            return Err(Error::Config(format!("rule strength must lie in (0, 1], got {strength}")));
        }
        let enforcement = if strength == 1.0 {
            Enforcement::Deterministic
        } else {
            Enforcement::Probabilistic
        };
        Ok(UniversalRule {
            antecedent,
            consequent,
            strength,
            enforcement,
        })
    }
}

/// Empirical strength of voiced obstruents implying voiceless ones.
pub const VOICING_IMPLICATION_STRENGTH: f64 = 0.997;

/// The five implicational universals with their PHOIBLE strengths.
pub fn default_rules() -> Vec<UniversalRule> {
    IMPLICATIONS
        .iter()
        .map(|&(x, y)| {
            let strength = if x == FeatureClass::VoicedObstruent {
                VOICING_IMPLICATION_STRENGTH
            } else {
                1.0
            };
            UniversalRule::new(x, y, strength).expect("valid strength")
        })
        .collect()
}

fn phoneme_from_db(db: &SegmentDatabase, id: SegmentId) -> Phoneme {
    let info = db.segment(id);
    Phoneme {
        segment: info.segment.clone(),
        class: info.class,
        features: info.features,
    }
}

/// Add consequent segments until every rule holds.
///
/// Deterministic rules are always repaired; a probabilistic rule is repaired with
/// probability equal to its strength, drawn once per call. Segments are only added,
/// chosen from the database in proportion to their global frequency.
pub fn repair_universals(
    mut inv: PhonemeInventory,
    rules: &[UniversalRule],
    db: &SegmentDatabase,
    rng: &mut Rng,
) -> Result<PhonemeInventory> {
    let mut declined = vec![false; rules.len()];
    loop {
        let mut changed = false;
        for (k, rule) in rules.iter().enumerate() {
            if declined[k] || !inv.has(rule.antecedent) || inv.has(rule.consequent) {
                continue;
            }
            let enforce = match rule.enforcement {
                Enforcement::Deterministic => true,
                Enforcement::Probabilistic => rng.random::<f64>() < rule.strength,
            };
            if !enforce {
                declined[k] = true;
                continue;
            }
            let present: HashSet<&str> = inv.phonemes().map(|p| p.segment.as_str()).collect();
            let options: Vec<SegmentId> = (0..db.segments().len() as SegmentId)
                .filter(|id| {
                    let info = db.segment(*id);
                    info.is(rule.consequent)
                        && db.global_count(*id) > 0
                        && !present.contains(info.segment.as_str())
                })
                .collect();
            let pick = *options
                .choose_weighted(rng, |id| db.global_count(*id))
                .map_err(|_| Error::RepairFailure(rule.consequent.name().to_string()))?;
            let phoneme = phoneme_from_db(db, pick);
            match phoneme.class {
                SegmentClass::Vowel => inv.vowels.push(phoneme),
                _ => inv.consonants.push(phoneme),
            }
            changed = true;
        }
        if !changed {
            return Ok(inv);
        }
    }
}

/// Logistic weight for marked segments as a function of inventory size.
fn size_factor(n: u32, median: f64) -> f64 {
    let scale = (0.15 * median).max(1.0);
    1.0 / (1.0 + (-(f64::from(n) - median) / scale).exp())
}

/// Sample an inventory with the generator seeded from `config.seed`.
pub fn sample_inventory(db: &SegmentDatabase, config: &SamplerConfig) -> Result<PhonemeInventory> {
    sample_inventory_with_rng(db, config, &default_rules(), &mut rng_from_seed(config.seed))
}

pub fn sample_inventory_with_rng(
    db: &SegmentDatabase,
    config: &SamplerConfig,
    rules: &[UniversalRule],
    rng: &mut Rng,
) -> Result<PhonemeInventory> {
    config.validate()?;
    let histogram = SizeHistogram::from_db(db);
    let (median_c, median_v) = (histogram.median_consonants(), histogram.median_vowels());
    let excluded = config.archetype.excluded_classes();
    let pool = |class: SegmentClass| -> Vec<SegmentId> {
        (0..db.segments().len() as SegmentId)
            .filter(|id| {
                let info = db.segment(*id);
                info.class == class
                    && db.global_count(*id) > 0
                    && !excluded.iter().any(|x| info.is(*x))
            })
            .collect()
    };
    let consonant_pool = pool(SegmentClass::Consonant);
    let vowel_pool = pool(SegmentClass::Vowel);
    let (cons_range, vow_range) = config.effective_ranges();
    if consonant_pool.len() < cons_range[0] as usize || vowel_pool.len() < vow_range[0] as usize {
        return Err(Error::InfeasibleInventory(format!(
            "database offers {} consonants and {} vowels; at least {} and {} are required",
            consonant_pool.len(),
            vowel_pool.len(),
            cons_range[0],
            vow_range[0]
        )));
    }
    let hist = match config.size_distribution {
        SizeDistribution::Empirical => Some(&histogram),
        SizeDistribution::Uniform => None,
    };

    let draw = |pool: &[SegmentId], n: u32, median: f64, rng: &mut Rng| -> Result<Vec<Phoneme>> {
        if pool.len() < n as usize {
            return Err(Error::InfeasibleInventory(format!(
                "requested {n} segments from a pool of {}",
                pool.len()
            )));
        }
        let weight = |id: &SegmentId| {
            let info = db.segment(*id);
            let base = f64::from(db.global_count(*id));
            let marked = FeatureClass::ALL
                .iter()
                .any(|c| c.is_size_conditioned() && info.is(*c));
            if config.size_conditioning && marked {
                base * size_factor(n, median)
            } else {
                base
            }
        };
        let mut chosen: Vec<SegmentId> = pool
            .choose_multiple_weighted(rng, n as usize, weight)
            .map_err(|e| Error::InfeasibleInventory(e.to_string()))?
            .copied()
            .collect();
        chosen.sort_by(|a, b| {
            db.global_count(*b)
                .cmp(&db.global_count(*a))
                .then_with(|| db.segment(*a).segment.cmp(&db.segment(*b).segment))
        });
        Ok(chosen.into_iter().map(|id| phoneme_from_db(db, id)).collect())
    };

    for _ in 0..MAX_SAMPLING_ATTEMPTS {
        let (nc, nv) = sample_sizes_with(config, hist, rng)?;
        let inv = PhonemeInventory {
            consonants: draw(&consonant_pool, nc, median_c, rng)?,
            vowels: draw(&vowel_pool, nv, median_v, rng)?,
            seed: config.seed,
            config: config.clone(),
        };
        let inv = repair_universals(inv, rules, db, rng)?;
        if config.ratio_ok(inv.consonants.len(), inv.vowels.len()) {
            return Ok(inv);
        }
    }
    Err(Error::InfeasibleInventory(format!(
        "no inventory met the ratio bound after {MAX_SAMPLING_ATTEMPTS} attempts"
    )))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::phoible::fixtures;

    fn cfg(c: [u32; 2], v: [u32; 2]) -> SamplerConfig {
        SamplerConfig {
            consonant_count_range: c,
            vowel_count_range: v,
            size_distribution: SizeDistribution::Uniform,
            ..SamplerConfig::default()
        }
    }

    #[test]
    fn single_feasible_point_is_accepted() {
        let mut rng = rng_from_seed(1);
        assert_eq!(sample_sizes(&cfg([20, 20], [5, 5]), &mut rng).unwrap(), (20, 5));
    }

    #[test]
    fn infeasible_ratio_is_config_error() {
        let mut rng = rng_from_seed(1);
        assert!(matches!(
            sample_sizes(&cfg([10, 10], [9, 9]), &mut rng),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn invalid_bounds_are_rejected() {
        let mut c = SamplerConfig::default();
        c.ratio_bounds = [0.4, 0.15];
        assert!(c.validate().is_err());
        let mut c = SamplerConfig::default();
        c.vowel_count_range = [0, 3];
        assert!(c.validate().is_err());
    }

    #[test]
    fn uniform_size_draws_respect_ratio() {
        let config = SamplerConfig {
            size_distribution: SizeDistribution::Uniform,
            ..SamplerConfig::default()
        };
        let mut rng = rng_from_seed(9);
        for _ in 0..10_000 {
            let (c, v) = sample_sizes(&config, &mut rng).unwrap();
            let r = f64::from(v) / f64::from(c);
            assert!((0.15..=0.40).contains(&r), "{c} {v}");
        }
    }

    #[test]
    fn archetype_ranges() {
        let base = SamplerConfig::default();
        let small = SamplerConfig {
            archetype: Archetype::SmallCv,
            ..base.clone()
        };
        assert_eq!(small.effective_ranges(), ([14, 19], [4, 5]));
        let rich = SamplerConfig {
            archetype: Archetype::ConsonantRich,
            ..base
        };
        assert_eq!(rich.effective_ranges().0, [31, 36]);
    }

    fn toy_db() -> SegmentDatabase {
        fixtures::db(&[
            ("1", &["p", "t", "k", "m", "n", "s", "ħ", "a", "i", "u"]),
            ("2", &["p", "t", "k", "q", "m", "n", "s", "l", "a", "i", "u", "e"]),
            ("3", &["p", "t", "b", "d", "m", "n", "s", "j", "w", "a", "i", "o"]),
            ("4", &["t", "k", "m", "ʜ", "χ", "r", "a", "e", "u"]),
        ])
    }

    #[test]
    fn pharyngeal_without_uvular_is_repaired() {
        let db = toy_db();
        let inv = PhonemeInventory::from_segments(&["p", "t", "ʜ", "m"], &["a", "i"]).unwrap();
        assert!(inv.has(FeatureClass::Pharyngeal) && !inv.has(FeatureClass::Uvular));
        let fixed = repair_universals(inv, &default_rules(), &db, &mut rng_from_seed(3)).unwrap();
        assert!(fixed.has(FeatureClass::Uvular));
        assert!(fixed.violated_rules(&default_rules()).is_empty());
    }

    #[test]
    fn satisfied_inventory_is_unchanged() {
        let db = toy_db();
        let inv = PhonemeInventory::from_segments(&["p", "t", "s", "m"], &["a", "i"]).unwrap();
        let fixed = repair_universals(inv.clone(), &default_rules(), &db, &mut rng_from_seed(3)).unwrap();
        assert_eq!(fixed, inv);
    }

    #[test]
    fn missing_consequent_is_repair_failure() {
        // Database without any uvular segment.
        let db = fixtures::db(&[("1", &["p", "t", "ʜ", "a"])]);
        let inv = PhonemeInventory::from_segments(&["p", "ʜ"], &["a"]).unwrap();
        assert!(matches!(
            repair_universals(inv, &default_rules(), &db, &mut rng_from_seed(0)),
            Err(Error::RepairFailure(_))
        ));
    }

    #[test]
    fn same_seed_same_inventory() {
        let db = toy_db();
        let config = SamplerConfig {
            consonant_count_range: [4, 6],
            vowel_count_range: [1, 2],
            ratio_bounds: [0.15, 0.5],
            seed: 42,
            ..SamplerConfig::default()
        };
        let a = sample_inventory(&db, &config).unwrap();
        let b = sample_inventory(&db, &config).unwrap();
        assert_eq!(a.to_json().unwrap(), b.to_json().unwrap());
        for p in a.phonemes() {
            assert!(db.lookup(&p.segment).is_some());
        }
    }

    #[test]
    fn too_small_database_is_infeasible() {
        let db = toy_db();
        let config = SamplerConfig {
            consonant_count_range: [30, 40],
            vowel_count_range: [8, 10],
            ..SamplerConfig::default()
        };
        assert!(matches!(
            sample_inventory(&db, &config),
            Err(Error::InfeasibleInventory(_))
        ));
    }

    #[test]
    fn rule_enforcement_follows_strength() {
        let r = UniversalRule::new(FeatureClass::Fricative, FeatureClass::Stop, 1.0).unwrap();
        assert_eq!(r.enforcement, Enforcement::Deterministic);
        let r = UniversalRule::new(FeatureClass::Fricative, FeatureClass::Stop, 0.9).unwrap();
        assert_eq!(r.enforcement, Enforcement::Probabilistic);
        assert!(UniversalRule::new(FeatureClass::Fricative, FeatureClass::Stop, 0.0).is_err());
    }
}
