//! Syllable templates, candidate word forms and the shared constraint set.

use std::collections::{BTreeMap, HashSet};
use std::fmt;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{self, Place, SegmentClass};
use crate::inventory::{Archetype, PhonemeInventory};
use crate::seed::Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Constraint {
    Onset,
    NoCoda,
    #[serde(rename = "*Complex")]
    Complex,
    #[serde(rename = "SSP")]
    Ssp,
    NasalStopHomorganic,
}

impl Constraint {
    pub const ALL: [Constraint; 5] = [
        Constraint::Onset,
        Constraint::NoCoda,
        Constraint::Complex,
        Constraint::Ssp,
        Constraint::NasalStopHomorganic,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Constraint::Onset => "Onset",
            Constraint::NoCoda => "NoCoda",
            Constraint::Complex => "*Complex",
            Constraint::Ssp => "SSP",
            Constraint::NasalStopHomorganic => "NasalStopHomorganic",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for Constraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Constraint {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Constraint::ALL
            .into_iter()
            .find(|c| c.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::Config(format!("unknown constraint `{s}`")))
    }
}

/// Violation counts over the five shared constraints.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash)]
pub struct ViolationVector(pub [u32; 5]);

impl ViolationVector {
    pub fn get(&self, c: Constraint) -> u32 {
        self.0[c.index()]
    }

    pub fn set(&mut self, c: Constraint, n: u32) {
        self.0[c.index()] = n;
    }

    fn bump(&mut self, c: Constraint) {
        self.0[c.index()] += 1;
    }

    pub fn iter(&self) -> impl Iterator<Item = (Constraint, u32)> + '_ {
        Constraint::ALL.into_iter().map(|c| (c, self.get(c)))
    }

    pub fn total(&self) -> u32 {
        self.0.iter().sum()
    }
}

impl Serialize for ViolationVector {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let map: BTreeMap<&str, u32> = self.iter().map(|(c, n)| (c.name(), n)).collect();
        map.serialize(s)
    }
}

impl<'de> Deserialize<'de> for ViolationVector {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let map = BTreeMap::<String, u32>::deserialize(d)?;
        let mut v = ViolationVector::default();
        for (k, n) in map {
            let c: Constraint = k.parse().map_err(serde::de::Error::custom)?;
            v.set(c, n);
        }
        Ok(v)
    }
}

/// One syllable: onset width, a single-vowel nucleus, coda width.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SyllableSkeleton {
    pub onset: u8,
    pub coda: u8,
}

impl SyllableSkeleton {
    pub fn len(&self) -> usize {
        usize::from(self.onset) + 1 + usize::from(self.coda)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn shape(&self) -> String {
        let mut s = "C".repeat(self.onset.into());
        s.push('V');
        s.push_str(&"C".repeat(self.coda.into()));
        s
    }
}

mod int_keys {
    use std::collections::BTreeMap;

    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(m: &BTreeMap<u32, f64>, s: S) -> Result<S::Ok, S::Error> {
        let m: BTreeMap<String, f64> = m.iter().map(|(k, v)| (k.to_string(), *v)).collect();
        m.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BTreeMap<u32, f64>, D::Error> {
        BTreeMap::<String, f64>::deserialize(d)?
            .into_iter()
            .map(|(k, v)| {
                k.parse::<u32>()
                    .map(|k| (k, v))
                    .map_err(|_| serde::de::Error::custom(format!("syllable count `{k}` is not an integer")))
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TemplateParams {
    #[serde(with = "int_keys")]
    pub syllable_count_distribution: BTreeMap<u32, f64>,
    pub max_onset_width: u8,
    pub max_coda_width: u8,
    /// Probability that a syllable has an onset at all.
    pub onset_probability: f64,
    pub coda_probability: f64,
    pub complex_onset_probability: f64,
    pub complex_coda_probability: f64,
}

impl Default for TemplateParams {
    fn default() -> Self {
        TemplateParams {
            syllable_count_distribution: [(1, 0.2), (2, 0.4), (3, 0.3), (4, 0.1)].into(),
            max_onset_width: 2,
            max_coda_width: 2,
            onset_probability: 0.7,
            coda_probability: 0.05,
            complex_onset_probability: 0.3,
            complex_coda_probability: 0.2,
        }
    }
}

impl TemplateParams {
    /// Plain CV syllables only.
    pub fn cv(syllables: u32) -> Self {
        TemplateParams {
            syllable_count_distribution: [(syllables, 1.0)].into(),
            max_onset_width: 1,
            max_coda_width: 0,
            onset_probability: 1.0,
            coda_probability: 0.0,
            complex_onset_probability: 0.0,
            complex_coda_probability: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let d = &self.syllable_count_distribution;
        if d.is_empty() || d.keys().any(|k| *k == 0) || d.values().any(|p| p.is_nan() || *p < 0.0) {
            return Err(Error::Config(
                "syllable_count_distribution needs positive syllable counts with non-negative probabilities".into(),
            ));
        }
        let total: f64 = d.values().sum();
        if (total - 1.0).abs() > 1e-6 {
            return Err(Error::Config(format!(
                "syllable_count_distribution sums to {total}, expected 1"
            )));
        }
        for (name, p) in [
            ("onset_probability", self.onset_probability),
            ("coda_probability", self.coda_probability),
            ("complex_onset_probability", self.complex_onset_probability),
            ("complex_coda_probability", self.complex_coda_probability),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::Config(format!("{name} must lie in [0, 1], got {p}")));
            }
        }
        Ok(())
    }

    /// Adjust for an inventory archetype; small CV systems never build complex codas.
    pub fn for_archetype(mut self, archetype: Archetype) -> Self {
        if archetype == Archetype::SmallCv {
            self.complex_coda_probability = 0.0;
            self.max_coda_width = self.max_coda_width.min(1);
        }
        self
    }
}

fn cluster_width(max: u8, present: f64, complex: f64, rng: &mut Rng) -> u8 {
    if max == 0 || !rng.random_bool(present) {
        return 0;
    }
    if max >= 2 && rng.random_bool(complex) {
        rng.random_range(2..=max)
    } else {
        1
    }
}

pub fn sample_skeleton(params: &TemplateParams, rng: &mut Rng) -> Vec<SyllableSkeleton> {
    let mut u: f64 = rng.random();
    let mut count = *params.syllable_count_distribution.keys().next_back().unwrap_or(&1);
    for (&k, &p) in &params.syllable_count_distribution {
        if u < p {
            count = k;
            break;
        }
        u -= p;
    }
    (0..count)
        .map(|_| SyllableSkeleton {
            onset: cluster_width(
                params.max_onset_width,
                params.onset_probability,
                params.complex_onset_probability,
                rng,
            ),
            coda: cluster_width(
                params.max_coda_width,
                params.coda_probability,
                params.complex_coda_probability,
                rng,
            ),
        })
        .collect()
}

/// A word as indices into the inventory's phoneme list (consonants, then vowels).
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct WordForm {
    pub segments: Vec<u16>,
    pub syllables: Vec<SyllableSkeleton>,
}

/// Serialized word form: IPA segments plus the start index of every syllable.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WordFormRecord {
    pub phonemes: Vec<String>,
    pub boundaries: Vec<usize>,
}

impl WordForm {
    pub fn len(&self) -> usize {
        self.segments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.segments.is_empty()
    }

    /// Start offset of each syllable.
    pub fn boundaries(&self) -> Vec<usize> {
        self.syllables
            .iter()
            .scan(0, |at, s| {
                let start = *at;
                *at += s.len();
                Some(start)
            })
            .collect()
    }

    pub fn phonemes<'a>(&'a self, inv: &'a PhonemeInventory) -> impl Iterator<Item = &'a str> + 'a {
        self.segments.iter().map(move |&i| segment_at(inv, i))
    }

    /// Space-separated segment string, the lexicon's surface form.
    pub fn surface(&self, inv: &PhonemeInventory) -> String {
        self.phonemes(inv).collect::<Vec<_>>().join(" ")
    }

    pub fn record(&self, inv: &PhonemeInventory) -> WordFormRecord {
        WordFormRecord {
            phonemes: self.phonemes(inv).map(str::to_string).collect(),
            boundaries: self.boundaries(),
        }
    }
}

fn segment_at(inv: &PhonemeInventory, i: u16) -> &str {
    let i = usize::from(i);
    let nc = inv.consonants.len();
    if i < nc {
        &inv.consonants[i].segment
    } else {
        &inv.vowels[i - nc].segment
    }
}

pub fn fill_skeleton(skel: &[SyllableSkeleton], inv: &PhonemeInventory, rng: &mut Rng) -> Result<WordForm> {
    let nc = inv.consonants.len();
    let nv = inv.vowels.len();
    if nv == 0 {
        return Err(Error::InfeasibleFill("vowels"));
    }
    if nc == 0 && skel.iter().any(|s| s.onset > 0 || s.coda > 0) {
        return Err(Error::InfeasibleFill("consonants"));
    }
    let total: usize = skel.iter().map(SyllableSkeleton::len).sum();
    let mut segments = Vec::with_capacity(total);
    for s in skel {
        for _ in 0..s.onset {
            segments.push(rng.random_range(0..nc) as u16);
        }
        segments.push((nc + rng.random_range(0..nv)) as u16);
        for _ in 0..s.coda {
            segments.push(rng.random_range(0..nc) as u16);
        }
    }
    Ok(WordForm {
        segments,
        syllables: skel.to_vec(),
    })
}

/// Up to `n` distinct candidates, each from a freshly sampled skeleton.
pub fn generate_candidates(
    params: &TemplateParams,
    inv: &PhonemeInventory,
    n: usize,
    rng: &mut Rng,
) -> Result<Vec<WordForm>> {
    let mut seen = HashSet::with_capacity(n);
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        let skel = sample_skeleton(params, rng);
        let w = fill_skeleton(&skel, inv, rng)?;
        if seen.insert(w.segments.clone()) {
            out.push(w);
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy)]
struct SegmentProps {
    sonority: Option<u8>,
    place: Option<Place>,
    nasal: bool,
    stop: bool,
}

/// Precomputed per-segment sonority and place for fast constraint evaluation.
#[derive(Debug, Clone)]
pub struct Phonotactics {
    props: Vec<SegmentProps>,
    names: Vec<String>,
}

impl Phonotactics {
    pub fn new(inv: &PhonemeInventory) -> Self {
        let (props, names) = inv
            .phonemes()
            .map(|p| {
                let props = SegmentProps {
                    sonority: features::sonority(p.class, &p.features).map(|s| s.rank()),
                    place: match p.class {
                        SegmentClass::Consonant => features::place(p.class, &p.features),
                        _ => Some(Place::Other),
                    },
                    nasal: features::is_nasal_consonant(p.class, &p.features),
                    stop: features::is_oral_stop(p.class, &p.features),
                };
                (props, p.segment.clone())
            })
            .unzip();
        Phonotactics { props, names }
    }

    fn sonority(&self, i: u16) -> Result<u8> {
        self.props[usize::from(i)]
            .sonority
            .ok_or_else(|| Error::FeatureLookup(self.names[usize::from(i)].clone()))
    }

    fn place(&self, i: u16) -> Result<Place> {
        self.props[usize::from(i)]
            .place
            .ok_or_else(|| Error::FeatureLookup(self.names[usize::from(i)].clone()))
    }

    pub fn evaluate(&self, w: &WordForm) -> Result<ViolationVector> {
        let mut v = ViolationVector::default();
        let mut at = 0;
        for syl in &w.syllables {
            let onset = &w.segments[at..at + usize::from(syl.onset)];
            let coda_start = at + usize::from(syl.onset) + 1;
            let coda = &w.segments[coda_start..coda_start + usize::from(syl.coda)];
            if onset.is_empty() {
                v.bump(Constraint::Onset);
            }
            if !coda.is_empty() {
                v.bump(Constraint::NoCoda);
            }
            if onset.len() >= 2 {
                v.bump(Constraint::Complex);
            }
            if coda.len() >= 2 {
                v.bump(Constraint::Complex);
            }
            for pair in onset.windows(2) {
                if self.sonority(pair[0])? >= self.sonority(pair[1])? {
                    v.bump(Constraint::Ssp);
                }
            }
            for pair in coda.windows(2) {
                if self.sonority(pair[0])? <= self.sonority(pair[1])? {
                    v.bump(Constraint::Ssp);
                }
            }
            at += syl.len();
        }
        for pair in w.segments.windows(2) {
            let (a, b) = (&self.props[usize::from(pair[0])], &self.props[usize::from(pair[1])]);
            if a.nasal && b.stop {
                let (pa, pb) = (self.place(pair[0])?, self.place(pair[1])?);
                if pa != Place::Other && pb != Place::Other && pa != pb {
                    v.bump(Constraint::NasalStopHomorganic);
                }
            }
        }
        Ok(v)
    }

    /// Widest onset or coda cluster in the word.
    pub fn max_cluster(w: &WordForm) -> u8 {
        w.syllables
            .iter()
            .map(|s| s.onset.max(s.coda))
            .max()
            .unwrap_or(0)
    }
}

pub fn evaluate_constraints(w: &WordForm, inv: &PhonemeInventory) -> Result<ViolationVector> {
    if w.segments.iter().any(|&i| usize::from(i) >= inv.len()) {
        return Err(Error::InvalidInput("word form refers to a segment outside the inventory".into()));
    }
    Phonotactics::new(inv).evaluate(w)
}
