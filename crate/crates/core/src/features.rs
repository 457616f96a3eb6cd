//! Distinctive-feature bundles and the phonological classes derived from them.
//!
//! Bundles follow the PHOIBLE feature columns. Segments whose row carries no
//! feature annotation fall back to [`fallback_bundle`], a small table keyed by
//! the IPA base character.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

macro_rules! features {
    ($($variant:ident => $name:literal),+ $(,)?) => {
        /// One PHOIBLE distinctive-feature column.
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
        pub enum Feature {
            $($variant),+
        }

        impl Feature {
            pub const ALL: &'static [Feature] = &[$(Feature::$variant),+];

            pub fn name(self) -> &'static str {
                match self {
                    $(Feature::$variant => $name),+
                }
            }

            pub fn from_name(name: &str) -> Option<Feature> {
                match name {
                    $($name => Some(Feature::$variant),)+
                    _ => None,
                }
            }
        }
    };
}

features! {
    Tone => "tone",
    Stress => "stress",
    Syllabic => "syllabic",
    Short => "short",
    Long => "long",
    Consonantal => "consonantal",
    Sonorant => "sonorant",
    Continuant => "continuant",
    DelayedRelease => "delayedRelease",
    Approximant => "approximant",
    Tap => "tap",
    Trill => "trill",
    Nasal => "nasal",
    Lateral => "lateral",
    Labial => "labial",
    Round => "round",
    Labiodental => "labiodental",
    Coronal => "coronal",
    Anterior => "anterior",
    Distributed => "distributed",
    Strident => "strident",
    Dorsal => "dorsal",
    High => "high",
    Low => "low",
    Front => "front",
    Back => "back",
    Tense => "tense",
    RetractedTongueRoot => "retractedTongueRoot",
    AdvancedTongueRoot => "advancedTongueRoot",
    PeriodicGlottalSource => "periodicGlottalSource",
    EpilaryngealSource => "epilaryngealSource",
    SpreadGlottis => "spreadGlottis",
    ConstrictedGlottis => "constrictedGlottis",
    Fortis => "fortis",
    RaisedLarynxEjective => "raisedLarynxEjective",
    LoweredLarynxImplosive => "loweredLarynxImplosive",
    Click => "click",
}

const FEATURE_COUNT: usize = 37;

/// Value of a single feature cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum FeatureValue {
    Plus,
    Minus,
    /// Not applicable to the segment (`0` in PHOIBLE).
    Zero,
    /// Sequence of values for contour segments such as diphthongs (`+,-`).
    Contour,
    #[default]
    Missing,
}

impl FeatureValue {
    pub fn parse(raw: &str) -> FeatureValue {
        match raw.trim() {
            "+" => FeatureValue::Plus,
            "-" => FeatureValue::Minus,
            "0" => FeatureValue::Zero,
            "" | "NA" => FeatureValue::Missing,
            s if s.contains(',') => FeatureValue::Contour,
            _ => FeatureValue::Missing,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            FeatureValue::Plus => "+",
            FeatureValue::Minus => "-",
            FeatureValue::Zero => "0",
            FeatureValue::Contour => "~",
            FeatureValue::Missing => "NA",
        }
    }

    fn from_symbol(s: &str) -> Option<FeatureValue> {
        match s {
            "+" => Some(FeatureValue::Plus),
            "-" => Some(FeatureValue::Minus),
            "0" => Some(FeatureValue::Zero),
            "~" => Some(FeatureValue::Contour),
            "NA" => Some(FeatureValue::Missing),
            _ => None,
        }
    }
}

/// Full set of feature values for one segment.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct FeatureBundle([FeatureValue; FEATURE_COUNT]);

impl Default for FeatureBundle {
    fn default() -> Self {
        FeatureBundle([FeatureValue::Missing; FEATURE_COUNT])
    }
}

impl FeatureBundle {
    pub fn get(&self, feature: Feature) -> FeatureValue {
        self.0[feature as usize]
    }

    pub fn set(&mut self, feature: Feature, value: FeatureValue) {
        self.0[feature as usize] = value;
    }

    pub fn is(&self, feature: Feature) -> bool {
        self.get(feature) == FeatureValue::Plus
    }

    pub fn is_not(&self, feature: Feature) -> bool {
        self.get(feature) == FeatureValue::Minus
    }

    pub fn is_unannotated(&self) -> bool {
        self.0.iter().all(|v| *v == FeatureValue::Missing)
    }

    fn all_zero() -> Self {
        FeatureBundle([FeatureValue::Zero; FEATURE_COUNT])
    }
}

impl fmt::Debug for FeatureBundle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_map()
            .entries(
                Feature::ALL
                    .iter()
                    .filter(|feat| self.get(**feat) != FeatureValue::Missing)
                    .map(|feat| (feat.name(), self.get(*feat).symbol())),
            )
            .finish()
    }
}

impl Serialize for FeatureBundle {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let map: BTreeMap<&str, &str> = Feature::ALL
            .iter()
            .filter(|feat| self.get(**feat) != FeatureValue::Missing)
            .map(|feat| (feat.name(), self.get(*feat).symbol()))
            .collect();
        map.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for FeatureBundle {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let map = BTreeMap::<String, String>::deserialize(deserializer)?;
        let mut bundle = FeatureBundle::default();
        for (name, value) in map {
            let feature = Feature::from_name(&name)
                .ok_or_else(|| D::Error::custom(format!("unknown feature `{name}`")))?;
            let value = FeatureValue::from_symbol(&value)
                .ok_or_else(|| D::Error::custom(format!("bad value `{value}` for `{name}`")))?;
            bundle.set(feature, value);
        }
        Ok(bundle)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SegmentClass {
    Consonant,
    Vowel,
    Tone,
}

impl FromStr for SegmentClass {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "consonant" => Ok(SegmentClass::Consonant),
            "vowel" => Ok(SegmentClass::Vowel),
            "tone" => Ok(SegmentClass::Tone),
            other => Err(format!("unknown segment class `{other}`")),
        }
    }
}

/// Five-level sonority hierarchy (obstruent < nasal < liquid < glide < vowel).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sonority {
    Obstruent = 1,
    Nasal = 2,
    Liquid = 3,
    Glide = 4,
    Vowel = 5,
}

impl Sonority {
    pub fn rank(self) -> u8 {
        self as u8
    }
}

/// Quantised place of articulation used for nasal–stop homorganicity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Place {
    Labial,
    Coronal,
    Dorsal,
    Other,
}

/// Sonority class of a segment, if its features determine one.
pub fn sonority(class: SegmentClass, f: &FeatureBundle) -> Option<Sonority> {
    match class {
        SegmentClass::Vowel => Some(Sonority::Vowel),
        SegmentClass::Tone => None,
        SegmentClass::Consonant => {
            // Contours in sonorant are prenasalised or similar complex stops.
            if f.is_not(Feature::Sonorant) || f.get(Feature::Sonorant) == FeatureValue::Contour {
                Some(Sonority::Obstruent)
            } else if f.is(Feature::Nasal) {
                Some(Sonority::Nasal)
            } else if f.is(Feature::Sonorant) {
                if f.is(Feature::Consonantal)
                    || f.is(Feature::Lateral)
                    || f.is(Feature::Trill)
                    || f.is(Feature::Tap)
                {
                    Some(Sonority::Liquid)
                } else {
                    Some(Sonority::Glide)
                }
            } else {
                None
            }
        }
    }
}

/// Place of articulation; segments with several or no major articulators are `Other`.
pub fn place(class: SegmentClass, f: &FeatureBundle) -> Option<Place> {
    if class != SegmentClass::Consonant {
        return Some(Place::Other);
    }
    let articulators = [
        (Feature::Labial, Place::Labial),
        (Feature::Coronal, Place::Coronal),
        (Feature::Dorsal, Place::Dorsal),
    ];
    if articulators
        .iter()
        .all(|(feat, _)| f.get(*feat) == FeatureValue::Missing)
    {
        return None;
    }
    let mut active = articulators.iter().filter(|(feat, _)| f.is(*feat));
    match (active.next(), active.next()) {
        (Some((_, p)), None) => Some(*p),
        _ => Some(Place::Other),
    }
}

/// Oral or nasal stop closure without continuancy; affricates count as stops.
pub fn is_oral_stop(class: SegmentClass, f: &FeatureBundle) -> bool {
    class == SegmentClass::Consonant
        && f.is_not(Feature::Sonorant)
        && f.is_not(Feature::Continuant)
        && !f.is(Feature::Nasal)
}

pub fn is_nasal_consonant(class: SegmentClass, f: &FeatureBundle) -> bool {
    class == SegmentClass::Consonant && f.is(Feature::Nasal)
}

/// Segment classes referenced by the typological statistics and universals.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureClass {
    Ejective,
    Click,
    LongVowel,
    Uvular,
    Pharyngeal,
    NasalVowel,
    OralVowel,
    VoicedObstruent,
    VoicelessObstruent,
    Fricative,
    Stop,
    FrontRoundedVowel,
    FrontUnroundedVowel,
}

impl FeatureClass {
    pub const ALL: [FeatureClass; 13] = [
        FeatureClass::Ejective,
        FeatureClass::Click,
        FeatureClass::LongVowel,
        FeatureClass::Uvular,
        FeatureClass::Pharyngeal,
        FeatureClass::NasalVowel,
        FeatureClass::OralVowel,
        FeatureClass::VoicedObstruent,
        FeatureClass::VoicelessObstruent,
        FeatureClass::Fricative,
        FeatureClass::Stop,
        FeatureClass::FrontRoundedVowel,
        FeatureClass::FrontUnroundedVowel,
    ];

    pub fn name(self) -> &'static str {
        match self {
            FeatureClass::Ejective => "ejective",
            FeatureClass::Click => "click",
            FeatureClass::LongVowel => "long_vowel",
            FeatureClass::Uvular => "uvular",
            FeatureClass::Pharyngeal => "pharyngeal",
            FeatureClass::NasalVowel => "nasal_vowel",
            FeatureClass::OralVowel => "oral_vowel",
            FeatureClass::VoicedObstruent => "voiced_obstruent",
            FeatureClass::VoicelessObstruent => "voiceless_obstruent",
            FeatureClass::Fricative => "fricative",
            FeatureClass::Stop => "stop",
            FeatureClass::FrontRoundedVowel => "front_rounded_vowel",
            FeatureClass::FrontUnroundedVowel => "front_unrounded_vowel",
        }
    }

    pub fn matches(self, class: SegmentClass, f: &FeatureBundle) -> bool {
        use Feature::*;
        let consonant = class == SegmentClass::Consonant;
        let vowel = class == SegmentClass::Vowel;
        match self {
            FeatureClass::Ejective => consonant && f.is(RaisedLarynxEjective),
            FeatureClass::Click => consonant && f.is(Click),
            FeatureClass::LongVowel => vowel && f.is(Long),
            FeatureClass::Uvular => {
                consonant && f.is(Dorsal) && f.is_not(High) && f.is_not(Low) && f.is(Back)
            }
            // Epiglottal/pharyngeal source; PHOIBLE codes ħ and ʕ as low back dorsals.
            FeatureClass::Pharyngeal => consonant && f.is(EpilaryngealSource),
            FeatureClass::NasalVowel => vowel && f.is(Nasal),
            FeatureClass::OralVowel => vowel && f.is_not(Nasal),
            FeatureClass::VoicedObstruent => {
                consonant && f.is(Consonantal) && f.is_not(Sonorant) && f.is(PeriodicGlottalSource)
            }
            FeatureClass::VoicelessObstruent => {
                consonant
                    && f.is(Consonantal)
                    && f.is_not(Sonorant)
                    && f.is_not(PeriodicGlottalSource)
            }
            FeatureClass::Fricative => consonant && f.is_not(Sonorant) && f.is(Continuant),
            FeatureClass::Stop => consonant && f.is_not(Sonorant) && f.is_not(Continuant),
            FeatureClass::FrontRoundedVowel => vowel && f.is(Front) && f.is(Round),
            FeatureClass::FrontUnroundedVowel => vowel && f.is(Front) && f.is_not(Labial),
        }
    }

    /// Marked classes whose sampling weight is conditioned on inventory size.
    pub fn is_size_conditioned(self) -> bool {
        matches!(
            self,
            FeatureClass::Ejective | FeatureClass::Click | FeatureClass::LongVowel
        )
    }
}

impl fmt::Display for FeatureClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Copy)]
enum Manner {
    Stop,
    Fricative,
    Nasal,
    Trill,
    Tap,
    Lateral,
    LateralFricative,
    Approximant,
    Glide,
}

#[derive(Clone, Copy)]
enum Articulation {
    Labial,
    Dental,
    Postalveolar,
    Retroflex,
    Palatal,
    Velar,
    LabialVelar,
    Uvular,
    Pharyngeal,
    Epiglottal,
    Glottal,
}

#[derive(Clone, Copy)]
enum BaseKind {
    Consonant(Manner, Articulation, bool),
    /// height (0 high, 1 mid, 2 low), front, back, round
    Vowel(u8, bool, bool, bool),
}

fn base_kind(c: char) -> Option<BaseKind> {
    use Articulation as A;
    use BaseKind::{Consonant as C, Vowel as V};
    use Manner as M;
    let kind = match c {
        'p' => C(M::Stop, A::Labial, false),
        'b' => C(M::Stop, A::Labial, true),
        't' => C(M::Stop, A::Dental, false),
        'd' => C(M::Stop, A::Dental, true),
        'ʈ' => C(M::Stop, A::Retroflex, false),
        'ɖ' => C(M::Stop, A::Retroflex, true),
        'c' => C(M::Stop, A::Palatal, false),
        'ɟ' => C(M::Stop, A::Palatal, true),
        'k' => C(M::Stop, A::Velar, false),
        'g' | 'ɡ' => C(M::Stop, A::Velar, true),
        'q' => C(M::Stop, A::Uvular, false),
        'ɢ' => C(M::Stop, A::Uvular, true),
        'ʡ' => C(M::Stop, A::Epiglottal, false),
        'ʔ' => C(M::Stop, A::Glottal, false),
        'm' => C(M::Nasal, A::Labial, true),
        'ɱ' => C(M::Nasal, A::Labial, true),
        'n' => C(M::Nasal, A::Dental, true),
        'ɳ' => C(M::Nasal, A::Retroflex, true),
        'ɲ' => C(M::Nasal, A::Palatal, true),
        'ŋ' => C(M::Nasal, A::Velar, true),
        'ɴ' => C(M::Nasal, A::Uvular, true),
        'ɸ' | 'f' => C(M::Fricative, A::Labial, false),
        'β' | 'v' => C(M::Fricative, A::Labial, true),
        'θ' | 's' => C(M::Fricative, A::Dental, false),
        'ð' | 'z' => C(M::Fricative, A::Dental, true),
        'ʃ' => C(M::Fricative, A::Postalveolar, false),
        'ʒ' => C(M::Fricative, A::Postalveolar, true),
        'ʂ' => C(M::Fricative, A::Retroflex, false),
        'ʐ' => C(M::Fricative, A::Retroflex, true),
        'ç' => C(M::Fricative, A::Palatal, false),
        'ʝ' => C(M::Fricative, A::Palatal, true),
        'x' => C(M::Fricative, A::Velar, false),
        'ɣ' => C(M::Fricative, A::Velar, true),
        'χ' => C(M::Fricative, A::Uvular, false),
        'ʁ' => C(M::Fricative, A::Uvular, true),
        'ħ' => C(M::Fricative, A::Pharyngeal, false),
        'ʕ' => C(M::Fricative, A::Pharyngeal, true),
        'ʜ' => C(M::Fricative, A::Epiglottal, false),
        'ʢ' => C(M::Fricative, A::Epiglottal, true),
        'h' => C(M::Fricative, A::Glottal, false),
        'ɦ' => C(M::Fricative, A::Glottal, true),
        'ɬ' => C(M::LateralFricative, A::Dental, false),
        'ɮ' => C(M::LateralFricative, A::Dental, true),
        'ʙ' => C(M::Trill, A::Labial, true),
        'r' => C(M::Trill, A::Dental, true),
        'ʀ' => C(M::Trill, A::Uvular, true),
        'ɾ' => C(M::Tap, A::Dental, true),
        'ɽ' => C(M::Tap, A::Retroflex, true),
        'l' => C(M::Lateral, A::Dental, true),
        'ɭ' => C(M::Lateral, A::Retroflex, true),
        'ʎ' => C(M::Lateral, A::Palatal, true),
        'ʟ' => C(M::Lateral, A::Velar, true),
        'ɹ' => C(M::Approximant, A::Dental, true),
        'ɻ' => C(M::Approximant, A::Retroflex, true),
        'ʋ' => C(M::Glide, A::Labial, true),
        'j' => C(M::Glide, A::Palatal, true),
        'ɰ' => C(M::Glide, A::Velar, true),
        'w' => C(M::Glide, A::LabialVelar, true),
        'ɥ' => C(M::Glide, A::Palatal, true),
        'i' => V(0, true, false, false),
        'y' => V(0, true, false, true),
        'ɨ' => V(0, false, false, false),
        'ʉ' => V(0, false, false, true),
        'ɯ' => V(0, false, true, false),
        'u' => V(0, false, true, true),
        'ɪ' => V(0, true, false, false),
        'ʏ' => V(0, true, false, true),
        'ʊ' => V(0, false, true, true),
        'e' | 'ɛ' => V(1, true, false, false),
        'ø' | 'œ' => V(1, true, false, true),
        'ə' | 'ɘ' | 'ɜ' => V(1, false, false, false),
        'ɵ' | 'ɞ' => V(1, false, false, true),
        'ɤ' | 'ʌ' => V(1, false, true, false),
        'o' | 'ɔ' => V(1, false, true, true),
        'æ' | 'a' => V(2, true, false, false),
        'ɶ' => V(2, true, false, true),
        'ɐ' => V(2, false, false, false),
        'ɑ' => V(2, false, true, false),
        'ɒ' => V(2, false, true, true),
        _ => return None,
    };
    Some(kind)
}

fn pm(b: bool) -> FeatureValue {
    if b {
        FeatureValue::Plus
    } else {
        FeatureValue::Minus
    }
}

/// Minimal feature bundle for a segment, keyed by its first recognised IPA base
/// character. Diacritics are ignored except for nasalisation and length on vowels.
pub fn fallback_bundle(segment: &str) -> Option<(SegmentClass, FeatureBundle)> {
    use Feature::*;
    let kind = segment.chars().find_map(base_kind)?;
    let mut f = FeatureBundle::all_zero();
    for feat in [
        Stress, Syllabic, Short, Long, Tap, Trill, Nasal, Lateral, Labial, Coronal, Dorsal,
        SpreadGlottis, ConstrictedGlottis, Fortis, RaisedLarynxEjective,
        LoweredLarynxImplosive, Click, EpilaryngealSource, RetractedTongueRoot,
        AdvancedTongueRoot,
    ] {
        f.set(feat, FeatureValue::Minus);
    }
    let class = match kind {
        BaseKind::Vowel(height, front, back, round) => {
            f.set(Syllabic, FeatureValue::Plus);
            f.set(Consonantal, FeatureValue::Minus);
            f.set(Sonorant, FeatureValue::Plus);
            f.set(Continuant, FeatureValue::Plus);
            f.set(Approximant, FeatureValue::Plus);
            f.set(PeriodicGlottalSource, FeatureValue::Plus);
            f.set(Dorsal, FeatureValue::Plus);
            f.set(High, pm(height == 0));
            f.set(Low, pm(height == 2));
            f.set(Front, pm(front));
            f.set(Back, pm(back));
            f.set(Labial, pm(round));
            f.set(Round, if round { FeatureValue::Plus } else { FeatureValue::Zero });
            f.set(Nasal, pm(segment.contains('\u{303}')));
            f.set(Long, pm(segment.contains('ː')));
            SegmentClass::Vowel
        }
        BaseKind::Consonant(manner, art, voiced) => {
            let (cons, son, cont, approx) = match manner {
                Manner::Stop => (true, false, false, false),
                Manner::Fricative | Manner::LateralFricative => (true, false, true, false),
                Manner::Nasal => (true, true, false, false),
                Manner::Trill | Manner::Tap => (true, true, true, false),
                Manner::Lateral | Manner::Approximant => (true, true, true, true),
                Manner::Glide => (false, true, true, true),
            };
            let laryngeal = matches!(art, Articulation::Glottal | Articulation::Epiglottal);
            f.set(Consonantal, pm(cons && !laryngeal));
            f.set(Sonorant, pm(son));
            f.set(Continuant, pm(cont));
            f.set(Approximant, pm(approx));
            f.set(DelayedRelease, pm(matches!(manner, Manner::Fricative | Manner::LateralFricative)));
            f.set(Nasal, pm(matches!(manner, Manner::Nasal)));
            f.set(Lateral, pm(matches!(manner, Manner::Lateral | Manner::LateralFricative)));
            f.set(Trill, pm(matches!(manner, Manner::Trill)));
            f.set(Tap, pm(matches!(manner, Manner::Tap)));
            f.set(PeriodicGlottalSource, pm(voiced));
            f.set(RaisedLarynxEjective, pm(segment.contains('ʼ')));
            let (lab, cor, dor) = match art {
                Articulation::Labial => (true, false, false),
                Articulation::Dental | Articulation::Postalveolar | Articulation::Retroflex => {
                    (false, true, false)
                }
                Articulation::Palatal | Articulation::Velar | Articulation::Uvular => {
                    (false, false, true)
                }
                Articulation::Pharyngeal => (false, false, true),
                Articulation::LabialVelar => (true, false, true),
                Articulation::Epiglottal | Articulation::Glottal => (false, false, false),
            };
            f.set(Labial, pm(lab));
            f.set(Coronal, pm(cor));
            f.set(Dorsal, pm(dor));
            if dor {
                let (high, low, back) = match art {
                    Articulation::Uvular => (false, false, true),
                    Articulation::Pharyngeal => (false, true, true),
                    Articulation::Palatal => (true, false, false),
                    _ => (true, false, true),
                };
                f.set(High, pm(high));
                f.set(Low, pm(low));
                f.set(Back, pm(back));
                f.set(Front, pm(matches!(art, Articulation::Palatal)));
            }
            f.set(EpilaryngealSource, pm(matches!(art, Articulation::Epiglottal)));
            SegmentClass::Consonant
        }
    };
    Some((class, f))
}
