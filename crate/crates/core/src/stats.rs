//! Typological statistics over a [`SegmentDatabase`]: size/feature correlations,
//! feature co-occurrence chi-square tests and implicational conditional probabilities.

use std::fmt;
use std::io::Write;

use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF, StudentsT};

use crate::error::{Error, Result};
use crate::features::{FeatureClass, SegmentClass};
use crate::phoible::SegmentDatabase;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StatKind {
    PearsonR,
    ChiSquare,
    ConditionalProb,
}

impl fmt::Display for StatKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            StatKind::PearsonR => "pearson_r",
            StatKind::ChiSquare => "chi_square",
            StatKind::ConditionalProb => "conditional_prob",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureStat {
    pub kind: StatKind,
    pub lhs: String,
    pub rhs: String,
    pub value: f64,
    pub p_value: Option<f64>,
    pub total_x: Option<u64>,
    pub violations: Option<u64>,
}

impl FeatureStat {
    /// Complement of a conditional probability.
    pub fn failure_rate(&self) -> Option<f64> {
        (self.kind == StatKind::ConditionalProb).then_some(1.0 - self.value)
    }
}

/// Inventory-level quantity correlated against marked-segment presence.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SizeMeasure {
    ConsonantCount,
    VowelCount,
    /// Consonants plus vowels; tones are not counted.
    InventorySize,
}

impl SizeMeasure {
    pub fn name(self) -> &'static str {
        match self {
            SizeMeasure::ConsonantCount => "consonant_count",
            SizeMeasure::VowelCount => "vowel_count",
            SizeMeasure::InventorySize => "inventory_size",
        }
    }
}

pub const CORRELATIONS: [(SizeMeasure, FeatureClass); 4] = [
    (SizeMeasure::ConsonantCount, FeatureClass::Ejective),
    (SizeMeasure::ConsonantCount, FeatureClass::Click),
    (SizeMeasure::InventorySize, FeatureClass::Click),
    (SizeMeasure::VowelCount, FeatureClass::LongVowel),
];

pub const CO_OCCURRENCES: [(FeatureClass, FeatureClass); 6] = [
    (FeatureClass::Ejective, FeatureClass::Uvular),
    (FeatureClass::Pharyngeal, FeatureClass::Uvular),
    (FeatureClass::NasalVowel, FeatureClass::OralVowel),
    (FeatureClass::VoicedObstruent, FeatureClass::VoicelessObstruent),
    (FeatureClass::Fricative, FeatureClass::Stop),
    (FeatureClass::FrontRoundedVowel, FeatureClass::FrontUnroundedVowel),
];

/// Implicational universals `X => Y` built into the sampler.
pub const IMPLICATIONS: [(FeatureClass, FeatureClass); 5] = [
    (FeatureClass::Pharyngeal, FeatureClass::Uvular),
    (FeatureClass::NasalVowel, FeatureClass::OralVowel),
    (FeatureClass::VoicedObstruent, FeatureClass::VoicelessObstruent),
    (FeatureClass::Fricative, FeatureClass::Stop),
    (FeatureClass::FrontRoundedVowel, FeatureClass::FrontUnroundedVowel),
];

struct Profile {
    consonants: u64,
    vowels: u64,
    db_index: usize,
}

fn profiles(db: &SegmentDatabase) -> Vec<Profile> {
    db.inventories()
        .iter()
        .enumerate()
        .map(|(db_index, inv)| Profile {
            consonants: db.class_count(inv, SegmentClass::Consonant) as u64,
            vowels: db.class_count(inv, SegmentClass::Vowel) as u64,
            db_index,
        })
        .collect()
}

fn has(db: &SegmentDatabase, p: &Profile, class: FeatureClass) -> bool {
    db.inventory_has(&db.inventories()[p.db_index], class)
}

/// Pearson r over integer-valued data, accumulated exactly so the result does not
/// depend on observation order. `None` when either variable has zero variance.
pub fn pearson_integer(pairs: &[(u64, u64)]) -> Option<f64> {
    let n = pairs.len() as i128;
    if n < 2 {
        return None;
    }
    let (mut sx, mut sy, mut sxx, mut syy, mut sxy) = (0i128, 0i128, 0i128, 0i128, 0i128);
    for &(x, y) in pairs {
        let (x, y) = (x as i128, y as i128);
        sx += x;
        sy += y;
        sxx += x * x;
        syy += y * y;
        sxy += x * y;
    }
    let vx = n * sxx - sx * sx;
    let vy = n * syy - sy * sy;
    if vx == 0 || vy == 0 {
        return None;
    }
    let cov = (n * sxy - sx * sy) as f64;
    Some((cov / ((vx as f64).sqrt() * (vy as f64).sqrt())).clamp(-1.0, 1.0))
}

/// Two-sided p-value for Pearson r under the t-test with n-2 degrees of freedom.
pub fn pearson_p_value(r: f64, n: usize) -> f64 {
    if n <= 2 {
        return 1.0;
    }
    if r.abs() >= 1.0 {
        return 0.0;
    }
    let df = (n - 2) as f64;
    let t = r * (df / (1.0 - r * r)).sqrt();
    let dist = StudentsT::new(0.0, 1.0, df).expect("df > 0");
    (2.0 * dist.sf(t.abs())).min(1.0)
}

/// Correlations between inventory size measures and marked-segment presence.
///
/// Per-pair failures (zero variance) are reported in place, not raised.
pub fn pearson_feature_correlations(db: &SegmentDatabase) -> Result<Vec<Result<FeatureStat>>> {
    if db.inventory_count() < 3 {
        return Err(Error::InvalidInput(format!(
            "correlations need at least 3 inventories, got {}",
            db.inventory_count()
        )));
    }
    let profiles = profiles(db);
    Ok(CORRELATIONS
        .iter()
        .map(|&(measure, class)| {
            let pairs: Vec<(u64, u64)> = profiles
                .iter()
                .map(|p| {
                    let x = match measure {
                        SizeMeasure::ConsonantCount => p.consonants,
                        SizeMeasure::VowelCount => p.vowels,
                        SizeMeasure::InventorySize => p.consonants + p.vowels,
                    };
                    (x, u64::from(has(db, p, class)))
                })
                .collect();
            let lhs = measure.name().to_string();
            let rhs = class.name().to_string();
            match pearson_integer(&pairs) {
                Some(r) => Ok(FeatureStat {
                    kind: StatKind::PearsonR,
                    p_value: Some(pearson_p_value(r, pairs.len())),
                    lhs,
                    rhs,
                    value: r,
                    total_x: None,
                    violations: None,
                }),
                None => Err(Error::UndefinedCorrelation { lhs, rhs }),
            }
        })
        .collect())
}

/// Pearson chi-square test of independence on a 2x2 table, returning (statistic, p).
///
/// A table with an empty row or column margin yields (0, 1). With `yates`, each
/// cell is moved up to 0.5 towards its expected count before the statistic is taken.
pub fn chi_square_2x2(table: [[u64; 2]; 2], yates: bool) -> (f64, f64) {
    let rows = [table[0][0] + table[0][1], table[1][0] + table[1][1]];
    let cols = [table[0][0] + table[1][0], table[0][1] + table[1][1]];
    let total = rows[0] + rows[1];
    if rows.contains(&0) || cols.contains(&0) {
        return (0.0, 1.0);
    }
    let mut stat = 0.0;
    for (i, row) in table.iter().enumerate() {
        for (j, &obs) in row.iter().enumerate() {
            let expected = rows[i] as f64 * cols[j] as f64 / total as f64;
            let mut diff = obs as f64 - expected;
            if yates {
                diff = diff.signum() * (diff.abs() - 0.5).max(0.0);
            }
            stat += diff * diff / expected;
        }
    }
    let p = ChiSquared::new(1.0).expect("df = 1").sf(stat);
    (stat, p)
}

/// Options for [`chi_square_cooccurrence`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChiSquareOptions {
    pub yates: bool,
}

impl Default for ChiSquareOptions {
    fn default() -> Self {
        ChiSquareOptions { yates: true }
    }
}

/// Presence/absence co-occurrence tests for the feature pairs in [`CO_OCCURRENCES`].
pub fn chi_square_cooccurrence(db: &SegmentDatabase, opts: ChiSquareOptions) -> Result<Vec<FeatureStat>> {
    if db.inventory_count() == 0 {
        return Err(Error::EmptyInput("segment database is empty".into()));
    }
    let profiles = profiles(db);
    Ok(CO_OCCURRENCES
        .iter()
        .map(|&(a, b)| {
            let mut table = [[0u64; 2]; 2];
            for p in &profiles {
                let i = usize::from(!has(db, p, a));
                let j = usize::from(!has(db, p, b));
                table[i][j] += 1;
            }
            let (value, p) = chi_square_2x2(table, opts.yates);
            FeatureStat {
                kind: StatKind::ChiSquare,
                lhs: a.name().to_string(),
                rhs: b.name().to_string(),
                value,
                p_value: Some(p),
                total_x: None,
                violations: None,
            }
        })
        .collect())
}

/// Empirical P(Y | X) for each universal in [`IMPLICATIONS`].
pub fn implicational_conditional_probabilities(db: &SegmentDatabase) -> Result<Vec<Result<FeatureStat>>> {
    if db.inventory_count() == 0 {
        return Err(Error::EmptyInput("segment database is empty".into()));
    }
    Ok(IMPLICATIONS
        .iter()
        .map(|&(x, y)| conditional_probability(db, x, y))
        .collect())
}

pub fn conditional_probability(db: &SegmentDatabase, x: FeatureClass, y: FeatureClass) -> Result<FeatureStat> {
    let mut total = 0u64;
    let mut violations = 0u64;
    for inv in db.inventories() {
        if db.inventory_has(inv, x) {
            total += 1;
            if !db.inventory_has(inv, y) {
                violations += 1;
            }
        }
    }
    if total == 0 {
        return Err(Error::UndefinedImplication {
            lhs: x.name().into(),
            rhs: y.name().into(),
        });
    }
    Ok(FeatureStat {
        kind: StatKind::ConditionalProb,
        lhs: x.name().to_string(),
        rhs: y.name().to_string(),
        value: (total - violations) as f64 / total as f64,
        p_value: None,
        total_x: Some(total),
        violations: Some(violations),
    })
}

/// All statistics in output order: correlations, chi-square tests, implications.
/// Undefined entries are skipped and returned separately.
pub fn all_statistics(db: &SegmentDatabase, opts: ChiSquareOptions) -> Result<(Vec<FeatureStat>, Vec<Error>)> {
    let mut stats = Vec::new();
    let mut undefined = Vec::new();
    for r in pearson_feature_correlations(db)? {
        match r {
            Ok(s) => stats.push(s),
            Err(e) => undefined.push(e),
        }
    }
    stats.extend(chi_square_cooccurrence(db, opts)?);
    for r in implicational_conditional_probabilities(db)? {
        match r {
            Ok(s) => stats.push(s),
            Err(e) => undefined.push(e),
        }
    }
    Ok((stats, undefined))
}

/// Write statistics as CSV with columns `kind,lhs,rhs,value,p_value,total_x,violations`.
pub fn write_stats_csv<W: Write>(out: W, stats: &[FeatureStat]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["kind", "lhs", "rhs", "value", "p_value", "total_x", "violations"])?;
    let opt_f = |v: Option<f64>| v.map(|x| format!("{x:.6}")).unwrap_or_default();
    let opt_u = |v: Option<u64>| v.map(|x| x.to_string()).unwrap_or_default();
    for s in stats {
        w.write_record([
            s.kind.to_string(),
            s.lhs.clone(),
            s.rhs.clone(),
            format!("{:.6}", s.value),
            opt_f(s.p_value),
            opt_u(s.total_x),
            opt_u(s.violations),
        ])?;
    }
    w.flush().map_err(|e| Error::io("<stats csv>", e))?;
    Ok(())
}
