//! PHOIBLE ingestion: parse the segment table into an immutable, queryable database.

use std::collections::hash_map::Entry;
use std::collections::{BTreeMap, HashMap, HashSet};
use std::fs::File;
use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{fallback_bundle, Feature, FeatureBundle, FeatureClass, FeatureValue, SegmentClass};

const REQUIRED_COLUMNS: [&str; 4] = ["InventoryID", "Glottocode", "Phoneme", "SegmentClass"];

/// One row of the PHOIBLE table.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SegmentRecord {
    pub inventory_id: String,
    pub glottocode: String,
    pub segment: String,
    pub segment_class: SegmentClass,
    pub features: FeatureBundle,
}

pub type SegmentId = u32;

/// A distinct segment type with the feature bundle of its first annotated occurrence.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SegmentInfo {
    pub segment: String,
    pub class: SegmentClass,
    pub features: FeatureBundle,
}

impl SegmentInfo {
    pub fn is(&self, class: FeatureClass) -> bool {
        class.matches(self.class, &self.features)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InventoryEntry {
    pub id: String,
    pub glottocode: String,
    /// Sorted, duplicate-free.
    pub segments: Vec<SegmentId>,
}

/// Parsed PHOIBLE records with per-inventory membership and global frequencies.
///
/// Immutable after construction; every query is a pure function of the data.
#[derive(Debug, Clone)]
pub struct SegmentDatabase {
    records: Vec<SegmentRecord>,
    segments: Vec<SegmentInfo>,
    index: HashMap<String, SegmentId>,
    inventories: Vec<InventoryEntry>,
    global_counts: Vec<u32>,
}

/// Parse a PHOIBLE CSV file.
pub fn parse_phoible_csv(path: impl AsRef<Path>) -> Result<SegmentDatabase> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    SegmentDatabase::from_reader(file).map_err(|e| match e {
        Error::Csv(err) if err.is_io_error() => match err.into_kind() {
            csv::ErrorKind::Io(io) => Error::io(path, io),
            other => Error::InvalidInput(format!("{other:?}")),
        },
        other => other,
    })
}

impl SegmentDatabase {
    pub fn from_reader<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(true)
            .flexible(false)
            .from_reader(reader);
        let headers = rdr.headers()?.clone();
        let column = |name: &str| headers.iter().position(|h| h.trim() == name);
        let mut required = [0usize; 4];
        for (slot, name) in required.iter_mut().zip(REQUIRED_COLUMNS) {
            *slot = column(name).ok_or_else(|| Error::MissingColumn(name.to_string()))?;
        }
        let [inv_col, glotto_col, phoneme_col, class_col] = required;
        let feature_cols: Vec<(Feature, usize)> = Feature::ALL
            .iter()
            .filter_map(|f| column(f.name()).map(|idx| (*f, idx)))
            .collect();
        if feature_cols.is_empty() {
            return Err(Error::MissingColumn("feature columns".to_string()));
        }

        let mut records = Vec::new();
        for (i, row) in rdr.records().enumerate() {
            let row = row?;
            let line = i as u64 + 2;
            let field = |idx: usize| row.get(idx).unwrap_or("").trim();
            let segment = field(phoneme_col);
            if segment.is_empty() {
                return Err(Error::InvalidRow {
                    row: line,
                    reason: "empty segment".into(),
                });
            }
            let segment_class: SegmentClass = field(class_col)
                .parse()
                .map_err(|reason| Error::InvalidRow { row: line, reason })?;
            let mut features = FeatureBundle::default();
            for (feat, idx) in &feature_cols {
                features.set(*feat, FeatureValue::parse(field(*idx)));
            }
            records.push(SegmentRecord {
                inventory_id: field(inv_col).to_string(),
                glottocode: field(glotto_col).to_string(),
                segment: segment.to_string(),
                segment_class,
                features,
            });
        }
        Self::from_records(records)
    }

    /// Build a database from records; duplicate (inventory, segment) rows are dropped.
    pub fn from_records(records: impl IntoIterator<Item = SegmentRecord>) -> Result<Self> {
        let mut db = SegmentDatabase {
            records: Vec::new(),
            segments: Vec::new(),
            index: HashMap::new(),
            inventories: Vec::new(),
            global_counts: Vec::new(),
        };
        let mut inventory_index: HashMap<String, usize> = HashMap::new();
        let mut seen: HashSet<(usize, SegmentId)> = HashSet::new();

        for mut record in records {
            if record.segment.is_empty() {
                return Err(Error::InvalidInput("record with empty segment".into()));
            }
            if record.features.is_unannotated() {
                if let Some((_, fallback)) = fallback_bundle(&record.segment) {
                    record.features = fallback;
                }
            }
            let seg_id = match db.index.entry(record.segment.clone()) {
                Entry::Occupied(e) => {
                    let id = *e.get();
                    let info = &mut db.segments[id as usize];
                    if info.features.is_unannotated() && !record.features.is_unannotated() {
                        info.features = record.features;
                    }
                    id
                }
                Entry::Vacant(e) => {
                    let id = db.segments.len() as SegmentId;
                    db.segments.push(SegmentInfo {
                        segment: record.segment.clone(),
                        class: record.segment_class,
                        features: record.features,
                    });
                    db.global_counts.push(0);
                    e.insert(id);
                    id
                }
            };
            let inv = *inventory_index
                .entry(record.inventory_id.clone())
                .or_insert_with(|| {
                    db.inventories.push(InventoryEntry {
                        id: record.inventory_id.clone(),
                        glottocode: record.glottocode.clone(),
                        segments: Vec::new(),
                    });
                    db.inventories.len() - 1
                });
            if !seen.insert((inv, seg_id)) {
                continue;
            }
            db.inventories[inv].segments.push(seg_id);
            db.global_counts[seg_id as usize] += 1;
            db.records.push(record);
        }

        if db.records.is_empty() {
            return Err(Error::EmptyInput("no data rows".into()));
        }
        for inv in &mut db.inventories {
            inv.segments.sort_unstable();
        }
        Ok(db)
    }

    pub fn records(&self) -> &[SegmentRecord] {
        &self.records
    }

    pub fn segments(&self) -> &[SegmentInfo] {
        &self.segments
    }

    pub fn segment(&self, id: SegmentId) -> &SegmentInfo {
        &self.segments[id as usize]
    }

    pub fn lookup(&self, segment: &str) -> Option<SegmentId> {
        self.index.get(segment).copied()
    }

    pub fn inventories(&self) -> &[InventoryEntry] {
        &self.inventories
    }

    pub fn inventory_count(&self) -> usize {
        self.inventories.len()
    }

    /// Number of inventories containing the segment.
    pub fn global_count(&self, id: SegmentId) -> u32 {
        self.global_counts[id as usize]
    }

    pub fn global_count_of(&self, segment: &str) -> u32 {
        self.lookup(segment).map_or(0, |id| self.global_count(id))
    }

    pub fn global_counts(&self) -> impl Iterator<Item = (&str, u32)> {
        self.segments
            .iter()
            .zip(&self.global_counts)
            .map(|(info, n)| (info.segment.as_str(), *n))
    }

    /// Whether any segment of the inventory belongs to `class`.
    pub fn inventory_has(&self, inv: &InventoryEntry, class: FeatureClass) -> bool {
        inv.segments.iter().any(|id| self.segment(*id).is(class))
    }

    pub fn class_count(&self, inv: &InventoryEntry, class: SegmentClass) -> usize {
        inv.segments
            .iter()
            .filter(|id| self.segment(**id).class == class)
            .count()
    }

    /// Cross-linguistic frequency of each segment, normalised to a probability map.
    pub fn global_phoneme_distribution(&self) -> Result<PhonemeDistribution> {
        let total: u64 = self.global_counts.iter().map(|n| u64::from(*n)).sum();
        if total == 0 {
            return Err(Error::EmptyInput("segment database is empty".into()));
        }
        let probs = self
            .global_counts()
            .filter(|(_, n)| *n > 0)
            .map(|(seg, n)| (seg.to_string(), f64::from(n) / total as f64))
            .collect();
        Ok(PhonemeDistribution { probs })
    }
}

/// Probability map over segment strings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhonemeDistribution {
    probs: BTreeMap<String, f64>,
}

impl PhonemeDistribution {
    /// Normalise non-negative weights into a distribution.
    pub fn from_weights<S: Into<String>>(weights: impl IntoIterator<Item = (S, f64)>) -> Result<Self> {
        let raw: Vec<(String, f64)> = weights.into_iter().map(|(s, w)| (s.into(), w)).collect();
        if raw.iter().any(|(_, w)| !(w.is_finite() && *w >= 0.0)) {
            return Err(Error::InvalidInput("weights must be finite and non-negative".into()));
        }
        let total: f64 = raw.iter().map(|(_, w)| w).sum();
        if total <= 0.0 {
            return Err(Error::EmptyInput("distribution has no mass".into()));
        }
        let mut probs = BTreeMap::new();
        for (s, w) in raw {
            if w > 0.0 {
                *probs.entry(s).or_insert(0.0) += w / total;
            }
        }
        Ok(PhonemeDistribution { probs })
    }

    pub fn get(&self, segment: &str) -> Option<f64> {
        self.probs.get(segment).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, f64)> {
        self.probs.iter().map(|(s, p)| (s.as_str(), *p))
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    /// Segments by descending probability, ties broken by segment string.
    pub fn ranked(&self) -> Vec<(&str, f64)> {
        let mut v: Vec<_> = self.iter().collect();
        v.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(b.0)));
        v
    }
}


#[cfg(test)]
mod tests {
    use super::*;

    const HEADER: &str = "InventoryID,Glottocode,Phoneme,SegmentClass,nasal,sonorant";

    #[test]
    fn three_rows_two_inventories() {
        let csv = format!("{HEADER}\n1,aaaa1234,p,consonant,-,-\n1,aaaa1234,a,vowel,-,+\n2,bbbb1234,p,consonant,-,-\n");
        let db = SegmentDatabase::from_reader(csv.as_bytes()).unwrap();
        assert_eq!(db.inventory_count(), 2);
        assert_eq!(db.global_count_of("p"), 2);
        assert_eq!(db.global_count_of("a"), 1);
        assert_eq!(db.records().len(), 3);
    }

    #[test]
    fn duplicate_row_is_ignored() {
        let csv = format!("{HEADER}\n1,x,p,consonant,-,-\n1,x,p,consonant,-,-\n2,y,a,vowel,-,+\n");
        let db = SegmentDatabase::from_reader(csv.as_bytes()).unwrap();
        assert_eq!(db.global_count_of("p"), 1);
        assert_eq!(db.records().len(), 2);
    }

    #[test]
    fn missing_column_is_named() {
        let csv = "InventoryID,Glottocode,Phoneme,nasal\n1,x,p,-\n";
        match SegmentDatabase::from_reader(csv.as_bytes()) {
            Err(Error::MissingColumn(c)) => assert_eq!(c, "SegmentClass"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn zero_rows_is_empty_input() {
        let csv = format!("{HEADER}\n");
        assert!(matches!(
            SegmentDatabase::from_reader(csv.as_bytes()),
            Err(Error::EmptyInput(_))
        ));
    }

    #[test]
    fn unreadable_file_is_io_error() {
        assert!(matches!(
            parse_phoible_csv("/nonexistent/phoible.csv"),
            Err(Error::Io { .. })
        ));
    }

    #[test]
    fn bad_segment_class_is_rejected() {
        let csv = format!("{HEADER}\n1,x,p,click,-,-\n");
        assert!(matches!(
            SegmentDatabase::from_reader(csv.as_bytes()),
            Err(Error::InvalidRow { row: 2, .. })
        ));
    }

    #[test]
    fn unannotated_rows_use_fallback_features() {
        let csv = format!("{HEADER}\n1,x,m,consonant,NA,NA\n");
        let db = SegmentDatabase::from_reader(csv.as_bytes()).unwrap();
        let info = db.segment(db.lookup("m").unwrap());
        assert!(info.features.is(Feature::Nasal));
    }

    #[test]
    fn distribution_normalises_counts() {
        let db = fixtures::db(&[("1", &["p", "a"]), ("2", &["p"]), ("3", &["p"])]);
        let dist = db.global_phoneme_distribution().unwrap();
        assert!((dist.get("p").unwrap() - 0.75).abs() < 1e-15);
        assert!((dist.get("a").unwrap() - 0.25).abs() < 1e-15);

        let single = fixtures::db(&[("1", &["a"])]);
        assert_eq!(single.global_phoneme_distribution().unwrap().get("a"), Some(1.0));
    }
}
