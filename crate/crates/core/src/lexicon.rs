//! Lexicon files and content hashing.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::grammar::{GenerationConfig, GrammarSpec};
use crate::inventory::PhonemeInventory;

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Hash of a value's compact JSON encoding.
pub fn json_hash<T: Serialize>(value: &T) -> Result<String> {
    Ok(sha256_hex(&serde_json::to_vec(value)?))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub grammar: GrammarSpec,
    pub seed: u64,
    pub inventory_hash: String,
    pub config_hash: String,
    pub generation: GenerationConfig,
}

impl Provenance {
    pub fn new(spec: &GrammarSpec, inv: &PhonemeInventory, generation: &GenerationConfig, seed: u64) -> Result<Self> {
        Ok(Provenance {
            grammar: spec.clone(),
            seed,
            inventory_hash: json_hash(inv)?,
            config_hash: json_hash(&(spec, generation))?,
            generation: generation.clone(),
        })
    }
}

/// An ordered list of word forms, each a space-separated phoneme string.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Lexicon {
    pub words: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub provenance: Option<Provenance>,
}

impl Lexicon {
    pub fn from_words<S: Into<String>>(words: impl IntoIterator<Item = S>) -> Self {
        Lexicon {
            words: words.into_iter().map(Into::into).collect(),
            provenance: None,
        }
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    /// Phoneme tokens of each word.
    pub fn tokens(&self) -> impl Iterator<Item = Vec<&str>> + '_ {
        self.words.iter().map(|w| w.split_whitespace().collect())
    }

    /// The first `n` words, without provenance.
    pub fn prefix(&self, n: usize) -> Lexicon {
        Lexicon::from_words(self.words.iter().take(n).cloned())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }
}
