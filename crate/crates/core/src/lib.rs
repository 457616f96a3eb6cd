//! Lexicon generation grounded in phonological typology.
//!
//! The crate covers the whole pipeline: PHOIBLE ingestion and feature statistics,
//! inventory sampling, candidate generation, constraint grammars, semantic
//! assignment, and n-gram evaluation.

pub mod candidates;
pub mod error;
pub mod evaluation;
pub mod features;
pub mod grammar;
pub mod inventory;
pub mod lexicon;
pub mod phoible;
pub mod pipeline;
pub mod seed;
pub mod semantics;
pub mod stats;

pub use error::{Error, Result};
pub use features::{Feature, FeatureBundle, FeatureClass, FeatureValue, Place, SegmentClass, Sonority};
pub use inventory::{
    default_rules, repair_universals, sample_inventory, sample_inventory_with_rng, sample_sizes,
    sample_sizes_with, Archetype, Phoneme, PhonemeInventory, SamplerConfig, SizeDistribution,
    SizeHistogram, UniversalRule,
};
pub use phoible::{parse_phoible_csv, PhonemeDistribution, SegmentDatabase, SegmentRecord};
pub use seed::{derive_rng, derive_seed, rng_from_seed, Rng};
pub use stats::{
    all_statistics, chi_square_2x2, chi_square_cooccurrence, conditional_probability,
    implicational_conditional_probabilities, pearson_feature_correlations, ChiSquareOptions,
    FeatureStat, StatKind,
};
pub use candidates::{Constraint, TemplateParams, ViolationVector, WordForm};
pub use evaluation::{CrossGrammarMatrix, EvalConfig, EvalReport, NgramModel, Smoothing};
pub use grammar::{GenerationConfig, GrammarKind, GrammarSpec};
pub use lexicon::Lexicon;
pub use pipeline::{run_full_pipeline, run_pipeline, RunConfig, RunManifest};
pub use semantics::{hill_climb_assign, Assignment, HillClimbConfig, MeaningSet, Ontology};
