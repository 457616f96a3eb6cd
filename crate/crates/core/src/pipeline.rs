//! End-to-end orchestration: ingest, sample, generate, assign, evaluate.
//!
//! The master seed fans out through [`derive_seed`]:
//!
//! ```text
//! replicate r   derive_seed(master, "replicate", [r])
//! inventory     derive_seed(replicate, "inventory", [])
//! lexicon       derive_seed(replicate, "lexicon", [])      shared by all grammars
//! meanings      derive_seed(replicate, "meanings", [])
//! assignment    derive_seed(replicate, "semantics", [g])
//! held-out      derive_seed(replicate, "eval", [size])
//! cross matrix  derive_seed(replicate, "cross", [])
//! ```

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::candidates::TemplateParams;
use crate::error::{Error, Result};
use crate::evaluation::{
    cross_grammar_matrix, sweep_lexicons, sweep_reports, write_metrics_csv, CrossGrammarMatrix, EvalConfig, EvalReport,
    SweepPlan,
};
use crate::grammar::{GenerationConfig, GrammarKind, GrammarSpec};
use crate::inventory::{sample_inventory, PhonemeInventory, SamplerConfig};
use crate::lexicon::{json_hash, sha256_hex, Lexicon};
use crate::phoible::parse_phoible_csv;
use crate::seed::{derive_rng, derive_seed};
use crate::semantics::{hill_climb_assign, sample_leaf_concepts, HillClimbConfig, Ontology, PairSubsample};
use crate::stats::{all_statistics, write_stats_csv, ChiSquareOptions};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SemanticsConfig {
    pub enabled: bool,
    /// Ontology JSON; the bundled ontology when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ontology: Option<PathBuf>,
    pub restarts: usize,
    pub max_iters: usize,
    pub max_proposals: usize,
    pub trace_every: usize,
    pub pair_subsample: PairSubsample,
}

impl Default for SemanticsConfig {
    fn default() -> Self {
        let h = HillClimbConfig::default();
        SemanticsConfig {
            enabled: true,
            ontology: None,
            restarts: h.restarts,
            max_iters: h.max_iters,
            max_proposals: h.max_proposals,
            trace_every: h.trace_every,
            pair_subsample: h.pair_subsample,
        }
    }
}

impl SemanticsConfig {
    pub fn hill_climb(&self) -> HillClimbConfig {
        HillClimbConfig {
            restarts: self.restarts,
            max_iters: self.max_iters,
            max_proposals: self.max_proposals,
            pair_subsample: self.pair_subsample,
            trace_every: self.trace_every,
        }
    }

    pub fn load_ontology(&self) -> Result<Ontology> {
        match &self.ontology {
            Some(p) => Ontology::load(p),
            None => Ok(Ontology::bundled()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub phoible_path: PathBuf,
    pub output_dir: PathBuf,
    pub master_seed: u64,
    /// Independent replicates; each gets its own inventory and lexicons.
    pub replicates: usize,
    /// Ascending sweep sizes; the largest is the size of every generated lexicon.
    pub lexicon_sizes: Vec<usize>,
    pub candidates_per_word: usize,
    pub stats: ChiSquareOptions,
    /// The seed field is ignored; each replicate derives its own.
    pub sampler: SamplerConfig,
    pub template: TemplateParams,
    pub grammars: Vec<GrammarSpec>,
    pub semantics: SemanticsConfig,
    pub eval: EvalConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            phoible_path: PathBuf::from("data/phoible.csv"),
            output_dir: PathBuf::from("out"),
            master_seed: 1,
            replicates: 5,
            lexicon_sizes: vec![100, 500, 1000, 2500, 5000],
            candidates_per_word: GenerationConfig::default().candidates_per_word,
            stats: ChiSquareOptions::default(),
            sampler: SamplerConfig::default(),
            template: TemplateParams::default(),
            grammars: [
                GrammarKind::Deterministic,
                GrammarKind::StrictOt,
                GrammarKind::Maxent,
                GrammarKind::Random,
            ]
            .into_iter()
            .map(GrammarSpec::new)
            .collect(),
            semantics: SemanticsConfig::default(),
            eval: EvalConfig::default(),
        }
    }
}

const CONFIG_DOCS: &[(&str, &str)] = &[
    ("phoible_path", "PHOIBLE CSV export"),
    ("output_dir", "artifacts and manifest.json are written here"),
    ("master_seed", "every stage seed is derived from this"),
    ("replicates", "independent inventory/lexicon replicates"),
    ("lexicon_sizes", "ascending sweep sizes; the largest is generated"),
    ("candidates_per_word", "candidate set size per word slot"),
    ("[stats]", "co-occurrence tests; yates applies continuity correction"),
    ("[sampler]", "inventory sampler; seed is replaced per replicate"),
    ("[template]", "syllable template for candidate generation"),
    ("[[grammars]]", "one table per grammar condition"),
    ("[semantics]", "meaning assignment by hill climbing"),
    ("[semantics.pair_subsample]", "score a uniform pair sample above full_up_to meanings"),
    ("[eval]", "n-gram evaluation; smoothing.method is add_k or witten_bell"),
];

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        Ok(toml::from_str(text)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    /// Defaults as TOML, with a comment above each top-level key.
    pub fn documented_default() -> String {
        let text = RunConfig::default().to_toml().expect("default config serializes");
        let mut out = String::new();
        let mut documented = std::collections::HashSet::new();
        for line in text.lines() {
            let key = if line.starts_with('[') {
                line.trim()
            } else {
                line.split(" =").next().unwrap_or("")
            };
            if let Some((_, doc)) = CONFIG_DOCS.iter().find(|(k, _)| *k == key) {
                if documented.insert(key) {
                    out.push_str(&format!("# {doc}\n"));
                }
            }
            out.push_str(line);
            out.push('\n');
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        if self.replicates == 0 {
            return Err(Error::Config("replicates must be at least 1".into()));
        }
        if self.grammars.is_empty() {
            return Err(Error::Config("at least one grammar is required".into()));
        }
        if self.lexicon_sizes.is_empty() || self.lexicon_sizes.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Config("lexicon_sizes must be non-empty and strictly ascending".into()));
        }
        let mut kinds: Vec<GrammarKind> = self.grammars.iter().map(|g| g.kind).collect();
        kinds.sort();
        kinds.dedup();
        if kinds.len() != self.grammars.len() {
            return Err(Error::Config("each grammar kind may appear once".into()));
        }
        self.sampler.validate()?;
        self.template.validate()?;
        for g in &self.grammars {
            g.validate()?;
        }
        self.semantics.hill_climb().validate()?;
        self.eval.validate()
    }

    pub fn generation(&self) -> GenerationConfig {
        GenerationConfig {
            template: self.template.clone(),
            candidates_per_word: self.candidates_per_word,
        }
    }

    /// Hash of everything that affects artifact contents. The output directory is excluded.
    pub fn hash(&self) -> Result<String> {
        json_hash(&self.portable())
    }

    /// The config without its output directory, as recorded next to the artifacts.
    pub fn portable(&self) -> RunConfig {
        RunConfig {
            output_dir: PathBuf::new(),
            ..self.clone()
        }
    }

    pub fn replicate_seed(&self, r: usize) -> u64 {
        derive_seed(self.master_seed, "replicate", &[r as u64])
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileEntry {
    /// Relative to the output directory for outputs; as given for inputs.
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageRecord {
    pub name: String,
    pub status: String,
    pub inputs: Vec<FileEntry>,
    pub outputs: Vec<FileEntry>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub started_unix_ms: u64,
    pub finished_unix_ms: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool_version: String,
    pub config_hash: String,
    pub master_seed: u64,
    pub complete: bool,
    pub stages: Vec<StageRecord>,
    pub started_unix_ms: u64,
    pub finished_unix_ms: u64,
}

impl RunManifest {
    /// The manifest with every timestamp zeroed, for reproducibility checks.
    pub fn without_timestamps(&self) -> RunManifest {
        let mut m = self.clone();
        m.started_unix_ms = 0;
        m.finished_unix_ms = 0;
        for s in &mut m.stages {
            s.started_unix_ms = 0;
            s.finished_unix_ms = 0;
        }
        m
    }

    pub fn outputs(&self) -> impl Iterator<Item = &FileEntry> {
        self.stages.iter().flat_map(|s| s.outputs.iter())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }
}

/// Everything a run computed, alongside its manifest.
#[derive(Debug, Clone)]
pub struct PipelineOutput {
    pub manifest: RunManifest,
    pub replicate_seeds: Vec<u64>,
    pub inventories: Vec<PhonemeInventory>,
    /// Largest-size lexicon per (replicate seed, grammar).
    pub lexicons: Vec<(u64, GrammarKind, Lexicon)>,
    /// Best alignment score per (replicate seed, grammar).
    pub alignment: Vec<(u64, GrammarKind, f64)>,
    pub reports: Vec<EvalReport>,
    /// One matrix per replicate at the largest size.
    pub cross: Vec<CrossGrammarMatrix>,
    /// Entry-wise mean of the replicate matrices.
    pub cross_mean: CrossGrammarMatrix,
    pub elapsed_secs: f64,
}

fn now_ms() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_millis() as u64)
        .unwrap_or(0)
}

fn hash_file(path: &Path) -> Result<FileEntry> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(FileEntry {
        path: path.display().to_string(),
        sha256: sha256_hex(&bytes),
        bytes: bytes.len() as u64,
    })
}

struct Stage<'a> {
    dir: &'a Path,
    record: StageRecord,
}

impl Stage<'_> {
    fn write(&mut self, rel: &str, bytes: &[u8]) -> Result<()> {
        let path = self.dir.join(rel);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
        }
        fs::write(&path, bytes).map_err(|e| Error::io(&path, e))?;
        self.record.outputs.push(FileEntry {
            path: rel.to_string(),
            sha256: sha256_hex(bytes),
            bytes: bytes.len() as u64,
        });
        Ok(())
    }

    fn input(&mut self, path: &Path) -> Result<()> {
        self.record.inputs.push(hash_file(path)?);
        Ok(())
    }
}

struct Runner<'a> {
    dir: &'a Path,
    manifest: RunManifest,
}

impl Runner<'_> {
    fn stage<T>(&mut self, name: &str, body: impl FnOnce(&mut Stage<'_>) -> Result<T>) -> Result<T> {
        let mut stage = Stage {
            dir: self.dir,
            record: StageRecord {
                name: name.to_string(),
                status: "ok".into(),
                inputs: vec![],
                outputs: vec![],
                error: None,
                started_unix_ms: now_ms(),
                finished_unix_ms: 0,
            },
        };
        let result = body(&mut stage);
        stage.record.finished_unix_ms = now_ms();
        if let Err(e) = &result {
            stage.record.status = "failed".into();
            stage.record.error = Some(e.to_string());
        }
        self.manifest.stages.push(stage.record);
        result.map_err(|e| Error::Stage {
            stage: name.to_string(),
            source: Box::new(e),
        })
    }

    fn write_manifest(&mut self) -> Result<()> {
        self.manifest.finished_unix_ms = now_ms();
        let path = self.dir.join("manifest.json");
        let text = serde_json::to_string_pretty(&self.manifest)?;
        fs::write(&path, text).map_err(|e| Error::io(&path, e))
    }
}

fn json<T: Serialize>(value: &T) -> Result<Vec<u8>> {
    Ok(serde_json::to_vec_pretty(value)?)
}

fn csv_bytes(f: impl FnOnce(&mut Vec<u8>) -> Result<()>) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    f(&mut buf)?;
    Ok(buf)
}

fn mean_matrix(ms: &[CrossGrammarMatrix]) -> CrossGrammarMatrix {
    let k = ms[0].grammars.len();
    let avg = |get: fn(&CrossGrammarMatrix) -> &Vec<Vec<f64>>| -> Vec<Vec<f64>> {
        (0..k)
            .map(|i| (0..k).map(|j| ms.iter().map(|m| get(m)[i][j]).sum::<f64>() / ms.len() as f64).collect())
            .collect()
    };
    CrossGrammarMatrix {
        grammars: ms[0].grammars.clone(),
        log_likelihood: avg(|m| &m.log_likelihood),
        perplexity: avg(|m| &m.perplexity),
    }
}

/// Run every stage and return the manifest. Also written to `output_dir/manifest.json`.
pub fn run_full_pipeline(config: &RunConfig) -> Result<RunManifest> {
    run_pipeline(config).map(|o| o.manifest)
}

/// Run every stage, keeping the in-memory results.
///
/// A failing stage is recorded in a partial manifest on disk and returned as
/// [`Error::Stage`].
pub fn run_pipeline(config: &RunConfig) -> Result<PipelineOutput> {
    let clock = Instant::now();
    config.validate()?;
    let dir = config.output_dir.as_path();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut runner = Runner {
        dir,
        manifest: RunManifest {
            tool_version: TOOL_VERSION.to_string(),
            config_hash: config.hash()?,
            master_seed: config.master_seed,
            complete: false,
            stages: vec![],
            started_unix_ms: now_ms(),
            finished_unix_ms: 0,
        },
    };
    let result = run_stages(config, &mut runner);
    runner.manifest.complete = result.is_ok();
    runner.write_manifest()?;
    let mut out = result?;
    out.manifest = runner.manifest;
    out.elapsed_secs = clock.elapsed().as_secs_f64();
    Ok(out)
}

fn run_stages(config: &RunConfig, runner: &mut Runner<'_>) -> Result<PipelineOutput> {
    let seeds: Vec<u64> = (0..config.replicates).map(|r| config.replicate_seed(r)).collect();
    let generation = config.generation();

    let (db, reference) = runner.stage("ingest", |st| {
        st.input(&config.phoible_path)?;
        st.write("config.toml", config.portable().to_toml()?.as_bytes())?;
        let db = parse_phoible_csv(&config.phoible_path)?;
        let reference = db.global_phoneme_distribution()?;
        st.write("reference_distribution.json", &json(&reference)?)?;
        Ok((db, reference))
    })?;

    runner.stage("stats", |st| {
        let (stats, undefined) = all_statistics(&db, config.stats)?;
        st.write("stats.csv", &csv_bytes(|b| write_stats_csv(b, &stats))?)?;
        let notes: Vec<String> = undefined.iter().map(ToString::to_string).collect();
        st.write("stats_undefined.json", &json(&notes)?)?;
        Ok(())
    })?;

    let inventories = runner.stage("sample", |st| {
        let invs = seeds
            .par_iter()
            .map(|&s| {
                let cfg = SamplerConfig {
                    seed: derive_seed(s, "inventory", &[]),
                    ..config.sampler.clone()
                };
                sample_inventory(&db, &cfg)
            })
            .collect::<Result<Vec<_>>>()?;
        for (r, inv) in invs.iter().enumerate() {
            st.write(&format!("inventories/r{r}.json"), inv.to_json()?.as_bytes())?;
        }
        Ok(invs)
    })?;

    let lexicons = runner.stage("generate", |st| {
        let plan = SweepPlan {
            grammars: &config.grammars,
            sizes: &config.lexicon_sizes,
            seeds: &seeds,
            inventories: &inventories,
            generation: &generation,
            eval: &config.eval,
            reference: &reference,
        };
        let lexicons = sweep_lexicons(&plan)?;
        for (seed, kind, lex) in &lexicons {
            let r = seeds.iter().position(|s| s == seed).expect("known seed");
            st.write(&format!("lexicons/{}_r{r}.json", kind.label()), lex.to_json()?.as_bytes())?;
        }
        Ok(lexicons)
    })?;

    let alignment = runner.stage("semantics", |st| {
        if !config.semantics.enabled {
            return Ok(vec![]);
        }
        if let Some(p) = &config.semantics.ontology {
            st.input(p)?;
        }
        let ont = config.semantics.load_ontology()?;
        let search = config.semantics.hill_climb();
        let mut scores = Vec::new();
        for (seed, kind, lex) in &lexicons {
            let r = seeds.iter().position(|s| s == seed).expect("known seed");
            let g = config.grammars.iter().position(|s| s.kind == *kind).expect("known grammar");
            let meanings = sample_leaf_concepts(&ont, lex.len(), &mut derive_rng(*seed, "meanings", &[]))?;
            let a_seed = derive_seed(*seed, "semantics", &[g as u64]);
            let a = hill_climb_assign(&meanings.meanings, &lex.words, &ont, &search, a_seed)?;
            st.write(&format!("semantics/{}_r{r}.json", kind.label()), &json(&a.record(a_seed))?)?;
            scores.push((*seed, *kind, a.score));
        }
        Ok(scores)
    })?;

    let (reports, cross) = runner.stage("evaluate", |st| {
        let reports = sweep_reports(&lexicons, &config.lexicon_sizes, &config.eval, &reference)?;
        st.write("metrics.csv", &csv_bytes(|b| write_metrics_csv(b, &reports))?)?;
        let mut cross = Vec::new();
        for (r, &seed) in seeds.iter().enumerate() {
            let lexs: Vec<(GrammarKind, Lexicon)> = lexicons
                .iter()
                .filter(|(s, _, _)| *s == seed)
                .map(|(_, g, l)| (*g, l.clone()))
                .collect();
            let m = cross_grammar_matrix(&lexs, &config.eval, derive_seed(seed, "cross", &[]))?;
            st.write(&format!("cross/r{r}.csv"), &csv_bytes(|b| m.write_csv(b))?)?;
            st.write(&format!("cross/r{r}.json"), &json(&m)?)?;
            cross.push(m);
        }
        let mean = mean_matrix(&cross);
        st.write("cross_mean.csv", &csv_bytes(|b| mean.write_csv(b))?)?;
        st.write("cross_mean.json", &json(&mean)?)?;
        Ok((reports, cross))
    })?;

    let cross_mean = mean_matrix(&cross);
    Ok(PipelineOutput {
        manifest: runner.manifest.clone(),
        replicate_seeds: seeds,
        inventories,
        lexicons,
        alignment,
        reports,
        cross,
        cross_mean,
        elapsed_secs: 0.0,
    })
}
