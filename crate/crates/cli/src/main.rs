use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use phonolex::evaluation::{cross_grammar_matrix, sweep_reports, write_metrics_csv};
use phonolex::grammar::generate_lexicon;
use phonolex::inventory::Archetype;
use phonolex::pipeline::run_pipeline;
use phonolex::seed::derive_rng;
use phonolex::semantics::{hill_climb_assign, sample_leaf_concepts};
use phonolex::stats::{all_statistics, write_stats_csv, ChiSquareOptions};
use phonolex::{
    parse_phoible_csv, sample_inventory, Error, GrammarKind, GrammarSpec, Lexicon, PhonemeInventory, Result,
    RunConfig,
};
use serde_json::json;

/// Typologically grounded lexicon generation.
///
/// Every subcommand reads defaults from the run config given by `--config`
/// (see `--print-config`); flags override it.
#[derive(Parser, Debug)]
#[command(name = "phonolex", version, arg_required_else_help = true)]
struct Cli {
    /// Run config (TOML). Missing keys take their defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Seed for this command; for `run`, the master seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output file, or the output directory for `run`. Stdout when absent.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Print the default run config with comments and exit.
    #[arg(long)]
    print_config: bool,
    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Parse PHOIBLE and write a summary with the global phoneme distribution.
    Ingest {
        #[arg(long)]
        phoible: Option<PathBuf>,
    },
    /// Feature correlations, co-occurrence tests and implicational universals as CSV.
    Stats {
        #[arg(long)]
        phoible: Option<PathBuf>,
        /// Disable the continuity correction on 2x2 chi-square tests.
        #[arg(long)]
        no_yates: bool,
    },
    /// Sample one phoneme inventory as JSON.
    SampleInventory {
        #[arg(long)]
        phoible: Option<PathBuf>,
        #[arg(long)]
        archetype: Option<Archetype>,
    },
    /// Generate a lexicon from an inventory under one grammar.
    GenLexicon {
        #[arg(long)]
        inventory: PathBuf,
        /// det, ot, ot-stochastic, hg, maxent or random.
        #[arg(long)]
        grammar: GrammarKind,
        #[arg(long)]
        size: usize,
    },
    /// Sample meanings and assign them to a lexicon's words.
    AssignSemantics {
        #[arg(long)]
        lexicon: PathBuf,
        #[arg(long)]
        ontology: Option<PathBuf>,
        #[arg(long)]
        restarts: Option<usize>,
        #[arg(long)]
        max_iters: Option<usize>,
    },
    /// Held-out perplexity, log-likelihood, improvement ratio and KL per lexicon, as CSV.
    Evaluate {
        /// Lexicon JSON written by gen-lexicon. Repeat for several grammars.
        #[arg(long, required = true)]
        lexicon: Vec<PathBuf>,
        #[arg(long)]
        phoible: Option<PathBuf>,
    },
    /// Train-on-one, score-on-another matrix as CSV, with a JSON mirror next to `--out`.
    CrossEval {
        /// Lexicon JSON written by gen-lexicon; at least two, one per grammar.
        #[arg(long, required = true)]
        lexicon: Vec<PathBuf>,
    },
    /// Run the whole pipeline into the output directory.
    Run,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if cli.print_config {
        print!("{}", RunConfig::documented_default());
        return ExitCode::SUCCESS;
    }
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", error_json(&e));
            ExitCode::FAILURE
        }
    }
}

fn error_json(e: &Error) -> serde_json::Value {
    let body = match e {
        Error::Stage { stage, source } => json!({
            "kind": source.kind(),
            "stage": stage,
            "message": source.to_string(),
        }),
        other => json!({ "kind": other.kind(), "message": other.to_string() }),
    };
    json!({ "error": body })
}

fn emit(out: Option<&Path>, bytes: &[u8]) -> Result<()> {
    match out {
        Some(p) => {
            if let Some(parent) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                fs::create_dir_all(parent).map_err(|e| io_error(parent, e))?;
            }
            fs::write(p, bytes).map_err(|e| io_error(p, e))
        }
        None => std::io::stdout().write_all(bytes).map_err(|e| io_error(Path::new("<stdout>"), e)),
    }
}

fn io_error(path: &Path, e: std::io::Error) -> Error {
    Error::Io {
        path: path.to_path_buf(),
        source: e,
    }
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| io_error(path, e))
}

fn execute(cli: &Cli) -> Result<()> {
    let config = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    let seed = cli.seed.unwrap_or(config.master_seed);
    let out = cli.out.as_deref();
    let phoible = |flag: &Option<PathBuf>| flag.clone().unwrap_or_else(|| config.phoible_path.clone());
    let Some(command) = &cli.command else {
        return Err(Error::Config("no subcommand given".into()));
    };
    match command {
        Command::Ingest { phoible: p } => {
            let db = parse_phoible_csv(phoible(p))?;
            let reference = db.global_phoneme_distribution()?;
            let summary = json!({
                "inventories": db.inventory_count(),
                "records": db.records().len(),
                "segments": db.segments().len(),
                "distribution": reference,
            });
            emit(out, &serde_json::to_vec_pretty(&summary)?)
        }
        Command::Stats { phoible: p, no_yates } => {
            let db = parse_phoible_csv(phoible(p))?;
            let opts = ChiSquareOptions {
                yates: config.stats.yates && !no_yates,
            };
            let (stats, undefined) = all_statistics(&db, opts)?;
            for e in &undefined {
                eprintln!("{}", json!({ "warning": { "kind": e.kind(), "message": e.to_string() } }));
            }
            let mut buf = Vec::new();
            write_stats_csv(&mut buf, &stats)?;
            emit(out, &buf)
        }
        Command::SampleInventory { phoible: p, archetype } => {
            let db = parse_phoible_csv(phoible(p))?;
            let mut sampler = config.sampler.clone();
            sampler.seed = seed;
            if let Some(a) = archetype {
                sampler.archetype = *a;
            }
            let inv = sample_inventory(&db, &sampler)?;
            emit(out, inv.to_json()?.as_bytes())
        }
        Command::GenLexicon { inventory, grammar, size } => {
            let inv = PhonemeInventory::from_json(&read(inventory)?)?;
            let spec = config
                .grammars
                .iter()
                .find(|g| g.kind == *grammar)
                .cloned()
                .unwrap_or_else(|| GrammarSpec::new(*grammar));
            let lex = generate_lexicon(&spec, &inv, &config.generation(), *size, seed)?;
            emit(out, lex.to_json()?.as_bytes())
        }
        Command::AssignSemantics {
            lexicon,
            ontology,
            restarts,
            max_iters,
        } => {
            let lex = Lexicon::load(lexicon)?;
            let mut sem = config.semantics.clone();
            if ontology.is_some() {
                sem.ontology = ontology.clone();
            }
            let ont = sem.load_ontology()?;
            let mut search = sem.hill_climb();
            search.restarts = restarts.unwrap_or(search.restarts);
            search.max_iters = max_iters.unwrap_or(search.max_iters);
            let meanings = sample_leaf_concepts(&ont, lex.len(), &mut derive_rng(seed, "meanings", &[]))?;
            let a = hill_climb_assign(&meanings.meanings, &lex.words, &ont, &search, seed)?;
            emit(out, &serde_json::to_vec_pretty(&a.record(seed))?)
        }
        Command::Evaluate { lexicon, phoible: p } => {
            let reference = parse_phoible_csv(phoible(p))?.global_phoneme_distribution()?;
            let lexicons = load_labelled(lexicon)?;
            let size = lexicons[0].1.len();
            if let Some((g, l)) = lexicons.iter().find(|(_, l)| l.len() != size) {
                return Err(Error::SizeMismatch(format!("lexicon for {g} has {} words, expected {size}", l.len())));
            }
            let cells: Vec<(u64, GrammarKind, Lexicon)> = lexicons.into_iter().map(|(g, l)| (seed, g, l)).collect();
            let reports = sweep_reports(&cells, &[size], &config.eval, &reference)?;
            let mut buf = Vec::new();
            write_metrics_csv(&mut buf, &reports)?;
            emit(out, &buf)
        }
        Command::CrossEval { lexicon } => {
            if lexicon.len() < 2 {
                return Err(Error::InvalidInput("cross-eval needs at least two lexicons".into()));
            }
            let lexicons = load_labelled(lexicon)?;
            let m = cross_grammar_matrix(&lexicons, &config.eval, seed)?;
            let mut buf = Vec::new();
            m.write_csv(&mut buf)?;
            emit(out, &buf)?;
            if let Some(p) = out {
                emit(Some(&p.with_extension("json")), &serde_json::to_vec_pretty(&m)?)?;
            }
            Ok(())
        }
        Command::Run => {
            let mut run = config.clone();
            run.master_seed = seed;
            if let Some(dir) = out {
                run.output_dir = dir.to_path_buf();
            }
            let result = run_pipeline(&run)?;
            let summary = json!({
                "output_dir": run.output_dir,
                "config_hash": result.manifest.config_hash,
                "files": result.manifest.outputs().count(),
                "elapsed_secs": result.elapsed_secs,
            });
            println!("{}", serde_json::to_string_pretty(&summary)?);
            Ok(())
        }
    }
}

/// Load lexicons and label each by the grammar recorded in its provenance.
fn load_labelled(paths: &[PathBuf]) -> Result<Vec<(GrammarKind, Lexicon)>> {
    let mut out: Vec<(GrammarKind, Lexicon)> = Vec::new();
    for p in paths {
        let lex = Lexicon::load(p)?;
        let Some(kind) = lex.provenance.as_ref().map(|pv| pv.grammar.kind) else {
            return Err(Error::InvalidInput(format!(
                "{} has no provenance block naming its grammar",
                p.display()
            )));
        };
        if out.iter().any(|(g, _)| *g == kind) {
            return Err(Error::InvalidInput(format!("two lexicons for grammar {kind}")));
        }
        out.push((kind, lex));
    }
    Ok(out)
}
