use std::collections::HashSet;
use std::fs::{self, File, OpenOptions};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use sensevec::bias::{self, DEFAULT_K};
use sensevec::deconf::{self, DeconfConfig};
use sensevec::eval::{self, DatasetFormat, EvalOptions, Resources, SenseInventory};
use sensevec::graph::GraphBundle;
use sensevec::ppr::{self, PprConfig};
use sensevec::vectors::{self, VectorFormat};
use sensevec::wordnet;
use sensevec::{Error, LookupPolicy, RelationFilter, Result, Strategy, SynsetId, VectorStore};

mod manifest;

use manifest::RunManifest;

#[derive(Parser)]
#[command(
    name = "sensevec",
    version,
    about = "Sense and synset vectors from word vectors and WordNet"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse WordNet data files into a graph file.
    BuildGraph(BuildGraphArgs),
    /// Compute sense-biasing word lists with Personalized PageRank.
    Bias(BiasArgs),
    /// Build sense and synset vectors from bias lists and word vectors.
    Train(TrainArgs),
    /// Nearest neighbors of a word or sense in the unified space.
    Nn(NnArgs),
    /// Score a word-similarity benchmark.
    Eval(EvalArgs),
}

#[derive(Args)]
struct BuildGraphArgs {
    /// Directory holding data.noun, data.verb, data.adj and data.adv.
    #[arg(long)]
    wordnet: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// `all`, `synset` (synset-level pointers only) or comma-separated symbols.
    #[arg(long, default_value = "all")]
    relations: RelationFilter,
}

#[derive(Args)]
struct ThreadArgs {
    /// Worker threads for batch stages; 0 uses every core.
    #[arg(long, default_value_t = 0)]
    threads: usize,
}

#[derive(Args)]
struct BiasArgs {
    #[arg(long)]
    graph: PathBuf,
    /// Target synset (`n#02084071` or `02084071-n`); may be repeated.
    #[arg(long, required_unless_present = "all", conflicts_with = "all")]
    synset: Vec<SynsetId>,
    /// Every synset in the graph.
    #[arg(long)]
    all: bool,
    #[arg(long, default_value_t = DEFAULT_K)]
    k: usize,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 0.85)]
    damping: f64,
    #[arg(long, default_value_t = 30)]
    max_iter: usize,
    #[arg(long, default_value_t = 1e-9)]
    tolerance: f64,
    #[command(flatten)]
    threads: ThreadArgs,
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long)]
    graph: PathBuf,
    #[arg(long)]
    bias: PathBuf,
    /// Word vectors, word2vec binary (`.bin`) or text.
    #[arg(long)]
    vectors: PathBuf,
    /// Override format detection: `binary` or `text`.
    #[arg(long)]
    vector_format: Option<VectorFormat>,
    #[arg(long)]
    out_senses: PathBuf,
    #[arg(long)]
    out_synsets: PathBuf,
    /// Per-sense coverage report (TSV).
    #[arg(long)]
    coverage: Option<PathBuf>,
    #[arg(long, default_value_t = 1.0)]
    alpha: f64,
    #[arg(long, default_value_t = 0.2)]
    lambda: f64,
    #[arg(long, default_value_t = DEFAULT_K)]
    k: usize,
    /// Disable the lowercase retry for out-of-vocabulary words.
    #[arg(long)]
    case_sensitive: bool,
    #[command(flatten)]
    threads: ThreadArgs,
}

#[derive(Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
enum Space {
    Words,
    Senses,
    Both,
}

#[derive(Args)]
struct NnArgs {
    #[arg(long)]
    senses: PathBuf,
    #[arg(long)]
    vectors: PathBuf,
    #[arg(long)]
    vector_format: Option<VectorFormat>,
    /// Sense key (`lemma#pos#offset`) or word.
    #[arg(long)]
    query: String,
    #[arg(long, default_value_t = 10)]
    top: usize,
    #[arg(long, value_enum, default_value_t = Space::Both)]
    space: Space,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    senses: PathBuf,
    #[arg(long)]
    vectors: PathBuf,
    #[arg(long)]
    vector_format: Option<VectorFormat>,
    /// Graph file; needed for antonym adjustment and fingerprint checks.
    #[arg(long)]
    graph: Option<PathBuf>,
    #[arg(long)]
    dataset: PathBuf,
    /// rg65, yp130, men, simlex, scws, clss or pairs.
    #[arg(long)]
    format: DatasetFormat,
    /// MaxSim, AvgSim, AvgSimC, S2W or S2A.
    #[arg(long, default_value = "MaxSim")]
    strategy: Strategy,
    /// Divide scores of antonym-linked pairs by five.
    #[arg(long)]
    antonym_adjust: bool,
    /// Append the machine-readable result line to this file.
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    threads: ThreadArgs,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::BuildGraph(a) => build_graph(a),
        Command::Bias(a) => run_bias(a),
        Command::Train(a) => train(a),
        Command::Nn(a) => nn(a),
        Command::Eval(a) => run_eval(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path)?))
}

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| match e.kind() {
            std::io::ErrorKind::NotFound => Error::MissingFile(path.to_path_buf()),
            _ => e.into(),
        })
}

fn load_vectors(path: &Path, format: Option<VectorFormat>) -> Result<VectorStore> {
    if !path.exists() {
        return Err(Error::MissingFile(path.to_path_buf()));
    }
    VectorStore::load(path, format.unwrap_or_else(|| VectorFormat::guess(path)))
}

fn build_graph(a: BuildGraphArgs) -> Result<()> {
    let mut m = RunManifest::new("build-graph", "");
    let (wn, stats) = m.time("parse", || wordnet::parse_wordnet(&a.wordnet))?;
    let bundle = m.time("graph", || GraphBundle::new(wn, a.relations.clone()));
    m.time("write", || bundle.save(&a.out))?;
    let isolated = bundle.graph.ids().len()
        - (0..bundle.graph.node_count())
            .filter(|&i| !bundle.graph.is_isolated(i))
            .count();
    eprintln!(
        "{} synsets, {} pointers ({} self-loops dropped), {} edges, {} isolated",
        stats.synsets,
        stats.pointers,
        stats.self_loops,
        bundle.graph.edge_count(),
        isolated
    );
    m.graph_fingerprint = bundle.fingerprint.clone();
    m.set("wordnet", a.wordnet.display().to_string());
    m.set("relations", a.relations.to_string());
    m.set("synsets", stats.synsets);
    m.set("edges", bundle.graph.edge_count());
    m.set("isolated", isolated);
    m.write_for(&[&a.out])
}

fn run_bias(a: BiasArgs) -> Result<()> {
    let config = PprConfig {
        damping: a.damping,
        max_iterations: a.max_iter,
        tolerance: a.tolerance,
    };
    config.validate()?;
    if a.k == 0 {
        return Err(Error::InvalidParameter("--k must be at least 1".into()));
    }
    let mut m = RunManifest::new("bias", "");
    let bundle = m.time("load", || GraphBundle::load(&a.graph))?;
    m.graph_fingerprint = bundle.fingerprint.clone();
    let transition = ppr::build_transition(&bundle.graph)?;

    let lists = if a.all {
        let done = m.time("ppr", || {
            bias::materialize_all(
                &bundle.wordnet,
                &transition,
                &config,
                a.k,
                a.threads.threads,
            )
        })?;
        if !done.failures.is_empty() {
            eprintln!(
                "{} synsets without a bias list (isolated)",
                done.failures.len()
            );
            m.notes
                .extend(done.failures.iter().map(|(id, msg)| format!("{id}: {msg}")));
        }
        done.lists
    } else {
        // Explicit targets fail loudly, one at a time.
        m.time("ppr", || {
            a.synset
                .iter()
                .map(|&id| {
                    bundle.wordnet.get(id)?;
                    let p = ppr::personalized_pagerank(&transition, id, &config)?;
                    bias::extract_bias_list(&bundle.wordnet, &bundle.graph, &p, a.k)
                })
                .collect::<Result<Vec<_>>>()
        })?
    };
    m.time("write", || bias::write_bias_lists(&lists, create(&a.out)?))?;
    m.set("damping", config.damping);
    m.set("max_iterations", config.max_iterations);
    m.set("tolerance", config.tolerance);
    m.set("k", a.k);
    m.set(
        "targets",
        if a.all {
            "all".to_string()
        } else {
            format!("{} explicit", a.synset.len())
        },
    );
    m.set("lists", lists.len());
    m.write_for(&[&a.out])
}

fn train(a: TrainArgs) -> Result<()> {
    let config = DeconfConfig {
        alpha: a.alpha,
        lambda: a.lambda,
        k: a.k,
    };
    config.validate()?;
    let policy = LookupPolicy {
        case_fallback: !a.case_sensitive,
        ..LookupPolicy::default()
    };
    let mut m = RunManifest::new("train", "");
    let bundle = m.time("load_graph", || GraphBundle::load(&a.graph))?;
    m.graph_fingerprint = bundle.fingerprint.clone();
    RunManifest::read_for(&a.bias)?.require_fingerprint(&a.bias, &bundle.fingerprint)?;
    let label = a.bias.display().to_string();
    let lists = m.time("load_bias", || {
        bias::read_bias_lists(open(&a.bias)?, &label)
    })?;
    let store = m.time("load_vectors", || load_vectors(&a.vectors, a.vector_format))?;
    let trained = m.time("deconflate", || {
        deconf::train_all(
            &bundle.wordnet,
            &lists,
            &store,
            &policy,
            &config,
            a.threads.threads,
        )
    })?;
    m.time("write", || -> Result<()> {
        trained.space.write_senses(create(&a.out_senses)?)?;
        trained.space.write_synsets(create(&a.out_synsets)?)?;
        if let Some(path) = &a.coverage {
            trained.coverage.write_tsv(create(path)?)?;
        }
        Ok(())
    })?;
    let c = &trained.coverage;
    eprintln!(
        "{}/{} senses ({:.2}%), {}/{} synsets",
        c.computed_senses,
        c.total_senses,
        100.0 * c.sense_coverage(),
        c.computed_synsets,
        c.total_synsets
    );
    m.set("alpha", config.alpha);
    m.set("lambda", config.lambda);
    m.set("k", config.k);
    m.set("multiword_joiner", policy.multiword_joiner.to_string());
    m.set("case_fallback", policy.case_fallback);
    m.set("vectors", a.vectors.display().to_string());
    m.set("word_vectors", store.len());
    m.set("duplicate_words_ignored", store.duplicates());
    m.set("senses_computed", c.computed_senses);
    m.set("senses_total", c.total_senses);
    m.set("synsets_computed", c.computed_synsets);
    m.set("synsets_total", c.total_synsets);
    let mut outputs: Vec<&Path> = vec![&a.out_senses, &a.out_synsets];
    if let Some(p) = &a.coverage {
        outputs.push(p);
    }
    m.write_for(&outputs)
}

fn nn(a: NnArgs) -> Result<()> {
    let senses = load_vectors(&a.senses, Some(VectorFormat::Text))?;
    let words = load_vectors(&a.vectors, a.vector_format)?;
    if senses.dim() != words.dim() {
        return Err(Error::DimensionMismatch {
            expected: words.dim(),
            found: senses.dim(),
        });
    }
    let query = senses
        .get(&a.query)
        .or_else(|| words.lookup(&a.query, &LookupPolicy::default()))
        .ok_or_else(|| {
            Error::Uncomputable(format!(
                "{:?} is neither a sense key nor a known word",
                a.query
            ))
        })?;
    let query = vectors::to_f64(query);
    let stores: Vec<&VectorStore> = match a.space {
        Space::Words => vec![&words],
        Space::Senses => vec![&senses],
        Space::Both => vec![&words, &senses],
    };
    let exclude: HashSet<String> = [a.query.clone()].into();
    let hits = vectors::nearest(&stores, &query, a.top, &exclude)?;
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    for (i, (key, cos)) in hits.iter().enumerate() {
        writeln!(out, "{}\t{}\t{:.4}", i + 1, key, cos)?;
    }
    Ok(())
}

fn run_eval(a: EvalArgs) -> Result<()> {
    let bundle = a.graph.as_deref().map(GraphBundle::load).transpose()?;
    if let Some(b) = &bundle {
        match RunManifest::read_for(&a.senses) {
            Ok(m) => m.require_fingerprint(&a.senses, &b.fingerprint)?,
            Err(Error::Integrity(msg)) => eprintln!("warning: {msg}"),
            Err(e) => return Err(e),
        }
    }
    if a.antonym_adjust && bundle.is_none() {
        return Err(Error::InvalidParameter(
            "--antonym-adjust needs --graph".into(),
        ));
    }
    let inventory =
        SenseInventory::from_store(&load_vectors(&a.senses, Some(VectorFormat::Text))?)?;
    let words = load_vectors(&a.vectors, a.vector_format)?;
    let label = a.dataset.display().to_string();
    let pairs = eval::parse_dataset(open(&a.dataset)?, a.format, &label)?;
    let res = Resources {
        senses: &inventory,
        words: &words,
        wordnet: bundle.as_ref().map(|b| &b.wordnet),
        policy: LookupPolicy::default(),
    };
    let name = a
        .dataset
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| label.clone());
    let options = EvalOptions {
        antonym_adjust: a.antonym_adjust,
        threads: a.threads.threads,
    };
    let report = eval::run_benchmark(&name, &pairs, a.format, a.strategy, &res, &options)?;
    print!("{report}");
    println!("{}", report.machine_line());
    if let Some(path) = &a.out {
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            fs::create_dir_all(dir)?;
        }
        let mut f = OpenOptions::new().create(true).append(true).open(path)?;
        writeln!(f, "{}", report.machine_line())?;
    }
    Ok(())
}
