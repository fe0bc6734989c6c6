//! Command-line interface. Data goes to stdout (or files), diagnostics to
//! stderr. Exit codes: 0 success, 1 usage, 2 bad input data, 3 internal.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use hyret_core::corpus::{build_eval_corpus, find_near_duplicates, split_pairs, Corpus, RelevanceMode, SplitSpec};
use hyret_core::dense::MockEmbedder;
use hyret_core::eval::evaluate_run;
use hyret_core::hybrid::{fuse, FusionMethod};
use hyret_core::lexical::build_index;
use hyret_core::stats::compare_reports;
use hyret_core::synth::{generate_synthetic_dataset, SyntheticSpec};
use hyret_core::text::{normalize, NormalizationConfig};
use serde_json::json;

use crate::engine::{SearchEngine, SearchMode};
use crate::error::{Error, Result};
use crate::formats;
use crate::pipeline::{run_experiment, ExperimentConfig};
use crate::provider::{EmbeddingProviderSpec, ProviderKind};
use crate::service;

#[derive(Debug, Parser)]
#[command(name = "hyret", version, about = "Hybrid BM25 + dense retrieval and IR evaluation")]
pub struct Cli {
    /// Experiment configuration (JSON) supplying defaults.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Print machine-readable JSON instead of tables.
    #[arg(long, global = true)]
    pub json: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Validate and canonicalize corpus, queries, qrels and pairs files.
    Ingest(IngestArgs),
    /// Build and save a BM25 index.
    Index(IndexArgs),
    /// Validate a vector file.
    EmbedImport(EmbedImportArgs),
    /// Top-k search over an index and/or vector store.
    Search(SearchArgs),
    /// Score a TREC run against qrels.
    Eval(EvalArgs),
    /// Fuse a lexical and a dense run.
    Fuse(FuseArgs),
    /// Significance of every report against a baseline report.
    Compare(CompareArgs),
    /// Generate a synthetic evaluation set.
    Synth(SynthArgs),
    /// Run the full experiment described by --config.
    Experiment(ExperimentArgs),
    /// Serve GET /search and GET /healthz.
    Serve(ServeArgs),
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    /// Distractor corpus merged into --corpus with ids prefixed `dx-`.
    #[arg(long, requires = "corpus")]
    pub distractors: Option<PathBuf>,
    #[arg(long)]
    pub queries: Option<PathBuf>,
    #[arg(long)]
    pub qrels: Option<PathBuf>,
    #[arg(long)]
    pub pairs: Option<PathBuf>,
    /// Rewrite texts in normalized form.
    #[arg(long)]
    pub normalize: bool,
    /// Report near-duplicate query texts at this cosine threshold.
    #[arg(long)]
    pub dedup: Option<f64>,
    /// Mock-embedder dimension used for --dedup.
    #[arg(long, default_value_t = 256)]
    pub dedup_dim: usize,
    /// Split pairs into train/val/test with these fractions.
    #[arg(long, value_delimiter = ',', num_args = 1)]
    pub split: Option<Vec<f64>>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct IndexArgs {
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub k1: Option<f64>,
    #[arg(long)]
    pub b: Option<f64>,
}

#[derive(Debug, Args)]
pub struct EmbedImportArgs {
    #[arg(long)]
    pub vectors: PathBuf,
    /// Expected dimension.
    #[arg(long)]
    pub dim: Option<usize>,
    /// Every vector id must name a document of this corpus.
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    /// Write the validated store in canonical form.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ModeArg {
    Bm25,
    Dense,
    Hybrid,
}

impl From<ModeArg> for SearchMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Bm25 => SearchMode::Bm25,
            ModeArg::Dense => SearchMode::Dense,
            ModeArg::Hybrid => SearchMode::Hybrid,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct SourceArgs {
    /// Saved BM25 index.
    #[arg(long)]
    pub index: Option<PathBuf>,
    /// Corpus file; indexed on the fly when --index is absent.
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    /// Document vector file for dense and hybrid modes.
    #[arg(long)]
    pub vectors: Option<PathBuf>,
    /// Synonym table folded into the mock query embedder.
    #[arg(long)]
    pub synonyms: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SearchArgs {
    #[command(flatten)]
    pub source: SourceArgs,
    #[arg(long, short)]
    pub query: String,
    #[arg(short, long, default_value_t = 10, value_parser = clap::value_parser!(u32).range(1..))]
    pub k: u32,
    #[arg(long, value_enum, default_value_t = ModeArg::Bm25)]
    pub mode: ModeArg,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub run: PathBuf,
    #[arg(long)]
    pub qrels: PathBuf,
    /// Comma-separated cutoffs, e.g. `5,10`.
    #[arg(short, long, value_delimiter = ',', value_parser = clap::value_parser!(u32).range(1..))]
    pub k: Vec<u32>,
    /// Write the JSON report here.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum MethodArg {
    WeightedMinmax,
    Rrf,
}

#[derive(Debug, Args)]
pub struct FuseArgs {
    #[arg(long)]
    pub lexical: PathBuf,
    #[arg(long)]
    pub dense: PathBuf,
    #[arg(long, value_enum)]
    pub method: Option<MethodArg>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub rrf_k: Option<u32>,
    #[arg(long)]
    pub depth: Option<usize>,
    #[arg(long, default_value = "hybrid")]
    pub tag: String,
    /// Write the fused run here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    /// Metric reports (JSON), one of which carries the baseline tag.
    #[arg(required = true, num_args = 2..)]
    pub reports: Vec<PathBuf>,
    #[arg(long)]
    pub baseline: Option<String>,
    /// Write the JSON table here.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 82)]
    pub queries: usize,
    #[arg(long, default_value_t = 10)]
    pub relevant: usize,
    #[arg(long, default_value_t = 2000)]
    pub distractors: usize,
    #[arg(long, default_value_t = 5000)]
    pub vocabulary: usize,
    #[arg(long, default_value_t = 0.2)]
    pub noise: f64,
}

#[derive(Debug, Args)]
pub struct ExperimentArgs {
    /// Overrides `output_dir` from the configuration.
    #[arg(long)]
    pub output_dir: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[command(flatten)]
    pub source: SourceArgs,
    #[arg(long, default_value = "127.0.0.1:8080")]
    pub addr: String,
}

/// Parse `args` and run. Returns the process exit code.
pub fn main_with<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{e}");
                    0
                }
                _ => {
                    let _ = write!(err, "{e}");
                    1
                }
            };
        }
    };
    match run(&cli, out, err) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}

fn io_out(e: std::io::Error) -> Error {
    Error::Internal(format!("writing output: {e}"))
}

struct Ctx {
    config: ExperimentConfig,
    base: Option<PathBuf>,
    explicit_config: bool,
}

impl Ctx {
    fn new(cli: &Cli) -> Result<Self> {
        let (mut config, base, explicit_config) = match &cli.config {
            Some(path) => (
                ExperimentConfig::load(path)?,
                path.parent().map(Path::to_path_buf),
                true,
            ),
            None => (ExperimentConfig::default(), None, false),
        };
        if let Some(seed) = cli.seed {
            config.seed = seed;
        }
        Ok(Self { config, base, explicit_config })
    }
}

pub fn run(cli: &Cli, out: &mut dyn Write, err: &mut dyn Write) -> Result<()> {
    let ctx = Ctx::new(cli)?;
    match &cli.command {
        Command::Ingest(a) => ingest(&ctx, cli.json, a, out, err),
        Command::Index(a) => index(&ctx, cli.json, a, out),
        Command::EmbedImport(a) => embed_import(cli.json, a, out),
        Command::Search(a) => search(&ctx, cli.json, a, out),
        Command::Eval(a) => eval(&ctx, cli.json, a, out, err),
        Command::Fuse(a) => fuse_cmd(&ctx, a, out),
        Command::Compare(a) => compare(&ctx, cli.json, a, out),
        Command::Synth(a) => synth(&ctx, cli.json, a, out),
        Command::Experiment(a) => experiment(&ctx, cli.json, a, out),
        Command::Serve(a) => {
            let engine = load_engine(&ctx, &a.source)?;
            service::serve(engine, &a.addr)
        }
    }
}

fn load_nonempty_corpus(path: &Path) -> Result<Corpus> {
    let corpus = formats::load_corpus(path)?;
    if corpus.is_empty() {
        return Err(Error::data(path, hyret_core::Error::EmptyCorpus));
    }
    Ok(corpus)
}

fn ingest(ctx: &Ctx, json: bool, a: &IngestArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<()> {
    if a.corpus.is_none() && a.queries.is_none() && a.pairs.is_none() {
        return Err(Error::Usage("ingest needs at least one of --corpus, --queries, --pairs".into()));
    }
    let cfg = NormalizationConfig::default();
    let norm = |s: &str| if a.normalize { normalize(s, &cfg) } else { s.to_string() };
    let mut stats = serde_json::Map::new();

    let corpus = match &a.corpus {
        Some(path) => {
            let mut corpus = load_nonempty_corpus(path)?;
            if let Some(d) = &a.distractors {
                let distractors = formats::load_corpus(d)?;
                corpus = build_eval_corpus(&corpus, &distractors, Some(hyret_core::corpus::DISTRACTOR_PREFIX))
                    .map_err(|e| Error::data(d, e))?;
            }
            let mut docs = Vec::with_capacity(corpus.len());
            for doc in corpus.documents() {
                let mut doc = doc.clone();
                doc.text = norm(&doc.text);
                doc.title = doc.title.as_deref().map(norm);
                docs.push(doc);
            }
            let corpus = Corpus::from_documents(docs)?;
            formats::write_corpus(&a.out.join("corpus.jsonl"), &corpus)?;
            stats.insert("documents".into(), json!(corpus.len()));
            Some(corpus)
        }
        None => None,
    };

    let queries = match &a.queries {
        Some(path) => {
            let loaded = formats::load_queries(path)?;
            let queries = hyret_core::corpus::QuerySet::from_queries(
                loaded
                    .queries()
                    .iter()
                    .map(|q| hyret_core::corpus::Query::new(q.id.clone(), norm(&q.text))),
            )?;
            formats::write_queries(&a.out.join("queries.jsonl"), &queries)?;
            stats.insert("queries".into(), json!(queries.len()));
            Some(queries)
        }
        None => None,
    };

    if let Some(path) = &a.qrels {
        let load = formats::load_qrels(path, corpus.as_ref(), queries.as_ref(), RelevanceMode::Binary)?;
        if load.dropped_zero > 0 {
            let _ = writeln!(err, "warning: dropped {} qrels rows with grade 0", load.dropped_zero);
        }
        formats::write_qrels(&a.out.join("qrels.tsv"), &load.qrels)?;
        stats.insert("judged_queries".into(), json!(load.qrels.num_queries()));
        stats.insert("judgments".into(), json!(load.qrels.num_judgments()));
        stats.insert("avg_relevant_per_query".into(), json!(load.qrels.avg_relevant_per_query()));
    }

    let pairs = match &a.pairs {
        Some(path) => {
            let pairs: Vec<_> = formats::load_pairs(path)?
                .into_iter()
                .map(|p| hyret_core::corpus::QaPair::new(norm(&p.query), norm(&p.positive)))
                .collect::<hyret_core::Result<_>>()?;
            formats::write_pairs(&a.out.join("pairs.jsonl"), &pairs)?;
            stats.insert("pairs".into(), json!(pairs.len()));
            if let Some(f) = &a.split {
                if f.len() != 3 {
                    return Err(Error::Usage("--split takes three fractions: train,val,test".into()));
                }
                let spec = SplitSpec { train: f[0], val: f[1], test: f[2], seed: ctx.config.seed };
                let (train, val, test) = split_pairs(&pairs, &spec)?;
                formats::write_pairs(&a.out.join("train.jsonl"), &train)?;
                formats::write_pairs(&a.out.join("val.jsonl"), &val)?;
                formats::write_pairs(&a.out.join("test.jsonl"), &test)?;
                stats.insert("split".into(), json!([train.len(), val.len(), test.len()]));
            }
            Some(pairs)
        }
        None => {
            if a.split.is_some() {
                return Err(Error::Usage("--split needs --pairs".into()));
            }
            None
        }
    };

    if let Some(threshold) = a.dedup {
        let texts: Vec<String> = match (&pairs, &queries) {
            (Some(p), _) => p.iter().map(|p| p.query.clone()).collect(),
            (None, Some(q)) => q.queries().iter().map(|q| q.text.clone()).collect(),
            (None, None) => return Err(Error::Usage("--dedup needs --pairs or --queries".into())),
        };
        let refs: Vec<&str> = texts.iter().map(String::as_str).collect();
        let embedder = MockEmbedder::new(a.dedup_dim)?;
        let dups = find_near_duplicates(&refs, &embedder, threshold)?;
        let mut report = String::new();
        for d in &dups {
            report.push_str(&serde_json::to_string(&json!({
                "first": d.first,
                "second": d.second,
                "similarity": d.similarity,
                "first_text": texts[d.first],
                "second_text": texts[d.second],
            })).expect("json"));
            report.push('\n');
        }
        formats::write_text(&a.out.join("duplicates.jsonl"), &report)?;
        stats.insert("near_duplicates".into(), json!(dups.len()));
    }

    if json {
        writeln!(out, "{}", serde_json::Value::Object(stats)).map_err(io_out)?;
    } else {
        for (k, v) in stats {
            writeln!(out, "{k}\t{v}").map_err(io_out)?;
        }
    }
    Ok(())
}

fn index(ctx: &Ctx, json: bool, a: &IndexArgs, out: &mut dyn Write) -> Result<()> {
    let corpus = load_nonempty_corpus(&a.corpus)?;
    let mut params = ctx.config.bm25;
    if let Some(k1) = a.k1 {
        params.k1 = k1;
    }
    if let Some(b) = a.b {
        params.b = b;
    }
    let index = build_index(&corpus, params)?;
    formats::save_index(&a.out, &index)?;
    if json {
        let v = json!({
            "documents": index.num_docs(),
            "vocabulary": index.vocabulary_size(),
            "avgdl": index.avgdl(),
        });
        writeln!(out, "{v}").map_err(io_out)
    } else {
        writeln!(
            out,
            "documents\t{}\nvocabulary\t{}\navgdl\t{}",
            index.num_docs(),
            index.vocabulary_size(),
            index.avgdl()
        )
        .map_err(io_out)
    }
}

fn embed_import(json: bool, a: &EmbedImportArgs, out: &mut dyn Write) -> Result<()> {
    let (header, store) = formats::load_vectors(&a.vectors, a.dim)?;
    if let Some(path) = &a.corpus {
        let corpus = formats::load_corpus(path)?;
        if let Some(stray) = store.ids().iter().find(|id| !corpus.contains(id)) {
            return Err(Error::data(&a.vectors, hyret_core::Error::UnknownDocument(stray.clone())));
        }
    }
    if let Some(path) = &a.out {
        formats::write_vectors(path, &store, &header.model)?;
    }
    if json {
        writeln!(out, "{}", serde_json::to_string(&header).expect("json")).map_err(io_out)
    } else {
        writeln!(
            out,
            "vectors\t{}\ndim\t{}\nnormalized\t{}\nmodel\t{}",
            store.len(),
            header.dim,
            header.normalized,
            header.model
        )
        .map_err(io_out)
    }
}

/// Engine from explicit sources; the query embedder comes from the
/// configuration when one was given, else a mock matching the vector dim.
pub fn load_engine_from(
    config: &ExperimentConfig,
    base: Option<&Path>,
    explicit_provider: bool,
    source: &SourceArgs,
) -> Result<SearchEngine> {
    let mut engine = SearchEngine::new(config.fusion)?;
    if let Some(path) = &source.corpus {
        engine = engine.with_corpus(load_nonempty_corpus(path)?);
    }
    match (&source.index, &engine.corpus) {
        (Some(path), _) => engine = engine.with_index(formats::load_index(path)?),
        (None, Some(corpus)) => {
            let index = build_index(corpus, config.bm25)?;
            engine = engine.with_index(index);
        }
        (None, None) => {}
    }
    if let Some(path) = &source.vectors {
        let (header, store) = formats::load_vectors(path, None)?;
        let spec = if explicit_provider {
            config.provider.clone()
        } else {
            EmbeddingProviderSpec {
                kind: ProviderKind::Mock,
                dim: header.dim,
                ..EmbeddingProviderSpec::default()
            }
        };
        let mut embedder = spec.build(base)?;
        if let Some(syn) = &source.synonyms {
            if spec.kind != ProviderKind::Mock {
                return Err(Error::Usage("--synonyms applies to the mock provider only".into()));
            }
            let mock = MockEmbedder::new(spec.dim)?
                .with_prefixes(spec.query_prefix.clone(), spec.passage_prefix.clone())
                .with_canonical_map(formats::load_synonyms(syn)?);
            embedder = Some(Box::new(mock));
        }
        engine = engine.with_dense(store, embedder).map_err(|e| match e {
            Error::Core(c) => Error::data(path, c),
            other => other,
        })?;
    }
    if engine.index.is_none() && engine.vectors.is_none() {
        return Err(Error::Usage("give --index, --corpus or --vectors".into()));
    }
    Ok(engine)
}

fn load_engine(ctx: &Ctx, source: &SourceArgs) -> Result<SearchEngine> {
    load_engine_from(&ctx.config, ctx.base.as_deref(), ctx.explicit_config, source)
}

fn search(ctx: &Ctx, json: bool, a: &SearchArgs, out: &mut dyn Write) -> Result<()> {
    if hyret_core::text::analyze(&a.query).is_empty() {
        return Err(Error::Usage("query must contain at least one token".into()));
    }
    let engine = load_engine(ctx, &a.source)?;
    let mode = SearchMode::from(a.mode);
    let hits = engine.search(&a.query, a.k as usize, mode)?;
    if json {
        let rows: Vec<_> = hits
            .iter()
            .enumerate()
            .map(|(i, h)| json!({ "id": h.id, "score": h.score, "rank": i + 1 }))
            .collect();
        writeln!(out, "{}", json!({ "query": a.query, "mode": mode.as_str(), "results": rows })).map_err(io_out)
    } else {
        for h in hits {
            writeln!(out, "{}\t{}", h.id, h.score).map_err(io_out)?;
        }
        Ok(())
    }
}

fn eval(ctx: &Ctx, json: bool, a: &EvalArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<()> {
    let run = formats::load_run(&a.run)?;
    let load = formats::load_qrels(&a.qrels, None, None, RelevanceMode::Binary)?;
    if load.dropped_zero > 0 {
        let _ = writeln!(err, "warning: dropped {} qrels rows with grade 0", load.dropped_zero);
    }
    let ks: Vec<usize> = if a.k.is_empty() {
        ctx.config.k_values.clone()
    } else {
        a.k.iter().map(|&k| k as usize).collect()
    };
    let report = evaluate_run(&run, &load.qrels, &ks).map_err(|e| Error::data(&a.run, e))?;
    if let Some(path) = &a.out {
        formats::write_report(path, &report)?;
    }
    if json {
        write!(out, "{}", formats::report_to_string(&report)).map_err(io_out)
    } else {
        write!(out, "{}", formats::report_table(&report)).map_err(io_out)
    }
}

fn fuse_cmd(ctx: &Ctx, a: &FuseArgs, out: &mut dyn Write) -> Result<()> {
    let lexical = formats::load_run(&a.lexical)?;
    let dense = formats::load_run(&a.dense)?;
    let mut cfg = ctx.config.fusion;
    if let Some(m) = a.method {
        cfg.method = match m {
            MethodArg::WeightedMinmax => FusionMethod::WeightedMinmax,
            MethodArg::Rrf => FusionMethod::Rrf,
        };
    }
    if let Some(alpha) = a.alpha {
        cfg.alpha = alpha;
    }
    if let Some(k) = a.rrf_k {
        cfg.rrf_k = k;
    }
    if let Some(d) = a.depth {
        cfg.depth = d;
    }
    let fused = fuse(&lexical, &dense, &cfg, a.tag.clone())?;
    match &a.out {
        Some(path) => formats::write_run(path, &fused),
        None => write!(out, "{}", formats::run_to_string(&fused)).map_err(io_out),
    }
}

fn compare(ctx: &Ctx, json: bool, a: &CompareArgs, out: &mut dyn Write) -> Result<()> {
    let reports = a
        .reports
        .iter()
        .map(|p| formats::load_report(p))
        .collect::<Result<Vec<_>>>()?;
    let tag = a.baseline.clone().unwrap_or_else(|| ctx.config.baseline_tag.clone());
    let mut baseline = None;
    let mut candidates = Vec::new();
    for r in &reports {
        if r.tag == tag && baseline.is_none() {
            baseline = Some(r);
        } else {
            candidates.push(r);
        }
    }
    let baseline = baseline.ok_or_else(|| Error::Usage(format!("no report carries the baseline tag `{tag}`")))?;
    let table = compare_reports(baseline, &candidates, &ctx.config.wilcoxon)?;
    if let Some(path) = &a.out {
        formats::write_text(path, &formats::significance_to_string(&table))?;
    }
    let text = if json {
        formats::significance_to_string(&table)
    } else {
        formats::significance_text(&table)
    };
    write!(out, "{text}").map_err(io_out)
}

fn synth(ctx: &Ctx, json: bool, a: &SynthArgs, out: &mut dyn Write) -> Result<()> {
    let spec = SyntheticSpec {
        n_queries: a.queries,
        relevant_per_query: a.relevant,
        n_distractors: a.distractors,
        vocabulary_size: a.vocabulary,
        paraphrase_noise: a.noise,
    };
    let data = generate_synthetic_dataset(&spec, ctx.config.seed)?;
    formats::write_corpus(&a.out.join("corpus.jsonl"), &data.corpus)?;
    formats::write_queries(&a.out.join("queries.jsonl"), &data.queries)?;
    formats::write_qrels(&a.out.join("qrels.tsv"), &data.qrels)?;
    formats::write_text(&a.out.join("synonyms.json"), &formats::synonyms_to_string(&data.synonyms))?;
    let v = json!({
        "documents": data.corpus.len(),
        "queries": data.queries.len(),
        "judgments": data.qrels.num_judgments(),
        "seed": ctx.config.seed,
    });
    if json {
        writeln!(out, "{v}").map_err(io_out)
    } else {
        for (k, val) in v.as_object().expect("object") {
            writeln!(out, "{k}\t{val}").map_err(io_out)?;
        }
        Ok(())
    }
}

fn experiment(ctx: &Ctx, json: bool, a: &ExperimentArgs, out: &mut dyn Write) -> Result<()> {
    if !ctx.explicit_config {
        return Err(Error::Usage("experiment needs --config".into()));
    }
    let mut config = ctx.config.clone();
    if let Some(dir) = &a.output_dir {
        config.output_dir = dir.clone();
    }
    let outcome = run_experiment(&config, ctx.base.as_deref())?;
    if json {
        let aggregate: serde_json::Map<String, serde_json::Value> = outcome
            .reports
            .iter()
            .map(|r| (r.tag.clone(), json!(r.aggregate)))
            .collect();
        writeln!(out, "{}", json!({ "dir": outcome.dir, "aggregate": aggregate })).map_err(io_out)
    } else {
        writeln!(out, "{}", outcome.dir.display()).map_err(io_out)?;
        for r in &outcome.reports {
            write!(out, "\n{}", formats::report_table(r)).map_err(io_out)?;
        }
        write!(out, "\n{}", formats::significance_text(&outcome.significance)).map_err(io_out)
    }
}
