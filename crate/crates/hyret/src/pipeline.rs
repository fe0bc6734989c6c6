//! End-to-end experiments: load, index, embed, retrieve with every system,
//! evaluate and test significance against a baseline.
//!
//! Run directory layout:
//!
//! ```text
//! <output_dir>/exp-NNNN/
//!     config.json          resolved configuration snapshot
//!     runs/{bm25,dense,hybrid}.trec
//!     reports/{bm25,dense,hybrid}.json
//!     significance.json
//!     significance.txt
//!     summary.txt
//!     INCOMPLETE           present until every artifact is written
//! ```

use std::fs;
use std::path::{Path, PathBuf};

use hyret_core::corpus::{Corpus, QrelSet, QuerySet, RelevanceMode};
use hyret_core::dense::{TextKind, VectorStore};
use hyret_core::eval::{evaluate_run, MetricReport, Run};
use hyret_core::hybrid::{fuse_rankings, FusionConfig};
use hyret_core::lexical::{build_index, Bm25Params};
use hyret_core::stats::{compare_reports, SignificanceTable, WilcoxonConfig};
use hyret_core::synth::{generate_synthetic_dataset, SyntheticSpec};
use hyret_core::text::analyze;
use serde::{Deserialize, Serialize};

use crate::engine::{SearchEngine, SearchMode};
use crate::error::{Error, Result, WithStage};
use crate::formats;
use crate::provider::{embed_into_store, resolve, EmbeddingProviderSpec, ProviderKind};

pub const INCOMPLETE_MARKER: &str = "INCOMPLETE";

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentPaths {
    pub corpus: Option<PathBuf>,
    pub queries: Option<PathBuf>,
    pub qrels: Option<PathBuf>,
    /// Document vectors; embedded with the provider when absent.
    pub vectors: Option<PathBuf>,
    /// Query vectors keyed by query id; required for file providers.
    pub query_vectors: Option<PathBuf>,
}

/// Generate the dataset instead of reading files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticSource {
    #[serde(default)]
    pub spec: SyntheticSpec,
    /// Fold the generated synonym table into the mock embedder.
    #[serde(default)]
    pub fold_synonyms: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub paths: ExperimentPaths,
    pub synthetic: Option<SyntheticSource>,
    pub bm25: Bm25Params,
    pub fusion: FusionConfig,
    pub k_values: Vec<usize>,
    pub provider: EmbeddingProviderSpec,
    pub baseline_tag: String,
    pub seed: u64,
    pub output_dir: PathBuf,
    /// Ranking depth written to each run file.
    pub run_depth: usize,
    pub wilcoxon: WilcoxonConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            paths: ExperimentPaths::default(),
            synthetic: None,
            bm25: Bm25Params::default(),
            fusion: FusionConfig::default(),
            k_values: vec![1, 3, 5, 10],
            provider: EmbeddingProviderSpec::default(),
            baseline_tag: "bm25".into(),
            seed: 42,
            output_dir: PathBuf::from("experiments"),
            run_depth: 100,
            wilcoxon: WilcoxonConfig::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        serde_json::from_str(&formats::read_text(path)?).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("config serializes");
        s.push('\n');
        s
    }

    pub fn validate(&self) -> Result<()> {
        if self.k_values.is_empty() || self.k_values.contains(&0) {
            return Err(Error::Config("k_values must be non-empty and positive".into()));
        }
        if self.run_depth == 0 {
            return Err(Error::Config("run_depth must be positive".into()));
        }
        if !SearchMode::ALL.iter().any(|m| m.as_str() == self.baseline_tag) {
            return Err(Error::Config(format!(
                "baseline_tag `{}` names no system (bm25, dense, hybrid)",
                self.baseline_tag
            )));
        }
        self.bm25.validate()?;
        self.fusion.validate()?;
        self.provider.validate()?;
        match &self.synthetic {
            Some(s) => {
                s.spec.validate()?;
                if s.fold_synonyms && self.provider.kind != ProviderKind::Mock {
                    return Err(Error::Config("fold_synonyms needs the mock provider".into()));
                }
            }
            None => {
                let p = &self.paths;
                if p.corpus.is_none() || p.queries.is_none() || p.qrels.is_none() {
                    return Err(Error::Config(
                        "paths.corpus, paths.queries and paths.qrels are required without a synthetic source".into(),
                    ));
                }
            }
        }
        if self.provider.kind == ProviderKind::File
            && (self.paths.vectors.is_none() || self.paths.query_vectors.is_none())
        {
            return Err(Error::Config(
                "file provider needs paths.vectors and paths.query_vectors".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentOutcome {
    pub dir: PathBuf,
    pub runs: Vec<Run>,
    pub reports: Vec<MetricReport>,
    pub significance: SignificanceTable,
}

struct Dataset {
    corpus: Corpus,
    queries: QuerySet,
    qrels: QrelSet,
}

/// Claim the next free `exp-NNNN` directory. Existing directories are never
/// reused.
pub fn claim_run_dir(output_dir: &Path) -> Result<PathBuf> {
    fs::create_dir_all(output_dir).map_err(|e| Error::io(output_dir, e))?;
    for n in 1..=9999 {
        let dir = output_dir.join(format!("exp-{n:04}"));
        match fs::create_dir(&dir) {
            Ok(()) => return Ok(dir),
            Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => continue,
            Err(e) => return Err(Error::io(&dir, e)),
        }
    }
    Err(Error::Internal(format!("{} holds 9999 runs", output_dir.display())))
}

/// Run the experiment. Relative paths resolve against `base`.
pub fn run_experiment(config: &ExperimentConfig, base: Option<&Path>) -> Result<ExperimentOutcome> {
    config.validate()?;
    let output_dir = resolve(base, &config.output_dir);
    let dir = claim_run_dir(&output_dir)?;
    let marker = dir.join(INCOMPLETE_MARKER);
    formats::write_text(&marker, "running\n")?;
    match run_stages(config, base, &dir) {
        Ok(outcome) => {
            fs::remove_file(&marker).map_err(|e| Error::io(&marker, e))?;
            Ok(outcome)
        }
        Err(e) => {
            let _ = formats::write_text(&marker, &format!("failed: {e}\n"));
            Err(e)
        }
    }
}

fn load_dataset(config: &ExperimentConfig, base: Option<&Path>, dir: &Path) -> Result<(Dataset, Option<SyntheticExtras>)> {
    if let Some(source) = &config.synthetic {
        let data = generate_synthetic_dataset(&source.spec, config.seed)?;
        let data_dir = dir.join("data");
        formats::write_corpus(&data_dir.join("corpus.jsonl"), &data.corpus)?;
        formats::write_queries(&data_dir.join("queries.jsonl"), &data.queries)?;
        formats::write_qrels(&data_dir.join("qrels.tsv"), &data.qrels)?;
        formats::write_text(&data_dir.join("synonyms.json"), &formats::synonyms_to_string(&data.synonyms))?;
        let extras = source.fold_synonyms.then(|| SyntheticExtras { synonyms: data.synonyms.clone() });
        return Ok((
            Dataset { corpus: data.corpus, queries: data.queries, qrels: data.qrels },
            extras,
        ));
    }
    let p = &config.paths;
    let path = |x: &Option<PathBuf>| resolve(base, x.as_deref().expect("validated"));
    let corpus = formats::load_corpus(&path(&p.corpus))?;
    if corpus.is_empty() {
        return Err(Error::data(&path(&p.corpus), hyret_core::Error::EmptyCorpus));
    }
    let queries = formats::load_queries(&path(&p.queries))?;
    let load = formats::load_qrels(&path(&p.qrels), Some(&corpus), Some(&queries), RelevanceMode::Binary)?;
    if load.dropped_zero > 0 {
        eprintln!("warning: dropped {} qrels rows with grade 0", load.dropped_zero);
    }
    Ok((Dataset { corpus, queries, qrels: load.qrels }, None))
}

struct SyntheticExtras {
    synonyms: std::collections::BTreeMap<String, String>,
}

fn build_engine(
    config: &ExperimentConfig,
    base: Option<&Path>,
    data: &Dataset,
    extras: Option<SyntheticExtras>,
) -> Result<(SearchEngine, Option<VectorStore>)> {
    let index = build_index(&data.corpus, config.bm25).stage("index")?;
    let mut embedder = config.provider.build(base).stage("provider")?;
    if let Some(extras) = extras {
        let mock = hyret_core::dense::MockEmbedder::new(config.provider.dim)?
            .with_prefixes(config.provider.query_prefix.clone(), config.provider.passage_prefix.clone())
            .with_canonical_map(extras.synonyms);
        embedder = Some(Box::new(mock));
    }
    let vectors = match &config.paths.vectors {
        Some(v) => {
            let (_, store) = formats::load_vectors(&resolve(base, v), Some(config.provider.dim)).stage("vectors")?;
            if let Some(stray) = store.ids().iter().find(|id| !data.corpus.contains(id)) {
                return Err(Error::stage("vectors", hyret_core::Error::UnknownDocument(stray.clone()).into()));
            }
            store
        }
        None => {
            let e = embedder.as_deref().expect("non-file providers build an embedder");
            let texts: Vec<(String, String)> = data
                .corpus
                .documents()
                .iter()
                .filter(|d| !analyze(&d.full_text()).is_empty())
                .map(|d| (d.id.clone(), d.full_text()))
                .collect();
            let items: Vec<(&str, &str)> = texts.iter().map(|(i, t)| (i.as_str(), t.as_str())).collect();
            embed_into_store(e, &items, TextKind::Passage).stage("embed passages")?
        }
    };
    let query_vectors = match &config.paths.query_vectors {
        Some(p) => Some(formats::load_vectors(&resolve(base, p), Some(config.provider.dim)).stage("query vectors")?.1),
        None => None,
    };
    let engine = SearchEngine::new(config.fusion)?
        .with_index(index)
        .with_dense(vectors, embedder)
        .stage("vectors")?;
    Ok((engine, query_vectors))
}

fn run_stages(config: &ExperimentConfig, base: Option<&Path>, dir: &Path) -> Result<ExperimentOutcome> {
    formats::write_text(&dir.join("config.json"), &config.to_json())?;
    let (data, extras) = load_dataset(config, base, dir).stage("load")?;
    let (engine, query_vectors) = build_engine(config, base, &data, extras)?;

    let depth = config.run_depth;
    let mut runs: Vec<Run> = SearchMode::ALL.iter().map(|m| Run::new(m.as_str())).collect();
    let queries: Vec<_> = data.queries.queries().iter().collect();

    // Queries without tokens get empty rankings from every system.
    let searchable: Vec<_> = queries.iter().filter(|q| !analyze(&q.text).is_empty()).collect();
    let vectors: Vec<Vec<f32>> = match &query_vectors {
        Some(store) => searchable
            .iter()
            .map(|q| {
                store
                    .get(&q.id)
                    .map(<[f32]>::to_vec)
                    .ok_or_else(|| Error::stage("query vectors", hyret_core::Error::UnknownQuery(q.id.clone()).into()))
            })
            .collect::<Result<_>>()?,
        None => {
            let e = engine.embedder.as_deref().expect("checked by config validation");
            let texts: Vec<&str> = searchable.iter().map(|q| q.text.as_str()).collect();
            e.embed(&texts, TextKind::Query)
                .stage("embed queries")?
                .into_iter()
                .map(|v| v.into_vec())
                .collect()
        }
    };
    for q in &queries {
        if analyze(&q.text).is_empty() {
            for run in &mut runs {
                run.insert(q.id.clone(), Vec::new()).stage("retrieve")?;
            }
        }
    }
    for (q, v) in searchable.iter().zip(&vectors) {
        let fusion_depth = config.fusion.depth;
        let lex_wide = engine.lexical(&q.text, depth.max(fusion_depth)).stage("retrieve")?;
        let den_wide = engine.dense(v, depth.max(fusion_depth)).stage("retrieve")?;
        let lex: Vec<_> = lex_wide.iter().take(depth).cloned().collect();
        let den: Vec<_> = den_wide.iter().take(depth).cloned().collect();
        let mut hyb = fuse_rankings(&lex_wide, &den_wide, &config.fusion);
        hyb.truncate(depth);
        for (run, ranking) in runs.iter_mut().zip([lex, den, hyb]) {
            run.insert(q.id.clone(), ranking).stage("retrieve")?;
        }
    }

    let mut reports = Vec::new();
    let mut summary = String::new();
    for run in &runs {
        formats::write_run(&dir.join("runs").join(format!("{}.trec", run.tag)), run)?;
        let report = evaluate_run(run, &data.qrels, &config.k_values).stage("evaluate")?;
        formats::write_report(&dir.join("reports").join(format!("{}.json", run.tag)), &report)?;
        summary.push_str(&formats::report_table(&report));
        summary.push('\n');
        reports.push(report);
    }
    formats::write_text(&dir.join("summary.txt"), &summary)?;

    let baseline = reports
        .iter()
        .find(|r| r.tag == config.baseline_tag)
        .ok_or_else(|| Error::Config(format!("baseline `{}` missing", config.baseline_tag)))?;
    let candidates: Vec<&MetricReport> = reports.iter().filter(|r| r.tag != config.baseline_tag).collect();
    let significance = compare_reports(baseline, &candidates, &config.wilcoxon).stage("significance")?;
    formats::write_text(&dir.join("significance.json"), &formats::significance_to_string(&significance))?;
    formats::write_text(&dir.join("significance.txt"), &formats::significance_text(&significance))?;

    Ok(ExperimentOutcome { dir: dir.to_path_buf(), runs, reports, significance })
}
