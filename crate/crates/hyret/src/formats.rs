//! On-disk formats: JSONL corpora/queries/pairs, TSV qrels, vector files,
//! TREC runs, JSON metric reports, the BM25 index file and significance
//! tables.
//!
//! Every `*_to_string` function produces the canonical serialization; the
//! matching `write_*` function writes exactly those bytes.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use hyret_core::corpus::{Corpus, Document, Judgment, QaPair, QrelLoad, QrelSet, Query, QuerySet, RelevanceMode};
use hyret_core::dense::{VectorStore, IMPORT_NORM_TOLERANCE};
use hyret_core::eval::{MetricReport, Run, ScoredDoc};
use hyret_core::lexical::InvertedIndex;
use hyret_core::stats::{SignificanceResult, SignificanceTable};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const QRELS_HEADER: &str = "query-id\tcorpus-id\tscore";
pub const INDEX_FORMAT: &str = "hyret-bm25-index";
pub const INDEX_VERSION: u32 = 1;

pub fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

pub fn write_text(path: &Path, contents: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

/// Non-blank lines with their 1-based line numbers.
fn lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim_end_matches('\r')))
        .filter(|(_, l)| !l.trim().is_empty())
}

fn parse_json_line<T: for<'de> Deserialize<'de>>(path: &Path, line: usize, raw: &str) -> Result<T> {
    serde_json::from_str(raw).map_err(|e| Error::parse(path, line, format!("malformed record: {e}")))
}

fn json_line<T: Serialize>(value: &T) -> String {
    serde_json::to_string(value).expect("plain records always serialize")
}

#[derive(Debug, Serialize, Deserialize)]
struct DocRecord {
    #[serde(rename = "_id")]
    id: String,
    text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    title: Option<String>,
}

#[derive(Debug, Serialize, Deserialize)]
struct QueryRecord {
    #[serde(rename = "_id")]
    id: String,
    text: String,
}

#[derive(Debug, Serialize, Deserialize)]
struct PairRecord {
    query: String,
    positive: String,
}

pub fn parse_corpus(path: &Path, text: &str) -> Result<Corpus> {
    let mut corpus = Corpus::new();
    for (line, raw) in lines(text) {
        let rec: DocRecord = parse_json_line(path, line, raw)?;
        let mut doc = Document::new(rec.id, rec.text);
        doc.title = rec.title;
        corpus
            .push(doc)
            .map_err(|e| Error::parse(path, line, e.to_string()))?;
    }
    Ok(corpus)
}

/// Load a corpus file. An empty file yields an empty corpus; callers that
/// need documents check for that themselves.
pub fn load_corpus(path: &Path) -> Result<Corpus> {
    parse_corpus(path, &read_text(path)?)
}

pub fn corpus_to_string(corpus: &Corpus) -> String {
    let mut out = String::new();
    for doc in corpus.documents() {
        out.push_str(&json_line(&DocRecord {
            id: doc.id.clone(),
            text: doc.text.clone(),
            title: doc.title.clone(),
        }));
        out.push('\n');
    }
    out
}

pub fn write_corpus(path: &Path, corpus: &Corpus) -> Result<()> {
    write_text(path, &corpus_to_string(corpus))
}

pub fn parse_queries(path: &Path, text: &str) -> Result<QuerySet> {
    let mut queries = QuerySet::new();
    for (line, raw) in lines(text) {
        let rec: QueryRecord = parse_json_line(path, line, raw)?;
        queries
            .push(Query::new(rec.id, rec.text))
            .map_err(|e| Error::parse(path, line, e.to_string()))?;
    }
    Ok(queries)
}

pub fn load_queries(path: &Path) -> Result<QuerySet> {
    parse_queries(path, &read_text(path)?)
}

pub fn queries_to_string(queries: &QuerySet) -> String {
    let mut out = String::new();
    for q in queries.queries() {
        out.push_str(&json_line(&QueryRecord { id: q.id.clone(), text: q.text.clone() }));
        out.push('\n');
    }
    out
}

pub fn write_queries(path: &Path, queries: &QuerySet) -> Result<()> {
    write_text(path, &queries_to_string(queries))
}

pub fn parse_pairs(path: &Path, text: &str) -> Result<Vec<QaPair>> {
    lines(text)
        .map(|(line, raw)| {
            let rec: PairRecord = parse_json_line(path, line, raw)?;
            QaPair::new(rec.query, rec.positive).map_err(|e| Error::parse(path, line, e.to_string()))
        })
        .collect()
}

pub fn load_pairs(path: &Path) -> Result<Vec<QaPair>> {
    parse_pairs(path, &read_text(path)?)
}

pub fn pairs_to_string(pairs: &[QaPair]) -> String {
    let mut out = String::new();
    for p in pairs {
        out.push_str(&json_line(&PairRecord {
            query: p.query.clone(),
            positive: p.positive.clone(),
        }));
        out.push('\n');
    }
    out
}

pub fn write_pairs(path: &Path, pairs: &[QaPair]) -> Result<()> {
    write_text(path, &pairs_to_string(pairs))
}

/// Raw qrels rows; the header line is optional.
pub fn parse_qrel_rows(path: &Path, text: &str) -> Result<Vec<Judgment>> {
    let mut rows = Vec::new();
    for (line, raw) in lines(text) {
        let fields: Vec<&str> = raw.split('\t').map(str::trim).collect();
        if line == 1 && fields.first() == Some(&"query-id") {
            continue;
        }
        let [q, d, grade] = fields[..] else {
            return Err(Error::parse(
                path,
                line,
                format!("expected 3 tab-separated fields, found {}", fields.len()),
            ));
        };
        let grade: u32 = grade
            .parse()
            .map_err(|_| Error::parse(path, line, format!("invalid relevance score `{grade}`")))?;
        rows.push(Judgment::new(q, d, grade));
    }
    Ok(rows)
}

/// Load and validate qrels. Grade-0 rows are dropped and counted in the
/// returned [`QrelLoad`].
pub fn load_qrels(
    path: &Path,
    corpus: Option<&Corpus>,
    queries: Option<&QuerySet>,
    mode: RelevanceMode,
) -> Result<QrelLoad> {
    let rows = parse_qrel_rows(path, &read_text(path)?)?;
    QrelSet::from_judgments(rows, mode, corpus, queries).map_err(|e| Error::data(path, e))
}

pub fn qrels_to_string(qrels: &QrelSet) -> String {
    let mut out = String::from(QRELS_HEADER);
    out.push('\n');
    for (q, docs) in qrels.iter() {
        for (d, grade) in docs {
            let _ = writeln!(out, "{q}\t{d}\t{grade}");
        }
    }
    out
}

pub fn write_qrels(path: &Path, qrels: &QrelSet) -> Result<()> {
    write_text(path, &qrels_to_string(qrels))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VectorHeader {
    pub dim: usize,
    pub count: usize,
    pub normalized: bool,
    pub model: String,
}

#[derive(Debug, Deserialize)]
struct VectorRecord {
    #[serde(rename = "_id")]
    id: String,
    vector: Vec<f32>,
}

pub fn parse_vectors(path: &Path, text: &str, expected_dim: Option<usize>) -> Result<(VectorHeader, VectorStore)> {
    let mut it = lines(text);
    let Some((line, raw)) = it.next() else {
        return Err(Error::parse(path, 1, "missing header line"));
    };
    let header: VectorHeader = serde_json::from_str(raw)
        .map_err(|e| Error::parse(path, line, format!("malformed header: {e}")))?;
    if let Some(dim) = expected_dim {
        if dim != header.dim {
            return Err(Error::parse(
                path,
                line,
                format!("header dim {} does not match expected dim {dim}", header.dim),
            ));
        }
    }
    let mut store = VectorStore::new(header.dim, header.normalized)
        .map_err(|e| Error::parse(path, line, e.to_string()))?;
    for (line, raw) in it {
        let rec: VectorRecord = parse_json_line(path, line, raw)?;
        store
            .insert_with_tolerance(rec.id.clone(), &rec.vector, IMPORT_NORM_TOLERANCE)
            .map_err(|e| Error::parse(path, line, format!("record `{}`: {e}", rec.id)))?;
    }
    if store.len() != header.count {
        return Err(Error::parse(
            path,
            line,
            format!("header count {} but {} records", header.count, store.len()),
        ));
    }
    Ok((header, store))
}

/// Import a vector file, re-validating every record against the header.
pub fn load_vectors(path: &Path, expected_dim: Option<usize>) -> Result<(VectorHeader, VectorStore)> {
    parse_vectors(path, &read_text(path)?, expected_dim)
}

/// Nine significant digits, enough to round-trip an `f32`.
fn format_f32(v: f32) -> String {
    format!("{v:.8e}")
}

pub fn vectors_to_string(store: &VectorStore, model: &str) -> String {
    let header = VectorHeader {
        dim: store.dim(),
        count: store.len(),
        normalized: store.is_normalized(),
        model: model.to_string(),
    };
    let mut out = json_line(&header);
    out.push('\n');
    for (id, row) in store.iter() {
        let values: Vec<String> = row.iter().map(|&v| format_f32(v)).collect();
        let _ = writeln!(
            out,
            "{{\"_id\":{},\"vector\":[{}]}}",
            json_line(&id),
            values.join(",")
        );
    }
    out
}

pub fn write_vectors(path: &Path, store: &VectorStore, model: &str) -> Result<()> {
    write_text(path, &vectors_to_string(store, model))
}

/// Parse a TREC run: `qid Q0 docid rank score tag` per line. Lines of one
/// query are ordered by rank; every line must carry the same tag.
pub fn parse_run(path: &Path, text: &str) -> Result<Run> {
    let mut grouped: BTreeMap<String, Vec<(usize, usize, ScoredDoc)>> = BTreeMap::new();
    let mut tag: Option<String> = None;
    for (line, raw) in lines(text) {
        let fields: Vec<&str> = raw.split_whitespace().collect();
        let [q, _, d, rank, score, t] = fields[..] else {
            return Err(Error::parse(
                path,
                line,
                format!("expected 6 whitespace-separated fields, found {}", fields.len()),
            ));
        };
        let rank: usize = rank
            .parse()
            .ok()
            .filter(|r| *r >= 1)
            .ok_or_else(|| Error::parse(path, line, format!("invalid rank `{rank}`")))?;
        let score: f64 = score
            .parse()
            .ok()
            .filter(|s: &f64| s.is_finite())
            .ok_or_else(|| Error::parse(path, line, format!("invalid score `{score}`")))?;
        match &tag {
            None => tag = Some(t.to_string()),
            Some(existing) if existing != t => {
                return Err(Error::parse(path, line, format!("tag `{t}` differs from `{existing}`")));
            }
            Some(_) => {}
        }
        grouped
            .entry(q.to_string())
            .or_default()
            .push((rank, line, ScoredDoc::new(d, score)));
    }
    let mut run = Run::new(tag.unwrap_or_default());
    for (q, mut rows) in grouped {
        rows.sort_by_key(|(rank, _, _)| *rank);
        if let Some(w) = rows.windows(2).find(|w| w[0].0 == w[1].0) {
            return Err(Error::parse(path, w[1].1, format!("duplicate rank {} for query `{q}`", w[1].0)));
        }
        let last_line = rows.last().map_or(0, |r| r.1);
        run.insert(q, rows.into_iter().map(|(_, _, d)| d).collect())
            .map_err(|e| Error::parse(path, last_line, e.to_string()))?;
    }
    Ok(run)
}

pub fn load_run(path: &Path) -> Result<Run> {
    parse_run(path, &read_text(path)?)
}

pub fn run_to_string(run: &Run) -> String {
    let mut out = String::new();
    for (q, ranking) in run.iter() {
        for (i, d) in ranking.iter().enumerate() {
            let _ = writeln!(out, "{q} Q0 {} {} {} {}", d.id, i + 1, d.score, run.tag);
        }
    }
    out
}

pub fn write_run(path: &Path, run: &Run) -> Result<()> {
    write_text(path, &run_to_string(run))
}

pub fn report_to_string(report: &MetricReport) -> String {
    let mut s = serde_json::to_string_pretty(report).expect("reports serialize");
    s.push('\n');
    s
}

pub fn write_report(path: &Path, report: &MetricReport) -> Result<()> {
    write_text(path, &report_to_string(report))
}

pub fn load_report(path: &Path) -> Result<MetricReport> {
    serde_json::from_str(&read_text(path)?).map_err(|e| Error::parse(path, e.line(), e.to_string()))
}

#[derive(Serialize, Deserialize)]
struct IndexFile {
    format: String,
    version: u32,
    index: InvertedIndex,
}

pub fn index_to_string(index: &InvertedIndex) -> String {
    serde_json::to_string(&IndexFile {
        format: INDEX_FORMAT.into(),
        version: INDEX_VERSION,
        index: index.clone(),
    })
    .expect("index serializes")
}

pub fn save_index(path: &Path, index: &InvertedIndex) -> Result<()> {
    write_text(path, &index_to_string(index))
}

pub fn parse_index(path: &Path, text: &str) -> Result<InvertedIndex> {
    let file: IndexFile =
        serde_json::from_str(text).map_err(|e| Error::parse(path, e.line(), e.to_string()))?;
    if file.format != INDEX_FORMAT || file.version != INDEX_VERSION {
        return Err(Error::parse(
            path,
            1,
            format!("unsupported index format {} v{}", file.format, file.version),
        ));
    }
    let mut index = file.index;
    index.rebuild_lookup().map_err(|e| Error::data(path, e))?;
    index.check_invariants().map_err(|e| Error::data(path, e))?;
    Ok(index)
}

pub fn load_index(path: &Path) -> Result<InvertedIndex> {
    parse_index(path, &read_text(path)?)
}

/// Synonym table: a JSON object mapping token to canonical token.
pub fn load_synonyms(path: &Path) -> Result<BTreeMap<String, String>> {
    serde_json::from_str(&read_text(path)?).map_err(|e| Error::parse(path, e.line(), e.to_string()))
}

pub fn synonyms_to_string(map: &BTreeMap<String, String>) -> String {
    let mut s = serde_json::to_string_pretty(map).expect("map serializes");
    s.push('\n');
    s
}

pub fn significance_to_string(table: &SignificanceTable) -> String {
    let mut s = serde_json::to_string_pretty(table).expect("table serializes");
    s.push('\n');
    s
}

pub fn load_significance(path: &Path) -> Result<SignificanceTable> {
    serde_json::from_str(&read_text(path)?).map_err(|e| Error::parse(path, e.line(), e.to_string()))
}

fn p_cell(r: &SignificanceResult) -> String {
    format!("{:.4}{}", r.p_value, r.marker.superscript())
}

/// Aligned plain-text rendering with superscript markers on the p-values.
pub fn significance_text(table: &SignificanceTable) -> String {
    let mut rows = vec![[
        "system".to_string(),
        "metric".into(),
        table.baseline.clone(),
        "system_mean".into(),
        "t".into(),
        "p_t".into(),
        "W".into(),
        "p_wilcoxon".into(),
    ]];
    for r in &table.rows {
        rows.push([
            r.system.clone(),
            r.metric.clone(),
            format!("{:.4}", r.baseline_mean),
            format!("{:.4}", r.candidate_mean),
            format!("{:.4}", r.paired_t.statistic),
            p_cell(&r.paired_t),
            format!("{:.1}", r.wilcoxon.statistic),
            p_cell(&r.wilcoxon),
        ]);
    }
    let mut out = align(&rows);
    out.push_str("markers: \u{1d45} p<0.05, \u{1d5d} p<0.01\n");
    out
}

/// Left-aligned columns padded by character count.
pub fn align<const N: usize>(rows: &[[String; N]]) -> String {
    let mut widths = [0usize; N];
    for row in rows {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.chars().count());
        }
    }
    let mut out = String::new();
    for row in rows {
        let mut line = String::new();
        for (i, cell) in row.iter().enumerate() {
            line.push_str(cell);
            if i + 1 < N {
                let pad = widths[i] - cell.chars().count() + 2;
                line.extend(std::iter::repeat_n(' ', pad));
            }
        }
        out.push_str(line.trim_end());
        out.push('\n');
    }
    out
}

/// Aggregate table: one row per metric, one column per cutoff.
pub fn report_table(report: &MetricReport) -> String {
    use hyret_core::eval::Metric;
    let mut header = vec!["metric".to_string()];
    header.extend(report.k_values.iter().map(|k| format!("@{k}")));
    let mut rows = vec![header];
    for m in Metric::ALL {
        let mut row = vec![m.name().to_string()];
        row.extend(
            report
                .k_values
                .iter()
                .map(|&k| report.get(m, k).map_or("-".into(), |v| format!("{v:.4}"))),
        );
        rows.push(row);
    }
    let mut widths = vec![0usize; rows[0].len()];
    for row in &rows {
        for (w, c) in widths.iter_mut().zip(row) {
            *w = (*w).max(c.len());
        }
    }
    let mut out = format!("{} ({} queries)\n", report.tag, report.evaluated_queries);
    for row in rows {
        let cells: Vec<String> = row
            .iter()
            .zip(&widths)
            .map(|(c, w)| format!("{c:<w$}"))
            .collect();
        out.push_str(cells.join("  ").trim_end());
        out.push('\n');
    }
    out
}
