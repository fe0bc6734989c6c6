//! Naive reference implementations. Nothing here calls the code under test
//! except for plain data accessors.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

/// Brute-force metric values for one query: (accuracy, precision, recall, mrr, ndcg).
pub fn naive_metrics(ranking: &[&str], relevant: &BTreeSet<&str>, k: usize) -> [f64; 5] {
    let mut hits = 0usize;
    let mut first: Option<usize> = None;
    let mut dcg = 0.0;
    for (i, id) in ranking.iter().enumerate() {
        if i >= k {
            break;
        }
        if relevant.contains(id) {
            hits += 1;
            if first.is_none() {
                first = Some(i + 1);
            }
            dcg += 1.0 / ((i + 2) as f64).log2();
        }
    }
    let mut idcg = 0.0;
    for i in 0..relevant.len().min(k) {
        idcg += 1.0 / ((i + 2) as f64).log2();
    }
    [
        if hits > 0 { 1.0 } else { 0.0 },
        hits as f64 / k as f64,
        hits as f64 / relevant.len() as f64,
        first.map_or(0.0, |r| 1.0 / r as f64),
        dcg / idcg,
    ]
}

/// BM25 evaluated straight from the formula on raw token lists.
pub fn naive_bm25(docs: &[Vec<String>], query: &[String], k1: f64, b: f64) -> Vec<f64> {
    let n = docs.len() as f64;
    let avgdl = docs.iter().map(Vec::len).sum::<usize>() as f64 / n;
    docs.iter()
        .map(|d| {
            let mut score = 0.0;
            for t in query {
                let tf = d.iter().filter(|x| *x == t).count() as f64;
                if tf == 0.0 {
                    continue;
                }
                let df = docs.iter().filter(|x| x.contains(t)).count() as f64;
                let idf = ((n - df + 0.5) / (df + 0.5) + 1.0).ln();
                score += idf * tf * (k1 + 1.0) / (tf + k1 * (1.0 - b + b * d.len() as f64 / avgdl));
            }
            score
        })
        .collect()
}

/// Rank `(id, score)` pairs: score descending, id ascending.
pub fn rank(mut scored: Vec<(String, f64)>) -> Vec<(String, f64)> {
    scored.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
    scored
}

pub fn naive_cosine(a: &[f32], b: &[f32]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| *x as f64 * *y as f64).sum();
    let na: f64 = a.iter().map(|x| (*x as f64).powi(2)).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|x| (*x as f64).powi(2)).sum::<f64>().sqrt();
    (dot / (na * nb)).clamp(-1.0, 1.0)
}

/// Materialize the full B x B softmax and average the diagonal cross-entropy.
pub fn naive_mnrl(q: &[Vec<f32>], p: &[Vec<f32>], scale: f64) -> f64 {
    let b = q.len();
    let mut logits = vec![vec![0.0; b]; b];
    for i in 0..b {
        for j in 0..b {
            logits[i][j] = scale * naive_cosine(&q[i], &p[j]);
        }
    }
    let mut loss = 0.0;
    for (i, row) in logits.iter().enumerate() {
        let m = row.iter().cloned().fold(f64::MIN, f64::max);
        let z: f64 = row.iter().map(|l| (l - m).exp()).sum();
        let prob_ii = (row[i] - m).exp() / z;
        loss -= prob_ii.ln();
    }
    loss / b as f64
}

/// Wilcoxon two-sided p by walking all 2^n sign patterns.
pub fn enumerate_wilcoxon_p(diffs: &[f64]) -> (f64, f64) {
    let d: Vec<f64> = diffs.iter().cloned().filter(|x| *x != 0.0).collect();
    let n = d.len();
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| d[a].abs().partial_cmp(&d[b].abs()).unwrap());
    let mut ranks = vec![0.0; n];
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && d[idx[j + 1]].abs() == d[idx[i]].abs() {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &x in &idx[i..=j] {
            ranks[x] = avg;
        }
        i = j + 1;
    }
    let total: f64 = ranks.iter().sum();
    let plus: f64 = (0..n).filter(|&i| d[i] > 0.0).map(|i| ranks[i]).sum();
    let w = plus.min(total - plus);
    let mut extreme = 0u64;
    for mask in 0u64..(1 << n) {
        let p: f64 = (0..n).filter(|&i| mask >> i & 1 == 1).map(|i| ranks[i]).sum();
        if p.min(total - p) <= w + 1e-9 {
            extreme += 1;
        }
    }
    (w, extreme as f64 / (1u64 << n) as f64)
}

/// Split on anything that is not alphanumeric or a combining mark, lowercase.
pub fn naive_tokens(s: &str) -> Vec<String> {
    s.split(|c: char| {
        !(c.is_alphanumeric()
            || ('\u{0900}'..='\u{0903}').contains(&c)
            || ('\u{093A}'..='\u{094F}').contains(&c) && c != '\u{093D}'
            || ('\u{0951}'..='\u{0957}').contains(&c)
            || ('\u{0962}'..='\u{0963}').contains(&c))
    })
    .filter(|t| t.chars().any(char::is_alphanumeric))
    .map(str::to_lowercase)
    .collect()
}

pub fn relevant_map(ids: &BTreeSet<&str>) -> BTreeMap<String, u32> {
    ids.iter().map(|d| (d.to_string(), 1)).collect()
}
