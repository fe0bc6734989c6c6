//! Fusion of a lexical run and a dense run.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::eval::{sort_ranking, Run, ScoredDoc};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum FusionMethod {
    /// Min-max normalize each side over its candidates, then
    /// `alpha * dense + (1 - alpha) * lexical`.
    #[default]
    WeightedMinmax,
    /// Reciprocal rank fusion: `sum 1 / (rrf_k + rank)`.
    Rrf,
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct FusionConfig {
    pub method: FusionMethod,
    /// Weight on the dense side (weighted min-max only).
    pub alpha: f64,
    pub rrf_k: u32,
    /// Candidates taken from the top of each input ranking.
    pub depth: usize,
}

impl Default for FusionConfig {
    fn default() -> Self {
        Self {
            method: FusionMethod::WeightedMinmax,
            alpha: 0.5,
            rrf_k: 60,
            depth: 100,
        }
    }
}

impl FusionConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(Error::Config(format!("alpha {} outside [0, 1]", self.alpha)));
        }
        if self.rrf_k == 0 {
            return Err(Error::Config("rrf_k must be >= 1".into()));
        }
        if self.depth == 0 {
            return Err(Error::Config("fusion depth must be >= 1".into()));
        }
        Ok(())
    }
}

/// Min-max normalize into `[0, 1]`; a constant list maps to all 1.
fn minmax(side: &[ScoredDoc]) -> BTreeMap<&str, f64> {
    let (lo, hi) = side.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), d| {
        (lo.min(d.score), hi.max(d.score))
    });
    let span = hi - lo;
    side.iter()
        .map(|d| {
            let v = if span > 0.0 { (d.score - lo) / span } else { 1.0 };
            (d.id.as_str(), v)
        })
        .collect()
}

/// 1-based rank of every document.
fn ranks(side: &[ScoredDoc]) -> BTreeMap<&str, usize> {
    side.iter()
        .enumerate()
        .map(|(i, d)| (d.id.as_str(), i + 1))
        .collect()
}

/// Fuse two rankings of one query. Inputs must be ordered best first.
pub fn fuse_rankings(lexical: &[ScoredDoc], dense: &[ScoredDoc], config: &FusionConfig) -> Vec<ScoredDoc> {
    let lexical = &lexical[..config.depth.min(lexical.len())];
    let dense = &dense[..config.depth.min(dense.len())];
    let candidates: BTreeSet<&str> = lexical
        .iter()
        .chain(dense)
        .map(|d| d.id.as_str())
        .collect();

    let mut fused: Vec<ScoredDoc> = match config.method {
        FusionMethod::WeightedMinmax => {
            let lex = minmax(lexical);
            let den = minmax(dense);
            candidates
                .into_iter()
                .map(|id| {
                    let l = lex.get(id).copied().unwrap_or(0.0);
                    let d = den.get(id).copied().unwrap_or(0.0);
                    ScoredDoc::new(id, config.alpha * d + (1.0 - config.alpha) * l)
                })
                .collect()
        }
        FusionMethod::Rrf => {
            let (lex, den) = (ranks(lexical), ranks(dense));
            let k = f64::from(config.rrf_k);
            candidates
                .into_iter()
                .map(|id| {
                    let score = [lex.get(id), den.get(id)]
                        .into_iter()
                        .flatten()
                        .map(|&r| 1.0 / (k + r as f64))
                        .sum();
                    ScoredDoc::new(id, score)
                })
                .collect()
        }
    };
    sort_ranking(&mut fused);
    fused
}

/// Fuse two runs query by query. A query missing from one run is fused with
/// an empty ranking on that side.
pub fn fuse(lexical: &Run, dense: &Run, config: &FusionConfig, tag: impl Into<String>) -> Result<Run> {
    config.validate()?;
    let queries: BTreeSet<&str> = lexical.query_ids().chain(dense.query_ids()).collect();
    let mut out = Run::new(tag);
    for q in queries {
        let fused = fuse_rankings(
            lexical.get(q).unwrap_or(&[]),
            dense.get(q).unwrap_or(&[]),
            config,
        );
        out.insert(q, fused)?;
    }
    Ok(out)
}
