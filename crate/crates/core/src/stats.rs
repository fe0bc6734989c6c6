//! Paired significance tests of per-query metric values against a baseline.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::eval::MetricReport;
use crate::math::{exp, ln, sqrt};
use crate::{Error, Result};

/// Significance marker: `Beta` for p < 0.01, `Alpha` for p < 0.05.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum Marker {
    #[default]
    None,
    Alpha,
    Beta,
}

impl Marker {
    pub fn superscript(self) -> &'static str {
        match self {
            Marker::None => "",
            Marker::Alpha => "\u{1D45}",
            Marker::Beta => "\u{1D5D}",
        }
    }
}

pub const ALPHA_LEVEL: f64 = 0.05;
pub const BETA_LEVEL: f64 = 0.01;

pub fn mark_significance(p: f64) -> Result<Marker> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidPValue(p));
    }
    Ok(if p < BETA_LEVEL {
        Marker::Beta
    } else if p < ALPHA_LEVEL {
        Marker::Alpha
    } else {
        Marker::None
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum TestKind {
    PairedT,
    Wilcoxon,
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SignificanceResult {
    pub test: TestKind,
    pub statistic: f64,
    pub p_value: f64,
    pub n_effective: usize,
    pub marker: Marker,
    /// Zero variance (t-test) or no nonzero differences (Wilcoxon inside a
    /// comparison table); the p-value follows a fixed convention.
    pub degenerate: bool,
}

impl SignificanceResult {
    fn new(test: TestKind, statistic: f64, p_value: f64, n_effective: usize, degenerate: bool) -> Self {
        let p_value = p_value.clamp(0.0, 1.0);
        Self {
            test,
            statistic,
            p_value,
            n_effective,
            marker: mark_significance(p_value).unwrap_or_default(),
            degenerate,
        }
    }
}

/// Per-query values of a baseline and a candidate over the same queries.
#[derive(Debug, Clone, PartialEq)]
pub struct PairedSample {
    pub baseline: BTreeMap<String, f64>,
    pub candidate: BTreeMap<String, f64>,
}

impl PairedSample {
    pub fn new(baseline: BTreeMap<String, f64>, candidate: BTreeMap<String, f64>) -> Result<Self> {
        if !baseline.keys().eq(candidate.keys()) {
            return Err(Error::MismatchedQueries);
        }
        if baseline.len() < 2 {
            return Err(Error::TooFewObservations(baseline.len()));
        }
        Ok(Self {
            baseline,
            candidate,
        })
    }

    /// `candidate - baseline`, in query-id order.
    pub fn differences(&self) -> Vec<f64> {
        self.baseline
            .values()
            .zip(self.candidate.values())
            .map(|(b, c)| c - b)
            .collect()
    }

    pub fn len(&self) -> usize {
        self.baseline.len()
    }

    pub fn is_empty(&self) -> bool {
        self.baseline.is_empty()
    }
}

pub fn paired_t_test(sample: &PairedSample) -> Result<SignificanceResult> {
    t_test_differences(&sample.differences())
}

/// Two-sided one-sample t-test of the differences against 0.
pub fn t_test_differences(d: &[f64]) -> Result<SignificanceResult> {
    let n = d.len();
    if n < 2 {
        return Err(Error::TooFewObservations(n));
    }
    if d.iter().all(|&x| x == 0.0) {
        return Ok(SignificanceResult::new(TestKind::PairedT, 0.0, 1.0, n, true));
    }
    let nf = n as f64;
    let mean = d.iter().sum::<f64>() / nf;
    if d.iter().all(|&x| x == d[0]) {
        let t = if mean > 0.0 { f64::INFINITY } else { f64::NEG_INFINITY };
        return Ok(SignificanceResult::new(TestKind::PairedT, t, 0.0, n, true));
    }
    let var = d.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (nf - 1.0);
    let t = mean / (sqrt(var) / sqrt(nf));
    let p = student_t_two_sided(t, nf - 1.0);
    Ok(SignificanceResult::new(TestKind::PairedT, t, p, n, false))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct WilcoxonConfig {
    /// Largest number of nonzero differences for which the exact null
    /// distribution is used; above it the normal approximation applies.
    pub exact_max_n: usize,
}

impl Default for WilcoxonConfig {
    fn default() -> Self {
        Self { exact_max_n: 25 }
    }
}

pub fn wilcoxon_signed_rank(sample: &PairedSample, config: &WilcoxonConfig) -> Result<SignificanceResult> {
    wilcoxon_differences(&sample.differences(), config)
}

/// Ranks of `|d|` with doubled mean ranks for ties (so they stay integral),
/// plus the tie-group sizes.
fn doubled_ranks(d: &[f64]) -> (Vec<u64>, Vec<usize>) {
    let mut order: Vec<usize> = (0..d.len()).collect();
    order.sort_by(|&a, &b| d[a].abs().total_cmp(&d[b].abs()));
    let mut ranks = vec![0u64; d.len()];
    let mut ties = Vec::new();
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && d[order[j + 1]].abs() == d[order[i]].abs() {
            j += 1;
        }
        // positions i..=j share the mean of ranks i+1..=j+1
        let doubled = (i + 1 + j + 1) as u64;
        for &idx in &order[i..=j] {
            ranks[idx] = doubled;
        }
        ties.push(j - i + 1);
        i = j + 1;
    }
    (ranks, ties)
}

/// Wilcoxon signed-rank test on paired differences (zeros dropped).
/// The statistic is `min(W+, W-)`.
pub fn wilcoxon_differences(d: &[f64], config: &WilcoxonConfig) -> Result<SignificanceResult> {
    if d.len() < 2 {
        return Err(Error::TooFewObservations(d.len()));
    }
    let nonzero: Vec<f64> = d.iter().copied().filter(|&x| x != 0.0).collect();
    if nonzero.is_empty() {
        return Err(Error::NoNonzeroDifferences);
    }
    let n = nonzero.len();
    let (ranks, ties) = doubled_ranks(&nonzero);
    let plus2: u64 = nonzero
        .iter()
        .zip(&ranks)
        .filter(|(x, _)| **x > 0.0)
        .map(|(_, r)| r)
        .sum();
    let total2: u64 = ranks.iter().sum();
    let w2 = plus2.min(total2 - plus2);
    let w = w2 as f64 / 2.0;

    let p = if n <= config.exact_max_n {
        wilcoxon_exact_p(&ranks, w2)
    } else {
        wilcoxon_normal_p(w, n, &ties)
    };
    Ok(SignificanceResult::new(TestKind::Wilcoxon, w, p, n, false))
}

/// Exact two-sided p: the share of the `2^n` sign assignments whose smaller
/// rank sum is at most the observed one. Counted with a subset-sum table
/// over doubled ranks.
pub fn wilcoxon_exact_p(doubled_ranks: &[u64], observed_w2: u64) -> f64 {
    let total: u64 = doubled_ranks.iter().sum();
    let mut counts = vec![0.0f64; total as usize + 1];
    counts[0] = 1.0;
    let mut reach = 0usize;
    for &r in doubled_ranks {
        let r = r as usize;
        for s in (0..=reach).rev() {
            if counts[s] != 0.0 {
                counts[s + r] += counts[s];
            }
        }
        reach += r;
    }
    let at_most: f64 = counts[..=observed_w2 as usize].iter().sum();
    let all = libm::pow(2.0, doubled_ranks.len() as f64);
    (2.0 * at_most / all).min(1.0)
}

/// Normal approximation with tie-corrected variance and continuity
/// correction.
pub fn wilcoxon_normal_p(w: f64, n: usize, tie_sizes: &[usize]) -> f64 {
    let nf = n as f64;
    let tie_term: f64 = tie_sizes
        .iter()
        .map(|&t| {
            let t = t as f64;
            t * t * t - t
        })
        .sum::<f64>()
        / 48.0;
    let var = nf * (nf + 1.0) * (2.0 * nf + 1.0) / 24.0 - tie_term;
    if var <= 0.0 {
        return 1.0;
    }
    let z = (w - nf * (nf + 1.0) / 4.0 + 0.5) / sqrt(var);
    (2.0 * normal_cdf(z)).min(1.0)
}

pub fn normal_cdf(z: f64) -> f64 {
    0.5 * libm::erfc(-z / core::f64::consts::SQRT_2)
}

/// Two-sided tail probability `P(|T| >= |t|)` of Student's t with `df`
/// degrees of freedom.
pub fn student_t_two_sided(t: f64, df: f64) -> f64 {
    if t.is_infinite() {
        return 0.0;
    }
    regularized_incomplete_beta(df / (df + t * t), df / 2.0, 0.5)
}

/// CDF of Student's t distribution.
pub fn student_t_cdf(t: f64, df: f64) -> f64 {
    let tail = 0.5 * student_t_two_sided(t, df);
    if t >= 0.0 {
        1.0 - tail
    } else {
        tail
    }
}

/// `I_x(a, b)` by the continued fraction (modified Lentz), using the
/// symmetry `I_x(a, b) = 1 - I_{1-x}(b, a)` where it converges faster.
pub fn regularized_incomplete_beta(x: f64, a: f64, b: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    let ln_front = libm::lgamma(a + b) - libm::lgamma(a) - libm::lgamma(b)
        + a * ln(x)
        + b * libm::log1p(-x);
    let front = exp(ln_front);
    if x < (a + 1.0) / (a + b + 2.0) {
        front * beta_continued_fraction(x, a, b) / a
    } else {
        1.0 - front * beta_continued_fraction(1.0 - x, b, a) / b
    }
}

fn beta_continued_fraction(x: f64, a: f64, b: f64) -> f64 {
    const TINY: f64 = 1e-300;
    const EPS: f64 = 1e-16;
    let qab = a + b;
    let qap = a + 1.0;
    let qam = a - 1.0;
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < TINY {
        d = TINY;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..=1000 {
        let m = f64::from(m);
        let m2 = 2.0 * m;
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        h *= d * c;
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let delta = d * c;
        h *= delta;
        if (delta - 1.0).abs() < EPS {
            break;
        }
    }
    h
}

/// Both tests on one metric's per-query values.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SignificanceRow {
    pub system: String,
    pub metric: String,
    pub baseline_mean: f64,
    pub candidate_mean: f64,
    pub paired_t: SignificanceResult,
    pub wilcoxon: SignificanceResult,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SignificanceTable {
    pub baseline: String,
    pub rows: Vec<SignificanceRow>,
}

/// Test every candidate against the baseline on every metric both reports
/// share. No multiple-comparison correction is applied.
pub fn compare_reports(
    baseline: &MetricReport,
    candidates: &[&MetricReport],
    config: &WilcoxonConfig,
) -> Result<SignificanceTable> {
    let mut rows = Vec::new();
    for cand in candidates {
        for key in baseline.ordered_keys() {
            let (Some(b), Some(c)) = (baseline.per_query.get(&key), cand.per_query.get(&key)) else {
                continue;
            };
            let sample = PairedSample::new(b.clone(), c.clone())?;
            let paired_t = paired_t_test(&sample)?;
            let wilcoxon = match wilcoxon_signed_rank(&sample, config) {
                Err(Error::NoNonzeroDifferences) => {
                    SignificanceResult::new(TestKind::Wilcoxon, 0.0, 1.0, 0, true)
                }
                other => other?,
            };
            rows.push(SignificanceRow {
                system: cand.tag.clone(),
                metric: key.clone(),
                baseline_mean: baseline.aggregate[&key],
                candidate_mean: cand.aggregate[&key],
                paired_t,
                wilcoxon,
            });
        }
    }
    Ok(SignificanceTable {
        baseline: baseline.tag.clone(),
        rows,
    })
}
