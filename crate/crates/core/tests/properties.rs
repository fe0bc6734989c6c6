mod common;

use std::collections::BTreeSet;

use hyret_core::corpus::{build_eval_corpus, find_near_duplicates, split_pairs, Corpus, Document, SplitSpec};
use hyret_core::dense::{cosine_similarity, dense_search, mnrl_loss, MnrlConfig, MockEmbedder, VectorStore};
use hyret_core::eval::{evaluate_run, Metric, Run, ScoredDoc};
use hyret_core::hybrid::{fuse_rankings, FusionConfig, FusionMethod};
use hyret_core::lexical::{idf, tf_weight, Bm25Params, InvertedIndex};
use hyret_core::stats::{t_test_differences, wilcoxon_differences, wilcoxon_normal_p, WilcoxonConfig};
use hyret_core::text::{normalize, tokenize, NormalizationConfig};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn messy_text() -> impl Strategy<Value = String> {
    let pieces = prop_oneof![
        Just("राहदानी".to_string()),
        Just("कहाँ".to_string()),
        Just("बन्छ".to_string()),
        Just("।".to_string()),
        Just(" ".to_string()),
        Just("\t\n".to_string()),
        Just("<".to_string()),
        Just(">".to_string()),
        Just("<p>".to_string()),
        Just("</b>".to_string()),
        Just("http://".to_string()),
        Just("www.".to_string()),
        Just("e\u{0301}".to_string()),
        Just("\u{0958}".to_string()),
        Just("\u{200B}".to_string()),
        Just("\u{200D}".to_string()),
        Just("ABC".to_string()),
        any::<char>().prop_map(String::from),
    ];
    prop::collection::vec(pieces, 0..24).prop_map(|v| v.concat())
}

proptest! {
    #[test]
    fn normalize_is_idempotent(s in messy_text()) {
        let cfg = NormalizationConfig::default();
        let once = normalize(&s, &cfg);
        prop_assert_eq!(normalize(&once, &cfg), once);
    }

    #[test]
    fn normalize_idempotent_on_arbitrary_strings(s in any::<String>()) {
        let cfg = NormalizationConfig::default();
        let once = normalize(&s, &cfg);
        prop_assert_eq!(normalize(&once, &cfg), once.clone());
        prop_assert!(!once.contains("  "));
        prop_assert_eq!(once.trim(), once.as_str());
    }

    #[test]
    fn tokens_rejoin_stably(s in messy_text()) {
        let tokens = tokenize(&normalize(&s, &NormalizationConfig::default())).into_vec();
        let again = tokenize(&tokens.join(" ")).into_vec();
        prop_assert_eq!(&again, &tokens);
        for t in &tokens {
            prop_assert!(!t.is_empty());
            prop_assert!(!t.chars().any(|c| c.is_whitespace() || c.is_ascii_punctuation() || c == '।' || c == '॥'));
        }
    }

    #[test]
    fn split_is_a_partition(n in 3usize..200, seed in any::<u64>()) {
        let items: Vec<usize> = (0..n).collect();
        let spec = SplitSpec { seed, ..SplitSpec::default() };
        let (a, b, c) = split_pairs(&items, &spec).unwrap();
        let mut all: Vec<usize> = a.iter().chain(&b).chain(&c).copied().collect();
        all.sort_unstable();
        prop_assert_eq!(all, items);
    }

    #[test]
    fn cosine_symmetric_and_scale_invariant(
        a in prop::collection::vec(-10.0f32..10.0, 6),
        b in prop::collection::vec(-10.0f32..10.0, 6),
        alpha in 0.01f32..100.0,
        beta in 0.01f32..100.0,
    ) {
        prop_assume!(a.iter().any(|x| x.abs() > 1e-3) && b.iter().any(|x| x.abs() > 1e-3));
        let c = cosine_similarity(&a, &b).unwrap();
        prop_assert_eq!(c, cosine_similarity(&b, &a).unwrap());
        let sa: Vec<f32> = a.iter().map(|x| x * alpha).collect();
        let sb: Vec<f32> = b.iter().map(|x| x * beta).collect();
        prop_assert!((cosine_similarity(&sa, &sb).unwrap() - c).abs() < 1e-5);
        prop_assert!((-1.0..=1.0).contains(&c));
    }

    #[test]
    fn mnrl_nonnegative_and_permutation_equivariant(seed in any::<u64>(), b in 1usize..12) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let gen = |rng: &mut ChaCha8Rng| -> Vec<Vec<f32>> {
            (0..b).map(|_| (0..8).map(|_| rng.gen_range(-1.0f32..1.0)).collect()).collect()
        };
        let (q, p) = (gen(&mut rng), gen(&mut rng));
        let cfg = MnrlConfig { scale: rng.gen_range(0.1..25.0) };
        let loss = mnrl_loss(&q, &p, &cfg).unwrap();
        prop_assert!(loss >= 0.0);
        if b >= 2 {
            prop_assert!(loss > 0.0);
        } else {
            prop_assert_eq!(loss, 0.0);
        }
        let mut perm: Vec<usize> = (0..b).collect();
        perm.reverse();
        let qp: Vec<_> = perm.iter().map(|&i| q[i].clone()).collect();
        let pp: Vec<_> = perm.iter().map(|&i| p[i].clone()).collect();
        prop_assert!((mnrl_loss(&qp, &pp, &cfg).unwrap() - loss).abs() < 1e-12);
    }

    #[test]
    fn identical_batch_gives_ln_b(b in 1usize..64, scale in 0.1f64..50.0) {
        let v = vec![vec![0.3f32, -0.2, 0.9]; b];
        let loss = mnrl_loss(&v, &v, &MnrlConfig { scale }).unwrap();
        prop_assert!((loss - (b as f64).ln()).abs() < 1e-9);
    }

    #[test]
    fn idf_positive_and_tf_weight_monotone(n in 1usize..10_000, df_frac in 0.0f64..=1.0,
                                           tf in 1u32..50, dl in 1u32..200, avgdl in 0.5f64..100.0,
                                           k1 in 0.0f64..3.0, b in 0.0f64..=1.0) {
        let df = ((n as f64 * df_frac) as usize).clamp(1, n);
        prop_assert!(idf(n, df) > 0.0);
        let p = Bm25Params { k1, b };
        let lo = tf_weight(f64::from(tf), f64::from(dl), avgdl, &p);
        let hi = tf_weight(f64::from(tf + 1), f64::from(dl), avgdl, &p);
        prop_assert!(hi >= lo);
    }

    #[test]
    fn wilcoxon_exact_near_normal_at_25(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let shift = rng.gen_range(-0.8..0.8);
        let d: Vec<f64> = (0..25).map(|_| rng.gen_range(-1.0..1.0) + shift).collect();
        let exact = wilcoxon_differences(&d, &WilcoxonConfig::default()).unwrap();
        let approx = wilcoxon_normal_p(exact.statistic, 25, &[1; 25]);
        prop_assert!((exact.p_value - approx).abs() < 0.02, "{} vs {}", exact.p_value, approx);
    }

    #[test]
    fn tests_antisymmetric_and_shift_invariant(
        base in prop::collection::vec(-16i32..16, 2..20),
        cand in prop::collection::vec(-16i32..16, 2..20),
        shift in -64i32..64,
    ) {
        let n = base.len().min(cand.len());
        // eighths keep the arithmetic exact
        let b: Vec<f64> = base[..n].iter().map(|&x| x as f64 / 8.0).collect();
        let c: Vec<f64> = cand[..n].iter().map(|&x| x as f64 / 8.0).collect();
        let d: Vec<f64> = b.iter().zip(&c).map(|(b, c)| c - b).collect();
        let rev: Vec<f64> = b.iter().zip(&c).map(|(b, c)| b - c).collect();
        let shifted: Vec<f64> = b.iter().zip(&c)
            .map(|(b, c)| (c + shift as f64) - (b + shift as f64)).collect();

        let t = t_test_differences(&d).unwrap();
        let t_rev = t_test_differences(&rev).unwrap();
        prop_assert_eq!(t.p_value, t_rev.p_value);
        prop_assert_eq!(t.statistic, -t_rev.statistic);
        prop_assert_eq!(t_test_differences(&shifted).unwrap(), t);

        let cfg = WilcoxonConfig::default();
        match wilcoxon_differences(&d, &cfg) {
            Ok(w) => {
                prop_assert_eq!(wilcoxon_differences(&rev, &cfg).unwrap().p_value, w.p_value);
                prop_assert_eq!(wilcoxon_differences(&shifted, &cfg).unwrap(), w);
            }
            Err(_) => prop_assert!(d.iter().all(|x| *x == 0.0)),
        }
    }
}

fn random_ranking(rng: &mut ChaCha8Rng, pool: usize, len: usize) -> Vec<ScoredDoc> {
    let mut ids: Vec<usize> = (0..pool).collect();
    for i in (1..ids.len()).rev() {
        ids.swap(i, rng.gen_range(0..=i));
    }
    let mut scores: Vec<f64> = (0..len).map(|_| rng.gen_range(-5.0..5.0)).collect();
    scores.sort_by(|a, b| b.partial_cmp(a).unwrap());
    ids.iter()
        .take(len)
        .zip(scores)
        .map(|(i, s)| ScoredDoc::new(format!("d{i:03}"), s))
        .collect()
}

#[test]
fn near_duplicates_symmetric_and_monotone() {
    let texts = [
        "राहदानी कहाँ बन्छ",
        "राहदानी कहाँ बन्छ ?",
        "राहदानी कहिले बन्छ",
        "शुल्क कति लाग्छ",
        "शुल्क कति हो",
        "नागरिकता चाहिन्छ",
    ];
    let embedder = MockEmbedder::new(512).unwrap();
    let mut previous: Option<BTreeSet<(usize, usize)>> = None;
    for threshold in [0.1, 0.3, 0.5, 0.7, 0.9, 1.0] {
        let found = find_near_duplicates(&texts, &embedder, threshold).unwrap();
        let pairs: BTreeSet<(usize, usize)> = found.iter().map(|d| (d.first, d.second)).collect();
        assert!(found.windows(2).all(|w| w[0].similarity >= w[1].similarity));
        if let Some(prev) = &previous {
            assert!(pairs.is_subset(prev));
        }
        previous = Some(pairs);

        let reversed: Vec<&str> = texts.iter().rev().copied().collect();
        let rev_found = find_near_duplicates(&reversed, &embedder, threshold).unwrap();
        let n = texts.len() - 1;
        let mapped: BTreeSet<(usize, usize)> = rev_found
            .iter()
            .map(|d| ((n - d.second), (n - d.first)))
            .collect();
        assert_eq!(mapped, found.iter().map(|d| (d.first, d.second)).collect());
    }
}

#[test]
fn eval_corpus_is_additive() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..20 {
        let a = rng.gen_range(0..30);
        let b = rng.gen_range(0..30);
        let rel = Corpus::from_documents((0..a).map(|i| Document::new(format!("{i}"), "क"))).unwrap();
        let dis = Corpus::from_documents((0..b).map(|i| Document::new(format!("{i}"), "ख"))).unwrap();
        let merged = build_eval_corpus(&rel, &dis, Some("dx-")).unwrap();
        assert_eq!(merged.len(), a + b);
        let ids: BTreeSet<&str> = merged.documents().iter().map(|d| d.id.as_str()).collect();
        assert_eq!(ids.len(), a + b);
    }
}

#[test]
fn incremental_insert_updates_statistics() {
    let mut index = InvertedIndex::new(Bm25Params::default()).unwrap();
    index.insert("a", &["x", "y"]).unwrap();
    index.insert("b", &["y"]).unwrap();
    let before = (index.num_docs(), index.df("y"), index.avgdl());
    index.insert("c", &["z", "z", "z"]).unwrap();
    index.check_invariants().unwrap();
    assert_eq!(before, (2, 2, 1.5));
    assert_eq!((index.num_docs(), index.df("y"), index.avgdl()), (3, 2, 2.0));
    // idf of y rises when an unrelated document arrives
    assert!(index.idf("y") > idf(2, 2));
}

#[test]
fn dense_ranking_invariant_under_rescaling() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut store = VectorStore::new(5, false).unwrap();
    for i in 0..100 {
        let v: Vec<f32> = (0..5).map(|_| rng.gen_range(-1.0..1.0)).collect();
        store.insert(format!("{i}"), &v).unwrap();
    }
    let q: Vec<f32> = (0..5).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let ids = |s: &VectorStore| -> Vec<String> {
        dense_search(s, &q, 20).unwrap().into_iter().map(|(id, _)| id).collect()
    };
    assert_eq!(ids(&store), ids(&store.rescaled(4.0).unwrap()));
    assert_eq!(ids(&store), ids(&store.rescaled(0.25).unwrap()));
}

#[test]
fn fusion_properties() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for _ in 0..100 {
        let (nl, nd) = (rng.gen_range(1..30), rng.gen_range(1..30));
        let lex = random_ranking(&mut rng, 40, nl);
        let den = random_ranking(&mut rng, 40, nd);
        let depth = rng.gen_range(1..40);

        for (alpha, side) in [(0.0, &lex), (1.0, &den)] {
            let cfg = FusionConfig { alpha, depth, ..Default::default() };
            let fused = fuse_rankings(&lex, &den, &cfg);
            assert!(fused.iter().all(|d| (0.0..=1.0).contains(&d.score)));
            let keep: BTreeSet<&str> = side.iter().take(depth).map(|d| d.id.as_str()).collect();
            let order: Vec<&str> = fused.iter().map(|d| d.id.as_str()).filter(|id| keep.contains(id)).collect();
            let expected: Vec<&str> = side.iter().take(depth).map(|d| d.id.as_str()).collect();
            assert_eq!(order, expected);
        }

        let rrf = FusionConfig { method: FusionMethod::Rrf, depth, ..Default::default() };
        let base = fuse_rankings(&lex, &den, &rrf);
        let warped: Vec<ScoredDoc> = lex.iter().map(|d| ScoredDoc::new(d.id.clone(), d.score.exp() * 3.0 + 1.0)).collect();
        assert_eq!(fuse_rankings(&warped, &den, &rrf), base);

        let cfg = FusionConfig { alpha: rng.gen_range(0.0..=1.0), depth, ..Default::default() };
        assert_eq!(fuse_rankings(&lex, &den, &cfg), fuse_rankings(&lex, &den, &cfg));
    }
}

#[test]
fn metric_monotonicity_and_bounds() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..50 {
        let mut run = Run::new("s");
        let mut qrels = hyret_core::corpus::QrelSet::new();
        for q in 0..5 {
            let qid = format!("q{q}");
            run.insert(qid.clone(), random_ranking(&mut rng, 30, 20)).unwrap();
            for _ in 0..rng.gen_range(1..5) {
                qrels.insert(qid.clone(), format!("d{:03}", rng.gen_range(0..30)), 1);
            }
        }
        let ks: Vec<usize> = (1..=25).collect();
        let report = evaluate_run(&run, &qrels, &ks).unwrap();
        for (key, per) in &report.per_query {
            assert!(per.values().all(|v| (0.0..=1.0).contains(v)));
            let mean = per.values().sum::<f64>() / per.len() as f64;
            assert_eq!(report.aggregate[key], mean);
        }
        for m in [Metric::Recall, Metric::Accuracy, Metric::Mrr] {
            for q in qrels.query_ids() {
                for k in 1..25 {
                    assert!(report.per_query[&m.key(k + 1)][q] >= report.per_query[&m.key(k)][q]);
                }
            }
        }
    }
}

#[test]
fn permuting_below_last_hit_keeps_recall_accuracy_mrr() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for _ in 0..50 {
        let ranking = random_ranking(&mut rng, 30, 20);
        let mut qrels = hyret_core::corpus::QrelSet::new();
        for _ in 0..3 {
            qrels.insert("q", format!("d{:03}", rng.gen_range(0..30)), 1);
        }
        let k = 10;
        let last_hit = ranking[..k]
            .iter()
            .rposition(|d| qrels.is_relevant("q", &d.id))
            .map_or(0, |i| i + 1);
        let mut ids: Vec<String> = ranking.iter().map(|d| d.id.clone()).collect();
        ids[last_hit..k].reverse();
        let permuted: Vec<ScoredDoc> = ids
            .iter()
            .zip(&ranking)
            .map(|(id, d)| ScoredDoc::new(id.clone(), d.score))
            .collect();
        let mut a = Run::new("a");
        a.insert("q", ranking).unwrap();
        let mut b = Run::new("b");
        b.insert("q", permuted).unwrap();
        let ra = evaluate_run(&a, &qrels, &[k]).unwrap();
        let rb = evaluate_run(&b, &qrels, &[k]).unwrap();
        for m in [Metric::Recall, Metric::Accuracy, Metric::Mrr] {
            assert_eq!(ra.aggregate[&m.key(k)], rb.aggregate[&m.key(k)]);
        }
    }
}

#[test]
fn ideal_run_scores_one() {
    let mut qrels = hyret_core::corpus::QrelSet::new();
    let mut run = Run::new("ideal");
    for q in 0..4 {
        let qid = format!("q{q}");
        let rel: Vec<String> = (0..q + 1).map(|i| format!("{qid}-{i}")).collect();
        for d in &rel {
            qrels.insert(qid.clone(), d.clone(), 1);
        }
        run.insert_unsorted(qid, rel.into_iter().map(|d| (d, 1.0))).unwrap();
    }
    let report = evaluate_run(&run, &qrels, &[4, 10]).unwrap();
    for k in [4, 10] {
        for m in [Metric::Accuracy, Metric::Recall, Metric::Mrr, Metric::Ndcg] {
            assert_eq!(report.aggregate[&m.key(k)], 1.0, "{}", m.key(k));
        }
    }
}
