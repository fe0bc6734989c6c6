//! Synthetic FAQ evaluation sets: queries, their relevant answers and
//! distractors, built from disjoint regions of a generated Devanagari-like
//! vocabulary.
//!
//! Vocabulary layout (token indices):
//!
//! ```text
//! [ core | synonyms | answer filler | distractor ]
//! ```
//!
//! Every query owns `QUERY_LEN` core tokens that all of its relevant answers
//! contain. With `paraphrase_noise = p`, each query token is swapped for its
//! synonym with probability `p`; synonyms never occur in documents, so the
//! lexical side loses them, while the returned synonym table lets an embedder
//! fold them back onto the core token.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus::{build_eval_corpus, Corpus, Document, QrelSet, Query, QuerySet, DISTRACTOR_PREFIX};
use crate::{Error, Result};

/// Core tokens per query.
pub const QUERY_LEN: usize = 4;
/// Filler tokens added to each relevant answer.
pub const ANSWER_FILLER: usize = 6;
/// Distractor length range (inclusive).
pub const DISTRACTOR_LEN: (usize, usize) = (8, 14);
/// Number of distinct words [`vocabulary_word`] can produce.
pub const MAX_VOCABULARY: usize = 330 * 330 * 330;
/// Smallest filler / distractor vocabulary region accepted.
pub const MIN_REGION: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct SyntheticSpec {
    pub n_queries: usize,
    pub relevant_per_query: usize,
    pub n_distractors: usize,
    pub vocabulary_size: usize,
    pub paraphrase_noise: f64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        Self {
            n_queries: 82,
            relevant_per_query: 10,
            n_distractors: 2000,
            vocabulary_size: 5000,
            paraphrase_noise: 0.2,
        }
    }
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n_queries == 0 || self.relevant_per_query == 0 || self.vocabulary_size == 0 {
            return Err(Error::Config("synthetic counts must be positive".into()));
        }
        if !(0.0..=1.0).contains(&self.paraphrase_noise) {
            return Err(Error::Config(format!(
                "paraphrase_noise {} outside [0, 1]",
                self.paraphrase_noise
            )));
        }
        if self.vocabulary_size > MAX_VOCABULARY {
            return Err(Error::Config(format!(
                "vocabulary_size {} exceeds {MAX_VOCABULARY}",
                self.vocabulary_size
            )));
        }
        let required = self.required_vocabulary();
        if self.vocabulary_size < required {
            return Err(Error::VocabularyTooSmall {
                available: self.vocabulary_size,
                required,
            });
        }
        Ok(())
    }

    fn core_size(&self) -> usize {
        self.n_queries * QUERY_LEN
    }

    pub fn required_vocabulary(&self) -> usize {
        2 * self.core_size() + 2 * MIN_REGION
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticDataset {
    pub corpus: Corpus,
    pub queries: QuerySet,
    pub qrels: QrelSet,
    /// Synonym token -> core token it paraphrases.
    pub synonyms: BTreeMap<String, String>,
}

const CONSONANTS: [char; 33] = [
    'क', 'ख', 'ग', 'घ', 'ङ', 'च', 'छ', 'ज', 'झ', 'ञ', 'ट', 'ठ', 'ड', 'ढ', 'ण', 'त', 'थ', 'द',
    'ध', 'न', 'प', 'फ', 'ब', 'भ', 'म', 'य', 'र', 'ल', 'व', 'श', 'ष', 'स', 'ह',
];
const VOWEL_SIGNS: [Option<char>; 10] = [
    None,
    Some('ा'),
    Some('ि'),
    Some('ी'),
    Some('ु'),
    Some('ू'),
    Some('े'),
    Some('ै'),
    Some('ो'),
    Some('ौ'),
];

/// The `index`-th vocabulary word: three consonant+vowel-sign syllables
/// (a bijection on `0..330^3`), NFC-stable and a single token.
pub fn vocabulary_word(index: usize) -> String {
    let base = CONSONANTS.len() * VOWEL_SIGNS.len();
    let mut word = String::new();
    let mut rest = index;
    for _ in 0..3 {
        let syllable = rest % base;
        rest /= base;
        word.push(CONSONANTS[syllable / VOWEL_SIGNS.len()]);
        if let Some(v) = VOWEL_SIGNS[syllable % VOWEL_SIGNS.len()] {
            word.push(v);
        }
    }
    debug_assert_eq!(rest, 0, "vocabulary index out of range");
    word
}

pub fn generate_synthetic_dataset(spec: &SyntheticSpec, seed: u64) -> Result<SyntheticDataset> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let core = spec.core_size();
    let free = spec.vocabulary_size - 2 * core;
    let filler_size = free / 2;
    let filler_start = 2 * core;
    let distractor_start = filler_start + filler_size;
    let distractor_end = spec.vocabulary_size;

    let mut core_tokens: Vec<usize> = (0..core).collect();
    core_tokens.shuffle(&mut rng);
    let synonym_of = |t: usize| t + core;

    let mut synonyms = BTreeMap::new();
    for t in 0..core {
        synonyms.insert(vocabulary_word(synonym_of(t)), vocabulary_word(t));
    }

    let mut queries = Vec::with_capacity(spec.n_queries);
    let mut relevant = Vec::with_capacity(spec.n_queries * spec.relevant_per_query);
    let mut qrels = QrelSet::new();
    let width = digits(spec.n_queries);
    let rel_width = digits(spec.relevant_per_query);

    for (qi, own) in core_tokens.chunks(QUERY_LEN).enumerate() {
        let qid = format!("q{:0width$}", qi + 1);
        let query_words: Vec<String> = own
            .iter()
            .map(|&t| {
                if rng.gen_bool(spec.paraphrase_noise) {
                    vocabulary_word(synonym_of(t))
                } else {
                    vocabulary_word(t)
                }
            })
            .collect();
        queries.push(Query::new(qid.clone(), format!("{} ?", query_words.join(" "))));

        for ai in 0..spec.relevant_per_query {
            let mut tokens: Vec<usize> = own.to_vec();
            tokens.extend((0..ANSWER_FILLER).map(|_| rng.gen_range(filler_start..distractor_start)));
            tokens.shuffle(&mut rng);
            let did = format!("{qid}-a{:0rel_width$}", ai + 1);
            relevant.push(Document::new(did.clone(), sentence(&tokens)));
            qrels.insert(qid.clone(), did, 1);
        }
    }

    let dwidth = digits(spec.n_distractors.max(1));
    let distractors = (0..spec.n_distractors).map(|i| {
        let len = rng.gen_range(DISTRACTOR_LEN.0..=DISTRACTOR_LEN.1);
        let tokens: Vec<usize> = (0..len)
            .map(|_| rng.gen_range(distractor_start..distractor_end))
            .collect();
        Document::new(format!("{:0dwidth$}", i + 1), sentence(&tokens))
    });

    let relevant = Corpus::from_documents(relevant)?;
    let distractors = Corpus::from_documents(distractors.collect::<Vec<_>>())?;
    let corpus = build_eval_corpus(&relevant, &distractors, Some(DISTRACTOR_PREFIX))?;
    Ok(SyntheticDataset {
        corpus,
        queries: QuerySet::from_queries(queries)?,
        qrels,
        synonyms,
    })
}

fn sentence(tokens: &[usize]) -> String {
    let words: Vec<String> = tokens.iter().map(|&t| vocabulary_word(t)).collect();
    format!("{}।", words.join(" "))
}

fn digits(n: usize) -> usize {
    let mut d = 1;
    let mut n = n / 10;
    while n > 0 {
        d += 1;
        n /= 10;
    }
    d
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::text::{analyze, normalize, tokenize, NormalizationConfig};
    use alloc::collections::BTreeSet;

    #[test]
    fn words_are_unique_single_tokens() {
        let mut seen = BTreeSet::new();
        for i in (0..5000).chain([35_936_999]) {
            let w = vocabulary_word(i);
            assert_eq!(normalize(&w, &NormalizationConfig::default()), w);
            assert_eq!(tokenize(&w).into_vec(), core::slice::from_ref(&w));
            assert!(seen.insert(w));
        }
    }

    #[test]
    fn table_shaped_counts() {
        let spec = SyntheticSpec {
            n_queries: 82,
            relevant_per_query: 10,
            n_distractors: 2000,
            vocabulary_size: 5000,
            paraphrase_noise: 0.2,
        };
        let data = generate_synthetic_dataset(&spec, 1).unwrap();
        assert_eq!(data.queries.len(), 82);
        assert_eq!(data.qrels.num_judgments(), 820);
        assert_eq!(data.corpus.len(), 2820);
        assert_eq!(data.qrels.avg_relevant_per_query(), 10.0);
    }

    #[test]
    fn noise_free_queries_are_contained_in_answers() {
        let spec = SyntheticSpec {
            n_queries: 12,
            relevant_per_query: 3,
            n_distractors: 50,
            vocabulary_size: 400,
            paraphrase_noise: 0.0,
        };
        let data = generate_synthetic_dataset(&spec, 9).unwrap();
        for q in data.queries.queries() {
            let qt: BTreeSet<String> = analyze(&q.text).into_iter().collect();
            assert_eq!(qt.len(), QUERY_LEN);
            for doc in data.qrels.relevant(&q.id).unwrap().keys() {
                let dt: BTreeSet<String> =
                    analyze(&data.corpus.get(doc).unwrap().text).into_iter().collect();
                assert!(qt.is_subset(&dt));
            }
        }
    }

    #[test]
    fn full_noise_uses_only_synonyms() {
        let spec = SyntheticSpec {
            n_queries: 5,
            relevant_per_query: 2,
            n_distractors: 10,
            vocabulary_size: 200,
            paraphrase_noise: 1.0,
        };
        let data = generate_synthetic_dataset(&spec, 3).unwrap();
        for q in data.queries.queries() {
            assert!(analyze(&q.text).iter().all(|t| data.synonyms.contains_key(t)));
        }
    }

    #[test]
    fn deterministic_in_seed() {
        let spec = SyntheticSpec {
            n_queries: 6,
            relevant_per_query: 2,
            n_distractors: 20,
            vocabulary_size: 300,
            paraphrase_noise: 0.5,
        };
        assert_eq!(
            generate_synthetic_dataset(&spec, 4).unwrap(),
            generate_synthetic_dataset(&spec, 4).unwrap()
        );
        assert_ne!(
            generate_synthetic_dataset(&spec, 4).unwrap().corpus,
            generate_synthetic_dataset(&spec, 5).unwrap().corpus
        );
    }

    #[test]
    fn vocabulary_too_small() {
        let spec = SyntheticSpec {
            n_queries: 82,
            relevant_per_query: 10,
            n_distractors: 10,
            vocabulary_size: 500,
            paraphrase_noise: 0.0,
        };
        assert!(matches!(
            generate_synthetic_dataset(&spec, 0),
            Err(Error::VocabularyTooSmall { .. })
        ));
    }
}
