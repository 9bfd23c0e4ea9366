//! Deterministic bigram language model with add-one smoothing.
//!
//! Trained on the embedded seed corpus (one sentence per line). Small and
//! dependency-free; the topic shift mechanism layered on top is what makes
//! the generated text carry treatment and confounder signal.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::textgen::{tokenize, LanguageModel};

/// Seed corpus shipped with the crate: neutral economics-flavored sentences.
pub const BUILTIN_CORPUS: &str = include_str!("../../assets/seed_corpus.txt");

/// Bigram model with add-one smoothing over a fixed vocabulary.
///
/// `P(w | prev) = (count(prev, w) + 1) / (count(prev) + V)`. Contexts whose
/// last token is unknown (or an empty context) fall back to the smoothed
/// unigram distribution.
pub struct BigramLm<F> {
    vocab: Vec<String>,
    index: HashMap<String, usize>,
    rows: Vec<Vec<F>>,
    unigram: Vec<F>,
}

impl<F: Scalar> BigramLm<F> {
    /// Train on a corpus with one sentence per line. Bigrams do not cross
    /// line boundaries.
    pub fn from_corpus(text: &str) -> Result<Self> {
        let sentences: Vec<Vec<String>> = text.lines().map(tokenize).collect();
        let mut vocab: Vec<String> = sentences
            .iter()
            .flatten()
            .cloned()
            .collect::<std::collections::BTreeSet<_>>()
            .into_iter()
            .collect();
        vocab.sort();
        if vocab.is_empty() {
            return Err(Error::Config("seed corpus contains no tokens".into()));
        }
        let index: HashMap<String, usize> = vocab
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i))
            .collect();

        let v = vocab.len();
        let mut bigram_counts = vec![0u32; v * v];
        let mut prev_totals = vec![0u32; v];
        let mut unigram_counts = vec![0u32; v];
        let mut total_tokens = 0u64;
        for sentence in &sentences {
            for window in sentence.windows(2) {
                let a = index[&window[0]];
                let b = index[&window[1]];
                bigram_counts[a * v + b] += 1;
                prev_totals[a] += 1;
            }
            for tok in sentence {
                unigram_counts[index[tok]] += 1;
                total_tokens += 1;
            }
        }

        let rows = (0..v)
            .map(|a| {
                let denom = F::from_u32(prev_totals[a] + v as u32).unwrap();
                (0..v)
                    .map(|b| F::from_u32(bigram_counts[a * v + b] + 1).unwrap() / denom)
                    .collect()
            })
            .collect();
        let uni_denom = F::from_u64(total_tokens + v as u64).unwrap();
        let unigram = unigram_counts
            .iter()
            .map(|c| F::from_u32(c + 1).unwrap() / uni_denom)
            .collect();

        Ok(BigramLm {
            vocab,
            index,
            rows,
            unigram,
        })
    }

    /// Model trained on the embedded seed corpus.
    pub fn builtin() -> Self {
        Self::from_corpus(BUILTIN_CORPUS).expect("embedded corpus is non-empty")
    }
}

impl<F: Scalar> LanguageModel<F> for BigramLm<F> {
    fn vocab(&self) -> &[String] {
        &self.vocab
    }

    fn token_id(&self, token: &str) -> Option<usize> {
        self.index.get(token).copied()
    }

    fn next_token_distribution(&self, context: &[String]) -> Vec<F> {
        match context.last().and_then(|t| self.index.get(t)) {
            Some(&id) => self.rows[id].clone(),
            None => self.unigram.clone(),
        }
    }
}
