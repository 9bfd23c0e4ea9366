//! Document generation: paragraph topic assignment, prompt selection, and
//! token sampling from a base language model under a topic-specific
//! vocabulary distribution shift.

mod bigram;

pub use bigram::BigramLm;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::dgp::Unit;
use crate::error::{Error, Result};
use crate::rng::{substream, DOMAIN_UNIT_TEXT};
use crate::scalar::Scalar;

/// Paragraph topic label. Two topics track the treatment sign, two track the
/// unobserved confounder sign, and one is general background.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TopicId {
    TreatPos,
    TreatNeg,
    ConfPos,
    ConfNeg,
    General,
}

/// What a topic is about, ignoring sign.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TopicRole {
    Treat,
    Conf,
    General,
}

impl TopicId {
    pub const ALL: [TopicId; 5] = [
        TopicId::TreatPos,
        TopicId::TreatNeg,
        TopicId::ConfPos,
        TopicId::ConfNeg,
        TopicId::General,
    ];

    pub fn role(self) -> TopicRole {
        match self {
            TopicId::TreatPos | TopicId::TreatNeg => TopicRole::Treat,
            TopicId::ConfPos | TopicId::ConfNeg => TopicRole::Conf,
            TopicId::General => TopicRole::General,
        }
    }
}

/// One paragraph: the oracle topic label, which prompt started it, and the
/// token sequence (prompt tokens first, then generated continuation).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Paragraph {
    pub topic: TopicId,
    pub prompt_id: u32,
    pub tokens: Vec<String>,
}

impl Paragraph {
    pub fn token_count(&self) -> usize {
        self.tokens.len()
    }
}

/// A document: an ordered list of labelled paragraphs.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Document {
    pub paragraphs: Vec<Paragraph>,
}

impl Document {
    pub fn tokens(&self) -> impl Iterator<Item = &str> {
        self.paragraphs
            .iter()
            .flat_map(|p| p.tokens.iter().map(String::as_str))
    }

    pub fn token_count(&self) -> usize {
        self.paragraphs.iter().map(Paragraph::token_count).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.paragraphs.is_empty()
    }
}

/// Whitespace tokenization, lowercased, punctuation stripped except
/// apostrophes. Tokens that strip to nothing are dropped.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split_whitespace()
        .filter_map(|raw| {
            let tok: String = raw
                .chars()
                .filter(|c| c.is_alphanumeric() || *c == '\'')
                .flat_map(char::to_lowercase)
                .collect();
            if tok.is_empty() {
                None
            } else {
                Some(tok)
            }
        })
        .collect()
}

/// A base language model over a fixed vocabulary. Implementations must be
/// shareable read-only across parallel workers once constructed.
pub trait LanguageModel<F: Scalar>: Send + Sync {
    /// Ordered vocabulary.
    fn vocab(&self) -> &[String];

    /// Index of a token in the vocabulary, if present.
    fn token_id(&self, token: &str) -> Option<usize>;

    /// Distribution over the vocabulary for the next token given the context
    /// so far. Must be non-negative and sum to 1 within 1e-9.
    fn next_token_distribution(&self, context: &[String]) -> Vec<F>;
}

/// One topic's generation parameters: prompt templates (with `[COUNTRY]`
/// placeholders), shift keywords, and the log shift strength.
#[derive(Debug, Clone)]
pub struct Topic {
    pub id: TopicId,
    pub prompts: Vec<String>,
    pub keywords: Vec<String>,
    pub log_shift: f64,
}

/// The five topics of a simulation.
#[derive(Debug, Clone)]
pub struct TopicSet {
    pub treat_pos: Topic,
    pub treat_neg: Topic,
    pub conf_pos: Topic,
    pub conf_neg: Topic,
    pub general: Topic,
}

impl TopicSet {
    pub fn topic(&self, id: TopicId) -> &Topic {
        match id {
            TopicId::TreatPos => &self.treat_pos,
            TopicId::TreatNeg => &self.treat_neg,
            TopicId::ConfPos => &self.conf_pos,
            TopicId::ConfNeg => &self.conf_neg,
            TopicId::General => &self.general,
        }
    }
}

/// Paragraph topic mixture: probability of drawing the confounder-sign
/// topic, the treatment-sign topic, and the general topic.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TopicMixture {
    pub u_topic: f64,
    pub t_topic: f64,
    pub general: f64,
}

impl Default for TopicMixture {
    fn default() -> Self {
        TopicMixture {
            u_topic: 0.2,
            t_topic: 0.2,
            general: 0.6,
        }
    }
}

impl TopicMixture {
    pub fn validate(&self) -> Result<()> {
        let parts = [self.u_topic, self.t_topic, self.general];
        if parts.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return Err(Error::Config(
                "topic_mixture: probabilities must be finite and non-negative".into(),
            ));
        }
        let sum: f64 = parts.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::Config(format!(
                "topic_mixture: probabilities sum to {sum}, expected 1"
            )));
        }
        Ok(())
    }
}

/// Draw a paragraph topic for a unit with confounder `u` and treatment `t`.
/// The sign topics always match the unit's own values.
pub fn assign_topic<R: Rng + ?Sized>(
    u: u8,
    t: u8,
    mix: &TopicMixture,
    rng: &mut R,
) -> Result<TopicId> {
    mix.validate()?;
    let r: f64 = rng.gen();
    if r < mix.u_topic {
        Ok(if u == 1 { TopicId::ConfPos } else { TopicId::ConfNeg })
    } else if r < mix.u_topic + mix.t_topic {
        Ok(if t == 1 { TopicId::TreatPos } else { TopicId::TreatNeg })
    } else {
        Ok(TopicId::General)
    }
}

/// Placeholder replaced by a country name in prompt templates.
pub const COUNTRY_PLACEHOLDER: &str = "[COUNTRY]";

/// Pick one of the topic's prompts uniformly at random and substitute every
/// `[COUNTRY]` placeholder with an independently sampled country name.
/// Returns the prompt index and the tokenized prompt.
pub fn select_prompt<R: Rng + ?Sized>(
    topic: &Topic,
    country_pool: &[String],
    rng: &mut R,
) -> Result<(u32, Vec<String>)> {
    if topic.prompts.is_empty() {
        return Err(Error::Config(format!(
            "topic {:?} has no prompts",
            topic.id
        )));
    }
    let prompt_id = rng.gen_range(0..topic.prompts.len());
    let mut text = topic.prompts[prompt_id].clone();
    while let Some(pos) = text.find(COUNTRY_PLACEHOLDER) {
        if country_pool.is_empty() {
            return Err(Error::Config(
                "prompt contains [COUNTRY] but the country pool is empty".into(),
            ));
        }
        let name = &country_pool[rng.gen_range(0..country_pool.len())];
        text.replace_range(pos..pos + COUNTRY_PLACEHOLDER.len(), name);
    }
    Ok((prompt_id as u32, tokenize(&text)))
}

/// A topic's distribution shift resolved against a vocabulary: the indices
/// of its keywords and the multiplicative scale factor `exp(log_shift)`.
#[derive(Debug, Clone)]
pub struct TopicShift<F> {
    keyword_ids: Vec<usize>,
    factor: F,
}

impl<F: Scalar> TopicShift<F> {
    /// Resolve a topic's keywords against a language model's vocabulary.
    /// Every keyword must be a vocabulary member.
    pub fn resolve(topic: &Topic, lm: &dyn LanguageModel<F>) -> Result<Self> {
        let mut keyword_ids = Vec::with_capacity(topic.keywords.len());
        for kw in &topic.keywords {
            let id = lm.token_id(kw).ok_or_else(|| {
                Error::Config(format!(
                    "keyword `{kw}` of topic {:?} is not in the language model vocabulary",
                    topic.id
                ))
            })?;
            keyword_ids.push(id);
        }
        Ok(TopicShift {
            keyword_ids,
            factor: F::from_f64c(topic.log_shift).exp(),
        })
    }

    /// Identity shift (used by the general topic).
    pub fn identity() -> Self {
        TopicShift {
            keyword_ids: Vec::new(),
            factor: F::one(),
        }
    }

    pub fn is_identity(&self) -> bool {
        self.keyword_ids.is_empty() || self.factor == F::one()
    }
}

/// Multiply keyword entries of a base distribution by the shift factor and
/// renormalize. The identity shift returns the input unchanged.
pub fn shifted_distribution<F: Scalar>(base: &[F], shift: &TopicShift<F>) -> Result<Vec<F>> {
    let mut out = base.to_vec();
    if !shift.is_identity() {
        for &id in &shift.keyword_ids {
            out[id] = out[id] * shift.factor;
        }
    }
    let total: F = out.iter().copied().sum();
    if total <= F::zero() {
        return Err(Error::DegenerateDistribution);
    }
    if !shift.is_identity() {
        for v in &mut out {
            *v = *v / total;
        }
    }
    Ok(out)
}

/// Sample an index from a normalized distribution by inverse CDF.
fn sample_categorical<F: Scalar, R: Rng + ?Sized>(probs: &[F], rng: &mut R) -> usize {
    let u = F::unit_uniform(rng);
    let mut cum = F::zero();
    let mut last_positive = 0;
    for (i, &p) in probs.iter().enumerate() {
        if p > F::zero() {
            last_positive = i;
        }
        cum = cum + p;
        if u < cum {
            return i;
        }
    }
    // Rounding pushed the CDF just below 1; fall back to the last token with
    // positive mass.
    last_positive
}

/// Everything needed to generate documents for units: the language model,
/// resolved topic shifts, and the paragraph-level configuration.
pub struct DocumentGenerator<'a, F: Scalar> {
    lm: &'a dyn LanguageModel<F>,
    topics: &'a TopicSet,
    shifts: [TopicShift<F>; 5],
    mixture: TopicMixture,
    country_pool: &'a [String],
    paragraphs_per_document: usize,
    paragraph_length: usize,
}

impl<'a, F: Scalar> DocumentGenerator<'a, F> {
    pub fn new(
        lm: &'a dyn LanguageModel<F>,
        topics: &'a TopicSet,
        mixture: TopicMixture,
        country_pool: &'a [String],
        paragraphs_per_document: usize,
        paragraph_length: usize,
    ) -> Result<Self> {
        mixture.validate()?;
        if paragraphs_per_document == 0 {
            return Err(Error::Config("k: must be at least 1".into()));
        }
        let resolve = |id: TopicId| -> Result<TopicShift<F>> {
            let topic = topics.topic(id);
            if topic.log_shift == 0.0 || topic.keywords.is_empty() {
                Ok(TopicShift::identity())
            } else {
                TopicShift::resolve(topic, lm)
            }
        };
        let shifts = [
            resolve(TopicId::TreatPos)?,
            resolve(TopicId::TreatNeg)?,
            resolve(TopicId::ConfPos)?,
            resolve(TopicId::ConfNeg)?,
            resolve(TopicId::General)?,
        ];
        Ok(DocumentGenerator {
            lm,
            topics,
            shifts,
            mixture,
            country_pool,
            paragraphs_per_document,
            paragraph_length,
        })
    }

    fn shift(&self, id: TopicId) -> &TopicShift<F> {
        let idx = TopicId::ALL.iter().position(|t| *t == id).unwrap();
        &self.shifts[idx]
    }

    /// Generate one paragraph of the given topic: choose a prompt, then
    /// sample `paragraph_length` continuation tokens under the topic shift.
    pub fn generate_paragraph<R: Rng + ?Sized>(
        &self,
        topic_id: TopicId,
        rng: &mut R,
    ) -> Result<Paragraph> {
        let topic = self.topics.topic(topic_id);
        let (prompt_id, prompt_tokens) = select_prompt(topic, self.country_pool, rng)?;
        generate_paragraph(
            self.lm,
            topic_id,
            self.shift(topic_id),
            prompt_id,
            prompt_tokens,
            self.paragraph_length,
            rng,
        )
    }

    /// Generate a whole document for a unit with confounder `u` and
    /// treatment `t`.
    pub fn generate_document<R: Rng + ?Sized>(
        &self,
        u: u8,
        t: u8,
        rng: &mut R,
    ) -> Result<Document> {
        let mut paragraphs = Vec::with_capacity(self.paragraphs_per_document);
        for _ in 0..self.paragraphs_per_document {
            let topic_id = assign_topic(u, t, &self.mixture, rng)?;
            paragraphs.push(self.generate_paragraph(topic_id, rng)?);
        }
        Ok(Document { paragraphs })
    }
}

/// Sample a paragraph continuation from the shifted next-token distribution.
pub fn generate_paragraph<F: Scalar, R: Rng + ?Sized>(
    lm: &dyn LanguageModel<F>,
    topic_id: TopicId,
    shift: &TopicShift<F>,
    prompt_id: u32,
    prompt_tokens: Vec<String>,
    length: usize,
    rng: &mut R,
) -> Result<Paragraph> {
    let vocab = lm.vocab();
    let mut tokens = prompt_tokens;
    for _ in 0..length {
        let base = lm.next_token_distribution(&tokens);
        let dist = shifted_distribution(&base, shift)?;
        let id = sample_categorical(&dist, rng);
        tokens.push(vocab[id].clone());
    }
    Ok(Paragraph {
        topic: topic_id,
        prompt_id,
        tokens,
    })
}

/// Fill in the documents of already-drawn units. Each unit uses its own
/// substream keyed by unit id, so the result does not depend on worker
/// count or evaluation order.
pub fn attach_documents<F: Scalar>(
    units: &mut [Unit<F>],
    generator: &DocumentGenerator<'_, F>,
    master_seed: u64,
) -> Result<()> {
    use rayon::prelude::*;
    units
        .par_iter_mut()
        .try_for_each(|unit| -> Result<()> {
            let mut rng = substream(master_seed, DOMAIN_UNIT_TEXT, unit.id);
            unit.document = generator.generate_document(unit.u, unit.t, &mut rng)?;
            Ok(())
        })
}
