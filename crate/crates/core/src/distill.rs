//! Oracle distillation over documents, plus leakage and separability
//! diagnostics.
//!
//! Distillation operates at paragraph granularity because the simulator
//! imprints topics paragraph by paragraph; the oracle labels stored on each
//! paragraph make the perfect regime possible.

use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::textgen::{Document, Paragraph, TopicId, TopicRole};

/// The three idealized distillation scenarios.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DistillRegime {
    /// No distillation: the document passes through unchanged.
    Identity,
    /// Remove every treatment-sign paragraph, keeping confounder and
    /// general paragraphs.
    Perfect,
    /// Remove treatment and confounder paragraphs, keeping only general
    /// background.
    OverAggressive,
}

impl DistillRegime {
    pub const ALL: [DistillRegime; 3] = [
        DistillRegime::Identity,
        DistillRegime::Perfect,
        DistillRegime::OverAggressive,
    ];

    fn keeps(self, topic: TopicId) -> bool {
        match self {
            DistillRegime::Identity => true,
            DistillRegime::Perfect => topic.role() != TopicRole::Treat,
            DistillRegime::OverAggressive => topic.role() == TopicRole::General,
        }
    }
}

/// Apply a distillation regime, preserving paragraph order.
pub fn distill(doc: &Document, regime: DistillRegime) -> Document {
    Document {
        paragraphs: doc
            .paragraphs
            .iter()
            .filter(|p| regime.keeps(p.topic))
            .cloned()
            .collect(),
    }
}

/// Granularity at which the leakage fraction is measured.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Granularity {
    Token,
    Paragraph,
}

/// Fraction of the document affected by the treatment: treatment-paragraph
/// tokens over all tokens, or treatment paragraphs over all paragraphs.
pub fn leakage_fraction<F: Scalar>(doc: &Document, granularity: Granularity) -> Result<F> {
    let (treat, total) = match granularity {
        Granularity::Paragraph => {
            let treat = doc
                .paragraphs
                .iter()
                .filter(|p| p.topic.role() == TopicRole::Treat)
                .count();
            (treat, doc.paragraphs.len())
        }
        Granularity::Token => {
            let treat = doc
                .paragraphs
                .iter()
                .filter(|p| p.topic.role() == TopicRole::Treat)
                .map(Paragraph::token_count)
                .sum();
            (treat, doc.token_count())
        }
    };
    if total == 0 {
        return Err(Error::EmptyDocument);
    }
    Ok(F::from_usize(treat).unwrap() / F::from_usize(total).unwrap())
}

/// A paragraph from an externally annotated corpus, which may carry more
/// than one topic label.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AnnotatedParagraph {
    #[serde(with = "one_or_many")]
    pub topic: Vec<TopicId>,
    pub tokens: Vec<String>,
}

mod one_or_many {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    use crate::textgen::TopicId;

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        One(TopicId),
        Many(Vec<TopicId>),
    }

    pub fn serialize<S: Serializer>(topics: &[TopicId], ser: S) -> Result<S::Ok, S::Error> {
        if topics.len() == 1 {
            topics[0].serialize(ser)
        } else {
            topics.serialize(ser)
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(de: D) -> Result<Vec<TopicId>, D::Error> {
        Ok(match Repr::deserialize(de)? {
            Repr::One(t) => vec![t],
            Repr::Many(ts) => ts,
        })
    }
}

/// An externally ingested document with (possibly multi-label) annotations.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct AnnotatedDocument {
    pub paragraphs: Vec<AnnotatedParagraph>,
}

impl From<&Document> for AnnotatedDocument {
    fn from(doc: &Document) -> Self {
        AnnotatedDocument {
            paragraphs: doc
                .paragraphs
                .iter()
                .map(|p| AnnotatedParagraph {
                    topic: vec![p.topic],
                    tokens: p.tokens.clone(),
                })
                .collect(),
        }
    }
}

impl AnnotatedDocument {
    /// Convert to a simulator document. Requires exactly one label per
    /// paragraph.
    pub fn into_document(self) -> Result<Document> {
        let paragraphs = self
            .paragraphs
            .into_iter()
            .map(|p| {
                if p.topic.len() != 1 {
                    return Err(Error::Dataset(format!(
                        "paragraph carries {} topic labels, expected exactly 1",
                        p.topic.len()
                    )));
                }
                Ok(Paragraph {
                    topic: p.topic[0],
                    prompt_id: 0,
                    tokens: p.tokens,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Document { paragraphs })
    }
}

/// True iff no paragraph carries more than one topic role. Simulator
/// documents satisfy this by construction; the check exists to validate
/// externally annotated corpora.
pub fn check_separability(doc: &AnnotatedDocument) -> bool {
    doc.paragraphs.iter().all(|p| {
        let mut roles: Vec<TopicRole> = p.topic.iter().map(|t| t.role()).collect();
        roles.dedup();
        roles.sort_by_key(|r| match r {
            TopicRole::Treat => 0u8,
            TopicRole::Conf => 1,
            TopicRole::General => 2,
        });
        roles.dedup();
        roles.len() <= 1
    })
}

/// Read an annotated corpus: JSON-lines, one document per line, paragraphs
/// as arrays of `{topic, tokens}`.
pub fn read_annotated_jsonl(path: &Path) -> Result<Vec<AnnotatedDocument>> {
    let reader = BufReader::new(File::open(path)?);
    let mut docs = Vec::new();
    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let paragraphs: Vec<AnnotatedParagraph> = serde_json::from_str(&line)
            .map_err(|e| Error::Dataset(format!("line {}: {e}", lineno + 1)))?;
        docs.push(AnnotatedDocument { paragraphs });
    }
    Ok(docs)
}
