//! Estimation design matrix: standardized numeric covariates concatenated
//! with an L2-normalized TF-IDF representation of the (possibly distilled)
//! document.
//!
//! TF is the raw count; IDF is the smoothed `ln((1+N)/(1+df))`, which keeps
//! weights finite for terms that vanish after distillation. The vocabulary
//! is rebuilt per distillation regime, mirroring what an analyst who only
//! has the distilled corpus could do.

use std::collections::HashMap;
use std::io::Write;

use rayon::prelude::*;

use crate::dgp::Unit;
use crate::distill::{distill, DistillRegime};
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::scalar::Scalar;
use crate::textgen::{Document, TopicRole};

/// Term vocabulary: the most frequent corpus terms with their document
/// frequencies.
#[derive(Debug, Clone)]
pub struct Vocabulary {
    /// Terms sorted by descending corpus frequency, ties broken
    /// lexicographically.
    pub terms: Vec<String>,
    /// Number of documents containing each term, aligned with `terms`.
    pub document_frequencies: Vec<usize>,
    /// Number of documents the vocabulary was built from.
    pub corpus_size: usize,
    index: HashMap<String, usize>,
}

impl Vocabulary {
    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn term_index(&self, term: &str) -> Option<usize> {
        self.index.get(term).copied()
    }

    /// Smoothed inverse document frequency of term `j`.
    pub fn idf<F: Scalar>(&self, j: usize) -> F {
        let n = F::from_usize(1 + self.corpus_size).unwrap();
        let df = F::from_usize(1 + self.document_frequencies[j]).unwrap();
        (n / df).ln()
    }
}

/// Term counts of one (already distilled) document, with instrumentation
/// tallies used to verify that distilled pipelines never touch
/// treatment-paragraph tokens.
#[derive(Debug, Clone, Default)]
pub struct DocTermCounts {
    pub counts: HashMap<String, u32>,
    pub total_tokens: u32,
    pub treat_tokens_read: u32,
}

/// Count the terms of a document. Every token of the document is read here,
/// so the treatment-token tally reflects exactly what the feature pipeline
/// consumed.
pub fn count_terms(doc: &Document) -> DocTermCounts {
    let mut out = DocTermCounts::default();
    for paragraph in &doc.paragraphs {
        let is_treat = paragraph.topic.role() == TopicRole::Treat;
        for token in &paragraph.tokens {
            *out.counts.entry(token.clone()).or_insert(0) += 1;
            out.total_tokens += 1;
            if is_treat {
                out.treat_tokens_read += 1;
            }
        }
    }
    out
}

/// Build the vocabulary over per-document term counts. `multiplicity` gives
/// the weight of each document (bootstrap resamples pass counts > 1).
pub fn build_vocabulary_from_counts<'a, I>(doc_counts: I, max_terms: usize) -> Result<Vocabulary>
where
    I: IntoIterator<Item = (&'a DocTermCounts, usize)>,
{
    let mut corpus_size = 0usize;
    let mut totals: HashMap<&'a str, (u64, usize)> = HashMap::new();
    for (doc, multiplicity) in doc_counts {
        if multiplicity == 0 {
            continue;
        }
        corpus_size += multiplicity;
        for (term, count) in &doc.counts {
            let entry = totals.entry(term.as_str()).or_insert((0, 0));
            entry.0 += u64::from(*count) * multiplicity as u64;
            entry.1 += multiplicity;
        }
    }
    if corpus_size == 0 {
        return Err(Error::InvalidArgument("corpus is empty".into()));
    }

    let mut ranked: Vec<(&str, u64, usize)> = totals
        .into_iter()
        .map(|(term, (freq, df))| (term, freq, df))
        .collect();
    ranked.sort_unstable_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    ranked.truncate(max_terms);

    let terms: Vec<String> = ranked.iter().map(|(t, _, _)| t.to_string()).collect();
    let document_frequencies: Vec<usize> = ranked.iter().map(|(_, _, df)| *df).collect();
    let index = terms
        .iter()
        .enumerate()
        .map(|(i, t)| (t.clone(), i))
        .collect();
    Ok(Vocabulary {
        terms,
        document_frequencies,
        corpus_size,
        index,
    })
}

/// Build the vocabulary of the `max_terms` most frequent terms in a corpus.
pub fn build_vocabulary(corpus: &[Document], max_terms: usize) -> Result<Vocabulary> {
    let counts: Vec<DocTermCounts> = corpus.par_iter().map(count_terms).collect();
    build_vocabulary_from_counts(counts.iter().map(|c| (c, 1)), max_terms)
}

/// L2-normalized TF-IDF vector of pre-computed document counts.
pub fn tfidf_from_counts<F: Scalar>(counts: &DocTermCounts, vocab: &Vocabulary) -> Vec<F> {
    let mut vec = vec![F::zero(); vocab.len()];
    for (term, count) in &counts.counts {
        if let Some(j) = vocab.term_index(term) {
            vec[j] = F::from_u32(*count).unwrap() * vocab.idf::<F>(j);
        }
    }
    let norm: F = vec.iter().map(|v| *v * *v).sum::<F>().sqrt();
    if norm > F::zero() {
        for v in &mut vec {
            *v = *v / norm;
        }
    }
    vec
}

/// L2-normalized TF-IDF vector of a document. Out-of-vocabulary tokens are
/// dropped; an all-zero vector (e.g. a fully distilled document) is
/// returned unchanged.
pub fn tfidf_vector<F: Scalar>(doc: &Document, vocab: &Vocabulary) -> Vec<F> {
    tfidf_from_counts(&count_terms(doc), vocab)
}

/// Per-column standardization summary.
#[derive(Debug, Clone)]
pub struct Standardization<F> {
    pub means: Vec<F>,
    pub sds: Vec<F>,
}

/// Z-score each column in place using the sample (n-1) standard deviation.
/// Constant columns map to all zeros with a recorded sd of 0.
pub fn standardize<F: Scalar>(columns: &mut [Vec<F>]) -> Result<Standardization<F>> {
    let rows = columns.first().map(Vec::len).unwrap_or(0);
    if rows < 2 {
        return Err(Error::InvalidArgument(
            "standardize requires at least 2 rows".into(),
        ));
    }
    let n = F::from_usize(rows).unwrap();
    let mut means = Vec::with_capacity(columns.len());
    let mut sds = Vec::with_capacity(columns.len());
    for col in columns.iter_mut() {
        let mean = col.iter().copied().sum::<F>() / n;
        let ss = col
            .iter()
            .map(|v| (*v - mean) * (*v - mean))
            .sum::<F>();
        let sd = (ss / (n - F::one())).sqrt();
        if sd > F::zero() {
            for v in col.iter_mut() {
                *v = (*v - mean) / sd;
            }
        } else {
            for v in col.iter_mut() {
                *v = F::zero();
            }
        }
        means.push(mean);
        sds.push(sd);
    }
    Ok(Standardization { means, sds })
}

/// Design matrix: standardized covariates then TF-IDF columns.
#[derive(Debug, Clone)]
pub struct FeatureMatrix<F> {
    pub column_names: Vec<String>,
    pub n_numeric: usize,
    pub standardization: Standardization<F>,
    /// Total treatment-paragraph tokens the text pipeline read while
    /// vectorizing; 0 under perfect distillation.
    pub treat_tokens_read: u64,
    matrix: Matrix<F>,
}

impl<F: Scalar> FeatureMatrix<F> {
    /// Assemble from pre-built parts. The matrix width must match the
    /// column names.
    pub fn from_parts(
        column_names: Vec<String>,
        n_numeric: usize,
        standardization: Standardization<F>,
        matrix: Matrix<F>,
    ) -> Self {
        assert_eq!(column_names.len(), matrix.cols());
        FeatureMatrix {
            column_names,
            n_numeric,
            standardization,
            treat_tokens_read: 0,
            matrix,
        }
    }

    pub fn rows(&self) -> usize {
        self.matrix.rows()
    }

    pub fn cols(&self) -> usize {
        self.matrix.cols()
    }

    pub fn matrix(&self) -> &Matrix<F> {
        &self.matrix
    }

    /// CSV export with a header row; numbers carry 17 significant digits.
    pub fn to_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "{}", self.column_names.join(","))?;
        for r in 0..self.rows() {
            let row: Vec<String> = (0..self.cols())
                .map(|c| crate::harness::fmt_g17(self.matrix.get(r, c).to_f64c()))
                .collect();
            writeln!(w, "{}", row.join(","))?;
        }
        Ok(())
    }
}

/// Assemble the design matrix from covariate rows and per-document counts,
/// which must already match the vocabulary's distillation regime.
pub fn assemble_from_counts<F: Scalar>(
    x_rows: &[[F; 3]],
    doc_counts: &[&DocTermCounts],
    vocab: &Vocabulary,
) -> Result<FeatureMatrix<F>> {
    if x_rows.len() != doc_counts.len() {
        return Err(Error::InvalidArgument(format!(
            "{} covariate rows vs {} documents",
            x_rows.len(),
            doc_counts.len()
        )));
    }
    let n = x_rows.len();
    let mut numeric: Vec<Vec<F>> = (0..3)
        .map(|k| x_rows.iter().map(|x| x[k]).collect())
        .collect();
    let standardization = standardize(&mut numeric)?;

    let text_rows: Vec<Vec<F>> = doc_counts
        .par_iter()
        .map(|counts| tfidf_from_counts(counts, vocab))
        .collect();
    let treat_tokens_read = doc_counts
        .iter()
        .map(|c| u64::from(c.treat_tokens_read))
        .sum();

    let mut matrix = Matrix::zeros(n, 3 + vocab.len());
    for (k, col) in numeric.into_iter().enumerate() {
        matrix.column_mut(k).copy_from_slice(&col);
    }
    for (r, row) in text_rows.iter().enumerate() {
        for (j, v) in row.iter().enumerate() {
            matrix.set(r, 3 + j, *v);
        }
    }

    let mut column_names = vec!["x1".to_string(), "x2".to_string(), "x3".to_string()];
    column_names.extend(vocab.terms.iter().map(|t| format!("t:{t}")));

    Ok(FeatureMatrix {
        column_names,
        n_numeric: 3,
        standardization,
        treat_tokens_read,
        matrix,
    })
}

/// Distill every unit's document under `regime` and assemble the design
/// matrix against a vocabulary built for the same regime. Row order matches
/// unit order.
pub fn assemble<F: Scalar>(
    units: &[Unit<F>],
    regime: DistillRegime,
    vocab: &Vocabulary,
) -> Result<FeatureMatrix<F>> {
    let counts: Vec<DocTermCounts> = units
        .par_iter()
        .map(|u| count_terms(&distill(&u.document, regime)))
        .collect();
    let x_rows: Vec<[F; 3]> = units.iter().map(|u| u.x).collect();
    let refs: Vec<&DocTermCounts> = counts.iter().collect();
    assemble_from_counts(&x_rows, &refs, vocab)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::textgen::{Paragraph, TopicId};

    fn doc_of(tokens: &[&str]) -> Document {
        Document {
            paragraphs: vec![Paragraph {
                topic: TopicId::General,
                prompt_id: 0,
                tokens: tokens.iter().map(|t| t.to_string()).collect(),
            }],
        }
    }

    #[test]
    fn small_corpus_vocabulary_keeps_all_terms() {
        let corpus = vec![doc_of(&["a", "b", "a"]), doc_of(&["c", "a"])];
        let vocab = build_vocabulary(&corpus, 256).unwrap();
        assert_eq!(vocab.len(), 3);
        assert_eq!(vocab.terms[0], "a");
        assert_eq!(vocab.corpus_size, 2);
        assert_eq!(
            vocab.document_frequencies[vocab.term_index("a").unwrap()],
            2
        );
    }

    #[test]
    fn frequency_ties_break_lexicographically() {
        let corpus = vec![doc_of(&["zebra", "apple"]), doc_of(&["zebra", "apple"])];
        let vocab = build_vocabulary(&corpus, 1).unwrap();
        assert_eq!(vocab.terms, vec!["apple"]);
    }

    #[test]
    fn vocabulary_truncates_to_max_terms() {
        let corpus = vec![doc_of(&["a", "a", "a", "b", "b", "c"])];
        let vocab = build_vocabulary(&corpus, 2).unwrap();
        assert_eq!(vocab.terms, vec!["a", "b"]);
    }

    #[test]
    fn empty_corpus_is_an_error() {
        assert!(build_vocabulary(&[], 256).is_err());
    }

    #[test]
    fn tfidf_of_empty_document_is_zero() {
        let corpus = vec![doc_of(&["a", "b"])];
        let vocab = build_vocabulary(&corpus, 256).unwrap();
        let v: Vec<f64> = tfidf_vector(&Document::default(), &vocab);
        assert!(v.iter().all(|x| *x == 0.0));
    }

    #[test]
    fn single_document_corpus_has_zero_idf() {
        // idf = ln((1+1)/(1+1)) = 0, so the vector collapses to zero.
        let corpus = vec![doc_of(&["term"])];
        let vocab = build_vocabulary(&corpus, 256).unwrap();
        let v: Vec<f64> = tfidf_vector(&corpus[0], &vocab);
        assert_eq!(v, vec![0.0]);
    }

    #[test]
    fn tfidf_normalizes_a_single_direction() {
        // Two-term vocabulary with equal idf; counts (2, 0) normalize to
        // (1, 0).
        let corpus = vec![
            doc_of(&["a", "a", "b"]),
            doc_of(&["c"]),
            doc_of(&["c", "b", "a"]),
        ];
        let vocab = build_vocabulary(&corpus, 256).unwrap();
        let d = doc_of(&["a", "a"]);
        let v: Vec<f64> = tfidf_vector(&d, &vocab);
        let ja = vocab.term_index("a").unwrap();
        assert!((v[ja] - 1.0).abs() < 1e-12);
        assert!(v
            .iter()
            .enumerate()
            .all(|(j, x)| j == ja || *x == 0.0));
    }

    #[test]
    fn standardize_matches_two_point_zscores() {
        let mut cols = vec![vec![1.0, 3.0]];
        let info = standardize(&mut cols).unwrap();
        let r2 = std::f64::consts::FRAC_1_SQRT_2;
        assert!((cols[0][0] + r2).abs() < 1e-12);
        assert!((cols[0][1] - r2).abs() < 1e-12);
        assert_eq!(info.means[0], 2.0);
    }

    #[test]
    fn standardize_constant_column_is_zeroed() {
        let mut cols = vec![vec![5.0, 5.0, 5.0]];
        let info = standardize(&mut cols).unwrap();
        assert_eq!(cols[0], vec![0.0, 0.0, 0.0]);
        assert_eq!(info.sds[0], 0.0);
    }

    #[test]
    fn standardize_requires_two_rows() {
        assert!(standardize(&mut [vec![1.0f64]]).is_err());
    }

    #[test]
    fn standardized_columns_have_unit_moments() {
        let mut rng = crate::rng::substream(1, 6, 0);
        let col: Vec<f64> = (0..500)
            .map(|_| crate::scalar::Scalar::standard_normal(&mut rng))
            .collect();
        let mut cols = vec![col];
        standardize(&mut cols).unwrap();
        let n = cols[0].len() as f64;
        let mean: f64 = cols[0].iter().sum::<f64>() / n;
        let var: f64 = cols[0].iter().map(|v| v * v).sum::<f64>() / (n - 1.0);
        assert!(mean.abs() < 1e-9);
        assert!((var - 1.0).abs() < 1e-9);
    }

    fn unit_with(id: u64, doc: Document) -> Unit<f64> {
        Unit {
            id,
            x: [id as f64, -(id as f64), 0.5 * id as f64],
            u: 0,
            t: (id % 2) as u8,
            y: 0.0,
            pi_true: 0.5,
            document: doc,
        }
    }

    fn treat_doc() -> Document {
        Document {
            paragraphs: vec![
                Paragraph {
                    topic: TopicId::TreatPos,
                    prompt_id: 0,
                    tokens: vec!["austerity".into(), "program".into()],
                },
                Paragraph {
                    topic: TopicId::General,
                    prompt_id: 0,
                    tokens: vec!["harvest".into(), "season".into()],
                },
            ],
        }
    }

    #[test]
    fn assemble_concatenates_numeric_and_text_blocks() {
        let units: Vec<Unit<f64>> = (0..4).map(|i| unit_with(i, treat_doc())).collect();
        let docs: Vec<Document> = units
            .iter()
            .map(|u| distill(&u.document, DistillRegime::Identity))
            .collect();
        let vocab = build_vocabulary(&docs, 256).unwrap();
        let fm = assemble(&units, DistillRegime::Identity, &vocab).unwrap();
        assert_eq!(fm.cols(), 3 + vocab.len());
        assert_eq!(fm.rows(), 4);
        assert_eq!(fm.column_names[0], "x1");
        assert!(fm.column_names[3].starts_with("t:"));
        assert!(fm.treat_tokens_read > 0);
        // Row order matches unit order: x1 column is monotone in id after
        // standardization.
        let col = fm.matrix().column(0);
        assert!(col.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn perfect_distillation_reads_no_treatment_tokens() {
        let units: Vec<Unit<f64>> = (0..4).map(|i| unit_with(i, treat_doc())).collect();
        let docs: Vec<Document> = units
            .iter()
            .map(|u| distill(&u.document, DistillRegime::Perfect))
            .collect();
        let vocab = build_vocabulary(&docs, 256).unwrap();
        let fm = assemble(&units, DistillRegime::Perfect, &vocab).unwrap();
        assert_eq!(fm.treat_tokens_read, 0);
        assert!(vocab.term_index("austerity").is_none());
    }

    #[test]
    fn text_rows_are_unit_norm_or_zero() {
        let mut rng = crate::rng::substream(42, 6, 1);
        use rand::Rng;
        let corpus: Vec<Document> = (0..50)
            .map(|_| {
                let tokens: Vec<&str> = (0..rng.gen_range(0..30))
                    .map(|_| ["a", "b", "c", "d", "e", "f"][rng.gen_range(0..6)])
                    .collect();
                doc_of(&tokens)
            })
            .collect();
        let vocab = build_vocabulary(&corpus, 4).unwrap();
        for doc in &corpus {
            let v: Vec<f64> = tfidf_vector(doc, &vocab);
            let norm: f64 = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            assert!(
                norm == 0.0 || (norm - 1.0).abs() < 1e-9,
                "row norm {norm}"
            );
        }
    }

    #[test]
    fn vocabulary_and_matrix_are_deterministic() {
        let units: Vec<Unit<f64>> = (0..6).map(|i| unit_with(i, treat_doc())).collect();
        let docs: Vec<Document> = units.iter().map(|u| u.document.clone()).collect();
        let va = build_vocabulary(&docs, 256).unwrap();
        let vb = build_vocabulary(&docs, 256).unwrap();
        assert_eq!(va.terms, vb.terms);
        let fa = assemble(&units, DistillRegime::Identity, &va).unwrap();
        let fb = assemble(&units, DistillRegime::Identity, &vb).unwrap();
        assert_eq!(fa.matrix(), fb.matrix());
    }
}
