//! Simulation configuration: every knob of the data-generating process and
//! the estimation pipeline.
//!
//! The file format is TOML with keys exactly matching the field names here.
//! Missing keys fall back to the built-in defaults, so a partial file is a
//! valid override set.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::dgp::DgpCoefficients;
use crate::error::{Error, Result};
use crate::textgen::{Topic, TopicId, TopicMixture, TopicSet};

/// Prompt templates and shift keywords for one sign topic.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopicStrings {
    pub prompts: Vec<String>,
    pub keywords: Vec<String>,
}

/// Topic definitions: the country pool for `[COUNTRY]` substitution, the
/// four sign topics, and the general-topic prompts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TopicsConfig {
    pub country_pool: Vec<String>,
    pub treat_pos: TopicStrings,
    pub treat_neg: TopicStrings,
    pub conf_pos: TopicStrings,
    pub conf_neg: TopicStrings,
    pub general_prompts: Vec<String>,
}

/// Regularization path specification: `count` log-spaced values from the
/// data-driven maximum down to `min_ratio` times that maximum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LambdaPathConfig {
    pub count: usize,
    pub min_ratio: f64,
}

impl Default for LambdaPathConfig {
    fn default() -> Self {
        LambdaPathConfig {
            count: 100,
            min_ratio: 1e-3,
        }
    }
}

/// Estimator behavior switches.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Flags {
    /// Use the weight-normalized (Hajek) IPW form instead of the plain
    /// Horvitz-Thompson form.
    pub hajek: bool,
    /// Truncate fitted propensities to `[eps, 1-eps]` before weighting.
    /// Off by default: the extreme-weight pathology is the phenomenon under
    /// study.
    pub clip_epsilon: Option<f64>,
    /// Rebuild the text vocabulary inside every bootstrap resample.
    pub rebuild_vocab: bool,
}

impl Default for Flags {
    fn default() -> Self {
        Flags {
            hajek: false,
            clip_epsilon: None,
            rebuild_vocab: true,
        }
    }
}

/// The full simulation and estimation configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimConfig {
    pub seed: u64,
    pub n: usize,
    pub k: usize,
    pub topic_mixture: TopicMixture,
    pub log_shift: f64,
    pub paragraph_length: usize,
    pub vocab_size: usize,
    pub cv_folds: usize,
    pub bootstrap_b: usize,
    pub lambda_path: LambdaPathConfig,
    pub flags: Flags,
    pub dgp: DgpCoefficients<f64>,
    pub topics: TopicsConfig,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            seed: 42,
            n: 10_000,
            k: 20,
            topic_mixture: TopicMixture::default(),
            log_shift: 4.0,
            paragraph_length: 40,
            vocab_size: 256,
            cv_folds: 10,
            bootstrap_b: 1_000,
            lambda_path: LambdaPathConfig::default(),
            flags: Flags::default(),
            dgp: DgpCoefficients::default(),
            topics: TopicsConfig::default(),
        }
    }
}

impl Default for TopicsConfig {
    fn default() -> Self {
        TopicsConfig {
            country_pool: DEFAULT_COUNTRIES.iter().map(|s| s.to_string()).collect(),
            treat_pos: TopicStrings {
                prompts: vec![
                    "The International Monetary Fund mandates the deregulation of [COUNTRY]'s labor market".into(),
                    "Under the new lending arrangement [COUNTRY] must cut public spending".into(),
                    "The structural adjustment program requires [COUNTRY] to liberalize trade".into(),
                    "Fund officials arrive in [COUNTRY] to review the loan conditions".into(),
                ],
                keywords: kw(&[
                    "austerity",
                    "conditionality",
                    "bailout",
                    "privatization",
                    "creditors",
                    "repayment",
                    "restructuring",
                    "stabilization",
                ]),
            },
            treat_neg: TopicStrings {
                prompts: vec![
                    "[COUNTRY] declines the assistance offered by the International Monetary Fund".into(),
                    "The government of [COUNTRY] rules out external borrowing this year".into(),
                    "Without outside lenders [COUNTRY] finances its deficit domestically".into(),
                    "[COUNTRY] pursues an economic course free of foreign programs".into(),
                ],
                keywords: kw(&[
                    "autonomy",
                    "sovereignty",
                    "independence",
                    "refusal",
                    "rejection",
                    "defiance",
                    "withdrawal",
                    "isolation",
                ]),
            },
            conf_pos: TopicStrings {
                prompts: vec![
                    "Officials in [COUNTRY] praise the constructive dialogue with international lenders".into(),
                    "The cabinet of [COUNTRY] signals broad support for multilateral institutions".into(),
                    "[COUNTRY]'s finance minister welcomes closer ties with the fund".into(),
                    "Lawmakers in [COUNTRY] endorse joint work with multilateral agencies".into(),
                ],
                keywords: kw(&[
                    "cooperation",
                    "alignment",
                    "engagement",
                    "partnership",
                    "goodwill",
                    "consensus",
                    "openness",
                    "compliance",
                ]),
            },
            conf_neg: TopicStrings {
                prompts: vec![
                    "Street demonstrations against foreign lenders spread across [COUNTRY]".into(),
                    "The parliament of [COUNTRY] denounces interference by international institutions".into(),
                    "[COUNTRY]'s press accuses foreign lenders of undermining national policy".into(),
                    "Union leaders in [COUNTRY] call for a break with the fund".into(),
                ],
                keywords: kw(&[
                    "opposition",
                    "protest",
                    "resistance",
                    "hostility",
                    "unrest",
                    "discontent",
                    "backlash",
                    "distrust",
                ]),
            },
            general_prompts: vec![
                "The national statistics office of [COUNTRY] publishes its quarterly bulletin".into(),
                "A new railway line connects the two largest cities of [COUNTRY]".into(),
                "Tourism along the coast of [COUNTRY] grows steadily this season".into(),
                "Farmers in [COUNTRY] prepare for the annual harvest".into(),
            ],
        }
    }
}

fn kw(words: &[&str]) -> Vec<String> {
    words.iter().map(|s| s.to_string()).collect()
}

const DEFAULT_COUNTRIES: [&str; 50] = [
    "argentina", "bolivia", "brazil", "chile", "colombia", "ecuador", "guyana", "paraguay",
    "peru", "uruguay", "venezuela", "mexico", "guatemala", "honduras", "nicaragua", "panama",
    "jamaica", "haiti", "ghana", "nigeria", "kenya", "tanzania", "uganda", "zambia", "zimbabwe",
    "senegal", "mali", "cameroon", "ethiopia", "mozambique", "morocco", "tunisia", "egypt",
    "jordan", "lebanon", "turkey", "georgia", "armenia", "ukraine", "moldova", "romania",
    "bulgaria", "hungary", "poland", "latvia", "lithuania", "estonia", "thailand", "indonesia",
    "philippines",
];

/// Scale presets for the `run`/`generate` subcommands.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    /// Full-scale run: n = 10,000, B = 1,000.
    Paper,
    /// Desk-scale run that finishes in minutes: n = 2,000, B = 300.
    Desk,
}

impl std::str::FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "paper" => Ok(Preset::Paper),
            "desk" => Ok(Preset::Desk),
            other => Err(Error::InvalidArgument(format!(
                "unknown preset `{other}` (expected `paper` or `desk`)"
            ))),
        }
    }
}

/// Outcome of one named configuration check.
#[derive(Debug, Clone, Serialize)]
pub struct CheckReport {
    pub name: String,
    pub passed: bool,
    pub message: String,
}

impl CheckReport {
    fn pass(name: &str) -> Self {
        CheckReport {
            name: name.into(),
            passed: true,
            message: "ok".into(),
        }
    }

    fn fail(name: &str, message: String) -> Self {
        CheckReport {
            name: name.into(),
            passed: false,
            message,
        }
    }
}

impl SimConfig {
    /// Load a TOML config file over the built-in defaults.
    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Ok(toml::from_str(&text)?)
    }

    pub fn apply_preset(&mut self, preset: Preset) {
        match preset {
            Preset::Paper => {
                self.n = 10_000;
                self.bootstrap_b = 1_000;
            }
            Preset::Desk => {
                self.n = 2_000;
                self.bootstrap_b = 300;
            }
        }
    }

    /// Run every static invariant check and report individually.
    pub fn checks(&self) -> Vec<CheckReport> {
        let mut out = Vec::new();
        let mut check = |name: &str, ok: bool, msg: String| {
            out.push(if ok {
                CheckReport::pass(name)
            } else {
                CheckReport::fail(name, msg)
            });
        };

        check("n_at_least_one", self.n >= 1, format!("n = {}", self.n));
        check("k_at_least_one", self.k >= 1, format!("k = {}", self.k));
        check(
            "vocab_size_at_least_one",
            self.vocab_size >= 1,
            format!("vocab_size = {}", self.vocab_size),
        );
        check(
            "cv_folds_at_least_two",
            self.cv_folds >= 2,
            format!("cv_folds = {}", self.cv_folds),
        );
        check(
            "bootstrap_b_at_least_100",
            self.bootstrap_b >= 100,
            format!("bootstrap_b = {}", self.bootstrap_b),
        );
        let mix = self.topic_mixture;
        check(
            "topic_mixture_sums_to_one",
            mix.validate().is_ok(),
            format!(
                "mixture = ({}, {}, {})",
                mix.u_topic, mix.t_topic, mix.general
            ),
        );
        check(
            "log_shift_finite",
            self.log_shift.is_finite(),
            format!("log_shift = {}", self.log_shift),
        );
        check(
            "outcome_sigma_non_negative",
            self.dgp.outcome_sigma >= 0.0 && self.dgp.outcome_sigma.is_finite(),
            format!("outcome_sigma = {}", self.dgp.outcome_sigma),
        );
        check(
            "dgp_coefficients_finite",
            self.dgp.validate().is_ok(),
            "non-finite coefficient".into(),
        );
        check(
            "lambda_path_well_formed",
            self.lambda_path.count >= 1
                && self.lambda_path.min_ratio > 0.0
                && self.lambda_path.min_ratio <= 1.0,
            format!(
                "count = {}, min_ratio = {}",
                self.lambda_path.count, self.lambda_path.min_ratio
            ),
        );
        if let Some(eps) = self.flags.clip_epsilon {
            check(
                "clip_epsilon_in_range",
                eps > 0.0 && eps < 0.5,
                format!("clip_epsilon = {eps}"),
            );
        }
        for (name, strings) in [
            ("treat_pos", &self.topics.treat_pos),
            ("treat_neg", &self.topics.treat_neg),
            ("conf_pos", &self.topics.conf_pos),
            ("conf_neg", &self.topics.conf_neg),
        ] {
            check(
                &format!("{name}_has_four_prompts"),
                strings.prompts.len() == 4,
                format!("{} prompts", strings.prompts.len()),
            );
            check(
                &format!("{name}_has_eight_keywords"),
                strings.keywords.len() == 8,
                format!("{} keywords", strings.keywords.len()),
            );
        }
        check(
            "general_has_a_prompt",
            !self.topics.general_prompts.is_empty(),
            "no general prompts".into(),
        );
        check(
            "country_pool_nonempty",
            !self.topics.country_pool.is_empty(),
            "empty country pool".into(),
        );
        out
    }

    /// First failed check becomes a configuration error.
    pub fn validate(&self) -> Result<()> {
        for check in self.checks() {
            if !check.passed {
                return Err(Error::Config(format!("{}: {}", check.name, check.message)));
            }
        }
        Ok(())
    }

    /// Resolve the topic strings into the five runtime topics. Sign topics
    /// share the configured shift strength; the general topic is unshifted.
    pub fn topic_set(&self) -> TopicSet {
        let topic = |id: TopicId, s: &TopicStrings| Topic {
            id,
            prompts: s.prompts.clone(),
            keywords: s.keywords.clone(),
            log_shift: self.log_shift,
        };
        TopicSet {
            treat_pos: topic(TopicId::TreatPos, &self.topics.treat_pos),
            treat_neg: topic(TopicId::TreatNeg, &self.topics.treat_neg),
            conf_pos: topic(TopicId::ConfPos, &self.topics.conf_pos),
            conf_neg: topic(TopicId::ConfNeg, &self.topics.conf_neg),
            general: Topic {
                id: TopicId::General,
                prompts: self.topics.general_prompts.clone(),
                keywords: Vec::new(),
                log_shift: 0.0,
            },
        }
    }

    /// Hex SHA-256 of the canonical JSON serialization. Every output file
    /// carries this digest so results are traceable to their exact
    /// configuration.
    pub fn digest(&self) -> String {
        let canonical = serde_json::to_vec(self).expect("config serializes");
        let hash = Sha256::digest(&canonical);
        hash.iter().map(|b| format!("{b:02x}")).collect()
    }
}
