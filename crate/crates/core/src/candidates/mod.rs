//! Turns retrieved caption text into candidate class names.
//!
//! Three stages run in order:
//!
//! 1. **remove**: special tokens, URLs, file extensions (stem kept), terms with
//!    digits or symbols, meta words and words shorter than
//!    [`FilterConfig::min_word_length`] are dropped; compounds joined by
//!    underscores or dashes are split.
//! 2. **standardize**: lowercase and singular form.
//! 3. **filter**: words whose part of speech is outside
//!    [`FilterConfig::keep_pos_tags`] are dropped, then words seen fewer than
//!    [`FilterConfig::min_occurrences`] times.
//!
//! Each stage can be switched off through [`Stages`] for ablations.

mod clean;
mod lexicon;
mod singular;

use std::collections::{BTreeMap, BTreeSet};
use std::path::PathBuf;

use serde::Serialize;
use thiserror::Error;

pub use clean::clean_tokens;
pub use lexicon::{Pos, PosLexicon};
pub use singular::standardize;

const BUILTIN_META_WORDS: &str = include_str!("../../data/meta_words.txt");

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("cannot read POS lexicon {path}: {source}")]
    LexiconMissing {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid filter config: {0}")]
    InvalidConfig(String),
}

/// Which pipeline stages run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Stages {
    pub remove: bool,
    pub standardize: bool,
    pub filter: bool,
}

impl Stages {
    pub const ALL: Stages = Stages {
        remove: true,
        standardize: true,
        filter: true,
    };
    pub const NONE: Stages = Stages {
        remove: false,
        standardize: false,
        filter: false,
    };
}

impl Default for Stages {
    fn default() -> Self {
        Self::ALL
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FilterConfig {
    pub min_word_length: usize,
    pub meta_words: BTreeSet<String>,
    pub keep_pos_tags: BTreeSet<Pos>,
    pub min_occurrences: usize,
    /// `None` selects the lexicon bundled with the crate.
    pub pos_lexicon_path: Option<PathBuf>,
    pub stages: Stages,
}

impl Default for FilterConfig {
    fn default() -> Self {
        Self {
            min_word_length: 3,
            meta_words: default_meta_words(),
            keep_pos_tags: [Pos::Noun].into(),
            min_occurrences: 2,
            pos_lexicon_path: None,
            stages: Stages::ALL,
        }
    }
}

impl FilterConfig {
    /// Config with every stage switched off: candidates are the raw
    /// whitespace-separated words of the captions.
    pub fn unfiltered() -> Self {
        Self {
            stages: Stages::NONE,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        if self.min_word_length == 0 {
            return Err(PipelineError::InvalidConfig(
                "min_word_length must be at least 1".into(),
            ));
        }
        if self.min_occurrences == 0 {
            return Err(PipelineError::InvalidConfig(
                "min_occurrences must be at least 1".into(),
            ));
        }
        if self.keep_pos_tags.is_empty() {
            return Err(PipelineError::InvalidConfig(
                "keep_pos_tags must not be empty".into(),
            ));
        }
        Ok(())
    }

    pub fn load_lexicon(&self) -> Result<PosLexicon, PipelineError> {
        match &self.pos_lexicon_path {
            None => Ok(PosLexicon::builtin()),
            Some(path) => {
                PosLexicon::from_file(path).map_err(|source| PipelineError::LexiconMissing {
                    path: path.clone(),
                    source,
                })
            }
        }
    }
}

pub fn default_meta_words() -> BTreeSet<String> {
    parse_word_list(BUILTIN_META_WORDS)
}

/// One word per line; blank lines and `#` comments are skipped.
pub fn parse_word_list(text: &str) -> BTreeSet<String> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(str::to_lowercase)
        .collect()
}

/// Candidate class names with their occurrence counts.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
#[serde(transparent)]
pub struct CandidateSet {
    entries: BTreeMap<String, usize>,
}

impl CandidateSet {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, name: &str) -> Option<usize> {
        self.entries.get(name).copied()
    }

    pub fn contains(&self, name: &str) -> bool {
        self.entries.contains_key(name)
    }

    /// Names in lexicographic order.
    pub fn names(&self) -> Vec<String> {
        self.entries.keys().cloned().collect()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, usize)> {
        self.entries.iter().map(|(k, v)| (k.as_str(), *v))
    }
}

impl FromIterator<(String, usize)> for CandidateSet {
    fn from_iter<I: IntoIterator<Item = (String, usize)>>(iter: I) -> Self {
        let mut entries = BTreeMap::new();
        for (k, v) in iter {
            *entries.entry(k).or_insert(0) += v;
        }
        Self { entries }
    }
}

/// A [`FilterConfig`] with its lexicon loaded.
#[derive(Debug, Clone)]
pub struct CandidatePipeline {
    cfg: FilterConfig,
    lexicon: PosLexicon,
}

impl CandidatePipeline {
    pub fn new(cfg: FilterConfig) -> Result<Self, PipelineError> {
        cfg.validate()?;
        let lexicon = cfg.load_lexicon()?;
        Ok(Self { cfg, lexicon })
    }

    pub fn config(&self) -> &FilterConfig {
        &self.cfg
    }

    /// Removal and standardization for one caption, as enabled by the config.
    pub fn words(&self, caption: &str) -> Vec<String> {
        let tokens = if self.cfg.stages.remove {
            clean_tokens(caption, &self.cfg)
        } else {
            clean::raw_tokens(caption)
        };
        if self.cfg.stages.standardize {
            tokens.iter().map(|t| standardize(t)).collect()
        } else {
            tokens
        }
    }

    /// Filter stage over word counts.
    pub fn filter(&self, words: &BTreeMap<String, usize>) -> CandidateSet {
        if !self.cfg.stages.filter {
            return words.iter().map(|(k, v)| (k.clone(), *v)).collect();
        }
        words
            .iter()
            .filter(|(w, n)| {
                **n >= self.cfg.min_occurrences && self.lexicon.matches(w, &self.cfg.keep_pos_tags)
            })
            .map(|(w, n)| (w.clone(), *n))
            .collect()
    }

    /// Full pipeline over a list of captions.
    pub fn extract<'a, I>(&self, captions: I) -> CandidateSet
    where
        I: IntoIterator<Item = &'a str>,
    {
        let mut counts = BTreeMap::new();
        for caption in captions {
            for w in self.words(caption) {
                *counts.entry(w).or_insert(0) += 1;
            }
        }
        self.filter(&counts)
    }
}

/// Filter stage as a standalone operation. Loads the configured lexicon.
pub fn filter_candidates(
    words: &BTreeMap<String, usize>,
    cfg: &FilterConfig,
) -> Result<CandidateSet, PipelineError> {
    Ok(CandidatePipeline::new(cfg.clone())?.filter(words))
}

/// Runs all configured stages over `captions`.
pub fn extract_candidates<'a, I>(
    captions: I,
    cfg: &FilterConfig,
) -> Result<CandidateSet, PipelineError>
where
    I: IntoIterator<Item = &'a str>,
{
    Ok(CandidatePipeline::new(cfg.clone())?.extract(captions))
}
