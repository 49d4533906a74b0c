use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

const BUILTIN: &str = include_str!("../../data/pos_lexicon.tsv");

/// Open-class part-of-speech tags kept or dropped by the candidate filter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Pos {
    Noun,
    Adjective,
    Verb,
}

impl Pos {
    fn bit(self) -> u8 {
        match self {
            Pos::Noun => 1,
            Pos::Adjective => 2,
            Pos::Verb => 4,
        }
    }

    fn from_tag(c: char) -> Option<Self> {
        match c {
            'n' => Some(Pos::Noun),
            'a' => Some(Pos::Adjective),
            'v' => Some(Pos::Verb),
            _ => None,
        }
    }
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Pos::Noun => "noun",
            Pos::Adjective => "adjective",
            Pos::Verb => "verb",
        })
    }
}

impl FromStr for Pos {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "n" | "noun" => Ok(Pos::Noun),
            "a" | "adj" | "adjective" => Ok(Pos::Adjective),
            "v" | "verb" => Ok(Pos::Verb),
            other => Err(format!("unknown part of speech {other:?}")),
        }
    }
}

/// Word to part-of-speech table. Lines are `word<TAB>tags` with tags drawn
/// from `n`, `a`, `v`; an empty tag field marks a closed-class word. Words
/// missing from the table are treated as nouns.
#[derive(Debug, Clone, Default)]
pub struct PosLexicon {
    entries: HashMap<String, u8>,
}

impl PosLexicon {
    pub fn builtin() -> Self {
        Self::parse(BUILTIN).expect("builtin lexicon is well formed")
    }

    pub fn from_file(path: &Path) -> std::io::Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text).map_err(|e| std::io::Error::new(std::io::ErrorKind::InvalidData, e))
    }

    pub fn parse(text: &str) -> Result<Self, String> {
        let mut entries = HashMap::new();
        for (n, line) in text.lines().enumerate() {
            let line = line.trim_end_matches('\r');
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let (word, tags) = line.split_once('\t').unwrap_or((line, ""));
            let word = word.trim().to_lowercase();
            if word.is_empty() {
                return Err(format!("line {}: empty word", n + 1));
            }
            let mut mask = 0u8;
            for c in tags.chars().filter(|c| !c.is_whitespace() && *c != ',') {
                let pos =
                    Pos::from_tag(c).ok_or_else(|| format!("line {}: unknown tag {c:?}", n + 1))?;
                mask |= pos.bit();
            }
            *entries.entry(word).or_insert(0) |= mask;
        }
        Ok(Self { entries })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// True if any tag of `word` is in `keep`.
    pub fn matches(&self, word: &str, keep: &BTreeSet<Pos>) -> bool {
        let mask = self.entries.get(word).copied().unwrap_or(Pos::Noun.bit());
        keep.iter().any(|p| mask & p.bit() != 0)
    }

    pub fn tags(&self, word: &str) -> BTreeSet<Pos> {
        let mask = self.entries.get(word).copied().unwrap_or(Pos::Noun.bit());
        [Pos::Noun, Pos::Adjective, Pos::Verb]
            .into_iter()
            .filter(|p| mask & p.bit() != 0)
            .collect()
    }
}
