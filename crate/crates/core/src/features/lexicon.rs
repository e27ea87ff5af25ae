use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::manifest::FeatureSet;

/// How lexicon entries are compared against tokens.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MatchMode {
    /// Token must equal an entry.
    #[default]
    Exact,
    /// Entries ending in `*` match any token with that prefix; others match exactly.
    PrefixWildcard,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Category {
    pub name: String,
    pub set: FeatureSet,
    words: BTreeSet<String>,
    prefixes: Vec<String>,
}

impl Category {
    pub fn new(
        name: impl Into<String>,
        set: FeatureSet,
        words: impl IntoIterator<Item = impl AsRef<str>>,
    ) -> Result<Self> {
        let name = name.into();
        let mut exact = BTreeSet::new();
        let mut prefixes = Vec::new();
        for w in words {
            let w = w.as_ref().trim().to_lowercase();
            if w.is_empty() {
                continue;
            }
            if let Some(stem) = w.strip_suffix('*') {
                prefixes.push(stem.to_string());
            }
            exact.insert(w);
        }
        if exact.is_empty() {
            return Err(Error::config(format!(
                "lexicon category {name:?} has no words"
            )));
        }
        prefixes.sort();
        prefixes.dedup();
        Ok(Category {
            name,
            set,
            words: exact,
            prefixes,
        })
    }

    pub fn words(&self) -> impl Iterator<Item = &str> {
        self.words.iter().map(String::as_str)
    }

    fn matches(&self, token: &str, mode: MatchMode) -> bool {
        if self.words.contains(token) {
            return true;
        }
        mode == MatchMode::PrefixWildcard
            && self.prefixes.iter().any(|p| token.starts_with(p.as_str()))
    }
}

/// Word categories used to count psychological and linguistic markers in text.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Lexicon {
    pub categories: Vec<Category>,
    pub mode: MatchMode,
}

const DEMO_LEXICON: &str = include_str!("../../data/demo_lexicon.jsonl");

#[derive(Deserialize, Serialize)]
pub(crate) struct LexiconRecord {
    pub category: String,
    pub words: Vec<String>,
    #[serde(default = "other_set")]
    pub set: FeatureSet,
}

fn other_set() -> FeatureSet {
    FeatureSet::Other
}

impl Lexicon {
    pub fn new(categories: Vec<Category>, mode: MatchMode) -> Result<Self> {
        if categories.is_empty() {
            return Err(Error::config("lexicon has no categories"));
        }
        let mut names: Vec<&str> = categories.iter().map(|c| c.name.as_str()).collect();
        names.sort_unstable();
        if names.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::config("lexicon has duplicate category names"));
        }
        Ok(Lexicon { categories, mode })
    }

    /// The bundled demonstration lexicon: thirteen categories seeded with a
    /// handful of common English words each.
    pub fn demo() -> Self {
        Lexicon::parse_jsonl(DEMO_LEXICON, MatchMode::Exact).expect("bundled lexicon parses")
    }

    /// Parses one `{category, words, set?}` record per line; errors carry the 1-based line.
    pub fn parse_jsonl(text: &str, mode: MatchMode) -> std::result::Result<Self, (usize, String)> {
        let mut cats = Vec::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let rec: LexiconRecord =
                serde_json::from_str(line).map_err(|e| (i + 1, e.to_string()))?;
            cats.push(
                Category::new(rec.category, rec.set, rec.words)
                    .map_err(|e| (i + 1, e.to_string()))?,
            );
        }
        Lexicon::new(cats, mode).map_err(|e| (0, e.to_string()))
    }

    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for c in &self.categories {
            let rec = LexiconRecord {
                category: c.name.clone(),
                words: c.words.iter().cloned().collect(),
                set: c.set,
            };
            out.push_str(&serde_json::to_string(&rec).expect("lexicon record serializes"));
            out.push('\n');
        }
        out
    }

    pub fn len(&self) -> usize {
        self.categories.len()
    }

    pub fn is_empty(&self) -> bool {
        self.categories.is_empty()
    }

    /// Per-category hit counts for a single token.
    pub(crate) fn hits<'a>(&'a self, token: &'a str) -> impl Iterator<Item = bool> + 'a {
        self.categories
            .iter()
            .map(move |c| c.matches(token, self.mode))
    }
}

/// Lowercases and splits on every non-alphanumeric character.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
        .collect()
}
