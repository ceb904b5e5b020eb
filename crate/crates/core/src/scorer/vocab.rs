use std::collections::{BTreeMap, BTreeSet};

use crate::microworld::action::{ARTICLES, GRAMMAR_WORDS};
use crate::microworld::episode::OBJECT_NAMES;
use crate::microworld::render::{GROWTH_STAGES, TEMPLATE_WORDS};
use crate::microworld::{rules, Verb};

pub const UNK: u32 = 0;
pub const UNK_TOKEN: &str = "<unk>";

/// Template filler dropped before pooling so object and status words carry
/// more of the mean.
pub const FILLER_WORDS: &[&str] = &[
    "a", "an", "the", "you", "are", "see", "your", "is", "at", "c", "doors", "lead",
];

/// Word → dense id map. Id 0 is reserved for unknown words.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    words: Vec<String>,
    ids: BTreeMap<String, u32>,
}

impl Vocabulary {
    /// Id order is `<unk>` followed by `words` in the given order; duplicates are dropped.
    pub fn from_words<I, S>(words: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut v = Vocabulary {
            words: vec![UNK_TOKEN.to_string()],
            ids: BTreeMap::from([(UNK_TOKEN.to_string(), UNK)]),
        };
        for w in words {
            let w = w.into();
            if !v.ids.contains_key(&w) {
                v.ids.insert(w.clone(), v.words.len() as u32);
                v.words.push(w);
            }
        }
        v
    }

    /// Every word the world's grammar and renderer can emit, sorted.
    /// Temperatures are left out and read as `<unk>`.
    pub fn standard() -> Self {
        let r = rules();
        let mut words: BTreeSet<String> = BTreeSet::new();
        let mut add = |w: &str| {
            words.insert(w.to_string());
        };
        Verb::UNARY
            .iter()
            .chain(&Verb::BINARY)
            .chain(&[Verb::Wait, Verb::Go])
            .for_each(|v| add(v.word()));
        GRAMMAR_WORDS.iter().chain(&ARTICLES).for_each(|w| add(w));
        OBJECT_NAMES
            .iter()
            .chain(TEMPLATE_WORDS)
            .chain(&GROWTH_STAGES)
            .for_each(|w| add(w));
        r.substances.iter().for_each(|s| add(&s.name));
        r.rooms.iter().for_each(|room| add(room));
        Vocabulary::from_words(
            words
                .into_iter()
                .filter(|w| !FILLER_WORDS.contains(&w.as_str())),
        )
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    pub fn id(&self, word: &str) -> u32 {
        self.ids.get(word).copied().unwrap_or(UNK)
    }

    /// Lowercase, split on whitespace and punctuation, drop filler, map to ids.
    /// Never empty.
    pub fn tokenize(&self, text: &str) -> Vec<u32> {
        let ids: Vec<u32> = split_words(text)
            .filter(|w| !FILLER_WORDS.contains(&w.as_str()))
            .map(|w| self.id(&w))
            .collect();
        if ids.is_empty() {
            vec![UNK]
        } else {
            ids
        }
    }

    /// Hex SHA-256 of the newline-joined word list.
    pub fn digest(&self) -> String {
        crate::rng::digest_hex(self.words.join("\n").as_bytes())
    }
}

/// Letters, digits and hyphens form words, so `salt-water` and `-10` stay whole.
pub fn split_words(text: &str) -> impl Iterator<Item = String> + '_ {
    text.split(|c: char| !(c.is_alphanumeric() || c == '-'))
        .filter(|w| !w.is_empty() && *w != "-")
        .map(str::to_lowercase)
}
