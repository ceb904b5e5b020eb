//! The fixed action grammar and canonical surface forms.

use serde::{Deserialize, Serialize};
use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verb {
    Wait,
    Go,
    Take,
    Drop,
    Put,
    Pour,
    Open,
    Close,
    Activate,
    Deactivate,
    Push,
    Eat,
    Heat,
    Cool,
    Water,
    Measure,
    Mix,
}

impl Verb {
    /// Verbs taking exactly one object argument.
    pub const UNARY: [Verb; 13] = [
        Verb::Take,
        Verb::Drop,
        Verb::Open,
        Verb::Close,
        Verb::Activate,
        Verb::Deactivate,
        Verb::Push,
        Verb::Eat,
        Verb::Heat,
        Verb::Cool,
        Verb::Water,
        Verb::Measure,
        Verb::Mix,
    ];

    /// Verbs of the form `<verb> X in Y`.
    pub const BINARY: [Verb; 2] = [Verb::Put, Verb::Pour];

    pub fn word(self) -> &'static str {
        match self {
            Verb::Wait => "wait",
            Verb::Go => "go",
            Verb::Take => "take",
            Verb::Drop => "drop",
            Verb::Put => "put",
            Verb::Pour => "pour",
            Verb::Open => "open",
            Verb::Close => "close",
            Verb::Activate => "activate",
            Verb::Deactivate => "deactivate",
            Verb::Push => "push",
            Verb::Eat => "eat",
            Verb::Heat => "heat",
            Verb::Cool => "cool",
            Verb::Water => "water",
            Verb::Measure => "measure",
            Verb::Mix => "mix",
        }
    }

    pub fn from_word(word: &str) -> Option<Verb> {
        let all = [Verb::Wait, Verb::Go]
            .into_iter()
            .chain(Verb::UNARY)
            .chain(Verb::BINARY);
        all.into_iter().find(|v| v.word() == word)
    }
}

/// Words the grammar itself contributes besides verbs.
pub const GRAMMAR_WORDS: [&str; 2] = ["to", "in"];

/// Articles accepted (and dropped) when parsing free text.
pub const ARTICLES: [&str; 3] = ["a", "an", "the"];

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Action {
    pub verb: Verb,
    pub args: Vec<String>,
    pub surface: String,
}

impl Action {
    fn build(verb: Verb, args: Vec<String>) -> Action {
        let surface = match (verb, args.as_slice()) {
            (Verb::Wait, _) => "wait".to_string(),
            (Verb::Go, [room]) => format!("go to {room}"),
            (Verb::Put | Verb::Pour, [x, y]) => format!("{} {x} in {y}", verb.word()),
            (_, [x]) => format!("{} {x}", verb.word()),
            _ => unreachable!("arity checked by constructors"),
        };
        Action {
            verb,
            args,
            surface,
        }
    }

    pub fn wait() -> Action {
        Action::build(Verb::Wait, vec![])
    }

    pub fn go(room: &str) -> Action {
        Action::build(Verb::Go, vec![room.to_string()])
    }

    /// # Panics
    /// If `verb` is not unary.
    pub fn unary(verb: Verb, object: &str) -> Action {
        assert!(Verb::UNARY.contains(&verb), "{verb:?} is not unary");
        Action::build(verb, vec![object.to_string()])
    }

    /// # Panics
    /// If `verb` is not one of the `X in Y` verbs.
    pub fn binary(verb: Verb, object: &str, target: &str) -> Action {
        assert!(Verb::BINARY.contains(&verb), "{verb:?} is not binary");
        Action::build(verb, vec![object.to_string(), target.to_string()])
    }

    /// Parse free text against the grammar. Case-insensitive, articles dropped.
    pub fn parse(text: &str) -> Option<Action> {
        let lower = text.to_lowercase();
        let tokens: Vec<&str> = lower
            .split_whitespace()
            .filter(|t| !ARTICLES.contains(t))
            .collect();
        let (&head, rest) = tokens.split_first()?;
        let verb = Verb::from_word(head)?;
        let is_name = |t: &str| !GRAMMAR_WORDS.contains(&t);
        match (verb, rest) {
            (Verb::Wait, []) => Some(Action::wait()),
            (Verb::Go, ["to", room]) if is_name(room) => Some(Action::go(room)),
            (Verb::Put | Verb::Pour, [x, "in", y]) if is_name(x) && is_name(y) => {
                Some(Action::binary(verb, x, y))
            }
            (v, [x]) if Verb::UNARY.contains(&v) && is_name(x) => Some(Action::unary(v, x)),
            _ => None,
        }
    }

    pub fn tokens(&self) -> Vec<&str> {
        self.surface.split(' ').collect()
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.surface)
    }
}
