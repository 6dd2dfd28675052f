use serde::{Deserialize, Serialize};

/// Answer-string normalization. Steps run in SQuAD order: lowercase, drop
/// ASCII punctuation, drop the articles a/an/the, collapse whitespace.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct Normalizer {
    pub lowercase: bool,
    pub strip_punctuation: bool,
    pub strip_articles: bool,
}

impl Default for Normalizer {
    fn default() -> Self {
        Self::SQUAD
    }
}

impl Normalizer {
    pub const SQUAD: Normalizer = Normalizer {
        lowercase: true,
        strip_punctuation: true,
        strip_articles: true,
    };

    /// SQuAD normalization without article removal.
    pub const KEEP_ARTICLES: Normalizer = Normalizer {
        lowercase: true,
        strip_punctuation: true,
        strip_articles: false,
    };

    pub fn tokens(&self, text: &str) -> Vec<String> {
        let mut s = if self.lowercase {
            text.to_lowercase()
        } else {
            text.to_string()
        };
        if self.strip_punctuation {
            s.retain(|c| !c.is_ascii_punctuation());
        }
        s.split_whitespace()
            .filter(|t| !(self.strip_articles && matches!(*t, "a" | "an" | "the")))
            .map(str::to_string)
            .collect()
    }

    pub fn normalize(&self, text: &str) -> String {
        self.tokens(text).join(" ")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn squad_steps() {
        let n = Normalizer::SQUAD;
        assert_eq!(n.normalize("The  Eiffel Tower!"), "eiffel tower");
        assert_eq!(n.normalize("U.S."), "us");
        assert_eq!(n.normalize("Indianapolis , Indiana"), "indianapolis indiana");
        assert_eq!(n.normalize("an apple a day"), "apple day");
        assert_eq!(n.normalize(""), "");
        assert_eq!(Normalizer::KEEP_ARTICLES.normalize("a b"), "a b");
    }
}
