//! Lexicon-based sentiment scoring in the style of VADER: token valences are
//! summed after applying degree-adverb increments and negation, and the sum
//! is squashed into [-1, 1].

use std::collections::{HashMap, HashSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

const BUNDLED_LEXICON: &str = include_str!("../../data/vader_lexicon.tsv");
const BUNDLED_NEGATIONS: &str = include_str!("../../data/negations.txt");
const BUNDLED_BOOSTERS: &str = include_str!("../../data/boosters.tsv");

pub const COMPOUND_ALPHA: f64 = 15.0;
pub const NEGATION_SCALAR: f64 = -0.74;
/// How far back (in tokens) negations and boosters reach.
const WINDOW: usize = 3;
/// Booster damping by distance 1, 2, 3.
const BOOSTER_DAMPING: [f64; WINDOW] = [1.0, 0.95, 0.9];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SentimentLexicon {
    entries: HashMap<String, f64>,
    negations: HashSet<String>,
    boosters: HashMap<String, f64>,
}

fn parse_pairs(text: &str, origin: &str) -> Result<HashMap<String, f64>> {
    let mut out = HashMap::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let mut parts = line.split('\t');
        let token = parts.next().unwrap_or("").trim();
        let value = parts.next().map(str::trim);
        let err = |message: String| Error::Config {
            path: origin.to_string(),
            line: i + 1,
            message,
        };
        let v: f64 = value
            .ok_or_else(|| err("expected token<TAB>value".into()))?
            .parse()
            .map_err(|_| err(format!("bad value for `{token}`")))?;
        if token.is_empty() || !v.is_finite() {
            return Err(err(format!("invalid entry `{line}`")));
        }
        out.insert(token.to_lowercase(), v);
    }
    Ok(out)
}

impl SentimentLexicon {
    pub fn new(
        entries: HashMap<String, f64>,
        negations: HashSet<String>,
        boosters: HashMap<String, f64>,
    ) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::invalid("sentiment lexicon is empty"));
        }
        if entries.values().chain(boosters.values()).any(|v| !v.is_finite()) {
            return Err(Error::invalid("non-finite valence in lexicon"));
        }
        Ok(SentimentLexicon {
            entries,
            negations,
            boosters,
        })
    }

    /// The lexicon, negation list and booster table shipped with the crate.
    pub fn bundled() -> Self {
        let entries = parse_pairs(BUNDLED_LEXICON, "vader_lexicon.tsv").expect("bundled lexicon");
        let boosters = parse_pairs(BUNDLED_BOOSTERS, "boosters.tsv").expect("bundled boosters");
        Self::new(entries, parse_negations(BUNDLED_NEGATIONS), boosters).expect("bundled lexicon")
    }

    /// Loads a `token<TAB>valence` file (extra tab-separated columns are
    /// ignored); negations and boosters stay the bundled ones.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let entries = parse_pairs(&text, &path.display().to_string())?;
        let base = Self::bundled();
        Self::new(entries, base.negations, base.boosters)
    }

    pub fn valence(&self, token: &str) -> Option<f64> {
        self.entries.get(token).copied()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    fn is_negation(&self, token: &str) -> bool {
        self.negations.contains(token) || token.contains("n't")
    }
}

fn parse_negations(text: &str) -> HashSet<String> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(str::to_lowercase)
        .collect()
}

/// Lower-cased word tokens; punctuation separates tokens except apostrophes
/// and hyphens inside a word.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split(|c: char| !(c.is_alphanumeric() || c == '\'' || c == '\u{2019}' || c == '-'))
        .map(|t| t.trim_matches(|c| c == '\'' || c == '\u{2019}' || c == '-'))
        .filter(|t| !t.is_empty())
        .map(|t| t.replace('\u{2019}', "'").to_lowercase())
        .collect()
}

/// Squashes a valence sum into [-1, 1].
pub fn compound(sum: f64) -> f64 {
    (sum / (sum * sum + COMPOUND_ALPHA).sqrt()).clamp(-1.0, 1.0)
}

pub fn sentiment_score(text: &str, lex: &SentimentLexicon) -> f64 {
    let tokens = tokenize(text);
    let mut sum = 0.0;
    for (i, tok) in tokens.iter().enumerate() {
        let Some(base) = lex.valence(tok) else {
            continue;
        };
        let mut v = base;
        let mut negated = false;
        for d in 1..=WINDOW.min(i) {
            let prev = &tokens[i - d];
            negated |= lex.is_negation(prev);
            if lex.valence(prev).is_some() {
                continue;
            }
            if let Some(inc) = lex.boosters.get(prev) {
                v += inc * base.signum() * BOOSTER_DAMPING[d - 1];
            }
        }
        // A dampener can weaken a word but never flip its polarity.
        if base > 0.0 {
            v = v.max(0.0);
        } else {
            v = v.min(0.0);
        }
        if negated {
            v *= NEGATION_SCALAR;
        }
        sum += v;
    }
    compound(sum)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn lex() -> SentimentLexicon {
        SentimentLexicon::bundled()
    }

    #[test]
    fn tokenizer() {
        assert_eq!(tokenize("Payoff Credit-Cards, now!"), vec!["payoff", "credit-cards", "now"]);
        assert_eq!(tokenize("I don't ... 'quote'"), vec!["i", "don't", "quote"]);
        assert!(tokenize("  ,,, ").is_empty());
    }

    #[test]
    fn bundled_lexicon_entries() {
        let l = lex();
        assert!(l.len() > 7000);
        assert_eq!(l.valence("credit"), Some(1.6));
        assert!(l.is_negation("not") && l.is_negation("wouldn't"));
    }

    // Expected values computed with the reference VADER 3.3.2 implementation.
    #[test]
    fn matches_reference_scorer_on_plain_text() {
        let l = lex();
        let cases = [
            ("Payoff Credit Cards", 0.3818),
            ("Lender seeing Prosper from borrower's point-of-view", 0.0),
            ("I am not happy", -0.4585),
            ("very good loan", 0.4927),
            ("", 0.0),
        ];
        for (text, want) in cases {
            let got = sentiment_score(text, &l);
            assert!((got - want).abs() < 5e-5, "{text:?}: {got} vs {want}");
        }
    }

    #[test]
    fn closed_form_single_token() {
        let want = 1.6 / (1.6f64 * 1.6 + 15.0).sqrt();
        assert!((sentiment_score("credit", &lex()) - want).abs() < 1e-15);
    }

    #[test]
    fn dampener_never_flips_polarity() {
        // "ayc" has valence 0.2, below the dampener size.
        let l = lex();
        assert!(sentiment_score("slightly ayc", &l) >= 0.0);
    }

    #[test]
    fn custom_lexicon_file() {
        let dir = std::env::temp_dir().join(format!("lendwise-lex-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let p = dir.join("lex.tsv");
        std::fs::write(&p, "# test\nyay\t2.0\textra\n").unwrap();
        let l = SentimentLexicon::load(&p).unwrap();
        assert_eq!(l.len(), 1);
        assert!(sentiment_score("not yay", &l) < 0.0);
        std::fs::write(&p, "bad line\n").unwrap();
        assert!(SentimentLexicon::load(&p).is_err());
    }

    proptest! {
        #[test]
        fn bounded_and_deterministic(text in "[a-zA-Z ,.!']{0,80}") {
            let l = lex();
            let s = sentiment_score(&text, &l);
            prop_assert!((-1.0..=1.0).contains(&s));
            prop_assert_eq!(s, sentiment_score(&text, &l));
        }

        #[test]
        fn compound_is_odd(s in -50.0f64..50.0) {
            prop_assert_eq!(compound(-s), -compound(s));
        }
    }
}
