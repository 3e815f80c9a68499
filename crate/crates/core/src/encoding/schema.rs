use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::sentiment::{sentiment_score, SentimentLexicon};
use crate::data::{ColumnKind, DatasetKind, RawTable};
use crate::{Error, Result};

/// Name of the encoded feature produced by a `sentiment` rule.
pub const SENTIMENT_FEATURE: &str = "SentimentScore";

const BUNDLED_TRADITIONAL: &str = include_str!("../../data/traditional.schema");
const BUNDLED_BIDDING: &str = include_str!("../../data/bidding.schema");

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "kebab-case")]
pub enum Rule {
    Numeric,
    /// `None` until resolved against data.
    Binary { classes: Option<[String; 2]> },
    Ordinal { classes: Option<Vec<String>> },
    Sentiment,
    Length { source: String },
    ResponseRate,
    ResponseStatus {
        funded: Vec<String>,
        non_funded: Vec<String>,
    },
}

impl Rule {
    pub fn is_response(&self) -> bool {
        matches!(self, Rule::ResponseRate | Rule::ResponseStatus { .. })
    }
}

/// Ordered column → rule map.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct EncodingSchema {
    pub rules: Vec<(String, Rule)>,
}

fn split_classes(s: &str) -> Vec<String> {
    s.split('|').map(|c| c.trim().to_string()).filter(|c| !c.is_empty()).collect()
}

impl EncodingSchema {
    pub fn bundled(kind: DatasetKind) -> Self {
        let text = match kind {
            DatasetKind::Traditional => BUNDLED_TRADITIONAL,
            DatasetKind::Bidding => BUNDLED_BIDDING,
        };
        Self::parse(text, "<bundled schema>").expect("bundled schema parses")
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, &path.display().to_string())
    }

    pub fn parse(text: &str, origin: &str) -> Result<Self> {
        let mut rules: Vec<(String, Rule)> = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let err = |message: String| Error::Config {
                path: origin.to_string(),
                line: i + 1,
                message,
            };
            let (name, spec) = line
                .split_once('=')
                .ok_or_else(|| err("expected `Column = rule`".into()))?;
            let name = name.trim().to_string();
            let spec = spec.trim();
            let (keyword, args) = spec.split_once(char::is_whitespace).unwrap_or((spec, ""));
            let args = args.trim();
            let rule = match keyword {
                "numeric" => Rule::Numeric,
                "sentiment" => Rule::Sentiment,
                "response-rate" => Rule::ResponseRate,
                "binary" if args.is_empty() => Rule::Binary { classes: None },
                "binary" => {
                    let c = split_classes(args);
                    if c.len() != 2 || c[0] == c[1] {
                        return Err(err("binary needs two distinct classes".into()));
                    }
                    Rule::Binary {
                        classes: Some([c[0].clone(), c[1].clone()]),
                    }
                }
                "ordinal" if args.is_empty() => Rule::Ordinal { classes: None },
                "ordinal" => {
                    let c = split_classes(args);
                    let unique: BTreeSet<&String> = c.iter().collect();
                    if unique.len() != c.len() {
                        return Err(err("ordinal classes must be distinct".into()));
                    }
                    Rule::Ordinal { classes: Some(c) }
                }
                "length" if !args.is_empty() => Rule::Length {
                    source: args.to_string(),
                },
                "response-status" => {
                    let (f, n) = args
                        .split_once(';')
                        .ok_or_else(|| err("expected `funded ; non-funded` statuses".into()))?;
                    Rule::ResponseStatus {
                        funded: split_classes(f),
                        non_funded: split_classes(n),
                    }
                }
                other => return Err(err(format!("unknown rule `{other}`"))),
            };
            if rules.iter().any(|(n, _)| *n == name) {
                return Err(err(format!("duplicate rule for `{name}`")));
            }
            rules.push((name, rule));
        }
        Ok(EncodingSchema { rules })
    }

    pub fn rule(&self, column: &str) -> Option<&Rule> {
        self.rules.iter().find(|(n, _)| n == column).map(|(_, r)| r)
    }

    pub fn responses(&self) -> impl Iterator<Item = &str> + '_ {
        self.rules
            .iter()
            .filter(|(_, r)| r.is_response())
            .map(|(n, _)| n.as_str())
    }

    pub fn sentiment_column(&self) -> Option<&str> {
        self.rules
            .iter()
            .find(|(_, r)| matches!(r, Rule::Sentiment))
            .map(|(n, _)| n.as_str())
    }

    /// Fills in data-dependent class lists and checks coverage: every
    /// categorical or text column of `t` needs a rule.
    pub fn resolve(&self, t: &RawTable) -> Result<EncodingSchema> {
        for c in &t.columns {
            if c.kind != ColumnKind::Numerical && self.rule(&c.name).is_none() {
                return Err(Error::invalid(format!(
                    "no encoding rule for {:?} column `{}`",
                    c.kind, c.name
                )));
            }
        }
        let mut rules = Vec::with_capacity(self.rules.len());
        for (name, rule) in &self.rules {
            let observed = || -> BTreeSet<String> {
                t.column_index(name)
                    .map(|j| t.cells(j).filter(|c| !c.is_missing()).map(|c| c.render()).collect())
                    .unwrap_or_default()
            };
            let resolved = match rule {
                Rule::Binary { classes: None } => {
                    let seen: Vec<String> = observed().into_iter().collect();
                    match seen.len() {
                        2 => Rule::Binary {
                            classes: Some([seen[0].clone(), seen[1].clone()]),
                        },
                        0 | 1 => rule.clone(),
                        n => {
                            return Err(Error::invalid(format!(
                                "binary column `{name}` has {n} classes"
                            )))
                        }
                    }
                }
                Rule::Ordinal { classes: None } => {
                    let seen: Vec<String> = observed().into_iter().collect();
                    if seen.is_empty() {
                        rule.clone()
                    } else {
                        Rule::Ordinal { classes: Some(seen) }
                    }
                }
                other => other.clone(),
            };
            rules.push((name.clone(), resolved));
        }
        Ok(EncodingSchema { rules })
    }

    /// Encodes one feature of a single record. `field` looks up raw values
    /// by column name. The sentiment feature may be supplied directly under
    /// its own name, which overrides scoring the description.
    pub fn encode_feature(
        &self,
        feature: &str,
        field: &dyn Fn(&str) -> Option<String>,
        lex: &SentimentLexicon,
    ) -> Result<f64> {
        let present = |name: &str| {
            field(name).filter(|v| !crate::data::is_missing_marker(v))
        };
        let number = |name: &str, v: String| -> Result<f64> {
            v.trim()
                .parse::<f64>()
                .ok()
                .filter(|x| x.is_finite())
                .ok_or(Error::ParseNumber {
                    column: name.to_string(),
                    row: 1,
                    value: v,
                })
        };
        if feature == SENTIMENT_FEATURE {
            if let Some(v) = present(SENTIMENT_FEATURE) {
                return number(SENTIMENT_FEATURE, v);
            }
            let col = self
                .sentiment_column()
                .ok_or_else(|| Error::MissingFeature(SENTIMENT_FEATURE.into()))?;
            // An absent description scores as empty text.
            return Ok(sentiment_score(&field(col).unwrap_or_default(), lex));
        }
        match self.rule(feature) {
            Some(Rule::Length { source }) => Ok(field(source).unwrap_or_default().chars().count() as f64),
            Some(rule) => {
                let v = present(feature).ok_or_else(|| Error::MissingFeature(feature.into()))?;
                encode_value(feature, rule, &v, lex)
            }
            None => {
                let v = present(feature).ok_or_else(|| Error::MissingFeature(feature.into()))?;
                number(feature, v)
            }
        }
    }

    /// Raw input fields needed to compute `features`, with their rules.
    pub fn input_fields(&self, features: &[String]) -> BTreeMap<String, Rule> {
        let mut out = BTreeMap::new();
        for f in features {
            if f == SENTIMENT_FEATURE {
                if let Some(c) = self.sentiment_column() {
                    out.insert(c.to_string(), Rule::Sentiment);
                }
                continue;
            }
            match self.rule(f) {
                Some(Rule::Length { source }) => {
                    out.entry(source.clone()).or_insert(Rule::Sentiment);
                }
                Some(r) => {
                    out.insert(f.clone(), r.clone());
                }
                None => {
                    out.insert(f.clone(), Rule::Numeric);
                }
            }
        }
        out
    }
}

/// Encodes a single raw string value under `rule`.
pub(crate) fn encode_value(column: &str, rule: &Rule, v: &str, lex: &SentimentLexicon) -> Result<f64> {
    let unseen = || Error::UnseenClass {
        column: column.to_string(),
        value: v.to_string(),
    };
    match rule {
        Rule::Numeric | Rule::ResponseRate => v
            .trim()
            .parse::<f64>()
            .ok()
            .filter(|x| x.is_finite())
            .ok_or_else(|| Error::ParseNumber {
                column: column.to_string(),
                row: 1,
                value: v.to_string(),
            }),
        Rule::Binary { classes: Some(c) } => {
            if v == c[0] {
                Ok(0.0)
            } else if v == c[1] {
                Ok(1.0)
            } else {
                Err(unseen())
            }
        }
        Rule::Ordinal { classes: Some(c) } => c
            .iter()
            .position(|x| x == v)
            .map(|i| (i + 1) as f64)
            .ok_or_else(unseen),
        Rule::Binary { classes: None } | Rule::Ordinal { classes: None } => Err(unseen()),
        Rule::Sentiment => Ok(sentiment_score(v, lex)),
        Rule::Length { .. } => Ok(v.chars().count() as f64),
        Rule::ResponseStatus { funded, non_funded } => {
            if funded.iter().any(|s| s == v) {
                Ok(1.0)
            } else if non_funded.iter().any(|s| s == v) {
                Ok(0.0)
            } else {
                Err(unseen())
            }
        }
    }
}
