//! Numeric encoding of categorical and free-text loan features.

mod encode;
mod schema;
mod sentiment;

pub use encode::{decode_ordinal, encode_binary, encode_dataset, encode_ordinal};
pub use schema::{EncodingSchema, Rule, SENTIMENT_FEATURE};
pub use sentiment::{compound, sentiment_score, tokenize, SentimentLexicon, COMPOUND_ALPHA, NEGATION_SCALAR};
