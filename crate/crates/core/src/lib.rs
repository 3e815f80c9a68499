//! Borrower-side loan-type recommendation for peer-to-peer lending.
//!
//! The pipeline mirrors how the engine is used in practice:
//!
//! 1. [`data`] loads the traditional and bidding loan exports, drops unusable
//!    columns and rows, and produces Monte-Carlo train/test splits.
//! 2. [`encoding`] turns categorical and free-text columns into numbers
//!    (binary, ordinal and lexicon-based sentiment scores).
//! 3. [`ml`] fits the regressors and classifiers behind one interface.
//! 4. [`select`] runs wrapper feature selection and [`eval`] scores models.
//! 5. [`sentiment_opt`] searches for the description sentiment that maximises
//!    funding, and [`recommend`] turns the three predictors into a
//!    recommendation by distance to the ideal point (0% interest, 100% funding).
//!
//! [`pipeline`] strings these steps together for the command-line tool and
//! the HTTP service.

pub mod data;
pub mod encoding;
pub mod error;
pub mod eval;
pub mod matrix;
pub mod ml;
pub mod pipeline;
pub mod recommend;
pub mod rng;
pub mod select;
pub mod sentiment_opt;

pub use error::{Error, Result};
pub use matrix::Matrix;
