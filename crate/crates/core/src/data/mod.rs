//! Loading, cleaning, splitting and synthesising loan tables.

mod columns;
mod dataset;
mod filter;
mod raw;
mod split;
pub mod synth;

pub use columns::{
    known_columns, response_columns, ColumnKind, DatasetKind, BORROWER_RATE, LOAN_STATUS,
};
pub use dataset::{Dataset, Target};
pub use filter::{filter_table, DropReport, FilterPolicy, Filtered};
pub use raw::{is_missing_marker, load_table, read_table, Cell, Column, RawTable};
pub use split::{split_indices, split_montecarlo, SplitPlan};
