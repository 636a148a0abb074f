//! Tabular ingestion, declarative feature coding, class balancing and the
//! difficulty-stratified train/test split.

mod balance;
mod coding;
mod split;
mod table;

pub use balance::balance_classes;
pub use coding::{
    apply_coding, classifier_inputs, AutoKeyword, CodingReport, CodingSpec, Cutpoints, Direction, FeatureRule, ResolvedRule, Rule,
    CODING_SCHEMA_VERSION,
};
pub use split::{read_split_csv, stratified_split, train_count, write_split_csv, BinSplit, Role, SplitAssignment, SplitEntry};
pub use table::{ingest_csv, ingest_reader, Column, ColumnKind, ColumnSpec, LabelSpec, Schema, Table};
