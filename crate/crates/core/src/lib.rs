//! Data toolkit for multiple-choice distractor generation on Chinese
//! reading comprehension.
//!
//! The pipeline runs left to right: [`corpus`] parses and cleans raw
//! datasets, [`taxonomy`] labels questions as templated or not,
//! [`promptforge`] turns items into task stems, [`maskpattern`] renders the
//! stems as training examples, [`multitask`] weights them into a mixture
//! plan, and [`metrics`]/[`evalharness`] score what a model produced.

pub mod corpus;
pub mod evalharness;
pub mod jsonl;
pub mod maskpattern;
pub mod metrics;
pub mod multitask;
pub mod promptforge;
pub mod taxonomy;
pub mod text;
