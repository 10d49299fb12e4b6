//! Configuration, experiment suites and report writers behind the `hypharm`
//! binary.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;
pub mod families;
pub mod output;
pub mod selftest;
pub mod suites;
pub mod svg;
