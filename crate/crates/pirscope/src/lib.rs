// SPDX-License-Identifier: Apache-2.0

//! File formats, HTTP providers, on-disk collections and the command
//! implementations for the `pirscope` binary. The algorithms live in
//! `pirscope-core`.

pub mod commands;
pub mod config;
pub mod error;
pub mod jsonl;
pub mod remote;
pub mod storage;

pub use config::RunConfig;
pub use error::{Error, Result};
