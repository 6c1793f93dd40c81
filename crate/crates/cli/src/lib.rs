//! The commands behind the `mdsa` binary, usable as a library.
//!
//! A code is built once from a small config file into a code descriptor
//! ([`mdsa::descriptor::CodeDescriptor`]); every other command takes that
//! descriptor and rebuilds the identical code from it. Files are cut into
//! stripes of `k L` symbols and each stripe is one codeword, so a node's
//! shard holds `L` symbols per stripe.

use std::path::Path;

use thiserror::Error;

pub mod build;
pub mod compare;
pub mod config;
pub mod files;
pub mod pack;
pub mod repair;
pub mod shard;
pub mod verify;

pub use build::{BuildOptions, BuildOutcome, CodeSummary, LoadedCode};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("config line {line}: {what}")]
    Config { line: usize, what: String },
    #[error(transparent)]
    Descriptor(#[from] mdsa::descriptor::DescriptorError),
    #[error(transparent)]
    Vbk(#[from] mdsa::vbk::VbkError),
    #[error(transparent)]
    Transform(#[from] mdsa::transform::TransformError),
    #[error(transparent)]
    Field(#[from] mdsa::gf::FieldError),
    #[error(transparent)]
    Codec(#[from] mdsa::codec::CodecError),
    #[error(transparent)]
    Linalg(#[from] mdsa::linalg::LinalgError),
    #[error("repair: {0}")]
    Repair(#[from] mdsa::repair::RepairError),
    #[error("L = {sub_packetization} (r L = {system}) is past the limit of L <= 2^16, r L <= 2^18; pass --force to build anyway")]
    TooLarge { sub_packetization: String, system: String },
    #[error("corrupted header in {origin}: {what}")]
    Header { origin: String, what: String },
    #[error("shard of node {node}: payload has {got} bytes, header implies {expected}")]
    PayloadLength { node: usize, expected: usize, got: usize },
    #[error("shard of node {node}: byte {offset} is not a symbol of the field")]
    SymbolOutOfRange { node: usize, offset: usize },
    #[error("shard of node {node} was written for a different code (digest mismatch)")]
    DigestMismatch { node: usize },
    #[error("shard of node {node}: {what}")]
    ShardMismatch { node: usize, what: String },
    #[error("two shards claim node {0}")]
    DuplicateNode(usize),
    #[error("need {need} distinct shards, got {got}")]
    TooFewShards { need: usize, got: usize },
    #[error("shard of node {node} is corrupt: it disagrees with the other shards in stripe {stripe}")]
    CorruptShard { node: usize, stripe: usize },
    #[error("shards disagree in stripe {stripe} and there are too few of them to tell which is corrupt")]
    Inconsistent { stripe: usize },
    #[error("repair from d = {d} helpers needs d - k + 1 = {delta} in the degree set {degrees:?}")]
    Degree { d: usize, delta: i64, degrees: Vec<usize> },
    #[error("repair at d = {need} needs {need} helper shards, found {got}")]
    HelperShortfall { need: usize, got: usize },
    #[error("node {0} has no shard to help with")]
    MissingHelper(usize),
    #[error("compare: {0}")]
    Compare(String),
}

impl CliError {
    pub fn io(path: &Path, source: std::io::Error) -> CliError {
        CliError::Io {
            path: path.display().to_string(),
            source,
        }
    }
}

pub(crate) fn read_text(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}
