//! Files to shards and back.
//!
//! The file is read as a bit string and cut into symbols of
//! `floor(log2 q)` bits ([`crate::pack`]); every `k L` symbols form one
//! stripe, placed on the data nodes `0..k` and encoded on its own. An
//! empty file still takes one (all-zero) stripe.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use mdsa::gf::Elem;
use mdsa::linalg::MatrixGF;
use rayon::prelude::*;

use crate::build::LoadedCode;
use crate::pack::{bits_per_symbol, pack, unpack};
use crate::shard::{shard_path, ShardFile, ShardHeader};
use crate::CliError;

/// Stripes per matrix product.
const BATCH: usize = 128;

fn batches(stripes: usize) -> Vec<(usize, usize)> {
    (0..stripes)
        .step_by(BATCH)
        .map(|s0| (s0, BATCH.min(stripes - s0)))
        .collect()
}

/// Stacks stripes `s0..s0+cols` of the given fragments into one matrix:
/// row block `b` is `fragment(nodes[b])`, one stripe per column.
fn gather<'a>(code: &LoadedCode, nodes: &[usize], s0: usize, cols: usize, fragment: impl Fn(usize, usize) -> &'a [Elem]) -> MatrixGF {
    let l = code.code().sub_packetization();
    let mut data = vec![Elem::ZERO; nodes.len() * l * cols];
    for (b, &node) in nodes.iter().enumerate() {
        for c in 0..cols {
            for (p, &v) in fragment(node, s0 + c).iter().enumerate() {
                data[(b * l + p) * cols + c] = v;
            }
        }
    }
    MatrixGF::from_vec(code.code().field(), nodes.len() * l, cols, data).expect("shape matches")
}

/// Encodes `bytes` into one shard per node.
pub fn encode_bytes(code: &LoadedCode, bytes: &[u8]) -> Result<Vec<ShardFile>, CliError> {
    let c = code.code();
    let (n, k, l) = (c.n(), c.k(), c.sub_packetization());
    let q = c.field().order();
    let bits = bits_per_symbol(q);
    let per_stripe = k * l;
    let stripes = (bytes.len() * 8).div_ceil(per_stripe * bits as usize).max(1);
    let symbols = pack(bytes, bits, stripes * per_stripe);
    let data_nodes: Vec<usize> = (0..k).collect();
    let data_of = |node: usize, s: usize| &symbols[s * per_stripe + node * l..s * per_stripe + (node + 1) * l];

    let parity: Vec<(usize, usize, Vec<usize>, MatrixGF)> = batches(stripes)
        .into_par_iter()
        .map(|(s0, cols)| {
            let input = gather(code, &data_nodes, s0, cols, data_of);
            let (erased, out) = code.codec.reconstruct_columns(&data_nodes, &input)?;
            Ok((s0, cols, erased, out))
        })
        .collect::<Result<_, CliError>>()?;

    let mut payloads: Vec<Vec<Elem>> = vec![Vec::with_capacity(stripes * l); n];
    for (node, payload) in payloads.iter_mut().enumerate().take(k) {
        for s in 0..stripes {
            payload.extend_from_slice(data_of(node, s));
        }
    }
    for node in k..n {
        payloads[node].resize(stripes * l, Elem::ZERO);
    }
    for (s0, cols, erased, out) in &parity {
        for (e, &node) in erased.iter().enumerate() {
            for c in 0..*cols {
                for p in 0..l {
                    payloads[node][(s0 + c) * l + p] = out.get(e * l + p, c);
                }
            }
        }
    }
    Ok(payloads
        .into_iter()
        .enumerate()
        .map(|(node, symbols)| ShardFile {
            header: ShardHeader {
                digest: code.digest,
                node: node as u16,
                q,
                sub_packetization: l as u64,
                stripes: stripes as u64,
                original_len: bytes.len() as u64,
            },
            symbols,
        })
        .collect())
}

/// Encodes `input` into `out_dir/node-NN.shard`, one file per node.
pub fn encode_file(code: &LoadedCode, input: &Path, out_dir: &Path) -> Result<Vec<PathBuf>, CliError> {
    let bytes = std::fs::read(input).map_err(|e| CliError::io(input, e))?;
    let shards = encode_bytes(code, &bytes)?;
    std::fs::create_dir_all(out_dir).map_err(|e| CliError::io(out_dir, e))?;
    shards
        .par_iter()
        .map(|s| {
            let path = shard_path(out_dir, s.node());
            s.write(&path)?;
            Ok(path)
        })
        .collect()
}

/// Checks that every shard belongs to `code` and that they agree on the
/// file they encode. Returns them keyed by node.
pub fn check_shards(code: &LoadedCode, shards: Vec<ShardFile>) -> Result<BTreeMap<usize, ShardFile>, CliError> {
    let c = code.code();
    let mut by_node = BTreeMap::new();
    let mut first: Option<ShardHeader> = None;
    for shard in shards {
        let h = shard.header;
        let node = shard.node();
        if h.digest != code.digest {
            return Err(CliError::DigestMismatch { node });
        }
        let mismatch = |what: String| CliError::ShardMismatch { node, what };
        if node >= c.n() {
            return Err(mismatch(format!("node index beyond n = {}", c.n())));
        }
        if h.q != c.field().order() || h.sub_packetization != c.sub_packetization() as u64 {
            return Err(mismatch(format!(
                "header says GF({}), L = {}; the code has GF({}), L = {}",
                h.q,
                h.sub_packetization,
                c.field().order(),
                c.sub_packetization()
            )));
        }
        if h.payload_symbols() != Some(shard.symbols.len()) {
            return Err(mismatch("payload length disagrees with the header".into()));
        }
        match first {
            None => first = Some(h),
            Some(f) if (f.stripes, f.original_len) != (h.stripes, h.original_len) => {
                return Err(mismatch(format!(
                    "{} stripes of a {}-byte file, other shards say {} stripes of {} bytes",
                    h.stripes, h.original_len, f.stripes, f.original_len
                )));
            }
            Some(_) => {}
        }
        if by_node.insert(node, shard).is_some() {
            return Err(CliError::DuplicateNode(node));
        }
    }
    Ok(by_node)
}

/// Index of the first stripe in which `out` (the erased nodes of one
/// batch) disagrees with a shard we hold, other than `skip`.
fn first_disagreement(
    l: usize,
    s0: usize,
    cols: usize,
    erased: &[usize],
    out: &MatrixGF,
    held: &BTreeMap<usize, ShardFile>,
    skip: Option<usize>,
) -> Option<usize> {
    (0..cols).find(|&c| {
        erased.iter().enumerate().any(|(e, node)| {
            Some(*node) != skip && held.get(node).is_some_and(|shard| {
                let have = shard.stripe(s0 + c);
                (0..l).any(|p| out.get(e * l + p, c) != have[p])
            })
        })
    })
    .map(|c| s0 + c)
}

/// Whether the shards other than `skip` agree on stripe `s`.
fn consistent_without(code: &LoadedCode, held: &BTreeMap<usize, ShardFile>, skip: usize, s: usize) -> Result<bool, CliError> {
    let k = code.code().k();
    let survivors: Vec<usize> = held.keys().copied().filter(|&n| n != skip).take(k).collect();
    let input = gather(code, &survivors, s, 1, |node, s| held[&node].stripe(s));
    let (erased, out) = code.codec.reconstruct_columns(&survivors, &input)?;
    let l = code.code().sub_packetization();
    Ok(first_disagreement(l, s, 1, &erased, &out, held, Some(skip)).is_none())
}

/// Recovers the original bytes from at least `k` shards. With more than
/// `k`, every stripe is checked against the extra shards first; a shard
/// that disagrees is named if the others single it out.
pub fn decode_shards(code: &LoadedCode, shards: Vec<ShardFile>) -> Result<Vec<u8>, CliError> {
    let c = code.code();
    let (k, l) = (c.k(), c.sub_packetization());
    let held = check_shards(code, shards)?;
    if held.len() < k {
        return Err(CliError::TooFewShards { need: k, got: held.len() });
    }
    let h = held.values().next().expect("at least k shards").header;
    let stripes = h.stripes as usize;
    let survivors: Vec<usize> = held.keys().copied().take(k).collect();

    let results: Vec<(usize, usize, Vec<usize>, MatrixGF, Option<usize>)> = batches(stripes)
        .into_par_iter()
        .map(|(s0, cols)| {
            let input = gather(code, &survivors, s0, cols, |node, s| held[&node].stripe(s));
            let (erased, out) = code.codec.reconstruct_columns(&survivors, &input)?;
            let bad = first_disagreement(l, s0, cols, &erased, &out, &held, None);
            Ok((s0, cols, erased, out, bad))
        })
        .collect::<Result<_, CliError>>()?;

    if let Some(stripe) = results.iter().filter_map(|r| r.4).min() {
        // leaving out the bad shard must leave an extra one to check against
        let mut culprits = Vec::new();
        if held.len() > k + 1 {
            for &node in held.keys() {
                if consistent_without(code, &held, node, stripe)? {
                    culprits.push(node);
                }
            }
        }
        return Err(match culprits[..] {
            [node] => CliError::CorruptShard { node, stripe },
            _ => CliError::Inconsistent { stripe },
        });
    }

    let mut symbols = vec![Elem::ZERO; stripes * k * l];
    for node in 0..k {
        if let Some(shard) = held.get(&node) {
            for s in 0..stripes {
                symbols[(s * k + node) * l..(s * k + node + 1) * l].copy_from_slice(shard.stripe(s));
            }
        }
    }
    for (s0, cols, erased, out, _) in &results {
        for (e, &node) in erased.iter().enumerate().filter(|(_, &n)| n < k) {
            for c in 0..*cols {
                let at = ((s0 + c) * k + node) * l;
                for p in 0..l {
                    symbols[at + p] = out.get(e * l + p, c);
                }
            }
        }
    }
    Ok(unpack(&symbols, bits_per_symbol(h.q), h.original_len as usize))
}

/// Reads the shard files (directories expand to their `*.shard` files),
/// decodes, and writes the original file to `out`.
pub fn decode_files(code: &LoadedCode, inputs: &[PathBuf], out: &Path) -> Result<usize, CliError> {
    let paths = crate::shard::expand_paths(inputs)?;
    let shards = paths
        .par_iter()
        .map(|p| ShardFile::read(p))
        .collect::<Result<Vec<_>, _>>()?;
    let bytes = decode_shards(code, shards)?;
    std::fs::write(out, &bytes).map_err(|e| CliError::io(out, e))?;
    Ok(bytes.len())
}
