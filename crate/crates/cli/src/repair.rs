//! Rebuilding one lost shard from `d` helpers.
//!
//! Each helper sends `R f_j` for every stripe, where `R` is the failed
//! node's repair matrix at the chosen degree; the symbols it reads are the
//! column supports of `R`'s rows. The report compares both counts with the
//! cut-set bound `d L / (d - k + 1)`.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use mdsa::repair::{transcript_audit, PreparedRepair, RepairAudit, RepairError, RepairPlan};
use rayon::prelude::*;
use serde::Serialize;

use crate::build::LoadedCode;
use crate::files::check_shards;
use crate::shard::{expand_paths, shard_path, ShardFile, ShardHeader};
use crate::CliError;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RepairReport {
    pub node: usize,
    pub d: usize,
    pub helpers: Vec<usize>,
    pub stripes: usize,
    pub sub_packetization: usize,
    /// Per stripe, summed over helpers.
    pub per_stripe: RepairAudit,
    pub total_downloaded: usize,
    pub total_accessed: usize,
}

impl RepairReport {
    pub fn to_text(&self) -> String {
        let a = &self.per_stripe;
        let yes = |b: bool| if b { "yes" } else { "no" };
        format!(
            "node {} from d = {} helpers {:?}: {}/{} symbols, optimal access: {}\n\
             per stripe: downloaded {}, accessed {}, bound d L/(d-k+1) = {}, optimal bandwidth: {}\n\
             {} stripes: {} symbols downloaded, {} accessed\n",
            self.node,
            self.d,
            self.helpers,
            a.downloaded,
            a.bound,
            yes(a.optimal_repair && a.optimal_access),
            a.downloaded,
            a.accessed,
            a.bound,
            yes(a.optimal_repair),
            self.stripes,
            self.total_downloaded,
            self.total_accessed,
        )
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("report serializes")
    }
}

/// Rebuilds node `node`'s shard from the others at degree `d`. Uses
/// `helpers` if given, otherwise the `d` lowest-numbered nodes present.
pub fn repair_shards(
    code: &LoadedCode,
    shards: Vec<ShardFile>,
    node: usize,
    d: usize,
    helpers: Option<&[usize]>,
) -> Result<(ShardFile, RepairReport), CliError> {
    let c = code.code();
    let (k, l) = (c.k(), c.sub_packetization());
    let degrees = c.degrees().as_slice().to_vec();
    let delta = d as i64 - k as i64 + 1;
    if delta < 1 || c.degrees().index_of(delta as usize).is_none() {
        return Err(CliError::Degree { d, delta, degrees });
    }
    let mut held = check_shards(code, shards)?;
    held.remove(&node);
    let helpers: Vec<usize> = match helpers {
        Some(h) => {
            if let Some(&missing) = h.iter().find(|j| !held.contains_key(j)) {
                return Err(CliError::MissingHelper(missing));
            }
            h.to_vec()
        }
        None => {
            if held.len() < d {
                return Err(CliError::HelperShortfall { need: d, got: held.len() });
            }
            held.keys().copied().take(d).collect()
        }
    };
    let plan = RepairPlan::with_degree(c, node, d, &helpers)?;
    let prepared = PreparedRepair::new(c, &plan)?;
    let pair = c.repair_pair(node, plan.z).ok_or(RepairError::DegreeUnavailable { node, z: plan.z })?;
    let header = held.values().next().expect("helpers exist").header;
    let stripes = header.stripes as usize;

    let rebuilt: Vec<_> = (0..stripes)
        .into_par_iter()
        .map(|s| {
            let downloads: BTreeMap<_, _> = plan
                .helpers
                .iter()
                .map(|&j| Ok((j, pair.r.mul_vec(held[&j].stripe(s))?)))
                .collect::<Result<_, mdsa::linalg::LinalgError>>()?;
            Ok(prepared.run(&downloads)?)
        })
        .collect::<Result<_, CliError>>()?;

    let audit = transcript_audit(&rebuilt[0].1, k);
    let mut symbols = Vec::with_capacity(stripes * l);
    let (mut total_downloaded, mut total_accessed) = (0, 0);
    for (fragment, transcript) in &rebuilt {
        symbols.extend_from_slice(fragment);
        total_downloaded += transcript.downloaded();
        total_accessed += transcript.accessed();
    }
    let shard = ShardFile {
        header: ShardHeader {
            node: node as u16,
            ..header
        },
        symbols,
    };
    let report = RepairReport {
        node,
        d,
        helpers: plan.helpers.clone(),
        stripes,
        sub_packetization: l,
        per_stripe: audit,
        total_downloaded,
        total_accessed,
    };
    Ok((shard, report))
}

/// Reads the shards under `inputs`, repairs `node`, and writes the new
/// shard to `out` (default: its usual name in the first input directory).
pub fn repair_files(
    code: &LoadedCode,
    inputs: &[PathBuf],
    node: usize,
    d: usize,
    helpers: Option<&[usize]>,
    out: Option<&Path>,
) -> Result<(PathBuf, RepairReport), CliError> {
    let paths = expand_paths(inputs)?;
    let shards = paths
        .par_iter()
        .map(|p| ShardFile::read(p))
        .collect::<Result<Vec<_>, _>>()?;
    let (shard, report) = repair_shards(code, shards, node, d, helpers)?;
    let out = match out {
        Some(p) => p.to_path_buf(),
        None => {
            let dir = inputs
                .iter()
                .find(|p| p.is_dir())
                .cloned()
                .or_else(|| paths.first().and_then(|p| p.parent().map(Path::to_path_buf)))
                .unwrap_or_default();
            shard_path(&dir, node)
        }
    };
    shard.write(&out)?;
    Ok((out, report))
}
