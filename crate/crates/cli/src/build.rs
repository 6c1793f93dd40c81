//! Building a code from a config, and loading one from its descriptor.

use std::fmt::Write as _;
use std::path::Path;

use mdsa::codec::Codec;
use mdsa::descriptor::CodeDescriptor;
use mdsa::gf::Field;
use mdsa::transform::{algorithm2, final_sub_packetization};
use mdsa::vbk::{construct, default_field_order, min_field_order, VbkParams};
use mdsa::verify::{check_tmds, Coverage, PropertyReport};
use mdsa::ArrayCode;
use serde::Serialize;

use crate::config::BuildConfig;
use crate::CliError;

/// Largest sub-packetization built without `--force`.
pub const MAX_SUB_PACKETIZATION: u128 = 1 << 16;
/// Largest `r L` (side of the dense decoding system) built without `--force`.
pub const MAX_SYSTEM: u128 = 1 << 18;

#[derive(Debug, Clone, Default)]
pub struct BuildOptions {
    /// Overrides the config's seed.
    pub seed: Option<u64>,
    /// Overrides the config's field order.
    pub field: Option<u32>,
    pub force: bool,
    /// Run the base-code certificate before lifting.
    pub preflight: Option<Coverage>,
}

/// Parameters of a code, computed without building it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CodeSummary {
    pub n: usize,
    pub k: usize,
    pub delta0: usize,
    pub degrees: Vec<usize>,
    pub q: u32,
    pub field_bound: u32,
    pub seed: u64,
    pub rounds: usize,
    pub base_sub_packetization: usize,
    /// Decimal; may exceed `u64`.
    pub sub_packetization: String,
    /// The same as a power, `lcm(degrees)^rounds`.
    pub sub_packetization_power: String,
    pub materializable: bool,
}

impl CodeSummary {
    pub fn render(&self) -> String {
        let mut s = String::new();
        let degrees: Vec<String> = self.degrees.iter().map(|d| d.to_string()).collect();
        writeln!(s, "code: (n, k) = ({}, {}), r = {}", self.n, self.k, self.n - self.k).unwrap();
        writeln!(s, "degrees: {{{}}} (d = {})", degrees.join(","), self.helper_counts()).unwrap();
        writeln!(s, "field: GF({}), construction needs q >= {}", self.q, self.field_bound).unwrap();
        writeln!(s, "seed: {}", self.seed).unwrap();
        writeln!(
            s,
            "sub-packetization: L = {} = {} (base {}, {} lift rounds)",
            self.sub_packetization_power, self.sub_packetization, self.base_sub_packetization, self.rounds
        )
        .unwrap();
        writeln!(
            s,
            "materializable: {}",
            if self.materializable { "yes" } else { "no (report only)" }
        )
        .unwrap();
        s
    }

    fn helper_counts(&self) -> String {
        let d: Vec<String> = self.degrees.iter().map(|x| (self.k + x - 1).to_string()).collect();
        d.join(",")
    }
}

/// `Ok` if a code of this size may be built.
pub fn guard(sub_packetization: Option<u128>, r: usize, force: bool) -> Result<(), CliError> {
    let system = sub_packetization.and_then(|l| l.checked_mul(r as u128));
    let fits = matches!((sub_packetization, system), (Some(l), Some(s)) if l <= MAX_SUB_PACKETIZATION && s <= MAX_SYSTEM);
    if fits || force {
        return Ok(());
    }
    let show = |v: Option<u128>| v.map_or("more than 2^128".to_string(), |v| v.to_string());
    Err(CliError::TooLarge {
        sub_packetization: show(sub_packetization),
        system: show(system),
    })
}

fn params(cfg: &BuildConfig, opts: &BuildOptions) -> Result<VbkParams, CliError> {
    let q = opts
        .field
        .or(cfg.q)
        .unwrap_or_else(|| default_field_order(cfg.n, cfg.delta0.max(1)));
    Ok(VbkParams::new(cfg.n, cfg.k, cfg.delta0, &cfg.degrees, Field::new(q)?)?)
}

/// What `cmd_build` would build; never builds anything.
pub fn summarize(cfg: &BuildConfig, opts: &BuildOptions) -> Result<CodeSummary, CliError> {
    let p = params(cfg, opts)?;
    let rounds = p.tau();
    let l = final_sub_packetization(p.sub_packetization(), &p.degrees, rounds);
    Ok(CodeSummary {
        n: p.n,
        k: p.k,
        delta0: p.delta0,
        degrees: p.degrees.as_slice().to_vec(),
        q: p.field.order(),
        field_bound: min_field_order(p.n, p.delta0),
        seed: opts.seed.unwrap_or(cfg.seed),
        rounds,
        base_sub_packetization: p.sub_packetization(),
        sub_packetization: l.map_or("more than 2^128".into(), |l| l.to_string()),
        sub_packetization_power: format!("{}^{}", p.degrees.lcm(), rounds),
        materializable: guard(l, p.r(), false).is_ok(),
    })
}

#[derive(Debug)]
pub enum BuildOutcome {
    Built {
        summary: CodeSummary,
        descriptor: CodeDescriptor,
        code: ArrayCode,
        preflight: Vec<PropertyReport>,
    },
    /// Too large to build; only the parameters.
    ReportOnly { summary: CodeSummary },
}

/// Builds the base code, runs the optional certificate, and lifts it once
/// per goal set.
pub fn cmd_build(cfg: &BuildConfig, opts: &BuildOptions) -> Result<BuildOutcome, CliError> {
    let summary = summarize(cfg, opts)?;
    if !summary.materializable && !opts.force {
        return Ok(BuildOutcome::ReportOnly { summary });
    }
    let p = params(cfg, opts)?;
    let (base, _) = construct(&p, summary.seed)?;
    let preflight = opts.preflight.map(|c| check_tmds(&base, &c)).unwrap_or_default();
    let code = algorithm2(base)?;
    let descriptor = CodeDescriptor::from_code(&code)?;
    Ok(BuildOutcome::Built {
        summary,
        descriptor,
        code,
        preflight,
    })
}

/// A code rebuilt from its descriptor, with its encoder.
#[derive(Debug)]
pub struct LoadedCode {
    pub descriptor: CodeDescriptor,
    pub digest: [u8; 32],
    pub codec: Codec,
}

impl LoadedCode {
    pub fn from_descriptor(descriptor: CodeDescriptor, force: bool) -> Result<LoadedCode, CliError> {
        guard(descriptor.sub_packetization(), descriptor.n - descriptor.k, force)?;
        let code = descriptor.build()?;
        Ok(LoadedCode::from_parts(descriptor, code))
    }

    /// Pairs a descriptor with the code it describes, without rebuilding.
    pub fn from_parts(descriptor: CodeDescriptor, code: ArrayCode) -> LoadedCode {
        LoadedCode {
            digest: descriptor.digest(),
            descriptor,
            codec: Codec::new(code),
        }
    }

    pub fn parse(text: &str, force: bool) -> Result<LoadedCode, CliError> {
        LoadedCode::from_descriptor(CodeDescriptor::parse(text)?, force)
    }

    pub fn open(path: &Path, force: bool) -> Result<LoadedCode, CliError> {
        LoadedCode::parse(&crate::read_text(path)?, force)
    }

    pub fn code(&self) -> &ArrayCode {
        self.codec.code()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(n: usize, k: usize, degrees: &[usize]) -> BuildConfig {
        BuildConfig {
            n,
            k,
            delta0: degrees[0],
            degrees: degrees.to_vec(),
            q: None,
            seed: 0,
        }
    }

    #[test]
    fn small_code_summary() {
        let s = summarize(&cfg(6, 3, &[2, 3]), &BuildOptions::default()).unwrap();
        assert_eq!((s.q, s.field_bound), (32, 20));
        assert_eq!(s.sub_packetization, "216");
        assert_eq!(s.sub_packetization_power, "6^3");
        assert!(s.materializable);
    }

    #[test]
    fn flagship_code_is_report_only() {
        let c = cfg(24, 20, &[2, 3]);
        let s = summarize(&c, &BuildOptions::default()).unwrap();
        assert_eq!(s.sub_packetization_power, "6^12");
        assert_eq!(s.sub_packetization, 6u128.pow(12).to_string());
        assert_eq!(s.q, 128);
        assert!(!s.materializable);
        assert!(matches!(cmd_build(&c, &BuildOptions::default()).unwrap(), BuildOutcome::ReportOnly { .. }));
    }

    #[test]
    fn guard_limits() {
        assert!(guard(Some(1 << 16), 4, false).is_ok());
        assert!(guard(Some(1 << 16), 5, false).is_err());
        assert!(guard(Some((1 << 16) + 1), 1, false).is_err());
        assert!(guard(None, 1, true).is_ok());
    }
}
