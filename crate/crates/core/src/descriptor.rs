//! Text form of a code: parameters, field, constants and lift rounds, one
//! `key=value` per line, closed by a SHA-256 digest of everything above it.
//! Rebuilding from the text gives the same parity blocks bit for bit.
//!
//! ```
//! use mdsa::descriptor::CodeDescriptor;
//! use mdsa::gf::Field;
//! use mdsa::vbk::{construct, VbkParams};
//!
//! let params = VbkParams::new(6, 3, 2, &[2, 3], Field::new(32).unwrap()).unwrap();
//! let (base, _) = construct(&params, 0).unwrap();
//! let text = CodeDescriptor::from_code(&base).unwrap().to_text();
//! let again = CodeDescriptor::parse(&text).unwrap().build().unwrap();
//! assert_eq!(again.block(1, 4), base.block(1, 4));
//! ```

use std::fmt::Write as _;
use std::sync::Arc;

use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::code::ArrayCode;
use crate::gf::{Elem, Field, FieldError};
use crate::transform::{lift_code, LiftRound, TransformError};
use crate::vbk::{build_code, VbkConstants, VbkError, VbkParams};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DescriptorError {
    #[error("missing key `{0}`")]
    Missing(&'static str),
    #[error("line {line}: {what}")]
    Syntax { line: usize, what: String },
    #[error("bad value for `{key}`: {value}")]
    BadValue { key: String, value: String },
    #[error("digest mismatch: file says {stated}, content hashes to {actual}")]
    DigestMismatch { stated: String, actual: String },
    #[error("no digest line")]
    NoDigest,
    #[error("unsupported format version {0}")]
    Version(u32),
    #[error("modulus {stated:?} differs from the field's {actual:?}")]
    Modulus { stated: Vec<u32>, actual: Vec<u32> },
    #[error("code was not built from base constants")]
    NoOrigin,
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Vbk(#[from] VbkError),
    #[error(transparent)]
    Transform(#[from] TransformError),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CodeDescriptor {
    pub n: usize,
    pub k: usize,
    pub delta0: usize,
    pub degrees: Vec<usize>,
    pub q: u32,
    pub modulus: Vec<u32>,
    pub constants: VbkConstants,
    pub round_goal_sets: Vec<Vec<usize>>,
}

fn join<T: ToString>(v: &[T]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

fn parse_list<T: std::str::FromStr>(key: &str, value: &str) -> Result<Vec<T>, DescriptorError> {
    if value.trim().is_empty() {
        return Ok(Vec::new());
    }
    value
        .split(',')
        .map(|s| {
            s.trim().parse().map_err(|_| DescriptorError::BadValue {
                key: key.into(),
                value: value.into(),
            })
        })
        .collect()
}

fn parse_one<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, DescriptorError> {
    value.trim().parse().map_err(|_| DescriptorError::BadValue {
        key: key.into(),
        value: value.into(),
    })
}

fn elems(key: &str, value: &str) -> Result<Vec<Elem>, DescriptorError> {
    Ok(parse_list::<u16>(key, value)?.into_iter().map(Elem).collect())
}

/// SHA-256 of `body`, hex encoded.
pub fn digest_hex(body: &str) -> String {
    hex::encode(Sha256::digest(body.as_bytes()))
}

impl CodeDescriptor {
    pub fn from_code(code: &ArrayCode) -> Result<CodeDescriptor, DescriptorError> {
        let (params, constants) = code.origin().ok_or(DescriptorError::NoOrigin)?;
        Ok(CodeDescriptor {
            n: params.n,
            k: params.k,
            delta0: params.delta0,
            degrees: params.degrees.as_slice().to_vec(),
            q: params.field.order(),
            modulus: params.field.modulus().to_vec(),
            constants: constants.clone(),
            round_goal_sets: code.round_goal_sets(),
        })
    }

    fn body(&self) -> String {
        let mut s = String::new();
        let c = &self.constants;
        writeln!(s, "# mdsa code descriptor").unwrap();
        writeln!(s, "format={FORMAT_VERSION}").unwrap();
        writeln!(s, "n={}", self.n).unwrap();
        writeln!(s, "k={}", self.k).unwrap();
        writeln!(s, "delta0={}", self.delta0).unwrap();
        writeln!(s, "degrees={}", join(&self.degrees)).unwrap();
        writeln!(s, "q={}", self.q).unwrap();
        writeln!(s, "modulus={}", join(&self.modulus)).unwrap();
        writeln!(s, "seed={}", c.seed).unwrap();
        writeln!(s, "epsilon={}", c.epsilon).unwrap();
        for (i, row) in c.theta.iter().enumerate() {
            writeln!(s, "theta{i}={}", join(row)).unwrap();
        }
        writeln!(s, "zeta={}", join(&c.zeta)).unwrap();
        let rounds: Vec<String> = self.round_goal_sets.iter().map(|g| join(g)).collect();
        writeln!(s, "round_goal_sets={}", rounds.join(";")).unwrap();
        s
    }

    /// The full text, digest line included.
    pub fn to_text(&self) -> String {
        let body = self.body();
        let digest = digest_hex(&body);
        format!("{body}digest={digest}\n")
    }

    /// Raw SHA-256 of the text above the digest line.
    pub fn digest(&self) -> [u8; 32] {
        Sha256::digest(self.body().as_bytes()).into()
    }

    pub fn parse(text: &str) -> Result<CodeDescriptor, DescriptorError> {
        let pos = text.rfind("digest=").ok_or(DescriptorError::NoDigest)?;
        if pos != 0 && !text[..pos].ends_with('\n') {
            return Err(DescriptorError::NoDigest);
        }
        let (body, tail) = text.split_at(pos);
        let stated = tail["digest=".len()..].trim().to_string();
        let actual = digest_hex(body);
        if stated != actual {
            return Err(DescriptorError::DigestMismatch { stated, actual });
        }
        let mut map = std::collections::BTreeMap::new();
        for (no, line) in body.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| DescriptorError::Syntax {
                line: no + 1,
                what: "expected key=value".into(),
            })?;
            map.insert(key.trim().to_string(), value.trim().to_string());
        }
        let get = |key: &'static str| map.get(key).map(String::as_str).ok_or(DescriptorError::Missing(key));
        let version: u32 = parse_one("format", get("format")?)?;
        if version != FORMAT_VERSION {
            return Err(DescriptorError::Version(version));
        }
        let mut theta = Vec::new();
        while let Some(v) = map.get(&format!("theta{}", theta.len())) {
            theta.push(elems("theta", v)?);
        }
        let rounds = get("round_goal_sets")?;
        let round_goal_sets = if rounds.is_empty() {
            Vec::new()
        } else {
            rounds
                .split(';')
                .map(|g| parse_list("round_goal_sets", g))
                .collect::<Result<_, _>>()?
        };
        Ok(CodeDescriptor {
            n: parse_one("n", get("n")?)?,
            k: parse_one("k", get("k")?)?,
            delta0: parse_one("delta0", get("delta0")?)?,
            degrees: parse_list("degrees", get("degrees")?)?,
            q: parse_one("q", get("q")?)?,
            modulus: parse_list("modulus", get("modulus")?)?,
            constants: VbkConstants {
                seed: parse_one("seed", get("seed")?)?,
                epsilon: Elem(parse_one("epsilon", get("epsilon")?)?),
                theta,
                zeta: elems("zeta", get("zeta")?)?,
            },
            round_goal_sets,
        })
    }

    pub fn params(&self) -> Result<VbkParams, DescriptorError> {
        let field = Field::new(self.q)?;
        if field.modulus() != self.modulus.as_slice() {
            return Err(DescriptorError::Modulus {
                stated: self.modulus.clone(),
                actual: field.modulus().to_vec(),
            });
        }
        Ok(VbkParams::new(self.n, self.k, self.delta0, &self.degrees, field)?)
    }

    /// Sub-packetization of the described code, without building it.
    pub fn sub_packetization(&self) -> Option<u128> {
        let params = self.params().ok()?;
        crate::transform::final_sub_packetization(
            params.sub_packetization(),
            &params.degrees,
            self.round_goal_sets.len(),
        )
    }

    /// Builds the base code and applies the recorded lift rounds.
    pub fn build(&self) -> Result<ArrayCode, DescriptorError> {
        let params = self.params()?;
        let mut code = Arc::new(build_code(&params, &self.constants)?);
        for goal in &self.round_goal_sets {
            let round = LiftRound::new(code.clone(), goal)?;
            code = Arc::new(lift_code(&round)?);
        }
        Ok(Arc::try_unwrap(code).unwrap_or_else(|a| (*a).clone()))
    }
}
