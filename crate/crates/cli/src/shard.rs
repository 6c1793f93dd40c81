//! Shard files: a fixed 68-byte little-endian header followed by the
//! node's symbols, stripe after stripe.
//!
//! | offset | size | field |
//! |-------:|-----:|-------|
//! | 0  | 4  | magic `MDSA` |
//! | 4  | 2  | format version |
//! | 6  | 32 | SHA-256 digest of the code descriptor |
//! | 38 | 2  | node index |
//! | 40 | 4  | field order `q` |
//! | 44 | 8  | sub-packetization `L` |
//! | 52 | 8  | stripe count |
//! | 60 | 8  | length of the original file in bytes |
//!
//! Symbols take one byte when `q <= 256` and two bytes otherwise.

use std::path::{Path, PathBuf};

use mdsa::gf::Elem;

use crate::CliError;

pub const MAGIC: [u8; 4] = *b"MDSA";
pub const VERSION: u16 = 1;
pub const HEADER_LEN: usize = 68;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ShardHeader {
    pub digest: [u8; 32],
    pub node: u16,
    pub q: u32,
    pub sub_packetization: u64,
    pub stripes: u64,
    pub original_len: u64,
}

/// Bytes per stored symbol.
pub fn symbol_width(q: u32) -> usize {
    if q <= 256 {
        1
    } else {
        2
    }
}

impl ShardHeader {
    pub fn to_bytes(&self) -> [u8; HEADER_LEN] {
        let mut b = [0u8; HEADER_LEN];
        b[0..4].copy_from_slice(&MAGIC);
        b[4..6].copy_from_slice(&VERSION.to_le_bytes());
        b[6..38].copy_from_slice(&self.digest);
        b[38..40].copy_from_slice(&self.node.to_le_bytes());
        b[40..44].copy_from_slice(&self.q.to_le_bytes());
        b[44..52].copy_from_slice(&self.sub_packetization.to_le_bytes());
        b[52..60].copy_from_slice(&self.stripes.to_le_bytes());
        b[60..68].copy_from_slice(&self.original_len.to_le_bytes());
        b
    }

    /// Parses the header; `Err` carries what is wrong with it.
    pub fn from_bytes(b: &[u8]) -> Result<ShardHeader, String> {
        if b.len() < HEADER_LEN {
            return Err(format!("{} bytes, shorter than the {HEADER_LEN}-byte header", b.len()));
        }
        if b[0..4] != MAGIC {
            return Err("bad magic".into());
        }
        let version = u16::from_le_bytes([b[4], b[5]]);
        if version != VERSION {
            return Err(format!("unsupported version {version}"));
        }
        let u64_at = |o: usize| u64::from_le_bytes(b[o..o + 8].try_into().expect("8 bytes"));
        let h = ShardHeader {
            digest: b[6..38].try_into().expect("32 bytes"),
            node: u16::from_le_bytes([b[38], b[39]]),
            q: u32::from_le_bytes(b[40..44].try_into().expect("4 bytes")),
            sub_packetization: u64_at(44),
            stripes: u64_at(52),
            original_len: u64_at(60),
        };
        if h.q < 2 || h.sub_packetization == 0 || h.stripes == 0 {
            return Err("zero field order, sub-packetization or stripe count".into());
        }
        Ok(h)
    }

    /// Symbols in the payload: `stripes * L`.
    pub fn payload_symbols(&self) -> Option<usize> {
        usize::try_from(self.stripes.checked_mul(self.sub_packetization)?).ok()
    }
}

/// A shard held in memory.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ShardFile {
    pub header: ShardHeader,
    pub symbols: Vec<Elem>,
}

impl ShardFile {
    pub fn node(&self) -> usize {
        self.header.node as usize
    }

    /// Symbols of one stripe.
    pub fn stripe(&self, s: usize) -> &[Elem] {
        let l = self.header.sub_packetization as usize;
        &self.symbols[s * l..(s + 1) * l]
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let width = symbol_width(self.header.q);
        let mut out = Vec::with_capacity(HEADER_LEN + self.symbols.len() * width);
        out.extend_from_slice(&self.header.to_bytes());
        if width == 1 {
            out.extend(self.symbols.iter().map(|s| s.0 as u8));
        } else {
            out.extend(self.symbols.iter().flat_map(|s| s.0.to_le_bytes()));
        }
        out
    }

    /// Parses a whole shard. `origin` names the source in errors.
    pub fn from_bytes(bytes: &[u8], origin: &str) -> Result<ShardFile, CliError> {
        let header = ShardHeader::from_bytes(bytes).map_err(|what| CliError::Header {
            origin: origin.to_string(),
            what,
        })?;
        let node = header.node as usize;
        let width = symbol_width(header.q);
        let count = header.payload_symbols().ok_or_else(|| CliError::Header {
            origin: origin.to_string(),
            what: "stripe count overflows".into(),
        })?;
        let payload = &bytes[HEADER_LEN..];
        if count.checked_mul(width) != Some(payload.len()) {
            return Err(CliError::PayloadLength {
                node,
                expected: count.saturating_mul(width),
                got: payload.len(),
            });
        }
        let symbols: Vec<Elem> = if width == 1 {
            payload.iter().map(|&b| Elem(b as u16)).collect()
        } else {
            payload
                .chunks_exact(2)
                .map(|c| Elem(u16::from_le_bytes([c[0], c[1]])))
                .collect()
        };
        if let Some(at) = symbols.iter().position(|s| s.0 as u32 >= header.q) {
            return Err(CliError::SymbolOutOfRange {
                node,
                offset: HEADER_LEN + at * width,
            });
        }
        Ok(ShardFile { header, symbols })
    }

    pub fn read(path: &Path) -> Result<ShardFile, CliError> {
        let bytes = std::fs::read(path).map_err(|e| CliError::io(path, e))?;
        ShardFile::from_bytes(&bytes, &path.display().to_string())
    }

    pub fn write(&self, path: &Path) -> Result<(), CliError> {
        std::fs::write(path, self.to_bytes()).map_err(|e| CliError::io(path, e))
    }
}

/// Where node `node`'s shard lives inside `dir`.
pub fn shard_path(dir: &Path, node: usize) -> PathBuf {
    dir.join(format!("node-{node:02}.shard"))
}

/// Shard files named on the command line: plain files as given,
/// directories expanded to their `*.shard` entries.
pub fn expand_paths(paths: &[PathBuf]) -> Result<Vec<PathBuf>, CliError> {
    let mut out = Vec::new();
    for p in paths {
        if p.is_dir() {
            let mut found: Vec<PathBuf> = std::fs::read_dir(p)
                .map_err(|e| CliError::io(p, e))?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|e| e.extension().is_some_and(|x| x == "shard"))
                .collect();
            found.sort();
            out.extend(found);
        } else {
            out.push(p.clone());
        }
    }
    Ok(out)
}
