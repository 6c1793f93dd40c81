//! Encoding and erasure decoding.
//!
//! Any `r` fragments of a codeword are determined by the other `k`: the
//! parity-check groups restricted to the erased nodes form a square system
//! that is nonsingular for an MDS code. [`Codec`] caches, per erasure
//! pattern, the matrix that maps the surviving fragments to the erased
//! ones. [`Codec::reconstruct_induction`] instead walks the lift rounds and
//! only ever inverts the base code's system.
//!
//! ```
//! use mdsa::codec::Codec;
//! use mdsa::gf::{Elem, Field};
//! use mdsa::vbk::{construct, VbkParams};
//!
//! let params = VbkParams::new(6, 3, 2, &[2, 3], Field::new(32).unwrap()).unwrap();
//! let (code, _) = construct(&params, 0).unwrap();
//! let codec = Codec::new(code);
//! let data: Vec<Vec<Elem>> = (0..3).map(|i| vec![Elem(i + 1); 8]).collect();
//! let word = codec.encode(&data).unwrap();
//! assert!(codec.is_codeword(&word).unwrap());
//!
//! let mut shards: Vec<Option<Vec<Elem>>> = word.iter().cloned().map(Some).collect();
//! shards[0] = None;
//! shards[4] = None;
//! shards[5] = None;
//! assert_eq!(codec.reconstruct(&shards).unwrap(), word);
//! ```

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use thiserror::Error;

use crate::code::ArrayCode;
use crate::gf::{Elem, Field};
use crate::linalg::{LinalgError, MatrixGF};
use crate::transform::{appended_value, TransformError};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CodecError {
    #[error("need {need} fragments, got {got}")]
    TooFewFragments { need: usize, got: usize },
    #[error("fragment {node} has length {got}, expected {expected}")]
    FragmentLength { node: usize, got: usize, expected: usize },
    #[error("systematic set must be {k} distinct nodes below {n}")]
    BadSystematicSet { k: usize, n: usize },
    #[error("expected {expected} fragments, got {got}")]
    WordLength { expected: usize, got: usize },
    #[error("erasure pattern {0:?} is not decodable")]
    Undecodable(Vec<usize>),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Transform(#[from] TransformError),
}

/// Maps the surviving fragments (concatenated, node order) to the erased
/// ones.
#[derive(Debug)]
struct ErasureMap {
    survivors: Vec<usize>,
    erased: Vec<usize>,
    map: MatrixGF,
}

/// Encoder and decoder for one code, with cached erasure maps.
#[derive(Debug)]
pub struct Codec {
    code: Arc<ArrayCode>,
    maps: Mutex<HashMap<Vec<usize>, Arc<ErasureMap>>>,
    base_inverses: Mutex<HashMap<Vec<usize>, Arc<MatrixGF>>>,
}

impl Codec {
    pub fn new(code: ArrayCode) -> Codec {
        Codec::from_arc(Arc::new(code))
    }

    pub fn from_arc(code: Arc<ArrayCode>) -> Codec {
        Codec {
            code,
            maps: Mutex::new(HashMap::new()),
            base_inverses: Mutex::new(HashMap::new()),
        }
    }

    pub fn code(&self) -> &ArrayCode {
        &self.code
    }

    pub fn code_arc(&self) -> &Arc<ArrayCode> {
        &self.code
    }

    fn field(&self) -> &Field {
        self.code.field()
    }

    /// The parity-check blocks of the erased nodes, stacked into a square
    /// matrix: block `(t, e)` is `A[t][erased[e]]`.
    fn erased_system(code: &ArrayCode, erased: &[usize]) -> Result<MatrixGF, CodecError> {
        let sub = code.sub_packetization();
        let mut b = MatrixGF::zeros(code.field(), code.r() * sub, erased.len() * sub);
        for t in 0..code.r() {
            for (e, &node) in erased.iter().enumerate() {
                b.set_block(t * sub, e * sub, code.block(t, node))?;
            }
        }
        Ok(b)
    }

    /// Erasure map for the given survivors. Computed once per survivor set.
    fn erasure_map(&self, survivors: &[usize]) -> Result<Arc<ErasureMap>, CodecError> {
        let mut cache = self.maps.lock().expect("cache lock");
        if let Some(m) = cache.get(survivors) {
            return Ok(m.clone());
        }
        let code = &*self.code;
        let sub = code.sub_packetization();
        let erased: Vec<usize> = (0..code.n()).filter(|i| !survivors.contains(i)).collect();
        let b = Self::erased_system(code, &erased)?;
        let mut c = MatrixGF::zeros(code.field(), code.r() * sub, survivors.len() * sub);
        for t in 0..code.r() {
            for (s, &node) in survivors.iter().enumerate() {
                c.set_block(t * sub, s * sub, code.block(t, node))?;
            }
        }
        let map = b.solve(&c).map_err(|e| match e {
            LinalgError::Singular { .. } => CodecError::Undecodable(erased.clone()),
            other => other.into(),
        })?;
        let entry = Arc::new(ErasureMap {
            survivors: survivors.to_vec(),
            erased,
            map: map.neg(),
        });
        cache.insert(survivors.to_vec(), entry.clone());
        Ok(entry)
    }

    fn check_len(&self, node: usize, v: &[Elem]) -> Result<(), CodecError> {
        let expected = self.code.sub_packetization();
        if v.len() != expected {
            return Err(CodecError::FragmentLength {
                node,
                got: v.len(),
                expected,
            });
        }
        Ok(())
    }

    /// Encodes `k` data fragments placed on nodes `0..k`.
    pub fn encode(&self, data: &[Vec<Elem>]) -> Result<Vec<Vec<Elem>>, CodecError> {
        let systematic: Vec<usize> = (0..self.code.k()).collect();
        self.encode_with(&systematic, data)
    }

    /// Encodes with the data fragments placed on `systematic`.
    pub fn encode_with(&self, systematic: &[usize], data: &[Vec<Elem>]) -> Result<Vec<Vec<Elem>>, CodecError> {
        let (n, k) = (self.code.n(), self.code.k());
        let mut sorted = systematic.to_vec();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != k || sorted.iter().any(|&i| i >= n) || systematic.len() != k {
            return Err(CodecError::BadSystematicSet { k, n });
        }
        if data.len() != k {
            return Err(CodecError::TooFewFragments { need: k, got: data.len() });
        }
        let mut shards: Vec<Option<Vec<Elem>>> = vec![None; n];
        for (&node, frag) in systematic.iter().zip(data) {
            self.check_len(node, frag)?;
            shards[node] = Some(frag.clone());
        }
        self.reconstruct(&shards)
    }

    /// Restores every fragment from at least `k` present ones, using the
    /// first `k` present as survivors.
    pub fn reconstruct(&self, shards: &[Option<Vec<Elem>>]) -> Result<Vec<Vec<Elem>>, CodecError> {
        let survivors = self.pick_survivors(shards)?;
        let map = self.erasure_map(&survivors)?;
        let input: Vec<Elem> = map
            .survivors
            .iter()
            .flat_map(|&s| shards[s].as_ref().expect("present").iter().copied())
            .collect();
        let out = map.map.mul_vec(&input)?;
        let sub = self.code.sub_packetization();
        let mut word: Vec<Vec<Elem>> = shards.iter().map(|s| s.clone().unwrap_or_default()).collect();
        for (e, &node) in map.erased.iter().enumerate() {
            word[node] = out[e * sub..(e + 1) * sub].to_vec();
        }
        Ok(word)
    }

    /// Many codewords at once. Row block `s` of `input` holds the fragments
    /// of `survivors[s]`, one codeword per column; the result holds the
    /// erased nodes (ascending) in the same layout.
    pub fn reconstruct_columns(&self, survivors: &[usize], input: &MatrixGF) -> Result<(Vec<usize>, MatrixGF), CodecError> {
        let (n, k) = (self.code.n(), self.code.k());
        let mut sorted = survivors.to_vec();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != k || sorted.iter().any(|&i| i >= n) {
            return Err(CodecError::BadSystematicSet { k, n });
        }
        let map = self.erasure_map(&sorted)?;
        if sorted != survivors {
            // rows of `input` follow the caller's order
            let sub = self.code.sub_packetization();
            let mut rows = Vec::with_capacity(k * sub);
            for &s in &sorted {
                let at = survivors.iter().position(|&x| x == s).expect("same set");
                rows.extend(at * sub..(at + 1) * sub);
            }
            return Ok((map.erased.clone(), map.map.matmul(&input.select_rows(&rows))?));
        }
        Ok((map.erased.clone(), map.map.matmul(input)?))
    }

    fn pick_survivors(&self, shards: &[Option<Vec<Elem>>]) -> Result<Vec<usize>, CodecError> {
        let (n, k) = (self.code.n(), self.code.k());
        if shards.len() != n {
            return Err(CodecError::WordLength {
                expected: n,
                got: shards.len(),
            });
        }
        let present: Vec<usize> = (0..n).filter(|&i| shards[i].is_some()).collect();
        if present.len() < k {
            return Err(CodecError::TooFewFragments {
                need: k,
                got: present.len(),
            });
        }
        for &i in &present {
            self.check_len(i, shards[i].as_ref().expect("present"))?;
        }
        Ok(present[..k].to_vec())
    }

    /// Same result as [`Codec::reconstruct`], computed instance by instance
    /// through the lift rounds.
    pub fn reconstruct_induction(&self, shards: &[Option<Vec<Elem>>]) -> Result<Vec<Vec<Elem>>, CodecError> {
        let survivors = self.pick_survivors(shards)?;
        let code = &*self.code;
        let f = self.field();
        let erased: Vec<usize> = (0..code.n()).filter(|i| !survivors.contains(i)).collect();
        let sub = code.sub_packetization();
        let mut y = vec![vec![Elem::ZERO; sub]; code.r()];
        for (t, yt) in y.iter_mut().enumerate() {
            for &s in &survivors {
                let term = code.block(t, s).mul_vec(shards[s].as_ref().expect("present"))?;
                for (a, b) in yt.iter_mut().zip(term) {
                    *a = f.sub(*a, b);
                }
            }
        }
        let solved = self.solve_erased(code, &erased, y)?;
        let mut word: Vec<Vec<Elem>> = shards.iter().map(|s| s.clone().unwrap_or_default()).collect();
        for (node, frag) in erased.into_iter().zip(solved) {
            word[node] = frag;
        }
        Ok(word)
    }

    /// Solves `sum_{e in erased} A[t][e] x_e = y_t` for all `t`.
    fn solve_erased(&self, code: &ArrayCode, erased: &[usize], y: Vec<Vec<Elem>>) -> Result<Vec<Vec<Elem>>, CodecError> {
        let f = self.field();
        let Some(lift) = code.lineage() else {
            let inv = {
                let mut cache = self.base_inverses.lock().expect("cache lock");
                match cache.get(erased) {
                    Some(m) => m.clone(),
                    None => {
                        let b = Self::erased_system(code, erased)?;
                        let inv = Arc::new(
                            b.inverse()
                                .map_err(|_| CodecError::Undecodable(erased.to_vec()))?,
                        );
                        cache.insert(erased.to_vec(), inv.clone());
                        inv
                    }
                }
            };
            let x = inv.mul_vec(&y.concat())?;
            let sub = code.sub_packetization();
            return Ok(x.chunks(sub).map(|c| c.to_vec()).collect());
        };
        let base = &*lift.base;
        let degrees = base.degrees();
        let l = degrees.lvalues();
        let bsub = base.sub_packetization();
        let mut inst: Vec<Vec<Option<Vec<Elem>>>> = vec![vec![None; l[0]]; erased.len()];
        for w in 0..degrees.len() {
            for a in (l[w + 1]..l[w]).rev() {
                let mut ya: Vec<Vec<Elem>> = y.iter().map(|yt| yt[a * bsub..(a + 1) * bsub].to_vec()).collect();
                for (e, &node) in erased.iter().enumerate() {
                    if !lift.goal.contains(&node) || w == 0 {
                        continue;
                    }
                    for (t, yt) in ya.iter_mut().enumerate() {
                        let p = appended_value(base, &lift.schedule, t, node, a, |b, u| {
                            let src = inst[e][b].as_ref().expect("later instances are solved first");
                            lift.split
                                .positions(u)
                                .into_iter()
                                .map(|pos| src[pos])
                                .collect()
                        })?;
                        for (x, v) in yt.iter_mut().zip(p) {
                            *x = f.sub(*x, v);
                        }
                    }
                }
                let xa = self.solve_erased(base, erased, ya)?;
                for (e, v) in xa.into_iter().enumerate() {
                    inst[e][a] = Some(v);
                }
            }
        }
        Ok(inst
            .into_iter()
            .map(|v| v.into_iter().flat_map(|x| x.expect("every instance solved")).collect())
            .collect())
    }

    /// `sum_i A[t][i] f_i` for every `t`.
    pub fn syndrome(&self, word: &[Vec<Elem>]) -> Result<Vec<Vec<Elem>>, CodecError> {
        let code = &*self.code;
        if word.len() != code.n() {
            return Err(CodecError::WordLength {
                expected: code.n(),
                got: word.len(),
            });
        }
        for (i, frag) in word.iter().enumerate() {
            self.check_len(i, frag)?;
        }
        let f = self.field();
        (0..code.r())
            .map(|t| {
                let mut acc = vec![Elem::ZERO; code.sub_packetization()];
                for (i, frag) in word.iter().enumerate() {
                    let term = code.block(t, i).mul_vec(frag)?;
                    for (a, b) in acc.iter_mut().zip(term) {
                        *a = f.add(*a, b);
                    }
                }
                Ok(acc)
            })
            .collect()
    }

    pub fn is_codeword(&self, word: &[Vec<Elem>]) -> Result<bool, CodecError> {
        Ok(self.syndrome(word)?.iter().flatten().all(|v| v.is_zero()))
    }
}
