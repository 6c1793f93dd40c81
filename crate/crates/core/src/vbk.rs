//! The base code: an `(n, k)` MDS array code with `delta_0`-optimal access
//! repair for every node, `delta_0` in `{2, 3, 4}`.
//!
//! Nodes are grouped in blocks of `delta_0`: node `i = delta_0 x + y` sits at
//! digit position `x` with digit value `y`. Its parity blocks are diagonal
//! apart from the rows whose digit `x` equals `y`, which also touch the
//! `delta_0 - 1` indices obtained by changing that digit. Repair of node `i`
//! downloads `V_{x,y} f_j` from every other node in the chosen helper set.
//!
//! ```
//! use mdsa::gf::Field;
//! use mdsa::vbk::{construct, VbkParams};
//!
//! let params = VbkParams::new(6, 3, 2, &[2, 3], Field::new(32).unwrap()).unwrap();
//! let (code, constants) = construct(&params, 0).unwrap();
//! assert_eq!(code.sub_packetization(), 8);
//! assert_eq!(constants.zeta.len(), 1);
//! ```

use std::collections::HashSet;
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::code::{ArrayCode, RepairPair};
use crate::gf::{Elem, Field};
use crate::indexing::{digit, pi, remove_digit, v_matrix};
use crate::linalg::MatrixGF;
use crate::transform::{DegreeSet, TransformError};
use crate::verify::{self, Coverage};

/// Resample attempts before giving up on the MDS check.
pub const RETRY_CAP: u64 = 32;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum VbkError {
    #[error("delta0 must be 2, 3 or 4, got {0}")]
    BadDelta0(usize),
    #[error("need 1 <= k < n, got n={n} k={k}")]
    BadLength { n: usize, k: usize },
    #[error("r = {r} must exceed delta0 = {delta0}")]
    RedundancyTooSmall { r: usize, delta0: usize },
    #[error("the smallest degree {found} must equal delta0 = {delta0}")]
    DegreeMismatch { found: usize, delta0: usize },
    #[error("field GF({q}) is too small: need at least {need} elements")]
    FieldTooSmall { q: u32, need: u32 },
    #[error("GF({q}) has too few elements to assign distinct constants")]
    ConstantsExhausted { q: u32 },
    #[error("no seed in [{first}, {last}] gave an MDS code")]
    NotMds { first: u64, last: u64 },
    #[error("constants do not match the parameters: {0}")]
    BadConstants(String),
    #[error(transparent)]
    Degrees(#[from] TransformError),
}

/// Smallest field order the construction asks for.
pub fn min_field_order(n: usize, delta0: usize) -> u32 {
    let blocks = n.div_ceil(delta0) as u32;
    if delta0 == 2 {
        6 * blocks + 2
    } else {
        18 * blocks + 2
    }
}

/// Smallest power of two that is at least [`min_field_order`].
pub fn default_field_order(n: usize, delta0: usize) -> u32 {
    min_field_order(n, delta0).next_power_of_two()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VbkParams {
    pub n: usize,
    pub k: usize,
    pub delta0: usize,
    pub degrees: DegreeSet,
    pub field: Field,
}

impl VbkParams {
    pub fn new(n: usize, k: usize, delta0: usize, degrees: &[usize], field: Field) -> Result<VbkParams, VbkError> {
        if !(2..=4).contains(&delta0) {
            return Err(VbkError::BadDelta0(delta0));
        }
        if k == 0 || k >= n {
            return Err(VbkError::BadLength { n, k });
        }
        let r = n - k;
        if r <= delta0 {
            return Err(VbkError::RedundancyTooSmall { r, delta0 });
        }
        let degrees = DegreeSet::new(degrees, r)?;
        if degrees.get(0) != delta0 {
            return Err(VbkError::DegreeMismatch {
                found: degrees.get(0),
                delta0,
            });
        }
        let need = min_field_order(n, delta0);
        if field.order() < need {
            return Err(VbkError::FieldTooSmall { q: field.order(), need });
        }
        Ok(VbkParams {
            n,
            k,
            delta0,
            degrees,
            field,
        })
    }

    pub fn r(&self) -> usize {
        self.n - self.k
    }

    /// Number of digit positions, `ceil(n / delta0)`.
    pub fn tau(&self) -> usize {
        self.n.div_ceil(self.delta0)
    }

    /// Sub-packetization `N = delta0^tau`.
    pub fn sub_packetization(&self) -> usize {
        self.delta0.pow(self.tau() as u32)
    }

    /// `N / delta0`.
    pub fn n_prime(&self) -> usize {
        self.sub_packetization() / self.delta0
    }

    /// Number of `theta` values per digit position.
    pub fn thetas_per_position(&self) -> usize {
        if self.delta0 == 2 {
            2
        } else {
            4
        }
    }

    /// Number of key constants `zeta`.
    pub fn zeta_count(&self) -> usize {
        self.degrees.max() - self.delta0
    }
}

/// The field constants of one code instance.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VbkConstants {
    /// Seed whose draw produced the constants.
    pub seed: u64,
    pub epsilon: Elem,
    /// `theta[i][x]` for `i` below [`VbkParams::thetas_per_position`].
    pub theta: Vec<Vec<Elem>>,
    pub zeta: Vec<Elem>,
}

impl VbkConstants {
    fn check_shape(&self, params: &VbkParams) -> Result<(), VbkError> {
        let q = params.field.order();
        let all = self
            .theta
            .iter()
            .flatten()
            .chain(&self.zeta)
            .chain(std::iter::once(&self.epsilon));
        if all.clone().any(|e| e.0 as u32 >= q) {
            return Err(VbkError::BadConstants(format!("value outside GF({q})")));
        }
        if self.theta.len() != params.thetas_per_position()
            || self.theta.iter().any(|row| row.len() != params.tau())
        {
            return Err(VbkError::BadConstants("theta table has the wrong shape".into()));
        }
        if self.zeta.len() != params.zeta_count() {
            return Err(VbkError::BadConstants(format!(
                "expected {} zeta values, got {}",
                params.zeta_count(),
                self.zeta.len()
            )));
        }
        Ok(())
    }

    /// The `delta0 x delta0` matrix `Theta_x`.
    pub fn theta_matrix(&self, params: &VbkParams, x: usize) -> Vec<Vec<Elem>> {
        let f = &params.field;
        let t = |i: usize| self.theta[i][x];
        let e = |i: usize| f.mul(self.epsilon, self.theta[i][x]);
        match params.delta0 {
            2 => vec![vec![t(0), e(1)], vec![t(1), t(0)]],
            3 => vec![
                vec![t(0), e(1), e(2)],
                vec![t(1), t(0), e(3)],
                vec![t(2), t(3), t(0)],
            ],
            _ => vec![
                vec![t(0), e(1), e(2), e(3)],
                vec![t(1), t(0), e(3), e(2)],
                vec![t(2), t(3), t(0), e(1)],
                vec![t(3), t(2), t(1), t(0)],
            ],
        }
    }

    /// `lambda_{i,v} = Theta_x[v][y]` for `i = delta0 x + y`.
    pub fn lambda(&self, params: &VbkParams, i: usize, v: usize) -> Elem {
        let (x, y) = (i / params.delta0, i % params.delta0);
        self.theta_matrix(params, x)[v][y]
    }

    /// Every value in the `lambda` table, over all digit positions.
    pub fn lambda_table(&self, params: &VbkParams) -> HashSet<Elem> {
        (0..params.tau())
            .flat_map(|x| self.theta_matrix(params, x).into_iter().flatten())
            .collect()
    }

    /// The coefficient `epsilon_{u,y}`: `epsilon` above the diagonal, one
    /// below it.
    pub fn epsilon_coeff(&self, u: usize, y: usize) -> Elem {
        if u < y {
            self.epsilon
        } else {
            Elem::ONE
        }
    }
}

/// Draws constants for `seed`: a seeded shuffle of the nonzero elements,
/// assigned greedily so that every `theta` and `epsilon * theta` in use is
/// distinct and every `zeta` avoids the `lambda` table.
pub fn choose_constants(params: &VbkParams, seed: u64) -> Result<VbkConstants, VbkError> {
    let f = &params.field;
    let q = f.order();
    let exhausted = || VbkError::ConstantsExhausted { q };
    let mut pool: Vec<Elem> = f.elements().skip(1).collect();
    pool.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));

    let epsilon = *pool.iter().find(|&&e| e != Elem::ONE).ok_or_else(exhausted)?;
    let mut used: HashSet<Elem> = HashSet::new();
    let per = params.thetas_per_position();
    let mut theta = vec![Vec::with_capacity(params.tau()); per];
    for _x in 0..params.tau() {
        for (i, row) in theta.iter_mut().enumerate() {
            let pick = pool
                .iter()
                .copied()
                .find(|&c| {
                    if used.contains(&c) {
                        return false;
                    }
                    if i == 0 {
                        return true;
                    }
                    let ec = f.mul(epsilon, c);
                    ec != c && !used.contains(&ec)
                })
                .ok_or_else(exhausted)?;
            used.insert(pick);
            if i > 0 {
                used.insert(f.mul(epsilon, pick));
            }
            row.push(pick);
        }
    }
    let mut zeta = Vec::with_capacity(params.zeta_count());
    for _ in 0..params.zeta_count() {
        let pick = pool
            .iter()
            .copied()
            .find(|c| !used.contains(c))
            .ok_or_else(exhausted)?;
        used.insert(pick);
        zeta.push(pick);
    }
    Ok(VbkConstants {
        seed,
        epsilon,
        theta,
        zeta,
    })
}

/// Parity block `A[t][i]`, an `N x N` matrix.
pub fn parity_block(params: &VbkParams, constants: &VbkConstants, t: usize, i: usize) -> MatrixGF {
    let f = &params.field;
    let (d0, n) = (params.delta0, params.sub_packetization());
    let (x, y) = (i / d0, i % d0);
    let powers: Vec<Elem> = (0..d0)
        .map(|u| f.pow(constants.lambda(params, i, u), t as u64))
        .collect();
    let mut m = MatrixGF::zeros(f, n, n);
    for a in 0..n {
        let ax = digit(a, x, d0);
        m.set(a, a, powers[ax]);
        if ax == y {
            for u in (0..d0).filter(|&u| u != y) {
                let c = f.mul(constants.epsilon_coeff(u, y), powers[u]);
                m.set(a, pi(a, x, u, d0), c);
            }
        }
    }
    m
}

/// Repair and select matrices of node `i`: both `V_{x,y}`.
pub fn repair_select(params: &VbkParams, i: usize) -> RepairPair {
    let (x, y) = (i / params.delta0, i % params.delta0);
    let v = v_matrix(&params.field, x, y, params.delta0, params.tau()).expect("node index in range");
    RepairPair { r: v.clone(), s: v }
}

/// Key matrix `K[t][i][v] = zeta_v^t R_i^T`, an `N x N'` matrix.
pub fn key_matrix0(params: &VbkParams, constants: &VbkConstants, t: usize, i: usize, v: usize) -> MatrixGF {
    let c = params.field.pow(constants.zeta[v], t as u64);
    repair_select(params, i).r.transpose().scaled(c)
}

/// Goal sets `{0..delta0}, {delta0..2 delta0}, ...`, the last one cut at `n`.
pub fn goal_partition(n: usize, delta0: usize) -> Vec<Vec<usize>> {
    (0..n).collect::<Vec<_>>().chunks(delta0).map(|c| c.to_vec()).collect()
}

/// Builds the code from explicit constants. Only shapes are checked; use
/// [`construct`] for validated constants.
pub fn build_code(params: &VbkParams, constants: &VbkConstants) -> Result<ArrayCode, VbkError> {
    constants.check_shape(params)?;
    let (n, r) = (params.n, params.r());
    let m = params.degrees.len();
    let mut blocks = Vec::with_capacity(r * n);
    for t in 0..r {
        for i in 0..n {
            blocks.push(parity_block(params, constants, t, i));
        }
    }
    let repair = (0..n)
        .map(|i| {
            let mut v = vec![None; m];
            v[0] = Some(repair_select(params, i));
            v
        })
        .collect();
    let keys = (0..n)
        .map(|i| {
            Some(
                (0..r)
                    .flat_map(|t| (0..params.zeta_count()).map(move |v| (t, v)))
                    .map(|(t, v)| key_matrix0(params, constants, t, i, v))
                    .collect(),
            )
        })
        .collect();
    Ok(ArrayCode {
        field: params.field.clone(),
        n,
        k: params.k,
        degrees: params.degrees.clone(),
        base_sub: params.sub_packetization(),
        alpha: 1,
        blocks,
        repair,
        keys,
        partition: goal_partition(n, params.delta0),
        goal_round: vec![None; n],
        round: 0,
        lineage: None,
        origin: Some(Arc::new((params.clone(), constants.clone()))),
    })
}

/// Draws constants from `seed`, builds the code and checks that it is MDS,
/// moving to the next seed on failure, at most [`RETRY_CAP`] times.
pub fn construct(params: &VbkParams, seed: u64) -> Result<(ArrayCode, VbkConstants), VbkError> {
    for attempt in 0..RETRY_CAP {
        let constants = choose_constants(params, seed + attempt)?;
        let code = build_code(params, &constants)?;
        if verify::check_mds(&code, &Coverage::auto(seed)).passed {
            return Ok((code, constants));
        }
    }
    Err(VbkError::NotMds {
        first: seed,
        last: seed + RETRY_CAP - 1,
    })
}

/// `S_i A[t][i]` in closed form, an `N' x N` matrix, for `i = delta0 x + y`:
/// `lambda_{i,y}^t V_{x,y} + sum_{u != y} epsilon_{u,y} lambda_{i,u}^t V_{x,u}`.
pub fn self_block_closed_form(params: &VbkParams, constants: &VbkConstants, t: usize, i: usize) -> MatrixGF {
    let f = &params.field;
    let (d0, tau) = (params.delta0, params.tau());
    let (x, y) = (i / d0, i % d0);
    let mut out = MatrixGF::zeros(f, params.n_prime(), params.sub_packetization());
    for u in 0..d0 {
        let lam = f.pow(constants.lambda(params, i, u), t as u64);
        let c = if u == y { lam } else { f.mul(constants.epsilon_coeff(u, y), lam) };
        let v = v_matrix(f, x, u, d0, tau).expect("node index in range");
        out = out.add(&v.scaled(c)).expect("same shape");
    }
    out
}

/// The aligned block `A~` with `S_i A[t][j] = A~ R_i` in closed form, an
/// `N' x N'` matrix. With `j = delta0 x + y` and `i = delta0 x~ + y~`:
/// a scalar matrix when `x = x~`, otherwise a parity block of the same
/// shape on `tau - 1` digits at position `x` (if `x < x~`) or `x - 1`.
pub fn aligned_block_closed_form(
    params: &VbkParams,
    constants: &VbkConstants,
    t: usize,
    j: usize,
    i: usize,
) -> MatrixGF {
    let f = &params.field;
    let d0 = params.delta0;
    let (x, y) = (j / d0, j % d0);
    let (xt, yt) = (i / d0, i % d0);
    let np = params.n_prime();
    if x == xt {
        let c = f.pow(constants.lambda(params, j, yt), t as u64);
        return MatrixGF::scalar(f, np, c);
    }
    let pos = if x < xt { x } else { x - 1 };
    let mut m = MatrixGF::zeros(f, np, np);
    for a in 0..np {
        let ax = digit(a, pos, d0);
        m.set(a, a, f.pow(constants.lambda(params, j, ax), t as u64));
        if ax == y {
            for u in (0..d0).filter(|&u| u != y) {
                let c = f.mul(
                    constants.epsilon_coeff(u, y),
                    f.pow(constants.lambda(params, j, u), t as u64),
                );
                m.set(a, pi(a, pos, u, d0), c);
            }
        }
    }
    m
}

/// Row `a` of the matrix `T` that moves `V_{x,u}` across
/// `V_{x~,v}^T Delta_h`: the column it hits, if any. Indices have
/// `w - 1` digits in base `s`.
pub fn lemma5_row_target(a: usize, x: usize, xt: usize, v: usize, h: usize, s: usize, w: usize) -> Option<usize> {
    let top = s.pow(w as u32 - 2);
    if x < xt && digit(a, xt - 1, s) == v {
        Some(h * top + remove_digit(a, xt - 1, s))
    } else if xt < x && digit(a, xt, s) == v {
        Some(h * top + remove_digit(a, xt, s))
    } else {
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params63() -> VbkParams {
        VbkParams::new(6, 3, 2, &[2, 3], Field::new(32).unwrap()).unwrap()
    }

    #[test]
    fn parameter_validation() {
        let f = Field::new(32).unwrap();
        assert!(matches!(
            VbkParams::new(4, 2, 2, &[2], f.clone()),
            Err(VbkError::RedundancyTooSmall { .. })
        ));
        assert!(matches!(
            VbkParams::new(6, 3, 2, &[2, 3], Field::new(16).unwrap()),
            Err(VbkError::FieldTooSmall { need: 20, .. })
        ));
        assert!(matches!(VbkParams::new(6, 3, 5, &[5], f), Err(VbkError::BadDelta0(5))));
        assert_eq!(default_field_order(6, 2), 32);
        assert_eq!(min_field_order(16, 2), 50);
        assert_eq!(default_field_order(16, 2), 64);
    }

    #[test]
    fn constants_are_distinct() {
        let p = params63();
        let c = choose_constants(&p, 7).unwrap();
        let table = c.lambda_table(&p);
        assert_eq!(table.len(), 3 * p.tau());
        assert!(c.zeta.iter().all(|z| !table.contains(z)));
        assert!(c.epsilon != Elem::ONE && c.epsilon != Elem::ZERO);
        assert_eq!(choose_constants(&p, 7).unwrap(), c);
    }

    #[test]
    fn partition_tail() {
        assert_eq!(goal_partition(8, 3), vec![vec![0, 1, 2], vec![3, 4, 5], vec![6, 7]]);
    }

    #[test]
    fn parity_block_row_weights() {
        let p = params63();
        let c = choose_constants(&p, 0).unwrap();
        let a = parity_block(&p, &c, 1, 3);
        let weights: Vec<usize> = (0..8).map(|r| a.row_support(r).count()).collect();
        // node 3 is x = 1, y = 1: rows with digit 1 set carry two entries
        assert_eq!(weights, vec![1, 1, 2, 2, 1, 1, 2, 2]);
    }

    #[test]
    fn lemma5_target_shape() {
        // x < x~: digit x~ - 1 is removed and h becomes the top digit
        assert_eq!(lemma5_row_target(0b01, 0, 2, 0, 1, 2, 3), Some(0b11));
        assert_eq!(lemma5_row_target(0b11, 0, 2, 0, 1, 2, 3), None);
    }
}
