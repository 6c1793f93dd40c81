//! The array-code container shared by the base construction and the lift.
//!
//! A code on `n` nodes with `r = n - k` parity-check groups is stored as the
//! `r x n` grid of `L x L` blocks `A[t][i]`; a codeword `(f_0, ..., f_{n-1})`
//! satisfies `sum_i A[t][i] f_i = 0` for every `t`. Appended data from a lift
//! is folded into the blocks, so the grid is always the complete parity-check
//! matrix.

use std::sync::Arc;

use crate::gf::{Elem, Field};
use crate::indexing::PartSplit;
use crate::linalg::MatrixGF;
use crate::transform::{DegreeSet, PSchedule};
use crate::vbk::{VbkConstants, VbkParams};

/// Repair matrix `R` (what a helper sends) and select matrix `S` (how the
/// failed node combines its parity-check groups) for one node and degree.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RepairPair {
    pub r: MatrixGF,
    pub s: MatrixGF,
}

/// How a code was obtained from the code one round earlier.
#[derive(Debug)]
pub struct Lift {
    pub base: Arc<ArrayCode>,
    pub goal: Vec<usize>,
    /// The `r` highest-indexed nodes outside the goal set. Encoding may
    /// treat them as the recomputed parity nodes; the parity-check matrix
    /// does not depend on the choice.
    pub rset: Vec<usize>,
    pub schedule: PSchedule,
    pub split: PartSplit,
}

#[derive(Debug, Clone)]
pub struct ArrayCode {
    pub(crate) field: Field,
    pub(crate) n: usize,
    pub(crate) k: usize,
    pub(crate) degrees: DegreeSet,
    pub(crate) base_sub: usize,
    pub(crate) alpha: usize,
    pub(crate) blocks: Vec<MatrixGF>,
    pub(crate) repair: Vec<Vec<Option<RepairPair>>>,
    pub(crate) keys: Vec<Option<Vec<MatrixGF>>>,
    pub(crate) partition: Vec<Vec<usize>>,
    pub(crate) goal_round: Vec<Option<usize>>,
    pub(crate) round: usize,
    pub(crate) lineage: Option<Arc<Lift>>,
    pub(crate) origin: Option<Arc<(VbkParams, VbkConstants)>>,
}

impl ArrayCode {
    pub fn field(&self) -> &Field {
        &self.field
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn r(&self) -> usize {
        self.n - self.k
    }

    pub fn degrees(&self) -> &DegreeSet {
        &self.degrees
    }

    pub fn delta0(&self) -> usize {
        self.degrees.get(0)
    }

    /// Sub-packetization `L`.
    pub fn sub_packetization(&self) -> usize {
        self.base_sub * self.alpha
    }

    /// Sub-packetization `N` of the base construction.
    pub fn base_sub_packetization(&self) -> usize {
        self.base_sub
    }

    /// Number of base-code copies, `L / N`.
    pub fn alpha(&self) -> usize {
        self.alpha
    }

    /// Number of key matrices per node and parity-check group.
    pub fn keys_per_group(&self) -> usize {
        self.degrees.max() - self.delta0()
    }

    pub fn block(&self, t: usize, i: usize) -> &MatrixGF {
        &self.blocks[t * self.n + i]
    }

    /// Whether node `i` can be repaired with degree index `z`.
    pub fn supports(&self, i: usize, z: usize) -> bool {
        self.repair
            .get(i)
            .and_then(|v| v.get(z))
            .is_some_and(|p| p.is_some())
    }

    pub fn repair_pair(&self, i: usize, z: usize) -> Option<&RepairPair> {
        self.repair.get(i)?.get(z)?.as_ref()
    }

    /// Key matrix `K[t][i][v]`, present for nodes that may still join a
    /// goal set.
    pub fn key(&self, i: usize, t: usize, v: usize) -> Option<&MatrixGF> {
        let keys = self.keys.get(i)?.as_ref()?;
        keys.get(t * self.keys_per_group() + v)
    }

    pub fn has_keys(&self, i: usize) -> bool {
        self.keys.get(i).is_some_and(|k| k.is_some())
    }

    /// The goal sets, in the order the lift rounds use them.
    pub fn partition(&self) -> &[Vec<usize>] {
        &self.partition
    }

    /// Round in which node `i` was a goal node, if it has been one.
    pub fn goal_round(&self, i: usize) -> Option<usize> {
        self.goal_round[i]
    }

    /// Number of lift rounds applied.
    pub fn round(&self) -> usize {
        self.round
    }

    pub fn lineage(&self) -> Option<&Arc<Lift>> {
        self.lineage.as_ref()
    }

    /// Parameters and constants of the base construction.
    pub fn origin(&self) -> Option<&(VbkParams, VbkConstants)> {
        self.origin.as_deref()
    }

    /// Goal sets of the rounds applied so far, oldest first.
    pub fn round_goal_sets(&self) -> Vec<Vec<usize>> {
        let mut sets = Vec::new();
        let mut cur = self.lineage.as_ref();
        while let Some(lift) = cur {
            sets.push(lift.goal.clone());
            cur = lift.base.lineage.as_ref();
        }
        sets.reverse();
        sets
    }

    /// Helper-side download: `R[i][z] f_j`.
    pub fn download(&self, i: usize, z: usize, fragment: &[Elem]) -> Option<Vec<Elem>> {
        self.repair_pair(i, z)?.r.mul_vec(fragment).ok()
    }

    /// Copy with block `(t, i)` replaced. Used to build broken fixtures.
    pub fn with_block(&self, t: usize, i: usize, block: MatrixGF) -> ArrayCode {
        let mut out = self.clone();
        out.blocks[t * self.n + i] = block;
        out
    }

    /// Copy with the repair pair of `(i, z)` replaced.
    pub fn with_repair_pair(&self, i: usize, z: usize, pair: RepairPair) -> ArrayCode {
        let mut out = self.clone();
        out.repair[i][z] = Some(pair);
        out
    }

    /// Copy with every key matrix removed.
    pub fn without_keys(&self) -> ArrayCode {
        let mut out = self.clone();
        out.keys = vec![None; self.n];
        out
    }
}
