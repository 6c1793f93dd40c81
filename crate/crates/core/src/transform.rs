//! Lifting a code so that a goal set gains repair at every degree of a
//! degree set.
//!
//! One lift round takes `l_0` independent instances of a base code and adds
//! to the parity-check groups of each goal node a combination of parts of
//! its own later instances. The combination is fixed by the P-schedule. A
//! goal node can then be repaired at degree `delta_z` by downloading from
//! only the first `l_z` instances. Repeating the round once per goal set
//! gives every node every degree.
//!
//! ```
//! use mdsa::transform::{DegreeSet, PSchedule};
//!
//! let degrees = DegreeSet::new(&[2, 3], 3).unwrap();
//! assert_eq!(degrees.lvalues(), &[3, 2, 0]);
//! let schedule = PSchedule::build(&degrees).unwrap();
//! assert_eq!(schedule.set(1), &[(2, 0), (2, 1)]);
//! ```

use std::sync::Arc;

use thiserror::Error;

use crate::code::{ArrayCode, Lift, RepairPair};
use crate::gf::Elem;
use crate::indexing::PartSplit;
use crate::linalg::{blkdiag_repeat, hstack, LinalgError, MatrixGF};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TransformError {
    #[error("degree set {0:?} is not strictly increasing")]
    NotIncreasing(Vec<usize>),
    #[error("degree {degree} is outside [2, {r}]")]
    DegreeOutOfRange { degree: usize, r: usize },
    #[error("degree set is empty")]
    Empty,
    #[error("a schedule needs at least two degrees")]
    SingleDegree,
    #[error("goal node {0} is not a valid node or carries no key matrices")]
    BadGoal(usize),
    #[error("goal set is empty or repeats a node")]
    BadGoalSet,
    #[error("goal node {0} cannot be repaired at the smallest degree in the base code")]
    GoalWithoutRepair(usize),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

pub fn lcm(a: usize, b: usize) -> usize {
    a / gcd(a, b) * b
}

/// Strictly increasing repair degrees `delta_0 < ... < delta_{m-1} <= r`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DegreeSet {
    list: Vec<usize>,
    lcm: usize,
    l: Vec<usize>,
}

impl DegreeSet {
    pub fn new(list: &[usize], r: usize) -> Result<DegreeSet, TransformError> {
        if list.is_empty() {
            return Err(TransformError::Empty);
        }
        if list.windows(2).any(|w| w[0] >= w[1]) {
            return Err(TransformError::NotIncreasing(list.to_vec()));
        }
        if let Some(&d) = list.iter().find(|&&d| d < 2 || d > r) {
            return Err(TransformError::DegreeOutOfRange { degree: d, r });
        }
        let lcm = list.iter().fold(1, |acc, &d| lcm(acc, d));
        let mut l: Vec<usize> = list.iter().map(|&d| lcm / d).collect();
        l.push(0);
        Ok(DegreeSet {
            list: list.to_vec(),
            lcm,
            l,
        })
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.list
    }

    /// Number of degrees `m`.
    pub fn len(&self) -> usize {
        self.list.len()
    }

    pub fn is_empty(&self) -> bool {
        self.list.is_empty()
    }

    pub fn get(&self, z: usize) -> usize {
        self.list[z]
    }

    pub fn max(&self) -> usize {
        *self.list.last().expect("nonempty")
    }

    /// Least common multiple `delta` of the degrees.
    pub fn lcm(&self) -> usize {
        self.lcm
    }

    /// `l_z = delta / delta_z` for `z < m`, followed by `l_m = 0`.
    pub fn lvalues(&self) -> &[usize] {
        &self.l
    }

    pub fn l(&self, z: usize) -> usize {
        self.l[z]
    }

    /// Index of the degree equal to `d`.
    pub fn index_of(&self, d: usize) -> Option<usize> {
        self.list.iter().position(|&x| x == d)
    }

    /// Band `w` with `l_{w+1} <= a < l_w`.
    pub fn band_of(&self, a: usize) -> usize {
        (0..self.len())
            .find(|&w| self.l[w + 1] <= a && a < self.l[w])
            .expect("instance index below l_0")
    }

    /// Key indices `[delta_{u-1} - delta_0, delta_u - delta_0)` that
    /// multiply the schedule entries of set `u`.
    pub fn key_range(&self, u: usize) -> std::ops::Range<usize> {
        self.list[u - 1] - self.list[0]..self.list[u] - self.list[0]
    }
}

/// Same as [`DegreeSet::lvalues`].
pub fn lvalues(degrees: &DegreeSet) -> Vec<usize> {
    degrees.lvalues().to_vec()
}

/// A part `f^(b)[u]` of a goal node's content: instance `b`, part `u`.
pub type PartTag = (usize, usize);

/// Which parts of a goal node's later instances are appended to the
/// parity-check groups of its earlier instances. The schedule is the same
/// for every goal node.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PSchedule {
    delta0: usize,
    l: Vec<usize>,
    sets: Vec<Vec<PartTag>>,
    parts: Vec<Vec<Vec<PartTag>>>,
}

impl PSchedule {
    pub fn build(degrees: &DegreeSet) -> Result<PSchedule, TransformError> {
        let m = degrees.len();
        if m < 2 {
            return Err(TransformError::SingleDegree);
        }
        let delta0 = degrees.get(0);
        let l = degrees.lvalues().to_vec();
        let mut sets: Vec<Vec<PartTag>> = vec![Vec::new(); m];
        let mut parts: Vec<Vec<Vec<PartTag>>> = vec![Vec::new(); m];
        for j in 1..m {
            let mut set: Vec<PartTag> = (l[j]..l[j - 1])
                .flat_map(|a| (0..delta0).map(move |u| (a, u)))
                .collect();
            for a in l[j]..l[j - 1] {
                for prev in &parts[1..j] {
                    set.extend_from_slice(&prev[a]);
                }
            }
            set.sort_unstable();
            let size = set.len() / l[j];
            debug_assert_eq!(size * l[j], set.len());
            parts[j] = set.chunks(size).map(|c| c.to_vec()).collect();
            sets[j] = set;
        }
        Ok(PSchedule {
            delta0,
            l,
            sets,
            parts,
        })
    }

    pub fn delta0(&self) -> usize {
        self.delta0
    }

    /// Number of degrees `m`.
    pub fn m(&self) -> usize {
        self.sets.len()
    }

    /// `P_{i,j}` for `1 <= j < m`, in ascending order.
    pub fn set(&self, j: usize) -> &[PartTag] {
        &self.sets[j]
    }

    /// `P_{i,j}^(a)` for `a < l_j`.
    pub fn part(&self, j: usize, a: usize) -> &[PartTag] {
        &self.parts[j][a]
    }

    pub fn lvalues(&self) -> &[usize] {
        &self.l
    }
}

/// A lift round: base code, goal set and the recomputed set.
#[derive(Debug, Clone)]
pub struct LiftRound {
    pub base: Arc<ArrayCode>,
    pub goal: Vec<usize>,
    pub rset: Vec<usize>,
    pub split: PartSplit,
}

/// The part split used for the appended data of `goal`. On a VBK lineage
/// whose goal nodes share the digit `x` of their repair matrices, parts are
/// taken along digit `x`: then the select matrix of any node on another
/// digit maps `K Phi_u` into the row space of its repair matrix. Otherwise
/// each slice is cut into contiguous blocks.
pub fn part_split(base: &ArrayCode, goal: &[usize]) -> PartSplit {
    let delta0 = base.delta0();
    let n_prime = base.base_sub_packetization() / delta0;
    let digit = |i: usize| i / delta0;
    match (base.origin(), goal.first()) {
        (Some(_), Some(&g)) if goal.iter().all(|&i| digit(i) == digit(g)) => {
            PartSplit::digit(base.alpha(), n_prime, delta0, digit(g))
        }
        _ => PartSplit::blocks(base.alpha(), n_prime, delta0),
    }
}

impl LiftRound {
    /// Uses the `r` highest-indexed nodes outside the goal set as the
    /// recomputed set.
    pub fn new(base: Arc<ArrayCode>, goal: &[usize]) -> Result<LiftRound, TransformError> {
        let mut goal = goal.to_vec();
        goal.sort_unstable();
        goal.dedup();
        if goal.is_empty() || goal.len() > base.r() {
            return Err(TransformError::BadGoalSet);
        }
        for &i in &goal {
            if i >= base.n() || !base.has_keys(i) {
                return Err(TransformError::BadGoal(i));
            }
            if !base.supports(i, 0) {
                return Err(TransformError::GoalWithoutRepair(i));
            }
        }
        let mut rset: Vec<usize> = (0..base.n())
            .rev()
            .filter(|i| !goal.contains(i))
            .take(base.r())
            .collect();
        rset.sort_unstable();
        let split = part_split(&base, &goal);
        Ok(LiftRound { base, goal, rset, split })
    }
}

/// The columns `P_{t,i}^(a)` contributes to row block `a` of the lifted
/// parity block of goal node `i`: a `L x (l_0 L)` matrix, where `L` is the
/// base sub-packetization.
pub fn appended_data_matrix(
    round: &LiftRound,
    schedule: &PSchedule,
    t: usize,
    i: usize,
    a: usize,
) -> Result<MatrixGF, TransformError> {
    let base = &*round.base;
    let l0 = schedule.lvalues()[0];
    let sub = base.sub_packetization();
    let mut out = MatrixGF::zeros(base.field(), sub, l0 * sub);
    add_appended(&mut out, 0, base, schedule, &round.split, t, i, a)?;
    Ok(out)
}

/// Adds the appended data for instance `a` into rows `r0..r0 + L` of `dst`.
fn add_appended(
    dst: &mut MatrixGF,
    r0: usize,
    base: &ArrayCode,
    schedule: &PSchedule,
    split: &PartSplit,
    t: usize,
    i: usize,
    a: usize,
) -> Result<(), TransformError> {
    let degrees = base.degrees();
    let w = degrees.band_of(a);
    let sub = base.sub_packetization();
    let f = base.field().clone();
    for j in 1..=w {
        for (p, &(b, u)) in schedule.part(j, a).iter().enumerate() {
            let v = degrees.key_range(j).start + p;
            let key = base.key(i, t, v).ok_or(TransformError::BadGoal(i))?;
            let cols = split.positions(u);
            for row in 0..sub {
                for (c, &pos) in cols.iter().enumerate() {
                    let val = key.get(row, c);
                    if !val.is_zero() {
                        let col = b * sub + pos;
                        let cur = dst.get(r0 + row, col);
                        dst.set(r0 + row, col, f.add(cur, val));
                    }
                }
            }
        }
    }
    Ok(())
}

/// The value `P_{t,i}^(a)` for a goal node whose later instances are
/// known. `part(b, u)` must return `f^(b)[u]`.
pub fn appended_value(
    base: &ArrayCode,
    schedule: &PSchedule,
    t: usize,
    i: usize,
    a: usize,
    mut part: impl FnMut(usize, usize) -> Vec<Elem>,
) -> Result<Vec<Elem>, TransformError> {
    let degrees = base.degrees();
    let w = degrees.band_of(a);
    let mut acc = vec![Elem::ZERO; base.sub_packetization()];
    for j in 1..=w {
        for (p, &(b, u)) in schedule.part(j, a).iter().enumerate() {
            let v = degrees.key_range(j).start + p;
            let key = base.key(i, t, v).ok_or(TransformError::BadGoal(i))?;
            key.mul_vec_add(&part(b, u), &mut acc)?;
        }
    }
    Ok(acc)
}

/// One lift round. Parity blocks of non-goal nodes become block-diagonal;
/// goal nodes additionally carry their appended data. Repair matrices and
/// keys are lifted so that the result supports the next round.
pub fn lift_code(round: &LiftRound) -> Result<ArrayCode, TransformError> {
    let base = &*round.base;
    let degrees = base.degrees().clone();
    let schedule = PSchedule::build(&degrees)?;
    let (n, r) = (base.n(), base.r());
    let l0 = degrees.l(0);
    let sub = base.sub_packetization();
    let field = base.field().clone();
    let is_goal = |i: usize| round.goal.contains(&i);

    let mut blocks = Vec::with_capacity(r * n);
    for t in 0..r {
        for i in 0..n {
            let mut block = blkdiag_repeat(base.block(t, i), l0);
            if is_goal(i) {
                for a in 0..l0 {
                    add_appended(&mut block, a * sub, base, &schedule, &round.split, t, i, a)?;
                }
            }
            blocks.push(block);
        }
    }

    let mut repair = Vec::with_capacity(n);
    for i in 0..n {
        let mut per_degree = Vec::with_capacity(degrees.len());
        for z in 0..degrees.len() {
            let lifted = if is_goal(i) {
                let pair = base.repair_pair(i, 0).expect("checked in LiftRound::new");
                let lz = degrees.l(z);
                let pad = |m: &MatrixGF| -> Result<MatrixGF, LinalgError> {
                    let head = blkdiag_repeat(m, lz);
                    if lz == l0 {
                        return Ok(head);
                    }
                    let tail = MatrixGF::zeros(&field, head.rows(), (l0 - lz) * sub);
                    hstack(&[&head, &tail])
                };
                Some(RepairPair {
                    r: pad(&pair.r)?,
                    s: pad(&pair.s)?,
                })
            } else {
                base.repair_pair(i, z).map(|pair| RepairPair {
                    r: blkdiag_repeat(&pair.r, l0),
                    s: blkdiag_repeat(&pair.s, l0),
                })
            };
            per_degree.push(lifted);
        }
        repair.push(per_degree);
    }

    let keys = (0..n)
        .map(|i| {
            if is_goal(i) {
                None
            } else {
                base.keys[i]
                    .as_ref()
                    .map(|ks| ks.iter().map(|k| blkdiag_repeat(k, l0)).collect())
            }
        })
        .collect();

    let mut goal_round = base.goal_round.clone();
    for &i in &round.goal {
        goal_round[i] = Some(base.round());
    }

    Ok(ArrayCode {
        field,
        n,
        k: base.k(),
        degrees,
        base_sub: base.base_sub_packetization(),
        alpha: base.alpha() * l0,
        blocks,
        repair,
        keys,
        partition: base.partition().to_vec(),
        goal_round,
        round: base.round() + 1,
        lineage: Some(Arc::new(Lift {
            base: round.base.clone(),
            goal: round.goal.clone(),
            rset: round.rset.clone(),
            schedule,
            split: round.split,
        })),
        origin: base.origin.clone(),
    })
}

/// Lifts once per goal set of the base partition, in order. The result has
/// repair at every degree for every node.
pub fn algorithm2(base: ArrayCode) -> Result<ArrayCode, TransformError> {
    let partition = base.partition().to_vec();
    let mut cur = Arc::new(base);
    for goal in &partition {
        let round = LiftRound::new(cur.clone(), goal)?;
        cur = Arc::new(lift_code(&round)?);
    }
    Ok(Arc::try_unwrap(cur).unwrap_or_else(|arc| (*arc).clone()))
}

/// Sub-packetization after all rounds: `l_0^(rounds) * base`, or `None`
/// on overflow.
pub fn final_sub_packetization(base_sub: usize, degrees: &DegreeSet, rounds: usize) -> Option<u128> {
    (0..rounds).try_fold(base_sub as u128, |acc, _| acc.checked_mul(degrees.l(0) as u128))
}
