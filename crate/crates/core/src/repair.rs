//! Repairing one node from `d` helpers.
//!
//! Helper `j` sends `R f_j`, where `R` is the failed node's repair matrix
//! for the chosen degree. The failed node multiplies every parity-check
//! group by its select matrix `S`. Alignment means `S A[t][j] = A~[t][j] R`
//! for every other node `j`. The groups then become a square system in the
//! lost fragment and the projections `R f_j` of the `r - delta` non-helpers.
//!
//! Three procedures share that system:
//!
//! * base codes solve it directly;
//! * a goal node of the last lift round peels its appended data band by
//!   band ([`gn_repair`]);
//! * any other node of a lifted code solves the base system once per
//!   instance and strips the goal nodes' appended data using only what its
//!   helpers sent ([`rn_repair`]).
//!
//! [`dense_repair`] solves the system of the final code in one go and is
//! kept as an independent cross-check.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::code::{ArrayCode, Lift};
use crate::gf::Elem;
use crate::indexing::PartSplit;
use crate::linalg::{LinalgError, MatrixGF};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum RepairError {
    #[error("node {0} does not exist")]
    NoSuchNode(usize),
    #[error("degree index {z} is not available for node {node}")]
    DegreeUnavailable { node: usize, z: usize },
    #[error("repair degree {d} does not match any degree of the code (k = {k})")]
    NoSuchDegree { d: usize, k: usize },
    #[error("expected {expected} distinct helpers other than the failed node, got {got}")]
    HelperCount { expected: usize, got: usize },
    #[error("helper {0} is invalid or repeated")]
    BadHelper(usize),
    #[error("no download from helper {0}")]
    MissingDownload(usize),
    #[error("download from helper {node} has length {got}, expected {expected}")]
    DownloadLength { node: usize, got: usize, expected: usize },
    #[error("row space of the repair matrix does not contain the {what}")]
    NotAligned { what: String },
    #[error("repair system is singular: {0}")]
    Singular(LinalgError),
    #[error("{0} is needed before it has been recovered")]
    OutOfOrder(String),
    #[error("node {0} is not a goal node of the last round")]
    NotGoal(usize),
    #[error("node {0} is a goal node of the last round")]
    IsGoal(usize),
    #[error("code has no lift round")]
    NoLift,
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

fn singular(e: LinalgError) -> RepairError {
    match e {
        LinalgError::Singular { .. } => RepairError::Singular(e),
        other => RepairError::Linalg(other),
    }
}

/// Failed node, degree index and helper set.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RepairPlan {
    pub failed: usize,
    pub z: usize,
    pub helpers: Vec<usize>,
}

impl RepairPlan {
    /// Validates the plan against `code`: `|helpers| = k + delta_z - 1`.
    pub fn new(code: &ArrayCode, failed: usize, z: usize, helpers: &[usize]) -> Result<RepairPlan, RepairError> {
        if failed >= code.n() {
            return Err(RepairError::NoSuchNode(failed));
        }
        if !code.supports(failed, z) {
            return Err(RepairError::DegreeUnavailable { node: failed, z });
        }
        let expected = code.k() + code.degrees().get(z) - 1;
        let mut sorted = helpers.to_vec();
        sorted.sort_unstable();
        sorted.dedup();
        if let Some(&bad) = helpers.iter().find(|&&h| h >= code.n() || h == failed) {
            return Err(RepairError::BadHelper(bad));
        }
        if sorted.len() != helpers.len() {
            let dup = helpers
                .iter()
                .find(|h| helpers.iter().filter(|x| x == h).count() > 1)
                .copied()
                .unwrap_or(0);
            return Err(RepairError::BadHelper(dup));
        }
        if sorted.len() != expected {
            return Err(RepairError::HelperCount {
                expected,
                got: sorted.len(),
            });
        }
        Ok(RepairPlan {
            failed,
            z,
            helpers: sorted,
        })
    }

    /// Like [`RepairPlan::new`] with the degree given as the number of
    /// helpers `d`.
    pub fn with_degree(code: &ArrayCode, failed: usize, d: usize, helpers: &[usize]) -> Result<RepairPlan, RepairError> {
        let no_such = RepairError::NoSuchDegree { d, k: code.k() };
        if d < code.k() {
            return Err(no_such);
        }
        let z = code.degrees().index_of(d + 1 - code.k()).ok_or(no_such)?;
        RepairPlan::new(code, failed, z, helpers)
    }

    /// Degree `d = |helpers|`.
    pub fn d(&self) -> usize {
        self.helpers.len()
    }

    /// Nodes that are neither failed nor helpers.
    pub fn excluded(&self, n: usize) -> Vec<usize> {
        (0..n)
            .filter(|&j| j != self.failed && !self.helpers.contains(&j))
            .collect()
    }
}

/// A value the repair procedures solve for or eliminate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Tag {
    /// Instance `a` of the failed node, `f^(a)`.
    Instance(usize),
    /// Part `u` of instance `b` of the failed node, `f^(b)[u]`.
    Part(usize, usize),
    /// `R f_j^(a)` for a non-helper `j`.
    Projection { node: usize, instance: usize },
}

impl fmt::Display for Tag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tag::Instance(a) => write!(f, "f({a})"),
            Tag::Part(b, u) => write!(f, "f({b})[{u}]"),
            Tag::Projection { node, instance } => write!(f, "Rf{node}({instance})"),
        }
    }
}

/// One solve of a repair procedure: band `w`, instance `a`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SolveStep {
    pub band: usize,
    pub instance: usize,
    pub unknowns: Vec<Tag>,
    /// Values moved to the right-hand side because earlier steps found them.
    pub eliminated: Vec<Tag>,
    pub solved: Vec<Tag>,
}

/// What one helper sent and which of its symbols it had to read.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct HelperAccess {
    pub node: usize,
    pub downloaded: usize,
    pub accessed: BTreeSet<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RepairTranscript {
    pub failed: usize,
    pub d: usize,
    pub sub_packetization: usize,
    pub helpers: Vec<HelperAccess>,
    pub solve_order: Vec<SolveStep>,
}

impl RepairTranscript {
    /// Records downloads of `R f_j` from each helper. Symbols read are the
    /// union of the row supports of `R`.
    pub fn from_repair_matrix(code: &ArrayCode, plan: &RepairPlan, r: &MatrixGF) -> RepairTranscript {
        let accessed: BTreeSet<usize> = (0..r.rows()).flat_map(|row| r.row_support(row)).collect();
        RepairTranscript {
            failed: plan.failed,
            d: plan.d(),
            sub_packetization: code.sub_packetization(),
            helpers: plan
                .helpers
                .iter()
                .map(|&node| HelperAccess {
                    node,
                    downloaded: r.rows(),
                    accessed: accessed.clone(),
                })
                .collect(),
            solve_order: Vec::new(),
        }
    }

    pub fn downloaded(&self) -> usize {
        self.helpers.iter().map(|h| h.downloaded).sum()
    }

    pub fn accessed(&self) -> usize {
        self.helpers.iter().map(|h| h.accessed.len()).sum()
    }
}

/// Outcome of [`transcript_audit`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RepairAudit {
    pub downloaded: usize,
    pub accessed: usize,
    /// `d L / (d - k + 1)`.
    pub bound: usize,
    pub optimal_repair: bool,
    pub optimal_access: bool,
}

/// Compares a transcript with the cut-set bound `d L / (d - k + 1)`.
pub fn transcript_audit(transcript: &RepairTranscript, k: usize) -> RepairAudit {
    let d = transcript.d;
    let bound = d * transcript.sub_packetization / (d + 1 - k);
    let downloaded = transcript.downloaded();
    let accessed = transcript.accessed();
    RepairAudit {
        downloaded,
        accessed,
        bound,
        optimal_repair: downloaded == bound,
        optimal_access: accessed == downloaded,
    }
}

/// Downloads keyed by helper node.
pub type Downloads = BTreeMap<usize, Vec<Elem>>;

/// Computes the helper side: `R f_j` for every helper in the plan.
pub fn collect_downloads(code: &ArrayCode, plan: &RepairPlan, word: &[Vec<Elem>]) -> Result<Downloads, RepairError> {
    let pair = code
        .repair_pair(plan.failed, plan.z)
        .ok_or(RepairError::DegreeUnavailable {
            node: plan.failed,
            z: plan.z,
        })?;
    plan.helpers
        .iter()
        .map(|&j| Ok((j, pair.r.mul_vec(&word[j])?)))
        .collect()
}

/// Finds `X` with `Y = X R` for every `Y` in the row space of `R`.
#[derive(Debug, Clone)]
pub struct Projector {
    r: MatrixGF,
    pivots: Vec<usize>,
    rinv: MatrixGF,
}

impl Projector {
    pub fn new(r: &MatrixGF) -> Result<Projector, RepairError> {
        let pivots = r.pivot_columns();
        if pivots.len() != r.rows() {
            return Err(RepairError::NotAligned {
                what: format!("full row rank (rank {} of {} rows)", pivots.len(), r.rows()),
            });
        }
        let rinv = r.select_columns(&pivots).inverse()?;
        Ok(Projector {
            r: r.clone(),
            pivots,
            rinv,
        })
    }

    pub fn project(&self, y: &MatrixGF, what: impl FnOnce() -> String) -> Result<MatrixGF, RepairError> {
        let x = y.select_columns(&self.pivots).matmul(&self.rinv)?;
        if x.matmul(&self.r)? != *y {
            return Err(RepairError::NotAligned { what: what() });
        }
        Ok(x)
    }
}

/// `A~` with `S A = A~ R`.
pub fn interference_projection(s: &MatrixGF, a: &MatrixGF, r: &MatrixGF) -> Result<MatrixGF, RepairError> {
    Projector::new(r)?.project(&s.matmul(a)?, || "interference term".into())
}

fn pair_of(code: &ArrayCode, i: usize, z: usize) -> Result<&crate::code::RepairPair, RepairError> {
    code.repair_pair(i, z)
        .ok_or(RepairError::DegreeUnavailable { node: i, z })
}

/// Aligned blocks `A~[t][j]` for node `i`, degree index `z` and the given
/// nodes, indexed `[j][t]`.
fn aligned_blocks(code: &ArrayCode, i: usize, z: usize, nodes: &[usize]) -> Result<HashMap<usize, Vec<MatrixGF>>, RepairError> {
    let pair = pair_of(code, i, z)?;
    let proj = Projector::new(&pair.r)?;
    let mut out = HashMap::new();
    for &j in nodes {
        let blocks = (0..code.r())
            .map(|t| {
                proj.project(&pair.s.matmul(code.block(t, j))?, || {
                    format!("interference of node {j} in group {t}")
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        out.insert(j, blocks);
    }
    Ok(out)
}

/// The square system of node `i` at degree index `z` with non-helpers
/// `excluded`: block row `t` is `[S A[t][i] | A~[t][j] for j in excluded]`.
pub fn lemma2_matrix(code: &ArrayCode, i: usize, z: usize, excluded: &[usize]) -> Result<MatrixGF, RepairError> {
    let pair = pair_of(code, i, z)?;
    let aligned = aligned_blocks(code, i, z, excluded)?;
    let seg = pair.r.rows();
    let sub = code.sub_packetization();
    let mut m = MatrixGF::zeros(code.field(), code.r() * seg, sub + excluded.len() * seg);
    for t in 0..code.r() {
        m.set_block(t * seg, 0, &pair.s.matmul(code.block(t, i))?)?;
        for (v, j) in excluded.iter().enumerate() {
            m.set_block(t * seg, sub + v * seg, &aligned[j][t])?;
        }
    }
    Ok(m)
}

/// The system a goal node solves per instance, built on the code in which
/// `i` still carries key matrices: `[S A[t][i] | A~[t][j] (j excluded) |
/// S K[t][i][v] (v < delta_z - delta_0)]`, plus the blocks `Gamma_u`
/// (`u > z`) whose unknowns are eliminated instead of solved.
#[derive(Debug, Clone)]
pub struct GnSystem {
    pub m: MatrixGF,
    gamma: Vec<MatrixGF>,
}

impl GnSystem {
    /// `Gamma_u` for `1 <= u < m`: block row `t` holds `S K[t][i][v]` for
    /// `v` in the key range of `u`.
    pub fn gamma(&self, u: usize) -> &MatrixGF {
        &self.gamma[u - 1]
    }
}

pub fn gn_system(base: &ArrayCode, i: usize, z: usize, excluded: &[usize]) -> Result<GnSystem, RepairError> {
    let degrees = base.degrees();
    let delta0 = degrees.get(0);
    let pair = pair_of(base, i, 0)?;
    let seg = pair.r.rows();
    let r = base.r();
    let key = |t: usize, v: usize| -> Result<MatrixGF, RepairError> {
        let k = base.key(i, t, v).ok_or(RepairError::DegreeUnavailable { node: i, z })?;
        Ok(pair.s.matmul(k)?)
    };
    let head = lemma2_matrix(base, i, 0, excluded)?;
    let n_keys = degrees.get(z) - delta0;
    let mut m = MatrixGF::zeros(base.field(), r * seg, head.cols() + n_keys * seg);
    m.set_block(0, 0, &head)?;
    for t in 0..r {
        for v in 0..n_keys {
            m.set_block(t * seg, head.cols() + v * seg, &key(t, v)?)?;
        }
    }
    let mut gamma = Vec::new();
    for u in 1..degrees.len() {
        let range = degrees.key_range(u);
        let mut g = MatrixGF::zeros(base.field(), r * seg, range.len() * seg);
        for t in 0..r {
            for (p, v) in range.clone().enumerate() {
                g.set_block(t * seg, p * seg, &key(t, v)?)?;
            }
        }
        gamma.push(g);
    }
    Ok(GnSystem { m, gamma })
}

fn check_downloads(downloads: &Downloads, plan: &RepairPlan, len: usize) -> Result<(), RepairError> {
    for &j in &plan.helpers {
        let d = downloads.get(&j).ok_or(RepairError::MissingDownload(j))?;
        if d.len() != len {
            return Err(RepairError::DownloadLength {
                node: j,
                got: d.len(),
                expected: len,
            });
        }
    }
    Ok(())
}

fn sub_vec(f: &crate::gf::Field, a: &mut [Elem], b: &[Elem]) {
    for (x, &y) in a.iter_mut().zip(b) {
        *x = f.sub(*x, y);
    }
}

/// Inverse of the square system on one code, plus the aligned blocks of
/// the helpers.
#[derive(Debug, Clone)]
struct DirectSolver {
    sub: usize,
    seg: usize,
    r: usize,
    helpers: Vec<usize>,
    excluded: Vec<usize>,
    inverse: MatrixGF,
    aligned: HashMap<usize, Vec<MatrixGF>>,
}

impl DirectSolver {
    fn new(code: &ArrayCode, i: usize, z: usize, helpers: &[usize]) -> Result<DirectSolver, RepairError> {
        let excluded: Vec<usize> = (0..code.n())
            .filter(|&j| j != i && !helpers.contains(&j))
            .collect();
        let inverse = lemma2_matrix(code, i, z, &excluded)?.inverse().map_err(singular)?;
        Ok(DirectSolver {
            sub: code.sub_packetization(),
            seg: pair_of(code, i, z)?.r.rows(),
            r: code.r(),
            helpers: helpers.to_vec(),
            excluded,
            inverse,
            aligned: aligned_blocks(code, i, z, helpers)?,
        })
    }

    /// Solves for the fragment and the non-helper projections. `extra[t]`
    /// is subtracted from group `t` on top of the helper terms.
    fn solve(
        &self,
        code_field: &crate::gf::Field,
        downloads: impl Fn(usize) -> Vec<Elem>,
        extra: Option<&[Vec<Elem>]>,
    ) -> Result<(Vec<Elem>, BTreeMap<usize, Vec<Elem>>), RepairError> {
        let f = code_field;
        let mut rhs = vec![Elem::ZERO; self.r * self.seg];
        for &j in &self.helpers {
            let d = downloads(j);
            for t in 0..self.r {
                let part = self.aligned[&j][t].mul_vec(&d)?;
                sub_vec(f, &mut rhs[t * self.seg..(t + 1) * self.seg], &part);
            }
        }
        if let Some(extra) = extra {
            for t in 0..self.r {
                sub_vec(f, &mut rhs[t * self.seg..(t + 1) * self.seg], &extra[t]);
            }
        }
        let x = self.inverse.mul_vec(&rhs)?;
        let fragment = x[..self.sub].to_vec();
        let proj = self
            .excluded
            .iter()
            .enumerate()
            .map(|(v, &j)| (j, x[self.sub + v * self.seg..self.sub + (v + 1) * self.seg].to_vec()))
            .collect();
        Ok((fragment, proj))
    }
}

/// Goal-node procedure of the last lift round.
#[derive(Debug, Clone)]
struct GoalSolver {
    z: usize,
    l: Vec<usize>,
    m: usize,
    delta0: usize,
    split: PartSplit,
    sub: usize,
    seg: usize,
    r: usize,
    helpers: Vec<usize>,
    excluded: Vec<usize>,
    inverse: MatrixGF,
    system: GnSystem,
    aligned: HashMap<usize, Vec<MatrixGF>>,
    lift: std::sync::Arc<Lift>,
}

/// Non-goal procedure of the last lift round.
#[derive(Debug, Clone)]
struct RemainderSolver {
    l: Vec<usize>,
    m: usize,
    seg: usize,
    goal: Vec<usize>,
    inner: DirectSolver,
    /// `X[(t, j, v, u)]` with `S K[t][j][v] Phi_u = X R`.
    keys: HashMap<(usize, usize, usize, usize), MatrixGF>,
    lift: std::sync::Arc<Lift>,
}

#[derive(Debug, Clone)]
enum Procedure {
    Direct(DirectSolver),
    Goal(Box<GoalSolver>),
    Remainder(Box<RemainderSolver>),
}

/// A repair procedure with all its matrices precomputed, reusable across
/// stripes.
#[derive(Debug, Clone)]
pub struct PreparedRepair {
    plan: RepairPlan,
    field: crate::gf::Field,
    template: RepairTranscript,
    download_len: usize,
    procedure: Procedure,
}

impl PreparedRepair {
    /// Picks the procedure the code's construction calls for.
    pub fn new(code: &ArrayCode, plan: &RepairPlan) -> Result<PreparedRepair, RepairError> {
        match code.lineage() {
            None => PreparedRepair::direct(code, plan),
            Some(lift) if lift.goal.contains(&plan.failed) => PreparedRepair::goal(code, plan),
            Some(_) => PreparedRepair::remainder(code, plan),
        }
    }

    fn wrap(code: &ArrayCode, plan: &RepairPlan, procedure: Procedure) -> Result<PreparedRepair, RepairError> {
        let r = &pair_of(code, plan.failed, plan.z)?.r;
        Ok(PreparedRepair {
            plan: plan.clone(),
            field: code.field().clone(),
            template: RepairTranscript::from_repair_matrix(code, plan, r),
            download_len: r.rows(),
            procedure,
        })
    }

    /// Solves the square system of `code` itself.
    pub fn direct(code: &ArrayCode, plan: &RepairPlan) -> Result<PreparedRepair, RepairError> {
        let solver = DirectSolver::new(code, plan.failed, plan.z, &plan.helpers)?;
        PreparedRepair::wrap(code, plan, Procedure::Direct(solver))
    }

    pub fn goal(code: &ArrayCode, plan: &RepairPlan) -> Result<PreparedRepair, RepairError> {
        let lift = code.lineage().ok_or(RepairError::NoLift)?.clone();
        let i = plan.failed;
        if !lift.goal.contains(&i) {
            return Err(RepairError::NotGoal(i));
        }
        let base = &*lift.base;
        let degrees = base.degrees();
        let excluded = plan.excluded(code.n());
        let system = gn_system(base, i, plan.z, &excluded)?;
        let inverse = system.m.inverse().map_err(singular)?;
        let delta0 = degrees.get(0);
        let solver = GoalSolver {
            z: plan.z,
            l: degrees.lvalues().to_vec(),
            m: degrees.len(),
            delta0,
            split: lift.split,
            sub: base.sub_packetization(),
            seg: base.sub_packetization() / delta0,
            r: code.r(),
            helpers: plan.helpers.clone(),
            excluded,
            inverse,
            aligned: aligned_blocks(base, i, 0, &plan.helpers)?,
            system,
            lift: lift.clone(),
        };
        PreparedRepair::wrap(code, plan, Procedure::Goal(Box::new(solver)))
    }

    pub fn remainder(code: &ArrayCode, plan: &RepairPlan) -> Result<PreparedRepair, RepairError> {
        let lift = code.lineage().ok_or(RepairError::NoLift)?.clone();
        let i = plan.failed;
        if lift.goal.contains(&i) {
            return Err(RepairError::IsGoal(i));
        }
        let base = &*lift.base;
        let degrees = base.degrees();
        let inner = DirectSolver::new(base, i, plan.z, &plan.helpers)?;
        let pair = pair_of(base, i, plan.z)?;
        let proj = Projector::new(&pair.r)?;
        let delta0 = degrees.get(0);
        let mut keys = HashMap::new();
        for &j in &lift.goal {
            for t in 0..code.r() {
                for v in 0..base.keys_per_group() {
                    let sk = pair.s.matmul(base.key(j, t, v).ok_or(RepairError::NotGoal(j))?)?;
                    for u in 0..delta0 {
                        let cols = lift.split.positions(u);
                        // S K Phi_u scatters the columns of S K to the part positions.
                        let mut skp = MatrixGF::zeros(base.field(), sk.rows(), base.sub_packetization());
                        for row in 0..sk.rows() {
                            for (c, &pos) in cols.iter().enumerate() {
                                skp.set(row, pos, sk.get(row, c));
                            }
                        }
                        let x = proj.project(&skp, || {
                            format!("key of node {j}, group {t}, index {v}, part {u}")
                        })?;
                        keys.insert((t, j, v, u), x);
                    }
                }
            }
        }
        let solver = RemainderSolver {
            l: degrees.lvalues().to_vec(),
            m: degrees.len(),
            seg: pair.r.rows(),
            goal: lift.goal.clone(),
            inner,
            keys,
            lift: lift.clone(),
        };
        PreparedRepair::wrap(code, plan, Procedure::Remainder(Box::new(solver)))
    }

    pub fn plan(&self) -> &RepairPlan {
        &self.plan
    }

    /// Symbols each helper sends.
    pub fn download_len(&self) -> usize {
        self.download_len
    }

    /// Rebuilds the failed fragment from the helpers' downloads.
    pub fn run(&self, downloads: &Downloads) -> Result<(Vec<Elem>, RepairTranscript), RepairError> {
        check_downloads(downloads, &self.plan, self.download_len)?;
        let mut transcript = self.template.clone();
        let fragment = match &self.procedure {
            Procedure::Direct(s) => {
                let (frag, _) = s.solve(&self.field, |j| downloads[&j].clone(), None)?;
                transcript.solve_order.push(SolveStep {
                    band: 0,
                    instance: 0,
                    unknowns: direct_tags(s, 0),
                    eliminated: Vec::new(),
                    solved: direct_tags(s, 0),
                });
                frag
            }
            Procedure::Goal(g) => g.run(&self.field, downloads, &mut transcript.solve_order)?,
            Procedure::Remainder(rn) => rn.run(&self.field, downloads, &mut transcript.solve_order)?,
        };
        Ok((fragment, transcript))
    }
}

fn direct_tags(s: &DirectSolver, a: usize) -> Vec<Tag> {
    std::iter::once(Tag::Instance(a))
        .chain(s.excluded.iter().map(|&node| Tag::Projection { node, instance: a }))
        .collect()
}

impl GoalSolver {
    fn part_of(&self, instance: &[Elem], u: usize) -> Vec<Elem> {
        self.split.positions(u)
            .into_iter()
            .map(|p| instance[p])
            .collect()
    }

    fn run(
        &self,
        f: &crate::gf::Field,
        downloads: &Downloads,
        log: &mut Vec<SolveStep>,
    ) -> Result<Vec<Elem>, RepairError> {
        let schedule = &self.lift.schedule;
        let degrees = self.lift.base.degrees();
        let l0 = self.l[0];
        let mut instances: Vec<Option<Vec<Elem>>> = vec![None; l0];
        let mut parts: HashMap<(usize, usize), Vec<Elem>> = HashMap::new();
        for w in self.z..self.m {
            for a in (self.l[w + 1]..self.l[w]).rev() {
                let mut rhs = vec![Elem::ZERO; self.r * self.seg];
                for &j in &self.helpers {
                    let d = &downloads[&j][a * self.seg..(a + 1) * self.seg];
                    for t in 0..self.r {
                        let term = self.aligned[&j][t].mul_vec(d)?;
                        sub_vec(f, &mut rhs[t * self.seg..(t + 1) * self.seg], &term);
                    }
                }
                let mut eliminated = Vec::new();
                for u in self.z + 1..=w {
                    let mut known = Vec::new();
                    for &(b, pu) in schedule.part(u, a) {
                        let v = parts
                            .get(&(b, pu))
                            .ok_or_else(|| RepairError::OutOfOrder(Tag::Part(b, pu).to_string()))?;
                        known.extend_from_slice(v);
                        eliminated.push(Tag::Part(b, pu));
                    }
                    let term = self.system.gamma(u).mul_vec(&known)?;
                    sub_vec(f, &mut rhs, &term);
                }
                let x = self.inverse.mul_vec(&rhs)?;
                let inst = x[..self.sub].to_vec();
                for u in 0..self.delta0 {
                    parts.insert((a, u), self.part_of(&inst, u));
                }
                instances[a] = Some(inst);
                let mut solved = vec![Tag::Instance(a)];
                let mut pos = self.sub + self.excluded.len() * self.seg;
                for u in 1..=self.z {
                    for &(b, pu) in schedule.part(u, a) {
                        parts.insert((b, pu), x[pos..pos + self.seg].to_vec());
                        pos += self.seg;
                        solved.push(Tag::Part(b, pu));
                    }
                }
                let mut unknowns = solved.clone();
                unknowns.extend(self.excluded.iter().map(|&node| Tag::Projection { node, instance: a }));
                unknowns.extend(eliminated.iter().copied());
                log.push(SolveStep {
                    band: w,
                    instance: a,
                    unknowns,
                    eliminated,
                    solved,
                });
            }
        }
        debug_assert_eq!(degrees.lvalues(), &self.l[..]);
        let mut out = Vec::with_capacity(l0 * self.sub);
        for (b, inst) in instances.into_iter().enumerate() {
            let inst = match inst {
                Some(v) => v,
                None => {
                    let mut v = vec![Elem::ZERO; self.sub];
                    for u in 0..self.delta0 {
                        let p = parts
                            .get(&(b, u))
                            .ok_or_else(|| RepairError::OutOfOrder(Tag::Part(b, u).to_string()))?;
                        for (&pos, &val) in self.split.positions(u).iter().zip(p) {
                            v[pos] = val;
                        }
                    }
                    v
                }
            };
            out.extend(inst);
        }
        Ok(out)
    }
}

impl RemainderSolver {
    fn run(
        &self,
        f: &crate::gf::Field,
        downloads: &Downloads,
        log: &mut Vec<SolveStep>,
    ) -> Result<Vec<Elem>, RepairError> {
        let schedule = &self.lift.schedule;
        let degrees = self.lift.base.degrees();
        let l0 = self.l[0];
        let seg = self.seg;
        let r = self.inner.r;
        // R f_j^(b) for non-helpers, filled in as instances are solved
        let mut solved_proj: HashMap<(usize, usize), Vec<Elem>> = HashMap::new();
        let mut instances: Vec<Vec<Elem>> = vec![Vec::new(); l0];
        for w in 0..self.m {
            for a in (self.l[w + 1]..self.l[w]).rev() {
                let mut extra = vec![vec![Elem::ZERO; seg]; r];
                let mut eliminated = Vec::new();
                for &j in &self.goal {
                    for u in 1..=w {
                        for (p, &(b, pu)) in schedule.part(u, a).iter().enumerate() {
                            let v = degrees.key_range(u).start + p;
                            let rf: Vec<Elem> = if self.inner.helpers.contains(&j) {
                                downloads[&j][b * seg..(b + 1) * seg].to_vec()
                            } else {
                                let tag = Tag::Projection { node: j, instance: b };
                                let known = solved_proj
                                    .get(&(j, b))
                                    .ok_or_else(|| RepairError::OutOfOrder(tag.to_string()))?;
                                if !eliminated.contains(&tag) {
                                    eliminated.push(tag);
                                }
                                known.clone()
                            };
                            for (t, acc) in extra.iter_mut().enumerate() {
                                self.keys[&(t, j, v, pu)].mul_vec_add(&rf, acc)?;
                            }
                        }
                    }
                }
                let (frag, proj) = self.inner.solve(
                    f,
                    |j| downloads[&j][a * seg..(a + 1) * seg].to_vec(),
                    Some(&extra),
                )?;
                instances[a] = frag;
                for (j, v) in proj {
                    solved_proj.insert((j, a), v);
                }
                let tags = direct_tags(&self.inner, a);
                let mut unknowns = tags.clone();
                unknowns.extend(eliminated.iter().copied());
                log.push(SolveStep {
                    band: w,
                    instance: a,
                    unknowns,
                    eliminated,
                    solved: tags,
                });
            }
        }
        Ok(instances.concat())
    }
}

/// Repairs with the procedure the code's construction calls for.
pub fn repair(code: &ArrayCode, plan: &RepairPlan, downloads: &Downloads) -> Result<(Vec<Elem>, RepairTranscript), RepairError> {
    PreparedRepair::new(code, plan)?.run(downloads)
}

/// Goal-node repair: the failed node must be a goal node of the code's last
/// lift round.
pub fn gn_repair(code: &ArrayCode, plan: &RepairPlan, downloads: &Downloads) -> Result<(Vec<Elem>, RepairTranscript), RepairError> {
    PreparedRepair::goal(code, plan)?.run(downloads)
}

/// Repair of a node outside the goal set of the code's last lift round.
pub fn rn_repair(code: &ArrayCode, plan: &RepairPlan, downloads: &Downloads) -> Result<(Vec<Elem>, RepairTranscript), RepairError> {
    PreparedRepair::remainder(code, plan)?.run(downloads)
}

/// Solves the square system of the final code directly.
pub fn dense_repair(code: &ArrayCode, plan: &RepairPlan, downloads: &Downloads) -> Result<(Vec<Elem>, RepairTranscript), RepairError> {
    PreparedRepair::direct(code, plan)?.run(downloads)
}

/// Order of the goal-node solves for degree index `z`, derived from the
/// schedule alone: for each band `w >= z` and instance `a` in it, the
/// instance and the schedule entries of sets `1..=z` are solved and those
/// of sets `z+1..=w` are eliminated.
pub fn gn_solve_order(schedule: &crate::transform::PSchedule, z: usize) -> Vec<SolveStep> {
    let l = schedule.lvalues();
    let m = schedule.m();
    let mut out = Vec::new();
    for w in z..m {
        for a in (l[w + 1]..l[w]).rev() {
            let mut solved = vec![Tag::Instance(a)];
            for u in 1..=z {
                solved.extend(schedule.part(u, a).iter().map(|&(b, pu)| Tag::Part(b, pu)));
            }
            let eliminated: Vec<Tag> = (z + 1..=w)
                .flat_map(|u| schedule.part(u, a).iter().map(|&(b, pu)| Tag::Part(b, pu)))
                .collect();
            let mut unknowns = solved.clone();
            unknowns.extend(eliminated.iter().copied());
            out.push(SolveStep {
                band: w,
                instance: a,
                unknowns,
                eliminated,
                solved,
            });
        }
    }
    out
}
