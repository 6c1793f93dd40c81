//! Brute-force checks of the properties the constructions promise.
//!
//! Each check returns a [`PropertyReport`] saying what was checked, whether
//! every case was covered or a seeded sample, and the first counterexample.
//! Nothing here trusts the constructions: MDS is a rank computation per
//! erasure pattern, and repair is an actual repair of a random codeword.

use std::collections::HashSet;
use std::fmt;

use itertools::Itertools;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::code::ArrayCode;
use crate::codec::Codec;
use crate::gf::{Elem, Field};
use crate::indexing::{delta_matrix, v_matrix, PartSplit};
use crate::linalg::{vstack, MatrixGF};
use crate::repair::{self, collect_downloads, gn_system, lemma2_matrix, transcript_audit, RepairPlan};
use crate::vbk::lemma5_row_target;

/// Above this many cases a check samples instead of enumerating.
pub const EXHAUSTIVE_LIMIT: usize = 500;

/// How many cases a check covers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Coverage {
    Exhaustive,
    Sample { count: usize, seed: u64 },
    /// Exhaustive up to [`EXHAUSTIVE_LIMIT`] cases, otherwise a sample.
    Auto { sample: usize, seed: u64 },
}

impl Coverage {
    pub fn auto(seed: u64) -> Coverage {
        Coverage::Auto { sample: 64, seed }
    }
}

/// Scope of a finished check.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Scope {
    Exhaustive { cases: usize },
    Sampled { cases: usize, total: usize, seed: u64 },
}

impl fmt::Display for Scope {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scope::Exhaustive { cases } => write!(f, "exhaustive, {cases} cases"),
            Scope::Sampled { cases, total, seed } => {
                write!(f, "sampled {cases} of {total} cases, seed {seed}")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PropertyReport {
    pub name: String,
    pub scope: Scope,
    pub passed: bool,
    pub counterexample: Option<String>,
    pub detail: String,
}

impl PropertyReport {
    fn new(name: &str, scope: Scope, failure: Option<String>, detail: impl Into<String>) -> PropertyReport {
        PropertyReport {
            name: name.to_string(),
            scope,
            passed: failure.is_none(),
            counterexample: failure,
            detail: detail.into(),
        }
    }

    /// One line: verdict, name, scope and counterexample if any.
    pub fn to_line(&self) -> String {
        let verdict = if self.passed { "PASS" } else { "FAIL" };
        let mut line = format!("{verdict} {} ({})", self.name, self.scope);
        if !self.detail.is_empty() {
            line.push_str(&format!(": {}", self.detail));
        }
        if let Some(c) = &self.counterexample {
            line.push_str(&format!(" [counterexample: {c}]"));
        }
        line
    }

    /// One JSON object per report.
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("reports serialize")
    }
}

/// Renders reports as text, one per line.
pub fn render_text(reports: &[PropertyReport]) -> String {
    reports.iter().map(|r| r.to_line() + "\n").collect()
}

/// Renders reports as JSON lines.
pub fn render_json_lines(reports: &[PropertyReport]) -> String {
    reports.iter().map(|r| r.to_json() + "\n").collect()
}

fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    (0..k).fold(1usize, |acc, i| acc.saturating_mul(n - i) / (i + 1))
}

/// The `size`-subsets of `pool` a check visits, and the resulting scope.
pub fn pick_subsets(pool: &[usize], size: usize, coverage: &Coverage) -> (Vec<Vec<usize>>, Scope) {
    let total = binomial(pool.len(), size);
    let (sample, seed) = match *coverage {
        Coverage::Exhaustive => (None, 0),
        Coverage::Sample { count, seed } => (Some(count), seed),
        Coverage::Auto { sample, seed } => {
            if total <= EXHAUSTIVE_LIMIT {
                (None, seed)
            } else {
                (Some(sample), seed)
            }
        }
    };
    match sample {
        Some(count) if count < total => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut seen = HashSet::new();
            while seen.len() < count {
                let mut s: Vec<usize> = pool.choose_multiple(&mut rng, size).copied().collect();
                s.sort_unstable();
                seen.insert(s);
            }
            let mut subsets: Vec<Vec<usize>> = seen.into_iter().collect();
            subsets.sort();
            (subsets, Scope::Sampled { cases: count, total, seed })
        }
        _ => (
            pool.iter().copied().combinations(size).collect(),
            Scope::Exhaustive { cases: total },
        ),
    }
}

/// Every `r` fragments must be recoverable from the rest: the stacked
/// parity blocks of each `r`-subset must be nonsingular.
pub fn check_mds(code: &ArrayCode, coverage: &Coverage) -> PropertyReport {
    let nodes: Vec<usize> = (0..code.n()).collect();
    let (subsets, scope) = pick_subsets(&nodes, code.r(), coverage);
    let sub = code.sub_packetization();
    let full = code.r() * sub;
    let bad = subsets.par_iter().find_first(|erased| {
        let mut b = MatrixGF::zeros(code.field(), full, full);
        for t in 0..code.r() {
            for (e, &node) in erased.iter().enumerate() {
                b.set_block(t * sub, e * sub, code.block(t, node)).expect("fits");
            }
        }
        b.rank() < full
    });
    PropertyReport::new(
        "mds",
        scope,
        bad.map(|s| format!("erasing nodes {s:?}")),
        format!("({}, {}) code, L = {}", code.n(), code.k(), sub),
    )
}

/// Key matrices of one goal node vanish under the select matrix of every
/// other goal node: `S_j K[t][i][v] = 0`.
pub fn check_c1(code: &ArrayCode, goal: &[usize]) -> PropertyReport {
    let mut cases = 0;
    let mut failure = None;
    'outer: for &i in goal {
        for &j in goal.iter().filter(|&&j| j != i) {
            let Some(pair) = code.repair_pair(j, 0) else {
                failure = Some(format!("node {j} has no smallest-degree repair"));
                break 'outer;
            };
            for t in 0..code.r() {
                for v in 0..code.keys_per_group() {
                    cases += 1;
                    let ok = code
                        .key(i, t, v)
                        .is_some_and(|k| pair.s.matmul(k).is_ok_and(|m| m.is_zero()));
                    if !ok {
                        failure = Some(format!("S_{j} K[{t}][{i}][{v}] != 0"));
                        break 'outer;
                    }
                }
            }
        }
    }
    PropertyReport::new(
        "c1",
        Scope::Exhaustive { cases },
        failure,
        format!("goal set {goal:?}"),
    )
}

/// The goal-node system is nonsingular for every goal node, every larger
/// degree and every choice of non-helpers.
pub fn check_c2(code: &ArrayCode, goal: &[usize], coverage: &Coverage) -> PropertyReport {
    let degrees = code.degrees();
    let mut jobs = Vec::new();
    let mut total = 0;
    let mut sampled = None;
    for &i in goal {
        let others: Vec<usize> = (0..code.n()).filter(|&j| j != i).collect();
        for z in 1..degrees.len() {
            let (subsets, scope) = pick_subsets(&others, code.r() - degrees.get(z), coverage);
            match scope {
                Scope::Exhaustive { cases } => total += cases,
                s @ Scope::Sampled { cases, .. } => {
                    total += cases;
                    sampled = Some(s);
                }
            }
            jobs.extend(subsets.into_iter().map(|d| (i, z, d)));
        }
    }
    let bad = jobs.par_iter().find_map_first(|(i, z, d)| {
        match gn_system(code, *i, *z, d) {
            Ok(sys) if sys.m.rank() == sys.m.rows() => None,
            Ok(_) => Some(format!("node {i}, degree {}, non-helpers {d:?}", degrees.get(*z))),
            Err(e) => Some(format!("node {i}, degree {}, non-helpers {d:?}: {e}", degrees.get(*z))),
        }
    });
    let scope = match sampled {
        Some(Scope::Sampled { seed, .. }) => Scope::Sampled {
            cases: jobs.len(),
            total,
            seed,
        },
        _ => Scope::Exhaustive { cases: jobs.len() },
    };
    PropertyReport::new("c2", scope, bad, format!("goal set {goal:?}"))
}

/// For nodes outside the goal set, whatever the select matrix sees of a
/// goal node's appended data lies in the row space of the repair matrix.
pub fn check_c3(code: &ArrayCode, goal: &[usize], zs: &[usize]) -> PropertyReport {
    let delta0 = code.delta0();
    let split = crate::transform::part_split(code, goal);
    let mut cases = 0;
    let mut failure = None;
    'outer: for i in (0..code.n()).filter(|i| !goal.contains(i)) {
        for &z in zs {
            let Some(pair) = code.repair_pair(i, z) else { continue };
            let rank_r = pair.r.rank();
            for &j in goal {
                for t in 0..code.r() {
                    for v in 0..code.keys_per_group() {
                        let Some(key) = code.key(j, t, v) else {
                            failure = Some(format!("node {j} has no key matrices"));
                            break 'outer;
                        };
                        let sk = pair.s.matmul(key).expect("shapes agree");
                        for u in 0..delta0 {
                            cases += 1;
                            let mut skp = MatrixGF::zeros(code.field(), sk.rows(), code.sub_packetization());
                            for (c, pos) in split.positions(u).into_iter().enumerate() {
                                for row in 0..sk.rows() {
                                    skp.set(row, pos, sk.get(row, c));
                                }
                            }
                            let stacked = vstack(&[&pair.r, &skp]).expect("same width");
                            if stacked.rank() != rank_r || rank_r != pair.r.rows() {
                                failure = Some(format!(
                                    "node {i}, degree {}, goal node {j}, t={t}, v={v}, u={u}",
                                    code.degrees().get(z)
                                ));
                                break 'outer;
                            }
                        }
                    }
                }
            }
        }
    }
    PropertyReport::new(
        "c3",
        Scope::Exhaustive { cases },
        failure,
        format!("goal set {goal:?}, degree indices {zs:?}"),
    )
}

/// Every node can be repaired at the smallest degree: the aligned square
/// system exists and is nonsingular for every choice of non-helpers.
pub fn check_base_repair(code: &ArrayCode, coverage: &Coverage) -> PropertyReport {
    let delta0 = code.delta0();
    let mut jobs = Vec::new();
    let mut scope_total = 0;
    let mut seed = None;
    for i in 0..code.n() {
        let others: Vec<usize> = (0..code.n()).filter(|&j| j != i).collect();
        let (subsets, scope) = pick_subsets(&others, code.r() - delta0, coverage);
        if let Scope::Sampled { seed: s, total, .. } = scope {
            seed = Some(s);
            scope_total += total;
        } else {
            scope_total += subsets.len();
        }
        jobs.extend(subsets.into_iter().map(|d| (i, d)));
    }
    let bad = jobs.par_iter().find_map_first(|(i, d)| match lemma2_matrix(code, *i, 0, d) {
        Ok(m) if m.rank() == m.rows() => None,
        Ok(_) => Some(format!("node {i}, non-helpers {d:?}: singular")),
        Err(e) => Some(format!("node {i}, non-helpers {d:?}: {e}")),
    });
    let scope = match seed {
        Some(seed) => Scope::Sampled {
            cases: jobs.len(),
            total: scope_total,
            seed,
        },
        None => Scope::Exhaustive { cases: jobs.len() },
    };
    PropertyReport::new(
        "base-repair",
        scope,
        bad,
        format!("degree {} for every node", delta0),
    )
}

/// Everything a base code needs before it can be lifted: MDS, repair at the
/// smallest degree for every node, and C1, C2 and C3 at the smallest degree
/// for every goal set.
pub fn check_tmds(code: &ArrayCode, coverage: &Coverage) -> Vec<PropertyReport> {
    if code.r() <= code.delta0() {
        return vec![PropertyReport::new(
            "tmds",
            Scope::Exhaustive { cases: 0 },
            Some(format!("r = {} does not exceed delta0 = {}", code.r(), code.delta0())),
            "precondition",
        )];
    }
    if let Some(i) = (0..code.n()).find(|&i| !code.has_keys(i)) {
        return vec![PropertyReport::new(
            "tmds",
            Scope::Exhaustive { cases: 0 },
            Some(format!("node {i} has no key matrices")),
            "precondition",
        )];
    }
    let mut out = vec![check_mds(code, coverage), check_base_repair(code, coverage)];
    for goal in code.partition() {
        out.push(check_c1(code, goal));
        out.push(check_c2(code, goal, coverage));
        out.push(check_c3(code, goal, &[0]));
    }
    out
}

/// Repairs a random codeword for every node, degree and helper set and
/// checks the fragment, the bandwidth bound and access optimality.
pub fn check_repair_bound(code: &ArrayCode, coverage: &Coverage, seed: u64) -> PropertyReport {
    let codec = Codec::new(code.clone());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let q = code.field().order();
    let data: Vec<Vec<Elem>> = (0..code.k())
        .map(|_| {
            (0..code.sub_packetization())
                .map(|_| Elem(rng.gen_range(0..q) as u16))
                .collect()
        })
        .collect();
    let word = match codec.encode(&data) {
        Ok(w) => w,
        Err(e) => {
            return PropertyReport::new(
                "repair-bound",
                Scope::Exhaustive { cases: 0 },
                Some(format!("encoding failed: {e}")),
                "",
            )
        }
    };
    let mut jobs = Vec::new();
    let mut sampled_seed = None;
    let mut total = 0;
    for i in 0..code.n() {
        let others: Vec<usize> = (0..code.n()).filter(|&j| j != i).collect();
        for z in (0..code.degrees().len()).filter(|&z| code.supports(i, z)) {
            let d = code.k() + code.degrees().get(z) - 1;
            let (sets, scope) = pick_subsets(&others, d, coverage);
            if let Scope::Sampled { seed, total: t, .. } = scope {
                sampled_seed = Some(seed);
                total += t;
            } else {
                total += sets.len();
            }
            jobs.extend(sets.into_iter().map(|h| (i, z, h)));
        }
    }
    let bad = jobs.par_iter().find_map_first(|(i, z, helpers)| {
        let run = || -> Result<Option<String>, repair::RepairError> {
            let plan = RepairPlan::new(code, *i, *z, helpers)?;
            let downloads = collect_downloads(code, &plan, &word)?;
            let (frag, transcript) = repair::repair(code, &plan, &downloads)?;
            let audit = transcript_audit(&transcript, code.k());
            if frag != word[*i] {
                return Ok(Some("wrong fragment".into()));
            }
            if !audit.optimal_repair || !audit.optimal_access {
                return Ok(Some(format!(
                    "downloaded {}, accessed {}, bound {}",
                    audit.downloaded, audit.accessed, audit.bound
                )));
            }
            Ok(None)
        };
        match run() {
            Ok(None) => None,
            Ok(Some(why)) => Some(format!("node {i}, helpers {helpers:?}: {why}")),
            Err(e) => Some(format!("node {i}, helpers {helpers:?}: {e}")),
        }
    });
    let scope = match sampled_seed {
        Some(seed) => Scope::Sampled {
            cases: jobs.len(),
            total,
            seed,
        },
        None => Scope::Exhaustive { cases: jobs.len() },
    };
    PropertyReport::new(
        "repair-bound",
        scope,
        bad,
        format!("every node and degree, L = {}", code.sub_packetization()),
    )
}

/// Identities of the selection matrices `V_{x,u}` in base `s` with `w`
/// digits, over all `x != x~`, `u`, `v`, `h`, with `T` built row by row
/// from [`lemma5_row_target`]:
///
/// - `lemma5-orthogonality`: `V_{x,u} V_{x,v}^T` is `I` or `0`.
/// - `lemma5-transfer`: `V_{x,u} V_{x~,v}^T Delta_h = T V_{x,u}`. This
///   only holds for `x < x~`; the report counts the failures.
/// - `lemma5-transfer-shifted`: the same with `V_{x-1,u}` on the right
///   when `x > x~`, which holds everywhere.
/// - `lemma5-digit-split`: with `Delta_h` replaced by the part of digit
///   `x~` ([`PartSplit::digit`]), the product is `T' V_{x,u}` for some `T'`
///   in every case. This is the form the lift relies on.
pub fn check_lemma5(s: usize, w: usize) -> Vec<PropertyReport> {
    let field = Field::new(2).expect("GF(2)");
    let v = |x: usize, u: usize| v_matrix(&field, x, u, s, w).expect("in range");
    let np = s.pow(w as u32 - 1);
    let eye = MatrixGF::identity(&field, np);
    let zero = MatrixGF::zeros(&field, np, np);

    let mut cases = 0;
    let mut failure = None;
    'orth: for x in 0..w {
        for u in 0..s {
            for u2 in 0..s {
                cases += 1;
                let prod = v(x, u).matmul(&v(x, u2).transpose()).expect("shapes");
                let want = if u == u2 { &eye } else { &zero };
                if prod != *want {
                    failure = Some(format!("x={x}, u={u}, v={u2}"));
                    break 'orth;
                }
            }
        }
    }
    let orth = PropertyReport::new(
        "lemma5-orthogonality",
        Scope::Exhaustive { cases },
        failure,
        format!("s={s}, w={w}"),
    );

    let t_matrix = |x: usize, xt: usize, vv: usize, h: usize| {
        let mut m = MatrixGF::zeros(&field, np, np);
        for a in 0..np {
            if let Some(c) = lemma5_row_target(a, x, xt, vv, h, s, w) {
                m.set(a, c, Elem::ONE);
            }
        }
        m
    };
    let tuples: Vec<(usize, usize, usize, usize, usize)> = (0..w)
        .cartesian_product(0..w)
        .filter(|(x, xt)| x != xt)
        .cartesian_product((0..s).cartesian_product(0..s).cartesian_product(0..s))
        .map(|((x, xt), ((u, vv), h))| (x, xt, u, vv, h))
        .collect();
    let run = |check: &dyn Fn(usize, usize, usize, usize, usize) -> bool| {
        let mut failures = 0;
        let mut first = None;
        for &(x, xt, u, vv, h) in &tuples {
            if !check(x, xt, u, vv, h) {
                failures += 1;
                first.get_or_insert(format!("x={x}, x~={xt}, u={u}, v={vv}, h={h}"));
            }
        }
        (failures, first)
    };
    let lhs = |x: usize, xt: usize, u: usize, vv: usize, extract: &MatrixGF| {
        v(x, u)
            .matmul(&v(xt, vv).transpose())
            .and_then(|m| m.matmul(extract))
            .expect("shapes")
    };
    let delta = |h: usize| delta_matrix(&field, h, np, s).expect("in range");
    let cases = tuples.len();

    let as_printed =
        |x, xt, u, vv, h| lhs(x, xt, u, vv, &delta(h)) == t_matrix(x, xt, vv, h).matmul(&v(x, u)).expect("shapes");
    let (f_lit, e_lit) = run(&as_printed);
    let (f_below, _) = run(&|x, xt, u, vv, h| x > xt || as_printed(x, xt, u, vv, h));
    let literal = PropertyReport::new(
        "lemma5-transfer",
        Scope::Exhaustive { cases },
        e_lit,
        format!("s={s}, w={w}, {f_lit} of {cases} cases fail, {f_below} of them with x < x~"),
    );

    let (_, e_shift) = run(&|x, xt, u, vv, h| {
        let axis = if x > xt { x - 1 } else { x };
        lhs(x, xt, u, vv, &delta(h)) == t_matrix(x, xt, vv, h).matmul(&v(axis, u)).expect("shapes")
    });
    let shifted = PropertyReport::new(
        "lemma5-transfer-shifted",
        Scope::Exhaustive { cases },
        e_shift,
        format!("V_(x-1,u) on the right when x > x~, s={s}, w={w}"),
    );

    let (_, e_digit) = run(&|x, xt, u, vv, h| {
        let part = PartSplit::digit(1, np, s, xt).matrix(&field, h).expect("in range");
        let prod = lhs(x, xt, u, vv, &part);
        let t = prod.matmul(&v(x, u).transpose()).expect("shapes");
        t.matmul(&v(x, u)).expect("shapes") == prod
    });
    let digit = PropertyReport::new(
        "lemma5-digit-split",
        Scope::Exhaustive { cases },
        e_digit,
        format!("parts along digit x~, s={s}, w={w}"),
    );
    vec![orth, literal, shifted, digit]
}

/// Deliberately broken inputs, so the failure paths of the checks above
/// can be exercised.
pub mod fixtures {
    use crate::code::ArrayCode;
    use crate::linalg::MatrixGF;
    use crate::vbk::{VbkConstants, VbkParams};

    /// `constants` with the first `zeta` moved onto `lambda_{node,0}`. The
    /// code stays MDS, but the goal system of `node`'s set turns singular.
    pub fn zeta_collision(params: &VbkParams, constants: &VbkConstants, node: usize) -> VbkConstants {
        let mut bad = constants.clone();
        if let Some(z) = bad.zeta.first_mut() {
            *z = constants.lambda(params, node, 0);
        }
        bad
    }

    /// `code` with parity block `(t, i)` replaced by zeros.
    pub fn zeroed_block(code: &ArrayCode, t: usize, i: usize) -> ArrayCode {
        let l = code.sub_packetization();
        code.with_block(t, i, MatrixGF::zeros(code.field(), l, l))
    }
}
