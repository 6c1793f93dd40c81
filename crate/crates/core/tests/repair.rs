use std::collections::BTreeSet;
use std::sync::Arc;

use itertools::Itertools;
use mdsa::codec::Codec;
use mdsa::gf::{Elem, Field};
use mdsa::repair::*;
use mdsa::transform::{lift_code, DegreeSet, LiftRound, PSchedule};
use mdsa::vbk::{construct, VbkParams};
use mdsa::ArrayCode;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn vbk(n: usize, k: usize, degrees: &[usize], q: u32) -> ArrayCode {
    let params = VbkParams::new(n, k, 2, degrees, Field::new(q).unwrap()).unwrap();
    construct(&params, 0).unwrap().0
}

fn lift(code: ArrayCode, goals: &[&[usize]]) -> ArrayCode {
    goals.iter().fold(code, |c, g| lift_code(&LiftRound::new(Arc::new(c), g).unwrap()).unwrap())
}

fn random_word(code: &ArrayCode, seed: u64) -> Vec<Vec<Elem>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let q = code.field().order();
    let data: Vec<Vec<Elem>> = (0..code.k())
        .map(|_| (0..code.sub_packetization()).map(|_| Elem(rng.gen_range(0..q) as u16)).collect())
        .collect();
    Codec::new(code.clone()).encode(&data).unwrap()
}

/// Every supported (node, degree, helper set): fast and dense repair agree
/// with the stored fragment, and the transcript meets the bound.
fn exhaustive(code: &ArrayCode, seed: u64) -> usize {
    let word = random_word(code, seed);
    let mut count = 0;
    for i in 0..code.n() {
        for z in (0..code.degrees().len()).filter(|&z| code.supports(i, z)) {
            let d = code.k() + code.degrees().get(z) - 1;
            let others: Vec<usize> = (0..code.n()).filter(|&j| j != i).collect();
            for helpers in others.into_iter().combinations(d) {
                let plan = RepairPlan::new(code, i, z, &helpers).unwrap();
                let downloads = collect_downloads(code, &plan, &word).unwrap();
                let (fast, transcript) = repair(code, &plan, &downloads).unwrap();
                assert_eq!(fast, word[i], "node {i}, d {d}, helpers {helpers:?}");
                let (dense, _) = dense_repair(code, &plan, &downloads).unwrap();
                assert_eq!(dense, word[i]);
                let audit = transcript_audit(&transcript, code.k());
                assert!(audit.optimal_repair && audit.optimal_access, "{audit:?}");
                count += 1;
            }
        }
    }
    count
}

#[test]
fn base_code_repairs() {
    let code = vbk(6, 3, &[2, 3], 32);
    assert_eq!(exhaustive(&code, 1), 6 * 5);
}

#[test]
fn one_and_two_rounds_repair() {
    let base = vbk(6, 3, &[2, 3], 32);
    let one = lift(base.clone(), &[&[0, 1]]);
    // goal nodes gain d = 5; the others keep d = 4 only
    assert_eq!(exhaustive(&one, 2), 6 * 5 + 2);
    let two = lift(base, &[&[0, 1], &[2, 3]]);
    assert_eq!(exhaustive(&two, 3), 6 * 5 + 4);
}

#[test]
fn goal_repair_at_every_degree_with_four_degrees() {
    let code = lift(vbk(8, 2, &[2, 3, 4, 6], 32), &[&[0, 1]]);
    assert_eq!(code.sub_packetization(), 96);
    let word = random_word(&code, 4);
    for z in 0..4 {
        let d = 2 + code.degrees().get(z) - 1;
        let helpers: Vec<usize> = (1..8).rev().take(d).collect();
        let plan = RepairPlan::new(&code, 0, z, &helpers).unwrap();
        let downloads = collect_downloads(&code, &plan, &word).unwrap();
        let (frag, transcript) = gn_repair(&code, &plan, &downloads).unwrap();
        assert_eq!(frag, word[0], "z={z}");
        assert_eq!(dense_repair(&code, &plan, &downloads).unwrap().0, word[0]);
        let audit = transcript_audit(&transcript, 2);
        assert_eq!(audit.downloaded, d * 96 / code.degrees().get(z));
        assert!(audit.optimal_access);
    }
}

fn without_projections(tags: &[Tag]) -> BTreeSet<Tag> {
    tags.iter().copied().filter(|t| !matches!(t, Tag::Projection { .. })).collect()
}

#[test]
fn executed_solve_order_matches_the_schedule() {
    let code = lift(vbk(8, 2, &[2, 3, 4, 6], 32), &[&[0, 1]]);
    let word = random_word(&code, 5);
    let plan = RepairPlan::with_degree(&code, 0, 4, &[1, 2, 3, 4]).unwrap();
    let downloads = collect_downloads(&code, &plan, &word).unwrap();
    let (_, transcript) = gn_repair(&code, &plan, &downloads).unwrap();
    let schedule = PSchedule::build(&DegreeSet::new(&[2, 3, 4, 6], 6).unwrap()).unwrap();
    let structural = gn_solve_order(&schedule, 1);
    assert_eq!(transcript.solve_order.len(), structural.len());
    for (run, want) in transcript.solve_order.iter().zip(&structural) {
        assert_eq!((run.band, run.instance), (want.band, want.instance));
        assert_eq!(without_projections(&run.solved), without_projections(&want.solved));
        assert_eq!(without_projections(&run.eliminated), without_projections(&want.eliminated));
        assert_eq!(without_projections(&run.unknowns), without_projections(&want.unknowns));
    }
}

#[test]
fn structural_order_for_four_degrees() {
    let schedule = PSchedule::build(&DegreeSet::new(&[2, 3, 4, 6], 6).unwrap()).unwrap();
    let steps = gn_solve_order(&schedule, 1);
    let bands: Vec<(usize, usize)> = steps.iter().map(|s| (s.band, s.instance)).collect();
    assert_eq!(bands, vec![(1, 3), (2, 2), (3, 1), (3, 0)]);
    let set = |v: &[Tag]| v.iter().copied().collect::<BTreeSet<_>>();
    let p = Tag::Part;
    assert_eq!(set(&steps[0].solved), set(&[Tag::Instance(3), p(5, 1)]));
    assert!(steps[0].eliminated.is_empty());
    assert_eq!(set(&steps[1].solved), set(&[Tag::Instance(2), p(5, 0)]));
    assert_eq!(set(&steps[1].eliminated), set(&[p(5, 1)]));
    assert_eq!(set(&steps[2].solved), set(&[Tag::Instance(1), p(4, 1)]));
    assert_eq!(set(&steps[2].eliminated), set(&[p(3, 1), p(5, 0), p(5, 1)]));
    assert_eq!(set(&steps[3].solved), set(&[Tag::Instance(0), p(4, 0)]));
    assert_eq!(set(&steps[3].eliminated), set(&[p(3, 0), p(2, 0), p(2, 1)]));
}

#[test]
fn goal_repair_at_the_smallest_degree_matches_dense() {
    let code = lift(vbk(6, 3, &[2, 3], 32), &[&[0, 1]]);
    for seed in 0..10 {
        let word = random_word(&code, 100 + seed);
        for i in [0, 1] {
            let helpers: Vec<usize> = (0..6).filter(|&j| j != i).take(4).collect();
            let plan = RepairPlan::new(&code, i, 0, &helpers).unwrap();
            let downloads = collect_downloads(&code, &plan, &word).unwrap();
            let gn = gn_repair(&code, &plan, &downloads).unwrap().0;
            assert_eq!(gn, dense_repair(&code, &plan, &downloads).unwrap().0);
            assert_eq!(gn, word[i]);
        }
    }
}

#[test]
fn procedures_refuse_the_wrong_node_kind() {
    let code = lift(vbk(6, 3, &[2, 3], 32), &[&[0, 1]]);
    let word = random_word(&code, 7);
    let plan = RepairPlan::new(&code, 2, 0, &[0, 1, 3, 4]).unwrap();
    let downloads = collect_downloads(&code, &plan, &word).unwrap();
    assert!(matches!(gn_repair(&code, &plan, &downloads), Err(RepairError::NotGoal(2))));
    let plan = RepairPlan::new(&code, 0, 0, &[1, 2, 3, 4]).unwrap();
    let downloads = collect_downloads(&code, &plan, &word).unwrap();
    assert!(matches!(rn_repair(&code, &plan, &downloads), Err(RepairError::IsGoal(0))));
}

#[test]
fn plan_validation() {
    let code = lift(vbk(6, 3, &[2, 3], 32), &[&[0, 1]]);
    assert!(matches!(RepairPlan::with_degree(&code, 0, 3, &[1, 2, 3]), Err(RepairError::NoSuchDegree { .. })));
    assert!(matches!(RepairPlan::with_degree(&code, 2, 5, &[0, 1, 3, 4, 5]), Err(RepairError::DegreeUnavailable { .. })));
    assert!(matches!(RepairPlan::new(&code, 0, 0, &[1, 1, 2, 3]), Err(RepairError::BadHelper(1))));
    assert!(matches!(RepairPlan::new(&code, 0, 0, &[0, 1, 2, 3]), Err(RepairError::BadHelper(0))));
    assert!(matches!(RepairPlan::new(&code, 0, 0, &[1, 2, 3]), Err(RepairError::HelperCount { .. })));
    assert!(matches!(RepairPlan::new(&code, 9, 0, &[1, 2, 3]), Err(RepairError::NoSuchNode(9))));
    let word = random_word(&code, 8);
    let plan = RepairPlan::new(&code, 0, 0, &[1, 2, 3, 4]).unwrap();
    let mut downloads = collect_downloads(&code, &plan, &word).unwrap();
    downloads.remove(&3);
    assert!(matches!(repair(&code, &plan, &downloads), Err(RepairError::MissingDownload(3))));
}
