use std::sync::Arc;

use mdsa::gf::Field;
use mdsa::transform::*;
use mdsa::vbk::{construct, VbkParams};
use mdsa::verify::{check_mds, Coverage};

fn base() -> mdsa::ArrayCode {
    let params = VbkParams::new(6, 3, 2, &[2, 3], Field::new(32).unwrap()).unwrap();
    construct(&params, 0).unwrap().0
}

#[test]
fn every_round_keeps_the_code_mds() {
    let mut code = Arc::new(base());
    for goal in [vec![0, 1], vec![2, 3], vec![4, 5]] {
        code = Arc::new(lift_code(&LiftRound::new(code.clone(), &goal).unwrap()).unwrap());
        let report = check_mds(&code, &Coverage::Exhaustive);
        assert!(report.passed, "{}", report.to_line());
    }
    assert_eq!(code.sub_packetization(), 216);
    assert_eq!(code.round_goal_sets(), vec![vec![0, 1], vec![2, 3], vec![4, 5]]);
}

#[test]
fn algorithm2_supports_every_degree_for_every_node() {
    let code = algorithm2(base()).unwrap();
    assert_eq!(code.sub_packetization(), 216);
    for i in 0..6 {
        assert!(code.supports(i, 0) && code.supports(i, 1));
    }
}

#[test]
fn lifted_blocks_have_the_expected_shape() {
    let b = Arc::new(base());
    let round = LiftRound::new(b.clone(), &[0, 1]).unwrap();
    assert_eq!(round.rset, vec![3, 4, 5]);
    let lifted = lift_code(&round).unwrap();
    let sub = b.sub_packetization();
    for t in 0..3 {
        // non-goal blocks are block diagonal copies
        let blk = lifted.block(t, 4);
        for a in 0..3 {
            assert_eq!(blk.submatrix(a * sub, a * sub, sub, sub), *b.block(t, 4));
        }
        assert_eq!(blk.nonzeros(), 3 * b.block(t, 4).nonzeros());
        // goal blocks carry appended data only in the first l_1 = 2 instances
        let g = lifted.block(t, 0);
        let appended = appended_data_matrix(&round, &PSchedule::build(b.degrees()).unwrap(), t, 0, 2).unwrap();
        assert!(appended.is_zero());
        assert_eq!(g.submatrix(2 * sub, 0, sub, 3 * sub), {
            let mut m = mdsa::linalg::MatrixGF::zeros(b.field(), sub, 3 * sub);
            m.set_block(0, 2 * sub, b.block(t, 0)).unwrap();
            m
        });
    }
}

#[test]
fn sub_packetization_formula() {
    let d = DegreeSet::new(&[2, 3], 6).unwrap();
    assert_eq!(final_sub_packetization(8, &d, 3), Some(216));
    let d = DegreeSet::new(&[2, 3], 4).unwrap();
    assert_eq!(final_sub_packetization(1 << 12, &d, 12), Some(6u128.pow(12)));
    assert_eq!(lcm(4, 6), 12);
}

#[test]
fn goal_validation() {
    let b = Arc::new(base());
    assert!(matches!(LiftRound::new(b.clone(), &[]), Err(TransformError::BadGoalSet)));
    assert!(matches!(LiftRound::new(b.clone(), &[7]), Err(TransformError::BadGoal(7))));
    let lifted = Arc::new(lift_code(&LiftRound::new(b, &[0, 1]).unwrap()).unwrap());
    // goal nodes of an earlier round carry no keys
    assert!(matches!(LiftRound::new(lifted, &[0]), Err(TransformError::BadGoal(0))));
}
