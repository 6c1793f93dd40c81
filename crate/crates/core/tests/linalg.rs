use mdsa::gf::{Elem, Field};
use mdsa::linalg::{blkdiag, hstack, vstack, LinalgError, MatrixGF};
use proptest::prelude::*;

/// Rank over a prime field with plain integer arithmetic.
fn oracle_rank(p: u64, rows: &[Vec<u64>]) -> usize {
    let mut m: Vec<Vec<u64>> = rows.to_vec();
    let cols = m.first().map_or(0, |r| r.len());
    let inv = |a: u64| (1..p).find(|&b| a * b % p == 1).unwrap();
    let mut rank = 0;
    for c in 0..cols {
        let Some(piv) = (rank..m.len()).find(|&r| m[r][c] != 0) else { continue };
        m.swap(rank, piv);
        let s = inv(m[rank][c]);
        for x in m[rank].iter_mut() {
            *x = *x * s % p;
        }
        for r in 0..m.len() {
            if r != rank && m[r][c] != 0 {
                let g = m[r][c];
                for cc in 0..cols {
                    m[r][cc] = (m[r][cc] + p * p - g * m[rank][cc]) % p;
                }
            }
        }
        rank += 1;
    }
    rank
}

fn matrix(q: u32, rows: usize, cols: usize, seed: &[u16]) -> MatrixGF {
    let f = Field::new(q).unwrap();
    let data = (0..rows * cols).map(|i| Elem(seed[i % seed.len()].wrapping_mul(i as u16 + 1) % q as u16)).collect();
    MatrixGF::from_vec(&f, rows, cols, data).unwrap()
}

proptest! {
    #[test]
    fn rank_matches_prime_field_oracle(p in prop::sample::select(vec![2u32, 3, 5, 7, 13]), rows in 1usize..7, cols in 1usize..7,
        seed in prop::collection::vec(any::<u16>(), 1..50)) {
        let m = matrix(p, rows, cols, &seed);
        let as_u64: Vec<Vec<u64>> = (0..rows).map(|r| m.row(r).iter().map(|e| e.0 as u64).collect()).collect();
        prop_assert_eq!(m.rank(), oracle_rank(p as u64, &as_u64));
    }

    #[test]
    fn rank_properties(q in prop::sample::select(vec![4u32, 9, 16, 256]), n in 1usize..7, k in 1usize..7,
        s1 in prop::collection::vec(any::<u16>(), 1..50), s2 in prop::collection::vec(any::<u16>(), 1..50)) {
        let a = matrix(q, n, k, &s1);
        let b = matrix(q, k, n, &s2);
        let ab = a.matmul(&b).unwrap();
        prop_assert!(ab.rank() <= a.rank().min(b.rank()));
        prop_assert_eq!(a.rank(), a.transpose().rank());
        prop_assert_eq!(ab.transpose(), b.transpose().matmul(&a.transpose()).unwrap());
        match ab.inverse() {
            Ok(inv) => {
                prop_assert_eq!(ab.rank(), n);
                prop_assert_eq!(inv.matmul(&ab).unwrap(), MatrixGF::identity(ab.field(), n));
                prop_assert_eq!(ab.matmul(&inv).unwrap(), MatrixGF::identity(ab.field(), n));
            }
            Err(LinalgError::Singular { .. }) => prop_assert!(ab.rank() < n),
            Err(e) => prop_assert!(false, "unexpected {e:?}"),
        }
    }

    #[test]
    fn solve_satisfies_the_system(q in prop::sample::select(vec![7u32, 32, 256]), n in 1usize..8,
        s1 in prop::collection::vec(any::<u16>(), 1..50), s2 in prop::collection::vec(any::<u16>(), 1..50)) {
        let a = matrix(q, n, n, &s1);
        let b = matrix(q, n, 2, &s2);
        if let Ok(x) = a.solve(&b) {
            prop_assert_eq!(a.matmul(&x).unwrap(), b);
        } else {
            prop_assert!(a.rank() < n);
        }
    }
}

#[test]
fn block_assembly() {
    let f = Field::new(5).unwrap();
    let a = MatrixGF::from_rows(&f, &[vec![1, 2], vec![3, 4]]).unwrap();
    let b = MatrixGF::from_rows(&f, &[vec![4]]).unwrap();
    let d = blkdiag(&[&a, &b]).unwrap();
    assert_eq!(d, MatrixGF::from_rows(&f, &[vec![1, 2, 0], vec![3, 4, 0], vec![0, 0, 4]]).unwrap());
    assert_eq!(hstack(&[&a, &a]).unwrap().shape(), (2, 4));
    assert_eq!(vstack(&[&a, &a]).unwrap().shape(), (4, 2));
    assert!(matches!(hstack(&[&a, &b]), Err(LinalgError::DimensionMismatch { .. })));
    let g = Field::new(7).unwrap();
    assert!(matches!(a.matmul(&MatrixGF::identity(&g, 2)), Err(LinalgError::FieldMismatch)));
}

#[test]
fn singular_is_an_error_value() {
    let f = Field::new(2).unwrap();
    let m = MatrixGF::from_rows(&f, &[vec![1, 1], vec![1, 1]]).unwrap();
    assert!(matches!(m.inverse(), Err(LinalgError::Singular { .. })));
}
