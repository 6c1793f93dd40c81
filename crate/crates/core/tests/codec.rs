use std::sync::Arc;

use itertools::Itertools;
use mdsa::codec::{Codec, CodecError};
use mdsa::gf::{Elem, Field};
use mdsa::transform::{lift_code, LiftRound};
use mdsa::vbk::{construct, VbkParams};
use mdsa::ArrayCode;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn base() -> ArrayCode {
    let params = VbkParams::new(6, 3, 2, &[2, 3], Field::new(32).unwrap()).unwrap();
    construct(&params, 0).unwrap().0
}

fn one_round() -> ArrayCode {
    lift_code(&LiftRound::new(Arc::new(base()), &[0, 1]).unwrap()).unwrap()
}

fn random_data(code: &ArrayCode, rng: &mut ChaCha8Rng) -> Vec<Vec<Elem>> {
    let q = code.field().order();
    (0..code.k())
        .map(|_| (0..code.sub_packetization()).map(|_| Elem(rng.gen_range(0..q) as u16)).collect())
        .collect()
}

/// Parity checks evaluated block by block, independent of the codec.
fn oracle_syndrome_zero(code: &ArrayCode, word: &[Vec<Elem>]) -> bool {
    let f = code.field();
    (0..code.r()).all(|t| {
        let mut acc = vec![Elem::ZERO; code.sub_packetization()];
        for (i, frag) in word.iter().enumerate() {
            let block = code.block(t, i);
            for row in 0..block.rows() {
                for (c, &v) in block.row(row).iter().enumerate() {
                    acc[row] = f.add(acc[row], f.mul(v, frag[c]));
                }
            }
        }
        acc.iter().all(|e| e.is_zero())
    })
}

#[test]
fn encode_satisfies_parity_checks() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for code in [base(), one_round()] {
        let codec = Codec::new(code.clone());
        let data = random_data(&code, &mut rng);
        let word = codec.encode(&data).unwrap();
        assert_eq!(&word[..3], &data[..]);
        assert!(oracle_syndrome_zero(&code, &word));
        assert!(codec.is_codeword(&word).unwrap());
        let zero = codec.encode(&vec![vec![Elem::ZERO; code.sub_packetization()]; 3]).unwrap();
        assert!(zero.iter().flatten().all(|e| e.is_zero()));
    }
}

#[test]
fn every_survivor_set_reconstructs() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for code in [base(), one_round()] {
        let codec = Codec::new(code.clone());
        let word = codec.encode(&random_data(&code, &mut rng)).unwrap();
        for keep in (0..6).combinations(3) {
            let shards: Vec<Option<Vec<Elem>>> =
                (0..6).map(|i| keep.contains(&i).then(|| word[i].clone())).collect();
            assert_eq!(codec.reconstruct(&shards).unwrap(), word, "survivors {keep:?}");
            assert_eq!(codec.reconstruct_induction(&shards).unwrap(), word, "survivors {keep:?}");
        }
    }
}

#[test]
fn systematic_set_other_than_the_first_k() {
    let code = base();
    let codec = Codec::new(code.clone());
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let data = random_data(&code, &mut rng);
    let word = codec.encode_with(&[1, 3, 5], &data).unwrap();
    assert_eq!((&word[1], &word[3], &word[5]), (&data[0], &data[1], &data[2]));
    assert!(oracle_syndrome_zero(&code, &word));
}

#[test]
fn errors() {
    let codec = Codec::new(base());
    assert!(matches!(codec.encode(&[vec![Elem::ZERO; 8]]), Err(CodecError::TooFewFragments { need: 3, got: 1 })));
    let shards = vec![Some(vec![Elem::ZERO; 8]), None, None, None, None, Some(vec![Elem::ZERO; 8])];
    assert!(matches!(codec.reconstruct(&shards), Err(CodecError::TooFewFragments { .. })));
    assert!(matches!(codec.encode_with(&[0, 0, 1], &vec![vec![Elem::ZERO; 8]; 3]), Err(CodecError::BadSystematicSet { .. })));
}

#[test]
fn column_batches_match_single_words() {
    let code = one_round();
    let codec = Codec::new(code.clone());
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let words: Vec<Vec<Vec<Elem>>> = (0..5)
        .map(|_| codec.encode(&random_data(&code, &mut rng)).unwrap())
        .collect();
    let l = code.sub_packetization();
    // survivors given out of order on purpose
    let survivors = [4, 1, 3];
    let mut input = mdsa::linalg::MatrixGF::zeros(code.field(), 3 * l, words.len());
    for (c, w) in words.iter().enumerate() {
        for (s, &node) in survivors.iter().enumerate() {
            for p in 0..l {
                input.set(s * l + p, c, w[node][p]);
            }
        }
    }
    let (erased, out) = codec.reconstruct_columns(&survivors, &input).unwrap();
    assert_eq!(erased, vec![0, 2, 5]);
    for (c, w) in words.iter().enumerate() {
        for (e, &node) in erased.iter().enumerate() {
            for p in 0..l {
                assert_eq!(out.get(e * l + p, c), w[node][p]);
            }
        }
    }
    assert!(codec.reconstruct_columns(&[0, 0, 1], &input).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]
    #[test]
    fn round_trip_random(seed in any::<u64>(), keep in Just((0..6usize).collect::<Vec<_>>()).prop_shuffle()) {
        let code = base();
        let codec = Codec::new(code.clone());
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let word = codec.encode(&random_data(&code, &mut rng)).unwrap();
        let keep = &keep[..3];
        let shards: Vec<Option<Vec<Elem>>> = (0..6).map(|i| keep.contains(&i).then(|| word[i].clone())).collect();
        prop_assert_eq!(codec.reconstruct(&shards).unwrap(), word);
    }
}
