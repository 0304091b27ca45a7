mod common;

use bott::iso::GradedIso;
use bott::moves::{replay, switch, twist, Move, MoveKind, MoveSeq};
use bott::ring::Class2;
use common::strategies::bott_matrix;
use num_bigint::BigInt;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn random_moves_are_sound(b in bott_matrix(6, 3), seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let kind = common::random_move(&mut rng, &b);
        prop_assume!(kind.is_some());
        let kind = kind.unwrap();
        let mv = Move::perform(&b, &kind).unwrap();
        let again = GradedIso::new(b.clone(), mv.after.clone(), mv.induced.matrix().clone());
        prop_assert!(again.is_ok());
        let j = kind.j();
        // generators below the move are fixed
        for i in 1..j {
            prop_assert_eq!(mv.induced.image(i), Class2::basis(b.n(), i));
            prop_assert_eq!(mv.after.row(i), b.row(i));
        }
        let back = mv.inverse().unwrap();
        prop_assert_eq!(&back.after, &b);
        prop_assert_eq!(GradedIso::compose(&back.induced, &mv.induced).unwrap(), GradedIso::identity(&b));
    }

    #[test]
    fn switch_is_an_involution(b in bott_matrix(6, 3), pick in 0usize..6) {
        let n = b.n();
        prop_assume!(n >= 2);
        let j = 1 + pick % (n - 1);
        let mut rows: Vec<Vec<BigInt>> = b.rows().to_vec();
        rows[j][j - 1] = BigInt::from(0);
        let b = bott::BottMatrix::new(n, rows).unwrap();
        let once = switch(&b, j).unwrap();
        let twice = switch(&once.after, j).unwrap();
        prop_assert_eq!(&twice.after, &b);
        prop_assert_eq!(GradedIso::compose(&twice.induced, &once.induced).unwrap(), GradedIso::identity(&b));
    }

    #[test]
    fn twist_is_undone_by_negated_vector(b in bott_matrix(6, 3), seed in any::<u64>(), jpick in 0usize..6) {
        let n = b.n();
        prop_assume!(n >= 2);
        let j = 2 + jpick % (n - 1);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let v = common::random_twist_vector(&mut rng, &b, j, 50);
        prop_assume!(v.is_some());
        let v = v.unwrap();
        let fwd = twist(&b, j, &v).unwrap();
        let back = twist(&fwd.after, j, &-&v).unwrap();
        prop_assert_eq!(&back.after, &b);
        prop_assert_eq!(GradedIso::compose(&back.induced, &fwd.induced).unwrap(), GradedIso::identity(&b));
        // y_j -> y'_j + v, everything else fixed
        let mut expected = Class2::basis(n, j);
        expected = &expected + &v;
        prop_assert_eq!(fwd.induced.image(j), expected);
    }

    #[test]
    fn chains_replay_and_invert(b in bott_matrix(5, 2), seed in any::<u64>(), len in 0usize..8) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let seq = common::random_moves(&mut rng, &b, len);
        prop_assert!(replay(&seq).is_ok());
        let rebuilt = MoveSeq::from_kinds(&b, &seq.kinds()).unwrap();
        prop_assert_eq!(&rebuilt, &seq);
        let inv = seq.inverse().unwrap();
        prop_assert_eq!(&inv.end, &b);
        prop_assert_eq!(GradedIso::compose(&inv.composite, &seq.composite).unwrap(), GradedIso::identity(&b));
    }
}

#[test]
fn blocked_and_invalid_moves_are_rejected() {
    let b = common::matrix(&[&[], &[1], &[0, 2]]);
    assert!(switch(&b, 1).is_err());
    assert!(switch(&b, 2).is_err());
    assert!(twist(&b, 1, &Class2::zero(3)).is_ok());
    // v must lie strictly below stage j
    assert!(twist(&b, 2, &Class2::from_i64(&[0, 1, 0])).is_err());
    assert!(Move::perform(&b, &MoveKind::Switch { j: 0 }).is_err());
}
