use nalgebra::DMatrix;
use proptest::prelude::*;

use super::models::random_tensor;
use super::{a_of_b, kulkarni_nomizu, pair_count, CurvatureTensor, RandomClass, SymmetricForm};
use crate::sampling;

fn tensor() -> impl Strategy<Value = CurvatureTensor> {
    (4usize..8, any::<u64>()).prop_map(|(n, seed)| random_tensor(n, seed, RandomClass::BianchiGeneric))
}

fn close(a: &CurvatureTensor, b: &CurvatureTensor, rel: f64) -> bool {
    (a - b).max_abs_entry() <= rel * (1.0 + a.max_abs_entry().max(b.max_abs_entry()))
}

fn sym_form(n: usize, seed: u64) -> SymmetricForm {
    let g = sampling::gaussian_vec(&mut sampling::rng(seed, 77), n * n);
    let m = DMatrix::from_row_slice(n, n, &g);
    SymmetricForm::from_matrix((&m + m.transpose()) * 0.5).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn q_is_quadratic(r in tensor(), c in -3.0f64..3.0) {
        prop_assert!(close(&r.scaled(c).q(), &r.q().scaled(c * c), 1e-12));
    }

    #[test]
    fn kn_with_identity_traces(n in 3usize..9, seed in any::<u64>()) {
        let a = sym_form(n, seed);
        let kn = kulkarni_nomizu(&a, &SymmetricForm::identity(n)).unwrap();
        let nf = n as f64;
        prop_assert!((kn.scalar() - 2.0 * (nf - 1.0) * a.trace()).abs() <= 1e-11 * (1.0 + a.trace().abs() * nf));
        let expect = a.scaled(nf - 2.0).add(&SymmetricForm::identity(n).scaled(a.trace()));
        prop_assert!(kn.ricci().sub(&expect).matrix().amax() <= 1e-11 * (1.0 + nf * a.matrix().amax()));
        prop_assert!(kn.bianchi_residual() <= 1e-12 * (1.0 + kn.norm()));
    }

    #[test]
    fn l_ab_is_linear(n in 4usize..8, s1 in any::<u64>(), s2 in any::<u64>(), alpha in -2.0f64..2.0, beta in -2.0f64..2.0, b in 0.0f64..0.5) {
        let p = a_of_b(b, n).unwrap();
        let r = random_tensor(n, s1, RandomClass::BianchiGeneric);
        let s = random_tensor(n, s2, RandomClass::BianchiGeneric);
        let lhs = (r.scaled(alpha) + s.scaled(beta)).l_ab(&p);
        let rhs = r.l_ab(&p).scaled(alpha) + s.l_ab(&p).scaled(beta);
        prop_assert!(close(&lhs, &rhs, 1e-12));
    }

    #[test]
    fn projection_is_idempotent(n in 4usize..8, seed in any::<u64>()) {
        let k = pair_count(n);
        let g = sampling::gaussian_vec(&mut sampling::rng(seed, 5), k * k);
        let m = DMatrix::from_row_slice(k, k, &g);
        let raw = CurvatureTensor::from_matrix_unchecked(n, (&m + m.transpose()) * 0.5);
        let once = raw.bianchi_projected();
        prop_assert!(once.bianchi_residual() <= 1e-12 * once.norm());
        prop_assert!(close(&once.bianchi_projected(), &once, 1e-14));
    }

    #[test]
    fn rotation_preserves_invariants(r in tensor(), seed in any::<u64>()) {
        let o = sampling::random_orthogonal(&mut sampling::rng(seed, 3), r.dim());
        let rot = r.rotated(&o);
        prop_assert!((rot.norm() - r.norm()).abs() <= 1e-12 * r.norm());
        prop_assert!((rot.scalar() - r.scalar()).abs() <= 1e-11 * (1.0 + r.norm()));
        let (a, b) = (r.ricci().eigenvalues(), rot.ricci().eigenvalues());
        for (x, y) in a.iter().zip(&b) {
            prop_assert!((x - y).abs() <= 1e-11 * (1.0 + r.norm()));
        }
        // Q is O(n)-equivariant
        prop_assert!(close(&rot.q(), &r.q().rotated(&o), 1e-11));
    }

    #[test]
    fn inverse_round_trip(r in tensor(), b in 0.0f64..0.5) {
        let p = a_of_b(b, r.dim()).unwrap();
        let back = r.l_ab(&p).l_ab_inverse(&p).unwrap();
        prop_assert!(close(&back, &r, 1e-11));
    }
}
