use std::sync::Arc;

use proptest::prelude::*;
use qrel_core::group::{self, GroupAlgebraElement, GroupContext};
use qrel_core::ideals::{self, annihilator_ideal, kernel_bimodule, LeftIdeal, TensorElement};
use qrel_core::linalg;
use qrel_core::metric;
use qrel_core::relations::{
    adjoint_relation, compose, generate_relation, relation_from_subset_over, subset_from_relation, ClassicalRelation,
};
use qrel_core::vnalg::FiniteVNAlgebra;
use qrel_core::{OperatorSubspace, Tolerance};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const ALGEBRAS: [&str; 6] = ["diag:2", "diag:3", "full:2", "block:1x1,1x2", "block:2x1,1x1", "block:1x2"];

fn tol() -> Tolerance {
    Tolerance::default()
}

fn algebra(idx: usize) -> Arc<FiniteVNAlgebra> {
    Arc::new(FiniteVNAlgebra::builtin(ALGEBRAS[idx % ALGEBRAS.len()], tol()).unwrap())
}

fn sparse_generators(rng: &mut ChaCha8Rng, d: usize) -> Vec<linalg::CMatrix> {
    (0..rng.random_range(1..=2))
        .map(|_| {
            let mut g = linalg::zeros(d, d);
            g[(rng.random_range(0..d), rng.random_range(0..d))] = linalg::random_complex(rng);
            g
        })
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn sum_and_intersection_dimensions_add_up(seed in any::<u64>(), a in 1usize..5, b in 1usize..5) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let shared = linalg::random_matrix(&mut rng, 2, 2);
        let mut u: Vec<_> = (0..a).map(|_| linalg::random_matrix(&mut rng, 2, 2)).collect();
        let mut v: Vec<_> = (0..b).map(|_| linalg::random_matrix(&mut rng, 2, 2)).collect();
        u.push(shared.clone());
        v.push(shared);
        let u = OperatorSubspace::orthonormalize(2, &u, tol()).unwrap();
        let v = OperatorSubspace::orthonormalize(2, &v, tol()).unwrap();
        prop_assert_eq!(u.sum(&v).dim() + u.intersect(&v).dim(), u.dim() + v.dim());
    }

    #[test]
    fn classical_relations_roundtrip_and_compose(n in 1usize..5, bits_a in any::<u64>(), bits_b in any::<u64>()) {
        let alg = Arc::new(FiniteVNAlgebra::builtin(&format!("diag:{n}"), tol()).unwrap());
        let mask = if n * n == 64 { u64::MAX } else { (1u64 << (n * n)) - 1 };
        let r = ClassicalRelation::from_bits(n, bits_a & mask);
        let s = ClassicalRelation::from_bits(n, bits_b & mask);
        let vr = relation_from_subset_over(&alg, &r).unwrap();
        let vs = relation_from_subset_over(&alg, &s).unwrap();
        prop_assert_eq!(subset_from_relation(&vr).unwrap(), r.clone());
        // span{E_xy E_yz} is the relation of the composite.
        let prod = compose(&vr, &vs).unwrap();
        prop_assert_eq!(subset_from_relation(&prod).unwrap(), r.compose(&s));
        prop_assert_eq!(subset_from_relation(&adjoint_relation(&vr)).unwrap(), r.transpose());
    }

    #[test]
    fn double_annihilator_on_bimodules(seed in any::<u64>(), which in 0usize..6) {
        let alg = algebra(which);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let v = generate_relation(&alg, &sparse_generators(&mut rng, alg.d())).unwrap();
        let back = kernel_bimodule(&annihilator_ideal(&v));
        prop_assert!(v.relate(&back).gap < 1e-9);
    }

    #[test]
    fn double_annihilator_on_principal_ideals(seed in any::<u64>(), which in 0usize..6) {
        let alg = algebra(which);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = ideals::random_tensor_action(&alg, &mut rng);
        let p = ideals::random_tensor_projection(&alg, &mut rng);
        let j = LeftIdeal::generated_by(alg.clone(), vec![a * p]).unwrap();
        let back = annihilator_ideal(&kernel_bimodule(&j));
        prop_assert!(j.gap(&back) < 1e-9);
    }

    #[test]
    fn annihilator_reverses_inclusion(seed in any::<u64>(), which in 0usize..6) {
        let alg = algebra(which);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let gens = sparse_generators(&mut rng, alg.d());
        let small = generate_relation(&alg, &gens[..1]).unwrap();
        let big = generate_relation(&alg, &gens).unwrap();
        let (js, jb) = (annihilator_ideal(&small), annihilator_ideal(&big));
        // J_big ⊂ J_small: the big support sits under the small one.
        let p = jb.support();
        prop_assert!(linalg::fro(&(p - js.support() * p)) < 1e-9);
    }

    #[test]
    fn dagger_is_multiplicative_and_involutive(seed in any::<u64>(), which in 0usize..6) {
        let alg = algebra(which);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s = TensorElement::from_action(alg.clone(), ideals::random_tensor_action(&alg, &mut rng)).unwrap();
        let t = TensorElement::from_action(alg.clone(), ideals::random_tensor_action(&alg, &mut rng)).unwrap();
        let lhs = s.mul(&t).unwrap().dagger();
        let rhs = s.dagger().mul(&t.dagger()).unwrap();
        let scale = linalg::fro(s.action()) * linalg::fro(t.action());
        prop_assert!(linalg::fro(&(lhs.action() - rhs.action())) < 1e-12 * scale.max(1.0));
        prop_assert!(linalg::fro(&(s.dagger().dagger().action() - s.action())) < 1e-12 * scale.max(1.0));
    }

    #[test]
    fn theta_is_a_homomorphism(seed in any::<u64>(), which in 0usize..4) {
        let ctx = GroupContext::builtin(["cyclic:3", "cyclic:4", "klein4", "sym:3"][which], tol()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = ctx.order();
        let mu = GroupAlgebraElement::random(n, &mut rng);
        let nu = GroupAlgebraElement::random(n, &mut rng);
        prop_assert!(group::theta_multiplicativity_residual(&ctx, &mu, &nu) < 1e-12 * (1.0 + mu.norm() * nu.norm()));
    }

    #[test]
    fn group_duality_on_sampled_ideals(seed in any::<u64>(), which in 0usize..5) {
        let ctx = GroupContext::builtin(["cyclic:2", "cyclic:3", "cyclic:4", "klein4", "sym:3"][which], tol()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let q = group::random_left_ideal(&ctx, &mut rng);
        let v = group::relation_from_ideal(&ctx, &q).unwrap();
        let q2 = group::ideal_from_relation(&ctx, v.space()).unwrap();
        prop_assert!(q.gap(&q2) < 1e-9);
    }

    #[test]
    fn classical_metrics_roundtrip_exactly(seed in any::<u64>(), n in 1usize..7) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let dist = metric::random_classical_metric(n, &mut rng);
        let m = metric::metric_from_classical(&dist, tol()).unwrap();
        prop_assert_eq!(metric::classical_distance_matrix(&m).unwrap(), dist);
    }

    #[test]
    fn gaussian_fit_recovers_synthetic_profiles(beta in 0.01f64..2.0, n_eff in -3.0f64..3.0, c in -2.0f64..2.0) {
        let mut pts = Vec::new();
        for &t in &[0.25, 0.5, 1.0, 3.0] {
            for r in 0..6 {
                let r = r as f64;
                pts.push((t, r, (-beta * r * r / t - 0.5 * n_eff * t.ln() + c).exp()));
            }
        }
        let fit = metric::gaussian_fit(&pts).unwrap();
        prop_assert!((fit.beta - beta).abs() < 1e-6 && (fit.n_eff - n_eff).abs() < 1e-6);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    /// Grid-rounded triangle inequality for every recovered metric, checked
    /// on all triples.
    #[test]
    fn recovered_distance_obeys_grid_triangle_inequality(seed in any::<u64>(), n in 2usize..6) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let dist = metric::random_classical_metric(n, &mut rng);
        let m = metric::metric_from_classical(&dist, tol()).unwrap();
        prop_assert!(metric::validate_metric(&m, tol()).passed());
        let d = metric::classical_distance_matrix(&m).unwrap();
        let grid = m.thresholds();
        for x in 0..n {
            for y in 0..n {
                for z in 0..n {
                    let s = d[x][y] + d[y][z];
                    let up = grid.iter().copied().find(|&g| g >= s).unwrap_or(f64::INFINITY);
                    prop_assert!(d[x][z] <= up);
                }
            }
        }
    }

    #[test]
    fn heat_profiles_decrease_in_radius(n in 3usize..9, t in 0.05f64..5.0) {
        let ctx = GroupContext::builtin(&format!("cyclic:{n}"), tol()).unwrap();
        let s = metric::Semigroup::heat(&ctx);
        let m = metric::word_metric(&ctx).unwrap();
        let radii: Vec<f64> = (0..=n / 2).map(|r| r as f64).collect();
        let rows = metric::offdiagonal_profile(&s, &m, &[t], &radii).unwrap();
        for w in rows.windows(2) {
            prop_assert!(w[1].op_norm <= w[0].op_norm + 1e-13);
            prop_assert!(w[1].hs_norm <= w[0].hs_norm + 1e-13);
        }
        prop_assert!(rows.last().unwrap().op_norm < 1e-12);
        let rep = metric::validate_markov(&s, &[t], 1e-10).unwrap();
        prop_assert!(rep.passed);
    }
}
