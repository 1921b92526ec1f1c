// Independent recomputations of derived quantities. Frozen constants below
// were produced by the oracle code in this file, not by the library.

use std::f64::consts::PI;
use std::sync::Arc;

use qrel_core::group::{self, GroupAlgebraElement, GroupContext, GroupIdeal};
use qrel_core::ideals::{self, action_from_coordinates, annihilator_ideal, cb_norm_bracket, TensorElement};
use qrel_core::linalg::{self, CMatrix, CVector, C64};
use qrel_core::metric::{self, Semigroup};
use qrel_core::relations::{generate_relation, relation_from_subset, ClassicalRelation};
use qrel_core::vnalg::FiniteVNAlgebra;
use qrel_core::{OperatorSubspace, Tolerance};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn tol() -> Tolerance {
    Tolerance::default()
}

fn cyclic_distance(n: usize, x: usize, y: usize) -> usize {
    let d = x.abs_diff(y);
    d.min(n - d)
}

fn laplacian_eigenvalue(n: usize, j: usize) -> f64 {
    2.0 - 2.0 * (2.0 * PI * j as f64 / n as f64).cos()
}

/// `e^{−tL}(x, y)` for the cycle Laplacian, summed over Fourier modes.
fn heat_kernel(n: usize, t: f64, x: usize, y: usize) -> f64 {
    let m = (x + n - y) % n;
    (0..n)
        .map(|j| (-t * laplacian_eigenvalue(n, j)).exp() * (2.0 * PI * (j * m) as f64 / n as f64).cos())
        .sum::<f64>()
        / n as f64
}

fn wave_operator(n: usize, t: f64) -> Vec<Vec<f64>> {
    (0..n)
        .map(|x| {
            (0..n)
                .map(|y| {
                    let m = (x + n - y) % n;
                    (0..n)
                        .map(|j| {
                            (t * laplacian_eigenvalue(n, j).sqrt()).cos()
                                * (2.0 * PI * (j * m) as f64 / n as f64).cos()
                        })
                        .sum::<f64>()
                        / n as f64
                })
                .collect()
        })
        .collect()
}

#[test]
fn cycle_heat_kernel_matches_fourier_sum() {
    for n in [5usize, 8, 16] {
        let ctx = GroupContext::builtin(&format!("cyclic:{n}"), tol()).unwrap();
        let s = Semigroup::heat(&ctx);
        let alg = Arc::new(FiniteVNAlgebra::builtin(&format!("diag:{n}"), tol()).unwrap());
        for t in [0.0, 0.1, 1.0, 2.5] {
            let k = metric::extract_kernel(&s, &alg, t).unwrap();
            for x in 0..n {
                for y in 0..n {
                    let got = k.diagonal_entry(x, y);
                    assert!((got - linalg::c(heat_kernel(n, t, x, y))).norm() < 1e-12, "n={n} t={t} ({x},{y})");
                }
            }
        }
    }
}

#[test]
fn frozen_heat_kernel_values() {
    assert!((heat_kernel(8, 1.0, 0, 1) - 0.215_300_102_836_718_58).abs() < 1e-14);
    assert!((heat_kernel(16, 1.0, 0, 1) - 0.215_269_289_249_048_12).abs() < 1e-14);
    // Large-time limit is the uniform distribution, not zero.
    assert!((heat_kernel(16, 200.0, 0, 8) - 1.0 / 16.0).abs() < 1e-12);
}

#[test]
fn masked_sup_norm_matches_circulant_mask() {
    let n = 8;
    let ctx = GroupContext::builtin("cyclic:8", tol()).unwrap();
    let s = Semigroup::heat(&ctx);
    let m = metric::word_metric(&ctx).unwrap();
    let times = [0.3, 1.0, 4.0];
    let radii = [0.0, 1.0, 2.5, 3.0, 4.0];
    let rows = metric::offdiagonal_profile(&s, &m, &times, &radii).unwrap();
    for row in rows {
        let mut want = 0.0f64;
        let mut want_hs = 0.0f64;
        for x in 0..n {
            for y in 0..n {
                if cyclic_distance(n, x, y) as f64 > row.r {
                    let k = heat_kernel(n, row.t, x, y);
                    want = want.max(k.abs());
                    want_hs += k * k;
                }
            }
        }
        assert!((row.sup_norm.unwrap() - want).abs() < 1e-12, "{row:?}");
        assert!((row.op_norm - want).abs() < 1e-12, "{row:?}");
        assert!((row.hs_norm - want_hs.sqrt()).abs() < 1e-12, "{row:?}");
    }
}

/// Chebyshev interpolant of `f` on `[0, b]` with `m + 1` nodes, evaluated at `x`.
fn chebyshev_interpolant(f: impl Fn(f64) -> f64, b: f64, m: usize, x: f64) -> f64 {
    let nodes: Vec<f64> =
        (0..=m).map(|k| 0.5 * b * (1.0 + ((2 * k + 1) as f64 * PI / (2 * (m + 1)) as f64).cos())).collect();
    let vals: Vec<f64> = nodes.iter().map(|&z| f(z)).collect();
    (0..=m)
        .map(|i| {
            let li: f64 = (0..=m).filter(|&j| j != i).map(|j| (x - nodes[j]) / (nodes[i] - nodes[j])).product();
            vals[i] * li
        })
        .sum()
}

#[test]
fn propagation_residual_is_exact_and_below_chebyshev_bound() {
    let n = 16;
    let ctx = GroupContext::builtin("cyclic:16", tol()).unwrap();
    let s = Semigroup::heat(&ctx);
    let m = metric::word_metric(&ctx).unwrap();
    for t in [0.5, 1.0, 2.0, 3.0, 4.5] {
        let rep = metric::propagation_residual(&s, &m, t).unwrap();
        let w = wave_operator(n, t);
        let width = t.floor() as usize;
        let (mut out, mut all) = (0.0, 0.0);
        for x in 0..n {
            for y in 0..n {
                all += w[x][y] * w[x][y];
                if cyclic_distance(n, x, y) > width {
                    out += w[x][y] * w[x][y];
                }
            }
        }
        let exact = (out / all).sqrt();
        assert!((rep.residual - exact).abs() < 1e-12, "t={t}: {} vs {exact}", rep.residual);

        // p(L) with deg p ≤ width lies in the band, so ‖W − p(L)‖ bounds the distance.
        let f = |x: f64| (t * x.max(0.0).sqrt()).cos();
        let err: f64 = (0..n)
            .map(|j| {
                let l = laplacian_eigenvalue(n, j);
                (f(l) - chebyshev_interpolant(f, 4.0, width, l)).powi(2)
            })
            .sum();
        let bound = (err / all).sqrt();
        assert!(rep.residual <= bound + 1e-12, "t={t}: residual {} above bound {bound}", rep.residual);
    }
}

#[test]
fn frozen_propagation_residuals() {
    let ctx = GroupContext::builtin("cyclic:16", tol()).unwrap();
    let s = Semigroup::heat(&ctx);
    let m = metric::word_metric(&ctx).unwrap();
    let r1 = metric::propagation_residual(&s, &m, 1.0).unwrap().residual;
    assert!((r1 - 0.087_623_605_140_570_76).abs() < 1e-10, "{r1}");
    assert!(metric::propagation_residual(&s, &m, 0.0).unwrap().residual < 1e-14);
}

/// `J_V` recomputed in tensor coordinates: `Σ C_ab m_a v m_b = 0` for all
/// basis elements `v` of `V`.
fn brute_force_annihilator(alg: &Arc<FiniteVNAlgebra>, v: &OperatorSubspace) -> Vec<CMatrix> {
    let d = alg.d();
    let basis = alg.space().basis();
    let mdim = basis.len();
    let vb = v.basis();
    let mut system = linalg::zeros(d * d * vb.len().max(1), mdim * mdim);
    for a in 0..mdim {
        for b in 0..mdim {
            for (k, vk) in vb.iter().enumerate() {
                let img = &basis[a] * vk * &basis[b];
                system.view_mut((k * d * d, a + mdim * b), (d * d, 1)).copy_from_slice(img.as_slice());
            }
        }
    }
    let null = linalg::null_space_scaled(&system, Some(1.0), tol());
    (0..null.ncols())
        .map(|c| {
            let coords = CMatrix::from_column_slice(mdim, mdim, null.column(c).as_slice());
            action_from_coordinates(alg, &coords)
        })
        .collect()
}

#[test]
fn annihilator_matches_coordinate_nullspace() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for name in ["diag:3", "full:2", "block:1x1,1x2", "block:2x1,1x1"] {
        let alg = Arc::new(FiniteVNAlgebra::builtin(name, tol()).unwrap());
        for _ in 0..3 {
            let d = alg.d();
            let mut g = linalg::zeros(d, d);
            g[(0, d - 1)] = linalg::random_complex(&mut rng);
            let v = generate_relation(&alg, &[g]).unwrap();
            let j = annihilator_ideal(&v);
            let brute = brute_force_annihilator(&alg, v.space());
            assert_eq!(j.dim().unwrap(), brute.len(), "{name}");
            for a in &brute {
                assert!(j.contains(a), "{name}");
            }
        }
    }
}

#[test]
fn fourier_description_of_cyclic_duality() {
    let n = 6;
    let ctx = GroupContext::builtin("cyclic:6", tol()).unwrap();
    let w = C64::from_polar(1.0, 2.0 * PI / n as f64);
    let fourier: Vec<CVector> = (0..n)
        .map(|j| CVector::from_fn(n, |h, _| w.powu((j * h) as u32) / (n as f64).sqrt()))
        .collect();
    for support in [vec![0usize], vec![1, 2], vec![0, 3, 5], vec![]] {
        // μ̂ = indicator of `support`, with μ̂(m) = Σ μ_g ω^{mg}.
        let coeffs = CVector::from_fn(n, |g, _| {
            support.iter().map(|&m| w.powu((m * g) as u32).conj()).sum::<C64>() / n as f64
        });
        let q = GroupIdeal::generated_by(&ctx, &[GroupAlgebraElement::new(coeffs)]);
        assert_eq!(q.dim(), support.len());
        let v = group::relation_from_ideal(&ctx, &q).unwrap();
        let mut expected = Vec::new();
        for j in 0..n {
            for k in 0..n {
                if !support.contains(&((k + n - j) % n)) {
                    expected.push(&fourier[j] * fourier[k].adjoint());
                }
            }
        }
        let oracle = OperatorSubspace::orthonormalize(n, &expected, tol()).unwrap();
        assert_eq!(v.dim(), n * (n - support.len()));
        assert!(v.space().relate(&oracle).gap < 1e-10, "support {support:?}");
    }
}

#[test]
fn schur_multiplier_cb_norms() {
    let tol = tol();
    let alg = Arc::new(FiniteVNAlgebra::builtin("diag:3", tol).unwrap());
    let a = [0.5, -1.5, 1.0];
    let b = [C64::new(0.0, 2.0), linalg::c(0.25), linalg::c(-1.0)];
    // Rank-one symbol: T ↦ D_a T D_b, cb norm max|a|·max|b| = 3.
    let pairs = vec![(
        CMatrix::from_diagonal(&CVector::from_fn(3, |i, _| linalg::c(a[i]))),
        CMatrix::from_diagonal(&CVector::from_fn(3, |i, _| b[i])),
    )];
    let s = TensorElement::from_pairs(alg.clone(), pairs).unwrap();
    let br = cb_norm_bracket(&s, 3, 5);
    assert!(br.lower <= 3.0 + 1e-9 && br.upper >= 3.0 - 1e-9, "{br:?}");
    assert!(br.upper - br.lower < 1e-6, "{br:?}");

    // Positive semidefinite symbol: cb norm is the largest diagonal entry.
    let g = CMatrix::from_fn(3, 2, |i, j| linalg::c([[1.0, 0.5], [-0.5, 1.0], [0.25, 0.25]][i][j]));
    let k = &g * g.adjoint();
    let mut act = linalg::zeros(9, 9);
    for x in 0..3 {
        for y in 0..3 {
            act[(x + 3 * y, x + 3 * y)] = k[(x, y)];
        }
    }
    let s = TensorElement::from_action(alg, act).unwrap();
    let want = (0..3).map(|x| k[(x, x)].re).fold(0.0, f64::max);
    let br = cb_norm_bracket(&s, 3, 9);
    assert!(br.lower <= want + 1e-9 && br.upper >= want - 1e-9, "{br:?} vs {want}");
}

#[test]
fn path_metric_levels_are_bands() {
    let n: usize = 5;
    let dist: Vec<Vec<f64>> = (0..n).map(|x| (0..n).map(|y| x.abs_diff(y) as f64).collect()).collect();
    let m = metric::metric_from_classical(&dist, tol()).unwrap();
    for (r, level) in m.thresholds().iter().zip(m.levels()) {
        let pairs: Vec<(usize, usize)> =
            (0..n).flat_map(|x| (0..n).map(move |y| (x, y))).filter(|&(x, y): &(usize, usize)| x.abs_diff(y) as f64 <= *r).collect();
        let band = relation_from_subset(&ClassicalRelation::from_pairs(n, &pairs).unwrap(), tol()).unwrap();
        assert!(level.relate(&band).gap < 1e-14, "r={r}");
        assert_eq!(level.dim(), pairs.len());
    }
}

#[test]
fn identity_kernel_at_time_zero() {
    let ctx = GroupContext::builtin("cyclic:4", tol()).unwrap();
    let s = Semigroup::heat(&ctx);
    let alg = Arc::new(FiniteVNAlgebra::builtin("diag:4", tol()).unwrap());
    let k = metric::extract_kernel(&s, &alg, 0.0).unwrap();
    let mut want = linalg::zeros(16, 16);
    for x in 0..4 {
        want[(5 * x, 5 * x)] = linalg::ONE;
    }
    assert!(linalg::fro(&(k.element.action() - want)) < 1e-13);
    assert!(ideals::tensor_algebra_residual(&alg, k.element.action()) < 1e-13);
}
