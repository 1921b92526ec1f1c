//! Intrinsic quantum relations: relatedness of projection pairs in `M_k(M)`.
//!
//! Matrices over `M` are `kd × kd` with block `(i, j)` the `d × d` entry.
//! The identity `P(1_k ⊗ T)Q = [Φ_{r_ij}(T)]` with `r_ij = Σ_l p_il ⊗ q_lj`
//! links the module and ideal descriptions.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::ideals::LeftIdeal;
use crate::linalg::{self, CMatrix};
use crate::opcore::range_projection;
use crate::relations::QuantumRelation;
use crate::vnalg::FiniteVNAlgebra;
use crate::{Error, Result};

/// Projection in `M_k(M)`.
#[derive(Clone, Debug)]
pub struct AmplifiedProjection {
    d: usize,
    k: usize,
    matrix: CMatrix,
}

impl AmplifiedProjection {
    pub fn new(alg: &FiniteVNAlgebra, k: usize, matrix: CMatrix) -> Result<Self> {
        let d = alg.d();
        if matrix.nrows() != k * d || matrix.ncols() != k * d {
            return Err(Error::DimensionMismatch { expected: k * d, found: matrix.nrows() });
        }
        let mut residual = linalg::fro(&(&matrix * &matrix - &matrix))
            .max(linalg::fro(&(&matrix - matrix.adjoint())));
        for i in 0..k {
            for j in 0..k {
                residual = residual.max(alg.residual(&linalg::block(&matrix, d, i, j)));
            }
        }
        if residual > alg.tol().cutoff(1.0, k * k * d * d) {
            return Err(Error::NotProjection { residual });
        }
        Ok(AmplifiedProjection { d, k, matrix })
    }

    fn trusted(d: usize, k: usize, matrix: CMatrix) -> Self {
        AmplifiedProjection { d, k, matrix }
    }

    pub fn zero(d: usize, k: usize) -> Self {
        Self::trusted(d, k, linalg::zeros(k * d, k * d))
    }

    pub fn identity(d: usize, k: usize) -> Self {
        Self::trusted(d, k, linalg::identity(k * d))
    }

    /// `1_k ⊗ x` for a projection `x ∈ M`.
    pub fn diagonal_amplification(x: &CMatrix, k: usize) -> Self {
        Self::trusted(x.nrows(), k, linalg::identity(k).kronecker(x))
    }

    pub fn level(&self) -> usize {
        self.k
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn entry(&self, i: usize, j: usize) -> CMatrix {
        linalg::block(&self.matrix, self.d, i, j)
    }

    pub fn is_zero(&self) -> bool {
        linalg::fro(&self.matrix) == 0.0
    }
}

/// `X ⊙ Y`: the `k × k` matrix of tensor actions `Σ_l x_il ⊗ y_lj`.
#[derive(Clone, Debug)]
pub struct OdotElement {
    pub level: usize,
    /// Row-major `k × k` entries, each a `d² × d²` action.
    pub entries: Vec<CMatrix>,
}

pub fn odot(d: usize, k: usize, x: &CMatrix, y: &CMatrix) -> OdotElement {
    let mut entries = Vec::with_capacity(k * k);
    for i in 0..k {
        for j in 0..k {
            let mut acc = linalg::zeros(d * d, d * d);
            for l in 0..k {
                acc += linalg::pair_action(&linalg::block(x, d, i, l), &linalg::block(y, d, l, j));
            }
            entries.push(acc);
        }
    }
    OdotElement { level: k, entries }
}

fn check_levels(p: &AmplifiedProjection, q: &AmplifiedProjection, d: usize) -> Result<()> {
    if p.k != q.k {
        return Err(Error::DimensionMismatch { expected: p.k, found: q.k });
    }
    if p.d != d || q.d != d {
        return Err(Error::DimensionMismatch { expected: d, found: p.d.max(q.d) });
    }
    Ok(())
}

fn related_threshold(alg: &FiniteVNAlgebra, k: usize) -> f64 {
    alg.tol().cutoff(1.0, k * k * alg.d() * alg.d())
}

/// `(Σ_ij ‖r_ij (1 − p_J)‖²)^½`: how far `P ⊙ Q` sits outside `M_k(J)`.
pub fn ideal_escape(j: &LeftIdeal, p: &AmplifiedProjection, q: &AmplifiedProjection) -> Result<f64> {
    let d = j.algebra().d();
    check_levels(p, q, d)?;
    let o = odot(d, p.k, &p.matrix, &q.matrix);
    Ok(o.entries.iter().map(|e| j.escape(e).powi(2)).sum::<f64>().sqrt())
}

pub fn related_by_ideal(j: &LeftIdeal, p: &AmplifiedProjection, q: &AmplifiedProjection) -> Result<bool> {
    Ok(ideal_escape(j, p, q)? > related_threshold(j.algebra(), p.k))
}

/// `(Σ_b ‖P(1_k ⊗ T_b)Q‖²)^½` over an orthonormal basis of `V`.
pub fn module_escape(v: &QuantumRelation, p: &AmplifiedProjection, q: &AmplifiedProjection) -> Result<f64> {
    let d = v.d();
    check_levels(p, q, d)?;
    let id_k = linalg::identity(p.k);
    let mut total = 0.0;
    for t in v.space().basis() {
        let z = &p.matrix * id_k.kronecker(&t) * &q.matrix;
        total += linalg::fro(&z).powi(2);
    }
    Ok(total.sqrt())
}

pub fn related_by_module(
    v: &QuantumRelation,
    p: &AmplifiedProjection,
    q: &AmplifiedProjection,
) -> Result<bool> {
    Ok(module_escape(v, p, q)? > related_threshold(v.algebra(), p.k))
}

fn random_projection<R: Rng>(alg: &FiniteVNAlgebra, k: usize, rng: &mut R) -> CMatrix {
    let d = alg.d();
    let mut a = linalg::zeros(k * d, k * d);
    for i in 0..k {
        for j in 0..k {
            linalg::set_block(&mut a, d, i, j, &alg.random_element(rng));
        }
    }
    let h = linalg::hermitian_part(&a);
    let (vals, _) = linalg::hermitian_eigen(&h);
    let lo = vals[0];
    let hi = vals[vals.len() - 1];
    // The cut ranges slightly beyond the spectrum so zero and full ranks occur.
    let cut = lo + rng.random_range(-0.05..1.05) * (hi - lo);
    let positive = linalg::hermitian_fn(&h, |v| (v - cut).max(0.0));
    range_projection(&positive, alg.tol())
}

/// `count` random pairs of projections in `M_k(M)` (range projections of
/// positive parts of random Hermitian elements) followed by the structured
/// pairs `(0,0)`, `(1,1)` and, for diagonal `M`, every `(1_k⊗e_x, 1_k⊗e_y)`.
pub fn sample_projection_pairs(
    alg: &FiniteVNAlgebra,
    k: usize,
    count: usize,
    seed: u64,
) -> Vec<(AmplifiedProjection, AmplifiedProjection)> {
    let d = alg.d();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count + 2);
    for _ in 0..count {
        let p = random_projection(alg, k, &mut rng);
        let q = random_projection(alg, k, &mut rng);
        out.push((AmplifiedProjection::trusted(d, k, p), AmplifiedProjection::trusted(d, k, q)));
    }
    out.push((AmplifiedProjection::zero(d, k), AmplifiedProjection::zero(d, k)));
    out.push((AmplifiedProjection::identity(d, k), AmplifiedProjection::identity(d, k)));
    if alg.is_diagonal() {
        for x in 0..d {
            for y in 0..d {
                out.push((
                    AmplifiedProjection::diagonal_amplification(&linalg::unit(d, x, x), k),
                    AmplifiedProjection::diagonal_amplification(&linalg::unit(d, y, y), k),
                ));
            }
        }
    }
    out
}

#[derive(Clone, Debug, Serialize)]
pub struct Violation {
    pub axiom: String,
    pub sample: usize,
    pub detail: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct IntrinsicReport {
    pub level: usize,
    pub samples: usize,
    pub violations: Vec<Violation>,
    pub identity_checked: Option<String>,
}

impl IntrinsicReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

pub fn join(p: &AmplifiedProjection, q: &AmplifiedProjection, alg: &FiniteVNAlgebra) -> AmplifiedProjection {
    AmplifiedProjection::trusted(p.d, p.k, range_projection(&(&p.matrix + &q.matrix), alg.tol()))
}

/// Checks the three intrinsic axioms on sampled families:
/// `(0,0)` unrelated; relatedness of a join is the disjunction; and
/// `([BP], Q) ⟺ (P, [B*Q])` for scalar `k × k` matrices `B`.
pub fn check_iqr_axioms(
    alg: &FiniteVNAlgebra,
    related: &dyn Fn(&AmplifiedProjection, &AmplifiedProjection) -> bool,
    samples: &[(AmplifiedProjection, AmplifiedProjection)],
    seed: u64,
) -> IntrinsicReport {
    let mut violations = Vec::new();
    let level = samples.first().map(|s| s.0.k).unwrap_or(1);
    let d = alg.d();
    if related(&AmplifiedProjection::zero(d, level), &AmplifiedProjection::zero(d, level)) {
        violations.push(Violation { axiom: "zero".into(), sample: 0, detail: "(0,0) is related".into() });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for (idx, (p, q)) in samples.iter().enumerate() {
        let (p2, q2) = &samples[(idx + 1) % samples.len()];
        let pj = join(p, p2, alg);
        let lhs = related(&pj, q);
        let rhs = related(p, q) || related(p2, q);
        if lhs != rhs {
            violations.push(Violation {
                axiom: "join_left".into(),
                sample: idx,
                detail: format!("related(P∨P',Q)={lhs}, disjunction={rhs}"),
            });
        }
        let qj = join(q, q2, alg);
        let lhs = related(p, &qj);
        let rhs = related(p, q) || related(p, q2);
        if lhs != rhs {
            violations.push(Violation {
                axiom: "join_right".into(),
                sample: idx,
                detail: format!("related(P,Q∨Q')={lhs}, disjunction={rhs}"),
            });
        }
        let b = linalg::random_matrix(&mut rng, level, level).kronecker(&linalg::identity(d));
        let bp = AmplifiedProjection::trusted(d, level, range_projection(&(&b * &p.matrix), alg.tol()));
        let bq =
            AmplifiedProjection::trusted(d, level, range_projection(&(b.adjoint() * &q.matrix), alg.tol()));
        let lhs = related(&bp, q);
        let rhs = related(p, &bq);
        if lhs != rhs {
            violations.push(Violation {
                axiom: "conjugation".into(),
                sample: idx,
                detail: format!("related([BP],Q)={lhs}, related(P,[B*Q])={rhs}"),
            });
        }
    }
    IntrinsicReport { level, samples: samples.len(), violations, identity_checked: None }
}

/// Compares the ideal and module descriptions of `V` on every sampled pair and
/// checks the axioms for the module relation.
pub fn compare_ideal_and_module(
    v: &QuantumRelation,
    j: &LeftIdeal,
    samples: &[(AmplifiedProjection, AmplifiedProjection)],
    seed: u64,
) -> Result<IntrinsicReport> {
    let alg: &Arc<FiniteVNAlgebra> = v.algebra();
    let mut disagreements = Vec::new();
    for (idx, (p, q)) in samples.iter().enumerate() {
        let a = related_by_ideal(j, p, q)?;
        let b = related_by_module(v, p, q)?;
        if a != b {
            disagreements.push(Violation {
                axiom: "ideal_vs_module".into(),
                sample: idx,
                detail: format!(
                    "ideal={a} (escape {:.3e}), module={b} (escape {:.3e})",
                    ideal_escape(j, p, q)?,
                    module_escape(v, p, q)?
                ),
            });
        }
    }
    let oracle = |p: &AmplifiedProjection, q: &AmplifiedProjection| related_by_module(v, p, q).unwrap_or(true);
    let mut report = check_iqr_axioms(alg, &oracle, samples, seed);
    report.violations.splice(0..0, disagreements);
    report.identity_checked = Some("R_JV_eq_RV".into());
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ideals::annihilator_ideal;
    use crate::opcore::Tolerance;
    use crate::relations::{relation_from_subset, ClassicalRelation};

    #[test]
    fn diagonal_pairs_follow_the_classical_relation() {
        let r = ClassicalRelation::from_pairs(3, &[(0, 1), (2, 2)]).unwrap();
        let v = relation_from_subset(&r, Tolerance::default()).unwrap();
        let j = annihilator_ideal(&v);
        for x in 0..3 {
            for y in 0..3 {
                let p = AmplifiedProjection::diagonal_amplification(&linalg::unit(3, x, x), 2);
                let q = AmplifiedProjection::diagonal_amplification(&linalg::unit(3, y, y), 2);
                assert_eq!(related_by_module(&v, &p, &q).unwrap(), r.contains(x, y));
                assert_eq!(related_by_ideal(&j, &p, &q).unwrap(), r.contains(x, y));
            }
        }
    }

    #[test]
    fn constant_true_oracle_violates_zero_axiom() {
        let alg = FiniteVNAlgebra::builtin("diag:2", Tolerance::default()).unwrap();
        let samples = sample_projection_pairs(&alg, 2, 3, 0);
        let report = check_iqr_axioms(&alg, &|_, _| true, &samples, 0);
        assert!(report.violations.iter().any(|v| v.axiom == "zero"));
    }

    #[test]
    fn sampling_is_deterministic_and_counts_structured_pairs() {
        let alg = FiniteVNAlgebra::builtin("diag:2", Tolerance::default()).unwrap();
        let a = sample_projection_pairs(&alg, 2, 1, 9);
        let b = sample_projection_pairs(&alg, 2, 1, 9);
        assert_eq!(a.len(), 1 + 2 + 4);
        for ((p, q), (p2, q2)) in a.iter().zip(&b) {
            assert_eq!(p.matrix(), p2.matrix());
            assert_eq!(q.matrix(), q2.matrix());
        }
        for (p, _) in &a {
            assert!(AmplifiedProjection::new(&alg, 2, p.matrix().clone()).is_ok());
        }
    }

    #[test]
    fn mismatched_levels_are_an_error() {
        let v = relation_from_subset(&ClassicalRelation::total(2), Tolerance::default()).unwrap();
        let p = AmplifiedProjection::identity(2, 1);
        let q = AmplifiedProjection::identity(2, 2);
        assert!(related_by_module(&v, &p, &q).is_err());
    }
}
