//! Quantum relations: weak* closed `M'`-bimodules in `M_d`.

use std::sync::Arc;

use crate::linalg::{self, CMatrix};
use crate::opcore::{check_matrix, OperatorSubspace, Tolerance};
use crate::vnalg::FiniteVNAlgebra;
use crate::{Error, Result};

/// A relation on `{0..n}` as a dense boolean matrix.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ClassicalRelation {
    n: usize,
    mask: Vec<bool>,
}

impl ClassicalRelation {
    pub fn empty(n: usize) -> Self {
        ClassicalRelation { n, mask: vec![false; n * n] }
    }

    pub fn diagonal(n: usize) -> Self {
        let mut r = Self::empty(n);
        for x in 0..n {
            r.insert(x, x);
        }
        r
    }

    pub fn total(n: usize) -> Self {
        ClassicalRelation { n, mask: vec![true; n * n] }
    }

    pub fn from_pairs(n: usize, pairs: &[(usize, usize)]) -> Result<Self> {
        let mut r = Self::empty(n);
        for &(x, y) in pairs {
            if x >= n || y >= n {
                return Err(Error::InvalidInput(format!("pair ({x},{y}) out of range for n={n}")));
            }
            r.insert(x, y);
        }
        Ok(r)
    }

    /// Bit `x*n + y` of `bits` decides `(x, y)`.
    pub fn from_bits(n: usize, bits: u64) -> Self {
        let mask = (0..n * n).map(|k| bits >> k & 1 == 1).collect();
        ClassicalRelation { n, mask }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn contains(&self, x: usize, y: usize) -> bool {
        self.mask[x * self.n + y]
    }

    pub fn insert(&mut self, x: usize, y: usize) {
        self.mask[x * self.n + y] = true;
    }

    pub fn pairs(&self) -> Vec<(usize, usize)> {
        let n = self.n;
        (0..n * n).filter(|&k| self.mask[k]).map(|k| (k / n, k % n)).collect()
    }

    pub fn len(&self) -> usize {
        self.mask.iter().filter(|&&b| b).count()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::empty(self.n);
        for (x, y) in self.pairs() {
            t.insert(y, x);
        }
        t
    }

    /// `{(x, z) : ∃y (x,y) ∈ self, (y,z) ∈ other}`.
    pub fn compose(&self, other: &Self) -> Self {
        let n = self.n;
        let mut out = Self::empty(n);
        for x in 0..n {
            for y in 0..n {
                if self.contains(x, y) {
                    for z in 0..n {
                        if other.contains(y, z) {
                            out.insert(x, z);
                        }
                    }
                }
            }
        }
        out
    }
}

#[derive(Clone, Debug)]
pub struct QuantumRelation {
    algebra: Arc<FiniteVNAlgebra>,
    space: OperatorSubspace,
}

/// Largest distance from `c v` or `v c` to the subspace, over basis elements
/// `c` of the commutant and `v` of the subspace.
pub fn is_quantum_relation(algebra: &FiniteVNAlgebra, space: &OperatorSubspace) -> f64 {
    let cs = algebra.commutant_space().basis();
    let mut worst: f64 = 0.0;
    for v in space.basis() {
        for c in &cs {
            worst = worst.max(space.distance(&(c * &v))).max(space.distance(&(&v * c)));
        }
    }
    worst
}

/// `span{c₁ v c₂ : cᵢ ∈ M'}`, built in two one-sided passes.
pub fn bimodule_closure(algebra: &FiniteVNAlgebra, spanning: &[CMatrix]) -> OperatorSubspace {
    let d = algebra.d();
    let tol = algebra.tol();
    let cs = algebra.commutant_space().basis();
    let mut left = Vec::with_capacity(cs.len() * spanning.len());
    for g in spanning {
        for c in &cs {
            left.push(c * g);
        }
    }
    let floor = spanning.iter().map(linalg::fro).fold(0.0, f64::max);
    let stage = OperatorSubspace::from_columns_scaled(d, &linalg::frame_of(&left, d), floor, tol);
    let mut right = Vec::with_capacity(cs.len() * stage.dim());
    for w in stage.basis() {
        for c in &cs {
            right.push(&w * c);
        }
    }
    OperatorSubspace::from_columns_scaled(d, &linalg::frame_of(&right, d), 1.0, tol)
}

fn same_algebra(a: &Arc<FiniteVNAlgebra>, b: &Arc<FiniteVNAlgebra>) -> bool {
    Arc::ptr_eq(a, b) || a.same_as(b)
}

impl QuantumRelation {
    /// Checks the bimodule property before wrapping.
    pub fn new(algebra: Arc<FiniteVNAlgebra>, space: OperatorSubspace) -> Result<Self> {
        if space.ambient_dim() != algebra.d() {
            return Err(Error::DimensionMismatch { expected: algebra.d(), found: space.ambient_dim() });
        }
        let residual = is_quantum_relation(&algebra, &space);
        let d = algebra.d();
        if residual > algebra.tol().cutoff(1.0, d * d) {
            return Err(Error::NotBimodule { residual });
        }
        Ok(QuantumRelation { algebra, space })
    }

    pub(crate) fn new_unchecked(algebra: Arc<FiniteVNAlgebra>, space: OperatorSubspace) -> Self {
        QuantumRelation { algebra, space }
    }

    pub fn algebra(&self) -> &Arc<FiniteVNAlgebra> {
        &self.algebra
    }

    pub fn space(&self) -> &OperatorSubspace {
        &self.space
    }

    pub fn dim(&self) -> usize {
        self.space.dim()
    }

    pub fn d(&self) -> usize {
        self.algebra.d()
    }

    /// The diagonal relation `M'` itself.
    pub fn diagonal(algebra: Arc<FiniteVNAlgebra>) -> Self {
        let space = algebra.commutant_space().clone();
        QuantumRelation { algebra, space }
    }

    pub fn total(algebra: Arc<FiniteVNAlgebra>) -> Self {
        let space = OperatorSubspace::full(algebra.d(), algebra.tol());
        QuantumRelation { algebra, space }
    }

    pub fn empty(algebra: Arc<FiniteVNAlgebra>) -> Self {
        let space = OperatorSubspace::zero(algebra.d(), algebra.tol());
        QuantumRelation { algebra, space }
    }

    pub fn relate(&self, other: &QuantumRelation) -> crate::opcore::SubspaceRelation {
        self.space.relate(&other.space)
    }
}

pub fn generate_relation(algebra: &Arc<FiniteVNAlgebra>, gens: &[CMatrix]) -> Result<QuantumRelation> {
    for g in gens {
        check_matrix(g, algebra.d())?;
    }
    let space = bimodule_closure(algebra, gens);
    Ok(QuantumRelation::new_unchecked(algebra.clone(), space))
}

/// `span{v w}`.
pub fn compose(v: &QuantumRelation, w: &QuantumRelation) -> Result<QuantumRelation> {
    if !same_algebra(&v.algebra, &w.algebra) {
        return Err(Error::AlgebraMismatch);
    }
    let d = v.d();
    let wb = w.space.basis();
    let mut prods = Vec::with_capacity(v.dim() * wb.len());
    for a in v.space.basis() {
        for b in &wb {
            prods.push(&a * b);
        }
    }
    let space = OperatorSubspace::from_columns_scaled(d, &linalg::frame_of(&prods, d), 1.0, v.algebra.tol());
    Ok(QuantumRelation::new_unchecked(v.algebra.clone(), space))
}

pub fn adjoint_relation(v: &QuantumRelation) -> QuantumRelation {
    QuantumRelation::new_unchecked(v.algebra.clone(), v.space.adjoint())
}

/// `span{E_xy : (x,y) ∈ R}` over the diagonal algebra.
pub fn relation_from_subset(r: &ClassicalRelation, tol: Tolerance) -> Result<QuantumRelation> {
    let alg = Arc::new(FiniteVNAlgebra::builtin(&format!("diag:{}", r.n()), tol)?);
    relation_from_subset_over(&alg, r)
}

pub fn relation_from_subset_over(
    algebra: &Arc<FiniteVNAlgebra>,
    r: &ClassicalRelation,
) -> Result<QuantumRelation> {
    if !algebra.is_diagonal() {
        return Err(Error::NotDiagonal);
    }
    if algebra.d() != r.n() {
        return Err(Error::DimensionMismatch { expected: algebra.d(), found: r.n() });
    }
    let n = r.n();
    let mut frame = linalg::zeros(n * n, r.len());
    for (k, (x, y)) in r.pairs().into_iter().enumerate() {
        frame[(x + n * y, k)] = linalg::ONE;
    }
    let space = OperatorSubspace::from_orthonormal_frame(n, frame, algebra.tol());
    Ok(QuantumRelation::new_unchecked(algebra.clone(), space))
}

/// Support of a relation over the diagonal algebra.
pub fn subset_from_relation(v: &QuantumRelation) -> Result<ClassicalRelation> {
    if !v.algebra.is_diagonal() {
        return Err(Error::NotDiagonal);
    }
    let n = v.d();
    let thr = v.algebra.tol().cutoff(1.0, n * n);
    let mut r = ClassicalRelation::empty(n);
    for x in 0..n {
        for y in 0..n {
            let row = v.space.frame().row(x + n * y);
            if row.iter().any(|z| z.norm() > thr) {
                r.insert(x, y);
            }
        }
    }
    Ok(r)
}
