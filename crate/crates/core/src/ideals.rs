//! Tensor elements of `M ⊗ M_op` and left ideals of the tensor algebra.
//!
//! An element `s = Σ xᵢ ⊗ yᵢ` is stored through its action
//! `Φ_s(T) = Σ xᵢ T yᵢ` on `M_d`, a `d² × d²` matrix. The actions of the whole
//! tensor algebra form a von Neumann algebra `𝒜` on the Hilbert-Schmidt space,
//! so a left ideal is `𝒜 p` for a unique projection `p ∈ 𝒜`; ideals are held
//! through that projection together with generators.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::linalg::{self, CMatrix};
use crate::opcore::{joint_kernel, range_projection, Inclusion, OperatorSubspace};
use crate::relations::{bimodule_closure, QuantumRelation};
use crate::vnalg::FiniteVNAlgebra;
use crate::{Error, Result};

fn same_algebra(a: &Arc<FiniteVNAlgebra>, b: &Arc<FiniteVNAlgebra>) -> bool {
    Arc::ptr_eq(a, b) || a.same_as(b)
}

fn action_threshold(alg: &FiniteVNAlgebra, scale: f64) -> f64 {
    let d = alg.d();
    alg.tol().cutoff(scale.max(1.0), d * d)
}

/// Orthogonal projection of an action onto `𝒜`. After realignment the action
/// of `x ⊗ y` is `vec(x) vec(y)ᵀ`, so the projection is `R ↦ P R Pᵀ`.
pub fn project_to_tensor_algebra(alg: &FiniteVNAlgebra, action: &CMatrix) -> CMatrix {
    let d = alg.d();
    let u = alg.space().frame();
    let r = linalg::realign(action, d);
    let c = u.adjoint() * r * u.map(|z| z.conj());
    linalg::unrealign(&(u * c * u.transpose()), d)
}

pub fn tensor_algebra_residual(alg: &FiniteVNAlgebra, action: &CMatrix) -> f64 {
    linalg::fro(&(action - project_to_tensor_algebra(alg, action)))
}

/// Coefficients `C` with `s = Σ C_ab m_a ⊗ m_b` for the stored basis `{m_a}` of `M`.
pub fn tensor_coordinates(alg: &FiniteVNAlgebra, action: &CMatrix) -> CMatrix {
    let u = alg.space().frame();
    u.adjoint() * linalg::realign(action, alg.d()) * u.map(|z| z.conj())
}

pub fn action_from_coordinates(alg: &FiniteVNAlgebra, coords: &CMatrix) -> CMatrix {
    let u = alg.space().frame();
    linalg::unrealign(&(u * coords * u.transpose()), alg.d())
}

pub fn random_tensor_action<R: Rng>(alg: &FiniteVNAlgebra, rng: &mut R) -> CMatrix {
    let n = alg.dim();
    action_from_coordinates(alg, &linalg::random_matrix(rng, n, n))
}

/// Projection in `𝒜` obtained from the positive spectral part of a random
/// Hermitian element, with a random spectral cut so ranks vary.
pub fn random_tensor_projection<R: Rng>(alg: &FiniteVNAlgebra, rng: &mut R) -> CMatrix {
    let a = random_tensor_action(alg, rng);
    let h = linalg::hermitian_part(&a);
    let (vals, _) = linalg::hermitian_eigen(&h);
    let span = vals.last().copied().unwrap_or(0.0) - vals.first().copied().unwrap_or(0.0);
    let shift = rng.random_range(-0.45..0.45) * span;
    let positive = linalg::hermitian_fn(&h, |v| (v - shift).max(0.0));
    range_projection(&positive, alg.tol())
}

#[derive(Clone, Debug, Serialize)]
pub struct InjectivityReport {
    pub algebra_dim: usize,
    pub expected: usize,
    pub span_dim: usize,
    pub injective: bool,
}

/// Checks that `Φ` is injective on `M ⊗ M_op`: the actions of `m_a ⊗ m_b`
/// span a space of dimension `dim(M)²`. Computed directly from the actions
/// when that is cheap, otherwise from the Gram identity
/// `⟨Φ_{a⊗b}, Φ_{c⊗e}⟩ = ⟨a,c⟩⟨b,e⟩`.
pub fn phi_injectivity(alg: &FiniteVNAlgebra) -> InjectivityReport {
    let d = alg.d();
    let n = alg.dim();
    let basis = alg.space().basis();
    let span_dim = if n * n <= 256 && d <= 6 {
        let mut cols = linalg::zeros(d.pow(4), n * n);
        for (a, x) in basis.iter().enumerate() {
            for (b, y) in basis.iter().enumerate() {
                let act = linalg::pair_action(x, y);
                cols.column_mut(a * n + b).copy_from_slice(act.as_slice());
            }
        }
        linalg::column_space(&cols, alg.tol()).ncols()
    } else {
        let gram = CMatrix::from_fn(n, n, |i, j| linalg::hs_inner(&basis[i], &basis[j]));
        let rank = linalg::column_space(&gram, alg.tol()).ncols();
        rank * rank
    };
    InjectivityReport { algebra_dim: n, expected: n * n, span_dim, injective: span_dim == n * n }
}

#[derive(Clone, Debug)]
pub struct TensorElement {
    algebra: Arc<FiniteVNAlgebra>,
    action: CMatrix,
    pairs: Option<Vec<(CMatrix, CMatrix)>>,
}

impl TensorElement {
    pub fn from_pairs(algebra: Arc<FiniteVNAlgebra>, pairs: Vec<(CMatrix, CMatrix)>) -> Result<Self> {
        let d = algebra.d();
        let mut action = linalg::zeros(d * d, d * d);
        for (x, y) in &pairs {
            for m in [x, y] {
                crate::opcore::check_matrix(m, d)?;
                let residual = algebra.residual(m);
                if residual > action_threshold(&algebra, linalg::fro(m)) {
                    return Err(Error::NotInAlgebra { residual });
                }
            }
            action += linalg::pair_action(x, y);
        }
        Ok(TensorElement { algebra, action, pairs: Some(pairs) })
    }

    pub fn from_action(algebra: Arc<FiniteVNAlgebra>, action: CMatrix) -> Result<Self> {
        let dd = algebra.d() * algebra.d();
        if action.nrows() != dd || action.ncols() != dd {
            return Err(Error::DimensionMismatch { expected: dd, found: action.nrows() });
        }
        if !linalg::all_finite(&action) {
            return Err(Error::NonFinite);
        }
        let residual = tensor_algebra_residual(&algebra, &action);
        if residual > action_threshold(&algebra, linalg::fro(&action)) {
            return Err(Error::NotInAlgebra { residual });
        }
        Ok(TensorElement { algebra, action, pairs: None })
    }

    pub fn identity(algebra: Arc<FiniteVNAlgebra>) -> Self {
        let id = linalg::identity(algebra.d());
        let action = linalg::identity(algebra.d() * algebra.d());
        TensorElement { algebra, action, pairs: Some(vec![(id.clone(), id)]) }
    }

    pub fn algebra(&self) -> &Arc<FiniteVNAlgebra> {
        &self.algebra
    }

    pub fn action(&self) -> &CMatrix {
        &self.action
    }

    pub fn pairs(&self) -> Option<&[(CMatrix, CMatrix)]> {
        self.pairs.as_deref()
    }

    pub fn apply(&self, t: &CMatrix) -> CMatrix {
        linalg::apply_action(&self.action, t)
    }

    /// `(x ⊗ y)(z ⊗ t) = xz ⊗ ty`, so `Φ_{st} = Φ_s ∘ Φ_t`.
    pub fn mul(&self, other: &TensorElement) -> Result<TensorElement> {
        if !same_algebra(&self.algebra, &other.algebra) {
            return Err(Error::AlgebraMismatch);
        }
        let pairs = match (&self.pairs, &other.pairs) {
            (Some(a), Some(b)) => Some(
                a.iter()
                    .flat_map(|(x, y)| b.iter().map(move |(z, t)| (x * z, t * y)))
                    .collect(),
            ),
            _ => None,
        };
        Ok(TensorElement { algebra: self.algebra.clone(), action: &self.action * &other.action, pairs })
    }

    /// `(x ⊗ y)† = y* ⊗ x*`, i.e. `Φ_{s†}(T) = Φ_s(T*)*`. Note this involution is
    /// multiplicative: `(st)† = s† t†`.
    pub fn dagger(&self) -> TensorElement {
        let d = self.algebra.d();
        let k = linalg::transpose_permutation(d);
        let action = &k * self.action.map(|z| z.conj()) * &k;
        let pairs = self
            .pairs
            .as_ref()
            .map(|ps| ps.iter().map(|(x, y)| (y.adjoint(), x.adjoint())).collect());
        TensorElement { algebra: self.algebra.clone(), action, pairs }
    }

    /// The C*-involution `x ⊗ y ↦ x* ⊗ y*`: the Hilbert-Schmidt adjoint of the action.
    pub fn star(&self) -> TensorElement {
        let pairs = self
            .pairs
            .as_ref()
            .map(|ps| ps.iter().map(|(x, y)| (x.adjoint(), y.adjoint())).collect());
        TensorElement { algebra: self.algebra.clone(), action: self.action.adjoint(), pairs }
    }

    /// `max ‖Φ_s(c₁Tc₂) − c₁Φ_s(T)c₂‖` over commutant basis pairs, tested
    /// as commutation of the action with `T ↦ c₁Tc₂`.
    pub fn bimodularity_residual(&self) -> f64 {
        let cs = self.algebra.commutant_space().basis();
        let mut worst: f64 = 0.0;
        for c1 in &cs {
            for c2 in &cs {
                let k = linalg::pair_action(c1, c2);
                worst = worst.max(linalg::fro(&(&self.action * &k - &k * &self.action)));
            }
        }
        worst
    }

    pub fn coordinates(&self) -> CMatrix {
        tensor_coordinates(&self.algebra, &self.action)
    }
}

/// Left ideal `𝒜 p` of the tensor algebra.
#[derive(Clone, Debug)]
pub struct LeftIdeal {
    algebra: Arc<FiniteVNAlgebra>,
    support: CMatrix,
    generators: Vec<CMatrix>,
}

impl LeftIdeal {
    pub fn zero(algebra: Arc<FiniteVNAlgebra>) -> Self {
        let dd = algebra.d() * algebra.d();
        LeftIdeal { algebra, support: linalg::zeros(dd, dd), generators: Vec::new() }
    }

    pub fn whole(algebra: Arc<FiniteVNAlgebra>) -> Self {
        let dd = algebra.d() * algebra.d();
        LeftIdeal { algebra, support: linalg::identity(dd), generators: vec![linalg::identity(dd)] }
    }

    /// `𝒜 s₁ + … + 𝒜 s_m`; the support is the range projection of `Σ sᵢ* sᵢ`.
    pub fn generated_by(algebra: Arc<FiniteVNAlgebra>, generators: Vec<CMatrix>) -> Result<Self> {
        let dd = algebra.d() * algebra.d();
        let mut gram = linalg::zeros(dd, dd);
        for g in &generators {
            if g.nrows() != dd || g.ncols() != dd {
                return Err(Error::DimensionMismatch { expected: dd, found: g.nrows() });
            }
            let residual = tensor_algebra_residual(&algebra, g);
            if residual > action_threshold(&algebra, linalg::fro(g)) {
                return Err(Error::NotInAlgebra { residual });
            }
            gram += g.adjoint() * g;
        }
        let support = range_projection(&gram, algebra.tol());
        Ok(LeftIdeal { algebra, support, generators })
    }

    /// The ideal `𝒜 p` of a projection `p ∈ 𝒜`.
    pub fn from_projection(algebra: Arc<FiniteVNAlgebra>, p: CMatrix) -> Result<Self> {
        let dd = algebra.d() * algebra.d();
        if p.nrows() != dd || p.ncols() != dd {
            return Err(Error::DimensionMismatch { expected: dd, found: p.nrows() });
        }
        let residual = linalg::fro(&(&p * &p - &p))
            .max(linalg::fro(&(&p - p.adjoint())))
            .max(tensor_algebra_residual(&algebra, &p));
        if residual > action_threshold(&algebra, linalg::fro(&p)) {
            return Err(Error::NotProjection { residual });
        }
        Ok(LeftIdeal { algebra, support: p.clone(), generators: vec![p] })
    }

    /// Checks that the span of `basis` is a left ideal, then wraps it.
    pub fn from_basis(algebra: Arc<FiniteVNAlgebra>, basis: Vec<CMatrix>) -> Result<Self> {
        let d = algebra.d();
        let dd = d * d;
        let mut cols = linalg::zeros(dd * dd, basis.len());
        for (k, b) in basis.iter().enumerate() {
            if b.nrows() != dd || b.ncols() != dd {
                return Err(Error::DimensionMismatch { expected: dd, found: b.nrows() });
            }
            cols.column_mut(k).copy_from_slice(b.as_slice());
        }
        let frame = linalg::column_space(&cols, algebra.tol());
        let mb = algebra.space().basis();
        let mut residual: f64 = 0.0;
        for b in &basis {
            for x in &mb {
                for y in &mb {
                    let prod = linalg::pair_action(x, y) * b;
                    let v = linalg::CVector::from_column_slice(prod.as_slice());
                    let r = (&v - &frame * (frame.adjoint() * &v)).norm();
                    residual = residual.max(r);
                }
            }
        }
        if residual > action_threshold(&algebra, 1.0) {
            return Err(Error::NotLeftIdeal { residual });
        }
        Self::generated_by(algebra, basis)
    }

    pub fn algebra(&self) -> &Arc<FiniteVNAlgebra> {
        &self.algebra
    }

    pub fn support(&self) -> &CMatrix {
        &self.support
    }

    pub fn generators(&self) -> &[CMatrix] {
        &self.generators
    }

    /// HS distance from an element of `𝒜` to the ideal: `‖a(1 − p)‖`, because
    /// right multiplication by `p` is the orthogonal projection onto `𝒜 p`.
    pub fn escape(&self, action: &CMatrix) -> f64 {
        linalg::fro(&(action - action * &self.support))
    }

    pub fn contains(&self, action: &CMatrix) -> bool {
        let scale = linalg::fro(action);
        let off = tensor_algebra_residual(&self.algebra, action);
        off.max(self.escape(action)) <= action_threshold(&self.algebra, scale)
    }

    /// Orthonormal basis of `𝒜 p` as a subspace of `M_{d²}`.
    pub fn basis(&self) -> Result<OperatorSubspace> {
        let d = self.algebra.d();
        let dd = d * d;
        crate::opcore::check_dim(dd)?;
        let n = self.algebra.dim();
        let mut cols = linalg::zeros(dd * dd, n * n);
        for a in 0..n {
            for b in 0..n {
                let mut c = linalg::zeros(n, n);
                c[(a, b)] = linalg::ONE;
                let prod = action_from_coordinates(&self.algebra, &c) * &self.support;
                cols.column_mut(a * n + b).copy_from_slice(prod.as_slice());
            }
        }
        Ok(OperatorSubspace::from_columns(dd, &cols, self.algebra.tol()))
    }

    pub fn dim(&self) -> Result<usize> {
        Ok(self.basis()?.dim())
    }

    /// `‖P_J − P_K‖` of the two ideals as subspaces, which equals `‖p − q‖`.
    pub fn gap(&self, other: &LeftIdeal) -> f64 {
        linalg::op_norm(&(&self.support - &other.support))
    }

    pub fn relate(&self, other: &LeftIdeal) -> Inclusion {
        let dd = self.support.nrows();
        let id = linalg::identity(dd);
        let thr = action_threshold(&self.algebra, 1.0);
        let sub = linalg::op_norm(&(&self.support * (&id - &other.support))) <= thr;
        let sup = linalg::op_norm(&(&other.support * (&id - &self.support))) <= thr;
        match (sub, sup) {
            (true, true) => Inclusion::Equal,
            (true, false) => Inclusion::Subset,
            (false, true) => Inclusion::Superset,
            (false, false) => Inclusion::Incomparable,
        }
    }
}

/// `J_V`: every tensor element whose action kills `V`. An element of `𝒜`
/// kills `V` exactly when it kills the `M'`-bimodule `W` generated by `V`,
/// and the projection onto `W` lies in `𝒜`, so `J_V = 𝒜(1 − P_W)`.
pub fn annihilator_ideal(v: &QuantumRelation) -> LeftIdeal {
    annihilator_of_span(v.algebra(), &v.space().basis())
}

pub fn annihilator_of_span(algebra: &Arc<FiniteVNAlgebra>, spanning: &[CMatrix]) -> LeftIdeal {
    let w = bimodule_closure(algebra, spanning);
    let dd = algebra.d() * algebra.d();
    let p = linalg::identity(dd) - w.projector();
    LeftIdeal { algebra: algebra.clone(), support: p.clone(), generators: vec![p] }
}

/// `V_J`: the common kernel of a generating family of `J`.
pub fn kernel_bimodule(j: &LeftIdeal) -> QuantumRelation {
    let space = joint_kernel(j.algebra.d(), &j.generators, j.algebra.tol())
        .expect("generator shapes checked on construction");
    QuantumRelation::new_unchecked(j.algebra.clone(), space)
}

pub fn support_projection(j: &LeftIdeal) -> CMatrix {
    j.support.clone()
}

pub fn pq_identify(algebra: Arc<FiniteVNAlgebra>, p: CMatrix) -> Result<LeftIdeal> {
    LeftIdeal::from_projection(algebra, p)
}

#[derive(Clone, Debug, Serialize)]
pub struct CbBracket {
    pub lower: f64,
    pub upper: f64,
    pub level: usize,
    pub samples: usize,
    pub balancing_iterations: usize,
}

const CB_SAMPLES: usize = 256;
const CB_ASCENT_STARTS: usize = 8;
const CB_MAX_ITER: usize = 100;

/// `(id_k ⊗ Φ)(T)`: apply the action to every `d × d` block.
fn amplify(action: &CMatrix, t: &CMatrix, d: usize, k: usize) -> CMatrix {
    let mut out = linalg::zeros(k * d, k * d);
    for i in 0..k {
        for j in 0..k {
            let b = linalg::apply_action(action, &linalg::block(t, d, i, j));
            linalg::set_block(&mut out, d, i, j, &b);
        }
    }
    out
}

fn top_singular_pair(z: &CMatrix) -> (f64, linalg::CVector, linalg::CVector) {
    let f = linalg::svd(z);
    (f.s[0], f.u.column(0).into_owned(), f.v.column(0).into_owned())
}

fn polar_unitary(w: &CMatrix) -> CMatrix {
    let f = linalg::svd(w);
    f.u * f.v.adjoint()
}

/// Lower bound: sampled unitaries at level `k` refined by alternating ascent.
/// Upper bound: `‖Σ xᵢxᵢ*‖^½ ‖Σ yᵢ*yᵢ‖^½` minimised over rebalanced
/// decompositions `x ↦ xA`, `y ↦ A⁻¹y`.
pub fn cb_norm_bracket(s: &TensorElement, level: usize, seed: u64) -> CbBracket {
    let d = s.algebra.d();
    let k = level.max(1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let act = s.action();
    let act_adj = act.adjoint();

    let mut starts: Vec<(f64, CMatrix)> = (0..CB_SAMPLES)
        .map(|_| {
            let t = linalg::random_unitary(&mut rng, k * d);
            (linalg::op_norm(&amplify(act, &t, d, k)), t)
        })
        .collect();
    starts.sort_by(|a, b| b.0.total_cmp(&a.0));
    let mut lower = starts.first().map(|s| s.0).unwrap_or(0.0);
    for (val, t0) in starts.into_iter().take(CB_ASCENT_STARTS) {
        let mut t = t0;
        let mut cur = val;
        for _ in 0..CB_MAX_ITER {
            let (_, a, b) = top_singular_pair(&amplify(act, &t, d, k));
            let w = amplify(&act_adj, &(&a * b.adjoint()), d, k);
            t = polar_unitary(&w);
            let next = linalg::op_norm(&amplify(act, &t, d, k));
            let done = next <= cur * (1.0 + 1e-13);
            cur = cur.max(next);
            if done {
                break;
            }
        }
        lower = lower.max(cur);
    }

    let (upper, balancing_iterations) = haagerup_upper(s);
    CbBracket { lower, upper: upper.max(lower), level: k, samples: CB_SAMPLES, balancing_iterations }
}

fn decomposition(s: &TensorElement) -> Vec<(CMatrix, CMatrix)> {
    if let Some(p) = s.pairs() {
        return p.to_vec();
    }
    let d = s.algebra.d();
    let f = linalg::svd(&linalg::realign(s.action(), d));
    let smax = f.s.first().copied().unwrap_or(0.0);
    let cut = s.algebra.tol().cutoff(smax, d * d);
    (0..f.s.len())
        .filter(|&i| f.s[i] > cut && f.s[i] > 0.0)
        .map(|i| {
            let r = linalg::c(f.s[i].sqrt());
            let x = linalg::unvec(f.u.column(i).as_slice(), d) * r;
            let yv: Vec<_> = f.v.column(i).iter().map(|z| z.conj()).collect();
            (x, linalg::unvec(&yv, d) * r)
        })
        .collect()
}

fn haagerup_upper(s: &TensorElement) -> (f64, usize) {
    let pairs = decomposition(s);
    let r = pairs.len();
    if r == 0 {
        return (0.0, 0);
    }
    let d = s.algebra.d();
    // Row X = [x₁ … x_r] and column Y = [y₁; …; y_r].
    let mut xrow = linalg::zeros(d, r * d);
    let mut ycol = linalg::zeros(r * d, d);
    for (i, (x, y)) in pairs.iter().enumerate() {
        xrow.view_mut((0, i * d), (d, d)).copy_from(x);
        ycol.view_mut((i * d, 0), (d, d)).copy_from(y);
    }
    let id_d = linalg::identity(d);
    let objective = |b: &CMatrix, binv: &CMatrix| {
        let gx = &xrow * b.kronecker(&id_d) * xrow.adjoint();
        let gy = ycol.adjoint() * binv.kronecker(&id_d) * &ycol;
        (linalg::op_norm(&gx) * linalg::op_norm(&gy)).sqrt()
    };
    let mut b = linalg::identity(r);
    let mut binv = linalg::identity(r);
    let mut best = objective(&b, &binv);
    let mut iterations = 0;
    for it in 0..CB_MAX_ITER {
        iterations = it + 1;
        let gx = &xrow * b.kronecker(&id_d) * xrow.adjoint();
        let gy = ycol.adjoint() * binv.kronecker(&id_d) * &ycol;
        let (_, xv) = linalg::hermitian_eigen(&gx);
        let (_, yv) = linalg::hermitian_eigen(&gy);
        let xi = xv.column(d - 1).into_owned();
        let eta = yv.column(d - 1).into_owned();
        let a: Vec<linalg::CVector> = pairs.iter().map(|(x, _)| x.adjoint() * &xi).collect();
        let c: Vec<linalg::CVector> = pairs.iter().map(|(_, y)| y * &eta).collect();
        // ‖G_X‖ = tr(B G), ‖G_Y‖ = tr(B⁻¹ H) at the current top vectors.
        let g = CMatrix::from_fn(r, r, |i, l| a[l].dotc(&a[i]));
        let h = CMatrix::from_fn(r, r, |i, l| c[l].dotc(&c[i]));
        let reg = |m: &CMatrix| {
            let t = m.trace().re.abs().max(1e-300);
            m + linalg::identity(r) * linalg::c(1e-12 * t)
        };
        let (g, h) = (reg(&g), reg(&h));
        // B = G^{-1/2} (G^{1/2} H G^{1/2})^{1/2} G^{-1/2} minimises tr(BG) tr(B⁻¹H).
        let gh = linalg::hermitian_fn(&g, |v| v.max(0.0).sqrt());
        let ghi = linalg::hermitian_fn(&g, |v| 1.0 / v.max(1e-300).sqrt());
        let mid = linalg::hermitian_fn(&(&gh * &h * &gh), |v| v.max(0.0).sqrt());
        let next = &ghi * &mid * &ghi;
        let next = linalg::hermitian_part(&next);
        let scale = next.trace().re / r as f64;
        if !(scale.is_finite() && scale > 0.0) {
            break;
        }
        let next = next / linalg::c(scale);
        let next_inv = linalg::hermitian_fn(&next, |v| 1.0 / v.max(1e-300));
        let val = objective(&next, &next_inv);
        let improved = val < best;
        let rel_gain = (best - val) / best.max(1e-300);
        if improved {
            best = val;
        }
        b = next;
        binv = next_inv;
        if !improved || rel_gain < 1e-10 {
            break;
        }
    }
    (best, iterations)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::unit;
    use crate::opcore::Tolerance;

    fn alg(name: &str) -> Arc<FiniteVNAlgebra> {
        Arc::new(FiniteVNAlgebra::builtin(name, Tolerance::default()).unwrap())
    }

    #[test]
    fn schur_mask_projection_gives_expected_kernel() {
        // p = e₁⊗e₀ + e₁⊗e₁ acts as the Schur mask on entries (1,0), (1,1).
        let m = alg("diag:2");
        let p = TensorElement::from_pairs(
            m.clone(),
            vec![(unit(2, 1, 1), unit(2, 0, 0)), (unit(2, 1, 1), unit(2, 1, 1))],
        )
        .unwrap();
        let j = pq_identify(m, p.action().clone()).unwrap();
        let v = kernel_bimodule(&j);
        assert_eq!(v.dim(), 2);
        assert!(v.space().contains(&unit(2, 0, 0)) && v.space().contains(&unit(2, 0, 1)));
        assert_eq!(j.dim().unwrap(), 2);
    }

    #[test]
    fn dagger_is_multiplicative_and_involutive() {
        let m = alg("block:1x1,2x1");
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let s = TensorElement::from_action(m.clone(), random_tensor_action(&m, &mut rng)).unwrap();
        let t = TensorElement::from_action(m.clone(), random_tensor_action(&m, &mut rng)).unwrap();
        let st = s.mul(&t).unwrap();
        let lhs = st.dagger();
        let rhs = s.dagger().mul(&t.dagger()).unwrap();
        assert!(linalg::fro(&(lhs.action() - rhs.action())) < 1e-10);
        assert!(linalg::fro(&(s.dagger().dagger().action() - s.action())) < 1e-12);
        assert!(tensor_algebra_residual(&m, lhs.action()) < 1e-10);
    }

    #[test]
    fn dagger_of_pairs_matches_action_formula() {
        let m = alg("full:2");
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let x = linalg::random_matrix(&mut rng, 2, 2);
        let y = linalg::random_matrix(&mut rng, 2, 2);
        let s = TensorElement::from_pairs(m, vec![(x, y)]).unwrap();
        let from_pairs = TensorElement::from_pairs(s.algebra().clone(), s.dagger().pairs().unwrap().to_vec())
            .unwrap();
        assert!(linalg::fro(&(from_pairs.action() - s.dagger().action())) < 1e-12);
        let t = linalg::random_matrix(&mut rng, 2, 2);
        let direct = s.apply(&t.adjoint()).adjoint();
        assert!(linalg::fro(&(s.dagger().apply(&t) - direct)) < 1e-12);
    }

    #[test]
    fn pairs_outside_algebra_are_rejected() {
        let m = alg("diag:2");
        let r = TensorElement::from_pairs(m, vec![(unit(2, 0, 1), linalg::identity(2))]);
        assert!(matches!(r, Err(Error::NotInAlgebra { .. })));
    }

    #[test]
    fn action_outside_tensor_algebra_is_rejected() {
        let m = alg("diag:2");
        let transpose = linalg::transpose_permutation(2);
        assert!(matches!(TensorElement::from_action(m, transpose), Err(Error::NotInAlgebra { .. })));
    }

    #[test]
    fn elementary_tensor_bracket_is_tight() {
        let m = alg("full:2");
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let x = linalg::random_matrix(&mut rng, 2, 2);
        let y = linalg::random_matrix(&mut rng, 2, 2);
        let expected = linalg::op_norm(&x) * linalg::op_norm(&y);
        let s = TensorElement::from_pairs(m, vec![(x, y)]).unwrap();
        let b = cb_norm_bracket(&s, 2, 0);
        assert!((b.lower - expected).abs() < 1e-6 * expected, "{b:?} vs {expected}");
        assert!((b.upper - expected).abs() < 1e-6 * expected, "{b:?} vs {expected}");
    }

    #[test]
    fn injectivity_holds_on_builtins() {
        for name in ["full:2", "diag:3", "block:1x2,2x1"] {
            let r = phi_injectivity(&alg(name));
            assert!(r.injective, "{name}: {r:?}");
        }
    }

    #[test]
    fn zero_and_whole_ideals() {
        let m = alg("diag:2");
        let z = LeftIdeal::zero(m.clone());
        assert_eq!(kernel_bimodule(&z).dim(), 4);
        assert_eq!(z.dim().unwrap(), 0);
        let w = LeftIdeal::whole(m);
        assert_eq!(kernel_bimodule(&w).dim(), 0);
        assert_eq!(w.dim().unwrap(), 4);
        assert_eq!(z.relate(&w), Inclusion::Subset);
    }
}
