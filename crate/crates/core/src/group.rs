//! Finite groups acting on `ℓ²(G)`: the transference `μ ↦ Θ_μ` between left
//! ideals of `ℂ[G]` and invariant quantum relations over `LG`.

use std::collections::VecDeque;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::ideals::TensorElement;
use crate::linalg::{self, CMatrix, CVector};
use crate::opcore::{joint_kernel, range_projection, OperatorSubspace, Tolerance};
use crate::relations::{bimodule_closure, ClassicalRelation, QuantumRelation};
use crate::vnalg::FiniteVNAlgebra;
use crate::{Error, Result};

#[derive(Clone, Debug)]
pub struct GroupContext {
    n: usize,
    /// `table[g * n + h] = gh`.
    table: Vec<usize>,
    identity: usize,
    inverse: Vec<usize>,
    generators: Vec<usize>,
    lambda: Vec<CMatrix>,
    rho: Vec<CMatrix>,
    lg: Arc<FiniteVNAlgebra>,
    rg: Arc<FiniteVNAlgebra>,
    name: Option<String>,
}

impl GroupContext {
    /// Validates closure, identity, inverses and associativity.
    pub fn from_table(table: Vec<Vec<usize>>, tol: Tolerance) -> Result<Self> {
        let n = table.len();
        crate::opcore::check_dim(n)?;
        if table.iter().any(|row| row.len() != n || row.iter().any(|&g| g >= n)) {
            return Err(Error::InvalidInput("table must be n × n with entries < n".into()));
        }
        let flat: Vec<usize> = table.concat();
        let mul = |g: usize, h: usize| flat[g * n + h];
        let identity = (0..n)
            .find(|&e| (0..n).all(|g| mul(e, g) == g && mul(g, e) == g))
            .ok_or_else(|| Error::InvalidInput("no identity element".into()))?;
        let mut inverse = vec![0; n];
        for g in 0..n {
            inverse[g] = (0..n)
                .find(|&h| mul(g, h) == identity && mul(h, g) == identity)
                .ok_or_else(|| Error::InvalidInput(format!("element {g} has no inverse")))?;
        }
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    if mul(mul(a, b), c) != mul(a, mul(b, c)) {
                        return Err(Error::InvalidInput(format!("not associative at ({a},{b},{c})")));
                    }
                }
            }
        }
        let mut lambda = Vec::with_capacity(n);
        let mut rho = Vec::with_capacity(n);
        for g in 0..n {
            let mut l = linalg::zeros(n, n);
            let mut r = linalg::zeros(n, n);
            for h in 0..n {
                // λ_g δ_h = δ_{gh},  ρ_g δ_h = δ_{h g⁻¹}
                l[(mul(g, h), h)] = linalg::ONE;
                r[(mul(h, inverse[g]), h)] = linalg::ONE;
            }
            lambda.push(l);
            rho.push(r);
        }
        let lg = Arc::new(FiniteVNAlgebra::from_generators(n, &lambda, tol)?);
        let rg = Arc::new(FiniteVNAlgebra::from_generators(n, &rho, tol)?);
        let generators = (0..n).filter(|&g| g != identity).collect();
        Ok(GroupContext { n, table: flat, identity, inverse, generators, lambda, rho, lg, rg, name: None })
    }

    /// `cyclic:n`, `klein4` or `sym:3`.
    pub fn builtin(name: &str, tol: Tolerance) -> Result<Self> {
        let bad = || Error::UnknownBuiltin(name.to_string());
        let (table, gens): (Vec<Vec<usize>>, Vec<usize>) = match name.split_once(':') {
            Some(("cyclic" | "cycle", n)) => {
                let n: usize = n.parse().map_err(|_| bad())?;
                if n == 0 {
                    return Err(bad());
                }
                let t = (0..n).map(|g| (0..n).map(|h| (g + h) % n).collect()).collect();
                let gens = if n <= 2 { vec![n - 1] } else { vec![1, n - 1] };
                (t, if n == 1 { vec![] } else { gens })
            }
            Some(("sym", "3")) => {
                let perms = permutations3();
                let idx = |p: [usize; 3]| perms.iter().position(|q| *q == p).unwrap();
                let t = perms
                    .iter()
                    .map(|a| perms.iter().map(|b| idx([a[b[0]], a[b[1]], a[b[2]]])).collect())
                    .collect();
                (t, vec![idx([1, 0, 2]), idx([0, 2, 1])])
            }
            None if name == "klein4" => {
                let t = (0..4).map(|g| (0..4).map(|h| g ^ h).collect()).collect();
                (t, vec![1, 2])
            }
            _ => return Err(bad()),
        };
        let mut ctx = Self::from_table(table, tol)?;
        ctx.generators = gens;
        ctx.name = Some(name.to_string());
        Ok(ctx)
    }

    pub fn name(&self) -> Option<&str> {
        self.name.as_deref()
    }

    pub fn order(&self) -> usize {
        self.n
    }

    pub fn mul(&self, g: usize, h: usize) -> usize {
        self.table[g * self.n + h]
    }

    pub fn inv(&self, g: usize) -> usize {
        self.inverse[g]
    }

    pub fn identity(&self) -> usize {
        self.identity
    }

    pub fn table(&self) -> Vec<Vec<usize>> {
        self.table.chunks(self.n).map(|r| r.to_vec()).collect()
    }

    /// Symmetric generating set used for word metrics and heat generators.
    pub fn generators(&self) -> &[usize] {
        &self.generators
    }

    pub fn lambda(&self, g: usize) -> &CMatrix {
        &self.lambda[g]
    }

    pub fn rho(&self, g: usize) -> &CMatrix {
        &self.rho[g]
    }

    pub fn lg(&self) -> &Arc<FiniteVNAlgebra> {
        &self.lg
    }

    pub fn rg(&self) -> &Arc<FiniteVNAlgebra> {
        &self.rg
    }

    pub fn tol(&self) -> Tolerance {
        self.lg.tol()
    }

    /// `d(x, y)` = word length of `y x⁻¹` in the generating set.
    pub fn word_distances(&self) -> Vec<Vec<f64>> {
        let n = self.n;
        let mut len = vec![f64::INFINITY; n];
        len[self.identity] = 0.0;
        let mut queue = VecDeque::from([self.identity]);
        while let Some(g) = queue.pop_front() {
            for &s in &self.generators {
                for h in [self.mul(s, g), self.mul(self.inv(s), g)] {
                    if len[h].is_infinite() {
                        len[h] = len[g] + 1.0;
                        queue.push_back(h);
                    }
                }
            }
        }
        (0..n).map(|x| (0..n).map(|y| len[self.mul(y, self.inv(x))]).collect()).collect()
    }
}

fn permutations3() -> Vec<[usize; 3]> {
    vec![[0, 1, 2], [1, 0, 2], [0, 2, 1], [2, 1, 0], [1, 2, 0], [2, 0, 1]]
}

/// Coefficient vector in `ℂ[G]`.
#[derive(Clone, Debug, PartialEq)]
pub struct GroupAlgebraElement {
    pub coeffs: CVector,
}

impl GroupAlgebraElement {
    pub fn new(coeffs: CVector) -> Self {
        GroupAlgebraElement { coeffs }
    }

    pub fn delta(n: usize, g: usize) -> Self {
        let mut c = CVector::zeros(n);
        c[g] = linalg::ONE;
        GroupAlgebraElement { coeffs: c }
    }

    pub fn random<R: Rng>(n: usize, rng: &mut R) -> Self {
        GroupAlgebraElement { coeffs: CVector::from_fn(n, |_, _| linalg::random_complex(rng)) }
    }

    pub fn norm(&self) -> f64 {
        self.coeffs.norm()
    }
}

/// `(μ ∗ ν)_g = Σ_h μ_h ν_{h⁻¹g}`.
pub fn convolve(ctx: &GroupContext, mu: &GroupAlgebraElement, nu: &GroupAlgebraElement) -> GroupAlgebraElement {
    let n = ctx.n;
    let mut out = CVector::zeros(n);
    for h in 0..n {
        for k in 0..n {
            out[ctx.mul(h, k)] += mu.coeffs[h] * nu.coeffs[k];
        }
    }
    GroupAlgebraElement { coeffs: out }
}

/// `λ(μ) = Σ μ_g λ_g`.
pub fn left_regular(ctx: &GroupContext, mu: &GroupAlgebraElement) -> CMatrix {
    let mut m = linalg::zeros(ctx.n, ctx.n);
    for g in 0..ctx.n {
        m += &ctx.lambda[g] * mu.coeffs[g];
    }
    m
}

/// `Θ_μ = Σ μ_g λ_g ⊗ λ_{g⁻¹}`, so `Θ_μ(T) = Σ μ_g λ_g T λ_g*`.
pub fn theta(ctx: &GroupContext, mu: &GroupAlgebraElement) -> TensorElement {
    let pairs = (0..ctx.n)
        .map(|g| (&ctx.lambda[g] * mu.coeffs[g], ctx.lambda[ctx.inv(g)].clone()))
        .collect();
    TensorElement::from_pairs(ctx.lg.clone(), pairs).expect("λ_g lies in LG")
}

/// `‖Θ_{μ∗ν} − Θ_μ Θ_ν‖_HS` on the actions.
pub fn theta_multiplicativity_residual(
    ctx: &GroupContext,
    mu: &GroupAlgebraElement,
    nu: &GroupAlgebraElement,
) -> f64 {
    let lhs = theta(ctx, &convolve(ctx, mu, nu));
    let rhs = theta(ctx, mu).action() * theta(ctx, nu).action();
    linalg::fro(&(lhs.action() - rhs))
}

fn diagonal_subspace(n: usize, tol: Tolerance) -> OperatorSubspace {
    let units: Vec<CMatrix> = (0..n).map(|x| linalg::unit(n, x, x)).collect();
    OperatorSubspace::orthonormalize(n, &units, tol).expect("n checked by context")
}

/// Operators in `V` commuting with the coaction: here the diagonal ones.
pub fn equivariant_part(ctx: &GroupContext, space: &OperatorSubspace) -> OperatorSubspace {
    space.intersect(&diagonal_subspace(ctx.n, ctx.tol()))
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct InvarianceCheck {
    pub invariant: bool,
    /// Gap between `V` and the `RG`-bimodule generated by its equivariant part.
    pub residual: f64,
}

/// `V` is invariant when it is generated, as an `RG`-bimodule, by its
/// equivariant part. Accepts any subspace, not only bimodules.
pub fn is_invariant(ctx: &GroupContext, space: &OperatorSubspace) -> InvarianceCheck {
    let eq = equivariant_part(ctx, space);
    let generated = bimodule_closure(&ctx.lg, &eq.basis());
    let residual = generated.relate(space).gap;
    InvarianceCheck { invariant: residual <= ctx.tol().rel, residual }
}

/// Left ideal of `ℂ[G]` held as an orthonormal frame in `ℂⁿ`.
#[derive(Clone, Debug)]
pub struct GroupIdeal {
    frame: CMatrix,
}

impl GroupIdeal {
    pub fn zero(n: usize) -> Self {
        GroupIdeal { frame: linalg::zeros(n, 0) }
    }

    pub fn whole(n: usize) -> Self {
        GroupIdeal { frame: linalg::identity(n) }
    }

    /// `{μ : Σ μ_g = 0}`.
    pub fn augmentation(ctx: &GroupContext) -> Self {
        let n = ctx.n;
        let ones = CMatrix::from_element(1, n, linalg::ONE);
        GroupIdeal { frame: linalg::null_space(&ones, ctx.tol()) }
    }

    /// `span{δ_g ∗ μᵢ}`, the left ideal generated by the `μᵢ`.
    pub fn generated_by(ctx: &GroupContext, elems: &[GroupAlgebraElement]) -> Self {
        let n = ctx.n;
        let mut cols = linalg::zeros(n, n * elems.len());
        let mut floor: f64 = 0.0;
        for (i, mu) in elems.iter().enumerate() {
            floor = floor.max(mu.norm());
            for g in 0..n {
                let shifted = convolve(ctx, &GroupAlgebraElement::delta(n, g), mu);
                cols.set_column(i * n + g, &shifted.coeffs);
            }
        }
        GroupIdeal { frame: linalg::column_space_scaled(&cols, floor, ctx.tol()) }
    }

    /// The span of `elems`, rejected unless closed under left translation.
    pub fn from_elements(ctx: &GroupContext, elems: &[GroupAlgebraElement]) -> Result<Self> {
        let n = ctx.n;
        for e in elems {
            if e.coeffs.len() != n {
                return Err(Error::DimensionMismatch { expected: n, found: e.coeffs.len() });
            }
        }
        let mut cols = linalg::zeros(n, elems.len());
        let mut floor: f64 = 0.0;
        for (i, e) in elems.iter().enumerate() {
            cols.set_column(i, &e.coeffs);
            floor = floor.max(e.norm());
        }
        let ideal = GroupIdeal { frame: linalg::column_space_scaled(&cols, floor, ctx.tol()) };
        let residual = ideal.left_ideal_residual(ctx);
        if residual > ctx.tol().cutoff(1.0, n) {
            return Err(Error::NotLeftIdeal { residual });
        }
        Ok(ideal)
    }

    pub fn dim(&self) -> usize {
        self.frame.ncols()
    }

    pub fn frame(&self) -> &CMatrix {
        &self.frame
    }

    pub fn basis(&self) -> Vec<GroupAlgebraElement> {
        (0..self.dim()).map(|k| GroupAlgebraElement::new(self.frame.column(k).into_owned())).collect()
    }

    pub fn distance(&self, mu: &GroupAlgebraElement) -> f64 {
        (&mu.coeffs - &self.frame * (self.frame.adjoint() * &mu.coeffs)).norm()
    }

    /// Largest distance from `δ_g ∗ μ` to the ideal over `g` and basis `μ`.
    pub fn left_ideal_residual(&self, ctx: &GroupContext) -> f64 {
        let n = ctx.n;
        let mut worst: f64 = 0.0;
        for mu in self.basis() {
            for g in 0..n {
                worst = worst.max(self.distance(&convolve(ctx, &GroupAlgebraElement::delta(n, g), &mu)));
            }
        }
        worst
    }

    pub fn gap(&self, other: &GroupIdeal) -> f64 {
        let p = &self.frame * self.frame.adjoint() - &other.frame * other.frame.adjoint();
        linalg::op_norm(&p)
    }
}

/// `Q_V = {μ : Θ_μ|_V = 0}`, defined for invariant `V`.
pub fn ideal_from_relation(ctx: &GroupContext, space: &OperatorSubspace) -> Result<GroupIdeal> {
    let check = is_invariant(ctx, space);
    if !check.invariant {
        return Err(Error::NotInvariant { residual: check.residual });
    }
    let n = ctx.n;
    let basis = space.basis();
    let mut system = linalg::zeros(n * n * basis.len(), n);
    for g in 0..n {
        let (l, li) = (&ctx.lambda[g], &ctx.lambda[ctx.inv(g)]);
        for (b, v) in basis.iter().enumerate() {
            let img = l * v * li;
            system.view_mut((b * n * n, g), (n * n, 1)).copy_from_slice(img.as_slice());
        }
    }
    Ok(GroupIdeal { frame: linalg::null_space(&system, ctx.tol()) })
}

/// `V_Q = {T : Θ_μ(T) = 0 for all μ ∈ Q}`.
pub fn relation_from_ideal(ctx: &GroupContext, q: &GroupIdeal) -> Result<QuantumRelation> {
    let residual = q.left_ideal_residual(ctx);
    if residual > ctx.tol().cutoff(1.0, ctx.n) {
        return Err(Error::NotLeftIdeal { residual });
    }
    let maps: Vec<CMatrix> = q.basis().iter().map(|mu| theta(ctx, mu).action().clone()).collect();
    let space = joint_kernel(ctx.n, &maps, ctx.tol())?;
    QuantumRelation::new(ctx.lg.clone(), space)
}

/// `ℂ[G] ∗ p` with `p = λ⁻¹(P)` for a spectral projection `P` of a random
/// Hermitian element of `LG`.
pub fn random_left_ideal<R: Rng>(ctx: &GroupContext, rng: &mut R) -> GroupIdeal {
    let h = ctx.lg.random_hermitian(rng);
    let (vals, _) = linalg::hermitian_eigen(&h);
    let (lo, hi) = (vals[0], vals[vals.len() - 1]);
    let cut = lo + rng.random_range(0.1..0.9) * (hi - lo);
    let p = range_projection(&linalg::hermitian_fn(&h, |v| (v - cut).max(0.0)), ctx.tol());
    // λ(μ) δ_e = Σ μ_g δ_g.
    let mu = GroupAlgebraElement::new(p.column(ctx.identity).into_owned());
    GroupIdeal::generated_by(ctx, &[mu])
}

/// `{0}`, `ℂ[G]`, the augmentation ideal, then random `ℂ[G] ∗ p`.
pub fn sample_left_ideals(ctx: &GroupContext, count: usize, seed: u64) -> Vec<GroupIdeal> {
    let n = ctx.n;
    let mut out = vec![GroupIdeal::zero(n), GroupIdeal::whole(n), GroupIdeal::augmentation(ctx)];
    out.truncate(count);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    while out.len() < count {
        out.push(random_left_ideal(ctx, &mut rng));
    }
    out
}

/// Invariance of a relation over `ℓ^∞(G)` under translation: `V` must be
/// generated, as a bimodule over the diagonal, by its elements commuting with
/// every `λ_g`.
pub fn translation_invariance(ctx: &GroupContext, v: &QuantumRelation) -> Result<InvarianceCheck> {
    if !v.algebra().is_diagonal() || v.d() != ctx.n {
        return Err(Error::NotDiagonal);
    }
    let commuting = v.space().intersect(ctx.rg.space());
    let generated = bimodule_closure(v.algebra(), &commuting.basis());
    let residual = generated.relate(v.space()).gap;
    Ok(InvarianceCheck { invariant: residual <= ctx.tol().rel, residual })
}

/// `(x, y) ∈ R ⟺ (gx, gy) ∈ R` for all `g`.
pub fn classically_invariant(ctx: &GroupContext, r: &ClassicalRelation) -> bool {
    r.pairs().iter().all(|&(x, y)| (0..ctx.n).all(|g| r.contains(ctx.mul(g, x), ctx.mul(g, y))))
}
