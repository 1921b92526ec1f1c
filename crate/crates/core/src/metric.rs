//! W*-metrics as finite filtrations, Markov semigroups on `M_d` and their
//! kernels, off-diagonal decay and propagation residuals.
//!
//! A filtration is stored on a grid `0 = r₀ < r₁ < … < r_m`; `V_r` for `r`
//! between grid points is the level at the largest threshold `≤ r`.

use std::collections::BTreeMap;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::Serialize;

use crate::group::GroupContext;
use crate::ideals::{annihilator_ideal, TensorElement};
use crate::linalg::{self, CMatrix};
use crate::opcore::Tolerance;
use crate::relations::{adjoint_relation, compose, is_quantum_relation, relation_from_subset_over, ClassicalRelation, QuantumRelation};
use crate::vnalg::FiniteVNAlgebra;
use crate::{Error, Result};

#[derive(Clone, Debug)]
pub struct WStarMetric {
    algebra: Arc<FiniteVNAlgebra>,
    thresholds: Vec<f64>,
    levels: Vec<QuantumRelation>,
}

impl WStarMetric {
    /// Only the grid shape is checked here; the axioms are `validate_metric`'s job.
    pub fn new(algebra: Arc<FiniteVNAlgebra>, thresholds: Vec<f64>, levels: Vec<QuantumRelation>) -> Result<Self> {
        if thresholds.is_empty() || thresholds.len() != levels.len() {
            return Err(Error::InvalidMetric("need one level per threshold".into()));
        }
        if thresholds[0] != 0.0 {
            return Err(Error::InvalidMetric("first threshold must be 0".into()));
        }
        if thresholds.windows(2).any(|w| !(w[1] > w[0]) || !w[1].is_finite()) {
            return Err(Error::InvalidMetric("thresholds must be finite and strictly increasing".into()));
        }
        for v in &levels {
            if v.d() != algebra.d() || !v.algebra().same_as(&algebra) {
                return Err(Error::AlgebraMismatch);
            }
        }
        Ok(WStarMetric { algebra, thresholds, levels })
    }

    pub fn algebra(&self) -> &Arc<FiniteVNAlgebra> {
        &self.algebra
    }

    pub fn thresholds(&self) -> &[f64] {
        &self.thresholds
    }

    pub fn levels(&self) -> &[QuantumRelation] {
        &self.levels
    }

    /// Index of the largest threshold `≤ r`.
    pub fn level_index(&self, r: f64) -> Option<usize> {
        if r.is_nan() || r < 0.0 {
            return None;
        }
        Some(self.thresholds.partition_point(|&t| t <= r) - 1)
    }

    pub fn level_at(&self, r: f64) -> Option<&QuantumRelation> {
        self.level_index(r).map(|i| &self.levels[i])
    }
}

/// First triple with `d(x,z) > d(x,y) + d(y,z)`, in lexicographic order.
pub fn find_triangle_violation(dist: &[Vec<f64>]) -> Option<(usize, usize, usize)> {
    let n = dist.len();
    for x in 0..n {
        for y in 0..n {
            for z in 0..n {
                let via = dist[x][y] + dist[y][z];
                if dist[x][z] > via + 1e-12 * via.abs().max(1.0) {
                    return Some((x, y, z));
                }
            }
        }
    }
    None
}

/// Checks a finite (pseudo)metric: square, symmetric, zero diagonal,
/// nonnegative, triangle inequality. `+∞` entries are allowed.
pub fn check_classical_metric(dist: &[Vec<f64>]) -> Result<()> {
    let n = dist.len();
    if n == 0 {
        return Err(Error::InvalidMetric("empty point set".into()));
    }
    crate::opcore::check_dim(n)?;
    for (x, row) in dist.iter().enumerate() {
        if row.len() != n {
            return Err(Error::InvalidMetric(format!("row {x} has length {}", row.len())));
        }
        for (y, &v) in row.iter().enumerate() {
            if v.is_nan() || v < 0.0 {
                return Err(Error::InvalidMetric(format!("d({x}, {y}) = {v} is not a nonnegative number")));
            }
            if v != dist[y][x] {
                return Err(Error::InvalidMetric(format!("d({x}, {y}) != d({y}, {x})")));
            }
        }
        if row[x] != 0.0 {
            return Err(Error::InvalidMetric(format!("d({x}, {x}) = {} is not 0", row[x])));
        }
    }
    if let Some((x, y, z)) = find_triangle_violation(dist) {
        return Err(Error::InvalidMetric(format!(
            "triangle inequality fails for ({x}, {y}, {z}): d({x},{z}) = {} > {} + {}",
            dist[x][z], dist[x][y], dist[y][z]
        )));
    }
    Ok(())
}

/// Band filtration `V_r = span{E_xy : d(x,y) ≤ r}` over `diag(n)`.
pub fn metric_from_classical(dist: &[Vec<f64>], tol: Tolerance) -> Result<WStarMetric> {
    check_classical_metric(dist)?;
    let n = dist.len();
    let alg = Arc::new(FiniteVNAlgebra::builtin(&format!("diag:{n}"), tol)?);
    let mut thresholds: Vec<f64> = dist.iter().flatten().copied().filter(|v| v.is_finite()).collect();
    thresholds.push(0.0);
    thresholds.sort_by(f64::total_cmp);
    thresholds.dedup();
    let mut levels = Vec::with_capacity(thresholds.len());
    for &r in &thresholds {
        let mut rel = ClassicalRelation::empty(n);
        for x in 0..n {
            for y in 0..n {
                if dist[x][y] <= r {
                    rel.insert(x, y);
                }
            }
        }
        levels.push(relation_from_subset_over(&alg, &rel)?);
    }
    WStarMetric::new(alg, thresholds, levels)
}

pub fn word_metric(ctx: &GroupContext) -> Result<WStarMetric> {
    metric_from_classical(&ctx.word_distances(), ctx.tol())
}

/// `inf{r : E_xy ∈ V_r}`, or `+∞` when no level contains it.
pub fn classical_distance(m: &WStarMetric, x: usize, y: usize) -> Result<f64> {
    if !m.algebra.is_diagonal() {
        return Err(Error::NotDiagonal);
    }
    let n = m.algebra.d();
    if x >= n || y >= n {
        return Err(Error::InvalidInput(format!("point ({x}, {y}) outside 0..{n}")));
    }
    let e = linalg::unit(n, x, y);
    for (r, v) in m.thresholds.iter().zip(&m.levels) {
        if v.space().contains(&e) {
            return Ok(*r);
        }
    }
    Ok(f64::INFINITY)
}

pub fn classical_distance_matrix(m: &WStarMetric) -> Result<Vec<Vec<f64>>> {
    let n = m.algebra.d();
    (0..n).map(|x| (0..n).map(|y| classical_distance(m, x, y)).collect()).collect()
}

/// Shortest-path closure of random edge weights on `n` points; about a third
/// of the weights are drawn from a small integer set so distances repeat.
pub fn random_classical_metric<R: Rng>(n: usize, rng: &mut R) -> Vec<Vec<f64>> {
    let mut d = vec![vec![0.0; n]; n];
    for x in 0..n {
        for y in x + 1..n {
            let w = if rng.random_range(0..3) == 0 {
                rng.random_range(1..4) as f64
            } else {
                (rng.random::<f64>() * 4.0 * 1024.0).round() / 1024.0 + 0.25
            };
            d[x][y] = w;
            d[y][x] = w;
        }
    }
    for k in 0..n {
        for x in 0..n {
            for y in 0..n {
                let via = d[x][k] + d[k][y];
                if via < d[x][y] {
                    d[x][y] = via;
                }
            }
        }
    }
    d
}

#[derive(Clone, Debug, Serialize)]
pub struct AxiomCheck {
    pub passed: bool,
    pub residual: f64,
    /// Level indices that exhibit the worst failure; empty when passed.
    pub witness: Vec<usize>,
}

impl AxiomCheck {
    fn new(residual: f64, thr: f64, witness: Vec<usize>) -> Self {
        let passed = residual <= thr;
        AxiomCheck { passed, residual, witness: if passed { Vec::new() } else { witness } }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct MetricReport {
    /// Every level is an `M'`-bimodule.
    pub relations: AxiomCheck,
    pub symmetry: AxiomCheck,
    /// `V_{r_i} V_{r_j} ⊂ V_{r_i + r_j}` on all grid pairs.
    pub subadditivity: AxiomCheck,
    /// Levels increase along the grid.
    pub filtration: AxiomCheck,
    /// `M' ⊂ V₀`.
    pub reflexive: bool,
    /// `V₀ = M'`.
    pub is_metric: bool,
}

impl MetricReport {
    pub fn passed(&self) -> bool {
        self.relations.passed && self.symmetry.passed && self.subadditivity.passed && self.filtration.passed
    }
}

pub fn validate_metric(m: &WStarMetric, tol: Tolerance) -> MetricReport {
    let d = m.algebra.d();
    let thr = tol.cutoff(1.0, d * d);
    let worst = |vals: Vec<(f64, Vec<usize>)>| {
        vals.into_iter().fold((0.0f64, Vec::new()), |acc, v| if v.0 > acc.0 { v } else { acc })
    };

    let (res, wit) = worst(
        m.levels.iter().enumerate().map(|(i, v)| (is_quantum_relation(&m.algebra, v.space()), vec![i])).collect(),
    );
    let relations = AxiomCheck::new(res, thr, wit);

    let (res, wit) = worst(
        m.levels
            .iter()
            .enumerate()
            .map(|(i, v)| (adjoint_relation(v).relate(v).gap, vec![i]))
            .collect(),
    );
    let symmetry = AxiomCheck::new(res, thr, wit);

    let (res, wit) = worst(
        m.levels
            .windows(2)
            .enumerate()
            .map(|(i, w)| (w[1].space().excess_of(w[0].space()), vec![i, i + 1]))
            .collect(),
    );
    let filtration = AxiomCheck::new(res, thr, wit);

    let mut sub = Vec::new();
    for i in 0..m.levels.len() {
        for j in 0..m.levels.len() {
            let k = m.level_index(m.thresholds[i] + m.thresholds[j]).expect("nonnegative sum");
            let target = &m.levels[k];
            if target.dim() == d * d {
                continue;
            }
            let excess = match compose(&m.levels[i], &m.levels[j]) {
                Ok(p) => target.space().excess_of(p.space()),
                Err(_) => f64::INFINITY,
            };
            sub.push((excess, vec![i, j, k]));
        }
    }
    let (res, wit) = worst(sub);
    let subadditivity = AxiomCheck::new(res, thr, wit);

    let v0 = m.levels[0].space();
    let mp = m.algebra.commutant_space();
    let reflexive = v0.excess_of(mp) <= thr;
    let is_metric = reflexive && mp.excess_of(v0) <= thr;
    MetricReport { relations, symmetry, subadditivity, filtration, reflexive, is_metric }
}

/// `S_t = exp(−tA)` for a generator `A` on `M_d`, stored as a `d² × d²`
/// matrix on column-major vectorisations.
#[derive(Clone, Debug)]
pub struct Semigroup {
    d: usize,
    generator: CMatrix,
    spectral: Option<(Vec<f64>, CMatrix)>,
}

impl Semigroup {
    pub fn new(d: usize, generator: CMatrix) -> Result<Self> {
        crate::opcore::check_dim(d)?;
        crate::opcore::check_matrix(&generator, d * d)?;
        let scale = linalg::fro(&generator).max(1.0);
        let spectral = if linalg::is_hermitian(&generator, 1e-13 * scale) {
            Some(linalg::hermitian_eigen(&generator))
        } else {
            None
        };
        Ok(Semigroup { d, generator, spectral })
    }

    /// Cayley-graph heat flow `A x = Σ_{s ∈ S ∪ S⁻¹} (x − λ_s x λ_s*)`. On the
    /// diagonal it is the graph Laplacian of the word metric.
    pub fn heat(ctx: &GroupContext) -> Self {
        let n = ctx.order();
        let mut steps: Vec<usize> = Vec::new();
        for &s in ctx.generators() {
            for g in [s, ctx.inv(s)] {
                if g != ctx.identity() && !steps.contains(&g) {
                    steps.push(g);
                }
            }
        }
        steps.sort_unstable();
        let mut a = linalg::identity(n * n) * linalg::c(steps.len() as f64);
        for g in steps {
            let l = ctx.lambda(g);
            a -= linalg::pair_action(l, &l.adjoint());
        }
        Semigroup::new(n, a).expect("group orders are checked on construction")
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn generator(&self) -> &CMatrix {
        &self.generator
    }

    pub fn is_self_adjoint(&self) -> bool {
        self.spectral.is_some()
    }

    pub fn at(&self, t: f64) -> CMatrix {
        match &self.spectral {
            Some((vals, vecs)) => {
                let mut scaled = vecs.clone();
                for (k, v) in vals.iter().enumerate() {
                    let f = linalg::c((-t * v).exp());
                    for z in scaled.column_mut(k).iter_mut() {
                        *z *= f;
                    }
                }
                scaled * vecs.adjoint()
            }
            None => (&self.generator * linalg::c(-t)).exp(),
        }
    }

    pub fn apply(&self, t: f64, x: &CMatrix) -> CMatrix {
        linalg::apply_action(&self.at(t), x)
    }
}

/// Choi matrix `Σ E_ij ⊗ S(E_ij)`.
pub fn choi_matrix(s: &CMatrix, d: usize) -> CMatrix {
    let mut c = linalg::zeros(d * d, d * d);
    for i in 0..d {
        for j in 0..d {
            let img = linalg::apply_action(s, &linalg::unit(d, i, j));
            linalg::set_block(&mut c, d, i, j, &img);
        }
    }
    c
}

#[derive(Clone, Debug, Serialize)]
pub struct MarkovEntry {
    pub t: f64,
    /// `‖S_t(1) − 1‖_F`
    pub unitality: f64,
    pub choi_min_eigenvalue: f64,
    /// `‖C − C^*‖_F` for the Choi matrix `C`.
    pub choi_hermiticity: f64,
    /// `‖S_t − S_t^*‖_F` with the adjoint taken for the trace inner product.
    pub trace_symmetry: f64,
    /// `‖τ∘S_t − τ‖` as a functional.
    pub trace_preservation: f64,
    pub passed: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct MarkovReport {
    pub threshold: f64,
    pub entries: Vec<MarkovEntry>,
    pub passed: bool,
}

/// Every residual must be `≤ threshold` and the Choi spectrum `≥ −threshold`.
pub fn validate_markov(s: &Semigroup, times: &[f64], threshold: f64) -> Result<MarkovReport> {
    if times.iter().any(|t| !(t.is_finite() && *t > 0.0)) {
        return Err(Error::InvalidInput("times must be positive".into()));
    }
    let d = s.d;
    let one = linalg::vec_of(&linalg::identity(d));
    let entries: Vec<MarkovEntry> = times
        .iter()
        .map(|&t| {
            let st = s.at(t);
            let unitality = (&st * &one - &one).norm();
            let choi = choi_matrix(&st, d);
            let choi_hermiticity = linalg::fro(&(&choi - choi.adjoint()));
            let (vals, _) = linalg::hermitian_eigen(&choi);
            let choi_min_eigenvalue = vals[0];
            let trace_symmetry = linalg::fro(&(&st - st.adjoint()));
            let trace_preservation = (st.adjoint() * &one - &one).norm();
            let passed = unitality <= threshold
                && choi_min_eigenvalue >= -threshold
                && choi_hermiticity <= threshold
                && trace_symmetry <= threshold
                && trace_preservation <= threshold;
            MarkovEntry { t, unitality, choi_min_eigenvalue, choi_hermiticity, trace_symmetry, trace_preservation, passed }
        })
        .collect();
    let passed = entries.iter().all(|e| e.passed);
    Ok(MarkovReport { threshold, entries, passed })
}

/// `k_t ∈ M ⊗ M_op` with `S_t(x) = (id ⊗ τ)(k_t (1 ⊗ x))` on `M`.
#[derive(Clone, Debug)]
pub struct KernelElement {
    pub t: f64,
    pub element: TensorElement,
    /// Worst `‖S_t(x) − slice(x)‖_F` over the orthonormal basis of `M`.
    pub residual: f64,
}

impl KernelElement {
    /// `(id ⊗ τ)(k (1 ⊗ x))`; with `R = realign(k)` this is `R vec(xᵀ)`.
    pub fn slice(&self, x: &CMatrix) -> CMatrix {
        let d = x.nrows();
        let r = linalg::realign(self.element.action(), d);
        let v = r * linalg::vec_of(&x.transpose());
        linalg::unvec(v.as_slice(), d)
    }

    /// `k(x, y)` for the diagonal algebra: coefficient of `E_xx ⊗ E_yy`.
    pub fn diagonal_entry(&self, x: usize, y: usize) -> linalg::C64 {
        let d = self.element.algebra().d();
        self.element.action()[(x + d * y, x + d * y)]
    }
}

pub fn extract_kernel(s: &Semigroup, algebra: &Arc<FiniteVNAlgebra>, t: f64) -> Result<KernelElement> {
    let d = s.d;
    if algebra.d() != d {
        return Err(Error::DimensionMismatch { expected: d, found: algebra.d() });
    }
    let st = s.at(t);
    let u = algebra.space().frame();
    // For R = U C Uᵀ the slice sends the basis element U e_j to
    // U C (Uᵀ K U) e_j, so C = Y W⁻¹ with Y = U^H S U, W = Uᵀ K U.
    let y = u.adjoint() * &st * u;
    let w = u.transpose() * linalg::transpose_permutation(d) * u;
    let f = linalg::svd(&w);
    let smax = f.s.first().copied().unwrap_or(0.0);
    let smin = f.s.last().copied().unwrap_or(0.0);
    if smin <= algebra.tol().cutoff(smax.max(1.0), w.nrows()) {
        return Err(Error::Singular(format!("transpose pairing on M has smallest singular value {smin:.3e}")));
    }
    let mut vs = f.v.clone();
    for (k, sv) in f.s.iter().enumerate() {
        let inv = linalg::c(1.0 / sv);
        for z in vs.column_mut(k).iter_mut() {
            *z *= inv;
        }
    }
    let coords = y * vs * f.u.adjoint();
    let action = crate::ideals::action_from_coordinates(algebra, &coords);
    let element = TensorElement::from_action(algebra.clone(), action)?;
    let mut k = KernelElement { t, element, residual: 0.0 };
    k.residual = algebra
        .space()
        .basis()
        .iter()
        .map(|x| linalg::fro(&(linalg::apply_action(&st, x) - k.slice(x))))
        .fold(0.0, f64::max);
    Ok(k)
}

#[derive(Clone, Debug, Serialize)]
pub struct ProfileRow {
    pub t: f64,
    pub r: f64,
    /// `‖k_t p_r‖` as an operator on the Hilbert-Schmidt space.
    pub op_norm: f64,
    pub hs_norm: f64,
    /// `max_{d(x,y) > r} |k_t(x, y)|`, diagonal algebras only.
    pub sup_norm: Option<f64>,
}

/// Off-diagonal restriction `k_t p_r`, with `p_r` the support projection of
/// the ideal annihilating `V_r`.
pub fn offdiagonal_profile(
    s: &Semigroup,
    metric: &WStarMetric,
    times: &[f64],
    radii: &[f64],
) -> Result<Vec<ProfileRow>> {
    let alg = metric.algebra();
    if radii.iter().any(|r| !(r.is_finite() && *r >= 0.0)) {
        return Err(Error::InvalidInput("radii must be finite and nonnegative".into()));
    }
    let mut supports: BTreeMap<usize, CMatrix> = BTreeMap::new();
    for &r in radii {
        let i = metric.level_index(r).expect("radius checked");
        supports.entry(i).or_insert_with(|| annihilator_ideal(&metric.levels[i]).support().clone());
    }
    let dist = if alg.is_diagonal() { Some(classical_distance_matrix(metric)?) } else { None };
    let n = alg.d();
    let mut rows = Vec::with_capacity(times.len() * radii.len());
    for &t in times {
        let k = extract_kernel(s, alg, t)?;
        for &r in radii {
            let p = &supports[&metric.level_index(r).expect("radius checked")];
            let kp = k.element.action() * p;
            let sup_norm = dist.as_ref().map(|dm| {
                let mut m = 0.0f64;
                for x in 0..n {
                    for y in 0..n {
                        if dm[x][y] > r {
                            m = m.max(k.diagonal_entry(x, y).norm());
                        }
                    }
                }
                m
            });
            rows.push(ProfileRow { t, r, op_norm: linalg::op_norm(&kp), hs_norm: linalg::fro(&kp), sup_norm });
        }
    }
    Ok(rows)
}

#[derive(Clone, Debug, Serialize)]
pub struct GaussianFit {
    pub beta: f64,
    pub n_eff: f64,
    pub intercept: f64,
    /// Root-mean-square residual of the log fit.
    pub residual: f64,
    pub points: usize,
}

/// Least squares for `log v ≈ −β r²/t − (n_eff/2) log t + c` over the
/// positive entries of `(t, r, v)`.
pub fn gaussian_fit(samples: &[(f64, f64, f64)]) -> Result<GaussianFit> {
    let pts: Vec<_> = samples.iter().copied().filter(|&(t, _, v)| t > 0.0 && v > 0.0 && v.is_finite()).collect();
    if pts.len() < 3 {
        return Err(Error::InvalidInput(format!("gaussian fit needs 3 positive samples, got {}", pts.len())));
    }
    let a = DMatrix::from_fn(pts.len(), 3, |i, j| {
        let (t, r, _) = pts[i];
        match j {
            0 => -r * r / t,
            1 => -0.5 * t.ln(),
            _ => 1.0,
        }
    });
    let b = DVector::from_iterator(pts.len(), pts.iter().map(|p| p.2.ln()));
    let gram = a.transpose() * &a;
    let eig = gram.clone().symmetric_eigen();
    let (lo, hi) = eig.eigenvalues.iter().fold((f64::INFINITY, 0.0f64), |(l, h), &v| (l.min(v), h.max(v)));
    if lo <= 1e-12 * hi {
        return Err(Error::InvalidInput("samples do not determine the fit (need several t and r values)".into()));
    }
    let x = gram.lu().solve(&(a.transpose() * &b)).ok_or_else(|| Error::Singular("normal equations".into()))?;
    let resid = (&a * &x - &b).norm() / (pts.len() as f64).sqrt();
    Ok(GaussianFit { beta: x[0], n_eff: x[1], intercept: x[2], residual: resid, points: pts.len() })
}

#[derive(Clone, Debug, Serialize)]
pub struct PropagationReport {
    pub t: f64,
    /// Grid threshold whose level stands in for `V_t`.
    pub level_threshold: f64,
    /// `dist(W, V_t) / ‖W‖_HS` for `W = cos(t√A)` on `L²(M) = ℂ^n`.
    pub residual: f64,
    pub norm: f64,
}

/// Diagonal algebras only: there `L²(M, τ)` is `ℂ^n` with `E_xx ↦ e_x`, and
/// `cos(t√A)` restricted to `M` is an `n × n` matrix to test against `V_t`.
pub fn propagation_residual(s: &Semigroup, metric: &WStarMetric, t: f64) -> Result<PropagationReport> {
    let alg = metric.algebra();
    if !alg.is_diagonal() {
        return Err(Error::NotDiagonal);
    }
    let n = alg.d();
    if s.d != n {
        return Err(Error::DimensionMismatch { expected: n, found: s.d });
    }
    if !(t.is_finite() && t >= 0.0) {
        return Err(Error::InvalidInput(format!("time {t} must be finite and nonnegative")));
    }
    let a = &s.generator;
    let thr = alg.tol().cutoff(linalg::fro(a).max(1.0), n * n);
    let (vals, _) = match &s.spectral {
        Some(sp) => sp.clone(),
        None => return Err(Error::InvalidInput("generator is not self-adjoint".into())),
    };
    if vals[0] < -thr {
        return Err(Error::InvalidInput(format!("generator is not positive (eigenvalue {:.3e})", vals[0])));
    }
    let mut u = linalg::zeros(n * n, n);
    for x in 0..n {
        u[(x + n * x, x)] = linalg::ONE;
    }
    let am = u.adjoint() * a * &u;
    let w = linalg::hermitian_fn(&am, |l| (t * l.max(0.0).sqrt()).cos());
    let level = metric.level_index(t).expect("t checked");
    let norm = linalg::fro(&w);
    let residual = if norm == 0.0 { 0.0 } else { metric.levels[level].space().distance(&w) / norm };
    Ok(PropagationReport { t, level_threshold: metric.thresholds[level], residual, norm })
}
