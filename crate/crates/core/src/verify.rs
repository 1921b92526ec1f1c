//! Seeded property suites. Every suite is deterministic in its seed; the
//! summary carries no timings so reruns are byte-identical.

use std::collections::BTreeMap;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::group::{self, GroupAlgebraElement, GroupContext, GroupIdeal};
use crate::ideals::{annihilator_ideal, kernel_bimodule, random_tensor_action, random_tensor_projection, LeftIdeal};
use crate::intrinsic::{compare_ideal_and_module, sample_projection_pairs};
use crate::linalg::{self, CMatrix};
use crate::metric::{self, Semigroup};
use crate::opcore::Tolerance;
use crate::relations::{generate_relation, relation_from_subset, subset_from_relation, ClassicalRelation, QuantumRelation};
use crate::vnalg::FiniteVNAlgebra;
use crate::Result;

pub const CLASSICAL_GAP: f64 = 1e-12;
pub const DUALITY_GAP: f64 = 1e-9;
pub const THETA_RESIDUAL: f64 = 1e-12;
pub const MARKOV_THRESHOLD: f64 = 1e-10;
pub const KERNEL_RESIDUAL: f64 = 1e-9;
pub const HEAT_TIMES: [f64; 4] = [0.1, 0.5, 1.0, 2.0];
pub const DUALITY_GROUPS: [&str; 5] = ["cyclic:2", "cyclic:3", "cyclic:4", "klein4", "sym:3"];

// Failure lists are capped so a broken build still yields a readable report.
const MAX_LISTED: usize = 20;

#[derive(Clone, Debug, Serialize)]
pub struct SuiteResult {
    pub name: String,
    pub cases: usize,
    pub failed: usize,
    /// Largest residual seen, compared against `threshold`.
    pub worst: f64,
    pub threshold: f64,
    pub failures: Vec<String>,
    /// Report-only quantities, keyed by name.
    pub notes: BTreeMap<String, f64>,
}

impl SuiteResult {
    fn new(name: &str, threshold: f64) -> Self {
        SuiteResult {
            name: name.into(),
            cases: 0,
            failed: 0,
            worst: 0.0,
            threshold,
            failures: Vec::new(),
            notes: BTreeMap::new(),
        }
    }

    /// Records one case; `value` is compared against the suite threshold.
    fn check(&mut self, value: f64, label: impl FnOnce() -> String) {
        self.cases += 1;
        if value.is_nan() || value > self.worst {
            self.worst = if value.is_nan() { f64::INFINITY } else { value };
        }
        if !(value <= self.threshold) {
            self.fail(format!("{} (value {value:.3e})", label()));
        }
    }

    fn check_bool(&mut self, ok: bool, label: impl FnOnce() -> String) {
        self.cases += 1;
        if !ok {
            self.fail(label());
        }
    }

    fn fail(&mut self, msg: String) {
        self.failed += 1;
        if self.failures.len() < MAX_LISTED {
            self.failures.push(msg);
        }
    }

    fn error(&mut self, label: String, e: crate::Error) {
        self.cases += 1;
        self.fail(format!("{label}: {e}"));
    }

    pub fn passed(&self) -> bool {
        self.failed == 0
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct VerifySummary {
    pub schema: u32,
    pub seed: u64,
    pub tol: f64,
    pub amp_level: Option<usize>,
    pub suites: Vec<SuiteResult>,
    pub cases: usize,
    pub failed: usize,
    pub passed: bool,
}

#[derive(Clone, Copy, Debug)]
pub struct VerifyConfig {
    pub seed: u64,
    pub tol: Tolerance,
    /// Amplification level for the intrinsic suite; `None` uses `k = d`.
    pub amp_level: Option<usize>,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        VerifyConfig { seed: 0, tol: Tolerance::default(), amp_level: None }
    }
}

fn instance_seed(seed: u64, suite: u64, i: usize) -> u64 {
    seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ (suite << 32) ^ i as u64
}

/// Every relation on 2 and 3 points: the support of `J_{V_R}` must be the
/// Schur projection onto the complement of `R`, and `R` must come back.
pub fn classical_exhaustive(tol: Tolerance) -> SuiteResult {
    let mut out = SuiteResult::new("classical_exhaustive", CLASSICAL_GAP);
    for n in [2usize, 3] {
        for bits in 0..(1u64 << (n * n)) {
            let r = ClassicalRelation::from_bits(n, bits);
            let v = match relation_from_subset(&r, tol) {
                Ok(v) => v,
                Err(e) => {
                    out.error(format!("n={n} bits={bits}"), e);
                    continue;
                }
            };
            let p = annihilator_ideal(&v).support().clone();
            let mut mask = linalg::identity(n * n);
            for (x, y) in r.pairs() {
                mask[(x + n * y, x + n * y)] = linalg::ZERO;
            }
            out.check(linalg::op_norm(&(p - mask)), || format!("n={n} bits={bits}: support is not the Schur mask"));
            let back = subset_from_relation(&v).map(|b| b == r).unwrap_or(false);
            out.check_bool(back, || format!("n={n} bits={bits}: subset roundtrip"));
        }
    }
    out
}

const RANDOM_ALGEBRAS: [&str; 14] = [
    "full:1", "full:2", "full:3", "diag:2", "diag:3", "diag:4", "diag:6", "block:1x1,2x1", "block:2x1,1x2",
    "block:1x2,1x1", "block:2x2", "block:1x1,1x1,2x1", "block:3x2", "block:2x1,1x1,1x1,1x1",
];

fn random_algebra<R: Rng>(rng: &mut R, names: &[&str], tol: Tolerance) -> Result<Arc<FiniteVNAlgebra>> {
    let name = names[rng.random_range(0..names.len())];
    Ok(Arc::new(FiniteVNAlgebra::builtin(name, tol)?))
}

fn random_bimodule<R: Rng>(rng: &mut R, alg: &Arc<FiniteVNAlgebra>) -> Result<QuantumRelation> {
    let d = alg.d();
    let count = rng.random_range(1..=2);
    let gens: Vec<CMatrix> = (0..count)
        .map(|_| {
            // Sparse generators keep the bimodules away from the whole space.
            let mut g = linalg::zeros(d, d);
            for _ in 0..rng.random_range(1..=2) {
                let (i, j) = (rng.random_range(0..d), rng.random_range(0..d));
                g[(i, j)] = linalg::random_complex(rng);
            }
            g
        })
        .collect();
    generate_relation(alg, &gens)
}

/// `V_{J_V} = V` for random bimodules and `J_{V_J} = J` for random principal
/// ideals `𝒜 a p`.
pub fn double_annihilator(count: usize, seed: u64, tol: Tolerance) -> SuiteResult {
    let mut out = SuiteResult::new("double_annihilator", DUALITY_GAP);
    for i in 0..count {
        let s = instance_seed(seed, 2, i);
        let mut rng = ChaCha8Rng::seed_from_u64(s);
        let run = |rng: &mut ChaCha8Rng| -> Result<(String, f64, f64)> {
            let alg = random_algebra(rng, &RANDOM_ALGEBRAS, tol)?;
            let v = random_bimodule(rng, &alg)?;
            let vv = kernel_bimodule(&annihilator_ideal(&v));
            let gap_v = v.relate(&vv).gap;
            let a = random_tensor_action(&alg, rng);
            let p = random_tensor_projection(&alg, rng);
            let j = LeftIdeal::generated_by(alg.clone(), vec![a * p])?;
            let jj = annihilator_ideal(&kernel_bimodule(&j));
            Ok((alg.name().unwrap_or("?").to_string(), gap_v, j.gap(&jj)))
        };
        match run(&mut rng) {
            Ok((name, gv, gj)) => {
                out.check(gv, || format!("seed {s} ({name}): V_(J_V) != V"));
                out.check(gj, || format!("seed {s} ({name}): J_(V_J) != J"));
            }
            Err(e) => out.error(format!("seed {s}"), e),
        }
    }
    out
}

const INTRINSIC_ALGEBRAS: [&str; 6] = ["diag:2", "diag:3", "full:2", "block:1x1,1x1", "block:1x1,1x2", "block:1x2"];

/// Ideal and module descriptions agree on every sampled amplified pair, and
/// the module relation satisfies the intrinsic axioms.
pub fn intrinsic_consistency(
    instances: usize,
    pairs: usize,
    seed: u64,
    tol: Tolerance,
    amp_level: Option<usize>,
) -> SuiteResult {
    let mut out = SuiteResult::new("intrinsic_consistency", 0.0);
    let mut min_samples = usize::MAX;
    for i in 0..instances {
        let s = instance_seed(seed, 3, i);
        let mut rng = ChaCha8Rng::seed_from_u64(s);
        let run = |rng: &mut ChaCha8Rng| -> Result<crate::intrinsic::IntrinsicReport> {
            let alg = random_algebra(rng, &INTRINSIC_ALGEBRAS, tol)?;
            let v = random_bimodule(rng, &alg)?;
            let j = annihilator_ideal(&v);
            let k = amp_level.unwrap_or(alg.d()).max(1);
            let samples = sample_projection_pairs(&alg, k, pairs, s);
            compare_ideal_and_module(&v, &j, &samples, s)
        };
        match run(&mut rng) {
            Ok(rep) => {
                min_samples = min_samples.min(rep.samples);
                let n = rep.violations.len() as f64;
                out.check(n, || {
                    let first = &rep.violations[0];
                    format!("seed {s}: {} violations, first {} at sample {}: {}", n, first.axiom, first.sample, first.detail)
                });
            }
            Err(e) => out.error(format!("seed {s}"), e),
        }
    }
    if min_samples != usize::MAX {
        out.notes.insert("min_pairs_per_instance".into(), min_samples as f64);
    }
    out
}

/// `Q = Q_{V_Q}` and `V_Q = V_{Q_{V_Q}}` on sampled left ideals, the worked
/// `ℤ₂` example, and multiplicativity of `Θ`.
pub fn group_duality(per_group: usize, seed: u64, tol: Tolerance) -> SuiteResult {
    let mut out = SuiteResult::new("group_duality", DUALITY_GAP);
    for (gi, name) in DUALITY_GROUPS.iter().enumerate() {
        let ctx = match GroupContext::builtin(name, tol) {
            Ok(c) => c,
            Err(e) => {
                out.error(name.to_string(), e);
                continue;
            }
        };
        let s = instance_seed(seed, 4, gi);
        for (qi, q) in group::sample_left_ideals(&ctx, per_group, s).iter().enumerate() {
            let run = || -> Result<(f64, f64)> {
                let v = group::relation_from_ideal(&ctx, q)?;
                let q2 = group::ideal_from_relation(&ctx, v.space())?;
                let v2 = group::relation_from_ideal(&ctx, &q2)?;
                Ok((q.gap(&q2), v.relate(&v2).gap))
            };
            match run() {
                Ok((gq, gv)) => {
                    out.check(gq, || format!("{name} seed {s} ideal {qi}: Q_(V_Q) != Q"));
                    out.check(gv, || format!("{name} seed {s} ideal {qi}: V_(Q_V) != V"));
                }
                Err(e) => out.error(format!("{name} seed {s} ideal {qi}"), e),
            }
        }
        let mut rng = ChaCha8Rng::seed_from_u64(s);
        let n = ctx.order();
        let mu = GroupAlgebraElement::random(n, &mut rng);
        let nu = GroupAlgebraElement::random(n, &mut rng);
        let r = group::theta_multiplicativity_residual(&ctx, &mu, &nu);
        out.cases += 1;
        if !(r <= THETA_RESIDUAL) {
            out.fail(format!("{name}: theta multiplicativity residual {r:.3e}"));
        }
    }
    match z2_example_dimension(tol) {
        Ok(dim) => out.check_bool(dim == 2, || format!("cyclic:2 example has dimension {dim}, expected 2")),
        Err(e) => out.error("cyclic:2 example".into(), e),
    }
    out
}

/// `V_Q` for `Q = span{δ_e + δ_g}` in `ℂ[ℤ₂]`.
pub fn z2_example_dimension(tol: Tolerance) -> Result<usize> {
    let ctx = GroupContext::builtin("cyclic:2", tol)?;
    let mu = GroupAlgebraElement::new(linalg::CVector::from_vec(vec![linalg::ONE, linalg::ONE]));
    let q = GroupIdeal::from_elements(&ctx, &[mu])?;
    Ok(group::relation_from_ideal(&ctx, &q)?.dim())
}

/// Random metrics roundtrip exactly and validate; constructed filtrations
/// break symmetry and subadditivity and must be caught with witnesses.
pub fn metric_recovery(count: usize, seed: u64, tol: Tolerance) -> SuiteResult {
    let mut out = SuiteResult::new("metric_recovery", 0.0);
    for i in 0..count {
        let s = instance_seed(seed, 5, i);
        let mut rng = ChaCha8Rng::seed_from_u64(s);
        let n = rng.random_range(2..=6);
        let dist = metric::random_classical_metric(n, &mut rng);
        let run = || -> Result<(bool, metric::MetricReport)> {
            let m = metric::metric_from_classical(&dist, tol)?;
            let back = metric::classical_distance_matrix(&m)?;
            Ok((back == dist, metric::validate_metric(&m, tol)))
        };
        match run() {
            Ok((exact, rep)) => {
                out.check_bool(exact, || format!("seed {s} (n={n}): distance roundtrip is not exact"));
                out.check_bool(rep.passed() && rep.is_metric, || format!("seed {s} (n={n}): axioms fail: {rep:?}"));
            }
            Err(e) => out.error(format!("seed {s} (n={n})"), e),
        }
    }
    match constructed_violations(tol) {
        Ok((sym, sub, tri)) => {
            out.check_bool(sym, || "non-symmetric level not detected".into());
            out.check_bool(sub, || "missing band not detected by subadditivity".into());
            out.check_bool(tri, || "triangle violation not reported with its witness".into());
        }
        Err(e) => out.error("constructed violations".into(), e),
    }
    out
}

/// Each flag is true when the corresponding failure is detected with the
/// expected witness.
pub fn constructed_violations(tol: Tolerance) -> Result<(bool, bool, bool)> {
    let alg = Arc::new(FiniteVNAlgebra::builtin("diag:3", tol)?);
    let rel = |pairs: &[(usize, usize)]| -> Result<QuantumRelation> {
        let mut all: Vec<(usize, usize)> = (0..alg.d()).map(|x| (x, x)).collect();
        all.extend_from_slice(pairs);
        crate::relations::relation_from_subset_over(&alg, &ClassicalRelation::from_pairs(alg.d(), &all)?)
    };
    let skew = metric::WStarMetric::new(alg.clone(), vec![0.0, 1.0], vec![rel(&[])?, rel(&[(0, 1)])?])?;
    let rep = metric::validate_metric(&skew, tol);
    let sym = !rep.symmetry.passed && rep.symmetry.witness == vec![1];

    let alg4 = Arc::new(FiniteVNAlgebra::builtin("diag:4", tol)?);
    let band = |w: usize| -> Result<QuantumRelation> {
        let pairs: Vec<_> =
            (0..4usize).flat_map(|x| (0..4usize).map(move |y| (x, y))).filter(|&(x, y)| x.abs_diff(y) <= w).collect();
        crate::relations::relation_from_subset_over(&alg4, &ClassicalRelation::from_pairs(4, &pairs)?)
    };
    let gapped =
        metric::WStarMetric::new(alg4.clone(), vec![0.0, 1.0, 2.0, 3.0], vec![band(0)?, band(1)?, band(1)?, band(3)?])?;
    let rep = metric::validate_metric(&gapped, tol);
    let sub = rep.symmetry.passed && !rep.subadditivity.passed && rep.subadditivity.witness == vec![1, 1, 2];

    let bad = vec![vec![0.0, 1.0, 3.0], vec![1.0, 0.0, 1.0], vec![3.0, 1.0, 0.0]];
    let tri = metric::find_triangle_violation(&bad) == Some((0, 1, 2))
        && metric::metric_from_classical(&bad, tol).is_err();
    Ok((sym, sub, tri))
}

fn heat_radii(n: usize) -> Vec<f64> {
    (0..=n / 2).map(|r| r as f64).collect()
}

/// Heat semigroups on `ℤ₈` and `ℤ₁₆`: Markov axioms, kernel reproduction and
/// decay of the off-diagonal profile in `r`.
pub fn markov_decay(tol: Tolerance) -> SuiteResult {
    let mut out = SuiteResult::new("markov_decay", MARKOV_THRESHOLD);
    for n in [8usize, 16] {
        let name = format!("cyclic:{n}");
        let run = |out: &mut SuiteResult| -> Result<()> {
            let ctx = GroupContext::builtin(&name, tol)?;
            let s = Semigroup::heat(&ctx);
            let m = metric::word_metric(&ctx)?;
            let rep = metric::validate_markov(&s, &HEAT_TIMES, MARKOV_THRESHOLD)?;
            for e in &rep.entries {
                let worst = e
                    .unitality
                    .max(e.trace_symmetry)
                    .max(e.trace_preservation)
                    .max(e.choi_hermiticity)
                    .max(-e.choi_min_eigenvalue);
                out.check(worst, || format!("{name} t={}: Markov axioms", e.t));
            }
            for &t in &HEAT_TIMES {
                let k = metric::extract_kernel(&s, m.algebra(), t)?;
                out.cases += 1;
                if !(k.residual <= KERNEL_RESIDUAL) {
                    out.fail(format!("{name} t={t}: kernel residual {:.3e}", k.residual));
                }
            }
            if n <= 8 {
                let v = metric::validate_metric(&m, tol);
                out.check_bool(v.passed() && v.is_metric, || format!("{name}: word metric fails validation"));
            }
            let radii = heat_radii(n);
            let rows = metric::offdiagonal_profile(&s, &m, &HEAT_TIMES, &radii)?;
            for (ti, &t) in HEAT_TIMES.iter().enumerate() {
                let col = &rows[ti * radii.len()..(ti + 1) * radii.len()];
                let rise = col.windows(2).map(|w| w[1].op_norm - w[0].op_norm).fold(0.0, f64::max);
                out.check(rise, || format!("{name} t={t}: profile increases in r"));
                let sup_gap = col
                    .iter()
                    .map(|r| (r.op_norm - r.sup_norm.unwrap_or(f64::NAN)).abs())
                    .fold(0.0, f64::max);
                out.check(sup_gap, || format!("{name} t={t}: op norm differs from masked sup"));
            }
            let pts: Vec<_> = rows.iter().map(|r| (r.t, r.r, r.op_norm)).collect();
            if let Ok(fit) = metric::gaussian_fit(&pts) {
                out.notes.insert(format!("{name}.fit.beta"), fit.beta);
                out.notes.insert(format!("{name}.fit.n_eff"), fit.n_eff);
                out.notes.insert(format!("{name}.fit.residual"), fit.residual);
            }
            Ok(())
        };
        if let Err(e) = run(&mut out) {
            out.error(name.clone(), e);
        }
    }
    out
}

pub const DOUBLE_ANNIHILATOR_COUNT: usize = 200;
pub const INTRINSIC_INSTANCES: usize = 50;
pub const INTRINSIC_PAIRS: usize = 100;
pub const GROUP_IDEALS: usize = 20;
pub const METRIC_COUNT: usize = 50;

pub fn run_all(cfg: &VerifyConfig) -> VerifySummary {
    let suites = vec![
        classical_exhaustive(cfg.tol),
        double_annihilator(DOUBLE_ANNIHILATOR_COUNT, cfg.seed, cfg.tol),
        intrinsic_consistency(INTRINSIC_INSTANCES, INTRINSIC_PAIRS, cfg.seed, cfg.tol, cfg.amp_level),
        group_duality(GROUP_IDEALS, cfg.seed, cfg.tol),
        metric_recovery(METRIC_COUNT, cfg.seed, cfg.tol),
        markov_decay(cfg.tol),
    ];
    let cases = suites.iter().map(|s| s.cases).sum();
    let failed = suites.iter().map(|s| s.failed).sum();
    VerifySummary {
        schema: 1,
        seed: cfg.seed,
        tol: cfg.tol.rel,
        amp_level: cfg.amp_level,
        suites,
        cases,
        failed,
        passed: failed == 0,
    }
}
