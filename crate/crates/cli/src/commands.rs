use std::fmt;
use std::fs;
use std::io::Write;
use std::path::Path;
use std::sync::Arc;

use qrel_core::encoding::{
    AlgebraRef, ClassicalRelationJson, ExperimentConfig, GeneratorSpec, GroupRef, LeftIdealJson, MatrixJson,
    QuantumRelationJson, SubspaceJson,
};
use qrel_core::group::{self, GroupAlgebraElement, GroupContext, GroupIdeal};
use qrel_core::ideals::{annihilator_ideal, kernel_bimodule, phi_injectivity, LeftIdeal};
use qrel_core::intrinsic::{compare_ideal_and_module, sample_projection_pairs, IntrinsicReport};
use qrel_core::linalg::{CVector, C64};
use qrel_core::metric::{self, ProfileRow};
use qrel_core::relations::{
    adjoint_relation, compose, generate_relation, is_quantum_relation, relation_from_subset_over, subset_from_relation,
    QuantumRelation,
};
use qrel_core::verify::{self, VerifyConfig};
use qrel_core::vnalg::FiniteVNAlgebra;
use qrel_core::{Error, Tolerance};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::{Cli, Command, Format};

#[derive(Debug)]
pub enum CliError {
    Core(Error),
    Io(String),
    Parse(String),
    Usage(String),
}

impl CliError {
    /// 1 for inputs that are well formed but mathematically rejected, 2 for
    /// everything that never got that far.
    pub fn code(&self) -> u8 {
        match self {
            CliError::Core(
                Error::NotBimodule { .. }
                | Error::NotLeftIdeal { .. }
                | Error::NotInvariant { .. }
                | Error::InvalidMetric(_)
                | Error::NotProjection { .. }
                | Error::NotInAlgebra { .. }
                | Error::NotDiagonal
                | Error::AlgebraMismatch
                | Error::Singular(_),
            ) => 1,
            _ => 2,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Core(e) => write!(f, "{e}"),
            CliError::Io(m) | CliError::Parse(m) | CliError::Usage(m) => f.write_str(m),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Core(e)
    }
}

type Out<T> = Result<T, CliError>;

/// A relation given in any of its equivalent forms.
#[derive(Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
enum Instance {
    Classical(ClassicalRelationJson),
    Relation(QuantumRelationJson),
    Ideal(LeftIdealJson),
    /// The bimodule generated by `generators`.
    Generated(GeneratedJson),
}

#[derive(Debug, Deserialize)]
struct GeneratedJson {
    algebra: AlgebraRef,
    generators: Vec<MatrixJson>,
}

#[derive(Debug, Deserialize)]
struct VectorJson {
    re: Vec<f64>,
    #[serde(default)]
    im: Vec<f64>,
}

#[derive(Debug, Deserialize)]
struct IdealElementsJson {
    elements: Vec<VectorJson>,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum DistanceInput {
    Wrapped { distances: Vec<Vec<f64>> },
    Bare(Vec<Vec<f64>>),
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Out<T> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Parse(format!("{}: {e}", path.display())))
}

/// Existing paths are read as JSON; anything else is a built-in name.
fn spec_or_file<T: for<'de> Deserialize<'de>>(spec: &str, name: impl FnOnce(String) -> T) -> Out<T> {
    let p = Path::new(spec);
    if p.is_file() {
        read_json(p)
    } else {
        Ok(name(spec.to_string()))
    }
}

struct Ctx {
    tol: Tolerance,
    seed: u64,
    amp_level: Option<usize>,
}

pub fn run(cli: &Cli) -> Out<bool> {
    let tol = Tolerance::new(cli.tol)?;
    let ctx = Ctx { tol, seed: cli.seed, amp_level: cli.amp_level };
    if cli.format == Format::Csv && !matches!(cli.command, Command::Semigroup { .. }) {
        return Err(CliError::Usage("csv output is only available for `semigroup`".into()));
    }
    let (name, passed, report, table) = match &cli.command {
        Command::Algebra { spec } => with_name("algebra", algebra(&ctx, spec)?),
        Command::Relation { file } => with_name("relation", relation(&ctx, file)?),
        Command::Roundtrip { file, samples } => with_name("roundtrip", roundtrip(&ctx, file, *samples)?),
        Command::Intrinsic { file, samples } => with_name("intrinsic", intrinsic(&ctx, file, *samples)?),
        Command::Group { spec, ideal, relation, samples } => {
            with_name("group", group_cmd(&ctx, spec, ideal.as_deref(), relation.as_deref(), *samples)?)
        }
        Command::Metric { spec } => with_name("metric", metric_cmd(&ctx, spec)?),
        Command::Semigroup { spec } => {
            let (passed, report, rows) = semigroup(&ctx, spec)?;
            ("semigroup", passed, report, Some(rows))
        }
        Command::Verify => {
            let cfg = VerifyConfig { seed: ctx.seed, tol: ctx.tol, amp_level: ctx.amp_level };
            let s = verify::run_all(&cfg);
            with_name("verify", (s.passed, to_value(&s)))
        }
    };
    let text = match cli.format {
        Format::Json => {
            let env = json!({
                "schema": 1,
                "command": name,
                "tol": ctx.tol.rel,
                "seed": ctx.seed,
                "amp_level": ctx.amp_level,
                "passed": passed,
                "report": report,
            });
            let mut s = serde_json::to_string_pretty(&env).expect("reports serialize");
            s.push('\n');
            s
        }
        Format::Csv => profile_csv(table.as_deref().unwrap_or(&[]))?,
    };
    match &cli.out {
        Some(p) => fs::write(p, text).map_err(|e| CliError::Io(format!("{}: {e}", p.display())))?,
        None => std::io::stdout().write_all(text.as_bytes()).map_err(|e| CliError::Io(e.to_string()))?,
    }
    Ok(passed)
}

fn with_name(name: &'static str, (passed, report): (bool, Value)) -> (&'static str, bool, Value, Option<Vec<ProfileRow>>) {
    (name, passed, report, None)
}

fn to_value<T: Serialize>(x: &T) -> Value {
    serde_json::to_value(x).expect("reports serialize")
}

fn profile_csv(rows: &[ProfileRow]) -> Out<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["t", "r", "op_norm", "hs_norm", "sup_norm"]).map_err(|e| CliError::Io(e.to_string()))?;
    for row in rows {
        let sup = row.sup_norm.map(|v| v.to_string()).unwrap_or_default();
        w.write_record([row.t.to_string(), row.r.to_string(), row.op_norm.to_string(), row.hs_norm.to_string(), sup])
            .map_err(|e| CliError::Io(e.to_string()))?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Io(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv is utf-8"))
}

fn algebra(ctx: &Ctx, spec: &str) -> Out<(bool, Value)> {
    let r: AlgebraRef = spec_or_file(spec, AlgebraRef::Name)?;
    let alg = r.build(ctx.tol)?;
    let validation = alg.validate();
    let phi = phi_injectivity(&alg);
    let passed = validation.passed && phi.injective;
    Ok((
        passed,
        json!({
            "name": alg.name(),
            "d": alg.d(),
            "dim": alg.dim(),
            "commutant_dim": alg.commutant_space().dim(),
            "center_dim": alg.center().dim(),
            "diagonal": alg.is_diagonal(),
            "blocks": alg.block_structure(),
            "validation": validation,
            "phi_injectivity": phi,
        }),
    ))
}

/// The relation side of an instance; ideals go through their kernel.
fn instance_relation(inst: &Instance, tol: Tolerance) -> Out<QuantumRelation> {
    Ok(match inst {
        Instance::Classical(c) => {
            let r = c.to_relation()?;
            let alg = Arc::new(FiniteVNAlgebra::builtin(&format!("diag:{}", r.n()), tol)?);
            relation_from_subset_over(&alg, &r)?
        }
        Instance::Relation(q) => q.to_relation(tol)?,
        Instance::Ideal(j) => kernel_bimodule(&j.to_ideal(tol)?),
        Instance::Generated(g) => {
            let alg = Arc::new(g.algebra.build(tol)?);
            let d = alg.d();
            let gens = g
                .generators
                .iter()
                .map(|m| {
                    let x = m.to_matrix()?;
                    if x.nrows() != d {
                        return Err(Error::DimensionMismatch { expected: d, found: x.nrows() });
                    }
                    Ok(x)
                })
                .collect::<Result<Vec<_>, Error>>()?;
            generate_relation(&alg, &gens)?
        }
    })
}

fn relation(ctx: &Ctx, file: &Path) -> Out<(bool, Value)> {
    let inst: Instance = read_json(file)?;
    let v = instance_relation(&inst, ctx.tol)?;
    let alg = v.algebra().clone();
    let thr = ctx.tol.cutoff(1.0, v.d() * v.d());
    let diag = QuantumRelation::diagonal(alg.clone());
    let sq = compose(&v, &v)?;
    let adj = adjoint_relation(&v);
    let classical = if alg.is_diagonal() { Some(ClassicalRelationJson::from_relation(&subset_from_relation(&v)?)) } else { None };
    Ok((
        true,
        json!({
            "d": v.d(),
            "algebra_dim": alg.dim(),
            "dim": v.dim(),
            "bimodule_residual": is_quantum_relation(&alg, v.space()),
            "reflexive": diag.space().relate(v.space()).u_outside_v <= thr,
            "symmetric": adj.relate(&v).gap <= thr,
            "transitive": sq.space().relate(v.space()).u_outside_v <= thr,
            "classical": classical,
        }),
    ))
}

fn support_rank(j: &LeftIdeal) -> usize {
    let p = j.support();
    (0..p.nrows()).map(|i| p[(i, i)].re).sum::<f64>().round() as usize
}

fn intrinsic_report(ctx: &Ctx, v: &QuantumRelation, j: &LeftIdeal, samples: usize) -> Out<IntrinsicReport> {
    let alg = v.algebra();
    let k = ctx.amp_level.unwrap_or(alg.d()).max(1);
    let pairs = sample_projection_pairs(alg, k, samples, ctx.seed);
    Ok(compare_ideal_and_module(v, j, &pairs, ctx.seed)?)
}

fn roundtrip(ctx: &Ctx, file: &Path, samples: usize) -> Out<(bool, Value)> {
    let inst: Instance = read_json(file)?;
    let tol = ctx.tol.rel;
    let (v, j, relation_gap, ideal_gap, recovered) = match &inst {
        Instance::Ideal(ij) => {
            let j = ij.to_ideal(ctx.tol)?;
            let v = kernel_bimodule(&j);
            let j2 = annihilator_ideal(&v);
            let v2 = kernel_bimodule(&j2);
            let (rg, ig) = (v.relate(&v2).gap, j.gap(&j2));
            (v, j, rg, ig, None)
        }
        _ => {
            let v = instance_relation(&inst, ctx.tol)?;
            let j = annihilator_ideal(&v);
            let v2 = kernel_bimodule(&j);
            let j2 = annihilator_ideal(&v2);
            let recovered = match &inst {
                Instance::Classical(c) => Some(subset_from_relation(&v2)? == c.to_relation()?),
                _ => None,
            };
            let (rg, ig) = (v.relate(&v2).gap, j.gap(&j2));
            (v, j, rg, ig, recovered)
        }
    };
    let intrinsic = intrinsic_report(ctx, &v, &j, samples)?;
    let passed = relation_gap <= tol && ideal_gap <= tol && recovered != Some(false) && intrinsic.passed();
    Ok((
        passed,
        json!({
            "d": v.d(),
            "algebra_dim": v.algebra().dim(),
            "relation_dim": v.dim(),
            "ideal_dim": j.dim()?,
            "support_rank": support_rank(&j),
            "relation_gap": relation_gap,
            "ideal_gap": ideal_gap,
            "classical_recovered": recovered,
            "intrinsic": intrinsic,
        }),
    ))
}

fn intrinsic(ctx: &Ctx, file: &Path, samples: usize) -> Out<(bool, Value)> {
    let inst: Instance = read_json(file)?;
    let (v, j) = match &inst {
        Instance::Ideal(ij) => {
            let j = ij.to_ideal(ctx.tol)?;
            (kernel_bimodule(&j), j)
        }
        _ => {
            let v = instance_relation(&inst, ctx.tol)?;
            let j = annihilator_ideal(&v);
            (v, j)
        }
    };
    let rep = intrinsic_report(ctx, &v, &j, samples)?;
    Ok((rep.passed(), to_value(&rep)))
}

fn group_element(v: &VectorJson, n: usize) -> Out<GroupAlgebraElement> {
    if v.re.len() != n || !(v.im.is_empty() || v.im.len() == n) {
        return Err(Error::DimensionMismatch { expected: n, found: v.re.len() }.into());
    }
    let c = CVector::from_fn(n, |i, _| C64::new(v.re[i], v.im.get(i).copied().unwrap_or(0.0)));
    if c.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::NonFinite.into());
    }
    Ok(GroupAlgebraElement::new(c))
}

fn ideal_duality(g: &GroupContext, q: &GroupIdeal) -> Out<Value> {
    let v = group::relation_from_ideal(g, q)?;
    let q2 = group::ideal_from_relation(g, v.space())?;
    let v2 = group::relation_from_ideal(g, &q2)?;
    Ok(json!({
        "ideal_dim": q.dim(),
        "relation_dim": v.dim(),
        "ideal_gap": q.gap(&q2),
        "relation_gap": v.relate(&v2).gap,
    }))
}

fn group_cmd(ctx: &Ctx, spec: &str, ideal: Option<&Path>, relation: Option<&Path>, samples: usize) -> Out<(bool, Value)> {
    let gr: GroupRef = spec_or_file(spec, GroupRef::Name)?;
    let g = gr.build(ctx.tol)?;
    let n = g.order();
    let tol = ctx.tol.rel;
    let gap_ok = |r: &Value| r["ideal_gap"].as_f64().unwrap_or(f64::INFINITY) <= tol
        && r["relation_gap"].as_f64().unwrap_or(f64::INFINITY) <= tol;
    if let Some(p) = ideal {
        let input: IdealElementsJson = read_json(p)?;
        let elems = input.elements.iter().map(|e| group_element(e, n)).collect::<Out<Vec<_>>>()?;
        let q = GroupIdeal::from_elements(&g, &elems)?;
        let r = ideal_duality(&g, &q)?;
        return Ok((gap_ok(&r), json!({ "order": n, "ideal": r })));
    }
    if let Some(p) = relation {
        let s: SubspaceJson = read_json(p)?;
        if s.dim != n {
            return Err(Error::DimensionMismatch { expected: n, found: s.dim }.into());
        }
        let space = s.to_subspace(ctx.tol)?;
        let check = group::is_invariant(&g, &space);
        if !check.invariant {
            return Err(Error::NotInvariant { residual: check.residual }.into());
        }
        let q = group::ideal_from_relation(&g, &space)?;
        let v = group::relation_from_ideal(&g, &q)?;
        let gap = v.space().relate(&space).gap;
        return Ok((
            gap <= tol,
            json!({ "order": n, "invariance": check, "relation_dim": space.dim(), "ideal_dim": q.dim(), "relation_gap": gap }),
        ));
    }
    let ideals = group::sample_left_ideals(&g, samples, ctx.seed);
    let rows = ideals.iter().map(|q| ideal_duality(&g, q)).collect::<Out<Vec<_>>>()?;
    let mut theta: f64 = 0.0;
    let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(ctx.seed);
    for _ in 0..samples {
        let mu = GroupAlgebraElement::random(n, &mut rng);
        let nu = GroupAlgebraElement::random(n, &mut rng);
        let scale = 1.0 + mu.norm() * nu.norm();
        theta = theta.max(group::theta_multiplicativity_residual(&g, &mu, &nu) / scale);
    }
    let passed = rows.iter().all(gap_ok) && theta <= verify::THETA_RESIDUAL;
    Ok((passed, json!({ "order": n, "ideals": rows, "theta_residual": theta })))
}

fn metric_cmd(ctx: &Ctx, spec: &str) -> Out<(bool, Value)> {
    let p = Path::new(spec);
    let dist = if p.is_file() {
        match read_json::<DistanceInput>(p)? {
            DistanceInput::Wrapped { distances } | DistanceInput::Bare(distances) => distances,
        }
    } else {
        GroupContext::builtin(spec, ctx.tol)?.word_distances()
    };
    metric::check_classical_metric(&dist)?;
    let m = metric::metric_from_classical(&dist, ctx.tol)?;
    let report = metric::validate_metric(&m, ctx.tol);
    let recovered = metric::classical_distance_matrix(&m)?;
    let exact = recovered == dist;
    Ok((
        report.passed() && exact,
        json!({
            "n": dist.len(),
            "thresholds": m.thresholds(),
            "level_dims": m.levels().iter().map(|l| l.dim()).collect::<Vec<_>>(),
            "axioms": report,
            "recovered_exactly": exact,
        }),
    ))
}

fn semigroup(ctx: &Ctx, spec: &str) -> Out<(bool, Value, Vec<ProfileRow>)> {
    let cfg: ExperimentConfig = spec_or_file(spec, |name| ExperimentConfig {
        group: GroupRef::Name(name),
        generator: GeneratorSpec::Named("cycle-laplacian".into()),
        times: verify::HEAT_TIMES.to_vec(),
        radii: Vec::new(),
    })?;
    let g = cfg.group.build(ctx.tol)?;
    let dist = g.word_distances();
    let radii = if cfg.radii.is_empty() && !Path::new(spec).is_file() {
        let max = dist.iter().flatten().copied().filter(|d| d.is_finite()).fold(0.0, f64::max);
        (0..=max as usize).map(|r| r as f64).collect()
    } else {
        cfg.radii.clone()
    };
    let cfg = ExperimentConfig { radii, ..cfg };
    cfg.check()?;
    let s = cfg.semigroup(&g)?;
    let m = metric::word_metric(&g)?;
    let markov = metric::validate_markov(&s, &cfg.times, verify::MARKOV_THRESHOLD)?;
    let mut kernels = Vec::new();
    let mut kernel_ok = true;
    for &t in &cfg.times {
        let k = metric::extract_kernel(&s, m.algebra(), t)?;
        kernel_ok &= k.residual <= verify::KERNEL_RESIDUAL;
        kernels.push(json!({ "t": t, "residual": k.residual }));
    }
    let rows = metric::offdiagonal_profile(&s, &m, &cfg.times, &cfg.radii)?;
    let samples: Vec<_> = rows.iter().map(|r| (r.t, r.r, r.op_norm)).collect();
    let fit = metric::gaussian_fit(&samples).ok();
    let propagation: Vec<Value> = cfg
        .times
        .iter()
        .map(|&t| match metric::propagation_residual(&s, &m, t) {
            Ok(p) => to_value(&p),
            Err(e) => json!({ "t": t, "skipped": e.to_string() }),
        })
        .collect();
    let passed = markov.passed && kernel_ok;
    let report = json!({
        "order": g.order(),
        "self_adjoint": s.is_self_adjoint(),
        "markov": markov,
        "kernels": kernels,
        "profile": rows,
        "gaussian_fit": fit,
        "propagation": propagation,
    });
    Ok((passed, report, rows))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes_split_math_from_input() {
        assert_eq!(CliError::Core(Error::NotLeftIdeal { residual: 1.0 }).code(), 1);
        assert_eq!(CliError::Core(Error::InvalidMetric("x".into())).code(), 1);
        assert_eq!(CliError::Core(Error::NonFinite).code(), 2);
        assert_eq!(CliError::Parse("x".into()).code(), 2);
    }

    #[test]
    fn instances_are_tagged() {
        let i: Instance = serde_json::from_str(r#"{"kind":"classical","n":2,"pairs":[[0,1]]}"#).unwrap();
        assert!(matches!(i, Instance::Classical(_)));
        let i: Instance = serde_json::from_str(r#"{"kind":"generated","algebra":"full:2","generators":[]}"#).unwrap();
        assert!(matches!(i, Instance::Generated(_)));
        assert!(serde_json::from_str::<Instance>(r#"{"kind":"nope"}"#).is_err());
    }
}
