//! Canonical JSON shapes. Matrices are row-major `re`/`im` arrays; file I/O
//! lives in the CLI.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::group::GroupContext;
use crate::ideals::{LeftIdeal, TensorElement};
use crate::linalg::{CMatrix, C64};
use crate::opcore::{OperatorSubspace, Tolerance};
use crate::relations::{ClassicalRelation, QuantumRelation};
use crate::vnalg::FiniteVNAlgebra;
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MatrixJson {
    pub dim: usize,
    pub re: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub im: Vec<Vec<f64>>,
}

impl MatrixJson {
    pub fn from_matrix(m: &CMatrix) -> Self {
        let n = m.nrows();
        let re = (0..n).map(|i| (0..n).map(|j| m[(i, j)].re).collect()).collect();
        let imag = m.iter().any(|z| z.im != 0.0);
        let im = if imag { (0..n).map(|i| (0..n).map(|j| m[(i, j)].im).collect()).collect() } else { Vec::new() };
        MatrixJson { dim: n, re, im }
    }

    /// `im` may be omitted for real matrices.
    pub fn to_matrix(&self) -> Result<CMatrix> {
        let n = self.dim;
        let bad = |what: &str| Error::InvalidInput(format!("matrix of dim {n}: {what}"));
        if self.re.len() != n || self.re.iter().any(|r| r.len() != n) {
            return Err(bad("`re` is not dim × dim"));
        }
        if !self.im.is_empty() && (self.im.len() != n || self.im.iter().any(|r| r.len() != n)) {
            return Err(bad("`im` is not dim × dim"));
        }
        let m = CMatrix::from_fn(n, n, |i, j| {
            C64::new(self.re[i][j], if self.im.is_empty() { 0.0 } else { self.im[i][j] })
        });
        if !crate::linalg::all_finite(&m) {
            return Err(Error::NonFinite);
        }
        Ok(m)
    }
}

fn matrices(list: &[MatrixJson], d: usize) -> Result<Vec<CMatrix>> {
    list.iter()
        .map(|m| {
            let x = m.to_matrix()?;
            if x.nrows() != d {
                return Err(Error::DimensionMismatch { expected: d, found: x.nrows() });
            }
            Ok(x)
        })
        .collect()
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SubspaceJson {
    pub dim: usize,
    pub basis: Vec<MatrixJson>,
}

impl SubspaceJson {
    pub fn from_subspace(s: &OperatorSubspace) -> Self {
        SubspaceJson { dim: s.ambient_dim(), basis: s.basis().iter().map(MatrixJson::from_matrix).collect() }
    }

    pub fn to_subspace(&self, tol: Tolerance) -> Result<OperatorSubspace> {
        OperatorSubspace::orthonormalize(self.dim, &matrices(&self.basis, self.dim)?, tol)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AlgebraJson {
    pub dim: usize,
    pub generators: Vec<MatrixJson>,
}

/// A built-in name such as `"diag:3"` or an explicit generator list.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum AlgebraRef {
    Name(String),
    Generators(AlgebraJson),
}

impl AlgebraRef {
    pub fn build(&self, tol: Tolerance) -> Result<FiniteVNAlgebra> {
        match self {
            AlgebraRef::Name(n) => FiniteVNAlgebra::builtin(n, tol),
            AlgebraRef::Generators(a) => FiniteVNAlgebra::from_generators(a.dim, &matrices(&a.generators, a.dim)?, tol),
        }
    }

    pub fn describe(alg: &FiniteVNAlgebra) -> Self {
        match alg.name() {
            Some(n) => AlgebraRef::Name(n.to_string()),
            None => AlgebraRef::Generators(AlgebraJson {
                dim: alg.d(),
                generators: alg.space().basis().iter().map(MatrixJson::from_matrix).collect(),
            }),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ClassicalRelationJson {
    pub n: usize,
    pub pairs: Vec<(usize, usize)>,
}

impl ClassicalRelationJson {
    pub fn from_relation(r: &ClassicalRelation) -> Self {
        ClassicalRelationJson { n: r.n(), pairs: r.pairs() }
    }

    pub fn to_relation(&self) -> Result<ClassicalRelation> {
        ClassicalRelation::from_pairs(self.n, &self.pairs)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct QuantumRelationJson {
    pub algebra: AlgebraRef,
    pub basis: Vec<MatrixJson>,
}

impl QuantumRelationJson {
    pub fn from_relation(v: &QuantumRelation) -> Self {
        QuantumRelationJson {
            algebra: AlgebraRef::describe(v.algebra()),
            basis: v.space().basis().iter().map(MatrixJson::from_matrix).collect(),
        }
    }

    /// The span of `basis` must already be an `M'`-bimodule.
    pub fn to_relation(&self, tol: Tolerance) -> Result<QuantumRelation> {
        let alg = Arc::new(self.algebra.build(tol)?);
        let d = alg.d();
        let space = OperatorSubspace::orthonormalize(d, &matrices(&self.basis, d)?, tol)?;
        QuantumRelation::new(alg, space)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TensorElementJson {
    Pairs { pairs: Vec<(MatrixJson, MatrixJson)> },
    Action { action: MatrixJson },
}

impl TensorElementJson {
    pub fn from_element(s: &TensorElement) -> Self {
        match s.pairs() {
            Some(p) => TensorElementJson::Pairs {
                pairs: p.iter().map(|(x, y)| (MatrixJson::from_matrix(x), MatrixJson::from_matrix(y))).collect(),
            },
            None => TensorElementJson::Action { action: MatrixJson::from_matrix(s.action()) },
        }
    }

    pub fn to_element(&self, algebra: Arc<FiniteVNAlgebra>) -> Result<TensorElement> {
        let d = algebra.d();
        match self {
            TensorElementJson::Pairs { pairs } => {
                let mut out = Vec::with_capacity(pairs.len());
                for (x, y) in pairs {
                    let (x, y) = (x.to_matrix()?, y.to_matrix()?);
                    if x.nrows() != d || y.nrows() != d {
                        return Err(Error::DimensionMismatch { expected: d, found: x.nrows().max(y.nrows()) });
                    }
                    out.push((x, y));
                }
                TensorElement::from_pairs(algebra, out)
            }
            TensorElementJson::Action { action } => TensorElement::from_action(algebra, action.to_matrix()?),
        }
    }
}

/// A left ideal as the span of tensor-element actions (`d² × d²` matrices).
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LeftIdealJson {
    pub algebra: AlgebraRef,
    pub basis: Vec<MatrixJson>,
}

impl LeftIdealJson {
    pub fn from_ideal(j: &LeftIdeal) -> Result<Self> {
        Ok(LeftIdealJson {
            algebra: AlgebraRef::describe(j.algebra()),
            basis: j.basis()?.basis().iter().map(MatrixJson::from_matrix).collect(),
        })
    }

    pub fn to_ideal(&self, tol: Tolerance) -> Result<LeftIdeal> {
        let alg = Arc::new(self.algebra.build(tol)?);
        let dd = alg.d() * alg.d();
        let basis = matrices(&self.basis, dd)?;
        LeftIdeal::from_basis(alg, basis)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GroupJson {
    pub order: usize,
    pub table: Vec<Vec<usize>>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GroupRef {
    Name(String),
    Table(GroupJson),
}

impl GroupRef {
    pub fn build(&self, tol: Tolerance) -> Result<GroupContext> {
        match self {
            GroupRef::Name(n) => GroupContext::builtin(n, tol),
            GroupRef::Table(g) => {
                if g.table.len() != g.order {
                    return Err(Error::InvalidInput(format!(
                        "group table has {} rows for order {}",
                        g.table.len(),
                        g.order
                    )));
                }
                GroupContext::from_table(g.table.clone(), tol)
            }
        }
    }
}

/// `"cycle-laplacian"` is the Cayley-graph heat generator of the group (the
/// cycle Laplacian for `cyclic:n`); otherwise an explicit `d² × d²` matrix.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GeneratorSpec {
    Named(String),
    Matrix(MatrixJson),
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub group: GroupRef,
    pub generator: GeneratorSpec,
    pub times: Vec<f64>,
    pub radii: Vec<f64>,
}

impl ExperimentConfig {
    pub fn check(&self) -> Result<()> {
        if self.times.is_empty() {
            return Err(Error::InvalidInput("`times` is empty".into()));
        }
        if self.radii.is_empty() {
            return Err(Error::InvalidInput("`radii` is empty".into()));
        }
        if self.times.iter().any(|t| !(t.is_finite() && *t > 0.0)) {
            return Err(Error::InvalidInput("times must be positive".into()));
        }
        if self.radii.iter().any(|r| !(r.is_finite() && *r >= 0.0)) {
            return Err(Error::InvalidInput("radii must be nonnegative".into()));
        }
        Ok(())
    }

    pub fn semigroup(&self, ctx: &GroupContext) -> Result<crate::metric::Semigroup> {
        match &self.generator {
            GeneratorSpec::Named(n) if n == "cycle-laplacian" => Ok(crate::metric::Semigroup::heat(ctx)),
            GeneratorSpec::Named(n) => Err(Error::UnknownBuiltin(n.clone())),
            GeneratorSpec::Matrix(m) => {
                let a = m.to_matrix()?;
                let n = ctx.order();
                if a.nrows() != n * n {
                    return Err(Error::DimensionMismatch { expected: n * n, found: a.nrows() });
                }
                crate::metric::Semigroup::new(n, a)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matrix_roundtrip_and_real_shorthand() {
        let m = CMatrix::from_fn(2, 2, |i, j| C64::new(i as f64, j as f64 - 0.5));
        let j = serde_json::to_string(&MatrixJson::from_matrix(&m)).unwrap();
        let back: MatrixJson = serde_json::from_str(&j).unwrap();
        assert_eq!(back.to_matrix().unwrap(), m);
        let real: MatrixJson = serde_json::from_str(r#"{"dim":1,"re":[[2.5]]}"#).unwrap();
        assert_eq!(real.to_matrix().unwrap()[(0, 0)], C64::new(2.5, 0.0));
        let ragged: MatrixJson = serde_json::from_str(r#"{"dim":2,"re":[[1,2],[3]]}"#).unwrap();
        assert!(ragged.to_matrix().is_err());
    }

    #[test]
    fn refs_accept_names_and_tables() {
        let a: AlgebraRef = serde_json::from_str(r#""diag:2""#).unwrap();
        assert_eq!(a.build(Tolerance::default()).unwrap().dim(), 2);
        let g: GroupRef = serde_json::from_str(r#"{"order":2,"table":[[0,1],[1,0]]}"#).unwrap();
        assert_eq!(g.build(Tolerance::default()).unwrap().order(), 2);
        let e: ExperimentConfig = serde_json::from_str(
            r#"{"group":"cyclic:4","generator":"cycle-laplacian","times":[],"radii":[1]}"#,
        )
        .unwrap();
        assert!(e.check().is_err());
    }
}
