//! Unital *-subalgebras of `M_d` and their commutants.

use rand::Rng;
use serde::Serialize;

use crate::linalg::{self, CMatrix};
use crate::opcore::{check_dim, check_matrix, sandwich_map, OperatorSubspace, Tolerance};
use crate::{Error, Result};

#[derive(Clone, Debug)]
pub struct FiniteVNAlgebra {
    space: OperatorSubspace,
    commutant: OperatorSubspace,
    name: Option<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct AlgebraValidation {
    pub dim: usize,
    pub commutant_dim: usize,
    pub identity_residual: f64,
    pub adjoint_residual: f64,
    pub product_residual: f64,
    pub bicommutant_gap: f64,
    pub threshold: f64,
    pub passed: bool,
}

/// One summand `M_n ⊗ I_m` of the block decomposition.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Block {
    pub n: usize,
    pub m: usize,
}

fn commutator_maps(space: &OperatorSubspace) -> Vec<CMatrix> {
    let d = space.ambient_dim();
    let id = linalg::identity(d);
    space
        .basis()
        .iter()
        .map(|b| sandwich_map(&id, b) - sandwich_map(b, &id))
        .collect()
}

fn commutant_of(space: &OperatorSubspace) -> OperatorSubspace {
    crate::opcore::joint_kernel(space.ambient_dim(), &commutator_maps(space), space.tol())
        .expect("dimension already validated")
}

impl FiniteVNAlgebra {
    /// Wraps a subspace already known to be a unital *-algebra.
    pub fn from_space(space: OperatorSubspace) -> Self {
        let commutant = commutant_of(&space);
        FiniteVNAlgebra { space, commutant, name: None }
    }

    /// Generation closure: adjoin `1`, the generators and their adjoints, then
    /// products until the dimension stops growing.
    pub fn from_generators(d: usize, gens: &[CMatrix], tol: Tolerance) -> Result<Self> {
        check_dim(d)?;
        for g in gens {
            check_matrix(g, d)?;
        }
        let mut seed = vec![linalg::identity(d)];
        for g in gens {
            seed.push(g.clone());
            seed.push(g.adjoint());
        }
        let mut space = OperatorSubspace::orthonormalize(d, &seed, tol)?;
        for _ in 0..d * d {
            let basis = space.basis();
            let mut span = basis.clone();
            for a in &basis {
                for b in &basis {
                    span.push(a * b);
                }
            }
            let next = OperatorSubspace::orthonormalize(d, &span, tol)?;
            let grown = next.dim() > space.dim();
            space = next;
            if !grown {
                break;
            }
        }
        Ok(Self::from_space(space))
    }

    /// `full:d`, `diag:d` or `block:n1xm1,n2xm2,...` (each block `M_n ⊗ I_m`).
    pub fn builtin(name: &str, tol: Tolerance) -> Result<Self> {
        let bad = || Error::UnknownBuiltin(name.to_string());
        let (kind, arg) = name.split_once(':').ok_or_else(bad)?;
        let blocks: Vec<Block> = match kind {
            "full" => vec![Block { n: arg.parse().map_err(|_| bad())?, m: 1 }],
            "diag" => {
                let d: usize = arg.parse().map_err(|_| bad())?;
                vec![Block { n: 1, m: 1 }; d]
            }
            "block" => arg
                .split(',')
                .map(|b| {
                    let (n, m) = b.split_once('x').ok_or_else(bad)?;
                    Ok(Block {
                        n: n.trim().parse().map_err(|_| bad())?,
                        m: m.trim().parse().map_err(|_| bad())?,
                    })
                })
                .collect::<Result<_>>()?,
            _ => return Err(bad()),
        };
        if blocks.iter().any(|b| b.n == 0 || b.m == 0) {
            return Err(bad());
        }
        let mut alg = Self::from_blocks(&blocks, tol)?;
        alg.name = Some(name.to_string());
        Ok(alg)
    }

    pub fn from_blocks(blocks: &[Block], tol: Tolerance) -> Result<Self> {
        let d: usize = blocks.iter().map(|b| b.n * b.m).sum();
        check_dim(d)?;
        let mut units = Vec::new();
        let mut offset = 0;
        for b in blocks {
            for i in 0..b.n {
                for j in 0..b.n {
                    let e = linalg::unit(b.n, i, j).kronecker(&linalg::identity(b.m));
                    let mut full = linalg::zeros(d, d);
                    full.view_mut((offset, offset), (b.n * b.m, b.n * b.m)).copy_from(&e);
                    units.push(full);
                }
            }
            offset += b.n * b.m;
        }
        Ok(Self::from_space(OperatorSubspace::orthonormalize(d, &units, tol)?))
    }

    pub fn name(&self) -> Option<&str> {
        self.name.as_deref()
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = Some(name.into());
        self
    }

    pub fn d(&self) -> usize {
        self.space.ambient_dim()
    }

    pub fn dim(&self) -> usize {
        self.space.dim()
    }

    pub fn tol(&self) -> Tolerance {
        self.space.tol()
    }

    pub fn space(&self) -> &OperatorSubspace {
        &self.space
    }

    pub fn commutant_space(&self) -> &OperatorSubspace {
        &self.commutant
    }

    pub fn commutant(&self) -> FiniteVNAlgebra {
        Self::from_space(self.commutant.clone())
    }

    pub fn residual(&self, m: &CMatrix) -> f64 {
        self.space.distance(m)
    }

    pub fn contains(&self, m: &CMatrix) -> bool {
        self.space.contains(m)
    }

    /// Same subspace of `M_d`, up to tolerance.
    pub fn same_as(&self, other: &FiniteVNAlgebra) -> bool {
        self.d() == other.d()
            && self.dim() == other.dim()
            && self.space.relate(&other.space).gap <= self.tol().cutoff(1.0, self.d() * self.d())
    }

    /// True when the algebra is exactly the diagonal matrices.
    pub fn is_diagonal(&self) -> bool {
        let d = self.d();
        self.dim() == d && (0..d).all(|i| self.contains(&linalg::unit(d, i, i)))
    }

    pub fn validate(&self) -> AlgebraValidation {
        let d = self.d();
        let basis = self.space.basis();
        let identity_residual = self.residual(&linalg::identity(d)) / (d as f64).sqrt();
        let adjoint_residual = basis.iter().map(|b| self.residual(&b.adjoint())).fold(0.0, f64::max);
        let mut product_residual: f64 = 0.0;
        for a in &basis {
            for b in &basis {
                product_residual = product_residual.max(self.residual(&(a * b)));
            }
        }
        let bicommutant = commutant_of(&self.commutant);
        let bicommutant_gap = bicommutant.relate(&self.space).gap;
        let threshold = self.tol().cutoff(1.0, d * d);
        let passed = [identity_residual, adjoint_residual, product_residual, bicommutant_gap]
            .iter()
            .all(|&r| r <= threshold);
        AlgebraValidation {
            dim: self.dim(),
            commutant_dim: self.commutant.dim(),
            identity_residual,
            adjoint_residual,
            product_residual,
            bicommutant_gap,
            threshold,
            passed,
        }
    }

    /// `M ∩ M'`.
    pub fn center(&self) -> OperatorSubspace {
        self.space.intersect(&self.commutant)
    }

    /// Recovers the `M_n ⊗ I_m` summands from a generic central element.
    pub fn block_structure(&self) -> Vec<Block> {
        let d = self.d();
        let center = self.center();
        // Deterministic generic weights: square roots of primes are linearly
        // independent over the rationals.
        let primes = [2.0f64, 3.0, 5.0, 7.0, 11.0, 13.0, 17.0, 19.0, 23.0, 29.0, 31.0, 37.0];
        let mut z = linalg::zeros(d, d);
        for (k, b) in center.basis().iter().enumerate() {
            let w = primes[k % primes.len()].sqrt() + k as f64;
            z += linalg::hermitian_part(b) * linalg::c(w);
        }
        let (vals, vecs) = linalg::hermitian_eigen(&z);
        let spread = vals.iter().fold(0.0f64, |a, v| a.max(v.abs())).max(1.0);
        let mut blocks = Vec::new();
        let mut start = 0;
        while start < d {
            let mut end = start + 1;
            while end < d && (vals[end] - vals[start]).abs() <= 1e-7 * spread {
                end += 1;
            }
            let q = vecs.columns(start, end - start).into_owned();
            let p = &q * q.adjoint();
            let compress = |s: &OperatorSubspace| {
                let mats: Vec<CMatrix> = s.basis().iter().map(|b| &p * b * &p).collect();
                OperatorSubspace::orthonormalize(d, &mats, self.tol()).map(|s| s.dim()).unwrap_or(0)
            };
            let n = (compress(&self.space) as f64).sqrt().round() as usize;
            let m = (compress(&self.commutant) as f64).sqrt().round() as usize;
            blocks.push(Block { n, m });
            start = end;
        }
        blocks
    }

    pub fn random_element<R: Rng>(&self, rng: &mut R) -> CMatrix {
        linalg::random_in_frame(rng, self.space.frame(), self.d())
    }

    pub fn random_hermitian<R: Rng>(&self, rng: &mut R) -> CMatrix {
        linalg::hermitian_part(&self.random_element(rng))
    }
}
