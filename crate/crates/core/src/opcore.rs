//! Subspaces of `M_d`, range projections and joint kernels.

use serde::{Deserialize, Serialize};

use crate::linalg::{self, CMatrix, CVector};
use crate::{Error, Result};

pub const MAX_DIM: usize = 64;

/// Relative tolerance. Absolute cutoffs are `rel * scale * sqrt(dim)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tolerance {
    pub rel: f64,
}

impl Default for Tolerance {
    fn default() -> Self {
        Tolerance { rel: 1e-9 }
    }
}

impl Tolerance {
    pub fn new(rel: f64) -> Result<Self> {
        if rel.is_finite() && rel > 0.0 && rel < 1.0 {
            Ok(Tolerance { rel })
        } else {
            Err(Error::InvalidTolerance(rel))
        }
    }

    pub fn cutoff(self, scale: f64, dim: usize) -> f64 {
        self.rel * scale * (dim as f64).sqrt()
    }
}

pub fn check_dim(d: usize) -> Result<()> {
    if d == 0 || d > MAX_DIM {
        Err(Error::UnsupportedDimension(d))
    } else {
        Ok(())
    }
}

pub fn check_matrix(m: &CMatrix, d: usize) -> Result<()> {
    if m.nrows() != d || m.ncols() != d {
        return Err(Error::DimensionMismatch { expected: d, found: m.nrows().max(m.ncols()) });
    }
    if !linalg::all_finite(m) {
        return Err(Error::NonFinite);
    }
    Ok(())
}

/// A subspace of `M_d` held as an HS-orthonormal frame (`d² × k`, columns are
/// column-major vectorisations).
#[derive(Clone, Debug)]
pub struct OperatorSubspace {
    d: usize,
    frame: CMatrix,
    tol: Tolerance,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Inclusion {
    Equal,
    Subset,
    Superset,
    Incomparable,
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct SubspaceRelation {
    pub kind: Inclusion,
    /// `‖P_U − P_V‖` in operator norm.
    pub gap: f64,
    /// `‖(1 − P_V) Q_U‖`: how far `U` sticks out of `V`.
    pub u_outside_v: f64,
    pub v_outside_u: f64,
}

impl OperatorSubspace {
    pub fn zero(d: usize, tol: Tolerance) -> Self {
        OperatorSubspace { d, frame: linalg::zeros(d * d, 0), tol }
    }

    pub fn full(d: usize, tol: Tolerance) -> Self {
        OperatorSubspace { d, frame: linalg::identity(d * d), tol }
    }

    /// Span of `spanning`, orthonormalised with an SVD rank cutoff.
    pub fn orthonormalize(d: usize, spanning: &[CMatrix], tol: Tolerance) -> Result<Self> {
        check_dim(d)?;
        for m in spanning {
            check_matrix(m, d)?;
        }
        Ok(Self::from_columns(d, &linalg::frame_of(spanning, d), tol))
    }

    /// Span of the columns of a `d² × m` matrix.
    pub fn from_columns(d: usize, cols: &CMatrix, tol: Tolerance) -> Self {
        OperatorSubspace { d, frame: linalg::column_space(cols, tol), tol }
    }

    /// Span of the columns with rank measured against at least `floor`.
    pub fn from_columns_scaled(d: usize, cols: &CMatrix, floor: f64, tol: Tolerance) -> Self {
        OperatorSubspace { d, frame: linalg::column_space_scaled(cols, floor, tol), tol }
    }

    /// Trusts that `frame` already has orthonormal columns.
    pub fn from_orthonormal_frame(d: usize, frame: CMatrix, tol: Tolerance) -> Self {
        debug_assert_eq!(frame.nrows(), d * d);
        OperatorSubspace { d, frame, tol }
    }

    pub fn ambient_dim(&self) -> usize {
        self.d
    }

    pub fn dim(&self) -> usize {
        self.frame.ncols()
    }

    pub fn tol(&self) -> Tolerance {
        self.tol
    }

    pub fn frame(&self) -> &CMatrix {
        &self.frame
    }

    pub fn basis_element(&self, k: usize) -> CMatrix {
        linalg::unvec(self.frame.column(k).as_slice(), self.d)
    }

    pub fn basis(&self) -> Vec<CMatrix> {
        (0..self.dim()).map(|k| self.basis_element(k)).collect()
    }

    /// HS-orthogonal projector onto the subspace, a `d² × d²` matrix.
    pub fn projector(&self) -> CMatrix {
        &self.frame * self.frame.adjoint()
    }

    pub fn project(&self, m: &CMatrix) -> CMatrix {
        let v = linalg::vec_of(m);
        let p = &self.frame * (self.frame.adjoint() * v);
        linalg::unvec(p.as_slice(), self.d)
    }

    /// Absolute HS distance from `m` to the subspace.
    pub fn distance(&self, m: &CMatrix) -> f64 {
        let v = linalg::vec_of(m);
        let coeff = self.frame.adjoint() * &v;
        (v - &self.frame * coeff).norm()
    }

    /// Membership up to `rel * ‖m‖ * sqrt(d²)`.
    pub fn contains(&self, m: &CMatrix) -> bool {
        self.distance(m) <= self.tol.cutoff(linalg::fro(m).max(1.0), self.d * self.d)
    }

    /// Largest distance from a unit basis vector of `other` to `self`.
    pub fn excess_of(&self, other: &OperatorSubspace) -> f64 {
        if other.dim() == 0 {
            return 0.0;
        }
        let resid = other.frame() - &self.frame * (self.frame.adjoint() * other.frame());
        linalg::op_norm(&resid)
    }

    pub fn relate(&self, other: &OperatorSubspace) -> SubspaceRelation {
        subspace_relate(self, other)
    }

    pub fn adjoint(&self) -> OperatorSubspace {
        let mats: Vec<CMatrix> = self.basis().iter().map(|b| b.adjoint()).collect();
        Self::from_columns(self.d, &linalg::frame_of(&mats, self.d), self.tol)
    }

    pub fn sum(&self, other: &OperatorSubspace) -> OperatorSubspace {
        let mut cols = linalg::zeros(self.d * self.d, self.dim() + other.dim());
        cols.columns_mut(0, self.dim()).copy_from(&self.frame);
        cols.columns_mut(self.dim(), other.dim()).copy_from(other.frame());
        Self::from_columns(self.d, &cols, self.tol)
    }

    pub fn intersect(&self, other: &OperatorSubspace) -> OperatorSubspace {
        if self.dim() == 0 || other.dim() == 0 {
            return Self::zero(self.d, self.tol);
        }
        // U ∩ V is the complement in U of the part of U orthogonal to V:
        // solve for coefficients a with (1 − P_V) Q_U a = 0.
        let resid = &self.frame - other.frame() * (other.frame().adjoint() * &self.frame);
        let coeffs = linalg::null_space_scaled(&resid, Some(1.0), self.tol);
        Self::from_columns(self.d, &(&self.frame * coeffs), self.tol)
    }

    pub fn complement(&self) -> OperatorSubspace {
        let n = linalg::null_space_scaled(&self.frame.adjoint(), Some(1.0), self.tol);
        OperatorSubspace { d: self.d, frame: n, tol: self.tol }
    }

    /// Coordinates of `m` in the stored frame.
    pub fn coordinates(&self, m: &CMatrix) -> CVector {
        self.frame.adjoint() * linalg::vec_of(m)
    }
}

pub fn subspace_relate(u: &OperatorSubspace, v: &OperatorSubspace) -> SubspaceRelation {
    let gap = linalg::op_norm(&(u.projector() - v.projector()));
    let u_out = v.excess_of(u);
    let v_out = u.excess_of(v);
    let thr = u.tol.cutoff(1.0, u.d * u.d);
    let kind = match (u_out <= thr, v_out <= thr) {
        (true, true) => Inclusion::Equal,
        (true, false) => Inclusion::Subset,
        (false, true) => Inclusion::Superset,
        (false, false) => Inclusion::Incomparable,
    };
    SubspaceRelation { kind, gap, u_outside_v: u_out, v_outside_u: v_out }
}

/// Orthogonal projection onto the range of a square matrix.
pub fn range_projection(a: &CMatrix, tol: Tolerance) -> CMatrix {
    let q = linalg::column_space(a, tol);
    &q * q.adjoint()
}

/// Common kernel of linear maps on `M_d`, each given as a `d² × d²` matrix
/// acting on column-major vectorisations.
pub fn joint_kernel(d: usize, maps: &[CMatrix], tol: Tolerance) -> Result<OperatorSubspace> {
    check_dim(d)?;
    let dd = d * d;
    for m in maps {
        if m.nrows() != dd || m.ncols() != dd {
            return Err(Error::DimensionMismatch { expected: dd, found: m.nrows() });
        }
    }
    if maps.is_empty() {
        return Ok(OperatorSubspace::full(d, tol));
    }
    let mut stacked = linalg::zeros(dd * maps.len(), dd);
    for (k, m) in maps.iter().enumerate() {
        stacked.rows_mut(k * dd, dd).copy_from(m);
    }
    // Rank is measured against at least unit scale, so maps that are pure
    // rounding noise count as zero.
    let n = linalg::null_space_scaled(&stacked, Some(linalg::op_norm(&stacked).max(1.0)), tol);
    Ok(OperatorSubspace::from_orthonormal_frame(d, n, tol))
}

/// `T ↦ x T y` as a `d² × d²` matrix.
pub fn sandwich_map(x: &CMatrix, y: &CMatrix) -> CMatrix {
    linalg::pair_action(x, y)
}
