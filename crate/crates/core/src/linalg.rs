//! Dense complex helpers shared by every module.
//!
//! Vectorisation is column-major throughout: `vec(T)[i + d*j] = T[(i, j)]`,
//! so `vec(x T y) = (yᵀ ⊗ x) vec(T)` with `⊗` the nalgebra Kronecker product.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::opcore::Tolerance;

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);

pub fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

pub fn identity(d: usize) -> CMatrix {
    CMatrix::identity(d, d)
}

pub fn zeros(r: usize, c: usize) -> CMatrix {
    CMatrix::zeros(r, c)
}

/// Matrix unit `E_ij` of size `d`.
pub fn unit(d: usize, i: usize, j: usize) -> CMatrix {
    let mut m = zeros(d, d);
    m[(i, j)] = ONE;
    m
}

pub fn vec_of(m: &CMatrix) -> CVector {
    CVector::from_column_slice(m.as_slice())
}

pub fn unvec(v: &[C64], d: usize) -> CMatrix {
    CMatrix::from_column_slice(d, d, v)
}

pub fn column_matrix(m: &CMatrix, col: usize) -> CMatrix {
    let d = (m.nrows() as f64).sqrt().round() as usize;
    unvec(m.column(col).as_slice(), d)
}

/// Frame with `vec(m)` as columns.
pub fn frame_of(mats: &[CMatrix], d: usize) -> CMatrix {
    let mut f = zeros(d * d, mats.len());
    for (k, m) in mats.iter().enumerate() {
        f.column_mut(k).copy_from_slice(m.as_slice());
    }
    f
}

pub fn fro(m: &CMatrix) -> f64 {
    m.norm()
}

pub fn hs_inner(a: &CMatrix, b: &CMatrix) -> C64 {
    a.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).sum()
}

/// Largest singular value.
pub fn op_norm(m: &CMatrix) -> f64 {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0.0;
    }
    if m.nrows() == m.ncols() && is_hermitian(m, 1e-13 * (1.0 + fro(m))) {
        let e = hermitian_eigen(m);
        return e.0.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    }
    singular_values(m).first().copied().unwrap_or(0.0)
}

pub fn is_hermitian(m: &CMatrix, tol: f64) -> bool {
    fro(&(m - m.adjoint())) <= tol
}

pub fn hermitian_part(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()) * c(0.5)
}

fn to_faer(m: &CMatrix) -> faer::Mat<C64> {
    faer::Mat::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
}

fn from_faer(m: faer::MatRef<'_, C64>) -> CMatrix {
    CMatrix::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
}

/// Thin SVD `a = u diag(s) v^H`, singular values descending.
pub struct Svd {
    pub u: CMatrix,
    pub s: Vec<f64>,
    pub v: CMatrix,
}

// nalgebra's complex bidiagonal SVD loses orthogonality on some structured
// inputs (permutation-like spans), so every decomposition goes through faer.
pub fn svd(a: &CMatrix) -> Svd {
    let (r, c) = a.shape();
    let k = r.min(c);
    if k == 0 {
        return Svd { u: zeros(r, 0), s: Vec::new(), v: zeros(c, 0) };
    }
    let f = to_faer(a).thin_svd().expect("svd did not converge");
    let s = (0..k).map(|i| f.S()[i].re).collect();
    Svd { u: from_faer(f.U()), s, v: from_faer(f.V()) }
}

pub fn singular_values(a: &CMatrix) -> Vec<f64> {
    if a.nrows() == 0 || a.ncols() == 0 {
        return Vec::new();
    }
    let mut s: Vec<f64> = to_faer(a)
        .singular_values()
        .expect("svd did not converge")
        .into_iter()
        .collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

/// Eigenvalues (ascending) and eigenvectors of a Hermitian matrix.
pub fn hermitian_eigen(m: &CMatrix) -> (Vec<f64>, CMatrix) {
    let n = m.nrows();
    if n == 0 {
        return (Vec::new(), zeros(0, 0));
    }
    let e = to_faer(&hermitian_part(m))
        .self_adjoint_eigen(faer::Side::Lower)
        .expect("eigendecomposition did not converge");
    let raw: Vec<f64> = (0..n).map(|i| e.S()[i].re).collect();
    let u = from_faer(e.U());
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| raw[a].total_cmp(&raw[b]));
    let vals = idx.iter().map(|&i| raw[i]).collect();
    let mut vecs = zeros(n, n);
    for (k, &i) in idx.iter().enumerate() {
        vecs.set_column(k, &u.column(i));
    }
    (vals, vecs)
}

/// Apply a real function through the spectral decomposition of a Hermitian matrix.
pub fn hermitian_fn(m: &CMatrix, f: impl Fn(f64) -> f64) -> CMatrix {
    let (vals, vecs) = hermitian_eigen(m);
    let mut scaled = vecs.clone();
    for (k, v) in vals.iter().enumerate() {
        let s = c(f(*v));
        for x in scaled.column_mut(k).iter_mut() {
            *x *= s;
        }
    }
    scaled * vecs.adjoint()
}

/// Orthonormal basis of the column space of `a`, rank by the relative cutoff
/// `rel * sigma_max * sqrt(rows)`.
pub fn column_space(a: &CMatrix, tol: Tolerance) -> CMatrix {
    column_space_scaled(a, 0.0, tol)
}

/// As [`column_space`] with the cutoff measured against at least `floor`, so
/// a matrix of pure rounding noise has rank zero.
pub fn column_space_scaled(a: &CMatrix, floor: f64, tol: Tolerance) -> CMatrix {
    let rows = a.nrows();
    if a.ncols() == 0 || rows == 0 {
        return zeros(rows, 0);
    }
    let f = svd(a);
    let smax = f.s.iter().fold(floor, |m, &s| m.max(s));
    if smax == 0.0 {
        return zeros(rows, 0);
    }
    let cut = tol.cutoff(smax, rows);
    let keep: Vec<usize> = (0..f.s.len()).filter(|&k| f.s[k] > cut).collect();
    let mut out = zeros(rows, keep.len());
    for (j, &k) in keep.iter().enumerate() {
        out.set_column(j, &f.u.column(k));
    }
    out
}

/// Orthonormal basis of `{x : a x = 0}`; the cutoff is relative to the
/// largest singular value and scales with `sqrt(cols)`.
pub fn null_space(a: &CMatrix, tol: Tolerance) -> CMatrix {
    null_space_scaled(a, None, tol)
}

/// As [`null_space`], but measured against a fixed `scale` instead of the
/// largest singular value, for inputs that may be pure rounding noise.
pub fn null_space_scaled(a: &CMatrix, scale: Option<f64>, tol: Tolerance) -> CMatrix {
    let n = a.ncols();
    if a.nrows() == 0 || n == 0 {
        return identity(n);
    }
    // Pad wide input so the SVD yields a full right basis.
    let work = if a.nrows() < n {
        let mut padded = zeros(n, n);
        padded.rows_mut(0, a.nrows()).copy_from(a);
        padded
    } else {
        a.clone()
    };
    let f = svd(&work);
    let smax = scale.unwrap_or_else(|| f.s.iter().fold(0.0f64, |m, &s| m.max(s)));
    if smax == 0.0 {
        return identity(n);
    }
    let cut = tol.cutoff(smax, n);
    let keep: Vec<usize> = (0..f.s.len()).filter(|&k| f.s[k] <= cut).collect();
    let mut out = zeros(n, keep.len());
    for (j, &k) in keep.iter().enumerate() {
        out.set_column(j, &f.v.column(k));
    }
    out
}

/// Realignment of a `d² × d²` action matrix: the action of `x ⊗ y` becomes
/// `vec(x) vec(y)ᵀ`.
pub fn realign(s: &CMatrix, d: usize) -> CMatrix {
    let dd = d * d;
    let mut r = zeros(dd, dd);
    for j in 0..d {
        for i in 0..d {
            for l in 0..d {
                for k in 0..d {
                    r[(i + d * k, l + d * j)] = s[(i + d * j, k + d * l)];
                }
            }
        }
    }
    r
}

pub fn unrealign(r: &CMatrix, d: usize) -> CMatrix {
    let dd = d * d;
    let mut s = zeros(dd, dd);
    for j in 0..d {
        for i in 0..d {
            for l in 0..d {
                for k in 0..d {
                    s[(i + d * j, k + d * l)] = r[(i + d * k, l + d * j)];
                }
            }
        }
    }
    s
}

/// Action matrix of `T ↦ x T y`.
pub fn pair_action(x: &CMatrix, y: &CMatrix) -> CMatrix {
    y.transpose().kronecker(x)
}

pub fn apply_action(s: &CMatrix, t: &CMatrix) -> CMatrix {
    let d = t.nrows();
    let v = s * vec_of(t);
    unvec(v.as_slice(), d)
}

/// Commutation matrix: `vec(Tᵀ) = K vec(T)`.
pub fn transpose_permutation(d: usize) -> CMatrix {
    let mut k = zeros(d * d, d * d);
    for i in 0..d {
        for j in 0..d {
            k[(j + d * i, i + d * j)] = ONE;
        }
    }
    k
}

pub fn gaussian<R: Rng>(rng: &mut R) -> f64 {
    rng.sample(StandardNormal)
}

pub fn random_complex<R: Rng>(rng: &mut R) -> C64 {
    C64::new(gaussian(rng), gaussian(rng)) * std::f64::consts::FRAC_1_SQRT_2
}

pub fn random_matrix<R: Rng>(rng: &mut R, r: usize, c: usize) -> CMatrix {
    CMatrix::from_fn(r, c, |_, _| random_complex(rng))
}

/// Haar-ish unitary from the QR of a Gaussian matrix.
pub fn random_unitary<R: Rng>(rng: &mut R, n: usize) -> CMatrix {
    let g = random_matrix(rng, n, n);
    let qr = g.qr();
    let (q, r) = (qr.q(), qr.r());
    let mut q = q;
    for k in 0..n {
        let d = r[(k, k)];
        let ph = if d.norm() > 0.0 { d / d.norm() } else { ONE };
        for x in q.column_mut(k).iter_mut() {
            *x *= ph;
        }
    }
    q
}

/// Random combination of the columns of an orthonormal frame, unvectorised.
pub fn random_in_frame<R: Rng>(rng: &mut R, frame: &CMatrix, d: usize) -> CMatrix {
    let coeffs = CVector::from_fn(frame.ncols(), |_, _| random_complex(rng));
    let v = frame * coeffs;
    unvec(v.as_slice(), d)
}

/// Block `(i, j)` of size `d` of a `kd × kd` matrix.
pub fn block(m: &CMatrix, d: usize, i: usize, j: usize) -> CMatrix {
    m.view((i * d, j * d), (d, d)).into_owned()
}

pub fn set_block(m: &mut CMatrix, d: usize, i: usize, j: usize, b: &CMatrix) {
    m.view_mut((i * d, j * d), (d, d)).copy_from(b);
}

pub fn all_finite(m: &CMatrix) -> bool {
    m.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}
