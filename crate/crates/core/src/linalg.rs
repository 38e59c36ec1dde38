//! Dense complex linear algebra used throughout the crate.
//!
//! Everything here works on [`ComplexMatrix`] (a dynamically sized nalgebra
//! matrix of `Complex64`). Hermitian inputs are symmetrized before they are
//! factored so that round-off asymmetry from matrix products never leaks into
//! the eigen- or Cholesky factorizations.

use nalgebra::linalg::{SymmetricEigen, QR, SVD};
use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type ComplexMatrix = DMatrix<Complex64>;

/// Largest relative anti-Hermitian part accepted for a Hermitian argument.
pub const HERMITIAN_TOL: f64 = 1e-12;

/// Default relative singular-value cutoff for [`null_space_basis`].
pub const DEFAULT_RANK_TOL: f64 = 1e-10;

const SKEW_TOL: f64 = 1e-10;

/// Eigen-pairs of a Hermitian matrix or pencil, sorted by descending value.
#[derive(Debug, Clone)]
pub struct HermitianEig {
    pub values: Vec<f64>,
    /// Column `i` is the eigenvector for `values[i]`.
    pub vectors: ComplexMatrix,
}

pub fn c64(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn identity(n: usize) -> ComplexMatrix {
    ComplexMatrix::identity(n, n)
}

/// `diag(values)` as a complex matrix.
pub fn real_diag(values: &[f64]) -> ComplexMatrix {
    let n = values.len();
    ComplexMatrix::from_fn(n, n, |i, j| if i == j { c64(values[i], 0.0) } else { c64(0.0, 0.0) })
}

pub fn is_finite(a: &ComplexMatrix) -> bool {
    a.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

/// `(A + A^H) / 2`.
pub fn hermitian_part(a: &ComplexMatrix) -> ComplexMatrix {
    (a + a.adjoint()).scale(0.5)
}

/// `‖A − A^H‖_F / max(1, ‖A‖_F)`.
pub fn hermitian_defect(a: &ComplexMatrix) -> f64 {
    (a - a.adjoint()).norm() / a.norm().max(1.0)
}

/// `‖U^H U − I‖_F`.
pub fn unitarity_defect(u: &ComplexMatrix) -> f64 {
    (u.adjoint() * u - identity(u.ncols())).norm()
}

pub fn trace_re(a: &ComplexMatrix) -> f64 {
    a.diagonal().iter().map(|z| z.re).sum()
}

fn check_square(a: &ComplexMatrix, what: &str) -> Result<()> {
    if a.nrows() != a.ncols() {
        return Err(Error::InvalidMatrix(format!(
            "{what} must be square, got {}x{}",
            a.nrows(),
            a.ncols()
        )));
    }
    if !is_finite(a) {
        return Err(Error::InvalidMatrix(format!("{what} has non-finite entries")));
    }
    Ok(())
}

fn check_hermitian(a: &ComplexMatrix, what: &str) -> Result<()> {
    check_square(a, what)?;
    let defect = hermitian_defect(a);
    if defect > HERMITIAN_TOL {
        return Err(Error::InvalidMatrix(format!(
            "{what} is not Hermitian (relative defect {defect:e})"
        )));
    }
    Ok(())
}

/// Eigendecomposition `a = V diag(w) V^H` of a Hermitian matrix with `w`
/// sorted in descending order and `V` unitary.
pub fn hermitian_eig(a: &ComplexMatrix) -> Result<HermitianEig> {
    check_hermitian(a, "hermitian_eig argument")?;
    Ok(eig_of_hermitian_part(a))
}

fn eig_of_hermitian_part(a: &ComplexMatrix) -> HermitianEig {
    let n = a.nrows();
    if n == 0 {
        return HermitianEig { values: Vec::new(), vectors: ComplexMatrix::zeros(0, 0) };
    }
    let eig = SymmetricEigen::new(hermitian_part(a));
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = ComplexMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
    HermitianEig { values, vectors }
}

/// Lower Cholesky factor `L` (`a = L L^H`) of the Hermitian part of `a`.
///
/// Fails unless every pivot is real, finite and strictly positive.
pub fn cholesky_lower(a: &ComplexMatrix) -> Result<ComplexMatrix> {
    check_square(a, "Cholesky argument")?;
    let a = hermitian_part(a);
    let n = a.nrows();
    let mut l = ComplexMatrix::zeros(n, n);
    for j in 0..n {
        let mut d = a[(j, j)].re;
        for k in 0..j {
            d -= l[(j, k)].norm_sqr();
        }
        if !(d > 0.0) || !d.is_finite() {
            return Err(Error::NotPositiveDefinite);
        }
        let pivot = d.sqrt();
        l[(j, j)] = c64(pivot, 0.0);
        for i in (j + 1)..n {
            let mut s = a[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)].conj();
            }
            l[(i, j)] = s / pivot;
        }
    }
    Ok(l)
}

/// Solves `L L^H x = b` given the lower Cholesky factor `L`.
pub fn cholesky_solve(l: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    let y = l.solve_lower_triangular(b).expect("Cholesky factor has a positive diagonal");
    l.adjoint()
        .solve_upper_triangular(&y)
        .expect("Cholesky factor has a positive diagonal")
}

/// `ln det(a)` for Hermitian positive definite `a`, from a Cholesky
/// factorization (twice the sum of the log pivots).
pub fn logdet_hpd(a: &ComplexMatrix) -> Result<f64> {
    let l = cholesky_lower(a)?;
    Ok(2.0 * (0..l.nrows()).map(|i| l[(i, i)].re.ln()).sum::<f64>())
}

/// Solves the Hermitian-definite pencil `a v = μ b v`.
///
/// Reduces through `b = L L^H` to the standard problem for
/// `L^{-1} a L^{-H}`; the returned eigenvectors are `b`-orthonormal
/// (`V^H b V = I`).
pub fn geig_hpd(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<HermitianEig> {
    check_hermitian(a, "pencil matrix a")?;
    check_hermitian(b, "pencil matrix b")?;
    if a.nrows() != b.nrows() {
        return Err(Error::InvalidMatrix("pencil matrices differ in size".into()));
    }
    let l = cholesky_lower(b)?;
    let lh = l.adjoint();
    // C = L^{-1} a L^{-H} = (L^{-1} (L^{-1} a)^H)^H
    let x = l
        .solve_lower_triangular(&hermitian_part(a))
        .ok_or(Error::NotPositiveDefinite)?;
    let c = l
        .solve_lower_triangular(&x.adjoint())
        .ok_or(Error::NotPositiveDefinite)?
        .adjoint();
    let eig = eig_of_hermitian_part(&c);
    let vectors = lh
        .solve_upper_triangular(&eig.vectors)
        .ok_or(Error::NotPositiveDefinite)?;
    Ok(HermitianEig { values: eig.values, vectors })
}

/// Orthonormal basis (as columns) of the right null space of `a`.
///
/// The rank counts singular values above `tol · σ_max`. A full-rank `a`
/// with at least as many rows as columns yields an `M×0` matrix.
pub fn null_space_basis(a: &ComplexMatrix, tol: f64) -> ComplexMatrix {
    let (n, m) = a.shape();
    if m == 0 {
        return ComplexMatrix::zeros(0, 0);
    }
    // Pad with zero rows so the SVD returns a complete right basis.
    let rows = n.max(m);
    let mut padded = ComplexMatrix::zeros(rows, m);
    padded.view_mut((0, 0), (n, m)).copy_from(a);
    let svd = SVD::new(padded, false, true);
    let v_t = svd.v_t.expect("right singular vectors were requested");
    let sigma_max = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    let cutoff = tol * sigma_max;
    let null: Vec<usize> = (0..m)
        .filter(|&i| sigma_max == 0.0 || svd.singular_values[i] <= cutoff)
        .collect();
    ComplexMatrix::from_fn(m, null.len(), |r, c| v_t[(null[c], r)].conj())
}

/// Matrix exponential of a skew-Hermitian `g`.
///
/// `-i·g` is Hermitian, so `exp(g) = V diag(e^{i w}) V^H` with
/// `-i·g = V diag(w) V^H`. The result is unitary to working precision.
pub fn expm_skew(g: &ComplexMatrix) -> Result<ComplexMatrix> {
    check_square(g, "expm_skew argument")?;
    let defect = (g + g.adjoint()).norm();
    if defect > SKEW_TOL * g.norm().max(1.0) {
        return Err(Error::InvalidMatrix(format!(
            "expm_skew argument is not skew-Hermitian (defect {defect:e})"
        )));
    }
    let h = g.map(|z| c64(z.im, -z.re));
    let eig = eig_of_hermitian_part(&h);
    let v = &eig.vectors;
    let mut scaled = v.clone();
    for (j, w) in eig.values.iter().enumerate() {
        let phase = Complex64::from_polar(1.0, *w);
        for i in 0..scaled.nrows() {
            scaled[(i, j)] *= phase;
        }
    }
    Ok(scaled * v.adjoint())
}

/// Unitary factor `Q` of `u = Q R` with the diagonal of `R` made real positive.
pub fn qr_orthonormalize(u: &ComplexMatrix) -> Result<ComplexMatrix> {
    check_square(u, "qr_orthonormalize argument")?;
    let n = u.nrows();
    let qr = QR::new(u.clone());
    let r = qr.r();
    let mut q = qr.q();
    let scale = r.iter().map(|z| z.norm()).fold(0.0, f64::max);
    for j in 0..n {
        let d = r[(j, j)];
        let mag = d.norm();
        if !(mag > 1e-14 * scale) {
            return Err(Error::InvalidMatrix("qr_orthonormalize argument is singular".into()));
        }
        let phase = d / mag;
        for i in 0..n {
            q[(i, j)] *= phase;
        }
    }
    Ok(q)
}
