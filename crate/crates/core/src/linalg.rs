//! Small dense linear-algebra helpers on top of nalgebra.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;
pub type RMatrix = DMatrix<f64>;
pub type RVector = DVector<f64>;

pub const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Build a complex matrix from real row-major data.
pub fn real_matrix(n: usize, rows: &[f64]) -> CMatrix {
    CMatrix::from_row_iterator(n, n, rows.iter().map(|&x| c(x, 0.0)))
}

pub fn diag(values: &[f64]) -> CMatrix {
    CMatrix::from_diagonal(&CVector::from_iterator(values.len(), values.iter().map(|&x| c(x, 0.0))))
}

pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn max_abs_real(m: &RMatrix) -> f64 {
    m.iter().map(|z| z.abs()).fold(0.0, f64::max)
}

/// `‖m − m†‖_max`.
pub fn hermitian_deviation(m: &CMatrix) -> f64 {
    max_abs(&(m - m.adjoint()))
}

pub fn ensure_hermitian(m: &CMatrix, tol: f64) -> Result<()> {
    if !m.is_square() {
        return Err(Error::DimensionMismatch { expected: m.nrows(), actual: m.ncols() });
    }
    let deviation = hermitian_deviation(m);
    if deviation > tol {
        return Err(Error::NotHermitian { deviation });
    }
    Ok(())
}

pub fn commutator(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a * b - b * a
}

/// Real Hilbert–Schmidt inner product `Re tr(a† b)`.
pub fn hs_inner(a: &CMatrix, b: &CMatrix) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x.conj() * y).re).sum()
}

pub fn hs_norm(a: &CMatrix) -> f64 {
    hs_inner(a, a).sqrt()
}

/// Real generator `K` of `ψ̇ = −iHψ` acting on `(q; p)`.
///
/// With `H = R + iS` (`R` symmetric, `S` antisymmetric) the flow is
/// `q̇ = Sq + Rp`, `ṗ = −Rq + Sp`, so `K = [[S, R], [−R, S]]`, which is
/// antisymmetric whenever `H` is Hermitian.
pub fn hamiltonian_generator(h: &CMatrix) -> RMatrix {
    let n = h.nrows();
    let mut k = RMatrix::zeros(2 * n, 2 * n);
    for i in 0..n {
        for j in 0..n {
            let z = h[(i, j)];
            k[(i, j)] = z.im;
            k[(i, n + j)] = z.re;
            k[(n + i, j)] = -z.re;
            k[(n + i, n + j)] = z.im;
        }
    }
    k
}

/// Real `2N × 2N` form of a complex linear map acting on `ψ = q + ip`.
pub fn realify(u: &CMatrix) -> RMatrix {
    let n = u.nrows();
    let mut r = RMatrix::zeros(2 * n, 2 * n);
    for i in 0..n {
        for j in 0..n {
            let z = u[(i, j)];
            r[(i, j)] = z.re;
            r[(i, n + j)] = -z.im;
            r[(n + i, j)] = z.im;
            r[(n + i, n + j)] = z.re;
        }
    }
    r
}

/// Inverse of [`realify`]; reads the `A + iB` blocks and ignores any part that
/// does not commute with the complex structure.
pub fn complexify(r: &RMatrix) -> CMatrix {
    let n = r.nrows() / 2;
    CMatrix::from_fn(n, n, |i, j| c(r[(i, j)], r[(n + i, j)]))
}

/// `exp(θ K)` for a skew-Hermitian `K` via the Hermitian eigen-decomposition of `iK`.
pub fn exp_skew_hermitian(k: &CMatrix, theta: f64) -> CMatrix {
    SkewExp::new(k).exp(theta)
}

/// Cached spectral form of a skew-Hermitian `K` for repeated `exp(θ K)`.
#[derive(Debug, Clone)]
pub struct SkewExp {
    vectors: CMatrix,
    values: RVector,
}

impl SkewExp {
    pub fn new(k: &CMatrix) -> Self {
        let h = k * I;
        let h = (&h + h.adjoint()) * c(0.5, 0.0);
        let eig = h.symmetric_eigen();
        Self { vectors: eig.eigenvectors, values: eig.eigenvalues }
    }

    pub fn exp(&self, theta: f64) -> CMatrix {
        let phases = CVector::from_iterator(
            self.values.len(),
            self.values.iter().map(|&l| Complex64::from_polar(1.0, -theta * l)),
        );
        let v = &self.vectors;
        v * CMatrix::from_diagonal(&phases) * v.adjoint()
    }
}

/// Nested `[re, im]` rows, the interchange form for complex matrices.
pub fn to_pairs(m: &CMatrix) -> Vec<Vec<[f64; 2]>> {
    (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect()).collect()
}

pub fn from_pairs(rows: &[Vec<[f64; 2]>]) -> Result<CMatrix> {
    let n = rows.len();
    if n == 0 {
        return Err(Error::InvalidArgument("matrix must have at least one row".into()));
    }
    let cols = rows[0].len();
    for row in rows {
        if row.len() != cols {
            return Err(Error::DimensionMismatch { expected: cols, actual: row.len() });
        }
    }
    Ok(CMatrix::from_fn(n, cols, |i, j| c(rows[i][j][0], rows[i][j][1])))
}

/// Random complex vector with i.i.d. Gaussian parts.
pub fn random_complex_vector<R: rand::Rng + ?Sized>(n: usize, rng: &mut R) -> CVector {
    use rand_distr::{Distribution, StandardNormal};
    CVector::from_fn(n, |_, _| {
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = StandardNormal.sample(rng);
        c(re, im)
    })
}

/// Random Hermitian matrix with i.i.d. Gaussian entries (GUE up to scale).
pub fn random_hermitian<R: rand::Rng + ?Sized>(n: usize, rng: &mut R) -> CMatrix {
    use rand_distr::{Distribution, StandardNormal};
    let a = CMatrix::from_fn(n, n, |_, _| {
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = StandardNormal.sample(rng);
        c(re, im)
    });
    (&a + a.adjoint()) * c(0.5, 0.0)
}
