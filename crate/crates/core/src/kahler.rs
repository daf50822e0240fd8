//! States, phase-space coordinates and the Kähler triple `(J, G, Ω)`.
//!
//! A state `ψ` with amplitudes `ψ_k` is identified with the phase point
//! `(q, p)` through `ψ_k = q_k + i p_k`, with no `1/√2` factor. Under this
//! scale the forms are `G = Re⟨x|y⟩` and `Ω = Im⟨x|y⟩`, a normalized state
//! satisfies `Σ (q_k² + p_k²) = 1`, and the measurement probability
//! `‖P_a ψ‖² = (1 − ½ G(ψ − ψ_a, ψ − ψ_a))²` holds exactly.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::linalg::{c, ensure_hermitian, CMatrix, CVector, RMatrix, RVector};

/// Tolerance used when an operation requires a normalized input.
pub const NORMALIZATION_TOL: f64 = 1e-10;

/// Hermiticity tolerance for observables, `‖A − A†‖_max`.
pub const HERMITIAN_TOL: f64 = 1e-12;

/// Relative tolerance under which eigenvalues are merged into one eigenspace.
pub const DEGENERACY_RTOL: f64 = 1e-9;

/// A pure state as a vector of complex amplitudes in a fixed basis.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    amplitudes: CVector,
}

impl StateVector {
    pub fn new(amplitudes: Vec<Complex64>) -> Result<Self> {
        Self::from_vector(CVector::from_vec(amplitudes))
    }

    pub fn from_vector(amplitudes: CVector) -> Result<Self> {
        if amplitudes.is_empty() {
            return Err(Error::InvalidArgument("state must have at least one amplitude".into()));
        }
        Ok(Self { amplitudes })
    }

    /// Basis state `|k⟩` of dimension `n`.
    pub fn basis(n: usize, k: usize) -> Result<Self> {
        if k >= n {
            return Err(Error::IndexOutOfRange { index: k, dim: n });
        }
        let mut v = CVector::zeros(n);
        v[k] = c(1.0, 0.0);
        Self::from_vector(v)
    }

    /// Haar-distributed random normalized state.
    pub fn random<R: rand::Rng + ?Sized>(n: usize, rng: &mut R) -> Self {
        let v = crate::linalg::random_complex_vector(n.max(1), rng);
        let norm = v.norm();
        Self { amplitudes: v.unscale(norm) }
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &CVector {
        &self.amplitudes
    }

    pub fn into_vector(self) -> CVector {
        self.amplitudes
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.norm_squared()
    }

    pub fn is_normalized(&self) -> bool {
        (self.norm_sqr() - 1.0).abs() <= NORMALIZATION_TOL
    }

    pub fn ensure_normalized(&self) -> Result<()> {
        if self.is_normalized() {
            Ok(())
        } else {
            Err(Error::NotNormalized { norm_sqr: self.norm_sqr() })
        }
    }

    pub fn normalized(&self) -> Result<Self> {
        let norm = self.amplitudes.norm();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::InvalidArgument("cannot normalize a zero state".into()));
        }
        Ok(Self { amplitudes: self.amplitudes.unscale(norm) })
    }

    /// `⟨self|other⟩`, antilinear in `self`.
    pub fn inner(&self, other: &StateVector) -> Result<Complex64> {
        check_dim(self.dim(), other.dim())?;
        Ok(self.amplitudes.dotc(&other.amplitudes))
    }

    /// Phase-insensitive overlap `|⟨self|other⟩|²`.
    pub fn fidelity(&self, other: &StateVector) -> Result<f64> {
        Ok(self.inner(other)?.norm_sqr())
    }

    pub fn apply(&self, u: &CMatrix) -> Result<Self> {
        check_dim(u.ncols(), self.dim())?;
        Self::from_vector(u * &self.amplitudes)
    }

    pub fn conj(&self) -> Self {
        Self { amplitudes: self.amplitudes.map(|z| z.conj()) }
    }
}

/// Real canonical coordinates `(q, p)` of a state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhasePoint {
    q: Vec<f64>,
    p: Vec<f64>,
}

impl PhasePoint {
    pub fn new(q: Vec<f64>, p: Vec<f64>) -> Result<Self> {
        check_dim(q.len(), p.len())?;
        if q.is_empty() {
            return Err(Error::InvalidArgument("phase point must have dimension ≥ 1".into()));
        }
        Ok(Self { q, p })
    }

    /// Splits a stacked `(q; p)` vector of length `2N`.
    pub fn from_stacked(v: &RVector) -> Result<Self> {
        if !v.len().is_multiple_of(2) {
            return Err(Error::InvalidArgument("stacked vector must have even length".into()));
        }
        let n = v.len() / 2;
        Self::new(v.rows(0, n).iter().copied().collect(), v.rows(n, n).iter().copied().collect())
    }

    pub fn stacked(&self) -> RVector {
        RVector::from_iterator(2 * self.dim(), self.q.iter().chain(self.p.iter()).copied())
    }

    pub fn dim(&self) -> usize {
        self.q.len()
    }

    pub fn q(&self) -> &[f64] {
        &self.q
    }

    pub fn p(&self) -> &[f64] {
        &self.p
    }

    pub fn norm_sqr(&self) -> f64 {
        self.q.iter().chain(self.p.iter()).map(|x| x * x).sum()
    }

    pub fn is_normalized(&self) -> bool {
        (self.norm_sqr() - 1.0).abs() <= NORMALIZATION_TOL
    }

    pub fn ensure_normalized(&self) -> Result<()> {
        if self.is_normalized() {
            Ok(())
        } else {
            Err(Error::NotNormalized { norm_sqr: self.norm_sqr() })
        }
    }

    pub fn to_state(&self) -> StateVector {
        from_phase(self)
    }

    /// Applies a real `2N × 2N` matrix to the stacked coordinates.
    pub fn transform(&self, m: &RMatrix) -> Result<Self> {
        check_dim(m.ncols(), 2 * self.dim())?;
        Self::from_stacked(&(m * self.stacked()))
    }

    pub fn sub(&self, other: &PhasePoint) -> Result<Self> {
        check_dim(self.dim(), other.dim())?;
        Ok(Self {
            q: self.q.iter().zip(&other.q).map(|(a, b)| a - b).collect(),
            p: self.p.iter().zip(&other.p).map(|(a, b)| a - b).collect(),
        })
    }
}

pub fn to_phase(psi: &StateVector) -> PhasePoint {
    PhasePoint {
        q: psi.amplitudes.iter().map(|z| z.re).collect(),
        p: psi.amplitudes.iter().map(|z| z.im).collect(),
    }
}

pub fn from_phase(x: &PhasePoint) -> StateVector {
    StateVector {
        amplitudes: CVector::from_iterator(x.dim(), x.q.iter().zip(&x.p).map(|(&q, &p)| c(q, p))),
    }
}

/// Riemannian metric `G(x, y) = Σ (q^x q^y + p^x p^y) = Re⟨x|y⟩`.
pub fn g_form(x: &PhasePoint, y: &PhasePoint) -> Result<f64> {
    check_dim(x.dim(), y.dim())?;
    let qq: f64 = x.q.iter().zip(&y.q).map(|(a, b)| a * b).sum();
    let pp: f64 = x.p.iter().zip(&y.p).map(|(a, b)| a * b).sum();
    Ok(qq + pp)
}

/// Symplectic form `Ω(x, y) = Σ (q^x p^y − p^x q^y) = Im⟨x|y⟩`.
pub fn omega_form(x: &PhasePoint, y: &PhasePoint) -> Result<f64> {
    check_dim(x.dim(), y.dim())?;
    Ok(x.q
        .iter()
        .zip(&x.p)
        .zip(y.q.iter().zip(&y.p))
        .map(|((qx, px), (qy, py))| qx * py - px * qy)
        .sum())
}

/// Complex structure `J: (q, p) ↦ (−p, q)`, multiplication by `i`.
pub fn complex_structure(x: &PhasePoint) -> PhasePoint {
    PhasePoint { q: x.p.iter().map(|v| -v).collect(), p: x.q.clone() }
}

/// One eigenspace of an observable.
#[derive(Debug, Clone)]
pub struct SpectralBranch {
    pub eigenvalue: f64,
    pub projector: CMatrix,
    /// Orthonormal basis of the eigenspace.
    pub vectors: Vec<CVector>,
}

impl SpectralBranch {
    pub fn multiplicity(&self) -> usize {
        self.vectors.len()
    }
}

/// Hermitian matrix with its spectral decomposition.
///
/// Branches are sorted by ascending eigenvalue; eigenvalues closer than
/// [`DEGENERACY_RTOL`] (relative to the spectral radius, floored at 1) share
/// one projector.
#[derive(Debug, Clone)]
pub struct Observable {
    matrix: CMatrix,
    spectrum: Vec<SpectralBranch>,
}

impl Observable {
    pub fn new(matrix: CMatrix) -> Result<Self> {
        ensure_hermitian(&matrix, HERMITIAN_TOL)?;
        let n = matrix.nrows();
        if n == 0 {
            return Err(Error::InvalidArgument("observable must have dimension ≥ 1".into()));
        }
        let sym = (&matrix + matrix.adjoint()) * c(0.5, 0.0);
        let eig = sym.symmetric_eigen();
        let mut order: Vec<usize> = (0..n).collect();
        // stable sort keeps first occurrence first among ties
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let scale = eig.eigenvalues.iter().fold(1.0_f64, |m, v| m.max(v.abs()));
        let tol = DEGENERACY_RTOL * scale;

        let mut groups: Vec<(Vec<f64>, Vec<CVector>)> = Vec::new();
        for idx in order {
            let value = eig.eigenvalues[idx];
            let vector = eig.eigenvectors.column(idx).into_owned();
            match groups.last_mut() {
                Some((values, vectors)) if (value - values[0]).abs() <= tol => {
                    values.push(value);
                    vectors.push(vector);
                }
                _ => groups.push((vec![value], vec![vector])),
            }
        }
        let spectrum = groups
            .into_iter()
            .map(|(values, vectors)| {
                let eigenvalue = values.iter().sum::<f64>() / values.len() as f64;
                SpectralBranch { eigenvalue, projector: projector_onto(&vectors, n), vectors }
            })
            .collect();
        Ok(Self { matrix, spectrum })
    }

    /// `Σ a_i |φ_i⟩⟨φ_i|` for an orthonormal frame and distinct real values.
    pub fn from_frame(values: &[f64], frame: &[CVector]) -> Result<Self> {
        check_dim(values.len(), frame.len())?;
        let n = frame.first().map(|v| v.len()).ok_or_else(|| {
            Error::InvalidArgument("frame must contain at least one vector".into())
        })?;
        if frame.len() != n {
            return Err(Error::DimensionMismatch { expected: n, actual: frame.len() });
        }
        for (i, a) in frame.iter().enumerate() {
            check_dim(n, a.len())?;
            for (j, b) in frame.iter().enumerate() {
                let target = if i == j { 1.0 } else { 0.0 };
                if (a.dotc(b) - c(target, 0.0)).norm() > 1e-10 {
                    return Err(Error::InvalidArgument("frame is not orthonormal".into()));
                }
            }
        }
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
        let scale = values.iter().fold(1.0_f64, |m, v| m.max(v.abs()));
        if order.windows(2).any(|w| (values[w[1]] - values[w[0]]).abs() <= DEGENERACY_RTOL * scale) {
            return Err(Error::InvalidArgument("frame eigenvalues must be distinct".into()));
        }
        let mut matrix = CMatrix::zeros(n, n);
        let mut spectrum = Vec::with_capacity(n);
        for idx in order {
            let projector = projector_onto(std::slice::from_ref(&frame[idx]), n);
            matrix += &projector * c(values[idx], 0.0);
            spectrum.push(SpectralBranch {
                eigenvalue: values[idx],
                projector,
                vectors: vec![frame[idx].clone()],
            });
        }
        Ok(Self { matrix, spectrum })
    }

    pub fn diagonal(values: &[f64]) -> Result<Self> {
        Self::new(crate::linalg::diag(values))
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn spectrum(&self) -> &[SpectralBranch] {
        &self.spectrum
    }

    pub fn is_nondegenerate(&self) -> bool {
        self.spectrum.iter().all(|b| b.multiplicity() == 1)
    }

    /// Index of the branch whose eigenvalue matches `value`.
    pub fn branch_index(&self, value: f64) -> Result<usize> {
        let scale = self.spectrum.iter().fold(1.0_f64, |m, b| m.max(b.eigenvalue.abs()));
        self.spectrum
            .iter()
            .position(|b| (b.eigenvalue - value).abs() <= DEGENERACY_RTOL * scale)
            .ok_or(Error::UnknownEigenvalue { value })
    }
}

fn projector_onto(vectors: &[CVector], n: usize) -> CMatrix {
    let mut p = CMatrix::zeros(n, n);
    for v in vectors {
        p += v * v.adjoint();
    }
    p
}

/// Explicit one-parameter subgroups of the canonical transformations that also
/// preserve `G`, i.e. the real image of `U(N)` inside `SO(2N)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CanonicalGenerator {
    /// Rotates the `(q_i, q_j)` and `(p_i, p_j)` planes together.
    CoordinateRotation { i: usize, j: usize, angle: f64 },
    /// Mixes `q_i` with `p_j` and `p_i` with `q_j`.
    MixedRotation { i: usize, j: usize, angle: f64 },
    /// Rotates the single `(q_i, p_i)` plane, a phase on `ψ_i`.
    PhaseRotation { i: usize, angle: f64 },
}

impl CanonicalGenerator {
    pub fn matrix(&self, n: usize) -> Result<RMatrix> {
        let check = |k: usize| if k < n { Ok(()) } else { Err(Error::IndexOutOfRange { index: k, dim: n }) };
        let mut m = RMatrix::identity(2 * n, 2 * n);
        match *self {
            CanonicalGenerator::CoordinateRotation { i, j, angle } => {
                check(i)?;
                check(j)?;
                distinct(i, j)?;
                let (s, co) = angle.sin_cos();
                for off in [0, n] {
                    let (a, b) = (off + i, off + j);
                    m[(a, a)] = co;
                    m[(a, b)] = s;
                    m[(b, a)] = -s;
                    m[(b, b)] = co;
                }
            }
            CanonicalGenerator::MixedRotation { i, j, angle } => {
                check(i)?;
                check(j)?;
                distinct(i, j)?;
                let (s, co) = angle.sin_cos();
                let (qi, qj, pi, pj) = (i, j, n + i, n + j);
                m[(qi, qi)] = co;
                m[(qi, pj)] = -s;
                m[(qj, pi)] = -s;
                m[(qj, qj)] = co;
                m[(pi, pi)] = co;
                m[(pi, qj)] = s;
                m[(pj, qi)] = s;
                m[(pj, pj)] = co;
            }
            CanonicalGenerator::PhaseRotation { i, angle } => {
                check(i)?;
                let (s, co) = angle.sin_cos();
                let (qi, pi) = (i, n + i);
                m[(qi, qi)] = co;
                m[(qi, pi)] = -s;
                m[(pi, qi)] = s;
                m[(pi, pi)] = co;
            }
        }
        Ok(m)
    }

    pub fn apply(&self, x: &PhasePoint) -> Result<PhasePoint> {
        x.transform(&self.matrix(x.dim())?)
    }
}

fn distinct(i: usize, j: usize) -> Result<()> {
    if i == j {
        Err(Error::InvalidArgument(format!("rotation needs two distinct indices, got {i} twice")))
    } else {
        Ok(())
    }
}

/// Standard symplectic matrix `[[0, I], [−I, 0]]`, so that `Ω(x, y) = xᵀ 𝕁 y`.
pub fn symplectic_matrix(n: usize) -> RMatrix {
    let mut j = RMatrix::zeros(2 * n, 2 * n);
    for k in 0..n {
        j[(k, n + k)] = 1.0;
        j[(n + k, k)] = -1.0;
    }
    j
}
