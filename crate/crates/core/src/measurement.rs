//! Measurement in phase space: projective jumps, non-selective ensembles,
//! Gaussian generalized measurements and continuous observation.
//!
//! A selective projective measurement of eigenvalue `a` sends `ψ` to
//! `ψ_a = P_a ψ / ‖P_a ψ‖`, the point of the eigenspace closest to `ψ` in the
//! `G` metric, with probability `‖P_a ψ‖² = (1 − ½ G(ψ − ψ_a, ψ − ψ_a))²`.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::Serialize;

use crate::dynamics::PhaseEnsemble;
use crate::error::{check_dim, Error, Result};
use crate::kahler::{g_form, to_phase, Observable, PhasePoint, StateVector};
use crate::linalg::{c, commutator, hermitian_deviation, CMatrix, CVector, I};

/// Probabilities at or below this are treated as impossible branches.
pub const ZERO_BRANCH: f64 = 1e-14;

#[derive(Debug, Clone, Serialize)]
pub struct MeasurementOutcome {
    /// Position of the branch in the observable's ascending spectrum.
    pub index: usize,
    pub value: f64,
    /// Born weight `‖P_a ψ‖²` of the recorded branch.
    pub probability: f64,
    pub post_state: PhasePoint,
}

fn project(branch_vectors: &[CVector], psi: &CVector) -> CVector {
    let mut out = CVector::zeros(psi.len());
    for v in branch_vectors {
        out += v * v.dotc(psi);
    }
    out
}

/// `‖P_a ψ‖²` for every branch, in spectral order.
pub fn born_probabilities(x: &PhasePoint, a: &Observable) -> Result<Vec<f64>> {
    check_dim(a.dim(), x.dim())?;
    let psi = x.to_state().into_vector();
    Ok(a.spectrum()
        .iter()
        .map(|b| b.vectors.iter().map(|v| v.dotc(&psi).norm_sqr()).sum())
        .collect())
}

/// Index drawn from unnormalized weights with a single uniform variate.
pub(crate) fn sample_index<R: Rng + ?Sized>(weights: &[f64], rng: &mut R) -> usize {
    let total: f64 = weights.iter().sum();
    let u = rng.random::<f64>() * total;
    let mut acc = 0.0;
    let mut last = 0;
    for (i, &w) in weights.iter().enumerate() {
        if w <= 0.0 {
            continue;
        }
        acc += w;
        last = i;
        if u < acc {
            return i;
        }
    }
    last
}

/// Selective projective measurement with Born sampling.
pub fn measure_selective<R: Rng + ?Sized>(
    x: &PhasePoint,
    a: &Observable,
    rng: &mut R,
) -> Result<MeasurementOutcome> {
    x.ensure_normalized()?;
    let probs = born_probabilities(x, a)?;
    let masked: Vec<f64> = probs.iter().map(|&p| if p > ZERO_BRANCH { p } else { 0.0 }).collect();
    let index = sample_index(&masked, rng);
    let branch = &a.spectrum()[index];
    let projected = project(&branch.vectors, &x.to_state().into_vector());
    let norm = projected.norm();
    let post = StateVector::from_vector(projected.unscale(norm))?;
    Ok(MeasurementOutcome {
        index,
        value: branch.eigenvalue,
        probability: probs[index],
        post_state: to_phase(&post),
    })
}

/// The projection probability evaluated through the `G` metric,
/// `(1 − ½ G(ψ − ψ_a, ψ − ψ_a))²`.
pub fn born_probability_via_metric(x: &PhasePoint, a: &Observable, value: f64) -> Result<f64> {
    check_dim(a.dim(), x.dim())?;
    let psi_a = projected_point(x, a, value)?;
    let diff = x.sub(&psi_a)?;
    let half = 1.0 - 0.5 * g_form(&diff, &diff)?;
    Ok(half * half)
}

/// `ψ_a` as a phase point.
pub fn projected_point(x: &PhasePoint, a: &Observable, value: f64) -> Result<PhasePoint> {
    check_dim(a.dim(), x.dim())?;
    let branch = &a.spectrum()[a.branch_index(value)?];
    let projected = project(&branch.vectors, &x.to_state().into_vector());
    let norm_sqr = projected.norm_squared();
    if norm_sqr <= ZERO_BRANCH {
        return Err(Error::ZeroProbability { value: branch.eigenvalue });
    }
    Ok(to_phase(&StateVector::from_vector(projected.unscale(norm_sqr.sqrt()))?))
}

/// Random search for a point of the eigenspace `V_a` that is closer to `ψ`
/// in the `G` metric than `ψ_a`. Returns `true` when none is found.
pub fn closest_point_check<R: Rng + ?Sized>(
    x: &PhasePoint,
    a: &Observable,
    value: f64,
    trials: usize,
    rng: &mut R,
) -> Result<bool> {
    if trials == 0 {
        return Ok(true);
    }
    let psi_a = projected_point(x, a, value)?;
    let d_min = {
        let d = x.sub(&psi_a)?;
        g_form(&d, &d)?
    };
    let branch = &a.spectrum()[a.branch_index(value)?];
    for _ in 0..trials {
        let coeffs = crate::linalg::random_complex_vector(branch.multiplicity(), rng);
        let mut phi = CVector::zeros(x.dim());
        for (v, z) in branch.vectors.iter().zip(coeffs.iter()) {
            phi += v * *z;
        }
        let phi = to_phase(&StateVector::from_vector(phi.unscale(coeffs.norm()))?);
        let d = x.sub(&phi)?;
        if g_form(&d, &d)? < d_min - 1e-12 {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Non-selective measurement in a nondegenerate eigenbasis: one atom per
/// branch at the normalized projection, weighted by its Born probability.
/// Zero-weight branches are omitted.
pub fn measure_nonselective(x: &PhasePoint, basis: &Observable) -> Result<PhaseEnsemble> {
    x.ensure_normalized()?;
    check_dim(basis.dim(), x.dim())?;
    if let Some(b) = basis.spectrum().iter().find(|b| b.multiplicity() > 1) {
        return Err(Error::DegenerateBasis { value: b.eigenvalue, multiplicity: b.multiplicity() });
    }
    let psi = x.to_state().into_vector();
    let mut members = Vec::with_capacity(basis.dim());
    for b in basis.spectrum() {
        let v = &b.vectors[0];
        let amp = v.dotc(&psi);
        let weight = amp.norm_sqr();
        if weight <= ZERO_BRANCH {
            continue;
        }
        let post = v * (amp / amp.norm());
        members.push((weight, to_phase(&StateVector::from_vector(post)?)));
    }
    Ok(PhaseEnsemble::from_members_unchecked(members))
}

/// Mixed state `ρ`, Hermitian with unit trace.
#[derive(Debug, Clone)]
pub struct DensityMatrix {
    matrix: CMatrix,
}

impl DensityMatrix {
    pub fn new(matrix: CMatrix) -> Result<Self> {
        if !matrix.is_square() || matrix.nrows() == 0 {
            return Err(Error::InvalidArgument("density matrix must be square and non-empty".into()));
        }
        let deviation = hermitian_deviation(&matrix);
        if deviation > 1e-10 {
            return Err(Error::NotHermitian { deviation });
        }
        let rho = Self { matrix };
        let tr = rho.trace();
        if (tr - 1.0).abs() > 1e-10 {
            return Err(Error::InvalidArgument(format!("density matrix trace is {tr}")));
        }
        let min = rho.min_eigenvalue();
        if min < -1e-10 {
            return Err(Error::InvalidArgument(format!("density matrix has eigenvalue {min}")));
        }
        Ok(rho)
    }

    pub fn from_pure(psi: &StateVector) -> Result<Self> {
        psi.ensure_normalized()?;
        let v = psi.amplitudes();
        Ok(Self { matrix: v * v.adjoint() })
    }

    pub fn from_ensemble(e: &PhaseEnsemble) -> Self {
        Self { matrix: e.density_matrix() }
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn trace(&self) -> f64 {
        self.matrix.trace().re
    }

    pub fn min_eigenvalue(&self) -> f64 {
        let sym = (&self.matrix + self.matrix.adjoint()) * c(0.5, 0.0);
        sym.symmetric_eigen().eigenvalues.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn purity(&self) -> f64 {
        (&self.matrix * &self.matrix).trace().re
    }
}

/// Gaussian-kernel generalized measurement of `Λ` during a step `dt`,
/// `P_Λ(α) = (π / 2 s dt)^{−1/4} exp(−s dt (Λ − α)²)`.
#[derive(Debug, Clone)]
pub struct GaussianMeasurement {
    observable: Observable,
    strength: f64,
    dt: f64,
}

impl GaussianMeasurement {
    pub fn new(observable: Observable, strength: f64, dt: f64) -> Result<Self> {
        if !(strength > 0.0 && strength.is_finite() && dt > 0.0 && dt.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "measurement needs s > 0 and dt > 0, got s = {strength}, dt = {dt}"
            )));
        }
        Ok(Self { observable, strength, dt })
    }

    pub fn observable(&self) -> &Observable {
        &self.observable
    }

    pub fn strength(&self) -> f64 {
        self.strength
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// Variance `1 / (4 s dt)` of each readout component.
    pub fn readout_variance(&self) -> f64 {
        1.0 / (4.0 * self.strength * self.dt)
    }

    /// The kernel operator `P_Λ(α)`.
    pub fn kernel(&self, alpha: f64) -> CMatrix {
        let sdt = self.strength * self.dt;
        let prefactor = (std::f64::consts::PI / (2.0 * sdt)).powf(-0.25);
        let n = self.observable.dim();
        let mut k = CMatrix::zeros(n, n);
        for b in self.observable.spectrum() {
            let d = b.eigenvalue - alpha;
            k += &b.projector * c(prefactor * (-sdt * d * d).exp(), 0.0);
        }
        k
    }

    /// Readout density `‖P_Λ(α) ψ‖²`.
    pub fn readout_density(&self, x: &PhasePoint, alpha: f64) -> Result<f64> {
        let probs = born_probabilities(x, &self.observable)?;
        let sdt = self.strength * self.dt;
        let norm = (2.0 * sdt / std::f64::consts::PI).sqrt();
        Ok(self
            .observable
            .spectrum()
            .iter()
            .zip(&probs)
            .map(|(b, p)| {
                let d = b.eigenvalue - alpha;
                p * norm * (-2.0 * sdt * d * d).exp()
            })
            .sum())
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct GaussianReadout {
    pub alpha: f64,
    /// Mixture component the readout was drawn from.
    pub branch: usize,
    pub post_state: PhasePoint,
}

/// Samples a readout `α` from `‖P_Λ(α) ψ‖²` and returns the renormalized
/// `P_Λ(α) ψ`. The readout density is a Gaussian mixture centred on the
/// eigenvalues with Born weights, so a component is drawn first.
pub fn gaussian_apply<R: Rng + ?Sized>(
    x: &PhasePoint,
    m: &GaussianMeasurement,
    rng: &mut R,
) -> Result<GaussianReadout> {
    x.ensure_normalized()?;
    let probs = born_probabilities(x, &m.observable)?;
    let branch = sample_index(&probs, rng);
    let sigma = m.readout_variance().sqrt();
    let normal = Normal::new(m.observable.spectrum()[branch].eigenvalue, sigma)
        .map_err(|e| Error::Numeric(e.to_string()))?;
    let alpha = normal.sample(rng);

    let sdt = m.strength * m.dt;
    let exponents: Vec<f64> = m
        .observable
        .spectrum()
        .iter()
        .map(|b| -sdt * (b.eigenvalue - alpha).powi(2))
        .collect();
    let top = exponents.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let psi = x.to_state().into_vector();
    let mut out = CVector::zeros(psi.len());
    for (b, e) in m.observable.spectrum().iter().zip(&exponents) {
        out += project(&b.vectors, &psi) * c((e - top).exp(), 0.0);
    }
    let norm = out.norm();
    if norm == 0.0 {
        return Err(Error::Numeric("readout kernel annihilated the state".into()));
    }
    Ok(GaussianReadout {
        alpha,
        branch,
        post_state: to_phase(&StateVector::from_vector(out.unscale(norm))?),
    })
}

/// Integrates `dρ/dt = −i[H, ρ] − (s/2)[Λ, [Λ, ρ]]` with fixed-step RK4 and
/// returns `steps + 1` samples including `t = 0`.
pub fn continuous_observe(
    rho0: &DensityMatrix,
    h: &Observable,
    m: &GaussianMeasurement,
    total_time: f64,
    steps: usize,
) -> Result<Vec<(f64, DensityMatrix)>> {
    if !(total_time > 0.0 && total_time.is_finite()) {
        return Err(Error::InvalidArgument(format!("total time must be positive, got {total_time}")));
    }
    if steps == 0 {
        return Err(Error::InvalidArgument("steps must be at least 1".into()));
    }
    check_dim(rho0.dim(), h.dim())?;
    check_dim(rho0.dim(), m.observable.dim())?;
    let hm = h.matrix();
    let lambda = m.observable.matrix();
    let half_s = c(0.5 * m.strength, 0.0);
    let rhs = |rho: &CMatrix| -> CMatrix {
        commutator(hm, rho) * (-I) - commutator(lambda, &commutator(lambda, rho)) * half_s
    };
    let dt = total_time / steps as f64;
    let mut rho = rho0.matrix.clone();
    let mut out = Vec::with_capacity(steps + 1);
    out.push((0.0, rho0.clone()));
    for k in 1..=steps {
        let k1 = rhs(&rho);
        let k2 = rhs(&(&rho + &k1 * c(0.5 * dt, 0.0)));
        let k3 = rhs(&(&rho + &k2 * c(0.5 * dt, 0.0)));
        let k4 = rhs(&(&rho + &k3 * c(dt, 0.0)));
        rho += (k1 + k2 * c(2.0, 0.0) + k3 * c(2.0, 0.0) + k4) * c(dt / 6.0, 0.0);
        rho = (&rho + rho.adjoint()) * c(0.5, 0.0);
        let tr: Complex64 = rho.trace();
        rho /= c(tr.re, 0.0);
        out.push((k as f64 * dt, DensityMatrix { matrix: rho.clone() }));
    }
    Ok(out)
}
