//! The non-controllable three-level system `H = H₀ + u H₁` with
//! `H₀ = μ diag(−1, 0, 1)` and `H₁ = d (|1⟩⟨2| + |2⟩⟨3| + h.c.)`.
//!
//! `H₀` and `H₁` generate `so(3)`, so unitary control alone is confined to
//! three-dimensional orbits. The explicit one-parameter subgroups `h₁`, `h₂`,
//! `h₃` below act on stacked `(q₁, q₂, q₃, p₁, p₂, p₃)`.

use std::f64::consts::FRAC_1_SQRT_2;

use crate::dynamics::BilinearPlant;
use crate::error::Result;
use crate::kahler::StateVector;
use crate::linalg::{c, diag, real_matrix, CMatrix, RMatrix, I};

pub fn drift(mu: f64) -> CMatrix {
    diag(&[-mu, 0.0, mu])
}

pub fn control(d: f64) -> CMatrix {
    real_matrix(3, &[0.0, d, 0.0, d, 0.0, d, 0.0, d, 0.0])
}

pub fn plant(mu: f64, d: f64) -> Result<BilinearPlant> {
    BilinearPlant::new(drift(mu), vec![control(d)])
}

/// Goal state `ψ_f = (q = 0, p = (1/√2, 0, 1/√2))`.
pub fn goal_state() -> StateVector {
    StateVector::new(vec![c(0.0, FRAC_1_SQRT_2), c(0.0, 0.0), c(0.0, FRAC_1_SQRT_2)])
        .expect("non-empty")
}

/// The orthonormal frame `{ψ₁, ψ₂, ψ₃ = ψ_f}` obtained from `ψ_f` by
/// `h₁(−π/2)` and `h₂(π/2) h₁(−π/2)`.
pub fn reference_frame() -> [StateVector; 3] {
    let s = FRAC_1_SQRT_2;
    [
        StateVector::new(vec![c(0.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)]).expect("non-empty"),
        StateVector::new(vec![c(-s, 0.0), c(0.0, 0.0), c(s, 0.0)]).expect("non-empty"),
        goal_state(),
    ]
}

#[rustfmt::skip]
pub fn h1(theta: f64) -> RMatrix {
    let (s, co) = theta.sin_cos();
    let r = FRAC_1_SQRT_2 * s;
    let a = 0.5 * (co + 1.0);
    let b = 0.5 * (co - 1.0);
    RMatrix::from_row_slice(6, 6, &[
        a,   0.0, b,   0.0, -r,  0.0,
        0.0, co,  0.0, -r,  0.0, -r,
        b,   0.0, a,   0.0, -r,  0.0,
        0.0, r,   0.0, a,   0.0, b,
        r,   0.0, r,   0.0, co,  0.0,
        0.0, r,   0.0, b,   0.0, a,
    ])
}

#[rustfmt::skip]
pub fn h2(theta: f64) -> RMatrix {
    let (s, co) = theta.sin_cos();
    let r = FRAC_1_SQRT_2 * s;
    let a = 0.5 * (co + 1.0);
    let b = 0.5 * (1.0 - co);
    RMatrix::from_row_slice(6, 6, &[
        a,   -r,  b,   0.0, 0.0, 0.0,
        r,   co,  -r,  0.0, 0.0, 0.0,
        b,   r,   a,   0.0, 0.0, 0.0,
        0.0, 0.0, 0.0, a,   -r,  b,
        0.0, 0.0, 0.0, r,   co,  -r,
        0.0, 0.0, 0.0, b,   r,   a,
    ])
}

#[rustfmt::skip]
pub fn h3(theta: f64) -> RMatrix {
    let (s, co) = theta.sin_cos();
    RMatrix::from_row_slice(6, 6, &[
        co,  0.0, 0.0, s,   0.0, 0.0,
        0.0, 1.0, 0.0, 0.0, 0.0, 0.0,
        0.0, 0.0, co,  0.0, 0.0, -s,
        -s,  0.0, 0.0, co,  0.0, 0.0,
        0.0, 0.0, 0.0, 0.0, 1.0, 0.0,
        0.0, 0.0, s,   0.0, 0.0, co,
    ])
}

/// Skew-Hermitian generators `K_i` with `h_i(θ)` the real form of `exp(θ K_i)`.
pub fn generators() -> [CMatrix; 3] {
    let k1 = control(FRAC_1_SQRT_2) * I;
    let k2 = real_matrix(3, &[0.0, -1.0, 0.0, 1.0, 0.0, -1.0, 0.0, 1.0, 0.0]) * c(FRAC_1_SQRT_2, 0.0);
    let k3 = drift(1.0) * I;
    [k1, k2, k3]
}
