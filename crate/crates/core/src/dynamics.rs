//! Schrödinger dynamics as Hamiltonian flow on `(q, p)`.
//!
//! For a Hermitian `H` the classical Hamiltonian is
//! `ℍ = ½ Σ_kj [(q_k q_j + p_k p_j) Re H_kj + (p_k q_j − q_k p_j) Im H_kj]`
//! and Hamilton's equations `q̇ = ∂ℍ/∂p`, `ṗ = −∂ℍ/∂q` reproduce
//! `iψ̇ = Hψ`. With `ψ = q + ip` this gives `ℍ = ½⟨ψ|H|ψ⟩`.
//!
//! Controls are piecewise constant. On each constant interval the linear flow
//! is applied as the exact exponential of its `2N × 2N` generator.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::kahler::{PhasePoint, HERMITIAN_TOL};
use crate::linalg::{c, ensure_hermitian, hamiltonian_generator, CMatrix, RMatrix};

/// `ℍ` built from a Hermitian matrix (energy units, `ħ = 1`).
#[derive(Debug, Clone)]
pub struct ClassicalHamiltonian {
    h: CMatrix,
}

impl ClassicalHamiltonian {
    pub fn new(h: CMatrix) -> Result<Self> {
        ensure_hermitian(&h, HERMITIAN_TOL)?;
        Ok(Self { h })
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.h
    }

    pub fn dim(&self) -> usize {
        self.h.nrows()
    }

    pub fn value(&self, x: &PhasePoint) -> Result<f64> {
        hamiltonian_value(self, x)
    }

    /// `(∂ℍ/∂q, ∂ℍ/∂p)`.
    pub fn gradient(&self, x: &PhasePoint) -> Result<(Vec<f64>, Vec<f64>)> {
        check_dim(self.dim(), x.dim())?;
        let n = self.dim();
        let (q, p) = (x.q(), x.p());
        let mut dq = vec![0.0; n];
        let mut dp = vec![0.0; n];
        for k in 0..n {
            for j in 0..n {
                let z = self.h[(k, j)];
                // ∂/∂q_k of the symmetric and antisymmetric parts
                dq[k] += q[j] * z.re - p[j] * z.im;
                dp[k] += p[j] * z.re + q[j] * z.im;
            }
        }
        Ok((dq, dp))
    }

    /// Real generator `K` with `d/dt (q; p) = K (q; p)`.
    pub fn generator(&self) -> RMatrix {
        hamiltonian_generator(&self.h)
    }
}

/// Evaluates `ℍ(x)` term by term.
pub fn hamiltonian_value(h: &ClassicalHamiltonian, x: &PhasePoint) -> Result<f64> {
    check_dim(h.dim(), x.dim())?;
    let (q, p) = (x.q(), x.p());
    let mut total = 0.0;
    for k in 0..h.dim() {
        for j in 0..h.dim() {
            let z = h.h[(k, j)];
            total += (q[k] * q[j] + p[k] * p[j]) * z.re + (p[k] * q[j] - q[k] * p[j]) * z.im;
        }
    }
    Ok(0.5 * total)
}

/// Drift plus control Hamiltonians, `H(u) = H₀ + Σ u_j H_j`.
#[derive(Debug, Clone)]
pub struct BilinearPlant {
    drift: CMatrix,
    controls: Vec<CMatrix>,
}

impl BilinearPlant {
    pub fn new(drift: CMatrix, controls: Vec<CMatrix>) -> Result<Self> {
        ensure_hermitian(&drift, HERMITIAN_TOL)?;
        for h in &controls {
            check_dim(drift.nrows(), h.nrows())?;
            ensure_hermitian(h, HERMITIAN_TOL)?;
        }
        Ok(Self { drift, controls })
    }

    pub fn dim(&self) -> usize {
        self.drift.nrows()
    }

    pub fn channels(&self) -> usize {
        self.controls.len()
    }

    pub fn drift(&self) -> &CMatrix {
        &self.drift
    }

    pub fn controls(&self) -> &[CMatrix] {
        &self.controls
    }

    pub fn hamiltonian(&self, u: &[f64]) -> Result<CMatrix> {
        check_dim(self.channels(), u.len())?;
        let mut h = self.drift.clone();
        for (uj, hj) in u.iter().zip(&self.controls) {
            h += hj * c(*uj, 0.0);
        }
        Ok(h)
    }

    pub fn generator(&self, u: &[f64]) -> Result<RMatrix> {
        Ok(hamiltonian_generator(&self.hamiltonian(u)?))
    }

    /// Exact propagator `exp(K(u) dt)` for one constant-control interval.
    pub fn step_propagator(&self, u: &[f64], dt: f64) -> Result<RMatrix> {
        Ok((self.generator(u)? * dt).exp())
    }
}

/// Piecewise-constant control amplitudes on a strictly increasing time grid.
///
/// `values[k][j]` is channel `j` on `[grid[k], grid[k+1])`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSchedule", into = "RawSchedule")]
pub struct ControlSchedule {
    grid: Vec<f64>,
    values: Vec<Vec<f64>>,
    bounds: Option<Vec<f64>>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSchedule {
    grid: Vec<f64>,
    values: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    bounds: Option<Vec<f64>>,
}

impl TryFrom<RawSchedule> for ControlSchedule {
    type Error = Error;

    fn try_from(raw: RawSchedule) -> Result<Self> {
        let s = ControlSchedule::new(raw.grid, raw.values)?;
        match raw.bounds {
            Some(b) => s.with_bounds(b),
            None => Ok(s),
        }
    }
}

impl From<ControlSchedule> for RawSchedule {
    fn from(s: ControlSchedule) -> Self {
        RawSchedule { grid: s.grid, values: s.values, bounds: s.bounds }
    }
}

impl ControlSchedule {
    pub fn new(grid: Vec<f64>, values: Vec<Vec<f64>>) -> Result<Self> {
        if grid.len() < 2 {
            return Err(Error::InvalidArgument("schedule grid needs at least two breakpoints".into()));
        }
        if grid.iter().any(|t| t.is_nan()) || grid.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidArgument("schedule grid must be strictly increasing".into()));
        }
        check_dim(grid.len() - 1, values.len())?;
        let channels = values[0].len();
        for row in &values {
            check_dim(channels, row.len())?;
            if row.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidArgument("control values must be finite".into()));
            }
        }
        Ok(Self { grid, values, bounds: None })
    }

    /// Uniform grid of `intervals` steps on `[t0, t1]` with every value zero.
    pub fn zeros(t0: f64, t1: f64, intervals: usize, channels: usize) -> Result<Self> {
        Self::uniform(t0, t1, vec![vec![0.0; channels]; intervals.max(1)])
    }

    /// Uniform grid on `[t0, t1]` with one row of `values` per interval.
    pub fn uniform(t0: f64, t1: f64, values: Vec<Vec<f64>>) -> Result<Self> {
        let k = values.len();
        if k == 0 {
            return Err(Error::InvalidArgument("schedule needs at least one interval".into()));
        }
        let dt = (t1 - t0) / k as f64;
        let mut grid: Vec<f64> = (0..k).map(|i| t0 + dt * i as f64).collect();
        grid.push(t1);
        Self::new(grid, values)
    }

    /// Attaches a per-channel magnitude bound and checks every value against it.
    pub fn with_bounds(mut self, bounds: Vec<f64>) -> Result<Self> {
        check_dim(self.channels(), bounds.len())?;
        for row in &self.values {
            for (j, (&v, &b)) in row.iter().zip(&bounds).enumerate() {
                if v.abs() > b {
                    return Err(Error::ControlOutOfDomain { channel: j, value: v, lo: -b, hi: b });
                }
            }
        }
        self.bounds = Some(bounds);
        Ok(self)
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn values(&self) -> &[Vec<f64>] {
        &self.values
    }

    pub fn bounds(&self) -> Option<&[f64]> {
        self.bounds.as_deref()
    }

    pub fn channels(&self) -> usize {
        self.values[0].len()
    }

    pub fn intervals(&self) -> usize {
        self.values.len()
    }

    pub fn start(&self) -> f64 {
        self.grid[0]
    }

    pub fn end(&self) -> f64 {
        self.grid[self.grid.len() - 1]
    }

    pub fn covers(&self, t0: f64, t1: f64) -> bool {
        self.start() <= t0 && t1 <= self.end()
    }

    /// Control values in force at time `t` (right-continuous; the last
    /// interval also owns the final breakpoint).
    pub fn value_at(&self, t: f64) -> Option<&[f64]> {
        if t < self.start() || t > self.end() {
            return None;
        }
        let k = self.grid.partition_point(|&g| g <= t).saturating_sub(1).min(self.intervals() - 1);
        Some(&self.values[k])
    }

    /// Constant-control pieces overlapping `[t0, t1]`, as `(interval, from, to)`.
    fn pieces(&self, t0: f64, t1: f64) -> impl Iterator<Item = (usize, f64, f64)> + '_ {
        (0..self.intervals()).filter_map(move |k| {
            let a = self.grid[k].max(t0);
            let b = self.grid[k + 1].min(t1);
            (b > a).then_some((k, a, b))
        })
    }
}

/// A plant driven by a fixed schedule.
#[derive(Debug, Clone)]
pub struct ControlledHamiltonian {
    plant: BilinearPlant,
    schedule: ControlSchedule,
}

impl ControlledHamiltonian {
    pub fn new(plant: BilinearPlant, schedule: ControlSchedule) -> Result<Self> {
        if plant.channels() > 0 || schedule.channels() > 0 {
            check_dim(plant.channels(), schedule.channels())?;
        }
        Ok(Self { plant, schedule })
    }

    /// Drift-only evolution on `[t0, t1]`.
    pub fn free(drift: CMatrix, t0: f64, t1: f64) -> Result<Self> {
        let plant = BilinearPlant::new(drift, vec![])?;
        Self::new(plant, ControlSchedule::new(vec![t0, t1], vec![vec![]])?)
    }

    pub fn plant(&self) -> &BilinearPlant {
        &self.plant
    }

    pub fn schedule(&self) -> &ControlSchedule {
        &self.schedule
    }

    pub fn dim(&self) -> usize {
        self.plant.dim()
    }

    /// `H(t)` with the schedule value in force at `t`.
    pub fn hamiltonian_at(&self, t: f64) -> Result<CMatrix> {
        let u = self.schedule.value_at(t).ok_or(Error::ScheduleCoverage {
            start: self.schedule.start(),
            end: self.schedule.end(),
            t0: t,
            t1: t,
        })?;
        self.plant.hamiltonian(u)
    }

    fn check_span(&self, t0: f64, t1: f64) -> Result<()> {
        if t1 < t0 {
            return Err(Error::InvalidArgument(format!("t1 = {t1} precedes t0 = {t0}")));
        }
        if t1 > t0 && !self.schedule.covers(t0, t1) {
            return Err(Error::ScheduleCoverage {
                start: self.schedule.start(),
                end: self.schedule.end(),
                t0,
                t1,
            });
        }
        Ok(())
    }
}

/// Linear phase-space propagator from `t0` to `t1`, a product of exact
/// interval exponentials.
pub fn evolve_block(h: &ControlledHamiltonian, t0: f64, t1: f64) -> Result<RMatrix> {
    h.check_span(t0, t1)?;
    let n = 2 * h.dim();
    let mut total = RMatrix::identity(n, n);
    for (k, a, b) in h.schedule.pieces(t0, t1) {
        let step = h.plant.step_propagator(&h.schedule.values[k], b - a)?;
        total = step * total;
    }
    Ok(total)
}

/// Advances `x0` from `t0` to `t1` under Hamilton's equations.
pub fn evolve(h: &ControlledHamiltonian, x0: &PhasePoint, t0: f64, t1: f64) -> Result<PhasePoint> {
    check_dim(h.dim(), x0.dim())?;
    h.check_span(t0, t1)?;
    let mut v = x0.stacked();
    for (k, a, b) in h.schedule.pieces(t0, t1) {
        v = h.plant.step_propagator(&h.schedule.values[k], b - a)? * v;
    }
    PhasePoint::from_stacked(&v)
}

/// Fixed-step implicit-midpoint integration, `steps_per_interval` Cayley steps
/// per constant piece. Exactly norm-preserving; second-order accurate.
pub fn evolve_midpoint(
    h: &ControlledHamiltonian,
    x0: &PhasePoint,
    t0: f64,
    t1: f64,
    steps_per_interval: usize,
) -> Result<PhasePoint> {
    check_dim(h.dim(), x0.dim())?;
    h.check_span(t0, t1)?;
    if steps_per_interval == 0 {
        return Err(Error::InvalidArgument("steps_per_interval must be positive".into()));
    }
    let n = 2 * h.dim();
    let id = RMatrix::identity(n, n);
    let mut v = x0.stacked();
    for (k, a, b) in h.schedule.pieces(t0, t1) {
        let dt = (b - a) / steps_per_interval as f64;
        let half = h.plant.generator(&h.schedule.values[k])? * (0.5 * dt);
        let lhs = (&id - &half).lu();
        let rhs = &id + &half;
        for _ in 0..steps_per_interval {
            v = lhs
                .solve(&(&rhs * &v))
                .ok_or_else(|| Error::Numeric("singular implicit-midpoint system".into()))?;
        }
    }
    PhasePoint::from_stacked(&v)
}

/// One row of a sampled trajectory.
#[derive(Debug, Clone)]
pub struct TrajectorySample {
    pub t: f64,
    pub point: PhasePoint,
    /// `ℍ` of `H(t)` at this point.
    pub energy: f64,
}

/// Samples the flow at the given non-decreasing times, starting from `x0` at `times[0]`.
pub fn sample_trajectory(
    h: &ControlledHamiltonian,
    x0: &PhasePoint,
    times: &[f64],
) -> Result<Vec<TrajectorySample>> {
    let mut out = Vec::with_capacity(times.len());
    let mut x = x0.clone();
    let mut prev = match times.first() {
        Some(&t) => t,
        None => return Ok(out),
    };
    for &t in times {
        x = evolve(h, &x, prev, t)?;
        let energy = ClassicalHamiltonian::new(h.hamiltonian_at(t)?)?.value(&x)?;
        out.push(TrajectorySample { t, point: x.clone(), energy });
        prev = t;
    }
    Ok(out)
}

/// Weighted atoms standing in for a phase-space density.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseEnsemble {
    members: Vec<(f64, PhasePoint)>,
}

impl PhaseEnsemble {
    pub fn new(members: Vec<(f64, PhasePoint)>) -> Result<Self> {
        let n = members
            .first()
            .map(|(_, x)| x.dim())
            .ok_or_else(|| Error::InvalidArgument("ensemble needs at least one member".into()))?;
        let mut total = 0.0;
        for (w, x) in &members {
            check_dim(n, x.dim())?;
            if !(w.is_finite() && *w > 0.0) {
                return Err(Error::InvalidArgument(format!("ensemble weight {w} is not positive")));
            }
            total += w;
        }
        if (total - 1.0).abs() > 1e-10 {
            return Err(Error::InvalidArgument(format!("ensemble weights sum to {total}")));
        }
        Ok(Self { members })
    }

    /// Members whose weights are Born probabilities of a normalized state.
    pub(crate) fn from_members_unchecked(members: Vec<(f64, PhasePoint)>) -> Self {
        Self { members }
    }

    pub fn singleton(x: PhasePoint) -> Self {
        Self { members: vec![(1.0, x)] }
    }

    pub fn members(&self) -> &[(f64, PhasePoint)] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.members[0].1.dim()
    }

    /// Density matrix `Σ w |ψ⟩⟨ψ|` of the atoms.
    pub fn density_matrix(&self) -> CMatrix {
        let n = self.dim();
        let mut rho = CMatrix::zeros(n, n);
        for (w, x) in &self.members {
            let psi = x.to_state().into_vector();
            rho += &psi * psi.adjoint() * c(*w, 0.0);
        }
        rho
    }
}

/// Liouville transport of an atomic density: each atom follows the flow,
/// weights are unchanged.
pub fn transport_ensemble(
    h: &ControlledHamiltonian,
    e: &PhaseEnsemble,
    t0: f64,
    t1: f64,
) -> Result<PhaseEnsemble> {
    check_dim(h.dim(), e.dim())?;
    let block = evolve_block(h, t0, t1)?;
    let members = e
        .members
        .par_iter()
        .map(|(w, x)| Ok((*w, x.transform(&block)?)))
        .collect::<Result<Vec<_>>>()?;
    Ok(PhaseEnsemble { members })
}
