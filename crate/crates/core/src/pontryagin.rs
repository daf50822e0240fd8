//! Pontryagin maximum principle in Strocchi coordinates.
//!
//! The extended state is `x = (x₀, y)` with `y = (q, p)` and `ẏ = K(u) y`,
//! `K(u)` the real generator of `H₀ + Σ u_j H_j`, and `ẋ₀ = X₀(u)` the running
//! cost. With adjoint `φ = (φ₀, φ_y)` the control Hamiltonian is
//!
//! `𝐇(x, φ, u) = φ₀ X₀(u) + φ_yᵀ K(u) y`.
//!
//! `K` is antisymmetric, so the adjoint equation `φ̇_y = −K(u)ᵀ φ_y` is the
//! same flow as the state and `φ₀` is constant. The normal case `φ₀ = −1` is
//! used throughout. The terminal state is imposed by a quadratic penalty whose
//! weight is escalated until the requested fidelity is met.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::dynamics::{BilinearPlant, ControlSchedule};
use crate::error::{check_dim, Error, Result};
use crate::kahler::PhasePoint;
use crate::linalg::{hamiltonian_generator, RMatrix, RVector};
use crate::numeric::{levenberg_marquardt, LmOptions};

/// Running cost `X₀(u) ≥ 0`, separable over channels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum CostIntegrand {
    /// `Σ u_j²`.
    Energy,
    /// `Σ |u_j|`.
    L1,
    /// `Σ g(u_j)` with `g` piecewise linear through `points` (sorted by `u`).
    Tabulated { points: Vec<(f64, f64)> },
}

impl CostIntegrand {
    pub fn validate(&self) -> Result<()> {
        if let CostIntegrand::Tabulated { points } = self {
            if points.len() < 2 {
                return Err(Error::InvalidArgument("tabulated cost needs at least two points".into()));
            }
            for w in points.windows(2) {
                if w[1].0.partial_cmp(&w[0].0) != Some(std::cmp::Ordering::Greater) {
                    return Err(Error::InvalidArgument("tabulated cost abscissae must increase".into()));
                }
            }
            if points.iter().any(|&(u, g)| !u.is_finite() || !g.is_finite() || g < 0.0) {
                return Err(Error::InvalidArgument("tabulated cost values must be finite and non-negative".into()));
            }
        }
        Ok(())
    }

    pub fn channel(&self, u: f64) -> f64 {
        match self {
            CostIntegrand::Energy => u * u,
            CostIntegrand::L1 => u.abs(),
            CostIntegrand::Tabulated { points } => interpolate(points, u),
        }
    }

    pub fn value(&self, u: &[f64]) -> f64 {
        u.iter().map(|&v| self.channel(v)).sum()
    }
}

fn interpolate(points: &[(f64, f64)], u: f64) -> f64 {
    let first = points[0];
    let last = points[points.len() - 1];
    if u <= first.0 {
        return first.1;
    }
    if u >= last.0 {
        return last.1;
    }
    let i = points.partition_point(|p| p.0 <= u);
    let (a, b) = (points[i - 1], points[i]);
    a.1 + (b.1 - a.1) * (u - a.0) / (b.0 - a.0)
}

/// Per-channel closed intervals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<(f64, f64)>", into = "Vec<(f64, f64)>")]
pub struct ControlDomain {
    bounds: Vec<(f64, f64)>,
}

impl ControlDomain {
    pub fn new(bounds: Vec<(f64, f64)>) -> Result<Self> {
        for (j, &(lo, hi)) in bounds.iter().enumerate() {
            if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
                return Err(Error::InvalidArgument(format!("channel {j} has invalid bounds [{lo}, {hi}]")));
            }
        }
        Ok(Self { bounds })
    }

    /// `[−a, a]` on every channel.
    pub fn symmetric(channels: usize, a: f64) -> Result<Self> {
        Self::new(vec![(-a, a); channels])
    }

    pub fn bounds(&self) -> &[(f64, f64)] {
        &self.bounds
    }

    pub fn channels(&self) -> usize {
        self.bounds.len()
    }

    pub fn check(&self, u: &[f64]) -> Result<()> {
        check_dim(self.bounds.len(), u.len())?;
        for (j, (&v, &(lo, hi))) in u.iter().zip(&self.bounds).enumerate() {
            if !(lo..=hi).contains(&v) {
                return Err(Error::ControlOutOfDomain { channel: j, value: v, lo, hi });
            }
        }
        Ok(())
    }
}

impl TryFrom<Vec<(f64, f64)>> for ControlDomain {
    type Error = Error;
    fn try_from(b: Vec<(f64, f64)>) -> Result<Self> {
        Self::new(b)
    }
}

impl From<ControlDomain> for Vec<(f64, f64)> {
    fn from(d: ControlDomain) -> Self {
        d.bounds
    }
}

/// Extended state and adjoint.
#[derive(Debug, Clone, PartialEq)]
pub struct PmpState {
    pub x0: f64,
    pub y: RVector,
    pub phi0: f64,
    pub phi: RVector,
}

impl PmpState {
    pub fn new(x0: f64, y: RVector, phi0: f64, phi: RVector) -> Result<Self> {
        check_dim(y.len(), phi.len())?;
        if !y.len().is_multiple_of(2) || y.is_empty() {
            return Err(Error::InvalidArgument("state must have even positive length 2N".into()));
        }
        Ok(Self { x0, y, phi0, phi })
    }

    pub fn from_point(x: &PhasePoint, phi0: f64, phi: RVector) -> Result<Self> {
        Self::new(0.0, x.stacked(), phi0, phi)
    }
}

fn generators(plant: &BilinearPlant) -> (RMatrix, Vec<RMatrix>) {
    (
        hamiltonian_generator(plant.drift()),
        plant.controls().iter().map(hamiltonian_generator).collect(),
    )
}

fn assemble(k0: &RMatrix, kj: &[RMatrix], u: &[f64]) -> RMatrix {
    let mut k = k0.clone();
    for (m, &v) in kj.iter().zip(u) {
        k += m * v;
    }
    k
}

fn check_state(s: &PmpState, plant: &BilinearPlant) -> Result<()> {
    check_dim(2 * plant.dim(), s.y.len())?;
    check_dim(2 * plant.dim(), s.phi.len())
}

/// `𝐇 = φ₀ X₀(u) + φ_yᵀ K(u) y`.
pub fn control_hamiltonian(
    s: &PmpState,
    u: &[f64],
    plant: &BilinearPlant,
    cost: &CostIntegrand,
    domain: &ControlDomain,
) -> Result<f64> {
    check_state(s, plant)?;
    check_dim(plant.channels(), u.len())?;
    domain.check(u)?;
    let k = plant.generator(u)?;
    Ok(s.phi0 * cost.value(u) + s.phi.dot(&(k * &s.y)))
}

/// `∂𝐇/∂φ_y = K(u) y`.
pub fn state_rhs(s: &PmpState, u: &[f64], plant: &BilinearPlant) -> Result<RVector> {
    check_state(s, plant)?;
    Ok(plant.generator(u)? * &s.y)
}

/// `−∂𝐇/∂y = −K(u)ᵀ φ_y`.
pub fn adjoint_rhs(s: &PmpState, u: &[f64], plant: &BilinearPlant) -> Result<RVector> {
    check_state(s, plant)?;
    Ok(-(plant.generator(u)?.transpose() * &s.phi))
}

/// Switching functions `σ_j = φ_yᵀ K_j y`, the linear coefficients of `𝐇` in `u`.
pub fn switching(s: &PmpState, plant: &BilinearPlant) -> Result<Vec<f64>> {
    check_state(s, plant)?;
    Ok(plant.controls().iter().map(|h| s.phi.dot(&(hamiltonian_generator(h) * &s.y))).collect())
}

/// Better of two candidates under `f`, ties to smaller `|u|` then smaller `u`.
fn prefer(f: &impl Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    let (fa, fb) = (f(a), f(b));
    let scale = fa.abs().max(fb.abs()).max(1.0);
    if (fa - fb).abs() <= 1e-14 * scale {
        match a.abs().partial_cmp(&b.abs()) {
            Some(std::cmp::Ordering::Less) => a,
            Some(std::cmp::Ordering::Greater) => b,
            _ => a.min(b),
        }
    } else if fa > fb {
        a
    } else {
        b
    }
}

/// Maximizer of `φ₀ g(u) + σ u` over `[lo, hi]`.
pub fn argmax_channel(phi0: f64, sigma: f64, cost: &CostIntegrand, lo: f64, hi: f64) -> f64 {
    let f = |u: f64| phi0 * cost.channel(u) + sigma * u;
    let zero_in = lo <= 0.0 && 0.0 <= hi;
    let mut candidates = vec![lo, hi];
    match cost {
        CostIntegrand::Energy if phi0 < 0.0 => candidates.push((sigma / (-2.0 * phi0)).clamp(lo, hi)),
        CostIntegrand::Energy | CostIntegrand::L1 => {}
        CostIntegrand::Tabulated { points } => {
            candidates.extend(points.iter().map(|p| p.0).filter(|u| (lo..=hi).contains(u)));
        }
    }
    if zero_in {
        candidates.push(0.0);
    }
    candidates.into_iter().reduce(|a, b| prefer(&f, a, b)).expect("non-empty")
}

/// Pointwise maximizer of `𝐇` over the domain.
pub fn argmax_control(
    s: &PmpState,
    plant: &BilinearPlant,
    cost: &CostIntegrand,
    domain: &ControlDomain,
) -> Result<Vec<f64>> {
    check_dim(plant.channels(), domain.channels())?;
    let sigma = switching(s, plant)?;
    Ok(domain
        .bounds()
        .iter()
        .zip(&sigma)
        .map(|(&(lo, hi), &sg)| argmax_channel(s.phi0, sg, cost, lo, hi))
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TerminalPhase {
    /// Penalty `w ‖y(T) − y_goal‖²`.
    Fixed,
    /// Penalty against the goal rotated to the phase of `y(T)`, i.e.
    /// `2w (1 − |⟨goal|ψ(T)⟩|)`.
    Free,
}

#[derive(Debug, Clone)]
pub struct SweepOptions {
    pub t_final: f64,
    pub intervals: usize,
    /// Initial penalty weight `w`.
    pub penalty: f64,
    /// Number of ×10 escalations of `w` allowed.
    pub max_escalations: usize,
    pub fidelity_target: f64,
    pub max_iters: usize,
    /// Stop when `max |u_new − u_old| < tol`.
    pub tol: f64,
    /// Relaxation `β` of `u ← (1 − β) u + β argmax`.
    pub relaxation: f64,
    pub terminal_phase: TerminalPhase,
    pub initial: Option<Vec<Vec<f64>>>,
}

impl Default for SweepOptions {
    fn default() -> Self {
        Self {
            t_final: 1.0,
            intervals: 200,
            penalty: 10.0,
            max_escalations: 6,
            fidelity_target: 0.999,
            max_iters: 20_000,
            tol: 1e-8,
            relaxation: 0.5,
            terminal_phase: TerminalPhase::Fixed,
            initial: None,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct PmpSolution {
    pub schedule: ControlSchedule,
    /// Running cost `x₀(T)`.
    pub cost: f64,
    /// `|⟨goal|ψ(T)⟩|²`.
    pub fidelity: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Final penalty weight.
    pub penalty: f64,
    /// `𝐇` on each interval of the returned schedule.
    pub hamiltonian: Vec<f64>,
    /// `(w, penalized objective)` of every accepted iterate.
    #[serde(skip)]
    pub history: Vec<(f64, f64)>,
}

impl PmpSolution {
    /// `max 𝐇 − min 𝐇` over the intervals.
    pub fn hamiltonian_spread(&self) -> f64 {
        let max = self.hamiltonian.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let min = self.hamiltonian.iter().copied().fold(f64::INFINITY, f64::min);
        max - min
    }
}

/// Lower two-point Gauss–Legendre node on `[0, 1]`; the upper one is `1 − GAUSS_NODE`.
const GAUSS_NODE: f64 = 0.211_324_865_405_187_1;

struct Problem<'a> {
    k0: RMatrix,
    kj: Vec<RMatrix>,
    cost: &'a CostIntegrand,
    domain: &'a ControlDomain,
    y0: RVector,
    goal: RVector,
    h: f64,
    intervals: usize,
    phase: TerminalPhase,
}

struct Forward {
    /// `y` at every grid point.
    ys: Vec<RVector>,
    props: Vec<RMatrix>,
    running: f64,
}

impl Problem<'_> {
    fn forward(&self, u: &[Vec<f64>]) -> Forward {
        let mut ys = Vec::with_capacity(self.intervals + 1);
        let mut props = Vec::with_capacity(self.intervals);
        ys.push(self.y0.clone());
        let mut running = 0.0;
        for uk in u {
            let p = (assemble(&self.k0, &self.kj, uk) * self.h).exp();
            let next = &p * ys.last().expect("non-empty");
            ys.push(next);
            props.push(p);
            running += self.cost.value(uk) * self.h;
        }
        Forward { ys, props, running }
    }

    /// Goal rotated to the phase of `y` when the phase is free.
    fn aligned_goal(&self, y: &RVector) -> RVector {
        match self.phase {
            TerminalPhase::Fixed => self.goal.clone(),
            TerminalPhase::Free => {
                let n = y.len() / 2;
                let (gq, gp) = (self.goal.rows(0, n), self.goal.rows(n, n));
                let (yq, yp) = (y.rows(0, n), y.rows(n, n));
                // z = ⟨g|ψ⟩
                let re = gq.dot(&yq) + gp.dot(&yp);
                let im = gq.dot(&yp) - gp.dot(&yq);
                let r = re.hypot(im);
                if r == 0.0 {
                    return self.goal.clone();
                }
                let (c, s) = (re / r, im / r);
                let mut out = RVector::zeros(2 * n);
                for i in 0..n {
                    out[i] = c * gq[i] - s * gp[i];
                    out[n + i] = s * gq[i] + c * gp[i];
                }
                out
            }
        }
    }

    fn penalty(&self, w: f64, y: &RVector) -> f64 {
        w * (y - self.aligned_goal(y)).norm_squared()
    }

    fn objective(&self, w: f64, f: &Forward) -> f64 {
        f.running + self.penalty(w, f.ys.last().expect("non-empty"))
    }

    fn fidelity(&self, y: &RVector) -> f64 {
        let n = y.len() / 2;
        let (gq, gp) = (self.goal.rows(0, n), self.goal.rows(n, n));
        let (yq, yp) = (y.rows(0, n), y.rows(n, n));
        let re = gq.dot(&yq) + gp.dot(&yp);
        let im = gq.dot(&yp) - gp.dot(&yq);
        re * re + im * im
    }

    /// Adjoint at the start of every interval.
    fn backward(&self, w: f64, f: &Forward) -> Vec<RVector> {
        let y_t = f.ys.last().expect("non-empty");
        let mut phi = (y_t - self.aligned_goal(y_t)) * (-2.0 * w);
        let mut out = vec![RVector::zeros(0); self.intervals];
        for k in (0..self.intervals).rev() {
            phi = f.props[k].transpose() * phi;
            out[k] = phi.clone();
        }
        out
    }

    /// Interval-averaged switching functions under the current control.
    /// `prop` is the full-interval propagator, so the upper node comes from
    /// `prop · e^{−K c h}` at the cost of a single extra exponential.
    fn averaged_switching(&self, u: &[f64], y: &RVector, phi: &RVector, prop: &RMatrix) -> Vec<f64> {
        let lower = (assemble(&self.k0, &self.kj, u) * (GAUSS_NODE * self.h)).exp();
        let upper = prop * lower.transpose();
        let mut sigma = vec![0.0; self.kj.len()];
        for e in [&lower, &upper] {
            let (yt, pt) = (e * y, e * phi);
            for (s, kj) in sigma.iter_mut().zip(&self.kj) {
                *s += 0.5 * pt.dot(&(kj * &yt));
            }
        }
        sigma
    }

    fn argmax(&self, sigma: &[f64]) -> Vec<f64> {
        self.domain
            .bounds()
            .iter()
            .zip(sigma)
            .map(|(&(lo, hi), &s)| argmax_channel(-1.0, s, self.cost, lo, hi))
            .collect()
    }

    fn hamiltonians(&self, u: &[Vec<f64>], f: &Forward, phis: &[RVector]) -> Vec<f64> {
        u.iter()
            .enumerate()
            .map(|(k, uk)| {
                let kk = assemble(&self.k0, &self.kj, uk);
                -self.cost.value(uk) + phis[k].dot(&(kk * &f.ys[k]))
            })
            .collect()
    }

    fn schedule(&self, u: &[Vec<f64>]) -> Result<ControlSchedule> {
        let grid = (0..=self.intervals).map(|k| k as f64 * self.h).collect();
        ControlSchedule::new(grid, u.to_vec())
    }
}

fn max_change(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    a.iter()
        .zip(b)
        .flat_map(|(x, y)| x.iter().zip(y).map(|(p, q)| (p - q).abs()))
        .fold(0.0, f64::max)
}

fn setup<'a>(
    plant: &'a BilinearPlant,
    x_init: &PhasePoint,
    x_goal: &PhasePoint,
    cost: &'a CostIntegrand,
    domain: &'a ControlDomain,
    options: &SweepOptions,
) -> Result<Problem<'a>> {
    check_dim(plant.dim(), x_init.dim())?;
    check_dim(plant.dim(), x_goal.dim())?;
    check_dim(plant.channels(), domain.channels())?;
    cost.validate()?;
    if let CostIntegrand::Tabulated { points } = cost {
        let (first, last) = (points[0].0, points[points.len() - 1].0);
        if domain.bounds().iter().any(|&(lo, hi)| lo < first || hi > last) {
            return Err(Error::InvalidArgument("tabulated cost must cover the control domain".into()));
        }
    }
    if !(options.t_final > 0.0 && options.t_final.is_finite()) || options.intervals == 0 {
        return Err(Error::InvalidArgument("grid must have T > 0 and at least one interval".into()));
    }
    if options.penalty.is_nan() || options.penalty <= 0.0 {
        return Err(Error::InvalidArgument(format!("penalty weight must be positive, got {}", options.penalty)));
    }
    if !(options.relaxation > 0.0 && options.relaxation <= 1.0) {
        return Err(Error::InvalidArgument("relaxation must lie in (0, 1]".into()));
    }
    let (k0, kj) = generators(plant);
    Ok(Problem {
        k0,
        kj,
        cost,
        domain,
        y0: x_init.stacked(),
        goal: x_goal.stacked(),
        h: options.t_final / options.intervals as f64,
        intervals: options.intervals,
        phase: options.terminal_phase,
    })
}

/// Forward–backward sweep with relaxation and penalty continuation.
///
/// Each iteration integrates the state forward, sets `φ_y(T)` from the
/// terminal penalty, integrates the adjoint backward and moves every interval
/// toward the maximizer of its averaged `𝐇`. Steps that raise the penalized
/// objective are retried with half the relaxation. When the schedule settles
/// but the fidelity target is missed, the penalty weight grows ×10.
pub fn forward_backward_sweep(
    plant: &BilinearPlant,
    x_init: &PhasePoint,
    x_goal: &PhasePoint,
    cost: &CostIntegrand,
    domain: &ControlDomain,
    options: &SweepOptions,
) -> Result<PmpSolution> {
    let pb = setup(plant, x_init, x_goal, cost, domain, options)?;
    let r = plant.channels();
    let mut u = match &options.initial {
        Some(init) => {
            check_dim(pb.intervals, init.len())?;
            for uk in init {
                domain.check(uk)?;
            }
            init.clone()
        }
        None => vec![(0..r).map(|j| 0.0f64.clamp(domain.bounds()[j].0, domain.bounds()[j].1)).collect(); pb.intervals],
    };
    let mut w = options.penalty;
    let mut escalations = 0;
    let mut fwd = pb.forward(&u);
    let mut objective = pb.objective(w, &fwd);
    let mut history = vec![(w, objective)];
    let mut converged = false;
    let mut iterations = 0;
    // last accepted relaxation; the next iteration starts from twice this
    let mut step = options.relaxation;

    while iterations < options.max_iters {
        iterations += 1;
        let phis = pb.backward(w, &fwd);
        let target: Vec<Vec<f64>> = u
            .iter()
            .enumerate()
            .map(|(k, uk)| pb.argmax(&pb.averaged_switching(uk, &fwd.ys[k], &phis[k], &fwd.props[k])))
            .collect();
        let change = max_change(&target, &u);

        let mut stalled = false;
        if change >= options.tol {
            let mut beta = (2.0 * step).min(options.relaxation);
            let mut accepted = false;
            while beta >= 1e-10 {
                let trial: Vec<Vec<f64>> = u
                    .iter()
                    .zip(&target)
                    .map(|(a, b)| a.iter().zip(b).map(|(x, y)| (1.0 - beta) * x + beta * y).collect())
                    .collect();
                let f = pb.forward(&trial);
                let obj = pb.objective(w, &f);
                if obj <= objective {
                    u = trial;
                    fwd = f;
                    objective = obj;
                    step = beta;
                    history.push((w, obj));
                    accepted = true;
                    break;
                }
                beta *= 0.5;
            }
            if accepted {
                continue;
            }
            stalled = true;
        }
        // Settled: either the schedule stopped moving or no relaxed step lowers
        // the objective by a representable amount.
        let fid = pb.fidelity(fwd.ys.last().expect("non-empty"));
        if fid >= options.fidelity_target {
            converged = change < options.tol || (stalled && change < options.tol.sqrt());
            break;
        }
        if escalations >= options.max_escalations {
            break;
        }
        escalations += 1;
        w *= 10.0;
        step = options.relaxation;
        objective = pb.objective(w, &fwd);
        history.push((w, objective));
    }

    let phis = pb.backward(w, &fwd);
    let hamiltonian = pb.hamiltonians(&u, &fwd, &phis);
    let fidelity = pb.fidelity(fwd.ys.last().expect("non-empty"));
    Ok(PmpSolution {
        schedule: pb.schedule(&u)?,
        cost: fwd.running,
        fidelity,
        iterations,
        converged: converged && fidelity >= options.fidelity_target,
        penalty: w,
        hamiltonian,
        history,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct ShootingResult {
    pub schedule: ControlSchedule,
    /// `‖y(T) − y_goal‖`, after phase alignment when the phase is free.
    pub terminal_error: f64,
    pub phi_initial: Vec<f64>,
    pub evaluations: usize,
}

/// Shooting on `φ_y(0)`: integrates state and adjoint forward with the
/// pointwise maximizing control (sampled at interval midpoints) and solves
/// `y(T) = y_goal` by Levenberg–Marquardt.
pub fn shooting(
    plant: &BilinearPlant,
    x_init: &PhasePoint,
    x_goal: &PhasePoint,
    cost: &CostIntegrand,
    domain: &ControlDomain,
    options: &SweepOptions,
    phi_guess: &[f64],
) -> Result<ShootingResult> {
    let pb = setup(plant, x_init, x_goal, cost, domain, options)?;
    check_dim(pb.y0.len(), phi_guess.len())?;
    let run = |phi0: &[f64]| -> (Vec<Vec<f64>>, RVector) {
        let mut y = pb.y0.clone();
        let mut phi = DVector::from_column_slice(phi0);
        let mut u = Vec::with_capacity(pb.intervals);
        for _ in 0..pb.intervals {
            let mut uk = vec![0.0; pb.kj.len()];
            // fixed point of u ↦ argmax(σ at the midpoint under u)
            for _ in 0..4 {
                let half = (assemble(&pb.k0, &pb.kj, &uk) * (0.5 * pb.h)).exp();
                let (ym, pm) = (&half * &y, &half * &phi);
                let sigma: Vec<f64> = pb.kj.iter().map(|kj| pm.dot(&(kj * &ym))).collect();
                uk = pb.argmax(&sigma);
            }
            let p = (assemble(&pb.k0, &pb.kj, &uk) * pb.h).exp();
            y = &p * y;
            phi = &p * phi;
            u.push(uk);
        }
        (u, y)
    };
    let residual = |phi0: &[f64]| -> Vec<f64> {
        let (_, y) = run(phi0);
        (&y - pb.aligned_goal(&y)).iter().copied().collect()
    };
    let rep = levenberg_marquardt(
        residual,
        phi_guess,
        &LmOptions { max_evaluations: 2_000, tolerance: 1e-12, fd_step: 1e-7 },
    );
    let (u, _) = run(&rep.params);
    Ok(ShootingResult {
        schedule: pb.schedule(&u)?,
        terminal_error: rep.residual_norm,
        phi_initial: rep.params,
        evaluations: rep.evaluations,
    })
}

/// Adjoint `φ_y(0)` of a schedule under the given penalty weight.
pub fn initial_adjoint(
    plant: &BilinearPlant,
    x_init: &PhasePoint,
    x_goal: &PhasePoint,
    schedule: &ControlSchedule,
    penalty: f64,
    phase: TerminalPhase,
) -> Result<RVector> {
    let cost = CostIntegrand::Energy;
    let domain = ControlDomain::new(vec![(f64::MIN, f64::MAX); plant.channels()])?;
    let intervals = schedule.intervals();
    let options = SweepOptions {
        t_final: schedule.end() - schedule.start(),
        intervals,
        terminal_phase: phase,
        ..SweepOptions::default()
    };
    let pb = setup(plant, x_init, x_goal, &cost, &domain, &options)?;
    let f = pb.forward(schedule.values());
    let phis = pb.backward(penalty, &f);
    Ok(phis[0].clone())
}
