//! Control by measurement plus evolution.
//!
//! When the dynamical group `G` generated by the plant is a proper subgroup
//! of `U(N)`, unitary control alone cannot leave the orbit `Gψ₀`. Measuring an
//! observable `M = Σ a_i P_{φ_i}` whose eigenbasis `{φ_i}` lies inside the
//! orbit of the goal `ψ_f` projects any state onto some `φ_i`, and a group
//! element (the steering word of `φ_i`) then carries it to `ψ_f`.
//!
//! Words are realized on the plant by fitting piecewise-constant schedules,
//! compiled once per frame vector and reused for every run.

use std::f64::consts::FRAC_PI_2;

use rand::Rng;
use serde::Serialize;

use crate::controllability::{search_chart, ExpChart, LieClosureReport};
use crate::dynamics::{evolve_block, BilinearPlant, ControlSchedule, ControlledHamiltonian};
use crate::error::{check_dim, Error, Result};
use crate::kahler::{to_phase, Observable, PhasePoint, StateVector};
use crate::linalg::{c, complexify, realify, CMatrix, CVector, RMatrix, SkewExp, I};
use crate::measurement::measure_selective;
use crate::numeric::{levenberg_marquardt, LmOptions};
use crate::three_level;

/// One factor `exp(angle · generator)` of a steering word.
#[derive(Debug, Clone, Serialize)]
pub struct SteeringLetter {
    pub label: String,
    #[serde(skip)]
    pub generator: CMatrix,
    pub angle: f64,
}

/// Group element as an ordered product of letters; the first letter acts first.
#[derive(Debug, Clone, Default, Serialize)]
#[serde(transparent)]
pub struct SteeringWord {
    letters: Vec<SteeringLetter>,
}

impl SteeringWord {
    pub fn new(letters: Vec<SteeringLetter>) -> Self {
        Self { letters }
    }

    pub fn letters(&self) -> &[SteeringLetter] {
        &self.letters
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }

    pub fn unitary(&self, n: usize) -> CMatrix {
        let mut u = CMatrix::identity(n, n);
        for l in &self.letters {
            u = SkewExp::new(&l.generator).exp(l.angle) * u;
        }
        u
    }

    pub fn inverse(&self) -> Self {
        Self {
            letters: self
                .letters
                .iter()
                .rev()
                .map(|l| SteeringLetter { label: l.label.clone(), generator: l.generator.clone(), angle: -l.angle })
                .collect(),
        }
    }

    pub fn describe(&self) -> String {
        self.letters.iter().map(|l| format!("{}({})", l.label, l.angle)).collect::<Vec<_>>().join(" ")
    }
}

/// `M = Σ a_i P_{φ_i}` together with a steering word for every frame vector
/// that lies in the goal orbit.
#[derive(Debug, Clone)]
pub struct SteeringObservable {
    eigenvalues: Vec<f64>,
    frame: Vec<StateVector>,
    words: Vec<Option<SteeringWord>>,
    goal: StateVector,
}

impl SteeringObservable {
    pub fn new(
        eigenvalues: Vec<f64>,
        frame: Vec<StateVector>,
        words: Vec<Option<SteeringWord>>,
        goal: StateVector,
    ) -> Result<Self> {
        let n = goal.dim();
        check_dim(n, frame.len())?;
        check_dim(n, words.len())?;
        check_dim(n, eigenvalues.len())?;
        for f in &frame {
            check_dim(n, f.dim())?;
        }
        let obs = Self { eigenvalues, frame, words, goal };
        let dev = obs.gram_deviation();
        if dev > 1e-10 {
            return Err(Error::InvalidArgument(format!("frame is not orthonormal (Gram deviation {dev:e})")));
        }
        obs.measurement()?;
        Ok(obs)
    }

    pub fn dim(&self) -> usize {
        self.goal.dim()
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn frame(&self) -> &[StateVector] {
        &self.frame
    }

    pub fn words(&self) -> &[Option<SteeringWord>] {
        &self.words
    }

    pub fn goal(&self) -> &StateVector {
        &self.goal
    }

    /// Same frame and words with new distinct eigenvalues.
    pub fn with_eigenvalues(&self, eigenvalues: Vec<f64>) -> Result<Self> {
        Self::new(eigenvalues, self.frame.clone(), self.words.clone(), self.goal.clone())
    }

    pub fn measurement(&self) -> Result<Observable> {
        let vectors: Vec<CVector> = self.frame.iter().map(|f| f.amplitudes().clone()).collect();
        Observable::from_frame(&self.eigenvalues, &vectors)
    }

    pub fn gram_deviation(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for (i, a) in self.frame.iter().enumerate() {
            for (j, b) in self.frame.iter().enumerate() {
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((a.amplitudes().dotc(b.amplitudes()) - c(target, 0.0)).norm());
            }
        }
        worst
    }

    /// Worst fidelity `|⟨ψ_f|W_i φ_i⟩|²` over frame vectors that carry a word.
    pub fn word_fidelity(&self) -> f64 {
        let n = self.dim();
        self.frame
            .iter()
            .zip(&self.words)
            .filter_map(|(f, w)| w.as_ref().map(|w| (f, w)))
            .map(|(f, w)| self.goal.amplitudes().dotc(&(w.unitary(n) * f.amplitudes())).norm_sqr())
            .fold(1.0, f64::min)
    }
}

fn letter(label: &str, generator: &CMatrix, angle: f64) -> SteeringLetter {
    SteeringLetter { label: label.to_string(), generator: generator.clone(), angle }
}

/// Frame `{h₁(−π/2)ψ_f, h₂(π/2)h₁(−π/2)ψ_f, ψ_f}` of the three-level system,
/// with eigenvalues `1, 2, 3`.
pub fn build_frame_3level(goal: &StateVector) -> Result<SteeringObservable> {
    check_dim(3, goal.dim())?;
    goal.ensure_normalized()?;
    let [k1, k2, _] = three_level::generators();
    let into_first = SteeringWord::new(vec![letter("h1", &k1, -FRAC_PI_2)]);
    let into_second = SteeringWord::new(vec![letter("h1", &k1, -FRAC_PI_2), letter("h2", &k2, FRAC_PI_2)]);
    let psi1 = goal.apply(&into_first.unitary(3))?;
    let psi2 = goal.apply(&into_second.unitary(3))?;
    SteeringObservable::new(
        vec![1.0, 2.0, 3.0],
        vec![psi1, psi2, goal.clone()],
        vec![Some(into_first.inverse()), Some(into_second.inverse()), Some(SteeringWord::default())],
        goal.clone(),
    )
}

/// Searches the orbit of `goal` under the closure group for an orthonormal
/// frame, greedily adding one orbit vector orthogonal to those chosen so far.
///
/// If the search fails and `psi0` is given, falls back to a frame built
/// around the orbit vector with the largest overlap with `psi0`; only that
/// vector and the goal carry steering words.
pub fn build_frame_general<R: Rng + ?Sized>(
    goal: &StateVector,
    closure: &LieClosureReport,
    budget: usize,
    psi0: Option<&StateVector>,
    rng: &mut R,
) -> Result<SteeringObservable> {
    let n = closure.n();
    check_dim(n, goal.dim())?;
    goal.ensure_normalized()?;
    if let Some(p) = psi0 {
        check_dim(n, p.dim())?;
        p.ensure_normalized()?;
    }
    if closure.verdict().is_controllable() {
        return Err(Error::FrameUnnecessary);
    }
    if budget == 0 {
        return Err(Error::FrameNotFound { evaluations: 0 });
    }
    let chart = ExpChart::from_report(closure);
    let labels: Vec<String> = (0..chart.len()).map(|k| format!("b{k}")).collect();
    let to_word = |letters: &[(usize, f64)]| {
        SteeringWord::new(
            letters.iter().map(|&(k, a)| letter(&labels[k], &closure.basis()[k], a)).collect(),
        )
    };
    let g = goal.amplitudes().clone();

    let mut used = 0;
    while used < budget {
        let mut chosen: Vec<CVector> = vec![g.clone()];
        let mut words = Vec::new();
        for _ in 1..n {
            let per_vector = (budget - used).min(20_000);
            let fit = search_chart(&chart, per_vector, 1e-12, rng, |u| {
                let v = u * &g;
                chosen.iter().flat_map(|f| {
                    let z = f.dotc(&v);
                    [z.re, z.im]
                })
                .collect()
            });
            used += fit.evaluations;
            if fit.residual_norm > 1e-12 {
                break;
            }
            chosen.push(chart.unitary(&fit.letters) * &g);
            words.push(to_word(&fit.letters).inverse());
        }
        if chosen.len() == n {
            let mut frame: Vec<StateVector> =
                chosen[1..].iter().map(|v| StateVector::from_vector(v.clone())).collect::<Result<_>>()?;
            frame.push(goal.clone());
            let mut all_words: Vec<Option<SteeringWord>> = words.into_iter().map(Some).collect();
            all_words.push(Some(SteeringWord::default()));
            let values = (1..=n).map(|i| i as f64).collect();
            return SteeringObservable::new(values, frame, all_words, goal.clone());
        }
    }

    let Some(psi0) = psi0 else {
        return Err(Error::FrameNotFound { evaluations: used });
    };
    // overlap residual 1 − |⟨ψ₀|Uψ_f⟩| has no exact zero in general
    let fit = search_chart(&chart, 2_000, 0.0, rng, |u| {
        vec![1.0 - psi0.amplitudes().dotc(&(u * &g)).norm()]
    });
    let phi = chart.unitary(&fit.letters) * &g;
    let mut frame = vec![phi.clone()];
    for k in 0..n {
        if frame.len() == n {
            break;
        }
        let mut v = CVector::zeros(n);
        v[k] = c(1.0, 0.0);
        for _ in 0..2 {
            for f in &frame {
                v -= f * f.dotc(&v);
            }
        }
        let norm = v.norm();
        if norm > 1e-8 {
            frame.push(v.unscale(norm));
        }
    }
    let mut words = vec![Some(to_word(&fit.letters).inverse())];
    words.extend((1..n).map(|_| None));
    let frame = frame.into_iter().map(StateVector::from_vector).collect::<Result<Vec<_>>>()?;
    let values = (1..=n).map(|i| i as f64).collect();
    SteeringObservable::new(values, frame, words, goal.clone())
}

#[derive(Debug, Clone, Copy)]
pub struct CompileOptions {
    /// Constant-control segments; `None` picks enough to cover the group.
    pub segments: Option<usize>,
    /// Total residual evaluations across restarts.
    pub budget: usize,
    /// Required `min_χ ‖U_schedule − e^{iχ} U_target‖_F`.
    pub tolerance: f64,
}

impl Default for CompileOptions {
    fn default() -> Self {
        Self { segments: None, budget: 400_000, tolerance: 1e-10 }
    }
}

/// A schedule on `[0, T]` realizing a target unitary up to global phase.
#[derive(Debug, Clone)]
pub struct CompiledControl {
    pub schedule: ControlSchedule,
    /// Real `2N × 2N` propagator of the schedule.
    pub propagator: RMatrix,
    pub residual: f64,
}

impl CompiledControl {
    pub fn duration(&self) -> f64 {
        self.schedule.end() - self.schedule.start()
    }
}

fn phase_residual(u: &CMatrix, target: &CMatrix) -> f64 {
    let overlap = target.adjoint() * u;
    let tr = overlap.trace();
    let phase = if tr.norm() > 0.0 { tr / tr.norm() } else { c(1.0, 0.0) };
    (u - target * phase).norm()
}

/// Fits piecewise-constant controls so that the plant propagator equals
/// `target` up to a global phase.
pub fn compile_unitary<R: Rng + ?Sized>(
    plant: &BilinearPlant,
    target: &CMatrix,
    options: &CompileOptions,
    rng: &mut R,
) -> Result<CompiledControl> {
    let n = plant.dim();
    check_dim(n, target.nrows())?;
    check_dim(n, target.ncols())?;
    let r = plant.channels();
    let stride = r + 1;
    let segments = options.segments.unwrap_or_else(|| (n * n + 1).div_ceil(stride).max(4) + 1);
    let hamiltonians = |params: &[f64]| -> Vec<(Vec<f64>, f64)> {
        (0..segments)
            .map(|k| {
                let seg = &params[k * stride..(k + 1) * stride];
                (seg[..r].to_vec(), seg[r] * seg[r])
            })
            .collect()
    };
    let propagate = |params: &[f64]| -> CMatrix {
        let mut u = CMatrix::identity(n, n);
        for (controls, dt) in hamiltonians(params) {
            let h = plant.hamiltonian(&controls).expect("channel count fixed");
            u = (h * (-I * dt)).exp() * u;
        }
        u
    };
    let residual = |params: &[f64]| -> Vec<f64> {
        let chi = params[segments * stride];
        let d = propagate(params) - target * c(chi.cos(), chi.sin());
        d.iter().flat_map(|z| [z.re, z.im]).collect()
    };

    let mut used = 0;
    let mut best: Option<CompiledControl> = None;
    while used < options.budget {
        let mut start: Vec<f64> = Vec::with_capacity(segments * stride + 1);
        for _ in 0..segments {
            for _ in 0..r {
                start.push(rng.random_range(-2.0..2.0));
            }
            start.push(rng.random_range(0.5..1.5));
        }
        start.push(rng.random_range(-std::f64::consts::PI..std::f64::consts::PI));
        let opts = LmOptions {
            max_evaluations: (options.budget - used).min(400 * (start.len() + 1)),
            tolerance: 0.1 * options.tolerance,
            ..LmOptions::default()
        };
        let rep = levenberg_marquardt(residual, &start, &opts);
        used += rep.evaluations;
        if rep.residual_norm > options.tolerance {
            continue;
        }
        let mut grid = vec![0.0];
        let mut values = Vec::new();
        for (controls, dt) in hamiltonians(&rep.params) {
            let t = *grid.last().expect("grid starts non-empty");
            if dt > 1e-13 && t + dt > t {
                grid.push(t + dt);
                values.push(controls);
            }
        }
        if values.is_empty() {
            // target is a phase multiple of the identity
            grid.push(f64::EPSILON);
            values.push(vec![0.0; r]);
        }
        let schedule = ControlSchedule::new(grid, values)?;
        let h = ControlledHamiltonian::new(plant.clone(), schedule.clone())?;
        let propagator = evolve_block(&h, schedule.start(), schedule.end())?;
        let res = phase_residual(&complexify(&propagator), target);
        let candidate = CompiledControl { schedule, propagator, residual: res };
        if res <= options.tolerance {
            return Ok(candidate);
        }
        if best.as_ref().is_none_or(|b| res < b.residual) {
            best = Some(candidate);
        }
    }
    Err(Error::Numeric(format!(
        "no schedule within {:e} of the target after {used} evaluations (best {:e})",
        options.tolerance,
        best.map_or(f64::INFINITY, |b| b.residual)
    )))
}

#[derive(Debug, Clone, Serialize)]
#[serde(tag = "action", rename_all = "snake_case")]
pub enum ProtocolStep {
    Measure { outcome: usize, value: f64, probability: f64, state: PhasePoint },
    Evolve { word: String, duration: f64, state: PhasePoint },
    Disturb { state: PhasePoint },
}

impl ProtocolStep {
    pub fn state(&self) -> &PhasePoint {
        match self {
            ProtocolStep::Measure { state, .. }
            | ProtocolStep::Evolve { state, .. }
            | ProtocolStep::Disturb { state } => state,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ProtocolTrace {
    pub steps: Vec<ProtocolStep>,
    pub final_fidelity: f64,
}

impl ProtocolTrace {
    /// One JSON object per step, then a closing summary line.
    pub fn to_json_lines(&self) -> String {
        let mut out = String::new();
        for s in &self.steps {
            out.push_str(&serde_json::to_string(s).expect("steps serialize"));
            out.push('\n');
        }
        out.push_str(&serde_json::json!({ "final_fidelity": self.final_fidelity }).to_string());
        out.push('\n');
        out
    }

    pub fn final_state(&self) -> Option<&PhasePoint> {
        self.steps.last().map(ProtocolStep::state)
    }
}

/// A steering observable with every word compiled onto a plant.
#[derive(Debug, Clone)]
pub struct SteeringProtocol {
    observable: SteeringObservable,
    measurement: Observable,
    controls: Vec<Option<CompiledControl>>,
}

impl SteeringProtocol {
    pub fn compile<R: Rng + ?Sized>(
        observable: SteeringObservable,
        plant: &BilinearPlant,
        options: &CompileOptions,
        rng: &mut R,
    ) -> Result<Self> {
        check_dim(observable.dim(), plant.dim())?;
        let n = plant.dim();
        let measurement = observable.measurement()?;
        let mut controls = Vec::with_capacity(n);
        for w in observable.words() {
            controls.push(match w {
                Some(w) if !w.is_empty() => Some(compile_unitary(plant, &w.unitary(n), options, rng)?),
                _ => None,
            });
        }
        Ok(Self { observable, measurement, controls })
    }

    pub fn observable(&self) -> &SteeringObservable {
        &self.observable
    }

    pub fn controls(&self) -> &[Option<CompiledControl>] {
        &self.controls
    }

    /// Same compiled words, relabeled eigenvalues.
    pub fn with_eigenvalues(&self, eigenvalues: Vec<f64>) -> Result<Self> {
        let observable = self.observable.with_eigenvalues(eigenvalues)?;
        let measurement = observable.measurement()?;
        Ok(Self { observable, measurement, controls: self.controls.clone() })
    }

    /// Measure `M`, then run the compiled word of the recorded outcome.
    pub fn run<R: Rng + ?Sized>(&self, x0: &PhasePoint, rng: &mut R) -> Result<ProtocolTrace> {
        check_dim(self.observable.dim(), x0.dim())?;
        let out = measure_selective(x0, &self.measurement, rng)?;
        let frame_index = self.frame_index(out.value)?;
        let mut state = out.post_state.clone();
        let mut steps = vec![ProtocolStep::Measure {
            outcome: frame_index,
            value: out.value,
            probability: out.probability,
            state: out.post_state,
        }];
        if let (Some(ctrl), Some(word)) = (&self.controls[frame_index], &self.observable.words[frame_index]) {
            state = state.transform(&ctrl.propagator)?;
            steps.push(ProtocolStep::Evolve {
                word: word.describe(),
                duration: ctrl.duration(),
                state: state.clone(),
            });
        }
        let final_fidelity = self.observable.goal.fidelity(&state.to_state())?;
        Ok(ProtocolTrace { steps, final_fidelity })
    }

    fn frame_index(&self, value: f64) -> Result<usize> {
        self.observable
            .eigenvalues
            .iter()
            .position(|&a| a == value)
            .ok_or(Error::UnknownEigenvalue { value })
    }
}

/// Compiles the words of `observable` on `plant` and runs one protocol.
pub fn steer<R: Rng + ?Sized>(
    x0: &PhasePoint,
    observable: &SteeringObservable,
    plant: &BilinearPlant,
    rng: &mut R,
) -> Result<ProtocolTrace> {
    SteeringProtocol::compile(observable.clone(), plant, &CompileOptions::default(), rng)?.run(x0, rng)
}

/// Environment disturbance between maintenance measurements: with probability
/// `epsilon` per period the state is replaced by a uniformly random level,
/// which unravels the depolarizing map `ρ ↦ (1 − ε)ρ + ε I/N`.
#[derive(Debug, Clone, Copy)]
pub struct Disturbance {
    pub epsilon: f64,
    pub period: f64,
    pub periods: usize,
}

/// The three-level plant with `h₂(π/2)` compiled onto its control channel.
#[derive(Debug, Clone)]
pub struct Stabilizer {
    plant: BilinearPlant,
    energy: Observable,
    rotation: CompiledControl,
}

impl Stabilizer {
    pub fn new<R: Rng + ?Sized>(mu: f64, d: f64, rng: &mut R) -> Result<Self> {
        let plant = three_level::plant(mu, d)?;
        let energy = Observable::new(three_level::drift(mu))?;
        let [_, k2, _] = three_level::generators();
        let target = SkewExp::new(&k2).exp(FRAC_PI_2);
        let rotation = compile_unitary(&plant, &target, &CompileOptions::default(), rng)?;
        Ok(Self { plant, energy, rotation })
    }

    pub fn plant(&self) -> &BilinearPlant {
        &self.plant
    }

    pub fn rotation(&self) -> &CompiledControl {
        &self.rotation
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct StabilizationRun {
    pub trace: ProtocolTrace,
    /// Energy measurements until the first zero outcome.
    pub measurements: usize,
    /// `h₂(π/2)` applications until the first zero outcome.
    pub corrections: usize,
    /// Fraction of maintenance measurements that found the middle level.
    pub occupancy: Option<f64>,
}

/// Measures `H₀` and applies `h₂(π/2)` after every nonzero outcome until the
/// middle level is found; with a disturbance, then keeps measuring once per
/// period and re-runs the correction loop whenever the level was lost.
pub fn stabilize_middle_level<R: Rng + ?Sized>(
    x0: &PhasePoint,
    stabilizer: &Stabilizer,
    disturbance: Option<&Disturbance>,
    max_iters: usize,
    rng: &mut R,
) -> Result<StabilizationRun> {
    check_dim(3, x0.dim())?;
    let mut steps = Vec::new();
    let mut state = x0.clone();
    let (measurements, corrections) = acquire(&mut state, stabilizer, max_iters, &mut steps, rng)?;

    let mut occupancy = None;
    if let Some(dist) = disturbance {
        if !(0.0..=1.0).contains(&dist.epsilon) || dist.period.is_nan() || dist.period <= 0.0 {
            return Err(Error::InvalidArgument("disturbance needs ε ∈ [0, 1] and a positive period".into()));
        }
        let drift = stabilizer.plant.step_propagator(&[0.0], dist.period)?;
        let mut hits = 0;
        for _ in 0..dist.periods {
            if rng.random::<f64>() < dist.epsilon {
                let level = rng.random_range(0..3);
                state = to_phase(&StateVector::basis(3, level)?);
                steps.push(ProtocolStep::Disturb { state: state.clone() });
            }
            state = state.transform(&drift)?;
            steps.push(ProtocolStep::Evolve { word: "drift".into(), duration: dist.period, state: state.clone() });
            let out = measure_selective(&state, &stabilizer.energy, rng)?;
            state = out.post_state.clone();
            let found = out.index == 1;
            steps.push(ProtocolStep::Measure {
                outcome: out.index,
                value: out.value,
                probability: out.probability,
                state: out.post_state,
            });
            if found {
                hits += 1;
            } else {
                correct(&mut state, stabilizer, max_iters, &mut steps, rng)?;
            }
        }
        occupancy = Some(if dist.periods == 0 { 1.0 } else { hits as f64 / dist.periods as f64 });
    }

    let middle = StateVector::basis(3, 1)?;
    let final_fidelity = middle.fidelity(&state.to_state())?;
    Ok(StabilizationRun { trace: ProtocolTrace { steps, final_fidelity }, measurements, corrections, occupancy })
}

fn acquire<R: Rng + ?Sized>(
    state: &mut PhasePoint,
    st: &Stabilizer,
    max_iters: usize,
    steps: &mut Vec<ProtocolStep>,
    rng: &mut R,
) -> Result<(usize, usize)> {
    let out = measure_selective(state, &st.energy, rng)?;
    *state = out.post_state.clone();
    let found = out.index == 1;
    steps.push(ProtocolStep::Measure {
        outcome: out.index,
        value: out.value,
        probability: out.probability,
        state: out.post_state,
    });
    if found {
        return Ok((1, 0));
    }
    let corrections = correct(state, st, max_iters.saturating_sub(1), steps, rng).map_err(|e| match e {
        Error::MaxIterations(_) => Error::MaxIterations(max_iters),
        other => other,
    })?;
    Ok((1 + corrections, corrections))
}

/// Rotate-and-measure until the zero outcome; returns the rotation count.
fn correct<R: Rng + ?Sized>(
    state: &mut PhasePoint,
    st: &Stabilizer,
    max_iters: usize,
    steps: &mut Vec<ProtocolStep>,
    rng: &mut R,
) -> Result<usize> {
    let mut count = 0;
    loop {
        if count >= max_iters {
            return Err(Error::MaxIterations(max_iters));
        }
        *state = state.transform(&st.rotation.propagator)?;
        steps.push(ProtocolStep::Evolve {
            word: "h2(π/2)".into(),
            duration: st.rotation.duration(),
            state: state.clone(),
        });
        count += 1;
        let out = measure_selective(state, &st.energy, rng)?;
        *state = out.post_state.clone();
        let found = out.index == 1;
        steps.push(ProtocolStep::Measure {
            outcome: out.index,
            value: out.value,
            probability: out.probability,
            state: out.post_state,
        });
        if found {
            return Ok(count);
        }
    }
}

/// Real form of a word, for comparison with the explicit `h_i` families.
pub fn word_matrix(word: &SteeringWord, n: usize) -> RMatrix {
    realify(&word.unitary(n))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{diag, max_abs_real, real_matrix};
    use crate::controllability::lie_closure;
    use crate::rng::stream;
    use std::f64::consts::FRAC_1_SQRT_2;

    fn so3() -> LieClosureReport {
        lie_closure(
            &[
                Observable::new(three_level::drift(1.0)).unwrap(),
                Observable::new(three_level::control(1.0)).unwrap(),
            ],
            1e-10,
        )
        .unwrap()
    }

    #[test]
    fn three_level_frame_matches_worked_example() {
        let obs = build_frame_3level(&three_level::goal_state()).unwrap();
        let [psi1, psi2, goal] = three_level::reference_frame();
        for (got, want) in obs.frame().iter().zip([psi1, psi2, goal]) {
            assert!((got.amplitudes() - want.amplitudes()).norm() < 1e-12);
        }
        assert!(obs.gram_deviation() < 1e-12);
        assert!(obs.words()[2].as_ref().unwrap().is_empty());
        assert!(obs.word_fidelity() > 1.0 - 1e-12);
        let w1 = word_matrix(obs.words()[0].as_ref().unwrap(), 3);
        assert!(max_abs_real(&(w1 - three_level::h1(FRAC_PI_2))) < 1e-12);
        let w2 = word_matrix(obs.words()[1].as_ref().unwrap(), 3);
        let expected = three_level::h1(FRAC_PI_2) * three_level::h2(-FRAC_PI_2);
        assert!(max_abs_real(&(w2 - expected)) < 1e-12);
    }

    #[test]
    fn three_level_frame_rejects_unnormalized() {
        let bad = StateVector::new(vec![c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)]).unwrap();
        assert!(matches!(build_frame_3level(&bad), Err(Error::NotNormalized { .. })));
    }

    #[test]
    fn compiled_rotation_matches_family() {
        let mut rng = stream(60, 0);
        let st = Stabilizer::new(1.0, 1.0, &mut rng).unwrap();
        let target = three_level::h2(FRAC_PI_2);
        let p = &st.rotation().propagator;
        let phase = complexify(&(target.transpose() * p)).trace();
        let phase = phase / phase.norm();
        let aligned = realify(&(complexify(&target) * phase));
        assert!(max_abs_real(&(p - aligned)) < 1e-10);
        assert!(st.rotation().schedule.intervals() >= 1);
    }

    #[test]
    fn steering_from_goal_and_random_states() {
        let mut rng = stream(61, 0);
        let obs = build_frame_3level(&three_level::goal_state()).unwrap();
        let plant = three_level::plant(1.0, 1.0).unwrap();
        let proto = SteeringProtocol::compile(obs, &plant, &CompileOptions::default(), &mut rng).unwrap();
        let goal = to_phase(&three_level::goal_state());
        for _ in 0..10 {
            assert!(proto.run(&goal, &mut rng).unwrap().final_fidelity > 1.0 - 1e-9);
        }
        for _ in 0..30 {
            let x0 = to_phase(&StateVector::random(3, &mut rng));
            let trace = proto.run(&x0, &mut rng).unwrap();
            assert!(trace.final_fidelity >= 1.0 - 1e-9);
            for s in &trace.steps {
                assert!(s.state().is_normalized());
            }
        }
    }

    #[test]
    fn orthogonal_outcome_never_appears() {
        let mut rng = stream(62, 0);
        let obs = build_frame_3level(&three_level::goal_state()).unwrap();
        let plant = three_level::plant(1.0, 1.0).unwrap();
        let proto = SteeringProtocol::compile(obs.clone(), &plant, &CompileOptions::default(), &mut rng).unwrap();
        let x0 = to_phase(
            &StateVector::from_vector(obs.frame()[1].amplitudes() * c(0.6, 0.0) + obs.frame()[2].amplitudes() * c(0.0, 0.8))
                .unwrap(),
        );
        for _ in 0..100_000 {
            let ProtocolStep::Measure { outcome, .. } = proto.run(&x0, &mut rng).unwrap().steps[0] else {
                panic!("first step is a measurement");
            };
            assert_ne!(outcome, 0);
        }
    }

    #[test]
    fn relabeling_keeps_fidelity() {
        let mut rng = stream(63, 0);
        let obs = build_frame_3level(&three_level::goal_state()).unwrap();
        let plant = three_level::plant(1.0, 1.0).unwrap();
        let proto = SteeringProtocol::compile(obs, &plant, &CompileOptions::default(), &mut rng).unwrap();
        let relabeled = proto.with_eigenvalues(vec![-4.5, 10.0, 0.25]).unwrap();
        for k in 0..20 {
            let x0 = to_phase(&StateVector::random(3, &mut rng));
            let a = proto.run(&x0, &mut stream(64, k)).unwrap();
            let b = relabeled.run(&x0, &mut stream(64, k)).unwrap();
            assert!(b.final_fidelity >= 1.0 - 1e-9);
            assert!((a.final_fidelity - b.final_fidelity).abs() < 1e-12);
        }
        assert!(proto.with_eigenvalues(vec![1.0, 1.0, 2.0]).is_err());
    }

    #[test]
    fn general_frame_for_three_level() {
        let mut rng = stream(65, 0);
        let closure = so3();
        let goal = three_level::goal_state();
        let obs = build_frame_general(&goal, &closure, 200_000, None, &mut rng).unwrap();
        assert!(obs.gram_deviation() < 1e-10);
        assert!(obs.word_fidelity() > 1.0 - 1e-9);
        // every frame vector shares the goal's complex invariant 2ψ₁ψ₃ − ψ₂²
        let inv = |s: &StateVector| {
            let a = s.amplitudes();
            a[0] * a[2] * c(2.0, 0.0) - a[1] * a[1]
        };
        for f in obs.frame() {
            assert!((inv(f) - inv(&goal)).norm() < 1e-10);
        }
    }

    #[test]
    fn general_frame_errors() {
        let mut rng = stream(66, 0);
        let goal = three_level::goal_state();
        assert!(matches!(
            build_frame_general(&goal, &so3(), 0, None, &mut rng),
            Err(Error::FrameNotFound { evaluations: 0 })
        ));
        let full = lie_closure(
            &[
                Observable::new(diag(&[1.0, -1.0])).unwrap(),
                Observable::new(real_matrix(2, &[0.0, 1.0, 1.0, 0.0])).unwrap(),
            ],
            1e-10,
        )
        .unwrap();
        let g2 = StateVector::basis(2, 0).unwrap();
        assert!(matches!(build_frame_general(&g2, &full, 100, None, &mut rng), Err(Error::FrameUnnecessary)));
    }

    #[test]
    fn fallback_frame_when_orbit_has_no_orthogonal_vector() {
        let mut rng = stream(67, 0);
        let closure = lie_closure(&[Observable::diagonal(&[1.0, 2.0, 4.0]).unwrap()], 1e-10).unwrap();
        let goal = StateVector::new(vec![c(1.0, 0.0); 3]).unwrap().normalized().unwrap();
        assert!(matches!(
            build_frame_general(&goal, &closure, 3_000, None, &mut rng),
            Err(Error::FrameNotFound { .. })
        ));
        let psi0 = StateVector::new(vec![c(0.0, 1.0), c(1.0, 0.0), c(FRAC_1_SQRT_2, 0.0)]).unwrap().normalized().unwrap();
        let obs = build_frame_general(&goal, &closure, 3_000, Some(&psi0), &mut rng).unwrap();
        assert!(obs.gram_deviation() < 1e-10);
        assert!(obs.words()[0].is_some() && obs.words()[1..].iter().all(Option::is_none));
        assert!(obs.word_fidelity() > 1.0 - 1e-9);
        let overlap = obs.frame()[0].fidelity(&psi0).unwrap();
        assert!(overlap > 0.0);
    }

    #[test]
    fn stabilization_from_middle_level_is_immediate() {
        let mut rng = stream(68, 0);
        let st = Stabilizer::new(1.0, 1.0, &mut rng).unwrap();
        let x0 = to_phase(&StateVector::basis(3, 1).unwrap());
        let run = stabilize_middle_level(&x0, &st, None, 100, &mut rng).unwrap();
        assert_eq!(run.measurements, 1);
        assert_eq!(run.corrections, 0);
        assert!(run.trace.final_fidelity > 1.0 - 1e-12);
    }

    #[test]
    fn stabilization_from_extreme_level_succeeds() {
        let mut rng = stream(69, 0);
        let st = Stabilizer::new(1.0, 1.0, &mut rng).unwrap();
        for level in [0, 2] {
            let x0 = to_phase(&StateVector::basis(3, level).unwrap());
            for _ in 0..50 {
                let run = stabilize_middle_level(&x0, &st, None, 200, &mut rng).unwrap();
                assert!(run.corrections >= 1);
                assert_eq!(run.measurements, run.corrections + 1);
                assert!(run.trace.final_fidelity > 1.0 - 1e-12);
            }
        }
    }

    #[test]
    fn stabilization_iteration_cap() {
        let mut rng = stream(70, 0);
        let st = Stabilizer::new(1.0, 1.0, &mut rng).unwrap();
        let x0 = to_phase(&StateVector::basis(3, 0).unwrap());
        assert!(matches!(
            stabilize_middle_level(&x0, &st, None, 1, &mut rng),
            Err(Error::MaxIterations(1))
        ));
    }

    #[test]
    fn maintenance_under_small_disturbance() {
        let mut rng = stream(71, 0);
        let st = Stabilizer::new(1.0, 1.0, &mut rng).unwrap();
        let x0 = to_phase(&StateVector::basis(3, 2).unwrap());
        let dist = Disturbance { epsilon: 0.01, period: 0.5, periods: 1000 };
        let run = stabilize_middle_level(&x0, &st, Some(&dist), 1000, &mut rng).unwrap();
        assert!(run.occupancy.unwrap() >= 0.95);
    }

    #[test]
    fn trace_json_lines() {
        let mut rng = stream(72, 0);
        let st = Stabilizer::new(1.0, 1.0, &mut rng).unwrap();
        let x0 = to_phase(&StateVector::basis(3, 0).unwrap());
        let run = stabilize_middle_level(&x0, &st, None, 100, &mut rng).unwrap();
        let text = run.trace.to_json_lines();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), run.trace.steps.len() + 1);
        let first: serde_json::Value = serde_json::from_str(lines[0]).unwrap();
        assert_eq!(first["action"], "measure");
        let last: serde_json::Value = serde_json::from_str(lines.last().unwrap()).unwrap();
        assert!(last["final_fidelity"].is_number());
    }
}
