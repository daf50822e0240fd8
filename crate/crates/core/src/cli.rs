//! Command-line driver: scenario files in, CSV / JSON artifacts out.
//!
//! Every stochastic command draws trial `i` from `rng::stream(seed, i)`; one-off
//! randomized set-up (word compilation, frame search) uses stream
//! [`SETUP_STREAM`]. Trials run on the rayon pool and are written in index
//! order, so outputs depend only on the scenario and the seed.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, Subcommand};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::controllability::{lie_closure, DEFAULT_CLOSURE_TOL};
use crate::dynamics::{sample_trajectory, BilinearPlant, ControlSchedule, ControlledHamiltonian};
use crate::error::{Error, ErrorClass, Result};
use crate::kahler::{to_phase, Observable, StateVector};
use crate::linalg::{c, from_pairs, CMatrix};
use crate::measurement::{
    born_probabilities, continuous_observe, gaussian_apply, measure_nonselective, measure_selective, DensityMatrix,
    GaussianMeasurement,
};
use crate::pontryagin::{forward_backward_sweep, ControlDomain, CostIntegrand, SweepOptions, TerminalPhase};
use crate::rng::stream;
use crate::steering::{
    build_frame_3level, build_frame_general, stabilize_middle_level, CompileOptions, Disturbance, Stabilizer,
    SteeringProtocol,
};
use crate::torus::{reach_state, translation_plan, CatMap, KickPlanner, Momentum, TorusState, DEFAULT_RADIUS};

/// Stream index reserved for set-up work that precedes the trials.
pub const SETUP_STREAM: u64 = u64::MAX;

type Matrix = Vec<Vec<[f64; 2]>>;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub trials: Option<usize>,
    #[serde(default)]
    pub system: Option<SystemSpec>,
    #[serde(default)]
    pub torus: Option<TorusSpec>,
    #[serde(default)]
    pub initial: Option<Vec<[f64; 2]>>,
    #[serde(default)]
    pub goal: Option<Vec<[f64; 2]>>,
    #[serde(default)]
    pub measurement: Option<MeasurementSpec>,
    #[serde(default)]
    pub bounds: Option<ControlDomain>,
    #[serde(default)]
    pub cost: Option<CostIntegrand>,
    #[serde(default)]
    pub schedule: Option<ControlSchedule>,
    #[serde(default)]
    pub evolve: Option<EvolveSpec>,
    #[serde(default)]
    pub steer: Option<SteerSpec>,
    #[serde(default)]
    pub stabilize: Option<StabilizeSpec>,
    #[serde(default)]
    pub pmp: Option<PmpSpec>,
    #[serde(default)]
    pub outputs: Option<OutputSpec>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemSpec {
    pub dimension: usize,
    pub drift: Matrix,
    #[serde(default)]
    pub controls: Vec<Matrix>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TorusSpec {
    #[serde(default)]
    pub map: CatMap,
    #[serde(default = "default_radius")]
    pub radius: i64,
    #[serde(default = "default_tau")]
    pub tau: f64,
    pub start: Momentum,
    pub target: Momentum,
    #[serde(default = "default_true")]
    pub allow_cat: bool,
    /// Superposition to measure before planning; `[k, [re, im]]` pairs.
    #[serde(default)]
    pub initial: Option<Vec<(Momentum, [f64; 2])>>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeasurementSpec {
    pub observable: Matrix,
    #[serde(default)]
    pub strength: Option<f64>,
    #[serde(default)]
    pub dt: Option<f64>,
    #[serde(default)]
    pub continuous: Option<ContinuousSpec>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ContinuousSpec {
    pub total_time: f64,
    pub steps: usize,
    /// Defaults to the system drift, or zero without a system.
    #[serde(default)]
    pub hamiltonian: Option<Matrix>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvolveSpec {
    #[serde(default)]
    pub times: Option<Vec<f64>>,
    #[serde(default)]
    pub t_final: Option<f64>,
    #[serde(default)]
    pub samples: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FrameKind {
    ThreeLevel,
    General,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SteerSpec {
    pub frame: FrameKind,
    #[serde(default = "default_budget")]
    pub budget: usize,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StabilizeSpec {
    pub mu: f64,
    pub d: f64,
    #[serde(default = "default_max_iters")]
    pub max_iters: usize,
    #[serde(default)]
    pub disturbance: Option<DisturbanceSpec>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DisturbanceSpec {
    pub epsilon: f64,
    pub period: f64,
    pub periods: usize,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PmpSpec {
    pub t_final: f64,
    #[serde(default = "default_intervals")]
    pub intervals: usize,
    #[serde(default = "default_penalty")]
    pub penalty: f64,
    #[serde(default = "default_escalations")]
    pub max_escalations: usize,
    #[serde(default = "default_fidelity")]
    pub fidelity_target: f64,
    #[serde(default = "default_sweeps")]
    pub max_iters: usize,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_relaxation")]
    pub relaxation: f64,
    #[serde(default = "default_phase")]
    pub terminal_phase: TerminalPhase,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    pub dir: PathBuf,
}

fn default_radius() -> i64 {
    DEFAULT_RADIUS
}
fn default_tau() -> f64 {
    1.0
}
fn default_true() -> bool {
    true
}
fn default_budget() -> usize {
    200_000
}
fn default_max_iters() -> usize {
    10_000
}
fn default_intervals() -> usize {
    200
}
fn default_penalty() -> f64 {
    10.0
}
fn default_escalations() -> usize {
    6
}
fn default_fidelity() -> f64 {
    0.999
}
fn default_sweeps() -> usize {
    20_000
}
fn default_tol() -> f64 {
    1e-8
}
fn default_relaxation() -> f64 {
    0.5
}
fn default_phase() -> TerminalPhase {
    TerminalPhase::Free
}

impl Scenario {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Schema(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::Schema(format!("cannot read scenario {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| Error::Schema(format!("{}: {e}", path.display())))
    }

    fn require<'a, T>(field: &'a Option<T>, name: &str) -> Result<&'a T> {
        field.as_ref().ok_or_else(|| Error::Schema(format!("scenario lacks `{name}`")))
    }

    fn plant(&self) -> Result<BilinearPlant> {
        let sys = Self::require(&self.system, "system")?;
        let drift = matrix(&sys.drift, sys.dimension, "system.drift")?;
        let controls = sys
            .controls
            .iter()
            .enumerate()
            .map(|(j, m)| matrix(m, sys.dimension, &format!("system.controls[{j}]")))
            .collect::<Result<Vec<_>>>()?;
        BilinearPlant::new(drift, controls)
    }

    fn state(field: &Option<Vec<[f64; 2]>>, name: &str) -> Result<StateVector> {
        let amps = Self::require(field, name)?;
        StateVector::new(amps.iter().map(|z| c(z[0], z[1])).collect())
    }
}

fn matrix(rows: &Matrix, n: usize, name: &str) -> Result<CMatrix> {
    if rows.len() != n || rows.iter().any(|r| r.len() != n) {
        return Err(Error::Schema(format!("`{name}` must be a {n}×{n} matrix of [re, im] pairs")));
    }
    from_pairs(rows)
}

#[derive(Debug, Parser)]
#[command(name = "strocchi", version, about = "Phase-space simulation and control of finite-level quantum systems")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Scenario JSON file.
    #[arg(long, global = true)]
    pub scenario: Option<PathBuf>,
    /// Master seed; overrides the scenario seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory; overrides the scenario output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Number of independent trials for stochastic commands.
    #[arg(long, global = true)]
    pub trials: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Sample the Hamiltonian flow of a controlled system.
    Evolve,
    /// Selective, Gaussian and continuous measurement.
    Measure,
    /// Lie closure and controllability verdict.
    Closure,
    /// Measurement-plus-evolution steering to the goal state.
    Steer,
    /// Keep the three-level system on its middle level.
    Stabilize,
    /// Kick plan on the momentum lattice of the torus.
    TorusPlan,
    /// Pontryagin optimal control by forward-backward sweep.
    Pmp,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Evolve => "evolve",
            Command::Measure => "measure",
            Command::Closure => "closure",
            Command::Steer => "steer",
            Command::Stabilize => "stabilize",
            Command::TorusPlan => "torus-plan",
            Command::Pmp => "pmp",
        }
    }
}

/// Files written by one command; `converged` is false only for a sweep that
/// missed its target.
#[derive(Debug, Clone)]
pub struct RunReport {
    pub files: Vec<PathBuf>,
    pub converged: bool,
}

pub fn exit_code(class: ErrorClass) -> i32 {
    match class {
        ErrorClass::Schema => 2,
        ErrorClass::Numeric => 3,
        ErrorClass::Domain => 4,
    }
}

/// Parses `std::env::args`, runs, and returns the process exit code.
pub fn main_exit_code() -> i32 {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(report) if report.converged => 0,
        Ok(_) => {
            eprintln!("error: sweep did not reach the fidelity target");
            exit_code(ErrorClass::Numeric)
        }
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(e.class())
        }
    }
}

struct Context {
    command: Command,
    scenario: Scenario,
    seed: Option<u64>,
    trials: usize,
    out: PathBuf,
    files: Vec<PathBuf>,
}

impl Context {
    fn seed(&self) -> Result<u64> {
        self.seed.ok_or_else(|| Error::Schema(format!("`{}` is stochastic and needs a seed", self.command.name())))
    }

    fn write(&mut self, name: &str, contents: &str) -> Result<()> {
        let path = self.out.join(name);
        let mut f = fs::File::create(&path)?;
        f.write_all(contents.as_bytes())?;
        self.files.push(path);
        Ok(())
    }

    fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let mut text = serde_json::to_string_pretty(value).map_err(|e| Error::Numeric(e.to_string()))?;
        text.push('\n');
        self.write(name, &text)
    }
}

pub fn run(cli: &Cli) -> Result<RunReport> {
    let started = Instant::now();
    let path = cli.scenario.as_ref().ok_or_else(|| Error::Schema("--scenario is required".into()))?;
    let scenario = Scenario::load(path)?;
    let out = cli
        .out
        .clone()
        .or_else(|| scenario.outputs.as_ref().map(|o| o.dir.clone()))
        .unwrap_or_else(|| PathBuf::from("."));
    fs::create_dir_all(&out)?;
    let mut ctx = Context {
        command: cli.command,
        seed: cli.seed.or(scenario.seed),
        trials: cli.trials.or(scenario.trials).unwrap_or(1),
        scenario,
        out,
        files: Vec::new(),
    };
    let (converged, stochastic) = match cli.command {
        Command::Evolve => (cmd_evolve(&mut ctx)?, false),
        Command::Measure => (cmd_measure(&mut ctx)?, true),
        Command::Closure => (cmd_closure(&mut ctx)?, false),
        Command::Steer => (cmd_steer(&mut ctx)?, true),
        Command::Stabilize => (cmd_stabilize(&mut ctx)?, true),
        Command::TorusPlan => cmd_torus_plan(&mut ctx)?,
        Command::Pmp => (cmd_pmp(&mut ctx)?, false),
    };
    let manifest = json!({
        "command": cli.command.name(),
        "seed": ctx.seed,
        "trials": if stochastic { Some(ctx.trials) } else { None },
        "rng": "ChaCha20, stream(seed, trial)",
        "versions": { "strocchi": env!("CARGO_PKG_VERSION"), "scenario_schema": 1 },
        "outputs": ctx.files.iter().map(|p| p.file_name().map(|n| n.to_string_lossy().into_owned())).collect::<Vec<_>>(),
        "wall_time_seconds": started.elapsed().as_secs_f64(),
    });
    ctx.write_json("manifest.json", &manifest)?;
    Ok(RunReport { files: ctx.files, converged })
}

/// `{:.16e}`: 17 significant digits.
fn num(x: f64) -> String {
    format!("{x:.16e}")
}

fn row(values: impl IntoIterator<Item = f64>) -> String {
    values.into_iter().map(num).collect::<Vec<_>>().join(",")
}

fn per_trial<T, F>(trials: usize, seed: u64, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize, &mut crate::rng::StreamRng) -> Result<T> + Sync,
{
    (0..trials).into_par_iter().map(|i| f(i, &mut stream(seed, i as u64))).collect()
}

fn cmd_evolve(ctx: &mut Context) -> Result<bool> {
    let sc = &ctx.scenario;
    let plant = sc.plant()?;
    let x0 = to_phase(&Scenario::state(&sc.initial, "initial")?);
    let spec = Scenario::require(&sc.evolve, "evolve")?;
    let times = match (&spec.times, spec.t_final) {
        (Some(t), None) => t.clone(),
        (None, Some(tf)) => {
            let n = spec.samples.unwrap_or(100).max(1);
            (0..=n).map(|k| tf * k as f64 / n as f64).collect()
        }
        _ => return Err(Error::Schema("`evolve` needs exactly one of `times` or `t_final`".into())),
    };
    if times.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::Schema("`evolve.times` must be non-decreasing".into()));
    }
    let t_end = times.last().copied().unwrap_or(0.0);
    let schedule = match &sc.schedule {
        Some(s) => s.clone(),
        None if plant.channels() == 0 => ControlSchedule::new(vec![0.0, t_end.max(f64::MIN_POSITIVE)], vec![vec![]])?,
        None => return Err(Error::Schema("controlled system needs a `schedule`".into())),
    };
    let h = ControlledHamiltonian::new(plant, schedule)?;
    let samples = sample_trajectory(&h, &x0, &times)?;
    let n = x0.dim();
    let mut csv = String::from("t");
    for k in 0..n {
        csv.push_str(&format!(",q{k}"));
    }
    for k in 0..n {
        csv.push_str(&format!(",p{k}"));
    }
    csv.push_str(",energy\n");
    for s in samples {
        let values = std::iter::once(s.t).chain(s.point.q().iter().copied()).chain(s.point.p().iter().copied());
        csv.push_str(&row(values.chain(std::iter::once(s.energy))));
        csv.push('\n');
    }
    ctx.write("trajectory.csv", &csv)?;
    Ok(true)
}

fn cmd_measure(ctx: &mut Context) -> Result<bool> {
    let seed = ctx.seed()?;
    let sc = &ctx.scenario;
    let spec = Scenario::require(&sc.measurement, "measurement")?;
    let psi = Scenario::state(&sc.initial, "initial")?;
    let n = psi.dim();
    let obs = Observable::new(matrix(&spec.observable, n, "measurement.observable")?)?;
    let x = to_phase(&psi);
    let probabilities = born_probabilities(&x, &obs)?;
    let eigenvalues: Vec<f64> = obs.spectrum().iter().map(|b| b.eigenvalue).collect();
    let nonselective = if obs.is_nondegenerate() {
        let ens = measure_nonselective(&x, &obs)?;
        Some(ens.members().iter().map(|(w, _)| *w).collect::<Vec<_>>())
    } else {
        None
    };
    let born = json!({ "eigenvalues": eigenvalues, "probabilities": probabilities, "nonselective_weights": nonselective });

    let trials = ctx.trials;
    let outcomes = per_trial(trials, seed, |i, rng| {
        let o = measure_selective(&x, &obs, rng)?;
        Ok(format!("{i},{},{},{}\n", o.index, num(o.value), num(o.probability)))
    })?;
    let mut selective = String::from("trial,index,value,probability\n");
    selective.extend(outcomes);

    let gaussian = match (spec.strength, spec.dt) {
        (Some(s), Some(dt)) => {
            let m = GaussianMeasurement::new(obs.clone(), s, dt)?;
            let rows = per_trial(trials, seed, |i, rng| {
                let r = gaussian_apply(&x, &m, rng)?;
                Ok(format!("{i},{},{}\n", num(r.alpha), r.branch))
            })?;
            let mut csv = String::from("trial,alpha,branch\n");
            csv.extend(rows);
            Some((m, csv))
        }
        (None, None) => None,
        _ => return Err(Error::Schema("`measurement` needs both `strength` and `dt` or neither".into())),
    };

    let density = match &spec.continuous {
        Some(cs) => {
            let (m, _) = gaussian
                .as_ref()
                .ok_or_else(|| Error::Schema("continuous observation needs `strength` and `dt`".into()))?;
            let h = match (&cs.hamiltonian, &sc.system) {
                (Some(hm), _) => matrix(hm, n, "measurement.continuous.hamiltonian")?,
                (None, Some(_)) => sc.plant()?.drift().clone(),
                (None, None) => CMatrix::zeros(n, n),
            };
            let rho0 = DensityMatrix::from_pure(&psi)?;
            let traj = continuous_observe(&rho0, &Observable::new(h)?, m, cs.total_time, cs.steps)?;
            let mut csv = String::from("t,trace,purity");
            for i in 0..n {
                for j in 0..n {
                    csv.push_str(&format!(",rho{i}{j}_re,rho{i}{j}_im"));
                }
            }
            csv.push('\n');
            for (t, rho) in traj {
                let mut values = vec![t, rho.trace(), rho.purity()];
                for i in 0..n {
                    for j in 0..n {
                        let z = rho.matrix()[(i, j)];
                        values.extend([z.re, z.im]);
                    }
                }
                csv.push_str(&row(values));
                csv.push('\n');
            }
            Some(csv)
        }
        None => None,
    };

    ctx.write_json("born.json", &born)?;
    ctx.write("selective.csv", &selective)?;
    if let Some((_, csv)) = gaussian {
        ctx.write("readout.csv", &csv)?;
    }
    if let Some(csv) = density {
        ctx.write("density.csv", &csv)?;
    }
    Ok(true)
}

fn cmd_closure(ctx: &mut Context) -> Result<bool> {
    let plant = ctx.scenario.plant()?;
    let generators = std::iter::once(plant.drift())
        .chain(plant.controls())
        .map(|h| Observable::new(h.clone()))
        .collect::<Result<Vec<_>>>()?;
    let report = lie_closure(&generators, DEFAULT_CLOSURE_TOL)?;
    ctx.write_json("closure.json", &report)?;
    Ok(true)
}

fn cmd_steer(ctx: &mut Context) -> Result<bool> {
    let seed = ctx.seed()?;
    let sc = &ctx.scenario;
    let plant = sc.plant()?;
    let goal = Scenario::state(&sc.goal, "goal")?;
    let spec = Scenario::require(&sc.steer, "steer")?;
    let initial = sc.initial.as_ref().map(|_| Scenario::state(&sc.initial, "initial")).transpose()?;
    let mut setup = stream(seed, SETUP_STREAM);
    let observable = match spec.frame {
        FrameKind::ThreeLevel => build_frame_3level(&goal)?,
        FrameKind::General => {
            let generators = std::iter::once(plant.drift())
                .chain(plant.controls())
                .map(|h| Observable::new(h.clone()))
                .collect::<Result<Vec<_>>>()?;
            let closure = lie_closure(&generators, DEFAULT_CLOSURE_TOL)?;
            build_frame_general(&goal, &closure, spec.budget, initial.as_ref(), &mut setup)?
        }
    };
    let protocol = SteeringProtocol::compile(observable, &plant, &CompileOptions::default(), &mut setup)?;
    let n = plant.dim();
    let lines = per_trial(ctx.trials, seed, |i, rng| {
        let psi0 = match &initial {
            Some(p) => p.clone(),
            None => StateVector::random(n, rng),
        };
        let trace = protocol.run(&to_phase(&psi0), rng)?;
        let line = json!({ "trial": i, "final_fidelity": trace.final_fidelity, "steps": trace.steps });
        Ok((trace.final_fidelity, format!("{line}\n")))
    })?;
    let min_fidelity = lines.iter().map(|l| l.0).fold(1.0, f64::min);
    let frame: Vec<Vec<[f64; 2]>> = protocol
        .observable()
        .frame()
        .iter()
        .map(|f| f.amplitudes().iter().map(|z| [z.re, z.im]).collect())
        .collect();
    let summary = json!({
        "trials": ctx.trials,
        "min_final_fidelity": min_fidelity,
        "eigenvalues": protocol.observable().eigenvalues(),
        "frame": frame,
        "words": protocol.observable().words(),
    });
    ctx.write("steer.jsonl", &lines.into_iter().map(|l| l.1).collect::<String>())?;
    ctx.write_json("steer_summary.json", &summary)?;
    Ok(true)
}

fn cmd_stabilize(ctx: &mut Context) -> Result<bool> {
    let seed = ctx.seed()?;
    let sc = &ctx.scenario;
    let spec = Scenario::require(&sc.stabilize, "stabilize")?;
    let x0 = match &sc.initial {
        Some(_) => to_phase(&Scenario::state(&sc.initial, "initial")?),
        None => to_phase(&StateVector::basis(3, 0)?),
    };
    let disturbance =
        spec.disturbance.as_ref().map(|d| Disturbance { epsilon: d.epsilon, period: d.period, periods: d.periods });
    let stabilizer = Stabilizer::new(spec.mu, spec.d, &mut stream(seed, SETUP_STREAM))?;
    let runs = per_trial(ctx.trials, seed, |i, rng| {
        let run = stabilize_middle_level(&x0, &stabilizer, disturbance.as_ref(), spec.max_iters, rng)?;
        let line = json!({
            "trial": i,
            "measurements": run.measurements,
            "corrections": run.corrections,
            "occupancy": run.occupancy,
            "steps": run.trace.steps,
        });
        Ok((run.corrections, format!("{line}\n")))
    })?;
    let max = runs.iter().map(|r| r.0).max().unwrap_or(0);
    let mut histogram = vec![0usize; max + 1];
    for r in &runs {
        histogram[r.0] += 1;
    }
    let summary = json!({ "trials": ctx.trials, "corrections_histogram": histogram });
    ctx.write("stabilize.jsonl", &runs.into_iter().map(|r| r.1).collect::<String>())?;
    ctx.write_json("stabilize_summary.json", &summary)?;
    Ok(true)
}

/// Returns `(ok, stochastic)`: replaying from a measured superposition needs a seed.
fn cmd_torus_plan(ctx: &mut Context) -> Result<(bool, bool)> {
    let spec = Scenario::require(&ctx.scenario.torus, "torus")?.clone();
    let planner = KickPlanner::new(spec.map, spec.radius);
    TorusState::basis(spec.start, spec.radius)?;
    TorusState::basis(spec.target, spec.radius)?;
    let plan = planner.plan(spec.start, spec.target, spec.allow_cat);
    let summary = json!({
        "map": spec.map,
        "radius": spec.radius,
        "tau": spec.tau,
        "plan": plan,
        "translation_plan": translation_plan(spec.start, spec.target),
        "replay": plan.replay(spec.start, &spec.map),
    });
    ctx.write_json("torus_plan.json", &summary)?;
    let Some(initial) = &spec.initial else {
        return Ok((true, false));
    };
    let seed = ctx.seed()?;
    let terms: Vec<_> = initial.iter().map(|(k, z)| (*k, c(z[0], z[1]))).collect();
    let s0 = TorusState::superposition(&terms, spec.radius)?;
    let lines = per_trial(ctx.trials, seed, |i, rng| {
        let trace = reach_state(&s0, spec.target, &spec.map, rng)?;
        let line = json!({
            "trial": i,
            "steps": trace.steps,
            "final_momentum": trace.final_state.eigenmomentum(),
        });
        Ok(format!("{line}\n"))
    })?;
    ctx.write("torus_traces.jsonl", &lines.concat())?;
    Ok((true, true))
}

fn cmd_pmp(ctx: &mut Context) -> Result<bool> {
    let sc = &ctx.scenario;
    let plant = sc.plant()?;
    let x0 = to_phase(&Scenario::state(&sc.initial, "initial")?);
    let goal = to_phase(&Scenario::state(&sc.goal, "goal")?);
    let spec = Scenario::require(&sc.pmp, "pmp")?;
    let domain = Scenario::require(&sc.bounds, "bounds")?.clone();
    let cost = sc.cost.clone().unwrap_or(CostIntegrand::Energy);
    let options = SweepOptions {
        t_final: spec.t_final,
        intervals: spec.intervals,
        penalty: spec.penalty,
        max_escalations: spec.max_escalations,
        fidelity_target: spec.fidelity_target,
        max_iters: spec.max_iters,
        tol: spec.tol,
        relaxation: spec.relaxation,
        terminal_phase: spec.terminal_phase,
        initial: None,
    };
    let sol = forward_backward_sweep(&plant, &x0, &goal, &cost, &domain, &options)?;
    let mut csv = String::from("t_start,t_end");
    for j in 0..plant.channels() {
        csv.push_str(&format!(",u{j}"));
    }
    csv.push('\n');
    let grid = sol.schedule.grid();
    for (k, u) in sol.schedule.values().iter().enumerate() {
        csv.push_str(&row([grid[k], grid[k + 1]].into_iter().chain(u.iter().copied())));
        csv.push('\n');
    }
    let summary = json!({
        "cost": sol.cost,
        "fidelity": sol.fidelity,
        "iterations": sol.iterations,
        "converged": sol.converged,
        "penalty": sol.penalty,
        "hamiltonian_spread": sol.hamiltonian_spread(),
        "schedule": sol.schedule,
    });
    ctx.write_json("pmp.json", &summary)?;
    ctx.write("schedule.csv", &csv)?;
    Ok(sol.converged)
}
