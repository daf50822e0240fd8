//! Acceptance criteria, one line per criterion.
//!
//! All criteria run sequentially inside a single test so that the runtime
//! bounds are measured without competing test threads.

mod common;

use std::f64::consts::{FRAC_PI_2, PI};
use std::fs;
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::seq::SliceRandom;
use rand::Rng;
use serde_json::{json, Value};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use strocchi::controllability::{lie_closure, Verdict, DEFAULT_CLOSURE_TOL};
use strocchi::dynamics::{evolve, ClassicalHamiltonian, ControlledHamiltonian};
use strocchi::kahler::{complex_structure, g_form, omega_form, to_phase, Observable, PhasePoint, StateVector};
use strocchi::linalg::{c, diag, random_hermitian, real_matrix, CMatrix, CVector};
use strocchi::measurement::{
    born_probabilities, born_probability_via_metric, closest_point_check, continuous_observe, measure_nonselective,
    measure_selective, DensityMatrix, GaussianMeasurement,
};
use strocchi::pontryagin::{forward_backward_sweep, ControlDomain, CostIntegrand, SweepOptions, TerminalPhase};
use strocchi::rng::stream;
use strocchi::steering::{build_frame_3level, stabilize_middle_level, CompileOptions, Stabilizer, SteeringProtocol};
use strocchi::three_level::{self, h1, h2, h3};
use strocchi::torus::{translation_plan, CatMap, KickOp, KickPlanner, TorusState};

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> std::result::Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(elapsed: Duration, limit: f64) -> std::result::Result<(), String> {
    ensure(elapsed.as_secs_f64() < limit, || format!("runtime {:.2}s exceeds {limit}s", elapsed.as_secs_f64()))
}

fn kahler_identities() -> Outcome {
    let start = Instant::now();
    let mut rng = stream(1, 0);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let n = rng.random_range(1..=8);
        let (a, b) = (StateVector::random(n, &mut rng), StateVector::random(n, &mut rng));
        let (x, y) = (to_phase(&a), to_phase(&b));
        let z = a.inner(&b).map_err(|e| e.to_string())?;
        let g = g_form(&x, &y).map_err(|e| e.to_string())?;
        let w = omega_form(&x, &y).map_err(|e| e.to_string())?;
        let wj = omega_form(&x, &complex_structure(&y)).map_err(|e| e.to_string())?;
        worst = worst.max((z.re - g).abs()).max((z.im - w).abs()).max((g - wj).abs());
    }
    ensure(worst <= 1e-12, || format!("max deviation {worst:e}"))?;
    within(start.elapsed(), 1.0)?;
    Ok(format!("max deviation {worst:.1e} over 1000 pairs"))
}

/// `exp(−iHt)` through the Hermitian eigendecomposition.
fn schrodinger(h: &CMatrix, psi: &CVector, t: f64) -> CVector {
    let eig = h.clone().symmetric_eigen();
    let phases = CVector::from_iterator(
        eig.eigenvalues.len(),
        eig.eigenvalues.iter().map(|&l| Complex64::from_polar(1.0, -l * t)),
    );
    let v = &eig.eigenvectors;
    v * (v.adjoint() * psi).component_mul(&phases)
}

fn strocchi_equivalence() -> Outcome {
    let start = Instant::now();
    let mut rng = stream(2, 0);
    let (mut dev, mut norm_drift, mut energy_drift, mut field_dev): (f64, f64, f64, f64) = (0.0, 0.0, 0.0, 0.0);
    for _ in 0..100 {
        let n = rng.random_range(1..=6);
        let h = random_hermitian(n, &mut rng);
        let psi = StateVector::random(n, &mut rng);
        let ham = ClassicalHamiltonian::new(h.clone()).map_err(|e| e.to_string())?;
        let flow = ControlledHamiltonian::free(h.clone(), 0.0, 10.0).map_err(|e| e.to_string())?;
        let x0 = to_phase(&psi);
        let e0 = ham.value(&x0).map_err(|e| e.to_string())?;
        // the generator is Hamilton's vector field (∂ℍ/∂p, −∂ℍ/∂q)
        let (dq, dp) = ham.gradient(&x0).map_err(|e| e.to_string())?;
        let field = ham.generator() * x0.stacked();
        for k in 0..n {
            field_dev = field_dev.max((field[k] - dp[k]).abs()).max((field[n + k] + dq[k]).abs());
        }
        for step in 1..=20 {
            let t = 0.5 * step as f64;
            let x = evolve(&flow, &x0, 0.0, t).map_err(|e| e.to_string())?;
            let reference = schrodinger(&h, psi.amplitudes(), t);
            let got = x.to_state();
            dev = dev.max((got.amplitudes() - &reference).iter().map(|z| z.norm()).fold(0.0, f64::max));
            norm_drift = norm_drift.max((x.norm_sqr() - 1.0).abs());
            energy_drift = energy_drift.max((ham.value(&x).map_err(|e| e.to_string())? - e0).abs());
        }
    }
    ensure(dev <= 1e-9, || format!("flow vs Schrödinger deviation {dev:e}"))?;
    ensure(norm_drift < 1e-10 && energy_drift < 1e-10, || format!("drift norm {norm_drift:e} energy {energy_drift:e}"))?;
    ensure(field_dev < 1e-12, || format!("vector field deviation {field_dev:e}"))?;
    within(start.elapsed(), 10.0)?;
    Ok(format!("deviation {dev:.1e}, norm drift {norm_drift:.1e}, ℍ drift {energy_drift:.1e}"))
}

fn measurement_geometry() -> Outcome {
    let mut rng = stream(3, 0);
    let mut worst: f64 = 0.0;
    let mut cases = 0;
    while cases < 1000 {
        let n = rng.random_range(2..=6);
        // random spectrum with a forced degeneracy half of the time
        let mut values: Vec<f64> = (0..n).map(|_| rng.random_range(-2.0..2.0)).collect();
        if rng.random::<bool>() {
            values[1] = values[0];
        }
        let basis = StateVector::random(n, &mut rng);
        let frame = random_unitary(n, &mut rng);
        let m = &frame * diag(&values) * frame.adjoint();
        let obs = Observable::new((&m + m.adjoint()) * c(0.5, 0.0)).map_err(|e| e.to_string())?;
        let x = to_phase(&basis);
        let probs = born_probabilities(&x, &obs).map_err(|e| e.to_string())?;
        let k = rng.random_range(0..obs.spectrum().len());
        let branch = &obs.spectrum()[k];
        if probs[k] < 1e-8 {
            continue;
        }
        let via = born_probability_via_metric(&x, &obs, branch.eigenvalue).map_err(|e| e.to_string())?;
        worst = worst.max((via - probs[k]).abs());
        let closest = closest_point_check(&x, &obs, branch.eigenvalue, 1000, &mut rng).map_err(|e| e.to_string())?;
        ensure(closest, || "a competitor in the eigenspace is closer than the projection".into())?;
        cases += 1;
    }
    ensure(worst <= 1e-12, || format!("metric formula deviation {worst:e}"))?;
    Ok(format!("metric deviation {worst:.1e}; closest point held against 1000 competitors in 1000 cases"))
}

fn random_unitary<R: Rng>(n: usize, rng: &mut R) -> CMatrix {
    let m = DMatrix::from_fn(n, n, |_, _| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
    m.qr().q()
}

fn born_statistics() -> Outcome {
    let mut rng = stream(4, 0);
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let fixtures: Vec<(StateVector, Observable)> = vec![
        (
            StateVector::new(vec![c(0.6, 0.0), c(0.0, 0.8)]).unwrap(),
            Observable::new(diag(&[1.0, -1.0])).unwrap(),
        ),
        (three_level::goal_state(), Observable::new(three_level::drift(1.0)).unwrap()),
        (
            StateVector::new(vec![c(0.5, 0.0), c(0.0, 0.5), c(s, 0.0)]).unwrap(),
            Observable::new(real_matrix(3, &[0.0, 1.0, 0.0, 1.0, 0.0, 1.0, 0.0, 1.0, 0.0])).unwrap(),
        ),
        (
            StateVector::random(4, &mut rng),
            Observable::new(diag(&[2.0, 2.0, -1.0, 0.5])).unwrap(),
        ),
    ];
    let trials = 100_000;
    let mut worst_z: f64 = 0.0;
    for (psi, obs) in &fixtures {
        let x = to_phase(psi);
        let probs = born_probabilities(&x, obs).map_err(|e| e.to_string())?;
        let mut counts = vec![0usize; probs.len()];
        for _ in 0..trials {
            counts[measure_selective(&x, obs, &mut rng).map_err(|e| e.to_string())?.index] += 1;
        }
        for (&k, &p) in counts.iter().zip(&probs) {
            let se = (p * (1.0 - p) / trials as f64).sqrt();
            let freq = k as f64 / trials as f64;
            if se == 0.0 {
                ensure(freq == p, || format!("outcome with probability {p} seen at {freq}"))?;
                continue;
            }
            let z = (freq - p).abs() / se;
            worst_z = worst_z.max(z);
            ensure(z <= 3.0, || format!("frequency {freq} vs probability {p} is {z:.2} standard errors off"))?;
        }
        if obs.is_nondegenerate() {
            let ens = measure_nonselective(&x, obs).map_err(|e| e.to_string())?;
            let nonzero: Vec<f64> = probs.iter().copied().filter(|&p| p > 1e-14).collect();
            let weights: Vec<f64> = ens.members().iter().map(|m| m.0).collect();
            ensure(weights == nonzero, || format!("non-selective weights {weights:?} vs {nonzero:?}"))?;
        }
    }
    Ok(format!("{} fixtures × 10⁵ draws, worst |z| = {worst_z:.2}; non-selective weights exact", fixtures.len()))
}

fn continuous_observation() -> Outcome {
    let s = 1.7;
    let t = 1.0 / s;
    let plus = StateVector::new(vec![c(std::f64::consts::FRAC_1_SQRT_2, 0.0); 2]).unwrap();
    let rho0 = DensityMatrix::from_pure(&plus).map_err(|e| e.to_string())?;
    let zero = Observable::new(CMatrix::zeros(2, 2)).unwrap();
    let m = GaussianMeasurement::new(Observable::new(diag(&[1.0, -1.0])).unwrap(), s, 0.01).map_err(|e| e.to_string())?;
    let traj = continuous_observe(&rho0, &zero, &m, t, 2000).map_err(|e| e.to_string())?;
    let (_, last) = traj.last().unwrap();
    let expected = 0.5 * (-2.0 * s * t).exp();
    let rel = (last.matrix()[(0, 1)].re - expected).abs() / expected;
    let trace_dev = traj.iter().map(|(_, r)| (r.trace() - 1.0).abs()).fold(0.0, f64::max);
    ensure(rel <= 1e-6, || format!("ρ01 relative error {rel:e}"))?;
    ensure(trace_dev <= 1e-9, || format!("trace drift {trace_dev:e}"))?;

    let lambda = [-1.0, 0.5, 2.0];
    let uniform = StateVector::new(vec![c(1.0 / 3f64.sqrt(), 0.0); 3]).unwrap();
    let rho0 = DensityMatrix::from_pure(&uniform).map_err(|e| e.to_string())?;
    let zero = Observable::new(CMatrix::zeros(3, 3)).unwrap();
    let s3 = 0.8;
    let m = GaussianMeasurement::new(Observable::new(diag(&lambda)).unwrap(), s3, 0.01).map_err(|e| e.to_string())?;
    let total = 1.0;
    let traj = continuous_observe(&rho0, &zero, &m, total, 4000).map_err(|e| e.to_string())?;
    let (_, last) = traj.last().unwrap();
    let mut worst: f64 = 0.0;
    for i in 0..3 {
        for j in (i + 1)..3 {
            let rate = -(last.matrix()[(i, j)].norm() / rho0.matrix()[(i, j)].norm()).ln() / total;
            let expected = 0.5 * s3 * (lambda[i] - lambda[j]).powi(2);
            worst = worst.max((rate - expected).abs() / expected);
        }
    }
    ensure(worst <= 1e-6, || format!("decay exponent relative error {worst:e}"))?;
    Ok(format!("ρ01 rel. error {rel:.1e}, trace drift {trace_dev:.1e}, exponent rel. error {worst:.1e}"))
}

fn controllability() -> Outcome {
    let start = Instant::now();
    let three = [
        Observable::new(three_level::drift(1.0)).unwrap(),
        Observable::new(three_level::control(1.0)).unwrap(),
    ];
    let r3 = lie_closure(&three, DEFAULT_CLOSURE_TOL).map_err(|e| e.to_string())?;
    ensure(r3.dimension() == 3 && r3.verdict() == Verdict::NotControllable, || {
        format!("three-level: dimension {} verdict {:?}", r3.dimension(), r3.verdict())
    })?;
    let two = [
        Observable::new(diag(&[1.0, -1.0])).unwrap(),
        Observable::new(real_matrix(2, &[0.0, 1.0, 1.0, 0.0])).unwrap(),
    ];
    let r2 = lie_closure(&two, DEFAULT_CLOSURE_TOL).map_err(|e| e.to_string())?;
    ensure(r2.dimension() == 3 && r2.verdict().is_controllable(), || {
        format!("two-level: dimension {} verdict {:?}", r2.dimension(), r2.verdict())
    })?;
    within(start.elapsed(), 1.0)?;
    Ok(format!("three-level dim 3 {:?}; two-level dim 3 {:?}", r3.verdict(), r2.verdict()))
}

fn worked_example() -> Outcome {
    let psi_f = to_phase(&three_level::goal_state());
    let [psi1, psi2, _] = three_level::reference_frame();
    let a = psi_f.transform(&h1(-FRAC_PI_2)).unwrap();
    let b = a.transform(&h2(FRAC_PI_2)).unwrap();
    let d1 = (a.stacked() - to_phase(&psi1).stacked()).amax();
    let d2 = (b.stacked() - to_phase(&psi2).stacked()).amax();
    ensure(d1 <= 1e-12 && d2 <= 1e-12, || format!("frame deviations {d1:e}, {d2:e}"))?;
    let mut worst: f64 = 0.0;
    for (mu, t) in [(1.0f64, 0.3f64), (2.5, 1.7), (0.4, 2.2)] {
        let flow = ControlledHamiltonian::free(three_level::drift(mu), 0.0, t).unwrap();
        let x = PhasePoint::from_stacked(&nalgebra::DVector::from_vec(vec![0.1, -0.4, 0.3, 0.5, 0.2, -0.6])).unwrap();
        let moved = evolve(&flow, &x, 0.0, t).map_err(|e| e.to_string())?;
        worst = worst.max((moved.stacked() - h3(-mu * t) * x.stacked()).amax());
    }
    ensure(worst <= 1e-10, || format!("h₃ vs drift deviation {worst:e}"))?;
    Ok(format!("frame deviations {d1:.1e}, {d2:.1e}; h₃ vs drift {worst:.1e}"))
}

fn steering() -> Outcome {
    let start = Instant::now();
    let plant = three_level::plant(1.0, 1.0).unwrap();
    let obs = build_frame_3level(&three_level::goal_state()).map_err(|e| e.to_string())?;
    let protocol = SteeringProtocol::compile(obs, &plant, &CompileOptions::default(), &mut stream(8, u64::MAX))
        .map_err(|e| e.to_string())?;
    let mut worst: f64 = 1.0;
    let mut relabel_rng = stream(8, u64::MAX - 1);
    for i in 0..100 {
        let mut rng = stream(8, i);
        let psi0 = to_phase(&StateVector::random(3, &mut rng));
        let trace = protocol.run(&psi0, &mut rng).map_err(|e| e.to_string())?;
        worst = worst.min(trace.final_fidelity);
        let mut values: Vec<f64> = (0..3).map(|_| relabel_rng.random_range(-10.0..10.0)).collect();
        values.shuffle(&mut relabel_rng);
        let relabeled = protocol.with_eigenvalues(values).map_err(|e| e.to_string())?;
        let trace = relabeled.run(&psi0, &mut rng).map_err(|e| e.to_string())?;
        worst = worst.min(trace.final_fidelity);
    }
    ensure(worst >= 1.0 - 1e-9, || format!("worst final fidelity {worst}"))?;
    within(start.elapsed(), 5.0)?;
    Ok(format!("worst fidelity 1 − {:.1e} over 100 trials and 100 relabelings", 1.0 - worst))
}

fn stabilization() -> Outcome {
    let stabilizer = Stabilizer::new(1.0, 1.0, &mut stream(9, u64::MAX)).map_err(|e| e.to_string())?;
    let x0 = to_phase(&StateVector::basis(3, 0).unwrap());
    let runs = 10_000;
    let bins = 10;
    let mut counts = vec![0usize; bins];
    for i in 0..runs {
        let run = stabilize_middle_level(&x0, &stabilizer, None, 10_000, &mut stream(9, i))
            .map_err(|e| e.to_string())?;
        ensure(run.corrections >= 1, || "extreme level needs at least one correction".into())?;
        counts[(run.corrections - 1).min(bins - 1)] += 1;
    }
    // P(k) = 2^{−k} for k ≥ 1, last bin holds the tail
    let expected: Vec<f64> = (1..=bins)
        .map(|k| if k < bins { runs as f64 * 0.5f64.powi(k as i32) } else { runs as f64 * 0.5f64.powi(bins as i32 - 1) })
        .collect();
    let chi2: f64 = counts.iter().zip(&expected).map(|(&o, &e)| (o as f64 - e).powi(2) / e).sum();
    let p = 1.0 - ChiSquared::new((bins - 1) as f64).unwrap().cdf(chi2);
    ensure(p > 0.01, || format!("χ² = {chi2:.2}, p = {p:.4}"))?;
    Ok(format!("χ² = {chi2:.2} on {} dof, p = {p:.3}", bins - 1))
}

fn torus() -> Outcome {
    let map = CatMap::default();
    let planner = KickPlanner::new(map, 32);
    let mut rng = stream(10, 0);
    let mut longest = 0;
    for _ in 0..1000 {
        let start = (rng.random_range(-32..=32), rng.random_range(-32..=32));
        let target = (rng.random_range(-32..=32), rng.random_range(-32..=32));
        let plan = planner.plan(start, target, true);
        let mut state = TorusState::basis(start, 32).map_err(|e| e.to_string())?;
        for op in plan.moves() {
            state = op.apply_state(&state, &map).map_err(|e| e.to_string())?;
        }
        ensure(state.eigenmomentum() == Some(target) && state.amplitude(target) == c(1.0, 0.0), || {
            format!("replay from {start:?} did not reach {target:?}")
        })?;
        let translation = planner.plan(start, target, false);
        ensure(plan.len() <= translation.len() && translation.len() == translation_plan(start, target).len(), || {
            format!("{start:?}→{target:?}: cat plan {} vs translation {}", plan.len(), translation.len())
        })?;
        longest = longest.max(plan.len());
    }
    let s = TorusState::superposition(&[((0, 1), c(0.6, 0.0)), ((3, -2), c(0.0, 0.8))], 32).unwrap();
    let round = KickOp::U1.apply_state(&KickOp::U1Inv.apply_state(&s, &map).unwrap(), &map).unwrap();
    ensure(round == s, || "U1 ∘ U1⁻¹ is not the identity".into())?;
    Ok(format!("1000 plans replayed exactly (longest {longest} kicks); U1 ∘ U1⁻¹ = id"))
}

fn pontryagin() -> Outcome {
    let start = Instant::now();
    let oracle = common::best_bang_bang(PI, 100, 3, 0.999).ok_or("no bang-bang schedule reaches 0.999")?;
    let plant = strocchi::dynamics::BilinearPlant::new(diag(&[1.0, -1.0]), vec![real_matrix(2, &[0.0, 1.0, 1.0, 0.0])])
        .unwrap();
    let domain = ControlDomain::symmetric(1, 1.0).unwrap();
    let lower = to_phase(&StateVector::basis(2, 1).unwrap());
    let upper = to_phase(&StateVector::basis(2, 0).unwrap());
    let options =
        SweepOptions { t_final: PI, intervals: 800, terminal_phase: TerminalPhase::Free, ..SweepOptions::default() };
    let sol = forward_backward_sweep(&plant, &lower, &upper, &CostIntegrand::Energy, &domain, &options)
        .map_err(|e| e.to_string())?;
    ensure(sol.converged, || format!("sweep did not converge (fidelity {})", sol.fidelity))?;
    ensure(sol.fidelity >= 0.999, || format!("fidelity {}", sol.fidelity))?;
    ensure(sol.cost <= 1.02 * oracle.cost, || format!("cost {} vs bang-bang {}", sol.cost, oracle.cost))?;
    let spread = sol.hamiltonian_spread();
    ensure(spread <= 1e-4, || format!("𝐇 spread {spread:e}"))?;
    within(start.elapsed(), 60.0)?;
    Ok(format!(
        "fidelity {:.5}, cost {:.4} vs bang-bang {:.4}, 𝐇 spread {spread:.1e}",
        sol.fidelity, sol.cost, oracle.cost
    ))
}

fn run_cli(dir: &Path, command: &str, scenario: &Value) -> std::result::Result<(), String> {
    let path = dir.join("scenario.json");
    fs::write(&path, scenario.to_string()).map_err(|e| e.to_string())?;
    let status = Command::new(env!("CARGO_BIN_EXE_strocchi"))
        .args([command, "--seed", "2024", "--trials", "64", "--scenario"])
        .arg(&path)
        .arg("--out")
        .arg(dir)
        .status()
        .map_err(|e| e.to_string())?;
    ensure(status.success(), || format!("{command} exited with {status}"))
}

/// Output files, with the manifest's wall time removed.
fn artifacts(dir: &Path) -> std::result::Result<Vec<(String, Vec<u8>)>, String> {
    let mut out = Vec::new();
    for entry in fs::read_dir(dir).map_err(|e| e.to_string())? {
        let path = entry.map_err(|e| e.to_string())?.path();
        let name = path.file_name().unwrap().to_string_lossy().into_owned();
        let mut bytes = fs::read(&path).map_err(|e| e.to_string())?;
        if name == "manifest.json" {
            let mut v: Value = serde_json::from_slice(&bytes).map_err(|e| e.to_string())?;
            v.as_object_mut().unwrap().remove("wall_time_seconds");
            bytes = v.to_string().into_bytes();
        }
        out.push((name, bytes));
    }
    out.sort();
    Ok(out)
}

fn reproducibility() -> Outcome {
    let z = [0.0, 0.0];
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let three = json!({
        "dimension": 3,
        "drift": [[[-1.0, 0.0], z, z], [z, z, z], [z, z, [1.0, 0.0]]],
        "controls": [[[z, [1.0, 0.0], z], [[1.0, 0.0], z, [1.0, 0.0]], [z, [1.0, 0.0], z]]],
    });
    let scenarios = [
        (
            "measure",
            json!({
                "initial": [[0.6, 0.0], [0.0, 0.8]],
                "measurement": {
                    "observable": [[[1.0, 0.0], z], [z, [-1.0, 0.0]]],
                    "strength": 1.0, "dt": 0.05,
                    "continuous": { "total_time": 1.0, "steps": 100 },
                },
            }),
        ),
        ("steer", json!({ "system": three, "goal": [[0.0, s], z, [0.0, s]], "steer": { "frame": "three_level" } })),
        ("stabilize", json!({ "stabilize": { "mu": 1.0, "d": 1.0, "disturbance": { "epsilon": 0.2, "period": 1.0, "periods": 20 } } })),
        (
            "torus-plan",
            json!({ "torus": { "start": [3, 4], "target": [-5, 2], "initial": [[[0, 0], [0.6, 0.0]], [[2, -1], [0.0, 0.8]]] } }),
        ),
    ];
    let mut files = 0;
    for (command, scenario) in &scenarios {
        let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
        run_cli(a.path(), command, scenario)?;
        run_cli(b.path(), command, scenario)?;
        let (x, y) = (artifacts(a.path())?, artifacts(b.path())?);
        ensure(x == y, || format!("{command}: outputs differ between runs"))?;
        files += x.len();
    }
    Ok(format!("{} stochastic commands, {files} artifacts byte-identical across reruns", scenarios.len()))
}

type Criterion = fn() -> Outcome;

#[test]
fn acceptance_criteria() {
    let criteria: [(&str, Criterion); 12] = [
        ("Kähler identities", kahler_identities),
        ("Strocchi equivalence", strocchi_equivalence),
        ("measurement geometry", measurement_geometry),
        ("Born statistics", born_statistics),
        ("continuous observation", continuous_observation),
        ("controllability", controllability),
        ("worked example fixed points", worked_example),
        ("measurement plus evolution", steering),
        ("stabilization", stabilization),
        ("torus kick planning", torus),
        ("Pontryagin sweep", pontryagin),
        ("reproducibility", reproducibility),
    ];
    let mut failed = Vec::new();
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = check();
        let secs = start.elapsed().as_secs_f64();
        match &outcome {
            Ok(detail) => println!("[PASS] {:>2}. {name}: {detail} ({secs:.2}s)", i + 1),
            Err(why) => {
                println!("[FAIL] {:>2}. {name}: {why} ({secs:.2}s)", i + 1);
                failed.push(i + 1);
            }
        }
    }
    assert!(failed.is_empty(), "criteria failed: {failed:?}");
}
