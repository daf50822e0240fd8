//! Lie-algebraic controllability of `H₀ + Σ u_j H_j` and numerical orbit
//! membership in the group generated by the closure.

use rand::Rng;
use serde::{Serialize, Serializer};

use crate::error::{check_dim, Error, Result};
use crate::kahler::{Observable, PhasePoint, StateVector};
use crate::linalg::{c, commutator, hs_inner, hs_norm, to_pairs, CMatrix, RMatrix, SkewExp, I};
use crate::numeric::{levenberg_marquardt, LmOptions};

pub const DEFAULT_CLOSURE_TOL: f64 = 1e-10;
/// Phase-sensitive fidelity required for an orbit certificate.
pub const ORBIT_FIDELITY: f64 = 1.0 - 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Verdict {
    #[serde(rename = "controllable-u(N)")]
    ControllableU,
    #[serde(rename = "controllable-su(N)")]
    ControllableSu,
    #[serde(rename = "not-controllable")]
    NotControllable,
}

impl Verdict {
    pub fn is_controllable(self) -> bool {
        self != Verdict::NotControllable
    }
}

/// Hilbert–Schmidt orthonormal basis of the Lie algebra generated by
/// `{iH₀, iH₁, …}`.
#[derive(Debug, Clone)]
pub struct LieClosureReport {
    n: usize,
    basis: Vec<CMatrix>,
    verdict: Verdict,
    traceless_seeds: bool,
}

impl LieClosureReport {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dimension(&self) -> usize {
        self.basis.len()
    }

    pub fn basis(&self) -> &[CMatrix] {
        &self.basis
    }

    pub fn verdict(&self) -> Verdict {
        self.verdict
    }

    /// `(N², N² − 1)`.
    pub fn target_dims(&self) -> (usize, usize) {
        (self.n * self.n, self.n * self.n - 1)
    }

    pub fn traceless_seeds(&self) -> bool {
        self.traceless_seeds
    }

    pub fn gram(&self) -> RMatrix {
        let d = self.basis.len();
        RMatrix::from_fn(d, d, |i, j| hs_inner(&self.basis[i], &self.basis[j]))
    }

    /// Ratio of extreme Gram eigenvalues; infinite when the basis is dependent.
    pub fn gram_condition(&self) -> f64 {
        if self.basis.is_empty() {
            return 1.0;
        }
        let eig = self.gram().symmetric_eigen().eigenvalues;
        let max = eig.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let min = eig.iter().copied().fold(f64::INFINITY, f64::min);
        if min <= 0.0 {
            f64::INFINITY
        } else {
            max / min
        }
    }

    /// Largest out-of-span component of any basis commutator.
    pub fn closure_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for a in &self.basis {
            for b in &self.basis {
                let mut v = commutator(a, b);
                for e in &self.basis {
                    v -= e * c(hs_inner(e, &v), 0.0);
                }
                worst = worst.max(hs_norm(&v));
            }
        }
        worst
    }
}

impl Serialize for LieClosureReport {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct Repr {
            dimension: usize,
            verdict: Verdict,
            target_dims: (usize, usize),
            traceless_seeds: bool,
            gram: Vec<Vec<f64>>,
            gram_condition: Option<f64>,
            basis: Vec<Vec<Vec<[f64; 2]>>>,
        }
        let g = self.gram();
        let cond = self.gram_condition();
        Repr {
            dimension: self.dimension(),
            verdict: self.verdict,
            target_dims: self.target_dims(),
            traceless_seeds: self.traceless_seeds,
            gram: (0..g.nrows()).map(|i| g.row(i).iter().copied().collect()).collect(),
            gram_condition: cond.is_finite().then_some(cond),
            basis: self.basis.iter().map(to_pairs).collect(),
        }
        .serialize(s)
    }
}

/// Adds the part of `m` orthogonal to `basis`, if it exceeds `tol`.
fn adjoin(basis: &mut Vec<CMatrix>, m: &CMatrix, tol: f64) -> bool {
    let norm = hs_norm(m);
    if norm <= tol {
        return false;
    }
    let mut v = m / c(norm, 0.0);
    for _ in 0..2 {
        for e in basis.iter() {
            v -= e * c(hs_inner(e, &v), 0.0);
        }
    }
    v = (&v - v.adjoint()) * c(0.5, 0.0);
    let residual = hs_norm(&v);
    if residual <= tol {
        return false;
    }
    basis.push(v / c(residual, 0.0));
    true
}

/// Closes `{iH_k}` under commutation.
pub fn lie_closure(generators: &[Observable], tol: f64) -> Result<LieClosureReport> {
    if !(tol > 0.0 && tol.is_finite()) {
        return Err(Error::InvalidArgument(format!("closure tolerance must be positive, got {tol}")));
    }
    let first = generators
        .first()
        .ok_or_else(|| Error::InvalidArgument("lie_closure needs at least one generator".into()))?;
    let n = first.dim();
    for g in generators {
        check_dim(n, g.dim())?;
    }
    let seeds: Vec<CMatrix> = generators.iter().map(|g| g.matrix() * I).collect();
    let traceless_seeds = seeds.iter().all(|s| s.trace().norm() <= tol);

    let mut basis = Vec::new();
    for s in &seeds {
        adjoin(&mut basis, s, tol);
    }
    let cap = n * n;
    let mut a = 0;
    while a < basis.len() && basis.len() < cap {
        for b in 0..a {
            let m = commutator(&basis[a], &basis[b]);
            adjoin(&mut basis, &m, tol);
            if basis.len() >= cap {
                break;
            }
        }
        a += 1;
    }

    let d = basis.len();
    let verdict = if d == n * n {
        Verdict::ControllableU
    } else if traceless_seeds && d == n * n - 1 {
        Verdict::ControllableSu
    } else {
        Verdict::NotControllable
    };
    Ok(LieClosureReport { n, basis, verdict, traceless_seeds })
}

/// Product of exponentials `exp(θ_m B_{k_m}) ⋯ exp(θ_1 B_{k_1})` over a
/// fixed list of skew-Hermitian directions, with the first letter applied first.
#[derive(Debug, Clone)]
pub struct ExpChart {
    n: usize,
    directions: Vec<SkewExp>,
}

impl ExpChart {
    pub fn new(n: usize, directions: &[CMatrix]) -> Self {
        Self { n, directions: directions.iter().map(SkewExp::new).collect() }
    }

    pub fn from_report(report: &LieClosureReport) -> Self {
        Self::new(report.n, &report.basis)
    }

    pub fn len(&self) -> usize {
        self.directions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.directions.is_empty()
    }

    pub fn unitary(&self, letters: &[(usize, f64)]) -> CMatrix {
        let mut u = CMatrix::identity(self.n, self.n);
        for &(k, theta) in letters {
            u = self.directions[k].exp(theta) * u;
        }
        u
    }

    /// One letter per angle, cycling through the directions in order.
    pub fn sweep(&self, angles: &[f64]) -> Vec<(usize, f64)> {
        angles.iter().enumerate().map(|(i, &a)| (i % self.len(), a)).collect()
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct OrbitSearch {
    pub found: bool,
    /// `(basis index, angle)` letters of a group element mapping `x` to `y`.
    pub certificate: Vec<(usize, f64)>,
    /// Phase-sensitive fidelity `Re⟨y|Ux⟩` of the best element found.
    pub fidelity: f64,
    pub evaluations: usize,
}

/// Searches the group generated by the closure for `U` with `Ux ≈ y`.
///
/// The match is phase-sensitive: the test is `Re⟨y|Ux⟩ ≥ 1 − 1e-6`, which is
/// `1 − ½ G(Ux − y, Ux − y)`. A negative answer only means nothing was found
/// within `budget` residual evaluations.
pub fn orbit_membership<R: Rng + ?Sized>(
    report: &LieClosureReport,
    x: &PhasePoint,
    y: &PhasePoint,
    budget: usize,
    rng: &mut R,
) -> Result<OrbitSearch> {
    check_dim(report.n, x.dim())?;
    check_dim(report.n, y.dim())?;
    x.ensure_normalized()?;
    y.ensure_normalized()?;
    let xs = x.to_state();
    let ys = y.to_state();
    let direct = ys.inner(&xs)?.re;
    if direct >= ORBIT_FIDELITY {
        return Ok(OrbitSearch { found: true, certificate: Vec::new(), fidelity: direct, evaluations: 0 });
    }
    let chart = ExpChart::from_report(report);
    let best = search_chart(&chart, budget, 1e-9, rng, |u| {
        let diff = u * xs.amplitudes() - ys.amplitudes();
        diff.iter().flat_map(|z| [z.re, z.im]).collect()
    });
    let u = chart.unitary(&best.letters);
    let fidelity = ys.inner(&StateVector::from_vector(u * xs.amplitudes())?)?.re;
    Ok(OrbitSearch {
        found: fidelity >= ORBIT_FIDELITY,
        certificate: best.letters,
        fidelity,
        evaluations: best.evaluations,
    })
}

pub(crate) struct ChartFit {
    pub letters: Vec<(usize, f64)>,
    pub residual_norm: f64,
    pub evaluations: usize,
}

/// Restarted Levenberg–Marquardt over two sweeps of the chart directions,
/// minimizing `residual(U)` until it drops below `tolerance` or the budget runs out.
pub(crate) fn search_chart<R, F>(
    chart: &ExpChart,
    budget: usize,
    tolerance: f64,
    rng: &mut R,
    residual: F,
) -> ChartFit
where
    R: Rng + ?Sized,
    F: Fn(&CMatrix) -> Vec<f64>,
{
    let params = 2 * chart.len();
    let mut best = ChartFit { letters: Vec::new(), residual_norm: f64::INFINITY, evaluations: 0 };
    if params == 0 {
        return best;
    }
    let mut used = 0;
    let mut start = vec![0.0; params];
    while used < budget {
        let opts = LmOptions {
            max_evaluations: (budget - used).min(200 * (params + 1)),
            tolerance,
            ..LmOptions::default()
        };
        let rep = levenberg_marquardt(|a| residual(&chart.unitary(&chart.sweep(a))), &start, &opts);
        used += rep.evaluations;
        if rep.residual_norm < best.residual_norm {
            best.letters = chart.sweep(&rep.params);
            best.residual_norm = rep.residual_norm;
        }
        if rep.residual_norm <= tolerance {
            break;
        }
        start = (0..params).map(|_| rng.random_range(-2.0 * std::f64::consts::PI..2.0 * std::f64::consts::PI)).collect();
    }
    best.evaluations = used;
    best
}
