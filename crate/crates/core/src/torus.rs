//! Kicked configurational cat on the torus `T²` in the momentum basis.
//!
//! Momentum eigenstates `|k⟩`, `k ∈ ℤ²`, are truncated to the box
//! `|k_i| ≤ R`. Free propagation only changes phases, the cat kick relabels
//! `k → M⁻¹k` and the two potential kicks shift one momentum component, so a
//! momentum measurement followed by a planned kick sequence reaches any
//! target eigenstate exactly.

use std::collections::{BTreeMap, VecDeque};

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measurement::sample_index;

pub const DEFAULT_RADIUS: i64 = 32;

pub type Momentum = (i64, i64);

/// Sparse state on the momentum lattice.
#[derive(Debug, Clone, PartialEq)]
pub struct TorusState {
    amplitudes: BTreeMap<Momentum, Complex64>,
    radius: i64,
}

fn in_box(k: Momentum, radius: i64) -> bool {
    k.0.abs() <= radius && k.1.abs() <= radius
}

fn overflow(k: Momentum, radius: i64) -> Error {
    Error::TruncationOverflow { k1: k.0, k2: k.1, radius }
}

impl TorusState {
    pub fn new(amplitudes: BTreeMap<Momentum, Complex64>, radius: i64) -> Result<Self> {
        if radius < 0 {
            return Err(Error::InvalidArgument(format!("truncation radius must be non-negative, got {radius}")));
        }
        if let Some(&k) = amplitudes.keys().find(|&&k| !in_box(k, radius)) {
            return Err(overflow(k, radius));
        }
        let s = Self { amplitudes: amplitudes.into_iter().filter(|(_, a)| *a != Complex64::new(0.0, 0.0)).collect(), radius };
        let norm = s.norm_sqr();
        if (norm - 1.0).abs() > 1e-12 {
            return Err(Error::NotNormalized { norm_sqr: norm });
        }
        Ok(s)
    }

    pub fn basis(k: Momentum, radius: i64) -> Result<Self> {
        Self::new(BTreeMap::from([(k, Complex64::new(1.0, 0.0))]), radius)
    }

    /// Normalizes the given amplitudes before validating.
    pub fn superposition(terms: &[(Momentum, Complex64)], radius: i64) -> Result<Self> {
        let norm = terms.iter().map(|(_, a)| a.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(Error::InvalidArgument("superposition has zero norm".into()));
        }
        let mut map = BTreeMap::new();
        for &(k, a) in terms {
            *map.entry(k).or_insert(Complex64::new(0.0, 0.0)) += a / norm;
        }
        Self::new(map, radius)
    }

    pub fn radius(&self) -> i64 {
        self.radius
    }

    pub fn amplitudes(&self) -> &BTreeMap<Momentum, Complex64> {
        &self.amplitudes
    }

    pub fn amplitude(&self, k: Momentum) -> Complex64 {
        self.amplitudes.get(&k).copied().unwrap_or_default()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.values().map(|a| a.norm_sqr()).sum()
    }

    /// The momentum of an eigenstate, if this is one.
    pub fn eigenmomentum(&self) -> Option<Momentum> {
        (self.amplitudes.len() == 1).then(|| *self.amplitudes.keys().next().expect("one entry"))
    }

    fn relabel(&self, f: impl Fn(Momentum) -> Momentum) -> Result<Self> {
        let mut out = BTreeMap::new();
        for (&k, &a) in &self.amplitudes {
            let k2 = f(k);
            if !in_box(k2, self.radius) {
                return Err(overflow(k2, self.radius));
            }
            out.insert(k2, a);
        }
        Ok(Self { amplitudes: out, radius: self.radius })
    }
}

#[derive(Serialize, Deserialize)]
struct TorusStateRepr {
    radius: i64,
    amplitudes: Vec<(Momentum, [f64; 2])>,
}

impl Serialize for TorusState {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        TorusStateRepr {
            radius: self.radius,
            amplitudes: self.amplitudes.iter().map(|(&k, a)| (k, [a.re, a.im])).collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for TorusState {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let repr = TorusStateRepr::deserialize(d)?;
        let map = repr.amplitudes.into_iter().map(|(k, [re, im])| (k, Complex64::new(re, im))).collect();
        TorusState::new(map, repr.radius).map_err(serde::de::Error::custom)
    }
}

/// Hyperbolic integer matrix `M` with `det M = 1` and `|tr M| > 2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "[[i64; 2]; 2]", into = "[[i64; 2]; 2]")]
pub struct CatMap {
    m: [[i64; 2]; 2],
}

impl CatMap {
    pub fn new(m: [[i64; 2]; 2]) -> Result<Self> {
        let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
        if det != 1 {
            return Err(Error::InvalidCatMap(format!("determinant is {det}, expected 1")));
        }
        let tr = m[0][0] + m[1][1];
        if tr.abs() <= 2 {
            return Err(Error::InvalidCatMap(format!("|trace| = {} is not hyperbolic", tr.abs())));
        }
        Ok(Self { m })
    }

    pub fn matrix(&self) -> [[i64; 2]; 2] {
        self.m
    }

    pub fn inverse_matrix(&self) -> [[i64; 2]; 2] {
        let [[a, b], [c, d]] = self.m;
        [[d, -b], [-c, a]]
    }

    /// `k ↦ Mk`.
    pub fn forward(&self, k: Momentum) -> Momentum {
        mul(self.m, k)
    }

    /// `k ↦ M⁻¹k`.
    pub fn backward(&self, k: Momentum) -> Momentum {
        mul(self.inverse_matrix(), k)
    }
}

fn mul(m: [[i64; 2]; 2], k: Momentum) -> Momentum {
    (m[0][0] * k.0 + m[0][1] * k.1, m[1][0] * k.0 + m[1][1] * k.1)
}

impl Default for CatMap {
    fn default() -> Self {
        Self { m: [[2, 1], [1, 1]] }
    }
}

impl TryFrom<[[i64; 2]; 2]> for CatMap {
    type Error = Error;
    fn try_from(m: [[i64; 2]; 2]) -> Result<Self> {
        Self::new(m)
    }
}

impl From<CatMap> for [[i64; 2]; 2] {
    fn from(c: CatMap) -> Self {
        c.m
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FloquetComponent {
    /// Free propagation, `|k⟩ ↦ e^{−i|k|²τ/2}|k⟩`.
    U0,
    /// Cat kick, `|k⟩ ↦ |M⁻¹k⟩`.
    U1,
    /// `e^{−ix₁}`, `k₁ ↦ k₁ − 1`.
    U2,
    /// `e^{−ix₂}`, `k₂ ↦ k₂ − 1`.
    U3,
}

/// Applies `which^sign` (`sign = ±1`); `tau` only enters `U0`.
pub fn apply_floquet_component(
    s: &TorusState,
    which: FloquetComponent,
    sign: i8,
    tau: f64,
    map: &CatMap,
) -> Result<TorusState> {
    if sign != 1 && sign != -1 {
        return Err(Error::InvalidArgument(format!("sign must be ±1, got {sign}")));
    }
    let d = i64::from(sign);
    match which {
        FloquetComponent::U0 => {
            let amplitudes = s
                .amplitudes
                .iter()
                .map(|(&k, &a)| {
                    let k2 = (k.0 * k.0 + k.1 * k.1) as f64;
                    (k, a * Complex64::from_polar(1.0, -(d as f64) * k2 * tau / 2.0))
                })
                .collect();
            Ok(TorusState { amplitudes, radius: s.radius })
        }
        FloquetComponent::U1 if sign == 1 => s.relabel(|k| map.backward(k)),
        FloquetComponent::U1 => s.relabel(|k| map.forward(k)),
        FloquetComponent::U2 => s.relabel(|k| (k.0 - d, k.1)),
        FloquetComponent::U3 => s.relabel(|k| (k.0, k.1 - d)),
    }
}

/// Projective momentum measurement.
pub fn measure_momentum<R: Rng + ?Sized>(s: &TorusState, rng: &mut R) -> Result<(Momentum, TorusState)> {
    let entries: Vec<(Momentum, f64)> = s.amplitudes.iter().map(|(&k, a)| (k, a.norm_sqr())).collect();
    let weights: Vec<f64> = entries.iter().map(|e| e.1).collect();
    let k = entries[sample_index(&weights, rng)].0;
    Ok((k, TorusState::basis(k, s.radius)?))
}

/// Planner moves in tie-break order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum KickOp {
    #[serde(rename = "U2^-1")]
    U2Inv,
    #[serde(rename = "U2")]
    U2,
    #[serde(rename = "U3^-1")]
    U3Inv,
    #[serde(rename = "U3")]
    U3,
    #[serde(rename = "U1^-1")]
    U1Inv,
    #[serde(rename = "U1")]
    U1,
}

impl KickOp {
    pub const ALL: [KickOp; 6] = [KickOp::U2Inv, KickOp::U2, KickOp::U3Inv, KickOp::U3, KickOp::U1Inv, KickOp::U1];

    pub fn is_cat(self) -> bool {
        matches!(self, KickOp::U1 | KickOp::U1Inv)
    }

    pub fn apply(self, k: Momentum, map: &CatMap) -> Momentum {
        match self {
            KickOp::U2Inv => (k.0 + 1, k.1),
            KickOp::U2 => (k.0 - 1, k.1),
            KickOp::U3Inv => (k.0, k.1 + 1),
            KickOp::U3 => (k.0, k.1 - 1),
            KickOp::U1Inv => map.forward(k),
            KickOp::U1 => map.backward(k),
        }
    }

    pub fn component(self) -> (FloquetComponent, i8) {
        match self {
            KickOp::U2Inv => (FloquetComponent::U2, -1),
            KickOp::U2 => (FloquetComponent::U2, 1),
            KickOp::U3Inv => (FloquetComponent::U3, -1),
            KickOp::U3 => (FloquetComponent::U3, 1),
            KickOp::U1Inv => (FloquetComponent::U1, -1),
            KickOp::U1 => (FloquetComponent::U1, 1),
        }
    }

    /// The kick as a Floquet component acting on a state.
    pub fn apply_state(self, s: &TorusState, map: &CatMap) -> Result<TorusState> {
        let (which, sign) = self.component();
        apply_floquet_component(s, which, sign, 0.0, map)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct KickStep {
    pub op: KickOp,
    pub count: usize,
}

/// Run-length encoded kick sequence.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct KickPlan {
    pub start: Momentum,
    pub target: Momentum,
    pub steps: Vec<KickStep>,
}

impl KickPlan {
    fn from_moves(start: Momentum, target: Momentum, moves: &[KickOp]) -> Self {
        let mut steps: Vec<KickStep> = Vec::new();
        for &op in moves {
            match steps.last_mut() {
                Some(last) if last.op == op => last.count += 1,
                _ => steps.push(KickStep { op, count: 1 }),
            }
        }
        Self { start, target, steps }
    }

    pub fn len(&self) -> usize {
        self.steps.iter().map(|s| s.count).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn cat_kicks(&self) -> usize {
        self.steps.iter().filter(|s| s.op.is_cat()).map(|s| s.count).sum()
    }

    pub fn moves(&self) -> impl Iterator<Item = KickOp> + '_ {
        self.steps.iter().flat_map(|s| std::iter::repeat_n(s.op, s.count))
    }

    /// Integer replay from `start`.
    pub fn replay(&self, start: Momentum, map: &CatMap) -> Momentum {
        self.moves().fold(start, |k, op| op.apply(k, map))
    }
}

/// Translation-only plan: all `k₁` moves, then all `k₂` moves.
pub fn translation_plan(start: Momentum, target: Momentum) -> KickPlan {
    let mut moves = Vec::new();
    let d1 = target.0 - start.0;
    let d2 = target.1 - start.1;
    let op1 = if d1 > 0 { KickOp::U2Inv } else { KickOp::U2 };
    let op2 = if d2 > 0 { KickOp::U3Inv } else { KickOp::U3 };
    moves.extend(std::iter::repeat_n(op1, d1.unsigned_abs() as usize));
    moves.extend(std::iter::repeat_n(op2, d2.unsigned_abs() as usize));
    KickPlan::from_moves(start, target, &moves)
}

/// Shortest kick sequences inside the box `|k_i| ≤ radius`.
///
/// Among shortest plans the one with the fewest cat kicks is chosen, then
/// the lexicographically smallest in [`KickOp`] order.
#[derive(Debug, Clone)]
pub struct KickPlanner {
    map: CatMap,
    radius: i64,
}

impl KickPlanner {
    pub fn new(map: CatMap, radius: i64) -> Self {
        Self { map, radius }
    }

    pub fn map(&self) -> &CatMap {
        &self.map
    }

    pub fn plan(&self, start: Momentum, target: Momentum, allow_cat_moves: bool) -> KickPlan {
        if !allow_cat_moves || start == target {
            return translation_plan(start, target);
        }
        let r = self.radius.max(start.0.abs()).max(start.1.abs()).max(target.0.abs()).max(target.1.abs());
        let side = (2 * r + 1) as usize;
        let index = |k: Momentum| ((k.0 + r) as usize) * side + (k.1 + r) as usize;
        let inside = |k: Momentum| in_box(k, r);

        // moves come in inverse pairs, so distances to the target are symmetric
        let mut dist = vec![usize::MAX; side * side];
        let mut order = Vec::with_capacity(side * side);
        let mut queue = VecDeque::from([target]);
        dist[index(target)] = 0;
        while let Some(k) = queue.pop_front() {
            order.push(k);
            let dk = dist[index(k)];
            for op in KickOp::ALL {
                let n = op.apply(k, &self.map);
                if inside(n) && dist[index(n)] == usize::MAX {
                    dist[index(n)] = dk + 1;
                    queue.push_back(n);
                }
            }
        }

        let steps_down = |k: Momentum| -> Vec<(KickOp, Momentum)> {
            let dk = dist[index(k)];
            KickOp::ALL
                .into_iter()
                .filter_map(|op| {
                    let n = op.apply(k, &self.map);
                    (inside(n) && dk > 0 && dist[index(n)] == dk - 1).then_some((op, n))
                })
                .collect()
        };
        let mut cats = vec![usize::MAX; side * side];
        for &k in &order {
            cats[index(k)] = if k == target {
                0
            } else {
                steps_down(k).into_iter().map(|(op, n)| cats[index(n)] + usize::from(op.is_cat())).min().expect("BFS parent")
            };
        }

        let mut moves = Vec::new();
        let mut k = start;
        while k != target {
            let need = cats[index(k)];
            let (op, n) = steps_down(k)
                .into_iter()
                .find(|&(op, n)| cats[index(n)] + usize::from(op.is_cat()) == need)
                .expect("a shortest move exists");
            moves.push(op);
            k = n;
        }
        KickPlan::from_moves(start, target, &moves)
    }
}

/// Kick plan with the default box radius.
pub fn plan_kicks(start: Momentum, target: Momentum, map: &CatMap, allow_cat_moves: bool) -> KickPlan {
    KickPlanner::new(*map, DEFAULT_RADIUS).plan(start, target, allow_cat_moves)
}

#[derive(Debug, Clone, Serialize)]
#[serde(tag = "action", rename_all = "snake_case")]
pub enum TorusStep {
    Measure { k: Momentum, probability: f64 },
    Kick { op: KickOp, count: usize, k: Momentum },
}

#[derive(Debug, Clone, Serialize)]
pub struct TorusTrace {
    pub steps: Vec<TorusStep>,
    pub plan: KickPlan,
    pub final_state: TorusState,
}

impl TorusTrace {
    pub fn to_json_lines(&self) -> String {
        let mut out = String::new();
        for s in &self.steps {
            out.push_str(&serde_json::to_string(s).expect("steps serialize"));
            out.push('\n');
        }
        out.push_str(&serde_json::json!({ "final_state": self.final_state }).to_string());
        out.push('\n');
        out
    }
}

/// Measures momentum, plans from the recorded outcome and replays the plan
/// through the Floquet components.
pub fn reach_state<R: Rng + ?Sized>(
    s0: &TorusState,
    target: Momentum,
    map: &CatMap,
    rng: &mut R,
) -> Result<TorusTrace> {
    if !in_box(target, s0.radius) {
        return Err(overflow(target, s0.radius));
    }
    let probability_of = |k: Momentum| s0.amplitude(k).norm_sqr();
    let (k, mut state) = measure_momentum(s0, rng)?;
    let mut steps = vec![TorusStep::Measure { k, probability: probability_of(k) }];
    let plan = KickPlanner::new(*map, s0.radius).plan(k, target, true);
    for step in &plan.steps {
        for _ in 0..step.count {
            state = step.op.apply_state(&state, map)?;
        }
        let k = state.eigenmomentum().expect("relabeling keeps an eigenstate");
        steps.push(TorusStep::Kick { op: step.op, count: step.count, k });
    }
    Ok(TorusTrace { steps, plan, final_state: state })
}
