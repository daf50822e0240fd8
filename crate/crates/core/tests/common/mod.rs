//! Independent oracles shared by the integration and acceptance targets.

#![allow(dead_code)]

use num_complex::Complex64;

type M2 = [[Complex64; 2]; 2];

fn mul(a: &M2, b: &M2) -> M2 {
    let mut out = [[Complex64::new(0.0, 0.0); 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            out[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    out
}

/// `exp(−i (σ_z + u σ_x) τ)` in closed form.
fn rabi(u: f64, tau: f64) -> M2 {
    let r = (1.0 + u * u).sqrt();
    let (c, s) = ((r * tau).cos(), (r * tau).sin() / r);
    let i = Complex64::new(0.0, 1.0);
    [
        [Complex64::new(c, 0.0) - i * s, -i * s * u],
        [-i * s * u, Complex64::new(c, 0.0) + i * s],
    ]
}

#[derive(Debug, Clone)]
pub struct BangBang {
    /// Piece values and lengths in grid steps.
    pub pieces: Vec<(f64, usize)>,
    pub cost: f64,
    pub fidelity: f64,
}

/// Cheapest `u ∈ {−1, 0, 1}` schedule with at most `max_switches` switches on a
/// uniform `steps`-point grid over `[0, t]` that carries the lower level of
/// `σ_z + u σ_x` to the upper one with fidelity at least `target`. Cost is
/// `∫ u² dt`.
pub fn best_bang_bang(t: f64, steps: usize, max_switches: usize, target: f64) -> Option<BangBang> {
    let h = t / steps as f64;
    let values = [-1.0, 0.0, 1.0];
    // powers[v][k] = propagator of value v held for k steps
    let powers: Vec<Vec<M2>> = values
        .iter()
        .map(|&v| {
            let step = rabi(v, h);
            let mut acc = vec![[[Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)], [Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)]]];
            for k in 1..=steps {
                let next = mul(&step, &acc[k - 1]);
                acc.push(next);
            }
            acc
        })
        .collect();
    let mut best: Option<BangBang> = None;
    let mut pieces: Vec<(usize, usize)> = Vec::new();
    let start = [[Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)], [Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)]];
    extend(&powers, &values, steps, max_switches + 1, h, target, &start, 0, &mut pieces, &mut best);
    best
}

#[allow(clippy::too_many_arguments)]
fn extend(
    powers: &[Vec<M2>],
    values: &[f64],
    remaining: usize,
    max_pieces: usize,
    h: f64,
    target: f64,
    acc: &M2,
    cost_steps: usize,
    pieces: &mut Vec<(usize, usize)>,
    best: &mut Option<BangBang>,
) {
    if let Some(b) = best {
        if cost_steps as f64 * h > b.cost {
            return;
        }
    }
    for (vi, &v) in values.iter().enumerate() {
        if pieces.last().is_some_and(|&(p, _)| p == vi) {
            continue;
        }
        let lens: Vec<usize> = if pieces.len() + 1 == max_pieces { vec![remaining] } else { (1..=remaining).collect() };
        for len in lens {
            let u = mul(&powers[vi][len], acc);
            let on = if v != 0.0 { len } else { 0 };
            pieces.push((vi, len));
            if len == remaining {
                // lower level is index 1, upper is index 0
                let fidelity = u[0][1].norm_sqr();
                let cost = (cost_steps + on) as f64 * h;
                if fidelity >= target && best.as_ref().is_none_or(|b| cost < b.cost) {
                    *best = Some(BangBang {
                        pieces: pieces.iter().map(|&(i, l)| (values[i], l)).collect(),
                        cost,
                        fidelity,
                    });
                }
            } else {
                extend(powers, values, remaining - len, max_pieces, h, target, &u, cost_steps + on, pieces, best);
            }
            pieces.pop();
        }
    }
}
