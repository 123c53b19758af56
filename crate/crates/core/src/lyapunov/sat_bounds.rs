//! Closed-form analysis of the saturation example: the weighted-sup
//! candidate, the `ω` decrease rates and the `(p, q)` feasibility region.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::Serialize;

use super::LyapunovCandidate;
use crate::error::{Error, Result};
use crate::format::fmt_f64;
use crate::history::{norm_sq, History};

/// Boundary points within this distance are classified infeasible.
pub const BOUNDARY_TOL: f64 = 1e-12;

/// `sup_{j=0,1,2} 2^{j−1} γ^j c^{−j} ‖φ(−j)‖²`.
pub fn sat_sup_term(phi: &History, gamma: f64, c: f64) -> f64 {
    let mut weight = 0.5;
    let mut best: f64 = 0.0;
    for j in 0..=phi.delta().min(2) {
        best = best.max(weight * norm_sq(phi.lagged(j)));
        weight *= 2.0 * gamma / c;
    }
    best
}

fn check_positive(name: &'static str, v: f64) -> Result<()> {
    if !(v > 0.0) || !v.is_finite() {
        return Err(Error::param(name, v, "must be positive and finite"));
    }
    Ok(())
}

/// Mode-weighted candidate `V(φ, H⁻¹(i)) = λᵢ · sat_sup_term(φ)`.
///
/// Declares `α₁ = ½ min λᵢ` (the `j = 0` weight is ½, so `V ≥ ½λᵢ‖φ(0)‖²`
/// and no larger constant holds at `φ = (0, 0, φ(0))`) and
/// `α₂ = 2γ² max λᵢ`.
pub fn sat_candidate(lambda1: f64, lambda2: f64, gamma: f64, c: f64) -> Result<LyapunovCandidate> {
    check_positive("lambda1", lambda1)?;
    check_positive("lambda2", lambda2)?;
    if !(1.0..=1.2).contains(&gamma) {
        return Err(Error::param("gamma", gamma, "must lie in [1, 1.2]"));
    }
    if !(c > 1.0) || !c.is_finite() {
        return Err(Error::param("c", c, "must be finite and > 1"));
    }
    let lambdas = [lambda1, lambda2];
    let alpha1 = 0.5 * lambda1.min(lambda2);
    let alpha2 = 2.0 * gamma * gamma * lambda1.max(lambda2);
    LyapunovCandidate::new(
        format!("sat-sup(λ=({lambda1}, {lambda2}), γ={gamma}, c={c})"),
        alpha1,
        alpha2,
        move |phi, mode| {
            lambdas.get(mode.index()).copied().unwrap_or(f64::NAN) * sat_sup_term(phi, gamma, c)
        },
    )
}

/// Products appearing in the two decrease rates.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SatConstants {
    /// `(1 − γ)² + 2γ/c`.
    pub k1: f64,
    /// `2 + c²/2 + 2γ/c`.
    pub k2: f64,
}

impl SatConstants {
    pub fn new(gamma: f64, c: f64) -> Self {
        Self {
            k1: (1.0 - gamma).powi(2) + 2.0 * gamma / c,
            k2: 2.0 + 0.5 * c * c + 2.0 * gamma / c,
        }
    }

    /// `2 / (4 + c² + 4γ/c)`, the largest admissible `q` (exclusive).
    pub fn q_cap(&self) -> f64 {
        1.0 / self.k2
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct OmegaBounds {
    pub omega1: f64,
    pub omega2: f64,
    /// `½ min{ω₁, ω₂}`.
    pub alpha3: f64,
}

/// Decrease rates `ω₁`, `ω₂` such that
/// `𝓛V(φ, H⁻¹(i)) ≤ −ωᵢ · sat_sup_term(φ)`. Returned even when nonpositive.
pub fn omega_bounds(
    p: f64,
    q: f64,
    lambda1: f64,
    lambda2: f64,
    gamma: f64,
    c: f64,
) -> Result<OmegaBounds> {
    check_positive("lambda1", lambda1)?;
    check_positive("lambda2", lambda2)?;
    check_positive("gamma", gamma)?;
    check_positive("c", c)?;
    for (name, v) in [("p", p), ("q", q)] {
        if !(0.0..=1.0).contains(&v) {
            return Err(Error::param(name, v, "must lie in [0, 1]"));
        }
    }
    let k = SatConstants::new(gamma, c);
    let omega1 = lambda1 * (1.0 - (p + (1.0 - p) * lambda2 / lambda1) * k.k1);
    let omega2 = lambda2 * (1.0 - (q + (1.0 - q) * lambda1 / lambda2) * k.k2);
    Ok(OmegaBounds {
        omega1,
        omega2,
        alpha3: 0.5 * omega1.min(omega2),
    })
}

/// One `(p, q)` cell of the feasibility region.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RegionCell {
    pub p: f64,
    pub q: f64,
    pub feasible: bool,
    /// Witness `λ₂/λ₁ = √(L_B·U_B)`; NaN when infeasible.
    pub lambda_ratio: f64,
    /// NaN when the denominator `2 − (4 + c² + 4γ/c)q` is not positive.
    pub l_b: f64,
    pub u_b: f64,
    /// Rates at the witness with `λ₁ = 1`; NaN when infeasible.
    pub omega1: f64,
    pub omega2: f64,
    pub alpha3: f64,
}

/// Classifies one `(p, q)` pair.
pub fn region_cell(gamma: f64, c: f64, p: f64, q: f64) -> RegionCell {
    let k = SatConstants::new(gamma, c);
    let u_b = if p < 1.0 {
        (1.0 - k.k1 * p) / (k.k1 * (1.0 - p))
    } else {
        f64::INFINITY
    };
    let denom = 2.0 - 2.0 * k.k2 * q;
    let l_b = if denom > BOUNDARY_TOL {
        2.0 * k.k2 * (1.0 - q) / denom
    } else {
        f64::NAN
    };

    let below_cap = k.q_cap() - q > BOUNDARY_TOL;
    let interval_open = u_b - l_b > BOUNDARY_TOL * 1f64.max(u_b.abs());
    let feasible = below_cap && u_b > BOUNDARY_TOL && l_b.is_finite() && l_b > 0.0 && interval_open;

    let mut cell = RegionCell {
        p,
        q,
        feasible,
        lambda_ratio: f64::NAN,
        l_b,
        u_b,
        omega1: f64::NAN,
        omega2: f64::NAN,
        alpha3: f64::NAN,
    };
    if feasible {
        let ratio = if u_b.is_finite() {
            (l_b * u_b).sqrt()
        } else {
            2.0 * l_b
        };
        cell.lambda_ratio = ratio;
        if let Ok(w) = omega_bounds(p, q, 1.0, ratio, gamma, c) {
            cell.omega1 = w.omega1;
            cell.omega2 = w.omega2;
            cell.alpha3 = w.alpha3;
        }
    }
    cell
}

/// `n` cell midpoints `(i + ½)/n` in `(0, 1)`.
pub fn grid_midpoints(n: usize) -> Vec<f64> {
    (0..n).map(|i| (i as f64 + 0.5) / n as f64).collect()
}

/// The classified grid, `p`-major.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RegionGrid {
    pub gamma: f64,
    pub c: f64,
    pub p_grid: Vec<f64>,
    pub q_grid: Vec<f64>,
    pub cells: Vec<RegionCell>,
}

pub fn feasible_region(gamma: f64, c: f64, p_grid: &[f64], q_grid: &[f64]) -> RegionGrid {
    let cells = p_grid
        .par_iter()
        .flat_map_iter(|&p| q_grid.iter().map(move |&q| region_cell(gamma, c, p, q)))
        .collect();
    RegionGrid {
        gamma,
        c,
        p_grid: p_grid.to_vec(),
        q_grid: q_grid.to_vec(),
        cells,
    }
}

impl RegionGrid {
    pub fn cell(&self, pi: usize, qi: usize) -> &RegionCell {
        &self.cells[pi * self.q_grid.len() + qi]
    }

    pub fn feasible_count(&self) -> usize {
        self.cells.iter().filter(|c| c.feasible).count()
    }

    pub fn max_feasible_q(&self) -> Option<f64> {
        self.cells
            .iter()
            .filter(|c| c.feasible)
            .map(|c| c.q)
            .reduce(f64::max)
    }

    pub fn max_feasible_one_minus_p(&self) -> Option<f64> {
        self.cells
            .iter()
            .filter(|c| c.feasible)
            .map(|c| 1.0 - c.p)
            .reduce(f64::max)
    }

    /// Largest feasible `q` for each `p` that has one, as `(1 − p, q_max)`
    /// sorted by `1 − p`.
    pub fn frontier(&self) -> Vec<(f64, f64)> {
        let nq = self.q_grid.len();
        let mut out: Vec<(f64, f64)> = self
            .p_grid
            .iter()
            .enumerate()
            .filter_map(|(pi, &p)| {
                self.cells[pi * nq..(pi + 1) * nq]
                    .iter()
                    .filter(|c| c.feasible)
                    .map(|c| c.q)
                    .reduce(f64::max)
                    .map(|q| (1.0 - p, q))
            })
            .collect();
        out.sort_by(|a, b| a.0.total_cmp(&b.0));
        out
    }

    /// Infeasible cells with at least one feasible 4-neighbour, as
    /// `(p index, q index)`.
    pub fn boundary_infeasible(&self) -> Vec<(usize, usize)> {
        let (np, nq) = (self.p_grid.len(), self.q_grid.len());
        let mut out = Vec::new();
        for pi in 0..np {
            for qi in 0..nq {
                if self.cell(pi, qi).feasible {
                    continue;
                }
                let neighbours = [
                    (pi.wrapping_sub(1), qi),
                    (pi + 1, qi),
                    (pi, qi.wrapping_sub(1)),
                    (pi, qi + 1),
                ];
                if neighbours
                    .iter()
                    .any(|&(a, b)| a < np && b < nq && self.cell(a, b).feasible)
                {
                    out.push((pi, qi));
                }
            }
        }
        out
    }

    /// Columns `p, q, feasible, lambda_ratio, L_B, U_B, omega1, omega2, alpha3`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("p,q,feasible,lambda_ratio,L_B,U_B,omega1,omega2,alpha3\n");
        for c in &self.cells {
            writeln!(
                out,
                "{},{},{},{},{},{},{},{},{}",
                fmt_f64(c.p),
                fmt_f64(c.q),
                c.feasible,
                fmt_f64(c.lambda_ratio),
                fmt_f64(c.l_b),
                fmt_f64(c.u_b),
                fmt_f64(c.omega1),
                fmt_f64(c.omega2),
                fmt_f64(c.alpha3),
            )
            .unwrap();
        }
        out
    }

    /// Columns `one_minus_p, max_q`.
    pub fn frontier_csv(&self) -> String {
        let mut out = String::from("one_minus_p,max_q\n");
        for (x, q) in self.frontier() {
            writeln!(out, "{},{}", fmt_f64(x), fmt_f64(q)).unwrap();
        }
        out
    }
}
