//! Stochastic Lyapunov difference operator, sufficient-condition checks and
//! the constructive transforms that turn a candidate into explicit decay
//! constants `(M, ζ)`.
//!
//! The chain is:
//!
//! 1. a candidate `V` with `α₁‖φ(0)‖² ≤ V ≤ α₂‖φ‖∞²` and
//!    `𝓛V ≤ −α₃‖φ(0)‖²` (checked by [`check_theorem1`]);
//! 2. [`lift_to_w`] builds `W = V + max_{θ=1..Δ} e^{−θ}α₃‖φ(−θ)‖²`, which
//!    decreases in the whole history norm with rate `β₃`;
//! 3. [`decay_certificate`] turns `(γ₁, γ₂, γ₃) = (β₁, β₂, β₃)` into
//!    `E‖x(k)‖² ≤ M ζ^k ‖ξ₀‖∞²`.
//!
//! Sampled checks are falsification harnesses: a pass means no violation
//! was found, not that the inequalities hold on all of the history space.

mod sat_bounds;

use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

pub use sat_bounds::{
    feasible_region, grid_midpoints, omega_bounds, region_cell, sat_candidate, sat_sup_term,
    OmegaBounds, RegionCell, RegionGrid, SatConstants,
};

use crate::error::{Error, Result};
use crate::history::{norm_sq, History};
use crate::jump_system::JumpSystem;
use crate::markov::Mode;

/// Relative tolerance of the sampled inequality checks.
pub const CHECK_TOL: f64 = 1e-9;

/// `γ₄` is clamped to at most `1 − GAMMA4_CLAMP`.
pub const GAMMA4_CLAMP: f64 = 1e-9;

/// Violations kept verbatim in a [`ConditionReport`]; the rest are counted.
pub const MAX_RECORDED_VIOLATIONS: usize = 256;

pub type CandidateFn = dyn Fn(&History, Mode) -> f64 + Send + Sync;

/// An evaluable functional `V(φ, H⁻¹(i))` with declared bound constants
/// `α₁‖φ(0)‖² ≤ V ≤ α₂‖φ‖∞²`.
#[derive(Clone)]
pub struct LyapunovCandidate {
    label: String,
    alpha1: f64,
    alpha2: f64,
    eval: Arc<CandidateFn>,
}

impl fmt::Debug for LyapunovCandidate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("LyapunovCandidate")
            .field("label", &self.label)
            .field("alpha1", &self.alpha1)
            .field("alpha2", &self.alpha2)
            .finish_non_exhaustive()
    }
}

impl LyapunovCandidate {
    pub fn new(
        label: impl Into<String>,
        alpha1: f64,
        alpha2: f64,
        eval: impl Fn(&History, Mode) -> f64 + Send + Sync + 'static,
    ) -> Result<Self> {
        if !(alpha1 > 0.0) {
            return Err(Error::param("alpha1", alpha1, "must be positive"));
        }
        if !(alpha2 > 0.0) {
            return Err(Error::param("alpha2", alpha2, "must be positive"));
        }
        Ok(Self {
            label: label.into(),
            alpha1,
            alpha2,
            eval: Arc::new(eval),
        })
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn alpha1(&self) -> f64 {
        self.alpha1
    }

    pub fn alpha2(&self) -> f64 {
        self.alpha2
    }

    pub fn eval(&self, phi: &History, mode: Mode) -> Result<f64> {
        let v = (self.eval)(phi, mode);
        if !v.is_finite() {
            return Err(Error::NumericFault {
                context: format!("candidate `{}` at mode {mode}", self.label),
            });
        }
        Ok(v)
    }
}

/// `𝓛V(φ, H⁻¹(i)) = Σⱼ p_ij V(F(φ, H⁻¹(i)), H⁻¹(j)) − V(φ, H⁻¹(i))`.
///
/// The successor is computed once; zero-probability terms are skipped.
pub fn eval_lv(v: &LyapunovCandidate, sys: &JumpSystem, phi: &History, mode: Mode) -> Result<f64> {
    let next = sys.successor(phi, mode)?;
    let row = sys.chain().tpm().row(mode.index());
    let mut expected = 0.0;
    for (j, &p) in row.iter().enumerate() {
        if p > 0.0 {
            expected += p * v.eval(&next, Mode::new(j + 1))?;
        }
    }
    Ok(expected - v.eval(phi, mode)?)
}

/// Which inequality a sample was checked against.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Condition {
    /// `V ≥ 0`.
    Nonnegative,
    /// `c₁‖φ(0)‖² ≤ V`.
    LowerBound,
    /// `V ≤ c₂‖φ‖∞²`.
    UpperBound,
    /// `𝓛V ≤ −c₃·(norm term)`.
    Decrease,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Violation {
    /// The offending history, oldest slot first.
    pub history: Vec<Vec<f64>>,
    pub mode: Mode,
    pub lhs: f64,
    pub rhs: f64,
    pub condition: Condition,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    /// No sampled `(φ, i)` violated any condition.
    Pass,
    Falsified,
}

/// Minimum `rhs − lhs` seen per condition.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Margins {
    pub nonnegative: f64,
    pub lower_bound: f64,
    pub upper_bound: f64,
    pub decrease: f64,
}

impl Default for Margins {
    fn default() -> Self {
        Self {
            nonnegative: f64::INFINITY,
            lower_bound: f64::INFINITY,
            upper_bound: f64::INFINITY,
            decrease: f64::INFINITY,
        }
    }
}

impl Margins {
    fn slot(&mut self, c: Condition) -> &mut f64 {
        match c {
            Condition::Nonnegative => &mut self.nonnegative,
            Condition::LowerBound => &mut self.lower_bound,
            Condition::UpperBound => &mut self.upper_bound,
            Condition::Decrease => &mut self.decrease,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConditionReport {
    /// What was checked, e.g. `"theorem1"` or `"lemma1"`.
    pub conditions: String,
    /// Number of `(φ, i)` pairs evaluated.
    pub checked_samples: usize,
    pub violation_count: usize,
    /// First [`MAX_RECORDED_VIOLATIONS`] violations.
    pub violations: Vec<Violation>,
    pub margins: Margins,
    pub verdict: Verdict,
    pub note: String,
}

impl ConditionReport {
    pub fn passed(&self) -> bool {
        self.verdict == Verdict::Pass
    }
}

const FALSIFICATION_NOTE: &str =
    "sampled check: a pass means no counterexample was found among the \
     sampled histories; it is not a proof that the conditions hold on the whole history space";

/// Runs `conditions(φ, i)` over samples and every mode, collecting
/// `(condition, lhs, rhs)` triples that must satisfy `lhs ≤ rhs`.
fn run_checks<I, C>(
    label: &str,
    sys: &JumpSystem,
    samples: I,
    n_samples: usize,
    mut conditions: C,
) -> Result<ConditionReport>
where
    I: IntoIterator<Item = History>,
    C: FnMut(&History, Mode) -> Result<Vec<(Condition, f64, f64)>>,
{
    let mut report = ConditionReport {
        conditions: label.to_string(),
        checked_samples: 0,
        violation_count: 0,
        violations: Vec::new(),
        margins: Margins::default(),
        verdict: Verdict::Pass,
        note: FALSIFICATION_NOTE.to_string(),
    };
    for phi in samples.into_iter().take(n_samples) {
        for mode in sys.chain().bijection().modes() {
            report.checked_samples += 1;
            for (condition, lhs, rhs) in conditions(&phi, mode)? {
                let slack = rhs - lhs;
                let m = report.margins.slot(condition);
                *m = m.min(slack);
                let scale = 1f64.max(lhs.abs()).max(rhs.abs());
                if slack < -CHECK_TOL * scale {
                    report.violation_count += 1;
                    if report.violations.len() < MAX_RECORDED_VIOLATIONS {
                        report.violations.push(Violation {
                            history: phi.slots().map(<[f64]>::to_vec).collect(),
                            mode,
                            lhs,
                            rhs,
                            condition,
                        });
                    }
                }
            }
        }
    }
    if report.violation_count > 0 {
        report.verdict = Verdict::Falsified;
    }
    Ok(report)
}

/// Falsification check of the two sufficient conditions on sampled
/// histories:
///
/// * `α₁‖φ(0)‖² ≤ V(φ, H⁻¹(i)) ≤ α₂‖φ‖∞²`
/// * `𝓛V(φ, H⁻¹(i)) ≤ −α₃‖φ(0)‖²`
pub fn check_theorem1<I>(
    v: &LyapunovCandidate,
    sys: &JumpSystem,
    alpha3: f64,
    samples: I,
    n_samples: usize,
) -> Result<ConditionReport>
where
    I: IntoIterator<Item = History>,
{
    if !(alpha3 > 0.0) {
        return Err(Error::param("alpha3", alpha3, "must be positive"));
    }
    run_checks("theorem1", sys, samples, n_samples, |phi, mode| {
        let value = v.eval(phi, mode)?;
        let now = norm_sq(phi.current());
        let sup = phi.sup_norm().powi(2);
        let lv = eval_lv(v, sys, phi, mode)?;
        Ok(vec![
            (Condition::Nonnegative, 0.0, value),
            (Condition::LowerBound, v.alpha1 * now, value),
            (Condition::UpperBound, value, v.alpha2 * sup),
            (Condition::Decrease, lv, -alpha3 * now),
        ])
    })
}

/// `W` from [`lift_to_w`] together with its constants.
#[derive(Clone, Debug)]
pub struct WLift {
    /// `W`, declaring `α₁ = β₁` and `α₂ = β₂`.
    pub candidate: LyapunovCandidate,
    pub beta1: f64,
    pub beta2: f64,
    pub beta3: f64,
    pub delta: usize,
}

/// `W(φ, i) = V(φ, i) + max_{θ=1..Δ} e^{−θ} α₃ ‖φ(−θ)‖²` with
/// `β₁ = α₁`, `β₂ = α₂ + α₃`, `β₃ = (1 − e^{−1}) α₃ e^{−Δ}`.
pub fn lift_to_w(v: &LyapunovCandidate, alpha3: f64, delta: usize) -> Result<WLift> {
    if !(alpha3 > 0.0) {
        return Err(Error::param("alpha3", alpha3, "must be positive"));
    }
    if delta == 0 {
        return Err(Error::param("delta", 0.0, "the history lift needs Δ ≥ 1"));
    }
    let beta1 = v.alpha1;
    let beta2 = v.alpha2 + alpha3;
    let beta3 = (1.0 - (-1.0f64).exp()) * alpha3 * (-(delta as f64)).exp();
    let inner = v.clone();
    let candidate =
        LyapunovCandidate::new(format!("W[{}]", v.label), beta1, beta2, move |phi, mode| {
            let tail = (1..=delta.min(phi.delta()))
                .map(|theta| (-(theta as f64)).exp() * alpha3 * norm_sq(phi.lagged(theta)))
                .fold(0.0, f64::max);
            (inner.eval)(phi, mode) + tail
        })?;
    Ok(WLift {
        candidate,
        beta1,
        beta2,
        beta3,
        delta,
    })
}

/// Checks the lifted conditions on samples:
///
/// * `β₁‖φ(0)‖² ≤ W ≤ β₂‖φ‖∞²`
/// * `𝓛W ≤ −β₃‖φ‖∞²`
pub fn check_lemma1<I>(
    w: &WLift,
    sys: &JumpSystem,
    samples: I,
    n_samples: usize,
) -> Result<ConditionReport>
where
    I: IntoIterator<Item = History>,
{
    let cand = &w.candidate;
    run_checks("lemma1", sys, samples, n_samples, |phi, mode| {
        let value = cand.eval(phi, mode)?;
        let sup = phi.sup_norm().powi(2);
        let lw = eval_lv(cand, sys, phi, mode)?;
        Ok(vec![
            (Condition::Nonnegative, 0.0, value),
            (
                Condition::LowerBound,
                w.beta1 * norm_sq(phi.current()),
                value,
            ),
            (Condition::UpperBound, value, w.beta2 * sup),
            (Condition::Decrease, lw, -w.beta3 * sup),
        ])
    })
}

/// Explicit constants for `E‖x(k)‖² ≤ M ζ^k ‖ξ₀‖∞²`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DecayCertificate {
    pub gamma1: f64,
    pub gamma2: f64,
    pub gamma3: f64,
    /// `min(γ₃/γ₂, 1 − 1e−9)`.
    pub gamma4: f64,
    #[serde(rename = "M")]
    pub m: f64,
    pub zeta: f64,
}

impl DecayCertificate {
    /// `M ζ^k r²`.
    pub fn bound(&self, k: usize, xi0_sup_norm: f64) -> f64 {
        self.m * self.zeta.powi(k as i32) * xi0_sup_norm * xi0_sup_norm
    }
}

pub fn decay_certificate(gamma1: f64, gamma2: f64, gamma3: f64) -> Result<DecayCertificate> {
    for (name, v) in [("gamma1", gamma1), ("gamma2", gamma2), ("gamma3", gamma3)] {
        if !(v > 0.0) || !v.is_finite() {
            return Err(Error::param(name, v, "must be positive and finite"));
        }
    }
    if gamma1 > gamma2 {
        return Err(Error::param(
            "gamma1",
            gamma1,
            format!("exceeds gamma2 = {gamma2}"),
        ));
    }
    let gamma4 = (gamma3 / gamma2).min(1.0 - GAMMA4_CLAMP);
    Ok(DecayCertificate {
        gamma1,
        gamma2,
        gamma3,
        gamma4,
        m: gamma2 / gamma1,
        zeta: 1.0 - gamma4,
    })
}

/// Constants of the full `α → β → γ → (M, ζ)` chain.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CertificateChain {
    pub alpha1: f64,
    pub alpha2: f64,
    pub alpha3: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub beta3: f64,
    pub delta: usize,
    pub certificate: DecayCertificate,
}

/// Chains the history lift and the decay certificate from `(α₁, α₂, α₃)`.
pub fn certificate_chain(
    alpha1: f64,
    alpha2: f64,
    alpha3: f64,
    delta: usize,
) -> Result<CertificateChain> {
    if !(alpha1 > 0.0) {
        return Err(Error::param("alpha1", alpha1, "must be positive"));
    }
    if !(alpha3 > 0.0) {
        return Err(Error::param("alpha3", alpha3, "must be positive"));
    }
    if delta == 0 {
        return Err(Error::param("delta", 0.0, "the history lift needs Δ ≥ 1"));
    }
    let beta1 = alpha1;
    let beta2 = alpha2 + alpha3;
    let beta3 = (1.0 - (-1.0f64).exp()) * alpha3 * (-(delta as f64)).exp();
    let certificate = decay_certificate(beta1, beta2, beta3)?;
    Ok(CertificateChain {
        alpha1,
        alpha2,
        alpha3,
        beta1,
        beta2,
        beta3,
        delta,
        certificate,
    })
}

/// Histories on the `‖·‖∞` ball of radius `R`.
///
/// Emits structured corner cases first (one-hot slots of both signs, all
/// slots equal, alternating signs), then i.i.d. histories with every slot
/// uniform on the Euclidean ball of radius `R`.
#[derive(Clone, Debug)]
pub struct HistorySampler {
    delta: usize,
    dim: usize,
    radius: f64,
    rng: ChaCha8Rng,
    structured: Vec<History>,
}

impl HistorySampler {
    pub fn new(delta: usize, dim: usize, radius: f64, seed: u64) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidModel(
                "state dimension must be positive".into(),
            ));
        }
        if !(radius > 0.0) || !radius.is_finite() {
            return Err(Error::param(
                "radius",
                radius,
                "must be positive and finite",
            ));
        }
        let mut structured = Vec::new();
        let mut unit = vec![0.0; dim];
        unit[0] = radius;
        let neg: Vec<f64> = unit.iter().map(|v| -v).collect();
        let zero = vec![0.0; dim];
        for lag in 0..=delta {
            for v in [&unit, &neg] {
                let slots: Vec<Vec<f64>> = (0..=delta)
                    .map(|row| {
                        if delta - row == lag {
                            v.clone()
                        } else {
                            zero.clone()
                        }
                    })
                    .collect();
                structured.push(History::from_slots(&slots)?);
            }
        }
        let half: Vec<f64> = unit.iter().map(|v| v / 2.0).collect();
        for v in [&unit, &neg, &half] {
            structured.push(History::constant(delta, v));
        }
        for start in [&unit, &neg] {
            let flip: Vec<f64> = start.iter().map(|v| -v).collect();
            let slots: Vec<Vec<f64>> = (0..=delta)
                .map(|row| {
                    if row % 2 == 0 {
                        start.clone()
                    } else {
                        flip.clone()
                    }
                })
                .collect();
            structured.push(History::from_slots(&slots)?);
        }
        structured.reverse();
        Ok(Self {
            delta,
            dim,
            radius,
            rng: ChaCha8Rng::seed_from_u64(seed),
            structured,
        })
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    fn random_slot(&mut self) -> Vec<f64> {
        if self.dim == 1 {
            return vec![self.radius * (2.0 * self.rng.random::<f64>() - 1.0)];
        }
        let dir: Vec<f64> = (0..self.dim)
            .map(|_| self.rng.sample(StandardNormal))
            .collect();
        let len = norm_sq(&dir).sqrt();
        if len == 0.0 {
            return vec![0.0; self.dim];
        }
        let r = self.radius * self.rng.random::<f64>().powf(1.0 / self.dim as f64);
        dir.into_iter().map(|x| x / len * r).collect()
    }
}

impl Iterator for HistorySampler {
    type Item = History;

    fn next(&mut self) -> Option<History> {
        if let Some(h) = self.structured.pop() {
            return Some(h);
        }
        let slots: Vec<Vec<f64>> = (0..=self.delta).map(|_| self.random_slot()).collect();
        Some(History::from_slots(&slots).expect("sampler slots have uniform dimension"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::markov::{DelayBijection, MarkovDelayChain, Tpm};
    use crate::sat_example::sat_model;

    fn sat_sys(gamma: f64, rows: Vec<Vec<f64>>) -> JumpSystem {
        let model = sat_model(gamma).unwrap();
        let chain = MarkovDelayChain::new(
            Tpm::new(rows).unwrap(),
            DelayBijection::new(model.alphabet().to_vec()).unwrap(),
        )
        .unwrap();
        JumpSystem::new(model, chain).unwrap()
    }

    #[test]
    fn lv_of_zero_history_is_zero() {
        let sys = sat_sys(1.2, vec![vec![0.9, 0.1], vec![0.4, 0.6]]);
        let v = sat_candidate(1.0, 3.0, 1.2, std::f64::consts::E).unwrap();
        for m in [Mode::new(1), Mode::new(2)] {
            assert_eq!(eval_lv(&v, &sys, &History::zeros(2, 1), m).unwrap(), 0.0);
        }
    }

    #[test]
    fn lv_with_deterministic_row_is_single_term() {
        let sys = sat_sys(1.1, vec![vec![1.0, 0.0], vec![0.0, 1.0]]);
        let v = sat_candidate(2.0, 5.0, 1.1, 2.0).unwrap();
        let phi = History::scalar(&[0.7, -0.3, 0.9]).unwrap();
        for m in [Mode::new(1), Mode::new(2)] {
            let next = sys.successor(&phi, m).unwrap();
            let expect = v.eval(&next, m).unwrap() - v.eval(&phi, m).unwrap();
            assert_eq!(eval_lv(&v, &sys, &phi, m).unwrap(), expect);
        }
    }

    #[test]
    fn zero_candidate_fails_lower_bound() {
        let sys = sat_sys(1.0, vec![vec![0.5, 0.5], vec![0.5, 0.5]]);
        let zero = LyapunovCandidate::new("zero", 1.0, 1.0, |_, _| 0.0).unwrap();
        let sampler = HistorySampler::new(2, 1, 1.0, 0).unwrap();
        let report = check_theorem1(&zero, &sys, 0.1, sampler, 50).unwrap();
        assert_eq!(report.verdict, Verdict::Falsified);
        assert!(report
            .violations
            .iter()
            .any(|v| v.condition == Condition::LowerBound && v.history[2][0] != 0.0));
        assert!(report
            .violations
            .iter()
            .all(|v| v.condition != Condition::UpperBound));
    }

    #[test]
    fn locked_unstable_mode_falsifies_decrease() {
        let e = std::f64::consts::E;
        let sys = sat_sys(1.0, vec![vec![0.95, 0.05], vec![0.0, 1.0]]);
        let v = sat_candidate(1.0, 10.0, 1.0, e).unwrap();
        let sampler = HistorySampler::new(2, 1, 1.0, 3).unwrap();
        let report = check_theorem1(&v, &sys, 0.01, sampler, 200).unwrap();
        assert!(!report.passed());
        // φ = (1, 0, 0): the delayed slot alone drives the mode-2 successor.
        let phi = History::scalar(&[1.0, 0.0, 0.0]).unwrap();
        assert!(eval_lv(&v, &sys, &phi, Mode::new(2)).unwrap() > 0.0);
        assert!(report
            .violations
            .iter()
            .any(|v| v.condition == Condition::Decrease
                && v.mode == Mode::new(2)
                && v.history == vec![vec![1.0], vec![0.0], vec![0.0]]));
    }

    #[test]
    fn w_lift_examples() {
        let v = sat_candidate(1.0, 1.0, 1.0, std::f64::consts::E).unwrap();
        let w = lift_to_w(&v, 1.0, 2).unwrap();
        let zero = History::zeros(2, 1);
        assert_eq!(w.candidate.eval(&zero, Mode::new(1)).unwrap(), 0.0);

        let phi = History::scalar(&[1.0, 0.0, 0.0]).unwrap();
        let base = v.eval(&phi, Mode::new(1)).unwrap();
        let lifted = w.candidate.eval(&phi, Mode::new(1)).unwrap();
        assert!((lifted - (base + (-2.0f64).exp())).abs() < 1e-15);

        assert!((w.beta3 - (1.0 - (-1.0f64).exp()) * (-2.0f64).exp()).abs() < 1e-16);
        assert_eq!(w.beta1, v.alpha1());
        assert_eq!(w.beta2, v.alpha2() + 1.0);

        assert!(lift_to_w(&v, 0.0, 2).is_err());
        assert!(lift_to_w(&v, 1.0, 0).is_err());
    }

    #[test]
    fn decay_certificate_examples() {
        let c = decay_certificate(1.0, 1.0, 0.5).unwrap();
        assert_eq!((c.m, c.zeta), (1.0, 0.5));

        let clamped = decay_certificate(1.0, 2.0, 5.0).unwrap();
        assert_eq!(clamped.gamma4, 1.0 - GAMMA4_CLAMP);
        assert!((clamped.zeta - 1e-9).abs() < 1e-15);
        assert!(clamped.zeta > 0.0 && clamped.zeta < 1.0);

        assert!(decay_certificate(0.0, 1.0, 1.0).is_err());
        assert!(decay_certificate(1.0, 1.0, -1.0).is_err());
        assert!(decay_certificate(2.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn chain_matches_manual_composition() {
        let chain = certificate_chain(0.5, 4.0, 0.2, 2).unwrap();
        let v = LyapunovCandidate::new("probe", 0.5, 4.0, |_, _| 0.0).unwrap();
        let w = lift_to_w(&v, 0.2, 2).unwrap();
        assert_eq!(
            (chain.beta1, chain.beta2, chain.beta3),
            (w.beta1, w.beta2, w.beta3)
        );
        let cert = decay_certificate(w.beta1, w.beta2, w.beta3).unwrap();
        assert_eq!(chain.certificate, cert);
        assert!(cert.m >= 1.0 && cert.zeta > 0.0 && cert.zeta < 1.0);
    }

    #[test]
    fn sampler_covers_corners_then_stays_in_ball() {
        let mut s = HistorySampler::new(2, 1, 10.0, 1).unwrap();
        let first = s.next().unwrap();
        assert_eq!(first.as_flat(), &[0.0, 0.0, 10.0]);
        let all: Vec<History> = s.take(2000).collect();
        assert!(all.iter().any(|h| h.as_flat() == [10.0, -10.0, 10.0]));
        assert!(all.iter().all(|h| h.sup_norm() <= 10.0));
        let mut vs = HistorySampler::new(1, 3, 2.0, 5).unwrap();
        for h in vs.by_ref().take(500) {
            assert!(h.sup_norm() <= 2.0 + 1e-12);
            assert_eq!(h.dim(), 3);
        }
    }

    #[test]
    fn sampler_is_deterministic() {
        let a: Vec<History> = HistorySampler::new(2, 1, 3.0, 42)
            .unwrap()
            .take(100)
            .collect();
        let b: Vec<History> = HistorySampler::new(2, 1, 3.0, 42)
            .unwrap()
            .take(100)
            .collect();
        assert_eq!(a, b);
    }
}
