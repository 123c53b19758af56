//! The composed Markov jump system and trajectory simulation.
//!
//! A [`JumpSystem`] pairs a [`DelayModel`] with a [`MarkovDelayChain`] over
//! the same alphabet. Trajectories follow `x_{k+1} = F(x_k, H⁻¹(η(k)))`.
//!
//! Ensembles are reproducible: run `r` of an ensemble seeded with `seed`
//! draws from ChaCha8 stream `r` of that seed, so its path does not depend
//! on how many runs there are or which thread simulated it. Per-step
//! statistics are reduced over fixed blocks of [`REDUCE_BLOCK`] runs and the
//! blocks merged in run order, which makes the result bit-identical for any
//! thread count.

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::format::fmt_f64;
use crate::history::{norm_sq, DelayModel, History};
use crate::markov::{MarkovDelayChain, Mode};
use crate::moments::MomentCurve;

/// Two-sided 99% standard normal quantile.
pub const Z99: f64 = 2.575_829_303_548_900_4;

/// Runs per reduction block.
pub const REDUCE_BLOCK: usize = 64;

/// Random stream for run `index` of an ensemble seeded with `seed`.
pub fn trajectory_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

#[derive(Clone, Debug)]
pub struct JumpSystem {
    model: DelayModel,
    chain: MarkovDelayChain,
}

impl JumpSystem {
    /// The chain's alphabet must equal the model's, in the same order.
    pub fn new(model: DelayModel, chain: MarkovDelayChain) -> Result<Self> {
        if model.alphabet() != chain.bijection().alphabet() {
            return Err(Error::InvalidModel(
                "chain alphabet differs from the model alphabet (content or order)".into(),
            ));
        }
        Ok(Self { model, chain })
    }

    pub fn model(&self) -> &DelayModel {
        &self.model
    }

    pub fn chain(&self) -> &MarkovDelayChain {
        &self.chain
    }

    pub fn modes(&self) -> usize {
        self.chain.modes()
    }

    /// `F(φ, H⁻¹(i))`.
    pub fn successor(&self, phi: &History, mode: Mode) -> Result<History> {
        let d = self.chain.bijection().delay_of(mode)?;
        self.model.lift_step(phi, d)
    }

    fn check_initial(&self, xi0: &History) -> Result<()> {
        if xi0.dim() != self.model.n() || xi0.delta() != self.model.delta() {
            return Err(Error::DimensionMismatch {
                what: "initial history (n·(Δ+1))",
                index: 0,
                expected: self.model.n() * (self.model.delta() + 1),
                found: xi0.dim() * (xi0.delta() + 1),
            });
        }
        Ok(())
    }

    /// Runs the recursion for `horizon` steps, calling `visit(k, x(k))` for
    /// `k = 0..=K` and `on_mode(k, η(k))` for `k = 0..K`.
    fn run<R, V, M>(
        &self,
        xi0: &History,
        eta0: Mode,
        horizon: usize,
        rng: &mut R,
        mut visit: V,
        mut on_mode: M,
    ) -> Result<()>
    where
        R: Rng + ?Sized,
        V: FnMut(usize, &[f64]),
        M: FnMut(usize, Mode),
    {
        self.check_initial(xi0)?;
        self.chain.bijection().check(eta0)?;
        let mut current = xi0.clone();
        let mut next = xi0.clone();
        let mut mode = eta0;
        visit(0, current.current());
        for k in 0..horizon {
            on_mode(k, mode);
            let d = self.chain.bijection().delay_of(mode)?;
            self.model.lift_step_into(&current, d, &mut next)?;
            std::mem::swap(&mut current, &mut next);
            visit(k + 1, current.current());
            if k + 1 < horizon {
                mode = self.chain.sample_next(mode, rng)?;
            }
        }
        Ok(())
    }
}

/// One sample path.
#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    /// `x(k)` for `k = 0..=K`.
    pub states: Vec<Vec<f64>>,
    /// `η(k)` for `k = 0..K`.
    pub modes: Vec<Mode>,
    pub initial: History,
    /// Ensemble seed and run index, when produced by an ensemble.
    pub seed: Option<(u64, u64)>,
}

impl Trajectory {
    pub fn horizon(&self) -> usize {
        self.modes.len()
    }

    /// CSV with columns `k, x_1..x_n, mode`; the mode cell is empty at `k = K`.
    pub fn to_csv(&self) -> String {
        let n = self.initial.dim();
        let mut out = String::from("k");
        for i in 1..=n {
            write!(out, ",x_{i}").unwrap();
        }
        out.push_str(",mode\n");
        for (k, x) in self.states.iter().enumerate() {
            write!(out, "{k}").unwrap();
            for v in x {
                write!(out, ",{}", fmt_f64(*v)).unwrap();
            }
            match self.modes.get(k) {
                Some(m) => writeln!(out, ",{m}").unwrap(),
                None => out.push_str(",\n"),
            }
        }
        out
    }
}

/// Simulates one trajectory from `ξ₀` with `η(0) = eta0`.
pub fn simulate<R: Rng + ?Sized>(
    sys: &JumpSystem,
    xi0: &History,
    eta0: Mode,
    horizon: usize,
    rng: &mut R,
) -> Result<Trajectory> {
    let mut states = Vec::with_capacity(horizon + 1);
    let mut modes = Vec::with_capacity(horizon);
    sys.run(
        xi0,
        eta0,
        horizon,
        rng,
        |_, x| states.push(x.to_vec()),
        |_, m| modes.push(m),
    )?;
    Ok(Trajectory {
        states,
        modes,
        initial: xi0.clone(),
        seed: None,
    })
}

/// Distribution of `η(0)`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialMode {
    /// Uniform over all modes, drawn from each run's own stream.
    #[default]
    Uniform,
    Fixed(Mode),
}

impl InitialMode {
    fn draw<R: Rng + ?Sized>(self, modes: usize, rng: &mut R) -> Mode {
        match self {
            InitialMode::Fixed(m) => m,
            InitialMode::Uniform => Mode::from_index(rng.random_range(0..modes)),
        }
    }
}

#[derive(Clone, Debug, Default)]
pub struct EnsembleOptions {
    /// Keep full trajectories of the first this-many runs.
    pub retain_trajectories: usize,
}

/// Per-step second-moment statistics over an ensemble.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EnsembleStats {
    pub horizon: usize,
    pub n_runs: usize,
    pub seed: u64,
    pub initial_mode: InitialMode,
    pub xi0_sup_norm: f64,
    /// Sample mean of `‖x(k)‖²`.
    pub mean_sq: Vec<f64>,
    /// Sample mean of `‖x(k)‖`.
    pub mean_norm: Vec<f64>,
    pub min_norm: Vec<f64>,
    pub max_norm: Vec<f64>,
    /// Sample standard deviation of `‖x(k)‖²`.
    pub std_sq: Vec<f64>,
    /// 99% confidence half-width for `mean_sq`.
    pub ci99_halfwidth: Vec<f64>,
}

impl EnsembleStats {
    /// CSV with columns `k, mean_sq, min_norm, max_norm, std, ci99_halfwidth`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("k,mean_sq,min_norm,max_norm,std,ci99_halfwidth\n");
        for k in 0..=self.horizon {
            writeln!(
                out,
                "{k},{},{},{},{},{}",
                fmt_f64(self.mean_sq[k]),
                fmt_f64(self.min_norm[k]),
                fmt_f64(self.max_norm[k]),
                fmt_f64(self.std_sq[k]),
                fmt_f64(self.ci99_halfwidth[k]),
            )
            .unwrap();
        }
        out
    }

    pub fn moment_curve(&self) -> MomentCurve {
        MomentCurve {
            values: self.mean_sq.clone(),
            ci_halfwidths: self.ci99_halfwidth.clone(),
            n_runs: self.n_runs,
            seed: self.seed,
            xi0_sup_norm: self.xi0_sup_norm,
        }
    }
}

#[derive(Clone, Debug)]
pub struct Ensemble {
    pub stats: EnsembleStats,
    pub trajectories: Vec<Trajectory>,
}

/// Neumaier-compensated running sum.
#[derive(Clone, Copy, Debug, Default)]
struct CompensatedSum {
    sum: f64,
    carry: f64,
}

impl CompensatedSum {
    fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry += (self.sum - t) + x;
        } else {
            self.carry += (x - t) + self.sum;
        }
        self.sum = t;
    }

    fn merge(&mut self, other: &Self) {
        self.add(other.sum);
        self.add(other.carry);
    }

    fn value(&self) -> f64 {
        self.sum + self.carry
    }
}

#[derive(Clone, Debug)]
struct StepAccumulator {
    sum_sq: CompensatedSum,
    sum_sq2: CompensatedSum,
    sum_norm: CompensatedSum,
    min_sq: f64,
    max_sq: f64,
}

impl Default for StepAccumulator {
    fn default() -> Self {
        Self {
            sum_sq: CompensatedSum::default(),
            sum_sq2: CompensatedSum::default(),
            sum_norm: CompensatedSum::default(),
            min_sq: f64::INFINITY,
            max_sq: f64::NEG_INFINITY,
        }
    }
}

impl StepAccumulator {
    fn push(&mut self, sq: f64) {
        self.sum_sq.add(sq);
        self.sum_sq2.add(sq * sq);
        self.sum_norm.add(sq.sqrt());
        self.min_sq = self.min_sq.min(sq);
        self.max_sq = self.max_sq.max(sq);
    }

    fn merge(&mut self, other: &Self) {
        self.sum_sq.merge(&other.sum_sq);
        self.sum_sq2.merge(&other.sum_sq2);
        self.sum_norm.merge(&other.sum_norm);
        self.min_sq = self.min_sq.min(other.min_sq);
        self.max_sq = self.max_sq.max(other.max_sq);
    }
}

struct Block {
    steps: Vec<StepAccumulator>,
    trajectories: Vec<Trajectory>,
}

/// Monte Carlo estimate of `E‖x(k)‖²` and envelopes, `k = 0..=K`.
pub fn simulate_ensemble(
    sys: &JumpSystem,
    xi0: &History,
    eta0: InitialMode,
    horizon: usize,
    n_runs: usize,
    seed: u64,
) -> Result<EnsembleStats> {
    simulate_ensemble_with(
        sys,
        xi0,
        eta0,
        horizon,
        n_runs,
        seed,
        &EnsembleOptions::default(),
    )
    .map(|e| e.stats)
}

pub fn simulate_ensemble_with(
    sys: &JumpSystem,
    xi0: &History,
    eta0: InitialMode,
    horizon: usize,
    n_runs: usize,
    seed: u64,
    options: &EnsembleOptions,
) -> Result<Ensemble> {
    if n_runs == 0 {
        return Err(Error::config("runs", "number of runs must be at least 1"));
    }
    sys.check_initial(xi0)?;
    if let InitialMode::Fixed(m) = eta0 {
        sys.chain().bijection().check(m)?;
    }

    let n_blocks = n_runs.div_ceil(REDUCE_BLOCK);
    let blocks: Vec<Block> = (0..n_blocks)
        .into_par_iter()
        .map(|b| simulate_block(sys, xi0, eta0, horizon, seed, b, n_runs, options))
        .collect::<Result<_>>()?;

    let mut steps = vec![StepAccumulator::default(); horizon + 1];
    let mut trajectories = Vec::new();
    for block in blocks {
        for (acc, part) in steps.iter_mut().zip(&block.steps) {
            acc.merge(part);
        }
        trajectories.extend(block.trajectories);
    }

    let n = n_runs as f64;
    let mut stats = EnsembleStats {
        horizon,
        n_runs,
        seed,
        initial_mode: eta0,
        xi0_sup_norm: xi0.sup_norm(),
        mean_sq: Vec::with_capacity(horizon + 1),
        mean_norm: Vec::with_capacity(horizon + 1),
        min_norm: Vec::with_capacity(horizon + 1),
        max_norm: Vec::with_capacity(horizon + 1),
        std_sq: Vec::with_capacity(horizon + 1),
        ci99_halfwidth: Vec::with_capacity(horizon + 1),
    };
    for acc in &steps {
        let (mean_sq, mean_norm, std) = if acc.min_sq == acc.max_sq {
            // All runs agree: report the common value exactly.
            (acc.min_sq, acc.min_sq.sqrt(), 0.0)
        } else {
            let s1 = acc.sum_sq.value();
            let s2 = acc.sum_sq2.value();
            let var = ((s2 - s1 * s1 / n) / (n - 1.0)).max(0.0);
            let mean_norm = (acc.sum_norm.value() / n).clamp(acc.min_sq.sqrt(), acc.max_sq.sqrt());
            (s1 / n, mean_norm, var.sqrt())
        };
        stats.mean_sq.push(mean_sq);
        stats.mean_norm.push(mean_norm);
        stats.min_norm.push(acc.min_sq.sqrt());
        stats.max_norm.push(acc.max_sq.sqrt());
        stats.std_sq.push(std);
        stats.ci99_halfwidth.push(Z99 * std / n.sqrt());
    }
    Ok(Ensemble {
        stats,
        trajectories,
    })
}

#[allow(clippy::too_many_arguments)]
fn simulate_block(
    sys: &JumpSystem,
    xi0: &History,
    eta0: InitialMode,
    horizon: usize,
    seed: u64,
    block: usize,
    n_runs: usize,
    options: &EnsembleOptions,
) -> Result<Block> {
    let mut steps = vec![StepAccumulator::default(); horizon + 1];
    let mut trajectories = Vec::new();
    let start = block * REDUCE_BLOCK;
    let end = (start + REDUCE_BLOCK).min(n_runs);
    for run in start..end {
        let mut rng = trajectory_rng(seed, run as u64);
        let mode0 = eta0.draw(sys.modes(), &mut rng);
        if run < options.retain_trajectories {
            let mut traj = simulate(sys, xi0, mode0, horizon, &mut rng)?;
            for (acc, x) in steps.iter_mut().zip(&traj.states) {
                acc.push(norm_sq(x));
            }
            traj.seed = Some((seed, run as u64));
            trajectories.push(traj);
        } else {
            sys.run(
                xi0,
                mode0,
                horizon,
                &mut rng,
                |k, x| steps[k].push(norm_sq(x)),
                |_, _| {},
            )?;
        }
    }
    Ok(Block {
        steps,
        trajectories,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::markov::{DelayBijection, Tpm};
    use crate::sat_example::sat_model;

    fn locked(gamma: f64) -> JumpSystem {
        let model = sat_model(gamma).unwrap();
        let chain = MarkovDelayChain::new(
            Tpm::identity(2),
            DelayBijection::new(model.alphabet().to_vec()).unwrap(),
        )
        .unwrap();
        JumpSystem::new(model, chain).unwrap()
    }

    fn mixing(gamma: f64, p: f64, q: f64) -> JumpSystem {
        let model = sat_model(gamma).unwrap();
        let chain = MarkovDelayChain::new(
            Tpm::two_state(p, q).unwrap(),
            DelayBijection::new(model.alphabet().to_vec()).unwrap(),
        )
        .unwrap();
        JumpSystem::new(model, chain).unwrap()
    }

    #[test]
    fn zero_initial_history_stays_zero() {
        let sys = mixing(1.2, 0.5, 0.5);
        for seed in 0..5 {
            let mut rng = trajectory_rng(seed, 0);
            let t = simulate(&sys, &History::zeros(2, 1), Mode::new(1), 50, &mut rng).unwrap();
            assert!(t.states.iter().all(|x| x[0] == 0.0));
            assert_eq!(t.states.len(), 51);
            assert_eq!(t.modes.len(), 50);
        }
        let stats = simulate_ensemble(
            &sys,
            &History::zeros(2, 1),
            InitialMode::Uniform,
            20,
            100,
            1,
        )
        .unwrap();
        for v in [
            &stats.mean_sq,
            &stats.min_norm,
            &stats.max_norm,
            &stats.std_sq,
            &stats.ci99_halfwidth,
        ] {
            assert!(v.iter().all(|&x| x == 0.0));
        }
    }

    #[test]
    fn locked_delay_zero_with_unit_gamma_dies_in_one_step() {
        let sys = locked(1.0);
        let mut rng = trajectory_rng(0, 0);
        let t = simulate(
            &sys,
            &History::constant(2, &[0.5]),
            Mode::new(1),
            30,
            &mut rng,
        )
        .unwrap();
        assert_eq!(t.states[0], vec![0.5]);
        assert!(t.states[1..].iter().all(|x| x[0] == 0.0));
        assert!(t.modes.iter().all(|&m| m == Mode::new(1)));
    }

    #[test]
    fn locked_delay_two_does_not_decay() {
        let sys = locked(1.2);
        let mut rng = trajectory_rng(0, 0);
        let t = simulate(
            &sys,
            &History::constant(2, &[0.1]),
            Mode::new(2),
            200,
            &mut rng,
        )
        .unwrap();
        let min = t.states[100..=200]
            .iter()
            .map(|x| x[0].abs())
            .fold(f64::INFINITY, f64::min);
        assert!(min > 1e-3, "min |x| = {min}");
    }

    #[test]
    fn single_run_mean_is_the_trajectory() {
        let sys = mixing(1.2, 0.9, 0.3);
        let xi0 = History::scalar(&[0.4, -0.7, 0.9]).unwrap();
        let opts = EnsembleOptions {
            retain_trajectories: 1,
        };
        let e = simulate_ensemble_with(&sys, &xi0, InitialMode::Uniform, 40, 1, 11, &opts).unwrap();
        let t = &e.trajectories[0];
        for (k, x) in t.states.iter().enumerate() {
            assert_eq!(e.stats.mean_sq[k], x[0] * x[0]);
            assert_eq!(e.stats.std_sq[k], 0.0);
        }
        assert_eq!(t.seed, Some((11, 0)));
    }

    #[test]
    fn locked_ensemble_mean_is_exact_for_any_n() {
        let sys = locked(1.2);
        let xi0 = History::constant(2, &[0.1]);
        let mut rng = trajectory_rng(0, 0);
        let det = simulate(&sys, &xi0, Mode::new(2), 30, &mut rng).unwrap();
        for n in [1, 3, 65, 200] {
            let s =
                simulate_ensemble(&sys, &xi0, InitialMode::Fixed(Mode::new(2)), 30, n, 5).unwrap();
            for (k, x) in det.states.iter().enumerate() {
                assert_eq!(s.mean_sq[k], x[0] * x[0], "n = {n}, k = {k}");
            }
        }
    }

    #[test]
    fn retained_trajectories_do_not_change_statistics() {
        let sys = mixing(1.2, 0.95, 0.01);
        let xi0 = History::constant(2, &[1.0]);
        let plain = simulate_ensemble(&sys, &xi0, InitialMode::Uniform, 30, 150, 9).unwrap();
        let opts = EnsembleOptions {
            retain_trajectories: 70,
        };
        let kept =
            simulate_ensemble_with(&sys, &xi0, InitialMode::Uniform, 30, 150, 9, &opts).unwrap();
        assert_eq!(plain, kept.stats);
        assert_eq!(kept.trajectories.len(), 70);
    }

    #[test]
    fn mode_paths_stay_on_edges() {
        let model = sat_model(1.0).unwrap();
        let chain = MarkovDelayChain::new(
            Tpm::new(vec![vec![0.0, 1.0], vec![0.6, 0.4]]).unwrap(),
            DelayBijection::new(model.alphabet().to_vec()).unwrap(),
        )
        .unwrap();
        let edges = chain.edge_set();
        let sys = JumpSystem::new(model, chain).unwrap();
        let opts = EnsembleOptions {
            retain_trajectories: 50,
        };
        let e = simulate_ensemble_with(
            &sys,
            &History::constant(2, &[0.3]),
            InitialMode::Uniform,
            100,
            50,
            4,
            &opts,
        )
        .unwrap();
        let h = sys.chain().bijection();
        for t in &e.trajectories {
            for w in t.modes.windows(2) {
                let pair = (
                    h.delay_of(w[0]).unwrap().clone(),
                    h.delay_of(w[1]).unwrap().clone(),
                );
                assert!(edges.contains(&pair));
            }
        }
    }

    #[test]
    fn runs_zero_and_bad_inputs() {
        let sys = mixing(1.0, 0.5, 0.5);
        let xi0 = History::zeros(2, 1);
        assert!(simulate_ensemble(&sys, &xi0, InitialMode::Uniform, 5, 0, 0).is_err());
        assert!(
            simulate_ensemble(&sys, &History::zeros(1, 1), InitialMode::Uniform, 5, 1, 0).is_err()
        );
        assert!(simulate_ensemble(&sys, &xi0, InitialMode::Fixed(Mode::new(3)), 5, 1, 0).is_err());
    }

    #[test]
    fn alphabet_order_must_match() {
        let model = sat_model(1.0).unwrap();
        let reversed: Vec<_> = model.alphabet().iter().rev().cloned().collect();
        let chain = MarkovDelayChain::new(Tpm::identity(2), DelayBijection::new(reversed).unwrap())
            .unwrap();
        assert!(JumpSystem::new(model, chain).is_err());
    }

    #[test]
    fn compensated_sum_beats_naive() {
        let mut c = CompensatedSum::default();
        c.add(1.0);
        for _ in 0..10_000 {
            c.add(1e-16);
        }
        assert!((c.value() - (1.0 + 1e-12)).abs() < 1e-20);
    }

    #[test]
    fn trajectory_csv_layout() {
        let sys = locked(1.0);
        let mut rng = trajectory_rng(0, 0);
        let t = simulate(
            &sys,
            &History::constant(2, &[0.5]),
            Mode::new(1),
            2,
            &mut rng,
        )
        .unwrap();
        let csv = t.to_csv();
        let lines: Vec<_> = csv.lines().collect();
        assert_eq!(lines[0], "k,x_1,mode");
        assert_eq!(lines[1], "0,5.0000000000000000e-1,1");
        assert_eq!(lines[3], "2,0.0000000000000000e0,");
    }
}
