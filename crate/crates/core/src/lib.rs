//! Discrete-time systems with Markovian time-varying delays: simulation,
//! Lyapunov-Krasovskii certificate checks and second-moment analysis.
//!
//! A [`DelayModel`] describes `x(k+1) = f(x(k), x(k−d₁(k)), …)` on a finite
//! delay alphabet. Pairing it with a [`MarkovDelayChain`] gives a
//! [`JumpSystem`] whose histories can be simulated in ensembles, checked
//! against candidate functionals and summarised as moment curves.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod error;
pub mod format;
pub mod history;
pub mod jump_system;
pub mod lyapunov;
pub mod markov;
pub mod moments;
pub mod sat_example;

pub use error::{Error, Result};
pub use history::{DelayModel, DelayVector, Dynamics, History};
pub use jump_system::{
    simulate, simulate_ensemble, simulate_ensemble_with, Ensemble, EnsembleOptions, EnsembleStats,
    InitialMode, JumpSystem, Trajectory,
};
pub use lyapunov::{
    certificate_chain, check_lemma1, check_theorem1, decay_certificate, eval_lv, lift_to_w,
    CertificateChain, ConditionReport, DecayCertificate, HistorySampler, LyapunovCandidate, WLift,
};
pub use markov::{DelayBijection, MarkovDelayChain, Mode, Tpm};
pub use moments::{emss_check, fit_decay, DecayFit, EmssCheck, MomentCurve};
pub use sat_example::{
    build_sat_system, certify_sat, sat_model, CParam, SatCertificateReport, SatSystemSpec,
};
