//! A user-defined two-dimensional system with two delay channels,
//! simulated through the library API.
//!
//! Run with `cargo run --example custom_system`.

use std::sync::Arc;

use mjds::jump_system::trajectory_rng;
use mjds::{simulate, simulate_ensemble, DelayBijection, DelayModel, DelayVector};
use mjds::{History, InitialMode, JumpSystem, MarkovDelayChain, Mode, Tpm};

fn main() -> mjds::Result<()> {
    // x(k+1) = A x(k) + B tanh(x(k − d₁)) + C x(k − d₂)
    let f = |args: &[&[f64]], out: &mut [f64]| {
        let (x, y, z) = (args[0], args[1], args[2]);
        out[0] = 0.5 * x[0] + 0.1 * x[1] + 0.2 * y[0].tanh() - 0.1 * z[1];
        out[1] = -0.2 * x[0] + 0.4 * x[1] + 0.1 * y[1].tanh() + 0.1 * z[0];
    };
    let alphabet = vec![
        DelayVector::new(vec![1, 3]),
        DelayVector::new(vec![2, 2]),
        DelayVector::new(vec![3, 1]),
    ];
    let model = DelayModel::new("coupled", 2, 2, 3, Arc::new(f), alphabet.clone())?;
    let tpm = Tpm::new(vec![
        vec![0.8, 0.2, 0.0],
        vec![0.1, 0.8, 0.1],
        vec![0.0, 0.3, 0.7],
    ])?;
    let sys = JumpSystem::new(
        model,
        MarkovDelayChain::new(tpm, DelayBijection::new(alphabet)?)?,
    )?;

    let xi0 = History::from_slots(&[
        vec![1.0, 0.0],
        vec![0.0, 1.0],
        vec![-1.0, 0.5],
        vec![2.0, -1.0],
    ])?;
    let traj = simulate(&sys, &xi0, Mode::new(1), 10, &mut trajectory_rng(1, 0))?;
    print!("{}", traj.to_csv());

    let stats = simulate_ensemble(&sys, &xi0, InitialMode::Uniform, 40, 500, 1)?;
    println!("mean |x|^2 at k = 40: {:.3e}", stats.mean_sq[40]);
    Ok(())
}
