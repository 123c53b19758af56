//! Monte Carlo second moment of the saturation system with γ = 1.2,
//! p = 0.95, q = 0.01 and a constant unit initial history.
//!
//! Run with `cargo run --release --example simulate_ensemble`.

use mjds::{build_sat_system, simulate_ensemble, History, InitialMode, SatSystemSpec};

fn main() -> mjds::Result<()> {
    let sys = build_sat_system(&SatSystemSpec::new(1.2, 0.95, 0.01))?;
    let xi0 = History::constant(2, &[1.0]);
    let stats = simulate_ensemble(&sys, &xi0, InitialMode::Uniform, 60, 1000, 7)?;

    println!(
        "{:>3}  {:>12}  {:>12}  {:>12}",
        "k", "mean |x|^2", "max |x|", "ci99"
    );
    for k in (0..=60).step_by(5) {
        println!(
            "{k:>3}  {:>12.4e}  {:>12.4e}  {:>12.4e}",
            stats.mean_sq[k], stats.max_norm[k], stats.ci99_halfwidth[k]
        );
    }
    Ok(())
}
