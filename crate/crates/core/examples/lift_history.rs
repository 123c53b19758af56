//! One lifted step of the saturation system on a hand-written history.
//!
//! Run with `cargo run --example lift_history`.

use mjds::sat_example::sat_model;
use mjds::{DelayVector, History};

fn main() -> mjds::Result<()> {
    let model = sat_model(1.2)?;
    // Oldest slot first: φ(−2), φ(−1), φ(0).
    let phi = History::scalar(&[0.5, -2.0, 0.8])?;
    println!("phi        = {phi:?}  (sup norm {})", phi.sup_norm());

    for d in [DelayVector::scalar(0), DelayVector::scalar(2)] {
        let next = model.lift_step(&phi, &d)?;
        println!("F(phi, {d}) = {next:?}");
    }

    match model.lift_step(&phi, &DelayVector::scalar(1)) {
        Err(e) => println!("delay 1 rejected: {e}"),
        Ok(_) => unreachable!(),
    }
    Ok(())
}
