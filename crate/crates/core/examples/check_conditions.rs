//! Sampled falsification of the Lyapunov conditions for the saturation
//! candidate, the lifted functional W, and the resulting decay certificate.
//!
//! Run with `cargo run --release --example check_conditions`.

use mjds::lyapunov::{omega_bounds, region_cell, sat_candidate};
use mjds::{build_sat_system, certificate_chain, check_lemma1, check_theorem1, lift_to_w};
use mjds::{HistorySampler, SatSystemSpec};

fn main() -> mjds::Result<()> {
    let (gamma, c, p, q) = (1.0, std::f64::consts::E, 0.97, 0.05);
    let sys = build_sat_system(&SatSystemSpec::new(gamma, p, q))?;
    let cell = region_cell(gamma, c, p, q);
    let v = sat_candidate(1.0, cell.lambda_ratio, gamma, c)?;
    let alpha3 = omega_bounds(p, q, 1.0, cell.lambda_ratio, gamma, c)?.alpha3;

    let report = check_theorem1(
        &v,
        &sys,
        alpha3,
        HistorySampler::new(2, 1, 10.0, 3)?,
        10_000,
    )?;
    println!(
        "V: {:?} after {} samples",
        report.verdict, report.checked_samples
    );

    let greedy = check_theorem1(
        &v,
        &sys,
        10.0 * alpha3,
        HistorySampler::new(2, 1, 10.0, 3)?,
        10_000,
    )?;
    println!(
        "V with 10 alpha3: {:?}, {} violations",
        greedy.verdict, greedy.violation_count
    );
    if let Some(first) = greedy.violations.first() {
        println!("   first at {:?}, mode {}", first.history, first.mode);
    }

    let w = lift_to_w(&v, alpha3, 2)?;
    let lemma = check_lemma1(&w, &sys, HistorySampler::new(2, 1, 10.0, 4)?, 10_000)?;
    println!(
        "W: {:?} (beta = {:.4e}, {:.4e}, {:.4e})",
        lemma.verdict, w.beta1, w.beta2, w.beta3
    );

    let chain = certificate_chain(v.alpha1(), v.alpha2(), alpha3, 2)?;
    println!(
        "M = {:.4e}, zeta = {:.8}",
        chain.certificate.m, chain.certificate.zeta
    );
    Ok(())
}
