//! Fitting an exponential envelope to a simulated moment curve and
//! checking the curve against an analytic certificate.
//!
//! Run with `cargo run --release --example fit_decay`.

use mjds::{build_sat_system, certify_sat, emss_check, fit_decay, simulate_ensemble};
use mjds::{CParam, History, InitialMode, SatSystemSpec};

fn main() -> mjds::Result<()> {
    let spec = SatSystemSpec::new(1.2, 0.95, 0.01).with_c(CParam::Value(5.2));
    let sys = build_sat_system(&spec)?;
    let xi0 = History::constant(2, &[1.0]);
    let curve = simulate_ensemble(&sys, &xi0, InitialMode::Uniform, 60, 1000, 7)?.moment_curve();

    let fit = fit_decay(&curve, None)?;
    println!(
        "fit on k in [{}, {}]: M_hat = {:.4e}, zeta_hat = {:.4}, r^2 = {:.4}",
        fit.window[0], fit.window[1], fit.m_hat, fit.zeta_hat, fit.r_squared
    );

    let report = certify_sat(&spec)?;
    if let Some(cert) = report.certificate() {
        let check = emss_check(&curve, cert.m, cert.zeta, curve.xi0_sup_norm)?;
        println!(
            "certificate M = {:.4e}, zeta = {:.8}: envelope holds = {}",
            cert.m, cert.zeta, check.passed
        );
    }
    Ok(())
}
