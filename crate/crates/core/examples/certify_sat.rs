//! Certificate chains for the saturation system at a few parameter points,
//! including one where the closed-form conditions cannot be met.
//!
//! Run with `cargo run --example certify_sat`.

use mjds::sat_example::CertificateVerdict;
use mjds::{certify_sat, CParam, SatSystemSpec};

fn main() -> mjds::Result<()> {
    let specs = [
        SatSystemSpec::new(1.0, 0.97, 0.05),
        SatSystemSpec::new(1.2, 0.95, 0.01).with_c(CParam::Value(5.2)),
        SatSystemSpec::new(1.2, 0.95, 0.01),
    ];
    for spec in &specs {
        let r = certify_sat(spec)?;
        println!(
            "gamma = {}, p = {}, q = {}, c = {}",
            spec.gamma, spec.p, spec.q, spec.c
        );
        println!(
            "  ratio interval ({:.4}, {:.4})",
            r.region.l_b, r.region.u_b
        );
        match (&r.verdict, &r.chain) {
            (CertificateVerdict::Certified, Some(chain)) => {
                let w = r.omegas.unwrap();
                println!("  omega1 = {:.4e}, omega2 = {:.4e}", w.omega1, w.omega2);
                println!(
                    "  alphas ({:.4e}, {:.4e}, {:.4e}) -> betas ({:.4e}, {:.4e}, {:.4e})",
                    chain.alpha1, chain.alpha2, chain.alpha3, chain.beta1, chain.beta2, chain.beta3
                );
                println!(
                    "  M = {:.4e}, zeta = {:.10}",
                    chain.certificate.m, chain.certificate.zeta
                );
            }
            _ => println!("  no certificate: {}", r.caveat),
        }
        if r.c_outside_stated_range {
            println!("  note: c > e");
        }
    }
    Ok(())
}
