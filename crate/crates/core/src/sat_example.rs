//! The scalar saturation system `x(k+1) = sat(x(k)) − γ sat(x(k − d(k)))`
//! with `d(k) ∈ {0, 2}` switching on a two-state chain, and end-to-end
//! certificate construction for it.
//!
//! Mode 1 is delay 0 and mode 2 is delay 2, so `p` is the probability of
//! staying at delay 0 and `q` of staying at delay 2.

use std::f64::consts::E;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::history::{DelayModel, DelayVector};
use crate::jump_system::JumpSystem;
use crate::lyapunov::{
    certificate_chain, check_theorem1, omega_bounds, region_cell, sat_candidate, CertificateChain,
    ConditionReport, HistorySampler, Margins, OmegaBounds, RegionCell, Verdict,
};
use crate::markov::{DelayBijection, MarkovDelayChain, Tpm};

/// `min{1, max{x, −1}}`.
pub fn sat(x: f64) -> f64 {
    x.clamp(-1.0, 1.0)
}

/// The range of `γ` accepted for the built-in system.
pub const GAMMA_RANGE: (f64, f64) = (1.0, 1.2);

pub fn check_gamma(gamma: f64) -> Result<()> {
    if !(GAMMA_RANGE.0..=GAMMA_RANGE.1).contains(&gamma) {
        return Err(Error::param("gamma", gamma, "must lie in [1, 1.2]"));
    }
    Ok(())
}

/// The saturation model with an explicit max delay and alphabet (`r = 1`).
pub fn sat_model_with(gamma: f64, delta: usize, alphabet: Vec<DelayVector>) -> Result<DelayModel> {
    check_gamma(gamma)?;
    let f = move |args: &[&[f64]], out: &mut [f64]| {
        out[0] = sat(args[0][0]) - gamma * sat(args[1][0]);
    };
    DelayModel::new("sat", 1, 1, delta, Arc::new(f), alphabet)
}

/// The saturation model with `Δ = 2` and `D = {0, 2}` in that order.
pub fn sat_model(gamma: f64) -> Result<DelayModel> {
    sat_model_with(
        gamma,
        2,
        vec![DelayVector::scalar(0), DelayVector::scalar(2)],
    )
}

/// Candidate parameter `c`; `"e"` in JSON means Euler's number.
#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub enum CParam {
    #[default]
    E,
    Value(f64),
}

impl CParam {
    pub fn value(self) -> f64 {
        match self {
            CParam::E => E,
            CParam::Value(v) => v,
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        if s.trim() == "e" {
            return Ok(CParam::E);
        }
        s.trim()
            .parse::<f64>()
            .map(CParam::Value)
            .map_err(|_| Error::config("c", format!("expected \"e\" or a number, got `{s}`")))
    }
}

impl fmt::Display for CParam {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CParam::E => f.write_str("e"),
            CParam::Value(v) => write!(f, "{v}"),
        }
    }
}

impl Serialize for CParam {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            CParam::E => s.serialize_str("e"),
            CParam::Value(v) => s.serialize_f64(*v),
        }
    }
}

impl<'de> Deserialize<'de> for CParam {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Str(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(v) => Ok(CParam::Value(v)),
            Raw::Str(s) if s == "e" => Ok(CParam::E),
            Raw::Str(s) => Err(serde::de::Error::custom(format!(
                "c must be \"e\" or a number, got \"{s}\""
            ))),
        }
    }
}

/// Parameters of the saturation jump system and its candidate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SatSystemSpec {
    pub gamma: f64,
    pub p: f64,
    pub q: f64,
    #[serde(default)]
    pub c: CParam,
    /// Overrides the witness `λ₂/λ₁`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda_ratio: Option<f64>,
}

impl SatSystemSpec {
    pub fn new(gamma: f64, p: f64, q: f64) -> Self {
        Self {
            gamma,
            p,
            q,
            c: CParam::E,
            lambda_ratio: None,
        }
    }

    pub fn with_c(mut self, c: CParam) -> Self {
        self.c = c;
        self
    }

    pub fn with_lambda_ratio(mut self, ratio: f64) -> Self {
        self.lambda_ratio = Some(ratio);
        self
    }

    pub fn validate(&self) -> Result<()> {
        check_gamma(self.gamma)?;
        for (name, v) in [("p", self.p), ("q", self.q)] {
            if !(v > 0.0 && v < 1.0) {
                return Err(Error::param(name, v, "must lie in (0, 1)"));
            }
        }
        let c = self.c.value();
        if !(c > 1.0) || !c.is_finite() {
            return Err(Error::param("c", c, "must be finite and > 1"));
        }
        if let Some(r) = self.lambda_ratio {
            if !(r > 0.0) || !r.is_finite() {
                return Err(Error::param(
                    "lambda_ratio",
                    r,
                    "must be positive and finite",
                ));
            }
        }
        Ok(())
    }

    /// `c > e` lies outside the range the candidate was stated for.
    pub fn c_outside_stated_range(&self) -> bool {
        self.c.value() > E
    }
}

/// Builds the jump system with TPM `[[p, 1−p], [1−q, q]]`.
pub fn build_sat_system(spec: &SatSystemSpec) -> Result<JumpSystem> {
    spec.validate()?;
    let model = sat_model(spec.gamma)?;
    let chain = MarkovDelayChain::new(
        Tpm::two_state(spec.p, spec.q)?,
        DelayBijection::new(model.alphabet().to_vec())?,
    )?;
    JumpSystem::new(model, chain)
}

/// Where `α₃` came from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Alpha3Provenance {
    /// `½ min{ω₁, ω₂}` from the closed-form bounds.
    Analytic,
    /// Declared by the caller and corroborated by sampling.
    Declared,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum WitnessSource {
    /// Geometric mean of `(L_B, U_B)`.
    RegionGeometricMean,
    Override,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CertificateVerdict {
    Certified,
    NoCertificate,
}

/// Summary of a sampled condition check.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SampledCheck {
    pub checked_samples: usize,
    pub violation_count: usize,
    pub verdict: Verdict,
    pub margins: Margins,
    pub radius: f64,
    pub seed: u64,
    pub note: String,
}

impl SampledCheck {
    fn from_report(r: &ConditionReport, radius: f64, seed: u64) -> Self {
        Self {
            checked_samples: r.checked_samples,
            violation_count: r.violation_count,
            verdict: r.verdict,
            margins: r.margins.clone(),
            radius,
            seed,
            note: r.note.clone(),
        }
    }
}

pub const SUFFICIENCY_CAVEAT: &str = "the Lyapunov conditions are sufficient, not necessary: \
     a missing certificate does not mean the system is unstable in mean square";

/// Outcome of certifying a [`SatSystemSpec`].
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SatCertificateReport {
    pub spec: SatSystemSpec,
    pub c_value: f64,
    /// Set when `c > e`.
    pub c_outside_stated_range: bool,
    pub region: RegionCell,
    pub witness_source: WitnessSource,
    pub lambda1: f64,
    pub lambda2: f64,
    pub omegas: Option<OmegaBounds>,
    pub alpha3_provenance: Alpha3Provenance,
    pub sampled_check: Option<SampledCheck>,
    pub chain: Option<CertificateChain>,
    pub verdict: CertificateVerdict,
    pub caveat: String,
}

impl SatCertificateReport {
    pub fn certificate(&self) -> Option<&crate::lyapunov::DecayCertificate> {
        self.chain.as_ref().map(|c| &c.certificate)
    }
}

fn witness(spec: &SatSystemSpec, region: &RegionCell) -> (WitnessSource, Option<f64>) {
    match spec.lambda_ratio {
        Some(r) => (WitnessSource::Override, Some(r)),
        None if region.feasible => (
            WitnessSource::RegionGeometricMean,
            Some(region.lambda_ratio),
        ),
        None => (WitnessSource::RegionGeometricMean, None),
    }
}

fn base_report(spec: &SatSystemSpec) -> Result<(SatCertificateReport, Option<f64>)> {
    spec.validate()?;
    let c = spec.c.value();
    let region = region_cell(spec.gamma, c, spec.p, spec.q);
    let (source, ratio) = witness(spec, &region);
    let omegas = match ratio {
        Some(r) => Some(omega_bounds(spec.p, spec.q, 1.0, r, spec.gamma, c)?),
        None => None,
    };
    let report = SatCertificateReport {
        spec: spec.clone(),
        c_value: c,
        c_outside_stated_range: spec.c_outside_stated_range(),
        region,
        witness_source: source,
        lambda1: 1.0,
        lambda2: ratio.unwrap_or(f64::NAN),
        omegas,
        alpha3_provenance: Alpha3Provenance::Analytic,
        sampled_check: None,
        chain: None,
        verdict: CertificateVerdict::NoCertificate,
        caveat: SUFFICIENCY_CAVEAT.to_string(),
    };
    Ok((report, ratio))
}

/// Closed-form certification: region membership at `(p, q)`, the witness
/// candidate, `α₃ = ½ min{ω₁, ω₂}`, then the lift and decay certificate.
pub fn certify_sat(spec: &SatSystemSpec) -> Result<SatCertificateReport> {
    let (mut report, ratio) = base_report(spec)?;
    let (Some(ratio), Some(w)) = (ratio, report.omegas) else {
        return Ok(report);
    };
    if !(w.omega1 > 0.0 && w.omega2 > 0.0) {
        return Ok(report);
    }
    let v = sat_candidate(1.0, ratio, spec.gamma, spec.c.value())?;
    report.chain = Some(certificate_chain(v.alpha1(), v.alpha2(), w.alpha3, 2)?);
    report.verdict = CertificateVerdict::Certified;
    Ok(report)
}

/// Options for [`certify_sat_sampled`].
#[derive(Clone, Debug)]
pub struct SampledOptions {
    pub alpha3: f64,
    pub samples: usize,
    pub radius: f64,
    pub seed: u64,
}

/// Certification with a caller-declared `α₃`, corroborated by sampling
/// the conditions on histories of norm at most `radius`. Without a region
/// witness a `lambda_ratio` override is required.
pub fn certify_sat_sampled(
    spec: &SatSystemSpec,
    opts: &SampledOptions,
) -> Result<SatCertificateReport> {
    if !(opts.alpha3 > 0.0) {
        return Err(Error::param("alpha3", opts.alpha3, "must be positive"));
    }
    let (mut report, ratio) = base_report(spec)?;
    report.alpha3_provenance = Alpha3Provenance::Declared;
    let Some(ratio) = ratio else {
        return Ok(report);
    };
    let sys = build_sat_system(spec)?;
    let v = sat_candidate(1.0, ratio, spec.gamma, spec.c.value())?;
    let sampler = HistorySampler::new(2, 1, opts.radius, opts.seed)?;
    let check = check_theorem1(&v, &sys, opts.alpha3, sampler, opts.samples)?;
    report.sampled_check = Some(SampledCheck::from_report(&check, opts.radius, opts.seed));
    if check.passed() {
        report.chain = Some(certificate_chain(v.alpha1(), v.alpha2(), opts.alpha3, 2)?);
        report.verdict = CertificateVerdict::Certified;
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::markov::Mode;

    #[test]
    fn sat_values() {
        assert_eq!(sat(2.0), 1.0);
        assert_eq!(sat(-3.0), -1.0);
        assert_eq!(sat(0.5), 0.5);
    }

    #[test]
    fn reference_system_layout() {
        let sys = build_sat_system(&SatSystemSpec::new(1.2, 0.95, 0.01)).unwrap();
        let h = sys.chain().bijection();
        assert_eq!(h.delay_of(Mode::new(1)).unwrap(), &DelayVector::scalar(0));
        assert_eq!(h.delay_of(Mode::new(2)).unwrap(), &DelayVector::scalar(2));
        let tpm = sys.chain().tpm();
        assert_eq!(tpm.row(0), &[0.95, 1.0 - 0.95]);
        assert_eq!(tpm.row(1), &[1.0 - 0.01, 0.01]);
        assert_eq!(sys.model().delta(), 2);
    }

    #[test]
    fn spec_validation() {
        assert!(build_sat_system(&SatSystemSpec::new(1.3, 0.5, 0.5)).is_err());
        assert!(build_sat_system(&SatSystemSpec::new(1.0, 1.0, 0.5)).is_err());
        assert!(build_sat_system(&SatSystemSpec::new(1.0, 0.5, 0.0)).is_err());
        assert!(
            build_sat_system(&SatSystemSpec::new(1.0, 0.5, 0.5).with_c(CParam::Value(1.0)))
                .is_err()
        );
    }

    #[test]
    fn c_param_json() {
        let spec: SatSystemSpec =
            serde_json::from_str(r#"{ "gamma": 1.2, "p": 0.95, "q": 0.01, "c": "e" }"#).unwrap();
        assert_eq!(spec.c.value(), E);
        let spec: SatSystemSpec =
            serde_json::from_str(r#"{ "gamma": 1.2, "p": 0.95, "q": 0.01, "c": 5.2 }"#).unwrap();
        assert_eq!(spec.c, CParam::Value(5.2));
        assert!(serde_json::from_str::<SatSystemSpec>(
            r#"{ "gamma": 1, "p": 0.5, "q": 0.5, "c": "pi" }"#
        )
        .is_err());
        assert_eq!(serde_json::to_string(&CParam::E).unwrap(), "\"e\"");
    }

    #[test]
    fn certify_reference_point_with_c_5_2() {
        let spec = SatSystemSpec::new(1.2, 0.95, 0.01).with_c(CParam::Value(5.2));
        let r = certify_sat(&spec).unwrap();
        assert_eq!(r.verdict, CertificateVerdict::Certified);
        assert!(r.c_outside_stated_range);
        let cert = r.certificate().unwrap();
        assert!(cert.zeta > 0.0 && cert.zeta < 1.0 && cert.m >= 1.0);
    }

    #[test]
    fn reference_point_with_c_e_has_no_certificate() {
        let r = certify_sat(&SatSystemSpec::new(1.2, 0.95, 0.01)).unwrap();
        assert_eq!(r.verdict, CertificateVerdict::NoCertificate);
        assert!(r.chain.is_none());
        assert!(r.caveat.contains("not necessary"));
    }

    #[test]
    fn above_q_cap_has_no_certificate() {
        let cap = 2.0 / (4.0 + E * E + 4.0 / E);
        let r = certify_sat(&SatSystemSpec::new(1.0, 0.99, cap + 0.01)).unwrap();
        assert_eq!(r.verdict, CertificateVerdict::NoCertificate);
        assert!(!r.region.feasible);
    }

    #[test]
    fn near_deterministic_stable_chain_is_wide() {
        let r = certify_sat(&SatSystemSpec::new(1.0, 0.999_999, 1e-6)).unwrap();
        assert_eq!(r.verdict, CertificateVerdict::Certified);
        assert!(r.region.u_b / r.region.l_b > 100.0);
    }

    #[test]
    fn ratio_override_outside_interval() {
        let base = SatSystemSpec::new(1.0, 0.97, 0.05);
        let cell = certify_sat(&base).unwrap().region;
        assert!(cell.feasible);
        for r in [cell.l_b * 0.5, cell.u_b * 2.0] {
            let rep = certify_sat(&base.clone().with_lambda_ratio(r)).unwrap();
            let w = rep.omegas.unwrap();
            assert!(w.omega1.min(w.omega2) <= 0.0);
            assert_eq!(rep.verdict, CertificateVerdict::NoCertificate);
            assert_eq!(rep.witness_source, WitnessSource::Override);
        }
    }

    #[test]
    fn certify_is_deterministic() {
        let spec = SatSystemSpec::new(1.0, 0.97, 0.05);
        assert_eq!(certify_sat(&spec).unwrap(), certify_sat(&spec).unwrap());
    }

    #[test]
    fn sampled_path() {
        let spec = SatSystemSpec::new(1.0, 0.97, 0.05);
        let analytic = certify_sat(&spec).unwrap();
        let alpha3 = analytic.omegas.unwrap().alpha3;
        let opts = SampledOptions {
            alpha3,
            samples: 2000,
            radius: 10.0,
            seed: 1,
        };
        let r = certify_sat_sampled(&spec, &opts).unwrap();
        assert_eq!(r.alpha3_provenance, Alpha3Provenance::Declared);
        assert_eq!(r.verdict, CertificateVerdict::Certified);
        assert_eq!(r.sampled_check.as_ref().unwrap().violation_count, 0);

        let greedy = SampledOptions {
            alpha3: 100.0,
            ..opts
        };
        let r = certify_sat_sampled(&spec, &greedy).unwrap();
        assert_eq!(r.verdict, CertificateVerdict::NoCertificate);
    }
}
