//! Second-moment curves: checking them against an exponential envelope and
//! fitting an empirical decay rate.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Values at or below this are excluded from the log-linear fit.
pub const FIT_FLOOR: f64 = 1e-300;

/// `E‖x(k)‖²` estimates for `k = 0..=K`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MomentCurve {
    pub values: Vec<f64>,
    pub ci_halfwidths: Vec<f64>,
    pub n_runs: usize,
    pub seed: u64,
    /// `‖ξ₀‖∞` of the initial history.
    pub xi0_sup_norm: f64,
}

impl MomentCurve {
    /// A noiseless curve, e.g. from a closed form.
    pub fn exact(values: Vec<f64>, xi0_sup_norm: f64) -> Self {
        let n = values.len();
        Self {
            values,
            ci_halfwidths: vec![0.0; n],
            n_runs: 1,
            seed: 0,
            xi0_sup_norm,
        }
    }

    pub fn horizon(&self) -> usize {
        self.values.len().saturating_sub(1)
    }

    fn validate(&self) -> Result<()> {
        if self.values.is_empty() {
            return Err(Error::InvalidModel("moment curve is empty".into()));
        }
        if self.ci_halfwidths.len() != self.values.len() {
            return Err(Error::DimensionMismatch {
                what: "confidence half-widths",
                index: 0,
                expected: self.values.len(),
                found: self.ci_halfwidths.len(),
            });
        }
        for (k, (&v, &ci)) in self.values.iter().zip(&self.ci_halfwidths).enumerate() {
            if !v.is_finite() || v < 0.0 || !ci.is_finite() || ci < 0.0 {
                return Err(Error::NumericFault {
                    context: format!("moment curve entry {k} is ({v}, {ci})"),
                });
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EmssViolation {
    pub k: usize,
    pub value: f64,
    pub bound: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EmssCheck {
    pub passed: bool,
    #[serde(rename = "M")]
    pub m: f64,
    pub zeta: f64,
    pub xi0_sup_norm: f64,
    pub first_violation: Option<EmssViolation>,
}

/// Checks `values[k] ≤ M ζ^k ‖ξ₀‖∞² + 3·ci[k]` for every `k`.
pub fn emss_check(curve: &MomentCurve, m: f64, zeta: f64, xi0_sup_norm: f64) -> Result<EmssCheck> {
    curve.validate()?;
    if !(m > 0.0) || !m.is_finite() {
        return Err(Error::param("M", m, "must be positive and finite"));
    }
    if !(zeta > 0.0 && zeta <= 1.0) {
        return Err(Error::param("zeta", zeta, "must lie in (0, 1]"));
    }
    if !(xi0_sup_norm >= 0.0) || !xi0_sup_norm.is_finite() {
        return Err(Error::param(
            "xi0_sup_norm",
            xi0_sup_norm,
            "must be finite and nonnegative",
        ));
    }
    let scale = m * xi0_sup_norm * xi0_sup_norm;
    let first_violation = curve
        .values
        .iter()
        .zip(&curve.ci_halfwidths)
        .enumerate()
        .find_map(|(k, (&value, &ci))| {
            let bound = scale * zeta.powi(k as i32) + 3.0 * ci;
            (value > bound).then_some(EmssViolation { k, value, bound })
        });
    Ok(EmssCheck {
        passed: first_violation.is_none(),
        m,
        zeta,
        xi0_sup_norm,
        first_violation,
    })
}

/// Least-squares fit of `log values[k] ≈ log(M̂ ‖ξ₀‖∞²) + k log ζ̂`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DecayFit {
    #[serde(rename = "M_hat")]
    pub m_hat: f64,
    pub zeta_hat: f64,
    /// Inclusive `[k₀, K]`.
    pub window: [usize; 2],
    pub r_squared: f64,
}

/// Default burn-in `⌈K/5⌉`.
pub fn default_burn_in(horizon: usize) -> usize {
    horizon.div_ceil(5)
}

/// Fits on `k ∈ [k₀, K]`, skipping values at or below [`FIT_FLOOR`].
pub fn fit_decay(curve: &MomentCurve, burn_in: Option<usize>) -> Result<DecayFit> {
    curve.validate()?;
    let horizon = curve.horizon();
    let k0 = burn_in.unwrap_or_else(|| default_burn_in(horizon));
    if k0 >= horizon {
        return Err(Error::config(
            "burn_in",
            format!("burn-in {k0} leaves fewer than two points on horizon {horizon}"),
        ));
    }
    let xi = curve.xi0_sup_norm;
    if !(xi > 0.0) || !xi.is_finite() {
        return Err(Error::param(
            "xi0_sup_norm",
            xi,
            "must be positive to normalise M_hat",
        ));
    }

    let pts: Vec<(f64, f64)> = (k0..=horizon)
        .filter(|&k| curve.values[k] > FIT_FLOOR)
        .map(|k| (k as f64, curve.values[k].ln()))
        .collect();
    if pts.len() < 2 {
        let k = (k0..=horizon)
            .find(|&k| curve.values[k] <= FIT_FLOOR)
            .unwrap_or(k0);
        return Err(Error::DecayedBelowFloor { k });
    }

    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = pts.iter().map(|p| (p.1 - my).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = pts
        .iter()
        .map(|p| (p.1 - intercept - slope * p.0).powi(2))
        .sum();
    let r_squared = if syy == 0.0 { 1.0 } else { 1.0 - ss_res / syy };

    let fit = DecayFit {
        m_hat: intercept.exp() / (xi * xi),
        zeta_hat: slope.exp(),
        window: [k0, horizon],
        r_squared,
    };
    if !fit.m_hat.is_finite() || !fit.zeta_hat.is_finite() || !fit.r_squared.is_finite() {
        return Err(Error::NumericFault {
            context: format!("decay fit produced {fit:?}"),
        });
    }
    Ok(fit)
}
