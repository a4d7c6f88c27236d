//! Multi-user FAMA outage under the EDoF model.
//!
//! The desired user's selected-port gain is the maximum of `K*` unit-mean
//! exponentials; each of the `M−1` interferers contributes an independent
//! unit-mean exponential at that port. Conditioning on the Gamma(M−1, 1)
//! aggregate interference and using its MGF gives
//!
//! ```text
//! P_out = Σ_{j=0}^{K*} C(K*, j) (−1)^j e^{−jγ_th/γ̄} / (1 + jγ_th)^{M−1}
//! ```

use crate::error::{domain, Error, Result};
use crate::specfun::stable_alternating_binomial_sum;

/// Probabilities within this distance outside `[0, 1]` are clamped; larger
/// excursions are numeric failures.
const BOUNDARY_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FamaConfig {
    users: u32,
    kstar: u32,
    gamma_th: f64,
}

impl FamaConfig {
    pub fn new(users: u32, kstar: u32, gamma_th: f64) -> Result<Self> {
        if users == 0 {
            return Err(domain("FAMA needs at least one user"));
        }
        if kstar == 0 {
            return Err(domain("K* must be >= 1"));
        }
        if !(gamma_th.is_finite() && gamma_th > 0.0) {
            return Err(domain(format!("threshold must be finite and > 0, got {gamma_th}")));
        }
        Ok(Self { users, kstar, gamma_th })
    }

    pub fn users(&self) -> u32 {
        self.users
    }

    pub fn kstar(&self) -> u32 {
        self.kstar
    }

    pub fn gamma_th(&self) -> f64 {
        self.gamma_th
    }
}

fn outage_sum(cfg: &FamaConfig, inverse_snr: f64) -> Result<f64> {
    let interferers = (cfg.users - 1) as i32;
    let sum = stable_alternating_binomial_sum(cfg.kstar, |j| {
        let j = f64::from(j);
        (-j * cfg.gamma_th * inverse_snr).exp() / (1.0 + j * cfg.gamma_th).powi(interferers)
    })?;
    let p = sum.checked()?;
    if !(-BOUNDARY_SLACK..=1.0 + BOUNDARY_SLACK).contains(&p) {
        return Err(Error::Numeric(format!("FAMA outage {p} is outside [0, 1]")));
    }
    Ok(p.clamp(0.0, 1.0))
}

/// Outage probability of one user in an `M`-user FAMA system.
pub fn fama_outage(cfg: &FamaConfig, gamma_bar: f64) -> Result<f64> {
    if !(gamma_bar.is_finite() && gamma_bar > 0.0) {
        return Err(domain(format!("average SNR must be finite and > 0, got {gamma_bar}")));
    }
    if cfg.users == 1 {
        // interference-free: the EDoF closed form itself, with no cancellation
        return crate::closedform::outage_edof(cfg.gamma_th / gamma_bar, cfg.kstar);
    }
    outage_sum(cfg, 1.0 / gamma_bar)
}

/// The interference-limited floor `lim_{γ̄→∞} P_out`.
pub fn fama_floor(cfg: &FamaConfig) -> Result<f64> {
    if cfg.users == 1 {
        return Ok(0.0);
    }
    outage_sum(cfg, 0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::closedform::outage_edof;
    use crate::specfun::binomial;

    #[test]
    fn single_user_is_edof() {
        for k in [1, 3, 7, 11] {
            for g in [0.1, 1.0, 10.0, 1e3] {
                let cfg = FamaConfig::new(1, k, 1.0).unwrap();
                assert_eq!(fama_outage(&cfg, g).unwrap(), outage_edof(1.0 / g, k).unwrap());
            }
            assert_eq!(fama_floor(&FamaConfig::new(1, k, 1.0).unwrap()).unwrap(), 0.0);
        }
    }

    #[test]
    fn single_user_sum_agrees_with_edof() {
        // the binomial expansion itself, at M = 1, reproduces (1 − e^{−x})^{K*}
        // up to cancellation of terms of size ~2^{K*}
        for k in [3, 7] {
            for g in [1.0, 10.0] {
                let cfg = FamaConfig::new(1, k, 1.0).unwrap();
                let s = outage_sum(&cfg, 1.0 / g).unwrap();
                let e = outage_edof(1.0 / g, k).unwrap();
                assert!((s - e).abs() < 1e-13, "k={k} g={g}: {s} vs {e}");
            }
        }
    }

    #[test]
    fn floors() {
        let f = |m| fama_floor(&FamaConfig::new(m, 7, 1.0).unwrap()).unwrap();
        assert!((f(2) - 0.125).abs() < 1e-12);
        assert!((f(3) - 761.0 / 2240.0).abs() < 1e-12);
        assert!((f(5) - 0.727_508_116_825_599_2).abs() < 1e-12);
    }

    #[test]
    fn two_user_structure() {
        let (k, th) = (7, 1.0);
        let cfg = FamaConfig::new(2, k, th).unwrap();
        for g in [1.0, 10.0, 100.0] {
            let x = th / g;
            let direct: f64 = (0..=k)
                .map(|j| {
                    let jf = f64::from(j);
                    let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
                    sign * binomial(k, j) * (-jf * x).exp() / (1.0 + jf * th)
                })
                .sum();
            assert!((fama_outage(&cfg, g).unwrap() - direct).abs() < 1e-13);
        }
    }

    #[test]
    fn monotone_and_above_floor() {
        for m in [2, 3, 5] {
            let cfg = FamaConfig::new(m, 7, 1.0).unwrap();
            let floor = fama_floor(&cfg).unwrap();
            let mut prev = 1.0;
            for i in 0..=50 {
                let p = fama_outage(&cfg, crate::db_to_linear(-10.0 + i as f64)).unwrap();
                assert!(p <= prev + 1e-15 && p >= floor - 1e-15);
                prev = p;
            }
        }
    }

    #[test]
    fn floor_orderings() {
        let f = |m, k| fama_floor(&FamaConfig::new(m, k, 1.0).unwrap()).unwrap();
        for k in [3, 5, 7, 11] {
            for m in 1..8 {
                assert!(f(m + 1, k) >= f(m, k));
            }
        }
        for m in 2..6 {
            for k in [3, 5, 7, 9] {
                assert!(f(m, k + 2) <= f(m, k));
            }
        }
    }

    #[test]
    fn config_validation() {
        assert!(FamaConfig::new(0, 7, 1.0).is_err());
        assert!(FamaConfig::new(2, 0, 1.0).is_err());
        assert!(FamaConfig::new(2, 7, 0.0).is_err());
        let cfg = FamaConfig::new(2, 7, 1.0).unwrap();
        assert!(fama_outage(&cfg, 0.0).is_err());
    }
}
