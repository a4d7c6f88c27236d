//! Single-user closed forms: EDoF, refined weighted-mode (WIM), i.i.d., and
//! block-correlation (BCM) outage; high-SNR asymptotes; required-SNR
//! inversion; and the EDoF ergodic capacity (series and quadrature).
//!
//! Arguments are linear scale. `x` is always the normalized threshold
//! `γ_th / γ̄`.

use std::f64::consts::LN_2;

use log::info;

use crate::correlation::BranchWeights;
use crate::error::{domain, Error, Result};
use crate::specfun::{exp_scaled_e1, stable_alternating_binomial_sum};

/// Above this branch count the capacity series is abandoned for quadrature.
pub const SERIES_MAX_KSTAR: u32 = 20;

/// Absolute tolerance of [`capacity_quadrature`].
pub const QUADRATURE_TOLERANCE: f64 = 1e-9;

/// Intra-block correlation used for the BCM comparison at `N = 40, W = 3`.
/// It is a fitted reproduction constant, not derived from the geometry.
pub const BCM_FITTED_RHO: f64 = 0.38;

/// An operating point: average SNR and threshold, both linear.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SnrPoint {
    gamma_bar: f64,
    gamma_th: f64,
}

impl SnrPoint {
    pub fn new(gamma_bar: f64, gamma_th: f64) -> Result<Self> {
        if !(gamma_bar.is_finite() && gamma_bar > 0.0) || !(gamma_th.is_finite() && gamma_th > 0.0) {
            return Err(domain(format!(
                "SNR and threshold must be finite and > 0 (got {gamma_bar}, {gamma_th})"
            )));
        }
        Ok(Self { gamma_bar, gamma_th })
    }

    pub fn from_db(gamma_bar_db: f64, gamma_th_db: f64) -> Result<Self> {
        Self::new(crate::db_to_linear(gamma_bar_db), crate::db_to_linear(gamma_th_db))
    }

    pub fn gamma_bar(&self) -> f64 {
        self.gamma_bar
    }

    pub fn gamma_th(&self) -> f64 {
        self.gamma_th
    }

    /// Normalized threshold `γ_th / γ̄`.
    pub fn x(&self) -> f64 {
        self.gamma_th / self.gamma_bar
    }
}

/// Block-correlation model: `D` independent blocks of `B` equi-correlated ports.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BcmParams {
    pub blocks: u32,
    pub block_size: u32,
    pub rho: f64,
}

impl BcmParams {
    pub fn new(blocks: u32, block_size: u32, rho: f64) -> Result<Self> {
        if blocks == 0 || block_size == 0 {
            return Err(domain("BCM needs at least one block of at least one port"));
        }
        if !(0.0..1.0).contains(&rho) {
            return Err(domain(format!("BCM correlation must lie in [0, 1), got {rho}")));
        }
        Ok(Self { blocks, block_size, rho })
    }

    /// `D = ⌈K*/2⌉` blocks, with the block size rounded so `D·B` covers `ports`.
    pub fn with_default_blocks(ports: usize, kstar: u32, rho: f64) -> Result<Self> {
        let blocks = kstar.div_ceil(2).max(1);
        let block_size = (ports as u32).div_ceil(blocks);
        Self::new(blocks, block_size, rho)
    }

    pub fn ports(&self) -> u32 {
        self.blocks * self.block_size
    }
}

fn check_x(x: f64) -> Result<()> {
    if x.is_nan() || x <= 0.0 {
        Err(domain(format!("normalized threshold must be > 0, got {x}")))
    } else {
        Ok(())
    }
}

/// `1 − e^{−x}` without cancellation for small `x`.
fn exp_cdf(x: f64) -> f64 {
    -(-x).exp_m1()
}

/// `(1 − e^{−x})^{K*}`.
pub fn outage_edof(x: f64, kstar: u32) -> Result<f64> {
    check_x(x)?;
    if kstar == 0 {
        return Err(domain("K* must be >= 1"));
    }
    Ok(exp_cdf(x).powi(kstar as i32))
}

/// `∏_k (1 − e^{−x/β_k})`.
pub fn outage_wim(x: f64, weights: &BranchWeights) -> Result<f64> {
    check_x(x)?;
    Ok(weights.as_slice().iter().map(|b| exp_cdf(x / b)).product())
}

/// `(1 − e^{−x})^N`: all ports independent.
pub fn outage_iid(x: f64, ports: u32) -> Result<f64> {
    outage_edof(x, ports)
}

/// `1 − e^{−x}`: one fixed port.
pub fn outage_single(x: f64) -> Result<f64> {
    outage_edof(x, 1)
}

/// Regularized lower incomplete gamma `P(B, y) = 1 − e^{−y} Σ_{ℓ<B} y^ℓ/ℓ!`
/// for integer `B`.
fn lower_gamma_regularized(b: u32, y: f64) -> f64 {
    // Σ_{ℓ<B} e^{−y} y^ℓ/ℓ! by forward recurrence
    let mut term = (-y).exp();
    let mut head = 0.0;
    for l in 0..b {
        if l > 0 {
            term *= y / f64::from(l);
        }
        head += term;
    }
    if head < 0.5 {
        return 1.0 - head;
    }
    // 1 − head would cancel; sum the complementary tail Σ_{ℓ≥B} instead
    let mut tail = 0.0;
    let mut l = b;
    loop {
        term *= y / f64::from(l);
        tail += term;
        if term < 1e-17 * tail || term == 0.0 {
            break;
        }
        l += 1;
    }
    tail
}

/// `(1 − e^{−y} Σ_{ℓ=0}^{B−1} y^ℓ/ℓ!)^D` with `y = x/(1−ρ)`.
pub fn outage_bcm(x: f64, p: &BcmParams) -> Result<f64> {
    check_x(x)?;
    if !(0.0..1.0).contains(&p.rho) {
        return Err(domain(format!("BCM correlation must lie in [0, 1), got {}", p.rho)));
    }
    let y = x / (1.0 - p.rho);
    Ok(lower_gamma_regularized(p.block_size, y).powi(p.blocks as i32))
}

/// Average SNR at which EDoF outage equals `target`:
/// `γ̄ = −γ_th / ln(1 − P₀^{1/K*})`.
pub fn required_snr(target: f64, gamma_th: f64, kstar: u32) -> Result<f64> {
    if !(target > 0.0 && target < 1.0) {
        return Err(domain(format!("target outage must lie in (0, 1), got {target}")));
    }
    if !(gamma_th.is_finite() && gamma_th > 0.0) {
        return Err(domain(format!("threshold must be > 0, got {gamma_th}")));
    }
    if kstar == 0 {
        return Err(domain("K* must be >= 1"));
    }
    let root = (target.ln() / f64::from(kstar)).exp();
    Ok(-gamma_th / (-root).ln_1p())
}

/// `x^{K*}`, or `x^{K*}/∏β_k` with weights.
pub fn asymptotic_outage(x: f64, kstar: u32, weights: Option<&BranchWeights>) -> Result<f64> {
    check_x(x)?;
    let power = x.powi(kstar as i32);
    Ok(match weights {
        Some(w) => power / w.product(),
        None => power,
    })
}

fn check_capacity_args(gamma_bar: f64, kstar: u32) -> Result<()> {
    if !(gamma_bar.is_finite() && gamma_bar > 0.0) {
        return Err(domain(format!("average SNR must be > 0, got {gamma_bar}")));
    }
    if kstar == 0 {
        return Err(domain("K* must be >= 1"));
    }
    Ok(())
}

/// `(K*/ln 2) Σ_{j<K*} C(K*−1, j) (−1)^j e^{(j+1)/γ̄} E₁((j+1)/γ̄) / (j+1)`.
///
/// Fails with [`Error::PrecisionLoss`] when the alternating sum is too
/// ill-conditioned, which happens for large `K*` at high SNR.
pub fn ergodic_capacity_series(gamma_bar: f64, kstar: u32) -> Result<f64> {
    check_capacity_args(gamma_bar, kstar)?;
    let mut failure = None;
    let sum = stable_alternating_binomial_sum(kstar - 1, |j| {
        let b = f64::from(j + 1);
        match exp_scaled_e1(b / gamma_bar) {
            Ok(v) => v / b,
            Err(e) => {
                failure.get_or_insert(e);
                f64::NAN
            }
        }
    });
    if let Some(e) = failure {
        return Err(e);
    }
    Ok(f64::from(kstar) / LN_2 * sum?.checked()?)
}

/// `∫₀^∞ log₂(1+γ̄x) K*(1−e^{−x})^{K*−1} e^{−x} dx` by adaptive Gauss–Kronrod.
pub fn capacity_quadrature(gamma_bar: f64, kstar: u32) -> Result<f64> {
    check_capacity_args(gamma_bar, kstar)?;
    let k = f64::from(kstar);
    let integrand = |x: f64| {
        if x == 0.0 {
            return 0.0;
        }
        let density = k * exp_cdf(x).powi(kstar as i32 - 1) * (-x).exp();
        (gamma_bar * x).ln_1p() / LN_2 * density
    };
    // x = t/(1−t) maps [0, 1) onto [0, ∞)
    let mapped = |t: f64| {
        if t >= 1.0 {
            return 0.0;
        }
        let s = 1.0 - t;
        integrand(t / s) / (s * s)
    };
    quadrature::integrate(mapped, 0.0, 1.0, QUADRATURE_TOLERANCE)
}

/// Capacity with the series for `K* ≤ 20` and quadrature beyond (or when the
/// series reports precision loss).
pub fn ergodic_capacity(gamma_bar: f64, kstar: u32) -> Result<f64> {
    if kstar <= SERIES_MAX_KSTAR {
        match ergodic_capacity_series(gamma_bar, kstar) {
            Err(Error::PrecisionLoss { condition, .. }) => {
                info!("capacity series ill-conditioned (condition {condition:e}); using quadrature");
            }
            other => return other,
        }
    } else {
        info!("K* = {kstar} exceeds {SERIES_MAX_KSTAR}; using quadrature for capacity");
    }
    capacity_quadrature(gamma_bar, kstar)
}

/// High-SNR capacity asymptote `log₂γ̄ + γ_EM/ln 2 + log₂ H_{K*}`.
pub fn capacity_high_snr_asymptote(gamma_bar: f64, kstar: u32) -> Result<f64> {
    check_capacity_args(gamma_bar, kstar)?;
    let h = crate::specfun::harmonic(kstar)?;
    Ok(gamma_bar.log2() + crate::specfun::EULER_GAMMA / LN_2 + h.log2())
}

mod quadrature {
    use crate::error::{Error, Result};

    const MAX_INTERVALS: usize = 2000;

    // 15-point Kronrod nodes/weights with the embedded 7-point Gauss rule.
    // Digits are kept as tabulated.
    #[allow(clippy::excessive_precision)]
    const XK: [f64; 8] = [
        0.991_455_371_120_812_639,
        0.949_107_912_342_758_525,
        0.864_864_423_359_769_073,
        0.741_531_185_599_394_440,
        0.586_087_235_467_691_130,
        0.405_845_151_377_397_167,
        0.207_784_955_007_898_468,
        0.0,
    ];
    #[allow(clippy::excessive_precision)]
    const WK: [f64; 8] = [
        0.022_935_322_010_529_225,
        0.063_092_092_629_978_553,
        0.104_790_010_322_250_184,
        0.140_653_259_715_525_919,
        0.169_004_726_639_267_903,
        0.190_350_578_064_785_410,
        0.204_432_940_075_298_892,
        0.209_482_141_084_727_828,
    ];
    #[allow(clippy::excessive_precision)]
    const WG: [f64; 4] = [
        0.129_484_966_168_869_693,
        0.279_705_391_489_276_668,
        0.381_830_050_505_118_945,
        0.417_959_183_673_469_388,
    ];

    struct Segment {
        a: f64,
        b: f64,
        value: f64,
        error: f64,
    }

    fn kronrod<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Segment {
        let center = 0.5 * (a + b);
        let half = 0.5 * (b - a);
        let fc = f(center);
        let mut kronrod = WK[7] * fc;
        let mut gauss = WG[3] * fc;
        for i in 0..7 {
            let dx = half * XK[i];
            let pair = f(center - dx) + f(center + dx);
            kronrod += WK[i] * pair;
            if i % 2 == 1 {
                gauss += WG[i / 2] * pair;
            }
        }
        Segment { a, b, value: kronrod * half, error: ((kronrod - gauss) * half).abs() }
    }

    /// Globally adaptive bisection until the summed error estimate is below
    /// `tolerance`.
    pub(super) fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tolerance: f64) -> Result<f64> {
        let mut segments = vec![kronrod(&f, a, b)];
        loop {
            let total_error: f64 = segments.iter().map(|s| s.error).sum();
            if total_error <= tolerance {
                return Ok(segments.iter().map(|s| s.value).sum());
            }
            if segments.len() >= MAX_INTERVALS {
                return Err(Error::NoConvergence { what: "adaptive quadrature", residual: total_error });
            }
            let worst = segments
                .iter()
                .enumerate()
                .max_by(|x, y| x.1.error.total_cmp(&y.1.error))
                .map(|(i, _)| i)
                .unwrap_or(0);
            let s = segments.swap_remove(worst);
            let mid = 0.5 * (s.a + s.b);
            segments.push(kronrod(&f, s.a, mid));
            segments.push(kronrod(&f, mid, s.b));
        }
    }

}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::specfun::{exp_integral_e1, harmonic};

    #[test]
    fn edof_values() {
        assert!((outage_edof(1.0, 7).unwrap() - 0.0405).abs() < 3e-4);
        assert!((outage_edof(1.0, 7).unwrap() - 0.040_327_324_289_543_8).abs() < 1e-16);
        assert!((outage_edof(1.0, 3).unwrap() - 0.25258).abs() < 1e-5);
        for x in [1e-3, 0.1, 1.0, 4.0] {
            assert_eq!(outage_edof(x, 1).unwrap(), exp_cdf(x));
            assert!((outage_single(x).unwrap() - (1.0 - (-x).exp())).abs() < 1e-15);
        }
        assert!(outage_edof(0.0, 3).is_err());
        assert!(outage_edof(1.0, 0).is_err());
    }

    #[test]
    fn wim_values() {
        let ones = BranchWeights::uniform(7);
        for x in [1e-3, 0.3, 1.0, 3.0] {
            let a = outage_wim(x, &ones).unwrap();
            let b = outage_edof(x, 7).unwrap();
            assert!((a - b).abs() <= 1e-15 * b);
        }
        let w = BranchWeights::new(vec![2.0, 0.5]).unwrap();
        assert!(w.sum() > 2.0);
        let v = outage_wim(1.0, &w).unwrap();
        assert!((v - (1.0 - (-0.5f64).exp()) * (1.0 - (-2.0f64).exp())).abs() < 1e-15);
        assert!((v - 0.340_219).abs() < 1e-6);
        let v = outage_wim(1e-4, &BranchWeights::uniform(2)).unwrap();
        assert!(((v - 1e-8) / 1e-8).abs() <= 1e-3);
        assert!(BranchWeights::new(vec![1.0, 0.0]).is_err());
        assert!(BranchWeights::new(vec![1.0, -0.5]).is_err());
    }

    #[test]
    fn iid_values() {
        assert!((outage_iid(1.0, 20).unwrap() - 1.034e-4).abs() < 1e-6);
        assert_eq!(outage_iid(0.5, 1).unwrap(), outage_single(0.5).unwrap());
        for x in [0.1, 1.0, 2.0] {
            assert!(outage_iid(x, 20).unwrap() < outage_edof(x, 7).unwrap());
        }
    }

    #[test]
    fn bcm_values() {
        let p = BcmParams::new(5, 1, 0.0).unwrap();
        for x in [0.01, 0.5, 2.0] {
            let a = outage_bcm(x, &p).unwrap();
            let b = outage_iid(x, 5).unwrap();
            assert!((a - b).abs() <= 1e-14 * b);
        }
        let p = BcmParams::new(4, 10, BCM_FITTED_RHO).unwrap();
        assert!(outage_bcm(1.0, &p).unwrap() < outage_edof(1.0, 7).unwrap());
        assert!((outage_bcm(1e3, &p).unwrap() - 1.0).abs() < 1e-12);
        assert!(BcmParams::new(4, 10, 1.0).is_err());
        assert!(outage_bcm(1.0, &BcmParams { blocks: 1, block_size: 1, rho: 1.2 }).is_err());
    }

    #[test]
    fn bcm_tail_matches_poisson_sum() {
        // P(B, y) with B = 3: 1 − e^{−y}(1 + y + y²/2), and the small-y branch
        for y in [1e-3f64, 0.05, 0.7, 2.0, 6.0] {
            let direct = 1.0 - (-y).exp() * (1.0 + y + y * y / 2.0);
            let got = lower_gamma_regularized(3, y);
            let leading = y * y * y / 6.0 * (-y).exp();
            if y < 0.1 {
                assert!(((got - leading) / leading).abs() < 1.0 * y);
            } else {
                assert!(((got - direct) / direct).abs() < 1e-12);
            }
        }
        let p = BcmParams::new(4, 10, BCM_FITTED_RHO).unwrap();
        let at_0db = outage_bcm(1.0, &p).unwrap();
        assert!(at_0db > 0.0 && at_0db < 1e-15);
    }

    #[test]
    fn default_blocks() {
        let p = BcmParams::with_default_blocks(40, 7, 0.3).unwrap();
        assert_eq!(p.blocks, 4);
        assert_eq!(p.block_size, 10);
        assert_eq!(p.ports(), 40);
    }

    #[test]
    fn required_snr_inverts_edof() {
        for k in [1, 3, 7, 11, 49] {
            for p0 in [1e-6, 1e-3, 0.05, 0.5] {
                let g = required_snr(p0, 1.0, k).unwrap();
                let back = outage_edof(1.0 / g, k).unwrap();
                assert!(((back - p0) / p0).abs() <= 1e-10, "K*={k} P0={p0}: {back}");
            }
        }
        let g = required_snr(1.0 - (-1.0f64).exp(), 1.0, 1).unwrap();
        assert!((g - 1.0).abs() < 1e-12);
        let g = required_snr(1e-6, 1.0, 3).unwrap();
        assert!((g - (-1.0 / (0.99f64).ln())).abs() < 1e-9);
        assert!((g - 99.4992).abs() < 1e-4);
        // first-order approximation γ_th/P0^{1/K*} = 100 is 0.5% high
        assert!((100.0 - g) / g < 0.006);
        assert!(required_snr(0.0, 1.0, 3).is_err());
        assert!(required_snr(1.0, 1.0, 3).is_err());
    }

    #[test]
    fn asymptotes() {
        assert!((asymptotic_outage(0.01, 3, None).unwrap() - 1e-6).abs() < 1e-20);
        let ones = BranchWeights::uniform(3);
        assert_eq!(
            asymptotic_outage(0.01, 3, Some(&ones)).unwrap(),
            asymptotic_outage(0.01, 3, None).unwrap()
        );
        let ratio = outage_edof(1e-3, 7).unwrap() / asymptotic_outage(1e-3, 7, None).unwrap();
        assert!((0.995..=1.0).contains(&ratio), "ratio {ratio}");
        let w = BranchWeights::new(vec![1.5, 1.0, 0.5]).unwrap();
        let r = outage_wim(1e-5, &w).unwrap() / asymptotic_outage(1e-5, 3, Some(&w)).unwrap();
        assert!((r - 1.0).abs() < 1e-4);
    }

    #[test]
    fn single_branch_capacity_is_rayleigh() {
        for g in [0.1f64, 1.0, 10.0, 1e3] {
            let want = (1.0 / g).exp() * exp_integral_e1(1.0 / g).unwrap() / LN_2;
            let got = ergodic_capacity_series(g, 1).unwrap();
            assert!(((got - want) / want).abs() < 1e-12);
        }
        let q = capacity_quadrature(1.0, 1).unwrap();
        assert!((q - std::f64::consts::E * 0.219_383_934_395_520_27 / LN_2).abs() < 1e-8);
        assert!((q - 0.860_347).abs() < 1e-5);
    }

    #[test]
    fn series_matches_quadrature() {
        for k in 1..=11 {
            for g in [0.1, 1.0, 10.0, 100.0] {
                let s = ergodic_capacity_series(g, k).unwrap();
                let q = capacity_quadrature(g, k).unwrap();
                assert!(((s - q) / q).abs() <= 1e-6, "K*={k} γ̄={g}: {s} vs {q}");
            }
        }
    }

    #[test]
    fn capacity_monotone() {
        let mut prev_k = 0.0;
        for k in 1..=15 {
            let c = ergodic_capacity(10.0, k).unwrap();
            assert!(c > prev_k);
            prev_k = c;
        }
        let mut prev_g = 0.0;
        for i in 0..30 {
            let c = ergodic_capacity(crate::db_to_linear(-10.0 + i as f64 * 2.0), 7).unwrap();
            assert!(c > prev_g);
            prev_g = c;
        }
    }

    #[test]
    fn large_kstar_falls_back_to_quadrature() {
        let c = ergodic_capacity(100.0, 49).unwrap();
        let q = capacity_quadrature(100.0, 49).unwrap();
        assert_eq!(c, q);
        assert!(c > ergodic_capacity(100.0, 11).unwrap());
        assert!(matches!(ergodic_capacity_series(1e4, 49), Err(Error::PrecisionLoss { .. })));
    }

    #[test]
    fn diversity_slope_of_formula() {
        // least-squares slope over 21 log-spaced points; the residual
        // curvature of (1−e^{−x}) costs about 0.86e-3 per branch
        let grid: Vec<f64> = (0..=20).map(|i| 10f64.powf(-4.0 + 0.1 * i as f64)).collect();
        for k in [1, 3, 5, 7, 11] {
            let snr: Vec<f64> = grid.iter().map(|x| 1.0 / x).collect();
            let p: Vec<f64> = grid.iter().map(|&x| outage_edof(x, k).unwrap()).collect();
            let slope = crate::montecarlo::loglog_slope(&snr, &p).unwrap();
            let k = f64::from(k);
            assert!((slope - k).abs() <= 1e-3 * k, "K*={k}: slope {slope}");
        }
    }

    #[test]
    fn asymptote_uses_harmonic_number() {
        let a = capacity_high_snr_asymptote(1e4, 7).unwrap();
        let want = (1e4f64).log2() + 0.5772156649015329 / LN_2 + harmonic(7).unwrap().log2();
        assert!((a - want).abs() < 1e-12);
    }
}
