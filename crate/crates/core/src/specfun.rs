//! Special functions and compensated summation used by the closed forms.
//!
//! Everything here is self-contained: `J₀` for the Jakes kernel, `E₁` (and the
//! overflow-free `e^z·E₁(z)`) for the ergodic capacity series, harmonic
//! numbers, log-space binomial coefficients, and a Neumaier accumulator for
//! the alternating binomial sums that appear in the capacity and FAMA
//! expressions.

use std::f64::consts::{FRAC_PI_4, PI};
use std::ops::AddAssign;

use crate::error::{domain, Error, Result};

/// Euler–Mascheroni constant γ_EM.
pub const EULER_GAMMA: f64 = 0.5772156649015329;

/// Condition number `Σ|terms| / |sum|` above which an alternating sum is
/// flagged as having lost too many digits.
pub const PRECISION_LOSS_CONDITION: f64 = 1e12;

/// Below this argument `J₀` uses the ascending power series; above it, the
/// Hankel asymptotic expansion.
const J0_SERIES_LIMIT: f64 = 12.0;

/// Beyond this `E₁(z) < 1e-306` and is reported as zero.
const E1_UNDERFLOW: f64 = 700.0;

/// Bessel function of the first kind, order zero.
///
/// Absolute error is below `1e-9` on `[0, 200]`; `J₀` is even so negative
/// arguments are folded onto `|x|`.
pub fn bessel_j0(x: f64) -> Result<f64> {
    if !x.is_finite() {
        return Err(domain(format!("bessel_j0 requires a finite argument, got {x}")));
    }
    let x = x.abs();
    if x < J0_SERIES_LIMIT {
        Ok(j0_series(x))
    } else {
        Ok(j0_hankel(x))
    }
}

/// `Σ (−x²/4)^m / (m!)²`, summed until the terms have peaked and fallen below
/// double-precision resolution.
fn j0_series(x: f64) -> f64 {
    let q = -0.25 * x * x;
    let mut term = 1.0;
    let mut sum = StableSum::new();
    sum += term;
    let mut m = 1.0;
    loop {
        term *= q / (m * m);
        sum += term;
        // ratio test: |t_m / t_{m-1}| = x²/(4m²) < 1 once m > x/2
        if 2.0 * m > x && term.abs() < 1e-18 {
            break;
        }
        m += 1.0;
    }
    sum.value()
}

/// `J₀(x) ≈ √(2/(πx)) (P cos χ − Q sin χ)`, `χ = x − π/4`, with the asymptotic
/// series truncated at its smallest term.
fn j0_hankel(x: f64) -> f64 {
    // b_k = a_k(0) / x^k, a_k(0) = Π_{i≤k} (−(2i−1)²) / (k! 8^k)
    let mut p = 1.0;
    let mut q = 0.0;
    let mut b = 1.0_f64;
    let mut k = 1u32;
    loop {
        let odd = f64::from(2 * k - 1);
        let next = b * (-(odd * odd)) / (8.0 * f64::from(k) * x);
        if next.abs() >= b.abs() || next.abs() < 1e-17 {
            break;
        }
        b = next;
        // P takes even k with sign (−1)^{k/2}; Q takes odd k with sign (−1)^{(k−1)/2}
        match k % 4 {
            0 => p += b,
            1 => q += b,
            2 => p -= b,
            _ => q -= b,
        }
        k += 1;
    }
    let chi = x - FRAC_PI_4;
    (2.0 / (PI * x)).sqrt() * (p * chi.cos() - q * chi.sin())
}

/// Exponential integral `E₁(z) = ∫_z^∞ e^{−t}/t dt` for real `z > 0`.
///
/// Relative error is below `1e-10` on `(0, 700)`; larger arguments underflow
/// and return `0`.
pub fn exp_integral_e1(z: f64) -> Result<f64> {
    check_e1_arg(z)?;
    if z > E1_UNDERFLOW {
        Ok(0.0)
    } else if z <= 1.0 {
        Ok(e1_series(z))
    } else {
        Ok((-z).exp() * e1_scaled_continued_fraction(z))
    }
}

/// `e^z · E₁(z)` without forming `e^z`, so it stays finite for any `z > 0`.
pub fn exp_scaled_e1(z: f64) -> Result<f64> {
    check_e1_arg(z)?;
    if z <= 1.0 {
        Ok(z.exp() * e1_series(z))
    } else {
        Ok(e1_scaled_continued_fraction(z))
    }
}

fn check_e1_arg(z: f64) -> Result<()> {
    if z.is_nan() || z <= 0.0 {
        Err(domain(format!("E1 requires z > 0, got {z}")))
    } else {
        Ok(())
    }
}

/// `−γ − ln z + Σ_{m≥1} (−1)^{m+1} z^m / (m·m!)`, valid for `0 < z ≤ 1`.
fn e1_series(z: f64) -> f64 {
    let mut sum = StableSum::new();
    sum += -EULER_GAMMA;
    sum += -z.ln();
    let mut power = 1.0; // (−1)^{m+1} z^m / m!
    for m in 1..200 {
        let mf = f64::from(m);
        power *= if m == 1 { z } else { -z / mf };
        let term = power / mf;
        sum += term;
        if term.abs() < 1e-18 * sum.value().abs() {
            break;
        }
    }
    sum.value()
}

/// Modified Lentz evaluation of the continued fraction
/// `e^z E₁(z) = 1/(z+1− 1²/(z+3− 2²/(z+5− …)))`, valid for `z > 1`.
fn e1_scaled_continued_fraction(z: f64) -> f64 {
    const TINY: f64 = 1e-300;
    let mut b = z + 1.0;
    let mut c = 1.0 / TINY;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..10_000 {
        let an = -f64::from(i) * f64::from(i);
        b += 2.0;
        d = 1.0 / (an * d + b);
        c = b + an / c;
        let delta = c * d;
        h *= delta;
        if (delta - 1.0).abs() < 1e-16 {
            break;
        }
    }
    h
}

/// `H_n = Σ_{i=1}^n 1/i`, summed forward.
pub fn harmonic(n: u32) -> Result<f64> {
    if n == 0 {
        return Err(domain("harmonic number requires n >= 1"));
    }
    Ok((1..=n).map(|i| 1.0 / f64::from(i)).sum())
}

/// `ln n!` as a sum of logarithms (log-gamma at integer points).
pub fn ln_factorial(n: u32) -> f64 {
    (2..=n).map(|i| f64::from(i).ln()).sum()
}

/// Binomial coefficient `C(n, k)`.
///
/// Computed exactly in integer arithmetic while it fits in `u128`, so every
/// value below `2^53` is exact; beyond that it goes through log-factorials.
pub fn binomial(n: u32, k: u32) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        // acc * (n − i) / (i + 1) stays integral at every step
        match acc.checked_mul(u128::from(n - i)) {
            Some(v) => acc = v / u128::from(i + 1),
            None => return (ln_factorial(n) - ln_factorial(k) - ln_factorial(n - k)).exp(),
        }
    }
    acc as f64
}

/// Neumaier-compensated running sum.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct StableSum {
    accumulator: f64,
    compensation: f64,
}

impl StableSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, x: f64) {
        let t = self.accumulator + x;
        if self.accumulator.abs() >= x.abs() {
            self.compensation += (self.accumulator - t) + x;
        } else {
            self.compensation += (x - t) + self.accumulator;
        }
        self.accumulator = t;
    }

    pub fn value(&self) -> f64 {
        self.accumulator + self.compensation
    }
}

impl AddAssign<f64> for StableSum {
    fn add_assign(&mut self, x: f64) {
        self.add(x);
    }
}

impl Extend<f64> for StableSum {
    fn extend<I: IntoIterator<Item = f64>>(&mut self, iter: I) {
        for x in iter {
            self.add(x);
        }
    }
}

impl FromIterator<f64> for StableSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut s = StableSum::new();
        s.extend(iter);
        s
    }
}

/// Result of [`stable_alternating_binomial_sum`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlternatingSum {
    pub value: f64,
    /// `Σ|terms| / |value|`; infinite when the sum cancels to zero.
    pub condition: f64,
}

impl AlternatingSum {
    /// Roughly `log10(condition)` digits were lost to cancellation; past
    /// [`PRECISION_LOSS_CONDITION`] fewer than four remain.
    pub fn precision_loss(&self) -> bool {
        self.condition > PRECISION_LOSS_CONDITION
    }

    /// Converts a flagged sum into [`Error::PrecisionLoss`].
    pub fn checked(self) -> Result<f64> {
        if self.precision_loss() {
            Err(Error::PrecisionLoss {
                condition: self.condition,
                limit: PRECISION_LOSS_CONDITION,
            })
        } else {
            Ok(self.value)
        }
    }
}

/// `Σ_{j=0}^{n} C(n,j) (−1)^j term(j)` with log-space binomials and
/// compensated accumulation.
pub fn stable_alternating_binomial_sum<F>(n: u32, mut term: F) -> Result<AlternatingSum>
where
    F: FnMut(u32) -> f64,
{
    let mut sum = StableSum::new();
    let mut magnitude = 0.0;
    for j in 0..=n {
        let t = term(j);
        if !t.is_finite() {
            return Err(domain(format!("alternating sum term {j} is not finite ({t})")));
        }
        let signed = if j % 2 == 0 { 1.0 } else { -1.0 } * binomial(n, j) * t;
        magnitude += signed.abs();
        sum += signed;
    }
    let value = sum.value();
    let condition = if magnitude == 0.0 {
        1.0
    } else if value == 0.0 {
        f64::INFINITY
    } else {
        magnitude / value.abs()
    };
    Ok(AlternatingSum { value, condition })
}

#[cfg(test)]
mod tests {
    use super::*;

    /// `J₀(x) = (1/π)∫₀^π cos(x sin θ) dθ`; the trapezoid rule is spectrally
    /// accurate for this periodic integrand.
    fn j0_by_integral(x: f64) -> f64 {
        let n = 4000;
        let h = PI / n as f64;
        let mut s = 0.5 * (1.0 + (x * PI.sin()).cos());
        for i in 1..n {
            s += (x * (i as f64 * h).sin()).cos();
        }
        s * h / PI
    }

    #[test]
    fn j0_reference_values() {
        assert_eq!(bessel_j0(0.0).unwrap(), 1.0);
        assert!((bessel_j0(1.0).unwrap() - 0.7651976866).abs() < 1e-10);
        assert!(bessel_j0(2.4048255577).unwrap().abs() <= 1e-8);
        // mpmath, 30 digits
        let table = [
            (0.5, 0.938_469_807_240_812_9),
            (5.0, -0.177_596_771_314_338_3),
            (11.9, 0.025_049_441_699_589_645),
            (12.0, 0.047_689_310_796_833_54),
            (12.1, 0.069_666_773_606_807_31),
            (20.0, 0.167_024_664_340_583_15),
            (50.0, 0.055_812_327_669_251_815),
            (100.0, 0.019_985_850_304_223_122),
            (199.5, -0.039_613_637_334_785_146),
        ];
        for (x, want) in table {
            let got = bessel_j0(x).unwrap();
            assert!((got - want).abs() < 1e-9, "J0({x}) = {got}, want {want}");
        }
    }

    #[test]
    fn j0_matches_integral_representation_on_grid() {
        let mut x = 0.0;
        while x <= 200.0 {
            let got = bessel_j0(x).unwrap();
            let want = j0_by_integral(x);
            assert!((got - want).abs() < 1e-9, "x={x}: {got} vs {want}");
            x += 0.37;
        }
    }

    #[test]
    fn j0_symmetric_and_bounded() {
        for i in 0..2000 {
            let x = i as f64 * 0.1;
            let v = bessel_j0(x).unwrap();
            assert_eq!(v, bessel_j0(-x).unwrap());
            assert!(v.abs() <= 1.0);
        }
    }

    #[test]
    fn j0_rejects_non_finite() {
        assert!(matches!(bessel_j0(f64::NAN), Err(Error::Domain(_))));
        assert!(matches!(bessel_j0(f64::INFINITY), Err(Error::Domain(_))));
    }

    #[test]
    fn e1_reference_values() {
        // (z, E1(z), e^z E1(z)) from mpmath at 30 digits
        let table = [
            (1e-6, 13.238_295_893_062_49, 13.238_309_131_365_004),
            (1e-3, 6.331_539_364_136_149, 6.337_874_070_325_488),
            (0.1, 1.822_923_958_419_390_6, 2.014_642_544_708_451_6),
            (0.5, 0.559_773_594_776_160_8, 0.922_910_632_483_730_5),
            (0.999, 0.219_752_182_022_944_54, 0.596_751_313_368_685_8),
            (1.0, 0.219_383_934_395_520_27, 0.596_347_362_323_194_1),
            (1.001, 0.219_016_422_527_468_9, 0.595_944_007_625_447_7),
            (2.0, 0.048_900_510_708_061_12, 0.361_328_616_888_222_6),
            (5.0, 0.001_148_295_591_275_325_8, 0.170_422_176_284_732_2),
            (10.0, 4.156_968_929_685_324e-6, 0.091_563_333_939_788_08),
            (50.0, 3.783_264_029_550_459e-24, 0.019_615_109_930_114_87),
            (200.0, 6.885_226_106_307_636e-90, 0.004_975_246_323_179_357),
            (699.0, 3.828_776_303_542_93e-307, 0.001_428_574_335_746_639_4),
        ];
        for (z, e1, scaled) in table {
            let got = exp_integral_e1(z).unwrap();
            assert!(((got - e1) / e1).abs() < 1e-10, "E1({z}) = {got}, want {e1}");
            let got = exp_scaled_e1(z).unwrap();
            assert!(((got - scaled) / scaled).abs() < 1e-10, "e^z E1({z}) = {got}");
        }
        assert_eq!(exp_integral_e1(750.0).unwrap(), 0.0);
        assert!(exp_scaled_e1(1e5).unwrap() > 0.0);
    }

    #[test]
    fn e1_small_argument_asymptote() {
        let got = exp_integral_e1(0.001).unwrap();
        assert!((got - (-(0.001f64).ln() - 0.5772156649)).abs() <= 0.001);
    }

    #[test]
    fn e1_branches_agree_at_split() {
        let below = e1_series(1.0);
        let above = (-1.0f64).exp() * e1_scaled_continued_fraction(1.0);
        assert!(((below - above) / below).abs() < 1e-12);
    }

    #[test]
    fn e1_strictly_decreasing() {
        let mut prev = f64::INFINITY;
        for i in 1..=3000 {
            let z = i as f64 * 0.01;
            let v = exp_integral_e1(z).unwrap();
            assert!(v < prev, "E1 not decreasing at {z}");
            prev = v;
        }
    }

    #[test]
    fn e1_rejects_non_positive() {
        assert!(exp_integral_e1(0.0).is_err());
        assert!(exp_integral_e1(-1.0).is_err());
        assert!(exp_scaled_e1(f64::NAN).is_err());
    }

    #[test]
    fn harmonic_values() {
        assert_eq!(harmonic(1).unwrap(), 1.0);
        assert!((harmonic(8).unwrap() - 761.0 / 280.0).abs() < 1e-15);
        assert!((harmonic(7).unwrap() - 363.0 / 140.0).abs() < 1e-15);
        assert!((harmonic(8).unwrap() - 2.7178571429).abs() < 1e-10);
        assert!(harmonic(0).is_err());
    }

    #[test]
    fn binomials_are_exact_integers() {
        let mut row = vec![1u64];
        for n in 1..=60u32 {
            let mut next = vec![1u64; n as usize + 1];
            for k in 1..n as usize {
                next[k] = row[k - 1] + row[k];
            }
            row = next;
            for k in 0..=n {
                let exact = row[k as usize];
                let got = binomial(n, k);
                if exact < (1u64 << 53) {
                    assert_eq!(got, exact as f64, "C({n},{k})");
                } else {
                    assert!(((got - exact as f64) / exact as f64).abs() < 1e-13);
                }
            }
        }
        assert_eq!(binomial(3, 4), 0.0);
    }

    #[test]
    fn alternating_sum_identities() {
        let s = stable_alternating_binomial_sum(7, |j| 1.0 / f64::from(j + 1)).unwrap();
        assert!((s.value - 0.125).abs() < 1e-15);
        assert!(!s.precision_loss());
        let s = stable_alternating_binomial_sum(7, |j| 1.0 / f64::from((j + 1) * (j + 1))).unwrap();
        assert!((s.value - 0.3397321429).abs() < 1e-10);
        let s = stable_alternating_binomial_sum(0, |_| 3.25).unwrap();
        assert_eq!(s.value, 3.25);
    }

    #[test]
    fn alternating_sum_flags_cancellation() {
        // Σ (−1)^j C(n,j) = 0 exactly for n ≥ 1
        let s = stable_alternating_binomial_sum(30, |_| 1.0).unwrap();
        assert!(s.precision_loss());
        assert!(matches!(s.checked(), Err(Error::PrecisionLoss { .. })));
        assert!(stable_alternating_binomial_sum(3, |_| f64::NAN).is_err());
    }
}
