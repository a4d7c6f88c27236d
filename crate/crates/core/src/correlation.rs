//! Jakes spatial correlation, its eigendecomposition, and the spectral
//! quantities derived from it (normalized branch weights, KL truncation
//! error, Kronecker spectra for planar apertures).

use std::f64::consts::PI;

use crate::error::{domain, Error, Result};
use crate::geometry::FasGeometry;
use crate::specfun::{bessel_j0, StableSum};

/// Jacobi sweeps allowed before giving up.
pub const JACOBI_MAX_SWEEPS: usize = 30;

/// Convergence when the off-diagonal Frobenius norm drops below this times `N`.
pub const JACOBI_TOLERANCE: f64 = 1e-12;

/// Negative eigenvalues down to `−CLAMP_TOLERANCE·N` are rounding noise and
/// clamped to zero; anything below is reported as an error.
pub const CLAMP_TOLERANCE: f64 = 1e-10;

/// Dense symmetric correlation matrix with unit diagonal, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationMatrix {
    order: usize,
    entries: Vec<f64>,
}

impl CorrelationMatrix {
    /// Validates symmetry (to `1e-12`) and a unit diagonal.
    pub fn from_row_major(order: usize, entries: Vec<f64>) -> Result<Self> {
        if order == 0 || entries.len() != order * order {
            return Err(domain(format!(
                "expected {order}x{order} entries, got {}",
                entries.len()
            )));
        }
        for m in 0..order {
            if (entries[m * order + m] - 1.0).abs() > 1e-12 {
                return Err(domain(format!("diagonal entry {m} is not 1")));
            }
            for n in 0..m {
                let (a, b) = (entries[m * order + n], entries[n * order + m]);
                if !a.is_finite() || (a - b).abs() > 1e-12 {
                    return Err(domain(format!("entries ({m},{n}) and ({n},{m}) differ")));
                }
            }
        }
        Ok(Self { order, entries })
    }

    pub fn identity(order: usize) -> Self {
        let mut entries = vec![0.0; order * order];
        for n in 0..order {
            entries[n * order + n] = 1.0;
        }
        Self { order, entries }
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn get(&self, m: usize, n: usize) -> f64 {
        self.entries[m * self.order + n]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.entries
    }

    pub fn trace(&self) -> f64 {
        (0..self.order).map(|n| self.get(n, n)).sum()
    }
}

/// `[R]_{m,n} = J₀(2πW|m−n|/(N−1))`.
///
/// The matrix is Toeplitz, so only `N` Bessel evaluations are needed.
pub fn build_jakes(geom: &FasGeometry) -> Result<CorrelationMatrix> {
    let order = geom.ports();
    let lag: Vec<f64> = (0..order)
        .map(|d| {
            if d == 0 {
                Ok(1.0)
            } else {
                bessel_j0(2.0 * PI * geom.aperture() * d as f64 / (order - 1) as f64)
            }
        })
        .collect::<Result<_>>()?;
    let mut entries = vec![0.0; order * order];
    for m in 0..order {
        for n in 0..order {
            entries[m * order + n] = lag[m.abs_diff(n)];
        }
    }
    Ok(CorrelationMatrix { order, entries })
}

/// Eigenvalues in non-increasing order, optionally with their eigenvectors.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    eigenvalues: Vec<f64>,
    /// Row-major `N×N`; column `k` is the eigenvector of `eigenvalues[k]`.
    eigenvectors: Option<Vec<f64>>,
}

impl Spectrum {
    /// Spectrum-only instance from raw eigenvalues (sorted on construction).
    pub fn from_eigenvalues(mut eigenvalues: Vec<f64>) -> Result<Self> {
        if eigenvalues.is_empty() {
            return Err(domain("spectrum must not be empty"));
        }
        if let Some(bad) = eigenvalues.iter().find(|l| !l.is_finite() || **l < 0.0) {
            return Err(domain(format!("eigenvalue {bad} is not a finite non-negative number")));
        }
        eigenvalues.sort_by(|a, b| b.total_cmp(a));
        Ok(Self { eigenvalues, eigenvectors: None })
    }

    /// Spectrum of the `n×n` identity with the standard basis as eigenvectors.
    pub fn identity(n: usize) -> Self {
        let mut vectors = vec![0.0; n * n];
        for k in 0..n {
            vectors[k * n + k] = 1.0;
        }
        Self { eigenvalues: vec![1.0; n], eigenvectors: Some(vectors) }
    }

    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn has_eigenvectors(&self) -> bool {
        self.eigenvectors.is_some()
    }

    /// `u_{n,k}`: component `n` of eigenvector `k`.
    pub fn eigenvector_entry(&self, n: usize, k: usize) -> Option<f64> {
        self.eigenvectors.as_ref().map(|u| u[n * self.len() + k])
    }

    pub fn trace(&self) -> f64 {
        self.eigenvalues.iter().copied().collect::<StableSum>().value()
    }

    /// Fraction of the total power held by the leading `k` modes.
    pub fn concentration(&self, k: usize) -> f64 {
        let k = k.min(self.len());
        let head: StableSum = self.eigenvalues[..k].iter().copied().collect();
        head.value() / self.len() as f64
    }

    /// `U Λ Uᵀ`, row-major. `None` in spectrum-only mode.
    pub fn reconstruct(&self) -> Option<Vec<f64>> {
        let u = self.eigenvectors.as_ref()?;
        let n = self.len();
        let mut out = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                out[i * n + j] = (0..n).map(|k| u[i * n + k] * self.eigenvalues[k] * u[j * n + k]).sum();
            }
        }
        Some(out)
    }
}

/// Cyclic Jacobi eigendecomposition of a correlation matrix.
pub fn eigendecompose(r: &CorrelationMatrix) -> Result<Spectrum> {
    let (values, vectors) = jacobi_eigen(r.order, r.entries.clone())?;
    let n = r.order;

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[b].total_cmp(&values[a]));

    let clamp = -CLAMP_TOLERANCE * n as f64;
    let mut eigenvalues = Vec::with_capacity(n);
    for &k in &order {
        let l = values[k];
        if l < clamp {
            return Err(Error::Numeric(format!(
                "eigenvalue {l:e} is below the clamp tolerance {clamp:e}; matrix is not PSD"
            )));
        }
        eigenvalues.push(l.max(0.0));
    }
    let mut sorted = vec![0.0; n * n];
    for row in 0..n {
        for (col, &k) in order.iter().enumerate() {
            sorted[row * n + col] = vectors[row * n + k];
        }
    }
    Ok(Spectrum { eigenvalues, eigenvectors: Some(sorted) })
}

fn off_diagonal_norm(n: usize, a: &[f64]) -> f64 {
    let mut s = 0.0;
    for p in 0..n {
        for q in 0..n {
            if p != q {
                s += a[p * n + q] * a[p * n + q];
            }
        }
    }
    s.sqrt()
}

/// Returns unsorted eigenvalues and the row-major eigenvector matrix.
fn jacobi_eigen(n: usize, mut a: Vec<f64>) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }
    let tolerance = JACOBI_TOLERANCE * n as f64;

    for _ in 0..JACOBI_MAX_SWEEPS {
        if off_diagonal_norm(n, &a) < tolerance {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[q * n + q] - a[p * n + p]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                let tau = s / (1.0 + c);

                a[p * n + p] -= t * apq;
                a[q * n + q] += t * apq;
                a[p * n + q] = 0.0;
                a[q * n + p] = 0.0;
                for r in 0..n {
                    if r != p && r != q {
                        let arp = a[r * n + p];
                        let arq = a[r * n + q];
                        let new_rp = arp - s * (arq + tau * arp);
                        let new_rq = arq + s * (arp - tau * arq);
                        a[r * n + p] = new_rp;
                        a[p * n + r] = new_rp;
                        a[r * n + q] = new_rq;
                        a[q * n + r] = new_rq;
                    }
                    let vrp = v[r * n + p];
                    let vrq = v[r * n + q];
                    v[r * n + p] = vrp - s * (vrq + tau * vrp);
                    v[r * n + q] = vrq + s * (vrp - tau * vrq);
                }
            }
        }
    }

    let residual = off_diagonal_norm(n, &a);
    if residual >= tolerance {
        return Err(Error::NoConvergence { what: "Jacobi eigendecomposition", residual });
    }
    Ok(((0..n).map(|i| a[i * n + i]).collect(), v))
}

/// Normalized eigenvalues `β_k = λ_k K*/N` of the leading `K*` modes.
#[derive(Debug, Clone, PartialEq)]
pub struct BranchWeights(Vec<f64>);

impl BranchWeights {
    /// Weights must be finite and positive; they are stored in non-increasing
    /// order.
    pub fn new(mut weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(domain("at least one branch weight is required"));
        }
        if let Some(bad) = weights.iter().find(|b| !b.is_finite() || **b <= 0.0) {
            return Err(domain(format!("branch weight {bad} must be finite and > 0")));
        }
        weights.sort_by(|a, b| b.total_cmp(a));
        Ok(Self(weights))
    }

    /// All-ones weights (the EDoF limit).
    pub fn uniform(kstar: u32) -> Self {
        Self(vec![1.0; kstar as usize])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn sum(&self) -> f64 {
        self.0.iter().sum()
    }

    pub fn mean(&self) -> f64 {
        self.sum() / self.len() as f64
    }

    pub fn max(&self) -> f64 {
        self.0[0]
    }

    pub fn min(&self) -> f64 {
        self.0[self.0.len() - 1]
    }

    pub fn product(&self) -> f64 {
        self.0.iter().product()
    }
}

pub fn normalized_weights(spec: &Spectrum, kstar: u32) -> Result<BranchWeights> {
    let k = kstar as usize;
    if k == 0 || k > spec.len() {
        return Err(domain(format!(
            "K* = {kstar} is outside 1..={} for this spectrum",
            spec.len()
        )));
    }
    let scale = kstar as f64 / spec.len() as f64;
    BranchWeights::new(spec.eigenvalues()[..k].iter().map(|l| l * scale).collect())
}

/// Per-port mean-square error of the rank-`L` KL truncation, `(1/N)Σ_{k>L} λ_k`
/// (unit mean channel power).
pub fn truncation_mse(spec: &Spectrum, rank: usize) -> Result<f64> {
    if rank == 0 || rank > spec.len() {
        return Err(domain(format!(
            "truncation rank {rank} is outside 1..={}",
            spec.len()
        )));
    }
    let tail: StableSum = spec.eigenvalues()[rank..].iter().copied().collect();
    Ok(tail.value() / spec.len() as f64)
}

/// Eigenvalues of `R_x ⊗ R_y`: every product `λᵢ^(x) λⱼ^(y)`, sorted.
/// Eigenvectors are not formed.
pub fn kron_spectrum(x: &Spectrum, y: &Spectrum) -> Spectrum {
    let mut values = Vec::with_capacity(x.len() * y.len());
    for &a in x.eigenvalues() {
        for &b in y.eigenvalues() {
            values.push(a * b);
        }
    }
    values.sort_by(|a, b| b.total_cmp(a));
    Spectrum { eigenvalues: values, eigenvectors: None }
}

/// Spectrum of the Jakes matrix for `geom`.
pub fn jakes_spectrum(geom: &FasGeometry) -> Result<Spectrum> {
    eigendecompose(&build_jakes(geom)?)
}
