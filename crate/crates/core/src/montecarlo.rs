//! Deterministic, parallel Monte Carlo baselines.
//!
//! Correlated channels are drawn through the KL factor `g = U Λ^{1/2} z` with
//! `z` i.i.d. `CN(0, 1)`.
//!
//! # Reproducibility
//!
//! Trials are split into chunks of `chunk_size`. Chunk `i` draws from ChaCha8
//! keyed with the little-endian bytes of `master_seed` (zero-padded to 32
//! bytes) on stream `i`, starting at word 0. A `CN(0,1)` variate takes two
//! 64-bit outputs `a, b`: `u₁ = 1 − (a >> 11)·2⁻⁵³`, `u₂ = (b >> 11)·2⁻⁵³`,
//! `z = √(−ln u₁)·(cos 2πu₂, sin 2πu₂)`. An `Exp(1)` variate is `−ln u₁` from
//! one output. Per-chunk partial results are combined in chunk order, so an
//! estimate depends only on `(trials, master_seed, chunk_size)` and never on
//! the number of worker threads.

use std::f64::consts::TAU;

use num_complex::Complex64;
use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};
use rayon::prelude::*;

use crate::closedform::{outage_edof, SnrPoint};
use crate::correlation::{jakes_spectrum, Spectrum};
use crate::error::{domain, Error, Result};
use crate::fama::FamaConfig;
use crate::geometry::FasGeometry;

pub const DEFAULT_CHUNK_SIZE: u64 = 65_536;

/// Two-sided 99% normal quantile.
pub const Z_99: f64 = 2.576;

/// Probability estimates with fewer events are refused.
pub const MIN_EVENTS: u64 = 20;

/// Events needed before a grid point enters a slope fit or an accuracy ratio.
pub const MIN_EVENTS_FOR_RATIO: u64 = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct McConfig {
    pub trials: u64,
    pub master_seed: u64,
    pub chunk_size: u64,
    /// Worker threads; `None` uses the global rayon pool. Never affects results.
    pub workers: Option<usize>,
}

impl McConfig {
    pub fn new(trials: u64, master_seed: u64) -> Self {
        Self { trials, master_seed, chunk_size: DEFAULT_CHUNK_SIZE, workers: None }
    }

    pub fn with_chunk_size(mut self, chunk_size: u64) -> Self {
        self.chunk_size = chunk_size;
        self
    }

    pub fn with_workers(mut self, workers: usize) -> Self {
        self.workers = Some(workers);
        self
    }

    fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(domain("Monte Carlo needs at least one trial"));
        }
        if self.chunk_size == 0 {
            return Err(domain("chunk size must be positive"));
        }
        if self.workers == Some(0) {
            return Err(domain("worker count must be positive"));
        }
        Ok(())
    }

    fn chunks(&self) -> u64 {
        self.trials.div_ceil(self.chunk_size)
    }
}

/// A Monte Carlo estimate with its 99% normal-approximation half-width.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub value: f64,
    pub trials: u64,
    pub half_width_99: f64,
    pub seed: u64,
    /// Number of events behind a probability estimate; `None` for means.
    pub events: Option<u64>,
}

impl McEstimate {
    /// `p̂ = events/trials`, half-width `2.576·√(p̂(1−p̂)/trials)`.
    pub fn probability(events: u64, trials: u64, seed: u64) -> Result<Self> {
        if events < MIN_EVENTS {
            return Err(Error::InsufficientEvents { events, trials, required: MIN_EVENTS });
        }
        let p = events as f64 / trials as f64;
        Ok(Self {
            value: p,
            trials,
            half_width_99: Z_99 * (p * (1.0 - p) / trials as f64).sqrt(),
            seed,
            events: Some(events),
        })
    }

    fn mean(sum: f64, sum_sq: f64, trials: u64, seed: u64) -> Self {
        let n = trials as f64;
        let mean = sum / n;
        let variance = if trials > 1 { ((sum_sq - n * mean * mean) / (n - 1.0)).max(0.0) } else { 0.0 };
        Self { value: mean, trials, half_width_99: Z_99 * (variance / n).sqrt(), seed, events: None }
    }

    pub fn lower(&self) -> f64 {
        self.value - self.half_width_99
    }

    pub fn upper(&self) -> f64 {
        self.value + self.half_width_99
    }

    /// Whether `v` lies inside the 99% interval.
    pub fn covers(&self, v: f64) -> bool {
        (self.lower()..=self.upper()).contains(&v)
    }
}

/// ChaCha8 stream for one chunk.
pub fn chunk_rng(master_seed: u64, chunk: u64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&master_seed.to_le_bytes());
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(chunk);
    rng
}

const TWO_POW_M53: f64 = 1.0 / (1u64 << 53) as f64;

/// Uniform on `[0, 1)`.
fn uniform<R: RngCore>(rng: &mut R) -> f64 {
    (rng.next_u64() >> 11) as f64 * TWO_POW_M53
}

/// Unit-mean exponential.
pub fn exponential<R: RngCore>(rng: &mut R) -> f64 {
    -(1.0 - uniform(rng)).ln()
}

/// Circularly-symmetric `CN(0, 1)` by Box–Muller.
pub fn complex_gaussian<R: RngCore>(rng: &mut R) -> Complex64 {
    let u1 = 1.0 - uniform(rng);
    let u2 = uniform(rng);
    let r = (-u1.ln()).sqrt();
    let (s, c) = (TAU * u2).sin_cos();
    Complex64::new(r * c, r * s)
}

/// Runs `work(rng, trials_in_chunk)` for every chunk and returns the results
/// in chunk order.
fn run_chunks<T, F>(mc: &McConfig, work: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(&mut ChaCha8Rng, u64) -> T + Sync,
{
    mc.validate()?;
    let job = |i: u64| {
        let mut rng = chunk_rng(mc.master_seed, i);
        let len = mc.chunk_size.min(mc.trials - i * mc.chunk_size);
        work(&mut rng, len)
    };
    let chunks = mc.chunks();
    Ok(match mc.workers {
        Some(1) => (0..chunks).map(job).collect(),
        Some(w) => rayon::ThreadPoolBuilder::new()
            .num_threads(w)
            .build()
            .map_err(|e| Error::Numeric(format!("could not start worker pool: {e}")))?
            .install(|| (0..chunks).into_par_iter().map(job).collect()),
        None => (0..chunks).into_par_iter().map(job).collect(),
    })
}

/// Precomputed KL factor `a_{n,k} = √λ_k u_{n,k}` over the leading modes.
#[derive(Debug, Clone)]
pub struct ChannelSampler {
    ports: usize,
    modes: usize,
    /// Row-major `ports × modes`.
    factor: Vec<f64>,
}

impl ChannelSampler {
    /// Full-rank sampler (exact correlated channel).
    pub fn new(spec: &Spectrum) -> Result<Self> {
        Self::truncated(spec, spec.len())
    }

    /// Keeps only the `rank` strongest modes.
    pub fn truncated(spec: &Spectrum, rank: usize) -> Result<Self> {
        if !spec.has_eigenvectors() {
            return Err(domain("channel sampling needs eigenvectors; spectrum-only input given"));
        }
        let ports = spec.len();
        if rank == 0 || rank > ports {
            return Err(domain(format!("rank {rank} is outside 1..={ports}")));
        }
        let mut factor = Vec::with_capacity(ports * rank);
        for n in 0..ports {
            for k in 0..rank {
                let u = spec.eigenvector_entry(n, k).unwrap_or(0.0);
                factor.push(spec.eigenvalues()[k].sqrt() * u);
            }
        }
        Ok(Self { ports, modes: rank, factor })
    }

    pub fn for_geometry(geom: &FasGeometry) -> Result<Self> {
        Self::new(&jakes_spectrum(geom)?)
    }

    pub fn ports(&self) -> usize {
        self.ports
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    /// `g_n = Σ_k √λ_k u_{n,k} z_k` for every port.
    pub fn field(&self, noise: &[Complex64], out: &mut [Complex64]) {
        for (row, g) in self.factor.chunks_exact(self.modes).zip(out.iter_mut()) {
            let mut re = 0.0;
            let mut im = 0.0;
            for (a, z) in row.iter().zip(noise) {
                re += a * z.re;
                im += a * z.im;
            }
            *g = Complex64::new(re, im);
        }
    }

    /// Draws fresh KL coefficients into `noise` and fills `field`.
    pub fn sample_field<R: RngCore>(&self, rng: &mut R, noise: &mut [Complex64], field: &mut [Complex64]) {
        for z in noise.iter_mut() {
            *z = complex_gaussian(rng);
        }
        self.field(noise, field);
    }

    /// `max_n |g_n|²` for one fresh draw.
    fn sample_max_gain<R: RngCore>(&self, rng: &mut R, noise: &mut [Complex64]) -> f64 {
        for z in noise.iter_mut() {
            *z = complex_gaussian(rng);
        }
        let mut best = 0.0f64;
        for row in self.factor.chunks_exact(self.modes) {
            let mut re = 0.0;
            let mut im = 0.0;
            for (a, z) in row.iter().zip(noise.iter()) {
                re += a * z.re;
                im += a * z.im;
            }
            best = best.max(re * re + im * im);
        }
        best
    }
}

/// Per-port normalized gains `X_n = |Σ_k √λ_k u_{n,k} z_k|²` for the given KL
/// coefficients. A noise vector shorter than the spectrum uses the leading
/// modes only (rank-`L` truncation).
pub fn sample_channel_gains(spec: &Spectrum, noise: &[Complex64]) -> Result<Vec<f64>> {
    if noise.is_empty() || noise.len() > spec.len() {
        return Err(domain(format!(
            "noise length {} must lie in 1..={}",
            noise.len(),
            spec.len()
        )));
    }
    let sampler = ChannelSampler::truncated(spec, noise.len())?;
    let mut field = vec![Complex64::new(0.0, 0.0); sampler.ports];
    sampler.field(noise, &mut field);
    Ok(field.iter().map(|g| g.norm_sqr()).collect())
}

/// Outage event counts for several normalized thresholds from one set of draws.
#[derive(Debug, Clone, PartialEq)]
pub struct OutageCounts {
    pub thresholds: Vec<f64>,
    pub events: Vec<u64>,
    pub trials: u64,
    pub seed: u64,
}

impl OutageCounts {
    pub fn estimate(&self, i: usize) -> Result<McEstimate> {
        McEstimate::probability(self.events[i], self.trials, self.seed)
    }

    pub fn estimates(&self) -> Vec<Result<McEstimate>> {
        (0..self.events.len()).map(|i| self.estimate(i)).collect()
    }
}

fn check_thresholds(xs: &[f64]) -> Result<()> {
    if xs.is_empty() {
        return Err(domain("at least one threshold is required"));
    }
    if let Some(bad) = xs.iter().find(|x| !(x.is_finite() && **x > 0.0)) {
        return Err(domain(format!("normalized threshold {bad} must be finite and > 0")));
    }
    Ok(())
}

fn count_below<F>(xs: &[f64], mc: &McConfig, draw: F) -> Result<OutageCounts>
where
    F: Fn(&mut ChaCha8Rng) -> f64 + Sync,
{
    check_thresholds(xs)?;
    let per_chunk = run_chunks(mc, |rng, len| {
        let mut counts = vec![0u64; xs.len()];
        for _ in 0..len {
            let v = draw(rng);
            for (c, &x) in counts.iter_mut().zip(xs) {
                if v <= x {
                    *c += 1;
                }
            }
        }
        counts
    })?;
    let mut events = vec![0u64; xs.len()];
    for chunk in per_chunk {
        for (e, c) in events.iter_mut().zip(chunk) {
            *e += c;
        }
    }
    Ok(OutageCounts { thresholds: xs.to_vec(), events, trials: mc.trials, seed: mc.master_seed })
}

/// Counts `max_n X_n ≤ x` for each normalized threshold `x` on the exact
/// correlated channel.
pub fn count_outages(sampler: &ChannelSampler, xs: &[f64], mc: &McConfig) -> Result<OutageCounts> {
    count_below(xs, mc, |rng| {
        let mut noise = vec![Complex64::new(0.0, 0.0); sampler.modes];
        sampler.sample_max_gain(rng, &mut noise)
    })
}

/// Same as [`count_outages`] but for `branches` independent unit-mean
/// Rayleigh branches (the EDoF / i.i.d. model).
pub fn count_outages_independent(branches: u32, xs: &[f64], mc: &McConfig) -> Result<OutageCounts> {
    if branches == 0 {
        return Err(domain("at least one branch is required"));
    }
    count_below(xs, mc, |rng| max_of_exponentials(rng, branches))
}

fn max_of_exponentials<R: RngCore>(rng: &mut R, n: u32) -> f64 {
    (0..n).map(|_| exponential(rng)).fold(0.0, f64::max)
}

/// Exact-channel outage `P(max_n X_n ≤ γ_th/γ̄)`. A single-port geometry is
/// not representable as [`FasGeometry`]; use [`count_outages_independent`]
/// with one branch for that reference.
pub fn estimate_outage_exact(geom: &FasGeometry, snr: &SnrPoint, mc: &McConfig) -> Result<McEstimate> {
    let sampler = ChannelSampler::for_geometry(geom)?;
    count_outages(&sampler, &[snr.x()], mc)?.estimate(0)
}

/// Which channel the capacity estimator draws from.
#[derive(Debug, Clone, Copy)]
pub enum BranchModel<'a> {
    /// Exact correlated ports.
    Correlated(&'a ChannelSampler),
    /// `K*` i.i.d. unit-mean Rayleigh branches.
    Independent(u32),
}

/// Sample means of `log₂(1 + γ̄·max gain)` for several SNRs from one set of draws.
pub fn capacity_curve(model: BranchModel<'_>, gamma_bars: &[f64], mc: &McConfig) -> Result<Vec<McEstimate>> {
    if let Some(bad) = gamma_bars.iter().find(|g| !(g.is_finite() && **g >= 0.0)) {
        return Err(domain(format!("average SNR {bad} must be finite and >= 0")));
    }
    if let BranchModel::Independent(0) = model {
        return Err(domain("at least one branch is required"));
    }
    let per_chunk = run_chunks(mc, |rng, len| {
        let mut sums = vec![(0.0f64, 0.0f64); gamma_bars.len()];
        let mut noise = match model {
            BranchModel::Correlated(s) => vec![Complex64::new(0.0, 0.0); s.modes],
            BranchModel::Independent(_) => Vec::new(),
        };
        for _ in 0..len {
            let gain = match model {
                BranchModel::Correlated(s) => s.sample_max_gain(rng, &mut noise),
                BranchModel::Independent(k) => max_of_exponentials(rng, k),
            };
            for (acc, g) in sums.iter_mut().zip(gamma_bars) {
                let c = (g * gain).ln_1p() / std::f64::consts::LN_2;
                acc.0 += c;
                acc.1 += c * c;
            }
        }
        sums
    })?;
    let mut totals = vec![(0.0, 0.0); gamma_bars.len()];
    for chunk in per_chunk {
        for (t, c) in totals.iter_mut().zip(chunk) {
            t.0 += c.0;
            t.1 += c.1;
        }
    }
    Ok(totals
        .into_iter()
        .map(|(s, s2)| McEstimate::mean(s, s2, mc.trials, mc.master_seed))
        .collect())
}

/// Ergodic capacity `E[log₂(1 + γ̄ X_max)]` in bits/s/Hz.
pub fn estimate_capacity(model: BranchModel<'_>, gamma_bar: f64, mc: &McConfig) -> Result<McEstimate> {
    Ok(capacity_curve(model, &[gamma_bar], mc)?[0])
}

/// FAMA outage counts at several SNRs, sampling the EDoF-model SINR
/// `γ̄X_max / (1 + γ̄ Σ_{j≠k} Y_j)` directly.
pub fn count_fama_outages(cfg: &FamaConfig, gamma_bars: &[f64], mc: &McConfig) -> Result<OutageCounts> {
    check_thresholds(gamma_bars)?;
    let th = cfg.gamma_th();
    let per_chunk = run_chunks(mc, |rng, len| {
        let mut counts = vec![0u64; gamma_bars.len()];
        for _ in 0..len {
            let signal = max_of_exponentials(rng, cfg.kstar());
            let interference: f64 = (1..cfg.users()).map(|_| exponential(rng)).sum();
            for (c, &g) in counts.iter_mut().zip(gamma_bars) {
                if g * signal <= th * (1.0 + g * interference) {
                    *c += 1;
                }
            }
        }
        counts
    })?;
    let mut events = vec![0u64; gamma_bars.len()];
    for chunk in per_chunk {
        for (e, c) in events.iter_mut().zip(chunk) {
            *e += c;
        }
    }
    Ok(OutageCounts { thresholds: gamma_bars.to_vec(), events, trials: mc.trials, seed: mc.master_seed })
}

pub fn estimate_fama_outage(cfg: &FamaConfig, gamma_bar: f64, mc: &McConfig) -> Result<McEstimate> {
    count_fama_outages(cfg, &[gamma_bar], mc)?.estimate(0)
}

/// Least-squares slope of `log10 p` against `log10 γ̄`, negated.
pub fn loglog_slope(gamma_bars: &[f64], p: &[f64]) -> Result<f64> {
    if gamma_bars.len() != p.len() || p.len() < 2 {
        return Err(domain("slope fit needs at least two matched points"));
    }
    if p.iter().chain(gamma_bars).any(|v| !(v.is_finite() && *v > 0.0)) {
        return Err(domain("slope fit needs positive finite values"));
    }
    let xs: Vec<f64> = gamma_bars.iter().map(|g| g.log10()).collect();
    let ys: Vec<f64> = p.iter().map(|v| v.log10()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        return Err(domain("slope fit needs distinct SNR values"));
    }
    Ok(-sxy / sxx)
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiversitySlope {
    pub slope: f64,
    /// Grid points (dB) that had enough events and entered the fit.
    pub used_db: Vec<f64>,
    /// Grid points dropped for having fewer than [`MIN_EVENTS_FOR_RATIO`] events.
    pub dropped_db: Vec<f64>,
    pub estimates: Vec<McEstimate>,
}

/// Empirical diversity order of the exact channel over an SNR grid in dB.
pub fn estimate_diversity_slope(
    geom: &FasGeometry,
    gamma_th: f64,
    snr_grid_db: &[f64],
    mc: &McConfig,
) -> Result<DiversitySlope> {
    let sampler = ChannelSampler::for_geometry(geom)?;
    diversity_slope_with(snr_grid_db, gamma_th, |xs| count_outages(&sampler, xs, mc))
}

/// [`estimate_diversity_slope`] for `branches` independent Rayleigh branches.
pub fn estimate_diversity_slope_independent(
    branches: u32,
    gamma_th: f64,
    snr_grid_db: &[f64],
    mc: &McConfig,
) -> Result<DiversitySlope> {
    diversity_slope_with(snr_grid_db, gamma_th, |xs| count_outages_independent(branches, xs, mc))
}

fn diversity_slope_with<F>(snr_grid_db: &[f64], gamma_th: f64, count: F) -> Result<DiversitySlope>
where
    F: FnOnce(&[f64]) -> Result<OutageCounts>,
{
    let (lo, hi) = snr_grid_db
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    if hi - lo < 10.0 || (hi - lo).is_nan() {
        return Err(domain(format!("SNR grid must span at least 10 dB, spans {}", hi - lo)));
    }
    if !(gamma_th.is_finite() && gamma_th > 0.0) {
        return Err(domain(format!("threshold must be > 0, got {gamma_th}")));
    }
    let xs: Vec<f64> = snr_grid_db.iter().map(|db| gamma_th / crate::db_to_linear(*db)).collect();
    diversity_slope_from_counts(snr_grid_db, &count(&xs)?)
}

/// Fits the slope to grid points with at least [`MIN_EVENTS_FOR_RATIO`]
/// events; `counts` must be in grid order.
pub fn diversity_slope_from_counts(snr_grid_db: &[f64], counts: &OutageCounts) -> Result<DiversitySlope> {
    if counts.events.len() != snr_grid_db.len() {
        return Err(domain("one outage count per grid point is required"));
    }
    let mut used_db = Vec::new();
    let mut dropped_db = Vec::new();
    let mut estimates = Vec::new();
    for (i, &db) in snr_grid_db.iter().enumerate() {
        if counts.events[i] >= MIN_EVENTS_FOR_RATIO {
            used_db.push(db);
            estimates.push(counts.estimate(i)?);
        } else {
            dropped_db.push(db);
        }
    }
    if used_db.len() < 3 {
        let worst = counts.events.iter().copied().min().unwrap_or(0);
        return Err(Error::InsufficientEvents {
            events: worst,
            trials: counts.trials,
            required: MIN_EVENTS_FOR_RATIO,
        });
    }
    let snr: Vec<f64> = used_db.iter().map(|db| crate::db_to_linear(*db)).collect();
    let p: Vec<f64> = estimates.iter().map(|e| e.value).collect();
    Ok(DiversitySlope { slope: loglog_slope(&snr, &p)?, used_db, dropped_db, estimates })
}

/// EDoF outage divided by the exact-channel estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AccuracyRatio {
    pub ratio: f64,
    /// Ratio against the upper and lower ends of the MC interval.
    pub lower: f64,
    pub upper: f64,
    pub edof: f64,
    pub estimate: McEstimate,
}

impl AccuracyRatio {
    pub fn from_estimate(edof: f64, estimate: McEstimate) -> Result<Self> {
        let events = estimate.events.unwrap_or(0);
        if events < MIN_EVENTS_FOR_RATIO {
            return Err(Error::InsufficientEvents {
                events,
                trials: estimate.trials,
                required: MIN_EVENTS_FOR_RATIO,
            });
        }
        Ok(Self {
            ratio: edof / estimate.value,
            lower: edof / estimate.upper(),
            upper: edof / estimate.lower().max(f64::MIN_POSITIVE),
            edof,
            estimate,
        })
    }
}

pub fn estimate_accuracy_ratio(geom: &FasGeometry, snr: &SnrPoint, mc: &McConfig) -> Result<AccuracyRatio> {
    let estimate = estimate_outage_exact(geom, snr, mc)?;
    AccuracyRatio::from_estimate(outage_edof(snr.x(), geom.edof())?, estimate)
}

/// Per-port sample means of `X_n`.
pub fn port_gain_means(sampler: &ChannelSampler, mc: &McConfig) -> Result<Vec<McEstimate>> {
    let ports = sampler.ports;
    let per_chunk = run_chunks(mc, |rng, len| {
        let mut noise = vec![Complex64::new(0.0, 0.0); sampler.modes];
        let mut field = vec![Complex64::new(0.0, 0.0); ports];
        let mut sums = vec![(0.0f64, 0.0f64); ports];
        for _ in 0..len {
            sampler.sample_field(rng, &mut noise, &mut field);
            for (s, g) in sums.iter_mut().zip(&field) {
                let x = g.norm_sqr();
                s.0 += x;
                s.1 += x * x;
            }
        }
        sums
    })?;
    let mut totals = vec![(0.0, 0.0); ports];
    for chunk in per_chunk {
        for (t, c) in totals.iter_mut().zip(chunk) {
            t.0 += c.0;
            t.1 += c.1;
        }
    }
    Ok(totals
        .into_iter()
        .map(|(s, s2)| McEstimate::mean(s, s2, mc.trials, mc.master_seed))
        .collect())
}

/// Empirical `(1/N) Σ_n E|g_n − g̃_n^{(L)}|²` between the full channel and its
/// rank-`L` truncation driven by the same KL coefficients.
pub fn truncation_mse_mc(spec: &Spectrum, rank: usize, mc: &McConfig) -> Result<McEstimate> {
    let full = ChannelSampler::new(spec)?;
    let head = ChannelSampler::truncated(spec, rank)?;
    let ports = full.ports;
    let per_chunk = run_chunks(mc, |rng, len| {
        let mut noise = vec![Complex64::new(0.0, 0.0); full.modes];
        let mut g = vec![Complex64::new(0.0, 0.0); ports];
        let mut h = vec![Complex64::new(0.0, 0.0); ports];
        let (mut s, mut s2) = (0.0, 0.0);
        for _ in 0..len {
            full.sample_field(rng, &mut noise, &mut g);
            head.field(&noise[..rank], &mut h);
            let e = g.iter().zip(&h).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>() / ports as f64;
            s += e;
            s2 += e * e;
        }
        (s, s2)
    })?;
    let (s, s2) = per_chunk.into_iter().fold((0.0, 0.0), |a, c| (a.0 + c.0, a.1 + c.1));
    Ok(McEstimate::mean(s, s2, mc.trials, mc.master_seed))
}
