//! The reproduction experiments. Defaults follow the figure captions; any
//! override left as `None` keeps the default.

use std::fmt;
use std::str::FromStr;

use fas_edof::closedform::{
    ergodic_capacity, outage_bcm, outage_edof, outage_iid, outage_single, outage_wim,
    required_snr, BcmParams, BCM_FITTED_RHO,
};
use fas_edof::correlation::{jakes_spectrum, normalized_weights, BranchWeights, Spectrum};
use fas_edof::fama::{fama_floor, fama_outage, FamaConfig};
use fas_edof::geometry::{edof_1d, FasGeometry, PlanarGeometry};
use fas_edof::montecarlo::{
    capacity_curve, count_fama_outages, count_outages, diversity_slope_from_counts, AccuracyRatio,
    BranchModel, ChannelSampler, McConfig, OutageCounts, DEFAULT_CHUNK_SIZE,
};
use fas_edof::{db_to_linear, linear_to_db};

use crate::table::{Column, ExperimentTable};
use crate::{usage, CliError};

pub const DEFAULT_TRIALS: u64 = 500_000;
pub const DEFAULT_SEED: u64 = 20_240_917;

/// Target outage used for the required-SNR columns of `planar`.
pub const PLANAR_TARGET_OUTAGE: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Experiment {
    OutageVsSnr,
    OutageVsAperture,
    AccuracyRatio,
    OutageVsPorts,
    DiversityOrder,
    EigenTable,
    Capacity,
    CompareBcm,
    OutageVsThreshold,
    Fama,
    Planar,
}

impl Experiment {
    pub const ALL: [Experiment; 11] = [
        Experiment::OutageVsSnr,
        Experiment::OutageVsAperture,
        Experiment::AccuracyRatio,
        Experiment::OutageVsPorts,
        Experiment::DiversityOrder,
        Experiment::EigenTable,
        Experiment::Capacity,
        Experiment::CompareBcm,
        Experiment::OutageVsThreshold,
        Experiment::Fama,
        Experiment::Planar,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::OutageVsSnr => "outage-vs-snr",
            Experiment::OutageVsAperture => "outage-vs-aperture",
            Experiment::AccuracyRatio => "accuracy-ratio",
            Experiment::OutageVsPorts => "outage-vs-ports",
            Experiment::DiversityOrder => "diversity-order",
            Experiment::EigenTable => "eigen-table",
            Experiment::Capacity => "capacity",
            Experiment::CompareBcm => "compare-bcm",
            Experiment::OutageVsThreshold => "outage-vs-threshold",
            Experiment::Fama => "fama",
            Experiment::Planar => "planar",
        }
    }

    /// Whether the experiment draws Monte Carlo samples.
    pub fn uses_monte_carlo(self) -> bool {
        !matches!(self, Experiment::EigenTable | Experiment::Planar)
    }

    /// Fully resolved default parameters.
    pub fn defaults(self) -> Setup {
        let base = Setup {
            ports: vec![20],
            apertures: vec![3.0],
            wx: 3.0,
            wy: 3.0,
            planar_pairs: Vec::new(),
            snr_db: range(-10.0, 2.0, 20.0),
            threshold_db: vec![0.0],
            users: vec![1],
            trials: DEFAULT_TRIALS,
            seed: DEFAULT_SEED,
            workers: None,
        };
        match self {
            Experiment::OutageVsSnr => base,
            Experiment::OutageVsAperture => Setup {
                ports: vec![40],
                apertures: range(0.25, 0.25, 5.0),
                snr_db: vec![0.0],
                ..base
            },
            Experiment::AccuracyRatio => Setup {
                apertures: vec![1.0, 2.0, 3.0, 4.0],
                snr_db: range(0.0, 2.5, 15.0),
                ..base
            },
            Experiment::OutageVsPorts => Setup {
                ports: vec![8, 12, 16, 20, 24, 28, 32, 40, 50, 60, 80, 100],
                snr_db: vec![0.0],
                ..base
            },
            Experiment::DiversityOrder => Setup {
                apertures: vec![1.0, 2.0, 3.0],
                snr_db: range(0.0, 2.0, 20.0),
                ..base
            },
            Experiment::EigenTable => Setup { apertures: vec![1.0, 2.0, 3.0, 5.0], ..base },
            Experiment::Capacity => Setup {
                apertures: vec![1.0, 2.0, 3.0, 5.0],
                snr_db: range(-5.0, 2.5, 30.0),
                ..base
            },
            Experiment::CompareBcm => Setup { ports: vec![40], snr_db: range(-5.0, 2.5, 15.0), ..base },
            Experiment::OutageVsThreshold => Setup {
                snr_db: vec![10.0],
                threshold_db: range(-10.0, 2.0, 10.0),
                ..base
            },
            Experiment::Fama => Setup {
                users: vec![1, 2, 3, 5],
                snr_db: range(-10.0, 2.5, 40.0),
                ..base
            },
            Experiment::Planar => Setup {
                planar_pairs: vec![(2.0, 2.0), (3.0, 3.0)],
                snr_db: range(-10.0, 1.0, 30.0),
                ..base
            },
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Experiment {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        Experiment::ALL
            .into_iter()
            .find(|e| e.name() == s)
            .ok_or_else(|| {
                let names: Vec<&str> = Experiment::ALL.iter().map(|e| e.name()).collect();
                usage(format!("unknown experiment '{s}'; expected one of {}", names.join(", ")))
            })
    }
}

fn range(start: f64, step: f64, stop: f64) -> Vec<f64> {
    let n = ((stop - start) / step + 1e-6).floor() as usize + 1;
    (0..n).map(|i| start + i as f64 * step).collect()
}

/// User overrides. `None` keeps the experiment default.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Params {
    pub ports: Option<Vec<u64>>,
    pub apertures: Option<Vec<f64>>,
    pub wx: Option<f64>,
    pub wy: Option<f64>,
    pub snr_db: Option<Vec<f64>>,
    pub threshold_db: Option<Vec<f64>>,
    pub users: Option<Vec<u64>>,
    pub trials: Option<u64>,
    pub seed: Option<u64>,
    /// Worker cap; never changes results.
    pub workers: Option<usize>,
}

/// Parameters after defaults and overrides are merged.
#[derive(Debug, Clone, PartialEq)]
pub struct Setup {
    pub ports: Vec<usize>,
    pub apertures: Vec<f64>,
    pub wx: f64,
    pub wy: f64,
    /// Planar configurations; replaced by `(wx, wy)` when either is overridden.
    pub planar_pairs: Vec<(f64, f64)>,
    pub snr_db: Vec<f64>,
    pub threshold_db: Vec<f64>,
    pub users: Vec<u32>,
    pub trials: u64,
    pub seed: u64,
    pub workers: Option<usize>,
}

impl Setup {
    pub fn resolve(exp: Experiment, p: &Params) -> Result<Self, CliError> {
        let mut s = exp.defaults();
        if let Some(n) = &p.ports {
            s.ports = n
                .iter()
                .map(|&v| usize::try_from(v).map_err(|_| usage(format!("port count {v} is too large"))))
                .collect::<Result<_, _>>()?;
        }
        if let Some(w) = &p.apertures {
            s.apertures = w.clone();
        }
        if p.wx.is_some() || p.wy.is_some() {
            s.wx = p.wx.unwrap_or(s.wx);
            s.wy = p.wy.unwrap_or(s.wy);
            s.planar_pairs = vec![(s.wx, s.wy)];
        }
        if let Some(v) = &p.snr_db {
            s.snr_db = v.clone();
        }
        if let Some(v) = &p.threshold_db {
            s.threshold_db = v.clone();
        }
        if let Some(u) = &p.users {
            s.users = u
                .iter()
                .map(|&v| u32::try_from(v).map_err(|_| usage(format!("user count {v} is too large"))))
                .collect::<Result<_, _>>()?;
        }
        s.trials = p.trials.unwrap_or(s.trials);
        s.seed = p.seed.unwrap_or(s.seed);
        s.workers = p.workers;
        if s.trials == 0 {
            return Err(usage("--trials must be positive"));
        }
        if s.workers == Some(0) {
            return Err(usage("worker count must be positive"));
        }
        for (name, list) in [("--snr-db", &s.snr_db), ("--threshold-db", &s.threshold_db)] {
            if list.is_empty() {
                return Err(usage(format!("{name} needs at least one value")));
            }
        }
        if let Some(w) = s.apertures.iter().chain([&s.wx, &s.wy]).find(|w| **w <= 0.0) {
            return Err(usage(format!("apertures must be > 0, got {w}")));
        }
        if let Some(n) = s.ports.iter().find(|n| **n < 2) {
            return Err(usage(format!("a FAS needs at least 2 ports, got {n}")));
        }
        Ok(s)
    }

    fn mc(&self) -> McConfig {
        let mc = McConfig::new(self.trials, self.seed);
        match self.workers {
            Some(w) => mc.with_workers(w),
            None => mc,
        }
    }

    fn one_port_count(&self, flag: &str) -> Result<usize, CliError> {
        single(&self.ports, flag)
    }

    fn one_aperture(&self) -> Result<f64, CliError> {
        single(&self.apertures, "--W")
    }

    fn one_snr_db(&self) -> Result<f64, CliError> {
        single(&self.snr_db, "--snr-db")
    }

    fn one_threshold_db(&self) -> Result<f64, CliError> {
        single(&self.threshold_db, "--threshold-db")
    }
}

fn single<T: Copy + fmt::Debug>(list: &[T], flag: &str) -> Result<T, CliError> {
    match list {
        [v] => Ok(*v),
        _ => Err(usage(format!("{flag} takes a single value for this experiment, got {list:?}"))),
    }
}

pub fn run_experiment(exp: Experiment, params: &Params) -> Result<ExperimentTable, CliError> {
    let s = Setup::resolve(exp, params)?;
    let mut table = match exp {
        Experiment::OutageVsSnr => outage_vs_snr(&s)?,
        Experiment::OutageVsAperture => outage_vs_aperture(&s)?,
        Experiment::AccuracyRatio => accuracy_ratio(&s)?,
        Experiment::OutageVsPorts => outage_vs_ports(&s)?,
        Experiment::DiversityOrder => diversity_order(&s)?,
        Experiment::EigenTable => eigen_table(&s)?,
        Experiment::Capacity => capacity(&s)?,
        Experiment::CompareBcm => compare_bcm(&s)?,
        Experiment::OutageVsThreshold => outage_vs_threshold(&s)?,
        Experiment::Fama => fama(&s)?,
        Experiment::Planar => planar(&s)?,
    };
    table.set_meta("version", env!("CARGO_PKG_VERSION"));
    if exp.uses_monte_carlo() {
        table.set_meta("master_seed", s.seed);
        table.set_meta("trials", s.trials);
        table.set_meta("chunk_size", DEFAULT_CHUNK_SIZE);
        table.set_meta("prng", "chacha8");
    }
    Ok(table)
}

/// Compact label fragment for a number: `3`, `2.5`, `-10`.
fn tag(v: f64) -> String {
    format!("{v}")
}

fn list(values: &[f64]) -> String {
    values.iter().map(|v| tag(*v)).collect::<Vec<_>>().join(",")
}

/// MC probability and its 99% half-width, NaN below the event guard.
fn mc_cell(counts: &OutageCounts, i: usize) -> (f64, f64) {
    match counts.estimate(i) {
        Ok(e) => (e.value, e.half_width_99),
        Err(_) => (f64::NAN, f64::NAN),
    }
}

/// Refined-WIM weights, or `None` when `K* > N` leaves too few eigenvalues.
fn wim_weights(spec: &Spectrum, kstar: u32) -> Option<BranchWeights> {
    normalized_weights(spec, kstar).ok()
}

fn wim_cell(weights: Option<&BranchWeights>, x: f64) -> Result<f64, CliError> {
    match weights {
        Some(w) => Ok(outage_wim(x, w)?),
        None => Ok(f64::NAN),
    }
}

struct Channel {
    geom: FasGeometry,
    spec: Spectrum,
}

impl Channel {
    fn new(ports: usize, aperture: f64) -> Result<Self, CliError> {
        let geom = FasGeometry::new(ports, aperture)?;
        Ok(Self { spec: jakes_spectrum(&geom)?, geom })
    }

    fn kstar(&self) -> u32 {
        self.geom.edof()
    }

    fn counts(&self, xs: &[f64], mc: &McConfig) -> Result<OutageCounts, CliError> {
        Ok(count_outages(&ChannelSampler::new(&self.spec)?, xs, mc)?)
    }
}

fn thresholds(gamma_th: f64, snr_db: &[f64]) -> Vec<f64> {
    snr_db.iter().map(|db| gamma_th / db_to_linear(*db)).collect()
}

fn outage_vs_snr(s: &Setup) -> Result<ExperimentTable, CliError> {
    let ch = Channel::new(s.one_port_count("--N")?, s.one_aperture()?)?;
    let th_db = s.one_threshold_db()?;
    let xs = thresholds(db_to_linear(th_db), &s.snr_db);
    let counts = ch.counts(&xs, &s.mc())?;
    let weights = wim_weights(&ch.spec, ch.kstar());
    let mut t = ExperimentTable::new(
        "outage-vs-snr",
        vec![
            Column::new("snr_db", "dB"),
            Column::new("mc", "probability"),
            Column::new("mc_ci99", "probability"),
            Column::new("edof", "probability"),
            Column::new("wim", "probability"),
            Column::new("iid", "probability"),
            Column::new("single", "probability"),
        ],
    );
    for (i, (&db, &x)) in s.snr_db.iter().zip(&xs).enumerate() {
        let (mc, ci) = mc_cell(&counts, i);
        t.push_row(vec![
            db,
            mc,
            ci,
            outage_edof(x, ch.kstar())?,
            wim_cell(weights.as_ref(), x)?,
            outage_iid(x, ch.geom.ports() as u32)?,
            outage_single(x)?,
        ]);
    }
    t.set_meta("N", ch.geom.ports());
    t.set_meta("W", tag(ch.geom.aperture()));
    t.set_meta("kstar", ch.kstar());
    t.set_meta("threshold_db", tag(th_db));
    Ok(t)
}

fn outage_vs_aperture(s: &Setup) -> Result<ExperimentTable, CliError> {
    let n = s.one_port_count("--N")?;
    let (snr_db, th_db) = (s.one_snr_db()?, s.one_threshold_db()?);
    let x = db_to_linear(th_db) / db_to_linear(snr_db);
    let mc = s.mc();
    let mut t = ExperimentTable::new(
        "outage-vs-aperture",
        vec![
            Column::new("W", "wavelengths"),
            Column::new("kstar", "modes"),
            Column::new("mc", "probability"),
            Column::new("mc_ci99", "probability"),
            Column::new("edof", "probability"),
            Column::new("wim", "probability"),
        ],
    );
    for &w in &s.apertures {
        let ch = Channel::new(n, w)?;
        let (p, ci) = mc_cell(&ch.counts(&[x], &mc)?, 0);
        let weights = wim_weights(&ch.spec, ch.kstar());
        t.push_row(vec![
            w,
            f64::from(ch.kstar()),
            p,
            ci,
            outage_edof(x, ch.kstar())?,
            wim_cell(weights.as_ref(), x)?,
        ]);
    }
    t.set_meta("N", n);
    t.set_meta("snr_db", tag(snr_db));
    t.set_meta("threshold_db", tag(th_db));
    Ok(t)
}

fn accuracy_ratio(s: &Setup) -> Result<ExperimentTable, CliError> {
    let n = s.one_port_count("--N")?;
    let th_db = s.one_threshold_db()?;
    let xs = thresholds(db_to_linear(th_db), &s.snr_db);
    let mut columns = vec![Column::new("snr_db", "dB")];
    for &w in &s.apertures {
        columns.push(Column::new(format!("ratio_w{}", tag(w)), "ratio"));
        columns.push(Column::new(format!("ratio_w{}_lo", tag(w)), "ratio"));
        columns.push(Column::new(format!("ratio_w{}_hi", tag(w)), "ratio"));
    }
    let mut t = ExperimentTable::new("accuracy-ratio", columns);
    let mc = s.mc();
    let mut per_w = Vec::new();
    for &w in &s.apertures {
        let ch = Channel::new(n, w)?;
        per_w.push((ch.kstar(), ch.counts(&xs, &mc)?));
    }
    for (i, (&db, &x)) in s.snr_db.iter().zip(&xs).enumerate() {
        let mut row = vec![db];
        for (kstar, counts) in &per_w {
            let cell = counts
                .estimate(i)
                .ok()
                .and_then(|e| AccuracyRatio::from_estimate(outage_edof(x, *kstar).ok()?, e).ok());
            match cell {
                Some(r) => row.extend([r.ratio, r.lower, r.upper]),
                None => row.extend([f64::NAN; 3]),
            }
        }
        t.push_row(row);
    }
    t.set_meta("N", n);
    t.set_meta("W", list(&s.apertures));
    t.set_meta("threshold_db", tag(th_db));
    t.set_meta("min_events", fas_edof::montecarlo::MIN_EVENTS_FOR_RATIO);
    Ok(t)
}

fn outage_vs_ports(s: &Setup) -> Result<ExperimentTable, CliError> {
    let w = s.one_aperture()?;
    let (snr_db, th_db) = (s.one_snr_db()?, s.one_threshold_db()?);
    let x = db_to_linear(th_db) / db_to_linear(snr_db);
    let mc = s.mc();
    let mut t = ExperimentTable::new(
        "outage-vs-ports",
        vec![
            Column::new("N", "ports"),
            Column::new("mc", "probability"),
            Column::new("mc_ci99", "probability"),
            Column::new("edof", "probability"),
            Column::new("wim", "probability"),
            Column::new("iid", "probability"),
        ],
    );
    for &n in &s.ports {
        let ch = Channel::new(n, w)?;
        let (p, ci) = mc_cell(&ch.counts(&[x], &mc)?, 0);
        let weights = wim_weights(&ch.spec, ch.kstar());
        t.push_row(vec![
            n as f64,
            p,
            ci,
            outage_edof(x, ch.kstar())?,
            wim_cell(weights.as_ref(), x)?,
            outage_iid(x, n as u32)?,
        ]);
    }
    t.set_meta("W", tag(w));
    t.set_meta("kstar", edof_1d(w)?);
    t.set_meta("snr_db", tag(snr_db));
    t.set_meta("threshold_db", tag(th_db));
    Ok(t)
}

fn diversity_order(s: &Setup) -> Result<ExperimentTable, CliError> {
    let n = s.one_port_count("--N")?;
    let th_db = s.one_threshold_db()?;
    let xs = thresholds(db_to_linear(th_db), &s.snr_db);
    let mut columns = vec![Column::new("snr_db", "dB")];
    for &w in &s.apertures {
        columns.push(Column::new(format!("edof_w{}", tag(w)), "probability"));
        columns.push(Column::new(format!("mc_w{}", tag(w)), "probability"));
    }
    let mut t = ExperimentTable::new("diversity-order", columns);
    let mc = s.mc();
    let mut per_w = Vec::new();
    for &w in &s.apertures {
        let ch = Channel::new(n, w)?;
        let counts = ch.counts(&xs, &mc)?;
        let edof: Vec<f64> = xs.iter().map(|&x| outage_edof(x, ch.kstar())).collect::<Result<_, _>>()?;
        let snr: Vec<f64> = s.snr_db.iter().map(|d| db_to_linear(*d)).collect();
        let analytic = fas_edof::montecarlo::loglog_slope(&snr, &edof);
        t.set_meta(
            format!("slope_edof_w{}", tag(w)),
            analytic.map(|v| format!("{v:.4}")).unwrap_or_else(|e| e.to_string()),
        );
        let fitted = match diversity_slope_from_counts(&s.snr_db, &counts) {
            Ok(d) => format!("{:.4} over {} dB", d.slope, list(&d.used_db)),
            Err(e) => e.to_string(),
        };
        t.set_meta(format!("slope_mc_w{}", tag(w)), fitted);
        t.set_meta(format!("kstar_w{}", tag(w)), ch.kstar());
        per_w.push((edof, counts));
    }
    for (i, &db) in s.snr_db.iter().enumerate() {
        let mut row = vec![db];
        for (edof, counts) in &per_w {
            row.push(edof[i]);
            row.push(mc_cell(counts, i).0);
        }
        t.push_row(row);
    }
    t.set_meta("N", n);
    t.set_meta("threshold_db", tag(th_db));
    Ok(t)
}

fn eigen_table(s: &Setup) -> Result<ExperimentTable, CliError> {
    let n = s.one_port_count("--N")?;
    let mut t = ExperimentTable::new(
        "eigen-table",
        vec![
            Column::new("W", "wavelengths"),
            Column::new("kstar", "modes"),
            Column::new("beta_mean", ""),
            Column::new("beta_max", ""),
            Column::new("beta_min", ""),
            Column::new("concentration", "fraction"),
        ],
    );
    for &w in &s.apertures {
        let ch = Channel::new(n, w)?;
        let k = ch.kstar();
        let (mean, max, min) = match wim_weights(&ch.spec, k) {
            Some(b) => (b.mean(), b.max(), b.min()),
            None => (f64::NAN, f64::NAN, f64::NAN),
        };
        t.push_row(vec![w, f64::from(k), mean, max, min, ch.spec.concentration(k as usize)]);
    }
    t.set_meta("N", n);
    Ok(t)
}

fn capacity(s: &Setup) -> Result<ExperimentTable, CliError> {
    let n = s.one_port_count("--N")?;
    let gammas: Vec<f64> = s.snr_db.iter().map(|d| db_to_linear(*d)).collect();
    let mut columns = vec![Column::new("snr_db", "dB")];
    for &w in &s.apertures {
        columns.push(Column::new(format!("edof_w{}", tag(w)), "bit/s/Hz"));
        columns.push(Column::new(format!("mc_w{}", tag(w)), "bit/s/Hz"));
        columns.push(Column::new(format!("mc_w{}_ci99", tag(w)), "bit/s/Hz"));
    }
    let mut t = ExperimentTable::new("capacity", columns);
    let mc = s.mc();
    let mut per_w = Vec::new();
    for &w in &s.apertures {
        let ch = Channel::new(n, w)?;
        let sampler = ChannelSampler::new(&ch.spec)?;
        let est = capacity_curve(BranchModel::Correlated(&sampler), &gammas, &mc)?;
        let analytic: Vec<f64> = gammas.iter().map(|&g| ergodic_capacity(g, ch.kstar())).collect::<Result<_, _>>()?;
        per_w.push((analytic, est));
    }
    for (i, &db) in s.snr_db.iter().enumerate() {
        let mut row = vec![db];
        for (analytic, est) in &per_w {
            row.extend([analytic[i], est[i].value, est[i].half_width_99]);
        }
        t.push_row(row);
    }
    t.set_meta("N", n);
    t.set_meta("W", list(&s.apertures));
    Ok(t)
}

fn compare_bcm(s: &Setup) -> Result<ExperimentTable, CliError> {
    let ch = Channel::new(s.one_port_count("--N")?, s.one_aperture()?)?;
    let th_db = s.one_threshold_db()?;
    let xs = thresholds(db_to_linear(th_db), &s.snr_db);
    let counts = ch.counts(&xs, &s.mc())?;
    let weights = wim_weights(&ch.spec, ch.kstar());
    let bcm = BcmParams::with_default_blocks(ch.geom.ports(), ch.kstar(), BCM_FITTED_RHO)?;
    let mut t = ExperimentTable::new(
        "compare-bcm",
        vec![
            Column::new("snr_db", "dB"),
            Column::new("iid", "probability"),
            Column::new("bcm", "probability"),
            Column::new("mc", "probability"),
            Column::new("mc_ci99", "probability"),
            Column::new("edof", "probability"),
            Column::new("wim", "probability"),
        ],
    );
    for (i, (&db, &x)) in s.snr_db.iter().zip(&xs).enumerate() {
        let (mc, ci) = mc_cell(&counts, i);
        t.push_row(vec![
            db,
            outage_iid(x, ch.geom.ports() as u32)?,
            outage_bcm(x, &bcm)?,
            mc,
            ci,
            outage_edof(x, ch.kstar())?,
            wim_cell(weights.as_ref(), x)?,
        ]);
    }
    t.set_meta("N", ch.geom.ports());
    t.set_meta("W", tag(ch.geom.aperture()));
    t.set_meta("kstar", ch.kstar());
    t.set_meta("bcm_blocks", bcm.blocks);
    t.set_meta("bcm_block_size", bcm.block_size);
    t.set_meta("bcm_rho", tag(bcm.rho));
    t.set_meta("threshold_db", tag(th_db));
    Ok(t)
}

fn outage_vs_threshold(s: &Setup) -> Result<ExperimentTable, CliError> {
    let ch = Channel::new(s.one_port_count("--N")?, s.one_aperture()?)?;
    let snr_db = s.one_snr_db()?;
    let g = db_to_linear(snr_db);
    let xs: Vec<f64> = s.threshold_db.iter().map(|d| db_to_linear(*d) / g).collect();
    let counts = ch.counts(&xs, &s.mc())?;
    let weights = wim_weights(&ch.spec, ch.kstar());
    let mut t = ExperimentTable::new(
        "outage-vs-threshold",
        vec![
            Column::new("threshold_db", "dB"),
            Column::new("mc", "probability"),
            Column::new("mc_ci99", "probability"),
            Column::new("edof", "probability"),
            Column::new("wim", "probability"),
            Column::new("single", "probability"),
        ],
    );
    for (i, (&db, &x)) in s.threshold_db.iter().zip(&xs).enumerate() {
        let (mc, ci) = mc_cell(&counts, i);
        t.push_row(vec![
            db,
            mc,
            ci,
            outage_edof(x, ch.kstar())?,
            wim_cell(weights.as_ref(), x)?,
            outage_single(x)?,
        ]);
    }
    t.set_meta("N", ch.geom.ports());
    t.set_meta("W", tag(ch.geom.aperture()));
    t.set_meta("kstar", ch.kstar());
    t.set_meta("snr_db", tag(snr_db));
    Ok(t)
}

fn fama(s: &Setup) -> Result<ExperimentTable, CliError> {
    let w = s.one_aperture()?;
    let kstar = edof_1d(w)?;
    let th_db = s.one_threshold_db()?;
    let gammas: Vec<f64> = s.snr_db.iter().map(|d| db_to_linear(*d)).collect();
    let mut columns = vec![Column::new("snr_db", "dB")];
    for &m in &s.users {
        columns.push(Column::new(format!("fama_m{m}"), "probability"));
        columns.push(Column::new(format!("mc_m{m}"), "probability"));
    }
    let mut t = ExperimentTable::new("fama", columns);
    let mc = s.mc();
    let mut per_m = Vec::new();
    for &m in &s.users {
        let cfg = FamaConfig::new(m, kstar, db_to_linear(th_db))?;
        t.set_meta(format!("floor_m{m}"), fama_floor(&cfg)?);
        let analytic: Vec<f64> = gammas.iter().map(|&g| fama_outage(&cfg, g)).collect::<Result<_, _>>()?;
        per_m.push((analytic, count_fama_outages(&cfg, &gammas, &mc)?));
    }
    for (i, &db) in s.snr_db.iter().enumerate() {
        let mut row = vec![db];
        for (analytic, counts) in &per_m {
            row.push(analytic[i]);
            row.push(mc_cell(counts, i).0);
        }
        t.push_row(row);
    }
    t.set_meta("W", tag(w));
    t.set_meta("kstar", kstar);
    t.set_meta("threshold_db", tag(th_db));
    Ok(t)
}

fn planar(s: &Setup) -> Result<ExperimentTable, CliError> {
    let th_db = s.one_threshold_db()?;
    let gamma_th = db_to_linear(th_db);
    // (label, K*) for every curve: single antenna, each 1D aperture, each planar pair
    let mut curves: Vec<(String, u32)> = vec![("single".to_string(), 1)];
    let mut seen_1d = Vec::new();
    for &(wx, _) in &s.planar_pairs {
        if !seen_1d.contains(&wx.to_bits()) {
            seen_1d.push(wx.to_bits());
            curves.push((format!("edof_1d_w{}", tag(wx)), edof_1d(wx)?));
        }
    }
    for &(wx, wy) in &s.planar_pairs {
        // port counts do not enter the EDoF; 2 per axis is the smallest valid layout
        let g = PlanarGeometry::new(2, wx, 2, wy)?;
        curves.push((format!("edof_2d_{}x{}", tag(wx), tag(wy)), g.edof()));
    }
    let mut columns = vec![Column::new("snr_db", "dB")];
    columns.extend(curves.iter().map(|(label, _)| Column::new(label.clone(), "probability")));
    let mut t = ExperimentTable::new("planar", columns);
    for &db in &s.snr_db {
        let x = gamma_th / db_to_linear(db);
        let mut row = vec![db];
        for (_, k) in &curves {
            row.push(outage_edof(x, *k)?);
        }
        t.push_row(row);
    }
    for (label, k) in &curves {
        t.set_meta(format!("kstar.{label}"), k);
        let req = linear_to_db(required_snr(PLANAR_TARGET_OUTAGE, gamma_th, *k)?);
        t.set_meta(format!("required_snr_db.{label}"), format!("{req:.4}"));
    }
    t.set_meta("target_outage", PLANAR_TARGET_OUTAGE);
    t.set_meta("threshold_db", tag(th_db));
    Ok(t)
}
