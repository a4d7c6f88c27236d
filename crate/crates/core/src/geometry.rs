//! Aperture geometry and EDoF counting.

use crate::error::{domain, Result};

/// Apertures within this distance of an integer are treated as that integer
/// before taking the ceiling, so `W = 3.0000000001` still gives `K* = 7`.
pub const INTEGER_SNAP: f64 = 1e-9;

fn snapped_ceil(w: f64) -> f64 {
    let r = w.round();
    if (w - r).abs() <= INTEGER_SNAP {
        r
    } else {
        w.ceil()
    }
}

fn check_aperture(w: f64, name: &str) -> Result<()> {
    if !w.is_finite() || w <= 0.0 {
        return Err(domain(format!("{name} must be finite and > 0, got {w}")));
    }
    Ok(())
}

/// `K* = 2⌈W⌉ + 1` for a linear aperture of `w` wavelengths.
pub fn edof_1d(w: f64) -> Result<u32> {
    check_aperture(w, "aperture W")?;
    Ok(2 * snapped_ceil(w) as u32 + 1)
}

/// `K*₂D = (2⌈Wx⌉ + 1)(2⌈Wy⌉ + 1)` for a separable planar aperture.
pub fn edof_2d(wx: f64, wy: f64) -> Result<u32> {
    check_aperture(wx, "aperture Wx")?;
    check_aperture(wy, "aperture Wy")?;
    Ok(edof_1d(wx)? * edof_1d(wy)?)
}

/// Smallest aperture (in wavelengths) whose EDoF reaches diversity order `d`.
pub fn min_aperture(d: u32) -> Result<f64> {
    if d < 1 {
        return Err(domain("target diversity order must be >= 1"));
    }
    Ok(f64::from(d - 1) / 2.0)
}

/// A linear FAS: `N` ports spread uniformly over `W` wavelengths.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FasGeometry {
    ports: usize,
    aperture: f64,
    edof: u32,
}

impl FasGeometry {
    pub fn new(ports: usize, aperture: f64) -> Result<Self> {
        if ports < 2 {
            return Err(domain(format!("a FAS needs at least 2 ports, got {ports}")));
        }
        let edof = edof_1d(aperture)?;
        Ok(Self { ports, aperture, edof })
    }

    pub fn ports(&self) -> usize {
        self.ports
    }

    /// Normalized aperture `W` in wavelengths.
    pub fn aperture(&self) -> f64 {
        self.aperture
    }

    /// `K*`.
    pub fn edof(&self) -> u32 {
        self.edof
    }

    /// Adjacent-port spacing `W/(N−1)` in wavelengths.
    pub fn port_spacing(&self) -> f64 {
        self.aperture / (self.ports - 1) as f64
    }

    /// Position of the `n`-th port (0-based) in wavelengths.
    pub fn port_position(&self, n: usize) -> f64 {
        n as f64 * self.port_spacing()
    }
}

/// A rectangular planar FAS with a separable (Kronecker) correlation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlanarGeometry {
    pub x: FasGeometry,
    pub y: FasGeometry,
}

impl PlanarGeometry {
    pub fn new(ports_x: usize, aperture_x: f64, ports_y: usize, aperture_y: f64) -> Result<Self> {
        Ok(Self {
            x: FasGeometry::new(ports_x, aperture_x)?,
            y: FasGeometry::new(ports_y, aperture_y)?,
        })
    }

    /// `K*₂D = K*_x · K*_y`.
    pub fn edof(&self) -> u32 {
        self.x.edof() * self.y.edof()
    }

    pub fn ports(&self) -> usize {
        self.x.ports() * self.y.ports()
    }
}
