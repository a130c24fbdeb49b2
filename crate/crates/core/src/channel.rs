//! Wideband geometric channel synthesis.
//!
//! Paths are derived from scene geometry, spread over delay taps with a
//! raised-cosine pulse and taken to the subcarrier domain with a length-K DFT:
//!
//! ```text
//! h_d = sum_l rho * alpha_l * p_rc(d*Ts - tau_l) * a(theta_l, phi_l)
//! h_k = sum_{d<D} h_d * exp(-j*2*pi*k*d/K)
//! ```

use std::collections::BTreeMap;
use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Vec3;
use crate::scene::Scene;

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Uniform linear array.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArraySpec {
    pub n_elements: usize,
    /// Element spacing in wavelengths.
    pub spacing_wavelengths: f64,
    /// Unit vector along which elements are placed.
    pub axis: Vec3,
}

impl ArraySpec {
    pub fn new(n_elements: usize, spacing_wavelengths: f64, axis: Vec3) -> Result<Self> {
        let a = ArraySpec {
            n_elements,
            spacing_wavelengths,
            axis,
        };
        a.validate()?;
        Ok(a)
    }

    /// Half-wavelength array along +x.
    pub fn ula_x(n_elements: usize) -> Self {
        ArraySpec {
            n_elements,
            spacing_wavelengths: 0.5,
            axis: Vec3::new(1.0, 0.0, 0.0),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_elements == 0 {
            return Err(Error::domain("array needs at least one element"));
        }
        if !(self.spacing_wavelengths.is_finite() && self.spacing_wavelengths > 0.0) {
            return Err(Error::domain("array spacing must be positive"));
        }
        if (self.axis.norm() - 1.0).abs() > 1e-9 {
            return Err(Error::domain("array axis must have unit norm"));
        }
        Ok(())
    }
}

/// Unit direction from azimuth (in the x-y plane, from +x) and elevation
/// (from the x-y plane toward +z).
pub fn direction_from_angles(azimuth: f64, elevation: f64) -> Vec3 {
    Vec3::new(
        elevation.cos() * azimuth.cos(),
        elevation.cos() * azimuth.sin(),
        elevation.sin(),
    )
}

pub fn angles_from_direction(u: Vec3) -> (f64, f64) {
    let azimuth = u.y.atan2(u.x);
    let elevation = u.z.clamp(-1.0, 1.0).asin();
    (azimuth, elevation)
}

/// Steering vector: element `m` is `exp(j*2*pi*spacing*m*omega)` with
/// `omega` the projection of the arrival direction onto the array axis.
pub fn array_response(arr: &ArraySpec, azimuth: f64, elevation: f64) -> Vec<Complex64> {
    let omega = direction_from_angles(azimuth, elevation).dot(arr.axis);
    steering(arr.n_elements, arr.spacing_wavelengths, omega)
}

/// Steering vector for spatial frequency `omega` (direction cosine along the array axis).
pub fn steering(n: usize, spacing: f64, omega: f64) -> Vec<Complex64> {
    (0..n)
        .map(|m| Complex64::from_polar(1.0, 2.0 * PI * spacing * m as f64 * omega))
        .collect()
}

/// One propagation path.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Path {
    /// seconds
    pub delay: f64,
    /// radians
    pub azimuth: f64,
    /// radians
    pub elevation: f64,
    /// Complex gain including path loss.
    pub gain: Complex64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathSet {
    pub paths: Vec<Path>,
    /// Global gain normalization.
    pub scale: f64,
}

impl PathSet {
    pub fn single(path: Path) -> Self {
        PathSet {
            paths: vec![path],
            scale: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OfdmSpec {
    /// K
    pub n_subcarriers: usize,
    /// Ts = 1 / bandwidth
    pub sample_period: f64,
    /// D
    pub n_taps: usize,
    /// Raised-cosine roll-off.
    pub rolloff: f64,
}

impl OfdmSpec {
    pub fn new(n_subcarriers: usize, bandwidth: f64, n_taps: usize, rolloff: f64) -> Result<Self> {
        let s = OfdmSpec {
            n_subcarriers,
            sample_period: 1.0 / bandwidth,
            n_taps,
            rolloff,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_subcarriers == 0 || self.n_taps == 0 {
            return Err(Error::domain("subcarrier and tap counts must be positive"));
        }
        if self.n_taps > self.n_subcarriers {
            return Err(Error::domain("tap count D must not exceed subcarrier count K"));
        }
        if !(0.0..=1.0).contains(&self.rolloff) {
            return Err(Error::domain("roll-off must lie in [0, 1]"));
        }
        if !(self.sample_period.is_finite() && self.sample_period > 0.0) {
            return Err(Error::domain("sample period must be positive"));
        }
        Ok(())
    }
}

/// Normalized sinc, `sin(pi x) / (pi x)`.
pub fn sinc(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else {
        let px = PI * x;
        px.sin() / px
    }
}

/// Raised-cosine pulse with its argument in units of the symbol period.
pub fn raised_cosine_normalized(x: f64, rolloff: f64) -> f64 {
    if x == 0.0 {
        return 1.0;
    }
    let nearest = x.round();
    if nearest != 0.0 && (x - nearest).abs() <= 1e-12 * nearest.abs().max(1.0) {
        return 0.0;
    }
    let bx2 = 2.0 * rolloff * x;
    let denom = 1.0 - bx2 * bx2;
    if rolloff > 0.0 && denom.abs() < 1e-12 {
        return PI / 4.0 * sinc(1.0 / (2.0 * rolloff));
    }
    sinc(x) * (PI * rolloff * x).cos() / denom
}

pub fn raised_cosine(t: f64, spec: &OfdmSpec) -> f64 {
    raised_cosine_normalized(t / spec.sample_period, spec.rolloff)
}

/// Free-space parameters shared by every link in a scene.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Propagation {
    pub carrier_frequency: f64,
    /// Amplitude attenuates as `exp(-absorption * d / 2)`; 1/m.
    pub absorption_per_m: f64,
    pub speed_of_light: f64,
    /// Snap delays to the nearest multiple of `sample_period`.
    pub quantize_delays: bool,
    pub sample_period: f64,
}

impl Propagation {
    pub fn for_scene(scene: &Scene, absorption_per_m: f64, quantize_delays: bool) -> Self {
        Propagation {
            carrier_frequency: scene.carrier_frequency,
            absorption_per_m,
            speed_of_light: SPEED_OF_LIGHT,
            quantize_delays,
            sample_period: 1.0 / scene.bandwidth,
        }
    }

    pub fn wavelength(&self) -> f64 {
        self.speed_of_light / self.carrier_frequency
    }

    /// Complex LOS gain at distance `d`.
    pub fn los_gain(&self, d: f64) -> Complex64 {
        let lambda = self.wavelength();
        let mag = lambda / (4.0 * PI * d) * (-self.absorption_per_m * d / 2.0).exp();
        Complex64::from_polar(mag, -2.0 * PI * d / lambda)
    }
}

/// Direct path from `tx` to `rx`, or `None` when a building blocks it.
///
/// Angles describe the arrival direction at `rx`, i.e. the unit vector
/// pointing from `rx` back toward `tx`.
pub fn paths_from_geometry(scene: &Scene, prop: &Propagation, tx: Vec3, rx: Vec3) -> Option<PathSet> {
    if !scene.line_of_sight(tx, rx) {
        return None;
    }
    let d = tx.distance(rx);
    let u = (tx - rx).normalized()?;
    let (azimuth, elevation) = angles_from_direction(u);
    let mut delay = d / prop.speed_of_light;
    if prop.quantize_delays {
        delay = (delay / prop.sample_period).round() * prop.sample_period;
    }
    Some(PathSet::single(Path {
        delay,
        azimuth,
        elevation,
        gain: prop.los_gain(d),
    }))
}

/// Nonzero delay taps only, in increasing delay order.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseTaps {
    pub n_elements: usize,
    pub n_taps: usize,
    pub taps: Vec<(usize, Vec<Complex64>)>,
}

impl SparseTaps {
    pub fn to_dense(&self) -> Vec<Vec<Complex64>> {
        let mut out = vec![vec![Complex64::new(0.0, 0.0); self.n_elements]; self.n_taps];
        for (d, v) in &self.taps {
            out[*d].clone_from(v);
        }
        out
    }
}

/// Delay-domain channel, skipping taps where every pulse sample is zero.
pub fn sparse_delay_taps(ps: &PathSet, arr: &ArraySpec, spec: &OfdmSpec) -> SparseTaps {
    let mut acc: BTreeMap<usize, Vec<Complex64>> = BTreeMap::new();
    for path in &ps.paths {
        if path.gain == Complex64::new(0.0, 0.0) {
            continue;
        }
        let a = array_response(arr, path.azimuth, path.elevation);
        let offset = path.delay / spec.sample_period;
        for d in 0..spec.n_taps {
            let p = raised_cosine_normalized(d as f64 - offset, spec.rolloff);
            if p == 0.0 {
                continue;
            }
            let coef = path.gain * (ps.scale * p);
            let tap = acc
                .entry(d)
                .or_insert_with(|| vec![Complex64::new(0.0, 0.0); arr.n_elements]);
            for (t, ai) in tap.iter_mut().zip(&a) {
                *t += coef * ai;
            }
        }
    }
    SparseTaps {
        n_elements: arr.n_elements,
        n_taps: spec.n_taps,
        taps: acc.into_iter().collect(),
    }
}

/// Delay-domain channel `h_0 .. h_{D-1}`.
pub fn delay_taps(ps: &PathSet, arr: &ArraySpec, spec: &OfdmSpec) -> Vec<Vec<Complex64>> {
    sparse_delay_taps(ps, arr, spec).to_dense()
}

/// Per-subcarrier channel vectors `h_k`, `k = 0..K`.
#[derive(Debug, Clone, PartialEq)]
pub struct FreqChannel {
    pub subcarriers: Vec<Vec<Complex64>>,
}

impl FreqChannel {
    pub fn n_subcarriers(&self) -> usize {
        self.subcarriers.len()
    }

    pub fn n_elements(&self) -> usize {
        self.subcarriers.first().map_or(0, Vec::len)
    }
}

/// DFT of the tap sequence along delay, zero-padded to `K`.
pub fn freq_channel(taps: &[Vec<Complex64>], spec: &OfdmSpec) -> Result<FreqChannel> {
    let k = spec.n_subcarriers;
    if taps.len() > k {
        return Err(Error::domain(format!(
            "{} taps exceed {} subcarriers",
            taps.len(),
            k
        )));
    }
    let n = taps.first().map_or(0, Vec::len);
    if taps.iter().any(|t| t.len() != n) {
        return Err(Error::domain("taps have inconsistent element counts"));
    }
    let fft = FftPlanner::<f64>::new().plan_fft_forward(k);
    let mut out = vec![vec![Complex64::new(0.0, 0.0); n]; k];
    let mut buf = vec![Complex64::new(0.0, 0.0); k];
    for m in 0..n {
        buf.fill(Complex64::new(0.0, 0.0));
        for (d, t) in taps.iter().enumerate() {
            buf[d] = t[m];
        }
        fft.process(&mut buf);
        for (row, v) in out.iter_mut().zip(&buf) {
            row[m] = *v;
        }
    }
    Ok(FreqChannel { subcarriers: out })
}
