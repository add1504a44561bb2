//! Transmit/receive signal model: array responses, the DFT beamformer, pulse
//! correlation and path gains.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::geometry::{path_geometry, PathId, Point, Scenario};
use crate::{Error, Result};

/// Converts a power level in dBm to watts (or dBm/Hz to W/Hz).
pub fn dbm_to_watts(dbm: f64) -> f64 {
    1e-3 * 10f64.powf(dbm / 10.0)
}

pub fn watts_to_dbm(watts: f64) -> f64 {
    10.0 * (watts / 1e-3).log10()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SignalConfig {
    pub carrier_hz: f64,
    pub bandwidth_hz: f64,
    /// Pilot symbols per beam.
    pub n_symbols: usize,
    pub symbol_time_s: f64,
    /// Energy per symbol (J).
    pub symbol_energy_j: f64,
    /// Noise power spectral density (W/Hz).
    pub noise_psd: f64,
    pub n_beams: usize,
}

impl SignalConfig {
    /// 38 GHz carrier, 125 MHz sinc pulse, 16 pilots per beam, 50 beams,
    /// `E_s/T_s = 0 dBm` with `T_s = 1/B`, `N_0 = -170 dBm/Hz`.
    pub fn reference_38ghz() -> Self {
        let bandwidth_hz = 125e6;
        let symbol_time_s = 1.0 / bandwidth_hz;
        Self {
            carrier_hz: 38e9,
            bandwidth_hz,
            n_symbols: 16,
            symbol_time_s,
            symbol_energy_j: dbm_to_watts(0.0) * symbol_time_s,
            noise_psd: dbm_to_watts(-170.0),
            n_beams: 50,
        }
    }

    pub fn wavelength(&self, speed_of_light: f64) -> f64 {
        speed_of_light / self.carrier_hz
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("carrier frequency", self.carrier_hz),
            ("bandwidth", self.bandwidth_hz),
            ("symbol time", self.symbol_time_s),
            ("noise PSD", self.noise_psd),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidInput(format!("{name} must be positive, got {v}")));
            }
        }
        if !(self.symbol_energy_j >= 0.0 && self.symbol_energy_j.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "symbol energy must be non-negative, got {}",
                self.symbol_energy_j
            )));
        }
        if self.n_symbols == 0 || self.n_beams == 0 {
            return Err(Error::InvalidInput(
                "need at least one beam and one pilot symbol".into(),
            ));
        }
        Ok(())
    }
}

fn wavevector(theta: f64, wavelength: f64) -> Point {
    let k = 2.0 * PI / wavelength;
    Point::new(k * theta.cos(), k * theta.sin())
}

/// Unit-norm narrowband array response toward `theta` (rad, array frame).
pub fn array_response(offsets: &[Point], theta: f64, wavelength: f64) -> DVector<Complex64> {
    let k = wavevector(theta, wavelength);
    let scale = 1.0 / (offsets.len() as f64).sqrt();
    DVector::from_iterator(
        offsets.len(),
        offsets.iter().map(|u| Complex64::from_polar(scale, -u.dot(&k))),
    )
}

/// Derivative of [`array_response`] with respect to `theta`.
pub fn array_response_derivative(offsets: &[Point], theta: f64, wavelength: f64) -> DVector<Complex64> {
    let dk = 2.0 * PI / wavelength * Point::new(-theta.sin(), theta.cos());
    let a = array_response(offsets, theta, wavelength);
    DVector::from_iterator(
        offsets.len(),
        offsets
            .iter()
            .zip(a.iter())
            .map(|(u, an)| Complex64::new(0.0, -u.dot(&dk)) * an),
    )
}

/// Largest distance between two elements of an array.
pub fn aperture(offsets: &[Point]) -> f64 {
    let mut best: f64 = 0.0;
    for (i, a) in offsets.iter().enumerate() {
        for b in &offsets[i + 1..] {
            best = best.max((a - b).norm());
        }
    }
    best
}

/// Returns `false` (and logs a warning) when the array aperture is not small
/// compared with `c / B`.
pub fn check_narrowband(offsets: &[Point], bandwidth_hz: f64, speed_of_light: f64) -> bool {
    let a = aperture(offsets);
    let limit = speed_of_light / bandwidth_hz;
    if a >= limit {
        log::warn!("array aperture {a:.3} m is not small against c/B = {limit:.3} m; narrowband model is inaccurate");
        return false;
    }
    true
}

#[derive(Debug, Clone, PartialEq)]
pub struct Beamformer {
    pub beam_angles: Vec<f64>,
    /// `N_TX x N_B` precoder; column `l` points toward `beam_angles[l]`.
    pub matrix: DMatrix<Complex64>,
}

impl Beamformer {
    pub fn n_beams(&self) -> usize {
        self.beam_angles.len()
    }

    /// `tr(F^H F)`.
    pub fn power(&self) -> f64 {
        self.matrix.iter().map(|z| z.norm_sqr()).sum()
    }
}

/// `n_beams` beams uniformly spaced over `[0, pi)`, each scaled by
/// `1/sqrt(n_beams)` so that `tr(F^H F) = 1`.
pub fn dft_beamformer(n_beams: usize, wavelength: f64, offsets: &[Point]) -> Result<Beamformer> {
    if n_beams == 0 {
        return Err(Error::InvalidInput("beamformer needs at least one beam".into()));
    }
    let beam_angles: Vec<f64> = (0..n_beams).map(|l| l as f64 * PI / n_beams as f64).collect();
    let scale = 1.0 / (n_beams as f64).sqrt();
    let mut matrix = DMatrix::zeros(offsets.len(), n_beams);
    for (l, &theta) in beam_angles.iter().enumerate() {
        matrix.set_column(
            l,
            &(array_response(offsets, theta, wavelength) * Complex64::from(scale)),
        );
    }
    Ok(Beamformer { beam_angles, matrix })
}

/// Spectral moments of a unit-energy pulse.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PulseMoments {
    /// `int |p(t)|^2 dt`.
    pub energy: f64,
    /// Mean-square bandwidth `int |p'(t)|^2 dt` (rad^2/s^2).
    pub msb: f64,
    /// `int p'(t) p*(t) dt`.
    pub cross: f64,
}

/// Moments of the ideal sinc pulse with a flat spectrum on `[-B/2, B/2]`.
pub fn sinc_pulse_moments(bandwidth_hz: f64) -> Result<PulseMoments> {
    if !(bandwidth_hz > 0.0) {
        return Err(Error::InvalidInput("bandwidth must be positive".into()));
    }
    Ok(PulseMoments {
        energy: 1.0,
        msb: PI * PI * bandwidth_hz * bandwidth_hz / 3.0,
        cross: 0.0,
    })
}

/// Delay spreads beyond this many `1/B` are treated as non-overlapping.
pub const SINC_OVERLAP_CUTOFF: f64 = 40.0;

/// Autocorrelation `r(d) = int p(t) p(t + d) dt = sinc(B d)` of the unit-energy
/// sinc pulse and its first two derivatives in `d`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SincPulse {
    pub bandwidth_hz: f64,
}

impl SincPulse {
    pub fn new(bandwidth_hz: f64) -> Self {
        Self { bandwidth_hz }
    }

    /// `(r, r', r'')` at lag `delta` (s).
    pub fn autocorrelation(&self, delta: f64) -> (f64, f64, f64) {
        let b = self.bandwidth_hz;
        let x = b * delta;
        if x.abs() > SINC_OVERLAP_CUTOFF {
            return (0.0, 0.0, 0.0);
        }
        let (s, ds, dds) = normalized_sinc_derivatives(x);
        (s, b * ds, b * b * dds)
    }

    /// `int p^(a)(t) p^(b)(t + delta) dt` for derivative orders `a, b` in `{0, 1}`.
    pub fn overlap(&self, a: u8, b: u8, delta: f64) -> f64 {
        let (r, dr, ddr) = self.autocorrelation(delta);
        match (a, b) {
            (0, 0) => r,
            (0, 1) => dr,
            (1, 0) => -dr,
            (1, 1) => -ddr,
            _ => unreachable!("only first derivatives of the pulse are needed"),
        }
    }
}

/// `sin(pi x)/(pi x)` and its first two derivatives.
fn normalized_sinc_derivatives(x: f64) -> (f64, f64, f64) {
    let px = PI * x;
    if x.abs() < 1e-3 {
        let p2 = PI * PI;
        let x2 = x * x;
        let s = 1.0 - p2 * x2 / 6.0 + p2 * p2 * x2 * x2 / 120.0;
        let ds = -p2 * x / 3.0 + p2 * p2 * x * x2 / 30.0;
        let dds = -p2 / 3.0 + p2 * p2 * x2 / 10.0;
        return (s, ds, dds);
    }
    let (sin, cos) = px.sin_cos();
    let s = sin / px;
    let ds = (px * cos - sin) / (PI * x * x);
    // x s'' + 2 s' + pi^2 x s = 0
    let dds = -PI * PI * s - 2.0 * ds / x;
    (s, ds, dds)
}

/// Free-space gain of `path`: `|h_0|^2 = (lambda/4pi)^2 / ||p - q||^2` for LOS
/// and `|h_k|^2 = (lambda/4pi)^2 Gamma_R / (||q - s_k|| + ||p - s_k||)^2`.
pub fn path_gain(
    scenario: &Scenario,
    path: PathId,
    wavelength: f64,
    reflection_gain: f64,
    phase: f64,
) -> Result<Complex64> {
    let g = path_geometry(scenario, path)?;
    let base = wavelength / (4.0 * PI);
    let power = match path {
        PathId::Los => base * base / (g.dist_tx * g.dist_tx),
        PathId::Nlos(_) => {
            let len = g.dist_tx + g.dist_rx;
            base * base * reflection_gain / (len * len)
        }
    };
    Ok(Complex64::from_polar(power.sqrt(), phase))
}
