//! TOML scenario files.
//!
//! Units: positions and spacings in metres, angles in radians, frequencies
//! in hertz, time in seconds. The pilot energy is given either as the symbol
//! power `E_s / T_s` in dBm or as the symbol energy in joules; the noise PSD
//! either in dBm/Hz or in W/Hz. dBm values are converted once, here.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use nlos_bounds::bounds::{AxisRange, SweepGrid};
use nlos_bounds::geometry::{ula_offsets, Anchor, Mobile, Point, Scenario};
use nlos_bounds::pipeline::{Evaluator, Mode};
use nlos_bounds::signal::{dbm_to_watts, SignalConfig};
use nlos_bounds::SPEED_OF_LIGHT;

use crate::error::{CliError, Location, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    /// Seed of the path phases.
    #[serde(default)]
    pub seed: u64,
    /// Amplitude reflection coefficient of every NLOS path.
    #[serde(default = "default_reflection_gain")]
    pub reflection_gain: f64,
    /// m/s
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub speed_of_light: Option<f64>,
    pub anchor: NodeSpec,
    pub mobile: NodeSpec,
    #[serde(default)]
    pub paths: PathsSpec,
    #[serde(default)]
    pub signal: SignalSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSpec>,
}

fn default_reflection_gain() -> f64 {
    0.7
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NodeSpec {
    /// Array centroid, m.
    pub position: [f64; 2],
    pub orientation_rad: f64,
    pub array: ArraySpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ArraySpec {
    /// Uniform linear array along the local x axis; half-wavelength spacing
    /// unless `spacing_m` is set.
    Ula {
        elements: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        spacing_m: Option<f64>,
    },
    /// Element offsets in the local frame, m. Must be centred.
    Offsets { offsets_m: Vec<[f64; 2]> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PathsSpec {
    #[serde(default = "default_true")]
    pub los: bool,
    /// Single-bounce points of incidence, m.
    #[serde(default)]
    pub incidence_points: Vec<[f64; 2]>,
}

fn default_true() -> bool {
    true
}

impl Default for PathsSpec {
    fn default() -> Self {
        Self {
            los: true,
            incidence_points: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SignalSpec {
    pub carrier_hz: f64,
    pub bandwidth_hz: f64,
    pub n_symbols: usize,
    pub n_beams: usize,
    /// Defaults to `1 / bandwidth_hz`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub symbol_time_s: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub symbol_power_dbm: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub symbol_energy_j: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise_psd_dbm_hz: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise_psd_w_hz: Option<f64>,
}

impl Default for SignalSpec {
    /// 38 GHz, 125 MHz, 16 symbols, 50 beams, 0 dBm, -170 dBm/Hz.
    fn default() -> Self {
        Self {
            carrier_hz: 38e9,
            bandwidth_hz: 125e6,
            n_symbols: 16,
            n_beams: 50,
            symbol_time_s: None,
            symbol_power_dbm: None,
            symbol_energy_j: None,
            noise_psd_dbm_hz: None,
            noise_psd_w_hz: None,
        }
    }
}

const DEFAULT_SYMBOL_POWER_DBM: f64 = 0.0;
const DEFAULT_NOISE_PSD_DBM_HZ: f64 = -170.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    /// `[min, max]` of the moving incidence point, m.
    #[serde(default = "default_range")]
    pub x: [f64; 2],
    #[serde(default = "default_range")]
    pub y: [f64; 2],
    /// Points per axis.
    #[serde(default = "default_points")]
    pub n: usize,
}

fn default_range() -> [f64; 2] {
    [0.2, 10.0]
}

fn default_points() -> usize {
    50
}

impl Default for SweepSpec {
    fn default() -> Self {
        Self {
            x: default_range(),
            y: default_range(),
            n: default_points(),
        }
    }
}

impl SweepSpec {
    pub fn grid(&self) -> nlos_bounds::Result<SweepGrid> {
        Ok(SweepGrid {
            x: AxisRange::new(self.x[0], self.x[1], self.n)?,
            y: AxisRange::new(self.y[0], self.y[1], self.n)?,
        })
    }
}

/// 1-based line and column of byte `offset` in `text`.
fn line_col(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let column = before.rfind('\n').map_or(before.len(), |i| before.len() - i - 1) + 1;
    (line, column)
}

/// Line of the first `key = ...` assignment, for errors found after parsing.
fn key_line(text: &str, key: &str) -> Option<usize> {
    text.lines()
        .position(|l| {
            l.trim_start()
                .strip_prefix(key)
                .is_some_and(|rest| rest.trim_start().starts_with('='))
        })
        .map(|i| i + 1)
}

impl ScenarioFile {
    pub fn parse(text: &str, path: &Path) -> Result<Self> {
        let file: Self = toml::from_str(text).map_err(|e| {
            let (line, column) = e.span().map(|s| line_col(text, s.start)).unzip();
            CliError::Parse {
                location: Location {
                    path: path.to_path_buf(),
                    line,
                    column,
                },
                message: e.message().trim().to_string(),
            }
        })?;
        file.check().map_err(|(key, message)| CliError::Parse {
            location: Location {
                path: path.to_path_buf(),
                line: key_line(text, key),
                column: None,
            },
            message,
        })?;
        Ok(file)
    }

    pub fn load(path: &Path) -> Result<(Self, Vec<u8>)> {
        let bytes = std::fs::read(path).map_err(|e| CliError::io(path, e))?;
        let text = std::str::from_utf8(&bytes).map_err(|e| CliError::Parse {
            location: Location {
                path: path.to_path_buf(),
                line: None,
                column: None,
            },
            message: format!("not UTF-8: {e}"),
        })?;
        Ok((Self::parse(text, path)?, bytes))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scenario files always serialise")
    }

    /// Schema checks serde cannot express; the error names the offending key.
    fn check(&self) -> std::result::Result<(), (&'static str, String)> {
        let s = &self.signal;
        if s.symbol_power_dbm.is_some() && s.symbol_energy_j.is_some() {
            return Err((
                "symbol_energy_j",
                "give either signal.symbol_power_dbm or signal.symbol_energy_j, not both".into(),
            ));
        }
        if s.noise_psd_dbm_hz.is_some() && s.noise_psd_w_hz.is_some() {
            return Err((
                "noise_psd_w_hz",
                "give either signal.noise_psd_dbm_hz or signal.noise_psd_w_hz, not both".into(),
            ));
        }
        for (key, v) in [
            ("carrier_hz", Some(s.carrier_hz)),
            ("bandwidth_hz", Some(s.bandwidth_hz)),
            ("symbol_time_s", s.symbol_time_s),
            ("symbol_energy_j", s.symbol_energy_j),
            ("noise_psd_w_hz", s.noise_psd_w_hz),
            ("speed_of_light", self.speed_of_light),
        ] {
            if let Some(v) = v {
                if !(v > 0.0 && v.is_finite()) {
                    return Err((key, format!("{key} must be positive and finite, got {v}")));
                }
            }
        }
        if !(self.reflection_gain > 0.0 && self.reflection_gain.is_finite()) {
            return Err((
                "reflection_gain",
                format!("reflection_gain must be positive, got {}", self.reflection_gain),
            ));
        }
        for (name, node) in [("anchor", &self.anchor), ("mobile", &self.mobile)] {
            match &node.array {
                ArraySpec::Ula { elements: 0, .. } => {
                    return Err(("elements", format!("{name} array needs at least one element")))
                }
                ArraySpec::Ula { spacing_m: Some(d), .. } if !(*d > 0.0 && d.is_finite()) => {
                    return Err(("spacing_m", format!("{name} array spacing must be positive, got {d}")))
                }
                _ => {}
            }
        }
        Ok(())
    }

    pub fn speed_of_light(&self) -> f64 {
        self.speed_of_light.unwrap_or(SPEED_OF_LIGHT)
    }

    pub fn signal_config(&self) -> nlos_bounds::Result<SignalConfig> {
        let s = &self.signal;
        let symbol_time_s = s.symbol_time_s.unwrap_or(1.0 / s.bandwidth_hz);
        let symbol_energy_j = match s.symbol_energy_j {
            Some(e) => e,
            None => dbm_to_watts(s.symbol_power_dbm.unwrap_or(DEFAULT_SYMBOL_POWER_DBM)) * symbol_time_s,
        };
        let noise_psd = match s.noise_psd_w_hz {
            Some(n) => n,
            None => dbm_to_watts(s.noise_psd_dbm_hz.unwrap_or(DEFAULT_NOISE_PSD_DBM_HZ)),
        };
        let config = SignalConfig {
            carrier_hz: s.carrier_hz,
            bandwidth_hz: s.bandwidth_hz,
            n_symbols: s.n_symbols,
            symbol_time_s,
            symbol_energy_j,
            noise_psd,
            n_beams: s.n_beams,
        };
        config.validate()?;
        Ok(config)
    }

    fn offsets(&self, array: &ArraySpec) -> Vec<Point> {
        match array {
            ArraySpec::Ula { elements, spacing_m } => {
                let half = self.speed_of_light() / self.signal.carrier_hz / 2.0;
                ula_offsets(*elements, spacing_m.unwrap_or(half))
            }
            ArraySpec::Offsets { offsets_m } => offsets_m.iter().map(|o| Point::new(o[0], o[1])).collect(),
        }
    }

    pub fn scenario(&self) -> nlos_bounds::Result<Scenario> {
        let point = |p: &[f64; 2]| Point::new(p[0], p[1]);
        Scenario::new(
            Anchor::new(
                point(&self.anchor.position),
                self.anchor.orientation_rad,
                self.offsets(&self.anchor.array),
            )?,
            Mobile::new(
                point(&self.mobile.position),
                self.mobile.orientation_rad,
                self.offsets(&self.mobile.array),
            )?,
            self.paths.incidence_points.iter().map(point).collect(),
            self.paths.los,
        )
    }

    pub fn evaluator(&self, mode: Mode) -> nlos_bounds::Result<Evaluator> {
        Ok(Evaluator {
            config: self.signal_config()?,
            reflection_gain: self.reflection_gain,
            speed_of_light: self.speed_of_light(),
            mode,
            seed: self.seed,
        })
    }

    /// Replaces the anchor array by an `n`-element ULA, keeping a custom
    /// spacing if one was set.
    pub fn set_anchor_elements(&mut self, n: usize) {
        let spacing_m = match self.anchor.array {
            ArraySpec::Ula { spacing_m, .. } => spacing_m,
            ArraySpec::Offsets { .. } => None,
        };
        self.anchor.array = ArraySpec::Ula { elements: n, spacing_m };
    }
}

/// Resolved input of one run.
#[derive(Debug, Clone)]
pub struct LoadedScenario {
    pub path: PathBuf,
    pub file: ScenarioFile,
    pub bytes: Vec<u8>,
}

impl LoadedScenario {
    pub fn load(path: &Path) -> Result<Self> {
        let (file, bytes) = ScenarioFile::load(path)?;
        Ok(Self {
            path: path.to_path_buf(),
            file,
            bytes,
        })
    }
}
