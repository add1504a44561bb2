//! End-to-end evaluation of a scenario: channel parameters, channel FIM,
//! per-path information, EFIM decomposition and bounds.

use nalgebra::Matrix3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::bounds::{bounds_with_terms, relative_reduction, BoundReport};
use crate::channel_fim::{
    fim_channel_exact, fim_channel_simplified, per_path_infos, reorder_by_path, schur_efim, simplify_fim, ChannelParam,
    PathInfo, SingularPolicy,
};
use crate::efim::{decompose, fim_position_domain, EfimDecomposition};
use crate::geometry::{channel_params_from_geometry, transformation_matrix, Normalization, PathParams, Scenario};
use crate::signal::{check_narrowband, dft_beamformer, path_gain, SignalConfig};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Mode {
    /// Exact channel FIM, simplified, then the dense position-domain Schur
    /// complement.
    #[default]
    Full,
    /// Per-path FIM blocks only, summed through the closed-form rank-one terms.
    Fast,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Evaluator {
    pub config: SignalConfig,
    pub reflection_gain: f64,
    pub speed_of_light: f64,
    pub mode: Mode,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub params: Vec<PathParams>,
    pub infos: Vec<PathInfo>,
    pub decomposition: EfimDecomposition,
    /// EFIM used for the bounds: the dense Schur complement in full mode,
    /// the closed-form sum in fast mode.
    pub efim: Matrix3<f64>,
    pub report: BoundReport,
    /// A nuisance block had to be pseudo-inverted (full mode only).
    pub pseudo_inverse: bool,
}

impl Evaluator {
    /// Reference setup: 38 GHz, `Gamma_R = 0.7`, full mode, seed 0.
    pub fn reference() -> Self {
        Self {
            config: SignalConfig::reference_38ghz(),
            reflection_gain: 0.7,
            speed_of_light: crate::SPEED_OF_LIGHT,
            mode: Mode::Full,
            seed: 0,
        }
    }

    pub fn with_mode(mut self, mode: Mode) -> Self {
        self.mode = mode;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    /// `n` phases uniform on `[0, 2 pi)` from stream `stream` of the seed.
    pub fn phases(&self, stream: u64, n: usize) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(stream);
        (0..n).map(|_| rng.random_range(0.0..std::f64::consts::TAU)).collect()
    }

    pub fn path_params(&self, scenario: &Scenario, phases: &[f64]) -> Result<Vec<PathParams>> {
        if phases.len() != scenario.n_paths() {
            return Err(Error::InvalidInput(format!(
                "{} phases for {} paths",
                phases.len(),
                scenario.n_paths()
            )));
        }
        let wavelength = self.config.wavelength(self.speed_of_light);
        scenario
            .paths()
            .into_iter()
            .zip(phases)
            .map(|(path, &phase)| {
                let mut params = channel_params_from_geometry(scenario, path, self.speed_of_light)?;
                params.gain = Some(path_gain(scenario, path, wavelength, self.reflection_gain, phase)?);
                Ok(params)
            })
            .collect()
    }

    /// Evaluates `scenario` with path phases drawn from stream 0.
    pub fn evaluate(&self, scenario: &Scenario) -> Result<Evaluation> {
        self.evaluate_with_phases(scenario, &self.phases(0, scenario.n_paths()))
    }

    pub fn evaluate_with_phases(&self, scenario: &Scenario, phases: &[f64]) -> Result<Evaluation> {
        scenario.validate()?;
        self.config.validate()?;
        let c = self.speed_of_light;
        let wavelength = self.config.wavelength(c);
        check_narrowband(&scenario.anchor.offsets, self.config.bandwidth_hz, c);
        check_narrowband(&scenario.mobile.offsets, self.config.bandwidth_hz, c);
        let beamformer = dft_beamformer(self.config.n_beams, wavelength, &scenario.anchor.offsets)?;
        let params = self.path_params(scenario, phases)?;

        let simplified = match self.mode {
            Mode::Full => {
                let exact = fim_channel_exact(scenario, &self.config, &beamformer, &params, c)?;
                simplify_fim(&exact)?
            }
            Mode::Fast => fim_channel_simplified(scenario, &self.config, &beamformer, &params, c)?,
        };
        let reordered = reorder_by_path(&simplified)?;
        let infos = per_path_infos(&reordered)?;
        let decomposition = decompose(scenario, &infos, c)?;

        let (efim, pseudo_inverse) = match self.mode {
            Mode::Fast => (decomposition.efim, false),
            Mode::Full => {
                // marginalise the gains of every path, then the incidence points
                let keep: Vec<usize> = (0..reordered.n_paths)
                    .flat_map(|k| {
                        [ChannelParam::Toa, ChannelParam::Aod, ChannelParam::Aoa].map(|p| reordered.index(p, k))
                    })
                    .collect();
                let path_info = schur_efim(&reordered.matrix, &keep, SingularPolicy::PseudoInverse)?;
                let t = transformation_matrix(scenario, c, Normalization::default())?;
                let position = fim_position_domain(&path_info.matrix, &t)?;
                let efim = schur_efim(&position, &[0, 1, 2], SingularPolicy::PseudoInverse)?;
                let m = Matrix3::from_iterator(efim.matrix.iter().copied());
                (m, path_info.pseudo_inverse || efim.pseudo_inverse)
            }
        };
        if pseudo_inverse {
            log::warn!("singular nuisance block, pseudo-inverse used");
        }
        let report = bounds_with_terms(&efim, decomposition.terms());
        Ok(Evaluation {
            params,
            infos,
            decomposition,
            efim,
            report,
            pseudo_inverse,
        })
    }

    /// Relative PEB reduction from `base` to `augmented`, both evaluated with
    /// stream-0 phases.
    pub fn delta_peb(&self, base: &Scenario, augmented: &Scenario) -> Result<f64> {
        let b = self.evaluate(base)?;
        let a = self.evaluate(augmented)?;
        Ok(relative_reduction(b.report.peb, a.report.peb))
    }
}
