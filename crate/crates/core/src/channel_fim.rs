//! Fisher information of the channel parameters
//! `eta = [theta_rx, theta_tx, tau, h_re, h_im]` (each a K-vector), its
//! large-array simplification, the per-path reordering, and the per-path
//! information terms obtained after marginalising the complex gain.
//!
//! The pilot expectation is taken analytically: IID unit-energy pilots make
//! every cross-beam and cross-symbol term vanish, so each FIM entry reduces to
//! array inner products, the beamformer Gram matrix and one pulse overlap
//! `int p^(a)(t) p^(b)(t + tau_u - tau_v) dt`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::geometry::{PathParams, Scenario};
use crate::signal::{array_response, array_response_derivative, Beamformer, SignalConfig, SincPulse};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ChannelParam {
    Aoa,
    Aod,
    Toa,
    GainRe,
    GainIm,
}

impl ChannelParam {
    /// Block order of the parameter-grouped FIM.
    pub const BY_PARAMETER: [ChannelParam; 5] = [
        ChannelParam::Aoa,
        ChannelParam::Aod,
        ChannelParam::Toa,
        ChannelParam::GainRe,
        ChannelParam::GainIm,
    ];

    /// Order of the parameters inside one path block of the path-grouped FIM.
    pub const BY_PATH: [ChannelParam; 5] = [
        ChannelParam::Toa,
        ChannelParam::Aod,
        ChannelParam::GainRe,
        ChannelParam::GainIm,
        ChannelParam::Aoa,
    ];

    fn group(self) -> usize {
        Self::BY_PARAMETER.iter().position(|&p| p == self).unwrap()
    }

    fn slot(self) -> usize {
        Self::BY_PATH.iter().position(|&p| p == self).unwrap()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FimOrdering {
    /// `[theta_rx (K), theta_tx (K), tau (K), h_re (K), h_im (K)]`.
    ByParameter,
    /// `[tau_k, theta_tx_k, h_re_k, h_im_k, theta_rx_k]` for k = 0..K-1.
    ByPath,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelFim {
    pub matrix: DMatrix<f64>,
    pub ordering: FimOrdering,
    pub n_paths: usize,
}

impl ChannelFim {
    pub fn index(&self, param: ChannelParam, path: usize) -> usize {
        match self.ordering {
            FimOrdering::ByParameter => param.group() * self.n_paths + path,
            FimOrdering::ByPath => 5 * path + param.slot(),
        }
    }

    pub fn get(&self, a: (ChannelParam, usize), b: (ChannelParam, usize)) -> f64 {
        self.matrix[(self.index(a.0, a.1), self.index(b.0, b.1))]
    }

    fn require(&self, ordering: FimOrdering) -> Result<()> {
        if self.ordering != ordering {
            return Err(Error::InvalidInput(format!(
                "expected a {ordering:?} FIM, got {:?}",
                self.ordering
            )));
        }
        Ok(())
    }
}

/// Derivative of the noise-free observation w.r.t. one channel parameter,
/// factored as `coeff * rx * (tx^H F s^(order)(t - tau))`.
struct Derivative {
    coeff: Complex64,
    rx: DVector<Complex64>,
    /// `F^H tx`.
    beam_proj: DVector<Complex64>,
    order: u8,
    tau: f64,
}

struct PathVectors {
    gain: Complex64,
    tau: f64,
    a_rx: DVector<Complex64>,
    da_rx: DVector<Complex64>,
    proj_tx: DVector<Complex64>,
    dproj_tx: DVector<Complex64>,
}

struct FimContext {
    paths: Vec<PathVectors>,
    pulse: SincPulse,
    scale: f64,
}

impl FimContext {
    fn new(
        scenario: &Scenario,
        config: &SignalConfig,
        beamformer: &Beamformer,
        params: &[PathParams],
        speed_of_light: f64,
    ) -> Result<Self> {
        config.validate()?;
        if params.is_empty() {
            return Err(Error::InvalidInput("FIM needs at least one path".into()));
        }
        if params.len() != scenario.n_paths() {
            return Err(Error::InvalidInput(format!(
                "{} path parameter sets for a scenario with {} paths",
                params.len(),
                scenario.n_paths()
            )));
        }
        let n_tx = scenario.anchor.n_elements();
        if beamformer.matrix.nrows() != n_tx {
            return Err(Error::InvalidInput(format!(
                "beamformer has {} rows but the anchor has {n_tx} elements",
                beamformer.matrix.nrows()
            )));
        }
        let wavelength = config.wavelength(speed_of_light);
        let f_adj = beamformer.matrix.adjoint();
        let paths = params
            .iter()
            .enumerate()
            .map(|(k, pp)| {
                let gain = pp
                    .gain
                    .ok_or_else(|| Error::InvalidInput(format!("gain of path {k} is not set")))?;
                let rx = &scenario.mobile.offsets;
                let tx = &scenario.anchor.offsets;
                Ok(PathVectors {
                    gain,
                    tau: pp.tau,
                    a_rx: array_response(rx, pp.theta_rx, wavelength),
                    da_rx: array_response_derivative(rx, pp.theta_rx, wavelength),
                    proj_tx: &f_adj * array_response(tx, pp.theta_tx, wavelength),
                    dproj_tx: &f_adj * array_response_derivative(tx, pp.theta_tx, wavelength),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let n_rx = scenario.mobile.n_elements() as f64;
        let scale = config.symbol_energy_j / config.noise_psd * n_rx * n_tx as f64 * config.n_symbols as f64;
        Ok(Self {
            paths,
            pulse: SincPulse::new(config.bandwidth_hz),
            scale,
        })
    }

    fn derivative(&self, param: ChannelParam, k: usize) -> Derivative {
        let p = &self.paths[k];
        let (coeff, rx, beam_proj, order) = match param {
            ChannelParam::Aoa => (p.gain, &p.da_rx, &p.proj_tx, 0),
            ChannelParam::Aod => (p.gain, &p.a_rx, &p.dproj_tx, 0),
            ChannelParam::Toa => (-p.gain, &p.a_rx, &p.proj_tx, 1),
            ChannelParam::GainRe => (Complex64::new(1.0, 0.0), &p.a_rx, &p.proj_tx, 0),
            ChannelParam::GainIm => (Complex64::new(0.0, 1.0), &p.a_rx, &p.proj_tx, 0),
        };
        Derivative {
            coeff,
            rx: rx.clone(),
            beam_proj: beam_proj.clone(),
            order,
            tau: p.tau,
        }
    }

    fn entry(&self, u: &Derivative, v: &Derivative) -> f64 {
        let overlap = self.pulse.overlap(u.order, v.order, u.tau - v.tau);
        if overlap == 0.0 {
            return 0.0;
        }
        let z = u.coeff.conj() * v.coeff * u.rx.dotc(&v.rx) * v.beam_proj.dotc(&u.beam_proj);
        self.scale * z.re * overlap
    }

    fn fill(&self, keep: impl Fn(usize, usize, usize, usize) -> bool) -> ChannelFim {
        let k = self.paths.len();
        let derivs: Vec<Derivative> = ChannelParam::BY_PARAMETER
            .iter()
            .flat_map(|&param| (0..k).map(move |path| (param, path)))
            .map(|(param, path)| self.derivative(param, path))
            .collect();
        let n = 5 * k;
        let mut matrix = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in i..n {
                if keep(i / k, i % k, j / k, j % k) {
                    let value = self.entry(&derivs[i], &derivs[j]);
                    matrix[(i, j)] = value;
                    matrix[(j, i)] = value;
                }
            }
        }
        ChannelFim {
            matrix,
            ordering: FimOrdering::ByParameter,
            n_paths: k,
        }
    }
}

/// Full `5K x 5K` FIM of the channel parameters, parameter-grouped.
pub fn fim_channel_exact(
    scenario: &Scenario,
    config: &SignalConfig,
    beamformer: &Beamformer,
    params: &[PathParams],
    speed_of_light: f64,
) -> Result<ChannelFim> {
    let ctx = FimContext::new(scenario, config, beamformer, params, speed_of_light)?;
    Ok(ctx.fill(|_, _, _, _| true))
}

fn kept_by_simplification(group_a: usize, path_a: usize, group_b: usize, path_b: usize) -> bool {
    if path_a != path_b {
        return false;
    }
    if group_a == group_b {
        return true;
    }
    let aod = ChannelParam::Aod.group();
    let gains = [ChannelParam::GainRe.group(), ChannelParam::GainIm.group()];
    (group_a == aod && gains.contains(&group_b)) || (group_b == aod && gains.contains(&group_a))
}

/// Computes only the entries that survive [`simplify_fim`]. Equal to
/// `simplify_fim(fim_channel_exact(..))` at `O(K)` cost.
pub fn fim_channel_simplified(
    scenario: &Scenario,
    config: &SignalConfig,
    beamformer: &Beamformer,
    params: &[PathParams],
    speed_of_light: f64,
) -> Result<ChannelFim> {
    let ctx = FimContext::new(scenario, config, beamformer, params, speed_of_light)?;
    Ok(ctx.fill(kept_by_simplification))
}

/// Large-array, large-bandwidth approximation: every diagonal block is
/// reduced to its diagonal and only the AOD/gain coupling of each path
/// survives off the block diagonal.
pub fn simplify_fim(fim: &ChannelFim) -> Result<ChannelFim> {
    fim.require(FimOrdering::ByParameter)?;
    let k = fim.n_paths;
    let n = 5 * k;
    let mut matrix = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            if kept_by_simplification(i / k, i % k, j / k, j % k) {
                matrix[(i, j)] = 0.5 * (fim.matrix[(i, j)] + fim.matrix[(j, i)]);
            }
        }
    }
    Ok(ChannelFim {
        matrix,
        ordering: FimOrdering::ByParameter,
        n_paths: k,
    })
}

/// Row `i` of the permutation holds a one at the parameter-grouped index of
/// the `i`-th path-grouped parameter.
pub fn path_permutation(n_paths: usize) -> Vec<usize> {
    (0..n_paths)
        .flat_map(|k| ChannelParam::BY_PATH.iter().map(move |p| p.group() * n_paths + k))
        .collect()
}

pub fn permutation_matrix(n_paths: usize) -> DMatrix<f64> {
    let perm = path_permutation(n_paths);
    let n = perm.len();
    let mut p = DMatrix::zeros(n, n);
    for (row, &col) in perm.iter().enumerate() {
        p[(row, col)] = 1.0;
    }
    p
}

/// `P J P^T`, regrouping the parameters path by path.
pub fn reorder_by_path(fim: &ChannelFim) -> Result<ChannelFim> {
    fim.require(FimOrdering::ByParameter)?;
    let perm = path_permutation(fim.n_paths);
    let n = perm.len();
    let matrix = DMatrix::from_fn(n, n, |i, j| fim.matrix[(perm[i], perm[j])]);
    Ok(ChannelFim {
        matrix,
        ordering: FimOrdering::ByPath,
        n_paths: fim.n_paths,
    })
}

/// Per-path information terms, stored as variances (`1 / information`).
/// A variance of `+inf` means the parameter carries no information.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathInfo {
    /// `sigma^2_tau` (s^2).
    pub sigma2_tau: f64,
    /// AOD variance before marginalising the gain (rad^2).
    pub sigma2_aod_raw: f64,
    /// AOD variance after marginalising the gain (rad^2).
    pub sigma2_aod: f64,
    /// `sigma^2_theta_rx` (rad^2).
    pub sigma2_aoa: f64,
    pub b_r: f64,
    pub b_i: f64,
    pub sigma2_hr: f64,
    pub sigma2_hi: f64,
    /// False when gain marginalisation leaves no AOD information.
    pub aod_estimable: bool,
}

impl PathInfo {
    /// Path information with no AOD/gain coupling.
    pub fn from_variances(sigma2_tau: f64, sigma2_aod: f64, sigma2_aoa: f64) -> Self {
        Self {
            sigma2_tau,
            sigma2_aod_raw: sigma2_aod,
            sigma2_aod,
            sigma2_aoa,
            b_r: 0.0,
            b_i: 0.0,
            sigma2_hr: 1.0,
            sigma2_hi: 1.0,
            aod_estimable: sigma2_aod.is_finite(),
        }
    }

    pub fn info_tau(&self) -> f64 {
        self.sigma2_tau.recip()
    }

    pub fn info_aod(&self) -> f64 {
        self.sigma2_aod.recip()
    }

    pub fn info_aoa(&self) -> f64 {
        self.sigma2_aoa.recip()
    }

    /// `diag(1/sigma^2_tau, 1/sigma^2_aod, 1/sigma^2_aoa)`: the information of
    /// `[tau, theta_tx, theta_rx]` after gain marginalisation.
    pub fn jbar(&self) -> nalgebra::Matrix3<f64> {
        nalgebra::Matrix3::from_diagonal(&nalgebra::Vector3::new(
            self.info_tau(),
            self.info_aod(),
            self.info_aoa(),
        ))
    }
}

/// Relative threshold below which the marginal AOD information is treated as
/// zero.
const AOD_INFO_RTOL: f64 = 1e-12;

/// Reads path `k` out of a path-grouped simplified FIM.
pub fn per_path_info(fim: &ChannelFim, k: usize) -> Result<PathInfo> {
    fim.require(FimOrdering::ByPath)?;
    if k >= fim.n_paths {
        return Err(Error::InvalidInput(format!("path {k} out of range")));
    }
    let block = fim.matrix.view((5 * k, 5 * k), (5, 5));
    let j_aod = block[(1, 1)];
    let b_r = block[(1, 2)];
    let b_i = block[(1, 3)];
    let j_hr = block[(2, 2)];
    let j_hi = block[(3, 3)];
    let coupling = |b: f64, j: f64| if b == 0.0 { 0.0 } else { b * b / j };
    let marginal = j_aod - coupling(b_r, j_hr) - coupling(b_i, j_hi);
    let aod_estimable = marginal > AOD_INFO_RTOL * j_aod && marginal.is_finite();
    Ok(PathInfo {
        sigma2_tau: block[(0, 0)].recip(),
        sigma2_aod_raw: j_aod.recip(),
        sigma2_aod: if aod_estimable { marginal.recip() } else { f64::INFINITY },
        sigma2_aoa: block[(4, 4)].recip(),
        b_r,
        b_i,
        sigma2_hr: j_hr.recip(),
        sigma2_hi: j_hi.recip(),
        aod_estimable,
    })
}

pub fn per_path_infos(fim: &ChannelFim) -> Result<Vec<PathInfo>> {
    (0..fim.n_paths).map(|k| per_path_info(fim, k)).collect()
}

/// What to do when the nuisance block of a Schur complement is singular.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SingularPolicy {
    PseudoInverse,
    Fail,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SchurComplement {
    pub matrix: DMatrix<f64>,
    /// Set when the nuisance block had to be pseudo-inverted.
    pub pseudo_inverse: bool,
}

/// Relative eigenvalue threshold for the nuisance block after scaling it to
/// unit diagonal.
pub const PINV_RTOL: f64 = 1e-12;

/// Equivalent FIM of the parameters in `keep`:
/// `J11 - J12 J22^-1 J12^T` with every other index treated as nuisance.
pub fn schur_efim(j: &DMatrix<f64>, keep: &[usize], policy: SingularPolicy) -> Result<SchurComplement> {
    let n = j.nrows();
    if j.ncols() != n {
        return Err(Error::InvalidInput("information matrix must be square".into()));
    }
    if let Some(&bad) = keep.iter().find(|&&i| i >= n) {
        return Err(Error::InvalidInput(format!(
            "index {bad} out of range for a {n}x{n} matrix"
        )));
    }
    let drop: Vec<usize> = (0..n).filter(|i| !keep.contains(i)).collect();
    let pick = |rows: &[usize], cols: &[usize]| DMatrix::from_fn(rows.len(), cols.len(), |a, b| j[(rows[a], cols[b])]);
    let j11 = pick(keep, keep);
    if drop.is_empty() {
        return Ok(SchurComplement {
            matrix: j11,
            pseudo_inverse: false,
        });
    }
    let j12 = pick(keep, &drop);
    let j22 = pick(&drop, &drop);

    // equilibrate so the threshold does not depend on the parameter units
    let scale = DVector::from_iterator(
        drop.len(),
        (0..drop.len()).map(|i| {
            let d = j22[(i, i)];
            if d > 0.0 {
                d.sqrt().recip()
            } else {
                1.0
            }
        }),
    );
    let scaled = DMatrix::from_fn(drop.len(), drop.len(), |a, b| scale[a] * j22[(a, b)] * scale[b]);
    let eig = scaled.symmetric_eigen();
    let max_ev = eig.eigenvalues.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let singular = max_ev == 0.0 || eig.eigenvalues.iter().any(|&v| v <= PINV_RTOL * max_ev);
    let pinv = || {
        let inv = eig
            .eigenvalues
            .map(|v| if v > PINV_RTOL * max_ev { v.recip() } else { 0.0 });
        let s_inv = &eig.eigenvectors * DMatrix::from_diagonal(&inv) * eig.eigenvectors.transpose();
        let d = DMatrix::from_diagonal(&scale);
        &d * s_inv * &d * j12.transpose()
    };

    let (solved, pseudo_inverse) = if !singular {
        match j22.clone().cholesky() {
            Some(chol) => (chol.solve(&j12.transpose()), false),
            None => (pinv(), true),
        }
    } else {
        match policy {
            SingularPolicy::Fail => {
                return Err(Error::Numerical(
                    "nuisance block of the information matrix is singular".into(),
                ))
            }
            SingularPolicy::PseudoInverse => (pinv(), true),
        }
    };
    let mut matrix = j11 - &j12 * solved;
    symmetrize(&mut matrix);
    Ok(SchurComplement { matrix, pseudo_inverse })
}

pub(crate) fn symmetrize(m: &mut DMatrix<f64>) {
    let n = m.nrows();
    for i in 0..n {
        for j in i + 1..n {
            let v = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{channel_params_from_geometry, ula_offsets, Anchor, Mobile, Point};
    use crate::signal::{dft_beamformer, path_gain};
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    const C: f64 = crate::SPEED_OF_LIGHT;

    struct Setup {
        scenario: Scenario,
        config: SignalConfig,
        beamformer: Beamformer,
        params: Vec<PathParams>,
    }

    fn setup(n_tx: usize, n_rx: usize, points: &[[f64; 2]], los: bool) -> Setup {
        let config = SignalConfig::reference_38ghz();
        let lambda = config.wavelength(C);
        let scenario = Scenario::new(
            Anchor::new(Point::zeros(), 0.0, ula_offsets(n_tx, lambda / 2.0)).unwrap(),
            Mobile::new(Point::new(5.0, 5.0), PI / 2.0, ula_offsets(n_rx, lambda / 2.0)).unwrap(),
            points.iter().map(|s| Point::new(s[0], s[1])).collect(),
            los,
        )
        .unwrap();
        let beamformer = dft_beamformer(config.n_beams, lambda, &scenario.anchor.offsets).unwrap();
        let params = scenario
            .paths()
            .into_iter()
            .enumerate()
            .map(|(i, path)| {
                let mut pp = channel_params_from_geometry(&scenario, path, C).unwrap();
                pp.gain = Some(path_gain(&scenario, path, lambda, 0.7, 0.3 + i as f64).unwrap());
                pp
            })
            .collect();
        Setup {
            scenario,
            config,
            beamformer,
            params,
        }
    }

    fn exact(s: &Setup) -> ChannelFim {
        fim_channel_exact(&s.scenario, &s.config, &s.beamformer, &s.params, C).unwrap()
    }

    #[test]
    fn zero_energy_gives_zero_fim() {
        let mut s = setup(8, 8, &[[8.0, 1.0]], true);
        s.config.symbol_energy_j = 0.0;
        assert_eq!(exact(&s).matrix.norm(), 0.0);
    }

    #[test]
    fn linear_in_snr() {
        let mut s = setup(8, 8, &[[8.0, 1.0]], true);
        let j1 = exact(&s).matrix;
        s.config.symbol_energy_j *= 2.0;
        let j2 = exact(&s).matrix;
        assert!((j2 - 2.0 * j1.clone()).norm() <= 1e-14 * j1.norm());
    }

    #[test]
    fn symmetric_psd() {
        let s = setup(8, 6, &[[8.0, 1.0], [3.0, 4.0]], true);
        let j = exact(&s).matrix;
        assert!((&j - j.transpose()).norm() <= 1e-10 * j.norm());
        let min_ev = j.clone().symmetric_eigen().eigenvalues.min();
        assert!(min_ev >= -1e-9 * j.norm());
    }

    #[test]
    fn missing_gain_or_paths() {
        let mut s = setup(4, 4, &[[8.0, 1.0]], true);
        s.params[1].gain = None;
        assert!(fim_channel_exact(&s.scenario, &s.config, &s.beamformer, &s.params, C).is_err());
        assert!(fim_channel_exact(&s.scenario, &s.config, &s.beamformer, &[], C).is_err());
    }

    #[test]
    fn single_path_simplification_structure() {
        let s = setup(8, 8, &[], true);
        let j = exact(&s);
        let simple = simplify_fim(&j).unwrap();
        let mut off_diag = Vec::new();
        for i in 0..5 {
            for k in i + 1..5 {
                if simple.matrix[(i, k)] != 0.0 {
                    off_diag.push((i, k));
                }
            }
        }
        // aod-gain_re and aod-gain_im only
        assert_eq!(off_diag, vec![(1, 3), (1, 4)]);
        // centroid-zero arrays make the single-path FIM already simplified
        assert!((&j.matrix - &simple.matrix).norm() <= 1e-12 * j.matrix.norm());
    }

    #[test]
    fn simplify_is_idempotent() {
        let s = setup(8, 8, &[[8.0, 1.0], [3.0, 4.0]], true);
        let once = simplify_fim(&exact(&s)).unwrap();
        let twice = simplify_fim(&once).unwrap();
        assert_eq!(once, twice);
        let direct = fim_channel_simplified(&s.scenario, &s.config, &s.beamformer, &s.params, C).unwrap();
        assert!((direct.matrix - &once.matrix).norm() <= 1e-12 * once.matrix.norm());
    }

    #[test]
    fn simplification_error_is_small_for_large_arrays() {
        let s = setup(25, 25, &[[8.0, 1.0]], true);
        let j = exact(&s);
        let simple = simplify_fim(&j).unwrap();
        let rel = (&j.matrix - &simple.matrix).norm() / j.matrix.norm();
        assert!(rel < 0.15, "relative simplification error {rel}");
    }

    #[test]
    fn permutation_properties() {
        let p = permutation_matrix(3);
        assert_eq!(p.transpose() * &p, DMatrix::identity(15, 15));
        let s = setup(8, 8, &[[8.0, 1.0], [3.0, 4.0]], true);
        let j = exact(&s);
        let r = reorder_by_path(&j).unwrap();
        assert!((&r.matrix - &p * &j.matrix * p.transpose()).norm() == 0.0);
        let mut e1: Vec<f64> = j.matrix.clone().symmetric_eigen().eigenvalues.iter().copied().collect();
        let mut e2: Vec<f64> = r.matrix.clone().symmetric_eigen().eigenvalues.iter().copied().collect();
        e1.sort_by(f64::total_cmp);
        e2.sort_by(f64::total_cmp);
        for (a, b) in e1.iter().zip(&e2) {
            assert!((a - b).abs() <= 1e-9 * j.matrix.norm());
        }
        assert_eq!(r.index(ChannelParam::Toa, 1), 5);
        assert_eq!(r.index(ChannelParam::Aoa, 1), 9);
        assert_eq!(j.index(ChannelParam::Toa, 1), 7);
        assert!(reorder_by_path(&r).is_err());
    }

    #[test]
    fn simplified_reordered_is_block_diagonal() {
        let s = setup(8, 8, &[[8.0, 1.0]], true);
        let r = reorder_by_path(&simplify_fim(&exact(&s)).unwrap()).unwrap();
        assert_eq!(r.matrix.view((0, 5), (5, 5)).norm(), 0.0);
        assert_eq!(r.matrix.view((5, 0), (5, 5)).norm(), 0.0);
        assert!(r.matrix.view((0, 0), (5, 5)).norm() > 0.0);
        assert!(r.matrix.view((5, 5), (5, 5)).norm() > 0.0);
    }

    #[test]
    fn per_path_info_without_coupling() {
        let mut m = DMatrix::zeros(5, 5);
        for (i, v) in [4.0, 2.0, 1.0, 1.0, 8.0].iter().enumerate() {
            m[(i, i)] = *v;
        }
        let fim = ChannelFim {
            matrix: m,
            ordering: FimOrdering::ByPath,
            n_paths: 1,
        };
        let info = per_path_info(&fim, 0).unwrap();
        assert_eq!(info.sigma2_aod, info.sigma2_aod_raw);
        assert_eq!(info.sigma2_aod, 0.5);
        assert_eq!(info.sigma2_tau, 0.25);
        assert_eq!(info.sigma2_aoa, 0.125);
    }

    #[test]
    fn per_path_info_matches_schur() {
        let s = setup(8, 8, &[[8.0, 1.0]], true);
        let r = reorder_by_path(&simplify_fim(&exact(&s)).unwrap()).unwrap();
        for k in 0..2 {
            let info = per_path_info(&r, k).unwrap();
            let block = r.matrix.view((5 * k, 5 * k), (5, 5)).into_owned();
            let schur = schur_efim(&block, &[1], SingularPolicy::Fail).unwrap();
            assert_relative_eq!(info.sigma2_aod.recip(), schur.matrix[(0, 0)], max_relative = 1e-12);
            assert!(info.aod_estimable);
        }
    }

    #[test]
    fn unestimable_aod_is_flagged() {
        let mut m = DMatrix::zeros(5, 5);
        for (i, v) in [4.0, 1.0, 1.0, 1.0, 8.0].iter().enumerate() {
            m[(i, i)] = *v;
        }
        m[(1, 2)] = 1.0;
        m[(2, 1)] = 1.0;
        let fim = ChannelFim {
            matrix: m,
            ordering: FimOrdering::ByPath,
            n_paths: 1,
        };
        let info = per_path_info(&fim, 0).unwrap();
        assert!(!info.aod_estimable);
        assert_eq!(info.sigma2_aod, f64::INFINITY);
        assert_eq!(info.info_aod(), 0.0);
    }

    #[test]
    fn aoa_variance_shrinks_with_more_receive_antennas() {
        let variances: Vec<f64> = [4, 16, 64]
            .iter()
            .map(|&n| {
                let s = setup(25, n, &[], true);
                let r = reorder_by_path(&simplify_fim(&exact(&s)).unwrap()).unwrap();
                per_path_info(&r, 0).unwrap().sigma2_aoa
            })
            .collect();
        assert!(
            variances[0] > variances[1] && variances[1] > variances[2],
            "{variances:?}"
        );
    }

    #[test]
    fn schur_hand_examples() {
        let j = DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 1.0]);
        let s = schur_efim(&j, &[0], SingularPolicy::Fail).unwrap();
        assert_relative_eq!(s.matrix[(0, 0)], 1.0, epsilon = 1e-15);
        let all = schur_efim(&j, &[0, 1], SingularPolicy::Fail).unwrap();
        assert_eq!(all.matrix, j);

        let block = DMatrix::from_row_slice(3, 3, &[3.0, 1.0, 0.0, 1.0, 2.0, 0.0, 0.0, 0.0, 5.0]);
        let s = schur_efim(&block, &[0, 1], SingularPolicy::Fail).unwrap();
        assert_eq!(s.matrix, block.view((0, 0), (2, 2)).into_owned());
    }

    #[test]
    fn schur_singular_block() {
        let j = DMatrix::from_row_slice(3, 3, &[2.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0]);
        assert!(matches!(
            schur_efim(&j, &[0], SingularPolicy::Fail),
            Err(Error::Numerical(_))
        ));
        let s = schur_efim(&j, &[0], SingularPolicy::PseudoInverse).unwrap();
        assert!(s.pseudo_inverse);
        assert_relative_eq!(s.matrix[(0, 0)], 1.0, epsilon = 1e-12);
    }
}
