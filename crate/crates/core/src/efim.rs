//! Position-domain information and its decomposition into rank-one terms.
//!
//! All angles entering the closed forms are global bearings: `psi_tx` is the
//! direction from the anchor to the first interaction point (mobile for LOS,
//! incidence point otherwise) and `psi_rx` the direction from the mobile to
//! the last one. The unknowns are ordered `(p_x, p_y, alpha)`.

use nalgebra::{DMatrix, Matrix3, Vector3};

use crate::channel_fim::{symmetrize, PathInfo};
use crate::geometry::{path_geometry, wrap_angle, PathGeometry, PathId, Scenario, TransformMatrix};
use crate::{Error, Result};

/// Default cap on a single rank-one eigenvalue.
pub const LAMBDA_MAX: f64 = 1e18;

/// Relative determinant threshold of the `2x2` incidence-point block.
pub const DEGENERATE_RTOL: f64 = 1e-14;

/// `Upsilon_{n,m}(theta, phi, rho)`:
///
/// ```text
/// [ cos^2(theta+phi)        (-1)^n sin(theta)cos(theta)  (-1)^m rho sin(theta)     ]
/// [ .                       sin^2(theta+phi)             (-1)^(m+1) rho cos(theta) ]
/// [ .                       .                            rho^2                     ]
/// ```
pub fn upsilon(n: u8, m: u8, theta: f64, phi: f64, rho: f64) -> Matrix3<f64> {
    let sign = |e: u8| if e.is_multiple_of(2) { 1.0 } else { -1.0 };
    let (s, c) = theta.sin_cos();
    let (sp, cp) = (theta + phi).sin_cos();
    let xy = sign(n) * s * c;
    let xa = sign(m) * rho * s;
    let ya = sign(m + 1) * rho * c;
    Matrix3::new(
        cp * cp,
        xy,
        xa, //
        xy,
        sp * sp,
        ya, //
        xa,
        ya,
        rho * rho,
    )
}

/// Cross term of the NLOS loss: `u v^T + v u^T` with `u = [cos, sin, 0]` and
/// `v = [-sin, cos, r]`.
pub fn b_loss_template(psi_rx: f64, dist_rx: f64) -> Matrix3<f64> {
    let (s, c) = psi_rx.sin_cos();
    let r = dist_rx;
    Matrix3::new(
        -2.0 * s * c,
        c * c - s * s,
        c * r, //
        c * c - s * s,
        2.0 * s * c,
        s * r, //
        c * r,
        s * r,
        0.0,
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TermSource {
    LosToa,
    LosAod,
    LosAoa,
    /// NLOS path, 0-based among the NLOS paths.
    Nlos(usize),
}

impl std::fmt::Display for TermSource {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            TermSource::LosToa => f.write_str("los_toa"),
            TermSource::LosAod => f.write_str("los_aod"),
            TermSource::LosAoa => f.write_str("los_aoa"),
            TermSource::Nlos(i) => write!(f, "nlos{}", i + 1),
        }
    }
}

/// `lam * v v^T` with `||v|| = 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RankOneTerm {
    pub lam: f64,
    pub v: Vector3<f64>,
    pub source: TermSource,
    /// The eigenvalue hit [`LAMBDA_MAX`].
    pub capped: bool,
    /// Departure and arrival are aligned or opposite (`sin(delta) = 0`).
    pub aligned: bool,
}

impl RankOneTerm {
    fn new(lam: f64, v: Vector3<f64>, source: TermSource) -> Self {
        Self {
            lam,
            v: v.normalize(),
            source,
            capped: false,
            aligned: false,
        }
    }

    pub fn matrix(&self) -> Matrix3<f64> {
        self.lam * self.v * self.v.transpose()
    }
}

/// Flips `v` so that its first non-negligible component is positive.
fn first_positive(v: Vector3<f64>) -> Vector3<f64> {
    let scale = v.amax();
    match v.iter().find(|x| x.abs() > 1e-12 * scale) {
        Some(&x) if x < 0.0 => -v,
        _ => v,
    }
}

/// `(lam_xy, lam_alpha) = (lam (v_x^2 + v_y^2), lam v_alpha^2)`: the share of
/// the term's information on the position plane and on the orientation axis.
/// The two parts sum to `lam`.
pub fn projected_gains(term: &RankOneTerm) -> (f64, f64) {
    let v = term.v;
    (term.lam * (v.x * v.x + v.y * v.y), term.lam * v.z * v.z)
}

/// Path information mapped to the position domain (all in 1/m^2):
/// `tau = 1/(sigma_tau^2 c^2)`, `tx = 1/(sigma_tx^2 rho^2)`,
/// `rx = 1/(sigma_rx^2 r^2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InfoTerms {
    pub tau: f64,
    pub tx: f64,
    pub rx: f64,
}

impl InfoTerms {
    pub fn new(info: &PathInfo, geometry: &PathGeometry, speed_of_light: f64) -> Self {
        let c = speed_of_light;
        let rho = geometry.dist_tx;
        let r = geometry.dist_rx;
        Self {
            tau: (info.sigma2_tau * c * c).recip(),
            tx: (info.sigma2_aod * rho * rho).recip(),
            rx: (info.sigma2_aoa * r * r).recip(),
        }
    }
}

/// LOS contribution `A^(G)` and its three eigen-terms.
#[derive(Debug, Clone, PartialEq)]
pub struct LosGain {
    pub matrix: Matrix3<f64>,
    pub terms: [RankOneTerm; 3],
}

/// `psi` is the LOS bearing from the anchor to the mobile, `dist` = `||p - q||`.
pub fn los_gain_terms(info: &PathInfo, psi: f64, dist: f64, speed_of_light: f64) -> LosGain {
    let geometry = PathGeometry {
        bearing_tx: psi,
        bearing_rx: psi,
        dist_tx: dist,
        dist_rx: dist,
    };
    let i = InfoTerms::new(info, &geometry, speed_of_light);
    let (s, c) = psi.sin_cos();
    let d = dist;
    let matrix = i.tau * upsilon(0, 0, psi, 0.0, 0.0)
        + i.tx * upsilon(1, 0, psi, std::f64::consts::FRAC_PI_2, 0.0)
        + i.rx * upsilon(1, 0, psi, std::f64::consts::FRAC_PI_2, d);
    let terms = [
        RankOneTerm::new(i.tau, first_positive(Vector3::new(c, s, 0.0)), TermSource::LosToa),
        RankOneTerm::new(i.tx, first_positive(Vector3::new(-s, c, 0.0)), TermSource::LosAod),
        RankOneTerm::new(
            weighted(i.rx, d * d + 1.0),
            first_positive(Vector3::new(s / d, -c / d, 1.0)),
            TermSource::LosAoa,
        ),
    ];
    LosGain { matrix, terms }
}

/// `a * b` with `0 * inf = 0`.
fn weighted(a: f64, b: f64) -> f64 {
    if a == 0.0 {
        0.0
    } else {
        a * b
    }
}

/// NLOS contribution `B_k^(G)` before the incidence point is marginalised.
#[derive(Debug, Clone, PartialEq)]
pub struct NlosGain {
    pub matrix: Matrix3<f64>,
    pub toa: RankOneTerm,
    pub aoa: RankOneTerm,
}

pub fn nlos_gain_matrix(info: &PathInfo, geometry: &PathGeometry, speed_of_light: f64, index: usize) -> NlosGain {
    let i = InfoTerms::new(info, geometry, speed_of_light);
    let psi = geometry.bearing_rx;
    let r = geometry.dist_rx;
    let (s, c) = psi.sin_cos();
    let matrix = i.tau * upsilon(0, 0, psi, 0.0, 0.0) + i.rx * upsilon(1, 1, psi, std::f64::consts::FRAC_PI_2, r);
    let source = TermSource::Nlos(index);
    NlosGain {
        matrix,
        toa: RankOneTerm::new(i.tau, first_positive(Vector3::new(c, s, 0.0)), source),
        aoa: RankOneTerm::new(weighted(i.rx, 1.0 + r * r), Vector3::new(-s / r, c / r, 1.0), source),
    }
}

/// Weights of the NLOS information loss and of the net gain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossWeights {
    pub w_r: f64,
    pub w_a: f64,
    pub gamma: f64,
    pub epsilon: f64,
    pub beta: f64,
    /// Entries of the incidence-point block `T_s J T_s^T = [[a, b], [b, d]]`.
    pub a: f64,
    pub b: f64,
    pub d: f64,
    /// `psi_rx - psi_tx` wrapped to `(-pi, pi]`.
    pub delta: f64,
}

impl LossWeights {
    pub fn det(&self) -> f64 {
        self.a * self.d - self.b * self.b
    }
}

/// Determinant of the incidence-point block in the factored form
/// `(1+cos)^2 i_tau (i_tx + i_rx) + sin^2 i_tx i_rx`.
fn incidence_det(i: &InfoTerms, sin: f64, cos: f64) -> f64 {
    let one_c = 1.0 + cos;
    one_c * one_c * i.tau * (i.tx + i.rx) + sin * sin * i.tx * i.rx
}

pub fn nlos_loss_weights(info: &PathInfo, geometry: &PathGeometry, speed_of_light: f64) -> Result<LossWeights> {
    let i = InfoTerms::new(info, geometry, speed_of_light);
    let (st, ct) = geometry.bearing_tx.sin_cos();
    let (sr, cr) = geometry.bearing_rx.sin_cos();
    let a = i.tau * (ct + cr).powi(2) + i.tx * st * st + i.rx * sr * sr;
    let b = i.tau * (ct + cr) * (st + sr) - i.tx * st * ct - i.rx * sr * cr;
    let d = i.tau * (st + sr).powi(2) + i.tx * ct * ct + i.rx * cr * cr;

    let delta = wrap_angle(geometry.bearing_rx - geometry.bearing_tx);
    let (s, c) = delta.sin_cos();
    let det = incidence_det(&i, s, c);
    let scale = (a + d) * (a + d);
    if !(det > DEGENERATE_RTOL * scale) || !det.is_finite() {
        return Err(Error::Geometry(format!(
            "degenerate incidence-point block (det {det:e}, scale {scale:e})"
        )));
    }
    let one_c = 1.0 + c;
    let triple = i.tau * i.tx * i.rx;
    Ok(LossWeights {
        w_r: one_c * one_c * i.tau * i.tau * (i.rx + i.tx) / det,
        w_a: (one_c * one_c * i.tau * i.rx * i.rx + s * s * i.tx * i.rx * i.rx) / det,
        gamma: one_c * s * triple / det,
        epsilon: s * s * triple / det,
        beta: one_c * one_c * triple / det,
        a,
        b,
        d,
        delta,
    })
}

/// `B_k^(L) = w_R Upsilon_00 + w_A Upsilon_11 - gamma B_L`.
pub fn nlos_loss_matrix(weights: &LossWeights, geometry: &PathGeometry) -> Matrix3<f64> {
    let psi = geometry.bearing_rx;
    let r = geometry.dist_rx;
    weights.w_r * upsilon(0, 0, psi, 0.0, 0.0) + weights.w_a * upsilon(1, 1, psi, std::f64::consts::FRAC_PI_2, r)
        - weights.gamma * b_loss_template(psi, r)
}

/// `Psi_k = epsilon Upsilon_00 + beta Upsilon_11 + gamma B_L`.
pub fn net_nlos_matrix(weights: &LossWeights, geometry: &PathGeometry) -> Matrix3<f64> {
    let psi = geometry.bearing_rx;
    let r = geometry.dist_rx;
    weights.epsilon * upsilon(0, 0, psi, 0.0, 0.0)
        + weights.beta * upsilon(1, 1, psi, std::f64::consts::FRAC_PI_2, r)
        + weights.gamma * b_loss_template(psi, r)
}

/// Net gain of NLOS path `index` once its incidence point is marginalised.
///
/// `Psi_k = kappa w w^T` with `kappa = i_tau i_tx i_rx / det` and
/// `w = -sin(delta) [cos, sin, 0] - (1 + cos(delta)) [-sin, cos, r]`
/// (trig of `psi_rx`). The eigenvector is `w` scaled to a positive
/// orientation component.
pub fn net_nlos_term(
    info: &PathInfo,
    geometry: &PathGeometry,
    speed_of_light: f64,
    index: usize,
    lambda_max: f64,
) -> Result<RankOneTerm> {
    let i = InfoTerms::new(info, geometry, speed_of_light);
    let delta = wrap_angle(geometry.bearing_rx - geometry.bearing_tx);
    let (s, c) = delta.sin_cos();
    let (sp, cp) = geometry.bearing_rx.sin_cos();
    let r = geometry.dist_rx;
    let one_c = 1.0 + c;
    // orientation component made positive
    let v = Vector3::new(s * cp - one_c * sp, s * sp + one_c * cp, r * one_c);
    let source = TermSource::Nlos(index);
    let aligned = s.abs() < 1e-12;

    let triple = i.tau * i.tx * i.rx;
    let fallback_dir = if v.norm() > 0.0 { v } else { Vector3::z() };
    if triple == 0.0 {
        let mut term = RankOneTerm::new(0.0, fallback_dir, source);
        term.aligned = aligned;
        return Ok(term);
    }
    let det = incidence_det(&i, s, c);
    let kappa = triple / det;
    let mut lam = kappa * v.norm_squared();
    let mut capped = false;
    if lam.is_nan() || lam > lambda_max {
        if det == 0.0 || v.norm() == 0.0 {
            return Err(Error::Geometry(format!(
                "incidence point of NLOS path {} lies on the anchor-mobile segment",
                index + 1
            )));
        }
        lam = lambda_max;
        capped = true;
    }
    let scale = i.tau * (i.tx + i.rx) + i.tx * i.rx;
    if det <= DEGENERATE_RTOL * scale && !capped {
        return Err(Error::Geometry(format!(
            "incidence point of NLOS path {} lies on the anchor-mobile segment",
            index + 1
        )));
    }
    let mut term = RankOneTerm::new(lam, fallback_dir, source);
    term.capped = capped;
    term.aligned = aligned;
    Ok(term)
}

/// Net NLOS eigenvalue in variance form,
/// `(2 + r^2 (1+cos)) / ((1-cos) c^2 s_tau^2 + (1+cos)(r^2 s_rx^2 + rho^2 s_tx^2))`.
pub fn net_nlos_eigenvalue(info: &PathInfo, geometry: &PathGeometry, speed_of_light: f64) -> f64 {
    let c = speed_of_light;
    let delta = geometry.bearing_rx - geometry.bearing_tx;
    let cd = delta.cos();
    let r = geometry.dist_rx;
    let rho = geometry.dist_tx;
    let den =
        (1.0 - cd) * c * c * info.sigma2_tau + (1.0 + cd) * (r * r * info.sigma2_aoa + rho * rho * info.sigma2_aod);
    (2.0 + r * r * (1.0 + cd)) / den
}

/// Projected net gains in variance form: `(2 / den, r^2 (1+cos) / den)`.
pub fn net_nlos_projected(info: &PathInfo, geometry: &PathGeometry, speed_of_light: f64) -> (f64, f64) {
    let lam = net_nlos_eigenvalue(info, geometry, speed_of_light);
    let r = geometry.dist_rx;
    let cd = (geometry.bearing_rx - geometry.bearing_tx).cos();
    let total = 2.0 + r * r * (1.0 + cd);
    (lam * 2.0 / total, lam * r * r * (1.0 + cd) / total)
}

/// Everything attributed to one NLOS path.
#[derive(Debug, Clone, PartialEq)]
pub struct NlosContribution {
    pub gain: NlosGain,
    /// Absent when the path carries too little information to define them.
    pub weights: Option<LossWeights>,
    pub loss: Matrix3<f64>,
    pub net: Matrix3<f64>,
    pub term: RankOneTerm,
}

pub fn nlos_contribution(
    info: &PathInfo,
    geometry: &PathGeometry,
    speed_of_light: f64,
    index: usize,
) -> Result<NlosContribution> {
    let gain = nlos_gain_matrix(info, geometry, speed_of_light, index);
    let term = net_nlos_term(info, geometry, speed_of_light, index, LAMBDA_MAX)?;
    let weights = nlos_loss_weights(info, geometry, speed_of_light).ok();
    let (loss, net) = match (&weights, term.capped) {
        (Some(w), false) => (nlos_loss_matrix(w, geometry), net_nlos_matrix(w, geometry)),
        _ => {
            let net = term.matrix();
            (gain.matrix - net, net)
        }
    };
    Ok(NlosContribution {
        gain,
        weights,
        loss,
        net,
        term,
    })
}

/// EFIM of `(p_x, p_y, alpha)` split into its LOS and NLOS parts.
#[derive(Debug, Clone, PartialEq)]
pub struct EfimDecomposition {
    pub efim: Matrix3<f64>,
    /// `A^(G)`, zero without LOS.
    pub los_matrix: Matrix3<f64>,
    /// Three terms, empty without LOS.
    pub los_terms: Vec<RankOneTerm>,
    pub nlos_terms: Vec<RankOneTerm>,
    pub gain_matrix: Matrix3<f64>,
    pub loss_matrix: Matrix3<f64>,
    pub net_matrix: Matrix3<f64>,
    pub nlos: Vec<NlosContribution>,
}

impl EfimDecomposition {
    pub fn terms(&self) -> impl Iterator<Item = &RankOneTerm> {
        self.los_terms.iter().chain(self.nlos_terms.iter())
    }

    /// Sum of the rank-one outer products.
    pub fn reconstruct(&self) -> Matrix3<f64> {
        self.terms().fold(Matrix3::zeros(), |acc, t| acc + t.matrix())
    }
}

/// Closed-form EFIM from the per-path information of every path of
/// `scenario`, in path order.
pub fn decompose(scenario: &Scenario, infos: &[PathInfo], speed_of_light: f64) -> Result<EfimDecomposition> {
    let paths = scenario.paths();
    if infos.len() != paths.len() {
        return Err(Error::InvalidInput(format!(
            "{} path infos for a scenario with {} paths",
            infos.len(),
            paths.len()
        )));
    }
    let mut los_matrix = Matrix3::zeros();
    let mut los_terms = Vec::new();
    let mut nlos = Vec::with_capacity(scenario.n_nlos());
    for (path, info) in paths.iter().zip(infos) {
        let geometry = path_geometry(scenario, *path)?;
        match *path {
            PathId::Los => {
                let los = los_gain_terms(info, geometry.bearing_tx, geometry.dist_tx, speed_of_light);
                los_matrix = los.matrix;
                los_terms.extend(los.terms);
            }
            PathId::Nlos(i) => nlos.push(nlos_contribution(info, &geometry, speed_of_light, i)?),
        }
    }
    let gain_matrix = nlos.iter().fold(Matrix3::zeros(), |acc, n| acc + n.gain.matrix);
    let loss_matrix = nlos.iter().fold(Matrix3::zeros(), |acc, n| acc + n.loss);
    let net_matrix = nlos.iter().fold(Matrix3::zeros(), |acc, n| acc + n.net);
    Ok(EfimDecomposition {
        efim: los_matrix + net_matrix,
        los_matrix,
        los_terms,
        nlos_terms: nlos.iter().map(|n| n.term).collect(),
        gain_matrix,
        loss_matrix,
        net_matrix,
        nlos,
    })
}

/// `T J T^T`, assembled block by block. `j` is ordered path by path with
/// `(tau, theta_tx, theta_rx)` inside each path.
pub fn fim_position_domain(j: &DMatrix<f64>, t: &TransformMatrix) -> Result<DMatrix<f64>> {
    let k = t.n_paths();
    if j.nrows() != 3 * k || j.ncols() != 3 * k {
        return Err(Error::InvalidInput(format!(
            "path information is {}x{}, expected {}x{}",
            j.nrows(),
            j.ncols(),
            3 * k,
            3 * k
        )));
    }
    let has_los = t.los_block.is_some();
    // (row offset, block) pairs of every path's columns in T
    let mut rows: Vec<Vec<(usize, DMatrix<f64>)>> = Vec::with_capacity(k);
    for (idx, block) in t.position_blocks().enumerate() {
        let mut parts = vec![(0, DMatrix::from_column_slice(3, 3, block.as_slice()))];
        if let Some(n) = idx.checked_sub(usize::from(has_los)) {
            let inc = &t.incidence_blocks[n];
            parts.push((3 + 2 * n, DMatrix::from_column_slice(2, 3, inc.as_slice())));
        }
        rows.push(parts);
    }
    let n = 3 + 2 * t.nlos_blocks.len();
    let mut out = DMatrix::zeros(n, n);
    for a in 0..k {
        for b in 0..k {
            let jab = j.view((3 * a, 3 * b), (3, 3));
            if jab.iter().all(|&x| x == 0.0) {
                continue;
            }
            for (ra, ta) in &rows[a] {
                let left = ta * jab;
                for (rb, tb) in &rows[b] {
                    let prod = &left * tb.transpose();
                    let mut view = out.view_mut((*ra, *rb), (prod.nrows(), prod.ncols()));
                    view += prod;
                }
            }
        }
    }
    symmetrize(&mut out);
    Ok(out)
}

/// Block-diagonal path information from per-path infos, for
/// [`fim_position_domain`].
pub fn block_diagonal_info(infos: &[PathInfo]) -> DMatrix<f64> {
    let mut j = DMatrix::zeros(3 * infos.len(), 3 * infos.len());
    for (k, info) in infos.iter().enumerate() {
        j.view_mut((3 * k, 3 * k), (3, 3)).copy_from(&info.jbar());
    }
    j
}
