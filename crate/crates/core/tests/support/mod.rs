//! Shared fixtures and independent oracles for the integration tests.
#![allow(dead_code)]

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use nlos_bounds::channel_fim::PathInfo;
use nlos_bounds::geometry::{
    path_geometry, ula_offsets, Anchor, Mobile, PathId, PathParams, Point, Scenario, GEOMETRY_EPS,
};
use nlos_bounds::pipeline::Evaluator;

pub const C: f64 = nlos_bounds::SPEED_OF_LIGHT;

/// Reference deployment: anchor at the origin with orientation 0, mobile at
/// `[5, 5]` facing `pi/2`, half-wavelength ULAs.
pub fn reference_scenario(n_tx: usize, n_rx: usize, points: &[[f64; 2]], los: bool) -> Scenario {
    let ev = Evaluator::reference();
    let half = ev.config.wavelength(ev.speed_of_light) / 2.0;
    Scenario::new(
        Anchor::new(Point::zeros(), 0.0, ula_offsets(n_tx, half)).unwrap(),
        Mobile::new(Point::new(5.0, 5.0), FRAC_PI_2, ula_offsets(n_rx, half)).unwrap(),
        points.iter().map(|s| Point::new(s[0], s[1])).collect(),
        los,
    )
    .unwrap()
}

fn random_point(rng: &mut ChaCha8Rng, half_width: f64) -> Point {
    Point::new(
        rng.random_range(-half_width..half_width),
        rng.random_range(-half_width..half_width),
    )
}

/// Incidence point at least 0.5 m from both ends and away from the
/// anchor-mobile segment.
pub fn random_incidence_point(rng: &mut ChaCha8Rng, q: Point, p: Point) -> Point {
    loop {
        let s = random_point(rng, 20.0);
        if (s - q).norm() < 0.5 || (s - p).norm() < 0.5 {
            continue;
        }
        let a = (s - q).normalize();
        let b = (s - p).normalize();
        // cos of the angle between departure and arrival directions
        if a.dot(&b) < -0.999 {
            continue;
        }
        return s;
    }
}

/// Random poses and `n_nlos` incidence points with 4-element arrays.
pub fn random_scenario(rng: &mut ChaCha8Rng, n_nlos: usize, los: bool) -> Scenario {
    let q = random_point(rng, 5.0);
    let p = loop {
        let p = random_point(rng, 15.0);
        if (p - q).norm() > 1.0 {
            break p;
        }
    };
    let points = (0..n_nlos).map(|_| random_incidence_point(rng, q, p)).collect();
    Scenario::new(
        Anchor::new(q, rng.random_range(-PI..PI), ula_offsets(4, 0.004)).unwrap(),
        Mobile::new(p, rng.random_range(-PI..PI), ula_offsets(4, 0.004)).unwrap(),
        points,
        los,
    )
    .unwrap()
}

/// Per-path information with log-uniform standard deviations in the range a
/// mmWave link produces: ranging 5 mm..20 cm, angles 1..30 mrad.
pub fn random_info(rng: &mut ChaCha8Rng) -> PathInfo {
    let log_uniform = |rng: &mut ChaCha8Rng, lo: f64, hi: f64| 10f64.powf(rng.random_range(lo..hi));
    let range = log_uniform(rng, -2.3, -0.7);
    let tx = log_uniform(rng, -3.0, -1.5);
    let rx = log_uniform(rng, -3.0, -1.5);
    PathInfo::from_variances((range / C).powi(2), tx * tx, rx * rx)
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Dense `T J T^T` followed by a Schur complement onto `(p_x, p_y, alpha)`,
/// using only the assembled matrices and a plain inverse.
pub fn dense_efim(scenario: &Scenario, infos: &[PathInfo]) -> nalgebra::Matrix3<f64> {
    let t = nlos_bounds::geometry::transformation_matrix(scenario, C, nlos_bounds::geometry::Normalization::default())
        .unwrap();
    let t = nlos_bounds::geometry::assemble_t(&t);
    let k = infos.len();
    let mut j = DMatrix::zeros(3 * k, 3 * k);
    for (i, info) in infos.iter().enumerate() {
        j[(3 * i, 3 * i)] = 1.0 / info.sigma2_tau;
        j[(3 * i + 1, 3 * i + 1)] = 1.0 / info.sigma2_aod;
        j[(3 * i + 2, 3 * i + 2)] = 1.0 / info.sigma2_aoa;
    }
    let full = &t * j * t.transpose();
    let n = full.nrows();
    let a = full.view((0, 0), (3, 3)).into_owned();
    if n == 3 {
        return nalgebra::Matrix3::from_iterator(a.iter().copied());
    }
    let b = full.view((0, 3), (3, n - 3)).into_owned();
    let d = full.view((3, 3), (n - 3, n - 3)).into_owned();
    let schur = a - &b * d.try_inverse().expect("invertible incidence block") * b.transpose();
    nalgebra::Matrix3::from_iterator(schur.iter().copied())
}

/// Central finite differences of the geometric map `(p, alpha, s_k) ->
/// (tau, theta_tx, theta_rx)` for every path, laid out like the assembled
/// transformation matrix.
pub fn fd_jacobian(scenario: &Scenario, step: f64) -> DMatrix<f64> {
    let paths = scenario.paths();
    let n_nlos = scenario.n_nlos();
    let params = |s: &Scenario| -> Vec<f64> {
        paths
            .iter()
            .flat_map(|&path| {
                let pp = nlos_bounds::geometry::channel_params_from_geometry(s, path, C).unwrap();
                [pp.tau, pp.theta_tx, pp.theta_rx]
            })
            .collect()
    };
    let perturb = |row: usize, h: f64| -> Scenario {
        let mut s = scenario.clone();
        match row {
            0 => s.mobile.position.x += h,
            1 => s.mobile.position.y += h,
            2 => s.mobile.orientation += h,
            r => {
                let i = (r - 3) / 2;
                if (r - 3) % 2 == 0 {
                    s.incidence_points[i].x += h;
                } else {
                    s.incidence_points[i].y += h;
                }
            }
        }
        s
    };
    let rows = 3 + 2 * n_nlos;
    let cols = 3 * paths.len();
    let mut out = DMatrix::zeros(rows, cols);
    for r in 0..rows {
        let plus = params(&perturb(r, step));
        let minus = params(&perturb(r, -step));
        for c in 0..cols {
            let mut diff = plus[c] - minus[c];
            if c % 3 != 0 {
                diff = (diff + PI).rem_euclid(TAU) - PI;
            }
            out[(r, c)] = diff / (2.0 * step);
        }
    }
    out
}

/// Setup of the Monte-Carlo channel FIM oracle.
pub struct McSetup {
    pub tx_offsets: Vec<Point>,
    pub rx_offsets: Vec<Point>,
    pub wavelength: f64,
    pub bandwidth: f64,
    pub symbol_time: f64,
    pub n_symbols: usize,
    pub beam_angles: Vec<f64>,
    pub symbol_energy: f64,
    pub noise_psd: f64,
    pub params: Vec<PathParams>,
}

fn steering(offsets: &[Point], theta: f64, wavelength: f64) -> Vec<Complex64> {
    let k = 2.0 * PI / wavelength;
    let norm = (offsets.len() as f64).sqrt();
    offsets
        .iter()
        .map(|u| Complex64::from_polar(1.0 / norm, -k * (u.x * theta.cos() + u.y * theta.sin())))
        .collect()
}

fn sinc_pulse(bandwidth: f64, t: f64) -> f64 {
    let x = bandwidth * t;
    let s = if x.abs() < 1e-12 {
        1.0
    } else {
        (PI * x).sin() / (PI * x)
    };
    bandwidth.sqrt() * s
}

impl McSetup {
    /// `g_i(t)` for pilot index `i = l * n_symbols + m` on the time grid,
    /// stacked receive-antenna-major, for channel vector `eta` in the
    /// parameter-grouped order.
    fn basis(&self, eta: &[f64], times: &[f64]) -> Vec<DVector<Complex64>> {
        let k = self.params.len();
        let n_rx = self.rx_offsets.len();
        let n_tx = self.tx_offsets.len();
        let n_beams = self.beam_angles.len();
        let scale = (self.symbol_energy * (n_rx * n_tx) as f64).sqrt();
        let beams: Vec<Vec<Complex64>> = self
            .beam_angles
            .iter()
            .map(|&a| {
                steering(&self.tx_offsets, a, self.wavelength)
                    .into_iter()
                    .map(|x| x / (n_beams as f64).sqrt())
                    .collect()
            })
            .collect();
        let mut out = Vec::with_capacity(n_beams * self.n_symbols);
        for beam in &beams {
            for m in 0..self.n_symbols {
                let mut g = DVector::zeros(times.len() * n_rx);
                for path in 0..k {
                    let theta_rx = eta[path];
                    let theta_tx = eta[k + path];
                    let tau = eta[2 * k + path];
                    let h = Complex64::new(eta[3 * k + path], eta[4 * k + path]);
                    let a_rx = steering(&self.rx_offsets, theta_rx, self.wavelength);
                    let a_tx = steering(&self.tx_offsets, theta_tx, self.wavelength);
                    let gain: Complex64 = a_tx.iter().zip(beam).map(|(a, f)| a.conj() * f).sum();
                    let coeff = scale * h * gain;
                    for (ti, &t) in times.iter().enumerate() {
                        let pulse = sinc_pulse(self.bandwidth, t - m as f64 * self.symbol_time - tau);
                        if pulse == 0.0 {
                            continue;
                        }
                        for (r, a) in a_rx.iter().enumerate() {
                            g[ti * n_rx + r] += coeff * a * pulse;
                        }
                    }
                }
                out.push(g);
            }
        }
        out
    }

    fn eta(&self) -> Vec<f64> {
        let mut eta = Vec::new();
        eta.extend(self.params.iter().map(|p| p.theta_rx));
        eta.extend(self.params.iter().map(|p| p.theta_tx));
        eta.extend(self.params.iter().map(|p| p.tau));
        eta.extend(self.params.iter().map(|p| p.gain.unwrap().re));
        eta.extend(self.params.iter().map(|p| p.gain.unwrap().im));
        eta
    }

    /// FIM estimated from `draws` random unit-modulus pilot vectors, with the
    /// signal derivatives taken by central differences on a time grid
    /// oversampled 16x and padded by `500/B` on both sides.
    pub fn monte_carlo_fim(&self, draws: usize, seed: u64) -> DMatrix<f64> {
        let eta = self.eta();
        let k = self.params.len();
        let taus = &eta[2 * k..3 * k];
        let min_tau = taus.iter().cloned().fold(f64::INFINITY, f64::min);
        let max_tau = taus.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let pad = 500.0 / self.bandwidth;
        let dt = 1.0 / (16.0 * self.bandwidth);
        let start = min_tau - pad;
        let end = max_tau + self.n_symbols as f64 * self.symbol_time + pad;
        let n_t = ((end - start) / dt).ceil() as usize;
        let times: Vec<f64> = (0..n_t).map(|i| start + i as f64 * dt).collect();

        let n = eta.len();
        let derivs: Vec<Vec<DVector<Complex64>>> = (0..n)
            .into_par_iter()
            .map(|u| {
                let step = if u < 2 * k {
                    1e-6
                } else if u < 3 * k {
                    1e-4 / self.bandwidth
                } else {
                    1e-3 * eta[3 * k..].iter().map(|x| x.abs()).fold(0.0, f64::max)
                };
                let mut plus = eta.clone();
                let mut minus = eta.clone();
                plus[u] += step;
                minus[u] -= step;
                let bp = self.basis(&plus, &times);
                let bm = self.basis(&minus, &times);
                bp.iter()
                    .zip(&bm)
                    .map(|(a, b)| (a - b) / Complex64::new(2.0 * step, 0.0))
                    .collect()
            })
            .collect();

        let n_pilots = derivs[0].len();
        // Gram[u][v][i][j] = int dg_{u,i}^H dg_{v,j} dt
        let gram: Vec<Vec<DMatrix<Complex64>>> = (0..n)
            .map(|u| {
                (0..n)
                    .map(|v| DMatrix::from_fn(n_pilots, n_pilots, |i, j| derivs[u][i].dotc(&derivs[v][j]) * dt))
                    .collect()
            })
            .collect();

        let chunks = 64;
        let per_chunk = draws.div_ceil(chunks);
        let total: DMatrix<f64> = (0..chunks as u64)
            .into_par_iter()
            .map(|chunk| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(chunk);
                let mut acc = DMatrix::zeros(n, n);
                for _ in 0..per_chunk {
                    let d = DVector::from_fn(n_pilots, |_, _| Complex64::from_polar(1.0, rng.random_range(0.0..TAU)));
                    for u in 0..n {
                        for v in u..n {
                            let val = d.dotc(&(&gram[u][v] * &d)).re;
                            acc[(u, v)] += val;
                            if u != v {
                                acc[(v, u)] += val;
                            }
                        }
                    }
                }
                acc
            })
            .reduce(|| DMatrix::zeros(n, n), |a, b| a + b);
        total / (self.noise_psd * (per_chunk * chunks) as f64)
    }
}

/// Small oracle instance: 4x4 arrays, 2 beams, 4 pilots, LOS plus one NLOS
/// path whose delay overlaps the LOS pulse.
pub fn small_instance() -> (Scenario, nlos_bounds::signal::SignalConfig, McSetup) {
    let mut config = nlos_bounds::signal::SignalConfig::reference_38ghz();
    config.n_beams = 2;
    config.n_symbols = 4;
    let wavelength = config.wavelength(C);
    let half = wavelength / 2.0;
    let scenario = Scenario::new(
        Anchor::new(Point::zeros(), 0.0, ula_offsets(4, half)).unwrap(),
        Mobile::new(Point::new(5.0, 5.0), FRAC_PI_2, ula_offsets(4, half)).unwrap(),
        vec![Point::new(6.0, 2.0)],
        true,
    )
    .unwrap();
    let evaluator = Evaluator {
        config,
        ..Evaluator::reference()
    };
    let params = evaluator.path_params(&scenario, &[0.4, 2.2]).unwrap();
    let mc = McSetup {
        tx_offsets: scenario.anchor.offsets.clone(),
        rx_offsets: scenario.mobile.offsets.clone(),
        wavelength,
        bandwidth: config.bandwidth_hz,
        symbol_time: config.symbol_time_s,
        n_symbols: config.n_symbols,
        beam_angles: (0..config.n_beams)
            .map(|l| l as f64 * PI / config.n_beams as f64)
            .collect(),
        symbol_energy: config.symbol_energy_j,
        noise_psd: config.noise_psd,
        params,
    };
    (scenario, config, mc)
}

/// True when no node pair of the scenario is closer than `GEOMETRY_EPS`.
pub fn well_separated(s: &Scenario) -> bool {
    s.paths().into_iter().all(|path| match path_geometry(s, path) {
        Ok(g) => g.dist_tx > GEOMETRY_EPS && g.dist_rx > GEOMETRY_EPS,
        Err(_) => matches!(path, PathId::Los) && !s.has_los,
    })
}
