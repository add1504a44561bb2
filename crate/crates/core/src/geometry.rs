//! Planar geometry of the anchor, the mobile and the points of incidence.
//!
//! Angles of departure are measured at the anchor relative to its array
//! orientation `phi`; angles of arrival are measured at the mobile, pointing
//! from the mobile toward the last interaction point (the anchor for the LOS
//! path, the point of incidence for an NLOS path), relative to the mobile
//! orientation `alpha`.

use nalgebra::{DMatrix, Matrix2x3, Matrix3, Vector2};
use num_complex::Complex64;

use crate::{Error, Result};

pub type Point = Vector2<f64>;

/// Minimum separation between any two nodes (m).
pub const GEOMETRY_EPS: f64 = 1e-6;

/// Wraps an angle to `(-pi, pi]`.
pub fn wrap_angle(x: f64) -> f64 {
    let w = x.sin().atan2(x.cos());
    if w <= -std::f64::consts::PI {
        w + 2.0 * std::f64::consts::PI
    } else {
        w
    }
}

/// Element offsets of a uniform linear array along the local x-axis, centred
/// on the array centroid.
pub fn ula_offsets(n: usize, spacing: f64) -> Vec<Point> {
    let mid = (n as f64 - 1.0) / 2.0;
    (0..n).map(|i| Point::new((i as f64 - mid) * spacing, 0.0)).collect()
}

fn check_array(name: &str, offsets: &[Point]) -> Result<()> {
    if offsets.is_empty() {
        return Err(Error::InvalidInput(format!("{name} array has no elements")));
    }
    let centroid = offsets.iter().sum::<Point>() / offsets.len() as f64;
    let extent = offsets.iter().map(|o| o.norm()).fold(0.0, f64::max);
    if centroid.norm() > 1e-9 * extent.max(1e-3) {
        return Err(Error::InvalidInput(format!(
            "{name} array offsets are not centred (centroid = [{:.3e}, {:.3e}])",
            centroid.x, centroid.y
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct Anchor {
    pub position: Point,
    pub orientation: f64,
    pub offsets: Vec<Point>,
}

impl Anchor {
    pub fn new(position: Point, orientation: f64, offsets: Vec<Point>) -> Result<Self> {
        check_array("anchor", &offsets)?;
        Ok(Self {
            position,
            orientation,
            offsets,
        })
    }

    pub fn n_elements(&self) -> usize {
        self.offsets.len()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mobile {
    pub position: Point,
    pub orientation: f64,
    pub offsets: Vec<Point>,
}

impl Mobile {
    pub fn new(position: Point, orientation: f64, offsets: Vec<Point>) -> Result<Self> {
        check_array("mobile", &offsets)?;
        Ok(Self {
            position,
            orientation,
            offsets,
        })
    }

    pub fn n_elements(&self) -> usize {
        self.offsets.len()
    }
}

/// Identifies one propagation path of a [`Scenario`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PathId {
    Los,
    /// Index into [`Scenario::incidence_points`].
    Nlos(usize),
}

impl std::fmt::Display for PathId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            PathId::Los => write!(f, "los"),
            PathId::Nlos(i) => write!(f, "nlos{}", i + 1),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub anchor: Anchor,
    pub mobile: Mobile,
    pub incidence_points: Vec<Point>,
    pub has_los: bool,
}

impl Scenario {
    pub fn new(anchor: Anchor, mobile: Mobile, incidence_points: Vec<Point>, has_los: bool) -> Result<Self> {
        let scenario = Self {
            anchor,
            mobile,
            incidence_points,
            has_los,
        };
        scenario.validate()?;
        Ok(scenario)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.has_los && self.incidence_points.is_empty() {
            return Err(Error::InvalidInput(
                "scenario has no LOS path and no points of incidence".into(),
            ));
        }
        let p = self.mobile.position;
        let q = self.anchor.position;
        if self.has_los && (p - q).norm() < GEOMETRY_EPS {
            return Err(Error::Geometry("mobile coincides with the anchor".into()));
        }
        for (i, s) in self.incidence_points.iter().enumerate() {
            if (s - p).norm() < GEOMETRY_EPS {
                return Err(Error::Geometry(format!(
                    "point of incidence {} coincides with the mobile",
                    i + 1
                )));
            }
            if (s - q).norm() < GEOMETRY_EPS {
                return Err(Error::Geometry(format!(
                    "point of incidence {} coincides with the anchor",
                    i + 1
                )));
            }
        }
        Ok(())
    }

    /// All paths, LOS first when present, then NLOS paths in input order.
    pub fn paths(&self) -> Vec<PathId> {
        let mut paths = Vec::with_capacity(self.n_paths());
        if self.has_los {
            paths.push(PathId::Los);
        }
        paths.extend((0..self.incidence_points.len()).map(PathId::Nlos));
        paths
    }

    pub fn n_paths(&self) -> usize {
        self.incidence_points.len() + usize::from(self.has_los)
    }

    pub fn n_nlos(&self) -> usize {
        self.incidence_points.len()
    }

    /// The same scenario with one extra point of incidence.
    pub fn with_incidence_point(&self, s: Point) -> Result<Self> {
        let mut points = self.incidence_points.clone();
        points.push(s);
        Scenario::new(self.anchor.clone(), self.mobile.clone(), points, self.has_los)
    }

    fn incidence_point(&self, path: PathId) -> Result<Option<Point>> {
        match path {
            PathId::Los if self.has_los => Ok(None),
            PathId::Los => Err(Error::InvalidInput("scenario has no LOS path".into())),
            PathId::Nlos(i) => self
                .incidence_points
                .get(i)
                .copied()
                .map(Some)
                .ok_or_else(|| Error::InvalidInput(format!("no NLOS path with index {}", i + 1))),
        }
    }
}

/// Channel parameters of one path.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathParams {
    /// Delay (s).
    pub tau: f64,
    /// Angle of departure relative to the anchor array (rad).
    pub theta_tx: f64,
    /// Angle of arrival relative to the mobile array (rad).
    pub theta_rx: f64,
    pub gain: Option<Complex64>,
}

/// Global bearings and leg lengths of one path.
///
/// For the LOS path both legs are the anchor-mobile segment. `bearing_tx` is
/// the direction leaving the anchor, `bearing_rx` the direction from the
/// mobile toward the last interaction point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathGeometry {
    pub bearing_tx: f64,
    pub bearing_rx: f64,
    /// `||q - s||` (or `||p - q||` for LOS).
    pub dist_tx: f64,
    /// `||p - s||` (or `||p - q||` for LOS).
    pub dist_rx: f64,
}

fn bearing(v: Point) -> f64 {
    v.y.atan2(v.x)
}

pub fn path_geometry(scenario: &Scenario, path: PathId) -> Result<PathGeometry> {
    let p = scenario.mobile.position;
    let q = scenario.anchor.position;
    match scenario.incidence_point(path)? {
        None => {
            let d = (p - q).norm();
            if d < GEOMETRY_EPS {
                return Err(Error::Geometry("mobile coincides with the anchor".into()));
            }
            Ok(PathGeometry {
                bearing_tx: bearing(p - q),
                bearing_rx: bearing(q - p),
                dist_tx: d,
                dist_rx: d,
            })
        }
        Some(s) => {
            let dist_tx = (s - q).norm();
            let dist_rx = (s - p).norm();
            if dist_tx < GEOMETRY_EPS {
                return Err(Error::Geometry(format!(
                    "{path} incidence point coincides with the anchor"
                )));
            }
            if dist_rx < GEOMETRY_EPS {
                return Err(Error::Geometry(format!(
                    "{path} incidence point coincides with the mobile"
                )));
            }
            Ok(PathGeometry {
                bearing_tx: bearing(s - q),
                bearing_rx: bearing(s - p),
                dist_tx,
                dist_rx,
            })
        }
    }
}

/// Delay, AOD and AOA of `path`. The gain is left unset.
pub fn channel_params_from_geometry(scenario: &Scenario, path: PathId, speed_of_light: f64) -> Result<PathParams> {
    let g = path_geometry(scenario, path)?;
    let length = match path {
        PathId::Los => g.dist_tx,
        PathId::Nlos(_) => g.dist_tx + g.dist_rx,
    };
    Ok(PathParams {
        tau: length / speed_of_light,
        theta_tx: wrap_angle(g.bearing_tx - scenario.anchor.orientation),
        theta_rx: wrap_angle(g.bearing_rx - scenario.mobile.orientation),
        gain: None,
    })
}

/// Unit normalisation applied to the rows of the transformation matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Normalization {
    /// Applied to rows differentiating w.r.t. positions (m).
    pub length: f64,
    /// Applied to the orientation row (rad).
    pub angle: f64,
}

impl Default for Normalization {
    fn default() -> Self {
        Self {
            length: 1.0,
            angle: 1.0,
        }
    }
}

/// Jacobian of the channel parameters w.r.t. `[p, alpha, s_1, ..., s_{K-1}]`.
///
/// Each `3x3` position block has rows `(p_x, p_y, alpha)` and columns
/// `(tau, theta_tx, theta_rx)`; each `2x3` incidence block has rows
/// `(s_x, s_y)` and the same columns.
#[derive(Debug, Clone, PartialEq)]
pub struct TransformMatrix {
    /// LOS position block, absent when the LOS path is blocked.
    pub los_block: Option<Matrix3<f64>>,
    /// Position blocks of the NLOS paths.
    pub nlos_blocks: Vec<Matrix3<f64>>,
    /// Incidence-point blocks of the NLOS paths.
    pub incidence_blocks: Vec<Matrix2x3<f64>>,
}

impl TransformMatrix {
    pub fn n_paths(&self) -> usize {
        self.nlos_blocks.len() + usize::from(self.los_block.is_some())
    }

    /// Position blocks of all paths in path order.
    pub fn position_blocks(&self) -> impl Iterator<Item = &Matrix3<f64>> {
        self.los_block.iter().chain(self.nlos_blocks.iter())
    }
}

pub fn transformation_matrix(scenario: &Scenario, speed_of_light: f64, norm: Normalization) -> Result<TransformMatrix> {
    let c = speed_of_light;
    let row_scale = Matrix3::from_diagonal(&nalgebra::Vector3::new(norm.length, norm.length, norm.angle));

    let los_block = if scenario.has_los {
        let g = path_geometry(scenario, PathId::Los)?;
        let (sin, cos) = g.bearing_tx.sin_cos();
        let d = g.dist_tx;
        #[rustfmt::skip]
        let block = Matrix3::new(
            cos / c, -sin / d, -sin / d,
            sin / c,  cos / d,  cos / d,
            0.0,      0.0,     -1.0,
        );
        Some(row_scale * block)
    } else {
        None
    };

    let mut nlos_blocks = Vec::with_capacity(scenario.n_nlos());
    let mut incidence_blocks = Vec::with_capacity(scenario.n_nlos());
    for i in 0..scenario.n_nlos() {
        let g = path_geometry(scenario, PathId::Nlos(i))?;
        let (sin_r, cos_r) = g.bearing_rx.sin_cos();
        let (sin_t, cos_t) = g.bearing_tx.sin_cos();
        let r = g.dist_rx;
        let rho = g.dist_tx;
        #[rustfmt::skip]
        let block = Matrix3::new(
            -cos_r / c, 0.0,  sin_r / r,
            -sin_r / c, 0.0, -cos_r / r,
            0.0,        0.0, -1.0,
        );
        nlos_blocks.push(row_scale * block);
        #[rustfmt::skip]
        let inc = Matrix2x3::new(
            (cos_t + cos_r) / c, -sin_t / rho, -sin_r / r,
            (sin_t + sin_r) / c,  cos_t / rho,  cos_r / r,
        );
        incidence_blocks.push(inc * norm.length);
    }

    Ok(TransformMatrix {
        los_block,
        nlos_blocks,
        incidence_blocks,
    })
}

/// Dense `(3 + 2 N_nlos) x 3K` transformation matrix, columns in path order.
pub fn assemble_t(t: &TransformMatrix) -> DMatrix<f64> {
    let k = t.n_paths();
    let n_nlos = t.nlos_blocks.len();
    let mut out = DMatrix::zeros(3 + 2 * n_nlos, 3 * k);
    for (j, block) in t.position_blocks().enumerate() {
        out.view_mut((0, 3 * j), (3, 3)).copy_from(block);
    }
    let offset = usize::from(t.los_block.is_some());
    for (i, block) in t.incidence_blocks.iter().enumerate() {
        out.view_mut((3 + 2 * i, 3 * (i + offset)), (2, 3)).copy_from(block);
    }
    out
}
