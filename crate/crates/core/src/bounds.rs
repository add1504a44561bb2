//! Position and orientation error bounds, and scatterer sweeps.

use nalgebra::Matrix3;
use rayon::prelude::*;

use crate::efim::{projected_gains, RankOneTerm};
use crate::geometry::{Point, Scenario};
use crate::pipeline::Evaluator;
use crate::{Error, Result};

/// Relative eigenvalue threshold used for the rank of an EFIM.
pub const RANK_RTOL: f64 = 1e-12;

/// Relative determinant threshold of the `3x3` adjugate inverse.
pub const INVERSE_RTOL: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TermReport {
    pub term: RankOneTerm,
    pub lambda_xy: f64,
    pub lambda_alpha: f64,
}

impl From<RankOneTerm> for TermReport {
    fn from(term: RankOneTerm) -> Self {
        let (lambda_xy, lambda_alpha) = projected_gains(&term);
        Self {
            term,
            lambda_xy,
            lambda_alpha,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundReport {
    /// Position error bound (m), `+inf` when the EFIM is singular.
    pub peb: f64,
    /// Orientation error bound (rad), `+inf` when the EFIM is singular.
    pub oeb: f64,
    pub efim_rank: usize,
    /// `lambda_max / lambda_min`, `+inf` when singular.
    pub condition_number: f64,
    pub terms: Vec<TermReport>,
}

/// Adjugate inverse of the matrix scaled to unit diagonal, `None` when the
/// scaled determinant is at most `INVERSE_RTOL * ||scaled||^3`.
pub fn inverse3(m: &Matrix3<f64>) -> Option<Matrix3<f64>> {
    let diag = m.diagonal();
    if diag.iter().any(|&d| !(d > 0.0) || !d.is_finite()) {
        return None;
    }
    let scale = diag.map(|d| d.sqrt().recip());
    let s = Matrix3::from_fn(|i, j| m[(i, j)] * scale[i] * scale[j]);
    let c = |r0: usize, r1: usize, c0: usize, c1: usize| s[(r0, c0)] * s[(r1, c1)] - s[(r0, c1)] * s[(r1, c0)];
    #[rustfmt::skip]
    let adj = Matrix3::new(
        c(1, 2, 1, 2), -c(0, 2, 1, 2), c(0, 1, 1, 2),
        -c(1, 2, 0, 2), c(0, 2, 0, 2), -c(0, 1, 0, 2),
        c(1, 2, 0, 1), -c(0, 2, 0, 1), c(0, 1, 0, 1),
    );
    let det = s[(0, 0)] * adj[(0, 0)] + s[(0, 1)] * adj[(1, 0)] + s[(0, 2)] * adj[(2, 0)];
    let norm = s.norm();
    if !(det.abs() > INVERSE_RTOL * norm * norm * norm) || !det.is_finite() {
        return None;
    }
    Some(Matrix3::from_fn(|i, j| adj[(i, j)] / det * scale[i] * scale[j]))
}

pub fn efim_rank(efim: &Matrix3<f64>) -> (usize, f64) {
    let ev = efim.symmetric_eigen().eigenvalues;
    let max = ev.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if max == 0.0 {
        return (0, f64::INFINITY);
    }
    let rank = ev.iter().filter(|&&v| v > RANK_RTOL * max).count();
    let min = ev.min();
    let cond = if rank == 3 { ev.max() / min } else { f64::INFINITY };
    (rank, cond)
}

/// PEB = `sqrt(tr([J^-1]_{xy}))`, OEB = `sqrt([J^-1]_{alpha alpha})`.
pub fn bounds(efim: &Matrix3<f64>) -> BoundReport {
    let (efim_rank, condition_number) = efim_rank(efim);
    let inv = if efim_rank == 3 { inverse3(efim) } else { None };
    let (peb, oeb) = match inv {
        Some(inv) if inv[(0, 0)] + inv[(1, 1)] > 0.0 && inv[(2, 2)] > 0.0 => {
            ((inv[(0, 0)] + inv[(1, 1)]).sqrt(), inv[(2, 2)].sqrt())
        }
        _ => (f64::INFINITY, f64::INFINITY),
    };
    BoundReport {
        peb,
        oeb,
        efim_rank,
        condition_number,
        terms: Vec::new(),
    }
}

/// [`bounds`] with the rank-one terms attached.
pub fn bounds_with_terms<'a>(efim: &Matrix3<f64>, terms: impl IntoIterator<Item = &'a RankOneTerm>) -> BoundReport {
    let mut report = bounds(efim);
    report.terms = terms.into_iter().map(|t| TermReport::from(*t)).collect();
    report
}

/// `(peb_base - peb_aug) / peb_base`; zero when the base bound is infinite
/// and the augmented one is too.
pub fn relative_reduction(base: f64, augmented: f64) -> f64 {
    if base.is_infinite() {
        return if augmented.is_infinite() { 0.0 } else { 1.0 };
    }
    (base - augmented) / base
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AxisRange {
    pub min: f64,
    pub max: f64,
    pub n: usize,
}

impl AxisRange {
    pub fn new(min: f64, max: f64, n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidInput(format!(
                "a sweep axis needs at least 2 points, got {n}"
            )));
        }
        if !(min < max) || !min.is_finite() || !max.is_finite() {
            return Err(Error::InvalidInput(format!("invalid sweep range [{min}, {max}]")));
        }
        Ok(Self { min, max, n })
    }

    pub fn values(&self) -> Vec<f64> {
        let last = (self.n - 1) as f64;
        (0..self.n)
            .map(|i| (self.min * (last - i as f64) + self.max * i as f64) / last)
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepGrid {
    pub x: AxisRange,
    pub y: AxisRange,
}

impl SweepGrid {
    pub fn square(min: f64, max: f64, n: usize) -> Result<Self> {
        let axis = AxisRange::new(min, max, n)?;
        Ok(Self { x: axis, y: axis })
    }

    /// Cell centres, x varying fastest.
    pub fn points(&self) -> Vec<Point> {
        let xs = self.x.values();
        self.y
            .values()
            .into_iter()
            .flat_map(|y| xs.iter().map(move |&x| Point::new(x, y)))
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepCell {
    pub x: f64,
    pub y: f64,
    /// Position share of the net gain of the moving scatterer (`NaN` if invalid).
    pub lambda_xy: f64,
    /// Orientation share of the net gain (`NaN` if invalid).
    pub lambda_alpha: f64,
    /// Relative PEB reduction in percent (`NaN` if invalid).
    pub delta_peb_pct: f64,
    pub valid: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub grid: SweepGrid,
    pub base_peb: f64,
    pub cells: Vec<SweepCell>,
}

impl SweepResult {
    pub fn valid_cells(&self) -> impl Iterator<Item = &SweepCell> {
        self.cells.iter().filter(|c| c.valid)
    }

    pub fn max_by(&self, f: impl Fn(&SweepCell) -> f64) -> Option<&SweepCell> {
        self.valid_cells().max_by(|a, b| f(a).total_cmp(&f(b)))
    }

    pub fn min_by(&self, f: impl Fn(&SweepCell) -> f64) -> Option<&SweepCell> {
        self.valid_cells().min_by(|a, b| f(a).total_cmp(&f(b)))
    }
}

/// Moves one extra scatterer over `grid` on top of `base` and records the net
/// gain of that path and the PEB reduction it brings. Cells run in parallel;
/// the output is in grid order and depends only on the evaluator's seed.
pub fn sweep(base: &Scenario, grid: &SweepGrid, evaluator: &Evaluator) -> Result<SweepResult> {
    let base_eval = evaluator.evaluate(base)?;
    let base_peb = base_eval.report.peb;
    let base_phases = evaluator.phases(0, base.n_paths());
    let points = grid.points();
    let cells = points
        .par_iter()
        .enumerate()
        .map(|(idx, s)| {
            let invalid = SweepCell {
                x: s.x,
                y: s.y,
                lambda_xy: f64::NAN,
                lambda_alpha: f64::NAN,
                delta_peb_pct: f64::NAN,
                valid: false,
            };
            let Ok(scenario) = base.with_incidence_point(*s) else {
                return invalid;
            };
            let mut phases = base_phases.clone();
            phases.push(evaluator.phases(idx as u64 + 1, 1)[0]);
            match evaluator.evaluate_with_phases(&scenario, &phases) {
                Ok(eval) => {
                    let term = eval.decomposition.nlos_terms.last().copied();
                    let Some(term) = term.filter(|t| !t.capped) else {
                        return invalid;
                    };
                    let (lambda_xy, lambda_alpha) = projected_gains(&term);
                    SweepCell {
                        lambda_xy,
                        lambda_alpha,
                        delta_peb_pct: 100.0 * relative_reduction(base_peb, eval.report.peb),
                        valid: true,
                        ..invalid
                    }
                }
                Err(e) => {
                    log::debug!("cell ({}, {}) skipped: {e}", s.x, s.y);
                    invalid
                }
            }
        })
        .collect();
    Ok(SweepResult {
        grid: *grid,
        base_peb,
        cells,
    })
}
