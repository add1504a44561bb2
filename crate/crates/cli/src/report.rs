//! JSON shapes of the command outputs.

use std::collections::BTreeMap;

use nalgebra::Matrix3;
use serde::Serialize;

use nlos_bounds::bounds::{BoundReport, SweepCell, SweepResult, TermReport};
use nlos_bounds::pipeline::{Evaluation, Mode};

pub type Rows3 = [[f64; 3]; 3];

fn rows(m: &Matrix3<f64>) -> Rows3 {
    [0, 1, 2].map(|i| [0, 1, 2].map(|j| m[(i, j)]))
}

/// Infinite bounds serialise as `null`.
fn finite(v: f64) -> Option<f64> {
    v.is_finite().then_some(v)
}

pub fn mode_name(mode: Mode) -> &'static str {
    match mode {
        Mode::Full => "full",
        Mode::Fast => "fast",
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct TermJson {
    pub source: String,
    pub lambda: f64,
    pub v: [f64; 3],
    pub lambda_xy: f64,
    pub lambda_alpha: f64,
    pub capped: bool,
    pub aligned: bool,
}

impl From<&TermReport> for TermJson {
    fn from(t: &TermReport) -> Self {
        Self {
            source: t.term.source.to_string(),
            lambda: t.term.lam,
            v: [t.term.v.x, t.term.v.y, t.term.v.z],
            lambda_xy: t.lambda_xy,
            lambda_alpha: t.lambda_alpha,
            capped: t.term.capped,
            aligned: t.term.aligned,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct BoundsJson {
    pub peb_m: Option<f64>,
    pub oeb_rad: Option<f64>,
    pub efim_rank: usize,
    pub condition_number: Option<f64>,
}

impl From<&BoundReport> for BoundsJson {
    fn from(r: &BoundReport) -> Self {
        Self {
            peb_m: finite(r.peb),
            oeb_rad: finite(r.oeb),
            efim_rank: r.efim_rank,
            condition_number: finite(r.condition_number),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct DecomposeJson {
    pub mode: &'static str,
    pub seed: u64,
    pub n_los_terms: usize,
    pub n_nlos_terms: usize,
    pub terms: Vec<TermJson>,
    pub efim: Rows3,
    pub los_matrix: Rows3,
    pub nlos_gain_matrix: Rows3,
    pub nlos_loss_matrix: Rows3,
    pub nlos_net_matrix: Rows3,
    pub bounds: BoundsJson,
    pub pseudo_inverse: bool,
}

impl DecomposeJson {
    pub fn new(eval: &Evaluation, mode: Mode, seed: u64) -> Self {
        let d = &eval.decomposition;
        Self {
            mode: mode_name(mode),
            seed,
            n_los_terms: d.los_terms.len(),
            n_nlos_terms: d.nlos_terms.len(),
            terms: eval.report.terms.iter().map(TermJson::from).collect(),
            efim: rows(&eval.efim),
            los_matrix: rows(&d.los_matrix),
            nlos_gain_matrix: rows(&d.gain_matrix),
            nlos_loss_matrix: rows(&d.loss_matrix),
            nlos_net_matrix: rows(&d.net_matrix),
            bounds: BoundsJson::from(&eval.report),
            pseudo_inverse: eval.pseudo_inverse,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct BoundsCommandJson {
    pub mode: &'static str,
    pub seed: u64,
    #[serde(flatten)]
    pub bounds: BoundsJson,
}

#[derive(Debug, Clone, Serialize)]
pub struct TermDiff {
    pub source: String,
    pub lambda_a: Option<f64>,
    pub lambda_b: Option<f64>,
    /// `lambda_b - lambda_a`, missing terms counted as zero.
    pub delta_lambda: f64,
    pub delta_lambda_xy: f64,
    pub delta_lambda_alpha: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct CompareJson {
    pub mode: &'static str,
    pub seed_a: u64,
    pub seed_b: u64,
    pub a: BoundsJson,
    pub b: BoundsJson,
    /// `peb_a - peb_b`, m; positive when `b` is tighter.
    pub delta_peb_m: Option<f64>,
    /// `oeb_a - oeb_b`, rad.
    pub delta_oeb_rad: Option<f64>,
    pub delta_peb_pct: Option<f64>,
    /// `peb_b / peb_a`.
    pub peb_ratio: Option<f64>,
    pub terms: Vec<TermDiff>,
}

impl CompareJson {
    pub fn new(a: &Evaluation, b: &Evaluation, mode: Mode, seeds: (u64, u64)) -> Self {
        let (ra, rb) = (&a.report, &b.report);
        let delta = |x: f64, y: f64| {
            if x.is_finite() && y.is_finite() {
                Some(x - y)
            } else {
                None
            }
        };
        let mut by_source: BTreeMap<String, (Option<&TermReport>, Option<&TermReport>)> = BTreeMap::new();
        for t in &ra.terms {
            by_source.entry(t.term.source.to_string()).or_default().0 = Some(t);
        }
        for t in &rb.terms {
            by_source.entry(t.term.source.to_string()).or_default().1 = Some(t);
        }
        let get = |t: Option<&TermReport>, f: fn(&TermReport) -> f64| t.map_or(0.0, f);
        let terms = by_source
            .into_iter()
            .map(|(source, (ta, tb))| TermDiff {
                source,
                lambda_a: ta.map(|t| t.term.lam),
                lambda_b: tb.map(|t| t.term.lam),
                delta_lambda: get(tb, |t| t.term.lam) - get(ta, |t| t.term.lam),
                delta_lambda_xy: get(tb, |t| t.lambda_xy) - get(ta, |t| t.lambda_xy),
                delta_lambda_alpha: get(tb, |t| t.lambda_alpha) - get(ta, |t| t.lambda_alpha),
            })
            .collect();
        let peb_ratio = finite(rb.peb / ra.peb).filter(|r| *r > 0.0);
        Self {
            mode: mode_name(mode),
            seed_a: seeds.0,
            seed_b: seeds.1,
            a: BoundsJson::from(ra),
            b: BoundsJson::from(rb),
            delta_peb_m: delta(ra.peb, rb.peb),
            delta_oeb_rad: delta(ra.oeb, rb.oeb),
            delta_peb_pct: delta(ra.peb, rb.peb).map(|d| 100.0 * d / ra.peb),
            peb_ratio,
            terms,
        }
    }
}

/// One CSV row per grid cell, x varying fastest. Invalid cells leave the
/// numeric columns empty.
#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    pub cell_x: f64,
    pub cell_y: f64,
    pub lambda_xy: Option<f64>,
    pub lambda_alpha: Option<f64>,
    pub delta_peb_pct: Option<f64>,
    pub valid: bool,
}

impl From<&SweepCell> for SweepRow {
    fn from(c: &SweepCell) -> Self {
        let value = |v: f64| c.valid.then_some(v);
        Self {
            cell_x: c.x,
            cell_y: c.y,
            lambda_xy: value(c.lambda_xy),
            lambda_alpha: value(c.lambda_alpha),
            delta_peb_pct: value(c.delta_peb_pct),
            valid: c.valid,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Extremum {
    pub max: f64,
    pub argmax: [f64; 2],
    pub min: f64,
    pub argmin: [f64; 2],
}

impl Extremum {
    fn of(result: &SweepResult, f: fn(&SweepCell) -> f64) -> Option<Self> {
        let hi = result.max_by(f)?;
        let lo = result.min_by(f)?;
        Some(Self {
            max: f(hi),
            argmax: [hi.x, hi.y],
            min: f(lo),
            argmin: [lo.x, lo.y],
        })
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct GridJson {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
    pub n: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepSummary {
    pub mode: &'static str,
    pub seed: u64,
    pub n_tx: usize,
    pub grid: GridJson,
    pub base_peb_m: Option<f64>,
    pub valid_cells: usize,
    pub invalid_cells: usize,
    pub lambda_xy: Option<Extremum>,
    pub lambda_alpha: Option<Extremum>,
    pub delta_peb_pct: Option<Extremum>,
}

impl SweepSummary {
    pub fn new(result: &SweepResult, mode: Mode, seed: u64, n_tx: usize) -> Self {
        let valid = result.valid_cells().count();
        Self {
            mode: mode_name(mode),
            seed,
            n_tx,
            grid: GridJson {
                x_min: result.grid.x.min,
                x_max: result.grid.x.max,
                y_min: result.grid.y.min,
                y_max: result.grid.y.max,
                n: result.grid.x.n,
            },
            base_peb_m: finite(result.base_peb),
            valid_cells: valid,
            invalid_cells: result.cells.len() - valid,
            lambda_xy: Extremum::of(result, |c| c.lambda_xy),
            lambda_alpha: Extremum::of(result, |c| c.lambda_alpha),
            delta_peb_pct: Extremum::of(result, |c| c.delta_peb_pct),
        }
    }
}
