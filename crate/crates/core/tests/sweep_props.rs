mod support;

use std::f64::consts::FRAC_PI_4;

use nlos_bounds::bounds::{sweep, SweepGrid, SweepResult};
use nlos_bounds::geometry::{ula_offsets, Anchor, Mobile, Point, Scenario};
use nlos_bounds::pipeline::{Evaluator, Mode};
use support::reference_scenario;

fn fast() -> Evaluator {
    Evaluator::reference().with_mode(Mode::Fast).with_seed(11)
}

fn cell(result: &SweepResult, i: usize, j: usize) -> &nlos_bounds::bounds::SweepCell {
    &result.cells[j * result.grid.x.n + i]
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}

#[test]
fn mirrored_cells_match() {
    // anchor array along the q-p line, mobile array across it: both are
    // symmetric under reflection about y = x
    let ev = fast();
    let half = ev.config.wavelength(ev.speed_of_light) / 2.0;
    let base = Scenario::new(
        Anchor::new(Point::zeros(), FRAC_PI_4, ula_offsets(25, half)).unwrap(),
        Mobile::new(Point::new(5.0, 5.0), 3.0 * FRAC_PI_4, ula_offsets(25, half)).unwrap(),
        vec![],
        true,
    )
    .unwrap();
    let n = 9;
    let result = sweep(&base, &SweepGrid::square(0.5, 9.5, n).unwrap(), &ev).unwrap();
    let scale_xy = result.max_by(|c| c.lambda_xy).unwrap().lambda_xy;
    let scale_alpha = result.max_by(|c| c.lambda_alpha).unwrap().lambda_alpha;
    let mut compared = 0;
    for j in 0..n {
        for i in 0..n {
            let (a, b) = (cell(&result, i, j), cell(&result, j, i));
            assert_eq!(a.valid, b.valid, "({i}, {j})");
            if i == j || !a.valid {
                continue;
            }
            assert!(
                (a.lambda_xy - b.lambda_xy).abs() < 1e-9 * scale_xy,
                "({i}, {j}) {} {}",
                a.lambda_xy,
                b.lambda_xy
            );
            assert!(
                (a.lambda_alpha - b.lambda_alpha).abs() < 1e-9 * scale_alpha,
                "({i}, {j})"
            );
            compared += 1;
        }
    }
    assert!(compared > n * (n - 1) / 2);
    // cells on the q-p segment have no resolvable incidence point
    assert!(!cell(&result, 4, 4).valid);
}

#[test]
fn narrower_beams_give_larger_peak_gain() {
    let grid = SweepGrid::square(0.5, 9.5, 7).unwrap();
    let peak = |n_tx| {
        let r = sweep(&reference_scenario(n_tx, 25, &[], true), &grid, &fast()).unwrap();
        r.max_by(|c| c.lambda_xy).unwrap().lambda_xy
    };
    assert!(peak(150) > peak(25));
}

#[test]
fn far_cells_inform_orientation() {
    let grid = SweepGrid::square(400.0, 500.0, 3).unwrap();
    let r = sweep(&reference_scenario(25, 25, &[], true), &grid, &fast()).unwrap();
    for c in r.valid_cells() {
        let share = c.lambda_alpha / (c.lambda_alpha + c.lambda_xy);
        assert!(share > 0.99, "({}, {}) {share}", c.x, c.y);
    }
    assert_eq!(r.valid_cells().count(), 9);
}

#[test]
fn sweeps_are_deterministic() {
    let grid = SweepGrid::square(1.0, 9.0, 5).unwrap();
    let base = reference_scenario(25, 25, &[], true);
    let ev = Evaluator::reference().with_seed(3);
    let a = sweep(&base, &grid, &ev).unwrap();
    let b = sweep(&base, &grid, &ev).unwrap();
    assert_eq!(format!("{:?}", a.cells), format!("{:?}", b.cells));
}

#[test]
fn full_and_fast_sweeps_agree() {
    let grid = SweepGrid::square(1.0, 9.0, 4).unwrap();
    let base = reference_scenario(25, 25, &[], true);
    let full = sweep(&base, &grid, &Evaluator::reference().with_seed(5)).unwrap();
    let fast = sweep(&base, &grid, &fast()).unwrap();
    assert!(rel(full.base_peb, fast.base_peb) < 1e-6);
    for (a, b) in full.cells.iter().zip(&fast.cells) {
        assert_eq!(a.valid, b.valid);
        if a.valid {
            assert!(
                (a.delta_peb_pct - b.delta_peb_pct).abs() < 1e-4,
                "{} {}",
                a.delta_peb_pct,
                b.delta_peb_pct
            );
        }
    }
}
