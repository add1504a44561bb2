use std::path::{Path, PathBuf};
use std::time::Instant;

use nlos_bounds::bounds::sweep;
use nlos_bounds::pipeline::{Evaluation, Mode};

use crate::artifacts::{heatmap_svg, sha256_hex, sweep_csv, to_json, Marker, OutputSet, RunManifest};
use crate::error::{CliError, Result};
use crate::report::{mode_name, BoundsCommandJson, BoundsJson, CompareJson, DecomposeJson, SweepSummary};
use crate::scenario_file::{LoadedScenario, ScenarioFile};

/// Overrides shared by every subcommand.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub fast: bool,
    pub ntx: Option<usize>,
}

impl Overrides {
    pub fn mode(&self) -> Mode {
        if self.fast {
            Mode::Fast
        } else {
            Mode::Full
        }
    }

    fn apply(&self, file: &mut ScenarioFile) {
        if let Some(seed) = self.seed {
            file.seed = seed;
        }
        if let Some(n) = self.ntx {
            file.set_anchor_elements(n);
        }
    }
}

/// What a command prints and, with `--out`, writes.
#[derive(Debug)]
pub struct CommandOutput {
    pub stdout: String,
    pub manifest: Option<PathBuf>,
}

fn evaluate(file: &ScenarioFile, mode: Mode) -> Result<Evaluation> {
    let scenario = file.scenario()?;
    Ok(file.evaluator(mode)?.evaluate(&scenario)?)
}

#[allow(clippy::too_many_arguments)]
fn finish(
    command: &str,
    inputs: &[&LoadedScenario],
    seed: u64,
    mode: Mode,
    out: Option<&Path>,
    files: Vec<(&str, Vec<u8>)>,
    stdout: String,
    start: Instant,
) -> Result<CommandOutput> {
    let manifest = match out {
        Some(dir) => {
            let mut set = OutputSet::new(dir);
            for (name, bytes) in files {
                set.add(name, bytes);
            }
            let records: Vec<(&Path, &[u8])> = inputs.iter().map(|i| (i.path.as_path(), i.bytes.as_slice())).collect();
            let manifest = RunManifest::new(command, &records, seed, mode_name(mode));
            Some(set.write(manifest, start.elapsed())?)
        }
        None => None,
    };
    Ok(CommandOutput { stdout, manifest })
}

pub fn decompose(input: &Path, opts: &Overrides, out: Option<&Path>) -> Result<CommandOutput> {
    let start = Instant::now();
    let mut loaded = LoadedScenario::load(input)?;
    opts.apply(&mut loaded.file);
    let eval = evaluate(&loaded.file, opts.mode())?;
    let json = to_json(&DecomposeJson::new(&eval, opts.mode(), loaded.file.seed))?;
    let seed = loaded.file.seed;
    finish(
        "decompose",
        &[&loaded],
        seed,
        opts.mode(),
        out,
        vec![("decompose.json", json.clone().into_bytes())],
        json,
        start,
    )
}

pub fn bounds(input: &Path, opts: &Overrides, out: Option<&Path>) -> Result<CommandOutput> {
    let start = Instant::now();
    let mut loaded = LoadedScenario::load(input)?;
    opts.apply(&mut loaded.file);
    let eval = evaluate(&loaded.file, opts.mode())?;
    let json = to_json(&BoundsCommandJson {
        mode: mode_name(opts.mode()),
        seed: loaded.file.seed,
        bounds: BoundsJson::from(&eval.report),
    })?;
    let seed = loaded.file.seed;
    finish(
        "bounds",
        &[&loaded],
        seed,
        opts.mode(),
        out,
        vec![("bounds.json", json.clone().into_bytes())],
        json,
        start,
    )
}

/// Colour range of the gain heat map below its peak.
const LOG_GAIN_DECADES: f64 = 6.0;

/// Moves one extra incidence point over the grid of the file's `[sweep]`
/// table (or `grid` points per axis) on top of the file's paths.
pub fn sweep_cmd(input: &Path, opts: &Overrides, grid: Option<usize>, out: &Path) -> Result<CommandOutput> {
    let start = Instant::now();
    let mut loaded = LoadedScenario::load(input)?;
    opts.apply(&mut loaded.file);
    let file = &loaded.file;
    let mut spec = file.sweep.unwrap_or_default();
    if let Some(n) = grid {
        spec.n = n;
    }
    let base = file.scenario()?;
    let evaluator = file.evaluator(opts.mode())?;
    let result = sweep(&base, &spec.grid()?, &evaluator)?;
    log::info!(
        "{} cells, {} valid, {:.2} s",
        result.cells.len(),
        result.valid_cells().count(),
        start.elapsed().as_secs_f64()
    );

    let n_tx = base.anchor.n_elements();
    let summary = to_json(&SweepSummary::new(&result, opts.mode(), file.seed, n_tx))?;
    let markers = [
        Marker {
            label: "anchor".into(),
            x: base.anchor.position.x,
            y: base.anchor.position.y,
        },
        Marker {
            label: "mobile".into(),
            x: base.mobile.position.x,
            y: base.mobile.position.y,
        },
    ];
    let log_gain: Vec<Option<f64>> = result
        .cells
        .iter()
        .map(|c| (c.valid && c.lambda_xy > 0.0).then(|| c.lambda_xy.log10()))
        .collect();
    let reduction: Vec<Option<f64>> = result
        .cells
        .iter()
        .map(|c| c.valid.then_some(c.delta_peb_pct))
        .collect();
    let files = vec![
        ("sweep.csv", sweep_csv(&result)?),
        ("summary.json", summary.clone().into_bytes()),
        (
            "lambda_xy.svg",
            heatmap_svg(
                &result,
                &log_gain,
                &format!("net position information gain, N_TX = {n_tx}"),
                "log10",
                Some(LOG_GAIN_DECADES),
                &markers,
            )
            .into_bytes(),
        ),
        (
            "delta_peb.svg",
            heatmap_svg(
                &result,
                &reduction,
                &format!("PEB reduction, N_TX = {n_tx}"),
                "%",
                None,
                &markers,
            )
            .into_bytes(),
        ),
    ];
    let seed = file.seed;
    finish("sweep", &[&loaded], seed, opts.mode(), Some(out), files, summary, start)
}

/// The resolved link parameters must match for a comparison to be meaningful.
fn check_comparable(a: &LoadedScenario, b: &LoadedScenario) -> Result<()> {
    let (fa, fb) = (&a.file, &b.file);
    let mut diffs = Vec::new();
    if fa.signal_config()? != fb.signal_config()? {
        diffs.push("signal");
    }
    if fa.reflection_gain != fb.reflection_gain {
        diffs.push("reflection_gain");
    }
    if fa.speed_of_light() != fb.speed_of_light() {
        diffs.push("speed_of_light");
    }
    if diffs.is_empty() {
        Ok(())
    } else {
        Err(CliError::Mismatch(format!(
            "{} and {} differ in {}",
            a.path.display(),
            b.path.display(),
            diffs.join(", ")
        )))
    }
}

pub fn compare(input_a: &Path, input_b: &Path, opts: &Overrides, out: Option<&Path>) -> Result<CommandOutput> {
    let start = Instant::now();
    let mut a = LoadedScenario::load(input_a)?;
    let mut b = LoadedScenario::load(input_b)?;
    opts.apply(&mut a.file);
    opts.apply(&mut b.file);
    check_comparable(&a, &b)?;
    let ea = evaluate(&a.file, opts.mode())?;
    let eb = evaluate(&b.file, opts.mode())?;
    let json = to_json(&CompareJson::new(&ea, &eb, opts.mode(), (a.file.seed, b.file.seed)))?;
    log::debug!("inputs {} {}", sha256_hex(&a.bytes), sha256_hex(&b.bytes));
    let seed = a.file.seed;
    finish(
        "compare",
        &[&a, &b],
        seed,
        opts.mode(),
        out,
        vec![("compare.json", json.clone().into_bytes())],
        json,
        start,
    )
}
