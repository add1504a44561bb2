//! Output files: atomic writes, sweep CSV, SVG heat maps and run manifests.

use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::Serialize;
use sha2::{Digest, Sha256};

use nlos_bounds::bounds::SweepResult;

use crate::error::{CliError, Result};
use crate::report::SweepRow;

pub const MANIFEST_FILE: &str = "manifest.json";

/// Writes `bytes` to a temporary file next to `path` and renames it over
/// `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let name = path
        .file_name()
        .ok_or_else(|| CliError::io(path, std::io::Error::other("not a file path")))?
        .to_string_lossy();
    let tmp = path.with_file_name(format!(".{name}.tmp"));
    let mut file = fs::File::create(&tmp).map_err(|e| CliError::io(&tmp, e))?;
    file.write_all(bytes).map_err(|e| CliError::io(&tmp, e))?;
    file.sync_all().map_err(|e| CliError::io(&tmp, e))?;
    drop(file);
    fs::rename(&tmp, path).map_err(|e| CliError::io(path, e))
}

pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

pub fn sweep_csv(result: &SweepResult) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for cell in &result.cells {
        w.serialize(SweepRow::from(cell))?;
    }
    w.into_inner().map_err(|e| CliError::Csv(e.into_error().into()))
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Debug, Clone, PartialEq, Serialize, serde::Deserialize)]
pub struct InputRecord {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, serde::Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub tool_version: String,
    pub command: String,
    /// sha256 of the input file, or of the concatenated input files when
    /// there are several.
    pub input_hash: String,
    pub inputs: Vec<InputRecord>,
    pub seed: u64,
    pub mode: String,
    pub wall_time_s: f64,
    /// File names relative to the output directory.
    pub outputs: Vec<String>,
}

impl RunManifest {
    pub fn new(command: &str, inputs: &[(&Path, &[u8])], seed: u64, mode: &str) -> Self {
        let all: Vec<u8> = inputs.iter().flat_map(|(_, b)| b.iter().copied()).collect();
        Self {
            tool: env!("CARGO_PKG_NAME").to_string(),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            command: command.to_string(),
            input_hash: sha256_hex(&all),
            inputs: inputs
                .iter()
                .map(|(p, b)| InputRecord {
                    path: p.display().to_string(),
                    sha256: sha256_hex(b),
                })
                .collect(),
            seed,
            mode: mode.to_string(),
            wall_time_s: 0.0,
            outputs: Vec::new(),
        }
    }
}

/// Collects the files of one run and writes them with a manifest.
pub struct OutputSet {
    dir: PathBuf,
    files: Vec<(String, Vec<u8>)>,
}

impl OutputSet {
    pub fn new(dir: &Path) -> Self {
        Self {
            dir: dir.to_path_buf(),
            files: Vec::new(),
        }
    }

    pub fn add(&mut self, name: &str, bytes: impl Into<Vec<u8>>) {
        self.files.push((name.to_string(), bytes.into()));
    }

    pub fn write(self, mut manifest: RunManifest, wall_time: Duration) -> Result<PathBuf> {
        fs::create_dir_all(&self.dir).map_err(|e| CliError::io(&self.dir, e))?;
        for (name, bytes) in &self.files {
            write_atomic(&self.dir.join(name), bytes)?;
        }
        manifest.outputs = self.files.iter().map(|(n, _)| n.clone()).collect();
        manifest.wall_time_s = wall_time.as_secs_f64();
        let path = self.dir.join(MANIFEST_FILE);
        write_atomic(&path, to_json(&manifest)?.as_bytes())?;
        Ok(path)
    }
}

/// Viridis control points.
const COLORMAP: [(f64, [u8; 3]); 5] = [
    (0.0, [68, 1, 84]),
    (0.25, [59, 82, 139]),
    (0.5, [33, 145, 140]),
    (0.75, [94, 201, 98]),
    (1.0, [253, 231, 37]),
];

fn color(t: f64) -> String {
    let t = t.clamp(0.0, 1.0);
    let i = COLORMAP
        .iter()
        .rposition(|(s, _)| *s <= t)
        .unwrap_or(0)
        .min(COLORMAP.len() - 2);
    let (s0, c0) = COLORMAP[i];
    let (s1, c1) = COLORMAP[i + 1];
    let f = (t - s0) / (s1 - s0);
    let mix = |a: u8, b: u8| (a as f64 + f * (b as f64 - a as f64)).round() as u8;
    format!(
        "#{:02x}{:02x}{:02x}",
        mix(c0[0], c1[0]),
        mix(c0[1], c1[1]),
        mix(c0[2], c1[2])
    )
}

/// A labelled point drawn on top of the heat map.
#[derive(Debug, Clone)]
pub struct Marker {
    pub label: String,
    pub x: f64,
    pub y: f64,
}

const PLOT: f64 = 480.0;
const LEFT: f64 = 70.0;
const TOP: f64 = 40.0;

/// Cell raster of `values` (one per grid cell, x fastest, `None` for invalid
/// cells drawn grey) with a colorbar. With `max_span`, the colour range
/// covers at most that far below the largest value and lower cells saturate.
pub fn heatmap_svg(
    result: &SweepResult,
    values: &[Option<f64>],
    title: &str,
    unit: &str,
    max_span: Option<f64>,
    markers: &[Marker],
) -> String {
    let (nx, ny) = (result.grid.x.n, result.grid.y.n);
    let finite: Vec<f64> = values.iter().flatten().copied().filter(|v| v.is_finite()).collect();
    let lo = finite.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = finite.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let (lo, hi) = if finite.is_empty() { (0.0, 1.0) } else { (lo, hi) };
    let clipped = max_span.is_some_and(|span| hi - lo > span);
    let lo = match max_span {
        Some(span) if clipped => hi - span,
        _ => lo,
    };
    let span = if hi > lo { hi - lo } else { 1.0 };
    let (cw, ch) = (PLOT / nx as f64, PLOT / ny as f64);
    let (x0, x1) = (result.grid.x.min, result.grid.x.max);
    let (y0, y1) = (result.grid.y.min, result.grid.y.max);
    // cell centres sit at the grid points, so the axes extend half a cell
    let hx = (x1 - x0) / (nx - 1) as f64 / 2.0;
    let hy = (y1 - y0) / (ny - 1) as f64 / 2.0;
    let px = |x: f64| LEFT + (x - (x0 - hx)) / (x1 - x0 + 2.0 * hx) * PLOT;
    let py = |y: f64| TOP + PLOT - (y - (y0 - hy)) / (y1 - y0 + 2.0 * hy) * PLOT;

    let mut s = String::new();
    let width = LEFT + PLOT + 130.0;
    let height = TOP + PLOT + 60.0;
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{}" y="24" text-anchor="middle" font-size="14">{}</text>"#,
        LEFT + PLOT / 2.0,
        escape(title)
    );
    s.push_str("<g shape-rendering=\"crispEdges\">\n");
    for j in 0..ny {
        for i in 0..nx {
            let fill = match values[j * nx + i] {
                Some(v) if v.is_finite() => color((v - lo) / span),
                _ => "#bdbdbd".to_string(),
            };
            let _ = writeln!(
                s,
                r#"<rect x="{:.3}" y="{:.3}" width="{:.3}" height="{:.3}" fill="{fill}"/>"#,
                LEFT + i as f64 * cw,
                TOP + PLOT - (j + 1) as f64 * ch,
                cw,
                ch
            );
        }
    }
    s.push_str("</g>\n");
    let _ = writeln!(
        s,
        r#"<rect x="{LEFT}" y="{TOP}" width="{PLOT}" height="{PLOT}" fill="none" stroke="black"/>"#
    );
    for m in markers {
        if (x0 - hx..=x1 + hx).contains(&m.x) && (y0 - hy..=y1 + hy).contains(&m.y) {
            let (cx, cy) = (px(m.x), py(m.y));
            let _ = writeln!(
                s,
                r#"<circle cx="{cx:.3}" cy="{cy:.3}" r="5" fill="white" stroke="black" stroke-width="1.5"/>"#
            );
            let _ = writeln!(
                s,
                r#"<text x="{:.3}" y="{:.3}" fill="black">{}</text>"#,
                cx + 8.0,
                cy - 6.0,
                escape(&m.label)
            );
        }
    }
    // axis ticks at both ends and the middle
    for k in 0..3 {
        let f = k as f64 / 2.0;
        let (xv, yv) = (x0 + f * (x1 - x0), y0 + f * (y1 - y0));
        let _ = writeln!(
            s,
            r#"<text x="{:.3}" y="{}" text-anchor="middle">{}</text>"#,
            px(xv),
            TOP + PLOT + 18.0,
            fmt_tick(xv)
        );
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{:.3}" text-anchor="end">{}</text>"#,
            LEFT - 6.0,
            py(yv) + 4.0,
            fmt_tick(yv)
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle">x (m)</text>"#,
        LEFT + PLOT / 2.0,
        TOP + PLOT + 40.0
    );
    let _ = writeln!(
        s,
        r#"<text x="20" y="{}" text-anchor="middle" transform="rotate(-90 20 {})">y (m)</text>"#,
        TOP + PLOT / 2.0,
        TOP + PLOT / 2.0
    );

    let bar_x = LEFT + PLOT + 30.0;
    let steps = 64;
    let step_h = PLOT / steps as f64;
    s.push_str("<g shape-rendering=\"crispEdges\">\n");
    for k in 0..steps {
        let t = (k as f64 + 0.5) / steps as f64;
        let _ = writeln!(
            s,
            r#"<rect x="{bar_x}" y="{:.3}" width="20" height="{:.3}" fill="{}"/>"#,
            TOP + PLOT - (k + 1) as f64 * step_h,
            step_h,
            color(t)
        );
    }
    s.push_str("</g>\n");
    let _ = writeln!(
        s,
        r#"<rect x="{bar_x}" y="{TOP}" width="20" height="{PLOT}" fill="none" stroke="black"/>"#
    );
    for (f, v) in [(0.0, lo), (0.5, (lo + hi) / 2.0), (1.0, hi)] {
        let prefix = if f == 0.0 && clipped { "&#8804; " } else { "" };
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{:.3}">{prefix}{}</text>"#,
            bar_x + 26.0,
            TOP + PLOT - f * PLOT + 4.0,
            fmt_tick(v)
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
        bar_x + 10.0,
        TOP - 8.0,
        escape(unit)
    );
    s.push_str("</svg>\n");
    s
}

fn fmt_tick(v: f64) -> String {
    if v != 0.0 && (v.abs() >= 1e4 || v.abs() < 1e-2) {
        format!("{v:.2e}")
    } else {
        format!("{v:.2}")
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
