//! Metadata blocks, number formatting and file writers.

use std::io::{self, Write};
use std::path::Path;

use feedback_phase::sweep::SweepGrid;
use image::{Rgb, RgbImage};
use serde::Serialize;
use serde_json::{Map, Value};

use crate::config::{ConfigEcho, RunConfig};
use crate::error::CliError;

/// Shortest decimal string that parses back to the same `f64`.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:?}")
}

pub fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_f64).unwrap_or_default()
}

#[derive(Clone, Debug, Serialize)]
pub struct Metadata {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'static str,
    pub config: ConfigEcho,
    /// Integrated duration after snapping to whole steps.
    pub tau: f64,
    pub dt: f64,
    pub steps: usize,
    #[serde(skip_serializing_if = "Map::is_empty")]
    pub extra: Map<String, Value>,
}

impl Metadata {
    pub fn new(command: &'static str, config: &RunConfig, tau: f64, steps: usize) -> Self {
        Self {
            tool: "fbphase",
            version: feedback_phase::VERSION,
            command,
            config: config.echo(),
            tau,
            dt: config.dt,
            steps,
            extra: Map::new(),
        }
    }

    pub fn with(mut self, key: &str, value: impl Serialize) -> Self {
        self.extra.insert(
            key.to_string(),
            serde_json::to_value(value).unwrap_or(Value::Null),
        );
        self
    }

    /// `# key = value` lines, nested keys joined with dots.
    pub fn comment_lines(&self) -> Vec<String> {
        let mut lines = Vec::new();
        flatten(
            "",
            &serde_json::to_value(self).unwrap_or(Value::Null),
            &mut lines,
        );
        lines
    }
}

fn flatten(prefix: &str, v: &Value, out: &mut Vec<String>) {
    match v {
        Value::Object(map) => {
            for (k, v) in map {
                let key = if prefix.is_empty() {
                    k.clone()
                } else {
                    format!("{prefix}.{k}")
                };
                flatten(&key, v, out);
            }
        }
        Value::String(s) => out.push(format!("# {prefix} = {s}")),
        other => out.push(format!("# {prefix} = {other}")),
    }
}

/// Opens `path`, or stdout when no path is given.
pub fn sink(path: Option<&Path>) -> Result<Box<dyn Write>, CliError> {
    Ok(match path {
        Some(p) => Box::new(io::BufWriter::new(std::fs::File::create(p)?)),
        None => Box::new(io::BufWriter::new(io::stdout().lock())),
    })
}

/// CSV with a comment-line metadata block, a header and the given rows.
pub fn write_csv(
    w: &mut dyn Write,
    meta: &Metadata,
    header: &[&str],
    rows: impl IntoIterator<Item = Vec<String>>,
) -> io::Result<()> {
    for line in meta.comment_lines() {
        writeln!(w, "{line}")?;
    }
    writeln!(w, "{}", header.join(","))?;
    for row in rows {
        writeln!(w, "{}", row.join(","))?;
    }
    w.flush()
}

/// `{"metadata": ..., <key>: ...}` pretty-printed.
pub fn write_json(
    w: &mut dyn Write,
    meta: &Metadata,
    key: &str,
    body: impl Serialize,
) -> Result<(), CliError> {
    let mut root = Map::new();
    root.insert(
        "metadata".into(),
        serde_json::to_value(meta).map_err(io::Error::other)?,
    );
    root.insert(
        key.into(),
        serde_json::to_value(body).map_err(io::Error::other)?,
    );
    serde_json::to_writer_pretty(&mut *w, &Value::Object(root)).map_err(io::Error::other)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

fn lerp(a: [u8; 3], b: [u8; 3], t: f64) -> Rgb<u8> {
    let mix = |x: u8, y: u8| (x as f64 + (y as f64 - x as f64) * t).round() as u8;
    Rgb([mix(a[0], b[0]), mix(a[1], b[1]), mix(a[2], b[2])])
}

/// Blue through white to red over `[-1, 1]` (phase in units of pi).
pub fn colormap(v: f64) -> Rgb<u8> {
    const BLUE: [u8; 3] = [59, 76, 192];
    const WHITE: [u8; 3] = [221, 221, 221];
    const RED: [u8; 3] = [180, 4, 38];
    let v = v.clamp(-1.0, 1.0);
    if v < 0.0 {
        lerp(WHITE, BLUE, -v)
    } else {
        lerp(WHITE, RED, v)
    }
}

const FLAGGED: Rgb<u8> = Rgb([0, 0, 0]);

/// Nearest-neighbour heatmap of `gamma_g / pi`: axis 1 runs bottom to top,
/// axis 2 left to right. Flagged cells are black.
pub fn heatmap(grid: &SweepGrid) -> RgbImage {
    let (rows, cols) = (grid.rows(), grid.cols());
    let scale = (512 / rows.max(cols)).max(1) as u32;
    RgbImage::from_fn(cols as u32 * scale, rows as u32 * scale, |x, y| {
        let i = rows - 1 - (y / scale) as usize;
        let j = (x / scale) as usize;
        match grid.get(i, j).gamma_g {
            Some(g) => colormap(g / std::f64::consts::PI),
            None => FLAGGED,
        }
    })
}

pub fn write_heatmap(grid: &SweepGrid, path: &Path) -> Result<(), CliError> {
    heatmap(grid).save(path)?;
    Ok(())
}
