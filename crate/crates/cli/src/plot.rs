//! SVG output without a plotting dependency.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use grainflow::diagnostics::{decay_fit, resolved_tail, ROUNDOFF_FLOOR};

use crate::config::Mode;
use crate::error::{CliError, CliResult};
use crate::output::{self, Manifest, Table, DIAGNOSTICS};

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 480.0;
const MARGIN: f64 = 70.0;
const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];

/// Most snapshot curves drawn in one overlay.
const MAX_OVERLAY: usize = 24;

pub struct Series {
    pub name: String,
    pub points: Vec<(f64, f64)>,
    pub dashed: bool,
    pub color: &'static str,
}

pub struct Chart {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub log_y: bool,
    pub equal_aspect: bool,
    pub series: Vec<Series>,
    pub notes: Vec<String>,
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn bounds(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    if !lo.is_finite() {
        return (0.0, 1.0);
    }
    if hi - lo <= 1e-12 * lo.abs().max(1.0) {
        let pad = 0.5 * lo.abs().max(1e-3);
        return (lo - pad, hi + pad);
    }
    (lo, hi)
}

impl Chart {
    pub fn render(&self) -> String {
        let ty = |y: f64| if self.log_y { y.log10() } else { y };
        let visible = |p: &&(f64, f64)| p.0.is_finite() && p.1.is_finite() && (!self.log_y || p.1 > 0.0);
        let (mut x0, mut x1) = bounds(self.series.iter().flat_map(|s| s.points.iter().filter(visible).map(|p| p.0)));
        let (mut y0, mut y1) = bounds(self.series.iter().flat_map(|s| s.points.iter().filter(visible).map(|p| ty(p.1))));
        let (pw, ph) = (WIDTH - 2.0 * MARGIN, HEIGHT - 2.0 * MARGIN);
        if self.equal_aspect {
            let scale = ((x1 - x0) / pw).max((y1 - y0) / ph);
            let (cx, cy) = (0.5 * (x0 + x1), 0.5 * (y0 + y1));
            (x0, x1) = (cx - 0.5 * scale * pw, cx + 0.5 * scale * pw);
            (y0, y1) = (cy - 0.5 * scale * ph, cy + 0.5 * scale * ph);
        }
        let px = |x: f64| MARGIN + (x - x0) / (x1 - x0) * pw;
        let py = |y: f64| HEIGHT - MARGIN - (ty(y) - y0) / (y1 - y0) * ph;

        let mut s = String::new();
        let _ = writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
        );
        let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
        let _ = writeln!(
            s,
            r#"<text x="{}" y="24" text-anchor="middle" font-size="15">{}</text>"#,
            WIDTH / 2.0,
            escape(&self.title)
        );
        let _ = writeln!(
            s,
            r#"<rect x="{MARGIN}" y="{MARGIN}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#
        );
        for i in 0..=4 {
            let f = i as f64 / 4.0;
            let (xv, yv) = (x0 + f * (x1 - x0), y0 + f * (y1 - y0));
            let (gx, gy) = (MARGIN + f * pw, HEIGHT - MARGIN - f * ph);
            let ylabel = if self.log_y { format!("1e{yv:.1}") } else { format!("{yv:.3e}") };
            let _ = writeln!(
                s,
                r##"<line x1="{gx}" y1="{MARGIN}" x2="{gx}" y2="{}" stroke="#ddd"/><text x="{gx}" y="{}" text-anchor="middle">{xv:.3e}</text>"##,
                HEIGHT - MARGIN,
                HEIGHT - MARGIN + 16.0
            );
            let _ = writeln!(
                s,
                r##"<line x1="{MARGIN}" y1="{gy}" x2="{}" y2="{gy}" stroke="#ddd"/><text x="{}" y="{}" text-anchor="end">{ylabel}</text>"##,
                WIDTH - MARGIN,
                MARGIN - 4.0,
                gy + 4.0
            );
        }
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
            WIDTH / 2.0,
            HEIGHT - 20.0,
            escape(&self.x_label)
        );
        let _ = writeln!(
            s,
            r#"<text x="16" y="{}" text-anchor="middle" transform="rotate(-90 16 {})">{}</text>"#,
            HEIGHT / 2.0,
            HEIGHT / 2.0,
            escape(&self.y_label)
        );
        for (k, series) in self.series.iter().enumerate() {
            let path: Vec<String> = series
                .points
                .iter()
                .filter(visible)
                .map(|&(x, y)| format!("{:.2},{:.2}", px(x), py(y)))
                .collect();
            if path.is_empty() {
                continue;
            }
            let dash = if series.dashed { r#" stroke-dasharray="6 4""# } else { "" };
            let _ = writeln!(
                s,
                r#"<polyline fill="none" stroke="{}" stroke-width="1.5"{dash} points="{}"/>"#,
                series.color,
                path.join(" ")
            );
            if !series.name.is_empty() {
                let ly = MARGIN + 16.0 + 16.0 * k as f64;
                let _ = writeln!(
                    s,
                    r#"<text x="{}" y="{ly}" fill="{}">{}</text>"#,
                    MARGIN + 8.0,
                    series.color,
                    escape(&series.name)
                );
            }
        }
        for (k, note) in self.notes.iter().enumerate() {
            let _ = writeln!(
                s,
                r#"<text x="{}" y="{}" text-anchor="end">{}</text>"#,
                WIDTH - MARGIN - 8.0,
                MARGIN + 16.0 + 16.0 * k as f64,
                escape(note)
            );
        }
        s.push_str("</svg>\n");
        s
    }
}

fn write(path: &Path, chart: &Chart) -> CliResult<PathBuf> {
    fs::write(path, chart.render()).map_err(|e| CliError::io(path, e))?;
    Ok(path.to_path_buf())
}

fn zip(t: &[f64], y: &[f64]) -> Vec<(f64, f64)> {
    t.iter().cloned().zip(y.iter().cloned()).collect()
}

/// Writes snapshots.svg, energy.svg and decay.svg for a run directory.
pub fn plot_run(dir: &Path, out: &Path) -> CliResult<Vec<PathBuf>> {
    if !dir.join(DIAGNOSTICS).exists() {
        return Err(CliError::io(dir, "not a run directory (no diagnostics.csv)"));
    }
    let manifest = Manifest::read(dir)?;
    let diag = Table::read(&dir.join(DIAGNOSTICS))?;
    if diag.rows.is_empty() {
        return Err(CliError::io(dir.join(DIAGNOSTICS), "no rows"));
    }
    fs::create_dir_all(out).map_err(|e| CliError::io(out, e))?;
    let column = |name: &str| {
        diag.column(name)
            .ok_or_else(|| CliError::io(dir.join(DIAGNOSTICS), format!("missing column {name}")))
    };
    let t = column("t")?;
    let mut written = Vec::new();

    let snaps = output::list_snapshots(dir)?;
    let stride = snaps.len().div_ceil(MAX_OVERLAY).max(1);
    let mut overlay = Vec::new();
    let picked: Vec<&PathBuf> = snaps.iter().step_by(stride).chain(snaps.last()).collect();
    for (k, path) in picked.iter().enumerate() {
        if k > 0 && picked[k - 1] == *path {
            continue;
        }
        let table = Table::read(path)?;
        let mut points: Vec<(f64, f64)> = table.rows.iter().map(|r| (r[0], r[1])).collect();
        if manifest.config.run.mode == Mode::Curve && !points.is_empty() {
            points.push(points[0]);
        }
        overlay.push(Series {
            name: String::new(),
            points,
            dashed: false,
            color: COLORS[k % COLORS.len()],
        });
    }
    let (x_label, y_label) = match manifest.config.run.mode {
        Mode::Graph => ("x", "u"),
        Mode::Curve => ("x", "y"),
    };
    written.push(write(
        &out.join("snapshots.svg"),
        &Chart {
            title: format!("{} snapshots", overlay.len()),
            x_label: x_label.into(),
            y_label: y_label.into(),
            log_y: false,
            equal_aspect: manifest.config.run.mode == Mode::Curve,
            series: overlay,
            notes: Vec::new(),
        },
    )?);

    written.push(write(
        &out.join("energy.svg"),
        &Chart {
            title: "energy and length".into(),
            x_label: "t".into(),
            y_label: "value".into(),
            log_y: false,
            equal_aspect: false,
            series: vec![
                Series {
                    name: "E".into(),
                    points: zip(&t, &column("E")?),
                    dashed: false,
                    color: COLORS[0],
                },
                Series {
                    name: "|Gamma|".into(),
                    points: zip(&t, &column("length")?),
                    dashed: false,
                    color: COLORS[1],
                },
            ],
            notes: Vec::new(),
        },
    )?);

    let mut series = Vec::new();
    let mut notes = Vec::new();
    let names: &[&str] = match manifest.config.run.mode {
        Mode::Graph => &["alpha", "h1", "sup_kappa"],
        Mode::Curve => &["alpha"],
    };
    for (k, name) in names.iter().enumerate() {
        let points: Vec<(f64, f64)> = zip(&t, &column(name)?).into_iter().map(|(t, y)| (t, y.abs())).collect();
        if points.iter().all(|p| p.1 <= 0.0) {
            continue;
        }
        let color = COLORS[k % COLORS.len()];
        if let Ok(fit) = decay_fit(&points, resolved_tail(&points, ROUNDOFF_FLOOR)) {
            let (ta, tb) = resolved_tail(&points, ROUNDOFF_FLOOR);
            // Anchor the fitted line at the series value nearest ta.
            let anchor = points.iter().find(|p| p.0 >= ta).cloned().unwrap_or(points[0]);
            let line = [ta, tb].iter().map(|&s| (s, anchor.1 * (-fit.rate * (s - anchor.0)).exp())).collect();
            series.push(Series {
                name: String::new(),
                points: line,
                dashed: true,
                color,
            });
            notes.push(format!("{name}: rate {:.4}", fit.rate));
        }
        series.push(Series {
            name: name.to_string(),
            points,
            dashed: false,
            color,
        });
    }
    written.push(write(
        &out.join("decay.svg"),
        &Chart {
            title: "decay (log scale, dashed: fit)".into(),
            x_label: "t".into(),
            y_label: "value".into(),
            log_y: true,
            equal_aspect: false,
            series,
            notes,
        },
    )?);
    Ok(written)
}
