//! Result emission: CSV tables, JSON mirrors, JSON-lines reports, and the
//! log-log SVG scatter with fit and theory overlays.
//!
//! All numeric formatting is fixed-width scientific so identical runs
//! reproduce identical bytes.

use std::fmt::Write as _;
use std::path::Path;

use wavelab::harness::{BlowupRecord, SandwichReport, ScalingFit};

use crate::CliError;

fn fmt(v: f64) -> String {
    format!("{v:.12e}")
}

fn opt(v: Option<f64>) -> String {
    v.map(fmt).unwrap_or_default()
}

pub fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)
                .map_err(|e| CliError::Io(format!("cannot create {}: {e}", parent.display())))?;
        }
    }
    std::fs::write(path, contents)
        .map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))
}

pub fn sweep_csv(records: &[BlowupRecord]) -> String {
    let mut out = String::from("eps,T_numeric,T_extrapolated,h,threshold,censored\n");
    for r in records {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            fmt(r.eps),
            opt(r.t_numeric),
            opt(r.t_extrapolated),
            fmt(r.h),
            fmt(r.threshold),
            r.censored
        );
    }
    out
}

pub fn fit_csv(fit: &ScalingFit, theory_slope: f64) -> String {
    format!(
        "slope,stderr,r_squared,theory_slope\n{},{},{},{}\n",
        fmt(fit.slope),
        fmt(fit.stderr),
        fmt(fit.r_squared),
        fmt(theory_slope)
    )
}

pub fn json_pretty<T: serde::Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable");
    s.push('\n');
    s
}

pub fn sandwich_jsonl(report: &SandwichReport) -> String {
    let mut out = String::new();
    for row in &report.rows {
        out.push_str(&serde_json::to_string(row).expect("serializable"));
        out.push('\n');
    }
    out
}

/// Log-log scatter of `(eps, T)` with the fitted line and the theory slope
/// anchored at the data centroid. Censored records are not drawn.
///
/// Structure: one `<circle class="pt">` per point, one `<line>` each of
/// classes `fit-line` and `theory-line`.
pub fn scaling_svg(
    records: &[BlowupRecord],
    fit: &ScalingFit,
    theory_slope: f64,
    phi_space: bool,
) -> String {
    let points: Vec<(f64, f64)> = records
        .iter()
        .filter(|r| !r.censored)
        .map(|r| {
            let t = r.t_extrapolated.or(r.t_numeric).unwrap();
            let y = if phi_space { t * (2.0 + t).ln() } else { t };
            (r.eps.ln(), y.ln())
        })
        .collect();
    let (width, height, margin) = (640.0, 480.0, 56.0);
    let (x_lo, x_hi) = bounds(points.iter().map(|p| p.0));
    let (y_lo, y_hi) = bounds(points.iter().map(|p| p.1));
    let sx = |x: f64| margin + (x - x_lo) / (x_hi - x_lo).max(1e-12) * (width - 2.0 * margin);
    let sy =
        |y: f64| height - margin - (y - y_lo) / (y_hi - y_lo).max(1e-12) * (height - 2.0 * margin);

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}">"#
    );
    let _ = writeln!(
        svg,
        r#"  <rect width="{width}" height="{height}" fill="white"/>"#
    );
    // Axes as a path so structural checks can count line elements exactly.
    let _ = writeln!(
        svg,
        r#"  <path d="M {m} {m} L {m} {b} L {r} {b}" stroke="black" fill="none"/>"#,
        m = margin,
        b = height - margin,
        r = width - margin
    );
    let y_label = if phi_space { "ln phi(T)" } else { "ln T" };
    let _ = writeln!(
        svg,
        r#"  <text x="{}" y="{}" font-size="13">ln eps</text>"#,
        width / 2.0 - 20.0,
        height - margin / 3.0
    );
    let _ = writeln!(
        svg,
        r#"  <text x="10" y="{}" font-size="13" transform="rotate(-90 14 {})">{y_label}</text>"#,
        height / 2.0,
        height / 2.0
    );

    let centroid_x = points.iter().map(|p| p.0).sum::<f64>() / points.len().max(1) as f64;
    let centroid_y = points.iter().map(|p| p.1).sum::<f64>() / points.len().max(1) as f64;
    let line = |slope: f64, intercept: f64, class: &str, color: &str| -> String {
        format!(
            r#"  <line class="{class}" x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="{color}" stroke-width="1.5"/>"#,
            sx(x_lo),
            sy(slope * x_lo + intercept),
            sx(x_hi),
            sy(slope * x_hi + intercept)
        )
    };
    let _ = writeln!(
        svg,
        "{}",
        line(fit.slope, fit.intercept, "fit-line", "#c44")
    );
    let theory_intercept = centroid_y - theory_slope * centroid_x;
    let _ = writeln!(
        svg,
        "{}",
        line(theory_slope, theory_intercept, "theory-line", "#46a")
    );
    for (x, y) in &points {
        let _ = writeln!(
            svg,
            r##"  <circle class="pt" cx="{:.2}" cy="{:.2}" r="3.5" fill="#222"/>"##,
            sx(*x),
            sy(*y)
        );
    }
    svg.push_str("</svg>\n");
    svg
}

fn bounds(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for v in values {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    if !lo.is_finite() || !hi.is_finite() {
        (0.0, 1.0)
    } else if lo == hi {
        (lo - 0.5, hi + 0.5)
    } else {
        (lo, hi)
    }
}
