//! CSV rows and log-log SVG plots.

use std::cmp::Ordering;
use std::fmt::Write as _;
use std::io::Write;
use std::path::Path;

use crate::error::Result;

pub const CSV_HEADER: [&str; 9] = [
    "experiment",
    "p",
    "scheme",
    "N",
    "h",
    "dt",
    "t",
    "metric",
    "value",
];

/// One CSV record. Columns that do not apply to a metric are left empty.
#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub experiment: String,
    pub p: Option<usize>,
    pub scheme: String,
    pub n: Option<usize>,
    pub h: Option<f64>,
    pub dt: Option<f64>,
    pub t: Option<f64>,
    pub metric: String,
    pub value: f64,
}

fn cmp_opt<T: PartialOrd>(a: &Option<T>, b: &Option<T>) -> Ordering {
    match (a, b) {
        (Some(x), Some(y)) => x.partial_cmp(y).unwrap_or(Ordering::Equal),
        (None, Some(_)) => Ordering::Less,
        (Some(_), None) => Ordering::Greater,
        (None, None) => Ordering::Equal,
    }
}

/// Deterministic row order: `(p, h, dt)`, then scheme and metric.
pub fn sort_rows(rows: &mut [Row]) {
    rows.sort_by(|a, b| {
        cmp_opt(&a.p, &b.p)
            .then_with(|| cmp_opt(&a.h, &b.h))
            .then_with(|| cmp_opt(&a.dt, &b.dt))
            .then_with(|| a.scheme.cmp(&b.scheme))
            .then_with(|| a.metric.cmp(&b.metric))
    });
}

fn opt<T: ToString>(v: &Option<T>) -> String {
    v.as_ref().map(T::to_string).unwrap_or_default()
}

fn opt_f(v: Option<f64>) -> String {
    v.map(|x| format!("{x:e}")).unwrap_or_default()
}

pub fn write_csv<W: Write>(out: W, rows: &[Row]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for r in rows {
        w.write_record([
            r.experiment.clone(),
            opt(&r.p),
            r.scheme.clone(),
            opt(&r.n),
            opt_f(r.h),
            opt_f(r.dt),
            opt_f(r.t),
            r.metric.clone(),
            format!("{:e}", r.value),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn emit_csv(path: &Path, rows: &[Row]) -> Result<()> {
    write_csv(std::fs::File::create(path)?, rows)
}

/// Parses a file written by [`write_csv`].
pub fn read_csv(path: &Path) -> Result<Vec<Row>> {
    let mut r = csv::Reader::from_path(path)?;
    let mut rows = Vec::new();
    let bad = |what: &str| crate::Error::Config(format!("malformed CSV field `{what}`"));
    let num = |s: &str| -> Result<Option<f64>> {
        if s.is_empty() {
            Ok(None)
        } else {
            s.parse().map(Some).map_err(|_| bad(s))
        }
    };
    let int = |s: &str| -> Result<Option<usize>> {
        if s.is_empty() {
            Ok(None)
        } else {
            s.parse().map(Some).map_err(|_| bad(s))
        }
    };
    for rec in r.records() {
        let rec = rec?;
        if rec.len() != CSV_HEADER.len() {
            return Err(bad(&format!("{} columns", rec.len())));
        }
        rows.push(Row {
            experiment: rec[0].to_string(),
            p: int(&rec[1])?,
            scheme: rec[2].to_string(),
            n: int(&rec[3])?,
            h: num(&rec[4])?,
            dt: num(&rec[5])?,
            t: num(&rec[6])?,
            metric: rec[7].to_string(),
            value: rec[8].parse().map_err(|_| bad(&rec[8]))?,
        });
    }
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

/// Dashed guide `y = anchor_y · (x / anchor_x)^exponent`.
#[derive(Debug, Clone, PartialEq)]
pub struct RefLine {
    pub label: String,
    pub exponent: f64,
    pub anchor: (f64, f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Plot {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub series: Vec<Series>,
    pub refs: Vec<RefLine>,
}

const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#17becf",
];

const W: f64 = 640.0;
const H: f64 = 440.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 180.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 60.0;

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

/// Decade-aligned bounds of the positive values, or `[1, 10]`.
fn log_bounds(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values
        .filter(|v| *v > 0.0 && v.is_finite())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
            (lo.min(v), hi.max(v))
        });
    if !lo.is_finite() {
        return (0.0, 1.0);
    }
    let (lo, hi) = (lo.log10().floor(), hi.log10().ceil());
    if hi > lo {
        (lo, hi)
    } else {
        (lo, lo + 1.0)
    }
}

pub fn render_svg(plot: &Plot) -> String {
    let pts = || plot.series.iter().flat_map(|s| s.points.iter());
    let (x0, x1) = log_bounds(pts().map(|p| p.0));
    let (y0, y1) = log_bounds(pts().map(|p| p.1));
    let pw = W - LEFT - RIGHT;
    let ph = H - TOP - BOTTOM;
    let sx = |x: f64| LEFT + (x.log10() - x0) / (x1 - x0) * pw;
    let sy = |y: f64| TOP + ph - (y.log10() - y0) / (y1 - y0) * ph;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{}" y="24" text-anchor="middle" font-size="14">{}</text>"#,
        LEFT + pw / 2.0,
        escape(&plot.title)
    );
    let _ = writeln!(s, r#"<g class="axes" stroke="black" fill="none">"#);
    let _ = writeln!(
        s,
        r#"<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}"/>"#
    );
    for d in x0 as i32..=x1 as i32 {
        let x = LEFT + (d as f64 - x0) / (x1 - x0) * pw;
        let _ = writeln!(
            s,
            r#"<line x1="{x:.2}" y1="{}" x2="{x:.2}" y2="{}"/>"#,
            TOP + ph,
            TOP + ph + 5.0
        );
    }
    for d in y0 as i32..=y1 as i32 {
        let y = TOP + ph - (d as f64 - y0) / (y1 - y0) * ph;
        let _ = writeln!(
            s,
            r#"<line x1="{}" y1="{y:.2}" x2="{LEFT}" y2="{y:.2}"/>"#,
            LEFT - 5.0
        );
    }
    s.push_str("</g>\n<g class=\"ticks\" text-anchor=\"middle\">\n");
    for d in x0 as i32..=x1 as i32 {
        let x = LEFT + (d as f64 - x0) / (x1 - x0) * pw;
        let _ = writeln!(
            s,
            r#"<text x="{x:.2}" y="{}">1e{d}</text>"#,
            TOP + ph + 20.0
        );
    }
    for d in y0 as i32..=y1 as i32 {
        let y = TOP + ph - (d as f64 - y0) / (y1 - y0) * ph;
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{:.2}" text-anchor="end">1e{d}</text>"#,
            LEFT - 8.0,
            y + 4.0
        );
    }
    s.push_str("</g>\n");
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
        LEFT + pw / 2.0,
        H - 15.0,
        escape(&plot.x_label)
    );
    let _ = writeln!(
        s,
        r#"<text x="18" y="{}" text-anchor="middle" transform="rotate(-90 18 {})">{}</text>"#,
        TOP + ph / 2.0,
        TOP + ph / 2.0,
        escape(&plot.y_label)
    );

    let mut legend_y = TOP + 10.0;
    let mut legend = |s: &mut String, color: &str, dashed: bool, label: &str| {
        let dash = if dashed {
            r#" stroke-dasharray="6 4""#
        } else {
            ""
        };
        let lx = W - RIGHT + 10.0;
        let _ = writeln!(
            s,
            r#"<line x1="{lx}" y1="{legend_y}" x2="{}" y2="{legend_y}" stroke="{color}" stroke-width="2"{dash}/>"#,
            lx + 24.0
        );
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}">{}</text>"#,
            lx + 30.0,
            legend_y + 4.0,
            escape(label)
        );
        legend_y += 18.0;
    };

    let _ = writeln!(
        s,
        r#"<clipPath id="plot-area"><rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}"/></clipPath>"#
    );
    for (i, series) in plot.series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let coords: Vec<String> = series
            .points
            .iter()
            .filter(|(x, y)| *x > 0.0 && *y > 0.0)
            .map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y)))
            .collect();
        let _ = writeln!(
            s,
            r#"<polyline class="series" points="{}" fill="none" stroke="{color}" stroke-width="2"/>"#,
            coords.join(" ")
        );
        for c in &coords {
            let (cx, cy) = c.split_once(',').expect("formatted pair");
            let _ = writeln!(s, r#"<circle cx="{cx}" cy="{cy}" r="3" fill="{color}"/>"#);
        }
        legend(&mut s, color, false, &series.label);
    }
    let (xa, xb) = (10f64.powf(x0), 10f64.powf(x1));
    for (i, r) in plot.refs.iter().enumerate() {
        let color = PALETTE[(i + plot.series.len()) % PALETTE.len()];
        let y_at = |x: f64| r.anchor.1 * (x / r.anchor.0).powf(r.exponent);
        let _ = writeln!(
            s,
            r#"<line class="reference" x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="{color}" stroke-width="1.5" stroke-dasharray="6 4" clip-path="url(#plot-area)"/>"#,
            sx(xa),
            sy(y_at(xa)),
            sx(xb),
            sy(y_at(xb))
        );
        legend(&mut s, color, true, &r.label);
    }
    s.push_str("</svg>\n");
    s
}

pub fn emit_svg(path: &Path, plot: &Plot) -> Result<()> {
    std::fs::write(path, render_svg(plot))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(p: Option<usize>, h: f64, metric: &str, value: f64) -> Row {
        Row {
            experiment: "test".into(),
            p,
            scheme: "fd".into(),
            n: Some(64),
            h: Some(h),
            dt: None,
            t: Some(0.5),
            metric: metric.into(),
            value,
        }
    }

    #[test]
    fn csv_round_trip_with_quoting() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("rows.csv");
        let mut rows = vec![
            row(Some(4), 0.5, "unitary_error", 1.25e-7),
            row(None, 0.25, "[A,[[A,B],O]]", 3.0),
            row(Some(2), 0.125, "has \"quotes\"", -0.5),
        ];
        sort_rows(&mut rows);
        assert_eq!(rows[0].p, None);
        assert_eq!(rows[1].p, Some(2));
        emit_csv(&path, &rows).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("experiment,p,scheme,N,h,dt,t,metric,value\n"));
        assert!(text.contains("\"[A,[[A,B],O]]\""));
        assert_eq!(read_csv(&path).unwrap(), rows);
    }

    #[test]
    fn empty_plot_has_axes_only() {
        let svg = render_svg(&Plot {
            title: "empty".into(),
            x_label: "x".into(),
            y_label: "y".into(),
            series: vec![],
            refs: vec![],
        });
        assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));
        assert!(svg.contains("class=\"axes\""));
        assert_eq!(svg.matches("<polyline").count(), 0);
        assert_eq!(svg.matches("class=\"reference\"").count(), 0);
    }

    #[test]
    fn plot_structure() {
        let series = |label: &str, k: f64| Series {
            label: label.into(),
            points: (1..5).map(|i| (2f64.powi(-i), k * 4f64.powi(-i))).collect(),
        };
        let svg = render_svg(&Plot {
            title: "a < b & c".into(),
            x_label: "dt".into(),
            y_label: "error".into(),
            series: vec![series("p=1", 1.0), series("p=2", 0.1)],
            refs: vec![RefLine {
                label: "dt^2".into(),
                exponent: 2.0,
                anchor: (0.5, 0.25),
            }],
        });
        assert_eq!(svg.matches("<polyline").count(), 2);
        assert_eq!(svg.matches("class=\"reference\"").count(), 1);
        assert_eq!(svg.matches("<circle").count(), 8);
        assert!(svg.contains("a &lt; b &amp; c"));
        assert!(!svg.contains("NaN"));
    }
}
