//! Artifact writers: `trace.csv`, `theory.csv`, `summary.txt`, `plot.svg`,
//! and the sweep equivalents.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::theory::TheoryReport;

use super::experiment::{ExperimentReport, SweepParam, SweepPoint};

pub const TRACE_HEADER: &str = "k,mean_sq_error,mean_rel_error,bound_rhs";
pub const SWEEP_HEADER: &str =
    "param,value,step_rule,step_size,s_F,q,R,init_err_sq,R_rel,slope,violations,diverged";

fn num(v: f64) -> String {
    format!("{v:e}")
}

fn opt_num(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

pub fn trace_csv(report: &ExperimentReport) -> String {
    let mut out = String::with_capacity(report.mean_sq_error.len() * 64);
    out.push_str(TRACE_HEADER);
    out.push('\n');
    for (i, (sq, rel)) in report.mean_sq_error.iter().zip(&report.mean_rel_error).enumerate() {
        let bound = report.bound_rhs_curve.as_ref().map(|b| b[i]);
        let _ = writeln!(out, "{},{},{},{}", i + 1, num(*sq), num(*rel), opt_num(bound));
    }
    out
}

/// Columns of a parsed `trace.csv`.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceTable {
    pub k: Vec<usize>,
    pub mean_sq_error: Vec<f64>,
    pub mean_rel_error: Vec<f64>,
    pub bound_rhs: Vec<Option<f64>>,
}

pub fn parse_trace_csv(text: &str) -> Result<TraceTable> {
    let mut lines = text.lines();
    let header = lines.next().unwrap_or_default();
    if header.trim() != TRACE_HEADER {
        return Err(Error::InvalidInput(format!("unexpected trace header `{header}`")));
    }
    let mut t = TraceTable {
        k: Vec::new(),
        mean_sq_error: Vec::new(),
        mean_rel_error: Vec::new(),
        bound_rhs: Vec::new(),
    };
    for (i, line) in lines.enumerate() {
        let bad = || Error::InvalidInput(format!("trace line {}: `{line}`", i + 2));
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() != 4 {
            return Err(bad());
        }
        t.k.push(cells[0].parse().map_err(|_| bad())?);
        t.mean_sq_error.push(cells[1].parse().map_err(|_| bad())?);
        t.mean_rel_error.push(cells[2].parse().map_err(|_| bad())?);
        t.bound_rhs.push(if cells[3].is_empty() {
            None
        } else {
            Some(cells[3].parse().map_err(|_| bad())?)
        });
    }
    Ok(t)
}

pub fn theory_csv(theory: &TheoryReport) -> String {
    format!("{}\n{}\n", TheoryReport::csv_header(), theory.to_csv_row())
}

pub fn summary_text(report: &ExperimentReport) -> String {
    let mut s = String::new();
    let mut kv = |k: &str, v: String| {
        let _ = writeln!(s, "{k} = {v}");
    };
    kv("family", report.family.to_string());
    kv("n", report.n.to_string());
    kv("d", report.d.to_string());
    kv("lh", num(report.reg_strength));
    kv("batch_size", report.batch_size.to_string());
    kv("step_rule", report.step_rule.to_string());
    kv("step_size", num(report.step_size));
    kv("iterations", (report.mean_sq_error.len() - 1).to_string());
    kv("repetitions", report.repetitions.to_string());
    kv("diverged_repetitions", report.diverged_repetitions.to_string());
    kv("reference_grad_norm", num(report.reference_grad_norm));
    kv("init_err_sq", num(report.init_err_sq));
    kv("q", opt_num(report.bound.map(|b| b.rate())));
    kv("R", opt_num(report.bound.map(|b| b.radius())));
    kv("R_rel", num(report.r_rel));
    kv(
        "violations",
        report.violations.map(|v| v.to_string()).unwrap_or_else(|| "na".into()),
    );
    kv("slope", opt_num(report.slope));
    s
}

/// One curve for [`render_svg`].
pub struct Series<'a> {
    pub label: String,
    pub values: &'a [f64],
    pub dashed: bool,
}

const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf",
];
const MAX_POINTS: usize = 1500;

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Static SVG with a log10 y axis over iteration index `k = 1..len`.
/// Non-positive and non-finite values are skipped.
pub fn render_svg(title: &str, y_label: &str, series: &[Series<'_>]) -> String {
    let (w, h) = (820.0, 520.0);
    let (left, right, top, bottom) = (80.0, 190.0, 40.0, 60.0);
    let pw = w - left - right;
    let ph = h - top - bottom;

    let positive = series
        .iter()
        .flat_map(|s| s.values.iter().copied())
        .filter(|v| v.is_finite() && *v > 0.0);
    let (lo, hi) = positive.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    let (dec_lo, dec_hi) = if lo.is_finite() {
        let a = lo.log10().floor();
        let b = hi.log10().ceil();
        (a, if b > a { b } else { a + 1.0 })
    } else {
        (-1.0, 0.0)
    };
    let k_max = series.iter().map(|s| s.values.len()).max().unwrap_or(1).max(2) as f64;
    let sx = |k: f64| left + (k - 1.0) / (k_max - 1.0) * pw;
    let sy = |v: f64| top + (dec_hi - v.log10()) / (dec_hi - dec_lo) * ph;

    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(out, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
    let _ = writeln!(
        out,
        r#"<text x="{}" y="22" text-anchor="middle" font-size="14">{}</text>"#,
        left + pw / 2.0,
        escape(title)
    );
    let mut dec = dec_lo;
    while dec <= dec_hi + 0.5 {
        let y = top + (dec_hi - dec) / (dec_hi - dec_lo) * ph;
        let _ = writeln!(
            out,
            "<line x1=\"{left}\" y1=\"{y:.2}\" x2=\"{:.2}\" y2=\"{y:.2}\" stroke=\"#ddd\"/>",
            left + pw
        );
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="end">1e{}</text>"#,
            left - 6.0,
            y + 4.0,
            dec as i64
        );
        dec += 1.0;
    }
    for i in 0..=5 {
        let k = 1.0 + (k_max - 1.0) * i as f64 / 5.0;
        let x = sx(k);
        let _ = writeln!(
            out,
            r#"<text x="{x:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            top + ph + 18.0,
            k.round() as u64
        );
    }
    let _ = writeln!(
        out,
        r#"<rect x="{left}" y="{top}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#
    );
    let _ = writeln!(
        out,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">iteration k</text>"#,
        left + pw / 2.0,
        h - 18.0
    );
    let _ = writeln!(
        out,
        r#"<text x="18" y="{:.2}" text-anchor="middle" transform="rotate(-90 18 {:.2})">{}</text>"#,
        top + ph / 2.0,
        top + ph / 2.0,
        escape(y_label)
    );

    for (idx, s) in series.iter().enumerate() {
        let color = PALETTE[idx % PALETTE.len()];
        let stride = s.values.len().div_ceil(MAX_POINTS).max(1);
        let mut pts = String::new();
        for (i, &v) in s.values.iter().enumerate() {
            let last = i + 1 == s.values.len();
            if (i % stride != 0 && !last) || !(v.is_finite() && v > 0.0) {
                continue;
            }
            let _ = write!(pts, "{:.2},{:.2} ", sx((i + 1) as f64), sy(v));
        }
        let dash = if s.dashed { r#" stroke-dasharray="6 4""# } else { "" };
        let _ = writeln!(
            out,
            r#"<polyline fill="none" stroke="{color}" stroke-width="1.5"{dash} points="{}"/>"#,
            pts.trim_end()
        );
        let ly = top + 14.0 + 18.0 * idx as f64;
        let lx = left + pw + 12.0;
        let _ = writeln!(
            out,
            r#"<line x1="{lx}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="2"{dash}/>"#,
            lx + 24.0
        );
        let _ = writeln!(out, r#"<text x="{}" y="{}">{}</text>"#, lx + 30.0, ly + 4.0, escape(&s.label));
    }
    out.push_str("</svg>\n");
    out
}

/// Bound curve expressed on the relative scale: `sqrt(rhs / init_err_sq)`.
pub fn relative_bound(report: &ExperimentReport) -> Option<Vec<f64>> {
    let init = report.init_err_sq;
    if init <= 0.0 {
        return None;
    }
    report
        .bound_rhs_curve
        .as_ref()
        .map(|b| b.iter().map(|v| (v / init).sqrt()).collect())
}

pub fn plot_svg(report: &ExperimentReport) -> String {
    let rel_bound = relative_bound(report);
    let mut series = vec![Series {
        label: "mean relative error".into(),
        values: &report.mean_rel_error,
        dashed: false,
    }];
    if let Some(b) = &rel_bound {
        series.push(Series {
            label: "sqrt(bound / init)".into(),
            values: b,
            dashed: true,
        });
    }
    let title = format!(
        "{} n={} d={} lh={} B={} {}",
        report.family, report.n, report.d, report.reg_strength, report.batch_size, report.step_rule
    );
    render_svg(&title, "||x_k - x*|| / ||x_1 - x*||", &series)
}

fn write(dir: &Path, name: &str, contents: &str) -> Result<()> {
    let path = dir.join(name);
    fs::write(&path, contents).map_err(|e| Error::io(&path, e))
}

pub fn emit_outputs(report: &ExperimentReport, dir: impl AsRef<Path>) -> Result<()> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    write(dir, "trace.csv", &trace_csv(report))?;
    write(dir, "theory.csv", &theory_csv(&report.theory))?;
    write(dir, "summary.txt", &summary_text(report))?;
    write(dir, "plot.svg", &plot_svg(report))
}

pub fn sweep_csv(param: SweepParam, points: &[SweepPoint]) -> String {
    let mut out = String::from(SWEEP_HEADER);
    out.push('\n');
    for p in points {
        let r = &p.report;
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            param.key(),
            num(p.value),
            r.step_rule,
            num(r.step_size),
            num(r.theory.s_f),
            opt_num(r.bound.map(|b| b.rate())),
            opt_num(r.bound.map(|b| b.radius())),
            num(r.init_err_sq),
            num(r.r_rel),
            opt_num(r.slope),
            r.violations.map(|v| v.to_string()).unwrap_or_default(),
            r.diverged_repetitions
        );
    }
    out
}

/// `sweep.csv`, a combined `plot.svg`, and one subdirectory of regular
/// outputs per grid point.
pub fn emit_sweep_outputs(param: SweepParam, points: &[SweepPoint], dir: impl AsRef<Path>) -> Result<()> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    write(dir, "sweep.csv", &sweep_csv(param, points))?;
    let series: Vec<Series<'_>> = points
        .iter()
        .map(|p| Series {
            label: format!("{} = {}", param.key(), p.value),
            values: &p.report.mean_rel_error,
            dashed: false,
        })
        .collect();
    write(
        dir,
        "plot.svg",
        &render_svg(
            &format!("sweep over {}", param.key()),
            "||x_k - x*|| / ||x_1 - x*||",
            &series,
        ),
    )?;
    for p in points {
        emit_outputs(&p.report, dir.join(format!("{}_{}", param.key(), p.value)))?;
    }
    Ok(())
}
