//! Self-contained SVG plots of experiment rows, each written together with
//! the exact data it draws.

use std::collections::BTreeMap;
use std::fmt::{self, Write};
use std::str::FromStr;

use super::experiment::MetricRow;
use super::EvaluationError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PlotKind {
    F1VsN,
    L2VsN,
    PrCurve,
    TimeVsN,
    F1VsPinit,
}

impl PlotKind {
    pub const ALL: [PlotKind; 5] = [
        PlotKind::F1VsN,
        PlotKind::L2VsN,
        PlotKind::PrCurve,
        PlotKind::TimeVsN,
        PlotKind::F1VsPinit,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            PlotKind::F1VsN => "f1_vs_n",
            PlotKind::L2VsN => "l2_vs_n",
            PlotKind::PrCurve => "pr_curve",
            PlotKind::TimeVsN => "time_vs_n",
            PlotKind::F1VsPinit => "f1_vs_pinit",
        }
    }
}

impl fmt::Display for PlotKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PlotKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        PlotKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s.trim())
            .ok_or_else(|| {
                format!("unknown plot kind '{s}' (expected f1_vs_n, l2_vs_n, pr_curve, time_vs_n or f1_vs_pinit)")
            })
    }
}

/// One rendered plot: files `<stem>.svg` and `<stem>.csv`.
#[derive(Debug, Clone, PartialEq)]
pub struct PlotArtifact {
    pub stem: String,
    pub svg: String,
    pub csv: String,
    pub points: usize,
}

#[derive(Debug, Clone, Copy)]
struct Point {
    x: f64,
    y: f64,
    band: Option<(f64, f64)>,
}

fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Median and interquartile range of the finite values.
fn summarize(values: impl Iterator<Item = f64>) -> Option<(f64, f64, f64, usize)> {
    let mut v: Vec<f64> = values.filter(|x| x.is_finite()).collect();
    if v.is_empty() {
        return None;
    }
    v.sort_by(f64::total_cmp);
    Some((quantile(&v, 0.5), quantile(&v, 0.25), quantile(&v, 0.75), v.len()))
}

fn base_graph(label: &str) -> &str {
    label.split('@').next().unwrap_or(label)
}

fn base_estimator(row: &MetricRow) -> &str {
    row.estimator.split('@').next().unwrap_or(&row.estimator)
}

struct Figure<'a> {
    title: String,
    x_label: &'a str,
    y_label: &'a str,
    x_log: bool,
    y_log: bool,
}

fn series_by_x(
    rows: &[&MetricRow],
    x: impl Fn(&MetricRow) -> f64,
    y: impl Fn(&MetricRow) -> f64,
    x_name: &str,
    y_name: &str,
) -> (Vec<Point>, String) {
    let mut groups: BTreeMap<u64, (f64, Vec<f64>)> = BTreeMap::new();
    for r in rows {
        let xv = x(r);
        groups.entry(xv.to_bits()).or_insert((xv, Vec::new())).1.push(y(r));
    }
    let mut cells: Vec<(f64, Vec<f64>)> = groups.into_values().collect();
    cells.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut csv = format!("{x_name},{y_name}_median,{y_name}_q1,{y_name}_q3,count\n");
    let mut points = Vec::new();
    for (xv, ys) in cells {
        if let Some((med, q1, q3, count)) = summarize(ys.into_iter()) {
            writeln!(csv, "{xv},{med:.6},{q1:.6},{q3:.6},{count}").expect("write to string");
            points.push(Point {
                x: xv,
                y: med,
                band: Some((q1, q3)),
            });
        }
    }
    (points, csv)
}

fn largest_n(rows: &[&MetricRow]) -> usize {
    rows.iter().map(|r| r.n_cascades).max().unwrap_or(0)
}

/// Renders every plot of `kind` that `rows` supports, one per graph and
/// estimator.
pub fn emit_plot(rows: &[MetricRow], kind: PlotKind) -> Result<Vec<PlotArtifact>, EvaluationError> {
    let mut groups: BTreeMap<(String, String), Vec<&MetricRow>> = BTreeMap::new();
    for r in rows {
        let key = match kind {
            PlotKind::PrCurve if r.lambda.is_none() => continue,
            PlotKind::PrCurve => (r.graph.clone(), base_estimator(r).to_string()),
            PlotKind::F1VsPinit => (base_graph(&r.graph).to_string(), r.estimator.clone()),
            _ => (r.graph.clone(), r.estimator.clone()),
        };
        groups.entry(key).or_default().push(r);
    }

    let mut out = Vec::new();
    for ((graph, estimator), group) in groups {
        let (figure, points, csv) = match kind {
            PlotKind::F1VsN | PlotKind::L2VsN | PlotKind::TimeVsN => {
                let (y_name, y_label, y_log): (&str, &str, bool) = match kind {
                    PlotKind::F1VsN => ("f1", "F1 score", false),
                    PlotKind::L2VsN => ("l2_error", "l2 error", false),
                    _ => ("wall_time_ms", "wall time (ms)", true),
                };
                let (points, csv) = series_by_x(
                    &group,
                    |r| r.n_cascades as f64,
                    |r| match kind {
                        PlotKind::F1VsN => r.f1,
                        PlotKind::L2VsN => r.l2_error,
                        _ => r.wall_time_ms,
                    },
                    "n_cascades",
                    y_name,
                );
                let figure = Figure {
                    title: format!("{graph} / {estimator}"),
                    x_label: "number of cascades",
                    y_label,
                    x_log: true,
                    y_log,
                };
                (figure, points, csv)
            }
            PlotKind::F1VsPinit => {
                let n = largest_n(&group);
                let at_n: Vec<&MetricRow> = group.into_iter().filter(|r| r.n_cascades == n).collect();
                let (points, csv) = series_by_x(&at_n, |r| r.p_init, |r| r.f1, "p_init", "f1");
                let figure = Figure {
                    title: format!("{graph} / {estimator} (n = {n})"),
                    x_label: "source probability p_init",
                    y_label: "F1 score",
                    x_log: true,
                    y_log: false,
                };
                (figure, points, csv)
            }
            PlotKind::PrCurve => {
                let n = largest_n(&group);
                let mut by_lambda: BTreeMap<u64, (f64, Vec<f64>, Vec<f64>)> = BTreeMap::new();
                for r in group.iter().filter(|r| r.n_cascades == n) {
                    let l = r.lambda.expect("filtered");
                    let cell = by_lambda.entry(l.to_bits()).or_insert((l, Vec::new(), Vec::new()));
                    cell.1.push(r.precision);
                    cell.2.push(r.recall);
                }
                let mut cells: Vec<(f64, Vec<f64>, Vec<f64>)> = by_lambda.into_values().collect();
                cells.sort_by(|a, b| b.0.total_cmp(&a.0));
                let mut csv = String::from("lambda,recall_median,precision_median,count\n");
                let mut points = Vec::new();
                for (l, precision, recall) in cells {
                    if let (Some(p), Some(r)) = (summarize(precision.into_iter()), summarize(recall.into_iter())) {
                        writeln!(csv, "{l},{:.6},{:.6},{}", r.0, p.0, p.3).expect("write to string");
                        points.push(Point {
                            x: r.0,
                            y: p.0,
                            band: None,
                        });
                    }
                }
                let figure = Figure {
                    title: format!("{graph} / {estimator} (n = {n})"),
                    x_label: "recall",
                    y_label: "precision",
                    x_log: false,
                    y_log: false,
                };
                (figure, points, csv)
            }
        };
        if points.is_empty() {
            continue;
        }
        out.push(PlotArtifact {
            stem: format!("{kind}__{graph}__{estimator}"),
            svg: render_svg(&figure, &points),
            csv,
            points: points.len(),
        });
    }
    if out.is_empty() {
        return Err(EvaluationError::EmptyData(format!("no rows to draw for {kind}")));
    }
    Ok(out)
}

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 420.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 55.0;

struct Axis {
    lo: f64,
    hi: f64,
    log: bool,
}

impl Axis {
    fn fit(values: impl Iterator<Item = f64>, log: bool) -> Self {
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for v in values {
            if log && v <= 0.0 {
                continue;
            }
            lo = lo.min(v);
            hi = hi.max(v);
        }
        if !lo.is_finite() {
            (lo, hi) = if log { (1.0, 10.0) } else { (0.0, 1.0) };
        }
        if log {
            let (a, b) = (lo.log10().floor(), hi.log10().ceil());
            Axis {
                lo: 10f64.powf(a),
                hi: 10f64.powf(if b > a { b } else { a + 1.0 }),
                log: true,
            }
        } else {
            let (lo, hi) = if hi - lo < 1e-12 { (lo - 0.5, hi + 0.5) } else { (lo, hi) };
            let pad = 0.05 * (hi - lo);
            Axis {
                lo: lo - pad,
                hi: hi + pad,
                log: false,
            }
        }
    }

    fn unit(&self, v: f64) -> f64 {
        if self.log {
            (v.max(self.lo).log10() - self.lo.log10()) / (self.hi.log10() - self.lo.log10())
        } else {
            (v - self.lo) / (self.hi - self.lo)
        }
    }

    fn ticks(&self) -> Vec<f64> {
        if self.log {
            let (a, b) = (self.lo.log10().round() as i32, self.hi.log10().round() as i32);
            (a..=b).map(|e| 10f64.powi(e)).collect()
        } else {
            let raw = (self.hi - self.lo) / 5.0;
            let mag = 10f64.powf(raw.log10().floor());
            let step = [1.0, 2.0, 5.0, 10.0]
                .iter()
                .map(|s| s * mag)
                .find(|&s| s >= raw)
                .unwrap_or(10.0 * mag);
            let first = (self.lo / step).ceil() as i64;
            let last = (self.hi / step).floor() as i64;
            (first..=last).map(|k| k as f64 * step).collect()
        }
    }
}

fn tick_label(v: f64) -> String {
    if v != 0.0 && (v.abs() >= 1e4 || v.abs() < 1e-2) {
        format!("{v:.0e}")
    } else {
        let s = format!("{v:.3}");
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn render_svg(figure: &Figure<'_>, points: &[Point]) -> String {
    let xs = Axis::fit(points.iter().map(|p| p.x), figure.x_log);
    let ys = Axis::fit(
        points.iter().flat_map(|p| {
            let (a, b) = p.band.unwrap_or((p.y, p.y));
            [p.y, a, b]
        }),
        figure.y_log,
    );
    let plot_w = WIDTH - LEFT - RIGHT;
    let plot_h = HEIGHT - TOP - BOTTOM;
    let px = |v: f64| LEFT + xs.unit(v) * plot_w;
    let py = |v: f64| TOP + (1.0 - ys.unit(v)) * plot_h;

    let mut s = String::new();
    let w = &mut s;
    writeln!(
        w,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" viewBox=\"0 0 {WIDTH} {HEIGHT}\" font-family=\"sans-serif\" font-size=\"12\">"
    )
    .unwrap();
    writeln!(w, "<rect width=\"{WIDTH}\" height=\"{HEIGHT}\" fill=\"white\"/>").unwrap();
    writeln!(
        w,
        "<text x=\"{:.1}\" y=\"24\" text-anchor=\"middle\" font-size=\"14\">{}</text>",
        WIDTH / 2.0,
        escape(&figure.title)
    )
    .unwrap();
    writeln!(
        w,
        "<rect x=\"{LEFT}\" y=\"{TOP}\" width=\"{plot_w}\" height=\"{plot_h}\" fill=\"none\" stroke=\"black\"/>"
    )
    .unwrap();
    for t in xs.ticks() {
        let x = px(t);
        writeln!(
            w,
            "<line x1=\"{x:.2}\" y1=\"{:.2}\" x2=\"{x:.2}\" y2=\"{:.2}\" stroke=\"#ddd\"/><text x=\"{x:.2}\" y=\"{:.2}\" text-anchor=\"middle\">{}</text>",
            TOP,
            TOP + plot_h,
            TOP + plot_h + 16.0,
            tick_label(t)
        )
        .unwrap();
    }
    for t in ys.ticks() {
        let y = py(t);
        writeln!(
            w,
            "<line x1=\"{LEFT}\" y1=\"{y:.2}\" x2=\"{:.2}\" y2=\"{y:.2}\" stroke=\"#ddd\"/><text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"end\">{}</text>",
            LEFT + plot_w,
            LEFT - 6.0,
            y + 4.0,
            tick_label(t)
        )
        .unwrap();
    }
    writeln!(
        w,
        "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"middle\">{}{}</text>",
        LEFT + plot_w / 2.0,
        HEIGHT - 14.0,
        escape(figure.x_label),
        if figure.x_log { " (log scale)" } else { "" }
    )
    .unwrap();
    writeln!(
        w,
        "<text x=\"18\" y=\"{:.1}\" text-anchor=\"middle\" transform=\"rotate(-90 18 {:.1})\">{}{}</text>",
        TOP + plot_h / 2.0,
        TOP + plot_h / 2.0,
        escape(figure.y_label),
        if figure.y_log { " (log scale)" } else { "" }
    )
    .unwrap();

    if points.iter().all(|p| p.band.is_some()) && points.len() > 1 {
        let upper = points.iter().map(|p| format!("{:.2},{:.2}", px(p.x), py(p.band.unwrap().1)));
        let lower = points.iter().rev().map(|p| format!("{:.2},{:.2}", px(p.x), py(p.band.unwrap().0)));
        let poly: Vec<String> = upper.chain(lower).collect();
        writeln!(
            w,
            "<polygon points=\"{}\" fill=\"#1f77b4\" fill-opacity=\"0.2\" stroke=\"none\"/>",
            poly.join(" ")
        )
        .unwrap();
    }
    let line: Vec<String> = points.iter().map(|p| format!("{:.2},{:.2}", px(p.x), py(p.y))).collect();
    writeln!(
        w,
        "<polyline points=\"{}\" fill=\"none\" stroke=\"#1f77b4\" stroke-width=\"2\"/>",
        line.join(" ")
    )
    .unwrap();
    for p in points {
        writeln!(
            w,
            "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"3.5\" fill=\"#1f77b4\"/>",
            px(p.x),
            py(p.y)
        )
        .unwrap();
    }
    s.push_str("</svg>\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(estimator: &str, n: usize, seed: u64, f1: f64, lambda: Option<f64>) -> MetricRow {
        MetricRow {
            graph: "ws20".into(),
            estimator: estimator.into(),
            n_cascades: n,
            n_measurements_total: 10 * n,
            seed,
            precision: f1,
            recall: 1.0 - f1,
            f1,
            l2_error: 1.0 / n as f64,
            wall_time_ms: n as f64,
            p_init: 0.05,
            lambda,
            error: None,
        }
    }

    #[test]
    fn f1_plot_has_one_point_per_n() {
        let rows: Vec<MetricRow> = [100, 200, 500, 1000, 2000]
            .iter()
            .flat_map(|&n| (0..3).map(move |s| row("mle", n, s, 0.1 * s as f64 + n as f64 / 4000.0, None)))
            .collect();
        let plots = emit_plot(&rows, PlotKind::F1VsN).unwrap();
        assert_eq!(plots.len(), 1);
        assert_eq!(plots[0].stem, "f1_vs_n__ws20__mle");
        assert_eq!(plots[0].points, 5);
        assert_eq!(plots[0].svg.matches("<circle").count(), 5);
        assert_eq!(plots[0].csv.lines().count(), 6);
        let xs: Vec<f64> = plots[0]
            .csv
            .lines()
            .skip(1)
            .map(|l| l.split(',').next().unwrap().parse().unwrap())
            .collect();
        assert!(xs.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(emit_plot(&rows, PlotKind::F1VsN).unwrap(), plots);
    }

    #[test]
    fn pr_curve_uses_sweep_rows() {
        let rows = vec![
            row("sparse-mle@lambda=0.1", 100, 0, 0.8, Some(0.1)),
            row("sparse-mle@lambda=0.01", 100, 0, 0.5, Some(0.01)),
            row("mle", 100, 0, 0.4, None),
        ];
        let plots = emit_plot(&rows, PlotKind::PrCurve).unwrap();
        assert_eq!(plots.len(), 1);
        assert_eq!(plots[0].stem, "pr_curve__ws20__sparse-mle");
        assert!(plots[0].csv.starts_with("lambda,recall_median,precision_median,count\n0.1,"));
        assert!(plots[0].svg.contains(">recall<") && plots[0].svg.contains(">precision<"));
        assert!(emit_plot(&rows[2..], PlotKind::PrCurve).is_err());
        assert!(emit_plot(&[], PlotKind::F1VsN).is_err());
    }
}
