//! Hand-rolled SVG charts: heatmaps, boxplots, line charts, ROC curves and
//! bar charts. Output is a pure function of the input data, so renders are
//! byte-reproducible.

use std::fmt::Write;

use alertcast_core::eda::BoxStats;

const PALETTE: [&str; 10] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
    "#bcbd22", "#17becf",
];

fn esc(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

struct Canvas {
    body: String,
    width: f64,
    height: f64,
}

impl Canvas {
    fn new(width: f64, height: f64) -> Self {
        Canvas { body: String::new(), width, height }
    }

    fn rect(&mut self, x: f64, y: f64, w: f64, h: f64, fill: &str, stroke: &str) {
        writeln!(
            self.body,
            r#"<rect x="{x:.2}" y="{y:.2}" width="{w:.2}" height="{h:.2}" fill="{fill}" stroke="{stroke}"/>"#
        )
        .unwrap();
    }

    fn line(&mut self, x1: f64, y1: f64, x2: f64, y2: f64, stroke: &str, width: f64) {
        writeln!(
            self.body,
            r#"<line x1="{x1:.2}" y1="{y1:.2}" x2="{x2:.2}" y2="{y2:.2}" stroke="{stroke}" stroke-width="{width:.2}"/>"#
        )
        .unwrap();
    }

    fn dashed_line(&mut self, x1: f64, y1: f64, x2: f64, y2: f64, stroke: &str) {
        writeln!(
            self.body,
            r#"<line x1="{x1:.2}" y1="{y1:.2}" x2="{x2:.2}" y2="{y2:.2}" stroke="{stroke}" stroke-width="1" stroke-dasharray="4 3"/>"#
        )
        .unwrap();
    }

    fn text(&mut self, x: f64, y: f64, size: u32, anchor: &str, fill: &str, content: &str) {
        writeln!(
            self.body,
            r#"<text x="{x:.2}" y="{y:.2}" font-family="sans-serif" font-size="{size}" text-anchor="{anchor}" fill="{fill}">{}</text>"#,
            esc(content)
        )
        .unwrap();
    }

    fn rotated_text(&mut self, x: f64, y: f64, size: u32, angle: f64, content: &str) {
        writeln!(
            self.body,
            r##"<text x="{x:.2}" y="{y:.2}" font-family="sans-serif" font-size="{size}" text-anchor="start" transform="rotate({angle:.0} {x:.2} {y:.2})" fill="#000">{}</text>"##,
            esc(content)
        )
        .unwrap();
    }

    fn polyline(&mut self, points: &[(f64, f64)], stroke: &str) {
        let coords: Vec<String> = points.iter().map(|(x, y)| format!("{x:.2},{y:.2}")).collect();
        writeln!(
            self.body,
            r#"<polyline points="{}" fill="none" stroke="{stroke}" stroke-width="1.5"/>"#,
            coords.join(" ")
        )
        .unwrap();
    }

    fn title(&mut self, text: &str) {
        self.text(self.width / 2.0, 20.0, 14, "middle", "#000", text);
    }

    fn finish(self) -> String {
        format!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{:.0}\" height=\"{:.0}\" viewBox=\"0 0 {:.0} {:.0}\">\n\
             <rect width=\"{:.0}\" height=\"{:.0}\" fill=\"#ffffff\"/>\n{}</svg>\n",
            self.width, self.height, self.width, self.height, self.width, self.height, self.body
        )
    }
}

fn label_width(labels: &[String]) -> f64 {
    labels.iter().map(|l| l.chars().count()).max().unwrap_or(0) as f64 * 6.8 + 14.0
}

fn format_value(v: f64) -> String {
    if v.is_nan() {
        String::new()
    } else if v.abs() >= 1000.0 {
        format!("{v:.0}")
    } else if v.abs() >= 10.0 {
        format!("{v:.1}")
    } else {
        format!("{v:.2}")
    }
}

/// Linear white-to-red scale over the finite min/max of the chart.
fn heat_color(v: f64, min: f64, max: f64) -> String {
    if v.is_nan() {
        return "#cccccc".into();
    }
    let t = if max > min { (v - min) / (max - min) } else { 0.5 };
    let lerp = |a: f64, b: f64| (a + (b - a) * t).round() as u8;
    format!("#{:02x}{:02x}{:02x}", lerp(255.0, 165.0), lerp(245.0, 15.0), lerp(235.0, 21.0))
}

/// Annotated heatmap; NaN cells are gray and unannotated.
pub fn heatmap(title: &str, row_labels: &[String], col_labels: &[String], values: &[Vec<f64>]) -> String {
    let left = label_width(row_labels);
    let top = 40.0 + col_labels.iter().map(|l| l.chars().count()).max().unwrap_or(0) as f64 * 5.2;
    let cell_w = 52.0f64.max(640.0 / col_labels.len() as f64).min(88.0);
    let cell_h = 22.0;
    let width = left + cell_w * col_labels.len() as f64 + 20.0;
    let height = top + cell_h * row_labels.len() as f64 + 16.0;

    let finite: Vec<f64> = values.iter().flatten().copied().filter(|v| !v.is_nan()).collect();
    let min = finite.iter().cloned().fold(f64::INFINITY, f64::min);
    let max = finite.iter().cloned().fold(f64::NEG_INFINITY, f64::max);

    let mut canvas = Canvas::new(width, height);
    canvas.title(title);
    for (c, label) in col_labels.iter().enumerate() {
        canvas.rotated_text(left + cell_w * (c as f64 + 0.5), top - 6.0, 10, -55.0, label);
    }
    for (r, label) in row_labels.iter().enumerate() {
        let y = top + cell_h * r as f64;
        canvas.text(left - 6.0, y + cell_h - 7.0, 10, "end", "#000", label);
        for (c, &v) in values[r].iter().enumerate() {
            let x = left + cell_w * c as f64;
            canvas.rect(x, y, cell_w, cell_h, &heat_color(v, min, max), "#ffffff");
            if !v.is_nan() {
                let t = if max > min { (v - min) / (max - min) } else { 0.5 };
                let color = if t > 0.55 { "#ffffff" } else { "#000000" };
                canvas.text(x + cell_w / 2.0, y + cell_h - 7.0, 9, "middle", color, &format_value(v));
            }
        }
    }
    canvas.finish()
}

/// Horizontal Tukey boxplots, one row per label.
pub fn boxplots(title: &str, labels: &[String], stats: &[BoxStats]) -> String {
    let left = label_width(labels);
    let row_h = 26.0;
    let plot_w = 560.0;
    let top = 40.0;
    let width = left + plot_w + 90.0;
    let height = top + row_h * labels.len() as f64 + 40.0;

    let lo = stats.iter().map(|s| s.min).fold(f64::INFINITY, f64::min).min(0.0);
    let hi = stats.iter().map(|s| s.max).fold(1.0, f64::max);
    let scale = |v: f64| left + (v - lo) / (hi - lo) * plot_w;

    let mut canvas = Canvas::new(width, height);
    canvas.title(title);
    let axis_y = top + row_h * labels.len() as f64 + 8.0;
    canvas.line(left, axis_y, left + plot_w, axis_y, "#000", 1.0);
    for tick in 0..=5 {
        let v = lo + (hi - lo) * f64::from(tick) / 5.0;
        let x = scale(v);
        canvas.line(x, axis_y, x, axis_y + 4.0, "#000", 1.0);
        canvas.text(x, axis_y + 16.0, 10, "middle", "#000", &format_value(v));
    }
    for (r, (label, s)) in labels.iter().zip(stats).enumerate() {
        let cy = top + row_h * (r as f64 + 0.5);
        canvas.text(left - 6.0, cy + 4.0, 10, "end", "#000", label);
        canvas.line(scale(s.whisker_low), cy, scale(s.whisker_high), cy, "#555", 1.0);
        canvas.line(scale(s.whisker_low), cy - 5.0, scale(s.whisker_low), cy + 5.0, "#555", 1.0);
        canvas.line(scale(s.whisker_high), cy - 5.0, scale(s.whisker_high), cy + 5.0, "#555", 1.0);
        let (bx, bw) = (scale(s.q1), (scale(s.q3) - scale(s.q1)).max(1.0));
        canvas.rect(bx, cy - 8.0, bw, 16.0, "#9ecae1", "#333");
        canvas.line(scale(s.median), cy - 8.0, scale(s.median), cy + 8.0, "#08306b", 2.0);
        if s.n_outliers > 0 {
            canvas.text(left + plot_w + 8.0, cy + 4.0, 9, "start", "#b10026", &format!("{} out", s.n_outliers));
        }
    }
    canvas.finish()
}

/// Multi-series line chart; x values are day offsets rendered as-is.
pub fn lines(title: &str, x_label: &str, y_label: &str, series: &[(String, Vec<(f64, f64)>)]) -> String {
    let legend_w = label_width(&series.iter().map(|(n, _)| n.clone()).collect::<Vec<_>>()) + 26.0;
    let (left, top, plot_w) = (56.0, 40.0, 620.0);
    let plot_h = 300.0f64.max(series.len() as f64 * 14.0);
    let width = left + plot_w + legend_w + 20.0;
    let height = top + plot_h + 54.0;

    let xs = series.iter().flat_map(|(_, pts)| pts.iter().map(|p| p.0));
    let ys = series.iter().flat_map(|(_, pts)| pts.iter().map(|p| p.1));
    let (x_min, x_max) = xs.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
    let y_max = ys.fold(1.0f64, f64::max);
    let sx = |v: f64| left + if x_max > x_min { (v - x_min) / (x_max - x_min) } else { 0.5 } * plot_w;
    let sy = |v: f64| top + plot_h - v / y_max * plot_h;

    let mut canvas = Canvas::new(width, height);
    canvas.title(title);
    canvas.line(left, top, left, top + plot_h, "#000", 1.0);
    canvas.line(left, top + plot_h, left + plot_w, top + plot_h, "#000", 1.0);
    for tick in 0..=5 {
        let fraction = f64::from(tick) / 5.0;
        let x = left + plot_w * fraction;
        canvas.line(x, top + plot_h, x, top + plot_h + 4.0, "#000", 1.0);
        canvas.text(x, top + plot_h + 16.0, 10, "middle", "#000", &format_value(x_min + (x_max - x_min) * fraction));
        let y = top + plot_h - plot_h * fraction;
        canvas.line(left - 4.0, y, left, y, "#000", 1.0);
        canvas.text(left - 6.0, y + 3.0, 10, "end", "#000", &format_value(y_max * fraction));
    }
    canvas.text(left + plot_w / 2.0, height - 10.0, 11, "middle", "#000", x_label);
    canvas.text(14.0, top - 10.0, 11, "start", "#000", y_label);
    for (i, (name, points)) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let scaled: Vec<(f64, f64)> = points.iter().map(|&(x, y)| (sx(x), sy(y))).collect();
        if scaled.len() == 1 {
            canvas.rect(scaled[0].0 - 1.5, scaled[0].1 - 1.5, 3.0, 3.0, color, "none");
        } else if !scaled.is_empty() {
            canvas.polyline(&scaled, color);
        }
        let ly = top + 14.0 * i as f64;
        canvas.rect(left + plot_w + 12.0, ly, 10.0, 10.0, color, "none");
        canvas.text(left + plot_w + 26.0, ly + 9.0, 10, "start", "#000", name);
    }
    canvas.finish()
}

/// ROC curve with the random-classifier diagonal and an AUC annotation.
pub fn roc(title: &str, points: &[(f64, f64)], auc: f64) -> String {
    let (left, top, side) = (56.0, 40.0, 380.0);
    let width = left + side + 30.0;
    let height = top + side + 56.0;
    let sx = |v: f64| left + v * side;
    let sy = |v: f64| top + side - v * side;

    let mut canvas = Canvas::new(width, height);
    canvas.title(title);
    canvas.line(left, top, left, top + side, "#000", 1.0);
    canvas.line(left, top + side, left + side, top + side, "#000", 1.0);
    for tick in 0..=4 {
        let fraction = f64::from(tick) / 4.0;
        canvas.text(sx(fraction), top + side + 16.0, 10, "middle", "#000", &format!("{fraction:.2}"));
        canvas.text(left - 6.0, sy(fraction) + 3.0, 10, "end", "#000", &format!("{fraction:.2}"));
    }
    canvas.text(left + side / 2.0, height - 10.0, 11, "middle", "#000", "false positive rate");
    canvas.text(14.0, top - 10.0, 11, "start", "#000", "true positive rate");
    canvas.dashed_line(sx(0.0), sy(0.0), sx(1.0), sy(1.0), "#999");
    let scaled: Vec<(f64, f64)> = points.iter().map(|&(x, y)| (sx(x), sy(y))).collect();
    canvas.polyline(&scaled, "#d62728");
    canvas.text(sx(0.62), sy(0.08), 12, "start", "#000", &format!("AUC = {auc:.4}"));
    canvas.finish()
}

/// Horizontal bar chart (used for feature importances).
pub fn hbar(title: &str, labels: &[String], values: &[f64]) -> String {
    let left = label_width(labels);
    let row_h = 22.0;
    let plot_w = 480.0;
    let top = 40.0;
    let width = left + plot_w + 80.0;
    let height = top + row_h * labels.len() as f64 + 20.0;
    let max = values.iter().cloned().fold(f64::MIN_POSITIVE, f64::max);

    let mut canvas = Canvas::new(width, height);
    canvas.title(title);
    for (r, (label, &v)) in labels.iter().zip(values).enumerate() {
        let y = top + row_h * r as f64;
        canvas.text(left - 6.0, y + row_h - 7.0, 10, "end", "#000", label);
        canvas.rect(left, y + 3.0, (v / max * plot_w).max(0.5), row_h - 8.0, "#1f77b4", "none");
        canvas.text(left + (v / max * plot_w).max(0.5) + 6.0, y + row_h - 7.0, 9, "start", "#000", &format!("{v:.4}"));
    }
    canvas.finish()
}
