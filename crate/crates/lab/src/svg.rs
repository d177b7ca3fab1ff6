//! Minimal SVG scatter plots, written directly.

use crate::artifact::Table;

const W: f64 = 640.0;
const H: f64 = 420.0;
const PAD: f64 = 56.0;
const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Plot {
    pub name: String,
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub log_x: bool,
    pub log_y: bool,
    pub series: Vec<Series>,
}

impl Plot {
    /// Scatter of two columns of `table`, one series per distinct value of
    /// `group` (or a single series).
    pub fn from_table(name: &str, title: &str, table: &Table, x: &str, y: &str, group: Option<&str>) -> Self {
        let xs = table.column(x);
        let ys = table.column(y);
        let mut series: Vec<Series> = Vec::new();
        let gi = group.and_then(|g| table.header.iter().position(|h| h == g));
        for (k, row) in table.rows.iter().enumerate() {
            let label = gi.map(|i| row[i].clone()).unwrap_or_default();
            let s = match series.iter().position(|s| s.label == label) {
                Some(i) => i,
                None => {
                    series.push(Series { label: label.clone(), points: Vec::new() });
                    series.len() - 1
                }
            };
            series[s].points.push((xs[k], ys[k]));
        }
        Plot {
            name: name.into(),
            title: title.into(),
            x_label: x.into(),
            y_label: y.into(),
            log_x: false,
            log_y: false,
            series,
        }
    }

    /// One series per y column, all against column `x`.
    pub fn columns(name: &str, title: &str, table: &Table, x: &str, ys: &[&str]) -> Self {
        let xs = table.column(x);
        let series = ys
            .iter()
            .map(|y| Series { label: y.to_string(), points: xs.iter().copied().zip(table.column(y)).collect() })
            .collect();
        Plot {
            name: name.into(),
            title: title.into(),
            x_label: x.into(),
            y_label: ys.join(", "),
            log_x: false,
            log_y: false,
            series,
        }
    }

    pub fn log_x(mut self) -> Self {
        self.log_x = true;
        self
    }

    pub fn log_y(mut self) -> Self {
        self.log_y = true;
        self
    }

    pub fn log_log(mut self) -> Self {
        self.log_x = true;
        self.log_y = true;
        self
    }

    pub fn file_name(&self) -> String {
        format!("{}.svg", self.name)
    }

    fn coords(&self) -> Vec<Vec<(f64, f64)>> {
        let tx = |v: f64| if self.log_x { v.log10() } else { v };
        let ty = |v: f64| if self.log_y { v.log10() } else { v };
        self.series
            .iter()
            .map(|s| {
                s.points.iter().map(|&(a, b)| (tx(a), ty(b))).filter(|(a, b)| a.is_finite() && b.is_finite()).collect()
            })
            .collect()
    }

    pub fn render(&self) -> String {
        let pts = self.coords();
        let all: Vec<(f64, f64)> = pts.iter().flatten().copied().collect();
        let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
        for &(a, b) in &all {
            x0 = x0.min(a);
            x1 = x1.max(a);
            y0 = y0.min(b);
            y1 = y1.max(b);
        }
        if all.is_empty() {
            (x0, x1, y0, y1) = (0.0, 1.0, 0.0, 1.0);
        }
        if x1 - x0 < 1e-12 {
            x0 -= 0.5;
            x1 += 0.5;
        }
        if y1 - y0 < 1e-12 {
            y0 -= 0.5;
            y1 += 0.5;
        }
        let sx = |v: f64| PAD + (v - x0) / (x1 - x0) * (W - 2.0 * PAD);
        let sy = |v: f64| H - PAD - (v - y0) / (y1 - y0) * (H - 2.0 * PAD);
        let mut out = format!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{H}\" viewBox=\"0 0 {W} {H}\">\n"
        );
        out.push_str(&format!("<rect width=\"{W}\" height=\"{H}\" fill=\"white\"/>\n"));
        out.push_str(&format!(
            "<rect x=\"{PAD}\" y=\"{PAD}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"black\"/>\n",
            W - 2.0 * PAD,
            H - 2.0 * PAD
        ));
        out.push_str(&format!("<text x=\"{}\" y=\"24\" text-anchor=\"middle\" font-size=\"15\">{}</text>\n", W / 2.0, esc(&self.title)));
        let lx = if self.log_x { format!("log10 {}", self.x_label) } else { self.x_label.clone() };
        let ly = if self.log_y { format!("log10 {}", self.y_label) } else { self.y_label.clone() };
        out.push_str(&format!("<text x=\"{}\" y=\"{}\" text-anchor=\"middle\" font-size=\"12\">{}</text>\n", W / 2.0, H - 12.0, esc(&lx)));
        out.push_str(&format!(
            "<text x=\"14\" y=\"{}\" text-anchor=\"middle\" font-size=\"12\" transform=\"rotate(-90 14 {})\">{}</text>\n",
            H / 2.0,
            H / 2.0,
            esc(&ly)
        ));
        for k in 0..=4 {
            let fx = x0 + (x1 - x0) * k as f64 / 4.0;
            let fy = y0 + (y1 - y0) * k as f64 / 4.0;
            out.push_str(&format!(
                "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"middle\" font-size=\"10\">{}</text>\n",
                sx(fx),
                H - PAD + 14.0,
                tick(fx)
            ));
            out.push_str(&format!(
                "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"end\" font-size=\"10\">{}</text>\n",
                PAD - 4.0,
                sy(fy) + 3.0,
                tick(fy)
            ));
        }
        for (i, (s, p)) in self.series.iter().zip(&pts).enumerate() {
            let c = COLORS[i % COLORS.len()];
            for &(a, b) in p {
                out.push_str(&format!("<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"2.5\" fill=\"{c}\"/>\n", sx(a), sy(b)));
            }
            if !s.label.is_empty() {
                out.push_str(&format!(
                    "<text x=\"{:.1}\" y=\"{:.1}\" font-size=\"11\" fill=\"{c}\">{}</text>\n",
                    W - PAD + 4.0,
                    PAD + 14.0 * (i + 1) as f64,
                    esc(&s.label)
                ));
            }
        }
        out.push_str("</svg>\n");
        out
    }
}

fn tick(v: f64) -> String {
    let s = format!("{v:.3}");
    if s == "-0.000" { "0.000".into() } else { s }
}

fn esc(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
