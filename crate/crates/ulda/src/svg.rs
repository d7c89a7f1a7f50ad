//! Minimal deterministic SVG charts: line series with optional min/max
//! ribbons, linear axes, and a legend. Output depends only on the input data,
//! so figures can be byte-compared across runs.

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 440.0;
const MARGIN_LEFT: f64 = 64.0;
const MARGIN_RIGHT: f64 = 24.0;
const MARGIN_TOP: f64 = 40.0;
const MARGIN_BOTTOM: f64 = 52.0;

pub const PALETTE: [&str; 4] = ["#d62728", "#1f77b4", "#e0a100", "#2ca02c"];

#[derive(Debug, Clone)]
pub struct LineSeries {
    pub name: String,
    pub color: String,
    pub points: Vec<(f64, f64)>,
    /// Optional (lower, upper) band drawn as a translucent ribbon.
    pub band: Option<Vec<(f64, f64, f64)>>,
}

impl LineSeries {
    pub fn new(name: impl Into<String>, color: &str, points: Vec<(f64, f64)>) -> LineSeries {
        LineSeries {
            name: name.into(),
            color: color.to_string(),
            points,
            band: None,
        }
    }

    pub fn with_band(mut self, band: Vec<(f64, f64, f64)>) -> LineSeries {
        self.band = Some(band);
        self
    }
}

#[derive(Debug, Clone)]
pub struct Chart {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub series: Vec<LineSeries>,
}

impl Chart {
    pub fn new(
        title: impl Into<String>,
        x_label: impl Into<String>,
        y_label: impl Into<String>,
    ) -> Chart {
        Chart {
            title: title.into(),
            x_label: x_label.into(),
            y_label: y_label.into(),
            series: Vec::new(),
        }
    }

    pub fn push(&mut self, series: LineSeries) {
        self.series.push(series);
    }

    pub fn render(&self) -> String {
        let (x_min, x_max, y_min, y_max) = self.data_bounds();
        let plot_w = WIDTH - MARGIN_LEFT - MARGIN_RIGHT;
        let plot_h = HEIGHT - MARGIN_TOP - MARGIN_BOTTOM;
        let sx = |x: f64| MARGIN_LEFT + (x - x_min) / (x_max - x_min) * plot_w;
        let sy = |y: f64| MARGIN_TOP + plot_h - (y - y_min) / (y_max - y_min) * plot_h;

        let mut svg = String::new();
        svg.push_str(&format!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" viewBox=\"0 0 {WIDTH} {HEIGHT}\">\n"
        ));
        svg.push_str("<rect width=\"100%\" height=\"100%\" fill=\"#ffffff\"/>\n");
        svg.push_str(&format!(
            "<text x=\"{}\" y=\"22\" font-family=\"monospace\" font-size=\"15\" text-anchor=\"middle\">{}</text>\n",
            fmt(WIDTH / 2.0),
            escape(&self.title)
        ));

        // gridlines and tick labels
        for i in 0..=4 {
            let frac = i as f64 / 4.0;
            let x = x_min + frac * (x_max - x_min);
            let y = y_min + frac * (y_max - y_min);
            let px = sx(x);
            let py = sy(y);
            svg.push_str(&format!(
                "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"#dddddd\" stroke-width=\"1\"/>\n",
                fmt(px), fmt(MARGIN_TOP), fmt(px), fmt(MARGIN_TOP + plot_h)
            ));
            svg.push_str(&format!(
                "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"#dddddd\" stroke-width=\"1\"/>\n",
                fmt(MARGIN_LEFT), fmt(py), fmt(MARGIN_LEFT + plot_w), fmt(py)
            ));
            svg.push_str(&format!(
                "<text x=\"{}\" y=\"{}\" font-family=\"monospace\" font-size=\"11\" text-anchor=\"middle\">{}</text>\n",
                fmt(px), fmt(MARGIN_TOP + plot_h + 18.0), fmt(x)
            ));
            svg.push_str(&format!(
                "<text x=\"{}\" y=\"{}\" font-family=\"monospace\" font-size=\"11\" text-anchor=\"end\">{}</text>\n",
                fmt(MARGIN_LEFT - 6.0), fmt(py + 4.0), fmt(y)
            ));
        }

        // ribbons under the lines
        for series in &self.series {
            if let Some(band) = &series.band {
                if band.len() >= 2 {
                    let mut d = String::from("M");
                    for (x, lo, _) in band {
                        d.push_str(&format!(" {},{}", fmt(sx(*x)), fmt(sy(*lo))));
                    }
                    for (x, _, hi) in band.iter().rev() {
                        d.push_str(&format!(" {},{}", fmt(sx(*x)), fmt(sy(*hi))));
                    }
                    d.push_str(" Z");
                    svg.push_str(&format!(
                        "<path d=\"{d}\" fill=\"{}\" fill-opacity=\"0.18\" stroke=\"none\"/>\n",
                        series.color
                    ));
                }
            }
        }
        for series in &self.series {
            if series.points.is_empty() {
                continue;
            }
            let points: Vec<String> = series
                .points
                .iter()
                .map(|(x, y)| format!("{},{}", fmt(sx(*x)), fmt(sy(*y))))
                .collect();
            svg.push_str(&format!(
                "<polyline points=\"{}\" fill=\"none\" stroke=\"{}\" stroke-width=\"1.8\"/>\n",
                points.join(" "),
                series.color
            ));
        }

        // axes on top
        svg.push_str(&format!(
            "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"#333333\" stroke-width=\"1.2\"/>\n",
            fmt(MARGIN_LEFT), fmt(MARGIN_TOP), fmt(MARGIN_LEFT), fmt(MARGIN_TOP + plot_h)
        ));
        svg.push_str(&format!(
            "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"#333333\" stroke-width=\"1.2\"/>\n",
            fmt(MARGIN_LEFT), fmt(MARGIN_TOP + plot_h), fmt(MARGIN_LEFT + plot_w), fmt(MARGIN_TOP + plot_h)
        ));
        svg.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" font-family=\"monospace\" font-size=\"12\" text-anchor=\"middle\">{}</text>\n",
            fmt(MARGIN_LEFT + plot_w / 2.0),
            fmt(HEIGHT - 14.0),
            escape(&self.x_label)
        ));
        svg.push_str(&format!(
            "<text x=\"16\" y=\"{}\" font-family=\"monospace\" font-size=\"12\" text-anchor=\"middle\" transform=\"rotate(-90 16 {})\">{}</text>\n",
            fmt(MARGIN_TOP + plot_h / 2.0),
            fmt(MARGIN_TOP + plot_h / 2.0),
            escape(&self.y_label)
        ));

        // legend
        for (i, series) in self.series.iter().enumerate() {
            let y = MARGIN_TOP + 14.0 + 16.0 * i as f64;
            let x = MARGIN_LEFT + plot_w - 150.0;
            svg.push_str(&format!(
                "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"{}\" stroke-width=\"2.5\"/>\n",
                fmt(x), fmt(y - 4.0), fmt(x + 20.0), fmt(y - 4.0), series.color
            ));
            svg.push_str(&format!(
                "<text x=\"{}\" y=\"{}\" font-family=\"monospace\" font-size=\"11\">{}</text>\n",
                fmt(x + 26.0), fmt(y), escape(&series.name)
            ));
        }
        svg.push_str("</svg>\n");
        svg
    }

    fn data_bounds(&self) -> (f64, f64, f64, f64) {
        let mut x_min = f64::INFINITY;
        let mut x_max = f64::NEG_INFINITY;
        let mut y_min = f64::INFINITY;
        let mut y_max = f64::NEG_INFINITY;
        let mut fold = |x: f64, y: f64| {
            x_min = x_min.min(x);
            x_max = x_max.max(x);
            y_min = y_min.min(y);
            y_max = y_max.max(y);
        };
        for series in &self.series {
            for &(x, y) in &series.points {
                fold(x, y);
            }
            if let Some(band) = &series.band {
                for &(x, lo, hi) in band {
                    fold(x, lo);
                    fold(x, hi);
                }
            }
        }
        if !x_min.is_finite() || !x_max.is_finite() {
            (x_min, x_max, y_min, y_max) = (0.0, 1.0, 0.0, 1.0);
        }
        if x_max - x_min < 1e-12 {
            x_min -= 0.5;
            x_max += 0.5;
        }
        if y_max - y_min < 1e-12 {
            y_min -= 0.5;
            y_max += 0.5;
        }
        // headroom above the data
        let pad = 0.05 * (y_max - y_min);
        (x_min, x_max, y_min, y_max + pad)
    }
}

fn fmt(v: f64) -> String {
    let text = format!("{v:.4}");
    let trimmed = text.trim_end_matches('0').trim_end_matches('.');
    if trimmed == "-0" {
        "0".to_string()
    } else {
        trimmed.to_string()
    }
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
