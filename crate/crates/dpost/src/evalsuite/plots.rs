//! Small self-contained SVG charts for the report command: accuracy lines
//! over iterations, Pass@K / pseudo-label bars, accuracy-vs-FLOPs scatter,
//! and the decode-throughput comparison.

const W: f64 = 640.0;
const H: f64 = 420.0;
const ML: f64 = 70.0; // margins
const MR: f64 = 20.0;
const MT: f64 = 40.0;
const MB: f64 = 55.0;

const PALETTE: [&str; 6] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b",
];

#[derive(Debug, Clone)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

impl Series {
    pub fn new(label: impl Into<String>, points: Vec<(f64, f64)>) -> Series {
        Series {
            label: label.into(),
            points,
        }
    }
}

struct Frame {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
    log_x: bool,
}

impl Frame {
    fn from_series(series: &[Series], log_x: bool) -> Frame {
        let mut xs: Vec<f64> = Vec::new();
        let mut ys: Vec<f64> = Vec::new();
        for s in series {
            for &(x, y) in &s.points {
                xs.push(if log_x { x.max(1e-30).log10() } else { x });
                ys.push(y);
            }
        }
        let (mut x0, mut x1) = min_max(&xs);
        let (mut y0, mut y1) = min_max(&ys);
        if (x1 - x0).abs() < 1e-12 {
            x0 -= 0.5;
            x1 += 0.5;
        }
        if (y1 - y0).abs() < 1e-12 {
            y0 -= 0.5;
            y1 += 0.5;
        }
        let pad = (y1 - y0) * 0.08;
        Frame {
            x0,
            x1,
            y0: y0 - pad,
            y1: y1 + pad,
            log_x,
        }
    }

    fn px(&self, x: f64) -> f64 {
        let x = if self.log_x { x.max(1e-30).log10() } else { x };
        ML + (x - self.x0) / (self.x1 - self.x0) * (W - ML - MR)
    }

    fn py(&self, y: f64) -> f64 {
        H - MB - (y - self.y0) / (self.y1 - self.y0) * (H - MT - MB)
    }
}

fn min_max(v: &[f64]) -> (f64, f64) {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for &x in v {
        lo = lo.min(x);
        hi = hi.max(x);
    }
    if !lo.is_finite() {
        (0.0, 1.0)
    } else {
        (lo, hi)
    }
}

fn header(title: &str) -> String {
    format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{H}\" \
         viewBox=\"0 0 {W} {H}\" font-family=\"sans-serif\" font-size=\"12\">\n\
         <rect width=\"{W}\" height=\"{H}\" fill=\"white\"/>\n\
         <text x=\"{}\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">{}</text>\n",
        W / 2.0,
        escape(title)
    )
}

fn axes(frame: &Frame, xlabel: &str, ylabel: &str) -> String {
    let mut s = String::new();
    s.push_str(&format!(
        "<line x1=\"{ML}\" y1=\"{0}\" x2=\"{1}\" y2=\"{0}\" stroke=\"black\"/>\n\
         <line x1=\"{ML}\" y1=\"{MT}\" x2=\"{ML}\" y2=\"{0}\" stroke=\"black\"/>\n",
        H - MB,
        W - MR
    ));
    for i in 0..=4 {
        let fy = frame.y0 + (frame.y1 - frame.y0) * i as f64 / 4.0;
        let py = frame.py(fy);
        s.push_str(&format!(
            "<line x1=\"{0}\" y1=\"{py}\" x2=\"{1}\" y2=\"{py}\" stroke=\"#ddd\"/>\n\
             <text x=\"{2}\" y=\"{3}\" text-anchor=\"end\">{4}</text>\n",
            ML,
            W - MR,
            ML - 6.0,
            py + 4.0,
            fmt_tick(fy)
        ));
        let fx = frame.x0 + (frame.x1 - frame.x0) * i as f64 / 4.0;
        let raw = if frame.log_x { 10f64.powf(fx) } else { fx };
        let px = ML + (fx - frame.x0) / (frame.x1 - frame.x0) * (W - ML - MR);
        s.push_str(&format!(
            "<text x=\"{px}\" y=\"{0}\" text-anchor=\"middle\">{1}</text>\n",
            H - MB + 18.0,
            fmt_tick(raw)
        ));
    }
    s.push_str(&format!(
        "<text x=\"{0}\" y=\"{1}\" text-anchor=\"middle\">{2}</text>\n\
         <text x=\"16\" y=\"{3}\" text-anchor=\"middle\" transform=\"rotate(-90 16 {3})\">{4}</text>\n",
        (ML + W - MR) / 2.0,
        H - 14.0,
        escape(xlabel),
        (MT + H - MB) / 2.0,
        escape(ylabel)
    ));
    s
}

fn legend(labels: &[&str]) -> String {
    let mut s = String::new();
    for (i, label) in labels.iter().enumerate() {
        let y = MT + 8.0 + 16.0 * i as f64;
        s.push_str(&format!(
            "<rect x=\"{0}\" y=\"{1}\" width=\"10\" height=\"10\" fill=\"{2}\"/>\n\
             <text x=\"{3}\" y=\"{4}\">{5}</text>\n",
            W - MR - 150.0,
            y,
            PALETTE[i % PALETTE.len()],
            W - MR - 135.0,
            y + 9.0,
            escape(label)
        ));
    }
    s
}

fn fmt_tick(v: f64) -> String {
    let a = v.abs();
    if a >= 1e5 || (a > 0.0 && a < 1e-2) {
        format!("{v:.1e}")
    } else if a >= 100.0 {
        format!("{v:.0}")
    } else {
        let s = format!("{v:.2}");
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn render_points(frame: &Frame, series: &[Series], connect: bool) -> String {
    let mut s = String::new();
    for (i, ser) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        if connect && ser.points.len() > 1 {
            let path: Vec<String> = ser
                .points
                .iter()
                .map(|&(x, y)| format!("{:.2},{:.2}", frame.px(x), frame.py(y)))
                .collect();
            s.push_str(&format!(
                "<polyline points=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"2\"/>\n",
                path.join(" ")
            ));
        }
        for &(x, y) in &ser.points {
            s.push_str(&format!(
                "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"3.5\" fill=\"{color}\"/>\n",
                frame.px(x),
                frame.py(y)
            ));
        }
    }
    s
}

/// Connected line chart (accuracy over iterations, throughput over batch
/// size, ...).
pub fn line_chart(title: &str, xlabel: &str, ylabel: &str, series: &[Series]) -> String {
    chart(title, xlabel, ylabel, series, true, false)
}

/// Scatter with a log-10 x axis (accuracy vs FLOPs).
pub fn scatter_chart_log_x(title: &str, xlabel: &str, ylabel: &str, series: &[Series]) -> String {
    chart(title, xlabel, ylabel, series, false, true)
}

fn chart(
    title: &str,
    xlabel: &str,
    ylabel: &str,
    series: &[Series],
    connect: bool,
    log_x: bool,
) -> String {
    let frame = Frame::from_series(series, log_x);
    let labels: Vec<&str> = series.iter().map(|s| s.label.as_str()).collect();
    let mut svg = header(title);
    svg.push_str(&axes(&frame, xlabel, ylabel));
    svg.push_str(&render_points(&frame, series, connect));
    svg.push_str(&legend(&labels));
    svg.push_str("</svg>\n");
    svg
}

/// Grouped bars: one group per label, one bar per series within the group.
pub fn bar_chart(
    title: &str,
    ylabel: &str,
    group_labels: &[String],
    series: &[(String, Vec<f64>)],
) -> String {
    let mut ymax = 0.0f64;
    for (_, vals) in series {
        for &v in vals {
            ymax = ymax.max(v);
        }
    }
    if ymax <= 0.0 {
        ymax = 1.0;
    }
    let groups = group_labels.len().max(1) as f64;
    let group_w = (W - ML - MR) / groups;
    let bar_w = (group_w * 0.8) / series.len().max(1) as f64;
    let scale = (H - MT - MB) / (ymax * 1.08);

    let mut svg = header(title);
    svg.push_str(&format!(
        "<line x1=\"{ML}\" y1=\"{0}\" x2=\"{1}\" y2=\"{0}\" stroke=\"black\"/>\n",
        H - MB,
        W - MR
    ));
    for i in 0..=4 {
        let v = ymax * 1.08 * i as f64 / 4.0;
        let py = H - MB - v * scale;
        svg.push_str(&format!(
            "<line x1=\"{ML}\" y1=\"{py}\" x2=\"{0}\" y2=\"{py}\" stroke=\"#ddd\"/>\n\
             <text x=\"{1}\" y=\"{2}\" text-anchor=\"end\">{3}</text>\n",
            W - MR,
            ML - 6.0,
            py + 4.0,
            fmt_tick(v)
        ));
    }
    for (gi, glabel) in group_labels.iter().enumerate() {
        let gx = ML + gi as f64 * group_w + group_w * 0.1;
        for (si, (_, vals)) in series.iter().enumerate() {
            let v = vals.get(gi).copied().unwrap_or(0.0);
            let x = gx + si as f64 * bar_w;
            let h = v * scale;
            svg.push_str(&format!(
                "<rect x=\"{x:.2}\" y=\"{0:.2}\" width=\"{1:.2}\" height=\"{h:.2}\" fill=\"{2}\"/>\n",
                H - MB - h,
                bar_w * 0.9,
                PALETTE[si % PALETTE.len()]
            ));
        }
        svg.push_str(&format!(
            "<text x=\"{0:.2}\" y=\"{1}\" text-anchor=\"middle\">{2}</text>\n",
            gx + group_w * 0.4,
            H - MB + 18.0,
            escape(glabel)
        ));
    }
    let labels: Vec<&str> = series.iter().map(|(l, _)| l.as_str()).collect();
    svg.push_str(&legend(&labels));
    svg.push_str(&format!(
        "<text x=\"16\" y=\"{0}\" text-anchor=\"middle\" transform=\"rotate(-90 16 {0})\">{1}</text>\n",
        (MT + H - MB) / 2.0,
        escape(ylabel)
    ));
    svg.push_str("</svg>\n");
    svg
}
