//! Minimal self-contained SVG line plots for sweep output. No external
//! plotting dependency; the figures only display results.

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 420.0;
const MARGIN: f64 = 60.0;

/// Renders one polyline with axis frames and min/max tick labels.
pub fn line_plot(title: &str, x_label: &str, y_label: &str, points: &[(f64, f64)]) -> String {
    let (x_min, x_max) = span(points.iter().map(|p| p.0));
    let (y_min, y_max) = span(points.iter().map(|p| p.1));
    let sx = |x: f64| MARGIN + (x - x_min) / (x_max - x_min).max(1e-300) * (WIDTH - 2.0 * MARGIN);
    let sy =
        |y: f64| HEIGHT - MARGIN - (y - y_min) / (y_max - y_min).max(1e-300) * (HEIGHT - 2.0 * MARGIN);

    let path: Vec<String> = points
        .iter()
        .map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y)))
        .collect();
    let markers: String = points
        .iter()
        .map(|&(x, y)| {
            format!(
                "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"3\" fill=\"#1f77b4\"/>",
                sx(x),
                sy(y)
            )
        })
        .collect();

    format!(
        concat!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" ",
            "viewBox=\"0 0 {w} {h}\">\n",
            "<rect width=\"{w}\" height=\"{h}\" fill=\"white\"/>\n",
            "<text x=\"{tx}\" y=\"24\" text-anchor=\"middle\" font-family=\"monospace\" ",
            "font-size=\"14\">{title}</text>\n",
            "<line x1=\"{m}\" y1=\"{ybase}\" x2=\"{xend}\" y2=\"{ybase}\" stroke=\"black\"/>\n",
            "<line x1=\"{m}\" y1=\"{m}\" x2=\"{m}\" y2=\"{ybase}\" stroke=\"black\"/>\n",
            "<text x=\"{tx}\" y=\"{xlab_y}\" text-anchor=\"middle\" font-family=\"monospace\" ",
            "font-size=\"12\">{x_label}</text>\n",
            "<text x=\"16\" y=\"{ty}\" text-anchor=\"middle\" font-family=\"monospace\" ",
            "font-size=\"12\" transform=\"rotate(-90 16 {ty})\">{y_label}</text>\n",
            "<text x=\"{m}\" y=\"{tick_y}\" text-anchor=\"middle\" font-family=\"monospace\" ",
            "font-size=\"10\">{x_min}</text>\n",
            "<text x=\"{xend}\" y=\"{tick_y}\" text-anchor=\"middle\" font-family=\"monospace\" ",
            "font-size=\"10\">{x_max}</text>\n",
            "<text x=\"{ytick_x}\" y=\"{ybase}\" text-anchor=\"end\" font-family=\"monospace\" ",
            "font-size=\"10\">{y_min}</text>\n",
            "<text x=\"{ytick_x}\" y=\"{ytop}\" text-anchor=\"end\" font-family=\"monospace\" ",
            "font-size=\"10\">{y_max}</text>\n",
            "<polyline points=\"{path}\" fill=\"none\" stroke=\"#1f77b4\" stroke-width=\"1.5\"/>\n",
            "{markers}\n",
            "</svg>\n"
        ),
        w = WIDTH,
        h = HEIGHT,
        m = MARGIN,
        tx = WIDTH / 2.0,
        ty = HEIGHT / 2.0,
        xend = WIDTH - MARGIN,
        ybase = HEIGHT - MARGIN,
        ytop = MARGIN,
        xlab_y = HEIGHT - 16.0,
        tick_y = HEIGHT - MARGIN + 16.0,
        ytick_x = MARGIN - 6.0,
        title = escape(title),
        x_label = escape(x_label),
        y_label = escape(y_label),
        x_min = trim(x_min),
        x_max = trim(x_max),
        y_min = trim(y_min),
        y_max = trim(y_max),
        path = path.join(" "),
        markers = markers,
    )
}

fn span(values: impl Iterator<Item = f64>) -> (f64, f64) {
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

fn trim(v: f64) -> String {
    format!("{v:.4}")
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
