use std::fmt::Write as _;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 400.0;
const MARGIN: f64 = 50.0;

/// A single polyline with axis extents printed at the corners.
pub fn polyline_svg(title: &str, xlabel: &str, pts: &[(f64, f64)]) -> String {
    let finite: Vec<(f64, f64)> = pts.iter().copied().filter(|(x, y)| x.is_finite() && y.is_finite()).collect();
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for (x, y) in &finite {
        x0 = x0.min(*x);
        x1 = x1.max(*x);
        y0 = y0.min(*y);
        y1 = y1.max(*y);
    }
    if finite.is_empty() {
        (x0, x1, y0, y1) = (0.0, 1.0, 0.0, 1.0);
    }
    if x1 <= x0 {
        x1 = x0 + 1.0;
    }
    if y1 <= y0 {
        y1 = y0 + 1.0;
    }
    let sx = |x: f64| MARGIN + (x - x0) / (x1 - x0) * (WIDTH - 2.0 * MARGIN);
    let sy = |y: f64| HEIGHT - MARGIN - (y - y0) / (y1 - y0) * (HEIGHT - 2.0 * MARGIN);
    let mut s = String::new();
    writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    )
    .unwrap();
    writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#).unwrap();
    writeln!(
        s,
        r#"<text x="{}" y="25" font-family="sans-serif" font-size="14" text-anchor="middle">{}</text>"#,
        WIDTH / 2.0,
        escape(title)
    )
    .unwrap();
    writeln!(
        s,
        r#"<path d="M{m} {t} V{b} H{r}" stroke="black" fill="none"/>"#,
        m = MARGIN,
        t = MARGIN,
        b = HEIGHT - MARGIN,
        r = WIDTH - MARGIN
    )
    .unwrap();
    let label = |s: &mut String, x: f64, y: f64, anchor: &str, text: String| {
        writeln!(
            s,
            r#"<text x="{x:.1}" y="{y:.1}" font-family="sans-serif" font-size="11" text-anchor="{anchor}">{text}</text>"#
        )
        .unwrap();
    };
    label(&mut s, MARGIN - 5.0, HEIGHT - MARGIN, "end", format!("{y0:.3e}"));
    label(&mut s, MARGIN - 5.0, MARGIN + 4.0, "end", format!("{y1:.3e}"));
    label(&mut s, MARGIN, HEIGHT - MARGIN + 16.0, "middle", format!("{x0}"));
    label(&mut s, WIDTH - MARGIN, HEIGHT - MARGIN + 16.0, "middle", format!("{x1}"));
    label(&mut s, WIDTH / 2.0, HEIGHT - 12.0, "middle", escape(xlabel));
    let points: Vec<String> = finite.iter().map(|(x, y)| format!("{:.2},{:.2}", sx(*x), sy(*y))).collect();
    writeln!(
        s,
        r#"<polyline points="{}" stroke="steelblue" stroke-width="1.5" fill="none"/>"#,
        points.join(" ")
    )
    .unwrap();
    s.push_str("</svg>\n");
    s
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
