//! Minimal standalone SVG line chart of one CSV column against `t`.

use std::fmt::Write;

use super::HarnessError;

pub struct Series {
    pub x_name: String,
    pub y_name: String,
    pub points: Vec<(f64, f64)>,
}

/// Reads `column` against `t` (or the first column when there is no `t`).
/// Lines starting with '#' are skipped.
pub fn read_series(csv: &str, column: &str) -> Result<Series, HarnessError> {
    let mut lines = csv.lines().filter(|l| !l.starts_with('#') && !l.trim().is_empty());
    let header: Vec<&str> = lines.next().ok_or_else(|| HarnessError::Input("empty CSV".into()))?.split(',').collect();
    let yi = header
        .iter()
        .position(|h| *h == column)
        .ok_or_else(|| HarnessError::Input(format!("no column '{column}' (have {})", header.join(", "))))?;
    let xi = header.iter().position(|h| *h == "t").unwrap_or(0);
    let mut points = Vec::new();
    for (n, line) in lines.enumerate() {
        let cells: Vec<&str> = line.split(',').collect();
        let get = |i: usize| -> Result<f64, HarnessError> {
            cells
                .get(i)
                .and_then(|c| c.trim().parse().ok())
                .ok_or_else(|| HarnessError::Input(format!("data row {}: bad or missing value in column {}", n + 1, header[i])))
        };
        points.push((get(xi)?, get(yi)?));
    }
    Ok(Series { x_name: header[xi].to_string(), y_name: column.to_string(), points })
}

fn range(v: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = v.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), x| (a.min(x), b.max(x)));
    if !lo.is_finite() {
        (0.0, 1.0)
    } else if hi - lo <= f64::EPSILON * hi.abs().max(1e-300) {
        (lo - 0.5 * lo.abs().max(1.0), hi + 0.5 * hi.abs().max(1.0))
    } else {
        (lo, hi)
    }
}

pub fn render_svg(s: &Series) -> String {
    const W: f64 = 640.0;
    const H: f64 = 400.0;
    const M: f64 = 60.0;
    let pts: Vec<(f64, f64)> = s.points.iter().copied().filter(|(x, y)| x.is_finite() && y.is_finite()).collect();
    let (x0, x1) = range(pts.iter().map(|p| p.0));
    let (y0, y1) = range(pts.iter().map(|p| p.1));
    let px = |x: f64| M + (x - x0) / (x1 - x0) * (W - 2.0 * M);
    let py = |y: f64| H - M - (y - y0) / (y1 - y0) * (H - 2.0 * M);
    let mut o = String::new();
    let _ = writeln!(o, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">"#);
    let _ = writeln!(o, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(
        o,
        r#"<rect x="{M}" y="{M}" width="{}" height="{}" fill="none" stroke="black"/>"#,
        W - 2.0 * M,
        H - 2.0 * M
    );
    let path: Vec<String> = pts.iter().map(|&(x, y)| format!("{:.2},{:.2}", px(x), py(y))).collect();
    let _ = writeln!(o, r#"<polyline fill="none" stroke="steelblue" stroke-width="1.5" points="{}"/>"#, path.join(" "));
    let text = |o: &mut String, x: f64, y: f64, anchor: &str, t: String| {
        let _ = writeln!(o, r#"<text x="{x:.1}" y="{y:.1}" font-family="sans-serif" font-size="11" text-anchor="{anchor}">{t}</text>"#);
    };
    text(&mut o, M, H - M + 16.0, "start", format!("{x0:.4e}"));
    text(&mut o, W - M, H - M + 16.0, "end", format!("{x1:.4e}"));
    text(&mut o, M - 4.0, H - M, "end", format!("{y0:.4e}"));
    text(&mut o, M - 4.0, M + 4.0, "end", format!("{y1:.4e}"));
    text(&mut o, W / 2.0, H - 16.0, "middle", escape(&s.x_name));
    text(&mut o, W / 2.0, M - 16.0, "middle", escape(&s.y_name));
    o.push_str("</svg>\n");
    o
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
