use std::fmt::Write;

use fastslow::measures::Heatmap;
use fastslow::sde::SamplePath;

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 440.0;
const LEFT: f64 = 60.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 30.0;
const BOTTOM: f64 = 45.0;

/// White to dark blue.
fn shade(level: f64) -> String {
    let l = level.clamp(0.0, 1.0);
    let lerp = |a: f64, b: f64| (a + (b - a) * l).round() as u8;
    format!("#{:02x}{:02x}{:02x}", lerp(255.0, 8.0), lerp(255.0, 48.0), lerp(255.0, 107.0))
}

/// Stack of per-time density slices with the averaged path drawn on top.
pub fn heatmap_svg(map: &Heatmap<f64>, averaged: &SamplePath<f64>, epsilon: f64, n_paths: usize) -> String {
    let plot_w = WIDTH - LEFT - RIGHT;
    let plot_h = HEIGHT - TOP - BOTTOM;
    let (t0, t1) = (map.times[0], *map.times.last().unwrap_or(&map.times[0]));
    let (x0, x1) = (map.xs[0], *map.xs.last().unwrap_or(&map.xs[0]));
    let t_span = if t1 > t0 { t1 - t0 } else { 1.0 };
    let x_span = if x1 > x0 { x1 - x0 } else { 1.0 };
    let px = |t: f64| LEFT + (t - t0) / t_span * plot_w;
    let py = |x: f64| TOP + (x1 - x) / x_span * plot_h;
    let cell_w = plot_w / map.times.len() as f64;
    let cell_h = plot_h / map.xs.len() as f64;
    let peak = map.max_density();

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(s, r#"<g shape-rendering="crispEdges">"#);
    for (i, row) in map.density.iter().enumerate() {
        let left = LEFT + i as f64 * cell_w;
        for (j, &d) in row.iter().enumerate() {
            if peak <= 0.0 || d / peak < 2e-3 {
                continue;
            }
            let top = TOP + (map.xs.len() - 1 - j) as f64 * cell_h;
            let _ = writeln!(
                s,
                r#"<rect x="{left:.2}" y="{top:.2}" width="{:.2}" height="{:.2}" fill="{}"/>"#,
                cell_w + 0.05,
                cell_h + 0.05,
                shade(d / peak)
            );
        }
    }
    let _ = writeln!(s, "</g>");

    let points: Vec<String> = averaged
        .times
        .iter()
        .zip(&averaged.x)
        .filter(|(&t, _)| t >= t0 && t <= t1)
        .map(|(&t, &x)| format!("{:.2},{:.2}", px(t), py(x.clamp(x0, x1))))
        .collect();
    let _ = writeln!(s, r##"<polyline fill="none" stroke="#d62728" stroke-width="2" points="{}"/>"##, points.join(" "));

    let _ = writeln!(
        s,
        r#"<rect x="{LEFT}" y="{TOP}" width="{plot_w}" height="{plot_h}" fill="none" stroke="black" stroke-width="1"/>"#
    );
    let font = r#"font-family="sans-serif" font-size="12""#;
    let base = TOP + plot_h;
    let _ = writeln!(s, r#"<text x="{LEFT}" y="{:.1}" {font}>{t0:.3}</text>"#, base + 16.0);
    let _ = writeln!(s, r#"<text x="{:.1}" y="{:.1}" {font} text-anchor="end">{t1:.3}</text>"#, LEFT + plot_w, base + 16.0);
    let _ = writeln!(s, r#"<text x="{:.1}" y="{:.1}" {font} text-anchor="middle">t</text>"#, LEFT + plot_w / 2.0, base + 34.0);
    let _ = writeln!(s, r#"<text x="{:.1}" y="{:.1}" {font} text-anchor="end">{x1:.3}</text>"#, LEFT - 6.0, TOP + 10.0);
    let _ = writeln!(s, r#"<text x="{:.1}" y="{base:.1}" {font} text-anchor="end">{x0:.3}</text>"#, LEFT - 6.0);
    let _ = writeln!(s, r#"<text x="16" y="{:.1}" {font}>x</text>"#, TOP + plot_h / 2.0);
    let _ = writeln!(
        s,
        r#"<text x="{:.1}" y="18" {font} text-anchor="middle">density of X over {n_paths} paths, epsilon = {epsilon}</text>"#,
        LEFT + plot_w / 2.0
    );
    s.push_str("</svg>\n");
    s
}
