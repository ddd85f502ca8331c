//! Hand-emitted SVG scatter of detection rate vs quality degradation, one
//! panel per victim. Re-watermarking attacks are drawn as stars, baseline
//! attacks as crosses, identity as a circle.

use crate::formats::fmt_g6;
use wmarena_core::arena::InterferenceMatrix;

const PANEL_W: f64 = 260.0;
const PANEL_H: f64 = 200.0;
const MARGIN: f64 = 42.0;
const COLS: usize = 3;

pub fn tpr_vs_nqd_scatter(matrix: &InterferenceMatrix) -> String {
    let victims = &matrix.victims;
    let rows = victims.len().div_ceil(COLS);
    let width = COLS as f64 * (PANEL_W + MARGIN) + MARGIN;
    let height = rows as f64 * (PANEL_H + MARGIN) + MARGIN + 30.0;

    let max_nqd = matrix
        .cells
        .iter()
        .map(|c| c.mean_nqd)
        .fold(0.1f64, f64::max)
        .max(1e-6);

    let mut svg = format!(
        r#"<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {} {}" font-family="monospace" font-size="10">"#,
        fmt_g6(width),
        fmt_g6(height)
    );
    svg.push('\n');
    svg.push_str(&format!(
        r#"<text x="{}" y="16" font-size="13">detection rate (TPR@1%FPR) vs quality degradation (NQD); stars = re-watermarking, crosses = baselines, circle = identity</text>"#,
        MARGIN
    ));
    svg.push('\n');

    for (vi, victim) in victims.iter().enumerate() {
        let px = MARGIN + (vi % COLS) as f64 * (PANEL_W + MARGIN);
        let py = 30.0 + MARGIN + (vi / COLS) as f64 * (PANEL_H + MARGIN);
        svg.push_str(&format!(
            r##"<rect x="{}" y="{}" width="{PANEL_W}" height="{PANEL_H}" fill="none" stroke="#444"/>"##,
            fmt_g6(px),
            fmt_g6(py)
        ));
        svg.push_str(&format!(
            r#"<text x="{}" y="{}">{victim}</text>"#,
            fmt_g6(px),
            fmt_g6(py - 6.0)
        ));
        // axis labels and ticks
        svg.push_str(&format!(
            r#"<text x="{}" y="{}">NQD</text>"#,
            fmt_g6(px + PANEL_W / 2.0 - 12.0),
            fmt_g6(py + PANEL_H + 26.0)
        ));
        svg.push_str(&format!(
            r#"<text x="{}" y="{}" transform="rotate(-90 {} {})">TPR</text>"#,
            fmt_g6(px - 30.0),
            fmt_g6(py + PANEL_H / 2.0),
            fmt_g6(px - 30.0),
            fmt_g6(py + PANEL_H / 2.0)
        ));
        for t in [0.0, 0.5, 1.0] {
            let y = py + PANEL_H * (1.0 - t);
            svg.push_str(&format!(
                r##"<line x1="{}" y1="{}" x2="{}" y2="{}" stroke="#bbb" stroke-dasharray="2,3"/>"##,
                fmt_g6(px),
                fmt_g6(y),
                fmt_g6(px + PANEL_W),
                fmt_g6(y)
            ));
            svg.push_str(&format!(
                r#"<text x="{}" y="{}">{}</text>"#,
                fmt_g6(px - 24.0),
                fmt_g6(y + 3.0),
                fmt_g6(t)
            ));
        }
        for frac in [0.0, 0.5, 1.0] {
            let x = px + PANEL_W * frac;
            svg.push_str(&format!(
                r#"<text x="{}" y="{}">{}</text>"#,
                fmt_g6(x - 8.0),
                fmt_g6(py + PANEL_H + 12.0),
                fmt_g6(max_nqd * frac)
            ));
        }

        for cell in matrix.cells.iter().filter(|c| &c.victim_id == victim) {
            let x = px + PANEL_W * (cell.mean_nqd / max_nqd).clamp(0.0, 1.0);
            let y = py + PANEL_H * (1.0 - cell.tpr_at_fpr.clamp(0.0, 1.0));
            let spec = matrix.attacks.iter().find(|a| a.attack_id == cell.attack_id);
            let marker = match spec {
                Some(s) if s.is_rewatermark() => star(x, y, 6.0, "#1f5fbf"),
                Some(s) if s.attack_id == "identity" => {
                    format!(r##"<circle cx="{}" cy="{}" r="3.5" fill="none" stroke="#333"/>"##, fmt_g6(x), fmt_g6(y))
                }
                _ => cross(x, y, 4.5, "#777"),
            };
            svg.push_str(&marker);
            svg.push_str(&format!(
                r#"<title>{}: tpr={} nqd={}</title>"#,
                cell.attack_id,
                fmt_g6(cell.tpr_at_fpr),
                fmt_g6(cell.mean_nqd)
            ));
        }
    }
    svg.push_str("</svg>\n");
    svg
}

fn star(cx: f64, cy: f64, r: f64, color: &str) -> String {
    let mut points = Vec::new();
    for k in 0..10 {
        let radius = if k % 2 == 0 { r } else { r * 0.45 };
        let angle = std::f64::consts::PI * (k as f64 / 5.0) - std::f64::consts::FRAC_PI_2;
        points.push(format!(
            "{},{}",
            fmt_g6(cx + radius * angle.cos()),
            fmt_g6(cy + radius * angle.sin())
        ));
    }
    format!(r#"<polygon points="{}" fill="{color}"/>"#, points.join(" "))
}

fn cross(cx: f64, cy: f64, r: f64, color: &str) -> String {
    format!(
        r#"<path d="M {} {} L {} {} M {} {} L {} {}" stroke="{color}" stroke-width="1.5"/>"#,
        fmt_g6(cx - r),
        fmt_g6(cy - r),
        fmt_g6(cx + r),
        fmt_g6(cy + r),
        fmt_g6(cx - r),
        fmt_g6(cy + r),
        fmt_g6(cx + r),
        fmt_g6(cy - r)
    )
}
