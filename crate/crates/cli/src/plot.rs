//! Minimal SVG output: log-log norm tables and cell verdict maps.

use std::fmt::Write as _;

use colombeau_wave::experiments::ScenarioResult;

const W: f64 = 640.0;
const H: f64 = 420.0;
const MARGIN: f64 = 60.0;
const MAX_SERIES: usize = 10;
const COLORS: [&str; 10] =
    ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"];

pub type Series = (String, Vec<(f64, f64)>);

/// Plot files for one scenario: a log-log chart of the per-ε tables and, when
/// cell verdicts are present, a verdict map.
pub fn plots_for(stem: &str, r: &ScenarioResult) -> Vec<(String, String)> {
    let mut out = Vec::new();
    let series = collect_series(r);
    if !series.is_empty() {
        out.push((format!("{stem}_norms.svg"), loglog(&format!("{} norms", r.label), &series)));
    }
    let cells = collect_cells(r);
    if !cells.is_empty() {
        out.push((format!("{stem}_cells.svg"), cell_map(&format!("{} cell verdicts", r.label), &cells)));
    }
    out
}

fn collect_series(r: &ScenarioResult) -> Vec<Series> {
    let mut series: Vec<Series> = Vec::new();
    for row in &r.rows {
        let Some(eps) = row.epsilon else { continue };
        if row.region_or_cell.starts_with('[') || !(row.norm_value > 0.0) || !row.norm_value.is_finite() {
            continue;
        }
        let key = format!("{} {} {}", row.norm_kind, row.region_or_cell, row.alpha);
        if let Some(s) = series.iter_mut().find(|s| s.0 == key) {
            s.1.push((eps, row.norm_value));
        } else if series.len() < MAX_SERIES {
            series.push((key, vec![(eps, row.norm_value)]));
        }
    }
    series.retain(|s| s.1.len() >= 2);
    series
}

/// `(x_lo, x_hi, t_lo, t_hi, verdict)` from cell summary rows.
fn collect_cells(r: &ScenarioResult) -> Vec<(f64, f64, f64, f64, String)> {
    let mut cells: Vec<(f64, f64, f64, f64, String)> = Vec::new();
    for row in &r.rows {
        if row.epsilon.is_some() || row.verdict.is_empty() {
            continue;
        }
        let Some(c) = parse_cell(&row.region_or_cell) else { continue };
        if !cells.iter().any(|e| (e.0, e.1, e.2, e.3) == c) {
            cells.push((c.0, c.1, c.2, c.3, row.verdict.clone()));
        }
    }
    cells
}

fn parse_cell(s: &str) -> Option<(f64, f64, f64, f64)> {
    let (xs, ts) = s.split_once("]x[")?;
    let (x0, x1) = xs.strip_prefix('[')?.split_once(',')?;
    let (t0, t1) = ts.strip_suffix(']')?.split_once(',')?;
    Some((x0.parse().ok()?, x1.parse().ok()?, t0.parse().ok()?, t1.parse().ok()?))
}

fn header(title: &str) -> String {
    format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{H}\" font-family=\"sans-serif\" font-size=\"11\">\n\
         <rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n\
         <text x=\"{}\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">{}</text>\n",
        W / 2.0,
        escape(title)
    )
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Log-log lines of norm against ε.
pub fn loglog(title: &str, series: &[Series]) -> String {
    let pts = series.iter().flat_map(|s| s.1.iter());
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for &(e, v) in pts {
        x0 = x0.min(e.log10());
        x1 = x1.max(e.log10());
        y0 = y0.min(v.log10());
        y1 = y1.max(v.log10());
    }
    if x1 - x0 < 1e-12 {
        x1 = x0 + 1.0;
    }
    if y1 - y0 < 1e-12 {
        y1 = y0 + 1.0;
    }
    let px = |e: f64| MARGIN + (e.log10() - x0) / (x1 - x0) * (W - 2.0 * MARGIN - 140.0);
    let py = |v: f64| H - MARGIN - (v.log10() - y0) / (y1 - y0) * (H - 2.0 * MARGIN);
    let mut s = header(title);
    let _ = writeln!(
        s,
        "<rect x=\"{MARGIN}\" y=\"{MARGIN}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"black\"/>",
        W - 2.0 * MARGIN - 140.0,
        H - 2.0 * MARGIN
    );
    let _ = writeln!(s, "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">log10 eps</text>", (W - 140.0) / 2.0, H - 20.0);
    let _ = writeln!(
        s,
        "<text x=\"15\" y=\"{}\" transform=\"rotate(-90 15 {})\" text-anchor=\"middle\">log10 norm</text>",
        H / 2.0,
        H / 2.0
    );
    for (lbl, v, x, y) in [
        (format!("{x0:.2}"), 0, MARGIN, H - MARGIN + 14.0),
        (format!("{x1:.2}"), 0, W - MARGIN - 140.0, H - MARGIN + 14.0),
        (format!("{y0:.2}"), 1, MARGIN - 4.0, H - MARGIN),
        (format!("{y1:.2}"), 1, MARGIN - 4.0, MARGIN + 4.0),
    ] {
        let anchor = if v == 0 { "middle" } else { "end" };
        let _ = writeln!(s, "<text x=\"{x}\" y=\"{y}\" text-anchor=\"{anchor}\">{lbl}</text>");
    }
    for (k, (name, data)) in series.iter().enumerate() {
        let c = COLORS[k % COLORS.len()];
        let path: Vec<String> = data.iter().map(|&(e, v)| format!("{:.2},{:.2}", px(e), py(v))).collect();
        let _ = writeln!(s, "<polyline fill=\"none\" stroke=\"{c}\" stroke-width=\"1.5\" points=\"{}\"/>", path.join(" "));
        for &(e, v) in data {
            let _ = writeln!(s, "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"2.5\" fill=\"{c}\"/>", px(e), py(v));
        }
        let ly = MARGIN + 14.0 * k as f64;
        let _ = writeln!(
            s,
            "<text x=\"{}\" y=\"{ly}\" fill=\"{c}\">{}</text>",
            W - MARGIN - 130.0,
            escape(name)
        );
    }
    s.push_str("</svg>\n");
    s
}

fn verdict_color(v: &str) -> &'static str {
    if v.starts_with("ginf") {
        "#9ecae1"
    } else if v.starts_with("negligible") {
        "#e5f5e0"
    } else if v.starts_with("moderate") {
        "#fdae6b"
    } else {
        "#de2d26"
    }
}

/// Cells colored by verdict over the (x, t) plane.
pub fn cell_map(title: &str, cells: &[(f64, f64, f64, f64, String)]) -> String {
    let xl = cells.iter().map(|c| c.0).fold(f64::INFINITY, f64::min);
    let xh = cells.iter().map(|c| c.1).fold(f64::NEG_INFINITY, f64::max);
    let tl = cells.iter().map(|c| c.2).fold(f64::INFINITY, f64::min);
    let th = cells.iter().map(|c| c.3).fold(f64::NEG_INFINITY, f64::max);
    let sx = (W - 2.0 * MARGIN) / (xh - xl).max(1e-12);
    let st = (H - 2.0 * MARGIN) / (th - tl).max(1e-12);
    let mut s = header(title);
    for (x0, x1, t0, t1, v) in cells {
        let _ = writeln!(
            s,
            "<rect x=\"{:.2}\" y=\"{:.2}\" width=\"{:.2}\" height=\"{:.2}\" fill=\"{}\" stroke=\"#555\" stroke-width=\"0.5\"><title>{}</title></rect>",
            MARGIN + (x0 - xl) * sx,
            H - MARGIN - (t1 - tl) * st,
            (x1 - x0) * sx,
            (t1 - t0) * st,
            verdict_color(v),
            escape(v)
        );
    }
    let _ = writeln!(s, "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">x</text>", W / 2.0, H - 20.0);
    let _ = writeln!(s, "<text x=\"20\" y=\"{}\">t</text>", H / 2.0);
    s.push_str("</svg>\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cell_labels_round_trip() {
        assert_eq!(parse_cell("[-0.2500,0.0000]x[0.1250,0.2500]"), Some((-0.25, 0.0, 0.125, 0.25)));
        assert_eq!(parse_cell("trapezoid"), None);
    }

    #[test]
    fn loglog_is_well_formed() {
        let svg = loglog("t<1>", &[("a".into(), vec![(0.1, 1.0), (0.01, 10.0)])]);
        assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));
        assert!(svg.contains("t&lt;1&gt;"));
    }
}
