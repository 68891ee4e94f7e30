//! SVG line plots (PSNR vs. degradation level) from level CSVs. SVG keeps
//! review diffs readable.

use std::fmt::Write as _;

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

/// Parse a level CSV (as emitted by the experiment report) into a series,
/// skipping the overall row.
pub fn series_from_level_csv(label: &str, csv: &str) -> Result<Series> {
    let mut points = Vec::new();
    for (i, line) in csv.lines().enumerate() {
        if i == 0 || line.starts_with("overall") || line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() < 3 {
            return Err(Error::Data(format!("bad level csv line: {line}")));
        }
        let x: f64 =
            cols[0].parse().map_err(|_| Error::Data(format!("bad level value {}", cols[0])))?;
        let y: f64 =
            cols[2].parse().map_err(|_| Error::Data(format!("bad psnr value {}", cols[2])))?;
        points.push((x, y));
    }
    if points.is_empty() {
        return Err(Error::Data("level csv contains no data rows".to_string()));
    }
    Ok(Series { label: label.to_string(), points })
}

const COLORS: [&str; 6] = ["#c0392b", "#2980b9", "#27ae60", "#8e44ad", "#d35400", "#16a085"];

/// Render PSNR-vs-level curves.
pub fn psnr_curve_svg(title: &str, series: &[Series]) -> Result<String> {
    if series.is_empty() || series.iter().any(|s| s.points.is_empty()) {
        return Err(Error::Data("nothing to plot".to_string()));
    }
    let (width, height) = (640.0, 420.0);
    let (ml, mr, mt, mb) = (60.0, 20.0, 40.0, 50.0);
    let (pw, ph) = (width - ml - mr, height - mt - mb);

    let all: Vec<(f64, f64)> = series.iter().flat_map(|s| s.points.iter().copied()).collect();
    let (mut x_min, mut x_max) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut y_min, mut y_max) = (f64::INFINITY, f64::NEG_INFINITY);
    for (x, y) in &all {
        x_min = x_min.min(*x);
        x_max = x_max.max(*x);
        y_min = y_min.min(*y);
        y_max = y_max.max(*y);
    }
    if (x_max - x_min).abs() < 1e-12 {
        x_max = x_min + 1.0;
    }
    let y_pad = ((y_max - y_min) * 0.1).max(0.5);
    y_min -= y_pad;
    y_max += y_pad;

    let sx = |x: f64| ml + (x - x_min) / (x_max - x_min) * pw;
    let sy = |y: f64| mt + (1.0 - (y - y_min) / (y_max - y_min)) * ph;

    let mut svg = String::new();
    writeln!(
        svg,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width}\" height=\"{height}\" viewBox=\"0 0 {width} {height}\">"
    )
    .unwrap();
    writeln!(svg, "  <rect width=\"{width}\" height=\"{height}\" fill=\"white\"/>").unwrap();
    writeln!(
        svg,
        "  <text x=\"{}\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"16\">{}</text>",
        width / 2.0,
        title
    )
    .unwrap();
    // axes
    writeln!(
        svg,
        "  <line x1=\"{ml}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"black\"/>",
        mt + ph,
        ml + pw,
        mt + ph
    )
    .unwrap();
    writeln!(svg, "  <line x1=\"{ml}\" y1=\"{mt}\" x2=\"{ml}\" y2=\"{}\" stroke=\"black\"/>", mt + ph)
        .unwrap();
    // ticks
    for i in 0..=4 {
        let xv = x_min + (x_max - x_min) * f64::from(i) / 4.0;
        let yv = y_min + (y_max - y_min) * f64::from(i) / 4.0;
        writeln!(
            svg,
            "  <text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">{:.1}</text>",
            sx(xv),
            mt + ph + 18.0,
            xv
        )
        .unwrap();
        writeln!(
            svg,
            "  <text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">{:.1}</text>",
            ml - 6.0,
            sy(yv) + 4.0,
            yv
        )
        .unwrap();
    }
    writeln!(
        svg,
        "  <text x=\"{}\" y=\"{}\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">degradation level</text>",
        ml + pw / 2.0,
        height - 12.0
    )
    .unwrap();
    writeln!(
        svg,
        "  <text x=\"16\" y=\"{}\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\" transform=\"rotate(-90 16 {})\">PSNR (dB)</text>",
        mt + ph / 2.0,
        mt + ph / 2.0
    )
    .unwrap();

    for (i, s) in series.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let pts: Vec<String> =
            s.points.iter().map(|(x, y)| format!("{:.2},{:.2}", sx(*x), sy(*y))).collect();
        writeln!(
            svg,
            "  <polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"2\" points=\"{}\"/>",
            pts.join(" ")
        )
        .unwrap();
        for (x, y) in &s.points {
            writeln!(
                svg,
                "  <circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"3\" fill=\"{color}\"/>",
                sx(*x),
                sy(*y)
            )
            .unwrap();
        }
        writeln!(
            svg,
            "  <text x=\"{:.1}\" y=\"{:.1}\" font-family=\"sans-serif\" font-size=\"12\" fill=\"{color}\">{}</text>",
            ml + pw - 140.0,
            mt + 16.0 + 16.0 * i as f64,
            s.label
        )
        .unwrap();
    }
    writeln!(svg, "</svg>").unwrap();
    Ok(svg)
}
