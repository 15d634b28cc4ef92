//! Minimal SVG rendering of sweep results: line charts for 1-D sweeps and a
//! diverging heatmap for 2-D grids (positive red = nurse-driven preferred,
//! negative blue = doctor-driven preferred, zero neutral).
//!
//! Output is plain hand-assembled SVG with stable formatting, so files are
//! byte-identical across runs and easy to assert against in tests.

use crate::sweep::SweepResult;
use std::io::{self, Write};

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 440.0;
const MARGIN_LEFT: f64 = 70.0;
const MARGIN_RIGHT: f64 = 150.0; // room for the legend
const MARGIN_TOP: f64 = 20.0;
const MARGIN_BOTTOM: f64 = 50.0;

const SERIES_COLORS: [&str; 5] = ["#4c72b0", "#c44e52", "#55a868", "#8172b2", "#ccb974"];

const NEUTRAL: (u8, u8, u8) = (0xf7, 0xf7, 0xf7);
const RED: (u8, u8, u8) = (0xb2, 0x18, 0x2b);
const BLUE: (u8, u8, u8) = (0x21, 0x66, 0xac);

/// Renders a sweep result as a vector graphic: a line chart when the result
/// is one-dimensional, a heatmap when it has two axes.
pub fn emit_plot<W: Write>(result: &SweepResult, writer: W) -> io::Result<()> {
    if result.axis2.is_some() {
        emit_heatmap(result, writer)
    } else {
        emit_line_plot(&[("relative utility", result)], writer)
    }
}

/// Line chart with one polyline per named series. All series must share the
/// same 1-D axis.
pub fn emit_line_plot<W: Write>(
    series: &[(&str, &SweepResult)],
    mut writer: W,
) -> io::Result<()> {
    assert!(!series.is_empty(), "at least one series required");
    let axis = &series[0].1.axis1;
    let x_min = *axis.values.first().expect("nonempty grid");
    let x_max = *axis.values.last().expect("nonempty grid");
    let x_span = if x_max > x_min { x_max - x_min } else { 1.0 };

    let mut y_min = f64::INFINITY;
    let mut y_max = f64::NEG_INFINITY;
    for (_, r) in series {
        for cell in &r.cells {
            y_min = y_min.min(cell.mean_pct - cell.stderr_pct);
            y_max = y_max.max(cell.mean_pct + cell.stderr_pct);
        }
    }
    if !y_min.is_finite() || y_min == y_max {
        y_min -= 1.0;
        y_max += 1.0;
    }
    let pad = 0.05 * (y_max - y_min);
    let (y_min, y_max) = (y_min - pad, y_max + pad);

    let plot_w = WIDTH - MARGIN_LEFT - MARGIN_RIGHT;
    let plot_h = HEIGHT - MARGIN_TOP - MARGIN_BOTTOM;
    let x_px = |v: f64| MARGIN_LEFT + (v - x_min) / x_span * plot_w;
    let y_px = |v: f64| MARGIN_TOP + (y_max - v) / (y_max - y_min) * plot_h;

    writeln!(
        writer,
        r#"<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    )?;
    writeln!(writer, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#)?;

    // Axes.
    writeln!(
        writer,
        r#"<line x1="{:.1}" y1="{:.1}" x2="{:.1}" y2="{:.1}" stroke="black"/>"#,
        MARGIN_LEFT,
        MARGIN_TOP + plot_h,
        MARGIN_LEFT + plot_w,
        MARGIN_TOP + plot_h
    )?;
    writeln!(
        writer,
        r#"<line x1="{:.1}" y1="{:.1}" x2="{:.1}" y2="{:.1}" stroke="black"/>"#,
        MARGIN_LEFT,
        MARGIN_TOP,
        MARGIN_LEFT,
        MARGIN_TOP + plot_h
    )?;
    for k in 0..=4 {
        let xv = x_min + x_span * k as f64 / 4.0;
        let yv = y_min + (y_max - y_min) * k as f64 / 4.0;
        writeln!(
            writer,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{:.2}</text>"#,
            x_px(xv),
            MARGIN_TOP + plot_h + 18.0,
            xv
        )?;
        writeln!(
            writer,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{:.1}</text>"#,
            MARGIN_LEFT - 6.0,
            y_px(yv) + 4.0,
            yv
        )?;
    }
    writeln!(
        writer,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
        MARGIN_LEFT + plot_w / 2.0,
        HEIGHT - 10.0,
        axis.name
    )?;
    writeln!(
        writer,
        r#"<text x="16" y="{:.1}" text-anchor="middle" transform="rotate(-90 16 {:.1})">relative utility (%)</text>"#,
        MARGIN_TOP + plot_h / 2.0,
        MARGIN_TOP + plot_h / 2.0
    )?;

    for (s, (name, result)) in series.iter().enumerate() {
        let color = SERIES_COLORS[s % SERIES_COLORS.len()];
        let points: Vec<String> = result
            .axis1
            .values
            .iter()
            .zip(&result.cells)
            .map(|(&x, cell)| format!("{:.1},{:.1}", x_px(x), y_px(cell.mean_pct)))
            .collect();
        writeln!(
            writer,
            r#"<polyline class="series" data-name="{name}" fill="none" stroke="{color}" stroke-width="2" points="{}"/>"#,
            points.join(" ")
        )?;
        // Error bars, one per cell.
        for (&x, cell) in result.axis1.values.iter().zip(&result.cells) {
            if cell.stderr_pct > 0.0 {
                writeln!(
                    writer,
                    r#"<line x1="{:.1}" y1="{:.1}" x2="{:.1}" y2="{:.1}" stroke="{color}" stroke-width="1"/>"#,
                    x_px(x),
                    y_px(cell.mean_pct - cell.stderr_pct),
                    x_px(x),
                    y_px(cell.mean_pct + cell.stderr_pct)
                )?;
            }
        }
        let legend_y = MARGIN_TOP + 16.0 * (s as f64 + 1.0);
        writeln!(
            writer,
            r#"<line x1="{:.1}" y1="{:.1}" x2="{:.1}" y2="{:.1}" stroke="{color}" stroke-width="2"/>"#,
            WIDTH - MARGIN_RIGHT + 10.0,
            legend_y,
            WIDTH - MARGIN_RIGHT + 34.0,
            legend_y
        )?;
        writeln!(
            writer,
            r#"<text x="{:.1}" y="{:.1}">{name}</text>"#,
            WIDTH - MARGIN_RIGHT + 40.0,
            legend_y + 4.0
        )?;
    }
    writeln!(writer, "</svg>")
}

/// Heatmap for a 2-D grid; axis1 runs down the y axis, axis2 across the x
/// axis. Cell color is a diverging scale centered at zero.
pub fn emit_heatmap<W: Write>(result: &SweepResult, mut writer: W) -> io::Result<()> {
    let axis2 = result.axis2.as_ref().expect("heatmap needs two axes");
    let rows = result.axis1.values.len();
    let cols = axis2.values.len();
    let plot_w = WIDTH - MARGIN_LEFT - 40.0;
    let plot_h = HEIGHT - MARGIN_TOP - MARGIN_BOTTOM;
    let cell_w = plot_w / cols as f64;
    let cell_h = plot_h / rows as f64;

    let max_abs = result
        .cells
        .iter()
        .map(|c| c.mean_pct.abs())
        .fold(0.0_f64, f64::max);

    writeln!(
        writer,
        r#"<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="11">"#
    )?;
    writeln!(writer, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#)?;

    for (i, &a1) in result.axis1.values.iter().enumerate() {
        // Highest axis1 value on the top row.
        let row = rows - 1 - i;
        let y = MARGIN_TOP + row as f64 * cell_h;
        for (j, &a2) in axis2.values.iter().enumerate() {
            let x = MARGIN_LEFT + j as f64 * cell_w;
            let value = result.cell(i, j).mean_pct;
            let color = diverging_color(value, max_abs);
            writeln!(
                writer,
                r#"<rect class="cell" data-axis1="{a1:.6}" data-axis2="{a2:.6}" data-value="{value:.6}" x="{x:.1}" y="{y:.1}" width="{cell_w:.1}" height="{cell_h:.1}" fill="{color}" stroke="white"/>"#
            )?;
            writeln!(
                writer,
                r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{value:.1}</text>"#,
                x + cell_w / 2.0,
                y + cell_h / 2.0 + 4.0
            )?;
        }
        writeln!(
            writer,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{a1}</text>"#,
            MARGIN_LEFT - 6.0,
            y + cell_h / 2.0 + 4.0
        )?;
    }
    for (j, &a2) in axis2.values.iter().enumerate() {
        writeln!(
            writer,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{a2}</text>"#,
            MARGIN_LEFT + j as f64 * cell_w + cell_w / 2.0,
            MARGIN_TOP + plot_h + 16.0
        )?;
    }
    writeln!(
        writer,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
        MARGIN_LEFT + plot_w / 2.0,
        HEIGHT - 10.0,
        axis2.name
    )?;
    writeln!(
        writer,
        r#"<text x="16" y="{:.1}" text-anchor="middle" transform="rotate(-90 16 {:.1})">{}</text>"#,
        MARGIN_TOP + plot_h / 2.0,
        MARGIN_TOP + plot_h / 2.0,
        result.axis1.name
    )?;
    writeln!(writer, "</svg>")
}

/// Diverging color: zero maps to the neutral midpoint, positive toward red,
/// negative toward blue, saturating at the grid's largest magnitude.
fn diverging_color(value: f64, max_abs: f64) -> String {
    if max_abs == 0.0 || value == 0.0 {
        return rgb(NEUTRAL);
    }
    let t = (value / max_abs).clamp(-1.0, 1.0);
    let target = if t > 0.0 { RED } else { BLUE };
    let t = t.abs();
    let lerp = |a: u8, b: u8| (a as f64 + (b as f64 - a as f64) * t).round() as u8;
    rgb((lerp(NEUTRAL.0, target.0), lerp(NEUTRAL.1, target.1), lerp(NEUTRAL.2, target.2)))
}

fn rgb((r, g, b): (u8, u8, u8)) -> String {
    format!("#{r:02x}{g:02x}{b:02x}")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sweep::{AxisGrid, SweepCell};

    fn result_1d(means: &[f64]) -> SweepResult {
        SweepResult {
            axis1: AxisGrid::new("nurse_capacity", (0..means.len()).map(|i| i as f64).collect()),
            axis2: None,
            replicates: 1,
            cells: means.iter().map(|&m| SweepCell { mean_pct: m, stderr_pct: 0.0 }).collect(),
        }
    }

    fn result_2d(rows: usize, cols: usize, value: impl Fn(usize, usize) -> f64) -> SweepResult {
        let mut cells = Vec::new();
        for i in 0..rows {
            for j in 0..cols {
                cells.push(SweepCell { mean_pct: value(i, j), stderr_pct: 0.0 });
            }
        }
        SweepResult {
            axis1: AxisGrid::new("nurse_capacity", (0..rows).map(|i| i as f64).collect()),
            axis2: Some(AxisGrid::new("alert_read_prob", (0..cols).map(|j| j as f64).collect())),
            replicates: 1,
            cells,
        }
    }

    fn render(result: &SweepResult) -> String {
        let mut buf = Vec::new();
        emit_plot(result, &mut buf).unwrap();
        String::from_utf8(buf).unwrap()
    }

    #[test]
    fn heatmap_has_one_rect_per_cell() {
        let svg = render(&result_2d(3, 4, |i, j| (i * 4 + j) as f64 - 5.0));
        assert_eq!(svg.matches(r#"class="cell""#).count(), 12);
        assert!(svg.contains("alert_read_prob"));
        assert!(svg.contains("nurse_capacity"));
    }

    #[test]
    fn all_zero_grid_is_neutral() {
        let svg = render(&result_2d(2, 2, |_, _| 0.0));
        for line in svg.lines().filter(|l| l.contains(r#"class="cell""#)) {
            assert!(line.contains(r##"fill="#f7f7f7""##), "non-neutral cell: {line}");
        }
    }

    #[test]
    fn positive_red_negative_blue() {
        let svg = render(&result_2d(1, 2, |_, j| if j == 0 { 10.0 } else { -10.0 }));
        let cells: Vec<&str> = svg.lines().filter(|l| l.contains(r#"class="cell""#)).collect();
        assert!(cells[0].contains(r##"fill="#b2182b""##));
        assert!(cells[1].contains(r##"fill="#2166ac""##));
    }

    #[test]
    fn monotone_series_yields_monotone_ordinates() {
        let svg = render(&result_1d(&[0.0, 10.0, 20.0, 35.0, 50.0]));
        let line = svg
            .lines()
            .find(|l| l.contains(r#"class="series""#))
            .expect("polyline present");
        let points = line.split("points=\"").nth(1).unwrap().split('"').next().unwrap();
        let ys: Vec<f64> = points
            .split_whitespace()
            .map(|p| p.split(',').nth(1).unwrap().parse().unwrap())
            .collect();
        // Higher utility = smaller pixel y.
        for pair in ys.windows(2) {
            assert!(pair[1] < pair[0], "ordinates not monotone: {ys:?}");
        }
    }

    #[test]
    fn multi_series_legend() {
        let a = result_1d(&[0.0, 5.0]);
        let b = result_1d(&[1.0, 2.0]);
        let mut buf = Vec::new();
        emit_line_plot(&[("model", &a), ("treat all", &b)], &mut buf).unwrap();
        let svg = String::from_utf8(buf).unwrap();
        assert_eq!(svg.matches(r#"class="series""#).count(), 2);
        assert!(svg.contains(">model</text>"));
        assert!(svg.contains(">treat all</text>"));
    }
}
