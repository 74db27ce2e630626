//! Deterministic SVG line plots rendered straight from CSV files: same
//! input bytes, same output bytes, no plotting dependencies.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::exp::csvio::read_csv;

/// What to plot from a CSV file.
#[derive(Clone, Debug)]
pub struct PlotSpec {
    /// Column supplying x values.
    pub x: String,
    /// Column supplying y values.
    pub y: String,
    /// Draw y on a log axis (non-positive values are clamped to 1e-16 and
    /// the clamp count is noted in an SVG comment).
    pub log_y: bool,
    /// Optional column whose distinct values become separate curves with a
    /// legend, in order of first appearance.
    pub group_by: Option<String>,
}

const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 500.0;
const MARGIN_LEFT: f64 = 70.0;
const MARGIN_RIGHT: f64 = 160.0;
const MARGIN_TOP: f64 = 20.0;
const MARGIN_BOTTOM: f64 = 50.0;

const PALETTE: [&str; 10] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
    "#bcbd22", "#17becf",
];

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Pads a degenerate (zero-width) range so scales stay finite.
fn pad_range(min: f64, max: f64) -> (f64, f64) {
    if min < max {
        (min, max)
    } else {
        let pad = if min == 0.0 { 1.0 } else { min.abs() * 0.5 };
        (min - pad, max + pad)
    }
}

/// Tick positions for a linear axis: multiples of a step rounded to
/// 1, 2 or 5 times a power of ten, aiming for about five ticks.
fn linear_ticks(min: f64, max: f64) -> (Vec<f64>, usize) {
    let raw = (max - min) / 5.0;
    let mag = 10f64.powf(raw.log10().floor());
    let r = raw / mag;
    let step = mag
        * if r <= 1.0 {
            1.0
        } else if r <= 2.0 {
            2.0
        } else if r <= 5.0 {
            5.0
        } else {
            10.0
        };
    let precision = (-step.log10().floor()).max(0.0) as usize;
    let k_min = (min / step).ceil() as i64;
    let k_max = (max / step).floor() as i64;
    let ticks = (k_min..=k_max).map(|k| k as f64 * step).collect();
    (ticks, precision)
}

/// Tick positions (in log10 space) for a log axis: whole decades, thinned
/// to at most ten; falls back to the range endpoints when the data spans
/// less than one decade.
fn log_ticks(min: f64, max: f64) -> Vec<f64> {
    let k_min = min.ceil() as i64;
    let k_max = max.floor() as i64;
    if k_min > k_max {
        return vec![min, max];
    }
    let count = (k_max - k_min + 1) as usize;
    let stride = count.div_ceil(10).max(1) as i64;
    (k_min..=k_max)
        .step_by(stride as usize)
        .map(|k| k as f64)
        .collect()
}

fn log_tick_label(v: f64) -> String {
    if v == v.round() {
        format!("1e{}", v as i64)
    } else {
        format!("{:.2e}", 10f64.powf(v))
    }
}

struct Group {
    name: String,
    points: Vec<(f64, f64)>,
}

/// Renders `csv_path` to an SVG line plot at `out_path`.
///
/// Rows whose x or y field does not parse as a finite number are skipped;
/// an input with no usable points at all is an error, as is a referenced
/// column that does not exist.
pub fn emit_svg<P: AsRef<Path>, Q: AsRef<Path>>(
    csv_path: P,
    plot: &PlotSpec,
    out_path: Q,
) -> Result<()> {
    let csv_path = csv_path.as_ref();
    let table = read_csv(csv_path)?;
    if table.rows.is_empty() {
        return Err(Error::EmptyCsv(csv_path.display().to_string()));
    }
    let xi = table.column_index(&plot.x, csv_path)?;
    let yi = table.column_index(&plot.y, csv_path)?;
    let gi = match &plot.group_by {
        Some(name) => Some(table.column_index(name, csv_path)?),
        None => None,
    };

    let mut groups: Vec<Group> = Vec::new();
    let mut clamped = 0usize;
    for row in &table.rows {
        let (Ok(x), Ok(y)) = (row[xi].parse::<f64>(), row[yi].parse::<f64>()) else {
            continue;
        };
        if !x.is_finite() || !y.is_finite() {
            continue;
        }
        let y = if plot.log_y {
            if y <= 0.0 {
                clamped += 1;
                1e-16
            } else {
                y
            }
        } else {
            y
        };
        let y = if plot.log_y { y.log10() } else { y };
        let name = match gi {
            Some(g) => row[g].clone(),
            None => String::new(),
        };
        match groups.iter_mut().find(|grp| grp.name == name) {
            Some(grp) => grp.points.push((x, y)),
            None => groups.push(Group {
                name,
                points: vec![(x, y)],
            }),
        }
    }
    let total: usize = groups.iter().map(|g| g.points.len()).sum();
    if total == 0 {
        return Err(Error::InvalidConfig(format!(
            "no numeric data points in columns {:?}/{:?} of {}",
            plot.x,
            plot.y,
            csv_path.display()
        )));
    }

    let all = groups.iter().flat_map(|g| g.points.iter());
    let (mut x_min, mut x_max) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut y_min, mut y_max) = (f64::INFINITY, f64::NEG_INFINITY);
    for &(x, y) in all {
        x_min = x_min.min(x);
        x_max = x_max.max(x);
        y_min = y_min.min(y);
        y_max = y_max.max(y);
    }
    let (x_min, x_max) = pad_range(x_min, x_max);
    let (y_min, y_max) = pad_range(y_min, y_max);

    let plot_w = WIDTH - MARGIN_LEFT - MARGIN_RIGHT;
    let plot_h = HEIGHT - MARGIN_TOP - MARGIN_BOTTOM;
    let px = |v: f64| MARGIN_LEFT + (v - x_min) / (x_max - x_min) * plot_w;
    let py = |v: f64| HEIGHT - MARGIN_BOTTOM - (v - y_min) / (y_max - y_min) * plot_h;

    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" \
         viewBox=\"0 0 {WIDTH} {HEIGHT}\" font-family=\"monospace\" font-size=\"12\">\n"
    ));
    if clamped > 0 {
        svg.push_str(&format!(
            "<!-- clamped {clamped} nonpositive values to 1e-16 for log scale -->\n"
        ));
    }
    svg.push_str(&format!(
        "<rect width=\"{WIDTH}\" height=\"{HEIGHT}\" fill=\"white\"/>\n"
    ));

    // Grid and ticks.
    let (x_ticks, x_prec) = linear_ticks(x_min, x_max);
    let y_axis: Vec<(f64, String)> = if plot.log_y {
        log_ticks(y_min, y_max)
            .into_iter()
            .map(|v| (v, log_tick_label(v)))
            .collect()
    } else {
        let (ticks, prec) = linear_ticks(y_min, y_max);
        ticks
            .into_iter()
            .map(|v| (v, format!("{v:.prec$}")))
            .collect()
    };
    for &t in &x_ticks {
        let x = px(t);
        svg.push_str(&format!(
            "<line x1=\"{x:.2}\" y1=\"{:.2}\" x2=\"{x:.2}\" y2=\"{:.2}\" stroke=\"#e0e0e0\"/>\n",
            MARGIN_TOP,
            HEIGHT - MARGIN_BOTTOM
        ));
        svg.push_str(&format!(
            "<line x1=\"{x:.2}\" y1=\"{0:.2}\" x2=\"{x:.2}\" y2=\"{1:.2}\" stroke=\"#333\"/>\n\
             <text x=\"{x:.2}\" y=\"{2:.2}\" text-anchor=\"middle\">{3}</text>\n",
            HEIGHT - MARGIN_BOTTOM,
            HEIGHT - MARGIN_BOTTOM + 5.0,
            HEIGHT - MARGIN_BOTTOM + 18.0,
            format!("{t:.x_prec$}")
        ));
    }
    for (t, label) in &y_axis {
        let y = py(*t);
        svg.push_str(&format!(
            "<line x1=\"{:.2}\" y1=\"{y:.2}\" x2=\"{:.2}\" y2=\"{y:.2}\" stroke=\"#e0e0e0\"/>\n",
            MARGIN_LEFT,
            WIDTH - MARGIN_RIGHT
        ));
        svg.push_str(&format!(
            "<line x1=\"{:.2}\" y1=\"{y:.2}\" x2=\"{:.2}\" y2=\"{y:.2}\" stroke=\"#333\"/>\n\
             <text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"end\">{}</text>\n",
            MARGIN_LEFT - 5.0,
            MARGIN_LEFT,
            MARGIN_LEFT - 8.0,
            y + 4.0,
            xml_escape(label)
        ));
    }

    // Frame and axis titles.
    svg.push_str(&format!(
        "<rect x=\"{MARGIN_LEFT}\" y=\"{MARGIN_TOP}\" width=\"{plot_w}\" height=\"{plot_h}\" \
         fill=\"none\" stroke=\"#333\"/>\n"
    ));
    svg.push_str(&format!(
        "<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"middle\">{}</text>\n",
        MARGIN_LEFT + plot_w / 2.0,
        HEIGHT - 10.0,
        xml_escape(&plot.x)
    ));
    let y_title = if plot.log_y {
        format!("{} (log scale)", plot.y)
    } else {
        plot.y.clone()
    };
    svg.push_str(&format!(
        "<text transform=\"translate(18,{:.2}) rotate(-90)\" text-anchor=\"middle\">{}</text>\n",
        MARGIN_TOP + plot_h / 2.0,
        xml_escape(&y_title)
    ));

    // Curves: a polyline per group, or a marker for a lone point.
    for (i, group) in groups.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        if group.points.len() == 1 {
            let (x, y) = group.points[0];
            svg.push_str(&format!(
                "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"2.5\" fill=\"{color}\"/>\n",
                px(x),
                py(y)
            ));
        } else {
            let points: Vec<String> = group
                .points
                .iter()
                .map(|&(x, y)| format!("{:.2},{:.2}", px(x), py(y)))
                .collect();
            svg.push_str(&format!(
                "<polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\" points=\"{}\"/>\n",
                points.join(" ")
            ));
        }
    }

    // Legend, only when curves are actually grouped.
    if gi.is_some() {
        for (i, group) in groups.iter().enumerate() {
            let color = PALETTE[i % PALETTE.len()];
            let y = MARGIN_TOP + 10.0 + i as f64 * 18.0;
            svg.push_str(&format!(
                "<line x1=\"{0:.2}\" y1=\"{y:.2}\" x2=\"{1:.2}\" y2=\"{y:.2}\" \
                 stroke=\"{color}\" stroke-width=\"2\"/>\n\
                 <text x=\"{2:.2}\" y=\"{3:.2}\">{4}</text>\n",
                WIDTH - MARGIN_RIGHT + 10.0,
                WIDTH - MARGIN_RIGHT + 28.0,
                WIDTH - MARGIN_RIGHT + 34.0,
                y + 4.0,
                xml_escape(&group.name)
            ));
        }
    }
    svg.push_str("</svg>\n");

    let out_path = out_path.as_ref();
    if let Some(parent) = out_path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent)
                .map_err(|e| Error::io(parent.display().to_string(), e))?;
        }
    }
    fs::write(out_path, svg).map_err(|e| Error::io(out_path.display().to_string(), e))
}
