//! Optional SVG line plots of the CSV outputs.

use std::path::Path;

use crate::error::{CliError, CliResult};

pub struct Series<'a> {
    pub name: &'a str,
    pub points: Vec<(f64, f64)>,
}

pub struct Axes<'a> {
    pub title: &'a str,
    pub x: &'a str,
    pub y: &'a str,
    /// Plot `log10(y)`; non-positive values are dropped.
    pub log_y: bool,
}

#[cfg(feature = "svg")]
pub fn line_plot(path: &Path, axes: &Axes, series: &[Series]) -> CliResult<()> {
    use plotters::prelude::*;

    let err = |e: &dyn std::fmt::Display| CliError::Io {
        path: path.to_path_buf(),
        source: std::io::Error::other(e.to_string()),
    };
    let data: Vec<Vec<(f64, f64)>> = series
        .iter()
        .map(|s| {
            s.points
                .iter()
                .filter(|p| p.0.is_finite() && p.1.is_finite() && (!axes.log_y || p.1 > 0.0))
                .map(|&(x, y)| (x, if axes.log_y { y.log10() } else { y }))
                .collect()
        })
        .collect();
    let all = data.iter().flatten();
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for &(x, y) in all {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    if !(x0 < x1) {
        x1 = x0 + 1.0;
    }
    if !(y0 < y1) {
        y1 = y0 + 1.0;
    }
    let pad = 0.05 * (y1 - y0);
    let y_label = if axes.log_y { format!("log10 {}", axes.y) } else { axes.y.to_string() };

    let root = SVGBackend::new(path, (900, 560)).into_drawing_area();
    root.fill(&WHITE).map_err(|e| err(&e))?;
    let mut chart = ChartBuilder::on(&root)
        .caption(axes.title, ("sans-serif", 20))
        .margin(12)
        .x_label_area_size(40)
        .y_label_area_size(70)
        .build_cartesian_2d(x0..x1, (y0 - pad)..(y1 + pad))
        .map_err(|e| err(&e))?;
    chart.configure_mesh().x_desc(axes.x).y_desc(y_label).draw().map_err(|e| err(&e))?;
    let colors = [BLUE, RED, BLACK, GREEN, MAGENTA, CYAN];
    for (i, (s, pts)) in series.iter().zip(data).enumerate() {
        let color = colors[i % colors.len()];
        chart
            .draw_series(LineSeries::new(pts, color.stroke_width(2)))
            .map_err(|e| err(&e))?
            .label(s.name)
            .legend(move |(x, y)| PathElement::new(vec![(x, y), (x + 20, y)], color));
    }
    chart
        .configure_series_labels()
        .background_style(WHITE.mix(0.8))
        .border_style(BLACK)
        .draw()
        .map_err(|e| err(&e))?;
    root.present().map_err(|e| err(&e))
}

#[cfg(not(feature = "svg"))]
pub fn line_plot(_path: &Path, _axes: &Axes, _series: &[Series]) -> CliResult<()> {
    Err(CliError::Config("this build has no SVG support; rebuild with the `svg` feature".into()))
}
