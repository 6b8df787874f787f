//! Line charts of trimap curves and training logs.

use std::path::Path;

use hourglass_core::{Error, Result};
use plotters::prelude::*;
use plotters::style::{register_font, FontStyle};

const FONT: &[u8] = include_bytes!("../assets/DejaVuSans.ttf");
const SIZE: (u32, u32) = (800, 600);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChartKind {
    /// `width,error_pct` files.
    Trimap,
    /// `iter,total,...` training logs.
    TrainLog,
}

impl ChartKind {
    fn axes(self) -> (&'static str, &'static str) {
        match self {
            ChartKind::Trimap => ("trimap width (px)", "error in band (%)"),
            ChartKind::TrainLog => ("iteration", "total loss"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

fn malformed(path: &Path, what: impl std::fmt::Display) -> Error {
    Error::Format(format!("{}: {what}", path.display()))
}

/// Reads one CSV as a series labelled by its file stem. Rows with a blank y
/// value are skipped.
pub fn read_series(path: &Path) -> Result<(ChartKind, Series)> {
    let mut r = csv::Reader::from_path(path).map_err(|e| malformed(path, e))?;
    let header = r.headers().map_err(|e| malformed(path, e))?.clone();
    let kind = match (header.get(0), header.get(1)) {
        (Some("width"), Some("error_pct")) => ChartKind::Trimap,
        (Some("iter"), Some("total")) => ChartKind::TrainLog,
        _ => {
            return Err(malformed(
                path,
                "expected a trimap curve or a training log header",
            ))
        }
    };
    let mut points = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(|e| malformed(path, e))?;
        let num = |i: usize| -> Result<Option<f64>> {
            match rec.get(i).map(str::trim) {
                None | Some("") => Ok(None),
                Some(v) => v
                    .parse()
                    .map(Some)
                    .map_err(|_| malformed(path, format!("`{v}` is not a number"))),
            }
        };
        let x = num(0)?.ok_or_else(|| malformed(path, "missing x value"))?;
        if let Some(y) = num(1)? {
            points.push((x, y));
        }
    }
    if points.is_empty() {
        return Err(malformed(path, "no data rows"));
    }
    let label = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    Ok((kind, Series { label, points }))
}

fn bounds(series: &[Series]) -> ((f64, f64), (f64, f64)) {
    let mut x = (f64::INFINITY, f64::NEG_INFINITY);
    let mut y = (f64::INFINITY, f64::NEG_INFINITY);
    for &(px, py) in series.iter().flat_map(|s| &s.points) {
        x = (x.0.min(px), x.1.max(px));
        y = (y.0.min(py), y.1.max(py));
    }
    let pad = |(lo, hi): (f64, f64)| {
        let m = ((hi - lo) * 0.05).max(1e-9);
        (lo - m, hi + m)
    };
    (pad(x), pad(y))
}

/// Renders the series into a PNG at `out`.
pub fn render(kind: ChartKind, series: &[Series], out: &Path) -> Result<()> {
    // Registering twice is harmless; the font is process-global.
    register_font("sans-serif", FontStyle::Normal, FONT)
        .map_err(|_| Error::Format("bundled font is invalid".into()))?;
    let draw_err = |e: DrawingAreaErrorKind<_>| Error::Format(format!("drawing failed: {e}"));
    let (xr, yr) = bounds(series);
    let (xl, yl) = kind.axes();
    let root = BitMapBackend::new(out, SIZE).into_drawing_area();
    root.fill(&WHITE).map_err(draw_err)?;
    let mut chart = ChartBuilder::on(&root)
        .margin(20)
        .x_label_area_size(45)
        .y_label_area_size(60)
        .build_cartesian_2d(xr.0..xr.1, yr.0..yr.1)
        .map_err(draw_err)?;
    chart
        .configure_mesh()
        .x_desc(xl)
        .y_desc(yl)
        .label_style(("sans-serif", 14))
        .draw()
        .map_err(draw_err)?;
    for (i, s) in series.iter().enumerate() {
        let color = Palette99::pick(i).to_rgba();
        chart
            .draw_series(LineSeries::new(
                s.points.iter().copied(),
                color.stroke_width(2),
            ))
            .map_err(draw_err)?
            .label(s.label.clone())
            .legend(move |(x, y)| PathElement::new([(x, y), (x + 20, y)], color.stroke_width(2)));
    }
    chart
        .configure_series_labels()
        .background_style(WHITE.mix(0.8))
        .border_style(BLACK)
        .label_font(("sans-serif", 14))
        .draw()
        .map_err(draw_err)?;
    root.present().map_err(draw_err)?;
    Ok(())
}
