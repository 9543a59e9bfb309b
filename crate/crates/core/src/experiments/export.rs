use std::path::{Path, PathBuf};

use plotters::prelude::*;
use thiserror::Error;

use super::{FitResult, MinBuffer, MinBufferPoint, RetrofitRow};
use crate::timing::{RateRow, SweepRow};

pub const BUNDLED_FIG7_SYNTHETIC: &str = include_str!("../../data/fig7_synthetic.csv");

#[derive(Debug, Error)]
pub enum ExportError {
    #[error("nothing to export")]
    Empty,
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Csv { path: String, message: String },
    #[error("{path}: plot failed: {message}")]
    Plot { path: String, message: String },
}

/// One line of the flat results table. Stage indices are 1-based unified
/// positions; absent values are written as empty fields.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ResultRow {
    pub preset_id: u8,
    pub sw_first: Option<usize>,
    pub sw_last: Option<usize>,
    pub buffer_items: Option<usize>,
    pub gated_fraction: Option<f64>,
    pub underrun: Option<bool>,
    /// Minimum buffer, or `None` when not measured or beyond the cap.
    pub min_buffer: Option<MinBuffer>,
    pub boundary_rate: Option<f64>,
}

pub const CSV_HEADER: [&str; 8] = [
    "preset_id",
    "sw_first",
    "sw_last",
    "buffer_items",
    "gated_fraction",
    "underrun",
    "min_buffer",
    "boundary_rate",
];

impl ResultRow {
    fn record(&self) -> [String; 8] {
        let opt = |v: Option<String>| v.unwrap_or_default();
        [
            self.preset_id.to_string(),
            opt(self.sw_first.map(|i| (i + 1).to_string())),
            opt(self.sw_last.map(|i| (i + 1).to_string())),
            opt(self.buffer_items.map(|b| b.to_string())),
            opt(self.gated_fraction.map(|g| format!("{g:.9}"))),
            opt(self.underrun.map(|u| u.to_string())),
            opt(self.min_buffer.map(|m| match m {
                MinBuffer::Found(b) => b.to_string(),
                MinBuffer::CannotKeepUp { cap } => format!(">{cap}"),
            })),
            opt(self.boundary_rate.map(|r| format!("{r:.3}"))),
        ]
    }

    pub fn from_sweep(r: &SweepRow) -> Self {
        Self {
            preset_id: r.preset_id,
            sw_first: r.segment.map(|s| s.0),
            sw_last: r.segment.map(|s| s.1),
            buffer_items: r.segment.map(|_| r.buffer_words),
            gated_fraction: Some(r.gated_fraction),
            underrun: Some(r.underrun),
            min_buffer: None,
            boundary_rate: r.boundary_rate,
        }
    }

    pub fn from_min_buffer(p: &MinBufferPoint) -> Self {
        Self {
            preset_id: p.preset_id,
            sw_first: Some(p.sw_first),
            sw_last: Some(p.sw_last),
            min_buffer: Some(p.min_buffer),
            boundary_rate: Some(p.boundary_rate),
            ..Self::default()
        }
    }

    pub fn from_retrofit(r: &RetrofitRow) -> Self {
        Self {
            preset_id: r.preset_id,
            sw_first: Some(r.sw_first),
            sw_last: Some(r.sw_last),
            buffer_items: Some(r.buffer_words),
            gated_fraction: Some(r.retrofit_gated),
            underrun: Some(r.underrun),
            min_buffer: None,
            boundary_rate: Some(r.boundary_rate),
        }
    }
}

/// Writes rows with a fixed header and float formatting.
pub fn write_csv(rows: &[ResultRow], path: &Path) -> Result<(), ExportError> {
    if rows.is_empty() {
        return Err(ExportError::Empty);
    }
    let err = |e: csv::Error| ExportError::Csv {
        path: path.display().to_string(),
        message: e.to_string(),
    };
    let mut w = csv::Writer::from_path(path).map_err(err)?;
    w.write_record(CSV_HEADER).map_err(err)?;
    for r in rows {
        w.write_record(r.record()).map_err(err)?;
    }
    w.flush().map_err(|e| ExportError::Io {
        path: path.display().to_string(),
        source: e,
    })
}

/// Reads `(rate, size)` pairs from a two-column CSV with a header row.
pub fn read_points_csv(text: &str) -> Result<Vec<(f64, f64)>, String> {
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    let mut out = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| e.to_string())?;
        if rec.len() < 2 {
            return Err(format!("row {}: expected two columns", i + 1));
        }
        let num = |s: &str| s.trim().parse::<f64>().map_err(|e| format!("row {}: {s:?}: {e}", i + 1));
        out.push((num(&rec[0])?, num(&rec[1])?));
    }
    Ok(out)
}

/// Everything one experiment run may export.
#[derive(Clone, Debug, Default)]
pub struct Tables {
    pub sweep: Vec<SweepRow>,
    pub min_buffers: Vec<MinBufferPoint>,
    pub fit: Option<FitResult>,
    pub retrofit: Vec<RetrofitRow>,
    /// Boundary rates per preset.
    pub rates: Vec<(u8, Vec<RateRow>)>,
}

impl Tables {
    pub fn is_empty(&self) -> bool {
        self.sweep.is_empty() && self.min_buffers.is_empty() && self.retrofit.is_empty() && self.rates.is_empty()
    }

    pub fn rows(&self) -> Vec<ResultRow> {
        self.sweep
            .iter()
            .map(ResultRow::from_sweep)
            .chain(self.min_buffers.iter().map(ResultRow::from_min_buffer))
            .chain(self.retrofit.iter().map(ResultRow::from_retrofit))
            .collect()
    }
}

/// Writes `results.csv` plus one SVG per populated figure into `dir`.
/// Returns the paths written.
pub fn export_results(tables: &Tables, dir: &Path) -> Result<Vec<PathBuf>, ExportError> {
    if tables.is_empty() {
        return Err(ExportError::Empty);
    }
    std::fs::create_dir_all(dir).map_err(|e| ExportError::Io {
        path: dir.display().to_string(),
        source: e,
    })?;
    let mut written = Vec::new();
    let rows = tables.rows();
    if !rows.is_empty() {
        let p = dir.join("results.csv");
        write_csv(&rows, &p)?;
        written.push(p);
    }
    if !tables.sweep.is_empty() {
        let p = dir.join("fig5_gated_vs_buffer.svg");
        plot_sweep(&tables.sweep, &p)?;
        written.push(p);
    }
    if !tables.rates.is_empty() {
        let p = dir.join("fig6_rates.svg");
        plot_rates(&tables.rates, &p)?;
        written.push(p);
    }
    if tables.min_buffers.iter().any(|m| m.min_buffer.found().is_some()) {
        let p = dir.join("fig7_min_buffer.svg");
        plot_min_buffers(&tables.min_buffers, tables.fit.as_ref(), &p)?;
        written.push(p);
    }
    if !tables.retrofit.is_empty() {
        let p = dir.join("fig8_retrofit.svg");
        plot_retrofit(&tables.retrofit, &p)?;
        written.push(p);
    }
    Ok(written)
}

const SIZE: (u32, u32) = (800, 560);

fn plot_err(path: &Path) -> impl Fn(String) -> ExportError + '_ {
    move |message| ExportError::Plot {
        path: path.display().to_string(),
        message,
    }
}

macro_rules! tryp {
    ($e:expr, $path:expr) => {
        $e.map_err(|e| plot_err($path)(e.to_string()))?
    };
}

fn series_color(i: usize) -> RGBColor {
    const C: [RGBColor; 8] = [
        RGBColor(31, 119, 180),
        RGBColor(255, 127, 14),
        RGBColor(44, 160, 44),
        RGBColor(214, 39, 40),
        RGBColor(148, 103, 189),
        RGBColor(140, 86, 75),
        RGBColor(227, 119, 194),
        RGBColor(127, 127, 127),
    ];
    C[i % C.len()]
}

fn seg_name(seg: (usize, usize)) -> String {
    use crate::phy::BlockKind;
    if seg.0 == seg.1 {
        BlockKind::ALL[seg.0].name().to_string()
    } else {
        format!("{}-{}", BlockKind::ALL[seg.0], BlockKind::ALL[seg.1])
    }
}

fn plot_sweep(rows: &[SweepRow], path: &Path) -> Result<(), ExportError> {
    let mut segs: Vec<(usize, usize)> = rows.iter().filter_map(|r| r.segment).collect();
    segs.dedup();
    let bmin = rows.iter().filter(|r| r.segment.is_some()).map(|r| r.buffer_words).min().unwrap_or(1) as f64;
    let bmax = rows.iter().map(|r| r.buffer_words).max().unwrap_or(2).max(2) as f64;
    let root = SVGBackend::new(path, SIZE).into_drawing_area();
    tryp!(root.fill(&WHITE), path);
    let mut chart = tryp!(
        ChartBuilder::on(&root)
            .caption("Clock-gated fraction by software block and buffer size", ("sans-serif", 20))
            .margin(12)
            .x_label_area_size(40)
            .y_label_area_size(56)
            .build_cartesian_2d((bmin..bmax * 1.0001).log_scale(), 0f64..1f64),
        path
    );
    tryp!(
        chart
            .configure_mesh()
            .x_desc("buffer (words)")
            .y_desc("gated fraction")
            .draw(),
        path
    );
    if let Some(base) = rows.iter().find(|r| r.segment.is_none()) {
        let g = base.gated_fraction;
        tryp!(
            chart.draw_series(LineSeries::new(vec![(bmin, g), (bmax, g)], BLACK.stroke_width(1))),
            path
        )
        .label("hardware")
        .legend(|(x, y)| PathElement::new(vec![(x, y), (x + 16, y)], BLACK));
    }
    for (i, seg) in segs.iter().enumerate() {
        let c = series_color(i);
        let pts: Vec<(f64, f64)> = rows
            .iter()
            .filter(|r| r.segment == Some(*seg))
            .map(|r| (r.buffer_words as f64, r.gated_fraction))
            .collect();
        tryp!(chart.draw_series(LineSeries::new(pts.clone(), c.stroke_width(2))), path)
            .label(seg_name(*seg))
            .legend(move |(x, y)| PathElement::new(vec![(x, y), (x + 16, y)], c));
        tryp!(chart.draw_series(pts.into_iter().map(|p| Circle::new(p, 3, c.filled()))), path);
    }
    tryp!(
        chart
            .configure_series_labels()
            .background_style(WHITE.mix(0.8))
            .border_style(BLACK)
            .draw(),
        path
    );
    tryp!(root.present(), path);
    Ok(())
}

fn plot_rates(rates: &[(u8, Vec<RateRow>)], path: &Path) -> Result<(), ExportError> {
    let all = rates.iter().flat_map(|(_, r)| r.iter().map(|x| x.bits_per_sec));
    let lo = all.clone().fold(f64::INFINITY, f64::min).max(1.0);
    let hi = all.fold(0.0, f64::max).max(lo * 10.0);
    let n = rates.first().map_or(10, |r| r.1.len());
    let root = SVGBackend::new(path, SIZE).into_drawing_area();
    tryp!(root.fill(&WHITE), path);
    let mut chart = tryp!(
        ChartBuilder::on(&root)
            .caption("Data rate across the pipeline", ("sans-serif", 20))
            .margin(12)
            .x_label_area_size(40)
            .y_label_area_size(70)
            .build_cartesian_2d(0f64..(n - 1) as f64, (lo / 2.0..hi * 2.0).log_scale()),
        path
    );
    tryp!(
        chart
            .configure_mesh()
            .x_desc("boundary (0 = packet bytes)")
            .y_desc("bits/s")
            .draw(),
        path
    );
    for (i, (id, rows)) in rates.iter().enumerate() {
        let c = series_color(i);
        let pts: Vec<(f64, f64)> = rows.iter().map(|r| (r.boundary as f64, r.bits_per_sec)).collect();
        tryp!(chart.draw_series(LineSeries::new(pts, c.stroke_width(2))), path)
            .label(format!("preset {id}"))
            .legend(move |(x, y)| PathElement::new(vec![(x, y), (x + 16, y)], c));
    }
    tryp!(
        chart
            .configure_series_labels()
            .background_style(WHITE.mix(0.8))
            .border_style(BLACK)
            .draw(),
        path
    );
    tryp!(root.present(), path);
    Ok(())
}

fn plot_min_buffers(points: &[MinBufferPoint], fit: Option<&FitResult>, path: &Path) -> Result<(), ExportError> {
    let pts: Vec<(f64, f64)> = points
        .iter()
        .filter_map(|p| p.min_buffer.found().map(|b| (p.boundary_rate, b as f64)))
        .collect();
    let (xlo, xhi) = pts
        .iter()
        .fold((f64::INFINITY, 0f64), |(a, b), p| (a.min(p.0), b.max(p.0)));
    let (ylo, yhi) = pts
        .iter()
        .fold((f64::INFINITY, 0f64), |(a, b), p| (a.min(p.1), b.max(p.1)));
    let root = SVGBackend::new(path, SIZE).into_drawing_area();
    tryp!(root.fill(&WHITE), path);
    let mut chart = tryp!(
        ChartBuilder::on(&root)
            .caption("Minimum buffer size against intervention data rate", ("sans-serif", 20))
            .margin(12)
            .x_label_area_size(40)
            .y_label_area_size(60)
            .build_cartesian_2d(
                (xlo / 2.0..xhi * 2.0).log_scale(),
                ((ylo / 2.0).max(0.5)..yhi * 2.0).log_scale()
            ),
        path
    );
    tryp!(
        chart
            .configure_mesh()
            .x_desc("boundary rate (words/s)")
            .y_desc("minimum buffer (words)")
            .draw(),
        path
    );
    let c = series_color(0);
    tryp!(chart.draw_series(pts.iter().map(|p| Circle::new(*p, 4, c.filled()))), path)
        .label("simulated")
        .legend(move |(x, y)| Circle::new((x + 8, y), 4, c.filled()));
    if let Some(f) = fit {
        let line: Vec<(f64, f64)> = (0..=40)
            .map(|i| {
                let x = xlo / 2.0 * (4.0 * xhi / xlo).powf(f64::from(i) / 40.0);
                (x, f.predict(x))
            })
            .collect();
        let red = series_color(3);
        tryp!(chart.draw_series(LineSeries::new(line, red.stroke_width(2))), path)
            .label(format!("size = {:.3e} * rate^{:.3} (r2 = {:.3})", f.k, f.m, f.r2))
            .legend(move |(x, y)| PathElement::new(vec![(x, y), (x + 16, y)], red));
    }
    tryp!(
        chart
            .configure_series_labels()
            .position(SeriesLabelPosition::UpperLeft)
            .background_style(WHITE.mix(0.8))
            .border_style(BLACK)
            .draw(),
        path
    );
    tryp!(root.present(), path);
    Ok(())
}

fn plot_retrofit(rows: &[RetrofitRow], path: &Path) -> Result<(), ExportError> {
    let mut ids: Vec<u8> = rows.iter().map(|r| r.preset_id).collect();
    ids.sort();
    ids.dedup();
    let bmin = rows.iter().map(|r| r.buffer_words).min().unwrap_or(1) as f64;
    let bmax = rows.iter().map(|r| r.buffer_words).max().unwrap_or(2).max(2) as f64;
    let dmax = rows.iter().map(|r| r.delta).fold(0.0, f64::max).max(1e-3);
    let dmin = rows.iter().map(|r| r.delta).fold(0.0, f64::min);
    let root = SVGBackend::new(path, SIZE).into_drawing_area();
    tryp!(root.fill(&WHITE), path);
    let mut chart = tryp!(
        ChartBuilder::on(&root)
            .caption("Gated-fraction loss of retrofitted standards", ("sans-serif", 20))
            .margin(12)
            .x_label_area_size(40)
            .y_label_area_size(60)
            .build_cartesian_2d((bmin..bmax * 1.0001).log_scale(), dmin..dmax * 1.1),
        path
    );
    tryp!(
        chart
            .configure_mesh()
            .x_desc("buffer (words)")
            .y_desc("baseline - retrofit gated fraction")
            .draw(),
        path
    );
    for (i, id) in ids.iter().enumerate() {
        let c = series_color(i);
        let pts: Vec<(f64, f64)> = rows
            .iter()
            .filter(|r| r.preset_id == *id)
            .map(|r| (r.buffer_words as f64, r.delta))
            .collect();
        tryp!(chart.draw_series(LineSeries::new(pts, c.stroke_width(2))), path)
            .label(format!("preset {id}"))
            .legend(move |(x, y)| PathElement::new(vec![(x, y), (x + 16, y)], c));
    }
    tryp!(
        chart
            .configure_series_labels()
            .background_style(WHITE.mix(0.8))
            .border_style(BLACK)
            .draw(),
        path
    );
    tryp!(root.present(), path);
    Ok(())
}
