use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use super::experiment::{ExperimentRecord, PointResult};
use super::plan::Sweep;
use crate::error::{DmaError, Result};
use crate::quantizer::Resolution;

pub const CSV_HEADER: [&str; 7] = ["sweep", "sweep_value", "bits", "mse_exact", "mse_approx", "trials", "seed"];
pub const PLOT_HEADER: [&str; 8] = [
    "sweep",
    "bits",
    "x",
    "series",
    "mean",
    "stderr",
    "mean_per_user",
    "stderr_per_user",
];

fn io_err(path: &Path) -> impl Fn(std::io::Error) -> DmaError + '_ {
    move |source| DmaError::Io { path: path.to_path_buf(), source }
}

fn csv_err(path: &Path) -> impl Fn(csv::Error) -> DmaError + '_ {
    move |e| match e.into_kind() {
        csv::ErrorKind::Io(source) => DmaError::Io { path: path.to_path_buf(), source },
        other => DmaError::Parse { path: path.to_path_buf(), message: format!("{other:?}") },
    }
}

fn writer<W: Write>(inner: W) -> csv::Writer<W> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(inner)
}

/// Rust's `Display` for floats is the shortest string that parses back to
/// the same value.
fn float(x: f64) -> String {
    format!("{x}")
}

pub fn write_csv<W: Write>(records: &[ExperimentRecord], out: W, path: &Path) -> Result<()> {
    let mut w = writer(out);
    w.write_record(CSV_HEADER).map_err(csv_err(path))?;
    for r in records {
        if !(r.mse_exact.is_finite() && r.mse_approx.is_finite() && r.sweep_value.is_finite()) {
            return Err(DmaError::invalid("records must hold finite values"));
        }
        w.write_record([
            r.sweep.name().to_string(),
            float(r.sweep_value),
            r.bits.to_string(),
            float(r.mse_exact),
            float(r.mse_approx),
            r.trials.to_string(),
            r.seed.to_string(),
        ])
        .map_err(csv_err(path))?;
    }
    w.flush().map_err(io_err(path))
}

pub fn emit_csv(records: &[ExperimentRecord], path: &Path) -> Result<()> {
    if records.is_empty() {
        return Err(DmaError::invalid("no records to write"));
    }
    let file = File::create(path).map_err(io_err(path))?;
    write_csv(records, BufWriter::new(file), path)
}

pub fn parse_csv_str(text: &str, path: &Path) -> Result<Vec<ExperimentRecord>> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(text.as_bytes());
    let header = rdr.headers().map_err(csv_err(path))?.clone();
    if header.iter().ne(CSV_HEADER) {
        return Err(DmaError::Parse { path: path.to_path_buf(), message: "unexpected header".into() });
    }
    let bad = |line: u64, what: &str| DmaError::Parse {
        path: path.to_path_buf(),
        message: format!("record {line}: bad {what}"),
    };
    let mut out = Vec::new();
    for (i, row) in rdr.records().enumerate() {
        let row = row.map_err(csv_err(path))?;
        let line = i as u64 + 1;
        let f = |k: usize, what: &str| -> Result<f64> { row[k].parse().map_err(|_| bad(line, what)) };
        out.push(ExperimentRecord {
            sweep: row[0].parse::<Sweep>().map_err(|_| bad(line, "sweep"))?,
            sweep_value: f(1, "sweep_value")?,
            bits: row[2].parse::<Resolution>().map_err(|_| bad(line, "bits"))?,
            mse_exact: f(3, "mse_exact")?,
            mse_approx: f(4, "mse_approx")?,
            trials: row[5].parse().map_err(|_| bad(line, "trials"))?,
            seed: row[6].parse().map_err(|_| bad(line, "seed"))?,
        });
    }
    Ok(out)
}

pub fn parse_csv(path: &Path) -> Result<Vec<ExperimentRecord>> {
    let mut text = String::new();
    File::open(path)
        .and_then(|mut f| f.read_to_string(&mut text))
        .map_err(io_err(path))?;
    parse_csv_str(&text, path)
}

/// `out.csv` -> `out.plot.csv`.
pub fn plot_path(csv_path: &Path) -> PathBuf {
    let stem = csv_path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    csv_path.with_file_name(format!("{stem}.plot.csv"))
}

/// One plotted point: mean and standard error over trials.
#[derive(Debug, Clone, PartialEq)]
pub struct PlotPoint {
    pub sweep: Sweep,
    pub bits: Resolution,
    pub x: f64,
    /// `exact` or `approx`.
    pub series: &'static str,
    pub mean: f64,
    pub stderr: f64,
    pub users: usize,
}

pub fn plot_points(points: &[PointResult]) -> Vec<PlotPoint> {
    let mut out: Vec<PlotPoint> = points
        .iter()
        .flat_map(|p| {
            let r = &p.record;
            [("exact", r.mse_exact, p.stderr_exact), ("approx", r.mse_approx, p.stderr_approx)].map(
                |(series, mean, stderr)| PlotPoint {
                    sweep: r.sweep,
                    bits: r.bits,
                    x: r.sweep_value,
                    series,
                    mean,
                    stderr,
                    users: p.users,
                },
            )
        })
        .collect();
    // Grouped per (series, b), x ascending within a group.
    out.sort_by(|a, b| {
        (a.series, a.bits.code())
            .cmp(&(b.series, b.bits.code()))
            .then(a.x.total_cmp(&b.x))
    });
    out
}

pub fn emit_plot_data(points: &[PointResult], path: &Path) -> Result<()> {
    let file = File::create(path).map_err(io_err(path))?;
    let mut w = writer(BufWriter::new(file));
    w.write_record(PLOT_HEADER).map_err(csv_err(path))?;
    for p in plot_points(points) {
        let k = p.users as f64;
        w.write_record([
            p.sweep.name().to_string(),
            p.bits.to_string(),
            float(p.x),
            p.series.to_string(),
            float(p.mean),
            float(p.stderr),
            float(p.mean / k),
            float(p.stderr / k),
        ])
        .map_err(csv_err(path))?;
    }
    w.flush().map_err(io_err(path))
}
