//! CSV and PNM file formats.
//!
//! All CSV files have a header row, comma separators and `.` decimals.
//! Times are milliseconds, luminances blondels, diameters millimetres.
//!
//! | file          | header                                                                      |
//! |---------------|-----------------------------------------------------------------------------|
//! | schedule.csv  | `time_ms,luminance_blondels`                                                |
//! | trace.csv     | `time_ms,luminance_blondels,flux_lumens,diameter_raw_mm,diameter_final_mm` |
//! | measured.csv  | `time_ms,diameter_mm`                                                       |
//! | pairs.csv     | `luminance_blondels,diameter_mm`                                            |
//!
//! Frames are read from any PNM file (PGM `P5` for measurement) and written
//! as binary PPM (`P6`, maxval 255).

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use image::codecs::pnm::{PnmEncoder, PnmSubtype, SampleEncoding};
use image::{ExtendedColorType, ImageEncoder};
use pupil_core::image::{GrayImage, RgbImage};
use pupil_core::photometry::Luminance;
use pupil_core::plr::{LightSchedule, ScheduleEntry};
use pupil_core::trace::{MeasuredRow, MeasuredSeries, SimTrace, TraceRow};

pub const SCHEDULE_HEADER: &[&str] = &["time_ms", "luminance_blondels"];
pub const TRACE_HEADER: &[&str] = &[
    "time_ms",
    "luminance_blondels",
    "flux_lumens",
    "diameter_raw_mm",
    "diameter_final_mm",
];
pub const MEASURED_HEADER: &[&str] = &["time_ms", "diameter_mm"];
pub const PAIRS_HEADER: &[&str] = &["luminance_blondels", "diameter_mm"];

#[derive(Debug, thiserror::Error)]
pub enum FormatError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: expected header `{expected}`, found `{found}`")]
    Header {
        path: PathBuf,
        expected: String,
        found: String,
    },

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: u64,
        message: String,
    },

    #[error("{path}:{line}: {message}")]
    Validation {
        path: PathBuf,
        line: u64,
        message: String,
    },

    #[error("{path}: {source}")]
    Image {
        path: PathBuf,
        #[source]
        source: image::ImageError,
    },

    #[error("{path}: {source}")]
    Model {
        path: PathBuf,
        #[source]
        source: pupil_core::Error,
    },
}

pub type Result<T> = std::result::Result<T, FormatError>;

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> FormatError + '_ {
    move |source| FormatError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Reads every record of a CSV with exactly `header`, returning the parsed
/// numeric columns and the line each record came from.
fn read_numeric_csv<R: Read>(
    reader: R,
    path: &Path,
    header: &[&str],
) -> Result<Vec<(u64, Vec<f64>)>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let found = rdr
        .headers()
        .map_err(|e| FormatError::Parse {
            path: path.to_path_buf(),
            line: 1,
            message: e.to_string(),
        })?
        .clone();
    if found.iter().ne(header.iter().copied()) {
        return Err(FormatError::Header {
            path: path.to_path_buf(),
            expected: header.join(","),
            found: found.iter().collect::<Vec<_>>().join(","),
        });
    }

    let mut rows = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(|e| FormatError::Parse {
            path: path.to_path_buf(),
            line: e.position().map_or(0, |p| p.line()),
            message: e.to_string(),
        })?;
        let line = record.position().map_or(0, |p| p.line());
        let values = record
            .iter()
            .map(|field| {
                field.parse::<f64>().map_err(|e| FormatError::Parse {
                    path: path.to_path_buf(),
                    line,
                    message: format!("`{field}` is not a number: {e}"),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        if let Some(bad) = values.iter().find(|v| !v.is_finite()) {
            return Err(FormatError::Parse {
                path: path.to_path_buf(),
                line,
                message: format!("non-finite value {bad}"),
            });
        }
        rows.push((line, values));
    }
    Ok(rows)
}

fn check_increasing(path: &Path, rows: &[(u64, Vec<f64>)]) -> Result<()> {
    for pair in rows.windows(2) {
        let (_, prev) = &pair[0];
        let (line, cur) = &pair[1];
        if cur[0] <= prev[0] {
            return Err(FormatError::Validation {
                path: path.to_path_buf(),
                line: *line,
                message: format!("time {} ms does not follow {} ms", cur[0], prev[0]),
            });
        }
    }
    Ok(())
}

fn validation(path: &Path, line: u64, message: impl Into<String>) -> FormatError {
    FormatError::Validation {
        path: path.to_path_buf(),
        line,
        message: message.into(),
    }
}

fn model(path: &Path) -> impl FnOnce(pupil_core::Error) -> FormatError + '_ {
    move |source| FormatError::Model {
        path: path.to_path_buf(),
        source,
    }
}

pub fn parse_schedule<R: Read>(reader: R, path: &Path) -> Result<LightSchedule> {
    let rows = read_numeric_csv(reader, path, SCHEDULE_HEADER)?;
    if let Some((line, first)) = rows.first() {
        if first[0] != 0.0 {
            return Err(validation(
                path,
                *line,
                "the first segment must start at 0 ms",
            ));
        }
    }
    check_increasing(path, &rows)?;
    for (line, row) in &rows {
        if !(1e-5..=1e5).contains(&row[1]) {
            return Err(validation(
                path,
                *line,
                format!("luminance {} B is outside [1e-5, 1e5]", row[1]),
            ));
        }
    }
    let entries = rows
        .into_iter()
        .map(|(_, r)| ScheduleEntry::new(r[0], r[1]))
        .collect();
    LightSchedule::new(entries).map_err(model(path))
}

pub fn read_schedule(path: &Path) -> Result<LightSchedule> {
    parse_schedule(File::open(path).map_err(io_err(path))?, path)
}

pub fn write_schedule_to<W: Write>(writer: W, schedule: &LightSchedule) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(SCHEDULE_HEADER)?;
    for e in schedule.entries() {
        w.serialize((e.start_ms, e.luminance_blondels))?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_schedule(path: &Path, schedule: &LightSchedule) -> Result<()> {
    let file = File::create(path).map_err(io_err(path))?;
    write_schedule_to(BufWriter::new(file), schedule).map_err(|e| csv_write_err(path, e))
}

fn csv_write_err(path: &Path, e: csv::Error) -> FormatError {
    FormatError::Io {
        path: path.to_path_buf(),
        source: std::io::Error::other(e),
    }
}

pub fn write_trace_to<W: Write>(writer: W, trace: &SimTrace) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(TRACE_HEADER)?;
    for r in trace.rows() {
        w.serialize((
            r.time_ms,
            r.luminance_blondels,
            r.flux_lumens,
            r.diameter_raw_mm,
            r.diameter_final_mm,
        ))?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_trace(path: &Path, trace: &SimTrace) -> Result<()> {
    let file = File::create(path).map_err(io_err(path))?;
    write_trace_to(BufWriter::new(file), trace).map_err(|e| csv_write_err(path, e))
}

pub fn parse_trace<R: Read>(reader: R, path: &Path) -> Result<SimTrace> {
    let rows = read_numeric_csv(reader, path, TRACE_HEADER)?;
    check_increasing(path, &rows)?;
    let rows = rows
        .into_iter()
        .map(|(_, r)| TraceRow {
            time_ms: r[0],
            luminance_blondels: r[1],
            flux_lumens: r[2],
            diameter_raw_mm: r[3],
            diameter_final_mm: r[4],
        })
        .collect();
    SimTrace::new(rows).map_err(model(path))
}

pub fn read_trace(path: &Path) -> Result<SimTrace> {
    parse_trace(File::open(path).map_err(io_err(path))?, path)
}

pub fn parse_measured<R: Read>(reader: R, path: &Path) -> Result<MeasuredSeries> {
    let rows = read_numeric_csv(reader, path, MEASURED_HEADER)?;
    check_increasing(path, &rows)?;
    for (line, row) in &rows {
        if !(row[1] > 0.0 && row[1] < 12.0) {
            return Err(validation(
                path,
                *line,
                format!("diameter {} mm is outside (0, 12)", row[1]),
            ));
        }
    }
    let rows = rows
        .into_iter()
        .map(|(_, r)| MeasuredRow {
            time_ms: r[0],
            diameter_mm: r[1],
        })
        .collect();
    MeasuredSeries::new(rows).map_err(model(path))
}

pub fn read_measured(path: &Path) -> Result<MeasuredSeries> {
    parse_measured(File::open(path).map_err(io_err(path))?, path)
}

pub fn write_measured_to<W: Write>(writer: W, series: &MeasuredSeries) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(MEASURED_HEADER)?;
    for r in series.rows() {
        w.serialize((r.time_ms, r.diameter_mm))?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_measured(path: &Path, series: &MeasuredSeries) -> Result<()> {
    let file = File::create(path).map_err(io_err(path))?;
    write_measured_to(BufWriter::new(file), series).map_err(|e| csv_write_err(path, e))
}

/// `(luminance, observed equilibrium diameter)` pairs for r_I fitting.
pub fn parse_pairs<R: Read>(reader: R, path: &Path) -> Result<Vec<(Luminance, f64)>> {
    read_numeric_csv(reader, path, PAIRS_HEADER)?
        .into_iter()
        .map(|(line, r)| {
            let l = Luminance::new(r[0]).map_err(|e| validation(path, line, e.to_string()))?;
            Ok((l, r[1]))
        })
        .collect()
}

pub fn read_pairs(path: &Path) -> Result<Vec<(Luminance, f64)>> {
    parse_pairs(File::open(path).map_err(io_err(path))?, path)
}

pub fn write_pairs_to<W: Write>(writer: W, pairs: &[(Luminance, f64)]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(PAIRS_HEADER)?;
    for (l, d) in pairs {
        w.serialize((l.blondels(), d))?;
    }
    w.flush()?;
    Ok(())
}

fn image_err(path: &Path) -> impl FnOnce(image::ImageError) -> FormatError + '_ {
    move |source| FormatError::Image {
        path: path.to_path_buf(),
        source,
    }
}

/// Loads a frame as 8-bit gray (PGM, or any PNM converted to luma).
pub fn read_gray(path: &Path) -> Result<GrayImage> {
    let img = image::open(path).map_err(image_err(path))?.into_luma8();
    let (w, h) = img.dimensions();
    GrayImage::from_raw(w as usize, h as usize, img.into_raw()).map_err(model(path))
}

/// Loads a texture as 8-bit RGB (PPM, or PGM expanded to gray RGB).
pub fn read_rgb(path: &Path) -> Result<RgbImage> {
    let img = image::open(path).map_err(image_err(path))?.into_rgb8();
    let (w, h) = img.dimensions();
    RgbImage::from_raw(w as usize, h as usize, img.into_raw()).map_err(model(path))
}

pub fn encode_ppm<W: Write>(writer: W, image: &RgbImage) -> image::ImageResult<()> {
    PnmEncoder::new(writer)
        .with_subtype(PnmSubtype::Pixmap(SampleEncoding::Binary))
        .write_image(
            image.as_raw(),
            image.width() as u32,
            image.height() as u32,
            ExtendedColorType::Rgb8,
        )
}

pub fn encode_pgm<W: Write>(writer: W, image: &GrayImage) -> image::ImageResult<()> {
    PnmEncoder::new(writer)
        .with_subtype(PnmSubtype::Graymap(SampleEncoding::Binary))
        .write_image(
            image.as_raw(),
            image.width() as u32,
            image.height() as u32,
            ExtendedColorType::L8,
        )
}

/// Writes a binary PPM (`P6`, maxval 255).
pub fn write_ppm(path: &Path, image: &RgbImage) -> Result<()> {
    let mut out = BufWriter::new(File::create(path).map_err(io_err(path))?);
    encode_ppm(&mut out, image).map_err(image_err(path))?;
    out.flush().map_err(io_err(path))
}

/// Writes a binary PGM (`P5`, maxval 255).
pub fn write_pgm(path: &Path, image: &GrayImage) -> Result<()> {
    let mut out = BufWriter::new(File::create(path).map_err(io_err(path))?);
    encode_pgm(&mut out, image).map_err(image_err(path))?;
    out.flush().map_err(io_err(path))
}
