//! File formats: specimen and knot tables, posterior draws, run configuration, column
//! mappings and result reports.
//!
//! Floating-point values are written with 17 significant digits so that every table
//! re-reads to the identical `f64`. Files are written to a temporary sibling and
//! renamed into place.

pub mod config;
pub mod draws;
pub mod mapping;
pub mod reports;
pub mod tables;

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};

pub use config::RunConfig;
pub use draws::{parse_draws, render_draws, DRAWS_HEADER};
pub use mapping::{ColumnMapping, KnotColumns, SpecimenColumns};
pub use tables::{
    ingest, ingest_str, join_knots, parse_knots, parse_specimens, parse_truth, render_knots, render_specimens,
    render_truth, KnotRecord, KNOT_HEADER, SPECIMEN_HEADER,
};

/// Shortest-exact scientific notation with 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// `NA` for undefined statistics.
pub fn fmt_opt(x: Option<f64>) -> String {
    x.map_or_else(|| "NA".to_string(), fmt_f64)
}

pub fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

/// Writes `bytes` to a temporary file beside `path`, syncs it, then renames it over `path`.
pub fn atomic_write(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let name = path
        .file_name()
        .ok_or_else(|| Error::invalid("output path", format!("{} has no file name", path.display())))?;
    let tmp = dir.join(format!(".{}.tmp{}", name.to_string_lossy(), std::process::id()));
    let result = (|| {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
        fs::rename(&tmp, path)
    })();
    if let Err(e) = result {
        let _ = fs::remove_file(&tmp);
        return Err(Error::io(path, e));
    }
    Ok(())
}

/// In-memory CSV writer with a fixed header.
pub(crate) struct CsvBuffer {
    writer: csv::Writer<Vec<u8>>,
}

impl CsvBuffer {
    pub(crate) fn new<S: AsRef<str>>(header: &[S]) -> Result<Self> {
        let mut writer = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(Vec::new());
        writer.write_record(header.iter().map(AsRef::as_ref)).map_err(csv_err)?;
        Ok(Self { writer })
    }

    pub(crate) fn row<I, S>(&mut self, fields: I) -> Result<()>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<[u8]>,
    {
        self.writer.write_record(fields).map_err(csv_err)
    }

    pub(crate) fn finish(self) -> Result<Vec<u8>> {
        self.writer
            .into_inner()
            .map_err(|e| Error::invalid("csv output", e.to_string()))
    }
}

fn csv_err(e: csv::Error) -> Error {
    Error::invalid("csv output", e.to_string())
}
