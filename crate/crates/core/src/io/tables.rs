//! Specimen, knot and truth tables.

use std::collections::HashMap;
use std::path::Path;

use crate::error::{Error, Result};
use crate::model::{CellGrid, Knot, Observation, Specimen};
use crate::simulator::SimulatedSpecimen;

use super::mapping::{ColumnMapping, KnotColumns, SpecimenColumns};
use super::{fmt_f64, read_text, CsvBuffer};

pub const SPECIMEN_HEADER: [&str; 4] = ["id", "moe_psi_e6", "uts_psi_e3", "failure_cell"];
pub const KNOT_HEADER: [&str; 5] = ["specimen_id", "lx_in", "ly_in", "volume_in3", "edge"];

fn parse_err(source: &str, row: usize, reason: impl Into<String>) -> Error {
    Error::Parse {
        source_name: source.to_string(),
        row,
        reason: reason.into(),
    }
}

/// Header row plus records, each tagged with its 1-based line number.
pub(crate) struct Table {
    source: String,
    header: csv::StringRecord,
    rows: Vec<(usize, csv::StringRecord)>,
}

impl Table {
    pub(crate) fn parse(text: &str, source: &str) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(text.as_bytes());
        let header = reader
            .headers()
            .map_err(|e| parse_err(source, 1, e.to_string()))?
            .clone();
        let mut rows = Vec::new();
        for record in reader.records() {
            let record = record.map_err(|e| {
                let row = e.position().map_or(0, |p| p.line() as usize);
                parse_err(source, row, e.to_string())
            })?;
            let line = record.position().map_or(0, |p| p.line() as usize);
            if record.iter().all(str::is_empty) {
                continue;
            }
            rows.push((line, record));
        }
        Ok(Self {
            source: source.to_string(),
            header,
            rows,
        })
    }

    pub(crate) fn column(&self, name: &str) -> Result<usize> {
        let mut found = self.header.iter().enumerate().filter(|(_, h)| *h == name);
        match (found.next(), found.next()) {
            (Some((i, _)), None) => Ok(i),
            (Some(_), Some(_)) => Err(parse_err(&self.source, 1, format!("duplicate column '{name}'"))),
            (None, _) => Err(parse_err(&self.source, 1, format!("missing column '{name}'"))),
        }
    }

    pub(crate) fn rows(&self) -> &[(usize, csv::StringRecord)] {
        &self.rows
    }

    pub(crate) fn err(&self, row: usize, reason: impl Into<String>) -> Error {
        parse_err(&self.source, row, reason)
    }

    pub(crate) fn field<'a>(&self, row: usize, rec: &'a csv::StringRecord, col: usize) -> Result<&'a str> {
        rec.get(col)
            .ok_or_else(|| self.err(row, format!("missing field {}", col + 1)))
    }

    pub(crate) fn float(&self, row: usize, rec: &csv::StringRecord, col: usize, what: &str) -> Result<f64> {
        let raw = self.field(row, rec, col)?;
        let v: f64 = raw
            .parse()
            .map_err(|_| self.err(row, format!("{what}: cannot parse '{raw}' as a number")))?;
        if !v.is_finite() {
            return Err(self.err(row, format!("{what}: non-finite value")));
        }
        Ok(v)
    }
}

/// Parses a specimens table. Knots are left empty; `uts` and `failure_cell` must be both
/// present (observed specimen) or both empty (specimen to be predicted).
pub fn parse_specimens(text: &str, source: &str, cols: &SpecimenColumns, grid: &CellGrid) -> Result<Vec<Specimen>> {
    let t = Table::parse(text, source)?;
    let (c_id, c_moe, c_uts, c_cell) = (
        t.column(&cols.id)?,
        t.column(&cols.moe)?,
        t.column(&cols.uts)?,
        t.column(&cols.failure_cell)?,
    );
    let mut seen: HashMap<String, usize> = HashMap::new();
    let mut out = Vec::with_capacity(t.rows().len());
    for (row, rec) in t.rows() {
        let row = *row;
        let id = t.field(row, rec, c_id)?.to_string();
        if id.is_empty() {
            return Err(t.err(row, "empty specimen id"));
        }
        if let Some(first) = seen.insert(id.clone(), row) {
            return Err(t.err(row, format!("duplicate specimen id '{id}' (first seen on row {first})")));
        }
        let moe = t.float(row, rec, c_moe, "moe")? * cols.moe_scale;
        let uts_raw = t.field(row, rec, c_uts)?;
        let cell_raw = t.field(row, rec, c_cell)?;
        let observation = match (uts_raw.is_empty(), cell_raw.is_empty()) {
            (true, true) => None,
            (false, false) => {
                let uts = t.float(row, rec, c_uts, "uts")? * cols.uts_scale;
                let failure_cell: usize = cell_raw
                    .parse()
                    .map_err(|_| t.err(row, format!("failure_cell: cannot parse '{cell_raw}' as a cell index")))?;
                Some(Observation { uts, failure_cell })
            }
            _ => return Err(t.err(row, "uts and failure_cell must both be present or both be empty")),
        };
        let s = Specimen {
            id,
            moe,
            knots: Vec::new(),
            observation,
        };
        s.validate(grid).map_err(|e| t.err(row, e.to_string()))?;
        out.push(s);
    }
    Ok(out)
}

/// A knot row: owning specimen id, the knot and its line number.
#[derive(Debug, Clone, PartialEq)]
pub struct KnotRecord {
    pub specimen_id: String,
    pub knot: Knot,
    pub row: usize,
}

/// Parses a knots table. A file with no content at all is an empty table.
pub fn parse_knots(text: &str, source: &str, cols: &KnotColumns, grid: &CellGrid) -> Result<Vec<KnotRecord>> {
    if text.trim().is_empty() {
        return Ok(Vec::new());
    }
    let t = Table::parse(text, source)?;
    let (c_id, c_lx, c_ly, c_vol, c_edge) = (
        t.column(&cols.specimen_id)?,
        t.column(&cols.lx)?,
        t.column(&cols.ly)?,
        t.column(&cols.volume)?,
        t.column(&cols.edge)?,
    );
    let mut out = Vec::with_capacity(t.rows().len());
    for (row, rec) in t.rows() {
        let row = *row;
        let edge_raw = t.field(row, rec, c_edge)?;
        let edge = cols
            .parse_edge(edge_raw)
            .ok_or_else(|| t.err(row, format!("edge: unrecognized flag '{edge_raw}'")))?;
        let knot = Knot {
            lx: t.float(row, rec, c_lx, "lx")? * cols.length_scale + cols.lx_offset,
            ly: t.float(row, rec, c_ly, "ly")? * cols.length_scale + cols.ly_offset,
            volume: t.float(row, rec, c_vol, "volume")? * cols.volume_scale,
            edge,
        };
        knot.validate(grid).map_err(|e| t.err(row, e.to_string()))?;
        out.push(KnotRecord {
            specimen_id: t.field(row, rec, c_id)?.to_string(),
            knot,
            row,
        });
    }
    Ok(out)
}

/// Attaches knots to their specimens in file order.
pub fn join_knots(mut specimens: Vec<Specimen>, knots: Vec<KnotRecord>, knots_source: &str) -> Result<Vec<Specimen>> {
    let index: HashMap<String, usize> = specimens.iter().enumerate().map(|(i, s)| (s.id.clone(), i)).collect();
    for k in knots {
        let i = *index
            .get(&k.specimen_id)
            .ok_or_else(|| parse_err(knots_source, k.row, format!("unknown specimen id '{}'", k.specimen_id)))?;
        specimens[i].knots.push(k.knot);
    }
    Ok(specimens)
}

/// Parses and joins specimen and knot tables held in memory.
pub fn ingest_str(specimens: &str, knots: &str, grid: &CellGrid, mapping: &ColumnMapping) -> Result<Vec<Specimen>> {
    let s = parse_specimens(specimens, "specimens", &mapping.specimens, grid)?;
    let k = parse_knots(knots, "knots", &mapping.knots, grid)?;
    join_knots(s, k, "knots")
}

pub fn ingest(
    specimens_path: &Path,
    knots_path: &Path,
    grid: &CellGrid,
    mapping: &ColumnMapping,
) -> Result<Vec<Specimen>> {
    let s_name = specimens_path.display().to_string();
    let k_name = knots_path.display().to_string();
    let s = parse_specimens(&read_text(specimens_path)?, &s_name, &mapping.specimens, grid)?;
    let k = parse_knots(&read_text(knots_path)?, &k_name, &mapping.knots, grid)?;
    join_knots(s, k, &k_name)
}

pub fn render_specimens(specimens: &[Specimen]) -> Result<Vec<u8>> {
    let mut w = CsvBuffer::new(&SPECIMEN_HEADER)?;
    for s in specimens {
        let (uts, cell) = match s.observation {
            Some(o) => (fmt_f64(o.uts), o.failure_cell.to_string()),
            None => (String::new(), String::new()),
        };
        w.row([s.id.clone(), fmt_f64(s.moe), uts, cell])?;
    }
    w.finish()
}

pub fn render_knots(specimens: &[Specimen]) -> Result<Vec<u8>> {
    let mut w = CsvBuffer::new(&KNOT_HEADER)?;
    for s in specimens {
        for k in &s.knots {
            w.row([
                s.id.clone(),
                fmt_f64(k.lx),
                fmt_f64(k.ly),
                fmt_f64(k.volume),
                if k.edge { "1" } else { "0" }.to_string(),
            ])?;
        }
    }
    w.finish()
}

/// Hidden profiles: id, x1..xJ, y1..yJ.
pub fn render_truth(sims: &[SimulatedSpecimen]) -> Result<Vec<u8>> {
    let cells = sims.first().map_or(0, |s| s.clear.len());
    let header: Vec<String> = std::iter::once("id".to_string())
        .chain((1..=cells).map(|j| format!("x{j}")))
        .chain((1..=cells).map(|j| format!("y{j}")))
        .collect();
    let mut w = CsvBuffer::new(&header)?;
    for s in sims {
        if s.clear.len() != cells || s.adjusted.len() != cells {
            return Err(Error::invalid("truth table", "profiles of unequal length"));
        }
        let row: Vec<String> = std::iter::once(s.specimen.id.clone())
            .chain(s.clear.iter().chain(&s.adjusted).map(|&v| fmt_f64(v)))
            .collect();
        w.row(row)?;
    }
    w.finish()
}

/// (id, clear profile, adjusted profile) rows of a truth table with `cells` cells.
/// One truth-file row: specimen id, clear profile X and adjusted profile Y.
pub type TruthRow = (String, Vec<f64>, Vec<f64>);

pub fn parse_truth(text: &str, source: &str, cells: usize) -> Result<Vec<TruthRow>> {
    let t = Table::parse(text, source)?;
    let c_id = t.column("id")?;
    let xs: Vec<usize> = (1..=cells).map(|j| t.column(&format!("x{j}"))).collect::<Result<_>>()?;
    let ys: Vec<usize> = (1..=cells).map(|j| t.column(&format!("y{j}"))).collect::<Result<_>>()?;
    t.rows()
        .iter()
        .map(|(row, rec)| {
            let vals = |cols: &[usize], what| {
                cols.iter()
                    .map(|&c| t.float(*row, rec, c, what))
                    .collect::<Result<Vec<f64>>>()
            };
            Ok((t.field(*row, rec, c_id)?.to_string(), vals(&xs, "x")?, vals(&ys, "y")?))
        })
        .collect()
}
