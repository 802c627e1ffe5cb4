//! Column mapping for externally produced specimen and knot tables.
//!
//! The defaults are the tool's own schema. A mapping file renames columns and applies
//! affine unit conversions, e.g. for a dataset that records UTS in psi and knot
//! positions from the end of the board rather than the start of the test span:
//!
//! ```toml
//! [specimens]
//! id = "Specimen"
//! uts = "UTS_psi"
//! uts_scale = 0.001
//!
//! [knots]
//! specimen_id = "Specimen"
//! lx = "X"
//! lx_offset = -24.0
//! edge_true = ["Y", "1"]
//! ```

use serde::Deserialize;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SpecimenColumns {
    pub id: String,
    pub moe: String,
    pub uts: String,
    pub failure_cell: String,
    pub moe_scale: f64,
    pub uts_scale: f64,
}

impl Default for SpecimenColumns {
    fn default() -> Self {
        Self {
            id: "id".into(),
            moe: "moe_psi_e6".into(),
            uts: "uts_psi_e3".into(),
            failure_cell: "failure_cell".into(),
            moe_scale: 1.0,
            uts_scale: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct KnotColumns {
    pub specimen_id: String,
    pub lx: String,
    pub ly: String,
    pub volume: String,
    pub edge: String,
    /// Multiplies both coordinates before the offsets are added.
    pub length_scale: f64,
    pub lx_offset: f64,
    pub ly_offset: f64,
    pub volume_scale: f64,
    /// Cell values (case-insensitive) meaning "edge knot"; anything in `edge_false` means
    /// not, and other values are rejected.
    pub edge_true: Vec<String>,
    pub edge_false: Vec<String>,
}

impl Default for KnotColumns {
    fn default() -> Self {
        Self {
            specimen_id: "specimen_id".into(),
            lx: "lx_in".into(),
            ly: "ly_in".into(),
            volume: "volume_in3".into(),
            edge: "edge".into(),
            length_scale: 1.0,
            lx_offset: 0.0,
            ly_offset: 0.0,
            volume_scale: 1.0,
            edge_true: vec!["1".into()],
            edge_false: vec!["0".into()],
        }
    }
}

impl KnotColumns {
    pub(crate) fn parse_edge(&self, raw: &str) -> Option<bool> {
        let matches = |set: &[String]| set.iter().any(|v| v.eq_ignore_ascii_case(raw));
        if matches(&self.edge_true) {
            Some(true)
        } else if matches(&self.edge_false) {
            Some(false)
        } else {
            None
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ColumnMapping {
    pub specimens: SpecimenColumns,
    pub knots: KnotColumns,
}

impl ColumnMapping {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let m: ColumnMapping = toml::from_str(text).map_err(|e| Error::Config(format!("column mapping: {e}")))?;
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        let s = &self.specimens;
        let k = &self.knots;
        let scales = [s.moe_scale, s.uts_scale, k.length_scale, k.volume_scale];
        if scales.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(Error::Config(
                "column mapping: scales must be positive and finite".into(),
            ));
        }
        if !(k.lx_offset.is_finite() && k.ly_offset.is_finite()) {
            return Err(Error::Config("column mapping: offsets must be finite".into()));
        }
        if k.edge_true
            .iter()
            .any(|t| k.edge_false.iter().any(|f| f.eq_ignore_ascii_case(t)))
        {
            return Err(Error::Config(
                "column mapping: a value is both edge and non-edge".into(),
            ));
        }
        Ok(())
    }
}
