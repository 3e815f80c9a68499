use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::columns::{kind_of, response_columns, ColumnKind, DatasetKind};
use crate::{Error, Result};

/// One raw value. Empty strings and the literal `NA` are missing.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Cell {
    Missing,
    Num(f64),
    Text(String),
}

impl Cell {
    pub fn is_missing(&self) -> bool {
        matches!(self, Cell::Missing)
    }

    pub fn as_text(&self) -> Option<&str> {
        match self {
            Cell::Text(s) => Some(s),
            _ => None,
        }
    }

    /// Canonical string form, used for equality checks and CSV output.
    pub fn render(&self) -> String {
        match self {
            Cell::Missing => String::new(),
            Cell::Num(v) => format_number(*v),
            Cell::Text(s) => s.clone(),
        }
    }
}

pub(crate) fn format_number(v: f64) -> String {
    if v.fract() == 0.0 && v.abs() < 1e15 {
        format!("{}", v as i64)
    } else {
        format!("{v}")
    }
}

pub fn is_missing_marker(s: &str) -> bool {
    let t = s.trim();
    t.is_empty() || t == "NA"
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Column {
    pub name: String,
    pub kind: ColumnKind,
    /// False for columns outside the modelled schema of the loan type.
    pub known: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RawTable {
    pub kind: DatasetKind,
    pub columns: Vec<Column>,
    pub rows: Vec<Vec<Cell>>,
}

impl RawTable {
    pub fn new(kind: DatasetKind, columns: Vec<Column>, rows: Vec<Vec<Cell>>) -> Result<Self> {
        let mut seen = std::collections::HashSet::new();
        for c in &columns {
            if !seen.insert(c.name.as_str()) {
                return Err(Error::invalid(format!("duplicate column `{}`", c.name)));
            }
        }
        if let Some(i) = rows.iter().position(|r| r.len() != columns.len()) {
            return Err(Error::invalid(format!(
                "row {i} has {} values, expected {}",
                rows[i].len(),
                columns.len()
            )));
        }
        Ok(RawTable {
            kind,
            columns,
            rows,
        })
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c.name == name)
    }

    pub fn column_names(&self) -> Vec<&str> {
        self.columns.iter().map(|c| c.name.as_str()).collect()
    }

    pub fn unknown_columns(&self) -> Vec<&str> {
        self.columns
            .iter()
            .filter(|c| !c.known)
            .map(|c| c.name.as_str())
            .collect()
    }

    pub fn cells(&self, col: usize) -> impl Iterator<Item = &Cell> + '_ {
        self.rows.iter().map(move |r| &r[col])
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(self.columns.iter().map(|c| c.name.as_str()))?;
        for r in &self.rows {
            out.write_record(r.iter().map(Cell::render))?;
        }
        out.flush().map_err(|e| Error::io("<csv output>", e))?;
        Ok(())
    }
}

/// Reads a loan export. Column kinds come from the catalogue for `kind`;
/// unknown columns are kept, flagged, and typed numerical when every
/// non-missing value parses as a number.
pub fn load_table(path: impl AsRef<Path>, kind: DatasetKind) -> Result<RawTable> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_table(file, kind)
}

pub fn read_table<R: Read>(reader: R, kind: DatasetKind) -> Result<RawTable> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(false)
        .from_reader(reader);
    let header: Vec<String> = rdr
        .headers()?
        .iter()
        .map(|h| h.trim().trim_start_matches('\u{feff}').to_string())
        .collect();
    for required in response_columns(kind) {
        if !header.iter().any(|h| h == required) {
            return Err(Error::MissingColumn((*required).to_string()));
        }
    }

    let mut text_rows: Vec<Vec<String>> = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        text_rows.push(rec.iter().map(str::to_string).collect());
    }

    let mut columns = Vec::with_capacity(header.len());
    for (j, name) in header.iter().enumerate() {
        let (ck, known) = match kind_of(kind, name) {
            Some(k) => (k, true),
            None => {
                let numeric = text_rows.iter().all(|r| {
                    is_missing_marker(&r[j]) || r[j].trim().parse::<f64>().is_ok()
                });
                let k = if numeric {
                    ColumnKind::Numerical
                } else {
                    ColumnKind::Categorical
                };
                (k, false)
            }
        };
        columns.push(Column {
            name: name.clone(),
            kind: ck,
            known,
        });
    }

    let mut rows = Vec::with_capacity(text_rows.len());
    for (i, tr) in text_rows.into_iter().enumerate() {
        let mut row = Vec::with_capacity(tr.len());
        for (j, v) in tr.into_iter().enumerate() {
            let cell = if is_missing_marker(&v) {
                Cell::Missing
            } else if columns[j].kind == ColumnKind::Numerical {
                let t = v.trim();
                let parsed = t.parse::<f64>().ok().filter(|x| x.is_finite());
                match parsed {
                    Some(x) => Cell::Num(x),
                    None => {
                        return Err(Error::ParseNumber {
                            column: columns[j].name.clone(),
                            row: i + 1,
                            value: v,
                        })
                    }
                }
            } else {
                Cell::Text(v.trim().to_string())
            };
            row.push(cell);
        }
        rows.push(row);
    }
    RawTable::new(kind, columns, rows)
}
