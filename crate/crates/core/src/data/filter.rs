use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::path::Path;

use super::columns::{response_columns, DatasetKind};
use super::raw::{Cell, RawTable};
use crate::{Error, Result};

const BUNDLED_BLACKLIST: &str = include_str!("../../data/post_origination.txt");

/// Share of identical non-missing values at which a column counts as constant.
pub const CONSTANT_SHARE: f64 = 0.995;

#[derive(Clone, Debug, PartialEq)]
pub struct FilterPolicy {
    pub drop_constant_or_blank_columns: bool,
    pub post_origination: BTreeSet<String>,
    pub drop_rows_with_missing: bool,
    /// Never dropped by the constant-column rule (the responses).
    pub protected: BTreeSet<String>,
}

impl FilterPolicy {
    /// Default policy with the blacklist shipped in the crate.
    pub fn bundled(kind: DatasetKind) -> Self {
        Self::from_blacklist(BUNDLED_BLACKLIST, kind, "<bundled blacklist>")
            .expect("bundled blacklist parses")
    }

    pub fn from_blacklist_file(path: impl AsRef<Path>, kind: DatasetKind) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_blacklist(&text, kind, &path.display().to_string())
    }

    pub fn from_blacklist(text: &str, kind: DatasetKind, origin: &str) -> Result<Self> {
        let mut names = BTreeSet::new();
        let mut section = "common".to_string();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if let Some(s) = line.strip_prefix('[') {
                let s = s.strip_suffix(']').ok_or_else(|| Error::Config {
                    path: origin.to_string(),
                    line: i + 1,
                    message: "unterminated section header".into(),
                })?;
                if !matches!(s, "common" | "traditional" | "bidding") {
                    return Err(Error::Config {
                        path: origin.to_string(),
                        line: i + 1,
                        message: format!("unknown section `{s}`"),
                    });
                }
                section = s.to_string();
                continue;
            }
            if section == "common" || section == kind.to_string() {
                names.insert(line.to_string());
            }
        }
        let protected: BTreeSet<String> =
            response_columns(kind).iter().map(|s| s.to_string()).collect();
        for p in &protected {
            names.remove(p);
        }
        Ok(FilterPolicy {
            drop_constant_or_blank_columns: true,
            post_origination: names,
            drop_rows_with_missing: true,
            protected,
        })
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct DropReport {
    pub rows_in: usize,
    pub rows_out: usize,
    pub post_origination_columns: Vec<String>,
    pub constant_or_blank_columns: Vec<String>,
    pub rows_with_missing: usize,
}

impl fmt::Display for DropReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "rows in: {}", self.rows_in)?;
        writeln!(f, "rows out: {}", self.rows_out)?;
        writeln!(f, "rows dropped (missing values): {}", self.rows_with_missing)?;
        writeln!(
            f,
            "columns dropped (post-origination): {}",
            self.post_origination_columns.join(", ")
        )?;
        writeln!(
            f,
            "columns dropped (constant or blank): {}",
            self.constant_or_blank_columns.join(", ")
        )
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Filtered {
    pub table: RawTable,
    pub report: DropReport,
}

fn is_constant_or_blank(t: &RawTable, col: usize) -> bool {
    let mut counts: HashMap<String, usize> = HashMap::new();
    let mut present = 0usize;
    for c in t.cells(col) {
        if !c.is_missing() {
            present += 1;
            *counts.entry(c.render()).or_default() += 1;
        }
    }
    if present == 0 {
        return true;
    }
    let top = counts.values().copied().max().unwrap_or(0);
    top as f64 >= CONSTANT_SHARE * present as f64
}

fn drop_columns(t: &mut RawTable, drop: &BTreeSet<usize>) {
    if drop.is_empty() {
        return;
    }
    let keep: Vec<usize> = (0..t.columns.len()).filter(|j| !drop.contains(j)).collect();
    t.columns = keep.iter().map(|&j| t.columns[j].clone()).collect();
    for r in &mut t.rows {
        let old = std::mem::take(r);
        let mut old: Vec<Option<Cell>> = old.into_iter().map(Some).collect();
        *r = keep.iter().map(|&j| old[j].take().unwrap()).collect();
    }
}

/// Applies the cleaning rules until nothing more changes, so the result is a
/// fixed point: filtering it again is a no-op.
pub fn filter_table(t: &RawTable, p: &FilterPolicy) -> Filtered {
    let mut table = t.clone();
    let mut report = DropReport {
        rows_in: t.n_rows(),
        ..DropReport::default()
    };

    let blacklisted: BTreeSet<usize> = table
        .columns
        .iter()
        .enumerate()
        .filter(|(_, c)| p.post_origination.contains(&c.name))
        .map(|(j, _)| j)
        .collect();
    report.post_origination_columns = blacklisted
        .iter()
        .map(|&j| table.columns[j].name.clone())
        .collect();
    drop_columns(&mut table, &blacklisted);

    loop {
        let mut changed = false;
        if p.drop_constant_or_blank_columns {
            let constant: BTreeSet<usize> = (0..table.columns.len())
                .filter(|&j| !p.protected.contains(&table.columns[j].name))
                .filter(|&j| is_constant_or_blank(&table, j))
                .collect();
            if !constant.is_empty() {
                changed = true;
                report
                    .constant_or_blank_columns
                    .extend(constant.iter().map(|&j| table.columns[j].name.clone()));
                drop_columns(&mut table, &constant);
            }
        }
        if p.drop_rows_with_missing {
            let before = table.rows.len();
            table.rows.retain(|r| !r.iter().any(Cell::is_missing));
            let dropped = before - table.rows.len();
            if dropped > 0 {
                changed = true;
                report.rows_with_missing += dropped;
            }
        }
        if !changed {
            break;
        }
    }
    report.rows_out = table.n_rows();
    Filtered { table, report }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::read_table;

    fn table(csv: &str) -> RawTable {
        read_table(csv.as_bytes(), DatasetKind::Traditional).unwrap()
    }

    #[test]
    fn drops_blank_constant_blacklisted_and_missing() {
        let t = table(
            "BorrowerRate,Term,Blank,Same,NumberOfBids,LoanCurrentDaysDelinquent,AmountDelinquent\n\
             0.1,36,,1,3,0,0\n\
             0.2,60,,1,4,0,250\n\
             0.3,NA,,1,5,2,0\n\
             0.4,12,,1,6,0,0\n",
        );
        let f = filter_table(&t, &FilterPolicy::bundled(DatasetKind::Traditional));
        assert_eq!(f.table.column_names(), vec!["BorrowerRate", "Term", "AmountDelinquent"]);
        assert_eq!(f.table.n_rows(), 3);
        assert_eq!(f.report.rows_with_missing, 1);
        assert_eq!(
            f.report.post_origination_columns,
            vec!["NumberOfBids", "LoanCurrentDaysDelinquent"]
        );
        assert_eq!(f.report.constant_or_blank_columns, vec!["Blank", "Same"]);
    }

    #[test]
    fn responses_are_never_dropped() {
        let t = table("BorrowerRate,Term\n0.1,36\n0.1,60\n");
        let f = filter_table(&t, &FilterPolicy::bundled(DatasetKind::Traditional));
        assert_eq!(f.table.column_names(), vec!["BorrowerRate", "Term"]);
        let b = read_table(
            "BorrowerRate,LoanStatus,Images\n0.1,Completed,1\n0.2,Expired,2\n".as_bytes(),
            DatasetKind::Bidding,
        )
        .unwrap();
        let f = filter_table(&b, &FilterPolicy::bundled(DatasetKind::Bidding));
        assert!(f.table.column_index("LoanStatus").is_some());
    }

    #[test]
    fn empty_output_is_legal_and_idempotent() {
        let t = table("BorrowerRate,Term\nNA,36\n0.2,NA\nNA,60\n");
        let p = FilterPolicy::bundled(DatasetKind::Traditional);
        let once = filter_table(&t, &p);
        assert_eq!(once.table.n_rows(), 0);
        assert_eq!(filter_table(&once.table, &p).table, once.table);
    }

    #[test]
    fn blacklist_sections() {
        let p = FilterPolicy::bundled(DatasetKind::Traditional);
        assert!(p.post_origination.contains("LoanStatus"));
        assert!(p.post_origination.contains("NumberOfBids"));
        let p = FilterPolicy::bundled(DatasetKind::Bidding);
        assert!(!p.post_origination.contains("LoanStatus"));
        assert!(p.post_origination.contains("LoanCurrentDaysDelinquent"));
        assert!(FilterPolicy::from_blacklist("[bogus]\n", DatasetKind::Bidding, "x").is_err());
    }
}
