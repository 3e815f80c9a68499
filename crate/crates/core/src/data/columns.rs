use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::Error;

pub const BORROWER_RATE: &str = "BorrowerRate";
pub const LOAN_STATUS: &str = "LoanStatus";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DatasetKind {
    Traditional,
    Bidding,
}

impl fmt::Display for DatasetKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DatasetKind::Traditional => "traditional",
            DatasetKind::Bidding => "bidding",
        })
    }
}

impl FromStr for DatasetKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        match s {
            "traditional" => Ok(DatasetKind::Traditional),
            "bidding" => Ok(DatasetKind::Bidding),
            other => Err(Error::invalid(format!("unknown dataset kind `{other}`"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ColumnKind {
    Categorical,
    Numerical,
    Text,
}

use ColumnKind::*;

const TRADITIONAL: &[(&str, ColumnKind)] = &[
    ("BorrowerRate", Numerical),
    ("OpenCreditLines", Numerical),
    ("ProsperGrade", Categorical),
    ("ProsperScore", Numerical),
    ("ListingCategory", Numerical),
    ("CurrentCreditLines", Numerical),
    ("TotalCreditLinespast7years", Numerical),
    ("OpenRevolvingAccounts", Numerical),
    ("OpenRevolvingMonthlyPayment", Numerical),
    ("TotalInquiries", Numerical),
    ("CurrentDelinquencies", Numerical),
    ("AmountDelinquent", Numerical),
    ("Occupation", Categorical),
    ("PublicRecordsLast10Years", Numerical),
    ("RevolvingCreditBalance", Numerical),
    ("TradesNeverDelinquent", Numerical),
    ("TotalTrades", Numerical),
    ("StatedMonthlyIncome", Numerical),
    ("AvailableBankcardCredit", Numerical),
    ("TradesOpenedLast6Months", Numerical),
    ("BankcardUtilization", Numerical),
    ("Homeownership", Categorical),
    ("DebtToIncomeRatio", Numerical),
    ("InquiriesLast6Months", Numerical),
    ("LoanAmount", Numerical),
    ("CreditScoreRangeLower", Numerical),
    ("EmploymentStatusDuration", Numerical),
    ("DelinquenciesLast7Years", Numerical),
    ("Term", Numerical),
    ("BorrowerState", Categorical),
    ("EmploymentStatus", Numerical),
    ("Description", Text),
];

const BIDDING: &[(&str, ColumnKind)] = &[
    ("BorrowerRate", Numerical),
    ("BorrowerMaximumRate", Numerical),
    ("ProsperGrade", Categorical),
    ("Homeownership", Categorical),
    ("DebtToIncomeRatio", Numerical),
    ("LoanAmount", Numerical),
    ("FundingOption", Categorical),
    ("Images", Numerical),
    ("Duration", Numerical),
    ("BorrowerState", Categorical),
    ("EmploymentStatus", Numerical),
    ("HasVerifiedBankAccount", Categorical),
    ("Description", Text),
    ("LoanStatus", Categorical),
];

/// Columns of the modelled schema for a loan type, in export order, with
/// their kinds. Responses are included.
pub fn known_columns(kind: DatasetKind) -> &'static [(&'static str, ColumnKind)] {
    match kind {
        DatasetKind::Traditional => TRADITIONAL,
        DatasetKind::Bidding => BIDDING,
    }
}

pub fn response_columns(kind: DatasetKind) -> &'static [&'static str] {
    match kind {
        DatasetKind::Traditional => &[BORROWER_RATE],
        DatasetKind::Bidding => &[BORROWER_RATE, LOAN_STATUS],
    }
}

pub(crate) fn kind_of(kind: DatasetKind, name: &str) -> Option<ColumnKind> {
    known_columns(kind)
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, k)| *k)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn catalogue_sizes() {
        // 31 features + 1 response; 12 features + 2 responses.
        assert_eq!(TRADITIONAL.len(), 32);
        assert_eq!(BIDDING.len(), 14);
        let categorical = |cols: &[(&str, ColumnKind)]| {
            cols.iter()
                .filter(|(n, k)| *k != Numerical && !response_columns(DatasetKind::Bidding).contains(n))
                .count()
        };
        assert_eq!(categorical(TRADITIONAL), 5);
        assert_eq!(categorical(BIDDING), 6);
    }
}
