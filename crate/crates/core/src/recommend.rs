//! Loan-type recommendation: estimate (interest, success) for both loan
//! types and choose the one closer to the ideal point (0 interest, certain
//! funding).

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::data::{is_missing_marker, DatasetKind};
use crate::encoding::{EncodingSchema, Rule, SentimentLexicon, SENTIMENT_FEATURE};
use crate::ml::TrainedModel;
use crate::{Error, Result};

/// Funding probability assumed for a platform-priced loan.
pub const TRADITIONAL_SUCCESS: f64 = 0.81;

pub const BUNDLE_FORMAT: &str = "lendwise-bundle";
pub const BUNDLE_VERSION: u32 = 1;

pub type LoanType = DatasetKind;

/// Euclidean distance from `(interest, success)` to `(0, 1)`.
pub fn distance(interest: f64, success: f64) -> f64 {
    (interest * interest + (1.0 - success) * (1.0 - success)).sqrt()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LoanTypeEstimate {
    pub loan_type: LoanType,
    pub interest: f64,
    pub success: f64,
    pub distance: f64,
}

impl LoanTypeEstimate {
    /// Clamps both coordinates to [0, 1] before measuring the distance.
    pub fn new(loan_type: LoanType, interest: f64, success: f64) -> Self {
        let interest = interest.clamp(0.0, 1.0);
        let success = success.clamp(0.0, 1.0);
        LoanTypeEstimate {
            loan_type,
            interest,
            success,
            distance: distance(interest, success),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SentimentAdvice {
    pub sentiment: f64,
    /// Predicted bidding success with the description at that sentiment.
    pub success: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Recommendation {
    pub borrower_id: Option<String>,
    pub traditional: LoanTypeEstimate,
    pub bidding: LoanTypeEstimate,
    pub chosen: LoanType,
    pub tie_broken: bool,
    pub sentiment_advice: Option<SentimentAdvice>,
}

/// Picks the estimate nearer the ideal point; an exact tie goes to the
/// traditional loan.
pub fn decide(traditional: LoanTypeEstimate, bidding: LoanTypeEstimate) -> Recommendation {
    let tie = traditional.distance == bidding.distance;
    let chosen = if bidding.distance < traditional.distance {
        DatasetKind::Bidding
    } else {
        DatasetKind::Traditional
    };
    Recommendation {
        borrower_id: None,
        traditional,
        bidding,
        chosen,
        tie_broken: tie,
        sentiment_advice: None,
    }
}

/// One borrower's raw answers keyed by column name. Values are kept as
/// text and encoded with the bundle's schemas.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct BorrowerRecord {
    pub id: Option<String>,
    pub fields: BTreeMap<String, String>,
}

impl BorrowerRecord {
    pub fn new(fields: BTreeMap<String, String>) -> Self {
        BorrowerRecord { id: None, fields }
    }

    pub fn get(&self, name: &str) -> Option<String> {
        self.fields.get(name).filter(|v| !is_missing_marker(v)).cloned()
    }

    pub fn with_field(mut self, name: &str, value: impl ToString) -> Self {
        self.fields.insert(name.to_string(), value.to_string());
        self
    }
}

/// The three fitted predictors with the encoders they were trained under.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelBundle {
    pub traditional_rate: TrainedModel,
    pub bidding_rate: TrainedModel,
    pub bidding_success: TrainedModel,
    pub traditional_schema: EncodingSchema,
    pub bidding_schema: EncodingSchema,
    /// Best description sentiment found by the sweep, if one was run.
    pub optimal_sentiment: Option<f64>,
}

#[derive(Serialize, Deserialize)]
struct Envelope<T> {
    format: String,
    version: u32,
    bundle: T,
}

impl ModelBundle {
    pub fn validate(&self) -> Result<()> {
        if self.traditional_rate.is_classification() || self.bidding_rate.is_classification() {
            return Err(Error::Artifact("rate models must be regressors".into()));
        }
        if !self.bidding_success.is_classification() {
            return Err(Error::Artifact("success model must be a classifier".into()));
        }
        Ok(())
    }

    pub fn write<W: Write>(&self, w: W) -> Result<()> {
        let env = Envelope {
            format: BUNDLE_FORMAT.into(),
            version: BUNDLE_VERSION,
            bundle: self,
        };
        serde_json::to_writer_pretty(w, &env)?;
        Ok(())
    }

    pub fn read<R: Read>(r: R) -> Result<Self> {
        let env: Envelope<serde_json::Value> = serde_json::from_reader(r)?;
        if env.format != BUNDLE_FORMAT {
            return Err(Error::Artifact(format!("unexpected format `{}`", env.format)));
        }
        if env.version != BUNDLE_VERSION {
            return Err(Error::Artifact(format!("unsupported version {}", env.version)));
        }
        let b: ModelBundle = serde_json::from_value(env.bundle)?;
        b.validate()?;
        Ok(b)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let f = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(f);
        self.write(&mut w)?;
        w.flush().map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let f = File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read(BufReader::new(f))
    }

    fn parts(&self) -> [(&'static str, &TrainedModel, &EncodingSchema); 3] {
        [
            ("traditional_rate", &self.traditional_rate, &self.traditional_schema),
            ("bidding_rate", &self.bidding_rate, &self.bidding_schema),
            ("bidding_success", &self.bidding_success, &self.bidding_schema),
        ]
    }

    /// Raw input fields the three models need, for form construction.
    pub fn input_fields(&self) -> Vec<FieldSpec> {
        let mut out: BTreeMap<String, FieldSpec> = BTreeMap::new();
        for (label, m, schema) in self.parts() {
            for (name, rule) in schema.input_fields(&m.feature_names) {
                let entry = out.entry(name.clone()).or_insert_with(|| FieldSpec::from_rule(&name, &rule));
                entry.models.push(label.to_string());
            }
        }
        out.into_values().collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FieldType {
    Number,
    Category,
    Text,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FieldSpec {
    pub name: String,
    #[serde(rename = "type")]
    pub field_type: FieldType,
    /// Allowed values of a categorical field.
    pub classes: Option<Vec<String>>,
    /// Free text may be left empty; everything else must be supplied.
    pub required: bool,
    pub models: Vec<String>,
}

impl FieldSpec {
    fn from_rule(name: &str, rule: &Rule) -> Self {
        let (field_type, classes) = match rule {
            Rule::Binary { classes } => (FieldType::Category, classes.as_ref().map(|c| c.to_vec())),
            Rule::Ordinal { classes } => (FieldType::Category, classes.clone()),
            Rule::Sentiment | Rule::Length { .. } => (FieldType::Text, None),
            _ => (FieldType::Number, None),
        };
        FieldSpec {
            name: name.to_string(),
            required: field_type != FieldType::Text,
            field_type,
            classes,
            models: Vec::new(),
        }
    }
}

/// Encoded feature vector of `b` in the order `m` was fitted on.
pub fn feature_vector(
    b: &BorrowerRecord,
    m: &TrainedModel,
    schema: &EncodingSchema,
    lex: &SentimentLexicon,
) -> Result<Vec<f64>> {
    let field = |name: &str| b.get(name);
    m.feature_names
        .iter()
        .map(|f| schema.encode_feature(f, &field, lex))
        .collect()
}

/// Raw fields required by the bundle that `b` does not supply.
pub fn missing_fields(b: &BorrowerRecord, bundle: &ModelBundle) -> Vec<String> {
    bundle
        .input_fields()
        .into_iter()
        .filter(|f| f.required && b.get(&f.name).is_none())
        .map(|f| f.name)
        .collect()
}

/// (I_trad, S_trad) and (I_bid, S_bid); rates are clamped to [0, 1].
pub fn estimate_tuples(
    b: &BorrowerRecord,
    bundle: &ModelBundle,
    lex: &SentimentLexicon,
) -> Result<(LoanTypeEstimate, LoanTypeEstimate)> {
    if let Some(name) = missing_fields(b, bundle).into_iter().next() {
        return Err(Error::MissingFeature(name));
    }
    let predict = |m: &TrainedModel, schema: &EncodingSchema| -> Result<f64> {
        m.predict_row(&feature_vector(b, m, schema, lex)?)
    };
    let i_trad = predict(&bundle.traditional_rate, &bundle.traditional_schema)?;
    let i_bid = predict(&bundle.bidding_rate, &bundle.bidding_schema)?;
    let s_bid = predict(&bundle.bidding_success, &bundle.bidding_schema)?;
    Ok((
        LoanTypeEstimate::new(DatasetKind::Traditional, i_trad, TRADITIONAL_SUCCESS),
        LoanTypeEstimate::new(DatasetKind::Bidding, i_bid, s_bid),
    ))
}

/// Full recommendation, with sentiment advice when the bundle carries an
/// optimal sentiment and the success model uses the sentiment feature.
pub fn recommend(b: &BorrowerRecord, bundle: &ModelBundle, lex: &SentimentLexicon) -> Result<Recommendation> {
    let (t, bid) = estimate_tuples(b, bundle, lex)?;
    let mut r = decide(t, bid);
    r.borrower_id = b.id.clone();
    if let Some(g) = bundle.optimal_sentiment {
        if bundle.bidding_success.uses_feature(SENTIMENT_FEATURE) {
            let at = b.clone().with_field(SENTIMENT_FEATURE, g);
            let m = &bundle.bidding_success;
            let s = m.predict_row(&feature_vector(&at, m, &bundle.bidding_schema, lex)?)?;
            r.sentiment_advice = Some(SentimentAdvice {
                sentiment: g,
                success: s.clamp(0.0, 1.0),
            });
        }
    }
    Ok(r)
}

/// A past loan: the borrower's fields plus what actually happened.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HistoricalLoan {
    pub record: BorrowerRecord,
    pub loan_type: LoanType,
    pub rate: f64,
    pub funded: bool,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PortfolioSummary {
    pub n_loans: usize,
    /// Loans lacking a required field; left out of every count below.
    pub skipped: usize,
    pub recommended_traditional: usize,
    pub recommended_bidding: usize,
    /// 0.81 per recommended traditional loan plus the recommended bidding
    /// loans the classifier predicts funded.
    pub expected_funded: f64,
    /// Funding-weighted mean predicted rate of the expected funded loans.
    pub mean_predicted_rate: f64,
    pub historical_funded: usize,
    /// Mean actual rate of the historically funded loans.
    pub historical_mean_rate: f64,
}

/// Recommends every loan with its sentiment set to `sentiment` and compares
/// the outcome with history.
pub fn portfolio_eval(
    loans: &[HistoricalLoan],
    bundle: &ModelBundle,
    lex: &SentimentLexicon,
    sentiment: Option<f64>,
) -> Result<(PortfolioSummary, Vec<Recommendation>)> {
    let mut s = PortfolioSummary::default();
    let mut recs = Vec::new();
    let (mut weight, mut weighted_rate) = (0.0, 0.0);
    let (mut hist_n, mut hist_rate) = (0usize, 0.0);
    for loan in loans {
        let mut record = loan.record.clone();
        if let Some(g) = sentiment {
            record = record.with_field(SENTIMENT_FEATURE, g);
        }
        let r = match recommend(&record, bundle, lex) {
            Ok(r) => r,
            Err(Error::MissingFeature(_)) => {
                s.skipped += 1;
                continue;
            }
            Err(e) => return Err(e),
        };
        s.n_loans += 1;
        if loan.funded {
            hist_n += 1;
            hist_rate += loan.rate;
        }
        match r.chosen {
            DatasetKind::Traditional => {
                s.recommended_traditional += 1;
                weight += TRADITIONAL_SUCCESS;
                weighted_rate += TRADITIONAL_SUCCESS * r.traditional.interest;
            }
            DatasetKind::Bidding => {
                s.recommended_bidding += 1;
                if r.bidding.success >= 0.5 {
                    weight += 1.0;
                    weighted_rate += r.bidding.interest;
                }
            }
        }
        recs.push(r);
    }
    s.expected_funded = weight;
    s.mean_predicted_rate = if weight > 0.0 { weighted_rate / weight } else { 0.0 };
    s.historical_funded = hist_n;
    s.historical_mean_rate = if hist_n > 0 { hist_rate / hist_n as f64 } else { 0.0 };
    Ok((s, recs))
}

pub const HISTORY_TYPE: &str = "HistoricalType";
pub const HISTORY_RATE: &str = "HistoricalRate";
pub const HISTORY_FUNDED: &str = "HistoricalFunded";
pub const ID_COLUMN: &str = "BorrowerId";

/// Reads borrower records from CSV. An optional `BorrowerId` column names
/// each record; empty cells and `NA` count as absent.
pub fn read_borrowers<R: Read>(r: R) -> Result<Vec<BorrowerRecord>> {
    let mut rdr = csv::Reader::from_reader(r);
    let header: Vec<String> = rdr.headers()?.iter().map(|h| h.trim().to_string()).collect();
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let mut b = BorrowerRecord::default();
        for (name, v) in header.iter().zip(rec.iter()) {
            if is_missing_marker(v) {
                continue;
            }
            if name == ID_COLUMN {
                b.id = Some(v.to_string());
            } else {
                b.fields.insert(name.clone(), v.to_string());
            }
        }
        out.push(b);
    }
    Ok(out)
}

/// Reads past loans: borrower fields plus `HistoricalType`
/// (traditional|bidding), `HistoricalRate` and `HistoricalFunded` (0/1).
pub fn read_history<R: Read>(r: R) -> Result<Vec<HistoricalLoan>> {
    read_borrowers(r)?
        .into_iter()
        .enumerate()
        .map(|(i, mut b)| {
            let mut take = |name: &str| {
                b.fields
                    .remove(name)
                    .ok_or_else(|| Error::invalid(format!("row {}: missing `{name}`", i + 1)))
            };
            let loan_type: LoanType = take(HISTORY_TYPE)?.parse()?;
            let rate_s = take(HISTORY_RATE)?;
            let funded_s = take(HISTORY_FUNDED)?;
            let rate = rate_s.trim().parse::<f64>().map_err(|_| Error::ParseNumber {
                column: HISTORY_RATE.into(),
                row: i + 1,
                value: rate_s.clone(),
            })?;
            let funded = match funded_s.trim() {
                "1" | "true" | "True" => true,
                "0" | "false" | "False" => false,
                other => return Err(Error::invalid(format!("row {}: bad `{HISTORY_FUNDED}` value `{other}`", i + 1))),
            };
            Ok(HistoricalLoan {
                record: b,
                loan_type,
                rate,
                funded,
            })
        })
        .collect()
}

pub fn write_history<W: Write>(loans: &[HistoricalLoan], w: W) -> Result<()> {
    let mut names: Vec<String> = loans
        .iter()
        .flat_map(|l| l.record.fields.keys().cloned())
        .collect::<std::collections::BTreeSet<_>>()
        .into_iter()
        .collect();
    names.retain(|n| n != ID_COLUMN);
    let mut out = csv::Writer::from_writer(w);
    let mut header = vec![ID_COLUMN.to_string()];
    header.extend(names.iter().cloned());
    header.extend([HISTORY_TYPE.to_string(), HISTORY_RATE.to_string(), HISTORY_FUNDED.to_string()]);
    out.write_record(&header)?;
    for l in loans {
        let mut row = vec![l.record.id.clone().unwrap_or_default()];
        row.extend(names.iter().map(|n| l.record.fields.get(n).cloned().unwrap_or_default()));
        row.push(l.loan_type.to_string());
        row.push(l.rate.to_string());
        row.push(if l.funded { "1" } else { "0" }.to_string());
        out.write_record(&row)?;
    }
    out.flush().map_err(|e| Error::io("<csv output>", e))
}

/// `BorrowerId,i_trad,s_trad,d_trad,i_bid,s_bid,d_bid,chosen,tie_broken,advice_sentiment,advice_success`
pub fn write_recommendations<W: Write>(recs: &[Recommendation], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record([
        ID_COLUMN,
        "i_trad",
        "s_trad",
        "d_trad",
        "i_bid",
        "s_bid",
        "d_bid",
        "chosen",
        "tie_broken",
        "advice_sentiment",
        "advice_success",
    ])?;
    for r in recs {
        let (ag, asucc) = r
            .sentiment_advice
            .as_ref()
            .map_or((String::new(), String::new()), |a| (format!("{:.2}", a.sentiment), format!("{:.6}", a.success)));
        out.write_record([
            r.borrower_id.clone().unwrap_or_default(),
            format!("{:.6}", r.traditional.interest),
            format!("{:.6}", r.traditional.success),
            format!("{:.6}", r.traditional.distance),
            format!("{:.6}", r.bidding.interest),
            format!("{:.6}", r.bidding.success),
            format!("{:.6}", r.bidding.distance),
            r.chosen.to_string(),
            r.tie_broken.to_string(),
            ag,
            asucc,
        ])?;
    }
    out.flush().map_err(|e| Error::io("<csv output>", e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn worked_example() {
        let r = decide(
            LoanTypeEstimate::new(DatasetKind::Traditional, 0.20, 0.81),
            LoanTypeEstimate::new(DatasetKind::Bidding, 0.15, 0.10),
        );
        assert_eq!(r.chosen, DatasetKind::Traditional);
        assert!((r.traditional.distance - 0.2759).abs() < 1e-4);
        assert!((r.bidding.distance - 0.9124).abs() < 1e-4);
        assert!(!r.tie_broken);
    }

    #[test]
    fn clamp_and_ties() {
        let e = LoanTypeEstimate::new(DatasetKind::Bidding, 1.2, -0.1);
        assert_eq!((e.interest, e.success), (1.0, 0.0));
        let a = LoanTypeEstimate::new(DatasetKind::Traditional, 0.1, 0.81);
        let b = LoanTypeEstimate::new(DatasetKind::Bidding, 0.1, 0.81);
        let r = decide(a, b);
        assert_eq!(r.chosen, DatasetKind::Traditional);
        assert!(r.tie_broken);
    }
}
