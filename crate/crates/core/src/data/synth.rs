//! Synthetic loan exports calibrated to published platform averages.
//!
//! Real exports are large and not redistributable, so tests and demos run on
//! tables drawn here. Rates are centred on per-grade means, bidding funding
//! follows a latent score (with a sentiment optimum near 0.68) and the funded
//! share is hit exactly by ranking.

use std::collections::BTreeMap;

use rand::seq::IndexedRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use super::columns::{known_columns, ColumnKind, DatasetKind, BORROWER_RATE, LOAN_STATUS};
use super::dataset::{Dataset, Target};
use super::filter::{filter_table, FilterPolicy};
use super::raw::{Cell, Column, RawTable};
use crate::encoding::{encode_dataset, EncodingSchema, SentimentLexicon};
use crate::{rng, Error, Matrix, Result};

pub const GRADES: [&str; 7] = ["AA", "A", "B", "C", "D", "E", "HR"];

/// Mean traditional interest per grade, AA..HR.
#[allow(clippy::approx_constant)]
pub const TRADITIONAL_GRADE_MEANS: [f64; 7] = [0.112, 0.082, 0.158, 0.197, 0.247, 0.295, 0.318];
/// Mean funded bidding interest per grade, AA..HR.
pub const BIDDING_GRADE_MEANS: [f64; 7] = [0.113, 0.102, 0.151, 0.182, 0.208, 0.247, 0.235];

pub const FUNDED_STATUSES: [&str; 4] = ["Completed", "Current", "Chargedoff", "Defaulted"];
pub const NON_FUNDED_STATUSES: [&str; 3] = ["Expired", "Withdrawn", "Cancelled"];

/// Sentiment at which the synthetic funding propensity peaks.
pub const SENTIMENT_PEAK: f64 = 0.68;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthConfig {
    pub n_traditional: usize,
    pub n_bidding: usize,
    pub traditional_grade_means: [f64; 7],
    pub bidding_grade_means: [f64; 7],
    /// Within-grade standard deviation of interest rates.
    pub grade_rate_sd: f64,
    pub funded_fraction: f64,
    /// Scale of the logistic noise in the funding propensity.
    pub funding_noise_scale: f64,
    /// When set, the traditional rate is `intercept + Σ w·x + noise` over
    /// these numerical traditional columns instead of the grade model.
    pub planted_coefficients: Option<BTreeMap<String, f64>>,
    pub planted_intercept: f64,
    pub planted_noise_sd: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            n_traditional: 10_000,
            n_bidding: 12_006,
            traditional_grade_means: TRADITIONAL_GRADE_MEANS,
            bidding_grade_means: BIDDING_GRADE_MEANS,
            grade_rate_sd: 0.02,
            funded_fraction: 0.076,
            funding_noise_scale: 1.0,
            planted_coefficients: None,
            planted_intercept: 0.0,
            planted_noise_sd: 0.0,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_traditional == 0 || self.n_bidding == 0 {
            return Err(Error::invalid("synthetic row counts must be positive"));
        }
        if !(self.funded_fraction > 0.0 && self.funded_fraction < 1.0) {
            return Err(Error::invalid("funded_fraction must lie in (0, 1)"));
        }
        if !(self.grade_rate_sd >= 0.0 && self.grade_rate_sd.is_finite()) {
            return Err(Error::invalid("grade_rate_sd must be a finite non-negative number"));
        }
        if !(self.funding_noise_scale >= 0.0 && self.funding_noise_scale.is_finite()) {
            return Err(Error::invalid("funding_noise_scale must be a finite non-negative number"));
        }
        if !(self.planted_noise_sd >= 0.0 && self.planted_noise_sd.is_finite()) {
            return Err(Error::invalid("planted_noise_sd must be a finite non-negative number"));
        }
        let means = self.traditional_grade_means.iter().chain(&self.bidding_grade_means);
        if means.clone().any(|m| !(0.0..=1.0).contains(m)) {
            return Err(Error::invalid("grade rate means must lie in [0, 1]"));
        }
        if let Some(w) = &self.planted_coefficients {
            for name in w.keys() {
                let numeric = known_columns(DatasetKind::Traditional)
                    .iter()
                    .any(|(n, k)| n == name && *k == ColumnKind::Numerical && *n != BORROWER_RATE);
                if !numeric {
                    return Err(Error::invalid(format!(
                        "planted feature `{name}` is not a numerical traditional feature"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Raw synthetic exports, including a few post-origination columns so the
/// cleaning step has something to remove.
#[derive(Clone, Debug, PartialEq)]
pub struct SynthTables {
    pub traditional: RawTable,
    pub bidding: RawTable,
}

const PHRASES: &[&str] = &[
    "Payoff credit cards",
    "Consolidate debt into one payment",
    "Loan for car repair",
    "Home improvement project",
    "Business inventory purchase",
    "Need funds for wedding expenses",
    "I have a great job and excellent credit history",
    "Thank you for your support",
    "I am a responsible borrower and always pay on time",
    "This loan will help me improve my home",
    "I love my stable career",
    "Happy to finally be debt free soon",
    "Wonderful opportunity to grow my successful business",
    "Best decision for my family",
    "Lost my job last year but recovering",
    "Medical bills and bad luck",
    "I am not happy with my high interest cards",
    "Struggling with debt problems",
    "Sad divorce left me with bills",
    "Hurt by a failed business",
    "Lender seeing Prosper from borrower's point-of-view",
    "Please help",
    "Trust me",
];

const OCCUPATIONS: &[&str] = &[
    "Accountant", "Analyst", "Clerical", "Computer Programmer", "Construction", "Engineer",
    "Executive", "Nurse", "Professional", "Sales", "Skilled Labor", "Teacher",
];

const STATES: &[&str] = &[
    "AZ", "CA", "CO", "FL", "GA", "IL", "MA", "MI", "NC", "NJ", "NY", "OH", "PA", "TX", "VA", "WA",
];

fn normal(r: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(r)
}

fn round_to(v: f64, places: i32) -> f64 {
    let s = 10f64.powi(places);
    (v * s).round() / s
}

fn description(r: &mut ChaCha8Rng) -> String {
    let k = r.random_range(1..=3);
    let parts: Vec<&str> = (0..k).map(|_| *PHRASES.choose(r).unwrap()).collect();
    parts.join(". ")
}

fn poisson_like(r: &mut ChaCha8Rng, mean: f64) -> f64 {
    // Geometric counts: cheap and over-dispersed like credit bureau tallies.
    let p = 1.0 / (1.0 + mean);
    let mut k = 0.0;
    while r.random::<f64>() > p && k < 60.0 {
        k += 1.0;
    }
    k
}

fn column(name: &str, kind: DatasetKind) -> Column {
    let known = known_columns(kind).iter().find(|(n, _)| *n == name);
    Column {
        name: name.to_string(),
        kind: known.map(|(_, k)| *k).unwrap_or(ColumnKind::Numerical),
        known: known.is_some(),
    }
}

fn traditional(cfg: &SynthConfig, seed: u64) -> Result<RawTable> {
    let mut r = rng::stream(seed, 1);
    let mut names: Vec<&str> = known_columns(DatasetKind::Traditional).iter().map(|(n, _)| *n).collect();
    names.push("LoanCurrentDaysDelinquent");
    let columns: Vec<Column> = names.iter().map(|n| column(n, DatasetKind::Traditional)).collect();
    let mut rows = Vec::with_capacity(cfg.n_traditional);
    for _ in 0..cfg.n_traditional {
        let g = r.random_range(0..7usize);
        let gf = g as f64;
        let credit_dev = 15.0 * normal(&mut r);
        let credit = (20.0 * ((820.0 - 25.0 * gf + credit_dev) / 20.0).round()).clamp(600.0, 880.0);
        let term = *[12.0, 36.0, 36.0, 36.0, 60.0, 60.0].choose(&mut r).unwrap();
        let delinq = poisson_like(&mut r, 0.5 + 0.6 * gf);
        let income = round_to((3000.0 + 2500.0 * normal(&mut r).abs()) * (1.0 - 0.05 * gf), 2);
        let amount = 1000.0 * r.random_range(2..=35) as f64;
        let dti = round_to((0.1 + 0.05 * gf + 0.08 * normal(&mut r).abs()).min(1.5), 2);
        let util = round_to(r.random::<f64>().powf(1.0 - 0.1 * gf), 2);
        let open_lines = r.random_range(2..=20) as f64;
        let current_lines = (open_lines + r.random_range(0..=3) as f64).min(25.0);
        let total_trades = current_lines + r.random_range(3..=30) as f64;
        let current_delinq = if r.random::<f64>() < 0.05 + 0.04 * gf { r.random_range(1..=4) as f64 } else { 0.0 };
        let amount_delinq = if current_delinq > 0.0 { (250.0 * r.random_range(1..=40) as f64).round() } else { 0.0 };
        let text = description(&mut r);

        let rate = match &cfg.planted_coefficients {
            Some(_) => f64::NAN, // filled in below once every feature is known
            None => {
                let z_term = (term - 40.0) / 15.0;
                let z_credit = -credit_dev / 15.0;
                let z_delinq = (delinq - (0.5 + 0.6 * gf)) / (1.0 + 0.6 * gf);
                let z = (0.55 * z_term + 0.45 * z_credit + 0.3 * z_delinq + 0.55 * normal(&mut r))
                    / (0.55f64.powi(2) * 2.0 + 0.45f64.powi(2) + 0.3f64.powi(2)).sqrt();
                let rate = cfg.traditional_grade_means[g] + cfg.grade_rate_sd * z;
                if cfg.grade_rate_sd == 0.0 {
                    cfg.traditional_grade_means[g]
                } else {
                    round_to(rate.clamp(0.0, 1.0), 5)
                }
            }
        };

        let mut row = Vec::with_capacity(names.len());
        for name in &names {
            let cell = match *name {
                "BorrowerRate" => Cell::Num(rate),
                "OpenCreditLines" => Cell::Num(open_lines),
                "ProsperGrade" => Cell::Text(GRADES[g].into()),
                "ProsperScore" => Cell::Num((10.0 - gf * 1.3 + normal(&mut r)).round().clamp(1.0, 11.0)),
                "ListingCategory" => Cell::Num(r.random_range(0..=20) as f64),
                "CurrentCreditLines" => Cell::Num(current_lines),
                "TotalCreditLinespast7years" => Cell::Num(total_trades + r.random_range(0..=10) as f64),
                "OpenRevolvingAccounts" => Cell::Num(r.random_range(1..=15) as f64),
                "OpenRevolvingMonthlyPayment" => Cell::Num(round_to(50.0 + 900.0 * r.random::<f64>(), 0)),
                "TotalInquiries" => Cell::Num(poisson_like(&mut r, 3.0 + 0.5 * gf)),
                "CurrentDelinquencies" => Cell::Num(current_delinq),
                "AmountDelinquent" => Cell::Num(amount_delinq),
                "Occupation" => Cell::Text(OCCUPATIONS.choose(&mut r).unwrap().to_string()),
                "PublicRecordsLast10Years" => Cell::Num(if r.random::<f64>() < 0.1 + 0.02 * gf { 1.0 } else { 0.0 }),
                "RevolvingCreditBalance" => Cell::Num(round_to(20_000.0 * r.random::<f64>().powi(2), 0)),
                "TradesNeverDelinquent" => Cell::Num(round_to(1.0 - 0.3 * r.random::<f64>() * (gf + 1.0) / 7.0, 2)),
                "TotalTrades" => Cell::Num(total_trades),
                "StatedMonthlyIncome" => Cell::Num(income),
                "AvailableBankcardCredit" => Cell::Num(round_to(15_000.0 * r.random::<f64>() * (1.0 - util), 0)),
                "TradesOpenedLast6Months" => Cell::Num(r.random_range(0..=3) as f64),
                "BankcardUtilization" => Cell::Num(util),
                "Homeownership" => Cell::Text(if r.random::<f64>() < 0.55 - 0.04 * gf { "Own" } else { "Not own" }.into()),
                "DebtToIncomeRatio" => Cell::Num(dti),
                "InquiriesLast6Months" => Cell::Num(poisson_like(&mut r, 0.6 + 0.3 * gf)),
                "LoanAmount" => Cell::Num(amount),
                "CreditScoreRangeLower" => Cell::Num(credit),
                "EmploymentStatusDuration" => Cell::Num(r.random_range(0..=300) as f64),
                "DelinquenciesLast7Years" => Cell::Num(delinq),
                "Term" => Cell::Num(term),
                "BorrowerState" => Cell::Text(STATES.choose(&mut r).unwrap().to_string()),
                "EmploymentStatus" => Cell::Num(*[1.0, 1.0, 1.0, 2.0, 3.0, 4.0].choose(&mut r).unwrap()),
                "Description" => Cell::Text(text.clone()),
                "LoanCurrentDaysDelinquent" => Cell::Num(if r.random::<f64>() < 0.1 { r.random_range(1..=120) as f64 } else { 0.0 }),
                other => unreachable!("no generator for {other}"),
            };
            row.push(cell);
        }
        rows.push(row);
    }

    if let Some(w) = &cfg.planted_coefficients {
        let mut noise = rng::stream(seed, 3);
        let ri = names.iter().position(|n| *n == BORROWER_RATE).unwrap();
        for row in &mut rows {
            let mut v = cfg.planted_intercept;
            for (name, weight) in w {
                let j = names.iter().position(|n| n == name).unwrap();
                if let Cell::Num(x) = row[j] {
                    v += weight * x;
                }
            }
            if cfg.planted_noise_sd > 0.0 {
                v += Normal::new(0.0, cfg.planted_noise_sd).unwrap().sample(&mut noise);
            }
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::Degenerate(format!(
                    "planted rate {v} falls outside [0, 1]; rescale the coefficients"
                )));
            }
            row[ri] = Cell::Num(v);
        }
    }
    RawTable::new(DatasetKind::Traditional, columns, rows)
}

fn bidding(cfg: &SynthConfig, seed: u64, lex: &SentimentLexicon) -> Result<RawTable> {
    let mut r = rng::stream(seed, 2);
    let mut names: Vec<&str> = known_columns(DatasetKind::Bidding).iter().map(|(n, _)| *n).collect();
    names.push("BidCount");
    let columns: Vec<Column> = names.iter().map(|n| column(n, DatasetKind::Bidding)).collect();
    let n = cfg.n_bidding;

    struct Draft {
        row: Vec<Cell>,
        grade: usize,
        max_rate: f64,
        latent: f64,
    }
    let mut drafts = Vec::with_capacity(n);
    for _ in 0..n {
        let g = r.random_range(0..7usize);
        let gf = g as f64;
        let mean = cfg.bidding_grade_means[g];
        let headroom = 0.02 + 0.08 * r.random::<f64>();
        let max_rate = round_to((mean + headroom).min(1.0), 4).max(mean);
        let images = r.random_range(0..=5) as f64;
        let verified = r.random::<f64>() < 0.6;
        let own = r.random::<f64>() < 0.5 - 0.03 * gf;
        let dti = round_to(0.1 + 0.05 * gf + 0.1 * normal(&mut r).abs(), 2);
        let amount = 500.0 * r.random_range(2..=50) as f64;
        let text = description(&mut r);
        let s = crate::encoding::sentiment_score(&text, lex);
        let u: f64 = r.random::<f64>().clamp(1e-12, 1.0 - 1e-12);
        let latent = 2.0 * (headroom - 0.06) / 0.03 - 0.35 * gf + 0.8 * f64::from(u8::from(verified)) + 0.35 * images
            - 12.0 * (s - SENTIMENT_PEAK).powi(2)
            - amount / 12_000.0
            + cfg.funding_noise_scale * (u / (1.0 - u)).ln();

        let mut row = Vec::with_capacity(names.len());
        for name in &names {
            let cell = match *name {
                "BorrowerRate" | "LoanStatus" => Cell::Missing,
                "BorrowerMaximumRate" => Cell::Num(max_rate),
                "ProsperGrade" => Cell::Text(GRADES[g].into()),
                "Homeownership" => Cell::Text(if own { "Own" } else { "Not own" }.into()),
                "DebtToIncomeRatio" => Cell::Num(dti),
                "LoanAmount" => Cell::Num(amount),
                "FundingOption" => Cell::Text(
                    if r.random::<f64>() < 0.7 { "Close when funded" } else { "Open for duration" }.into(),
                ),
                "Images" => Cell::Num(images),
                "Duration" => Cell::Num(*[3.0, 5.0, 7.0, 10.0, 14.0].choose(&mut r).unwrap()),
                "BorrowerState" => Cell::Text(STATES.choose(&mut r).unwrap().to_string()),
                "EmploymentStatus" => Cell::Num(*[1.0, 1.0, 2.0, 3.0, 4.0].choose(&mut r).unwrap()),
                "HasVerifiedBankAccount" => Cell::Text(if verified { "True" } else { "False" }.into()),
                "Description" => Cell::Text(text.clone()),
                "BidCount" => Cell::Num(0.0),
                other => unreachable!("no generator for {other}"),
            };
            row.push(cell);
        }
        drafts.push(Draft {
            row,
            grade: g,
            max_rate,
            latent,
        });
    }

    // Exactly round(fraction·n) funded: the highest latent scores, ties by index.
    let k = ((cfg.funded_fraction * n as f64).round() as usize).clamp(1, n);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| drafts[b].latent.total_cmp(&drafts[a].latent).then(a.cmp(&b)));
    let mut funded = vec![false; n];
    for &i in &order[..k] {
        funded[i] = true;
    }

    let ri = names.iter().position(|n| *n == BORROWER_RATE).unwrap();
    let si = names.iter().position(|n| *n == LOAN_STATUS).unwrap();
    let bi = names.iter().position(|n| *n == "BidCount").unwrap();
    let mut rows = Vec::with_capacity(n);
    for (i, mut d) in drafts.into_iter().enumerate() {
        if funded[i] {
            let mean = cfg.bidding_grade_means[d.grade];
            let rate = if cfg.grade_rate_sd == 0.0 {
                mean
            } else {
                round_to((mean + cfg.grade_rate_sd * normal(&mut r)).clamp(0.0, d.max_rate), 5)
            };
            d.row[ri] = Cell::Num(rate);
            d.row[si] = Cell::Text(FUNDED_STATUSES.choose(&mut r).unwrap().to_string());
            d.row[bi] = Cell::Num(r.random_range(20..=300) as f64);
        } else {
            d.row[ri] = Cell::Num(d.max_rate);
            d.row[si] = Cell::Text(NON_FUNDED_STATUSES.choose(&mut r).unwrap().to_string());
            d.row[bi] = Cell::Num(r.random_range(0..=40) as f64);
        }
        rows.push(d.row);
    }
    RawTable::new(DatasetKind::Bidding, columns, rows)
}

/// Raw synthetic exports for both loan types.
pub fn synth_tables(cfg: &SynthConfig, seed: u64) -> Result<SynthTables> {
    cfg.validate()?;
    let lex = SentimentLexicon::bundled();
    Ok(SynthTables {
        traditional: traditional(cfg, seed)?,
        bidding: bidding(cfg, seed, &lex)?,
    })
}

/// Cleaned and encoded synthetic datasets: traditional rates and bidding
/// funding labels.
pub fn synth_generate(cfg: &SynthConfig, seed: u64) -> Result<(Dataset, Dataset)> {
    let tables = synth_tables(cfg, seed)?;
    let lex = SentimentLexicon::bundled();
    let encode = |t: &RawTable, response: &str| {
        let clean = filter_table(t, &FilterPolicy::bundled(t.kind)).table;
        encode_dataset(&clean, &EncodingSchema::bundled(t.kind), &lex, response)
    };
    Ok((
        encode(&tables.traditional, BORROWER_RATE)?,
        encode(&tables.bidding, LOAN_STATUS)?,
    ))
}

/// Regression data with `p` standard-normal features `x0..x{p-1}` and
/// `y = Σ w_j x_j + noise_sd · ε` for the listed `(j, w_j)` pairs.
pub fn planted(n: usize, p: usize, weights: &[(usize, f64)], noise_sd: f64, seed: u64) -> Result<Dataset> {
    if n == 0 || p == 0 {
        return Err(Error::invalid("planted data needs rows and features"));
    }
    if let Some((j, _)) = weights.iter().find(|(j, _)| *j >= p) {
        return Err(Error::invalid(format!("planted feature index {j} out of range")));
    }
    let mut r = rng::stream(seed, 0);
    let data: Vec<f64> = (0..n * p).map(|_| normal(&mut r)).collect();
    let x = Matrix::new(n, p, data)?;
    let y = (0..n)
        .map(|i| {
            let signal: f64 = weights.iter().map(|&(j, w)| w * x.get(i, j)).sum();
            signal + noise_sd * normal(&mut r)
        })
        .collect();
    let names = (0..p).map(|j| format!("x{j}")).collect();
    Dataset::new(DatasetKind::Traditional, names, x, y, "y", Target::Continuous)
}

fn record_fields(t: &RawTable, row: &[Cell], into: &mut BTreeMap<String, String>) {
    let responses = super::columns::response_columns(t.kind);
    for (c, cell) in t.columns.iter().zip(row) {
        if c.known && !responses.contains(&c.name.as_str()) && !cell.is_missing() {
            into.entry(c.name.clone()).or_insert_with(|| cell.render());
        }
    }
}

/// A seeded sample of past loans from the synthetic exports; see
/// [`sample_history`].
pub fn synth_history(
    cfg: &SynthConfig,
    n_traditional: usize,
    n_bidding: usize,
    seed: u64,
) -> Result<Vec<crate::recommend::HistoricalLoan>> {
    if n_traditional > cfg.n_traditional || n_bidding > cfg.n_bidding {
        return Err(Error::invalid("history sample is larger than the synthetic exports"));
    }
    let tables = synth_tables(cfg, seed)?;
    sample_history(&tables.traditional, &tables.bidding, n_traditional, n_bidding, seed)
}

/// A seeded sample of past loans of both types for portfolio evaluation.
/// Each borrower gets the fields of both loan types: the loan's own export
/// row, completed with a random same-grade row of the other export. Rows
/// without a grade, a numeric rate or (for bidding) a known status are
/// never drawn.
pub fn sample_history(
    traditional: &RawTable,
    bidding: &RawTable,
    n_traditional: usize,
    n_bidding: usize,
    seed: u64,
) -> Result<Vec<crate::recommend::HistoricalLoan>> {
    use crate::encoding::EncodingSchema;
    use crate::recommend::{BorrowerRecord, HistoricalLoan};
    use rand::seq::index::sample;

    let lex = SentimentLexicon::bundled();
    let status_schema = EncodingSchema::bundled(DatasetKind::Bidding);
    let grade_of = |t: &RawTable, row: &[Cell]| -> Option<usize> {
        let j = t.column_index("ProsperGrade")?;
        GRADES.iter().position(|g| row[j].render() == *g)
    };
    let rate_of = |t: &RawTable, row: &[Cell]| match t.column_index(BORROWER_RATE).map(|j| &row[j]) {
        Some(Cell::Num(v)) => Some(*v),
        _ => None,
    };
    let funded_of = |t: &RawTable, row: &[Cell]| -> Option<bool> {
        match t.kind {
            DatasetKind::Traditional => Some(true),
            DatasetKind::Bidding => {
                let j = t.column_index(LOAN_STATUS)?;
                let v = row[j].render();
                let f = |name: &str| (name == LOAN_STATUS).then(|| v.clone());
                status_schema.encode_feature(LOAN_STATUS, &f, &lex).ok().map(|x| x == 1.0)
            }
        }
    };
    let by_grade = |t: &RawTable| {
        let mut out = vec![Vec::new(); GRADES.len()];
        for (i, row) in t.rows.iter().enumerate() {
            if let Some(g) = grade_of(t, row) {
                out[g].push(i);
            }
        }
        out
    };
    for (t, kind) in [(traditional, DatasetKind::Traditional), (bidding, DatasetKind::Bidding)] {
        if t.kind != kind {
            return Err(Error::invalid(format!("expected a {kind} export, got {}", t.kind)));
        }
    }
    let (trad_by_grade, bid_by_grade) = (by_grade(traditional), by_grade(bidding));
    let mut r = rng::stream(seed, 4);

    let mut out = Vec::with_capacity(n_traditional + n_bidding);
    let picks = [
        (traditional, bidding, &bid_by_grade, n_traditional),
        (bidding, traditional, &trad_by_grade, n_bidding),
    ];
    for (own, other, other_by_grade, n) in picks {
        let usable: Vec<usize> = (0..own.n_rows())
            .filter(|&i| {
                let row = &own.rows[i];
                grade_of(own, row).is_some() && rate_of(own, row).is_some() && funded_of(own, row).is_some()
            })
            .collect();
        if n > usable.len() {
            return Err(Error::invalid(format!(
                "history sample of {n} {} loans, but only {} usable rows",
                own.kind,
                usable.len()
            )));
        }
        let mut idx: Vec<usize> = sample(&mut r, usable.len(), n).into_iter().map(|k| usable[k]).collect();
        idx.sort_unstable();
        for i in idx {
            let row = &own.rows[i];
            let grade = grade_of(own, row).expect("usable row");
            let mut fields = BTreeMap::new();
            record_fields(own, row, &mut fields);
            if let Some(&m) = other_by_grade[grade].choose(&mut r) {
                record_fields(other, &other.rows[m], &mut fields);
            }
            out.push(HistoricalLoan {
                record: BorrowerRecord {
                    id: Some(format!("{}-{}", own.kind, i + 1)),
                    fields,
                },
                loan_type: own.kind,
                rate: rate_of(own, row).expect("usable row"),
                funded: funded_of(own, row).expect("usable row"),
            });
        }
    }
    Ok(out)
}
