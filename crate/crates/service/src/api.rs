//! Request and response bodies, and the calls they map to.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use lendwise_core::encoding::{sentiment_score, SentimentLexicon, SENTIMENT_FEATURE};
use lendwise_core::recommend::{self, BorrowerRecord, FieldSpec, ModelBundle, Recommendation, BUNDLE_FORMAT, BUNDLE_VERSION};
use lendwise_core::Error;

pub const MAX_RATE_FIELD: &str = "BorrowerMaximumRate";
pub const LOAN_AMOUNT_FIELD: &str = "LoanAmount";
/// Upper bound on the number of points in one what-if request.
pub const MAX_WHATIF_POINTS: usize = 1001;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FieldError {
    pub field: String,
    pub message: String,
}

impl FieldError {
    fn new(field: impl Into<String>, message: impl Into<String>) -> Self {
        FieldError {
            field: field.into(),
            message: message.into(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ErrorKind {
    /// 400: the body does not parse or a value is out of range.
    Malformed,
    /// 422: a field the models need was not supplied.
    MissingFeature,
    /// 500.
    Internal,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ApiError {
    pub kind: ErrorKind,
    pub message: String,
    pub fields: Vec<FieldError>,
}

impl ApiError {
    fn malformed(fields: Vec<FieldError>) -> Self {
        ApiError {
            kind: ErrorKind::Malformed,
            message: "malformed request".into(),
            fields,
        }
    }

    pub fn body(&self) -> Value {
        json!({ "error": self.message, "fields": self.fields })
    }
}

impl From<Error> for ApiError {
    fn from(e: Error) -> Self {
        let (kind, fields) = match &e {
            Error::MissingFeature(f) => (ErrorKind::MissingFeature, vec![FieldError::new(f, "required")]),
            Error::ParseNumber { column, value, .. } => (
                ErrorKind::Malformed,
                vec![FieldError::new(column, format!("`{value}` is not a number"))],
            ),
            Error::UnseenClass { column, value } => (
                ErrorKind::Malformed,
                vec![FieldError::new(column, format!("unknown value `{value}`"))],
            ),
            _ => (ErrorKind::Internal, Vec::new()),
        };
        ApiError {
            kind,
            message: e.to_string(),
            fields,
        }
    }
}

/// A borrower's answers. `fields` holds raw values keyed by column name;
/// the optional extras override the matching columns.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RecommendRequest {
    pub id: Option<String>,
    pub fields: BTreeMap<String, String>,
    pub description: Option<String>,
    pub max_rate: Option<f64>,
    /// Replaces the description's sentiment score.
    pub sentiment: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RecommendResponse {
    pub id: Option<String>,
    /// Sentiment fed to the models: the override if given, otherwise the
    /// score of the description.
    pub sentiment: f64,
    pub recommendation: Recommendation,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WhatIfField {
    MaxRate,
    Sentiment,
    LoanAmount,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WhatIfRequest {
    pub base: RecommendRequest,
    pub field: WhatIfField,
    pub values: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WhatIfResponse {
    pub id: Option<String>,
    pub field: WhatIfField,
    pub values: Vec<f64>,
    pub responses: Vec<RecommendResponse>,
}

fn object<'a>(v: &'a Value, path: &str, errs: &mut Vec<FieldError>) -> Option<&'a Map<String, Value>> {
    match v {
        Value::Object(m) => Some(m),
        _ => {
            errs.push(FieldError::new(path, "expected an object"));
            None
        }
    }
}

fn join(prefix: &str, key: &str) -> String {
    if prefix.is_empty() {
        key.to_string()
    } else {
        format!("{prefix}.{key}")
    }
}

fn number_in(
    m: &Map<String, Value>,
    prefix: &str,
    key: &str,
    lo: f64,
    hi: f64,
    errs: &mut Vec<FieldError>,
) -> Option<f64> {
    match m.get(key) {
        None | Some(Value::Null) => None,
        Some(Value::Number(n)) => match n.as_f64() {
            Some(x) if (lo..=hi).contains(&x) => Some(x),
            _ => {
                errs.push(FieldError::new(join(prefix, key), format!("must be in [{lo}, {hi}]")));
                None
            }
        },
        Some(_) => {
            errs.push(FieldError::new(join(prefix, key), "expected a number"));
            None
        }
    }
}

impl RecommendRequest {
    /// Validates a parsed body, collecting one message per bad field.
    pub fn from_json(v: &Value) -> Result<Self, ApiError> {
        let mut errs = Vec::new();
        let r = Self::parse(v, "", &mut errs);
        if errs.is_empty() {
            Ok(r)
        } else {
            Err(ApiError::malformed(errs))
        }
    }

    fn parse(v: &Value, prefix: &str, errs: &mut Vec<FieldError>) -> Self {
        let mut r = RecommendRequest::default();
        let Some(m) = object(v, if prefix.is_empty() { "body" } else { prefix }, errs) else {
            return r;
        };
        for key in m.keys() {
            if !["id", "fields", "description", "max_rate", "sentiment"].contains(&key.as_str()) {
                errs.push(FieldError::new(join(prefix, key), "unknown field"));
            }
        }
        match m.get("id") {
            None | Some(Value::Null) => {}
            Some(Value::String(s)) => r.id = Some(s.clone()),
            Some(Value::Number(n)) => r.id = Some(n.to_string()),
            Some(_) => errs.push(FieldError::new(join(prefix, "id"), "expected a string")),
        }
        match m.get("fields") {
            None => errs.push(FieldError::new(join(prefix, "fields"), "required")),
            Some(f) => {
                if let Some(fm) = object(f, &join(prefix, "fields"), errs) {
                    for (k, v) in fm {
                        let path = join(&join(prefix, "fields"), k);
                        match v {
                            Value::String(s) => {
                                r.fields.insert(k.clone(), s.clone());
                            }
                            Value::Number(n) => {
                                r.fields.insert(k.clone(), n.to_string());
                            }
                            Value::Bool(b) => {
                                r.fields.insert(k.clone(), b.to_string());
                            }
                            Value::Null => {}
                            _ => errs.push(FieldError::new(path, "expected a string or number")),
                        }
                    }
                }
            }
        }
        match m.get("description") {
            None | Some(Value::Null) => {}
            Some(Value::String(s)) => r.description = Some(s.clone()),
            Some(_) => errs.push(FieldError::new(join(prefix, "description"), "expected a string")),
        }
        r.max_rate = number_in(m, prefix, "max_rate", 0.0, 1.0, errs);
        r.sentiment = number_in(m, prefix, "sentiment", -1.0, 1.0, errs);
        r
    }
}

impl WhatIfRequest {
    pub fn from_json(v: &Value) -> Result<Self, ApiError> {
        let mut errs = Vec::new();
        let mut base = RecommendRequest::default();
        let mut field = WhatIfField::Sentiment;
        let mut values = Vec::new();
        if let Some(m) = object(v, "body", &mut errs) {
            for key in m.keys() {
                if !["base", "field", "values"].contains(&key.as_str()) {
                    errs.push(FieldError::new(key, "unknown field"));
                }
            }
            match m.get("base") {
                Some(b) => base = RecommendRequest::parse(b, "base", &mut errs),
                None => errs.push(FieldError::new("base", "required")),
            }
            match m.get("field").map(|f| serde_json::from_value::<WhatIfField>(f.clone())) {
                Some(Ok(f)) => field = f,
                Some(Err(_)) => errs.push(FieldError::new("field", "expected max_rate, sentiment or loan_amount")),
                None => errs.push(FieldError::new("field", "required")),
            }
            match m.get("values") {
                Some(Value::Array(a)) if a.is_empty() => errs.push(FieldError::new("values", "must not be empty")),
                Some(Value::Array(a)) if a.len() > MAX_WHATIF_POINTS => {
                    errs.push(FieldError::new("values", format!("at most {MAX_WHATIF_POINTS} points")))
                }
                Some(Value::Array(a)) => {
                    for (i, x) in a.iter().enumerate() {
                        match x.as_f64() {
                            Some(x) => values.push(x),
                            None => errs.push(FieldError::new(format!("values[{i}]"), "expected a number")),
                        }
                    }
                }
                Some(_) => errs.push(FieldError::new("values", "expected an array of numbers")),
                None => errs.push(FieldError::new("values", "required")),
            }
        }
        let (lo, hi) = match field {
            WhatIfField::MaxRate => (0.0, 1.0),
            WhatIfField::Sentiment => (-1.0, 1.0),
            WhatIfField::LoanAmount => (0.0, f64::MAX),
        };
        for (i, x) in values.iter().enumerate() {
            if !(lo..=hi).contains(x) {
                errs.push(FieldError::new(format!("values[{i}]"), format!("must be in [{lo}, {hi}]")));
            }
        }
        if errs.is_empty() {
            Ok(WhatIfRequest { base, field, values })
        } else {
            Err(ApiError::malformed(errs))
        }
    }
}

/// The loaded bundle and lexicon; read-only once built.
#[derive(Clone, Debug)]
pub struct Advisor {
    pub bundle: ModelBundle,
    pub lexicon: SentimentLexicon,
}

impl Advisor {
    pub fn new(bundle: ModelBundle, lexicon: SentimentLexicon) -> lendwise_core::Result<Self> {
        bundle.validate()?;
        Ok(Advisor { bundle, lexicon })
    }

    /// The borrower record the request describes.
    pub fn record(&self, req: &RecommendRequest) -> BorrowerRecord {
        let mut b = BorrowerRecord::new(req.fields.clone());
        b.id = req.id.clone();
        if let Some(d) = &req.description {
            let col = self.bundle.bidding_schema.sentiment_column().unwrap_or("Description");
            b = b.with_field(col, d);
        }
        if let Some(r) = req.max_rate {
            b = b.with_field(MAX_RATE_FIELD, r);
        }
        if let Some(g) = req.sentiment {
            b = b.with_field(SENTIMENT_FEATURE, g);
        }
        b
    }

    pub fn recommend(&self, req: &RecommendRequest) -> Result<RecommendResponse, ApiError> {
        let record = self.record(req);
        let missing = recommend::missing_fields(&record, &self.bundle);
        if !missing.is_empty() {
            return Err(ApiError {
                kind: ErrorKind::MissingFeature,
                message: format!("missing feature `{}`", missing[0]),
                fields: missing.into_iter().map(|f| FieldError::new(f, "required")).collect(),
            });
        }
        let recommendation = recommend::recommend(&record, &self.bundle, &self.lexicon)?;
        let sentiment = req
            .sentiment
            .unwrap_or_else(|| sentiment_score(req.description.as_deref().unwrap_or(""), &self.lexicon));
        Ok(RecommendResponse {
            id: req.id.clone(),
            sentiment,
            recommendation,
        })
    }

    /// One recommendation per value, with `field` overridden.
    pub fn whatif(&self, req: &WhatIfRequest) -> Result<WhatIfResponse, ApiError> {
        let responses = req
            .values
            .iter()
            .map(|&x| {
                let mut r = req.base.clone();
                match req.field {
                    WhatIfField::MaxRate => r.max_rate = Some(x),
                    WhatIfField::Sentiment => r.sentiment = Some(x),
                    WhatIfField::LoanAmount => {
                        r.fields.insert(LOAN_AMOUNT_FIELD.into(), x.to_string());
                    }
                }
                self.recommend(&r)
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(WhatIfResponse {
            id: req.base.id.clone(),
            field: req.field,
            values: req.values.clone(),
            responses,
        })
    }

    pub fn health(&self) -> Value {
        let models: Vec<Value> = [
            ("traditional_rate", &self.bundle.traditional_rate),
            ("bidding_rate", &self.bundle.bidding_rate),
            ("bidding_success", &self.bundle.bidding_success),
        ]
        .into_iter()
        .map(|(name, m)| {
            json!({
                "name": name,
                "kind": m.kind().to_string(),
                "task": m.spec.task,
                "features": m.feature_names,
                "n_train": m.n_train,
            })
        })
        .collect();
        json!({
            "status": "ok",
            "format": BUNDLE_FORMAT,
            "version": BUNDLE_VERSION,
            "models": models,
            "optimal_sentiment": self.bundle.optimal_sentiment,
        })
    }

    pub fn schema(&self) -> SchemaResponse {
        SchemaResponse {
            fields: self.bundle.input_fields(),
            optimal_sentiment: self.bundle.optimal_sentiment,
            whatif_fields: vec![WhatIfField::MaxRate, WhatIfField::Sentiment, WhatIfField::LoanAmount],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SchemaResponse {
    pub fields: Vec<FieldSpec>,
    pub optimal_sentiment: Option<f64>,
    pub whatif_fields: Vec<WhatIfField>,
}
