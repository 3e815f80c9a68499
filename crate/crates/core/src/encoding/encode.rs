use super::schema::{encode_value, EncodingSchema, Rule, SENTIMENT_FEATURE};
use super::sentiment::SentimentLexicon;
use crate::data::{Cell, ColumnKind, Dataset, RawTable, Target};
use crate::{Error, Matrix, Result};

/// `class0 → 0`, `class1 → 1`.
pub fn encode_binary<S: AsRef<str>>(column: &str, values: &[S], classes: &[String; 2]) -> Result<Vec<f64>> {
    values
        .iter()
        .map(|v| {
            let v = v.as_ref();
            if v == classes[0] {
                Ok(0.0)
            } else if v == classes[1] {
                Ok(1.0)
            } else {
                Err(Error::UnseenClass {
                    column: column.to_string(),
                    value: v.to_string(),
                })
            }
        })
        .collect()
}

/// The i-th class (1-based) of `classes` maps to `i`.
pub fn encode_ordinal<S: AsRef<str>>(column: &str, values: &[S], classes: &[String]) -> Result<Vec<f64>> {
    values
        .iter()
        .map(|v| {
            let v = v.as_ref();
            classes
                .iter()
                .position(|c| c == v)
                .map(|i| (i + 1) as f64)
                .ok_or_else(|| Error::UnseenClass {
                    column: column.to_string(),
                    value: v.to_string(),
                })
        })
        .collect()
}

pub fn decode_ordinal(codes: &[f64], classes: &[String]) -> Result<Vec<String>> {
    codes
        .iter()
        .map(|&c| {
            let i = c as usize;
            if c.fract() != 0.0 || i == 0 || i > classes.len() {
                return Err(Error::invalid(format!("ordinal code {c} out of range 1..={}", classes.len())));
            }
            Ok(classes[i - 1].clone())
        })
        .collect()
}

/// Encodes a cleaned table into a numeric dataset with `response` as y.
///
/// Feature order follows the table; text columns under a `sentiment` rule
/// become [`SENTIMENT_FEATURE`] in place, `length` rules are appended.
/// Every response column named by the schema is kept out of X.
pub fn encode_dataset(
    t: &RawTable,
    schema: &EncodingSchema,
    lex: &SentimentLexicon,
    response: &str,
) -> Result<Dataset> {
    let schema = schema.resolve(t)?;
    let target = match schema.rule(response) {
        Some(Rule::ResponseRate) => Target::Rate,
        Some(Rule::ResponseStatus { .. }) => Target::Funded,
        _ => {
            return Err(Error::invalid(format!(
                "`{response}` is not a response column of the schema"
            )))
        }
    };
    let ri = t
        .column_index(response)
        .ok_or_else(|| Error::MissingColumn(response.to_string()))?;

    enum Source {
        Column(usize, Rule),
        Length(usize),
    }
    let mut names = Vec::new();
    let mut sources = Vec::new();
    for (j, c) in t.columns.iter().enumerate() {
        let rule = schema.rule(&c.name).cloned();
        match rule {
            Some(r) if r.is_response() => continue,
            Some(Rule::Length { .. }) => continue,
            Some(Rule::Sentiment) => names.push(SENTIMENT_FEATURE.to_string()),
            Some(_) => names.push(c.name.clone()),
            None if c.kind == ColumnKind::Numerical => names.push(c.name.clone()),
            None => {
                return Err(Error::invalid(format!("no encoding rule for column `{}`", c.name)));
            }
        }
        sources.push(Source::Column(j, rule.unwrap_or(Rule::Numeric)));
    }
    for (name, rule) in &schema.rules {
        if let Rule::Length { source } = rule {
            if let Some(j) = t.column_index(source) {
                names.push(name.clone());
                sources.push(Source::Length(j));
            }
        }
    }

    let response_rule = schema.rule(response).expect("checked above").clone();
    let mut data = Vec::with_capacity(t.n_rows() * names.len());
    let mut y = Vec::with_capacity(t.n_rows());
    for (i, row) in t.rows.iter().enumerate() {
        let missing = |name: &str| Error::invalid(format!("missing value in column `{name}` at row {}", i + 1));
        for src in &sources {
            let v = match src {
                Source::Length(j) => match &row[*j] {
                    Cell::Missing => 0.0,
                    c => c.render().chars().count() as f64,
                },
                Source::Column(j, rule) => match (&row[*j], rule) {
                    (Cell::Missing, Rule::Sentiment) => 0.0,
                    (Cell::Missing, _) => return Err(missing(&t.columns[*j].name)),
                    (Cell::Num(x), Rule::Numeric) => *x,
                    (c, r) => encode_value(&t.columns[*j].name, r, &c.render(), lex).map_err(|e| row_context(e, i))?,
                },
            };
            data.push(v);
        }
        let yv = match &row[ri] {
            Cell::Missing => return Err(missing(response)),
            Cell::Num(x) if response_rule == Rule::ResponseRate => *x,
            c => encode_value(response, &response_rule, &c.render(), lex).map_err(|e| row_context(e, i))?,
        };
        y.push(yv);
    }
    let x = Matrix::new(t.n_rows(), names.len(), data)?;
    Dataset::new(t.kind, names, x, y, response, target)
}

fn row_context(e: Error, i: usize) -> Error {
    match e {
        Error::ParseNumber { column, value, .. } => Error::ParseNumber { column, row: i + 1, value },
        other => other,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grades() -> Vec<String> {
        ["AA", "A", "B", "C", "D", "E", "HR"].map(String::from).to_vec()
    }

    #[test]
    fn ordinal_roundtrip() {
        let g = grades();
        let codes = encode_ordinal("ProsperGrade", &g, &g).unwrap();
        assert_eq!(codes, vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0]);
        assert_eq!(decode_ordinal(&codes, &g).unwrap(), g);
        assert_eq!(encode_ordinal("ProsperGrade", &["B", "D"], &g).unwrap(), vec![3.0, 5.0]);
        assert!(decode_ordinal(&[8.0], &g).is_err());
        assert!(decode_ordinal(&[1.5], &g).is_err());
    }

    #[test]
    fn unseen_class_names_column_and_value() {
        let err = encode_ordinal("ProsperGrade", &["Z"], &grades()).unwrap_err();
        assert!(matches!(err, Error::UnseenClass { ref column, ref value } if column == "ProsperGrade" && value == "Z"));
        let err = encode_binary("Homeownership", &["Rent"], &["Not own".into(), "Own".into()]).unwrap_err();
        assert!(err.to_string().contains("Rent"));
    }
}
