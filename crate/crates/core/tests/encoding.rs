use lendwise_core::data::{filter_table, read_table, DatasetKind, FilterPolicy};
use lendwise_core::encoding::*;
use proptest::prelude::*;

fn strings(v: &[&str]) -> Vec<String> {
    v.iter().map(|s| s.to_string()).collect()
}

#[test]
fn grade_map_is_fixed() {
    let classes = strings(&["AA", "A", "B", "C", "D", "E", "HR"]);
    let codes = encode_ordinal("ProsperGrade", &["AA", "A", "B", "C", "D", "E", "HR"], &classes).unwrap();
    assert_eq!(codes, vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0]);
    assert_eq!(decode_ordinal(&codes, &classes).unwrap(), classes);
    assert!(encode_ordinal("ProsperGrade", &["AAA"], &classes).is_err());
}

#[test]
fn bundled_schemas_fix_the_binary_maps() {
    let bid = EncodingSchema::bundled(DatasetKind::Bidding);
    let expect = [
        ("Homeownership", ["Not own", "Own"]),
        ("FundingOption", ["Close when funded", "Open for duration"]),
    ];
    for (col, classes) in expect {
        match bid.rule(col) {
            Some(Rule::Binary { classes: Some(c) }) => assert_eq!(c.to_vec(), strings(&classes)),
            other => panic!("{col}: {other:?}"),
        }
        let codes = encode_binary(col, &[classes[0], classes[1]], &[classes[0].into(), classes[1].into()]).unwrap();
        assert_eq!(codes, vec![0.0, 1.0]);
    }
    match bid.rule("ProsperGrade") {
        Some(Rule::Ordinal { classes: Some(c) }) => assert_eq!(c, &strings(&["AA", "A", "B", "C", "D", "E", "HR"])),
        other => panic!("{other:?}"),
    }
    let trad = EncodingSchema::bundled(DatasetKind::Traditional);
    assert!(matches!(trad.rule("BorrowerRate"), Some(Rule::ResponseRate)));
    assert_eq!(trad.sentiment_column(), Some("Description"));
}

#[test]
fn sentiment_of_a_short_purpose_line() {
    let lex = SentimentLexicon::bundled();
    let s = sentiment_score("Payoff Credit Cards", &lex);
    assert!((s - 0.3818).abs() <= 0.05, "{s}");
    assert_eq!(sentiment_score("", &lex), 0.0);
    assert!(sentiment_score("This is a terrible, awful loan", &lex) < 0.0);
    assert!(sentiment_score("not good", &lex) < 0.0);
    let plain = sentiment_score("good", &lex);
    let boosted = sentiment_score("very good", &lex);
    assert!(boosted > plain && plain > 0.0);
}

#[test]
fn tokenizer_keeps_contractions() {
    assert_eq!(tokenize("I don't-know, REALLY!"), vec!["i", "don't-know", "really"]);
}

#[test]
fn schema_parse_errors_carry_line_numbers() {
    let err = EncodingSchema::parse("A = numeric\nB = fancy\n", "x.schema").unwrap_err();
    assert!(err.to_string().contains("x.schema:2"), "{err}");
    let ok = EncodingSchema::parse("# comment\n\nX = binary no | yes\nL = length T\nT = sentiment\n", "y").unwrap();
    assert!(matches!(ok.rule("L"), Some(Rule::Length { source }) if source == "T"));
}

const BIDDING_CSV: &str = "\
BorrowerRate,BorrowerMaximumRate,ProsperGrade,Homeownership,DebtToIncomeRatio,LoanAmount,FundingOption,Images,Duration,BorrowerState,EmploymentStatus,HasVerifiedBankAccount,Description,LoanStatus
0.20,0.25,AA,Own,0.1,1000,Close when funded,1,7,CA,1,True,Payoff Credit Cards,Completed
0.25,0.25,HR,Not own,0.4,2000,Open for duration,0,10,TX,2,False,ok,Expired
0.18,0.30,B,Own,0.2,1500,Open for duration,2,7,CA,1,True,abc,Current
0.30,0.35,E,Not own,0.3,2500,Close when funded,0,14,NY,3,False,I need help,Cancelled
";

#[test]
fn bidding_export_encodes_end_to_end() {
    let t = read_table(BIDDING_CSV.as_bytes(), DatasetKind::Bidding).unwrap();
    let f = filter_table(&t, &FilterPolicy::bundled(DatasetKind::Bidding));
    let lex = SentimentLexicon::bundled();
    let schema = EncodingSchema::bundled(DatasetKind::Bidding);
    let d = encode_dataset(&f.table, &schema, &lex, "LoanStatus").unwrap();
    assert_eq!(d.y, vec![1.0, 0.0, 1.0, 0.0]);
    assert!(!d.feature_names.iter().any(|n| n == "BorrowerRate" || n == "LoanStatus"));
    assert_eq!(d.column("ProsperGrade").unwrap(), vec![1.0, 7.0, 3.0, 6.0]);
    assert_eq!(d.column("Homeownership").unwrap(), vec![1.0, 0.0, 1.0, 0.0]);
    assert_eq!(d.column("FundingOption").unwrap(), vec![0.0, 1.0, 1.0, 0.0]);
    assert_eq!(d.column("HasVerifiedBankAccount").unwrap(), vec![1.0, 0.0, 1.0, 0.0]);
    assert_eq!(d.column("DescriptionLength").unwrap(), vec![19.0, 2.0, 3.0, 11.0]);
    let s = d.column(SENTIMENT_FEATURE).unwrap();
    assert!((s[0] - sentiment_score("Payoff Credit Cards", &lex)).abs() < 1e-15);
    // Lexicographic state codes.
    assert_eq!(d.column("BorrowerState").unwrap(), vec![1.0, 3.0, 1.0, 2.0]);

    let rates = encode_dataset(&f.table, &schema, &lex, "BorrowerRate").unwrap();
    assert_eq!(rates.y, vec![0.20, 0.25, 0.18, 0.30]);
    assert_eq!(rates.feature_names, d.feature_names);
}

#[test]
fn missing_description_scores_zero_before_filtering() {
    let csv = BIDDING_CSV.replace("False,ok,Expired", "False,,Expired");
    let t = read_table(csv.as_bytes(), DatasetKind::Bidding).unwrap();
    let schema = EncodingSchema::bundled(DatasetKind::Bidding);
    let d = encode_dataset(&t, &schema, &SentimentLexicon::bundled(), "LoanStatus").unwrap();
    assert_eq!(d.column(SENTIMENT_FEATURE).unwrap()[1], 0.0);
    assert_eq!(d.column("DescriptionLength").unwrap()[1], 0.0);
    let f = filter_table(&t, &FilterPolicy::bundled(DatasetKind::Bidding));
    assert_eq!(f.table.n_rows(), 3);
}

#[test]
fn unknown_status_is_rejected() {
    let csv = BIDDING_CSV.replace("Cancelled", "Lost");
    let t = read_table(csv.as_bytes(), DatasetKind::Bidding).unwrap();
    let schema = EncodingSchema::bundled(DatasetKind::Bidding);
    assert!(encode_dataset(&t, &schema, &SentimentLexicon::bundled(), "LoanStatus").is_err());
}

#[test]
fn non_response_column_cannot_be_the_target() {
    let t = read_table(BIDDING_CSV.as_bytes(), DatasetKind::Bidding).unwrap();
    let schema = EncodingSchema::bundled(DatasetKind::Bidding);
    assert!(encode_dataset(&t, &schema, &SentimentLexicon::bundled(), "LoanAmount").is_err());
}

proptest! {
    #[test]
    fn compound_closed_form(s in -50.0f64..50.0) {
        let want = s / (s * s + 15.0).sqrt();
        prop_assert!((compound(s) - want).abs() < 1e-12);
    }

    #[test]
    fn scores_are_bounded(text in "[a-zA-Z !,.']{0,80}") {
        let s = sentiment_score(&text, &SentimentLexicon::bundled());
        prop_assert!((-1.0..=1.0).contains(&s));
    }
}
