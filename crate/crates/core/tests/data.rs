use lendwise_core::data::synth::*;
use lendwise_core::data::*;
use lendwise_core::encoding::SENTIMENT_FEATURE;
use proptest::prelude::*;

#[test]
fn split_sizes_match_the_experiment_layout() {
    let plan = SplitPlan::default();
    for (tr, te) in split_indices(10_000, None, &plan).unwrap() {
        assert_eq!((tr.len(), te.len()), (8000, 2000));
    }
    let labels: Vec<f64> = (0..1816).map(|i| f64::from(u8::from(i < 908))).collect();
    for (tr, te) in split_indices(1816, Some(&labels), &plan).unwrap() {
        assert_eq!((tr.len(), te.len()), (1452, 364));
        let pos = te.iter().filter(|&&i| labels[i] == 1.0).count();
        assert_eq!(pos, 182);
    }
}

#[test]
fn splits_are_seeded() {
    let plan = SplitPlan::new(0.8, 3, 7).unwrap();
    let a = split_indices(100, None, &plan).unwrap();
    assert_eq!(a, split_indices(100, None, &plan).unwrap());
    assert_ne!(a, split_indices(100, None, &plan.with_seed(8)).unwrap());
    assert_ne!(a[0], a[1]);
    assert!(SplitPlan::new(1.0, 5, 0).is_err());
    assert!(SplitPlan::new(0.8, 0, 0).is_err());
}

#[test]
fn blank_and_constant_columns_are_removed() {
    let csv = "BorrowerRate,LoanAmount,Blank,Flag\n0.1,100,,1\n0.2,200,,1\n0.3,300,NA,1\n";
    let t = read_table(csv.as_bytes(), DatasetKind::Traditional).unwrap();
    let f = filter_table(&t, &FilterPolicy::bundled(DatasetKind::Traditional));
    let names = f.table.column_names();
    assert_eq!(names, vec!["BorrowerRate", "LoanAmount"]);
    assert_eq!(f.report.rows_out, 3);
    assert!(f.report.constant_or_blank_columns.contains(&"Blank".to_string()));
}

#[test]
fn post_origination_columns_are_removed() {
    let cfg = SynthConfig {
        n_traditional: 200,
        n_bidding: 200,
        ..SynthConfig::default()
    };
    let tables = synth_tables(&cfg, 3).unwrap();
    assert!(tables.traditional.column_index("LoanCurrentDaysDelinquent").is_some());
    assert!(tables.bidding.column_index("BidCount").is_some());
    let f = filter_table(&tables.bidding, &FilterPolicy::bundled(DatasetKind::Bidding));
    assert!(f.table.column_index("BidCount").is_none());
    assert_eq!(f.report.post_origination_columns, vec!["BidCount".to_string()]);
}

#[test]
fn reading_requires_the_response_columns() {
    assert!(matches!(
        read_table("LoanAmount\n1\n".as_bytes(), DatasetKind::Traditional),
        Err(lendwise_core::Error::MissingColumn(c)) if c == "BorrowerRate"
    ));
    assert!(read_table("BorrowerRate\n0.1\n".as_bytes(), DatasetKind::Bidding).is_err());
    assert!(read_table("BorrowerRate,LoanAmount\n0.1,abc\n".as_bytes(), DatasetKind::Traditional).is_err());
}

#[test]
fn synthetic_exports_have_the_modelled_shape() {
    let (trad, bid) = synth_generate(&SynthConfig::default(), 1).unwrap();
    assert_eq!((trad.n_rows(), trad.n_features()), (10_000, 31));
    assert_eq!((bid.n_rows(), bid.n_features()), (12_006, 13));
    assert!(bid.feature_index(SENTIMENT_FEATURE).is_some());
    let funded = bid.y.iter().filter(|v| **v == 1.0).count();
    assert_eq!(funded, (0.076f64 * 12_006.0).round() as usize);
}

#[test]
fn zero_spread_reproduces_the_grade_means() {
    let cfg = SynthConfig {
        n_traditional: 700,
        n_bidding: 700,
        grade_rate_sd: 0.0,
        ..SynthConfig::default()
    };
    let t = synth_tables(&cfg, 5).unwrap().traditional;
    let g = t.column_index("ProsperGrade").unwrap();
    let r = t.column_index("BorrowerRate").unwrap();
    for row in &t.rows {
        let k = GRADES.iter().position(|x| *x == row[g].render()).unwrap();
        assert_eq!(row[r], Cell::Num(TRADITIONAL_GRADE_MEANS[k]));
    }
}

#[test]
fn synthetic_data_is_seeded() {
    let cfg = SynthConfig {
        n_traditional: 300,
        n_bidding: 300,
        ..SynthConfig::default()
    };
    assert_eq!(synth_tables(&cfg, 9).unwrap(), synth_tables(&cfg, 9).unwrap());
    assert_ne!(synth_tables(&cfg, 9).unwrap(), synth_tables(&cfg, 10).unwrap());
}

#[test]
fn synthetic_config_is_validated() {
    let bad = SynthConfig {
        funded_fraction: 1.5,
        ..SynthConfig::default()
    };
    assert!(bad.validate().is_err());
    let planted_text = SynthConfig {
        planted_coefficients: Some([("Occupation".to_string(), 1.0)].into()),
        ..SynthConfig::default()
    };
    assert!(planted_text.validate().is_err());
}

#[test]
fn balanced_sample_has_equal_classes() {
    let (_, bid) = synth_generate(
        &SynthConfig {
            n_traditional: 100,
            n_bidding: 2000,
            ..SynthConfig::default()
        },
        2,
    )
    .unwrap();
    let b = bid.balanced(4);
    let pos = b.y.iter().filter(|v| **v == 1.0).count();
    assert_eq!(b.n_rows(), 2 * pos);
    assert_eq!(bid.filter_response(1.0).n_rows(), pos);
}

fn table_strategy() -> impl Strategy<Value = Vec<Vec<Option<u8>>>> {
    prop::collection::vec(prop::collection::vec(prop::option::weighted(0.85, 0u8..4), 4), 1..30)
}

proptest! {
    #[test]
    fn filtering_is_idempotent(rows in table_strategy()) {
        let mut csv = String::from("BorrowerRate,LoanAmount,Term,Images\n");
        for r in &rows {
            let cells: Vec<String> = r
                .iter()
                .enumerate()
                .map(|(j, c)| match c {
                    None => String::new(),
                    Some(v) if j == 0 => format!("0.{v}"),
                    Some(v) => v.to_string(),
                })
                .collect();
            csv.push_str(&cells.join(","));
            csv.push('\n');
        }
        let t = read_table(csv.as_bytes(), DatasetKind::Traditional).unwrap();
        let p = FilterPolicy::bundled(DatasetKind::Traditional);
        let once = filter_table(&t, &p);
        let twice = filter_table(&once.table, &p);
        prop_assert_eq!(&once.table, &twice.table);
        for row in &once.table.rows {
            prop_assert!(row.iter().all(|c| !c.is_missing()));
        }
    }

    #[test]
    fn stratified_splits_partition_rows(n in 10usize..200, ratio in 0.5f64..0.9, seed in 0u64..1000) {
        let labels: Vec<f64> = (0..n).map(|i| f64::from(u8::from(i % 3 == 0))).collect();
        let plan = SplitPlan::new(ratio, 2, seed).unwrap();
        for (tr, te) in split_indices(n, Some(&labels), &plan).unwrap() {
            prop_assert_eq!(tr.len() + te.len(), n);
            prop_assert_eq!(te.len(), plan.test_size(n));
            let mut all: Vec<usize> = tr.iter().chain(&te).copied().collect();
            all.sort_unstable();
            prop_assert_eq!(all, (0..n).collect::<Vec<_>>());
        }
    }
}
