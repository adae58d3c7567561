use std::fs;

use chrono::NaiveDate;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{ChiSquared, ContinuousCDF};
use wavecast::data::{
    assemble_panel, build_features, generate_synthetic, holdout_split, load_items, load_records,
    load_test_records, sample_batch, training_start_range, write_items, write_records, write_test_records,
    DateRange, ItemTable, LagConfig, Panel, RawRecord, SeriesKey, SyntheticConfig, TestRecord, HORIZON,
};
use wavecast::nn::Tensor;
use wavecast::Error;

const HEADER: &str = "id,date,store_nbr,item_nbr,unit_sales,onpromotion";

fn start() -> NaiveDate {
    NaiveDate::from_ymd_opt(2015, 1, 1).unwrap()
}

fn random_panel(series: usize, days: usize, seed: u64) -> Panel {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sales = (0..series * days).map(|_| rng.random_range(0.0..4.0)).collect();
    let promo = (0..series * (days + HORIZON)).map(|_| f64::from(rng.random_bool(0.2))).collect();
    Panel::new(
        (0..series as u64).map(|i| SeriesKey { store_id: 1, item_id: i }).collect(),
        DateRange::new(start(), days).unwrap(),
        Tensor::from_vec(&[series, days], sales).unwrap(),
        Tensor::from_vec(&[series, days + HORIZON], promo).unwrap(),
        vec![1.0; series],
    )
    .unwrap()
}

#[test]
fn parses_competition_line() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("train.csv");
    fs::write(&path, format!("{HEADER}\n1,2017-08-01,1,103665,7.0,True\n2,2017-08-01,2,5,1.5,\n")).unwrap();
    let recs = load_records(&path).unwrap();
    assert_eq!(
        recs[0],
        RawRecord {
            id: 1,
            date: NaiveDate::from_ymd_opt(2017, 8, 1).unwrap(),
            store_id: 1,
            item_id: 103665,
            unit_sales: 7.0,
            on_promotion: Some(true),
        }
    );
    assert_eq!(recs[1].on_promotion, None);

    fs::write(&path, format!("{HEADER}\n")).unwrap();
    assert!(load_records(&path).unwrap().is_empty());

    fs::write(&path, format!("{HEADER}\n1,2017-08-01,1,5,1.0,False\n2,2017-13-01,1,5,1.0,False\n")).unwrap();
    match load_records(&path) {
        Err(Error::Ingestion { line, .. }) => assert_eq!(line, 3),
        other => panic!("expected ingestion error, got {other:?}"),
    }

    fs::write(&path, "id,date,store_nbr,unit_sales,onpromotion\n").unwrap();
    assert!(matches!(load_records(&path), Err(Error::Schema { .. })));
}

#[test]
fn generated_files_round_trip() {
    let cfg = SyntheticConfig {
        n_series: 12,
        n_days: 90,
        n_stores: 3,
        seed: 5,
        ..SyntheticConfig::default()
    };
    let data = generate_synthetic(&cfg).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let (train, items, test) = (dir.path().join("t.csv"), dir.path().join("i.csv"), dir.path().join("x.csv"));
    write_records(&train, &data.train).unwrap();
    write_items(&items, &data.items).unwrap();
    write_test_records(&test, &data.test).unwrap();

    let recs = load_records(&train).unwrap();
    let future = load_test_records(&test).unwrap();
    let table = ItemTable::new(&load_items(&items).unwrap());
    assert_eq!(recs, data.train);
    assert_eq!(future, data.test);
    let panel = assemble_panel(&recs, &future, &table, DateRange::new(cfg.start_date, cfg.n_days).unwrap()).unwrap();
    assert_eq!(panel.keys, data.panel.keys);
    assert_eq!(panel.weights, data.panel.weights);
    for (a, b) in panel.sales_log.data().iter().zip(data.panel.sales_log.data()) {
        assert!((a - b).abs() < 1e-12);
    }
    assert_eq!(panel.promo, data.panel.promo);
}

#[test]
fn panel_is_dense_with_zero_fill() {
    let day = |d: u32| NaiveDate::from_ymd_opt(2017, 1, d).unwrap();
    let rec = |d, item, sales| RawRecord {
        id: 0,
        date: day(d),
        store_id: 1,
        item_id: item,
        unit_sales: sales,
        on_promotion: None,
    };
    let records = [rec(1, 1, std::f64::consts::E - 1.0), rec(3, 1, -3.0), rec(2, 2, 4.0)];
    // Item 3 only appears in the test period; its history is all zeros.
    let future = [TestRecord {
        id: 9,
        date: day(6),
        store_id: 1,
        item_id: 3,
        on_promotion: Some(true),
    }];
    let panel = assemble_panel(&records, &future, &ItemTable::default(), DateRange::new(day(1), 5).unwrap()).unwrap();
    assert_eq!(panel.sales_log.shape(), [3, 5]);
    assert!(panel.sales_log.data().iter().all(|v| v.is_finite() && *v >= 0.0));
    assert!((panel.sales_log.get2(0, 0) - 1.0).abs() < 1e-15);
    assert_eq!(panel.sales_log.get2(0, 1), 0.0);
    assert_eq!(panel.sales_log.get2(0, 2), 0.0);
    assert!(panel.sales_log.row(2).iter().all(|&v| v == 0.0));
    assert_eq!(panel.promo.get2(2, 5), 1.0);

    let dup = [rec(1, 1, 1.0), rec(1, 1, 2.0)];
    assert!(matches!(
        assemble_panel(&dup, &[], &ItemTable::default(), DateRange::new(day(1), 5).unwrap()),
        Err(Error::DuplicateRecord { .. })
    ));
}

#[test]
fn feature_channels_match_shifted_copies() {
    let lags = LagConfig::default();
    let panel = random_panel(3, 800, 11);
    let shifted = |row: &[f64], t: i64| if t < 0 || t >= row.len() as i64 { 0.0 } else { row[t as usize] };
    for &(series, d, n) in &[(0, 370, 365), (1, 400, 120), (2, 784, 365), (0, 100, 64)] {
        let f = build_features(&panel, series, d, n, &lags).unwrap();
        let sales = panel.sales_log.row(series);
        let promo = panel.promo.row(series);
        for p in 0..n {
            let t = (d - n + p) as i64;
            assert_eq!(f.encoder[p], sales[t as usize]);
            assert_eq!(f.encoder[n + p], shifted(promo, t));
            assert_eq!(f.encoder[2 * n + p], shifted(sales, t - 91));
            assert_eq!(f.encoder[3 * n + p], shifted(sales, t - 365));
            assert_eq!(f.encoder[4 * n + p], shifted(promo, t - 365));
        }
        for h in 0..HORIZON {
            let t = (d + h) as i64;
            assert_eq!(f.decoder[h], shifted(promo, t));
            assert_eq!(f.decoder[HORIZON + h], shifted(sales, t - 365));
        }
        assert_eq!(f.targets.unwrap(), sales[d..d + HORIZON]);
    }
}

#[test]
fn constant_series_has_constant_lags() {
    let c = 1.7;
    let days = 800;
    let panel = Panel::new(
        vec![SeriesKey { store_id: 1, item_id: 1 }],
        DateRange::new(start(), days).unwrap(),
        Tensor::full(&[1, days], c),
        Tensor::zeros(&[1, days + HORIZON]),
        vec![1.0],
    )
    .unwrap();
    let f = build_features(&panel, 0, 760, 365, &LagConfig::default()).unwrap();
    for ch in [0, 2, 3] {
        assert!(f.encoder[ch * 365..(ch + 1) * 365].iter().all(|&v| v == c));
    }
    assert!(f.decoder[HORIZON..].iter().all(|&v| v == c));
    assert!(matches!(
        build_features(&panel, 0, 300, 365, &LagConfig::default()),
        Err(Error::InvalidWindow(_))
    ));
}

#[test]
fn sampling_is_deterministic() {
    let panel = random_panel(5, 120, 3);
    let lags = LagConfig::default();
    let a = sample_batch(&panel, &mut ChaCha8Rng::seed_from_u64(8), 16, 32, &lags).unwrap();
    let b = sample_batch(&panel, &mut ChaCha8Rng::seed_from_u64(8), 16, 32, &lags).unwrap();
    assert_eq!(a, b);

    // 48 days with a 32-day encoder leaves exactly one decode start.
    let tight = random_panel(5, 48, 4);
    let one = sample_batch(&tight, &mut ChaCha8Rng::seed_from_u64(1), 64, 32, &lags).unwrap();
    assert!(one.decode_start.iter().all(|&d| d == 32));
    assert!(sample_batch(&tight, &mut ChaCha8Rng::seed_from_u64(1), 4, 33, &lags).is_err());
}

#[test]
fn decode_starts_are_uniform() {
    let panel = random_panel(4, 96, 6);
    let (encoder_len, lags) = (40, LagConfig::default());
    let (lo, hi) = training_start_range(&panel, encoder_len).unwrap();
    let bins = hi - lo + 1;
    let mut counts = vec![0u64; bins];
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let draws = 10_000;
    for _ in 0..draws / 100 {
        let batch = sample_batch(&panel, &mut rng, 100, encoder_len, &lags).unwrap();
        for d in batch.decode_start {
            counts[d - lo] += 1;
        }
    }
    let expected = draws as f64 / bins as f64;
    let stat: f64 = counts.iter().map(|&c| (c as f64 - expected).powi(2) / expected).sum();
    let p = 1.0 - ChiSquared::new((bins - 1) as f64).unwrap().cdf(stat);
    assert!(p > 0.01, "chi-square {stat:.2} over {bins} bins, p = {p:.4}");
}

#[test]
fn holdout_targets_never_leak() {
    let panel = random_panel(6, 500, 9);
    let lags = LagConfig::default();
    let (train, holdout) = holdout_split(&panel, 365).unwrap();
    assert_eq!(holdout.start, 484);
    assert_eq!(train.n_days(), 484);
    assert_eq!(holdout.actual_log.row(2), &panel.sales_log.row(2)[484..]);
    assert_eq!(holdout.weights, panel.weights);

    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let mut max_target = 0;
    for _ in 0..10_000 {
        let batch = sample_batch(&train, &mut rng, 4, 365, &lags).unwrap();
        max_target = max_target.max(batch.decode_start.iter().max().unwrap() + HORIZON - 1);
    }
    assert!(max_target < 500 - HORIZON, "max target index {max_target}");

    assert!(holdout_split(&random_panel(2, 300, 1), 365).is_err());
}

#[test]
fn synthetic_generation() {
    let flat = SyntheticConfig {
        n_series: 4,
        n_days: 60,
        weekly_amplitude: 0.0,
        yearly_amplitude: 0.0,
        trend_range: [0.0, 0.0],
        promo_probability: 0.0,
        noise_scale: 0.0,
        ..SyntheticConfig::default()
    };
    let data = generate_synthetic(&flat).unwrap();
    for i in 0..4 {
        let row = data.panel.sales_log.row(i);
        assert!(row.iter().all(|&v| v == row[0]));
    }

    let seasonal = SyntheticConfig {
        n_series: 1,
        n_days: 730,
        weekly_amplitude: 0.5,
        yearly_amplitude: 0.0,
        seed: 3,
        ..SyntheticConfig::default()
    };
    let row = generate_synthetic(&seasonal).unwrap().components[0].sales.clone();
    let mean = row.iter().sum::<f64>() / row.len() as f64;
    let acf = |lag: usize| -> f64 {
        let num: f64 = (lag..row.len()).map(|t| (row[t] - mean) * (row[t - lag] - mean)).sum();
        num / row.iter().map(|v| (v - mean).powi(2)).sum::<f64>()
    };
    assert!(acf(7) > acf(3), "acf(7) {} vs acf(3) {}", acf(7), acf(3));

    let cfg = SyntheticConfig { seed: 42, n_series: 20, n_days: 100, ..SyntheticConfig::default() };
    let (a, b) = (generate_synthetic(&cfg).unwrap(), generate_synthetic(&cfg).unwrap());
    assert_eq!(a.panel, b.panel);
    assert_eq!(a.train, b.train);
    assert_eq!(a.components, b.components);
}
