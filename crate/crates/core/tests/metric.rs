use proptest::prelude::*;
use wavecast::metric::{log1p_clipped, nwrmsle, weighted_log_mse, EvaluationRow};
use wavecast::nn::Tensor;

fn rows_strategy() -> impl Strategy<Value = Vec<EvaluationRow>> {
    prop::collection::vec(
        (-5.0..500.0f64, 0.0..500.0f64, prop::bool::ANY)
            .prop_map(|(p, a, perishable)| EvaluationRow::new(p, a, if perishable { 1.25 } else { 1.0 })),
        1..40,
    )
}

/// Direct transcription of the metric, written independently of the library.
fn naive_nwrmsle(rows: &[EvaluationRow]) -> f64 {
    let clip = |v: f64| if v < 0.0 { 0.0 } else { v };
    let mut num = 0.0;
    let mut den = 0.0;
    for r in rows {
        let d = (clip(r.predicted) + 1.0).ln() - (clip(r.actual) + 1.0).ln();
        num += r.weight * d * d;
        den += r.weight;
    }
    (num / den).sqrt()
}

proptest! {
    #[test]
    fn non_negative_and_matches_naive(rows in rows_strategy()) {
        let score = nwrmsle(&rows).unwrap();
        prop_assert!(score >= 0.0);
        prop_assert!((score - naive_nwrmsle(&rows)).abs() < 1e-12);
    }

    #[test]
    fn zero_exactly_on_exact_predictions(rows in rows_strategy()) {
        let exact: Vec<_> = rows.iter().map(|r| EvaluationRow::new(r.actual, r.actual, r.weight)).collect();
        prop_assert_eq!(nwrmsle(&exact).unwrap(), 0.0);
        let differs = rows.iter().any(|r| log1p_clipped(r.predicted) != log1p_clipped(r.actual));
        prop_assert_eq!(nwrmsle(&rows).unwrap() > 0.0, differs);
    }

    #[test]
    fn weight_scale_invariance(rows in rows_strategy(), c in 1e-3..1e3f64) {
        let scaled: Vec<_> = rows.iter().map(|r| EvaluationRow::new(r.predicted, r.actual, r.weight * c)).collect();
        prop_assert!((nwrmsle(&rows).unwrap() - nwrmsle(&scaled).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn permutation_invariance(rows in rows_strategy(), seed in any::<u64>()) {
        let mut shuffled = rows.clone();
        // Deterministic Fisher-Yates driven by a tiny LCG.
        let mut state = seed | 1;
        for i in (1..shuffled.len()).rev() {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            shuffled.swap(i, (state >> 33) as usize % (i + 1));
        }
        prop_assert!((nwrmsle(&rows).unwrap() - nwrmsle(&shuffled).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn log_mse_is_squared_metric(rows in rows_strategy()) {
        let n = rows.len();
        let pred = Tensor::from_vec(&[n], rows.iter().map(|r| log1p_clipped(r.predicted)).collect()).unwrap();
        let target = Tensor::from_vec(&[n], rows.iter().map(|r| log1p_clipped(r.actual)).collect()).unwrap();
        let weights = Tensor::from_vec(&[n], rows.iter().map(|r| r.weight).collect()).unwrap();
        let (loss, _) = weighted_log_mse(&pred, &target, &weights).unwrap();
        prop_assert!((loss.sqrt() - nwrmsle(&rows).unwrap()).abs() < 1e-12);
    }
}
