use glyco_core::data::{validate, DiabetesType, EventKind, PatientRecord, RawEvent};
use glyco_core::linalg::Matrix;
use glyco_core::metrics::{p_ega, r_ega, EgaZone, PredictionTrace, TracePoint};
use glyco_core::models::{solve_svr_dual, ElmSolve, SvrConfig};
use glyco_core::nnet::{loss_cmse, loss_mse, TwoStepPrediction};
use glyco_core::postprocess::moving_average;
use glyco_core::preprocess::{
    apply_scaler, fit_scaler, resample_5min, split_days, Pchip, SplitSpec, UniformSeries,
};
use glyco_core::rng::SplitMix64;
use glyco_core::synth::{generate_patient, SynthConfig};
use glyco_core::time::{Timestamp, SLOTS_PER_DAY};
use proptest::prelude::*;

fn strictly_increasing(steps: Vec<f64>) -> Vec<f64> {
    let mut x = 0.0;
    steps
        .into_iter()
        .map(|s| {
            x += s;
            x
        })
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn pchip_stays_within_each_interval(
        steps in prop::collection::vec(0.1f64..5.0, 2..12),
        ys in prop::collection::vec(40.0f64..400.0, 12),
    ) {
        let x = strictly_increasing(steps);
        let y = &ys[..x.len()];
        let p = Pchip::new(&x, y).unwrap();
        for i in 0..x.len() {
            prop_assert!((p.eval(x[i]).unwrap() - y[i]).abs() <= 1e-12 * y[i].abs());
        }
        for i in 0..x.len() - 1 {
            let (lo, hi) = (y[i].min(y[i + 1]), y[i].max(y[i + 1]));
            for k in 1..20 {
                let q = x[i] + (x[i + 1] - x[i]) * k as f64 / 20.0;
                let v = p.eval(q).unwrap();
                prop_assert!(v >= lo - 1e-9 && v <= hi + 1e-9, "{v} outside [{lo}, {hi}]");
            }
        }
        prop_assert!(p.eval(x[0] - 1e-6).is_none());
    }

    #[test]
    fn cmse_at_zero_coherence_is_mse(
        rows in prop::collection::vec((-3.0f64..3.0, -3.0f64..3.0, -3.0f64..3.0, -3.0f64..3.0), 1..40),
    ) {
        let preds: Vec<_> = rows.iter().map(|r| TwoStepPrediction { prev: r.0, horizon: r.1 }).collect();
        let targets: Vec<_> = rows.iter().map(|r| (r.2, r.3)).collect();
        let finals: Vec<f64> = rows.iter().map(|r| r.1).collect();
        let true_finals: Vec<f64> = rows.iter().map(|r| r.3).collect();
        prop_assert_eq!(loss_cmse(&preds, &targets, 0.0).unwrap(), loss_mse(&finals, &true_finals).unwrap());
        prop_assert!(loss_cmse(&preds, &targets, 2.0).unwrap() >= loss_cmse(&preds, &targets, 0.0).unwrap());
    }

    #[test]
    fn identity_prediction_is_zone_a(y in 1.0f64..600.0, rate in -5.0f64..5.0) {
        prop_assert_eq!(p_ega(y, y, rate), EgaZone::A);
        prop_assert_eq!(r_ega(rate, rate), EgaZone::A);
    }

    #[test]
    fn split_partitions_days_in_order(n in 4i64..60) {
        let len = (n * SLOTS_PER_DAY) as usize;
        let series = UniformSeries {
            slots: (0..n * SLOTS_PER_DAY).collect(),
            glucose: vec![Some(100.0); len],
            cho: vec![0.0; len],
            insulin: vec![0.0; len],
            interpolated: vec![false; len],
        };
        let s = split_days(&series, &SplitSpec::default()).unwrap();
        let all: Vec<i64> = s.train.iter().chain(&s.valid).chain(&s.test).copied().collect();
        prop_assert_eq!(all, (0..n).collect::<Vec<_>>());
        prop_assert!(!s.train.is_empty() && !s.valid.is_empty() && !s.test.is_empty());
        prop_assert!(s.train.len() >= s.valid.len());
    }

    #[test]
    fn resampling_conserves_cho_and_insulin(
        events in prop::collection::vec((0i64..20_000, 0u8..3, 1.0f64..200.0), 1..60),
    ) {
        let raw: Vec<RawEvent> = events
            .iter()
            .map(|&(s, k, v)| {
                let kind = [EventKind::Glucose, EventKind::Cho, EventKind::Insulin][k as usize];
                RawEvent::new(Timestamp::from_secs(s * 17), kind, v)
            })
            .collect();
        let record = PatientRecord::new("p", DiabetesType::Type1, raw);
        let series = resample_5min(&record);
        let cho: f64 = series.cho.iter().sum();
        let ins: f64 = series.insulin.iter().sum();
        prop_assert!((cho - record.total(EventKind::Cho)).abs() < 1e-9);
        prop_assert!((ins - record.total(EventKind::Insulin)).abs() < 1e-9);
        prop_assert!(series.slots.windows(2).all(|w| w[1] == w[0] + 1));
    }

    #[test]
    fn scaling_round_trips(values in prop::collection::vec(40.0f64..400.0, 2..50)) {
        prop_assume!(values.iter().any(|v| *v != values[0]));
        let n = values.len();
        let series = UniformSeries {
            slots: (0..n as i64).collect(),
            glucose: values.iter().map(|&v| Some(v)).collect(),
            cho: (0..n).map(|i| (i % 3) as f64).collect(),
            insulin: (0..n).map(|i| (i % 2) as f64).collect(),
            interpolated: vec![false; n],
        };
        let scaler = fit_scaler(&series, &[0]).unwrap();
        let scaled = apply_scaler(&series, &scaler);
        let mean: f64 = scaled.glucose.iter().map(|g| g.unwrap()).sum::<f64>() / n as f64;
        prop_assert!(mean.abs() < 1e-9);
        for (a, b) in scaled.glucose.iter().zip(&values) {
            prop_assert!((scaler.glucose_to_mgdl(a.unwrap()) - b).abs() < 1e-9);
        }
    }

    #[test]
    fn moving_average_stays_in_window_range(preds in prop::collection::vec(40.0f64..400.0, 1..40), w in 1usize..6) {
        let trace = PredictionTrace::new(
            preds
                .iter()
                .enumerate()
                .map(|(i, &p)| TracePoint {
                    timestamp: Timestamp::from_secs(i as i64 * 300),
                    y_true: 100.0,
                    y_pred: p,
                    segment_id: 0,
                })
                .collect(),
        );
        let s = moving_average(&trace, w);
        for i in 0..preds.len() {
            let from = (i + 1).saturating_sub(w);
            let lo = preds[from..=i].iter().copied().fold(f64::INFINITY, f64::min);
            let hi = preds[from..=i].iter().copied().fold(f64::NEG_INFINITY, f64::max);
            prop_assert!(s.points[i].y_pred >= lo - 1e-9 && s.points[i].y_pred <= hi + 1e-9);
        }
    }

    #[test]
    fn uniform_draws_stay_in_range(seed in any::<u64>(), lo in -10.0f64..10.0, width in 0.001f64..10.0) {
        let mut rng = SplitMix64::new(seed);
        for _ in 0..100 {
            let v = rng.uniform(lo, lo + width);
            prop_assert!(v >= lo && v < lo + width);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn svr_dual_is_feasible(seed in any::<u64>(), n in 2usize..25, c in 0.1f64..20.0, eps in 0.0f64..0.5) {
        let mut rng = SplitMix64::new(seed);
        let x: Vec<f64> = (0..n).map(|_| rng.uniform(-2.0, 2.0)).collect();
        let y: Vec<f64> = x.iter().map(|v| v * v - 1.0 + 0.1 * rng.normal()).collect();
        let mut k = Matrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                k.row_mut(i)[j] = (-(x[i] - x[j]).powi(2)).exp();
            }
        }
        let cfg = SvrConfig { gamma: 1.0, epsilon: eps, c, ..SvrConfig::default() };
        let sol = solve_svr_dual(&k, &y, &cfg).unwrap();
        let coef = sol.coefficients();
        prop_assert!(coef.iter().sum::<f64>().abs() < 1e-9 * c.max(1.0) * n as f64);
        for (a, b) in sol.alpha.iter().zip(&sol.alpha_star) {
            prop_assert!(*a >= 0.0 && *a <= c && *b >= 0.0 && *b <= c);
            prop_assert!(a * b == 0.0);
        }
        prop_assert!(sol.objective <= 0.0);
    }

    #[test]
    fn ridge_weights_shrink_with_penalty(seed in any::<u64>(), l2 in 0.01f64..100.0) {
        let mut rng = SplitMix64::new(seed);
        let h = Matrix::from_vec(8, 5, (0..40).map(|_| rng.next_f64()).collect()).unwrap();
        let y: Vec<f64> = (0..8).map(|_| rng.normal()).collect();
        let norm = |l| glyco_core::linalg::norm(&glyco_core::models::ridge_readout(&h, &y, l, ElmSolve::Auto).unwrap());
        prop_assert!(norm(2.0 * l2) <= norm(l2) + 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn synthetic_records_always_validate(seed in any::<u64>(), days in 4usize..7) {
        let r = generate_patient(&SynthConfig { seed, days, ..SynthConfig::default() }).unwrap();
        prop_assert!(validate(&r).is_empty());
    }
}
