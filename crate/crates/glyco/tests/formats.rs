use std::path::Path;

use glyco::csv::{format_datetime, parse_datetime, parse_trace_csv, trace_csv};
use glyco::experiment::{parse_report_csv, report_csv, ReportRow};
use glyco::format::{decode_model, decode_pcl, encode_model, encode_pcl};
use glyco_core::metrics::{PredictionTrace, TracePoint};
use glyco_core::models::{FittedModel, Gp};
use glyco_core::nnet::LstmParams;
use glyco_core::time::Timestamp;
use proptest::prelude::*;

fn finite() -> impl Strategy<Value = f64> {
    prop::num::f64::NORMAL | prop::num::f64::ZERO | prop::num::f64::SUBNORMAL
}

proptest! {
    #[test]
    fn datetimes_round_trip(slot in 0i64..20_000_000) {
        let t = Timestamp::from_slot(slot);
        prop_assert_eq!(parse_datetime(&format_datetime(t)), Some(t));
    }

    #[test]
    fn traces_round_trip_bit_exactly(values in prop::collection::vec((finite(), finite(), 0u64..5), 0..40)) {
        let points = values
            .iter()
            .enumerate()
            .map(|(i, &(y_true, y_pred, segment_id))| TracePoint {
                timestamp: Timestamp::from_slot(i as i64),
                y_true,
                y_pred,
                segment_id,
            })
            .collect();
        let trace = PredictionTrace::new(points);
        let back = parse_trace_csv(&trace_csv(&trace), Path::new("t.csv")).unwrap();
        prop_assert_eq!(back, trace);
    }

    #[test]
    fn pcl_blocks_round_trip(units in 1usize..6, history in 2usize..40, seed: u64) {
        let params = LstmParams::init(units, 3, seed);
        let bytes = encode_pcl(&params, history);
        prop_assert_eq!(bytes.len(), 12 + 8 * params.as_slice().len());
        prop_assert_eq!(decode_pcl(&bytes).unwrap(), (params, history));
    }

    #[test]
    fn truncated_model_files_are_rejected(weights in prop::collection::vec(finite(), 1..10), bias in finite(), cut in 1usize..20) {
        let model = FittedModel::Gp(Gp { weights, bias });
        let bytes = encode_model(&model, 4);
        prop_assert_eq!(decode_model(&bytes).unwrap(), model);
        let cut = cut.min(bytes.len());
        prop_assert!(decode_model(&bytes[..bytes.len() - cut]).is_err());
    }

    #[test]
    fn report_rows_round_trip(
        rmse in finite(),
        drmse in finite(),
        rates in prop::collection::vec(prop::option::of((0.0..100.0f64, 0.0..100.0f64, 0.0..100.0f64)), 4),
        points in 0usize..10_000,
    ) {
        let row = ReportRow {
            patient: "p-01".into(),
            model: "pclstm".into(),
            smoothing: "raw".into(),
            rmse,
            drmse,
            rates: [rates[0], rates[1], rates[2], rates[3]],
            drmse_per_min: drmse / 5.0,
            points,
        };
        let rows = vec![row.clone(), row];
        prop_assert_eq!(parse_report_csv(&report_csv(&rows), Path::new("r.csv")).unwrap(), rows);
    }
}
