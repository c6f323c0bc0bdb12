use alloc::vec;

use super::UniformSeries;
use crate::data::{EventKind, PatientRecord};

/// Snaps events onto 5-minute slots spanning the first to the last event.
/// Glucose readings sharing a slot are averaged; CHO and insulin are summed.
pub fn resample_5min(record: &PatientRecord) -> UniformSeries {
    let Some(first) = record.events.iter().map(|e| e.timestamp.slot()).min() else {
        return UniformSeries {
            slots: vec![],
            glucose: vec![],
            cho: vec![],
            insulin: vec![],
            interpolated: vec![],
        };
    };
    let last = record
        .events
        .iter()
        .map(|e| e.timestamp.slot())
        .max()
        .unwrap_or(first);
    let n = (last - first + 1) as usize;

    let mut g_sum = vec![0.0; n];
    let mut g_count = vec![0u32; n];
    let mut cho = vec![0.0; n];
    let mut insulin = vec![0.0; n];
    for e in &record.events {
        let i = (e.timestamp.slot() - first) as usize;
        match e.kind {
            EventKind::Glucose => {
                g_sum[i] += e.value;
                g_count[i] += 1;
            }
            EventKind::Cho => cho[i] += e.value,
            EventKind::Insulin => insulin[i] += e.value,
        }
    }
    let glucose = g_sum
        .iter()
        .zip(&g_count)
        .map(|(&s, &c)| (c > 0).then(|| s / c as f64))
        .collect();

    UniformSeries {
        slots: (first..=last).collect(),
        glucose,
        cho,
        insulin,
        interpolated: vec![false; n],
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{DiabetesType, RawEvent};
    use crate::time::Timestamp;
    use alloc::vec::Vec;

    fn at(min: i64, kind: EventKind, v: f64) -> RawEvent {
        RawEvent::new(Timestamp::from_secs(1_577_836_800 + min * 60), kind, v)
    }

    fn record(events: Vec<RawEvent>) -> PatientRecord {
        PatientRecord::new("p", DiabetesType::Type1, events)
    }

    #[test]
    fn glucose_in_one_slot_is_averaged() {
        let s = resample_5min(&record(vec![
            at(1, EventKind::Glucose, 100.0),
            at(3, EventKind::Glucose, 110.0),
        ]));
        assert_eq!(s.len(), 1);
        assert_eq!(s.glucose[0], Some(105.0));
    }

    #[test]
    fn cho_in_one_slot_is_summed() {
        let s = resample_5min(&record(vec![
            at(0, EventKind::Glucose, 100.0),
            at(1, EventKind::Cho, 20.0),
            at(4, EventKind::Cho, 15.0),
        ]));
        assert_eq!(s.cho[0], 35.0);
    }

    #[test]
    fn empty_slot_has_missing_glucose_and_zero_inputs() {
        let s = resample_5min(&record(vec![
            at(0, EventKind::Glucose, 100.0),
            at(10, EventKind::Glucose, 120.0),
        ]));
        assert_eq!(s.len(), 3);
        assert_eq!(s.glucose[1], None);
        assert_eq!((s.cho[1], s.insulin[1]), (0.0, 0.0));
        assert_eq!(s.slots[2] - s.slots[0], 2);
    }

    #[test]
    fn mass_is_conserved() {
        let events = (0..200)
            .map(|k| {
                let kind = if k % 3 == 0 { EventKind::Cho } else { EventKind::Insulin };
                at(k * 7, kind, (k % 11) as f64 * 1.5)
            })
            .chain([at(0, EventKind::Glucose, 90.0)])
            .collect();
        let r = record(events);
        let s = resample_5min(&r);
        let cho: f64 = s.cho.iter().sum();
        let ins: f64 = s.insulin.iter().sum();
        assert!((cho - r.total(EventKind::Cho)).abs() < 1e-9);
        assert!((ins - r.total(EventKind::Insulin)).abs() < 1e-9);
    }
}
