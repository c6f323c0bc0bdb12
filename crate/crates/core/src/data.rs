//! Raw patient data: timestamped glucose readings, carbohydrate intakes and
//! insulin boluses.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::time::Timestamp;

/// Upper bound of a plausible glucose reading, mg/dL.
pub const GLUCOSE_MAX: f64 = 600.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum EventKind {
    Glucose,
    Cho,
    Insulin,
}

impl EventKind {
    pub fn as_str(self) -> &'static str {
        match self {
            EventKind::Glucose => "glucose",
            EventKind::Cho => "cho",
            EventKind::Insulin => "insulin",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "glucose" => Some(EventKind::Glucose),
            "cho" => Some(EventKind::Cho),
            "insulin" => Some(EventKind::Insulin),
            _ => None,
        }
    }
}

/// One observation: glucose in mg/dL, CHO in grams, insulin in units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RawEvent {
    pub timestamp: Timestamp,
    pub kind: EventKind,
    pub value: f64,
}

impl RawEvent {
    pub fn new(timestamp: Timestamp, kind: EventKind, value: f64) -> Self {
        Self {
            timestamp,
            kind,
            value,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DiabetesType {
    Type1,
    Type2,
    Synthetic,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PatientRecord {
    pub patient_id: String,
    pub diabetes_type: DiabetesType,
    pub events: Vec<RawEvent>,
    /// Free-form warnings attached by producers (e.g. the synthetic generator).
    pub notes: Vec<String>,
}

impl PatientRecord {
    /// Builds a record, sorting events by timestamp. The sort is stable so
    /// simultaneous events keep their input order.
    pub fn new(
        patient_id: impl Into<String>,
        diabetes_type: DiabetesType,
        mut events: Vec<RawEvent>,
    ) -> Self {
        events.sort_by_key(|e| e.timestamp);
        Self {
            patient_id: patient_id.into(),
            diabetes_type,
            events,
            notes: Vec::new(),
        }
    }

    pub fn events_of(&self, kind: EventKind) -> impl Iterator<Item = &RawEvent> {
        self.events.iter().filter(move |e| e.kind == kind)
    }

    pub fn total(&self, kind: EventKind) -> f64 {
        self.events_of(kind).map(|e| e.value).sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    /// Offending event index, `None` for record-level violations.
    pub index: Option<usize>,
    pub message: String,
}

/// Lists every broken invariant of the record. Never fails.
pub fn validate(record: &PatientRecord) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut any_glucose = false;
    for (i, e) in record.events.iter().enumerate() {
        if i > 0 && record.events[i - 1].timestamp > e.timestamp {
            out.push(Violation {
                index: Some(i),
                message: String::from("events not sorted by timestamp"),
            });
        }
        if !e.value.is_finite() {
            out.push(Violation {
                index: Some(i),
                message: format!("non-finite {} value", e.kind.as_str()),
            });
            continue;
        }
        match e.kind {
            EventKind::Glucose => {
                any_glucose = true;
                if !(e.value > 0.0 && e.value <= GLUCOSE_MAX) {
                    out.push(Violation {
                        index: Some(i),
                        message: format!("glucose {} outside (0, {GLUCOSE_MAX}] mg/dL", e.value),
                    });
                }
            }
            EventKind::Cho | EventKind::Insulin => {
                if e.value < 0.0 {
                    out.push(Violation {
                        index: Some(i),
                        message: format!("negative {} value {}", e.kind.as_str(), e.value),
                    });
                }
            }
        }
    }
    if !any_glucose {
        out.push(Violation {
            index: None,
            message: String::from("record has no glucose reading"),
        });
    }
    out
}
