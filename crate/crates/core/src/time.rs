//! Timezone-naive timestamps on the patient's local clock.

/// Length of one resampling slot.
pub const SLOT_MINUTES: i64 = 5;
pub const SLOT_SECONDS: i64 = SLOT_MINUTES * 60;
pub const SLOTS_PER_DAY: i64 = 24 * 60 / SLOT_MINUTES;
pub const DAY_SECONDS: i64 = 86_400;

/// Seconds since 1970-01-01T00:00:00 on the local (naive) clock.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Timestamp(i64);

impl Timestamp {
    pub const fn from_secs(secs: i64) -> Self {
        Self(secs)
    }

    pub const fn secs(self) -> i64 {
        self.0
    }

    /// Index of the 5-minute slot containing this instant.
    pub const fn slot(self) -> i64 {
        self.0.div_euclid(SLOT_SECONDS)
    }

    pub const fn from_slot(slot: i64) -> Self {
        Self(slot * SLOT_SECONDS)
    }

    /// Calendar day (days since the epoch).
    pub const fn day(self) -> i64 {
        self.0.div_euclid(DAY_SECONDS)
    }

    pub const fn plus_minutes(self, minutes: i64) -> Self {
        Self(self.0 + minutes * 60)
    }

    pub const fn minutes_since(self, earlier: Timestamp) -> f64 {
        (self.0 - earlier.0) as f64 / 60.0
    }
}

pub const fn slot_day(slot: i64) -> i64 {
    slot.div_euclid(SLOTS_PER_DAY)
}

/// Position of a slot inside its day, `0..288`.
pub const fn slot_of_day(slot: i64) -> i64 {
    slot.rem_euclid(SLOTS_PER_DAY)
}
