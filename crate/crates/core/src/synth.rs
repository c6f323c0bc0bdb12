//! Seeded synthetic patients.
//!
//! ```text
//! g(t) = baseline
//!      + amplitude * sin(2 pi (minute_of_day - 240) / 1440)
//!      + sum_meals  meal_gain    * cho   * k_meal(t - t_m)
//!      - sum_bolus  insulin_gain * units * k_ins(t - t_b)
//!      + e(t) + sensor_noise_std * N(0, 1)
//! e(t) = phi e(t-1) + sqrt(1 - phi^2) * noise_std * N(0, 1)
//! ```
//!
//! `e` is slow physiological variability; the white term mimics sensor noise.
//!
//! Kernels are gamma-shaped and normalized to a peak of 1 at `peak` minutes:
//! `k(tau) = (tau / peak)^a * exp(a * (1 - tau / peak))`, `a = (peak / width)^2`.
//! Glucose is clipped to `[40, 400]` mg/dL. All randomness comes from
//! [`SplitMix64`], so records are identical on every platform.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::data::{DiabetesType, EventKind, PatientRecord, RawEvent};
use crate::math::{exp, ln, sin, sqrt};
use crate::rng::SplitMix64;
use crate::time::Timestamp;
use crate::{Error, Result};

pub const CLIP_LOW: f64 = 40.0;
pub const CLIP_HIGH: f64 = 400.0;
/// Share of clipped samples above which the record carries a warning.
pub const CLIP_WARNING_FRACTION: f64 = 0.2;
/// 2020-01-01T00:00:00.
pub const DEFAULT_START: Timestamp = Timestamp::from_secs(1_577_836_800);

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GammaKernel {
    pub peak_minutes: f64,
    pub width_minutes: f64,
}

impl GammaKernel {
    pub fn shape(&self) -> f64 {
        let r = self.peak_minutes / self.width_minutes;
        r * r
    }

    pub fn eval(&self, tau_minutes: f64) -> f64 {
        if tau_minutes <= 0.0 {
            return 0.0;
        }
        let a = self.shape();
        let r = tau_minutes / self.peak_minutes;
        exp(a * (ln(r) + 1.0 - r))
    }

    /// Beyond this lag the kernel is below 1e-9 of its peak and is ignored.
    fn support_minutes(&self) -> f64 {
        // Solve a (ln r + 1 - r) = ln 1e-9 for r > 1 by bisection.
        let target = ln(1e-9) / self.shape();
        let f = |r: f64| ln(r) + 1.0 - r - target;
        let (mut lo, mut hi) = (1.0, 2.0);
        while f(hi) > 0.0 {
            hi *= 2.0;
        }
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if f(mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        hi * self.peak_minutes
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SynthConfig {
    pub days: usize,
    pub start: Timestamp,
    pub reading_interval_minutes: i64,
    /// Inclusive range of meals per day.
    pub meals_per_day: (u32, u32),
    /// Grams of CHO per meal, drawn uniformly.
    pub cho_range: (f64, f64),
    /// Insulin units per 10 g of CHO, given at meal time.
    pub bolus_per_10g: f64,
    pub baseline: f64,
    pub circadian_amplitude: f64,
    pub meal_kernel: GammaKernel,
    pub insulin_kernel: GammaKernel,
    /// Peak glucose rise per gram of CHO (mg/dL).
    pub meal_gain: f64,
    /// Peak glucose drop per insulin unit (mg/dL).
    pub insulin_gain: f64,
    /// Stationary standard deviation of the AR(1) noise.
    pub noise_std: f64,
    pub ar_coefficient: f64,
    /// Standard deviation of white measurement noise.
    pub sensor_noise_std: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            days: 20,
            start: DEFAULT_START,
            reading_interval_minutes: 5,
            meals_per_day: (3, 4),
            cho_range: (20.0, 80.0),
            bolus_per_10g: 1.0,
            baseline: 140.0,
            circadian_amplitude: 15.0,
            meal_kernel: GammaKernel {
                peak_minutes: 60.0,
                width_minutes: 30.0,
            },
            insulin_kernel: GammaKernel {
                peak_minutes: 90.0,
                width_minutes: 40.0,
            },
            meal_gain: 1.2,
            insulin_gain: 8.0,
            noise_std: 8.0,
            ar_coefficient: 0.97,
            sensor_noise_std: 2.0,
            seed: 0,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidArgument(msg));
        if self.days < 4 {
            return bad(format!("synthetic patients need at least 4 days, got {}", self.days));
        }
        if self.reading_interval_minutes <= 0 {
            return bad(format!("reading interval must be positive, got {}", self.reading_interval_minutes));
        }
        if self.meals_per_day.0 > self.meals_per_day.1 {
            return bad(format!("empty meals_per_day range {:?}", self.meals_per_day));
        }
        if !(self.cho_range.0 >= 0.0 && self.cho_range.0 <= self.cho_range.1) {
            return bad(format!("invalid cho_range {:?}", self.cho_range));
        }
        if !(self.noise_std >= 0.0) || !(self.sensor_noise_std >= 0.0) {
            return bad(format!(
                "noise levels must be >= 0, got {} and {}",
                self.noise_std, self.sensor_noise_std
            ));
        }
        if !(self.ar_coefficient > -1.0 && self.ar_coefficient < 1.0) {
            return bad(format!("ar_coefficient must lie in (-1, 1), got {}", self.ar_coefficient));
        }
        for (name, k) in [("meal", &self.meal_kernel), ("insulin", &self.insulin_kernel)] {
            if !(k.peak_minutes > 0.0 && k.width_minutes > 0.0) {
                return bad(format!("{name} kernel parameters must be positive, got {k:?}"));
            }
        }
        if !(self.bolus_per_10g >= 0.0 && self.meal_gain >= 0.0 && self.insulin_gain >= 0.0) {
            return bad(String::from("bolus policy and gains must be >= 0"));
        }
        if !self.baseline.is_finite() || !self.circadian_amplitude.is_finite() {
            return bad(String::from("baseline and circadian amplitude must be finite"));
        }
        Ok(())
    }
}

/// A meal and the bolus taken with it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Meal {
    pub timestamp: Timestamp,
    pub cho: f64,
    pub bolus: f64,
}

/// Draws meal times between 07:00 and 21:00, one per equal sub-window.
pub fn plan_meals(config: &SynthConfig) -> Vec<Meal> {
    let mut rng = SplitMix64::derive(config.seed, 1);
    let mut meals = Vec::new();
    let (lo, hi) = config.meals_per_day;
    for day in 0..config.days as i64 {
        let count = rng.range_inclusive(lo as u64, hi as u64) as i64;
        if count == 0 {
            continue;
        }
        let window = 14 * 60 / count;
        for k in 0..count {
            let minute = 7 * 60 + k * window + rng.range_inclusive(0, (window - 1) as u64) as i64;
            let cho = rng.uniform(config.cho_range.0, config.cho_range.1);
            let cho = crate::math::floor(cho + 0.5);
            let bolus = crate::math::floor(cho / 10.0 * config.bolus_per_10g * 10.0 + 0.5) / 10.0;
            meals.push(Meal {
                timestamp: config.start.plus_minutes(day * 24 * 60 + minute),
                cho,
                bolus,
            });
        }
    }
    meals
}

/// Noise-free glucose at `t` (before clipping).
pub fn deterministic_glucose(config: &SynthConfig, meals: &[Meal], t: Timestamp) -> f64 {
    let minute_of_day = t.secs().rem_euclid(86_400) as f64 / 60.0;
    let mut g = config.baseline
        + config.circadian_amplitude * sin(2.0 * core::f64::consts::PI * (minute_of_day - 240.0) / 1440.0);
    let horizon = config.meal_kernel.support_minutes().max(config.insulin_kernel.support_minutes());
    for m in meals {
        let tau = t.minutes_since(m.timestamp);
        if tau <= 0.0 || tau > horizon {
            continue;
        }
        g += config.meal_gain * m.cho * config.meal_kernel.eval(tau);
        g -= config.insulin_gain * m.bolus * config.insulin_kernel.eval(tau);
    }
    g
}

/// Simulates one patient with an explicit meal plan.
pub fn generate_with_meals(config: &SynthConfig, patient_id: &str, meals: &[Meal]) -> Result<PatientRecord> {
    config.validate()?;
    let mut rng = SplitMix64::derive(config.seed, 2);
    let mut sensor = SplitMix64::derive(config.seed, 3);
    let samples = config.days as i64 * 24 * 60 / config.reading_interval_minutes;
    let phi = config.ar_coefficient;
    let innovation = config.noise_std * sqrt(1.0 - phi * phi);
    let mut noise = config.noise_std * rng.normal();
    let mut events = Vec::with_capacity(samples as usize + 2 * meals.len());
    let mut clipped = 0usize;
    for i in 0..samples {
        if i > 0 {
            noise = phi * noise + innovation * rng.normal();
        }
        let t = config.start.plus_minutes(i * config.reading_interval_minutes);
        let raw = deterministic_glucose(config, meals, t) + noise + config.sensor_noise_std * sensor.normal();
        let g = raw.clamp(CLIP_LOW, CLIP_HIGH);
        if g != raw || g == CLIP_LOW || g == CLIP_HIGH {
            clipped += 1;
        }
        events.push(RawEvent::new(t, EventKind::Glucose, g));
    }
    for m in meals {
        if m.cho > 0.0 {
            events.push(RawEvent::new(m.timestamp, EventKind::Cho, m.cho));
        }
        if m.bolus > 0.0 {
            events.push(RawEvent::new(m.timestamp, EventKind::Insulin, m.bolus));
        }
    }
    let mut record = PatientRecord::new(patient_id, DiabetesType::Synthetic, events);
    let fraction = clipped as f64 / samples as f64;
    if fraction > CLIP_WARNING_FRACTION {
        record.notes.push(format!(
            "glucose pinned at the clip bounds for {:.1}% of samples",
            100.0 * fraction
        ));
    }
    Ok(record)
}

pub fn generate_patient(config: &SynthConfig) -> Result<PatientRecord> {
    generate_patient_with_id(config, "synth-001")
}

pub fn generate_patient_with_id(config: &SynthConfig, patient_id: &str) -> Result<PatientRecord> {
    config.validate()?;
    generate_with_meals(config, patient_id, &plan_meals(config))
}

/// Relative jitter applied per patient by [`generate_cohort`].
pub const DEFAULT_JITTER: f64 = 0.15;

/// Per-patient configuration: every physiological parameter is scaled by an
/// independent factor in `[1 - jitter, 1 + jitter]`.
pub fn jittered_config(base: &SynthConfig, seed: u64, index: usize, jitter: f64) -> SynthConfig {
    let mut rng = SplitMix64::derive(seed, 0x1000 + index as u64);
    let mut f = || 1.0 + rng.uniform(-jitter, jitter);
    let mut c = *base;
    c.baseline *= f();
    c.circadian_amplitude *= f();
    c.meal_gain *= f();
    c.insulin_gain *= f();
    c.bolus_per_10g *= f();
    c.noise_std *= f();
    c.sensor_noise_std *= f();
    c.meal_kernel.peak_minutes *= f();
    c.meal_kernel.width_minutes *= f();
    c.insulin_kernel.peak_minutes *= f();
    c.insulin_kernel.width_minutes *= f();
    c.seed = rng.next_u64();
    c
}

pub fn patient_id(index: usize) -> String {
    format!("synth-{:03}", index + 1)
}

pub fn generate_cohort(n: usize, base: &SynthConfig, seed: u64) -> Result<Vec<PatientRecord>> {
    generate_cohort_with_jitter(n, base, seed, DEFAULT_JITTER)
}

pub fn generate_cohort_with_jitter(n: usize, base: &SynthConfig, seed: u64, jitter: f64) -> Result<Vec<PatientRecord>> {
    if n == 0 {
        return Err(Error::InvalidArgument(String::from("cohort size must be >= 1")));
    }
    if !(0.0..1.0).contains(&jitter) {
        return Err(Error::InvalidArgument(format!("jitter must lie in [0, 1), got {jitter}")));
    }
    base.validate()?;
    (0..n)
        .map(|i| generate_patient_with_id(&jittered_config(base, seed, i, jitter), &patient_id(i)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::validate;

    fn quiet(days: usize) -> SynthConfig {
        SynthConfig {
            days,
            meals_per_day: (0, 0),
            circadian_amplitude: 0.0,
            noise_std: 0.0,
            sensor_noise_std: 0.0,
            ..SynthConfig::default()
        }
    }

    #[test]
    fn quiet_patient_is_flat_at_baseline() {
        let r = generate_patient(&quiet(4)).unwrap();
        assert_eq!(r.events.len(), 4 * 288);
        assert!(r.events.iter().all(|e| e.kind == EventKind::Glucose && e.value == 140.0));
    }

    #[test]
    fn same_seed_same_record() {
        let c = SynthConfig {
            seed: 7,
            days: 5,
            ..SynthConfig::default()
        };
        assert_eq!(generate_patient(&c).unwrap(), generate_patient(&c).unwrap());
        let other = SynthConfig { seed: 8, ..c };
        assert_ne!(generate_patient(&c).unwrap(), generate_patient(&other).unwrap());
    }

    #[test]
    fn meal_raises_glucose_within_an_hour() {
        let c = SynthConfig {
            bolus_per_10g: 0.0,
            ..quiet(4)
        };
        let meal = Meal {
            timestamp: c.start.plus_minutes(600),
            cho: 50.0,
            bolus: 0.0,
        };
        let r = generate_with_meals(&c, "p", &[meal]).unwrap();
        let after: Vec<f64> = r
            .events_of(EventKind::Glucose)
            .filter(|e| {
                let m = e.timestamp.minutes_since(meal.timestamp);
                m > 0.0 && m <= 60.0
            })
            .map(|e| e.value)
            .collect();
        assert_eq!(after.len(), 12);
        assert!(after.iter().any(|&g| g > c.baseline));
        // The kernel peak (60 min) is sampled, where the rise is gain * cho.
        let at_peak = c.baseline + c.meal_gain * 50.0;
        assert!(after.iter().any(|&g| (g - at_peak).abs() < 1e-9));
    }

    #[test]
    fn kernel_peaks_at_one() {
        let k = GammaKernel {
            peak_minutes: 45.0,
            width_minutes: 20.0,
        };
        assert!((k.eval(45.0) - 1.0).abs() < 1e-15);
        assert!(k.eval(40.0) < 1.0 && k.eval(50.0) < 1.0);
        assert_eq!(k.eval(0.0), 0.0);
        assert!(k.eval(k.support_minutes()) <= 1e-9 * (1.0 + 1e-9));
    }

    #[test]
    fn default_records_validate_and_are_unclipped() {
        let r = generate_patient(&SynthConfig::default()).unwrap();
        assert!(validate(&r).is_empty());
        assert!(r.notes.is_empty(), "{:?}", r.notes);
        assert!(r.total(EventKind::Cho) > 0.0);
        assert!(r.total(EventKind::Insulin) > 0.0);
    }

    #[test]
    fn extreme_physiology_is_flagged() {
        let c = SynthConfig {
            baseline: 500.0,
            ..quiet(4)
        };
        let r = generate_patient(&c).unwrap();
        assert_eq!(r.notes.len(), 1);
        assert!(validate(&r).is_empty());
    }

    #[test]
    fn cohort_ids_and_jitter() {
        let base = SynthConfig {
            days: 4,
            ..SynthConfig::default()
        };
        let cohort = generate_cohort(5, &base, 3).unwrap();
        let ids: Vec<&str> = cohort.iter().map(|r| r.patient_id.as_str()).collect();
        assert_eq!(ids, ["synth-001", "synth-002", "synth-003", "synth-004", "synth-005"]);
        let a = jittered_config(&base, 3, 0, DEFAULT_JITTER);
        let b = jittered_config(&base, 3, 1, DEFAULT_JITTER);
        assert_ne!(a.baseline, b.baseline);
        assert_eq!(cohort, generate_cohort(5, &base, 3).unwrap());
        assert!(generate_cohort(0, &base, 3).is_err());
    }

    #[test]
    fn rejects_short_or_broken_configs() {
        assert!(generate_patient(&quiet(3)).is_err());
        let c = SynthConfig {
            noise_std: -1.0,
            ..SynthConfig::default()
        };
        assert!(generate_patient(&c).is_err());
    }
}
