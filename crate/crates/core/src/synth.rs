//! Deterministic synthetic load/irradiance profiles.
//!
//! Three scenario kinds stand in for field data:
//!
//! - `summer-day`: 24 hourly steps; a wide irradiance bell (daylight 05-19,
//!   peak 1.1 kWh/m^2) and a load with a strong early-morning peak, a soft
//!   midday shoulder, and a moderate evening peak.
//! - `winter-day`: 24 hourly steps; a narrower, lower irradiance bell
//!   (daylight 07:30-16:30, peak 0.75) and a load that is lower in the early
//!   morning and higher towards noon and evening than the summer shape.
//! - `annual`: 365 daily-mean steps (dt = 24 h); load follows a seasonal
//!   cosine peaking mid-January with a weekday/weekend split, irradiance a
//!   seasonal cosine peaking mid-July.
//!
//! Shapes are closed-form with a small seeded jitter proportional to the
//! peak-to-base amplitude, so `base == peak` yields exactly constant load
//! and a fixed seed reproduces every series bit for bit. Hourly steps are
//! stamped at the half hour, daily steps at noon.

use chrono::{DateTime, Datelike, Duration, TimeZone, Utc, Weekday};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::DomainError;
use crate::series::TimeSeries;

/// Scenario kind selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SynthKind {
    SummerDay,
    WinterDay,
    Annual,
}

impl std::str::FromStr for SynthKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "summer-day" => Ok(Self::SummerDay),
            "winter-day" => Ok(Self::WinterDay),
            "annual" => Ok(Self::Annual),
            other => Err(format!(
                "unknown profile kind `{other}` (expected summer-day, winter-day, or annual)"
            )),
        }
    }
}

impl std::fmt::Display for SynthKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let name = match self {
            Self::SummerDay => "summer-day",
            Self::WinterDay => "winter-day",
            Self::Annual => "annual",
        };
        write!(f, "{name}")
    }
}

/// Profile amplitude and seed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SynthParams {
    pub peak_load_kw: f64,
    pub base_load_kw: f64,
    pub seed: u64,
}

impl Default for SynthParams {
    fn default() -> Self {
        Self {
            peak_load_kw: 4.2,
            base_load_kw: 1.2,
            seed: 42,
        }
    }
}

/// Fraction of the load amplitude used as jitter.
const LOAD_JITTER: f64 = 0.02;
/// Relative irradiance jitter (multiplicative, zero stays zero).
const IRRADIANCE_JITTER: f64 = 0.03;

/// Generates a (load, irradiance) pair for the requested scenario kind.
pub fn synth_profile(
    kind: SynthKind,
    params: &SynthParams,
) -> Result<(TimeSeries, TimeSeries), DomainError> {
    if !(params.peak_load_kw >= params.base_load_kw && params.base_load_kw >= 0.0) {
        return Err(DomainError::BadParameter {
            name: "peak_load_kw",
            value: params.peak_load_kw,
            constraint: "must satisfy peak >= base >= 0",
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    match kind {
        SynthKind::SummerDay => day_profile(params, &mut rng, DayShape::summer()),
        SynthKind::WinterDay => day_profile(params, &mut rng, DayShape::winter()),
        SynthKind::Annual => annual_profile(params, &mut rng),
    }
}

struct DayShape {
    /// Fixed calendar date, for timestamps only.
    year: i32,
    month: u32,
    day: u32,
    /// Sunrise/sunset in fractional hours and the irradiance peak.
    sunrise: f64,
    sunset: f64,
    irradiance_peak: f64,
    /// Load shape as (weight, center hour, width) bumps.
    bumps: [(f64, f64, f64); 3],
}

impl DayShape {
    fn summer() -> Self {
        Self {
            year: 2019,
            month: 6,
            day: 21,
            sunrise: 5.0,
            sunset: 19.0,
            irradiance_peak: 1.1,
            bumps: [(0.9, 6.5, 1.5), (0.5, 13.0, 3.0), (0.7, 20.0, 2.5)],
        }
    }

    fn winter() -> Self {
        Self {
            year: 2019,
            month: 12,
            day: 21,
            sunrise: 7.5,
            sunset: 16.5,
            irradiance_peak: 0.75,
            bumps: [(0.4, 7.5, 1.5), (0.9, 12.5, 2.5), (1.0, 19.0, 2.5)],
        }
    }

    fn load_shape(&self, hour_mid: f64) -> f64 {
        self.bumps
            .iter()
            .map(|(w, center, width)| w * gauss(hour_mid, *center, *width))
            .sum()
    }

    fn irradiance(&self, hour_mid: f64) -> f64 {
        if hour_mid <= self.sunrise || hour_mid >= self.sunset {
            return 0.0;
        }
        let phase = (hour_mid - self.sunrise) / (self.sunset - self.sunrise);
        self.irradiance_peak * (std::f64::consts::PI * phase).sin()
    }
}

fn gauss(x: f64, center: f64, width: f64) -> f64 {
    (-(x - center).powi(2) / (2.0 * width * width)).exp()
}

fn day_profile(
    params: &SynthParams,
    rng: &mut ChaCha8Rng,
    shape: DayShape,
) -> Result<(TimeSeries, TimeSeries), DomainError> {
    let t0 = Utc
        .with_ymd_and_hms(shape.year, shape.month, shape.day, 0, 30, 0)
        .unwrap();
    let timestamps: Vec<DateTime<Utc>> = (0..24).map(|h| t0 + Duration::hours(h)).collect();

    let shape_max = (0..24)
        .map(|h| shape.load_shape(h as f64 + 0.5))
        .fold(f64::MIN, f64::max);
    let amplitude = params.peak_load_kw - params.base_load_kw;

    let mut load = Vec::with_capacity(24);
    let mut irradiance = Vec::with_capacity(24);
    for h in 0..24 {
        let hm = h as f64 + 0.5;
        let jitter = rng.gen_range(-1.0..1.0) * LOAD_JITTER * amplitude;
        let value = params.base_load_kw + amplitude * shape.load_shape(hm) / shape_max + jitter;
        load.push(value.max(0.0));
        let irr = shape.irradiance(hm);
        let irr_jitter = 1.0 + rng.gen_range(-1.0..1.0) * IRRADIANCE_JITTER;
        irradiance.push((irr * irr_jitter).max(0.0));
    }

    Ok((
        TimeSeries::new(timestamps.clone(), load, "synth-load")
            .expect("constructed series is valid"),
        TimeSeries::new(timestamps, irradiance, "synth-irradiance")
            .expect("constructed series is valid"),
    ))
}

fn annual_profile(
    params: &SynthParams,
    rng: &mut ChaCha8Rng,
) -> Result<(TimeSeries, TimeSeries), DomainError> {
    let t0 = Utc.with_ymd_and_hms(2019, 1, 1, 12, 0, 0).unwrap();
    let timestamps: Vec<DateTime<Utc>> = (0..365).map(|d| t0 + Duration::days(d)).collect();
    let amplitude = params.peak_load_kw - params.base_load_kw;
    let two_pi = 2.0 * std::f64::consts::PI;

    let mut load = Vec::with_capacity(365);
    let mut irradiance = Vec::with_capacity(365);
    for (d, ts) in timestamps.iter().enumerate() {
        // Load peaks mid-January, weekdays above weekends.
        let seasonal = 0.5 * (1.0 + (two_pi * (d as f64 - 14.0) / 365.0).cos());
        let weekday_factor = match ts.weekday() {
            Weekday::Sat | Weekday::Sun => 0.75,
            _ => 1.0,
        };
        let jitter = rng.gen_range(-1.0..1.0) * LOAD_JITTER * amplitude;
        let value = params.base_load_kw + amplitude * seasonal * weekday_factor + jitter;
        load.push(value.max(0.0));

        // Irradiance peaks mid-July.
        let sun = 0.15 + 0.85 * 0.5 * (1.0 + (two_pi * (d as f64 - 195.0) / 365.0).cos());
        let irr_jitter = 1.0 + rng.gen_range(-1.0..1.0) * IRRADIANCE_JITTER;
        irradiance.push((sun * irr_jitter).max(0.0));
    }

    Ok((
        TimeSeries::new(timestamps.clone(), load, "synth-load")
            .expect("constructed series is valid"),
        TimeSeries::new(timestamps, irradiance, "synth-irradiance")
            .expect("constructed series is valid"),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixed_seed_reproduces_bit_identical_series() {
        let params = SynthParams::default();
        for kind in [SynthKind::SummerDay, SynthKind::WinterDay, SynthKind::Annual] {
            let (l1, i1) = synth_profile(kind, &params).unwrap();
            let (l2, i2) = synth_profile(kind, &params).unwrap();
            assert_eq!(l1, l2, "{kind} load not deterministic");
            assert_eq!(i1, i2, "{kind} irradiance not deterministic");
        }
    }

    #[test]
    fn zero_amplitude_gives_constant_load() {
        let params = SynthParams {
            peak_load_kw: 2.0,
            base_load_kw: 2.0,
            seed: 7,
        };
        let (load, _) = synth_profile(SynthKind::SummerDay, &params).unwrap();
        assert!(load.values.iter().all(|&v| v == 2.0));
    }

    #[test]
    fn summer_irradiance_integral_exceeds_winter() {
        let params = SynthParams::default();
        let (_, summer) = synth_profile(SynthKind::SummerDay, &params).unwrap();
        let (_, winter) = synth_profile(SynthKind::WinterDay, &params).unwrap();
        let total = |s: &TimeSeries| s.values.iter().sum::<f64>();
        assert!(total(&summer) > total(&winter));
    }

    #[test]
    fn winter_day_has_later_sunrise_and_higher_evening_load() {
        let params = SynthParams::default();
        let (summer_load, summer_irr) = synth_profile(SynthKind::SummerDay, &params).unwrap();
        let (winter_load, winter_irr) = synth_profile(SynthKind::WinterDay, &params).unwrap();
        // Sunrise: first nonzero irradiance hour comes later in winter.
        let first_sun = |s: &TimeSeries| s.values.iter().position(|&v| v > 0.0).unwrap();
        assert!(first_sun(&winter_irr) > first_sun(&summer_irr));
        // Evening (18-22h) load is higher in winter.
        let evening = |s: &TimeSeries| s.values[18..22].iter().sum::<f64>();
        assert!(evening(&winter_load) > evening(&summer_load));
        // Early morning (4-7h) load is lower in winter.
        let morning = |s: &TimeSeries| s.values[4..7].iter().sum::<f64>();
        assert!(morning(&winter_load) < morning(&summer_load));
    }

    #[test]
    fn annual_profile_shows_both_seasonalities() {
        let params = SynthParams::default();
        let (load, irr) = synth_profile(SynthKind::Annual, &params).unwrap();
        assert_eq!(load.len(), 365);
        assert_eq!(load.dt_hours, 24.0);

        let months = load.months();
        let mean_over = |s: &TimeSeries, pick: &dyn Fn(usize) -> bool| {
            let selected: Vec<f64> = s
                .values
                .iter()
                .enumerate()
                .filter(|(i, _)| pick(*i))
                .map(|(_, &v)| v)
                .collect();
            selected.iter().sum::<f64>() / selected.len() as f64
        };
        let winter = |i: usize| matches!(months[i], 12 | 1 | 2);
        let summer = |i: usize| matches!(months[i], 6..=8);
        assert!(mean_over(&load, &winter) > mean_over(&load, &summer));
        assert!(mean_over(&irr, &summer) > mean_over(&irr, &winter));

        let weekend: Vec<bool> = load
            .timestamps
            .iter()
            .map(|ts| matches!(ts.weekday(), Weekday::Sat | Weekday::Sun))
            .collect();
        assert!(
            mean_over(&load, &|i| !weekend[i]) > mean_over(&load, &|i| weekend[i]),
            "weekday load should exceed weekend load"
        );
    }

    #[test]
    fn invalid_amplitude_is_rejected() {
        let params = SynthParams {
            peak_load_kw: 1.0,
            base_load_kw: 2.0,
            seed: 1,
        };
        assert!(synth_profile(SynthKind::SummerDay, &params).is_err());
    }
}
