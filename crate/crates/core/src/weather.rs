//! Hourly weather records, day/night classification and the day-level
//! averages that feed the crop and heating models.
//!
//! Weather is ingested from a CSV file with header
//! `hour,radiation_out,temp_out,temp_sky,wind` (24 rows per day, days in
//! chronological order) or synthesized from a [`WeatherProfile`].

use std::f64::consts::PI;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const HOURS_PER_DAY: usize = 24;

/// Outdoor radiation at or above this level (W m⁻²) makes an hour a day hour.
pub const DAY_RADIATION_THRESHOLD: f64 = 20.0;

const SKY_BAND: f64 = 60.0;

pub const CSV_HEADER: [&str; 5] = ["hour", "radiation_out", "temp_out", "temp_sky", "wind"];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HourlyWeather {
    /// Outdoor global radiation, W m⁻².
    pub radiation_out: f64,
    /// Outdoor air temperature, °C.
    pub temp_out: f64,
    /// Sky temperature, °C.
    pub temp_sky: f64,
    /// Wind speed, m s⁻¹.
    pub wind: f64,
}

impl HourlyWeather {
    pub fn validate(&self) -> Result<()> {
        let fields = [self.radiation_out, self.temp_out, self.temp_sky, self.wind];
        if fields.iter().any(|v| !v.is_finite()) {
            return Err(Error::Validation(format!("non-finite weather value in {self:?}")));
        }
        if self.radiation_out < 0.0 {
            return Err(Error::Validation(format!(
                "negative radiation_out {}",
                self.radiation_out
            )));
        }
        if self.wind < 0.0 {
            return Err(Error::Validation(format!("negative wind {}", self.wind)));
        }
        if (self.temp_sky - self.temp_out).abs() > SKY_BAND {
            return Err(Error::Validation(format!(
                "temp_sky {} outside ±{SKY_BAND} °C of temp_out {}",
                self.temp_sky, self.temp_out
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeatherDay {
    hours: Vec<HourlyWeather>,
}

impl WeatherDay {
    pub fn new(hours: Vec<HourlyWeather>) -> Result<Self> {
        if hours.len() != HOURS_PER_DAY {
            return Err(Error::Structure(format!(
                "a weather day needs {HOURS_PER_DAY} hours, got {}",
                hours.len()
            )));
        }
        for h in &hours {
            h.validate()?;
        }
        Ok(Self { hours })
    }

    pub fn hours(&self) -> &[HourlyWeather] {
        &self.hours
    }

    pub fn mean_temp(&self) -> f64 {
        self.hours.iter().map(|h| h.temp_out).sum::<f64>() / HOURS_PER_DAY as f64
    }

    pub fn mean_radiation(&self) -> f64 {
        self.hours.iter().map(|h| h.radiation_out).sum::<f64>() / HOURS_PER_DAY as f64
    }

    /// Bitwise equality of all hourly values; used to share per-day caches.
    pub fn same_bits(&self, other: &WeatherDay) -> bool {
        self.hours.iter().zip(&other.hours).all(|(a, b)| {
            a.radiation_out.to_bits() == b.radiation_out.to_bits()
                && a.temp_out.to_bits() == b.temp_out.to_bits()
                && a.temp_sky.to_bits() == b.temp_sky.to_bits()
                && a.wind.to_bits() == b.wind.to_bits()
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DayNightMask {
    pub is_day: [bool; HOURS_PER_DAY],
}

impl DayNightMask {
    pub fn n_day(&self) -> usize {
        self.is_day.iter().filter(|&&d| d).count()
    }

    pub fn n_night(&self) -> usize {
        HOURS_PER_DAY - self.n_day()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DaySummary {
    pub n_day_hours: usize,
    pub n_night_hours: usize,
    /// Mean indoor radiation over day hours, W m⁻² (0 if there are none).
    pub gamma_day: f64,
    /// Mean indoor radiation over night hours, W m⁻² (0 if there are none).
    pub gamma_night: f64,
    pub mask: DayNightMask,
}

/// Parametric day used in place of measured records.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeatherProfile {
    /// Daily mean outdoor temperature, °C.
    pub mean_temp: f64,
    /// Amplitude of the diurnal temperature cycle, °C.
    pub temp_amplitude: f64,
    /// Radiation at solar noon, W m⁻².
    pub peak_radiation: f64,
    /// Hours between sunrise and sunset.
    pub day_length: f64,
    /// Outdoor temperature minus sky temperature, °C.
    pub sky_depression: f64,
    /// Constant wind speed, m s⁻¹.
    pub wind_mean: f64,
}

impl WeatherProfile {
    pub fn validate(&self) -> Result<()> {
        let fields = [
            self.mean_temp,
            self.temp_amplitude,
            self.peak_radiation,
            self.day_length,
            self.sky_depression,
            self.wind_mean,
        ];
        if fields.iter().any(|v| !v.is_finite()) {
            return Err(Error::Validation("non-finite weather profile field".into()));
        }
        if !(0.0..=24.0).contains(&self.day_length) {
            return Err(Error::Validation(format!(
                "day_length {} outside [0, 24]",
                self.day_length
            )));
        }
        if self.peak_radiation < 0.0 {
            return Err(Error::Validation("peak_radiation must be >= 0".into()));
        }
        if self.wind_mean < 0.0 {
            return Err(Error::Validation("wind_mean must be >= 0".into()));
        }
        if self.sky_depression.abs() > SKY_BAND {
            return Err(Error::Validation(format!(
                "sky_depression must lie within ±{SKY_BAND} °C"
            )));
        }
        Ok(())
    }

    /// Peak radiation whose hourly half-sine samples average to `mean` over 24 h.
    pub fn peak_for_mean_radiation(mean: f64, day_length: f64) -> f64 {
        let shape: f64 = (0..HOURS_PER_DAY).map(|h| half_sine(mid_hour(h), day_length)).sum();
        if shape > 0.0 {
            mean * HOURS_PER_DAY as f64 / shape
        } else {
            0.0
        }
    }

    /// Late-March surrogate: cold and bright, growth is heat limited.
    pub fn early_spring() -> Self {
        Self::from_means(4.6, 190.0, 12.0, 3.0, 10.0, 3.0)
    }

    /// Early-January surrogate: cold and dark.
    pub fn midwinter() -> Self {
        Self::from_means(-4.0, 53.0, 8.0, 2.0, 8.0, 4.0)
    }

    /// Early-July surrogate: warm and bright, growth is light limited.
    pub fn midsummer() -> Self {
        Self::from_means(18.0, 330.0, 16.0, 4.0, 12.0, 2.0)
    }

    pub fn preset(name: &str) -> Option<Self> {
        match name {
            "day79" | "early_spring" => Some(Self::early_spring()),
            "day5" | "midwinter" => Some(Self::midwinter()),
            "day187" | "midsummer" => Some(Self::midsummer()),
            _ => None,
        }
    }

    fn from_means(
        mean_temp: f64,
        mean_radiation: f64,
        day_length: f64,
        temp_amplitude: f64,
        sky_depression: f64,
        wind_mean: f64,
    ) -> Self {
        Self {
            mean_temp,
            temp_amplitude,
            peak_radiation: Self::peak_for_mean_radiation(mean_radiation, day_length),
            day_length,
            sky_depression,
            wind_mean,
        }
    }
}

/// Hour `h` covers `[h, h + 1)`; synthetic values are taken at its middle
/// so they approximate hourly means.
fn mid_hour(h: usize) -> f64 {
    h as f64 + 0.5
}

/// Unit half-sine of width `day_length` centred on hour 12, sampled at `t`.
fn half_sine(t: f64, day_length: f64) -> f64 {
    if day_length <= 0.0 {
        return 0.0;
    }
    let rise = 12.0 - day_length / 2.0;
    let phase = (t - rise) / day_length;
    if phase > 0.0 && phase < 1.0 {
        (PI * phase).sin()
    } else {
        0.0
    }
}

pub fn synthesize_weather(profile: &WeatherProfile) -> Result<WeatherDay> {
    profile.validate()?;
    let hours = (0..HOURS_PER_DAY)
        .map(|h| {
            let t = mid_hour(h);
            let temp_out = profile.mean_temp
                + profile.temp_amplitude * (2.0 * PI * (t - 14.0) / HOURS_PER_DAY as f64).cos();
            HourlyWeather {
                radiation_out: profile.peak_radiation * half_sine(t, profile.day_length),
                temp_out,
                temp_sky: temp_out - profile.sky_depression,
                wind: profile.wind_mean,
            }
        })
        .collect();
    WeatherDay::new(hours)
}

pub fn classify_hours(day: &WeatherDay) -> DayNightMask {
    let mut is_day = [false; HOURS_PER_DAY];
    for (flag, h) in is_day.iter_mut().zip(day.hours()) {
        *flag = h.radiation_out >= DAY_RADIATION_THRESHOLD;
    }
    DayNightMask { is_day }
}

/// Day-level radiation averages. `cover_transmissivity` converts outdoor
/// to indoor radiation.
pub fn day_summary(day: &WeatherDay, cover_transmissivity: f64) -> DaySummary {
    let mask = classify_hours(day);
    let (mut sum_day, mut sum_night) = (0.0, 0.0);
    for (h, &is_day) in day.hours().iter().zip(&mask.is_day) {
        let indoor = cover_transmissivity * h.radiation_out;
        if is_day {
            sum_day += indoor;
        } else {
            sum_night += indoor;
        }
    }
    let n_day = mask.n_day();
    let n_night = mask.n_night();
    DaySummary {
        n_day_hours: n_day,
        n_night_hours: n_night,
        gamma_day: class_mean(sum_day, n_day),
        gamma_night: class_mean(sum_night, n_night),
        mask,
    }
}

fn class_mean(sum: f64, count: usize) -> f64 {
    if count == 0 {
        0.0
    } else {
        sum / count as f64
    }
}

/// Mean indoor temperatures over day and night hours. Indoor air never
/// drops below outdoor air; an empty class yields 0.
pub fn realized_temps(day: &WeatherDay, mask: &DayNightMask, u_day: f64, u_night: f64) -> (f64, f64) {
    let (mut sum_day, mut sum_night) = (0.0, 0.0);
    for (h, &is_day) in day.hours().iter().zip(&mask.is_day) {
        if is_day {
            sum_day += h.temp_out.max(u_day);
        } else {
            sum_night += h.temp_out.max(u_night);
        }
    }
    (
        class_mean(sum_day, mask.n_day()),
        class_mean(sum_night, mask.n_night()),
    )
}

pub fn load_weather(path: impl AsRef<Path>) -> Result<Vec<WeatherDay>> {
    let path = path.as_ref();
    // An unreadable input is reported like any other bad input.
    let file = std::fs::File::open(path)
        .map_err(|e| Error::Validation(format!("cannot open {}: {e}", path.display())))?;
    read_weather(file)
}

pub fn read_weather<R: Read>(reader: R) -> Result<Vec<WeatherDay>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let header = rdr.headers()?.clone();
    if header.iter().ne(CSV_HEADER.iter().copied()) {
        return Err(Error::Parse {
            line: 1,
            message: format!(
                "expected header `{}`, found `{}`",
                CSV_HEADER.join(","),
                header.iter().collect::<Vec<_>>().join(",")
            ),
        });
    }

    let mut hours = Vec::new();
    for (row, record) in rdr.records().enumerate() {
        let line = row + 2;
        let record = record.map_err(|e| Error::Parse {
            line,
            message: e.to_string(),
        })?;
        if record.len() != CSV_HEADER.len() {
            return Err(Error::Parse {
                line,
                message: format!("expected {} fields, found {}", CSV_HEADER.len(), record.len()),
            });
        }
        let field = |idx: usize| -> Result<f64> {
            record[idx].parse::<f64>().map_err(|e| Error::Parse {
                line,
                message: format!("{}: {e}", CSV_HEADER[idx]),
            })
        };
        let hour: usize = record[0].parse().map_err(|e| Error::Parse {
            line,
            message: format!("hour: {e}"),
        })?;
        if hour != row % HOURS_PER_DAY {
            return Err(Error::Parse {
                line,
                message: format!("hour {hour} out of sequence, expected {}", row % HOURS_PER_DAY),
            });
        }
        let h = HourlyWeather {
            radiation_out: field(1)?,
            temp_out: field(2)?,
            temp_sky: field(3)?,
            wind: field(4)?,
        };
        h.validate().map_err(|e| match e {
            Error::Validation(msg) => Error::Validation(format!("line {line}: {msg}")),
            other => other,
        })?;
        hours.push(h);
    }

    if hours.is_empty() || hours.len() % HOURS_PER_DAY != 0 {
        return Err(Error::Structure(format!(
            "{} hourly rows is not a positive multiple of {HOURS_PER_DAY}",
            hours.len()
        )));
    }
    hours
        .chunks(HOURS_PER_DAY)
        .map(|chunk| WeatherDay::new(chunk.to_vec()))
        .collect()
}

pub fn write_weather<W: Write>(writer: W, days: &[WeatherDay]) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    wtr.write_record(CSV_HEADER)?;
    for day in days {
        for (h, w) in day.hours().iter().enumerate() {
            wtr.write_record([
                h.to_string(),
                w.radiation_out.to_string(),
                w.temp_out.to_string(),
                w.temp_sky.to_string(),
                w.wind.to_string(),
            ])?;
        }
    }
    wtr.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn uniform_day(radiation: f64, temp: f64) -> WeatherDay {
        WeatherDay::new(vec![
            HourlyWeather {
                radiation_out: radiation,
                temp_out: temp,
                temp_sky: temp - 10.0,
                wind: 2.0,
            };
            HOURS_PER_DAY
        ])
        .unwrap()
    }

    fn csv_rows(n: usize) -> String {
        let mut s = String::from("hour,radiation_out,temp_out,temp_sky,wind\n");
        for r in 0..n {
            s.push_str(&format!("{},{},5.0,-5.0,3.0\n", r % 24, if r % 24 > 7 { 300 } else { 0 }));
        }
        s
    }

    #[test]
    fn load_groups_rows_into_days() {
        let days = read_weather(csv_rows(48).as_bytes()).unwrap();
        assert_eq!(days.len(), 2);
        assert_eq!(days[1].hours()[8].radiation_out, 300.0);
    }

    #[test]
    fn load_rejects_partial_day() {
        let err = read_weather(csv_rows(25).as_bytes()).unwrap_err();
        assert!(matches!(err, Error::Structure(_)), "{err}");
    }

    #[test]
    fn load_rejects_negative_radiation() {
        let text = csv_rows(24).replacen("0,0,5.0", "0,-5,5.0", 1);
        let err = read_weather(text.as_bytes()).unwrap_err();
        assert!(matches!(err, Error::Validation(_)), "{err}");
    }

    #[test]
    fn load_reports_line_of_malformed_row() {
        let text = csv_rows(24).replacen("3,0,5.0", "3,abc,5.0", 1);
        match read_weather(text.as_bytes()).unwrap_err() {
            Error::Parse { line, .. } => assert_eq!(line, 5),
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn load_rejects_wrong_header() {
        let text = csv_rows(24).replacen("temp_sky", "sky", 1);
        assert!(matches!(
            read_weather(text.as_bytes()).unwrap_err(),
            Error::Parse { line: 1, .. }
        ));
    }

    #[test]
    fn write_then_read_is_lossless() {
        let day = synthesize_weather(&WeatherProfile::early_spring()).unwrap();
        let mut buf = Vec::new();
        write_weather(&mut buf, &[day.clone(), day.clone()]).unwrap();
        let back = read_weather(buf.as_slice()).unwrap();
        assert_eq!(back, vec![day.clone(), day]);
    }

    #[test]
    fn classification_threshold() {
        let mut hours = uniform_day(0.0, 5.0).hours().to_vec();
        hours[3].radiation_out = 19.9;
        hours[4].radiation_out = 20.0;
        let mask = classify_hours(&WeatherDay::new(hours).unwrap());
        assert!(!mask.is_day[3]);
        assert!(mask.is_day[4]);
        assert_eq!(mask.n_day(), 1);

        assert_eq!(classify_hours(&uniform_day(0.0, 5.0)).n_day(), 0);
        assert_eq!(classify_hours(&uniform_day(500.0, 5.0)).n_day(), 24);
    }

    #[test]
    fn summary_averages() {
        let s = day_summary(&uniform_day(100.0, 5.0), 0.7);
        assert!((s.gamma_day - 70.0).abs() < 1e-12);
        assert_eq!(s.n_night_hours, 0);
        assert_eq!(s.gamma_night, 0.0);

        let s = day_summary(&uniform_day(0.0, 5.0), 0.7);
        assert_eq!(s.n_day_hours, 0);
        assert_eq!(s.gamma_day, 0.0);

        let mut hours = uniform_day(0.0, 5.0).hours().to_vec();
        for h in hours.iter_mut().take(12) {
            h.radiation_out = 200.0;
        }
        let s = day_summary(&WeatherDay::new(hours).unwrap(), 0.7);
        assert!((s.gamma_day - 140.0).abs() < 1e-12);
        assert_eq!(s.gamma_night, 0.0);
        assert_eq!(s.n_day_hours + s.n_night_hours, 24);
    }

    #[test]
    fn realized_temperatures() {
        let day = uniform_day(300.0, 4.6);
        let mask = classify_hours(&day);
        assert_eq!(realized_temps(&day, &mask, 15.0, 5.0).0, 15.0);

        let day = uniform_day(300.0, 18.0);
        assert_eq!(realized_temps(&day, &mask, 10.0, 5.0).0, 18.0);

        let mut hours = uniform_day(300.0, 0.0).hours().to_vec();
        for (i, h) in hours.iter_mut().enumerate() {
            h.temp_out = if i % 2 == 0 { 0.0 } else { 10.0 };
        }
        let day = WeatherDay::new(hours).unwrap();
        let (t_day, t_night) = realized_temps(&day, &classify_hours(&day), 5.0, 5.0);
        assert!((t_day - 7.5).abs() < 1e-12);
        assert_eq!(t_night, 0.0);
    }

    #[test]
    fn synthetic_profile_shapes() {
        let dark = WeatherProfile {
            peak_radiation: 0.0,
            ..WeatherProfile::early_spring()
        };
        let day = synthesize_weather(&dark).unwrap();
        assert_eq!(classify_hours(&day).n_day(), 0);

        let flat = WeatherProfile {
            mean_temp: 4.6,
            temp_amplitude: 0.0,
            ..WeatherProfile::early_spring()
        };
        let day = synthesize_weather(&flat).unwrap();
        assert!(day.hours().iter().all(|h| h.temp_out == 4.6));
    }

    #[test]
    fn full_day_half_sine_mean() {
        // Trapezoid quadrature of a half-sine over [0, 24] at fine resolution.
        let steps = 240_000;
        let dt = 24.0 / steps as f64;
        let integral: f64 = (0..=steps)
            .map(|s| {
                let t = s as f64 * dt;
                let w = if s == 0 || s == steps { 0.5 } else { 1.0 };
                w * 100.0 * (PI * t / 24.0).sin()
            })
            .sum::<f64>()
            * dt;
        let continuous_mean = integral / 24.0;
        assert!((continuous_mean - 63.66).abs() < 0.01);

        let day = synthesize_weather(&WeatherProfile {
            peak_radiation: 100.0,
            day_length: 24.0,
            ..WeatherProfile::early_spring()
        })
        .unwrap();
        let rel = (day.mean_radiation() - continuous_mean).abs() / continuous_mean;
        assert!(rel < 0.01, "hourly mean {} vs {continuous_mean}", day.mean_radiation());
    }

    #[test]
    fn presets_hit_stated_day_means() {
        for (profile, temp, rad) in [
            (WeatherProfile::early_spring(), 4.6, 190.0),
            (WeatherProfile::midwinter(), -4.0, 53.0),
            (WeatherProfile::midsummer(), 18.0, 330.0),
        ] {
            let day = synthesize_weather(&profile).unwrap();
            assert!((day.mean_temp() - temp).abs() < 1e-9);
            assert!((day.mean_radiation() - rad).abs() < 1e-9);
            let continuous = 2.0 / PI * profile.peak_radiation * profile.day_length / 24.0;
            let gap = (day.mean_radiation() - continuous).abs() / continuous;
            assert!(gap < 0.01, "{profile:?}: hourly {} vs continuous {continuous}", day.mean_radiation());
        }
    }

    #[test]
    fn synthesis_is_pure() {
        let p = WeatherProfile::midsummer();
        let a = synthesize_weather(&p).unwrap();
        let b = synthesize_weather(&p).unwrap();
        assert!(a.same_bits(&b));
    }

    #[test]
    fn invalid_profile_rejected() {
        let p = WeatherProfile {
            day_length: 25.0,
            ..WeatherProfile::early_spring()
        };
        assert!(synthesize_weather(&p).is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn day_strategy() -> impl Strategy<Value = WeatherDay> {
            proptest::collection::vec((0.0..800.0f64, -10.0..30.0f64), 24).prop_map(|v| {
                WeatherDay::new(
                    v.into_iter()
                        .map(|(r, t)| HourlyWeather {
                            radiation_out: r,
                            temp_out: t,
                            temp_sky: t - 8.0,
                            wind: 3.0,
                        })
                        .collect(),
                )
                .unwrap()
            })
        }

        proptest! {
            #[test]
            fn classification_only_reads_radiation(day in day_strategy(), shift in -5.0..5.0f64) {
                let mask = classify_hours(&day);
                let shifted = WeatherDay::new(day.hours().iter().map(|h| HourlyWeather {
                    temp_out: h.temp_out + shift,
                    temp_sky: h.temp_sky + shift,
                    ..*h
                }).collect()).unwrap();
                prop_assert_eq!(mask, classify_hours(&shifted));
                prop_assert_eq!(mask, classify_hours(&day));
            }

            #[test]
            fn realized_day_temp_monotone(day in day_strategy(), u in 5.0..20.0f64, du in 0.0..5.0f64) {
                let mask = classify_hours(&day);
                let (lo, _) = realized_temps(&day, &mask, u, 5.0);
                let (hi, _) = realized_temps(&day, &mask, u + du, 5.0);
                prop_assert!(hi >= lo);
                if mask.n_day() > 0 {
                    let mean_out = day.hours().iter().zip(&mask.is_day)
                        .filter(|(_, &d)| d).map(|(h, _)| h.temp_out).sum::<f64>() / mask.n_day() as f64;
                    prop_assert!(lo >= mean_out - 1e-12);
                }
            }

            #[test]
            fn summary_scales_linearly(day in day_strategy(), scale in 0.1..10.0f64) {
                let base = day_summary(&day, 0.7);
                let scaled = WeatherDay::new(day.hours().iter().map(|h| HourlyWeather {
                    radiation_out: h.radiation_out * scale,
                    ..*h
                }).collect()).unwrap();
                // Same mask required; compute averages under the original mask.
                let mut sum = 0.0;
                for (h, &d) in scaled.hours().iter().zip(&base.mask.is_day) {
                    if d { sum += 0.7 * h.radiation_out; }
                }
                if base.n_day_hours > 0 {
                    let g = sum / base.n_day_hours as f64;
                    prop_assert!((g - scale * base.gamma_day).abs() <= 1e-9 * g.abs().max(1.0));
                }
            }

            #[test]
            fn day_class_is_brighter(day in day_strategy()) {
                let s = day_summary(&day, 0.7);
                if s.n_day_hours > 0 && s.n_night_hours > 0 {
                    prop_assert!(s.gamma_day >= s.gamma_night);
                }
            }
        }
    }
}
