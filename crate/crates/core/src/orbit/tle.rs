//! Two-line element set ingestion. Only the fields needed for two-body
//! propagation are decoded; drag terms are checked for shape but ignored.

use std::f64::consts::PI;

use chrono::{DateTime, Datelike, Duration, TimeZone, Utc};

use super::{normalize_deg, KeplerianElements, MU_EARTH};
use crate::error::{Error, Result};

const LINE_LENGTH: usize = 69;

fn parse_error(line: u8, column: usize, message: impl Into<String>) -> Error {
    Error::TleParse {
        line,
        column,
        message: message.into(),
    }
}

/// TLE checksum: sum of digits plus one per minus sign, modulo 10, over the
/// first 68 characters.
pub fn checksum(line: &str) -> u8 {
    line.bytes()
        .take(LINE_LENGTH - 1)
        .map(|b| match b {
            b'0'..=b'9' => b - b'0',
            b'-' => 1,
            _ => 0,
        })
        .fold(0u8, |acc, d| (acc + d) % 10)
}

fn check_line(text: &str, number: u8) -> Result<&str> {
    let text = text.trim_end_matches(['\r', '\n']);
    if !text.is_ascii() {
        return Err(parse_error(number, 1, "line contains non-ASCII characters"));
    }
    if text.len() != LINE_LENGTH {
        return Err(parse_error(
            number,
            text.len().min(LINE_LENGTH) + 1,
            format!("expected {LINE_LENGTH} characters, found {}", text.len()),
        ));
    }
    if text.as_bytes()[0] != b'0' + number {
        return Err(parse_error(
            number,
            1,
            format!("line must start with '{number}'"),
        ));
    }
    let expected = text.as_bytes()[LINE_LENGTH - 1];
    if !expected.is_ascii_digit() {
        return Err(parse_error(number, LINE_LENGTH, "checksum is not a digit"));
    }
    let actual = checksum(text);
    if expected - b'0' != actual {
        return Err(parse_error(
            number,
            LINE_LENGTH,
            format!(
                "bad checksum: expected {actual}, found {}",
                expected as char
            ),
        ));
    }
    Ok(text)
}

/// Field at 1-based inclusive columns `start..=end`.
fn field(text: &str, start: usize, end: usize) -> &str {
    &text[start - 1..end]
}

fn parse_f64(text: &str, line: u8, start: usize, end: usize, what: &str) -> Result<f64> {
    let raw = field(text, start, end).trim();
    raw.parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| parse_error(line, start, format!("cannot parse {what} from {raw:?}")))
}

fn parse_u32(text: &str, line: u8, start: usize, end: usize, what: &str) -> Result<u32> {
    let raw = field(text, start, end).trim();
    raw.parse::<u32>()
        .map_err(|_| parse_error(line, start, format!("cannot parse {what} from {raw:?}")))
}

fn parse_epoch(line1: &str) -> Result<DateTime<Utc>> {
    let yy = parse_u32(line1, 1, 19, 20, "epoch year")?;
    let year = if yy < 57 { 2000 + yy } else { 1900 + yy } as i32;
    let day = parse_f64(line1, 1, 21, 32, "epoch day")?;
    if !(1.0..367.0).contains(&day) {
        return Err(parse_error(1, 21, format!("epoch day {day} out of range")));
    }
    let jan1 = Utc
        .with_ymd_and_hms(year, 1, 1, 0, 0, 0)
        .single()
        .ok_or_else(|| parse_error(1, 19, "invalid epoch year"))?;
    let micros = ((day - 1.0) * 86_400e6).round() as i64;
    Ok(jan1 + Duration::microseconds(micros))
}

/// Decode one two-line element set.
pub fn parse_tle(line1: &str, line2: &str) -> Result<KeplerianElements> {
    let l1 = check_line(line1, 1)?;
    let l2 = check_line(line2, 2)?;

    let sat1 = field(l1, 3, 7).trim();
    let sat2 = field(l2, 3, 7).trim();
    if sat1 != sat2 {
        return Err(parse_error(
            2,
            3,
            format!("catalog number {sat2:?} does not match line 1 ({sat1:?})"),
        ));
    }

    let epoch = parse_epoch(l1)?;
    let inclination = parse_f64(l2, 2, 9, 16, "inclination")?;
    let raan = parse_f64(l2, 2, 18, 25, "RAAN")?;
    let ecc_digits = field(l2, 27, 33).trim();
    if ecc_digits.is_empty() || !ecc_digits.bytes().all(|b| b.is_ascii_digit()) {
        return Err(parse_error(
            2,
            27,
            format!("cannot parse eccentricity from {ecc_digits:?}"),
        ));
    }
    let eccentricity: f64 = format!("0.{ecc_digits}").parse().unwrap_or(0.0);
    let arg_perigee = parse_f64(l2, 2, 35, 42, "argument of perigee")?;
    let mean_anomaly = parse_f64(l2, 2, 44, 51, "mean anomaly")?;
    let rev_per_day = parse_f64(l2, 2, 53, 63, "mean motion")?;
    if rev_per_day <= 0.0 {
        return Err(parse_error(2, 53, "mean motion must be positive"));
    }
    if !(0.0..=180.0).contains(&inclination) {
        return Err(parse_error(
            2,
            9,
            format!("inclination {inclination} out of range"),
        ));
    }

    let n_rad_s = rev_per_day * 2.0 * PI / 86_400.0;
    let semi_major_axis_km = (MU_EARTH / (n_rad_s * n_rad_s)).cbrt();

    Ok(KeplerianElements {
        semi_major_axis_km,
        eccentricity,
        inclination_deg: inclination,
        raan_deg: normalize_deg(raan),
        arg_perigee_deg: normalize_deg(arg_perigee),
        arg_latitude_deg: normalize_deg(arg_perigee + mean_anomaly),
        epoch,
    })
}

/// Encode elements as a TLE pair with valid checksums. Drag terms are zero.
pub fn format_tle(elements: &KeplerianElements, catalog_number: u32) -> (String, String) {
    let epoch = elements.epoch;
    let jan1 = Utc
        .with_ymd_and_hms(epoch.year(), 1, 1, 0, 0, 0)
        .single()
        .expect("January 1st exists");
    let day = 1.0 + super::seconds_between(jan1, epoch) / 86_400.0;
    let yy = epoch.year().rem_euclid(100);

    let mut line1 = format!(
        "1 {:05}U 00000A   {:02}{:012.8}  .00000000  00000-0  00000-0 0  999",
        catalog_number % 100_000,
        yy,
        day
    );
    line1.push((b'0' + checksum(&line1)) as char);

    let n_rev_day = elements.mean_motion_rad_s() * 86_400.0 / (2.0 * PI);
    let mean_anomaly = normalize_deg(elements.arg_latitude_deg - elements.arg_perigee_deg);
    let ecc = format!("{:.7}", elements.eccentricity);
    let mut line2 = format!(
        "2 {:05} {:8.4} {:8.4} {} {:8.4} {:8.4} {:11.8}    0",
        catalog_number % 100_000,
        elements.inclination_deg,
        elements.raan_deg,
        &ecc[2..],
        elements.arg_perigee_deg,
        mean_anomaly,
        n_rev_day,
    );
    line2.push((b'0' + checksum(&line2)) as char);
    (line1, line2)
}

/// One entry of a TLE file, with the optional name line of the three-line
/// format.
#[derive(Debug, Clone, PartialEq)]
pub struct NamedTle {
    pub name: Option<String>,
    pub elements: KeplerianElements,
}

/// Parse a file of two- or three-line element sets. Blank lines are skipped.
pub fn parse_tle_file(text: &str) -> Result<Vec<NamedTle>> {
    let lines: Vec<&str> = text
        .lines()
        .map(|l| l.trim_end())
        .filter(|l| !l.is_empty())
        .collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < lines.len() {
        let (name, l1) = if lines[i].starts_with("1 ") && lines[i].len() == LINE_LENGTH {
            (None, i)
        } else {
            let name = lines[i].strip_prefix("0 ").unwrap_or(lines[i]).trim();
            (Some(name.to_string()), i + 1)
        };
        if l1 + 1 >= lines.len() {
            return Err(parse_error(1, 1, "truncated element set at end of file"));
        }
        let elements = parse_tle(lines[l1], lines[l1 + 1])?;
        out.push(NamedTle { name, elements });
        i = l1 + 2;
    }
    Ok(out)
}
