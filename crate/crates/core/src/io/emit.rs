//! CSV and JSON result files.
//!
//! All numeric fields carry six significant digits, timestamps are RFC 3339
//! UTC with a `Z` suffix and lines end in `\n`, so the same inputs always
//! yield byte-identical files. `manifest.json` lists every file with its
//! SHA-256 digest.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::analysis::{GainTable, GnssStationComparison, JammingRun, RunHistogram, SummaryRow};
use crate::engine::{SinrSeries, SweepCurves};
use crate::error::{Error, Result};

pub const MANIFEST_FILE: &str = "manifest.json";

/// Everything a command may emit. Absent parts produce no file.
#[derive(Debug, Clone, Default)]
pub struct ResultBundle {
    pub fingerprint: String,
    pub series: Vec<SinrSeries>,
    pub summary: Vec<SummaryRow>,
    /// `(label, [(station, jamming %)])`
    pub station_pct: Vec<(String, Vec<(String, f64)>)>,
    pub runs: Option<(Vec<JammingRun>, RunHistogram)>,
    pub sweep: Option<SweepCurves>,
    pub gain_table: Option<GainTable>,
    pub gnss: Vec<GnssStationComparison>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub fingerprint: String,
    pub files: BTreeMap<String, ManifestEntry>,
}

/// Six significant digits; empty for non-finite values.
pub fn fmt_sig(v: f64) -> String {
    if !v.is_finite() {
        return String::new();
    }
    let rounded: f64 = format!("{v:.5e}").parse().expect("formatted float parses");
    if rounded == 0.0 {
        return "0".to_string();
    }
    let mag = rounded.abs();
    if (1e-4..1e15).contains(&mag) {
        format!("{rounded}")
    } else {
        format!("{rounded:e}")
    }
}

pub fn fmt_time(t: DateTime<Utc>) -> String {
    t.to_rfc3339_opts(chrono::SecondsFormat::Secs, true)
}

fn opt_sig(v: Option<f64>) -> String {
    v.map(fmt_sig).unwrap_or_default()
}

/// File-name-safe version of a station or constellation name.
pub fn file_stem(name: &str) -> String {
    name.chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '-' || c == '_' {
                c
            } else {
                '_'
            }
        })
        .collect()
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

pub fn series_csv(series: &SinrSeries) -> String {
    let mut out =
        String::from("time_utc,signal_dbw,interference_dbw,noise_dbw,sinr_db,n_interferers\n");
    for r in &series.records {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            fmt_time(r.time),
            fmt_sig(r.signal_dbw),
            fmt_sig(r.interference_dbw),
            fmt_sig(r.noise_dbw),
            fmt_sig(r.sinr_db),
            r.n_visible_interferers
        );
    }
    out
}

pub fn summary_csv(rows: &[SummaryRow]) -> String {
    let mut out = String::from("name,mean_sinr_db,mean_jamming_pct,mean_jam_period_s\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{}",
            csv_field(&r.constellation),
            fmt_sig(r.mean_sinr_db),
            fmt_sig(r.mean_jamming_pct),
            fmt_sig(r.mean_jam_period_s)
        );
    }
    out
}

fn station_pct_csv(rows: &[(String, Vec<(String, f64)>)]) -> String {
    let mut out = String::from("name,station,jamming_pct\n");
    for (label, stations) in rows {
        for (station, pct) in stations {
            let _ = writeln!(
                out,
                "{},{},{}",
                csv_field(label),
                csv_field(station),
                fmt_sig(*pct)
            );
        }
    }
    out
}

pub fn histogram_csv(h: &RunHistogram) -> String {
    let mut out = String::from("bin_start_s,bin_end_s,count\n");
    for (k, c) in h.counts.iter().enumerate() {
        let lo = k as u64 * h.bin_s;
        let _ = writeln!(out, "{},{},{}", lo, lo + h.bin_s, c);
    }
    out
}

fn runs_csv(runs: &[JammingRun]) -> String {
    let mut out = String::from("station,start_utc,length_s\n");
    for r in runs {
        let _ = writeln!(
            out,
            "{},{},{}",
            csv_field(&r.station),
            fmt_time(r.start),
            fmt_sig(r.length_s)
        );
    }
    out
}

fn sweep_csv(eirp: &[f64], pct: &[f64]) -> String {
    let mut out = String::from("eirp_dbw,jamming_pct\n");
    for (e, p) in eirp.iter().zip(pct) {
        let _ = writeln!(out, "{},{}", fmt_sig(*e), fmt_sig(*p));
    }
    out
}

pub fn gain_table_csv(t: &GainTable) -> String {
    let mut out = String::from("phi_deg");
    for l in &t.labels {
        let _ = write!(out, ",{}_dbi", file_stem(l));
    }
    out.push('\n');
    for (k, phi) in t.phi_deg.iter().enumerate() {
        out.push_str(&fmt_sig(*phi));
        for g in &t.gains {
            let _ = write!(out, ",{}", fmt_sig(g[k]));
        }
        out.push('\n');
    }
    out
}

fn gnss_csv(rows: &[GnssStationComparison]) -> String {
    let mut out = String::from("station,time_utc,gnss_dbw,cubesat_dbw\n");
    for s in rows {
        for (k, t) in s.times.iter().enumerate() {
            let _ = writeln!(
                out,
                "{},{},{},{}",
                csv_field(&s.station.name),
                fmt_time(*t),
                opt_sig(s.gnss_dbw[k]),
                opt_sig(s.cubesat_dbw[k])
            );
        }
    }
    out
}

fn gnss_summary_csv(rows: &[GnssStationComparison]) -> String {
    let mut out = String::from("station,gnss_daily_mean_dbw,cubesat_daily_mean_dbw\n");
    for s in rows {
        let _ = writeln!(
            out,
            "{},{},{}",
            csv_field(&s.station.name),
            opt_sig(s.gnss_daily_mean_dbw),
            opt_sig(s.cubesat_daily_mean_dbw)
        );
    }
    out
}

/// Render every file of the bundle, keyed by file name.
pub fn render(bundle: &ResultBundle) -> Result<BTreeMap<String, String>> {
    let mut files = BTreeMap::new();
    let mut add = |name: String, body: String| -> Result<()> {
        if files.insert(name.clone(), body).is_some() {
            return Err(Error::Consistency(format!(
                "two outputs map to file {name}"
            )));
        }
        Ok(())
    };
    for s in &bundle.series {
        add(
            format!("sinr_{}.csv", file_stem(&s.station.name)),
            series_csv(s),
        )?;
    }
    if !bundle.summary.is_empty() {
        add("summary.csv".into(), summary_csv(&bundle.summary))?;
    }
    if !bundle.station_pct.is_empty() {
        add(
            "station_jamming.csv".into(),
            station_pct_csv(&bundle.station_pct),
        )?;
    }
    if let Some((runs, hist)) = &bundle.runs {
        add("runs.csv".into(), runs_csv(runs))?;
        add("runs_histogram.csv".into(), histogram_csv(hist))?;
    }
    if let Some(sweep) = &bundle.sweep {
        for (station, pct) in &sweep.per_station {
            add(
                format!("sweep_{}.csv", file_stem(station)),
                sweep_csv(&sweep.eirp_dbw, pct),
            )?;
        }
        add(
            "sweep_pooled.csv".into(),
            sweep_csv(&sweep.eirp_dbw, &sweep.pooled),
        )?;
    }
    if let Some(t) = &bundle.gain_table {
        add("gain_pattern.csv".into(), gain_table_csv(t))?;
    }
    if !bundle.gnss.is_empty() {
        add("gnss_compare.csv".into(), gnss_csv(&bundle.gnss))?;
        add("gnss_summary.csv".into(), gnss_summary_csv(&bundle.gnss))?;
    }
    Ok(files)
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Write the bundle into `out_dir` (created if needed) followed by
/// `manifest.json`.
pub fn emit_results(bundle: &ResultBundle, out_dir: &Path) -> Result<Manifest> {
    let files = render(bundle)?;
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let mut manifest = Manifest {
        fingerprint: bundle.fingerprint.clone(),
        files: BTreeMap::new(),
    };
    for (name, body) in &files {
        let path = out_dir.join(name);
        std::fs::write(&path, body).map_err(|e| Error::io(&path, e))?;
        manifest.files.insert(
            name.clone(),
            ManifestEntry {
                sha256: sha256_hex(body.as_bytes()),
                bytes: body.len() as u64,
            },
        );
    }
    let mut json = serde_json::to_string_pretty(&manifest)
        .map_err(|e| Error::Consistency(format!("cannot encode manifest: {e}")))?;
    json.push('\n');
    let path = out_dir.join(MANIFEST_FILE);
    std::fs::write(&path, json).map_err(|e| Error::io(&path, e))?;
    Ok(manifest)
}

/// Re-hash every file listed in the manifest found in `dir`. Returns the
/// names whose contents no longer match.
pub fn verify_manifest(dir: &Path) -> Result<Vec<String>> {
    let path = dir.join(MANIFEST_FILE);
    let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    let manifest: Manifest = serde_json::from_str(&text)
        .map_err(|e| Error::Consistency(format!("malformed manifest: {e}")))?;
    let mut bad = Vec::new();
    for (name, entry) in &manifest.files {
        let p = dir.join(name);
        let bytes = std::fs::read(&p).map_err(|e| Error::io(&p, e))?;
        if sha256_hex(&bytes) != entry.sha256 {
            bad.push(name.clone());
        }
    }
    Ok(bad)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sig_formatting() {
        assert_eq!(fmt_sig(-96.021345), "-96.0213");
        assert_eq!(fmt_sig(23.98), "23.98");
        assert_eq!(fmt_sig(0.0), "0");
        assert_eq!(fmt_sig(1234567.0), "1234570");
        assert_eq!(fmt_sig(19.2e9), "19200000000");
        assert_eq!(fmt_sig(1.23456789e-7), "1.23457e-7");
        assert_eq!(fmt_sig(f64::NEG_INFINITY), "");
        assert_eq!(fmt_sig(f64::NAN), "");
    }

    #[test]
    fn stems_and_quoting() {
        assert_eq!(file_stem("Salem_Oregon"), "Salem_Oregon");
        assert_eq!(file_stem("a b/c"), "a_b_c");
        assert_eq!(csv_field("x,y"), "\"x,y\"");
        assert_eq!(csv_field("Starlink (erc)"), "Starlink (erc)");
    }

    #[test]
    fn histogram_rows() {
        let h = RunHistogram {
            bin_s: 30,
            counts: vec![2, 1],
        };
        assert_eq!(
            histogram_csv(&h),
            "bin_start_s,bin_end_s,count\n0,30,2\n30,60,1\n"
        );
    }

    #[test]
    fn manifest_detects_tampering() {
        let dir = tempfile::tempdir().unwrap();
        let bundle = ResultBundle {
            fingerprint: "abc".into(),
            summary: vec![SummaryRow {
                constellation: "x".into(),
                mean_sinr_db: 1.0,
                mean_jamming_pct: 2.0,
                mean_jam_period_s: 3.0,
            }],
            ..Default::default()
        };
        let m = emit_results(&bundle, dir.path()).unwrap();
        assert_eq!(m.files.len(), 1);
        assert!(verify_manifest(dir.path()).unwrap().is_empty());
        std::fs::write(dir.path().join("summary.csv"), "tampered\n").unwrap();
        assert_eq!(
            verify_manifest(dir.path()).unwrap(),
            vec!["summary.csv".to_string()]
        );
    }
}
