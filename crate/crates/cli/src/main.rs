use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use orbjam::analysis::{compare_patterns, gnss_compare, run_histogram, series_runs, summarize_one};
use orbjam::engine::{build_geometry_cache, eirp_grid, run_scenario, sweep_power};
use orbjam::io::emit::ResultBundle;
use orbjam::io::presets::{builtin_presets, station_preset, STATION_PRESETS};
use orbjam::io::scenario::gnss_or_default;
use orbjam::io::{emit_results, load_scenario};
use orbjam::rfmodel::{GainPattern, PatternKind};
use orbjam::{Error, Scenario};

#[derive(Debug, Parser)]
#[command(name = "orbjam", version, about = "Simulate LEO constellations interfering with GEO downlinks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Common {
    /// Scenario file (TOML).
    scenario: PathBuf,
    /// Output directory.
    #[arg(short, long, default_value = "results")]
    out: PathBuf,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run a scenario and write SINR series, summary and run statistics.
    Simulate(Common),
    /// Jamming percentage against attacker EIRP.
    Sweep {
        #[command(flatten)]
        common: Common,
        #[arg(long, allow_hyphen_values = true)]
        eirp_from: f64,
        #[arg(long, allow_hyphen_values = true)]
        eirp_to: f64,
        #[arg(long, allow_hyphen_values = true, default_value_t = 1.0)]
        eirp_step: f64,
    },
    /// Histogram of jamming run lengths.
    Runs {
        #[command(flatten)]
        common: Common,
        /// Bin width in seconds; defaults to the scenario step.
        #[arg(long)]
        bin_s: Option<f64>,
    },
    /// Run the scenario under several receive antenna patterns.
    CompareAntenna {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_delimiter = ',', default_value = "erc,itu")]
        patterns: Vec<PatternKind>,
    },
    /// Compare attacker received power with a navigation constellation.
    GnssCompare(Common),
    /// List the built-in constellation and station presets.
    Presets,
}

fn load(path: &Path) -> orbjam::Result<Scenario> {
    // an unreadable scenario or TLE file is a configuration problem
    let s = load_scenario(path).map_err(|e| match e {
        Error::Io { path, source } => Error::Config {
            key: path.display().to_string(),
            message: source.to_string(),
        },
        other => other,
    })?;
    eprintln!(
        "scenario: {} victim sats, {} attacker sats, {} stations, {} steps",
        s.victim.elements.len(),
        s.attacker.elements.len(),
        s.stations.len(),
        s.n_steps()
    );
    Ok(s)
}

fn emit(bundle: &ResultBundle, out: &Path) -> orbjam::Result<()> {
    let manifest = emit_results(bundle, out)?;
    eprintln!("wrote {} files to {}", manifest.files.len() + 1, out.display());
    Ok(())
}

fn run(cmd: Command) -> orbjam::Result<()> {
    match cmd {
        Command::Simulate(c) => {
            let s = load(&c.scenario)?;
            let t0 = Instant::now();
            let series = run_scenario(&s)?;
            eprintln!("simulated in {:.2} s", t0.elapsed().as_secs_f64());
            let summary = summarize_one(&s.attacker.name, &series, s.jam_threshold_db, s.jamming_average)?;
            let runs: Vec<_> = series.iter().flat_map(|ser| series_runs(ser, s.jam_threshold_db)).collect();
            let hist = run_histogram(&runs, s.step_s)?;
            println!(
                "{}: mean SINR {:.2} dB, jamming {:.3} %, mean run {:.1} s",
                summary.constellation, summary.mean_sinr_db, summary.mean_jamming_pct, summary.mean_jam_period_s
            );
            emit(
                &ResultBundle {
                    fingerprint: s.fingerprint(),
                    series,
                    summary: vec![summary],
                    runs: Some((runs, hist)),
                    ..Default::default()
                },
                &c.out,
            )
        }
        Command::Sweep {
            common,
            eirp_from,
            eirp_to,
            eirp_step,
        } => {
            let grid = eirp_grid(eirp_from, eirp_to, eirp_step)?;
            let s = load(&common.scenario)?;
            let cache = build_geometry_cache(&s)?;
            let curves = sweep_power(&cache, &grid, &s)?;
            for (e, p) in curves.eirp_dbw.iter().zip(&curves.pooled) {
                println!("{e:8.2} dBW  {p:7.3} %");
            }
            emit(
                &ResultBundle {
                    fingerprint: s.fingerprint(),
                    sweep: Some(curves),
                    ..Default::default()
                },
                &common.out,
            )
        }
        Command::Runs { common, bin_s } => {
            if let Some(b) = bin_s {
                if !(b > 0.0) {
                    return Err(Error::Config {
                        key: "bin_s".into(),
                        message: "must be positive".into(),
                    });
                }
            }
            let s = load(&common.scenario)?;
            let series = run_scenario(&s)?;
            let runs: Vec<_> = series.iter().flat_map(|ser| series_runs(ser, s.jam_threshold_db)).collect();
            let hist = run_histogram(&runs, bin_s.unwrap_or(s.step_s))?;
            for (k, c) in hist.counts.iter().enumerate() {
                if *c > 0 {
                    println!("{:>6}-{:<6} s  {c}", k as u64 * hist.bin_s, (k as u64 + 1) * hist.bin_s);
                }
            }
            emit(
                &ResultBundle {
                    fingerprint: s.fingerprint(),
                    runs: Some((runs, hist)),
                    ..Default::default()
                },
                &common.out,
            )
        }
        Command::CompareAntenna { common, patterns } => {
            let s = load(&common.scenario)?;
            let patterns = patterns
                .into_iter()
                .map(|k| GainPattern::new(k, s.pattern.g_max_dbi))
                .collect::<orbjam::Result<Vec<_>>>()?;
            let cmp = compare_patterns(&s, &patterns)?;
            for o in &cmp.outcomes {
                println!(
                    "{}: jamming {:.3} %, mean interference {:.2} dBW",
                    o.summary.constellation, o.summary.mean_jamming_pct, o.mean_interference_dbw
                );
            }
            emit(
                &ResultBundle {
                    fingerprint: s.fingerprint(),
                    summary: cmp.outcomes.iter().map(|o| o.summary.clone()).collect(),
                    station_pct: cmp
                        .outcomes
                        .iter()
                        .map(|o| (o.summary.constellation.clone(), o.per_station_pct.clone()))
                        .collect(),
                    gain_table: Some(cmp.gain_table),
                    ..Default::default()
                },
                &common.out,
            )
        }
        Command::GnssCompare(c) => {
            let s = load(&c.scenario)?;
            let gnss = gnss_or_default(&s)?;
            let rows = gnss_compare(&s, &gnss)?;
            for r in &rows {
                let show = |v: Option<f64>| v.map_or("n/a".to_string(), |x| format!("{x:.2} dBW"));
                println!(
                    "{:<24} gnss {:>12}  attacker {:>12}",
                    r.station.name,
                    show(r.gnss_daily_mean_dbw),
                    show(r.cubesat_daily_mean_dbw)
                );
            }
            emit(
                &ResultBundle {
                    fingerprint: s.fingerprint(),
                    gnss: rows,
                    ..Default::default()
                },
                &c.out,
            )
        }
        Command::Presets => {
            for p in builtin_presets() {
                let count = p.source.satellite_count().map_or("?".to_string(), |n| n.to_string());
                let alt = p
                    .alternate_eirp_dbw
                    .map_or(String::new(), |a| format!(" (alternate {a} dBW)"));
                println!(
                    "{:<22} {:>5} sats  {:<14} EIRP {} dBW{alt}",
                    p.name,
                    count,
                    p.source.kind(),
                    p.link.eirp_dbw
                );
                println!("{:<22} {}", "", p.provenance);
            }
            for name in STATION_PRESETS {
                let list = station_preset(name).unwrap_or_default();
                println!("{name:<22} {:>5} stations", list.len());
                for st in list {
                    println!(
                        "{:<22} {:<22} {:>8.2} {:>9.2}",
                        "", st.name, st.latitude_deg, st.longitude_deg
                    );
                }
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_config() { 1 } else { 2 })
        }
    }
}
