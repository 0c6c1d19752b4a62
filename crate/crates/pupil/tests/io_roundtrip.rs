use std::path::Path;

use proptest::prelude::*;
use pupil::io::{self, FormatError};
use pupil_core::image::{GrayImage, RgbImage};
use pupil_core::photometry::Luminance;
use pupil_core::plr::{LightSchedule, ScheduleEntry};
use pupil_core::trace::{MeasuredRow, MeasuredSeries, SimTrace, TraceRow};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_trace(n: usize, seed: u64) -> SimTrace {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut t = 0.0;
    let rows = (0..n)
        .map(|_| {
            t += rng.random_range(0.001..100.0);
            TraceRow {
                time_ms: t,
                luminance_blondels: 10f64.powf(rng.random_range(-5.0..5.0)),
                flux_lumens: rng.random_range(1e-12..1e-3),
                diameter_raw_mm: rng.random_range(1.901..7.899),
                diameter_final_mm: rng.random_range(-20_000.0..8.0),
            }
        })
        .collect();
    SimTrace::new(rows).unwrap()
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9 * a.abs().max(1.0)
}

#[test]
fn trace_round_trip_1000_rows() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("trace.csv");
    let trace = random_trace(1000, 5);
    io::write_trace(&path, &trace).unwrap();
    let back = io::read_trace(&path).unwrap();
    assert_eq!(back.len(), 1000);
    for (a, b) in trace.rows().iter().zip(back.rows()) {
        assert!(close(a.time_ms, b.time_ms));
        assert!(close(a.luminance_blondels, b.luminance_blondels));
        assert!(close(a.flux_lumens, b.flux_lumens));
        assert!(close(a.diameter_raw_mm, b.diameter_raw_mm));
        assert!(close(a.diameter_final_mm, b.diameter_final_mm));
    }
    // Shortest round-trip formatting makes it exact.
    assert_eq!(trace, back);
}

#[test]
fn trace_header_is_fixed() {
    let mut buf = Vec::new();
    io::write_trace_to(&mut buf, &random_trace(2, 1)).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert_eq!(
        text.lines().next().unwrap(),
        "time_ms,luminance_blondels,flux_lumens,diameter_raw_mm,diameter_final_mm"
    );
    assert_eq!(text.lines().count(), 3);
}

#[test]
fn schedule_and_measured_files() {
    let dir = tempfile::tempdir().unwrap();
    let s = LightSchedule::new(vec![
        ScheduleEntry::new(0.0, 0.316228),
        ScheduleEntry::new(3000.0, 12.589),
        ScheduleEntry::new(9000.5, 1e-5),
    ])
    .unwrap();
    let sp = dir.path().join("schedule.csv");
    io::write_schedule(&sp, &s).unwrap();
    assert_eq!(io::read_schedule(&sp).unwrap(), s);

    let m = MeasuredSeries::new(
        (0..50)
            .map(|i| MeasuredRow {
                time_ms: i as f64 * 33.3,
                diameter_mm: 3.0 + 0.01 * i as f64,
            })
            .collect(),
    )
    .unwrap();
    let mp = dir.path().join("measured.csv");
    io::write_measured(&mp, &m).unwrap();
    assert_eq!(io::read_measured(&mp).unwrap(), m);
}

#[test]
fn pairs_round_trip() {
    let pairs = vec![
        (Luminance::new(0.316228).unwrap(), 5.1),
        (Luminance::new(12.589).unwrap(), 3.2),
    ];
    let mut buf = Vec::new();
    io::write_pairs_to(&mut buf, &pairs).unwrap();
    assert_eq!(
        io::parse_pairs(buf.as_slice(), Path::new("p.csv")).unwrap(),
        pairs
    );
}

#[test]
fn missing_file_is_io_error() {
    let err = io::read_trace(Path::new("/nonexistent/trace.csv")).unwrap_err();
    assert!(matches!(err, FormatError::Io { .. }));
    assert!(err.to_string().contains("/nonexistent/trace.csv"));
}

#[test]
fn pnm_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let mut rgb = RgbImage::new(7, 5, [0; 3]);
    let mut gray = GrayImage::new(7, 5, 0);
    for y in 0..5 {
        for x in 0..7 {
            rgb.set(x, y, [(x * 30) as u8, (y * 40) as u8, 200]);
            gray.set(x, y, (x * 7 + y * 11) as u8);
        }
    }
    let pp = dir.path().join("f.ppm");
    io::write_ppm(&pp, &rgb).unwrap();
    assert_eq!(&std::fs::read(&pp).unwrap()[..2], b"P6");
    assert_eq!(io::read_rgb(&pp).unwrap(), rgb);

    let gp = dir.path().join("f.pgm");
    io::write_pgm(&gp, &gray).unwrap();
    assert_eq!(&std::fs::read(&gp).unwrap()[..2], b"P5");
    assert_eq!(io::read_gray(&gp).unwrap(), gray);
}

proptest! {
    #[test]
    fn measured_round_trip_is_lossless(
        steps in prop::collection::vec((1e-6f64..1e4, 1e-6f64..11.999), 0..200)
    ) {
        let mut t = -5.0;
        let rows: Vec<_> = steps
            .iter()
            .map(|&(dt, d)| {
                t += dt;
                MeasuredRow { time_ms: t, diameter_mm: d }
            })
            .collect();
        let series = MeasuredSeries::new(rows).unwrap();
        let mut buf = Vec::new();
        io::write_measured_to(&mut buf, &series).unwrap();
        let back = io::parse_measured(buf.as_slice(), Path::new("m.csv")).unwrap();
        prop_assert_eq!(back, series);
    }
}
