//! Built-in quantitative checks of the model, run by `pupil validate`.

use std::f64::consts::PI;
use std::fmt;
use std::time::Instant;

use pupil_core::image::{GrayImage, RgbImage};
use pupil_core::iris::{build_mesh, deform_mesh, map_point, IrisGeometry, IrisTexture, Point2};
use pupil_core::measure::{measure_pupil, Roi};
use pupil_core::photometry::{blondels_to_foot_lamberts, blondels_to_illuminance, retinal_flux};
use pupil_core::plr::{
    apply_individuality, equilibrium_raw_diameter, estimate_r_index, isocurve_bottom, isocurve_top,
    latency, moon_spencer_diameter, simulate, HippusGenerator, LightSchedule, ScheduleEntry,
    SubjectProfile, DIAMETER_MAX, DIAMETER_MIN, FLUX_THRESHOLD, LUMINANCE_MAX, LUMINANCE_MIN,
};
use pupil_core::trace::{trace_error, MeasuredRow, MeasuredSeries, SimTrace};
use pupil_core::{Luminance, LuminanceFootLambert};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Frame interval used throughout, matching a 30 Hz camera.
pub const FRAME_MS: f64 = 33.3;

pub const ON_LOG10: f64 = 1.1;
pub const OFF_LOG10: f64 = -0.5;

#[derive(Debug, Clone, PartialEq)]
pub struct CriterionOutcome {
    pub id: u8,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl fmt::Display for CriterionOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let verdict = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "[{verdict}] {}. {}: {}", self.id, self.name, self.detail)
    }
}

fn outcome(id: u8, name: &'static str, passed: bool, detail: String) -> CriterionOutcome {
    CriterionOutcome {
        id,
        name,
        passed,
        detail,
    }
}

fn failed(id: u8, name: &'static str, err: impl fmt::Display) -> CriterionOutcome {
    outcome(id, name, false, format!("error: {err}"))
}

/// Runs every criterion in order.
pub fn run_all() -> Vec<CriterionOutcome> {
    vec![
        equilibrium_fidelity(),
        threshold_constant(),
        latency_check(),
        convergence(),
        asymmetry(),
        variability_round_trip(),
        hippus(),
        deformation_invariance(),
        measurement(),
    ]
}

/// `(lo, hi)` of the longest run of a uniform grid over `(1.9, 7.9)` on
/// which `C_bD < C_tD`, or `None` if it never holds.
pub fn envelope_ordering_range(samples: usize) -> Option<(f64, f64)> {
    let n = samples.max(2);
    let mut best: Option<(f64, f64)> = None;
    let mut run: Option<(f64, f64)> = None;
    for k in 0..n {
        let d = DIAMETER_MIN + (DIAMETER_MAX - DIAMETER_MIN) * (k as f64 + 0.5) / n as f64;
        let ordered = matches!(
            (isocurve_bottom(d), isocurve_top(d)),
            (Ok(b), Ok(t)) if b < t
        );
        if ordered {
            run = Some(run.map_or((d, d), |(lo, _)| (lo, d)));
            let (lo, hi) = run.unwrap();
            if best.is_none_or(|(blo, bhi)| hi - lo > bhi - blo) {
                best = run;
            }
        } else {
            run = None;
        }
    }
    best
}

/// Equilibrium table row `k` of 101: luminance `10^((k - 50) / 10)` B.
pub fn sweep_luminance(k: usize) -> Luminance {
    let b = 10f64
        .powf((k as f64 - 50.0) / 10.0)
        .clamp(LUMINANCE_MIN, LUMINANCE_MAX);
    Luminance::new(b).expect("clamped into range")
}

pub fn equilibrium_fidelity() -> CriterionOutcome {
    const NAME: &str = "equilibrium fidelity";
    let start = Instant::now();
    let mut worst = (0.0f64, 0.0f64);
    for k in 0..=100 {
        let l = sweep_luminance(k);
        let (raw, ms) = match (equilibrium_raw_diameter(l), moon_spencer_diameter(l)) {
            (Ok(r), Ok(m)) => (r, m),
            (Err(e), _) | (_, Err(e)) => return failed(1, NAME, e),
        };
        let rel = (raw - ms).abs() / ms;
        if rel > worst.0 {
            worst = (rel, l.blondels().log10());
        }
    }
    let elapsed = start.elapsed().as_secs_f64();
    outcome(
        1,
        NAME,
        worst.0 < 0.02 && elapsed < 1.0,
        format!(
            "max relative difference {:.3}% at log10 L = {:.1} (limit 2%), {:.3} s",
            100.0 * worst.0,
            worst.1,
            elapsed
        ),
    )
}

pub fn threshold_constant() -> CriterionOutcome {
    const NAME: &str = "threshold constant";
    let flux = Luminance::new(1e-5)
        .map(blondels_to_illuminance)
        .and_then(|e| retinal_flux(e, 7.8272));
    match flux {
        Ok(f) => {
            let diff = (f.lumens() - FLUX_THRESHOLD).abs();
            outcome(
                2,
                NAME,
                diff <= 1e-13,
                format!(
                    "flux {:.6e} lm, |diff| {:.2e} (limit 1e-13)",
                    f.lumens(),
                    diff
                ),
            )
        }
        Err(e) => failed(2, NAME, e),
    }
}

/// Time (ms) of the first frame after `after_ms` whose raw diameter moved
/// more than `eps` from the diameter at `after_ms`.
fn onset_time(trace: &SimTrace, after_ms: f64, eps: f64) -> Option<(usize, f64)> {
    let rows = trace.rows();
    let i0 = rows.iter().position(|r| r.time_ms >= after_ms)?;
    let base = rows[i0].diameter_raw_mm;
    rows[i0..]
        .iter()
        .position(|r| (r.diameter_raw_mm - base).abs() > eps)
        .map(|j| (i0 + j, rows[i0 + j].time_ms))
}

pub fn step_schedule(step_ms: f64) -> LightSchedule {
    LightSchedule::new(vec![
        ScheduleEntry::new(0.0, 10f64.powf(OFF_LOG10)),
        ScheduleEntry::new(step_ms, 10f64.powf(ON_LOG10)),
    ])
    .expect("valid step schedule")
}

pub fn latency_check() -> CriterionOutcome {
    const NAME: &str = "latency";
    let run = || -> pupil_core::Result<(bool, String)> {
        let one = LuminanceFootLambert::new(1.0)?;
        let t0 = latency(one, 0.0)?;
        let t4 = latency(one, 0.4)?;
        let formula_ok = t0 == 253.0 && (t4 - 281.0).abs() < 1e-9;

        let step_ms = 3000.0;
        let profile = SubjectProfile::with_r_index(0.4)?;
        let trace = simulate(&step_schedule(step_ms), &profile, FRAME_MS, 6000.0, None)?;
        let rows = trace.rows();
        let lit = rows
            .iter()
            .position(|r| r.time_ms >= step_ms)
            .expect("step inside the run");
        let lit_ms = rows[lit].time_ms;
        let fl = blondels_to_foot_lamberts(Luminance::from_log10(ON_LOG10)?);
        let tau = latency(fl, profile.stimulus_frequency_hz())?;
        let (onset_idx, onset_ms) =
            onset_time(&trace, lit_ms, 1e-6).unwrap_or((rows.len(), f64::NAN));
        let observed = onset_ms - lit_ms;
        let timing_ok = (observed - tau).abs() <= FRAME_MS;

        let window = &rows[onset_idx.min(rows.len())..(onset_idx + 60).min(rows.len())];
        let monotone = window.len() > 1
            && window
                .windows(2)
                .all(|w| w[1].diameter_raw_mm < w[0].diameter_raw_mm);

        Ok((
            formula_ok && timing_ok && monotone,
            format!(
                "tau(1 fL, 0 Hz) = {t0} ms, tau(1 fL, 0.4 Hz) = {t4:.3} ms; \
                 step onset {observed:.1} ms vs tau {tau:.1} ms (frame {FRAME_MS} ms), \
                 monotone after onset: {monotone}"
            ),
        ))
    };
    match run() {
        Ok((passed, detail)) => outcome(3, NAME, passed, detail),
        Err(e) => failed(3, NAME, e),
    }
}

pub fn convergence() -> CriterionOutcome {
    const NAME: &str = "convergence";
    let run = || -> pupil_core::Result<(bool, String)> {
        let start = Instant::now();
        let mut worst_tail = 0.0f64;
        let mut all_reached = true;
        for &(from, to) in &[
            (-3.0, 2.0),
            (2.0, -3.0),
            (OFF_LOG10, ON_LOG10),
            (ON_LOG10, OFF_LOG10),
        ] {
            let sched = LightSchedule::new(vec![
                ScheduleEntry::new(0.0, 10f64.powf(from)),
                ScheduleEntry::new(FRAME_MS, 10f64.powf(to)),
            ])?;
            let target = equilibrium_raw_diameter(Luminance::from_log10(to)?)?;
            let trace = simulate(
                &sched,
                &SubjectProfile::with_r_index(0.4)?,
                FRAME_MS,
                60_000.0,
                None,
            )?;
            let errs: Vec<f64> = trace
                .rows()
                .iter()
                .map(|r| (r.diameter_raw_mm - target).abs())
                .collect();
            // Once inside the band it must stay there.
            match errs.iter().position(|&e| e <= 0.05) {
                Some(i) => {
                    let tail = errs[i..].iter().copied().fold(0.0, f64::max);
                    worst_tail = worst_tail.max(tail);
                    all_reached &= tail <= 0.05;
                }
                None => all_reached = false,
            }
        }
        let elapsed = start.elapsed().as_secs_f64();
        Ok((
            all_reached && elapsed < 1.0,
            format!(
                "4 step runs of 60 s: worst deviation after entering the 0.05 mm band {worst_tail:.4} mm, \
                 reached: {all_reached}, {elapsed:.3} s"
            ),
        ))
    };
    match run() {
        Ok((passed, detail)) => outcome(4, NAME, passed, detail),
        Err(e) => failed(4, NAME, e),
    }
}

/// Time for the raw diameter to cover half of the swing from `from` to
/// `to`, counted from the first frame after `start_ms` at which it starts
/// moving. The half-way crossing is linearly interpolated.
pub fn traversal_time(trace: &SimTrace, start_ms: f64, from: f64, to: f64) -> Option<f64> {
    let rows: Vec<_> = trace
        .rows()
        .iter()
        .filter(|r| r.time_ms >= start_ms)
        .collect();
    let progress = |d: f64| (d - from) / (to - from);
    let rest = rows.first()?.diameter_raw_mm;
    let onset = rows
        .iter()
        .find(|r| (r.diameter_raw_mm - rest).abs() > 1e-6)?
        .time_ms;
    let half = rows.windows(2).find_map(|w| {
        let (a, b) = (
            progress(w[0].diameter_raw_mm),
            progress(w[1].diameter_raw_mm),
        );
        (a < 0.5 && b >= 0.5)
            .then(|| w[0].time_ms + (0.5 - a) / (b - a) * (w[1].time_ms - w[0].time_ms))
    })?;
    Some(half - onset)
}

pub fn asymmetry() -> CriterionOutcome {
    const NAME: &str = "dilation/constriction asymmetry";
    let run = || -> pupil_core::Result<(bool, String)> {
        let (on, off) = (2000.0, 22_000.0);
        let sched = LightSchedule::new(vec![
            ScheduleEntry::new(0.0, 10f64.powf(OFF_LOG10)),
            ScheduleEntry::new(on, 10f64.powf(ON_LOG10)),
            ScheduleEntry::new(off, 10f64.powf(OFF_LOG10)),
        ])?;
        let trace = simulate(
            &sched,
            &SubjectProfile::with_r_index(0.4)?,
            FRAME_MS,
            62_000.0,
            None,
        )?;
        let dark = equilibrium_raw_diameter(Luminance::from_log10(OFF_LOG10)?)?;
        let bright = equilibrium_raw_diameter(Luminance::from_log10(ON_LOG10)?)?;
        let constrict = traversal_time(&trace, on, dark, bright);
        let dilate = traversal_time(&trace, off, bright, dark);
        Ok(match (constrict, dilate) {
            (Some(c), Some(d)) => {
                let ratio = d / c;
                (
                    (2.5..=3.5).contains(&ratio),
                    format!(
                        "half-swing traversal from motion onset: constriction {c:.1} ms, dilation {d:.1} ms, ratio {ratio:.3} (limit [2.5, 3.5])"
                    ),
                )
            }
            _ => (false, "the trace never completed both traversals".into()),
        })
    };
    match run() {
        Ok((passed, detail)) => outcome(5, NAME, passed, detail),
        Err(e) => failed(5, NAME, e),
    }
}

pub const REPORTED_INDICES: [f64; 6] = [0.03, 0.4, 0.54, 0.9, 0.92, 1.0];

/// On/off equilibrium observations of a subject with index `r_index`.
pub fn on_off_pairs(r_index: f64) -> pupil_core::Result<Vec<(Luminance, f64)>> {
    [OFF_LOG10, ON_LOG10]
        .iter()
        .map(|&e| {
            let l = Luminance::from_log10(e)?;
            Ok((
                l,
                apply_individuality(equilibrium_raw_diameter(l)?, r_index)?,
            ))
        })
        .collect()
}

pub fn variability_round_trip() -> CriterionOutcome {
    const NAME: &str = "variability round trip";
    let mut worst = 0.0f64;
    for &r in &REPORTED_INDICES {
        match on_off_pairs(r).and_then(|p| estimate_r_index(&p)) {
            Ok(est) => worst = worst.max((est - r).abs()),
            Err(e) => return failed(6, NAME, e),
        }
    }
    outcome(
        6,
        NAME,
        worst <= 1e-6,
        format!(
            "{} indices, worst |r - r*| = {worst:.2e} (limit 1e-6)",
            REPORTED_INDICES.len()
        ),
    )
}

/// Magnitude-squared DFT peak of `samples` taken every `dt_s` seconds,
/// ignoring the DC bin and searching up to `max_hz`.
pub fn spectral_peak_hz(samples: &[f64], dt_s: f64, max_hz: f64) -> f64 {
    let n = samples.len();
    let mean = samples.iter().sum::<f64>() / n as f64;
    let df = 1.0 / (n as f64 * dt_s);
    let top = ((max_hz / df) as usize).min(n / 2);
    let mut best = (0.0, 0.0);
    for k in 1..=top {
        let w = -2.0 * PI * k as f64 / n as f64;
        let (mut re, mut im) = (0.0, 0.0);
        for (i, &x) in samples.iter().enumerate() {
            let (s, c) = (w * i as f64).sin_cos();
            re += (x - mean) * c;
            im += (x - mean) * s;
        }
        let power = re * re + im * im;
        if power > best.1 {
            best = (k as f64 * df, power);
        }
    }
    best.0
}

pub const HIPPUS_SEEDS: [u64; 4] = [1, 7, 42, 2024];
pub const HIPPUS_BASE_LOG10: f64 = 0.5;

/// Half the peak-to-peak raw diameter after the first `settle_ms`.
pub fn fluctuation_amplitude(trace: &SimTrace, settle_ms: f64) -> f64 {
    let (lo, hi) = trace
        .rows()
        .iter()
        .filter(|r| r.time_ms >= settle_ms)
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), r| {
            (lo.min(r.diameter_raw_mm), hi.max(r.diameter_raw_mm))
        });
    0.5 * (hi - lo)
}

pub fn hippus() -> CriterionOutcome {
    const NAME: &str = "hippus";
    let run = || -> pupil_core::Result<(bool, String)> {
        let profile = SubjectProfile::with_r_index(0.4)?;
        let sched = LightSchedule::constant(Luminance::from_log10(HIPPUS_BASE_LOG10)?)?;
        let duration = 300_000.0;
        let (mut amp_range, mut peak_range) = ((f64::INFINITY, 0.0f64), (f64::INFINITY, 0.0f64));
        let mut max_perturbation = 0.0f64;
        let mut passed = true;
        for &seed in &HIPPUS_SEEDS {
            let h = HippusGenerator::new(seed);
            let trace = simulate(&sched, &profile, FRAME_MS, duration, Some(&h))?;
            let amp = fluctuation_amplitude(&trace, 10_000.0);
            let perturbation: Vec<f64> = trace
                .rows()
                .iter()
                .map(|r| h.perturbation(r.time_ms))
                .collect();
            let m = perturbation.iter().fold(0.0f64, |a, p| a.max(p.abs()));
            let peak = spectral_peak_hz(&perturbation, FRAME_MS / 1000.0, 1.0);
            passed &=
                (0.05..=0.5).contains(&amp) && m <= 10f64.powf(0.3) && (0.05..=0.3).contains(&peak);
            amp_range = (amp_range.0.min(amp), amp_range.1.max(amp));
            peak_range = (peak_range.0.min(peak), peak_range.1.max(peak));
            max_perturbation = max_perturbation.max(m);
        }
        Ok((
            passed,
            format!(
                "{} seeds at 10^{HIPPUS_BASE_LOG10} B: amplitude {:.3}..{:.3} mm (limit [0.05, 0.5]), \
                 max |perturbation| {max_perturbation:.3} B (limit {:.3}), peak {:.3}..{:.3} Hz (limit [0.05, 0.3])",
                HIPPUS_SEEDS.len(),
                amp_range.0,
                amp_range.1,
                10f64.powf(0.3),
                peak_range.0,
                peak_range.1
            ),
        ))
    };
    match run() {
        Ok((passed, detail)) => outcome(7, NAME, passed, detail),
        Err(e) => failed(7, NAME, e),
    }
}

/// A random geometry with the iris at the origin, radius 6 mm, the pupil
/// centre offset by up to 20% of the radius.
pub fn random_geometry(rng: &mut impl Rng) -> IrisGeometry {
    loop {
        let offset = 1.2 * rng.random::<f64>().sqrt();
        let angle = rng.random_range(0.0..2.0 * PI);
        let d = rng.random_range(1.91..7.89);
        if let Ok(g) = IrisGeometry::new(Point2::ORIGIN, 6.0, Point2::unit(angle) * offset, d) {
            return g;
        }
    }
}

pub fn deformation_invariance() -> CriterionOutcome {
    const NAME: &str = "deformation invariance";
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let cases = 10_000;
    let mut worst = 0.0f64;
    for _ in 0..cases {
        let from = random_geometry(&mut rng);
        let Ok(to) = from.with_pupil_diameter(rng.random_range(1.91..7.89)) else {
            continue;
        };
        let u = Point2::unit(rng.random_range(0.0..2.0 * PI));
        let rho: f64 = rng.random();
        let inner = from.pupil_radius();
        let p = from.pupil_center() + u * (inner + rho * (from.iris_distance(u) - inner));
        match (
            from.radial_ratio(p),
            map_point(p, &from, &to).and_then(|q| to.radial_ratio(q)),
        ) {
            (Ok(a), Ok(b)) => worst = worst.max((a - b).abs()),
            (Err(e), _) | (_, Err(e)) => return failed(8, NAME, e),
        }
    }

    let mut uv_ok = true;
    let texture = IrisTexture::new(
        RgbImage::new(64, 64, [100, 80, 60]),
        IrisGeometry::concentric(4.0).expect("valid"),
        13.0 / 64.0,
    )
    .expect("reference fits");
    for _ in 0..100 {
        let g = random_geometry(&mut rng);
        let mesh = build_mesh(&g, &texture).expect("mesh");
        let deformed = deform_mesh(&mesh, &g, rng.random_range(1.91..7.89)).expect("deform");
        uv_ok &= mesh
            .vertices()
            .iter()
            .zip(deformed.vertices())
            .all(|(a, b)| {
                a.uv[0].to_bits() == b.uv[0].to_bits() && a.uv[1].to_bits() == b.uv[1].to_bits()
            });
    }
    outcome(
        8,
        NAME,
        worst <= 1e-9 && uv_ok,
        format!("{cases} cases, worst |drho| = {worst:.2e} (limit 1e-9), UVs bitwise unchanged: {uv_ok}"),
    )
}

/// A bright frame with a dark filled disc (pixel centres inside the circle).
pub fn disc_frame(width: usize, height: usize, cx: f64, cy: f64, radius: f64) -> GrayImage {
    let mut img = GrayImage::new(width, height, 200);
    for y in 0..height {
        for x in 0..width {
            let (dx, dy) = (x as f64 + 0.5 - cx, y as f64 + 0.5 - cy);
            if dx * dx + dy * dy <= radius * radius {
                img.set(x, y, 20);
            }
        }
    }
    img
}

/// Simulated trace plus the same final diameters with seeded uniform
/// noise of `±amplitude` mm.
pub fn noisy_measurement(
    seed: u64,
    amplitude: f64,
) -> pupil_core::Result<(SimTrace, MeasuredSeries)> {
    let sched = LightSchedule::new(vec![
        ScheduleEntry::new(0.0, 10f64.powf(OFF_LOG10)),
        ScheduleEntry::new(3000.0, 10f64.powf(ON_LOG10)),
        ScheduleEntry::new(8000.0, 10f64.powf(OFF_LOG10)),
    ])?;
    let trace = simulate(
        &sched,
        &SubjectProfile::with_r_index(1.0)?,
        FRAME_MS,
        20_000.0,
        None,
    )?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rows = trace
        .rows()
        .iter()
        .map(|r| MeasuredRow {
            time_ms: r.time_ms,
            diameter_mm: r.diameter_final_mm + rng.random_range(-amplitude..=amplitude),
        })
        .collect();
    Ok((trace, MeasuredSeries::new(rows)?))
}

pub fn measurement() -> CriterionOutcome {
    const NAME: &str = "measurement";
    let mut worst = 0.0f64;
    for &(radius, cx, cy) in &[
        (50.0, 150.0, 150.0),
        (100.0, 150.0, 150.0),
        (37.5, 121.3, 170.8),
        (80.0, 140.0, 162.0),
    ] {
        let frame = disc_frame(300, 300, cx, cy, radius);
        let expected = 2.0 * radius * 12.0 / 300.0;
        match measure_pupil(&frame, Roi::full(&frame), 100, 300.0) {
            Ok(d) => worst = worst.max((d - expected).abs() / expected),
            Err(e) => return failed(9, NAME, e),
        }
    }
    let err = match noisy_measurement(9, 0.1).and_then(|(s, m)| trace_error(&s, &m)) {
        Ok(e) => e,
        Err(e) => return failed(9, NAME, e),
    };
    outcome(
        9,
        NAME,
        worst < 0.02 && (err - 0.05).abs() <= 0.02,
        format!(
            "disc frames worst relative error {:.3}% (limit 2%); trace_error with +-0.1 mm noise {err:.4} mm (limit 0.05 +- 0.02)",
            100.0 * worst
        ),
    )
}
