use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::photometry::{self, Luminance};
use crate::trace::{SimTrace, TraceRow};

use super::{
    apply_individuality, equilibrium_raw_diameter, latency, pupil_velocity, FluxHistory,
    HippusGenerator, LightSchedule, SubjectProfile, DIAMETER_MAX, DIAMETER_MIN, LUMINANCE_MAX,
    LUMINANCE_MIN,
};

/// Margin kept between the integrated diameter and the open range
/// `(1.9, 7.9)`, so `atanh` stays finite.
pub const DIAMETER_MARGIN: f64 = 1e-3;

/// Pupil state after a frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PupilState {
    pub time_ms: f64,
    /// Solution of the dynamic equation for the average subject (mm).
    pub diameter_raw_mm: f64,
    /// Diameter after the subject's isocurve is applied (mm).
    pub diameter_final_mm: f64,
}

/// Frame-by-frame integrator of the delayed pupil dynamics.
///
/// Each call to [`step`](Self::step) advances from the previous frame time
/// `T_p` to the current one `T_c`:
///
/// 1. the input luminance is clamped to `[1e-5, 1e5]` B,
/// 2. the latency `tau` is evaluated for that luminance and `R`,
/// 3. the current flux (luminance times the current pupil area) is appended
///    to the history and `phi(T_c - tau)` is read back,
/// 4. the velocity `dD/dt` is computed from the delayed flux,
/// 5. the step is `(T_c - T_p) / S` when constricting and `(T_c - T_p) / 3S`
///    when dilating, chosen by the sign of `dD/dt`,
/// 6. `D` takes an explicit Euler step and is clamped to `[1.901, 7.899]`.
///
/// The history starts as if the initial luminance had always been present,
/// i.e. with the pupil at its equilibrium diameter.
#[derive(Debug, Clone)]
pub struct PupilSimulator {
    profile: SubjectProfile,
    history: FluxHistory,
    horizon_ms: f64,
    time_ms: f64,
    diameter: f64,
    clamped_inputs: usize,
}

impl PupilSimulator {
    pub fn new(profile: SubjectProfile, initial_luminance: Luminance) -> Result<Self> {
        let diameter = equilibrium_raw_diameter(initial_luminance)?;
        let flux = flux_through(initial_luminance.blondels(), diameter);
        let mut history = FluxHistory::new();
        history.push(0.0, flux)?;
        // Latency decreases with luminance, so the dimmest input sets the
        // longest look-back.
        let dimmest = photometry::blondels_to_foot_lamberts(Luminance::new(LUMINANCE_MIN)?);
        let horizon_ms = latency(dimmest, profile.stimulus_frequency_hz())?.max(0.0);
        Ok(Self {
            profile,
            history,
            horizon_ms,
            time_ms: 0.0,
            diameter,
            clamped_inputs: 0,
        })
    }

    pub fn profile(&self) -> &SubjectProfile {
        &self.profile
    }

    pub fn history(&self) -> &FluxHistory {
        &self.history
    }

    /// Number of inputs that had to be clamped into the calibrated range.
    pub fn clamped_inputs(&self) -> usize {
        self.clamped_inputs
    }

    pub fn state(&self) -> Result<PupilState> {
        Ok(PupilState {
            time_ms: self.time_ms,
            diameter_raw_mm: self.diameter,
            diameter_final_mm: apply_individuality(self.diameter, self.profile.r_index())?,
        })
    }

    /// Advances to `time_ms` under `luminance_blondels`.
    pub fn step(&mut self, time_ms: f64, luminance_blondels: f64) -> Result<TraceRow> {
        let frame_ms = time_ms - self.time_ms;
        if !(frame_ms > 0.0) || !time_ms.is_finite() {
            return Err(Error::Usage(format!(
                "frame time {time_ms} ms must come after {} ms",
                self.time_ms
            )));
        }
        if luminance_blondels.is_nan() {
            return Err(Error::Usage("luminance is NaN".into()));
        }

        let luminance = if super::in_luminance_range(luminance_blondels) {
            luminance_blondels
        } else {
            self.clamped_inputs += 1;
            let clamped = luminance_blondels.clamp(LUMINANCE_MIN, LUMINANCE_MAX);
            log::debug!("luminance {luminance_blondels} B at {time_ms} ms clamped to {clamped} B");
            clamped
        };

        let fl = photometry::blondels_to_foot_lamberts(Luminance::new(luminance)?);
        let tau = latency(fl, self.profile.stimulus_frequency_hz())?.max(0.0);

        let flux = flux_through(luminance, self.diameter);
        self.history.push(time_ms, flux)?;
        let delayed = self
            .history
            .at(time_ms - tau)
            .expect("history holds at least the primed sample");

        let velocity = pupil_velocity(delayed, self.diameter)?;
        let s = self.profile.velocity_constant();
        let dt = if velocity < 0.0 {
            frame_ms / s
        } else {
            frame_ms / (3.0 * s)
        };
        self.diameter = (self.diameter + dt * velocity).clamp(
            DIAMETER_MIN + DIAMETER_MARGIN,
            DIAMETER_MAX - DIAMETER_MARGIN,
        );
        self.time_ms = time_ms;
        self.history
            .discard_before(time_ms - self.horizon_ms - frame_ms);

        Ok(TraceRow {
            time_ms,
            luminance_blondels: luminance,
            flux_lumens: flux,
            diameter_raw_mm: self.diameter,
            diameter_final_mm: apply_individuality(self.diameter, self.profile.r_index())?,
        })
    }
}

fn flux_through(luminance_blondels: f64, diameter_mm: f64) -> f64 {
    luminance_blondels * photometry::LM_PER_MM2_PER_BLONDEL * photometry::pupil_area(diameter_mm)
}

/// Runs the reflex model over a light schedule.
///
/// Frames are taken at `k * frame_interval_ms` for `k = 0, 1, ...` up to
/// `duration_ms`. Row 0 is the adapted state under the first luminance.
/// With `hippus`, its perturbation is added to the scheduled luminance
/// before anything else sees it.
pub fn simulate(
    schedule: &LightSchedule,
    profile: &SubjectProfile,
    frame_interval_ms: f64,
    duration_ms: f64,
    hippus: Option<&HippusGenerator>,
) -> Result<SimTrace> {
    if !(frame_interval_ms > 0.0) || !frame_interval_ms.is_finite() {
        return Err(Error::Usage(format!(
            "frame interval must be positive, got {frame_interval_ms} ms"
        )));
    }
    if !(duration_ms > 0.0) || !duration_ms.is_finite() {
        return Err(Error::Usage(format!(
            "duration must be positive, got {duration_ms} ms"
        )));
    }
    let first = schedule
        .luminance_at(0.0)
        .ok_or_else(|| Error::Usage("cannot simulate an empty light schedule".into()))?;

    let mut sim = PupilSimulator::new(*profile, Luminance::new(first)?)?;
    let frames = libm::floor(duration_ms / frame_interval_ms + 1e-9) as usize;
    let mut rows = Vec::with_capacity(frames + 1);

    let initial = sim.state()?;
    rows.push(TraceRow {
        time_ms: 0.0,
        luminance_blondels: first,
        flux_lumens: sim.history().at(0.0).unwrap_or_default(),
        diameter_raw_mm: initial.diameter_raw_mm,
        diameter_final_mm: initial.diameter_final_mm,
    });

    for k in 1..=frames {
        let t = k as f64 * frame_interval_ms;
        let scheduled = schedule.luminance_at(t).unwrap_or(first);
        let offset = hippus.map_or(0.0, |h| h.perturbation(t));
        rows.push(sim.step(t, scheduled + offset)?);
    }
    if sim.clamped_inputs() > 0 {
        log::info!(
            "{} of {} frames had luminance clamped to [1e-5, 1e5] B",
            sim.clamped_inputs(),
            frames
        );
    }
    Ok(SimTrace::from_rows_unchecked(rows))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::plr::{isocurve_bottom, isocurve_top, ScheduleEntry};
    use alloc::vec;
    use proptest::prelude::*;

    fn profile() -> SubjectProfile {
        SubjectProfile::with_r_index(0.4).unwrap()
    }

    #[test]
    fn constant_light_converges_to_equilibrium() {
        for &b in &[1e-4, 0.316228, 12.589, 5e4] {
            let l = Luminance::new(b).unwrap();
            // Start far from equilibrium by priming with a different light.
            let sched = LightSchedule::new(vec![
                ScheduleEntry::new(0.0, if b > 1.0 { 1e-3 } else { 1e3 }),
                ScheduleEntry::new(100.0, b),
            ])
            .unwrap();
            let trace = simulate(&sched, &profile(), 33.3, 60_000.0, None).unwrap();
            let last = trace.rows().last().unwrap();
            let eq = equilibrium_raw_diameter(l).unwrap();
            assert!((last.diameter_raw_mm - eq).abs() < 0.05, "L = {b}");
        }
    }

    #[test]
    fn adapted_start_stays_put() {
        let sched = LightSchedule::constant(Luminance::new(3.0).unwrap()).unwrap();
        let trace = simulate(&sched, &profile(), 33.3, 5_000.0, None).unwrap();
        let d0 = trace.rows()[0].diameter_raw_mm;
        for r in trace.rows() {
            assert!((r.diameter_raw_mm - d0).abs() < 1e-8);
        }
    }

    #[test]
    fn frame_count_and_times() {
        let sched = LightSchedule::constant(Luminance::new(1.0).unwrap()).unwrap();
        let trace = simulate(&sched, &profile(), 10.0, 1000.0, None).unwrap();
        assert_eq!(trace.len(), 101);
        assert_eq!(trace.rows()[100].time_ms, 1000.0);
    }

    #[test]
    fn rejects_bad_arguments() {
        let sched = LightSchedule::constant(Luminance::new(1.0).unwrap()).unwrap();
        assert!(matches!(
            simulate(&sched, &profile(), 0.0, 1000.0, None),
            Err(Error::Usage(_))
        ));
        assert!(simulate(&sched, &profile(), 10.0, -1.0, None).is_err());
        let empty = LightSchedule::new(Vec::new()).unwrap();
        assert!(matches!(
            simulate(&empty, &profile(), 10.0, 1000.0, None),
            Err(Error::Usage(_))
        ));
    }

    #[test]
    fn hippus_overflow_is_clamped_not_an_error() {
        let sched = LightSchedule::constant(Luminance::new(1e-5).unwrap()).unwrap();
        let h = HippusGenerator::new(3);
        let trace = simulate(&sched, &profile(), 33.3, 20_000.0, Some(&h)).unwrap();
        assert!(trace
            .rows()
            .iter()
            .all(|r| r.luminance_blondels >= 1e-5 && r.luminance_blondels <= 1e5));
    }

    #[test]
    fn step_requires_increasing_time() {
        let mut sim = PupilSimulator::new(profile(), Luminance::new(1.0).unwrap()).unwrap();
        sim.step(10.0, 1.0).unwrap();
        assert!(sim.step(10.0, 1.0).is_err());
        assert!(sim.step(5.0, 1.0).is_err());
    }

    #[test]
    fn deterministic_runs() {
        let sched = LightSchedule::new(vec![
            ScheduleEntry::new(0.0, 0.316228),
            ScheduleEntry::new(3000.0, 12.589),
        ])
        .unwrap();
        let h = HippusGenerator::new(11);
        let a = simulate(&sched, &profile(), 33.3, 10_000.0, Some(&h)).unwrap();
        let b = simulate(&sched, &profile(), 33.3, 10_000.0, Some(&h)).unwrap();
        assert_eq!(a, b);
        let c = simulate(&sched, &profile(), 33.3, 10_000.0, None).unwrap();
        let d = simulate(&sched, &profile(), 33.3, 10_000.0, None).unwrap();
        assert_eq!(c, d);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn stays_in_domain_and_envelope(
            levels in proptest::collection::vec(-5.0f64..5.0, 1..6),
            r in 0.0f64..=1.0,
            seed in any::<u64>(),
            hippus in any::<bool>(),
        ) {
            let entries = levels
                .iter()
                .enumerate()
                .map(|(i, &e)| ScheduleEntry::new(i as f64 * 1500.0, libm::pow(10.0, e)))
                .collect();
            let sched = LightSchedule::new(entries).unwrap();
            let prof = SubjectProfile::with_r_index(r).unwrap();
            let g = HippusGenerator::new(seed);
            let trace = simulate(&sched, &prof, 33.3, 10_000.0, hippus.then_some(&g)).unwrap();
            for row in trace.rows() {
                prop_assert!(row.diameter_raw_mm > 1.9 && row.diameter_raw_mm < 7.9);
                let lo = isocurve_bottom(row.diameter_raw_mm).unwrap();
                let hi = isocurve_top(row.diameter_raw_mm).unwrap();
                let (lo, hi) = if lo <= hi { (lo, hi) } else { (hi, lo) };
                let slack = 1e-9 * (1.0 + hi.abs().max(lo.abs()));
                prop_assert!(row.diameter_final_mm >= lo - slack && row.diameter_final_mm <= hi + slack);
            }
        }
    }
}
