use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use pupil_core::iris::{build_mesh, deform_mesh, render_frame, IrisGeometry, IrisTexture};
use pupil_core::measure::{measure_pupil, Roi, TYPICAL_IRIS_DIAMETER_MM};
use pupil_core::plr::{
    equilibrium_raw_diameter, estimate_r_index, moon_spencer_diameter, simulate, HippusGenerator,
    SubjectProfile, DIAMETER_MAX, DIAMETER_MIN,
};
use pupil_core::trace::{MeasuredRow, MeasuredSeries, MeasurementMetadata};
use pupil_core::Luminance;
use rayon::prelude::*;

use crate::io;
use crate::validate;

/// Exit code for a failed check or invalid input data.
pub const EXIT_FAILURE: i32 = 1;
/// Exit code for a malformed command line.
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "pupil",
    version,
    about = "Pupil light reflex simulation and iris deformation"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print the luminance to diameter table over [1e-5, 1e5] B as CSV.
    Equilibrium,
    /// Simulate a light schedule and write trace.csv (and optionally frames).
    Simulate(SimulateArgs),
    /// Estimate the variability index from observed equilibrium diameters.
    FitRindex(FitArgs),
    /// Measure pupil diameters in PGM frames and write measured.csv.
    Measure(MeasureArgs),
    /// Render one iris frame at a given pupil diameter.
    Deform(DeformArgs),
    /// Run the built-in checks and print one line per criterion.
    Validate,
}

#[derive(Debug, Clone, Args)]
pub struct ProfileArgs {
    /// Variability index r_I in [0, 1].
    #[arg(long = "r-index")]
    pub r_index: f64,
    /// Pupil velocity constant S.
    #[arg(long = "velocity-s", default_value_t = SubjectProfile::DEFAULT_VELOCITY_CONSTANT)]
    pub velocity_s: f64,
    /// Stimulus frequency R (Hz) used by the latency model.
    #[arg(long = "freq-r", default_value_t = SubjectProfile::DEFAULT_STIMULUS_FREQUENCY_HZ)]
    pub freq_r: f64,
}

#[derive(Debug, Clone, Args)]
pub struct TextureArgs {
    /// Iris photograph (PPM or PGM) centred on the iris.
    #[arg(long)]
    pub texture: PathBuf,
    /// Iris diameter in texture pixels.
    #[arg(long = "iris-px")]
    pub iris_px: f64,
    /// Pupil diameter (mm) in the photograph.
    #[arg(long = "ref-pupil-mm", default_value_t = 4.0)]
    pub ref_pupil_mm: f64,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub profile: ProfileArgs,
    /// schedule.csv input.
    #[arg(long)]
    pub schedule: PathBuf,
    /// trace.csv output.
    #[arg(long)]
    pub out: PathBuf,
    /// Simulated duration (ms). Defaults to the last schedule change plus 10 s.
    #[arg(long = "duration-ms")]
    pub duration_ms: Option<f64>,
    #[arg(long = "frame-interval-ms", default_value_t = 33.3)]
    pub frame_interval_ms: f64,
    /// Add spontaneous luminance fluctuation.
    #[arg(long)]
    pub hippus: bool,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Directory for rendered frames (frame_NNNNN.ppm). Needs --texture.
    #[arg(long, requires = "texture")]
    pub frames: Option<PathBuf>,
    #[arg(long, requires_all = ["frames", "iris_px"])]
    pub texture: Option<PathBuf>,
    #[arg(long = "iris-px")]
    pub iris_px: Option<f64>,
    #[arg(long = "ref-pupil-mm", default_value_t = 4.0)]
    pub ref_pupil_mm: f64,
}

#[derive(Debug, Args)]
#[command(group = clap::ArgGroup::new("input").required(true).multiple(true))]
pub struct FitArgs {
    /// CSV with `luminance_blondels,diameter_mm` rows.
    #[arg(long, group = "input")]
    pub pairs: Option<PathBuf>,
    /// A `luminance_blondels,diameter_mm` pair; may be repeated.
    #[arg(long, group = "input", value_parser = parse_pair)]
    pub sample: Vec<(f64, f64)>,
}

#[derive(Debug, Args)]
pub struct MeasureArgs {
    /// PGM frames, in time order.
    #[arg(required = true)]
    pub frames: Vec<PathBuf>,
    /// Pixels strictly below this gray level count as pupil.
    #[arg(long)]
    pub threshold: u8,
    /// Iris diameter in frame pixels.
    #[arg(long = "iris-px")]
    pub iris_px: f64,
    /// Region of interest `x,y,width,height`; defaults to the whole frame.
    #[arg(long, value_parser = parse_roi)]
    pub roi: Option<Roi>,
    #[arg(long = "frame-interval-ms", default_value_t = 33.3)]
    pub frame_interval_ms: f64,
    /// measured.csv output.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct DeformArgs {
    #[command(flatten)]
    pub texture: TextureArgs,
    /// Target pupil diameter (mm).
    #[arg(long)]
    pub diameter: f64,
    /// PPM output.
    #[arg(long)]
    pub out: PathBuf,
    /// Output width in pixels; defaults to the texture width.
    #[arg(long)]
    pub width: Option<usize>,
    /// Output height in pixels; defaults to the texture height.
    #[arg(long)]
    pub height: Option<usize>,
}

fn parse_pair(s: &str) -> Result<(f64, f64), String> {
    let (l, d) = s
        .split_once(',')
        .ok_or_else(|| format!("expected `luminance,diameter`, got `{s}`"))?;
    let num = |v: &str| v.trim().parse::<f64>().map_err(|e| format!("`{v}`: {e}"));
    Ok((num(l)?, num(d)?))
}

fn parse_roi(s: &str) -> Result<Roi, String> {
    let parts = s
        .split(',')
        .map(|v| v.trim().parse::<usize>().map_err(|e| format!("`{v}`: {e}")))
        .collect::<Result<Vec<_>, _>>()?;
    match parts[..] {
        [x, y, w, h] => Ok(Roi::new(x, y, w, h)),
        _ => Err(format!("expected `x,y,width,height`, got `{s}`")),
    }
}

/// Distinguishes bad command lines from bad data.
#[derive(Debug, thiserror::Error)]
#[error("{0}")]
struct UsageError(String);

fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

fn exit_code(err: &anyhow::Error) -> i32 {
    for e in err.chain() {
        if e.is::<UsageError>() {
            return EXIT_USAGE;
        }
        if let Some(f) = e.downcast_ref::<io::FormatError>() {
            return match f {
                io::FormatError::Io { source, .. }
                    if source.kind() == std::io::ErrorKind::NotFound =>
                {
                    EXIT_USAGE
                }
                _ => EXIT_FAILURE,
            };
        }
        if let Some(c) = e.downcast_ref::<pupil_core::Error>() {
            return match c {
                pupil_core::Error::Usage(_) | pupil_core::Error::Domain { .. } => EXIT_USAGE,
                _ => EXIT_FAILURE,
            };
        }
    }
    EXIT_FAILURE
}

/// Parses `argv` (program name first), runs the command and returns the
/// process exit code. Errors are printed to standard error.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let stdout = std::io::stdout();
    match execute(cli.command, &mut stdout.lock()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            exit_code(&e)
        }
    }
}

/// Runs a parsed command, writing tables and reports to `out`.
pub fn execute(command: Command, out: &mut dyn Write) -> anyhow::Result<i32> {
    match command {
        Command::Equilibrium => equilibrium(out),
        Command::Simulate(args) => simulate_cmd(args, out),
        Command::FitRindex(args) => fit_rindex(args, out),
        Command::Measure(args) => measure(args, out),
        Command::Deform(args) => deform(args, out),
        Command::Validate => validate_cmd(out),
    }
}

fn equilibrium(out: &mut dyn Write) -> anyhow::Result<i32> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "luminance_blondels",
        "diameter_raw_mm",
        "diameter_moon_spencer_mm",
        "relative_difference",
    ])?;
    for k in 0..=100 {
        let l = validate::sweep_luminance(k);
        let raw = equilibrium_raw_diameter(l)?;
        let ms = moon_spencer_diameter(l)?;
        w.serialize((l.blondels(), raw, ms, (raw - ms).abs() / ms))?;
    }
    w.flush()?;
    Ok(0)
}

fn profile(args: &ProfileArgs) -> anyhow::Result<SubjectProfile> {
    Ok(SubjectProfile::new(
        args.r_index,
        args.velocity_s,
        args.freq_r,
    )?)
}

fn load_texture(path: &Path, iris_px: f64, ref_pupil_mm: f64) -> anyhow::Result<IrisTexture> {
    if iris_px.is_nan() || iris_px <= 0.0 || iris_px.is_infinite() {
        return Err(usage(format!("--iris-px must be positive, got {iris_px}")));
    }
    let image = io::read_rgb(path)?;
    let reference = IrisGeometry::concentric(ref_pupil_mm)
        .with_context(|| format!("--ref-pupil-mm {ref_pupil_mm}"))?;
    IrisTexture::new(image, reference, TYPICAL_IRIS_DIAMETER_MM / iris_px)
        .with_context(|| format!("texture {}", path.display()))
}

/// Renderable pupil diameter closest to `d`.
fn renderable(d: f64) -> f64 {
    d.clamp(DIAMETER_MIN + 1e-3, DIAMETER_MAX - 1e-3)
}

fn simulate_cmd(args: SimulateArgs, _out: &mut dyn Write) -> anyhow::Result<i32> {
    let profile = profile(&args.profile)?;
    let schedule = io::read_schedule(&args.schedule)?;
    if schedule.is_empty() {
        return Err(usage(format!(
            "{} has no schedule rows",
            args.schedule.display()
        )));
    }
    let duration = args
        .duration_ms
        .unwrap_or_else(|| schedule.entries().last().map_or(0.0, |e| e.start_ms) + 10_000.0);
    let hippus = args.hippus.then(|| HippusGenerator::new(args.seed));
    let trace = simulate(
        &schedule,
        &profile,
        args.frame_interval_ms,
        duration,
        hippus.as_ref(),
    )?;
    io::write_trace(&args.out, &trace)?;
    log::info!("wrote {} rows to {}", trace.len(), args.out.display());

    if let (Some(dir), Some(texture)) = (&args.frames, &args.texture) {
        let iris_px = args
            .iris_px
            .ok_or_else(|| usage("--frames needs --iris-px"))?;
        let texture = load_texture(texture, iris_px, args.ref_pupil_mm)?;
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        let reference = *texture.reference();
        let base = build_mesh(&reference, &texture)?;
        let (w, h) = (texture.image().width(), texture.image().height());

        let clamped = trace
            .rows()
            .iter()
            .filter(|r| renderable(r.diameter_final_mm) != r.diameter_final_mm)
            .count();
        if clamped > 0 {
            log::warn!(
                "{clamped} of {} frames have a final diameter outside ({DIAMETER_MIN}, {DIAMETER_MAX}) mm and were rendered at the nearest valid size",
                trace.len()
            );
        }
        trace
            .rows()
            .par_iter()
            .enumerate()
            .try_for_each(|(i, row)| -> anyhow::Result<()> {
                let mesh = deform_mesh(&base, &reference, renderable(row.diameter_final_mm))?;
                let frame = render_frame(&mesh, &texture, w, h, texture.mm_per_px())?;
                io::write_ppm(&dir.join(format!("frame_{i:05}.ppm")), &frame)?;
                Ok(())
            })?;
        log::info!("rendered {} frames into {}", trace.len(), dir.display());
    }
    Ok(0)
}

fn fit_rindex(args: FitArgs, out: &mut dyn Write) -> anyhow::Result<i32> {
    let mut samples = match &args.pairs {
        Some(path) => io::read_pairs(path)?,
        None => Vec::new(),
    };
    for &(l, d) in &args.sample {
        samples.push((
            Luminance::new(l).map_err(|e| usage(format!("--sample {l},{d}: {e}")))?,
            d,
        ));
    }
    if samples.is_empty() {
        return Err(usage("no samples to fit"));
    }
    let r = estimate_r_index(&samples)?;
    writeln!(out, "{r}")?;
    Ok(0)
}

fn measure(args: MeasureArgs, _out: &mut dyn Write) -> anyhow::Result<i32> {
    if args.frame_interval_ms.is_nan() || args.frame_interval_ms <= 0.0 {
        return Err(usage("--frame-interval-ms must be positive"));
    }
    let diameters = args
        .frames
        .par_iter()
        .map(|path| -> anyhow::Result<f64> {
            let frame = io::read_gray(path)?;
            let roi = args.roi.unwrap_or_else(|| Roi::full(&frame));
            measure_pupil(&frame, roi, args.threshold, args.iris_px)
                .with_context(|| format!("measuring {}", path.display()))
        })
        .collect::<anyhow::Result<Vec<_>>>()?;
    let rows = diameters
        .into_iter()
        .enumerate()
        .map(|(i, d)| MeasuredRow {
            time_ms: i as f64 * args.frame_interval_ms,
            diameter_mm: d,
        })
        .collect();
    let series = MeasuredSeries::new(rows)?.with_metadata(MeasurementMetadata {
        iris_px_diameter: args.iris_px,
        frame_rate_hz: 1000.0 / args.frame_interval_ms,
    });
    io::write_measured(&args.out, &series)?;
    Ok(0)
}

fn deform(args: DeformArgs, _out: &mut dyn Write) -> anyhow::Result<i32> {
    let t = &args.texture;
    let texture = load_texture(&t.texture, t.iris_px, t.ref_pupil_mm)?;
    let reference = *texture.reference();
    let mesh = deform_mesh(
        &build_mesh(&reference, &texture)?,
        &reference,
        args.diameter,
    )?;
    let w = args.width.unwrap_or(texture.image().width());
    let h = args.height.unwrap_or(texture.image().height());
    let frame = render_frame(&mesh, &texture, w, h, texture.mm_per_px())?;
    io::write_ppm(&args.out, &frame)?;
    Ok(0)
}

fn validate_cmd(out: &mut dyn Write) -> anyhow::Result<i32> {
    let outcomes = validate::run_all();
    for o in &outcomes {
        writeln!(out, "{o}")?;
    }
    match validate::envelope_ordering_range(600) {
        Some((lo, hi)) => writeln!(
            out,
            "[INFO] isocurve ordering C_bD < C_tD holds for D in [{lo:.3}, {hi:.3}] mm"
        )?,
        None => writeln!(
            out,
            "[INFO] isocurve ordering C_bD < C_tD does not hold on (1.9, 7.9) mm"
        )?,
    }
    let failures = outcomes.iter().filter(|o| !o.passed).count();
    writeln!(
        out,
        "{} of {} criteria passed",
        outcomes.len() - failures,
        outcomes.len()
    )?;
    Ok(if failures > 0 { EXIT_FAILURE } else { 0 })
}
