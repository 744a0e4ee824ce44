use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use nalgebra::DVector;

use control_alloc::allocator::{
    build_ams_with_tolerance, rate_image_hull, AllocMode, AllocSession,
};
use control_alloc::baseline::{erpi_allocate, pseudo_inverse_allocate};
use control_alloc::f18;
use control_alloc::io::{read_model, write_off, ModelFile};
use control_alloc::maneuver::{read_maneuver_csv, synth_maneuver, ManeuverSample};
use control_alloc::polytope::PolytopeV;
use control_alloc::sim::{run_experiment, SimOptions, TimeSeries};

use crate::{Cli, CliError, Compare};

pub struct RunArgs {
    pub maneuver: Option<PathBuf>,
    pub synth: bool,
    pub mode: AllocMode,
    pub compare: Compare,
    pub precompute: bool,
    pub out: PathBuf,
    pub dt: f64,
    pub reps: usize,
    pub tolerance: Option<f64>,
}

fn load_model(cli: &Cli) -> Result<ModelFile, CliError> {
    match (&cli.builtin, &cli.model) {
        (Some(name), None) if name == "f18" => Ok(ModelFile {
            model: f18::model(),
            actuators: f18::actuators(),
        }),
        (Some(name), None) => Err(CliError::Input(format!(
            "unknown builtin '{name}' (available: f18)"
        ))),
        (None, Some(path)) => read_model(path)
            .map_err(|e| CliError::Input(format!("cannot load model '{}': {e}", path.display()))),
        (None, None) | (Some(_), Some(_)) => Err(CliError::Input(
            "select exactly one model source: --builtin f18 or --model PATH".into(),
        )),
    }
}

fn load_maneuver(maneuver: &Option<PathBuf>, synth: bool) -> Result<Vec<ManeuverSample>, CliError> {
    match (maneuver, synth) {
        (Some(path), false) => read_maneuver_csv(path).map_err(|e| {
            CliError::Input(format!("cannot load maneuver '{}': {e}", path.display()))
        }),
        (None, true) => Ok(synth_maneuver(5.0, 100.0)),
        _ => Err(CliError::Input(
            "select exactly one maneuver source: --maneuver PATH or --synth".into(),
        )),
    }
}

fn ensure_out(out: &Path) -> Result<(), CliError> {
    fs::create_dir_all(out)
        .map_err(|e| CliError::Input(format!("cannot create '{}': {e}", out.display())))
}

fn note_builtin_dynamics(cli: &Cli, mode: AllocMode) {
    if cli.builtin.as_deref() == Some("f18") && mode.uses_rates() {
        println!(
            "note: builtin f18 uses the dynamic matrix A = diag(-2) sized 7x7, \
             one diagonal entry per actuator"
        );
    }
}

/// The two-hull intersection can admit commands that no single input
/// satisfies jointly; steer users toward the exact mode when available.
fn warn_mode_choice(file: &ModelFile, mode: AllocMode) {
    if mode == AllocMode::RatePaper && file.model.has_diagonal_dynamics() {
        eprintln!(
            "warning: rate_paper may report infeasible solves near the attainable \
             boundary; the dynamic matrix is diagonal, so rate_exact offers the \
             same rate handling with guaranteed feasibility"
        );
    }
}

fn describe_hull(name: &str, hull: &PolytopeV) {
    let e = hull.extents();
    println!(
        "{name}: {} vertices, {} facets; extents roll [{:.6}, {:.6}] pitch [{:.6}, {:.6}] yaw [{:.6}, {:.6}]",
        hull.vertex_count(),
        hull.facet_count(),
        e[0].0, e[0].1, e[1].0, e[1].1, e[2].0, e[2].1
    );
}

pub fn ams(cli: &Cli, mode: AllocMode, out: &Path, tolerance: Option<f64>) -> Result<(), CliError> {
    let file = load_model(cli)?;
    ensure_out(out)?;
    note_builtin_dynamics(cli, mode);

    let (position_hull, _) =
        build_ams_with_tolerance(&file.model, AllocMode::PositionOnly, tolerance)?;
    write_off(&out.join("ams_position.off"), &position_hull)
        .map_err(|e| CliError::Input(format!("write ams_position.off: {e}")))?;
    describe_hull("position-only set", &position_hull);

    if mode.uses_rates() {
        let rate_hull = rate_image_hull(&file.model)?;
        write_off(&out.join("ams_rate.off"), &rate_hull)
            .map_err(|e| CliError::Input(format!("write ams_rate.off: {e}")))?;
        describe_hull("rate-limit image", &rate_hull);

        let (intersection, _) = build_ams_with_tolerance(&file.model, mode, tolerance)?;
        write_off(&out.join("ams_intersection.off"), &intersection)
            .map_err(|e| CliError::Input(format!("write ams_intersection.off: {e}")))?;
        describe_hull(&format!("attainable set ({mode})"), &intersection);
    }
    Ok(())
}

/// One timing pass: allocate the whole maneuver, returning per-sample solve
/// seconds.
fn timing_pass(
    file: &ModelFile,
    maneuver: &[ManeuverSample],
    mode: AllocMode,
    precompute: bool,
) -> Result<Vec<f64>, CliError> {
    let mut session = AllocSession::new(file.model.clone(), mode);
    if precompute {
        session.precompute()?;
    }
    let mut times = Vec::with_capacity(maneuver.len());
    for sample in maneuver {
        let started = Instant::now();
        session.allocate(&sample.tau_cmd)?;
        times.push(started.elapsed().as_secs_f64());
    }
    Ok(times)
}

struct TimingReport {
    rows: String,
    precomputed_mean: f64,
    recomputed_mean: f64,
    all_seconds: Vec<f64>,
    histogram: Vec<(usize, usize, usize)>,
}

/// Run `reps` timed allocation passes in both geometry variants.
fn collect_timing(
    file: &ModelFile,
    maneuver: &[ManeuverSample],
    mode: AllocMode,
    reps: usize,
) -> Result<TimingReport, CliError> {
    let mut rows = String::from("variant,rep,t,seconds\n");
    let mut sums = [0.0f64; 2];
    let mut counts = [0usize; 2];
    let mut all_seconds = Vec::new();
    let mut buckets: Vec<[usize; 2]> = Vec::new();
    for (vi, (variant, precompute)) in [("precomputed", true), ("recomputed", false)]
        .iter()
        .enumerate()
    {
        for rep in 0..reps {
            let times = timing_pass(file, maneuver, mode, *precompute)?;
            for (sample, &seconds) in maneuver.iter().zip(&times) {
                writeln!(rows, "{variant},{rep},{},{}", sample.t, seconds).expect("string write");
                sums[vi] += seconds;
                counts[vi] += 1;
                all_seconds.push(seconds);
                let bucket = (seconds * 1e3) as usize;
                if bucket >= buckets.len() {
                    buckets.resize(bucket + 1, [0, 0]);
                }
                buckets[bucket][vi] += 1;
            }
        }
    }
    Ok(TimingReport {
        rows,
        precomputed_mean: sums[0] / counts[0].max(1) as f64,
        recomputed_mean: sums[1] / counts[1].max(1) as f64,
        all_seconds,
        histogram: buckets
            .iter()
            .enumerate()
            .map(|(ms, c)| (ms, c[0], c[1]))
            .collect(),
    })
}

fn print_timing(report: &TimingReport) {
    let mut sorted = report.all_seconds.clone();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let pct = |p: f64| sorted[(p * (sorted.len() - 1) as f64).round() as usize];
    println!(
        "solve time: mean precomputed {:.3} ms, mean recomputed {:.3} ms (precomputed saves {:.1}%)",
        report.precomputed_mean * 1e3,
        report.recomputed_mean * 1e3,
        100.0 * (1.0 - report.precomputed_mean / report.recomputed_mean)
    );
    println!(
        "per-solve percentiles over both variants: p50 {:.3} ms, p99 {:.3} ms, max {:.3} ms",
        pct(0.50) * 1e3,
        pct(0.99) * 1e3,
        sorted.last().unwrap() * 1e3
    );
    println!("histogram (1 ms buckets): bucket_ms precomputed recomputed");
    for (ms, pre, re) in &report.histogram {
        println!("  [{ms}, {}) {pre} {re}", ms + 1);
    }
}

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    fs::write(path, contents)
        .map_err(|e| CliError::Input(format!("write '{}': {e}", path.display())))
}

pub fn run(cli: &Cli, args: RunArgs) -> Result<(), CliError> {
    let file = load_model(cli)?;
    let maneuver = load_maneuver(&args.maneuver, args.synth)?;
    ensure_out(&args.out)?;
    note_builtin_dynamics(cli, args.mode);
    warn_mode_choice(&file, args.mode);

    let opts = SimOptions {
        dt: args.dt,
        precompute: args.precompute,
        tolerance_rel: args.tolerance,
    };
    let series = run_experiment(&file.model, &file.actuators, &maneuver, args.mode, &opts)?;

    // inputs.csv: allocator output, plus a baseline method's on request.
    let m = file.model.actuator_count();
    let mut inputs = String::from("t");
    for j in 1..=m {
        write!(inputs, ",u{j}").unwrap();
    }
    let cmp_prefix = match args.compare {
        Compare::Erpi => Some("erpi"),
        Compare::Pi => Some("pi"),
        Compare::None => None,
    };
    if let Some(prefix) = cmp_prefix {
        for j in 1..=m {
            write!(inputs, ",{prefix}_u{j}").unwrap();
        }
    }
    inputs.push('\n');
    for sample in &series.samples {
        write!(inputs, "{}", sample.t).unwrap();
        for j in 0..m {
            write!(inputs, ",{}", sample.u_cmd[j]).unwrap();
        }
        match args.compare {
            Compare::Erpi => {
                let r = erpi_allocate(&file.model, &sample.tau_cmd)?;
                for j in 0..m {
                    write!(inputs, ",{}", r.u[j]).unwrap();
                }
            }
            Compare::Pi => {
                let u = pseudo_inverse_allocate(
                    file.model.effectiveness(),
                    &DVector::from_column_slice(sample.tau_cmd.as_slice()),
                )?;
                for j in 0..m {
                    write!(inputs, ",{}", u[j]).unwrap();
                }
            }
            Compare::None => {}
        }
        inputs.push('\n');
    }
    write_file(&args.out.join("inputs.csv"), &inputs)?;

    // realized.csv: actuator positions and the moment they produce.
    let mut realized = String::from("t");
    for j in 1..=m {
        write!(realized, ",u_act{j}").unwrap();
    }
    realized.push_str(",tau_roll,tau_pitch,tau_yaw\n");
    for sample in &series.samples {
        write!(realized, "{}", sample.t).unwrap();
        for j in 0..m {
            write!(realized, ",{}", sample.u_act[j]).unwrap();
        }
        writeln!(
            realized,
            ",{},{},{}",
            sample.tau_realized.x, sample.tau_realized.y, sample.tau_realized.z
        )
        .unwrap();
    }
    write_file(&args.out.join("realized.csv"), &realized)?;

    // clip.csv: how much of each command survived.
    let mut clip = String::from("t,scale,was_clipped\n");
    for sample in &series.samples {
        writeln!(
            clip,
            "{},{},{}",
            sample.t, sample.clip_scale, sample.was_clipped
        )
        .unwrap();
    }
    write_file(&args.out.join("clip.csv"), &clip)?;

    // timing.csv: per-solve wall time for both geometry variants.
    let timing = collect_timing(&file, &maneuver, args.mode, args.reps)?;
    write_file(&args.out.join("timing.csv"), &timing.rows)?;

    print_summary(&file, &series);
    print_timing(&timing);
    Ok(())
}

fn print_summary(file: &ModelFile, series: &TimeSeries) {
    let limits = file.model.position_limits();
    let mut recorded = 0.0f64;
    for sample in &series.samples {
        for j in 0..file.model.actuator_count() {
            recorded = recorded
                .max(sample.u_act[j] - limits.upper()[j])
                .max(limits.lower()[j] - sample.u_act[j]);
        }
    }
    let clipped = series.samples.iter().filter(|s| s.was_clipped).count();
    println!(
        "replay ({} samples, mode {}): {} clipped, max recorded limit violation {:.3e} deg, \
         worst unclamped excursion {:.3e} deg, command total variation {:.1} deg",
        series.samples.len(),
        series.mode,
        clipped,
        recorded.max(0.0),
        series.max_position_violation(),
        series.command_total_variation()
    );
}

pub fn bench(
    cli: &Cli,
    maneuver: Option<PathBuf>,
    synth: bool,
    mode: AllocMode,
    reps: usize,
    out: &Path,
) -> Result<(), CliError> {
    let file = load_model(cli)?;
    let maneuver = load_maneuver(&maneuver, synth)?;
    ensure_out(out)?;
    note_builtin_dynamics(cli, mode);
    warn_mode_choice(&file, mode);

    let started = Instant::now();
    let timing = collect_timing(&file, &maneuver, mode, reps)?;
    write_file(&out.join("timing.csv"), &timing.rows)?;
    println!(
        "benchmark: {} maneuver samples x {reps} repetitions x 2 variants in {:.2} s",
        maneuver.len(),
        started.elapsed().as_secs_f64()
    );
    print_timing(&timing);
    Ok(())
}
