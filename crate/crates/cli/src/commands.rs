use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use uict::boundary_chain::{
    run_strips, sample_trajectory, strip_kernel_exact, strip_kernel_row, MoveSequence, RandomMoves,
};
use uict::branching::slice_marginal_dp;
use uict::diffusion::{
    bessel3_cdf, euler_marginal, euler_marginals_at, gamma2_cdf, rescaled_growth_marginal,
    rescaled_slice_marginal, time_changed_marginals, EulerConfig, SdeSpec, DEFAULT_FLOOR,
};
use uict::export::{kernel_table_csv, marginal_csv, samples_csv, trajectory_csv, SampleSidecar};
use uict::rng::StreamSeed;
use uict::stats::{
    chi_square_lattice, duality_suite, fractal_dimension, ks_one_sample, ks_two_sample,
    martingale_residuals, martingale_trend, mean, ChiSquare, ScalingConfig,
};
use uict::triangulation::{
    build_from_moves, grow_strips, moves_from_triangulation, remove_defects, Orientation,
};
use uict::verify::{run_suite, Level, VerifyOptions};

use crate::args::{
    DiffusionArgs, DualityArgs, DualityMode, FractalDimArgs, GrowArgs, LevelArg, MartingaleArgs,
    Process, SampleArgs, SliceDistArgs, StripKernelArgs, VerifyArgs,
};
use crate::output::{write_atomic, Sink};
use crate::CliError;

/// Whether the command's checks held; `None` for commands without one.
pub type Verdict = Option<bool>;

#[derive(Serialize)]
struct GrowReport {
    m0: u64,
    moves: String,
    height: usize,
    slice_sizes: Vec<u64>,
    stopped: bool,
    completed_strips: usize,
    triangles: usize,
    /// Triangles with a horizontal edge on their lower slice.
    defects: usize,
    exported: Option<String>,
}

pub fn grow(a: &GrowArgs, sink: &Sink) -> Result<Verdict, CliError> {
    let act = match &a.moves {
        Some(s) => {
            let moves: MoveSequence = s
                .parse()
                .map_err(|e| CliError::Usage(format!("--moves: {e}")))?;
            build_from_moves(a.m0, &moves)?
        }
        None => {
            let rng = StreamSeed::new(a.seed).domain("grow").stream(0);
            grow_strips(a.m0, a.strips, RandomMoves::new(rng))?
        }
    };
    act.validate()
        .map_err(|v| CliError::Failed(format!("invalid triangulation: {v}")))?;
    let moves = moves_from_triangulation(&act)?;

    let exported = match &a.export {
        Some(path) => {
            let text = if a.almost_causal {
                serde_json::to_string_pretty(&act).map_err(|e| CliError::Io(e.to_string()))?
            } else {
                if !act.is_stopped() {
                    return Err(CliError::Usage(
                        "the move string does not end on a strip stop; pass --almost-causal to export it".into(),
                    ));
                }
                remove_defects(&act)?.to_json()
            };
            write_atomic(path, format!("{text}\n").as_bytes())?;
            Some(path.display().to_string())
        }
        None => None,
    };

    let report = GrowReport {
        m0: a.m0,
        moves: moves.to_string(),
        height: act.height(),
        slice_sizes: act.slice_sizes.clone(),
        stopped: act.is_stopped(),
        completed_strips: act.completed_strips(),
        triangles: act.triangles.len(),
        defects: act
            .triangles
            .iter()
            .filter(|t| t.orientation() == Orientation::Flat)
            .count(),
        exported,
    };
    eprintln!(
        "grew {} triangles, slices {:?}, {} defects",
        report.triangles, report.slice_sizes, report.defects
    );
    sink.report(None, &report)?;
    Ok(None)
}

#[derive(Serialize)]
struct SampleReport {
    m0: u64,
    steps: usize,
    final_boundary: u64,
    max_boundary: u64,
    /// `t_n` at the last step.
    height: u64,
    table: Option<String>,
}

pub fn sample(a: &SampleArgs, sink: &Sink) -> Result<Verdict, CliError> {
    let traj = sample_trajectory(a.m0, a.steps, a.seed)?;
    let csv = trajectory_csv(&traj)?;
    let height = csv
        .lines()
        .last()
        .and_then(|l| l.rsplit(',').next())
        .and_then(|t| t.parse().ok())
        .unwrap_or(1);
    let table = sink.table("trajectory", &csv, None)?;
    let report = SampleReport {
        m0: a.m0,
        steps: a.steps,
        final_boundary: *traj.values.last().unwrap(),
        max_boundary: traj.values.iter().copied().max().unwrap(),
        height,
        table: table.and_then(|p| p.file_name().map(|f| f.to_string_lossy().into_owned())),
    };
    eprintln!(
        "{} steps: M = {}, height {}",
        report.steps, report.final_boundary, report.height
    );
    sink.report(None, &report)?;
    Ok(None)
}

#[derive(Serialize)]
struct StripKernelReport {
    m: u64,
    samples: usize,
    mean_increment: f64,
    chi_square: ChiSquare,
    p_min: f64,
}

pub fn strip_kernel(a: &StripKernelArgs, sink: &Sink) -> Result<Verdict, CliError> {
    if a.samples == 0 {
        return Err(CliError::Usage("--samples must be positive".into()));
    }
    let streams = StreamSeed::new(a.seed).domain("strip-kernel");
    let m = a.m;
    let ks: Vec<i64> = (0..a.samples as u64)
        .into_par_iter()
        .map(|i| {
            let w = run_strips(m, 2, RandomMoves::new(streams.stream(i)), |_| {})?;
            Ok(w.boundary() as i64 - m as i64)
        })
        .collect::<uict::error::Result<_>>()?;
    let row = strip_kernel_row(m, 1e-14)?;
    let probs: Vec<f64> = row
        .indices()
        .map(|k| strip_kernel_exact(m, k))
        .collect::<Result<_, _>>()?;
    let chi = chi_square_lattice(&ks, row.first, &probs, 5.0)?;
    sink.table(
        "strip_kernel",
        &kernel_table_csv(&[m], a.len_cap, 1e-12)?,
        None,
    )?;

    let passed = chi.p_value > a.p_min;
    eprintln!(
        "m = {m}: chi2 = {:.2} on {} dof, p = {:.4}",
        chi.statistic, chi.dof, chi.p_value
    );
    let report = StripKernelReport {
        m,
        samples: a.samples,
        mean_increment: ks.iter().sum::<i64>() as f64 / ks.len() as f64,
        chi_square: chi,
        p_min: a.p_min,
    };
    sink.report(Some(passed), &report)?;
    Ok(Some(passed))
}

#[derive(Serialize)]
struct SliceReport {
    /// Slice index `j + 1`, i.e. generation `j` of the branching process.
    slice: usize,
    generation: usize,
    sample_mean: f64,
    exact_mean: f64,
    chi_square: ChiSquare,
}

pub fn slice_dist(a: &SliceDistArgs, sink: &Sink) -> Result<Verdict, CliError> {
    if a.samples == 0 || a.generations == 0 {
        return Err(CliError::Usage(
            "--samples and --generations must be positive".into(),
        ));
    }
    let streams = StreamSeed::new(a.seed).domain("slice-dist");
    let sizes: Vec<Vec<u64>> = (0..a.samples as u64)
        .into_par_iter()
        .map(|i| {
            Ok(grow_strips(a.m0, a.generations, RandomMoves::new(streams.stream(i)))?.slice_sizes)
        })
        .collect::<uict::error::Result<_>>()?;

    let mut marginals = Vec::new();
    let mut rows = Vec::new();
    for j in 1..=a.generations {
        let dp = slice_marginal_dp(a.m0, j, a.trunc)?;
        let values: Vec<i64> = sizes.iter().map(|s| s[j] as i64).collect();
        let chi = chi_square_lattice(&values, 1, &dp.probs[1..], 5.0)?;
        eprintln!("slice {}: p = {:.4}", j + 1, chi.p_value);
        rows.push(SliceReport {
            slice: j + 1,
            generation: j,
            sample_mean: values.iter().sum::<i64>() as f64 / values.len() as f64,
            exact_mean: dp.mean(),
            chi_square: chi,
        });
        marginals.push(dp);
    }
    sink.table("slice_marginals", &marginal_csv(&marginals), None)?;
    let passed = rows.iter().all(|r| r.chi_square.p_value > a.p_min);
    sink.report(Some(passed), &json!({ "slices": rows, "p_min": a.p_min }))?;
    Ok(Some(passed))
}

pub fn fractal_dim(a: &FractalDimArgs, sink: &Sink) -> Result<Verdict, CliError> {
    let cfg = ScalingConfig {
        m0: a.m0,
        t_max: a.t_max,
        trajectories: a.trajectories,
        t_min: a.t_min,
        seed: a.seed,
    };
    let rep = fractal_dimension(&cfg)?;
    let passed = (a.slope_min..=a.slope_max).contains(&rep.median_slope);
    eprintln!(
        "median slope {:.4}, 95% CI [{:.4}, {:.4}]",
        rep.median_slope, rep.median_ci95.0, rep.median_ci95.1
    );
    sink.report(Some(passed), &rep)?;
    Ok(Some(passed))
}

#[derive(Serialize)]
struct DiffusionReport {
    process: Process,
    samples: usize,
    ks_two_sample: f64,
    ks_chain_vs_limit: f64,
    ks_sde_vs_limit: f64,
    chain_mean: f64,
    sde_mean: f64,
    ks_max: f64,
}

pub fn diffusion_check(a: &DiffusionArgs, sink: &Sink) -> Result<Verdict, CliError> {
    if a.samples == 0 || !(a.dt > 0.0) {
        return Err(CliError::Usage(
            "--samples and --dt must be positive".into(),
        ));
    }
    let streams = StreamSeed::new(a.seed).domain("diffusion-check");
    let cfg = EulerConfig::new(a.dt, 1.0);
    let (spec, chain): (SdeSpec, Vec<f64>) = match a.process {
        Process::Growth => (
            SdeSpec::Growth,
            rescaled_growth_marginal(a.n, 1.0, 1, a.samples, streams.domain("chain"))?,
        ),
        Process::Slice => (
            SdeSpec::Slice,
            rescaled_slice_marginal(a.t, 1.0, 1, a.samples, streams.domain("chain"))?,
        ),
    };
    let sde = euler_marginal(spec, DEFAULT_FLOOR, &cfg, a.samples, streams.domain("sde"))?;
    let limit: fn(f64) -> f64 = match a.process {
        Process::Growth => bessel3_cdf,
        Process::Slice => gamma2_cdf,
    };
    let d = ks_two_sample(&chain, &sde)?;
    let report = DiffusionReport {
        process: a.process,
        samples: a.samples,
        ks_two_sample: d,
        ks_chain_vs_limit: ks_one_sample(&chain, limit)?,
        ks_sde_vs_limit: ks_one_sample(&sde, limit)?,
        chain_mean: mean(&chain),
        sde_mean: mean(&sde),
        ks_max: a.ks_max,
    };

    let sidecar = |what: &str, dt: Option<f64>| {
        json!({
            "samples_of": SampleSidecar {
                spec: format!("{} {what}", spec.name()),
                dt,
                horizon: 1.0,
                seed: a.seed,
                samples: a.samples,
            }
        })
    };
    sink.table(
        "chain_samples",
        &samples_csv(&chain),
        Some(sidecar("chain", None)),
    )?;
    sink.table(
        "sde_samples",
        &samples_csv(&sde),
        Some(sidecar("euler", Some(a.dt))),
    )?;

    let passed = d < a.ks_max;
    eprintln!(
        "{}: KS chain vs sde {:.4}, vs limit law {:.4} / {:.4}",
        spec.name(),
        d,
        report.ks_chain_vs_limit,
        report.ks_sde_vs_limit
    );
    sink.report(Some(passed), &report)?;
    Ok(Some(passed))
}

#[derive(Serialize)]
struct TimeChangeReport {
    x0: f64,
    samples: usize,
    s_points: Vec<f64>,
    ks: Vec<f64>,
    truncated: usize,
    ks_max: f64,
}

pub fn duality(a: &DualityArgs, sink: &Sink) -> Result<Verdict, CliError> {
    match a.mode {
        DualityMode::Ratio => {
            let rep = duality_suite(a.m0, a.n, a.runs, a.seed, (a.band_lo, a.band_hi))?;
            let passed = rep.fraction_in_band >= a.min_share;
            eprintln!(
                "{} of runs end in [{}, {}]",
                rep.fraction_in_band, a.band_lo, a.band_hi
            );
            sink.report(Some(passed), &rep)?;
            Ok(Some(passed))
        }
        DualityMode::TimeChange => {
            let streams = StreamSeed::new(a.seed).domain("time-change");
            let s_points = vec![0.5, 1.0];
            let x0 = 1.0;
            let changed = time_changed_marginals(
                SdeSpec::Growth,
                x0,
                &EulerConfig::new(a.dt, 64.0),
                |x| 1.0 / (2.0 * x),
                &s_points,
                a.samples,
                streams.domain("growth"),
            )?;
            let direct = euler_marginals_at(
                SdeSpec::Slice,
                x0,
                &EulerConfig::new(a.dt, 1.0),
                &s_points,
                a.samples,
                streams.domain("slice"),
            )?;
            let ks = (0..s_points.len())
                .map(|p| ks_two_sample(&changed.values[p], &direct[p]))
                .collect::<Result<Vec<_>, _>>()?;
            let passed = ks.iter().all(|&d| d < a.ks_max) && changed.truncated * 100 <= a.samples;
            eprintln!(
                "KS at s = 0.5, 1: {ks:?}; {} clock-truncated",
                changed.truncated
            );
            let report = TimeChangeReport {
                x0,
                samples: a.samples,
                s_points,
                ks,
                truncated: changed.truncated,
                ks_max: a.ks_max,
            };
            sink.report(Some(passed), &report)?;
            Ok(Some(passed))
        }
    }
}

pub fn martingales(a: &MartingaleArgs, sink: &Sink) -> Result<Verdict, CliError> {
    if a.max_m == 0 {
        return Err(CliError::Usage("--max-m must be positive".into()));
    }
    let dense = a.max_m.min(10_000);
    let mut grid: Vec<u64> = (1..=dense).collect();
    if a.max_m > dense {
        let span = a.max_m as f64 / dense as f64;
        grid.extend((1..=200).map(|k| (dense as f64 * span.powf(k as f64 / 200.0)).round() as u64));
        grid.dedup();
    }
    let mut rep = martingale_residuals(&grid)?;
    let mut passed = rep.all_zero;
    if a.trend {
        let mut checkpoints = Vec::new();
        let mut c = 1000u64;
        while c <= a.n_max {
            checkpoints.push(c);
            c *= 10;
        }
        let trend = martingale_trend(a.m0, &checkpoints, a.runs, a.seed)?;
        passed &= trend.decreasing();
        rep.trend = Some(trend);
    }
    eprintln!(
        "{} residuals checked, {} nonzero",
        rep.grid.len(),
        rep.failures.len()
    );
    sink.report(Some(passed), &rep)?;
    Ok(Some(passed))
}

pub fn verify(a: &VerifyArgs, sink: &Sink) -> Result<Verdict, CliError> {
    let level = match a.level {
        LevelArg::Quick => Level::Quick,
        LevelArg::Full => Level::Full,
    };
    let ids: Vec<usize> = if a.only.is_empty() {
        (1..=12).collect()
    } else {
        a.only.clone()
    };
    if let Some(bad) = ids.iter().find(|&&i| !(1..=12).contains(&i)) {
        return Err(CliError::Usage(format!(
            "no criterion {bad}; choose from 1 to 12"
        )));
    }
    let rep = run_suite(&VerifyOptions::new(level, a.seed), &ids);
    for r in &rep.results {
        eprintln!("{r}");
    }
    eprintln!(
        "{} of {} criteria passed",
        rep.results.iter().filter(|r| r.passed).count(),
        rep.results.len()
    );
    sink.report(Some(rep.passed), &rep)?;
    Ok(Some(rep.passed))
}
