//! The experiment runners. Each one is deterministic given `(config, seed)`;
//! trials run on independent RNG sub-streams and aggregate in index order.

use std::time::Instant;

use num_complex::Complex64;

use super::{thresholds, ExperimentConfig, HarnessError, Report, Table};
use crate::evaluator::{
    log_abs_xi_inf_alpha_ray, log_abs_xi_tilde_inf_ray, sample_poisson_points, xi_inf_alpha_general,
    xi_inf_general, xi_n_alpha, xi_tilde_inf, xi_tilde_n,
};
use crate::diophantine::frac_mult;
use crate::measures::{sample_point, PointLocation, SpaceLayout};
use crate::permutations::{sample_cycle_counts, CycleCounts};
use crate::rng::SplitMix64;
use crate::stats;
use crate::wreath::CycleMarks;

/// Stream index offset separating the independent ensembles of a run.
const ENSEMBLE_OFFSET: u64 = 1 << 32;
/// Stream index for per-run shared draws (the fixed weight vector of the
/// conditional tests).
const SHARED_STREAM: u64 = u64::MAX;

/// Grows the counting process point by point, drawing a segment mark whenever
/// a point lands on the segment, and snapshots the counts at each scheduled
/// size.
fn grow_counts_snapshots(
    layout: &SpaceLayout,
    schedule: &[u64],
    marks: &mut CycleMarks,
    rng: &mut SplitMix64,
) -> Vec<CycleCounts> {
    let max_n = *schedule.last().expect("nonempty schedule");
    let mut ell = vec![0u64; layout.circle_count()];
    let mut p_n = 0u64;
    let mut out = Vec::with_capacity(schedule.len());
    for n in 1..=max_n {
        match sample_point(layout, rng) {
            PointLocation::Circle { index, .. } => ell[index - 1] += 1,
            PointLocation::Segment { .. } => {
                p_n += 1;
                marks.push_segment_mark(rng);
            }
        }
        if schedule.contains(&n) {
            out.push(CycleCounts {
                ell: ell.clone(),
                p_n,
                n,
            });
        }
    }
    out
}

/// Counts plus segment marks for a single size.
fn sample_counts_with_marks(
    layout: &SpaceLayout,
    n: u64,
    marks: &mut CycleMarks,
    rng: &mut SplitMix64,
) -> CycleCounts {
    grow_counts_snapshots(layout, &[n], marks, rng)
        .pop()
        .expect("one snapshot")
}

/// Almost-sure convergence of the modified-matrix ratio along the coupled
/// trajectory: per trial the sup over the grid of the distance between the
/// finite-size ratio and its limit, in both absolute and normalized form
/// (`|diff| / (1 + |limit|)`), aggregated by medians per scheduled size.
pub fn run_modified_convergence(cfg: &ExperimentConfig) -> Result<Report, HarnessError> {
    let started = Instant::now();
    cfg.validate()?;
    if !cfg.measure.is_normalized() {
        return Err(HarnessError::Config(
            "modified-convergence runs on measures with circle mass one".into(),
        ));
    }
    let grid = cfg.grid.points();
    let schedule = cfg.n_schedule.clone();
    let results: Vec<Result<Vec<(f64, f64)>, String>> =
        super::run_trials(cfg.trials, cfg.threads, |t| {
            let mut rng = SplitMix64::stream(cfg.seed, t);
            let (y, _) = cfg
                .measure
                .sample(cfg.tail_tol, cfg.stick_cap, &mut rng)
                .map_err(|e| e.to_string())?;
            let mut marks = CycleMarks::sample_circle_marks(y.len(), &mut rng);
            let layout = SpaceLayout::new(y.clone()).map_err(|e| e.to_string())?;
            let snapshots = grow_counts_snapshots(&layout, &schedule, &mut marks, &mut rng);
            let limit: Vec<Complex64> = grid
                .iter()
                .map(|&z| {
                    xi_tilde_inf(&y, &marks, z, f64::INFINITY)
                        .map(|o| o.value())
                        .map_err(|e| e.to_string())
                })
                .collect::<Result<_, _>>()?;
            let mut per_n = Vec::with_capacity(snapshots.len());
            for counts in &snapshots {
                let mut sup_abs = 0.0f64;
                let mut sup_norm = 0.0f64;
                for (&z, &lim) in grid.iter().zip(&limit) {
                    let fin = xi_tilde_n(counts, &marks, z).map_err(|e| e.to_string())?;
                    let d = (fin - lim).norm();
                    sup_abs = sup_abs.max(d);
                    sup_norm = sup_norm.max(d / (1.0 + lim.norm()));
                }
                per_n.push((sup_abs, sup_norm));
            }
            Ok(per_n)
        });

    let mut report = Report::new("converge-modified", cfg);
    report.notes.push(
        "distances: sup_abs = sup over grid of |xi_n - xi_inf|; sup_norm = sup of \
         |xi_n - xi_inf| / (1 + |xi_inf|)"
            .into(),
    );
    report
        .notes
        .push("weight-vector tail mass is folded into the segment when sampling".into());
    let mut per_trial = Table {
        name: "sup_distance_per_trial".into(),
        columns: vec![
            "trial".into(),
            "n".into(),
            "sup_abs".into(),
            "sup_norm".into(),
        ],
        rows: Vec::new(),
    };
    let mut abs_by_n = vec![Vec::new(); schedule.len()];
    let mut norm_by_n = vec![Vec::new(); schedule.len()];
    let mut failures = 0u64;
    for (t, res) in results.iter().enumerate() {
        match res {
            Ok(per_n) => {
                for (i, &(a, m)) in per_n.iter().enumerate() {
                    per_trial
                        .rows
                        .push(vec![t as f64, schedule[i] as f64, a, m]);
                    abs_by_n[i].push(a);
                    norm_by_n[i].push(m);
                }
            }
            Err(_) => failures += 1,
        }
    }
    if failures > 0 {
        report.metric("failed_trials", failures as f64);
    }
    let mut aggregate = Table {
        name: "median_sup_distance".into(),
        columns: vec!["n".into(), "median_abs".into(), "median_norm".into()],
        rows: Vec::new(),
    };
    let medians: Vec<f64> = norm_by_n.iter().map(|v| stats::median(v)).collect();
    for (i, &n) in schedule.iter().enumerate() {
        aggregate.rows.push(vec![
            n as f64,
            stats::median(&abs_by_n[i]),
            medians[i],
        ]);
    }
    report.tables.push(per_trial);
    report.tables.push(aggregate);
    let decreasing = medians.windows(2).all(|w| w[1] < w[0]);
    let final_median = *medians.last().expect("schedule nonempty");
    report.metric("final_median_norm", final_median);
    report.verdict(
        "sup_distance_median_decreasing",
        decreasing,
        if decreasing { 1.0 } else { 0.0 },
        1.0,
    );
    report.verdict(
        "sup_distance_final_median",
        final_median < thresholds::CONVERGENCE_FINAL_MEDIAN,
        final_median,
        thresholds::CONVERGENCE_FINAL_MEDIAN,
    );
    report.wall_clock_secs = started.elapsed().as_secs_f64();
    Ok(report)
}

/// For real evaluation points the ratio laws live on a rotated real line
/// (every factor is `e^(i theta/2)` times a real number and the phases
/// telescope), so one Cartesian marginal is exactly a point mass at zero and
/// floating point fills it with rounding noise. Marginal values below the
/// noise floor are snapped to zero so the KS statistic sees the
/// exact-arithmetic law.
fn snapped_marginals(samples: &[Complex64], floor: f64) -> [Vec<f64>; 3] {
    let snap = |x: f64| if x.abs() <= floor { 0.0 } else { x };
    [
        samples.iter().map(|z| snap(z.re)).collect(),
        samples.iter().map(|z| snap(z.im)).collect(),
        samples.iter().map(|z| z.norm()).collect(),
    ]
}

fn ks_panel_table(
    name: &str,
    z_panel: &[Complex64],
    finite: &[Vec<Complex64>],
    limit: &[Vec<Complex64>],
) -> (Table, f64) {
    let mut table = Table {
        name: name.into(),
        columns: vec![
            "z_re".into(),
            "z_im".into(),
            "marginal".into(),
            "ks".into(),
        ],
        rows: Vec::new(),
    };
    let mut max_ks = 0.0f64;
    for (zi, &z) in z_panel.iter().enumerate() {
        let scale = finite[zi]
            .iter()
            .chain(&limit[zi])
            .map(|v| v.norm())
            .fold(0.0f64, f64::max);
        let floor = 1e-9 * (1.0 + scale);
        let fin = snapped_marginals(&finite[zi], floor);
        let lim = snapped_marginals(&limit[zi], floor);
        for (mi, (f, l)) in fin.iter().zip(lim.iter()).enumerate() {
            let ks = stats::ks_two_sample(f, l);
            max_ks = max_ks.max(ks);
            table.rows.push(vec![z.re, z.im, mi as f64, ks]);
        }
    }
    (table, max_ks)
}

/// Distributional convergence of the shifted plain-matrix ratio to the
/// modified-matrix limit: two independent ensembles compared by two-sample KS
/// in the real part, imaginary part, and modulus at each panel point.
pub fn run_alpha_convergence(cfg: &ExperimentConfig) -> Result<Report, HarnessError> {
    let started = Instant::now();
    cfg.validate()?;
    if !cfg.measure.is_normalized() {
        return Err(HarnessError::Config(
            "alpha-convergence runs on measures with circle mass one".into(),
        ));
    }
    let alpha = cfg.alpha()?;
    alpha.require_irrational()?;
    let n = *cfg.n_schedule.last().expect("schedule nonempty");
    let z_panel = cfg.z_points();

    let finite: Vec<Vec<Complex64>> = transpose_ok(super::run_trials(
        cfg.trials,
        cfg.threads,
        |t| -> Result<Vec<Complex64>, String> {
            let mut rng = SplitMix64::stream(cfg.seed, t);
            let (y, _) = cfg
                .measure
                .sample(cfg.tail_tol, cfg.stick_cap, &mut rng)
                .map_err(|e| e.to_string())?;
            let layout = SpaceLayout::new(y).map_err(|e| e.to_string())?;
            let counts = sample_cycle_counts(&layout, n, &mut rng);
            z_panel
                .iter()
                .map(|&z| xi_n_alpha(&counts, &alpha, z).map_err(|e| e.to_string()))
                .collect()
        },
    ))?;
    let limit: Vec<Vec<Complex64>> = transpose_ok(super::run_trials(
        cfg.trials,
        cfg.threads,
        |t| -> Result<Vec<Complex64>, String> {
            let mut rng = SplitMix64::stream(cfg.seed, ENSEMBLE_OFFSET + t);
            let (y, _) = cfg
                .measure
                .sample(cfg.tail_tol, cfg.stick_cap, &mut rng)
                .map_err(|e| e.to_string())?;
            let marks = CycleMarks::sample_circle_marks(y.len(), &mut rng);
            z_panel
                .iter()
                .map(|&z| {
                    xi_tilde_inf(&y, &marks, z, f64::INFINITY)
                        .map(|o| o.value())
                        .map_err(|e| e.to_string())
                })
                .collect()
        },
    ))?;

    let mut report = Report::new("converge-alpha", cfg);
    report
        .notes
        .push(format!("alpha = {} (type estimate {:.4})", cfg.alpha_name, alpha.type_estimate));
    let (table, max_ks) = ks_panel_table("ks_by_panel_point", &z_panel, &finite, &limit);
    report.tables.push(table);
    report.metric("max_marginal_ks", max_ks);
    report.verdict(
        "shifted_ratio_ks",
        max_ks < thresholds::ALPHA_KS,
        max_ks,
        thresholds::ALPHA_KS,
    );
    report.wall_clock_secs = started.elapsed().as_secs_f64();
    Ok(report)
}

// Collects per-trial panel values into per-panel-point sample vectors,
// dropping failed trials.
fn transpose_ok(
    rows: Vec<Result<Vec<Complex64>, String>>,
) -> Result<Vec<Vec<Complex64>>, HarnessError> {
    let mut ok_rows = rows.into_iter().filter_map(|r| r.ok()).peekable();
    let width = match ok_rows.peek() {
        Some(row) => row.len(),
        None => return Err(HarnessError::Config("all trials failed".into())),
    };
    let mut out = vec![Vec::new(); width];
    for row in ok_rows {
        for (i, v) in row.into_iter().enumerate() {
            out[i].push(v);
        }
    }
    Ok(out)
}

/// Exponential growth of the limit function along the negative imaginary
/// axis: per trial the least-squares slope of `log |xi(-i x)|` over
/// `x in [5, 50]`, checked against the expected rate.
pub fn run_growth_scan(cfg: &ExperimentConfig) -> Result<Report, HarnessError> {
    let started = Instant::now();
    cfg.validate()?;
    let normalized = cfg.measure.is_normalized();
    let alpha = cfg.alpha()?;
    let xs: Vec<f64> = (0..=45).map(|i| 5.0 + i as f64).collect();
    let slopes_or: Vec<Result<(f64, f64), String>> =
        super::run_trials(cfg.trials, cfg.threads, |t| {
            let mut rng = SplitMix64::stream(cfg.seed, t);
            let (y, _) = cfg
                .measure
                .sample(cfg.tail_tol, cfg.stick_cap, &mut rng)
                .map_err(|e| e.to_string())?;
            let marks = CycleMarks::sample_circle_marks(y.len(), &mut rng);
            let ys: Vec<f64> = xs
                .iter()
                .map(|&x| {
                    if normalized {
                        log_abs_xi_tilde_inf_ray(&y, &marks, x)
                    } else {
                        log_abs_xi_inf_alpha_ray(&y, &marks, x)
                    }
                    .map_err(|e| e.to_string())
                })
                .collect::<Result<_, _>>()?;
            let target = if normalized {
                std::f64::consts::TAU
            } else {
                let y0 = y.total();
                let t_alpha = 1.0 / (2.0 * (std::f64::consts::PI * alpha.as_f64()).sin());
                std::f64::consts::TAU * (y0 + (1.0 - y0) * t_alpha)
            };
            Ok((stats::ls_slope(&xs, &ys), target))
        });

    let mut report = Report::new("growth", cfg);
    let mut table = Table {
        name: "slopes".into(),
        columns: vec!["trial".into(), "slope".into(), "target".into()],
        rows: Vec::new(),
    };
    let mut in_window = 0u64;
    let mut total = 0u64;
    let mut slopes = Vec::new();
    for (t, res) in slopes_or.iter().enumerate() {
        if let Ok((slope, target)) = res {
            table.rows.push(vec![t as f64, *slope, *target]);
            slopes.push(*slope);
            total += 1;
            if (slope - target).abs() <= thresholds::SLOPE_HALF_WINDOW {
                in_window += 1;
            }
        }
    }
    report.tables.push(table);
    if total == 0 {
        return Err(HarnessError::Config("all trials failed".into()));
    }
    let fraction = in_window as f64 / total as f64;
    report.metric("median_slope", stats::median(&slopes));
    report.metric("fraction_in_window", fraction);
    report.verdict(
        "growth_slope_fraction",
        fraction >= thresholds::SLOPE_FRACTION,
        fraction,
        thresholds::SLOPE_FRACTION,
    );
    report.wall_clock_secs = started.elapsed().as_secs_f64();
    Ok(report)
}

/// General measures (circle mass below one): the finite-size ratios against
/// their limits with the segment contributions, compared by two-sample KS.
pub fn run_general_measure(cfg: &ExperimentConfig) -> Result<Report, HarnessError> {
    let started = Instant::now();
    cfg.validate()?;
    if cfg.measure.is_normalized() {
        return Err(HarnessError::Config(
            "general-measure run needs circle mass below one".into(),
        ));
    }
    let alpha = cfg.alpha()?;
    let n = *cfg.n_schedule.last().expect("schedule nonempty");
    let z_panel = cfg.z_points();

    // modified-matrix ratio ensemble
    let finite_mod: Vec<Vec<Complex64>> = transpose_ok(super::run_trials(
        cfg.trials,
        cfg.threads,
        |t| -> Result<Vec<Complex64>, String> {
            let mut rng = SplitMix64::stream(cfg.seed, t);
            let (y, _) = cfg
                .measure
                .sample(cfg.tail_tol, cfg.stick_cap, &mut rng)
                .map_err(|e| e.to_string())?;
            let layout = SpaceLayout::new(y.clone()).map_err(|e| e.to_string())?;
            let mut marks = CycleMarks::sample_circle_marks(y.len(), &mut rng);
            let counts = sample_counts_with_marks(&layout, n, &mut marks, &mut rng);
            z_panel
                .iter()
                .map(|&z| xi_tilde_n(&counts, &marks, z).map_err(|e| e.to_string()))
                .collect()
        },
    ))?;
    let limit_mod: Vec<Vec<Complex64>> = transpose_ok(super::run_trials(
        cfg.trials,
        cfg.threads,
        |t| -> Result<Vec<Complex64>, String> {
            let mut rng = SplitMix64::stream(cfg.seed, ENSEMBLE_OFFSET + t);
            let (y, _) = cfg
                .measure
                .sample(cfg.tail_tol, cfg.stick_cap, &mut rng)
                .map_err(|e| e.to_string())?;
            let marks = CycleMarks::sample_circle_marks(y.len(), &mut rng);
            let intensity = (1.0 - y.total()).clamp(1e-12, 1.0);
            let pts = sample_poisson_points(intensity, cfg.poisson_window, &mut rng)
                .map_err(|e| e.to_string())?;
            z_panel
                .iter()
                .map(|&z| xi_inf_general(&y, &marks, &pts, z).map_err(|e| e.to_string()))
                .collect()
        },
    ))?;

    // shifted plain-matrix ratio ensemble
    let finite_alpha: Vec<Vec<Complex64>> = transpose_ok(super::run_trials(
        cfg.trials,
        cfg.threads,
        |t| -> Result<Vec<Complex64>, String> {
            let mut rng = SplitMix64::stream(cfg.seed, 2 * ENSEMBLE_OFFSET + t);
            let (y, _) = cfg
                .measure
                .sample(cfg.tail_tol, cfg.stick_cap, &mut rng)
                .map_err(|e| e.to_string())?;
            let layout = SpaceLayout::new(y).map_err(|e| e.to_string())?;
            let counts = sample_cycle_counts(&layout, n, &mut rng);
            z_panel
                .iter()
                .map(|&z| xi_n_alpha(&counts, &alpha, z).map_err(|e| e.to_string()))
                .collect()
        },
    ))?;
    let limit_alpha: Vec<Vec<Complex64>> = transpose_ok(super::run_trials(
        cfg.trials,
        cfg.threads,
        |t| -> Result<Vec<Complex64>, String> {
            let mut rng = SplitMix64::stream(cfg.seed, 3 * ENSEMBLE_OFFSET + t);
            let (y, _) = cfg
                .measure
                .sample(cfg.tail_tol, cfg.stick_cap, &mut rng)
                .map_err(|e| e.to_string())?;
            let marks = CycleMarks::sample_circle_marks(y.len(), &mut rng);
            z_panel
                .iter()
                .map(|&z| {
                    xi_inf_alpha_general(&y, &marks, &alpha, z).map_err(|e| e.to_string())
                })
                .collect()
        },
    ))?;

    let mut report = Report::new("general", cfg);
    report.notes.push(format!(
        "poisson window {} with pairing remainder estimate {:.4}",
        cfg.poisson_window,
        std::f64::consts::PI / cfg.poisson_window.sqrt()
    ));
    let (table_mod, ks_mod) =
        ks_panel_table("ks_modified_vs_poisson_limit", &z_panel, &finite_mod, &limit_mod);
    let (table_alpha, ks_alpha) =
        ks_panel_table("ks_shifted_vs_alpha_limit", &z_panel, &finite_alpha, &limit_alpha);
    report.tables.push(table_mod);
    report.tables.push(table_alpha);
    report.metric("max_ks_modified", ks_mod);
    report.metric("max_ks_shifted", ks_alpha);
    report.verdict(
        "general_modified_ks",
        ks_mod < thresholds::GENERAL_KS,
        ks_mod,
        thresholds::GENERAL_KS,
    );
    report.verdict(
        "general_shifted_ks",
        ks_alpha < thresholds::GENERAL_KS,
        ks_alpha,
        thresholds::GENERAL_KS,
    );
    report.wall_clock_secs = started.elapsed().as_secs_f64();
    Ok(report)
}

fn binomial_expected(n: u64, p: f64, trials: f64) -> Vec<f64> {
    let ln_n_fact = stats::ln_gamma(n as f64 + 1.0);
    (0..=n)
        .map(|k| {
            let kf = k as f64;
            let ln_pmf = ln_n_fact
                - stats::ln_gamma(kf + 1.0)
                - stats::ln_gamma((n - k) as f64 + 1.0)
                + kf * p.ln()
                + (n - k) as f64 * (1.0 - p).ln();
            trials * ln_pmf.exp()
        })
        .collect()
}

/// Conditionally on the weights, the occupation counts of the first circles
/// are jointly multinomial; checked through chi-square tests of the binomial
/// marginals (first three circles and the remainder).
pub fn test_multinomial(cfg: &ExperimentConfig) -> Result<Report, HarnessError> {
    let started = Instant::now();
    cfg.validate()?;
    let n = *cfg.n_schedule.last().expect("schedule nonempty");
    let k = 3usize;
    let mut shared = SplitMix64::stream(cfg.seed, SHARED_STREAM);
    let (y, _) = cfg.measure.sample(cfg.tail_tol, cfg.stick_cap, &mut shared)?;
    if y.len() < k {
        return Err(HarnessError::Config(format!(
            "measure produced fewer than {k} circles"
        )));
    }
    let layout = SpaceLayout::new(y.clone())?;
    let counts: Vec<CycleCounts> = super::run_trials(cfg.trials, cfg.threads, |t| {
        let mut rng = SplitMix64::stream(cfg.seed, t);
        sample_cycle_counts(&layout, n, &mut rng)
    });

    let mut report = Report::new("test-multinomial", cfg);
    let mut table = Table {
        name: "marginal_chi_square".into(),
        columns: vec!["marginal".into(), "statistic".into(), "p_value".into()],
        rows: Vec::new(),
    };
    let mut min_p = 1.0f64;
    let trials = cfg.trials as f64;
    for j in 0..=k {
        let (p, observed): (f64, Vec<f64>) = if j < k {
            let mut hist = vec![0.0f64; (n + 1) as usize];
            for c in &counts {
                hist[c.ell[j] as usize] += 1.0;
            }
            (y.values[j], hist)
        } else {
            let head: f64 = y.values[..k].iter().sum();
            let mut hist = vec![0.0f64; (n + 1) as usize];
            for c in &counts {
                let rest = c.n - c.ell[..k].iter().sum::<u64>();
                hist[rest as usize] += 1.0;
            }
            (1.0 - head, hist)
        };
        let expected = binomial_expected(n, p, trials);
        let (stat, pval) = stats::chi_square_gof(&observed, &expected, 5.0);
        min_p = min_p.min(pval);
        table.rows.push(vec![j as f64, stat, pval]);
    }
    report.tables.push(table);
    report.metric("min_p_value", min_p);
    report.verdict(
        "multinomial_chi_square",
        min_p > thresholds::TEST_SIGNIFICANCE,
        min_p,
        thresholds::TEST_SIGNIFICANCE,
    );
    report.wall_clock_secs = started.elapsed().as_secs_f64();
    Ok(report)
}

/// The shifted angles `{alpha l_{n,j}}` are asymptotically uniform and
/// independent across circles: KS uniformity per circle plus a pairwise
/// correlation cap, with the weights drawn fresh each trial.
pub fn test_equidistribution(cfg: &ExperimentConfig) -> Result<Report, HarnessError> {
    let started = Instant::now();
    cfg.validate()?;
    let alpha = cfg.alpha()?;
    alpha.require_irrational()?;
    let n = *cfg.n_schedule.last().expect("schedule nonempty");
    let k = 3usize;
    let fracs: Vec<[Option<f64>; 3]> = super::run_trials(cfg.trials, cfg.threads, |t| {
        let mut rng = SplitMix64::stream(cfg.seed, t);
        let mut out = [None; 3];
        let Ok((y, _)) = cfg.measure.sample(cfg.tail_tol, cfg.stick_cap, &mut rng) else {
            return out;
        };
        if y.len() < k {
            return out;
        }
        let Ok(layout) = SpaceLayout::new(y) else {
            return out;
        };
        let counts = sample_cycle_counts(&layout, n, &mut rng);
        for (j, slot) in out.iter_mut().enumerate() {
            let ell = counts.ell[j];
            if ell >= 1 {
                *slot = frac_mult(&alpha, ell).ok();
            }
        }
        out
    });

    let mut report = Report::new("test-equidistribution", cfg);
    let mut table = Table {
        name: "uniformity".into(),
        columns: vec![
            "circle".into(),
            "samples".into(),
            "ks".into(),
            "ks_critical".into(),
        ],
        rows: Vec::new(),
    };
    let mut all_pass = true;
    let mut max_ks_excess = 0.0f64;
    for j in 0..k {
        let xs: Vec<f64> = fracs.iter().filter_map(|row| row[j]).collect();
        let ks = stats::ks_statistic(&xs, |x| x.clamp(0.0, 1.0));
        let crit = stats::ks_critical(thresholds::TEST_SIGNIFICANCE, xs.len(), usize::MAX);
        all_pass &= ks < crit;
        max_ks_excess = max_ks_excess.max(ks / crit);
        table
            .rows
            .push(vec![(j + 1) as f64, xs.len() as f64, ks, crit]);
    }
    report.tables.push(table);
    let paired: Vec<(f64, f64)> = fracs
        .iter()
        .filter_map(|row| match (row[0], row[1]) {
            (Some(a), Some(b)) => Some((a, b)),
            _ => None,
        })
        .collect();
    let xs: Vec<f64> = paired.iter().map(|&(a, _)| a).collect();
    let ys: Vec<f64> = paired.iter().map(|&(_, b)| b).collect();
    let corr = stats::pearson_correlation(&xs, &ys).abs();
    report.metric("pairwise_correlation", corr);
    report.metric("max_ks_over_critical", max_ks_excess);
    report.verdict("equidistribution_ks", all_pass, max_ks_excess, 1.0);
    report.verdict(
        "equidistribution_correlation",
        corr < thresholds::EQUIDISTRIBUTION_CORRELATION,
        corr,
        thresholds::EQUIDISTRIBUTION_CORRELATION,
    );
    report.wall_clock_secs = started.elapsed().as_secs_f64();
    Ok(report)
}
