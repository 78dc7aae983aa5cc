//! Experiment orchestration: configuration, deterministic reports, and the
//! Monte Carlo runs probing the convergence statements.
//!
//! Every run is a pure function of `(config, seed)`: trials draw from
//! independent sub-streams keyed by trial index, aggregation is order-stable,
//! and the serialized report carries no timing or host information. Wall-clock
//! time is kept on the struct for interactive use but never serialized.

mod experiments;

pub use experiments::{
    run_alpha_convergence, run_general_measure, run_growth_scan, run_modified_convergence,
    test_equidistribution, test_multinomial,
};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::diophantine::{AlphaFixedPoint, DioError, NamedIrrational};
use crate::evaluator::EvalError;
use crate::measures::{
    sample_pd, MeasureError, TruncationStatus, WeightVector, DEFAULT_STICK_CAP, DEFAULT_TAIL_TOL,
};
use crate::permutations::PermError;
use crate::rng::SplitMix64;
use num_complex::Complex64;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("config: {0}")]
    Config(String),
    #[error(transparent)]
    Measure(#[from] MeasureError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Perm(#[from] PermError),
    #[error(transparent)]
    Dio(#[from] DioError),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

/// Evaluation grid: a `resolution x resolution` lattice on the square of the
/// given half-width around `center`, restricted to the disk `|z - center| <=
/// clip_radius` when a clip is set. The default is the 9x9 lattice on
/// half-width 2 clipped to the disk of radius 2.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct GridSpec {
    pub center_re: f64,
    pub center_im: f64,
    pub half_width: f64,
    pub resolution: usize,
    pub clip_radius: Option<f64>,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec {
            center_re: 0.0,
            center_im: 0.0,
            half_width: 2.0,
            resolution: 9,
            clip_radius: Some(2.0),
        }
    }
}

impl GridSpec {
    pub fn points(&self) -> Vec<Complex64> {
        let r = self.resolution.max(3);
        let step = 2.0 * self.half_width / (r - 1) as f64;
        let mut out = Vec::with_capacity(r * r);
        for i in 0..r {
            for j in 0..r {
                let z = Complex64::new(
                    self.center_re - self.half_width + step * i as f64,
                    self.center_im - self.half_width + step * j as f64,
                );
                let inside = match self.clip_radius {
                    Some(radius) => {
                        (z - Complex64::new(self.center_re, self.center_im)).norm()
                            <= radius + 1e-12
                    }
                    None => true,
                };
                if inside {
                    out.push(z);
                }
            }
        }
        out
    }
}

/// The weight measure driving an experiment.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub enum MeasureSpec {
    /// Poisson-Dirichlet of the given parameter, resampled per trial.
    PoissonDirichlet { theta: f64 },
    /// Deterministic geometric weights `y_j = mass (1 - ratio) ratio^(j-1)`,
    /// truncated at `depth` with the remainder as tail mass.
    Geometric { mass: f64, ratio: f64, depth: usize },
    /// Explicit fixed weights.
    Explicit {
        values: Vec<f64>,
        tail_mass: f64,
        normalized: bool,
    },
}

impl MeasureSpec {
    /// Whether the circle mass is one (the closed-simplex regime).
    pub fn is_normalized(&self) -> bool {
        match self {
            MeasureSpec::PoissonDirichlet { .. } => true,
            MeasureSpec::Geometric { mass, .. } => (*mass - 1.0).abs() < 1e-12,
            MeasureSpec::Explicit { normalized, .. } => *normalized,
        }
    }

    /// Realizes the weight vector for one trial.
    pub fn sample(
        &self,
        tail_tol: f64,
        cap: usize,
        rng: &mut SplitMix64,
    ) -> Result<(WeightVector, TruncationStatus), HarnessError> {
        match self {
            MeasureSpec::PoissonDirichlet { theta } => {
                Ok(sample_pd(*theta, tail_tol, cap, rng)?)
            }
            MeasureSpec::Geometric { mass, ratio, depth } => {
                let values: Vec<f64> = (1..=*depth)
                    .map(|j| mass * (1.0 - ratio) * ratio.powi(j as i32 - 1))
                    .collect();
                let tail = mass - values.iter().sum::<f64>();
                let w = WeightVector::from_values(values, tail.max(0.0), self.is_normalized())?;
                let status = if w.tail_mass > tail_tol {
                    TruncationStatus::Insufficient
                } else {
                    TruncationStatus::Converged
                };
                Ok((w, status))
            }
            MeasureSpec::Explicit {
                values,
                tail_mass,
                normalized,
            } => {
                let w = WeightVector::from_values(values.clone(), *tail_mass, *normalized)?;
                Ok((w, TruncationStatus::Converged))
            }
        }
    }
}

/// Frozen thresholds used by the experiment verdicts. Values are committed
/// once, from calibration runs against the oracle-checked evaluators, and are
/// not tuned per run.
pub mod thresholds {
    /// Final median of the normalized sup-distance in the modified-matrix
    /// convergence trend.
    pub const CONVERGENCE_FINAL_MEDIAN: f64 = 0.05;
    /// Two-sample KS bound for the shifted-ratio convergence at the largest
    /// scheduled size.
    pub const ALPHA_KS: f64 = 0.06;
    /// Two-sample KS bound for the general-measure comparisons.
    pub const GENERAL_KS: f64 = 0.08;
    /// Window around `2 pi` capturing the ray-growth slopes.
    pub const SLOPE_HALF_WINDOW: f64 = 0.5;
    /// Minimum fraction of slopes inside the window.
    pub const SLOPE_FRACTION: f64 = 0.95;
    /// Significance for the distributional hypothesis tests.
    pub const TEST_SIGNIFICANCE: f64 = 0.001;
    /// Cap on empirical/bound across the small-denominator grid.
    pub const SMALL_DENOM_RATIO: f64 = 1.0;
    /// Pairwise correlation cap in the equidistribution test.
    pub const EQUIDISTRIBUTION_CORRELATION: f64 = 0.05;
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ExperimentConfig {
    pub measure: MeasureSpec,
    pub n_schedule: Vec<u64>,
    pub trials: u64,
    pub grid: GridSpec,
    pub alpha_name: String,
    pub seed: u64,
    /// Execution-only parameter: not serialized, so reports are byte-identical
    /// across thread counts.
    #[serde(skip, default = "default_threads")]
    pub threads: usize,
    pub tail_tol: f64,
    pub stick_cap: usize,
    pub poisson_window: f64,
    pub z_panel: Vec<(f64, f64)>,
}

fn default_threads() -> usize {
    1
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            measure: MeasureSpec::PoissonDirichlet { theta: 1.0 },
            n_schedule: vec![1 << 8, 1 << 10, 1 << 12, 1 << 14],
            trials: 100,
            grid: GridSpec::default(),
            alpha_name: "golden".into(),
            seed: 1,
            threads: 1,
            tail_tol: DEFAULT_TAIL_TOL,
            stick_cap: DEFAULT_STICK_CAP,
            poisson_window: 1e4,
            z_panel: vec![(0.5, 0.0), (1.0, 1.0), (-1.0, 0.0)],
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<(), HarnessError> {
        if self.n_schedule.is_empty() {
            return Err(HarnessError::Config("empty size schedule".into()));
        }
        if self.n_schedule.windows(2).any(|w| w[1] <= w[0]) {
            return Err(HarnessError::Config("size schedule must increase".into()));
        }
        if self.trials == 0 {
            return Err(HarnessError::Config("trials must be positive".into()));
        }
        if self.grid.resolution < 3 {
            return Err(HarnessError::Config("grid resolution below 3".into()));
        }
        Ok(())
    }

    pub fn alpha(&self) -> Result<AlphaFixedPoint, HarnessError> {
        let which = NamedIrrational::parse(&self.alpha_name).ok_or_else(|| {
            HarnessError::Config(format!(
                "unknown alpha '{}' (built-ins: golden, sqrt2, sqrt3, e)",
                self.alpha_name
            ))
        })?;
        Ok(AlphaFixedPoint::named(which))
    }

    pub fn z_points(&self) -> Vec<Complex64> {
        self.z_panel
            .iter()
            .map(|&(re, im)| Complex64::new(re, im))
            .collect()
    }

    /// Applies one `key=value` override, the format of the CLI config files.
    pub fn apply_kv(&mut self, key: &str, value: &str) -> Result<(), HarnessError> {
        let bad = |e: String| HarnessError::Config(e);
        match key {
            "theta" => {
                self.measure = MeasureSpec::PoissonDirichlet {
                    theta: value.parse().map_err(|e| bad(format!("theta: {e}")))?,
                }
            }
            "measure" => match value {
                "pd" => {
                    if !matches!(self.measure, MeasureSpec::PoissonDirichlet { .. }) {
                        self.measure = MeasureSpec::PoissonDirichlet { theta: 1.0 };
                    }
                }
                "geometric" => {
                    if !matches!(self.measure, MeasureSpec::Geometric { .. }) {
                        self.measure = MeasureSpec::Geometric {
                            mass: 0.5,
                            ratio: 0.5,
                            depth: 40,
                        };
                    }
                }
                other => return Err(bad(format!("unknown measure '{other}'"))),
            },
            "mass" | "y0" => {
                let mass_v: f64 = value.parse().map_err(|e| bad(format!("{key}: {e}")))?;
                match &mut self.measure {
                    MeasureSpec::Geometric { mass, .. } => *mass = mass_v,
                    _ => {
                        self.measure = MeasureSpec::Geometric {
                            mass: mass_v,
                            ratio: 0.5,
                            depth: 40,
                        }
                    }
                }
            }
            "ratio" => match &mut self.measure {
                MeasureSpec::Geometric { ratio, .. } => {
                    *ratio = value.parse().map_err(|e| bad(format!("ratio: {e}")))?
                }
                _ => return Err(bad("ratio only applies to geometric measures".into())),
            },
            "depth" => match &mut self.measure {
                MeasureSpec::Geometric { depth, .. } => {
                    *depth = value.parse().map_err(|e| bad(format!("depth: {e}")))?
                }
                _ => return Err(bad("depth only applies to geometric measures".into())),
            },
            "n_schedule" => {
                self.n_schedule = value
                    .split(',')
                    .map(|s| s.trim().parse::<u64>())
                    .collect::<Result<_, _>>()
                    .map_err(|e| bad(format!("n_schedule: {e}")))?;
            }
            "trials" => self.trials = value.parse().map_err(|e| bad(format!("trials: {e}")))?,
            "grid_half_width" => {
                self.grid.half_width =
                    value.parse().map_err(|e| bad(format!("grid_half_width: {e}")))?
            }
            "grid_resolution" => {
                self.grid.resolution =
                    value.parse().map_err(|e| bad(format!("grid_resolution: {e}")))?
            }
            "alpha" => self.alpha_name = value.to_string(),
            "seed" => self.seed = value.parse().map_err(|e| bad(format!("seed: {e}")))?,
            "threads" => self.threads = value.parse().map_err(|e| bad(format!("threads: {e}")))?,
            "tail_tol" => {
                self.tail_tol = value.parse().map_err(|e| bad(format!("tail_tol: {e}")))?
            }
            "stick_cap" => {
                self.stick_cap = value.parse().map_err(|e| bad(format!("stick_cap: {e}")))?
            }
            "poisson_window" => {
                self.poisson_window =
                    value.parse().map_err(|e| bad(format!("poisson_window: {e}")))?
            }
            "z_panel" => {
                self.z_panel = value
                    .split(',')
                    .map(|pair| {
                        let mut it = pair.trim().split(':');
                        let re = it.next().unwrap_or("").parse::<f64>();
                        let im = it.next().unwrap_or("0").parse::<f64>();
                        match (re, im) {
                            (Ok(re), Ok(im)) => Ok((re, im)),
                            _ => Err(bad(format!("z_panel entry '{pair}'"))),
                        }
                    })
                    .collect::<Result<_, _>>()?;
            }
            other => return Err(bad(format!("unknown config key '{other}'"))),
        }
        Ok(())
    }

    /// Parses a whole `key = value` config file body.
    pub fn apply_text(&mut self, body: &str) -> Result<(), HarnessError> {
        for line in body.lines() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut parts = line.splitn(2, '=');
            let key = parts.next().unwrap().trim();
            let value = parts
                .next()
                .ok_or_else(|| HarnessError::Config(format!("line '{line}' is not key=value")))?
                .trim();
            self.apply_kv(key, value)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Metric {
    pub name: String,
    pub value: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Table {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Verdict {
    pub criterion: String,
    pub passed: bool,
    pub observed: f64,
    pub threshold: f64,
}

/// Experiment output. Serialization is deterministic given `(config, seed)`:
/// wall-clock time is carried for display but skipped by serde.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Report {
    pub schema: u32,
    pub library_version: String,
    pub experiment: String,
    pub config: ExperimentConfig,
    pub notes: Vec<String>,
    pub metrics: Vec<Metric>,
    pub tables: Vec<Table>,
    pub verdicts: Vec<Verdict>,
    #[serde(skip)]
    pub wall_clock_secs: f64,
}

impl Report {
    pub fn new(experiment: &str, config: &ExperimentConfig) -> Self {
        Report {
            schema: 1,
            library_version: env!("CARGO_PKG_VERSION").to_string(),
            experiment: experiment.to_string(),
            config: config.clone(),
            notes: vec![
                "verdict thresholds are frozen engineering constants (harness::thresholds), \
                 calibrated once against the oracle-checked evaluators"
                    .into(),
            ],
            metrics: Vec::new(),
            tables: Vec::new(),
            verdicts: Vec::new(),
            wall_clock_secs: 0.0,
        }
    }

    pub fn metric(&mut self, name: &str, value: f64) {
        self.metrics.push(Metric {
            name: name.to_string(),
            value,
        });
    }

    pub fn verdict(&mut self, criterion: &str, passed: bool, observed: f64, threshold: f64) {
        self.verdicts.push(Verdict {
            criterion: criterion.to_string(),
            passed,
            observed,
            threshold,
        });
    }

    pub fn all_passed(&self) -> bool {
        self.verdicts.iter().all(|v| v.passed)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    /// Flat CSV rendering: one block per table, then metrics and verdicts.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for table in &self.tables {
            out.push_str(&format!("# table,{}\n", table.name));
            out.push_str(&table.columns.join(","));
            out.push('\n');
            for row in &table.rows {
                let cells: Vec<String> = row.iter().map(|v| format!("{v}")).collect();
                out.push_str(&cells.join(","));
                out.push('\n');
            }
        }
        out.push_str("# table,metrics\nname,value\n");
        for m in &self.metrics {
            out.push_str(&format!("{},{}\n", m.name, m.value));
        }
        out.push_str("# table,verdicts\ncriterion,passed,observed,threshold\n");
        for v in &self.verdicts {
            out.push_str(&format!(
                "{},{},{},{}\n",
                v.criterion, v.passed as u8, v.observed, v.threshold
            ));
        }
        out
    }

    pub fn render(&self, format: ReportFormat) -> String {
        match format {
            ReportFormat::Json => self.to_json(),
            ReportFormat::Csv => self.to_csv(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Json,
    Csv,
}

impl ReportFormat {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "json" => Some(Self::Json),
            "csv" => Some(Self::Csv),
            _ => None,
        }
    }
}

/// Writes a rendered report to a file.
pub fn emit_report(
    report: &Report,
    path: &std::path::Path,
    format: ReportFormat,
) -> Result<(), HarnessError> {
    std::fs::write(path, report.render(format))?;
    Ok(())
}

/// Runs a closure over trial indices on a dedicated pool, preserving index
/// order in the output so thread count cannot affect results.
pub fn run_trials<T, F>(trials: u64, threads: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64) -> T + Sync + Send,
{
    use rayon::prelude::*;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.max(1))
        .build()
        .expect("thread pool");
    pool.install(|| (0..trials).into_par_iter().map(f).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_lattice_and_clip() {
        let mut g = GridSpec::default();
        let pts = g.points();
        // 9x9 lattice minus the 32 points outside the radius-2 disk
        assert_eq!(pts.len(), 49);
        assert!(pts.iter().all(|z| z.norm() <= 2.0 + 1e-12));
        g.clip_radius = None;
        assert_eq!(g.points().len(), 81);
    }

    #[test]
    fn config_kv_round_trip() {
        let mut cfg = ExperimentConfig::default();
        cfg.apply_text(
            "# comment\n\
             theta = 2.0\n\
             trials = 7\n\
             n_schedule = 16,64\n\
             alpha = sqrt2\n\
             seed = 99\n\
             z_panel = 1:0, 0.5:-0.5\n",
        )
        .unwrap();
        assert_eq!(cfg.trials, 7);
        assert_eq!(cfg.n_schedule, vec![16, 64]);
        assert_eq!(cfg.alpha_name, "sqrt2");
        assert_eq!(cfg.seed, 99);
        assert_eq!(cfg.z_panel, vec![(1.0, 0.0), (0.5, -0.5)]);
        assert!(matches!(
            cfg.measure,
            MeasureSpec::PoissonDirichlet { theta } if (theta - 2.0).abs() < 1e-15
        ));
        assert!(cfg.apply_kv("nonsense", "1").is_err());
    }

    #[test]
    fn config_validation() {
        let mut cfg = ExperimentConfig {
            n_schedule: vec![8, 8],
            ..Default::default()
        };
        assert!(cfg.validate().is_err());
        cfg.n_schedule = vec![8, 16];
        assert!(cfg.validate().is_ok());
    }

    #[test]
    fn geometric_measure_mass() {
        let spec = MeasureSpec::Geometric {
            mass: 0.5,
            ratio: 0.5,
            depth: 40,
        };
        let mut rng = SplitMix64::new(1);
        let (w, _) = spec.sample(1e-9, 64, &mut rng).unwrap();
        assert!((w.total() - 0.5).abs() < 1e-12);
        assert!((w.values[0] - 0.25).abs() < 1e-15);
        assert!(!w.normalized);
    }

    #[test]
    fn report_serialization_is_deterministic() {
        let cfg = ExperimentConfig::default();
        let mut a = Report::new("demo", &cfg);
        a.metric("x", 1.25);
        a.verdict("crit", true, 0.01, 0.05);
        a.wall_clock_secs = 123.0;
        let mut b = a.clone();
        b.wall_clock_secs = 987.0;
        assert_eq!(a.to_json(), b.to_json());
        assert!(a.to_json().contains("\"criterion\": \"crit\""));
    }

    #[test]
    fn threads_do_not_appear_in_serialized_config() {
        let mut cfg = ExperimentConfig {
            threads: 1,
            ..Default::default()
        };
        let one = serde_json::to_string(&cfg).unwrap();
        cfg.threads = 8;
        let eight = serde_json::to_string(&cfg).unwrap();
        assert_eq!(one, eight);
    }

    #[test]
    fn trial_pool_is_order_stable() {
        let seq = run_trials(64, 1, |t| t * t);
        let par = run_trials(64, 8, |t| t * t);
        assert_eq!(seq, par);
    }

    #[test]
    fn report_json_round_trips() {
        let cfg = ExperimentConfig::default();
        let mut report = Report::new("demo", &cfg);
        report.metric("alpha", 0.125);
        report.tables.push(Table {
            name: "t".into(),
            columns: vec!["a".into(), "b".into()],
            rows: vec![vec![1.0, 2.0], vec![3.0, 4.5]],
        });
        report.verdict("crit", false, 0.2, 0.1);
        let parsed: Report = serde_json::from_str(&report.to_json()).unwrap();
        assert_eq!(parsed.to_json(), report.to_json());
        assert_eq!(parsed.config, cfg);
    }

    #[test]
    fn csv_blocks_have_fixed_column_counts() {
        let cfg = ExperimentConfig::default();
        let mut report = Report::new("demo", &cfg);
        report.tables.push(Table {
            name: "t".into(),
            columns: vec!["a".into(), "b".into(), "c".into()],
            rows: vec![vec![1.0, 2.0, 3.0]; 4],
        });
        report.metric("m", 1.0);
        report.verdict("v", true, 0.0, 1.0);
        let csv = report.to_csv();
        let mut width = None;
        for line in csv.lines() {
            if line.starts_with("# table") {
                width = None;
                continue;
            }
            let cols = line.split(',').count();
            match width {
                None => width = Some(cols),
                Some(w) => assert_eq!(w, cols, "ragged row: {line}"),
            }
        }
    }
}
