//! Normalized characteristic-polynomial ratios at microscopic scale and their
//! limiting entire functions.
//!
//! For a modified matrix the ratio factors over occupied circles as
//! `prod (e^(2 i pi z l/n) - u_j) / (1 - u_j)`; its limit replaces `l/n` by the
//! circle weight `y_j`. The shifted plain-matrix ratio replaces the marks by
//! `e^(2 i pi alpha l)`, whose denominators are controlled through exact
//! fractional parts. General measures add a segment factor which converges to
//! an explicit exponential times a Poisson product taken in symmetric pairs.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::{PI, TAU};
use thiserror::Error;

use crate::diophantine::{frac_mult, AlphaFixedPoint, DioError};
use crate::measures::WeightVector;
use crate::permutations::CycleCounts;
use crate::rng::SplitMix64;
use crate::wreath::{CycleMarks, MARK_ONE_TOL};

/// Factors with `|g| <= 9/10` are accumulated as `exp(sum log(1 + g))`, the
/// rest multiplied directly; the threshold is where `|log(1+g)| <= 10 |g|`
/// holds and the logarithm stays clear of the branch cut.
const LOG_BRANCH_THRESHOLD: f64 = 0.9;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("cycle mark {index} is within {MARK_ONE_TOL} of one; ratio degenerate")]
    DegenerateMark { index: usize },
    #[error("no mark stored for occupied circle {index}")]
    MissingMark { index: usize },
    #[error("truncation bound {achieved:e} not below the requested tolerance")]
    Truncation { achieved: f64 },
    #[error("denominator below 1e-300 at cycle length {ell}; alpha too well approximable")]
    PathologicalAlpha { ell: u64 },
    #[error("weight vector is not flagged as summing to one")]
    NotNormalized,
    #[error("a Poisson point is exactly zero")]
    DegeneratePoint,
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error(transparent)]
    Diophantine(#[from] DioError),
}

/// `e^(2 i pi t)` for real `t`.
#[inline]
pub fn unit(t: f64) -> Complex64 {
    Complex64::cis(TAU * t)
}

/// `e^(2 i pi phi) - 1` for `phi` in `[0, 1)`, accurate near both endpoints:
/// `2 sin(pi phi) (-sin(pi phi) + i cos(pi phi))` with the sine taken at
/// `min(phi, 1 - phi)`.
#[inline]
pub fn unit_minus_one(phi: f64) -> Complex64 {
    let m = phi.min(1.0 - phi);
    let s = (PI * m).sin();
    let c = if phi <= 0.5 {
        (PI * m).cos()
    } else {
        -(PI * m).cos()
    };
    Complex64::new(-2.0 * s * s, 2.0 * s * c)
}

// Plain binary exponentiation. Unlike `wreath::complex_pow` it never takes
// the unit-circle shortcut, which would discard a modulus a hair off one --
// the segment ratio is near but not on the circle.
fn powu(x: Complex64, n: u64) -> Complex64 {
    let mut base = x;
    let mut exp = n;
    let mut acc = Complex64::ONE;
    while exp > 0 {
        if exp & 1 == 1 {
            acc *= base;
        }
        base *= base;
        exp >>= 1;
    }
    acc
}

/// Product of `1 + g` over the factors, log-accumulated where safe.
fn product_one_plus<I: IntoIterator<Item = Complex64>>(gs: I) -> Complex64 {
    let mut direct = Complex64::ONE;
    let mut log_sum = Complex64::ZERO;
    for g in gs {
        if g.norm() <= LOG_BRANCH_THRESHOLD {
            log_sum += (Complex64::ONE + g).ln();
        } else {
            direct *= Complex64::ONE + g;
        }
    }
    direct * log_sum.exp()
}

/// Finite-size ratio of the modified matrix: product over occupied circles of
/// `(e^(2 i pi z l/n) - u_j) / (1 - u_j)`, times the segment factor
/// `prod_k (e^(2 i pi z/n) - v_k) / (1 - v_k)` when fixed points from the
/// segment are present. Exactly one at `z = 0`.
pub fn xi_tilde_n(
    counts: &CycleCounts,
    marks: &CycleMarks,
    z: Complex64,
) -> Result<Complex64, EvalError> {
    let n = counts.n as f64;
    let mut gs = Vec::new();
    for (j, &ell) in counts.ell.iter().enumerate() {
        if ell == 0 {
            continue;
        }
        let u = *marks.u.get(j).ok_or(EvalError::MissingMark { index: j + 1 })?;
        let one_minus_u = Complex64::ONE - u;
        if one_minus_u.norm() < MARK_ONE_TOL {
            return Err(EvalError::DegenerateMark { index: j + 1 });
        }
        let y = ell as f64 / n;
        let num = (Complex64::I * TAU * z * y).exp() - Complex64::ONE;
        gs.push(num / one_minus_u);
    }
    if counts.p_n > 0 {
        if (marks.v.len() as u64) < counts.p_n {
            return Err(EvalError::MissingMark {
                index: marks.v.len() + 1,
            });
        }
        let num = (Complex64::I * TAU * z / n).exp() - Complex64::ONE;
        for k in 0..counts.p_n as usize {
            let one_minus_v = Complex64::ONE - marks.v[k];
            if one_minus_v.norm() < MARK_ONE_TOL {
                return Err(EvalError::DegenerateMark { index: k + 1 });
            }
            gs.push(num / one_minus_v);
        }
    }
    Ok(product_one_plus(gs))
}

/// Finite-size shifted ratio of the plain permutation matrix:
/// `prod (e^(2 i pi (z/n + alpha) l) - 1) / (e^(2 i pi alpha l) - 1)` over
/// occupied circles, times `((e^(2 i pi (z/n + alpha)) - 1)/(e^(2 i pi alpha) - 1))^(p_n)`.
/// Denominators are built from exact fractional parts of `alpha l`.
pub fn xi_n_alpha(
    counts: &CycleCounts,
    alpha: &AlphaFixedPoint,
    z: Complex64,
) -> Result<Complex64, EvalError> {
    alpha.require_irrational()?;
    let n = counts.n as f64;
    let mut gs = Vec::new();
    for &ell in counts.ell.iter() {
        if ell == 0 {
            continue;
        }
        let phi = frac_mult(alpha, ell)?;
        let denom = unit_minus_one(phi);
        if denom.norm() < 1e-300 {
            return Err(EvalError::PathologicalAlpha { ell });
        }
        let coeff = unit(phi) / denom;
        let num = (Complex64::I * TAU * z * (ell as f64 / n)).exp() - Complex64::ONE;
        gs.push(coeff * num);
    }
    let mut value = product_one_plus(gs);
    if counts.p_n > 0 {
        let a1 = frac_mult(alpha, 1)?;
        let denom = unit_minus_one(a1);
        if denom.norm() < 1e-300 {
            return Err(EvalError::PathologicalAlpha { ell: 1 });
        }
        let coeff = unit(a1) / denom;
        let num = (Complex64::I * TAU * z / n).exp() - Complex64::ONE;
        let ratio = Complex64::ONE + coeff * num;
        value *= powu(ratio, counts.p_n);
    }
    Ok(value)
}

/// Value of a limit evaluation together with the reported bound on the
/// neglected tail of the infinite product (a bound on the tail's log-modulus
/// contribution).
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct EvalOutput {
    pub value_re: f64,
    pub value_im: f64,
    pub tail_bound: f64,
}

impl EvalOutput {
    pub fn value(&self) -> Complex64 {
        Complex64::new(self.value_re, self.value_im)
    }
}

fn circle_product(
    y: &WeightVector,
    marks: &CycleMarks,
    z: Complex64,
) -> Result<(Complex64, f64), EvalError> {
    let mut gs = Vec::with_capacity(y.len());
    let mut min_gap = f64::INFINITY;
    for (j, &yj) in y.values.iter().enumerate() {
        let u = *marks.u.get(j).ok_or(EvalError::MissingMark { index: j + 1 })?;
        let one_minus_u = Complex64::ONE - u;
        let gap = one_minus_u.norm();
        if gap < MARK_ONE_TOL {
            return Err(EvalError::DegenerateMark { index: j + 1 });
        }
        min_gap = min_gap.min(gap);
        let num = (Complex64::I * TAU * z * yj).exp() - Complex64::ONE;
        gs.push(num / one_minus_u);
    }
    Ok((product_one_plus(gs), min_gap))
}

/// Limiting entire function `prod_j (e^(2 i pi z y_j) - u_j) / (1 - u_j)` over
/// the stored weights.
///
/// The neglected tail's log-modulus is bounded by
/// `10 e^(2 pi |z|) tail_mass / min_j |1 - u_j|`, using the stored minimum gap
/// as a stand-in for the unsampled marks; the bound is reported alongside the
/// value and must come in below `tol`.
pub fn xi_tilde_inf(
    y: &WeightVector,
    marks: &CycleMarks,
    z: Complex64,
    tol: f64,
) -> Result<EvalOutput, EvalError> {
    if !y.normalized {
        return Err(EvalError::NotNormalized);
    }
    let (value, min_gap) = circle_product(y, marks, z)?;
    let tail_bound = tail_log_bound(y.tail_mass, min_gap, z);
    if tail_bound >= tol {
        return Err(EvalError::Truncation {
            achieved: tail_bound,
        });
    }
    Ok(EvalOutput {
        value_re: value.re,
        value_im: value.im,
        tail_bound,
    })
}

fn tail_log_bound(tail_mass: f64, min_gap: f64, z: Complex64) -> f64 {
    if tail_mass == 0.0 {
        return 0.0;
    }
    10.0 * (TAU * z.norm()).exp() * tail_mass / min_gap
}

/// Limit of the shifted ratio for a general measure:
/// circle product times `e^(i pi z (1 - y0) (1 - i / tan(pi alpha)))` where
/// `y0` is the full circle mass. Reduces to the modified-matrix limit when
/// `y0 = 1`.
pub fn xi_inf_alpha_general(
    y: &WeightVector,
    marks: &CycleMarks,
    alpha: &AlphaFixedPoint,
    z: Complex64,
) -> Result<Complex64, EvalError> {
    alpha.require_irrational()?;
    let (value, _) = circle_product(y, marks, z)?;
    let leftover = (1.0 - y.total()).max(0.0);
    if leftover == 0.0 {
        return Ok(value);
    }
    let a = alpha.as_f64();
    let coef = Complex64::new(1.0, -1.0 / (PI * a).tan());
    let factor = (Complex64::I * PI * z * leftover * coef).exp();
    Ok(value * factor)
}

/// Points of a homogeneous Poisson process on `[-window, window]`, labelled
/// `... < w_{-1} < 0 <= w_0 < w_1 < ...`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PoissonPoints {
    points: Vec<f64>,
    zero_index: usize,
    pub intensity: f64,
    pub window: f64,
}

impl PoissonPoints {
    pub fn from_points(mut points: Vec<f64>, intensity: f64, window: f64) -> Result<Self, EvalError> {
        points.sort_unstable_by(|a, b| a.partial_cmp(b).unwrap());
        if points.contains(&0.0) {
            return Err(EvalError::DegeneratePoint);
        }
        let zero_index = points.partition_point(|&w| w < 0.0);
        Ok(PoissonPoints {
            points,
            zero_index,
            intensity,
            window,
        })
    }

    /// `w_k`; `None` when the window holds no such point.
    pub fn labelled(&self, k: i64) -> Option<f64> {
        let idx = self.zero_index as i64 + k;
        if idx < 0 {
            None
        } else {
            self.points.get(idx as usize).copied()
        }
    }

    pub fn count_nonnegative(&self) -> usize {
        self.points.len() - self.zero_index
    }

    pub fn count_negative(&self) -> usize {
        self.zero_index
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    /// Reported estimate of the pairing remainder beyond the window,
    /// `pi / sqrt(window)`.
    pub fn remainder_estimate(&self) -> f64 {
        PI / self.window.sqrt()
    }
}

/// Samples the process by exponential gaps out of the origin in both
/// directions.
pub fn sample_poisson_points(
    intensity: f64,
    window: f64,
    rng: &mut SplitMix64,
) -> Result<PoissonPoints, EvalError> {
    if !(intensity > 0.0 && intensity <= 1.0) {
        return Err(EvalError::Parameter(format!(
            "intensity {intensity} outside (0, 1]"
        )));
    }
    if window.is_nan() || window <= 0.0 {
        return Err(EvalError::Parameter(format!("window {window} not positive")));
    }
    let mut points = Vec::new();
    let mut t = 0.0f64;
    loop {
        t += rng.next_exp() / intensity;
        if t > window {
            break;
        }
        points.push(-t);
    }
    points.reverse();
    let negatives = points.len();
    let mut t = 0.0f64;
    loop {
        t += rng.next_exp() / intensity;
        if t > window {
            break;
        }
        points.push(t);
    }
    Ok(PoissonPoints {
        zero_index: negatives,
        points,
        intensity,
        window,
    })
}

/// The non-absolutely-convergent product `prod_k (1 - z / w_k)` in its
/// mandated symmetric pairing:
/// `(1 - z/w_0) prod_{k >= 1} (1 - z/w_k)(1 - z/w_{-k})` over the window.
/// Window sides rarely hold the same number of points; the unpaired leftovers
/// enter as single factors after the paired part.
pub fn poisson_product(pts: &PoissonPoints, z: Complex64) -> Result<Complex64, EvalError> {
    if pts.points.contains(&0.0) {
        return Err(EvalError::DegeneratePoint);
    }
    let mut value = match pts.labelled(0) {
        Some(w0) => Complex64::ONE - z / w0,
        None => Complex64::ONE,
    };
    let positives = pts.count_nonnegative().saturating_sub(1);
    let negatives = pts.count_negative();
    let pairs = positives.min(negatives);
    let mut gs = Vec::with_capacity(pairs + positives.abs_diff(negatives));
    for k in 1..=pairs as i64 {
        let wk = pts.labelled(k).expect("within pair range");
        let wmk = pts.labelled(-k).expect("within pair range");
        let t = (Complex64::ONE - z / wk) * (Complex64::ONE - z / wmk);
        gs.push(t - Complex64::ONE);
    }
    for k in (pairs + 1)..=positives.max(negatives) {
        let k = k as i64;
        let w = pts
            .labelled(if positives > negatives { k } else { -k })
            .expect("within leftover range");
        gs.push(-z / w);
    }
    value *= product_one_plus(gs);
    Ok(value)
}

/// Limit of the modified-matrix ratio for a general measure: circle product
/// times `e^(i pi z (1 - y0))` times the Poisson product. When the circle mass
/// is one the convention `poisson product = 1` applies and the value reduces
/// to the circle product.
pub fn xi_inf_general(
    y: &WeightVector,
    marks: &CycleMarks,
    pts: &PoissonPoints,
    z: Complex64,
) -> Result<Complex64, EvalError> {
    let (value, _) = circle_product(y, marks, z)?;
    let leftover = (1.0 - y.total()).max(0.0);
    if leftover == 0.0 {
        return Ok(value);
    }
    let factor = (Complex64::I * PI * z * leftover).exp();
    Ok(value * factor * poisson_product(pts, z)?)
}

/// `log |xi_tilde_inf(-i x)|` summed in log space so large `x` cannot
/// overflow: each factor contributes `log |e^(2 pi x y_j) - u_j| - log |1 - u_j|`.
pub fn log_abs_xi_tilde_inf_ray(
    y: &WeightVector,
    marks: &CycleMarks,
    x: f64,
) -> Result<f64, EvalError> {
    if x.is_nan() || x < 0.0 {
        return Err(EvalError::Parameter(format!("ray parameter {x} negative")));
    }
    let mut acc = 0.0f64;
    for (j, &yj) in y.values.iter().enumerate() {
        let u = *marks.u.get(j).ok_or(EvalError::MissingMark { index: j + 1 })?;
        let gap = (Complex64::ONE - u).norm();
        if gap < MARK_ONE_TOL {
            return Err(EvalError::DegenerateMark { index: j + 1 });
        }
        let a = TAU * x * yj;
        let log_num = if a > 40.0 {
            // e^a dominates; |e^a - u| = e^a |1 - u e^-a| and the correction
            // underflows
            a
        } else {
            (Complex64::new(a.exp(), 0.0) - u).norm().ln()
        };
        acc += log_num - gap.ln();
    }
    Ok(acc)
}

/// `log |xi_inf_alpha_general(-i x)|`: the ray sum plus the exponential
/// factor's contribution `pi x (1 - y0)`.
pub fn log_abs_xi_inf_alpha_ray(
    y: &WeightVector,
    marks: &CycleMarks,
    x: f64,
) -> Result<f64, EvalError> {
    let base = log_abs_xi_tilde_inf_ray(y, marks, x)?;
    let leftover = (1.0 - y.total()).max(0.0);
    Ok(base + PI * x * leftover)
}

/// Tail-control diagnostics: running minima of the mark gaps, per-circle
/// suprema of the normalized counts, and the constants they certify.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DecayDiagnostics {
    /// `m_k = min_{j <= k} |1 - u_j|`
    pub m_k: Vec<f64>,
    /// `s_j = sup_n y_j^(n)` over the trajectory (floored at the limit `y_j`,
    /// which the supremum over all sizes dominates)
    pub s_j: Vec<f64>,
    pub c1: f64,
    pub beta: f64,
    pub c2: f64,
    pub rho: f64,
    /// `sum_j y_j / |1 - u_j|`
    pub c3: f64,
    /// `sum_j s_j / |1 - u_j|`
    pub c4: f64,
}

/// Fits the diagnostics over a growth trajectory. `beta` is fixed at 3, the
/// exponent the tail-control bound runs on; `rho` must exceed the square root
/// of the decay rate for the certificate to stay bounded.
pub fn compute_diagnostics(
    y: &WeightVector,
    marks: &CycleMarks,
    trajectory: &[CycleCounts],
    rho: f64,
) -> Result<DecayDiagnostics, EvalError> {
    if trajectory.is_empty() {
        return Err(EvalError::Parameter("empty trajectory".into()));
    }
    if !(0.0 < rho && rho < 1.0) {
        return Err(EvalError::Parameter(format!("rho {rho} outside (0, 1)")));
    }
    let count = y.len().min(marks.u.len());
    if count == 0 {
        return Err(EvalError::Parameter("no circles".into()));
    }
    let gaps: Vec<f64> = marks.u[..count]
        .iter()
        .map(|u| (Complex64::ONE - u).norm())
        .collect();
    if gaps.iter().any(|&g| g < MARK_ONE_TOL) {
        return Err(EvalError::DegenerateMark { index: 0 });
    }
    let mut m_k = Vec::with_capacity(count);
    let mut running = f64::INFINITY;
    for &g in &gaps {
        running = running.min(g);
        m_k.push(running);
    }
    let mut s_j: Vec<f64> = y.values[..count].to_vec();
    for counts in trajectory {
        let n = counts.n as f64;
        for (j, &ell) in counts.ell.iter().take(count).enumerate() {
            if ell > 0 {
                s_j[j] = s_j[j].max(ell as f64 / n);
            }
        }
    }
    let c1 = m_k
        .iter()
        .enumerate()
        .map(|(i, &m)| m * ((i + 1) as f64).powi(3))
        .fold(f64::INFINITY, f64::min);
    let c2 = s_j
        .iter()
        .enumerate()
        .map(|(i, &s)| s / rho.powi(i as i32 + 1))
        .fold(0.0, f64::max);
    let c3: f64 = y.values[..count]
        .iter()
        .zip(&gaps)
        .map(|(&yj, &g)| yj / g)
        .sum();
    let c4: f64 = s_j.iter().zip(&gaps).map(|(&s, &g)| s / g).sum();
    Ok(DecayDiagnostics {
        m_k,
        s_j,
        c1,
        beta: 3.0,
        c2,
        rho,
        c3,
        c4,
    })
}
