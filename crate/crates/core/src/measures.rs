//! Weight vectors on the infinite simplex, exponential-decay certificates, and
//! uniform sampling on the circles-plus-segment space.
//!
//! A central measure on permutations is parametrized by a decreasing sequence
//! of weights summing to at most one. This module samples such sequences
//! (GEM stick breaking, sorted to Poisson-Dirichlet), certifies geometric decay
//! of the weights, and samples i.i.d. uniform points on the space made of one
//! circle of perimeter `y_j` per weight plus a segment carrying the leftover
//! mass.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rng::SplitMix64;

pub const DEFAULT_TAIL_TOL: f64 = 1e-12;
pub const DEFAULT_STICK_CAP: usize = 4096;
const TOTAL_SLACK: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum MeasureError {
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("validation failed: {0}")]
    Validation(String),
}

/// Truncated decreasing weight sequence with explicit tail mass.
///
/// `values[0]` is `y_1`, the largest weight. When `normalized` is set the
/// vector represents an element of the closed simplex (weights summing to
/// exactly one), with `tail_mass` holding the truncated remainder.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WeightVector {
    pub values: Vec<f64>,
    pub tail_mass: f64,
    /// Set when the underlying infinite sequence sums to one.
    pub normalized: bool,
    /// Ewens parameter the vector was sampled with, if any.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub theta: Option<f64>,
}

impl WeightVector {
    /// Builds a vector from explicit decreasing weights.
    pub fn from_values(
        values: Vec<f64>,
        tail_mass: f64,
        normalized: bool,
    ) -> Result<Self, MeasureError> {
        let w = WeightVector {
            values,
            tail_mass,
            normalized,
            theta: None,
        };
        w.validate()?;
        Ok(w)
    }

    pub fn sum(&self) -> f64 {
        self.values.iter().sum()
    }

    /// Mass of the full (untruncated) sequence: stored weights plus tail.
    pub fn total(&self) -> f64 {
        self.sum() + self.tail_mass
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn validate(&self) -> Result<(), MeasureError> {
        for w in self.values.windows(2) {
            if w[1] > w[0] {
                return Err(MeasureError::Validation(format!(
                    "weights not decreasing: {} < {}",
                    w[0], w[1]
                )));
            }
        }
        if self.values.iter().any(|&v| !(0.0..=1.0).contains(&v)) {
            return Err(MeasureError::Validation(
                "weights must lie in [0, 1]".into(),
            ));
        }
        if self.tail_mass < 0.0 {
            return Err(MeasureError::Validation("negative tail mass".into()));
        }
        if self.total() > 1.0 + TOTAL_SLACK {
            return Err(MeasureError::Validation(format!(
                "total mass {} exceeds one",
                self.total()
            )));
        }
        if self.normalized && (self.total() - 1.0).abs() > TOTAL_SLACK {
            return Err(MeasureError::Validation(format!(
                "normalized vector has total {}",
                self.total()
            )));
        }
        Ok(())
    }
}

/// Geometric decay certificate: `values[j] <= C * r^(j+1)` for every stored
/// 0-based index `j` (weights are 1-based in the decay inequality).
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct DecayCertificate {
    pub c: f64,
    pub r: f64,
}

/// Disjoint union of circles with perimeters from a weight vector and a
/// segment carrying the rest of the unit mass.
#[derive(Debug, Clone)]
pub struct SpaceLayout {
    pub circles: WeightVector,
    pub segment_length: f64,
    /// cumulative[j] = sum of the first j+1 circle perimeters
    cumulative: Vec<f64>,
}

impl SpaceLayout {
    pub fn new(circles: WeightVector) -> Result<Self, MeasureError> {
        circles.validate()?;
        let mut cumulative = Vec::with_capacity(circles.len());
        let mut acc = 0.0;
        for &v in &circles.values {
            acc += v;
            cumulative.push(acc);
        }
        let segment_length = (1.0 - acc - circles.tail_mass).max(0.0);
        Ok(SpaceLayout {
            circles,
            segment_length,
            cumulative,
        })
    }

    /// Segment probability as sampled: leftover length plus the truncation
    /// tail, which is folded into the segment.
    pub fn effective_segment(&self) -> f64 {
        self.segment_length + self.circles.tail_mass
    }

    pub fn circle_count(&self) -> usize {
        self.circles.len()
    }

    pub fn perimeter(&self, index: usize) -> f64 {
        self.circles.values[index]
    }
}

/// A point of the circles-plus-segment space. Circle indices are 1-based to
/// match the weight indexing.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PointLocation {
    Circle { index: usize, angle: f64 },
    Segment { pos: f64 },
}

/// Samples `count` GEM(theta) stick-breaking weights.
///
/// Each stick is `V_j * prod_{k<j} (1 - V_k)` with `V_k ~ Beta(1, theta)`
/// drawn by inversion `V = 1 - U^(1/theta)`, one uniform per stick.
pub fn sample_gem(
    theta: f64,
    count: usize,
    rng: &mut SplitMix64,
) -> Result<Vec<f64>, MeasureError> {
    if theta <= 0.0 || !theta.is_finite() {
        return Err(MeasureError::Parameter(format!(
            "theta must be positive, got {theta}"
        )));
    }
    if count == 0 {
        return Err(MeasureError::Parameter("count must be at least 1".into()));
    }
    let mut out = Vec::with_capacity(count);
    let mut residual = 1.0f64;
    for _ in 0..count {
        let v = 1.0 - rng.next_f64_open().powf(1.0 / theta);
        out.push(v * residual);
        residual *= 1.0 - v;
    }
    Ok(out)
}

/// GEM sticks drawn until the residual mass drops below `tail_tol`, capped at
/// `cap` sticks.
pub fn sample_gem_adaptive(
    theta: f64,
    tail_tol: f64,
    cap: usize,
    rng: &mut SplitMix64,
) -> Result<Vec<f64>, MeasureError> {
    if theta <= 0.0 || !theta.is_finite() {
        return Err(MeasureError::Parameter(format!(
            "theta must be positive, got {theta}"
        )));
    }
    let mut out = Vec::new();
    let mut residual = 1.0f64;
    while residual >= tail_tol && out.len() < cap {
        let v = 1.0 - rng.next_f64_open().powf(1.0 / theta);
        out.push(v * residual);
        residual *= 1.0 - v;
    }
    Ok(out)
}

/// Turns raw stick weights into stick sizes; exposed for testing the
/// stick-break arithmetic with forced `V` values.
pub fn sticks_to_weights(vs: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(vs.len());
    let mut residual = 1.0f64;
    for &v in vs {
        out.push(v * residual);
        residual *= 1.0 - v;
    }
    out
}

/// Whether the truncation depth was sufficient for the requested tolerance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TruncationStatus {
    Converged,
    /// Tail mass still above the tolerance; results stand but carry extra
    /// truncation error.
    Insufficient,
}

/// Sorts raw GEM output into a Poisson-Dirichlet style weight vector.
///
/// The result is flagged normalized: the infinite sequence sums to one and the
/// unsampled remainder is recorded as `tail_mass = 1 - sum(raw)`.
pub fn gem_to_pd(
    raw: &[f64],
    tail_tol: f64,
) -> Result<(WeightVector, TruncationStatus), MeasureError> {
    if raw.is_empty() {
        return Err(MeasureError::Validation("empty weight sample".into()));
    }
    if raw.iter().any(|&v| !(0.0..1.0).contains(&v)) {
        return Err(MeasureError::Validation(
            "raw weights must lie in [0, 1)".into(),
        ));
    }
    let sum: f64 = raw.iter().sum();
    if sum >= 1.0 + TOTAL_SLACK {
        return Err(MeasureError::Validation(format!(
            "raw weights sum to {sum} >= 1"
        )));
    }
    let mut values = raw.to_vec();
    values.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let tail_mass = (1.0 - sum).max(0.0);
    let status = if tail_mass > tail_tol {
        TruncationStatus::Insufficient
    } else {
        TruncationStatus::Converged
    };
    let w = WeightVector {
        values,
        tail_mass,
        normalized: true,
        theta: None,
    };
    w.validate()?;
    Ok((w, status))
}

/// Samples a full Poisson-Dirichlet weight vector with the adaptive
/// truncation policy, tagging it with `theta`.
pub fn sample_pd(
    theta: f64,
    tail_tol: f64,
    cap: usize,
    rng: &mut SplitMix64,
) -> Result<(WeightVector, TruncationStatus), MeasureError> {
    let raw = sample_gem_adaptive(theta, tail_tol, cap, rng)?;
    let (mut w, status) = gem_to_pd(&raw, tail_tol)?;
    w.theta = Some(theta);
    Ok((w, status))
}

/// Fits the smallest decay constant: `C = max_j values[j] / r^(j+1)`.
pub fn fit_decay_certificate(
    w: &WeightVector,
    r: f64,
) -> Result<DecayCertificate, MeasureError> {
    if !(0.0 < r && r < 1.0) {
        return Err(MeasureError::Parameter(format!(
            "decay rate must lie in (0, 1), got {r}"
        )));
    }
    if w.is_empty() {
        return Err(MeasureError::Validation("empty weight vector".into()));
    }
    let mut c = 0.0f64;
    let mut rj = 1.0f64;
    for &v in &w.values {
        rj *= r;
        c = c.max(v / rj);
    }
    Ok(DecayCertificate { c, r })
}

/// Draws a uniform point of the layout: circle `j` with probability `y_j`,
/// segment otherwise (the truncation tail counts as segment). Two uniforms are
/// consumed per point, selector first, then position.
pub fn sample_point(layout: &SpaceLayout, rng: &mut SplitMix64) -> PointLocation {
    let selector = rng.next_f64();
    let position = rng.next_f64();
    let idx = layout.cumulative.partition_point(|&c| c <= selector);
    if idx < layout.cumulative.len() {
        PointLocation::Circle {
            index: idx + 1,
            angle: position * layout.circles.values[idx],
        }
    } else {
        PointLocation::Segment {
            pos: position * layout.effective_segment(),
        }
    }
}
