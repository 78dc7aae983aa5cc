//! Coupled growth of virtual permutations.
//!
//! Points dropped uniformly on the circles-plus-segment space realize a
//! coherent sequence of permutations: following a circle counterclockwise,
//! each label maps to the next label encountered, and segment points are fixed
//! points. Removing the top label from the realization at size `n + 1` gives
//! the realization at size `n`, which is the defining property of a virtual
//! permutation.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::measures::{sample_point, PointLocation, SpaceLayout};
use crate::rng::SplitMix64;

#[derive(Debug, Error)]
pub enum PermError {
    #[error("angle collides with an existing point; resample")]
    AngleCollision,
    #[error("cannot shrink an empty permutation")]
    Empty,
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("validation failed: {0}")]
    Validation(String),
}

/// Point-set state realizing a growing permutation. Circles hold labels keyed
/// by the bit pattern of their angle (order-preserving for nonnegative
/// floats); segment labels are fixed points in arrival order.
#[derive(Debug, Clone, Default)]
pub struct GrowingPermutation {
    circles: Vec<BTreeMap<u64, u32>>,
    segment: Vec<u32>,
    n: u32,
}

impl GrowingPermutation {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> u32 {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// Inserts the next label at the given location. The new label is
    /// `len() + 1`. An exact angular collision (probability zero) is reported
    /// so the caller can resample.
    pub fn insert_point(&mut self, loc: &PointLocation) -> Result<u32, PermError> {
        let label = self.n + 1;
        match *loc {
            PointLocation::Circle { index, angle } => {
                if index == 0 {
                    return Err(PermError::Parameter("circle index is 1-based".into()));
                }
                if angle.is_nan() || angle < 0.0 {
                    return Err(PermError::Parameter(format!("bad angle {angle}")));
                }
                if self.circles.len() < index {
                    self.circles.resize_with(index, BTreeMap::new);
                }
                let circle = &mut self.circles[index - 1];
                let key = angle.to_bits();
                if circle.contains_key(&key) {
                    return Err(PermError::AngleCollision);
                }
                circle.insert(key, label);
            }
            PointLocation::Segment { .. } => {
                self.segment.push(label);
            }
        }
        self.n = label;
        Ok(label)
    }

    /// Samples a uniform point of the layout and inserts it, resampling on
    /// the (measure-zero) angle collisions.
    pub fn grow(&mut self, layout: &SpaceLayout, rng: &mut SplitMix64) -> PointLocation {
        loop {
            let loc = sample_point(layout, rng);
            match self.insert_point(&loc) {
                Ok(_) => return loc,
                Err(PermError::AngleCollision) => continue,
                Err(e) => unreachable!("sampled point rejected: {e}"),
            }
        }
    }

    /// Realizes the permutation on `{1..n}`: each occupied circle contributes
    /// the cycle of its labels in counterclockwise (increasing angle) order,
    /// each segment label a fixed point.
    pub fn realize(&self) -> Permutation {
        let mut cycles = Vec::new();
        for circle in &self.circles {
            if !circle.is_empty() {
                cycles.push(circle.values().copied().collect());
            }
        }
        for &label in &self.segment {
            cycles.push(vec![label]);
        }
        Permutation { cycles, n: self.n }
    }

    /// Cycle counts `l_{n,j}` per circle plus the segment point count.
    pub fn counts(&self) -> CycleCounts {
        CycleCounts {
            ell: self.circles.iter().map(|c| c.len() as u64).collect(),
            p_n: self.segment.len() as u64,
            n: self.n as u64,
        }
    }
}

/// A permutation stored by its disjoint cycles. A cycle `(a b c)` maps
/// `a -> b -> c -> a`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Permutation {
    pub cycles: Vec<Vec<u32>>,
    pub n: u32,
}

/// Equality is semantic: same map, regardless of how cycles are listed or
/// rotated.
impl PartialEq for Permutation {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n && self.image() == other.image()
    }
}

impl Eq for Permutation {}

impl Permutation {
    pub fn from_cycles(cycles: Vec<Vec<u32>>, n: u32) -> Result<Self, PermError> {
        let p = Permutation { cycles, n };
        p.validate()?;
        Ok(p)
    }

    /// Reconstructs cycles from an image vector; `image[k]` is the 1-based
    /// image of `k + 1`.
    pub fn from_image(image: &[u32]) -> Result<Self, PermError> {
        let n = image.len() as u32;
        let mut seen = vec![false; image.len()];
        let mut cycles = Vec::new();
        for start in 1..=n {
            if seen[(start - 1) as usize] {
                continue;
            }
            let mut cycle = Vec::new();
            let mut cur = start;
            loop {
                if cur == 0 || cur > n {
                    return Err(PermError::Validation(format!("image {cur} out of range")));
                }
                if seen[(cur - 1) as usize] {
                    return Err(PermError::Validation("image is not a bijection".into()));
                }
                seen[(cur - 1) as usize] = true;
                cycle.push(cur);
                cur = image[(cur - 1) as usize];
                if cur == start {
                    break;
                }
            }
            cycles.push(cycle);
        }
        Ok(Permutation { cycles, n })
    }

    pub fn validate(&self) -> Result<(), PermError> {
        let mut seen = vec![false; self.n as usize];
        for cycle in &self.cycles {
            if cycle.is_empty() {
                return Err(PermError::Validation("empty cycle".into()));
            }
            for &x in cycle {
                if x == 0 || x > self.n {
                    return Err(PermError::Validation(format!("label {x} out of range")));
                }
                if seen[(x - 1) as usize] {
                    return Err(PermError::Validation(format!("label {x} repeated")));
                }
                seen[(x - 1) as usize] = true;
            }
        }
        if seen.iter().any(|&s| !s) {
            return Err(PermError::Validation("cycles do not cover {1..n}".into()));
        }
        Ok(())
    }

    /// Number of cycles `K(sigma)`.
    pub fn cycle_count(&self) -> usize {
        self.cycles.len()
    }

    /// Image vector: entry `k` (0-based) holds the 1-based image of `k + 1`.
    pub fn image(&self) -> Vec<u32> {
        let mut image = vec![0u32; self.n as usize];
        for cycle in &self.cycles {
            for (i, &x) in cycle.iter().enumerate() {
                image[(x - 1) as usize] = cycle[(i + 1) % cycle.len()];
            }
        }
        image
    }

    /// Sorted cycle lengths, largest first.
    pub fn cycle_type(&self) -> Vec<u32> {
        let mut t: Vec<u32> = self.cycles.iter().map(|c| c.len() as u32).collect();
        t.sort_unstable_by(|a, b| b.cmp(a));
        t
    }
}

/// Removes the top element `n` from the cycle decomposition, yielding the
/// permutation of size `n - 1`.
pub fn remove_top(p: &Permutation) -> Result<Permutation, PermError> {
    if p.n == 0 {
        return Err(PermError::Empty);
    }
    let top = p.n;
    let mut cycles = Vec::with_capacity(p.cycles.len());
    for cycle in &p.cycles {
        if let Some(pos) = cycle.iter().position(|&x| x == top) {
            if cycle.len() > 1 {
                let mut c = Vec::with_capacity(cycle.len() - 1);
                c.extend_from_slice(&cycle[..pos]);
                c.extend_from_slice(&cycle[pos + 1..]);
                cycles.push(c);
            }
        } else {
            cycles.push(cycle.clone());
        }
    }
    let out = Permutation {
        cycles,
        n: p.n - 1,
    };
    out.validate()?;
    Ok(out)
}

/// Ewens probability `theta^K / (theta (theta+1) ... (theta+n-1))`, computed
/// in log space.
pub fn ewens_pmf(p: &Permutation, theta: f64) -> Result<f64, PermError> {
    if theta <= 0.0 || !theta.is_finite() {
        return Err(PermError::Parameter(format!(
            "theta must be positive, got {theta}"
        )));
    }
    let k = p.cycle_count() as f64;
    let mut log_rising = 0.0;
    for i in 0..p.n as u64 {
        log_rising += (theta + i as f64).ln();
    }
    Ok((k * theta.ln() - log_rising).exp())
}

/// Cycle counts of a realized permutation: `ell[j]` points on circle `j + 1`,
/// `p_n` fixed points from the segment.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CycleCounts {
    pub ell: Vec<u64>,
    pub p_n: u64,
    pub n: u64,
}

/// Counts compare up to trailing empty circles.
impl PartialEq for CycleCounts {
    fn eq(&self, other: &Self) -> bool {
        if self.p_n != other.p_n || self.n != other.n {
            return false;
        }
        let (short, long) = if self.ell.len() <= other.ell.len() {
            (&self.ell, &other.ell)
        } else {
            (&other.ell, &self.ell)
        };
        short == &long[..short.len()] && long[short.len()..].iter().all(|&l| l == 0)
    }
}

impl Eq for CycleCounts {}

impl CycleCounts {
    /// Normalized cycle lengths `y_j^(n) = l_{n,j} / n`.
    pub fn normalized(&self) -> Vec<f64> {
        self.ell
            .iter()
            .map(|&l| l as f64 / self.n as f64)
            .collect()
    }

    pub fn total(&self) -> u64 {
        self.ell.iter().sum::<u64>() + self.p_n
    }
}

/// Counts-only sampler: distributionally identical to growing a
/// [`GrowingPermutation`] and taking [`GrowingPermutation::counts`], and
/// consumes the RNG stream identically (two uniforms per point), but skips the
/// ordered structure.
pub fn sample_cycle_counts(layout: &SpaceLayout, n: u64, rng: &mut SplitMix64) -> CycleCounts {
    let mut ell = vec![0u64; layout.circle_count()];
    let mut p_n = 0u64;
    for _ in 0..n {
        match sample_point(layout, rng) {
            PointLocation::Circle { index, .. } => ell[index - 1] += 1,
            PointLocation::Segment { .. } => p_n += 1,
        }
    }
    CycleCounts { ell, p_n, n }
}
