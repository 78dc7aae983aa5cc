//! Modified permutation matrices: permutation matrices whose unit entries are
//! replaced by complex numbers of modulus one (the wreath product of the
//! circle with the symmetric group).
//!
//! A matrix is stored sparsely as one image index and one unit entry per
//! column. The characteristic polynomial factors over cycles as
//! `prod (X^len - mark)` where a cycle's mark is the product of its entries.
//! Matrices without eigenvalue one admit a unique rank-1 projection down a
//! size, which merges the two entries touching the top label into one; marks
//! of surviving cycles are invariant along the projection chain.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::measures::{PointLocation, SpaceLayout};
use crate::permutations::{CycleCounts, GrowingPermutation, Permutation};
use crate::rng::SplitMix64;

/// Unit-modulus tolerance for entries.
pub const UNIT_TOL: f64 = 1e-9;
/// A matrix is taken to have eigenvalue one when some cycle mark is within
/// this distance of one.
pub const MARK_ONE_TOL: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum WreathError {
    #[error("entry {index} has modulus {modulus}, not on the unit circle")]
    NonUnitEntry { index: usize, modulus: f64 },
    #[error("entry count {got} does not match permutation size {want}")]
    SizeMismatch { got: usize, want: usize },
    #[error("sequence is not a cycle of the matrix permutation")]
    NotACycle,
    #[error("matrix has eigenvalue one (cycle mark within {MARK_ONE_TOL} of 1); projection undefined")]
    EigenvalueOne,
    #[error(
        "denominator vanishes: X is within tolerance of an {ell}-th root of the cycle mark {mark}"
    )]
    DenominatorVanishes { ell: u64, mark: Complex64 },
    #[error("cannot project an empty matrix")]
    Empty,
}

/// Sparse wreath-product matrix: column `k` (1-based label `k+1`) holds
/// `entry[k]` in row `image[k]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ModifiedPermMatrix {
    image: Vec<u32>,
    entry: Vec<Complex64>,
    n: usize,
}

#[derive(Serialize, Deserialize)]
struct MatrixJson {
    image: Vec<u32>,
    entry_re: Vec<f64>,
    entry_im: Vec<f64>,
}

impl ModifiedPermMatrix {
    /// Builds the matrix realizing `p` with the given unit entries: column `k`
    /// holds `entries[k-1]` in row `sigma(k)`. All-ones entries give the plain
    /// permutation matrix.
    pub fn build(p: &Permutation, entries: Vec<Complex64>) -> Result<Self, WreathError> {
        if entries.len() != p.n as usize {
            return Err(WreathError::SizeMismatch {
                got: entries.len(),
                want: p.n as usize,
            });
        }
        for (i, z) in entries.iter().enumerate() {
            let m = z.norm();
            if (m - 1.0).abs() > UNIT_TOL {
                return Err(WreathError::NonUnitEntry {
                    index: i,
                    modulus: m,
                });
            }
        }
        Ok(ModifiedPermMatrix {
            image: p.image(),
            entry: entries,
            n: p.n as usize,
        })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// 1-based image of 1-based `k`.
    pub fn image_of(&self, k: u32) -> u32 {
        self.image[(k - 1) as usize]
    }

    pub fn entry_of(&self, k: u32) -> Complex64 {
        self.entry[(k - 1) as usize]
    }

    pub fn image(&self) -> &[u32] {
        &self.image
    }

    pub fn entries(&self) -> &[Complex64] {
        &self.entry
    }

    pub fn permutation(&self) -> Permutation {
        Permutation::from_image(&self.image).expect("stored image is a bijection")
    }

    /// Cycles listed with their smallest element first, ordered by that
    /// element.
    pub fn cycles(&self) -> Vec<Vec<u32>> {
        self.permutation().cycles
    }

    /// Product of the entries along a cycle; modulus one.
    pub fn cycle_mark(&self, cycle: &[u32]) -> Result<Complex64, WreathError> {
        if cycle.is_empty() {
            return Err(WreathError::NotACycle);
        }
        for (i, &k) in cycle.iter().enumerate() {
            if k == 0 || k as usize > self.n {
                return Err(WreathError::NotACycle);
            }
            let next = cycle[(i + 1) % cycle.len()];
            if self.image_of(k) != next {
                return Err(WreathError::NotACycle);
            }
        }
        Ok(cycle
            .iter()
            .map(|&k| self.entry_of(k))
            .product())
    }

    /// (length, mark) per cycle, in the order of [`Self::cycles`].
    pub fn cycle_marks(&self) -> Vec<(u64, Complex64)> {
        self.cycles()
            .iter()
            .map(|c| {
                (
                    c.len() as u64,
                    self.cycle_mark(c).expect("own cycle is valid"),
                )
            })
            .collect()
    }

    /// Membership in the set of matrices without eigenvalue one: every cycle
    /// mark differs from one.
    pub fn in_t(&self) -> bool {
        self.cycle_marks()
            .iter()
            .all(|(_, mark)| (mark - Complex64::ONE).norm() > MARK_ONE_TOL)
    }

    /// Characteristic polynomial `det(XI - M)` via the cycle-product formula.
    pub fn char_poly_eval(&self, x: Complex64) -> Complex64 {
        self.cycle_marks()
            .iter()
            .map(|&(len, mark)| complex_pow(x, len) - mark)
            .product()
    }

    /// The unique one-size-down matrix within rank one of `diag(N, 1)`.
    ///
    /// When the top label is a fixed point this is the top-left minor;
    /// otherwise the two entries of the cycle through the top label merge
    /// into a single entry and everything else is untouched.
    pub fn project(&self) -> Result<Self, WreathError> {
        if self.n == 0 {
            return Err(WreathError::Empty);
        }
        if !self.in_t() {
            return Err(WreathError::EigenvalueOne);
        }
        let top = self.n as u32;
        let w1 = self.image_of(top);
        let mut image = self.image[..self.n - 1].to_vec();
        let mut entry = self.entry[..self.n - 1].to_vec();
        if w1 != top {
            // walk to the predecessor of the top label in its cycle
            let mut w_ell = w1;
            while self.image_of(w_ell) != top {
                w_ell = self.image_of(w_ell);
            }
            image[(w_ell - 1) as usize] = w1;
            entry[(w_ell - 1) as usize] = self.entry_of(w_ell) * self.entry_of(top);
        }
        Ok(ModifiedPermMatrix {
            image,
            entry,
            n: self.n - 1,
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&MatrixJson {
            image: self.image.clone(),
            entry_re: self.entry.iter().map(|z| z.re).collect(),
            entry_im: self.entry.iter().map(|z| z.im).collect(),
        })
        .expect("matrix serializes")
    }

    pub fn from_json(s: &str) -> Result<Self, WreathError> {
        let raw: MatrixJson =
            serde_json::from_str(s).map_err(|_| WreathError::NotACycle)?;
        let p = Permutation::from_image(&raw.image).map_err(|_| WreathError::NotACycle)?;
        let entries = raw
            .entry_re
            .iter()
            .zip(&raw.entry_im)
            .map(|(&re, &im)| Complex64::new(re, im))
            .collect();
        Self::build(&p, entries)
    }
}

/// `x^n` by binary exponentiation; unit-modulus bases use angle arithmetic so
/// the modulus does not drift over large cycle lengths.
pub fn complex_pow(x: Complex64, n: u64) -> Complex64 {
    if n == 0 {
        return Complex64::ONE;
    }
    if (x.norm() - 1.0).abs() < 1e-12 {
        return Complex64::cis(x.arg() * n as f64);
    }
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

/// Residual of the one-step characteristic polynomial recursion, scaled by
/// `1 + |chi_{n+1}(X)|`; expected below 1e-9 when `prev` is the projection of
/// `next`.
pub fn char_poly_recursion_check(
    next: &ModifiedPermMatrix,
    prev: &ModifiedPermMatrix,
    x: Complex64,
) -> Result<f64, WreathError> {
    if next.is_empty() || prev.len() + 1 != next.len() {
        return Err(WreathError::SizeMismatch {
            got: prev.len(),
            want: next.len().saturating_sub(1),
        });
    }
    let top = next.len() as u32;
    let mut cycle = vec![top];
    let mut cur = next.image_of(top);
    while cur != top {
        cycle.push(cur);
        cur = next.image_of(cur);
    }
    let ell = (cycle.len() - 1) as u64;
    let zprod = next.cycle_mark(&cycle)?;
    let lhs = next.char_poly_eval(x);
    let rhs = if ell == 0 {
        (x - zprod) * prev.char_poly_eval(x)
    } else {
        let denom = complex_pow(x, ell) - zprod;
        if denom.norm() < 1e-12 * (1.0 + complex_pow(x, ell).norm()) {
            return Err(WreathError::DenominatorVanishes { ell, mark: zprod });
        }
        (complex_pow(x, ell + 1) - zprod) / denom * prev.char_poly_eval(x)
    };
    Ok((lhs - rhs).norm() / (1.0 + lhs.norm()))
}

/// Marks attached to the coupled construction: `u[j]` is the mark of circle
/// `j + 1` (fixed once the circle is first occupied), `v[k]` the mark of the
/// `k`-th segment fixed point, with `v_k = e^(2 i pi phi_k)`.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct CycleMarks {
    pub u: Vec<Complex64>,
    pub v: Vec<Complex64>,
    pub phi: Vec<f64>,
}

impl CycleMarks {
    /// I.i.d. uniform circle marks for circles `1..=count`, re-drawn on the
    /// (measure-zero) event that a mark is within tolerance of one.
    pub fn sample_circle_marks(count: usize, rng: &mut SplitMix64) -> Self {
        let u = (0..count).map(|_| sample_unit_mark(rng)).collect();
        CycleMarks {
            u,
            v: Vec::new(),
            phi: Vec::new(),
        }
    }

    pub fn push_segment_mark(&mut self, rng: &mut SplitMix64) -> Complex64 {
        let phi = loop {
            let t = rng.next_f64();
            if (Complex64::cis(std::f64::consts::TAU * t) - Complex64::ONE).norm() > MARK_ONE_TOL {
                break t;
            }
        };
        let v = Complex64::cis(std::f64::consts::TAU * phi);
        self.phi.push(phi);
        self.v.push(v);
        v
    }
}

fn sample_unit_mark(rng: &mut SplitMix64) -> Complex64 {
    loop {
        let z = Complex64::cis(std::f64::consts::TAU * rng.next_f64());
        if (z - Complex64::ONE).norm() > MARK_ONE_TOL {
            return z;
        }
    }
}

/// Cycle counts and marks read off a single matrix, paired in canonical cycle
/// order. Segment bookkeeping is empty: a lone matrix does not distinguish
/// circle fixed points from segment fixed points, and the finite-size ratio
/// does not depend on the distinction.
pub fn cycle_data_from_matrix(m: &ModifiedPermMatrix) -> (CycleCounts, CycleMarks) {
    let data = m.cycle_marks();
    let counts = CycleCounts {
        ell: data.iter().map(|&(len, _)| len).collect(),
        p_n: 0,
        n: m.len() as u64,
    };
    let marks = CycleMarks {
        u: data.iter().map(|&(_, mark)| mark).collect(),
        v: Vec::new(),
        phi: Vec::new(),
    };
    (counts, marks)
}

/// Grows a modified virtual permutation: the point process drives the
/// permutation while entries stay i.i.d. uniform at every size and each
/// circle's mark never changes once set.
///
/// When a point lands between two existing points of a circle, the entry that
/// bridged them splits in two: a fresh uniform `t` for the new label and the
/// old entry times `conj(t)` for the predecessor, preserving both the cycle
/// mark and the joint entry distribution.
#[derive(Debug, Clone, Default)]
pub struct CoupledMatrixChain {
    state: GrowingPermutation,
    entries: Vec<Complex64>,
    marks: CycleMarks,
    // per-circle map from angle bits to label, mirroring the growth state
    circles: Vec<std::collections::BTreeMap<u64, u32>>,
}

impl CoupledMatrixChain {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> u32 {
        self.state.len()
    }

    pub fn is_empty(&self) -> bool {
        self.state.is_empty()
    }

    pub fn marks(&self) -> &CycleMarks {
        &self.marks
    }

    pub fn state(&self) -> &GrowingPermutation {
        &self.state
    }

    /// Inserts one sampled point. Draw order per step: the point first
    /// (selector, position), then any fresh mark or split entry.
    pub fn grow(&mut self, layout: &SpaceLayout, rng: &mut SplitMix64) {
        loop {
            let loc = crate::measures::sample_point(layout, rng);
            match self.try_insert(&loc, rng) {
                Ok(()) => return,
                Err(()) => continue,
            }
        }
    }

    fn try_insert(&mut self, loc: &PointLocation, rng: &mut SplitMix64) -> Result<(), ()> {
        match *loc {
            PointLocation::Circle { index, angle } => {
                if self.circles.len() < index {
                    self.circles.resize_with(index, Default::default);
                }
                let key = angle.to_bits();
                if self.circles[index - 1].contains_key(&key) {
                    return Err(());
                }
                while self.marks.u.len() < index {
                    self.marks.u.push(sample_unit_mark(rng));
                }
                let label = self.state.len() + 1;
                let circle = &mut self.circles[index - 1];
                if circle.is_empty() {
                    self.entries.push(self.marks.u[index - 1]);
                } else {
                    // predecessor counterclockwise, wrapping to the largest angle
                    let prev_label = circle
                        .range(..key)
                        .next_back()
                        .or_else(|| circle.iter().next_back())
                        .map(|(_, &l)| l)
                        .expect("circle is nonempty");
                    let t = sample_unit_mark(rng);
                    let old = self.entries[(prev_label - 1) as usize];
                    self.entries[(prev_label - 1) as usize] = old * t.conj();
                    self.entries.push(t);
                }
                circle.insert(key, label);
                self.state
                    .insert_point(loc)
                    .expect("mirrored state accepts the same point");
                Ok(())
            }
            PointLocation::Segment { .. } => {
                let v = self.marks.push_segment_mark(rng);
                self.entries.push(v);
                self.state
                    .insert_point(loc)
                    .expect("segment insertion cannot collide");
                Ok(())
            }
        }
    }

    pub fn matrix(&self) -> ModifiedPermMatrix {
        ModifiedPermMatrix::build(&self.state.realize(), self.entries.clone())
            .expect("chain entries are unit modulus")
    }

    pub fn counts(&self) -> CycleCounts {
        self.state.counts()
    }
}
