//! Irrationals of finite type and exact fractional-part arithmetic.
//!
//! The shifted characteristic-polynomial ratio divides by `e^{2 i pi alpha l} - 1`
//! at cycle lengths `l` up to millions; a 53-bit mantissa loses about ten bits
//! of the angle there, so `{alpha l}` is computed in 128-bit fixed point
//! instead: `alpha` is stored as `frac / 2^128` and `{alpha l}` is an exact
//! wrapping multiply, with error below `2^-88` for `l <= 2^40`.

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rng::SplitMix64;

/// Largest multiplier for which the fixed-point error bound `2^-88` holds.
pub const MAX_MULTIPLIER: u64 = 1 << 40;

/// Partial quotients above this are taken as the signature of a rational
/// input whose dyadic approximation has run out of precision.
const RATIONAL_QUOTIENT_CUTOFF: u64 = 1 << 40;

#[derive(Debug, Error)]
pub enum DioError {
    #[error("argument out of range: {0}")]
    Range(String),
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("alpha is rational (continued fraction terminates)")]
    Rational,
}

/// Continued fraction `[0; a_1, a_2, ...]` of a number in (0, 1), with the
/// convergents `p_k / q_k`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ContinuedFraction {
    pub quotients: Vec<u64>,
    pub convergents: Vec<(i128, i128)>,
    /// Set when the expansion terminated: the input was rational (exactly, or
    /// to the precision of its fixed-point representation).
    pub terminated: bool,
}

impl ContinuedFraction {
    /// Expands `p / q` by the Euclidean algorithm, up to `depth` quotients.
    pub fn from_ratio(p: &BigUint, q: &BigUint, depth: usize) -> Result<Self, DioError> {
        if p.is_zero() || p >= q {
            return Err(DioError::Parameter("value must lie in (0, 1)".into()));
        }
        if depth == 0 || depth > 64 {
            return Err(DioError::Parameter("depth must lie in 1..=64".into()));
        }
        let mut quotients = Vec::new();
        let mut convergents: Vec<(i128, i128)> = Vec::new();
        // (p_{k-1}, q_{k-1}) and (p_k, q_k), seeded for x = [0; a_1, ...]
        let (mut pk1, mut qk1): (i128, i128) = (1, 0);
        let (mut pk, mut qk): (i128, i128) = (0, 1);
        let mut num = q.clone();
        let mut den = p.clone();
        let mut terminated = false;
        while quotients.len() < depth {
            let a = &num / &den;
            let r = &num % &den;
            let a64 = match a.to_u64() {
                Some(v) => v,
                None => {
                    terminated = true;
                    break;
                }
            };
            if a64 >= RATIONAL_QUOTIENT_CUTOFF {
                terminated = true;
                break;
            }
            let next_p = match (a64 as i128)
                .checked_mul(pk)
                .and_then(|v| v.checked_add(pk1))
            {
                Some(v) => v,
                None => break,
            };
            let next_q = match (a64 as i128)
                .checked_mul(qk)
                .and_then(|v| v.checked_add(qk1))
            {
                Some(v) => v,
                None => break,
            };
            // beyond q ~ 2^62 the convergents outrun a 128-bit fixed-point
            // input anyway
            if next_q > (1i128 << 62) {
                break;
            }
            quotients.push(a64);
            pk1 = pk;
            qk1 = qk;
            pk = next_p;
            qk = next_q;
            convergents.push((pk, qk));
            if r.is_zero() {
                terminated = true;
                break;
            }
            num = den;
            den = r;
        }
        let mut cf = ContinuedFraction {
            quotients,
            convergents,
            terminated,
        };
        if cf.terminated {
            cf.canonicalize();
        }
        Ok(cf)
    }

    // [.., x, 1] and [.., x+1] denote the same rational; keep the short form.
    // Seeds of the convergent recurrence: conv[-1] = (0, 1), conv[-2] = (1, 0).
    fn canonicalize(&mut self) {
        if self.quotients.len() >= 2 && *self.quotients.last().unwrap() == 1 {
            self.quotients.pop();
            self.convergents.pop();
            let last = self.quotients.len() - 1;
            self.quotients[last] += 1;
            let (p1, q1) = if last >= 1 {
                self.convergents[last - 1]
            } else {
                (0, 1)
            };
            let (p2, q2) = match last {
                0 => (1, 0),
                1 => (0, 1),
                _ => self.convergents[last - 2],
            };
            let a = self.quotients[last] as i128;
            self.convergents[last] = (a * p1 + p2, a * q1 + q2);
        }
    }

    pub fn depth(&self) -> usize {
        self.quotients.len()
    }
}

/// An irrational in (0, 1) stored as a 128-bit fixed-point fraction together
/// with its continued fraction and a finite-type estimate.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AlphaFixedPoint {
    /// `alpha = frac / 2^128`, truncated.
    pub frac: u128,
    pub cf: ContinuedFraction,
    pub type_estimate: f64,
    pub name: Option<String>,
}

/// Built-in irrationals, all of finite type.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum NamedIrrational {
    GoldenMinusOne,
    Sqrt2MinusOne,
    Sqrt3MinusOne,
    EMinusTwo,
}

impl NamedIrrational {
    pub fn parse(name: &str) -> Option<Self> {
        match name {
            "golden" => Some(Self::GoldenMinusOne),
            "sqrt2" => Some(Self::Sqrt2MinusOne),
            "sqrt3" => Some(Self::Sqrt3MinusOne),
            "e" => Some(Self::EMinusTwo),
            _ => None,
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            Self::GoldenMinusOne => "golden",
            Self::Sqrt2MinusOne => "sqrt2",
            Self::Sqrt3MinusOne => "sqrt3",
            Self::EMinusTwo => "e",
        }
    }
}

const DEFAULT_CF_DEPTH: usize = 64;
const DEFAULT_TYPE_SCAN: u64 = 100_000;

// floor(sqrt(k) * 2^128), exact to one unit in the last place.
fn sqrt_scaled(k: u64) -> BigUint {
    (BigUint::from(k) << 256u32).sqrt()
}

// floor((e - 2) * 2^128) from the factorial series at guard precision 2^192.
fn e_minus_two_frac() -> u128 {
    let mut term = BigUint::one() << 192u32;
    let mut sum = BigUint::zero();
    let mut k = 1u32;
    loop {
        k += 1;
        term /= BigUint::from(k);
        if term.is_zero() {
            break;
        }
        sum += &term;
    }
    (sum >> 64u32).to_u128().expect("fits 128 bits")
}

impl AlphaFixedPoint {
    /// Builds from a raw fixed-point fraction.
    pub fn from_frac(frac: u128, name: Option<String>) -> Result<Self, DioError> {
        if frac == 0 {
            return Err(DioError::Parameter("alpha must lie in (0, 1)".into()));
        }
        let p = BigUint::from(frac);
        let q = BigUint::one() << 128u32;
        let cf = ContinuedFraction::from_ratio(&p, &q, DEFAULT_CF_DEPTH)?;
        let mut alpha = AlphaFixedPoint {
            frac,
            cf,
            type_estimate: f64::NAN,
            name,
        };
        alpha.type_estimate = estimate_type(&alpha, DEFAULT_TYPE_SCAN)?.estimate;
        Ok(alpha)
    }

    /// Builds from an exact rational `p / q` in (0, 1). The continued fraction
    /// is exact; the fixed-point value is the floor.
    pub fn from_ratio(p: u64, q: u64, name: Option<String>) -> Result<Self, DioError> {
        if p == 0 || p >= q {
            return Err(DioError::Parameter("ratio must lie in (0, 1)".into()));
        }
        let bp = BigUint::from(p);
        let bq = BigUint::from(q);
        let cf = ContinuedFraction::from_ratio(&bp, &bq, DEFAULT_CF_DEPTH)?;
        let frac = ((BigUint::from(p) << 128u32) / BigUint::from(q))
            .to_u128()
            .expect("fits 128 bits");
        let mut alpha = AlphaFixedPoint {
            frac,
            cf,
            type_estimate: f64::NAN,
            name,
        };
        alpha.type_estimate = estimate_type(&alpha, DEFAULT_TYPE_SCAN)?.estimate;
        Ok(alpha)
    }

    pub fn named(which: NamedIrrational) -> Self {
        let one_shifted = BigUint::one() << 128u32;
        let big = match which {
            NamedIrrational::GoldenMinusOne => (sqrt_scaled(5) - &one_shifted) >> 1u32,
            NamedIrrational::Sqrt2MinusOne => sqrt_scaled(2) - &one_shifted,
            NamedIrrational::Sqrt3MinusOne => sqrt_scaled(3) - &one_shifted,
            NamedIrrational::EMinusTwo => BigUint::from(e_minus_two_frac()),
        };
        let frac = big.to_u128().expect("fraction fits 128 bits");
        Self::from_frac(frac, Some(which.label().to_string())).expect("named constant is valid")
    }

    pub fn as_f64(&self) -> f64 {
        self.frac as f64 / 2f64.powi(128)
    }

    /// Rational inputs are rejected where the theory requires finite-type
    /// irrationals.
    pub fn require_irrational(&self) -> Result<(), DioError> {
        if self.cf.terminated {
            Err(DioError::Rational)
        } else {
            Ok(())
        }
    }
}

/// Exact `{alpha * ell}` scaled by `2^128`.
#[inline]
pub fn frac_mult_exact(alpha: &AlphaFixedPoint, ell: u64) -> u128 {
    alpha.frac.wrapping_mul(ell as u128)
}

fn u128_to_unit_f64(w: u128) -> f64 {
    let hi = (w >> 64) as u64 as f64;
    let lo = w as u64 as f64;
    let x = hi * 2f64.powi(-64) + lo * 2f64.powi(-128);
    if x >= 1.0 {
        f64::from_bits(1f64.to_bits() - 1)
    } else {
        x
    }
}

/// Fractional part `{alpha * ell}` as a float; exact to `2^-88` for
/// `ell <= 2^40`.
pub fn frac_mult(alpha: &AlphaFixedPoint, ell: u64) -> Result<f64, DioError> {
    if ell == 0 || ell > MAX_MULTIPLIER {
        return Err(DioError::Range(format!(
            "multiplier {ell} outside 1..=2^40"
        )));
    }
    Ok(u128_to_unit_f64(frac_mult_exact(alpha, ell)))
}

/// Distance from `alpha * ell` to the nearest integer, in `[0, 1/2]`.
pub fn dist_nearest_int(alpha: &AlphaFixedPoint, ell: u64) -> Result<f64, DioError> {
    if ell == 0 || ell > MAX_MULTIPLIER {
        return Err(DioError::Range(format!(
            "multiplier {ell} outside 1..=2^40"
        )));
    }
    let w = frac_mult_exact(alpha, ell);
    let d = w.min(w.wrapping_neg());
    Ok(u128_to_unit_f64(d))
}

/// Result of a finite-type scan.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct TypeEstimate {
    /// `log(1 / min_n ||n alpha||) / log N`: the approximation exponent the
    /// best denominator up to `N` realizes. A lower estimate of the type; for
    /// rational inputs the minimum is zero and the estimate diverges.
    pub estimate: f64,
    pub worst_n: u64,
    pub min_dist: f64,
    pub rational: bool,
}

/// Scans `n = 1..=N` for the smallest `||n alpha||` and reports the realized
/// approximation exponent.
pub fn estimate_type(alpha: &AlphaFixedPoint, n_max: u64) -> Result<TypeEstimate, DioError> {
    if !(2..=(1u64 << 30)).contains(&n_max) {
        return Err(DioError::Parameter(format!(
            "scan bound {n_max} outside 2..=2^30"
        )));
    }
    if alpha.cf.terminated {
        // exact rational: the distance vanishes at the denominator
        let q = alpha.cf.convergents.last().map(|&(_, q)| q as u64).unwrap_or(1);
        return Ok(TypeEstimate {
            estimate: f64::INFINITY,
            worst_n: q,
            min_dist: 0.0,
            rational: true,
        });
    }
    let mut w = 0u128;
    let mut best = u128::MAX;
    let mut worst_n = 0u64;
    for n in 1..=n_max {
        w = w.wrapping_add(alpha.frac);
        let d = w.min(w.wrapping_neg());
        if d < best {
            best = d;
            worst_n = n;
            if d == 0 {
                return Ok(TypeEstimate {
                    estimate: f64::INFINITY,
                    worst_n,
                    min_dist: 0.0,
                    rational: true,
                });
            }
        }
    }
    let min_dist = u128_to_unit_f64(best);
    Ok(TypeEstimate {
        estimate: (1.0 / min_dist).ln() / (n_max as f64).ln(),
        worst_n,
        min_dist,
        rational: false,
    })
}

/// Empirical probability that a binomial cycle length falls in the
/// small-denominator set `{l >= 1 : ||alpha l|| <= a}`, together with the
/// theoretical bound shape `a^(1 / 2 nu)`.
pub fn small_denominator_prob(
    y_j: f64,
    n: u64,
    a: f64,
    nu: f64,
    alpha: &AlphaFixedPoint,
    trials: u64,
    rng: &mut SplitMix64,
) -> Result<(f64, f64), DioError> {
    if !(0.0 < y_j && y_j <= 0.5) {
        return Err(DioError::Parameter(format!(
            "weight {y_j} must lie in (0, 1/2]"
        )));
    }
    if nu.is_nan() || nu <= alpha.type_estimate {
        return Err(DioError::Parameter(format!(
            "nu = {nu} must exceed the type estimate {}",
            alpha.type_estimate
        )));
    }
    if a.is_nan() || a < 0.0 {
        return Err(DioError::Parameter(format!("threshold a = {a} negative")));
    }
    if trials == 0 {
        return Err(DioError::Parameter("trials must be positive".into()));
    }
    let binom = Binomial::new(n, y_j)
        .map_err(|e| DioError::Parameter(format!("binomial: {e}")))?;
    let mut hits = 0u64;
    for _ in 0..trials {
        let ell = binom.sample(rng);
        if ell >= 1 && dist_nearest_int(alpha, ell)? <= a {
            hits += 1;
        }
    }
    let bound = a.powf(1.0 / (2.0 * nu));
    Ok((hits as f64 / trials as f64, bound))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn golden_quotients_are_all_ones() {
        let alpha = AlphaFixedPoint::named(NamedIrrational::GoldenMinusOne);
        assert!(alpha.cf.depth() >= 40);
        assert!(alpha.cf.quotients[..40].iter().all(|&a| a == 1));
        assert!(!alpha.cf.terminated);
    }

    #[test]
    fn sqrt2_quotients_are_all_twos() {
        let alpha = AlphaFixedPoint::named(NamedIrrational::Sqrt2MinusOne);
        assert!(alpha.cf.quotients[..40].iter().all(|&a| a == 2));
    }

    #[test]
    fn e_minus_two_prefix() {
        // e = [2; 1, 2, 1, 1, 4, 1, 1, 6, ...] so e - 2 = [0; 1, 2, 1, 1, 4, ...]
        let alpha = AlphaFixedPoint::named(NamedIrrational::EMinusTwo);
        assert_eq!(
            &alpha.cf.quotients[..10],
            &[1, 2, 1, 1, 4, 1, 1, 6, 1, 1]
        );
    }

    #[test]
    fn rational_expansion_terminates() {
        let alpha = AlphaFixedPoint::from_ratio(2, 7, None).unwrap();
        assert_eq!(alpha.cf.quotients, vec![3, 2]);
        assert!(alpha.cf.terminated);
        assert!(alpha.require_irrational().is_err());
    }

    #[test]
    fn fixed_point_rational_detected_by_huge_quotient() {
        let frac = ((BigUint::from(2u32) << 128u32) / BigUint::from(7u32))
            .to_u128()
            .unwrap();
        let alpha = AlphaFixedPoint::from_frac(frac, None).unwrap();
        assert!(alpha.cf.terminated);
        assert_eq!(alpha.cf.quotients, vec![3, 2]);
        // the canonicalized convergent is the exact rational
        assert_eq!(*alpha.cf.convergents.last().unwrap(), (2, 7));
    }

    /// Short rationals keep exact convergents through the detect-and-fold
    /// path, whichever side the fixed-point floor lands on.
    #[test]
    fn canonicalization_keeps_exact_convergents() {
        let frac = (1u128 << 127) - 1;
        let alpha = AlphaFixedPoint::from_frac(frac, None).unwrap();
        assert_eq!(alpha.cf.quotients, vec![2]);
        assert_eq!(*alpha.cf.convergents.last().unwrap(), (1, 2));
        for (p, q) in [(2u32, 5u32), (3, 8), (5, 13), (4, 9), (7, 19)] {
            let frac = ((BigUint::from(p) << 128u32) / BigUint::from(q))
                .to_u128()
                .unwrap();
            let alpha = AlphaFixedPoint::from_frac(frac, None).unwrap();
            assert!(alpha.cf.terminated, "{p}/{q} not flagged");
            assert_eq!(
                *alpha.cf.convergents.last().unwrap(),
                (p as i128, q as i128),
                "{p}/{q}"
            );
        }
    }

    #[test]
    fn convergent_determinant_identity() {
        for which in [
            NamedIrrational::GoldenMinusOne,
            NamedIrrational::Sqrt2MinusOne,
            NamedIrrational::Sqrt3MinusOne,
            NamedIrrational::EMinusTwo,
        ] {
            let alpha = AlphaFixedPoint::named(which);
            let conv = &alpha.cf.convergents;
            for k in 1..conv.len() {
                let (p1, q1) = conv[k - 1];
                let (p, q) = conv[k];
                let det = p * q1 - p1 * q;
                assert!(det == 1 || det == -1, "{which:?} k={k} det={det}");
                assert!(q > q1, "{which:?} denominators not increasing");
            }
        }
    }

    #[test]
    fn named_constants_satisfy_algebraic_identities() {
        // golden - 1 solves x^2 + x = 1
        let g = AlphaFixedPoint::named(NamedIrrational::GoldenMinusOne).frac;
        let gb = BigUint::from(g);
        let lhs = &gb * &gb + (&gb << 128u32);
        let rhs = BigUint::one() << 256u32;
        let diff = if lhs > rhs { &lhs - &rhs } else { &rhs - &lhs };
        assert!(diff < (BigUint::one() << 132u32), "golden fraction off");

        // sqrt2 - 1 solves (x + 1)^2 = 2
        let s = AlphaFixedPoint::named(NamedIrrational::Sqrt2MinusOne).frac;
        let sb = BigUint::from(s) + (BigUint::one() << 128u32);
        let lhs = &sb * &sb;
        let rhs = BigUint::from(2u32) << 256u32;
        let diff = if lhs > rhs { &lhs - &rhs } else { &rhs - &lhs };
        assert!(diff < (BigUint::one() << 132u32), "sqrt2 fraction off");

        // e - 2 against 40 decimal digits
        let e = AlphaFixedPoint::named(NamedIrrational::EMinusTwo).frac;
        let digits = BigUint::parse_bytes(b"7182818284590452353602874713526624977572", 10).unwrap();
        let reference = ((digits << 128u32)
            / BigUint::parse_bytes(b"10000000000000000000000000000000000000000", 10).unwrap())
        .to_u128()
        .unwrap();
        assert!(e.abs_diff(reference) <= 2, "e-2 fraction off");
    }

    #[test]
    fn frac_mult_identity_at_one() {
        let alpha = AlphaFixedPoint::named(NamedIrrational::GoldenMinusOne);
        let x = frac_mult(&alpha, 1).unwrap();
        assert!((x - alpha.as_f64()).abs() < 1e-15);
    }

    #[test]
    fn golden_times_thirteen() {
        let alpha = AlphaFixedPoint::named(NamedIrrational::GoldenMinusOne);
        let x = frac_mult(&alpha, 13).unwrap();
        assert!((x - 0.03444).abs() < 1e-5, "got {x}");
        let d = dist_nearest_int(&alpha, 13).unwrap();
        assert!((d - 0.03444).abs() < 1e-5, "got {d}");
    }

    #[test]
    fn frac_mult_additive_mod_one() {
        let alpha = AlphaFixedPoint::named(NamedIrrational::Sqrt3MinusOne);
        let mut rng = SplitMix64::new(17);
        for _ in 0..1000 {
            let l1 = 1 + rng.next_u64() % (1 << 39);
            let l2 = 1 + rng.next_u64() % (1 << 39);
            let lhs = frac_mult_exact(&alpha, l1 + l2);
            let rhs = frac_mult_exact(&alpha, l1).wrapping_add(frac_mult_exact(&alpha, l2));
            assert_eq!(lhs, rhs);
        }
    }

    #[test]
    fn frac_mult_range_errors() {
        let alpha = AlphaFixedPoint::named(NamedIrrational::GoldenMinusOne);
        assert!(frac_mult(&alpha, 0).is_err());
        assert!(frac_mult(&alpha, (1 << 40) + 1).is_err());
    }

    /// 256-bit reference: same product without the wrap, reduced mod 2^128.
    #[test]
    fn frac_mult_agrees_with_wide_arithmetic() {
        let alpha = AlphaFixedPoint::named(NamedIrrational::EMinusTwo);
        let modulus = BigUint::one() << 128u32;
        let mut rng = SplitMix64::new(71);
        for _ in 0..10_000 {
            let ell = 1 + rng.next_u64() % (1 << 40);
            let wide = (BigUint::from(alpha.frac) * BigUint::from(ell)) % &modulus;
            assert_eq!(wide.to_u128().unwrap(), frac_mult_exact(&alpha, ell));
        }
    }

    #[test]
    fn dist_at_half() {
        let alpha = AlphaFixedPoint::from_frac(1u128 << 127, None).unwrap();
        let d = dist_nearest_int(&alpha, 1).unwrap();
        assert!((d - 0.5).abs() < 1e-15);
    }

    #[test]
    fn fibonacci_denominators_achieve_hurwitz_quality() {
        let alpha = AlphaFixedPoint::named(NamedIrrational::GoldenMinusOne);
        for k in 3..alpha.cf.convergents.len().min(30) {
            let q = alpha.cf.convergents[k].1 as u64;
            let d = dist_nearest_int(&alpha, q).unwrap();
            let ratio = d * 5f64.sqrt() * q as f64;
            assert!(
                (1.0 / 1.2..=1.2).contains(&ratio),
                "k={k} q={q} ratio={ratio}"
            );
        }
    }

    #[test]
    fn type_estimates_of_badly_approximable_numbers() {
        let golden = AlphaFixedPoint::named(NamedIrrational::GoldenMinusOne);
        let est = estimate_type(&golden, 1_000_000).unwrap();
        assert!(
            (1.0..=1.05).contains(&est.estimate),
            "golden estimate {}",
            est.estimate
        );
        let sqrt2 = AlphaFixedPoint::named(NamedIrrational::Sqrt2MinusOne);
        let est = estimate_type(&sqrt2, 1_000_000).unwrap();
        assert!(
            (1.0..=1.05).contains(&est.estimate),
            "sqrt2 estimate {}",
            est.estimate
        );
    }

    #[test]
    fn rational_scan_flags_divergence() {
        let alpha = AlphaFixedPoint::from_ratio(2, 7, None).unwrap();
        let est = estimate_type(&alpha, 100).unwrap();
        assert!(est.rational);
        assert!(est.estimate.is_infinite());
        assert_eq!(est.worst_n, 7);
        // a near-rational fixed-point value without the flag still blows up
        let frac = ((BigUint::from(2u32) << 128u32) / BigUint::from(7u32))
            .to_u128()
            .unwrap();
        let mut near = AlphaFixedPoint::from_frac(frac, None).unwrap();
        near.cf.terminated = false;
        let est = estimate_type(&near, 100).unwrap();
        assert!(est.estimate > 3.0, "estimate {}", est.estimate);
        assert_eq!(est.worst_n % 7, 0);
    }

    #[test]
    fn type_property_quantified_for_golden() {
        // n^1.01 ||n alpha|| stays above 0.4 for 2 <= n <= 1e6
        let alpha = AlphaFixedPoint::named(NamedIrrational::GoldenMinusOne);
        let mut w = alpha.frac; // n = 1
        let mut worst = f64::INFINITY;
        for n in 2..=1_000_000u64 {
            w = w.wrapping_add(alpha.frac);
            let d = u128_to_unit_f64(w.min(w.wrapping_neg()));
            worst = worst.min((n as f64).powf(1.01) * d);
        }
        assert!(worst > 0.4, "min n^nu ||n alpha|| = {worst}");
    }

    #[test]
    fn small_denominator_trivial_thresholds() {
        let alpha = AlphaFixedPoint::named(NamedIrrational::GoldenMinusOne);
        let mut rng = SplitMix64::new(5);
        let (emp, _) =
            small_denominator_prob(0.25, 10_000, 0.5, 1.1, &alpha, 2_000, &mut rng).unwrap();
        assert_eq!(emp, 1.0);
        let (emp, bound) =
            small_denominator_prob(0.25, 10_000, 0.0, 1.1, &alpha, 2_000, &mut rng).unwrap();
        assert_eq!(emp, 0.0);
        assert_eq!(bound, 0.0);
    }

    #[test]
    fn small_denominator_preconditions() {
        let alpha = AlphaFixedPoint::named(NamedIrrational::GoldenMinusOne);
        let mut rng = SplitMix64::new(5);
        assert!(
            small_denominator_prob(0.75, 100, 0.1, 1.1, &alpha, 10, &mut rng).is_err()
        );
        assert!(
            small_denominator_prob(0.25, 100, 0.1, 1.0, &alpha, 10, &mut rng).is_err()
        );
    }

    #[test]
    fn small_denominator_ratio_bounded_across_grid() {
        let alpha = AlphaFixedPoint::named(NamedIrrational::GoldenMinusOne);
        let mut rng = SplitMix64::new(1234);
        let mut max_ratio = 0.0f64;
        for a in [1e-1, 1e-2, 1e-3, 1e-4] {
            let (emp, bound) =
                small_denominator_prob(0.25, 10_000, a, 1.1, &alpha, 100_000, &mut rng)
                    .unwrap();
            max_ratio = max_ratio.max(emp / bound);
        }
        assert!(max_ratio <= 1.0, "max empirical/bound ratio {max_ratio}");
    }
}
