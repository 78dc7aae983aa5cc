//! Dense reference computations for small matrices.
//!
//! Everything here goes through generic dense linear algebra (LU
//! determinants, SVD, eigensolvers) and never through the sparse
//! cycle-product formulas it is used to check. Intended for tests and
//! calibration at sizes up to a few dozen; dense storage is the point, not a
//! limitation.

use nalgebra::DMatrix;
use num_complex::Complex64;
use permchar_core::permutations::Permutation;
use permchar_core::rng::SplitMix64;
use permchar_core::wreath::ModifiedPermMatrix;

/// Cap below which the dense path is intended to run; tests stay under it to
/// keep suites fast.
pub const DENSE_CAP: usize = 64;

/// Expands the sparse representation into a dense matrix.
pub fn to_dense(m: &ModifiedPermMatrix) -> DMatrix<Complex64> {
    let n = m.len();
    let mut out = DMatrix::zeros(n, n);
    for col in 1..=n as u32 {
        let row = m.image_of(col);
        out[((row - 1) as usize, (col - 1) as usize)] = m.entry_of(col);
    }
    out
}

/// Determinant by dense LU with partial pivoting.
pub fn det(m: &DMatrix<Complex64>) -> Complex64 {
    m.clone().lu().determinant()
}

/// `det(x I - M)` through the dense path.
pub fn char_poly_det(m: &ModifiedPermMatrix, x: Complex64) -> Complex64 {
    let n = m.len();
    let dense = to_dense(m);
    let shifted = DMatrix::from_diagonal_element(n, n, x) - dense;
    det(&shifted)
}

/// Eigenvalues via the dense solver.
pub fn eigenvalues(m: &ModifiedPermMatrix) -> Vec<Complex64> {
    to_dense(m)
        .eigenvalues()
        .map(|v| v.iter().copied().collect())
        .unwrap_or_default()
}

/// Singular values of an arbitrary dense complex matrix, descending.
pub fn singular_values(m: &DMatrix<Complex64>) -> Vec<f64> {
    let mut sv: Vec<f64> = m.clone().svd(false, false).singular_values.iter().copied().collect();
    sv.sort_unstable_by(|a, b| b.partial_cmp(a).unwrap());
    sv
}

/// `M - diag(N, 1)`: the matrix whose rank certifies the projection.
pub fn projection_residual(
    m: &ModifiedPermMatrix,
    n: &ModifiedPermMatrix,
) -> DMatrix<Complex64> {
    let big = to_dense(m);
    let small = to_dense(n);
    let dim = m.len();
    let mut block = DMatrix::zeros(dim, dim);
    block
        .view_mut((0, 0), (dim - 1, dim - 1))
        .copy_from(&small);
    block[(dim - 1, dim - 1)] = Complex64::ONE;
    big - block
}

/// Uniform random permutation by Fisher-Yates.
pub fn random_permutation(n: usize, rng: &mut SplitMix64) -> Permutation {
    let mut image: Vec<u32> = (1..=n as u32).collect();
    for i in (1..n).rev() {
        let j = (rng.next_u64() % (i as u64 + 1)) as usize;
        image.swap(i, j);
    }
    Permutation::from_image(&image).expect("shuffle of identity is a bijection")
}

/// I.i.d. uniform unit-modulus entries.
pub fn random_unit_entries(n: usize, rng: &mut SplitMix64) -> Vec<Complex64> {
    (0..n)
        .map(|_| Complex64::cis(std::f64::consts::TAU * rng.next_f64()))
        .collect()
}

/// Random modified permutation matrix of size `n` without eigenvalue one
/// (resampled on the measure-zero complement).
pub fn random_matrix_in_t(n: usize, rng: &mut SplitMix64) -> ModifiedPermMatrix {
    loop {
        let p = random_permutation(n, rng);
        let entries = random_unit_entries(n, rng);
        let m = ModifiedPermMatrix::build(&p, entries).expect("entries are unit modulus");
        if m.in_t() {
            return m;
        }
    }
}
