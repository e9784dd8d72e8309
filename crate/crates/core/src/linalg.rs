//! Dense complex linear algebra shared by the geometric modules.

use nalgebra::{Complex, ComplexField, DMatrix, DVector, Dyn, SymmetricEigen, SVD};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::tolerance::RANK_RELATIVE;

pub type C64 = Complex<f64>;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

pub(crate) const I: C64 = C64 { re: 0.0, im: 1.0 };

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn commutator(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a * b - b * a
}

/// Real part of `Tr(a b)` computed without forming the product.
pub fn trace_product(a: &CMatrix, b: &CMatrix) -> C64 {
    let n = a.nrows();
    let mut acc = C64::new(0.0, 0.0);
    for i in 0..n {
        for k in 0..n {
            acc += a[(i, k)] * b[(k, i)];
        }
    }
    acc
}

pub fn identity(n: usize) -> CMatrix {
    CMatrix::identity(n, n)
}

pub fn hermitian_part(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()) * c(0.5, 0.0)
}

/// Eigen-decomposition of a Hermitian matrix with eigenvalues in ascending order.
pub fn hermitian_eigen(h: &CMatrix) -> (Vec<f64>, CMatrix) {
    let n = h.nrows();
    if n == 0 {
        return (Vec::new(), CMatrix::zeros(0, 0));
    }
    let eig = SymmetricEigen::new(hermitian_part(h));
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let mut vectors = CMatrix::zeros(n, n);
    for (j, &k) in order.iter().enumerate() {
        vectors.set_column(j, &eig.eigenvectors.column(k));
    }
    (values, vectors)
}

pub fn hermitian_eigenvalues(h: &CMatrix) -> Vec<f64> {
    hermitian_eigen(h).0
}

/// `exp(i θ H)` for Hermitian `H`, via the spectral decomposition (unitary to rounding).
pub fn exp_i_hermitian(h: &CMatrix, theta: f64) -> CMatrix {
    let (values, v) = hermitian_eigen(h);
    let phases = DVector::from_iterator(
        values.len(),
        values.iter().map(|&l| C64::from_polar(1.0, theta * l)),
    );
    let mut scaled = v.clone();
    for (j, mut col) in scaled.column_iter_mut().enumerate() {
        col *= phases[j];
    }
    scaled * v.adjoint()
}

/// Applies `f` to the eigenvalues of a Hermitian matrix.
pub fn hermitian_function(h: &CMatrix, f: impl Fn(f64) -> f64) -> CMatrix {
    let (values, v) = hermitian_eigen(h);
    let mut scaled = v.clone();
    for (j, mut col) in scaled.column_iter_mut().enumerate() {
        col *= c(f(values[j]), 0.0);
    }
    scaled * v.adjoint()
}

/// Stacks the real and imaginary parts of a matrix into one real vector.
pub(crate) fn realify(m: &CMatrix, out: &mut Vec<f64>) {
    for z in m.iter() {
        out.push(z.re);
        out.push(z.im);
    }
}

pub(crate) fn complexify(v: &[f64], rows: usize, cols: usize) -> CMatrix {
    CMatrix::from_iterator(rows, cols, v.chunks(2).map(|p| c(p[0], p[1])))
}

/// Real matrix whose columns are the realified input matrices.
pub(crate) fn real_column_matrix(columns: &[Vec<f64>]) -> DMatrix<f64> {
    let rows = columns.first().map_or(0, Vec::len);
    DMatrix::from_fn(rows, columns.len(), |i, j| columns[j][i])
}

/// Singular values of a real matrix, descending.
pub(crate) fn singular_values(m: &DMatrix<f64>) -> Vec<f64> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return Vec::new();
    }
    let mut s: Vec<f64> = m.singular_values().iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

/// Numeric rank with the relative threshold used throughout the crate.
pub fn numeric_rank(singular: &[f64]) -> usize {
    numeric_rank_scaled(singular, 0.0)
}

/// Like [`numeric_rank`], but the cut is never below `RANK_RELATIVE * scale`.
///
/// Pass the natural size of the operator (e.g. `‖x‖` for `ad_x`) so that an
/// operator that is zero up to rounding has rank 0.
pub fn numeric_rank_scaled(singular: &[f64], scale: f64) -> usize {
    let max = singular.iter().copied().fold(0.0, f64::max).max(scale);
    if max == 0.0 {
        return 0;
    }
    singular.iter().filter(|&&s| s > RANK_RELATIVE * max).count()
}

/// Thin SVD with both factors, checked by reconstruction.
///
/// nalgebra's bidiagonal SVD occasionally returns singular vectors (and even
/// singular values) that do not reproduce a rank-deficient input. Whether it
/// happens depends on the last bits of the input and on the convergence
/// threshold, so when `‖A − UΣVᴴ‖` is not at rounding level the decomposition
/// is redone with other thresholds and on `A·Q` for seeded random rotations
/// `Q`, mapping back through `Vᴴ = Wᴴ Qᵀ`. The first attempt that reconstructs
/// is returned, otherwise the best one.
pub(crate) fn checked_svd<T: ComplexField<RealField = f64>>(m: &DMatrix<T>) -> SVD<T, Dyn, Dyn> {
    const EPS: [f64; 3] = [f64::EPSILON, 1e-16, 1e-13];
    const ROTATIONS: u64 = 8;
    let tol = 1e-11 * m.norm().max(1.0);
    let svd = m.clone().svd(true, true);
    if m.ncols() == 0 || m.nrows() == 0 || reconstruction_error(m, &svd) <= tol {
        return svd;
    }
    let mut best_err = reconstruction_error(m, &svd);
    let mut best = svd;
    for seed in 0..=ROTATIONS {
        let q = (seed > 0).then(|| random_orthogonal(m.ncols(), seed - 1).map(T::from_real));
        let input = q.as_ref().map_or_else(|| m.clone(), |q| m * q);
        for eps in EPS {
            let Some(attempt) = SVD::try_new(input.clone(), true, true, eps, 0) else {
                continue;
            };
            let candidate = match &q {
                None => attempt,
                Some(q) => SVD {
                    v_t: Some(attempt.v_t.as_ref().expect("requested V^T") * q.transpose()),
                    u: attempt.u,
                    singular_values: attempt.singular_values,
                },
            };
            let err = reconstruction_error(m, &candidate);
            if err < best_err {
                best = candidate;
                best_err = err;
            }
            if best_err <= tol {
                return best;
            }
        }
    }
    best
}

fn reconstruction_error<T: ComplexField<RealField = f64>>(m: &DMatrix<T>, svd: &SVD<T, Dyn, Dyn>) -> f64 {
    let u = svd.u.as_ref().expect("requested U");
    let v_t = svd.v_t.as_ref().expect("requested V^T");
    let mut us = u.clone();
    for (k, mut col) in us.column_iter_mut().enumerate() {
        col *= T::from_real(svd.singular_values[k]);
    }
    (us * v_t - m).norm()
}

fn random_orthogonal(n: usize, seed: u64) -> DMatrix<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed ^ seed);
    let z = DMatrix::from_fn(n, n, |_, _| StandardNormal.sample(&mut rng));
    z.qr().q()
}

/// Orthonormal basis (as columns) of the column span of `m`, by SVD with rank truncation.
pub fn orthonormal_span(m: &CMatrix, rel_tol: f64) -> CMatrix {
    if m.ncols() == 0 || m.nrows() == 0 {
        return CMatrix::zeros(m.nrows(), 0);
    }
    let svd = checked_svd(m);
    let u = svd.u.expect("requested U");
    let max = svd.singular_values.iter().copied().fold(0.0, f64::max);
    let keep: Vec<usize> = (0..svd.singular_values.len())
        .filter(|&k| max > 0.0 && svd.singular_values[k] > rel_tol * max)
        .collect();
    let mut out = CMatrix::zeros(m.nrows(), keep.len());
    for (j, &k) in keep.iter().enumerate() {
        out.set_column(j, &u.column(k));
    }
    out
}

/// Orthonormal basis of the orthogonal complement of the span of the (orthonormal) columns of `q`.
pub fn orthogonal_complement(q: &CMatrix) -> CMatrix {
    let n = q.nrows();
    let projector = identity(n) - q * q.adjoint();
    orthonormal_span(&projector, 1e-8)
}

/// Sine of the largest principal angle between the spans of two orthonormal bases.
///
/// Computed from `‖(1 − A A†) B‖₂`, which stays accurate for tiny angles where
/// `acos` of the cosines would lose half the digits.
pub fn max_principal_sine(a: &CMatrix, b: &CMatrix) -> f64 {
    if a.ncols() != b.ncols() {
        return 1.0;
    }
    if b.ncols() == 0 {
        return 0.0;
    }
    let residual = b - a * (a.adjoint() * b);
    residual
        .singular_values()
        .iter()
        .copied()
        .fold(0.0, f64::max)
        .min(1.0)
}

pub fn max_principal_angle(a: &CMatrix, b: &CMatrix) -> f64 {
    max_principal_sine(a, b).asin()
}

pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn to_complex(m: &DMatrix<f64>) -> CMatrix {
    m.map(|x| c(x, 0.0))
}
