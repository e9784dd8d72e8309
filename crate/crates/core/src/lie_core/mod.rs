//! Matrix Lie group and Lie algebra primitives for SU(n), SO(2n), SO(2n+1) and Sp(n).
//!
//! Every algebra element is stored as an anti-Hermitian matrix:
//!
//! * `su(n)`: `iΛ` for a real traceless diagonal `Λ`;
//! * `so(m)`: real antisymmetric, Cartan elements `Λ ⊗ J₂` (padded with a zero
//!   row and column for odd `m`);
//! * `sp(n)`: anti-Hermitian `X` with `Xᵗω + ωX = 0`, `ω = 1ₙ ⊗ J₂`; Cartan
//!   elements `i Λ ⊗ σ₃` in the interleaved basis.
//!
//! The Hermitian matrix `-iX` is the "spectral part"; its eigenvalues are the
//! real numbers that label orbits.

mod basis;
mod sampling;

pub use basis::{algebra_basis, project_to_algebra};
pub use sampling::{random_algebra_element, sample_group_element, sample_group_element_with};

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{c, hermitian_eigenvalues, identity, trace_product, CMatrix, I};
use crate::tolerance;

/// Classical compact group family.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Family {
    #[serde(rename = "SU")]
    SU,
    #[serde(rename = "SO_even")]
    SoEven,
    #[serde(rename = "SO_odd")]
    SoOdd,
    #[serde(rename = "Sp")]
    Sp,
}

impl Family {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "SU" | "su" => Ok(Family::SU),
            "SO_even" | "so_even" | "SO-even" => Ok(Family::SoEven),
            "SO_odd" | "so_odd" | "SO-odd" => Ok(Family::SoOdd),
            "Sp" | "sp" => Ok(Family::Sp),
            other => Err(Error::InvalidSpec(format!("unknown group family {other:?}"))),
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Family::SU => "SU",
            Family::SoEven => "SO_even",
            Family::SoOdd => "SO_odd",
            Family::Sp => "Sp",
        }
    }
}

/// A group family together with its rank parameter `n`.
///
/// Matrix sizes are `n`, `2n`, `2n+1`, `2n` for SU, SO_even, SO_odd, Sp.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GroupFamily {
    pub family: Family,
    pub n: usize,
}

impl GroupFamily {
    pub fn new(family: Family, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidSpec("rank parameter n must be positive".into()));
        }
        Ok(Self { family, n })
    }

    pub fn su(n: usize) -> Self {
        Self {
            family: Family::SU,
            n,
        }
    }

    pub fn so_even(n: usize) -> Self {
        Self {
            family: Family::SoEven,
            n,
        }
    }

    pub fn so_odd(n: usize) -> Self {
        Self {
            family: Family::SoOdd,
            n,
        }
    }

    pub fn sp(n: usize) -> Self {
        Self {
            family: Family::Sp,
            n,
        }
    }

    pub fn matrix_size(&self) -> usize {
        match self.family {
            Family::SU => self.n,
            Family::SoEven | Family::Sp => 2 * self.n,
            Family::SoOdd => 2 * self.n + 1,
        }
    }

    /// Real dimension of the Lie algebra.
    pub fn algebra_dim(&self) -> usize {
        let n = self.n;
        match self.family {
            Family::SU => n * n - 1,
            Family::SoEven | Family::SoOdd => {
                let m = self.matrix_size();
                m * (m - 1) / 2
            }
            Family::Sp => n * (2 * n + 1),
        }
    }

    /// Residual of the defining relations of the group; zero for members.
    pub fn group_residual(&self, g: &CMatrix) -> f64 {
        let m = self.matrix_size();
        if g.nrows() != m || g.ncols() != m {
            return f64::INFINITY;
        }
        let unitarity = (g.adjoint() * g - identity(m)).norm();
        match self.family {
            Family::SU => unitarity + (g.determinant() - c(1.0, 0.0)).norm(),
            Family::SoEven | Family::SoOdd => {
                let imag: f64 = g.iter().map(|z| z.im * z.im).sum::<f64>().sqrt();
                unitarity + imag + (g.determinant() - c(1.0, 0.0)).norm()
            }
            Family::Sp => {
                let w = omega(self.n);
                unitarity + (g.transpose() * &w * g - &w).norm()
            }
        }
    }
}

impl fmt::Display for GroupFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.family {
            Family::SU => write!(f, "SU({})", self.n),
            Family::SoEven => write!(f, "SO({})", 2 * self.n),
            Family::SoOdd => write!(f, "SO({})", 2 * self.n + 1),
            Family::Sp => write!(f, "Sp({})", self.n),
        }
    }
}

/// `J₂ = [[0, 1], [-1, 0]]`.
pub fn j2() -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(1.0, 0.0), c(-1.0, 0.0), c(0.0, 0.0)])
}

/// `σ₃ = diag(1, -1)`.
pub fn sigma3() -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(-1.0, 0.0)])
}

/// The constant symplectic form `ω = 1ₙ ⊗ J₂` on `C²ⁿ`.
pub fn omega(n: usize) -> CMatrix {
    let mut w = CMatrix::zeros(2 * n, 2 * n);
    for k in 0..n {
        w[(2 * k, 2 * k + 1)] = c(1.0, 0.0);
        w[(2 * k + 1, 2 * k)] = c(-1.0, 0.0);
    }
    w
}

/// Permutation `Q` taking the block basis `(e₁…eₙ, f₁…fₙ)` to the interleaved
/// basis `(e₁, f₁, e₂, f₂, …)`: `X_interleaved = Q X_block Qᵗ`.
///
/// Under `Q`, `diag(iΛ, -iΛ)` becomes `iΛ ⊗ σ₃` and `J₂ ⊗ 1ₙ` becomes `ω`.
pub fn sp_interleave_permutation(n: usize) -> CMatrix {
    let mut q = CMatrix::zeros(2 * n, 2 * n);
    for k in 0..n {
        q[(2 * k, k)] = c(1.0, 0.0);
        q[(2 * k + 1, n + k)] = c(1.0, 0.0);
    }
    q
}

/// Block structure of a Cartan element: multiplicities `nᵢ` and eigenvalues `λᵢ`.
///
/// `degenerate` allows repeated eigenvalues (or repeated `|λᵢ|` for SO/Sp),
/// which the factor matrices of embeddings routinely need.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CartanSpec {
    pub group: GroupFamily,
    pub multiplicities: Vec<usize>,
    pub eigenvalues: Vec<f64>,
    #[serde(default)]
    pub degenerate: bool,
}

impl CartanSpec {
    pub fn new(group: GroupFamily, multiplicities: Vec<usize>, eigenvalues: Vec<f64>) -> Result<Self> {
        let spec = Self {
            group,
            multiplicities,
            eigenvalues,
            degenerate: false,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Same as [`CartanSpec::new`] but accepting repeated eigenvalues.
    pub fn degenerate(group: GroupFamily, multiplicities: Vec<usize>, eigenvalues: Vec<f64>) -> Result<Self> {
        let spec = Self {
            group,
            multiplicities,
            eigenvalues,
            degenerate: true,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.multiplicities.is_empty() {
            return Err(Error::InvalidSpec("at least one block is required".into()));
        }
        if self.multiplicities.len() != self.eigenvalues.len() {
            return Err(Error::InvalidSpec(format!(
                "{} multiplicities but {} eigenvalues",
                self.multiplicities.len(),
                self.eigenvalues.len()
            )));
        }
        if self.multiplicities.contains(&0) {
            return Err(Error::InvalidSpec("multiplicities must be positive".into()));
        }
        if self.eigenvalues.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidSpec("eigenvalues must be finite".into()));
        }
        let total: usize = self.multiplicities.iter().sum();
        if total != self.group.n {
            return Err(Error::InvalidSpec(format!(
                "multiplicities sum to {total}, expected n = {}",
                self.group.n
            )));
        }
        match self.group.family {
            Family::SU => {
                let trace: f64 = self.blocks().map(|(m, l)| m as f64 * l).sum();
                let scale: f64 = self.blocks().map(|(m, l)| m as f64 * l.abs()).sum();
                if trace.abs() > 1e-10 * scale.max(1.0) {
                    return Err(Error::InvalidSpec(format!(
                        "SU Cartan element must be traceless (trace {trace})"
                    )));
                }
                if !self.degenerate && has_duplicates(&self.eigenvalues) {
                    return Err(Error::InvalidSpec("eigenvalues must be distinct".into()));
                }
            }
            _ => {
                if !self.degenerate {
                    let zeros = self.eigenvalues.iter().filter(|&&l| l == 0.0).count();
                    if zeros > 1 {
                        return Err(Error::InvalidSpec("at most one zero block is allowed".into()));
                    }
                    let abs: Vec<f64> = self
                        .eigenvalues
                        .iter()
                        .filter(|&&l| l != 0.0)
                        .map(|l| l.abs())
                        .collect();
                    if has_duplicates(&abs) {
                        return Err(Error::InvalidSpec(
                            "nonzero eigenvalues must have distinct absolute values".into(),
                        ));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn blocks(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.multiplicities
            .iter()
            .copied()
            .zip(self.eigenvalues.iter().copied())
    }

    /// The diagonal `(λ₀·1_{n₀}, …, λ_r·1_{n_r})` of length `n`.
    pub fn diagonal(&self) -> Vec<f64> {
        self.blocks()
            .flat_map(|(m, l)| std::iter::repeat_n(l, m))
            .collect()
    }

    /// Spec with all eigenvalues multiplied by `s`.
    pub fn scaled(&self, s: f64) -> Self {
        Self {
            eigenvalues: self.eigenvalues.iter().map(|l| l * s).collect(),
            ..self.clone()
        }
    }
}

fn has_duplicates(values: &[f64]) -> bool {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    sorted
        .windows(2)
        .any(|w| (w[1] - w[0]).abs() <= 1e-12 * w[1].abs().max(1.0))
}

/// An element of the Lie algebra of `group`, stored anti-Hermitian.
#[derive(Clone, Debug, PartialEq)]
pub struct AlgebraElement {
    matrix: CMatrix,
    group: GroupFamily,
}

impl AlgebraElement {
    /// Wraps `matrix`, checking membership at the global tolerance.
    pub fn new(group: GroupFamily, matrix: CMatrix) -> Result<Self> {
        let m = group.matrix_size();
        if matrix.nrows() != m || matrix.ncols() != m {
            return Err(Error::DimensionMismatch {
                expected: m,
                got: matrix.nrows(),
            });
        }
        let residual = membership_residual(group, &matrix);
        if residual > tolerance::scaled(matrix.norm()) {
            return Err(Error::NotInAlgebra {
                group: group.to_string(),
                residual,
            });
        }
        Ok(Self { matrix, group })
    }

    pub(crate) fn new_unchecked(group: GroupFamily, matrix: CMatrix) -> Self {
        Self { matrix, group }
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    pub fn group(&self) -> GroupFamily {
        self.group
    }

    /// The Hermitian matrix `-iX`.
    pub fn spectral_part(&self) -> CMatrix {
        &self.matrix * (-I)
    }

    /// Ascending eigenvalues of the spectral part.
    pub fn eigenvalues(&self) -> Vec<f64> {
        hermitian_eigenvalues(&self.spectral_part())
    }

    pub fn membership_residual(&self) -> f64 {
        membership_residual(self.group, &self.matrix)
    }

    pub fn bracket(&self, other: &AlgebraElement) -> Result<AlgebraElement> {
        same_size(&self.matrix, &other.matrix)?;
        Ok(Self::new_unchecked(
            self.group,
            crate::linalg::commutator(&self.matrix, &other.matrix),
        ))
    }

    pub fn linear_combination(terms: &[(f64, &AlgebraElement)]) -> Result<AlgebraElement> {
        let first = terms
            .first()
            .ok_or_else(|| Error::InvalidSpec("empty linear combination".into()))?;
        let mut acc = CMatrix::zeros(first.1.matrix.nrows(), first.1.matrix.ncols());
        for (coef, x) in terms {
            same_size(&acc, &x.matrix)?;
            acc += &x.matrix * c(*coef, 0.0);
        }
        Ok(Self::new_unchecked(first.1.group, acc))
    }
}

/// Combined residual of all algebra conditions for `group`.
pub fn membership_residual(group: GroupFamily, x: &CMatrix) -> f64 {
    let anti = (x + x.adjoint()).norm();
    match group.family {
        Family::SU => anti + x.trace().norm(),
        Family::SoEven | Family::SoOdd => anti + x.iter().map(|z| z.im * z.im).sum::<f64>().sqrt(),
        Family::Sp => {
            let w = omega(group.n);
            anti + (x.transpose() * &w + &w * x).norm()
        }
    }
}

fn same_size(a: &CMatrix, b: &CMatrix) -> Result<()> {
    if a.shape() != b.shape() {
        return Err(Error::DimensionMismatch {
            expected: a.nrows(),
            got: b.nrows(),
        });
    }
    Ok(())
}

/// Builds the block Cartan element for `spec` in the family's convention.
pub fn build_cartan(spec: &CartanSpec) -> Result<AlgebraElement> {
    spec.validate()?;
    Ok(cartan_from_diagonal(spec.group, &spec.diagonal()))
}

/// Cartan element with the given `n` diagonal entries, no validation.
pub(crate) fn cartan_from_diagonal(group: GroupFamily, diag: &[f64]) -> AlgebraElement {
    let m = group.matrix_size();
    let mut x = CMatrix::zeros(m, m);
    match group.family {
        Family::SU => {
            for (k, &l) in diag.iter().enumerate() {
                x[(k, k)] = c(0.0, l);
            }
        }
        Family::SoEven | Family::SoOdd => {
            for (k, &l) in diag.iter().enumerate() {
                x[(2 * k, 2 * k + 1)] = c(l, 0.0);
                x[(2 * k + 1, 2 * k)] = c(-l, 0.0);
            }
        }
        Family::Sp => {
            for (k, &l) in diag.iter().enumerate() {
                x[(2 * k, 2 * k)] = c(0.0, l);
                x[(2 * k + 1, 2 * k + 1)] = c(0.0, -l);
            }
        }
    }
    AlgebraElement::new_unchecked(group, x)
}

/// The Killing pairing `⟨X, Y⟩ = Tr(XY)` (real part).
pub fn killing_pairing(x: &AlgebraElement, y: &AlgebraElement) -> Result<f64> {
    same_size(&x.matrix, &y.matrix)?;
    Ok(trace_product(&x.matrix, &y.matrix).re)
}

/// `Ad_g X = g X g⁻¹`, with `g⁻¹ = g†` for the compact groups handled here.
pub fn adjoint_action(g: &CMatrix, x: &AlgebraElement) -> Result<AlgebraElement> {
    let group = x.group;
    let residual = group.group_residual(g);
    if !(residual <= tolerance::scaled(1.0) * (group.matrix_size() as f64).max(1.0)) {
        return Err(Error::NotInGroup {
            group: group.to_string(),
            residual,
        });
    }
    Ok(AlgebraElement::new_unchecked(group, g * &x.matrix * g.adjoint()))
}
