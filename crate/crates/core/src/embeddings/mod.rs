//! Product-of-orbits embeddings `O_Λ → Π O_{Λᵢ}` with `Λ = Σ Cᵢ Λᵢ`, `Σ Λᵢ = 0`.
//!
//! The builders produce the Grassmannian decompositions for SU(n), the
//! power-of-two isotropic Grassmannian decompositions for SO/Sp, the SO(6)
//! Lagrangian example and the two-step SO(2n) embedding. [`certify`] checks
//! isotropy, dimensions and the moment map numerically.

mod recover;
mod triangle;
mod two_step;

pub use recover::{flag_recover, generating_planes, FlagLayout, RecoveredFlag};
pub use triangle::{triangle_locus, LocusKind, TriangleLocus};
pub use two_step::{random_two_step_flag, two_step_so_embed, TwoStepImage};

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lie_core::{
    build_cartan, random_algebra_element, sample_group_element_with, AlgebraElement, CartanSpec, Family,
    GroupFamily,
};
use crate::linalg::{commutator, trace_product, CMatrix};
use crate::orbits::{joint_stabilizer_dim, orbit_dim, stabilizer_dim, TangentSolver};

/// Isotropy residual below which a certificate reports `isotropic = true`.
pub const ISOTROPY_TOLERANCE: f64 = 1e-9;

/// Random tangent pairs evaluated per sampled point.
const PAIRS_PER_SAMPLE: usize = 2;

/// A target Cartan element together with a decomposition into factors.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SpecFile", into = "SpecFile")]
pub struct EmbeddingSpec {
    pub group: GroupFamily,
    pub target: CartanSpec,
    pub factors: Vec<CartanSpec>,
    pub coefficients: Vec<f64>,
}

impl EmbeddingSpec {
    /// Solves `Λ = Σ Cᵢ Λᵢ` by least squares and validates the result.
    pub fn from_decomposition(target: CartanSpec, factors: Vec<CartanSpec>) -> Result<Self> {
        let coefficients = solve_coefficients(&target, &factors)?;
        let spec = Self {
            group: target.group,
            target,
            factors,
            coefficients,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Same factors, new target; coefficients are re-solved.
    pub fn with_target(&self, target: CartanSpec) -> Result<Self> {
        Self::from_decomposition(target, self.factors.clone())
    }

    pub fn validate(&self) -> Result<()> {
        self.target.validate()?;
        if self.target.group != self.group {
            return Err(Error::InvalidSpec("target group differs from spec group".into()));
        }
        if self.factors.is_empty() {
            return Err(Error::InvalidSpec("at least one factor is required".into()));
        }
        if self.factors.len() != self.coefficients.len() {
            return Err(Error::InvalidSpec(format!(
                "{} factors but {} coefficients",
                self.factors.len(),
                self.coefficients.len()
            )));
        }
        for f in &self.factors {
            if f.group != self.group {
                return Err(Error::InvalidSpec("factor group differs from spec group".into()));
            }
            f.validate()?;
        }
        let decomposition = self.decomposition_residual()?;
        let scale = build_cartan(&self.target)?.matrix().norm().max(1.0);
        if decomposition > 1e-10 * scale {
            return Err(Error::InvalidSpec(format!(
                "target is not the weighted sum of the factors (residual {decomposition:.3e})"
            )));
        }
        let sum = self.factor_sum_residual()?;
        if sum > 1e-12 * scale {
            return Err(Error::InvalidSpec(format!(
                "factors do not sum to zero (residual {sum:.3e})"
            )));
        }
        let joint = self.joint_stabilizer_dim()?;
        let target = stabilizer_dim(&self.target)?;
        if joint != target {
            return Err(Error::InvalidSpec(format!(
                "joint stabilizer of the factors has dimension {joint}, target stabilizer {target}"
            )));
        }
        Ok(())
    }

    pub fn factor_elements(&self) -> Result<Vec<AlgebraElement>> {
        self.factors.iter().map(build_cartan).collect()
    }

    /// `‖Λ − Σ Cᵢ Λᵢ‖`.
    pub fn decomposition_residual(&self) -> Result<f64> {
        let mut acc = build_cartan(&self.target)?.into_matrix();
        for (f, &coef) in self.factor_elements()?.iter().zip(&self.coefficients) {
            acc -= f.matrix() * crate::linalg::c(coef, 0.0);
        }
        Ok(acc.norm())
    }

    /// `‖Σ Λᵢ‖`.
    pub fn factor_sum_residual(&self) -> Result<f64> {
        let elements = self.factor_elements()?;
        let refs: Vec<&AlgebraElement> = elements.iter().collect();
        Ok(crate::orbits::moment_sum_elements(&refs)?.matrix().norm())
    }

    /// Dimension of `⋂ Stab(Λᵢ)`.
    pub fn joint_stabilizer_dim(&self) -> Result<usize> {
        let elements = self.factor_elements()?;
        let refs: Vec<&CMatrix> = elements.iter().map(|e| e.matrix()).collect();
        Ok(joint_stabilizer_dim(self.group, &refs))
    }

    /// Orbit dimension, factor orbit dimensions and their sum.
    pub fn dims(&self) -> Result<Dims> {
        let factors = self.factors.iter().map(orbit_dim).collect::<Result<Vec<_>>>()?;
        Ok(Dims {
            orbit: orbit_dim(&self.target)?,
            sum: factors.iter().sum(),
            factors,
        })
    }

    /// Points `Ad_g Λᵢ` of the image of `Ad_g Λ`.
    pub fn image(&self, g: &CMatrix) -> Result<Vec<AlgebraElement>> {
        self.factor_elements()?
            .iter()
            .map(|f| crate::lie_core::adjoint_action(g, f))
            .collect()
    }
}

fn solve_coefficients(target: &CartanSpec, factors: &[CartanSpec]) -> Result<Vec<f64>> {
    if factors.is_empty() {
        return Err(Error::InvalidSpec("at least one factor is required".into()));
    }
    for f in factors {
        if f.group != target.group {
            return Err(Error::InvalidSpec(
                "factor group differs from target group".into(),
            ));
        }
        f.validate()?;
    }
    target.validate()?;
    let n = target.group.n;
    let columns: Vec<Vec<f64>> = factors.iter().map(CartanSpec::diagonal).collect();
    let a = DMatrix::from_fn(n, factors.len(), |i, j| columns[j][i]);
    let b = DVector::from_vec(target.diagonal());
    let svd = crate::linalg::checked_svd(&a);
    let max = svd.singular_values.iter().copied().fold(0.0, f64::max);
    let x = svd
        .solve(&b, 1e-12 * max.max(f64::MIN_POSITIVE))
        .map_err(|e| Error::InvalidSpec(e.to_string()))?;
    Ok(x.iter().map(|v| clean(*v)).collect())
}

/// Rounds values within 1e-13 of a multiple of 1/64 so builtin coefficients serialize exactly.
fn clean(v: f64) -> f64 {
    let r = (v * 64.0).round() / 64.0;
    if (v - r).abs() < 1e-13 {
        r
    } else {
        v
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Dims {
    pub orbit: usize,
    pub factors: Vec<usize>,
    pub sum: usize,
}

/// Outcome of [`certify`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingCertificate {
    pub isotropy_residual: f64,
    pub dims: Dims,
    pub lagrangian: bool,
    pub isotropic: bool,
    pub moment_residual: f64,
    pub samples: usize,
    pub degenerate: bool,
}

/// `Σᵢ ⟨xᵢ, [a, b]⟩`: the product KKS form on the diagonal tangent vectors `([a, xᵢ])ᵢ`.
pub fn product_form(points: &[CMatrix], a: &CMatrix, b: &CMatrix) -> f64 {
    let ab = commutator(a, b);
    points.iter().map(|x| trace_product(x, &ab).re).sum()
}

#[derive(Default)]
struct SampleResult {
    isotropy: f64,
    moment: f64,
}

/// Samples `samples` points of the embedded orbit and evaluates the pulled-back
/// product form on random tangent pairs, factor by factor.
///
/// Sample `k` draws from a ChaCha8 stream `k` seeded with `seed`, so results do
/// not depend on thread scheduling.
pub fn certify(spec: &EmbeddingSpec, samples: usize, seed: u64) -> Result<EmbeddingCertificate> {
    spec.validate()?;
    let dims = spec.dims()?;
    let factors = spec.factor_elements()?;
    let group = spec.group;

    let results = (0..samples)
        .into_par_iter()
        .map(|k| -> Result<SampleResult> {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(k as u64);
            let g = sample_group_element_with(group, &mut rng);
            let points: Vec<CMatrix> = factors.iter().map(|f| &g * f.matrix() * g.adjoint()).collect();
            let solvers: Vec<TangentSolver> = points.iter().map(|x| TangentSolver::new(group, x)).collect();
            let moment = points
                .iter()
                .fold(CMatrix::zeros(g.nrows(), g.ncols()), |acc, x| acc + x);
            let mut isotropy: f64 = 0.0;
            for _ in 0..PAIRS_PER_SAMPLE {
                let a = random_algebra_element(group, &mut rng, 1.0).into_matrix();
                let b = random_algebra_element(group, &mut rng, 1.0).into_matrix();
                let mut total = 0.0;
                for (x, solver) in points.iter().zip(&solvers) {
                    total += solver.kks(x, &commutator(&a, x), &commutator(&b, x))?;
                }
                isotropy = isotropy.max(total.abs());
            }
            Ok(SampleResult {
                isotropy,
                moment: moment.norm(),
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let isotropy_residual = results.iter().map(|r| r.isotropy).fold(0.0, f64::max);
    let moment_residual = results.iter().map(|r| r.moment).fold(0.0, f64::max);
    Ok(EmbeddingCertificate {
        isotropy_residual,
        lagrangian: 2 * dims.orbit == dims.sum,
        isotropic: isotropy_residual < ISOTROPY_TOLERANCE,
        dims,
        moment_residual,
        samples,
        degenerate: spec.target.degenerate,
    })
}

fn push_block(mults: &mut Vec<usize>, eig: &mut Vec<f64>, m: usize, l: f64) {
    if m > 0 {
        mults.push(m);
        eig.push(l);
    }
}

/// Grassmannian factors for the SU(n) flag manifold `F_{n₀,…,n_r}`.
///
/// Factor `i` has eigenvalue `n − nᵢ` on the `i`-th block and `−nᵢ` elsewhere. The
/// target has eigenvalue `i − Σ nⱼ j / n` on block `i`.
pub fn su_grassmann_set(n: usize, multiplicities: &[usize]) -> Result<EmbeddingSpec> {
    if multiplicities.is_empty() || multiplicities.contains(&0) || multiplicities.iter().sum::<usize>() != n {
        return Err(Error::InvalidSpec(format!(
            "multiplicities {multiplicities:?} are not a partition of {n}"
        )));
    }
    let group = GroupFamily::su(n);
    let mean = multiplicities
        .iter()
        .enumerate()
        .map(|(j, &m)| (j * m) as f64)
        .sum::<f64>()
        / n as f64;
    let target = CartanSpec::new(
        group,
        multiplicities.to_vec(),
        (0..multiplicities.len()).map(|j| j as f64 - mean).collect(),
    )?;
    let mut factors = Vec::with_capacity(multiplicities.len());
    let mut offset = 0;
    for &ni in multiplicities {
        let (mut mults, mut eig) = (Vec::new(), Vec::new());
        push_block(&mut mults, &mut eig, offset, -(ni as f64));
        push_block(&mut mults, &mut eig, ni, (n - ni) as f64);
        push_block(&mut mults, &mut eig, n - offset - ni, -(ni as f64));
        factors.push(CartanSpec::degenerate(group, mults, eig)?);
        offset += ni;
    }
    EmbeddingSpec::from_decomposition(target, factors)
}

/// The power-of-two factors `Υ₁, …, Υ_{r+1}` for isotropic flags in SO(2n), SO(2n+1), Sp(n).
///
/// `Υ_ℓ = 2^{r−ℓ}·Diag(−1_{d_{ℓ−1}}, 1_{n_ℓ}, 0)` and `Υ_{r+1} = Diag(−1_m, 0)`; the
/// target has eigenvalue `ℓ` on block `ℓ` and zero on the remaining `n − m` entries.
pub fn so_upsilon_set(n: usize, multiplicities: &[usize], family: Family) -> Result<EmbeddingSpec> {
    if family == Family::SU {
        return Err(Error::InvalidSpec(
            "Υ factors are defined for SO and Sp only".into(),
        ));
    }
    let m: usize = multiplicities.iter().sum();
    if multiplicities.is_empty() || multiplicities.contains(&0) || m > n {
        return Err(Error::InvalidSpec(format!(
            "multiplicities {multiplicities:?} must be positive with sum at most {n}"
        )));
    }
    let group = GroupFamily::new(family, n)?;
    let r = multiplicities.len();
    let (mut mults, mut eig) = (Vec::new(), Vec::new());
    for (l, &nl) in multiplicities.iter().enumerate() {
        push_block(&mut mults, &mut eig, nl, (l + 1) as f64);
    }
    push_block(&mut mults, &mut eig, n - m, 0.0);
    let target = CartanSpec::new(group, mults, eig)?;

    let mut factors = Vec::with_capacity(r + 1);
    let mut d = 0;
    for (l, &nl) in multiplicities.iter().enumerate() {
        let s = (1u64 << (r - 1 - l)) as f64;
        let (mut mults, mut eig) = (Vec::new(), Vec::new());
        push_block(&mut mults, &mut eig, d, -s);
        push_block(&mut mults, &mut eig, nl, s);
        push_block(&mut mults, &mut eig, n - d - nl, 0.0);
        factors.push(CartanSpec::degenerate(group, mults, eig)?);
        d += nl;
    }
    let (mut mults, mut eig) = (Vec::new(), Vec::new());
    push_block(&mut mults, &mut eig, m, -1.0);
    push_block(&mut mults, &mut eig, n - m, 0.0);
    factors.push(CartanSpec::degenerate(group, mults, eig)?);
    EmbeddingSpec::from_decomposition(target, factors)
}

/// Four copies of `SO(6)/U(3)` with sign patterns `(1,1,1), (1,−1,−1), (−1,1,−1), (−1,−1,1)`.
pub fn so6_lagrangian_set() -> Result<EmbeddingSpec> {
    let group = GroupFamily::so_even(3);
    let patterns = [
        [1.0, 1.0, 1.0],
        [1.0, -1.0, -1.0],
        [-1.0, 1.0, -1.0],
        [-1.0, -1.0, 1.0],
    ];
    let factors = patterns
        .iter()
        .map(|p| CartanSpec::degenerate(group, vec![1, 1, 1], p.to_vec()))
        .collect::<Result<Vec<_>>>()?;
    let target = CartanSpec::new(group, vec![1, 1, 1], vec![1.0, 2.0, 3.0])?;
    EmbeddingSpec::from_decomposition(target, factors)
}

/// `SO(2n)/U(1)×U(n−1)` inside two isotropic `n`-plane Grassmannians and the quadric,
/// with the quadric weighted by `−2`.
pub fn two_step_so_spec(n: usize) -> Result<EmbeddingSpec> {
    if n < 2 {
        return Err(Error::InvalidSpec("two-step embedding needs n ≥ 2".into()));
    }
    let group = GroupFamily::so_even(n);
    let factors = vec![
        CartanSpec::degenerate(group, vec![n], vec![1.0])?,
        CartanSpec::degenerate(group, vec![1, n - 1], vec![1.0, -1.0])?,
        CartanSpec::degenerate(group, vec![1, n - 1], vec![-2.0, 0.0])?,
    ];
    let target = CartanSpec::new(group, vec![1, n - 1], vec![1.5, 0.5])?;
    EmbeddingSpec::from_decomposition(target, factors)
}

/// On-disk form of an [`EmbeddingSpec`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpecFile {
    pub group: Family,
    pub n: usize,
    pub multiplicities: Vec<usize>,
    pub eigenvalues: Vec<f64>,
    pub factors: Vec<FactorFile>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coefficients: Option<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FactorFile {
    pub multiplicities: Vec<usize>,
    pub eigenvalues: Vec<f64>,
    #[serde(default)]
    pub degenerate: bool,
}

impl From<EmbeddingSpec> for SpecFile {
    fn from(spec: EmbeddingSpec) -> Self {
        Self {
            group: spec.group.family,
            n: spec.group.n,
            multiplicities: spec.target.multiplicities,
            eigenvalues: spec.target.eigenvalues,
            factors: spec
                .factors
                .into_iter()
                .map(|f| FactorFile {
                    multiplicities: f.multiplicities,
                    eigenvalues: f.eigenvalues,
                    degenerate: f.degenerate,
                })
                .collect(),
            coefficients: Some(spec.coefficients),
        }
    }
}

impl TryFrom<SpecFile> for EmbeddingSpec {
    type Error = Error;

    /// Structural conversion only; call [`EmbeddingSpec::validate`] for the invariants.
    fn try_from(file: SpecFile) -> Result<Self> {
        let group = GroupFamily::new(file.group, file.n)?;
        let target = CartanSpec {
            group,
            multiplicities: file.multiplicities,
            eigenvalues: file.eigenvalues,
            degenerate: false,
        };
        let factors: Vec<CartanSpec> = file
            .factors
            .into_iter()
            .map(|f| CartanSpec {
                group,
                multiplicities: f.multiplicities,
                eigenvalues: f.eigenvalues,
                degenerate: f.degenerate,
            })
            .collect();
        let coefficients = match file.coefficients {
            Some(c) => c,
            None => solve_coefficients(&target, &factors)?,
        };
        Ok(Self {
            group,
            target,
            factors,
            coefficients,
        })
    }
}
